//! Sliced contraction: fix a few indices to each of their values, contract
//! the resulting smaller networks independently and sum the results.
//!
//! The planner searches for the elimination step at which to slice. Every
//! step up to the peak of the current order is tried: the prefix up to that
//! step is eliminated, the highest-degree remaining vertices are removed and
//! the orderer is rerun on what is left. The step giving the smallest overall
//! width wins, and the search repeats on the residual graph until enough
//! indices have been sliced.
//!
//! The executor contracts the first-round prefix once, shares the resulting
//! tensors across all slice tasks and reduces the per-slice results with a
//! fixed pairwise tree so the total does not depend on thread scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contraction::{assemble, check_order, eliminate, ContractionError, ContractionResult};
use crate::ordering::{width_of_order_excluding, EliminationOrder, Orderer};
use crate::tensor::Tensor;
use crate::tensornet::{apply_fixed, LineGraph, TensorNetwork};
use crate::Label;

#[derive(Error, Debug)]
pub enum SliceError {
    #[error("label {0} is not live in the network")]
    LabelAbsent(Label),
    #[error("asked for {requested} sliced indices but only {available} are sliceable")]
    TooManySlices { requested: usize, available: usize },
    #[error("round size r must be at least 1")]
    ZeroRoundSize,
    #[error("peak step of an empty order")]
    EmptyOrder,
    #[error("schedule does not match the network: {0}")]
    Mismatch(String),
    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
    #[error("invalid schedule JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Bit values for a set of sliced labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SliceAssignment(pub BTreeMap<Label, u8>);

impl SliceAssignment {
    /// The `index`-th of the `2^labels.len()` assignments; the first label is
    /// the most significant bit.
    pub fn nth(labels: &[Label], index: usize) -> Self {
        let n = labels.len();
        SliceAssignment(
            labels
                .iter()
                .enumerate()
                .map(|(k, &l)| (l, (index >> (n - 1 - k) & 1) as u8))
                .collect(),
        )
    }
}

/// Fixes the sliced labels in every tensor that carries them. The sliced
/// labels disappear from the network and from its line graph.
pub fn slice_network(
    net: &TensorNetwork,
    assignment: &SliceAssignment,
) -> Result<TensorNetwork, SliceError> {
    let live = net.live_labels();
    let open: BTreeSet<Label> = net.open().iter().copied().collect();
    if let Some(&l) = assignment
        .0
        .keys()
        .find(|l| !live.contains(l) || open.contains(l))
    {
        return Err(SliceError::LabelAbsent(l));
    }
    let tensors = net
        .tensors()
        .iter()
        .map(|t| t.fix_many(assignment.0.iter()))
        .collect();
    Ok(net.with_tensors(tensors, net.fixed().clone()))
}

/// Position of the first step attaining the order's width.
pub fn peak_step(order: &EliminationOrder) -> Result<usize, SliceError> {
    order
        .step_degrees
        .iter()
        .position(|&d| d == order.width)
        .ok_or(SliceError::EmptyOrder)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRound {
    /// Number of prefix eliminations (across all rounds so far) performed
    /// before this round's labels are sliced.
    pub step: usize,
    pub sliced: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceSchedule {
    pub rounds: Vec<SliceRound>,
    /// Labels eliminated once, before the first round is sliced.
    pub prefix_order: Vec<Label>,
    /// Order for every remaining non-sliced label, run once per slice. Its
    /// step degrees are measured with all sliced labels removed.
    pub final_order: EliminationOrder,
    pub n_total: usize,
    /// Width of the planned contraction, each round sliced at its own step.
    pub reported_width: usize,
}

#[derive(Serialize, Deserialize)]
struct ScheduleJson {
    rounds: Vec<SliceRound>,
    prefix: Vec<Label>,
    final_order: Vec<Label>,
    width: usize,
}

impl SliceSchedule {
    /// All sliced labels, round by round.
    pub fn sliced_labels(&self) -> Vec<Label> {
        self.rounds
            .iter()
            .flat_map(|r| r.sliced.iter().copied())
            .collect()
    }

    pub fn num_tasks(&self) -> usize {
        1 << self.n_total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ScheduleJson {
            rounds: self.rounds.clone(),
            prefix: self.prefix_order.clone(),
            final_order: self.final_order.order.clone(),
            width: self.reported_width,
        })
        .expect("schedule serialization is infallible")
    }

    /// Parses a schedule. The final order's step degrees are not stored; call
    /// [`SliceSchedule::replay`] against the graph to recompute them.
    pub fn from_json(text: &str) -> Result<Self, SliceError> {
        let raw: ScheduleJson = serde_json::from_str(text)?;
        let n_total = raw.rounds.iter().map(|r| r.sliced.len()).sum();
        Ok(SliceSchedule {
            rounds: raw.rounds,
            prefix_order: raw.prefix,
            final_order: EliminationOrder {
                order: raw.final_order,
                width: 0,
                step_degrees: Vec::new(),
            },
            n_total,
            reported_width: raw.width,
        })
    }

    /// Replays the plan on `g`: prefix first, each round's labels removed
    /// once the global step count reaches the round's step. Returns the
    /// plan width and the final order's degrees with every slice removed.
    pub fn replay(
        &self,
        g: &LineGraph,
        open: &BTreeSet<Label>,
    ) -> Result<(usize, EliminationOrder), SliceError> {
        let mismatch = |m: String| SliceError::Mismatch(m);
        if self.rounds.first().is_some_and(|r| r.step != self.prefix_order.len()) {
            return Err(mismatch("first round step differs from prefix length".into()));
        }
        if self.rounds.windows(2).any(|w| w[0].step > w[1].step) {
            return Err(mismatch("round steps decrease".into()));
        }
        let sequence: Vec<Label> = self
            .prefix_order
            .iter()
            .chain(&self.final_order.order)
            .copied()
            .collect();
        let mut all: BTreeSet<Label> = sequence.iter().copied().collect();
        if all.len() != sequence.len() {
            return Err(mismatch("a label is eliminated twice".into()));
        }
        for l in self.sliced_labels() {
            if !all.insert(l) {
                return Err(mismatch(format!("label {l} is both sliced and eliminated")));
            }
        }
        let expected: BTreeSet<Label> = g.vertices().filter(|v| !open.contains(v)).collect();
        if all != expected {
            return Err(mismatch("labels do not partition the live non-open vertices".into()));
        }
        if let Some(r) = self.rounds.last() {
            if r.step > sequence.len() {
                return Err(mismatch("round step beyond the elimination sequence".into()));
            }
        }

        let mut work = g.clone();
        let mut width = 0;
        let mut round = 0;
        for (pos, &v) in sequence.iter().enumerate() {
            while round < self.rounds.len() && self.rounds[round].step == pos {
                for &l in &self.rounds[round].sliced {
                    work.remove_vertex(l);
                }
                round += 1;
            }
            width = width.max(work.eliminate(v).expect("validated above"));
        }

        // execution graph: prefix in full, then every slice removed at once
        let mut exec = g.clone();
        for &v in &self.prefix_order {
            exec.eliminate(v);
        }
        for l in self.sliced_labels() {
            exec.remove_vertex(l);
        }
        let final_order = width_of_order_excluding(&exec, &self.final_order.order, open)
            .map_err(ContractionError::from)?;
        Ok((width, final_order))
    }

    /// Checks the schedule against the network's live non-open labels.
    pub fn validate(&self, net: &TensorNetwork) -> Result<(), SliceError> {
        let mut all: Vec<Label> = self.prefix_order.clone();
        all.extend(self.sliced_labels());
        all.extend(&self.final_order.order);
        check_order(&apply_fixed(net), &all)?;
        Ok(())
    }
}

/// Which elimination steps the planner may slice at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepPolicy {
    /// Every step from 0 through the peak of the current order.
    UpToPeak,
    /// Step 0 only: classic slicing of the unreduced graph.
    AtStart,
}

/// Width achieved by slicing at one candidate step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepCandidate {
    pub step: usize,
    pub width: usize,
}

struct RoundChoice {
    step: usize,
    width: usize,
    prefix_width: usize,
    sliced: Vec<Label>,
    graph: LineGraph,
    order: EliminationOrder,
}

/// The `k` highest-degree vertices not in `open`, smallest label first on
/// ties.
fn highest_degree(g: &LineGraph, k: usize, open: &BTreeSet<Label>) -> Vec<Label> {
    let mut ranked: Vec<(usize, Label)> = g
        .vertices()
        .filter(|v| !open.contains(v))
        .map(|v| (g.degree(v).unwrap(), v))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(k).map(|(_, v)| v).collect()
}

/// Tries every allowed step for one round of `k` slices. `floor` is the width
/// already committed by earlier rounds.
#[allow(clippy::too_many_arguments)]
fn scan_round(
    g: &LineGraph,
    order: &EliminationOrder,
    k: usize,
    orderer: &dyn Orderer,
    open: &BTreeSet<Label>,
    policy: StepPolicy,
    floor: usize,
    mut visit: impl FnMut(&StepCandidate),
) -> Result<RoundChoice, SliceError> {
    let last = match policy {
        StepPolicy::AtStart => 0,
        StepPolicy::UpToPeak if order.is_empty() => 0,
        StepPolicy::UpToPeak => peak_step(order)?,
    };
    let mut work = g.clone();
    let mut prefix_width = 0;
    let mut best: Option<RoundChoice> = None;
    for s in 0..=last {
        if s > 0 {
            prefix_width = prefix_width.max(order.step_degrees[s - 1]);
            work.eliminate(order.order[s - 1]);
        }
        let sliced = highest_degree(&work, k, open);
        if sliced.len() < k {
            break;
        }
        let mut trial = work.clone();
        for &l in &sliced {
            trial.remove_vertex(l);
        }
        let residual = orderer.order(&trial, open);
        let width = floor.max(prefix_width).max(residual.width);
        visit(&StepCandidate { step: s, width });
        if best.as_ref().is_none_or(|b| width < b.width) {
            best = Some(RoundChoice {
                step: s,
                width,
                prefix_width,
                sliced,
                graph: trial,
                order: residual,
            });
        }
    }
    best.ok_or(SliceError::TooManySlices {
        requested: k,
        available: 0,
    })
}

/// Step-dependent slicing search. Slices `n` labels in rounds of `r` (the
/// last round takes the remainder), never slicing or eliminating `open`.
pub fn find_slice_schedule(
    g: &LineGraph,
    n: usize,
    r: usize,
    orderer: &dyn Orderer,
    open: &BTreeSet<Label>,
) -> Result<SliceSchedule, SliceError> {
    find_slice_schedule_with(g, n, r, orderer, open, StepPolicy::UpToPeak)
}

pub fn find_slice_schedule_with(
    g: &LineGraph,
    n: usize,
    r: usize,
    orderer: &dyn Orderer,
    open: &BTreeSet<Label>,
    policy: StepPolicy,
) -> Result<SliceSchedule, SliceError> {
    let available = g.vertices().filter(|v| !open.contains(v)).count();
    if n > available {
        return Err(SliceError::TooManySlices {
            requested: n,
            available,
        });
    }
    if n > 0 && r == 0 {
        return Err(SliceError::ZeroRoundSize);
    }

    let mut graph = g.clone();
    let mut order = orderer.order(&graph, open);
    let mut eliminated: Vec<Label> = Vec::new();
    let mut rounds = Vec::new();
    let mut floor = 0;
    let mut left = n;
    while left > 0 {
        let k = left.min(r);
        let choice = scan_round(&graph, &order, k, orderer, open, policy, floor, |_| {})?;
        eliminated.extend_from_slice(&order.order[..choice.step]);
        floor = floor.max(choice.prefix_width);
        rounds.push(SliceRound {
            step: eliminated.len(),
            sliced: choice.sliced,
        });
        graph = choice.graph;
        order = choice.order;
        left -= k;
    }

    let first_step = rounds.first().map_or(0, |r: &SliceRound| r.step);
    let prefix_order = eliminated[..first_step].to_vec();
    let final_labels: Vec<Label> = eliminated[first_step..]
        .iter()
        .chain(&order.order)
        .copied()
        .collect();
    let mut schedule = SliceSchedule {
        n_total: n,
        rounds,
        prefix_order,
        final_order: EliminationOrder {
            order: final_labels,
            ..Default::default()
        },
        reported_width: floor.max(order.width),
    };
    let (plan_width, final_order) = schedule.replay(g, open)?;
    debug_assert_eq!(plan_width, schedule.reported_width);
    schedule.final_order = final_order;
    Ok(schedule)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WidthRecord {
    pub n: usize,
    pub step: usize,
    pub width: usize,
}

/// Width at every candidate step when slicing `n` labels in a single round,
/// for each `n` in `0..=n_max`. The `n = 0` row is the unsliced width.
pub fn width_vs_n_report(
    g: &LineGraph,
    n_max: usize,
    orderer: &dyn Orderer,
    open: &BTreeSet<Label>,
) -> Result<Vec<WidthRecord>, SliceError> {
    let order = orderer.order(g, open);
    let mut rows = vec![WidthRecord {
        n: 0,
        step: 0,
        width: order.width,
    }];
    for n in 1..=n_max {
        let available = g.vertices().filter(|v| !open.contains(v)).count();
        if n > available {
            return Err(SliceError::TooManySlices {
                requested: n,
                available,
            });
        }
        scan_round(g, &order, n, orderer, open, StepPolicy::UpToPeak, 0, |c| {
            rows.push(WidthRecord {
                n,
                step: c.step,
                width: c.width,
            })
        })?;
    }
    Ok(rows)
}

/// Smallest width per `n` in a report.
pub fn min_width_by_n(rows: &[WidthRecord]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for row in rows {
        let e = out.entry(row.n).or_insert(usize::MAX);
        *e = (*e).min(row.width);
    }
    out
}

pub fn width_report_csv(rows: &[WidthRecord]) -> String {
    let mut out = String::from("n,step,width\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.n, r.step, r.width).unwrap();
    }
    out
}

fn pairwise_sum(parts: &[Vec<Complex64>]) -> Vec<Complex64> {
    match parts {
        [] => Vec::new(),
        [one] => one.clone(),
        _ => {
            let (lo, hi) = parts.split_at(parts.len() / 2);
            let mut acc = pairwise_sum(lo);
            for (a, b) in acc.iter_mut().zip(pairwise_sum(hi)) {
                *a += b;
            }
            acc
        }
    }
}

/// Contracts `net` according to `schedule` with up to `parallelism` worker
/// threads. The result equals the unsliced contraction.
pub fn execute_sliced(
    net: &TensorNetwork,
    schedule: &SliceSchedule,
    parallelism: usize,
) -> Result<ContractionResult, SliceError> {
    schedule.validate(net)?;
    let net = apply_fixed(net);
    let tensors = net.tensors().iter().cloned().map(Arc::new).collect();
    let prefix = eliminate(tensors, &schedule.prefix_order);
    let shared = prefix.remaining;
    let sliced = schedule.sliced_labels();
    let final_order = &schedule.final_order.order;
    let open = net.open();

    let run = |index: usize| -> (Vec<Complex64>, usize) {
        let assignment = SliceAssignment::nth(&sliced, index);
        let tensors: Vec<Arc<Tensor>> = shared
            .iter()
            .map(|t| {
                if t.labels().iter().any(|l| assignment.0.contains_key(l)) {
                    Arc::new(t.fix_many(assignment.0.iter()))
                } else {
                    Arc::clone(t)
                }
            })
            .collect();
        let result = assemble(eliminate(tensors, final_order), open);
        (result.values, result.peak_rank)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()?;
    let parts: Vec<(Vec<Complex64>, usize)> =
        pool.install(|| (0..schedule.num_tasks()).into_par_iter().map(run).collect());

    let peak_rank = parts
        .iter()
        .map(|p| p.1)
        .max()
        .unwrap_or(0)
        .max(prefix.peak_rank);
    let values: Vec<Vec<Complex64>> = parts.into_iter().map(|p| p.0).collect();
    let values = pairwise_sum(&values)
        .into_iter()
        .map(|v| v * prefix.scalar)
        .collect();
    Ok(ContractionResult {
        values,
        open_labels: open.to_vec(),
        peak_rank,
    })
}
