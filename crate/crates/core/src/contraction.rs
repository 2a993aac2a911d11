//! Bucket elimination over a tensor network.
//!
//! Tensors are placed in the bucket of their earliest label in the
//! elimination order. Processing a bucket multiplies its tensors and sums out
//! the bucket label; the result moves to the bucket of its next label. Labels
//! outside the order (open indices) are carried through to the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, ProblemGraph};
use crate::ordering::{width_of_order_excluding, EliminationOrder, Orderer, OrderingError};
use crate::tensor::{strides_in, Tensor};
use crate::tensornet::{apply_fixed, energy_network, line_graph, NetworkError, TensorNetwork};
use crate::Label;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ContractionError {
    #[error("elimination order does not cover live label {0}")]
    MissingLabel(Label),
    #[error("elimination order contains open label {0}")]
    OpenLabelInOrder(Label),
    #[error("elimination order contains label {0}, which is not live in the network")]
    UnknownLabel(Label),
    #[error("label {0} appears twice in the elimination order")]
    RepeatedLabel(Label),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionResult {
    /// Row-major over `open_labels`; a single entry when nothing is open.
    pub values: Vec<Complex64>,
    pub open_labels: Vec<Label>,
    /// Largest rank of any tensor produced by a bucket contraction.
    pub peak_rank: usize,
}

impl ContractionResult {
    pub fn scalar(&self) -> Option<Complex64> {
        self.open_labels.is_empty().then(|| self.values[0])
    }
}

/// Multiplies `tensors` elementwise (aligned by label) and sums over `index`.
/// The result carries the union of the input labels minus `index`, ascending.
pub fn contract_bucket<T: AsRef<Tensor>>(tensors: &[T], index: Label) -> Tensor {
    let mut out_labels: Vec<Label> = tensors
        .iter()
        .flat_map(|t| t.as_ref().labels().iter().copied())
        .filter(|&l| l != index)
        .collect();
    out_labels.sort_unstable();
    out_labels.dedup();

    // Iterate over (out_labels..., index) with the summed index as the least
    // significant position, so each output entry is two consecutive terms.
    let mut iter_labels = out_labels.clone();
    iter_labels.push(index);
    let positions = iter_labels.len();

    // delta[k] is the offset change when position k (counted from the least
    // significant end) flips to 1 and all lower positions reset to 0.
    let deltas: Vec<Vec<isize>> = tensors
        .iter()
        .map(|t| {
            let strides = strides_in(t.as_ref().labels(), &iter_labels);
            let lsb_first: Vec<isize> = strides.iter().rev().map(|&s| s as isize).collect();
            let mut lower = 0isize;
            lsb_first
                .iter()
                .map(|&s| {
                    let d = s - lower;
                    lower += s;
                    d
                })
                .collect()
        })
        .collect();
    let datas: Vec<&[Complex64]> = tensors.iter().map(|t| t.as_ref().data()).collect();

    let total = 1usize << positions;
    let mut offsets = vec![0isize; tensors.len()];
    let mut out = vec![Complex64::new(0.0, 0.0); total / 2];
    let mut x = 0usize;
    loop {
        let mut term = Complex64::new(1.0, 0.0);
        for (data, &off) in datas.iter().zip(&offsets) {
            term *= data[off as usize];
        }
        out[x >> 1] += term;
        x += 1;
        if x == total {
            break;
        }
        let k = x.trailing_zeros() as usize;
        for (off, d) in offsets.iter_mut().zip(&deltas) {
            *off += d[k];
        }
    }
    Tensor::new(out_labels, out)
}

/// Outcome of eliminating a set of labels from a collection of tensors.
#[derive(Clone, Debug)]
pub struct Partial {
    /// Product of every rank-0 tensor met along the way.
    pub scalar: Complex64,
    /// Tensors that still carry labels outside the eliminated set.
    pub remaining: Vec<Arc<Tensor>>,
    pub peak_rank: usize,
}

/// Bucket elimination of `order` from `tensors`. Labels not in `order` are
/// kept; tensors without any ordered label pass through untouched.
pub fn eliminate(tensors: Vec<Arc<Tensor>>, order: &[Label]) -> Partial {
    let position: BTreeMap<Label, usize> = order.iter().enumerate().map(|(k, &l)| (l, k)).collect();
    let earliest = |t: &Tensor| -> Option<usize> {
        t.labels().iter().filter_map(|l| position.get(l).copied()).min()
    };
    let mut scalar = Complex64::new(1.0, 0.0);
    let mut remaining = Vec::new();
    let mut buckets: Vec<Vec<Arc<Tensor>>> = vec![Vec::new(); order.len()];
    let mut route = |t: Arc<Tensor>, buckets: &mut Vec<Vec<Arc<Tensor>>>, scalar: &mut Complex64| {
        if let Some(s) = t.as_scalar() {
            *scalar *= s;
        } else if let Some(k) = earliest(&t) {
            buckets[k].push(t);
        } else {
            remaining.push(t);
        }
    };
    for t in tensors {
        route(t, &mut buckets, &mut scalar);
    }
    let mut peak_rank = 0;
    for k in 0..order.len() {
        let bucket = std::mem::take(&mut buckets[k]);
        if bucket.is_empty() {
            // a label present in no tensor sums to a factor of two
            scalar *= 2.0;
            continue;
        }
        let t = contract_bucket(&bucket, order[k]);
        peak_rank = peak_rank.max(t.rank());
        route(Arc::new(t), &mut buckets, &mut scalar);
    }
    Partial {
        scalar,
        remaining,
        peak_rank,
    }
}

/// Multiplies the remaining tensors together and lays the result out over
/// `open` in the given order.
pub(crate) fn assemble(partial: Partial, open: &[Label]) -> ContractionResult {
    let mut acc = Tensor::scalar(partial.scalar);
    for t in &partial.remaining {
        acc = acc.product(t);
    }
    debug_assert_eq!(
        acc.labels().iter().copied().collect::<BTreeSet<_>>(),
        open.iter().copied().collect::<BTreeSet<_>>()
    );
    ContractionResult {
        values: acc.data_in_order(open),
        open_labels: open.to_vec(),
        peak_rank: partial.peak_rank,
    }
}

pub(crate) fn check_order(net: &TensorNetwork, order: &[Label]) -> Result<(), ContractionError> {
    let live = net.live_labels();
    let open: BTreeSet<Label> = net.open().iter().copied().collect();
    let mut seen = BTreeSet::new();
    for &l in order {
        if open.contains(&l) {
            return Err(ContractionError::OpenLabelInOrder(l));
        }
        if !live.contains(&l) {
            return Err(ContractionError::UnknownLabel(l));
        }
        if !seen.insert(l) {
            return Err(ContractionError::RepeatedLabel(l));
        }
    }
    if let Some(&l) = live.iter().find(|l| !open.contains(l) && !seen.contains(l)) {
        return Err(ContractionError::MissingLabel(l));
    }
    Ok(())
}

/// Contracts `net` along `order`, which must cover every live non-open label.
/// Fixed labels are applied first.
pub fn contract(
    net: &TensorNetwork,
    order: &EliminationOrder,
) -> Result<ContractionResult, ContractionError> {
    let net = apply_fixed(net);
    check_order(&net, &order.order)?;
    let tensors = net.tensors().iter().cloned().map(Arc::new).collect();
    let partial = eliminate(tensors, &order.order);
    Ok(assemble(partial, net.open()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostEstimate {
    /// log2 of the bytes needed by the largest intermediate (16-byte entries).
    pub log2_memory: f64,
    /// log2 of `Σ 2^(degree + 1)` over elimination steps.
    pub log2_flops: f64,
}

impl CostEstimate {
    pub fn memory_bytes(&self) -> f64 {
        self.log2_memory.exp2()
    }
}

pub fn cost_estimate(order: &EliminationOrder) -> CostEstimate {
    let flops: f64 = order
        .step_degrees
        .iter()
        .map(|&d| ((d + 1) as f64).exp2())
        .sum();
    CostEstimate {
        log2_memory: order.width as f64 + 4.0,
        // an empty order still reads one scalar
        log2_flops: flops.max(1.0).log2(),
    }
}

/// Memory/flop estimate for a bare width (no per-step profile).
pub fn cost_estimate_for_width(width: usize) -> CostEstimate {
    cost_estimate(&EliminationOrder {
        order: vec![0],
        width,
        step_degrees: vec![width],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepCost {
    pub step: usize,
    pub label: Label,
    pub neighbors: usize,
    pub log2_cost: f64,
}

/// Per-step neighbor counts and `log2(2^(neighbors + 1))` costs, replayed on
/// the network's line graph.
pub fn cost_profile(
    net: &TensorNetwork,
    order: &EliminationOrder,
) -> Result<Vec<StepCost>, ContractionError> {
    let g = line_graph(net);
    let open: BTreeSet<Label> = net.open().iter().copied().collect();
    let replay = width_of_order_excluding(&g, &order.order, &open)?;
    Ok(replay
        .order
        .iter()
        .zip(&replay.step_degrees)
        .enumerate()
        .map(|(step, (&label, &neighbors))| StepCost {
            step,
            label,
            neighbors,
            log2_cost: (neighbors + 1) as f64,
        })
        .collect())
}

pub fn cost_profile_csv(profile: &[StepCost]) -> String {
    let mut out = String::from("step,neighbors,log2_cost\n");
    for row in profile {
        writeln!(out, "{},{},{}", row.step, row.neighbors, row.log2_cost).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeEnergy {
    pub edge: (usize, usize),
    /// `<Z_a Z_b>` in the circuit's output state.
    pub zz: f64,
    /// Cut contribution `(1 - zz) / 2`.
    pub energy: f64,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub edges: Vec<EdgeEnergy>,
    pub total: f64,
}

/// MaxCut expectation of `circuit`'s output state on `graph`, one network per
/// edge, each ordered by `orderer`.
pub fn maxcut_energy(
    circuit: &Circuit,
    graph: &ProblemGraph,
    orderer: &dyn Orderer,
) -> Result<EnergyReport, NetworkError> {
    let mut edges = Vec::with_capacity(graph.edges().len());
    for &edge in graph.edges() {
        let net = apply_fixed(&energy_network(circuit, graph, edge)?);
        let order = orderer.order(&line_graph(&net), &BTreeSet::new());
        let zz = contract(&net, &order)
            .expect("orderer covers every live label")
            .scalar()
            .expect("closed network")
            .re;
        edges.push(EdgeEnergy {
            edge,
            zz,
            energy: (1.0 - zz) / 2.0,
            width: order.width,
        });
    }
    let total = edges.iter().map(|e| e.energy).sum();
    Ok(EnergyReport { edges, total })
}
