//! Vertex elimination on line graphs and elimination-order heuristics.
//!
//! The cost of eliminating a vertex is its neighbor count at the time it is
//! eliminated; the contraction width of an order is the largest such count.
//! Excluded vertices (open or sliced indices) stay in the graph and collect
//! fill-in edges but are never eliminated.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensornet::LineGraph;
use crate::Label;

/// Largest graph accepted by [`optimal_order_bruteforce`].
pub const BRUTEFORCE_MAX_VERTICES: usize = 14;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OrderingError {
    #[error("vertex {0} is not in the graph")]
    MissingVertex(Label),
    #[error("vertex {0} appears more than once in the order")]
    Repeated(Label),
    #[error("order does not cover vertex {0}")]
    Uncovered(Label),
    #[error("excluded vertex {0} appears in the order")]
    ExcludedInOrder(Label),
    #[error("graph has {0} vertices; exact search is limited to {BRUTEFORCE_MAX_VERTICES}")]
    TooLarge(usize),
    #[error("invalid orderer parameters: {0}")]
    BadParameters(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationOrder {
    pub order: Vec<Label>,
    pub width: usize,
    pub step_degrees: Vec<usize>,
}

impl EliminationOrder {
    fn from_steps(order: Vec<Label>, step_degrees: Vec<usize>) -> Self {
        let width = step_degrees.iter().copied().max().unwrap_or(0);
        EliminationOrder {
            order,
            width,
            step_degrees,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("order serialization is infallible")
    }
}

/// Returns `g` with `v` eliminated.
pub fn eliminate_vertex(g: &LineGraph, v: Label) -> Result<LineGraph, OrderingError> {
    let mut out = g.clone();
    out.eliminate(v).ok_or(OrderingError::MissingVertex(v))?;
    Ok(out)
}

/// Replays `order`, which must be a permutation of all of `g`'s vertices.
pub fn width_of_order(g: &LineGraph, order: &[Label]) -> Result<EliminationOrder, OrderingError> {
    width_of_order_excluding(g, order, &BTreeSet::new())
}

/// Replays `order`, which must be a permutation of `g`'s vertices minus
/// `exclude`.
pub fn width_of_order_excluding(
    g: &LineGraph,
    order: &[Label],
    exclude: &BTreeSet<Label>,
) -> Result<EliminationOrder, OrderingError> {
    let mut seen = BTreeSet::new();
    for &v in order {
        if !g.contains(v) {
            return Err(OrderingError::MissingVertex(v));
        }
        if exclude.contains(&v) {
            return Err(OrderingError::ExcludedInOrder(v));
        }
        if !seen.insert(v) {
            return Err(OrderingError::Repeated(v));
        }
    }
    if let Some(v) = g
        .vertices()
        .find(|v| !seen.contains(v) && !exclude.contains(v))
    {
        return Err(OrderingError::Uncovered(v));
    }
    let mut work = g.clone();
    let steps = order
        .iter()
        .map(|&v| work.eliminate(v).expect("checked above"))
        .collect();
    Ok(EliminationOrder::from_steps(order.to_vec(), steps))
}

/// Something that produces an elimination order for a graph.
pub trait Orderer: Sync {
    fn name(&self) -> String;

    /// Orders every vertex of `g` not in `exclude`.
    fn order(&self, g: &LineGraph, exclude: &BTreeSet<Label>) -> EliminationOrder;
}

/// Minimum-degree elimination with smallest-label tie-break.
#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy;

impl Orderer for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn order(&self, g: &LineGraph, exclude: &BTreeSet<Label>) -> EliminationOrder {
        greedy_order(g, exclude)
    }
}

/// Randomized greedy: each step samples a vertex with probability
/// proportional to `exp(-degree / tau)`; the best of `reps` passes wins.
#[derive(Clone, Copy, Debug)]
pub struct RGreedy {
    pub tau: f64,
    pub reps: usize,
    pub seed: u64,
}

impl RGreedy {
    pub const DEFAULT_TAU: f64 = 0.5;
    pub const DEFAULT_REPS: usize = 10;

    pub fn new(tau: f64, reps: usize, seed: u64) -> Result<Self, OrderingError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(OrderingError::BadParameters(format!("tau must be > 0, got {tau}")));
        }
        if reps == 0 {
            return Err(OrderingError::BadParameters("reps must be >= 1".into()));
        }
        Ok(RGreedy { tau, reps, seed })
    }

    /// Every pass, in pass order.
    pub fn passes(&self, g: &LineGraph, exclude: &BTreeSet<Label>) -> Vec<EliminationOrder> {
        (0..self.reps)
            .into_par_iter()
            .map(|pass| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(pass as u64);
                rgreedy_pass(g, exclude, self.tau, &mut rng)
            })
            .collect()
    }
}

impl Default for RGreedy {
    fn default() -> Self {
        RGreedy {
            tau: Self::DEFAULT_TAU,
            reps: Self::DEFAULT_REPS,
            seed: 0,
        }
    }
}

impl Orderer for RGreedy {
    fn name(&self) -> String {
        format!("rgreedy_{}_{}", self.tau, self.reps)
    }

    fn order(&self, g: &LineGraph, exclude: &BTreeSet<Label>) -> EliminationOrder {
        rgreedy_order(g, self.tau, self.reps, self.seed, exclude)
    }
}

/// Min-degree queue over the eliminable vertices of a working graph.
struct DegreeQueue {
    graph: LineGraph,
    exclude: BTreeSet<Label>,
    queue: BTreeSet<(usize, Label)>,
}

impl DegreeQueue {
    fn new(g: &LineGraph, exclude: &BTreeSet<Label>) -> Self {
        let queue = g
            .vertices()
            .filter(|v| !exclude.contains(v))
            .map(|v| (g.degree(v).unwrap(), v))
            .collect();
        DegreeQueue {
            graph: g.clone(),
            exclude: exclude.clone(),
            queue,
        }
    }

    fn eliminate(&mut self, v: Label) -> usize {
        let nbrs: Vec<Label> = self.graph.neighbors(v).unwrap().iter().copied().collect();
        for &u in &nbrs {
            if !self.exclude.contains(&u) {
                self.queue.remove(&(self.graph.degree(u).unwrap(), u));
            }
        }
        let deg = self.graph.degree(v).unwrap();
        self.queue.remove(&(deg, v));
        self.graph.eliminate(v);
        for &u in &nbrs {
            if !self.exclude.contains(&u) {
                self.queue.insert((self.graph.degree(u).unwrap(), u));
            }
        }
        deg
    }
}

pub fn greedy_order(g: &LineGraph, exclude: &BTreeSet<Label>) -> EliminationOrder {
    let mut q = DegreeQueue::new(g, exclude);
    let mut order = Vec::with_capacity(q.queue.len());
    let mut steps = Vec::with_capacity(q.queue.len());
    while let Some(&(_, v)) = q.queue.first() {
        steps.push(q.eliminate(v));
        order.push(v);
    }
    EliminationOrder::from_steps(order, steps)
}

/// Unnormalized Boltzmann weights `exp(-(d - d_min) / tau)` for the given
/// degrees. Shifting by the minimum degree leaves the distribution unchanged
/// and avoids underflow at small `tau`.
pub fn boltzmann_weights(degrees: &[usize], tau: f64) -> Vec<f64> {
    let min = degrees.iter().copied().min().unwrap_or(0);
    degrees
        .iter()
        .map(|&d| (-((d - min) as f64) / tau).exp())
        .collect()
}

fn rgreedy_pass(
    g: &LineGraph,
    exclude: &BTreeSet<Label>,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> EliminationOrder {
    let mut q = DegreeQueue::new(g, exclude);
    let mut order = Vec::with_capacity(q.queue.len());
    let mut steps = Vec::with_capacity(q.queue.len());
    // sample a degree class, then a vertex uniformly inside it
    let mut classes: Vec<(usize, usize)> = Vec::new();
    while !q.queue.is_empty() {
        classes.clear();
        for &(d, _) in &q.queue {
            match classes.last_mut() {
                Some((cd, count)) if *cd == d => *count += 1,
                _ => classes.push((d, 1)),
            }
        }
        let degrees: Vec<usize> = classes.iter().map(|c| c.0).collect();
        let weights = boltzmann_weights(&degrees, tau);
        let total: f64 = weights
            .iter()
            .zip(&classes)
            .map(|(w, c)| w * c.1 as f64)
            .sum();
        let mut x = rng.gen::<f64>() * total;
        let mut pick = classes.len() - 1;
        for (k, (w, c)) in weights.iter().zip(&classes).enumerate() {
            let mass = w * c.1 as f64;
            if x < mass {
                pick = k;
                break;
            }
            x -= mass;
        }
        let (d, count) = classes[pick];
        let within = rng.gen_range(0..count);
        let &(_, v) = q
            .queue
            .range((d, 0)..(d + 1, 0))
            .nth(within)
            .expect("class has `count` members");
        steps.push(q.eliminate(v));
        order.push(v);
    }
    EliminationOrder::from_steps(order, steps)
}

/// Best of `reps` randomized-greedy passes (first pass wins ties).
pub fn rgreedy_order(
    g: &LineGraph,
    tau: f64,
    reps: usize,
    seed: u64,
    exclude: &BTreeSet<Label>,
) -> EliminationOrder {
    let runner = RGreedy {
        tau,
        reps: reps.max(1),
        seed,
    };
    let passes = runner.passes(g, exclude);
    let best = passes
        .iter()
        .enumerate()
        .min_by_key(|(k, o)| (o.width, *k))
        .map(|(k, _)| k)
        .expect("at least one pass");
    passes.into_iter().nth(best).unwrap()
}

/// Width-minimal elimination order by dynamic programming over vertex
/// subsets.
///
/// For a set `S` eliminated first, the degree of `v` when eliminated next is
/// the number of vertices outside `S ∪ {v}` reachable from `v` through `S`.
pub fn optimal_order_bruteforce(g: &LineGraph) -> Result<EliminationOrder, OrderingError> {
    let verts: Vec<Label> = g.vertices().collect();
    let n = verts.len();
    if n > BRUTEFORCE_MAX_VERTICES {
        return Err(OrderingError::TooLarge(n));
    }
    let adj: Vec<u32> = verts
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .unwrap()
                .iter()
                .map(|u| 1u32 << verts.binary_search(u).unwrap())
                .fold(0, |a, b| a | b)
        })
        .collect();

    let q_degree = |set: u32, v: usize| -> usize {
        let mut frontier = 1u32 << v;
        let mut visited = frontier;
        let mut outside = 0u32;
        while frontier != 0 {
            let k = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = adj[k] & !visited;
            visited |= nb;
            outside |= nb & !set;
            frontier |= nb & set;
        }
        (outside & !(1u32 << v)).count_ones() as usize
    };

    let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let mut best = vec![usize::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    best[0] = 0;
    for set in 1..=full {
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = set & !(1u32 << v);
            let w = best[prev as usize].max(q_degree(prev, v));
            if w < best[set as usize] {
                best[set as usize] = w;
                choice[set as usize] = v as u8;
            }
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while set != 0 {
        let v = choice[set as usize] as usize;
        order.push(verts[v]);
        set &= !(1u32 << v);
    }
    order.reverse();
    width_of_order(g, &order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> LineGraph {
        let edges: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        LineGraph::from_edges(&edges)
    }

    fn complete(n: usize) -> LineGraph {
        let mut g = LineGraph::new();
        g.add_clique(&(0..n).collect::<Vec<_>>());
        g
    }

    fn cycle(n: usize) -> LineGraph {
        let edges: Vec<_> = (0..n).map(|k| (k, (k + 1) % n)).collect();
        LineGraph::from_edges(&edges)
    }

    fn star() -> LineGraph {
        LineGraph::from_edges(&[(0, 1), (0, 2), (0, 3)])
    }

    #[test]
    fn eliminate_examples() {
        let tri = complete(3);
        let g = eliminate_vertex(&tri, 0).unwrap();
        assert_eq!(g, LineGraph::from_edges(&[(1, 2)]));

        let g = eliminate_vertex(&star(), 0).unwrap();
        assert_eq!(g, LineGraph::from_edges(&[(1, 2), (1, 3), (2, 3)]));

        let g = eliminate_vertex(&path(3), 1).unwrap();
        assert_eq!(g, LineGraph::from_edges(&[(0, 2)]));

        assert_eq!(
            eliminate_vertex(&path(3), 7),
            Err(OrderingError::MissingVertex(7))
        );
    }

    #[test]
    fn width_of_order_examples() {
        let o = width_of_order(&star(), &[1, 2, 3, 0]).unwrap();
        assert_eq!(o.step_degrees, vec![1, 1, 1, 0]);
        assert_eq!(o.width, 1);

        let o = width_of_order(&star(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(o.step_degrees, vec![3, 2, 1, 0]);
        assert_eq!(o.width, 3);

        let o = width_of_order(&LineGraph::new(), &[]).unwrap();
        assert_eq!(o.width, 0);
        assert!(o.is_empty());
    }

    #[test]
    fn width_of_order_rejects_non_permutations() {
        let g = path(3);
        assert_eq!(
            width_of_order(&g, &[0, 1]),
            Err(OrderingError::Uncovered(2))
        );
        assert_eq!(
            width_of_order(&g, &[0, 1, 1]),
            Err(OrderingError::Repeated(1))
        );
        assert_eq!(
            width_of_order(&g, &[0, 1, 2, 5]),
            Err(OrderingError::MissingVertex(5))
        );
        let ex = BTreeSet::from([2]);
        assert_eq!(
            width_of_order_excluding(&g, &[0, 2, 1], &ex),
            Err(OrderingError::ExcludedInOrder(2))
        );
        assert!(width_of_order_excluding(&g, &[0, 1], &ex).is_ok());
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_order(&path(4), &BTreeSet::new()).width, 1);
        let k5 = greedy_order(&complete(5), &BTreeSet::new());
        assert_eq!(k5.width, 4);
        assert_eq!(k5.step_degrees[0], 4);
        // ties broken by smallest label
        assert_eq!(greedy_order(&path(4), &BTreeSet::new()).order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn greedy_respects_exclusions() {
        let ex = BTreeSet::from([0]);
        let o = greedy_order(&star(), &ex);
        assert_eq!(o.order, vec![1, 2, 3]);
        assert_eq!(o.step_degrees, vec![1, 1, 1]);

        // excluded vertices accrue fill-in: eliminating 1 on path 0-1-2 with
        // 0 and 2 excluded joins them
        let ex = BTreeSet::from([0, 2]);
        let o = greedy_order(&path(3), &ex);
        assert_eq!(o.order, vec![1]);
        assert_eq!(o.width, 2);
    }

    #[test]
    fn boltzmann_example() {
        let w = boltzmann_weights(&[1, 2, 1], 1.0);
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        assert!((p[0] - 0.4223).abs() < 1e-4);
        assert!((p[1] - 0.1554).abs() < 1e-4);
        assert!((p[2] - 0.4223).abs() < 1e-4);
        // shift-invariance: same ratios as the raw exp(-d/tau)
        assert!((w[1] / w[0] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn boltzmann_small_tau_concentrates_on_min_degree() {
        let w = boltzmann_weights(&[3, 2, 5, 2], 1e-3);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[3], 1.0);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[2], 0.0);
    }

    #[test]
    fn rgreedy_single_pass_is_consistent() {
        let g = cycle(9);
        for seed in 0..5 {
            let o = rgreedy_order(&g, 0.5, 1, seed, &BTreeSet::new());
            let replay = width_of_order(&g, &o.order).unwrap();
            assert_eq!(replay, o);
        }
    }

    #[test]
    fn rgreedy_picks_best_pass_deterministically() {
        let g = {
            let mut g = cycle(12);
            g.add_edge(0, 6);
            g.add_edge(3, 9);
            g
        };
        let r = RGreedy::new(2.0, 8, 11).unwrap();
        let passes = r.passes(&g, &BTreeSet::new());
        let best = r.order(&g, &BTreeSet::new());
        assert!(passes.iter().all(|p| best.width <= p.width));
        assert_eq!(best, r.order(&g, &BTreeSet::new()));
    }

    #[test]
    fn rgreedy_rejects_bad_params() {
        assert!(RGreedy::new(0.0, 3, 0).is_err());
        assert!(RGreedy::new(1.0, 0, 0).is_err());
    }

    #[test]
    fn bruteforce_known_widths() {
        assert_eq!(optimal_order_bruteforce(&cycle(5)).unwrap().width, 2);
        assert_eq!(optimal_order_bruteforce(&path(6)).unwrap().width, 1);
        assert_eq!(optimal_order_bruteforce(&star()).unwrap().width, 1);
        assert_eq!(optimal_order_bruteforce(&complete(4)).unwrap().width, 3);
        assert_eq!(optimal_order_bruteforce(&LineGraph::new()).unwrap().width, 0);
        assert!(matches!(
            optimal_order_bruteforce(&path(15)),
            Err(OrderingError::TooLarge(15))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph(max_v: usize) -> impl Strategy<Value = LineGraph> {
            (1..=max_v).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..n * 2).prop_map(move |edges| {
                    let mut g = LineGraph::new();
                    for v in 0..n {
                        g.add_vertex(v);
                    }
                    for (a, b) in edges {
                        g.add_edge(a, b);
                    }
                    g
                })
            })
        }

        /// Exhaustive minimum over all permutations, for tiny graphs.
        fn min_width_by_permutations(g: &LineGraph) -> usize {
            fn rec(g: &LineGraph, cur: usize, best: &mut usize) {
                if g.is_empty() {
                    *best = (*best).min(cur);
                    return;
                }
                for v in g.vertices().collect::<Vec<_>>() {
                    let d = g.degree(v).unwrap();
                    if cur.max(d) >= *best {
                        continue;
                    }
                    let mut h = g.clone();
                    h.eliminate(v);
                    rec(&h, cur.max(d), best);
                }
            }
            let mut best = usize::MAX;
            rec(g, 0, &mut best);
            best
        }

        proptest! {
            #[test]
            fn greedy_self_replay(g in arb_graph(20)) {
                let o = greedy_order(&g, &BTreeSet::new());
                prop_assert_eq!(width_of_order(&g, &o.order).unwrap(), o);
            }

            #[test]
            fn bruteforce_matches_permutation_search(g in arb_graph(7)) {
                let dp = optimal_order_bruteforce(&g).unwrap();
                prop_assert_eq!(dp.width, min_width_by_permutations(&g));
                prop_assert_eq!(width_of_order(&g, &dp.order).unwrap().width, dp.width);
            }

            #[test]
            fn heuristics_never_beat_optimum(g in arb_graph(12), seed in any::<u64>()) {
                let opt = optimal_order_bruteforce(&g).unwrap().width;
                prop_assert!(greedy_order(&g, &BTreeSet::new()).width >= opt);
                prop_assert!(rgreedy_order(&g, 0.5, 3, seed, &BTreeSet::new()).width >= opt);
            }

            #[test]
            fn full_elimination_empties_graph(g in arb_graph(15)) {
                let mut work = g.clone();
                for v in g.vertices() {
                    work.eliminate(v).unwrap();
                }
                prop_assert!(work.is_empty());
            }

            #[test]
            fn clique_bounds_greedy(k in 2usize..7, extra in arb_graph(10)) {
                let mut g = extra.clone();
                let base = 100;
                let clique: Vec<Label> = (base..base + k).collect();
                g.add_clique(&clique);
                g.add_edge(0, base);
                prop_assert!(greedy_order(&g, &BTreeSet::new()).width >= k - 1);
            }
        }
    }
}
