//! Circuits as tensor expressions, and the line-graph view used for ordering.
//!
//! Wire indices are labelled from the end of the circuit backwards: output
//! wire of qubit `q` is label `q`, and every non-diagonal gate incidence opens
//! a fresh label for the wire segment before it. Input wires therefore carry
//! the largest labels. Diagonal axes reuse the current wire label, so a
//! diagonal gate never creates a new index.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{gate_tensor, AxisRole, Circuit, Gate, ProblemGraph};
use crate::tensor::Tensor;
use crate::Label;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("bitstring has length {got}, expected {expected}")]
    BitLength { expected: usize, got: usize },
    #[error("open qubit {0} is out of range or repeated")]
    BadOpenQubit(usize),
    #[error("edge ({0}, {1}) is not in the problem graph")]
    EdgeNotInGraph(usize, usize),
    #[error("circuit has {circuit} qubits but graph has {graph} nodes")]
    SizeMismatch { circuit: usize, graph: usize },
    #[error("invalid bit character {0:?}")]
    BadBit(char),
}

/// Parses a string such as `"0110"` into bits.
pub fn parse_bits(text: &str) -> Result<Vec<u8>, NetworkError> {
    text.trim()
        .chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(NetworkError::BadBit(other)),
        })
        .collect()
}

pub fn format_bits(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

/// Boundary condition on the output wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutSpec {
    /// Every output wire fixed to the given bit.
    Fixed(Vec<u8>),
    /// Output wires of `qubits` left open (in this order); the rest fixed to
    /// the corresponding entry of `bits`.
    Open { qubits: Vec<usize>, bits: Vec<u8> },
}

impl OutSpec {
    pub fn zeros(n: usize) -> Self {
        OutSpec::Fixed(vec![0; n])
    }

    pub fn open(qubits: Vec<usize>, n: usize) -> Self {
        OutSpec::Open {
            qubits,
            bits: vec![0; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorNetwork {
    tensors: Vec<Tensor>,
    num_indices: usize,
    fixed: BTreeMap<Label, u8>,
    open: Vec<Label>,
}

impl TensorNetwork {
    /// Assembles a network. Panics if `fixed` and `open` overlap or a label is
    /// out of range.
    pub fn new(
        tensors: Vec<Tensor>,
        num_indices: usize,
        fixed: BTreeMap<Label, u8>,
        open: Vec<Label>,
    ) -> Self {
        for t in &tensors {
            assert!(
                t.labels().iter().all(|&l| l < num_indices),
                "label out of range"
            );
        }
        assert!(
            open.iter().all(|l| !fixed.contains_key(l) && *l < num_indices),
            "open labels must be in range and not fixed"
        );
        TensorNetwork {
            tensors,
            num_indices,
            fixed,
            open,
        }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn num_indices(&self) -> usize {
        self.num_indices
    }

    pub fn fixed(&self) -> &BTreeMap<Label, u8> {
        &self.fixed
    }

    pub fn open(&self) -> &[Label] {
        &self.open
    }

    /// Labels that occur in at least one tensor or are open, minus fixed ones.
    pub fn live_labels(&self) -> BTreeSet<Label> {
        self.tensors
            .iter()
            .flat_map(|t| t.labels().iter().copied())
            .chain(self.open.iter().copied())
            .filter(|l| !self.fixed.contains_key(l))
            .collect()
    }

    pub(crate) fn with_tensors(&self, tensors: Vec<Tensor>, fixed: BTreeMap<Label, u8>) -> Self {
        TensorNetwork {
            tensors,
            num_indices: self.num_indices,
            fixed,
            open: self.open.clone(),
        }
    }
}

/// Converts `circuit` into a tensor network computing `⟨out|U|in⟩` (or the
/// batch of such amplitudes over the open output wires).
pub fn circuit_to_network(
    circuit: &Circuit,
    in_bits: &[u8],
    out_spec: &OutSpec,
) -> Result<TensorNetwork, NetworkError> {
    let n = circuit.num_qubits();
    if in_bits.len() != n {
        return Err(NetworkError::BitLength {
            expected: n,
            got: in_bits.len(),
        });
    }
    let (out_bits, open_qubits) = match out_spec {
        OutSpec::Fixed(bits) => (bits, &[][..]),
        OutSpec::Open { qubits, bits } => (bits, &qubits[..]),
    };
    if out_bits.len() != n {
        return Err(NetworkError::BitLength {
            expected: n,
            got: out_bits.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for &q in open_qubits {
        if q >= n || !seen.insert(q) {
            return Err(NetworkError::BadOpenQubit(q));
        }
    }

    let mut wire: Vec<Label> = (0..n).collect();
    let mut next = n;
    let mut tensors = Vec::with_capacity(circuit.gates().len());
    for gate in circuit.gates().iter().rev() {
        let gt = gate_tensor(gate);
        let mut fresh: BTreeMap<usize, Label> = BTreeMap::new();
        for q in gate.qubits() {
            if !gate.is_diagonal_on(q) {
                fresh.insert(q, next);
                next += 1;
            }
        }
        let axes: Vec<Label> = gt
            .axes
            .iter()
            .map(|role| match *role {
                AxisRole::Diagonal(q) | AxisRole::Out(q) => wire[q],
                AxisRole::In(q) => fresh[&q],
            })
            .collect();
        tensors.push(Tensor::from_axes(&axes, &gt.values));
        for (q, l) in fresh {
            wire[q] = l;
        }
    }
    tensors.reverse();

    let mut fixed = BTreeMap::new();
    let mut open = Vec::new();
    let zero = Complex64::new(0.0, 0.0);
    for q in 0..n {
        let (in_label, out_label) = (wire[q], q);
        let is_open = open_qubits.contains(&q);
        if in_label != out_label {
            fixed.insert(in_label, in_bits[q]);
            if !is_open {
                fixed.insert(out_label, out_bits[q]);
            }
            continue;
        }
        // Only diagonal gates touched this wire: one label serves both ends.
        if is_open {
            tensors.push(Tensor::basis(in_label, in_bits[q]));
        } else if in_bits[q] == out_bits[q] {
            fixed.insert(in_label, in_bits[q]);
        } else {
            fixed.insert(in_label, in_bits[q]);
            tensors.push(Tensor::scalar(zero));
        }
    }
    for &q in open_qubits {
        open.push(q);
    }
    Ok(TensorNetwork::new(tensors, next, fixed, open))
}

/// Replaces every tensor touching a fixed label by its sub-array at the fixed
/// bit. The result has no fixed labels.
pub fn apply_fixed(net: &TensorNetwork) -> TensorNetwork {
    if net.fixed.is_empty() {
        return net.clone();
    }
    let tensors = net
        .tensors
        .iter()
        .map(|t| t.fix_many(net.fixed.iter()))
        .collect();
    net.with_tensors(tensors, BTreeMap::new())
}

/// Network for `⟨0|U† Z_a Z_b U|0⟩` where `U` is `circuit` and `(a, b)` an
/// edge of `graph`. The MaxCut term of the edge is `(1 - value) / 2`.
pub fn energy_network(
    circuit: &Circuit,
    graph: &ProblemGraph,
    edge: (usize, usize),
) -> Result<TensorNetwork, NetworkError> {
    let (a, b) = edge;
    if circuit.num_qubits() != graph.num_nodes() {
        return Err(NetworkError::SizeMismatch {
            circuit: circuit.num_qubits(),
            graph: graph.num_nodes(),
        });
    }
    if !graph.has_edge(a, b) {
        return Err(NetworkError::EdgeNotInGraph(a, b));
    }
    let n = circuit.num_qubits();
    let z = |qubit| Gate::ZPow {
        exponent: 1.0,
        qubit,
    };
    let inverse = circuit.dagger();
    let gates = circuit
        .gates()
        .iter()
        .copied()
        .chain([z(a), z(b)])
        .chain(inverse.gates().iter().copied());
    let sandwich = Circuit::from_gates(n, gates).expect("gates already validated");
    circuit_to_network(&sandwich, &vec![0; n], &OutSpec::zeros(n))
}

/// Undirected simple graph over index labels. Tensors appear as cliques.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LineGraph {
    adjacency: BTreeMap<Label, BTreeSet<Label>>,
}

impl LineGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: Label) {
        self.adjacency.entry(v).or_default();
    }

    pub fn add_edge(&mut self, a: Label, b: Label) {
        self.add_vertex(a);
        self.add_vertex(b);
        if a != b {
            self.adjacency.get_mut(&a).unwrap().insert(b);
            self.adjacency.get_mut(&b).unwrap().insert(a);
        }
    }

    pub fn add_clique(&mut self, vertices: &[Label]) {
        for (k, &a) in vertices.iter().enumerate() {
            self.add_vertex(a);
            for &b in &vertices[k + 1..] {
                self.add_edge(a, b);
            }
        }
    }

    pub fn from_edges(edges: &[(Label, Label)]) -> Self {
        let mut g = LineGraph::new();
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn contains(&self, v: Label) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Label> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: Label) -> Option<&BTreeSet<Label>> {
        self.adjacency.get(&v)
    }

    pub fn degree(&self, v: Label) -> Option<usize> {
        self.adjacency.get(&v).map(BTreeSet::len)
    }

    pub fn has_edge(&self, a: Label, b: Label) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    /// Deletes `v` and its incident edges without fill-in (slicing).
    pub fn remove_vertex(&mut self, v: Label) -> Option<BTreeSet<Label>> {
        let nbrs = self.adjacency.remove(&v)?;
        for u in &nbrs {
            self.adjacency.get_mut(u).unwrap().remove(&v);
        }
        Some(nbrs)
    }

    /// Deletes `v` and joins its former neighbors into a clique. Returns the
    /// degree `v` had, or `None` if absent.
    pub fn eliminate(&mut self, v: Label) -> Option<usize> {
        let nbrs = self.remove_vertex(v)?;
        let list: Vec<Label> = nbrs.into_iter().collect();
        for (k, &a) in list.iter().enumerate() {
            for &b in &list[k + 1..] {
                self.adjacency.get_mut(&a).unwrap().insert(b);
                self.adjacency.get_mut(&b).unwrap().insert(a);
            }
        }
        Some(list.len())
    }
}

/// Line graph of the network: one vertex per live label, a clique per tensor.
pub fn line_graph(net: &TensorNetwork) -> LineGraph {
    let mut g = LineGraph::new();
    for l in net.live_labels() {
        g.add_vertex(l);
    }
    for t in &net.tensors {
        let live: Vec<Label> = t
            .labels()
            .iter()
            .copied()
            .filter(|l| !net.fixed.contains_key(l))
            .collect();
        g.add_clique(&live);
    }
    g
}
