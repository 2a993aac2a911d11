//! Problem graphs, the gate set, QAOA circuit construction and the textual
//! circuit format.
//!
//! The circuit text format is line based:
//!
//! ```text
//! # comment
//! qubits 2
//! h 0
//! cnot 0 1
//! zpow 0.25 1
//! ```
//!
//! `ZPow(t)` is `diag(1, e^{iπt})`, so `zpow 1 q` is Pauli-Z.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of configuration-model pairings tried before giving up.
pub const MAX_REGULAR_ATTEMPTS: usize = 10_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CircuitError {
    #[error("no simple {degree}-regular graph on {nodes} nodes exists")]
    InfeasibleRegular { nodes: usize, degree: usize },
    #[error("failed to sample a simple regular graph after {0} attempts")]
    SamplingFailed(usize),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("gate {gate} acts on qubit {qubit} but the circuit has {num_qubits} qubits")]
    QubitOutOfRange {
        gate: String,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("gate {0} acts twice on the same qubit")]
    RepeatedQubit(String),
    #[error("expected {gammas} gammas and betas of equal, nonzero length, got {betas} betas")]
    ParameterMismatch { gammas: usize, betas: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// MaxCut instance graph. Edges are stored in insertion order, which fixes the
/// order of the phase-separation gadgets in [`build_qaoa_circuit`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct ProblemGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for ProblemGraph {
    type Error = CircuitError;

    fn try_from(value: GraphJson) -> Result<Self, Self::Error> {
        ProblemGraph::new(value.n, value.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<ProblemGraph> for GraphJson {
    fn from(g: ProblemGraph) -> Self {
        GraphJson {
            n: g.num_nodes,
            edges: g.edges.into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }
}

impl ProblemGraph {
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, CircuitError> {
        let mut seen = BTreeSet::new();
        let mut stored = Vec::new();
        for (a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(CircuitError::NodeOutOfRange(a, b, num_nodes));
            }
            if a == b {
                return Err(CircuitError::SelfLoop(a, b));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(CircuitError::DuplicateEdge(a, b));
            }
            stored.push((a, b));
        }
        Ok(ProblemGraph {
            num_nodes,
            edges: stored,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }

    /// The complete graph on `n` nodes, edges in lexicographic order.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
        ProblemGraph::new(n, edges).expect("complete graph is simple")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Samples a simple `degree`-regular graph on `nodes` nodes with the
/// configuration model. Pairings with a self-loop or multi-edge are discarded
/// and resampled from scratch.
pub fn random_regular_graph(
    nodes: usize,
    degree: usize,
    seed: u64,
) -> Result<ProblemGraph, CircuitError> {
    if (nodes * degree) % 2 == 1 || degree >= nodes {
        return Err(CircuitError::InfeasibleRegular { nodes, degree });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..nodes)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    'attempt: for _ in 0..MAX_REGULAR_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'attempt;
            }
            edges.push((a.min(b), a.max(b)));
        }
        return ProblemGraph::new(nodes, edges);
    }
    Err(CircuitError::SamplingFailed(MAX_REGULAR_ATTEMPTS))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    ZPow,
    Cnot,
    Cz,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::ZPow => "zpow",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::ZPow => 1,
            GateKind::Cnot | GateKind::Cz => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    /// `diag(1, e^{iπ·exponent})` on `qubit`.
    ZPow { exponent: f64, qubit: usize },
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
}

/// How one axis of a compressed gate tensor attaches to the circuit wires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisRole {
    /// Shared by the input and output wire of the qubit.
    Diagonal(usize),
    In(usize),
    Out(usize),
}

/// Gate tensor with diagonal axes merged. `values` is row-major over `axes`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTensor {
    pub values: Vec<Complex64>,
    pub axes: Vec<AxisRole>,
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H(_) => GateKind::H,
            Gate::X(_) => GateKind::X,
            Gate::ZPow { .. } => GateKind::ZPow,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Cz(..) => GateKind::Cz,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::ZPow { qubit: q, .. } => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Gate::ZPow { exponent, .. } => Some(exponent),
            _ => None,
        }
    }

    /// Whether the gate is diagonal in the computational basis along `qubit`.
    pub fn is_diagonal_on(&self, qubit: usize) -> bool {
        match *self {
            Gate::H(_) | Gate::X(_) => false,
            Gate::ZPow { qubit: q, .. } => q == qubit,
            Gate::Cnot { control, .. } => control == qubit,
            Gate::Cz(a, b) => a == qubit || b == qubit,
        }
    }

    /// The adjoint gate.
    pub fn dagger(&self) -> Gate {
        match *self {
            Gate::ZPow { exponent, qubit } => Gate::ZPow {
                exponent: -exponent,
                qubit,
            },
            g => g,
        }
    }

    fn check(&self, num_qubits: usize) -> Result<(), CircuitError> {
        let qubits = self.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(CircuitError::QubitOutOfRange {
                gate: self.kind().name().to_string(),
                qubit: q,
                num_qubits,
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::RepeatedQubit(self.kind().name().to_string()));
        }
        Ok(())
    }
}

fn phase(exponent: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * exponent)
}

/// Compressed tensor of a gate.
///
/// H and X are `[in, out]` matrices, ZPow a length-2 diagonal, CZ a 2×2 table
/// of phases over both (diagonal) qubits and CNOT a `[control, target_in,
/// target_out]` array.
pub fn gate_tensor(gate: &Gate) -> GateTensor {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match *gate {
        Gate::H(q) => {
            let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
            GateTensor {
                values: vec![h, h, h, -h],
                axes: vec![AxisRole::In(q), AxisRole::Out(q)],
            }
        }
        Gate::X(q) => GateTensor {
            values: vec![zero, one, one, zero],
            axes: vec![AxisRole::In(q), AxisRole::Out(q)],
        },
        Gate::ZPow { exponent, qubit } => GateTensor {
            values: vec![one, phase(exponent)],
            axes: vec![AxisRole::Diagonal(qubit)],
        },
        Gate::Cz(a, b) => GateTensor {
            values: vec![one, one, one, -one],
            axes: vec![AxisRole::Diagonal(a), AxisRole::Diagonal(b)],
        },
        Gate::Cnot { control, target } => {
            let values = (0..8)
                .map(|k| {
                    let (c, i, o) = (k >> 2 & 1, k >> 1 & 1, k & 1);
                    if (c == 0) == (i == o) {
                        one
                    } else {
                        zero
                    }
                })
                .collect();
            GateTensor {
                values,
                axes: vec![
                    AxisRole::Diagonal(control),
                    AxisRole::In(target),
                    AxisRole::Out(target),
                ],
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(
        num_qubits: usize,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Self, CircuitError> {
        let mut circuit = Circuit::new(num_qubits);
        for g in gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.check(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// The inverse circuit: gates reversed and individually adjoined.
    pub fn dagger(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::dagger).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        serialize_circuit(self)
    }

    pub fn from_text(text: &str) -> Result<Self, CircuitError> {
        parse_circuit(text)
    }
}

/// Builds the depth-`p` QAOA MaxCut circuit for `graph`.
///
/// Layout: `H` on every qubit, then per layer `k` a `CNOT · ZPow(2γ_k/π) ·
/// CNOT` gadget on each edge (graph order) followed by `H · ZPow(2β_k/π) · H`
/// on each qubit.
pub fn build_qaoa_circuit(
    graph: &ProblemGraph,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Circuit, CircuitError> {
    if gammas.len() != betas.len() || gammas.is_empty() {
        return Err(CircuitError::ParameterMismatch {
            gammas: gammas.len(),
            betas: betas.len(),
        });
    }
    let n = graph.num_nodes();
    let mut circuit = Circuit::new(n);
    for q in 0..n {
        circuit.push(Gate::H(q))?;
    }
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        for &(i, j) in graph.edges() {
            circuit.push(Gate::Cnot {
                control: i,
                target: j,
            })?;
            circuit.push(Gate::ZPow {
                exponent: 2.0 * gamma / PI,
                qubit: j,
            })?;
            circuit.push(Gate::Cnot {
                control: i,
                target: j,
            })?;
        }
        for q in 0..n {
            circuit.push(Gate::H(q))?;
            circuit.push(Gate::ZPow {
                exponent: 2.0 * beta / PI,
                qubit: q,
            })?;
            circuit.push(Gate::H(q))?;
        }
    }
    Ok(circuit)
}

pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\n", circuit.num_qubits);
    for gate in &circuit.gates {
        match *gate {
            Gate::H(q) => writeln!(out, "h {q}"),
            Gate::X(q) => writeln!(out, "x {q}"),
            Gate::ZPow { exponent, qubit } => writeln!(out, "zpow {exponent:?} {qubit}"),
            Gate::Cnot { control, target } => writeln!(out, "cnot {control} {target}"),
            Gate::Cz(a, b) => writeln!(out, "cz {a} {b}"),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let err = |line: usize, message: String| CircuitError::Parse { line, message };
    let mut circuit: Option<Circuit> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let head = tokens.next().expect("nonempty line has a token");
        let args: Vec<&str> = tokens.collect();

        let Some(circ) = circuit.as_mut() else {
            if head != "qubits" || args.len() != 1 {
                return Err(err(line_no, "expected `qubits N` header".into()));
            }
            let n = args[0]
                .parse::<usize>()
                .map_err(|e| err(line_no, format!("bad qubit count {:?}: {e}", args[0])))?;
            circuit = Some(Circuit::new(n));
            continue;
        };

        let kind = match head {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "zpow" => GateKind::ZPow,
            "cnot" => GateKind::Cnot,
            "cz" => GateKind::Cz,
            other => return Err(err(line_no, format!("unknown gate `{other}`"))),
        };
        let expected = kind.arity() + usize::from(kind == GateKind::ZPow);
        if args.len() != expected {
            return Err(err(
                line_no,
                format!(
                    "gate `{}` takes {expected} arguments, got {}",
                    kind.name(),
                    args.len()
                ),
            ));
        }
        let qubit = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| err(line_no, format!("bad qubit id {s:?}: {e}")))
        };
        let gate = match kind {
            GateKind::H => Gate::H(qubit(args[0])?),
            GateKind::X => Gate::X(qubit(args[0])?),
            GateKind::ZPow => Gate::ZPow {
                exponent: args[0]
                    .parse::<f64>()
                    .map_err(|e| err(line_no, format!("bad exponent {:?}: {e}", args[0])))?,
                qubit: qubit(args[1])?,
            },
            GateKind::Cnot => Gate::Cnot {
                control: qubit(args[0])?,
                target: qubit(args[1])?,
            },
            GateKind::Cz => Gate::Cz(qubit(args[0])?, qubit(args[1])?),
        };
        circ.push(gate).map_err(|e| err(line_no, e.to_string()))?;
    }
    circuit.ok_or_else(|| err(text.lines().count().max(1), "missing `qubits N` header".into()))
}
