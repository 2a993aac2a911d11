//! Tensor-network simulation of QAOA MaxCut circuits with step-dependent
//! slicing.

pub mod circuit;
pub mod contraction;
pub mod ordering;
pub mod slicing;
pub mod tensor;
pub mod tensornet;

/// Index of a tensor-network edge (a wire segment between gates).
pub type Label = usize;

pub use circuit::{build_qaoa_circuit, random_regular_graph, Circuit, Gate, ProblemGraph};
pub use contraction::{contract, cost_estimate, cost_profile, maxcut_energy, ContractionResult};
pub use ordering::{EliminationOrder, Greedy, Orderer, RGreedy};
pub use slicing::{execute_sliced, find_slice_schedule, SliceSchedule};
pub use tensor::Tensor;
pub use tensornet::{circuit_to_network, energy_network, line_graph, LineGraph, OutSpec, TensorNetwork};
