//! Hardware-aware compilation of native graph-state preparation circuits.
//!
//! The pipeline places a graph onto a device, builds an exact scheduling model
//! over CNOT directions, gate start/end times and Hadamard cancellations,
//! solves it (built-in branch and bound or an external SMT optimizer), decodes
//! a timed circuit and checks it with a stabilizer simulator.

pub mod circuit;
pub mod cli;
pub mod device;
pub mod graph;
pub mod pauli;
pub mod placement;
pub mod sched;
pub mod sim;
