//! Ideal and noisy simulation of compiled preparation circuits.

mod density;
mod estimate;
mod noise;
mod tableau;

use thiserror::Error;

use crate::circuit::{TimedCircuit, TimedKind};

pub use density::{density_oracle, DENSITY_CAP};
pub use estimate::{estimate_fidelity, ElementEstimate, EstimateOptions, NoisyEstimate, GROUP_CAP};
pub use noise::{NoiseModel, QubitNoise};
pub use tableau::Tableau;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{n} qubits exceed the limit of {cap} for this simulator")]
    CapExceeded { n: usize, cap: usize },
    #[error("at least one shot is required")]
    ZeroShots,
    #[error("gate on qubit {0} which is not part of the placement")]
    UnknownWire(usize),
}

pub(crate) fn local_index(c: &TimedCircuit, q: usize) -> Result<usize, SimError> {
    c.placement
        .iter()
        .position(|&p| p == q)
        .ok_or(SimError::UnknownWire(q))
}

/// Noise-free run from `|0...0>`. Tableau qubit `v` is graph vertex `v`.
pub fn simulate_ideal(c: &TimedCircuit) -> Result<Tableau, SimError> {
    let mut t = Tableau::new(c.n());
    for g in &c.gates {
        match g.kind {
            TimedKind::H => t.h(local_index(c, g.wires[0])?),
            TimedKind::Cx => t.cnot(local_index(c, g.wires[0])?, local_index(c, g.wires[1])?),
        }
    }
    Ok(t)
}
