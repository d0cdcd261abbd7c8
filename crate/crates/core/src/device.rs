//! Device calibration snapshots and the coupling topology derived from them.
//!
//! A calibration is the only description of the hardware the compiler sees:
//! which qubits exist, which pairs can run a CNOT, how long every gate takes
//! in each direction, and how noisy each operation is. Durations are integer
//! nanoseconds so that the scheduler can work in exact arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the calibration JSON layout accepted by [`load_calibration`].
pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("cannot read calibration file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed calibration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid calibration at `{path}`: {message}")]
    Validation { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CalibrationError {
    CalibrationError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalQubit {
    pub index: usize,
    /// Single coherence figure used both for the remaining-coherence objective
    /// and as the dephasing time constant in simulation.
    pub coherence_time_us: f64,
    /// P(read 1 | prepared 0).
    pub readout_p01: f64,
    /// P(read 0 | prepared 1).
    pub readout_p10: f64,
    /// Duration of a Hadamard-equivalent single-qubit gate.
    pub sq_duration_ns: u64,
    pub sq_error: f64,
}

impl PhysicalQubit {
    /// Coherence time rounded to whole nanoseconds.
    pub fn coherence_ns(&self) -> i64 {
        (self.coherence_time_us * 1000.0).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupler {
    pub a: usize,
    pub b: usize,
    /// CNOT duration with `a` as control.
    pub duration_ab_ns: u64,
    /// CNOT duration with `b` as control.
    pub duration_ba_ns: u64,
    pub error: f64,
}

impl Coupler {
    pub fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }

    /// Duration of the CNOT whose control is `control`.
    pub fn duration_from(&self, control: usize) -> u64 {
        if control == self.a {
            self.duration_ab_ns
        } else {
            self.duration_ba_ns
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    snapshot_label: String,
    qubits: Vec<PhysicalQubit>,
    couplers: Vec<Coupler>,
}

/// A validated, immutable calibration snapshot.
#[derive(Debug, Clone)]
pub struct DeviceCalibration {
    snapshot_label: String,
    qubits: Vec<PhysicalQubit>,
    couplers: Vec<Coupler>,
    qubit_pos: BTreeMap<usize, usize>,
    coupler_pos: BTreeMap<(usize, usize), usize>,
}

impl PartialEq for DeviceCalibration {
    fn eq(&self, other: &Self) -> bool {
        self.snapshot_label == other.snapshot_label
            && self.qubits == other.qubits
            && self.couplers == other.couplers
    }
}

fn check_probability(path: String, p: f64) -> Result<(), CalibrationError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(invalid(path, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl DeviceCalibration {
    pub fn new(
        snapshot_label: impl Into<String>,
        qubits: Vec<PhysicalQubit>,
        couplers: Vec<Coupler>,
    ) -> Result<Self, CalibrationError> {
        let mut qubit_pos = BTreeMap::new();
        for (i, q) in qubits.iter().enumerate() {
            let path = format!("qubits[{i}]");
            if qubit_pos.insert(q.index, i).is_some() {
                return Err(invalid(
                    format!("{path}.index"),
                    format!("duplicate qubit index {}", q.index),
                ));
            }
            if !(q.coherence_time_us > 0.0) || !q.coherence_time_us.is_finite() {
                return Err(invalid(
                    format!("{path}.coherence_time_us"),
                    "coherence time must be positive and finite",
                ));
            }
            if q.coherence_ns() <= 0 {
                return Err(invalid(
                    format!("{path}.coherence_time_us"),
                    "coherence time is below one nanosecond",
                ));
            }
            if q.sq_duration_ns == 0 {
                return Err(invalid(
                    format!("{path}.sq_duration_ns"),
                    "duration must be positive",
                ));
            }
            check_probability(format!("{path}.readout_p01"), q.readout_p01)?;
            check_probability(format!("{path}.readout_p10"), q.readout_p10)?;
            check_probability(format!("{path}.sq_error"), q.sq_error)?;
        }
        let mut coupler_pos = BTreeMap::new();
        for (i, c) in couplers.iter().enumerate() {
            let path = format!("couplers[{i}]");
            if c.a == c.b {
                return Err(invalid(path.to_string(), "self-loop coupler"));
            }
            for (field, q) in [("a", c.a), ("b", c.b)] {
                if !qubit_pos.contains_key(&q) {
                    return Err(invalid(
                        format!("{path}.{field}"),
                        format!("unknown qubit {q}"),
                    ));
                }
            }
            if c.duration_ab_ns == 0 {
                return Err(invalid(
                    format!("{path}.duration_ab_ns"),
                    "duration must be positive",
                ));
            }
            if c.duration_ba_ns == 0 {
                return Err(invalid(
                    format!("{path}.duration_ba_ns"),
                    "duration must be positive",
                ));
            }
            check_probability(format!("{path}.error"), c.error)?;
            if coupler_pos.insert(c.key(), i).is_some() {
                return Err(invalid(
                    path,
                    format!("second coupler for pair ({}, {})", c.a, c.b),
                ));
            }
        }
        Ok(Self {
            snapshot_label: snapshot_label.into(),
            qubits,
            couplers,
            qubit_pos,
            coupler_pos,
        })
    }

    /// Noise-free device on qubits `0..n` with the same durations everywhere.
    pub fn uniform(
        n: usize,
        edges: &[(usize, usize)],
        sq_ns: u64,
        cnot_ns: u64,
        coherence_us: f64,
    ) -> Result<Self, CalibrationError> {
        let qubits = (0..n)
            .map(|index| PhysicalQubit {
                index,
                coherence_time_us: coherence_us,
                readout_p01: 0.0,
                readout_p10: 0.0,
                sq_duration_ns: sq_ns,
                sq_error: 0.0,
            })
            .collect();
        let couplers = edges
            .iter()
            .map(|&(a, b)| Coupler {
                a,
                b,
                duration_ab_ns: cnot_ns,
                duration_ba_ns: cnot_ns,
                error: 0.0,
            })
            .collect();
        Self::new(format!("uniform-{n}"), qubits, couplers)
    }

    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        let raw: RawCalibration = serde_json::from_str(text)?;
        Self::new(raw.snapshot_label, raw.qubits, raw.couplers)
    }

    pub fn to_json(&self) -> String {
        let raw = RawCalibration {
            snapshot_label: self.snapshot_label.clone(),
            qubits: self.qubits.clone(),
            couplers: self.couplers.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("calibration serializes")
    }

    pub fn snapshot_label(&self) -> &str {
        &self.snapshot_label
    }

    pub fn qubits(&self) -> &[PhysicalQubit] {
        &self.qubits
    }

    pub fn couplers(&self) -> &[Coupler] {
        &self.couplers
    }

    pub fn qubit(&self, index: usize) -> Option<&PhysicalQubit> {
        self.qubit_pos.get(&index).map(|&i| &self.qubits[i])
    }

    /// The coupler joining `p` and `q`, in either orientation.
    pub fn coupler(&self, p: usize, q: usize) -> Option<&Coupler> {
        self.coupler_pos
            .get(&(p.min(q), p.max(q)))
            .map(|&i| &self.couplers[i])
    }
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<DeviceCalibration, CalibrationError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CalibrationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    DeviceCalibration::from_json(&text)
}

pub fn save_calibration(
    cal: &DeviceCalibration,
    path: impl AsRef<Path>,
) -> Result<(), CalibrationError> {
    let path = path.as_ref();
    fs::write(path, cal.to_json()).map_err(|source| CalibrationError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Undirected simple coupling graph over physical qubit indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
}

impl Topology {
    pub fn from_edges(nodes: impl IntoIterator<Item = usize>, edges: &[(usize, usize)]) -> Self {
        let mut adjacency: BTreeMap<usize, BTreeSet<usize>> =
            nodes.into_iter().map(|q| (q, BTreeSet::new())).collect();
        for &(p, q) in edges {
            if p == q {
                continue;
            }
            adjacency.entry(p).or_default().insert(q);
            adjacency.entry(q).or_default().insert(p);
        }
        Self { adjacency }
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .flat_map(|(&p, ns)| ns.iter().filter(move |&&q| q > p).map(move |&q| (p, q)))
            .collect()
    }

    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.get(&q).into_iter().flatten().copied()
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency.get(&q).map_or(0, BTreeSet::len)
    }

    pub fn has_edge(&self, p: usize, q: usize) -> bool {
        self.adjacency.get(&p).is_some_and(|ns| ns.contains(&q))
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency
            .values()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(0)
    }
}

pub fn topology_graph(cal: &DeviceCalibration) -> Topology {
    let edges: Vec<_> = cal.couplers().iter().map(|c| (c.a, c.b)).collect();
    Topology::from_edges(cal.qubits().iter().map(|q| q.index), &edges)
}
