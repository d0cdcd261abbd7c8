//! Calibration-derived Pauli noise and the event list both simulators replay.

use std::collections::BTreeMap;

use crate::circuit::{TimedCircuit, TimedKind};
use crate::device::DeviceCalibration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitNoise {
    /// Depolarizing probability after each Hadamard.
    pub sq_error: f64,
    /// Dephasing time constant in nanoseconds.
    pub dephasing_ns: f64,
    pub readout_p01: f64,
    pub readout_p10: f64,
}

impl QubitNoise {
    pub const NONE: QubitNoise = QubitNoise {
        sq_error: 0.0,
        dephasing_ns: f64::INFINITY,
        readout_p01: 0.0,
        readout_p10: 0.0,
    };
}

/// Depolarizing noise after every gate, Z dephasing on idle wires and
/// independent per-qubit readout flips. Qubits or couplers without an entry
/// are noiseless.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseModel {
    pub qubits: BTreeMap<usize, QubitNoise>,
    /// Two-qubit depolarizing probability keyed by `(low, high)` qubit pair.
    pub couplers: BTreeMap<(usize, usize), f64>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn from_calibration(cal: &DeviceCalibration) -> Self {
        let qubits = cal
            .qubits()
            .iter()
            .map(|q| {
                (
                    q.index,
                    QubitNoise {
                        sq_error: q.sq_error,
                        dephasing_ns: q.coherence_time_us * 1000.0,
                        readout_p01: q.readout_p01,
                        readout_p10: q.readout_p10,
                    },
                )
            })
            .collect();
        let couplers = cal.couplers().iter().map(|c| (c.key(), c.error)).collect();
        Self { qubits, couplers }
    }

    /// Every error probability times `factor` (clamped to 1) and every
    /// dephasing time divided by it.
    pub fn scaled(&self, factor: f64) -> Self {
        let clamp = |p: f64| (p * factor).clamp(0.0, 1.0);
        Self {
            qubits: self
                .qubits
                .iter()
                .map(|(&q, n)| {
                    (
                        q,
                        QubitNoise {
                            sq_error: clamp(n.sq_error),
                            dephasing_ns: n.dephasing_ns / factor,
                            readout_p01: clamp(n.readout_p01),
                            readout_p10: clamp(n.readout_p10),
                        },
                    )
                })
                .collect(),
            couplers: self.couplers.iter().map(|(&k, &p)| (k, clamp(p))).collect(),
        }
    }

    pub fn without_readout(&self) -> Self {
        let mut m = self.clone();
        for n in m.qubits.values_mut() {
            n.readout_p01 = 0.0;
            n.readout_p10 = 0.0;
        }
        m
    }

    pub fn readout_only(&self) -> Self {
        let mut m = self.clone();
        for n in m.qubits.values_mut() {
            n.sq_error = 0.0;
            n.dephasing_ns = f64::INFINITY;
        }
        m.couplers.values_mut().for_each(|p| *p = 0.0);
        m
    }

    pub fn qubit(&self, q: usize) -> QubitNoise {
        self.qubits.get(&q).copied().unwrap_or(QubitNoise::NONE)
    }

    pub fn cx_error(&self, a: usize, b: usize) -> f64 {
        self.couplers
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Probability of a Z error on qubit `q` idling for `ns` nanoseconds.
    pub fn dephasing(&self, q: usize, ns: f64) -> f64 {
        let d = self.qubit(q).dephasing_ns;
        if ns <= 0.0 || d.is_infinite() {
            0.0
        } else {
            (1.0 - (-ns / d).exp()) / 2.0
        }
    }
}

/// One step of a noisy run. Wires are local (vertex) indices. `key`
/// identifies the random draw so that circuits sharing a gate or an idle
/// slot on the same wire also share its noise sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Event {
    H(usize),
    Cx(usize, usize),
    Depol1 {
        q: usize,
        p: f64,
        key: u64,
    },
    Depol2 {
        a: usize,
        b: usize,
        p: f64,
        key: u64,
    },
    Dephase {
        q: usize,
        p: f64,
        key: u64,
    },
}

fn event_key(category: u64, w1: usize, w2: usize, ordinal: usize) -> u64 {
    debug_assert!(w1 < 1 << 12 && w2 < 1 << 12 && ordinal < 1 << 16);
    category << 40 | (w1 as u64) << 28 | (w2 as u64) << 16 | ordinal as u64
}

/// Gates in circuit order with dephasing inserted before each gate for the
/// idle gap on its wires, depolarizing after it, and trailing dephasing up
/// to the makespan.
pub(crate) fn events(c: &TimedCircuit, nm: &NoiseModel) -> Vec<Event> {
    let local: BTreeMap<usize, usize> = c
        .placement
        .iter()
        .enumerate()
        .map(|(v, &q)| (q, v))
        .collect();
    let mut last_end: BTreeMap<usize, f64> = BTreeMap::new();
    let mut gaps: BTreeMap<usize, usize> = BTreeMap::new();
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut out = Vec::new();
    let to_f = |t: crate::sched::Time| *t.numer() as f64 / *t.denom() as f64;
    let mut idle = |q: usize, until: f64, last_end: &BTreeMap<usize, f64>, out: &mut Vec<Event>| {
        if let Some(&end) = last_end.get(&q) {
            let p = nm.dephasing(q, until - end);
            let k = gaps.entry(q).or_insert(0);
            if p > 0.0 {
                out.push(Event::Dephase {
                    q: local[&q],
                    p,
                    key: event_key(3, q, 0, *k),
                });
            }
            *k += 1;
        }
    };
    for g in &c.gates {
        let start = to_f(g.start);
        for &w in &g.wires {
            idle(w, start, &last_end, &mut out);
        }
        match g.kind {
            TimedKind::H => {
                let q = g.wires[0];
                out.push(Event::H(local[&q]));
                let k = counts.entry((q, usize::MAX)).or_insert(0);
                let p = nm.qubit(q).sq_error;
                if p > 0.0 {
                    out.push(Event::Depol1 {
                        q: local[&q],
                        p,
                        key: event_key(1, q, 0, *k),
                    });
                }
                *k += 1;
            }
            TimedKind::Cx => {
                let (a, b) = (g.wires[0], g.wires[1]);
                out.push(Event::Cx(local[&a], local[&b]));
                let k = counts.entry((a.min(b), a.max(b))).or_insert(0);
                let p = nm.cx_error(a, b);
                if p > 0.0 {
                    out.push(Event::Depol2 {
                        a: local[&a],
                        b: local[&b],
                        p,
                        key: event_key(2, a.min(b), a.max(b), *k),
                    });
                }
                *k += 1;
            }
        }
        for &w in &g.wires {
            last_end.insert(w, to_f(g.end));
        }
    }
    let makespan = to_f(c.makespan);
    for &q in &c.placement {
        idle(q, makespan, &last_end, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dephasing_probability() {
        let mut nm = NoiseModel::noiseless();
        nm.qubits.insert(
            0,
            QubitNoise {
                dephasing_ns: 1000.0,
                ..QubitNoise::NONE
            },
        );
        let p = nm.dephasing(0, 1000.0);
        assert!((p - (1.0 - (-1.0f64).exp()) / 2.0).abs() < 1e-15);
        assert_eq!(nm.dephasing(0, 0.0), 0.0);
        assert_eq!(nm.dephasing(5, 1e9), 0.0);
        assert!(nm.dephasing(0, 1e12) <= 0.5);
    }

    #[test]
    fn scaling_stays_in_range() {
        let mut nm = NoiseModel::noiseless();
        nm.couplers.insert((0, 1), 0.6);
        let s = nm.scaled(2.0);
        assert_eq!(s.cx_error(1, 0), 1.0);
    }
}
