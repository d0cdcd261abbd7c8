//! Exact density-matrix evolution for small circuits.

use super::noise::{events, Event};
use super::{simulate_ideal, NoiseModel, SimError};
use crate::circuit::TimedCircuit;

pub const DENSITY_CAP: usize = 5;

/// Real density matrix; every channel in the noise model keeps it real.
struct Rho {
    dim: usize,
    m: Vec<f64>,
}

impl Rho {
    fn zero_state(n: usize) -> Self {
        let dim = 1 << n;
        let mut m = vec![0.0; dim * dim];
        m[0] = 1.0;
        Self { dim, m }
    }

    fn h(&mut self, q: usize) {
        let b = 1 << q;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = self.dim;
        // rows
        for a in (0..d).filter(|a| a & b == 0) {
            for c in 0..d {
                let (u, v) = (self.m[a * d + c], self.m[(a | b) * d + c]);
                self.m[a * d + c] = s * (u + v);
                self.m[(a | b) * d + c] = s * (u - v);
            }
        }
        // columns
        for r in 0..d {
            for a in (0..d).filter(|a| a & b == 0) {
                let (u, v) = (self.m[r * d + a], self.m[r * d + (a | b)]);
                self.m[r * d + a] = s * (u + v);
                self.m[r * d + (a | b)] = s * (u - v);
            }
        }
    }

    fn cx(&mut self, c: usize, t: usize) {
        let d = self.dim;
        let perm = |a: usize| if a >> c & 1 == 1 { a ^ 1 << t } else { a };
        let mut out = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                out[perm(a) * d + perm(b)] = self.m[a * d + b];
            }
        }
        self.m = out;
    }

    /// `P rho P^dagger` for `P = X^x Z^z` (up to phase).
    fn conjugated(&self, x: usize, z: usize) -> Vec<f64> {
        let d = self.dim;
        let par = |v: usize| if v.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let mut out = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                out[a * d + b] =
                    par(z & (a ^ x)) * par(z & (b ^ x)) * self.m[(a ^ x) * d + (b ^ x)];
            }
        }
        out
    }

    /// `(1 - p) rho + p / |ps| sum_P P rho P`.
    fn pauli_channel(&mut self, p: f64, ps: &[(usize, usize)]) {
        let mut acc: Vec<f64> = self.m.iter().map(|v| v * (1.0 - p)).collect();
        let w = p / ps.len() as f64;
        for &(x, z) in ps {
            for (a, v) in acc.iter_mut().zip(self.conjugated(x, z)) {
                *a += w * v;
            }
        }
        self.m = acc;
    }
}

fn local_paulis(q: usize) -> [(usize, usize); 3] {
    let b = 1 << q;
    [(b, 0), (0, b), (b, b)]
}

/// `<G|rho|G>` after exact evolution under the gate and idle channels of
/// `nm`. Readout error does not enter.
pub fn density_oracle(c: &TimedCircuit, nm: &NoiseModel) -> Result<f64, SimError> {
    let n = c.n();
    if n > DENSITY_CAP {
        return Err(SimError::CapExceeded {
            n,
            cap: DENSITY_CAP,
        });
    }
    simulate_ideal(c)?;
    let mut rho = Rho::zero_state(n);
    for ev in events(c, nm) {
        match ev {
            Event::H(q) => rho.h(q),
            Event::Cx(a, b) => rho.cx(a, b),
            Event::Depol1 { q, p, .. } => rho.pauli_channel(p, &local_paulis(q)),
            Event::Depol2 { a, b, p, .. } => {
                let mut ps = Vec::with_capacity(15);
                let one = |q: usize| std::iter::once((0, 0)).chain(local_paulis(q));
                for pa in one(a) {
                    for pb in one(b) {
                        if pa != (0, 0) || pb != (0, 0) {
                            ps.push((pa.0 | pb.0, pa.1 | pb.1));
                        }
                    }
                }
                rho.pauli_channel(p, &ps);
            }
            Event::Dephase { q, p, .. } => rho.pauli_channel(p, &[(0, 1 << q)]),
        }
    }
    let dim = 1usize << n;
    let amp = (dim as f64).sqrt().recip();
    let g: Vec<f64> = (0..dim)
        .map(|k| {
            let odd = c
                .graph
                .edges()
                .iter()
                .filter(|&&(u, v)| k >> u & 1 == 1 && k >> v & 1 == 1)
                .count()
                % 2;
            if odd == 1 {
                -amp
            } else {
                amp
            }
        })
        .collect();
    let mut f = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            f += g[a] * rho.m[a * dim + b] * g[b];
        }
    }
    Ok(f)
}
