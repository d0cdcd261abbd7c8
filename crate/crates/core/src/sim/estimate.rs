//! Monte-Carlo fidelity estimation by Pauli-frame sampling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::noise::{events, Event, NoiseModel};
use super::{simulate_ideal, SimError, Tableau};
use crate::circuit::TimedCircuit;
use crate::graph::stabilizer_group;
use crate::pauli::PauliString;

/// Largest graph whose full stabilizer group is enumerated.
pub const GROUP_CAP: usize = 12;

const CHUNK: usize = 256;
const OUTCOME_WORDS: u128 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateOptions {
    pub shots: usize,
    pub seed: u64,
    pub mitigate: bool,
    /// Replace sampled readout flips by their expectation.
    pub analytic: bool,
}

impl EstimateOptions {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            seed,
            mitigate: false,
            analytic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementEstimate {
    pub element: PauliString,
    pub raw: f64,
    pub mitigated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyEstimate {
    pub fidelity_raw: f64,
    pub fidelity_mitigated: Option<f64>,
    pub stderr_raw: f64,
    pub stderr_mitigated: Option<f64>,
    pub elements: Vec<ElementEstimate>,
    pub shots: usize,
    pub seed: u64,
}

impl NoisyEstimate {
    pub fn to_json(&self) -> Value {
        let elements: serde_json::Map<String, Value> = self
            .elements
            .iter()
            .map(|e| {
                (
                    e.element.to_string(),
                    json!({ "raw": e.raw, "mitigated": e.mitigated }),
                )
            })
            .collect();
        json!({
            "fidelity_raw": self.fidelity_raw,
            "fidelity_mitigated": self.fidelity_mitigated,
            "stderr_raw": self.stderr_raw,
            "stderr_mitigated": self.stderr_mitigated,
            "elements": elements,
            "shots": self.shots,
            "seed": self.seed,
        })
    }
}

/// Per-element measurement setting: the ideal outcome distribution in the
/// element's local basis is uniform over `x0 + span(basis)`.
struct Setting {
    sign: f64,
    x: u64,
    z: u64,
    support: u64,
    x0: u64,
    basis: Vec<u64>,
}

fn setting(ideal: &Tableau, p: &PauliString) -> Setting {
    let mut t = ideal.clone();
    for q in 0..p.n() {
        let (x, z) = (p.x_mask() >> q & 1 == 1, p.z_mask() >> q & 1 == 1);
        match (x, z) {
            (true, false) => t.h(q),
            (true, true) => {
                t.sdg(q);
                t.h(q);
            }
            _ => {}
        }
    }
    let (x0, basis) = t.outcome_space();
    Setting {
        sign: p.sign() as f64,
        x: p.x_mask(),
        z: p.z_mask(),
        support: p.support(),
        x0,
        basis,
    }
}

fn uniform(rng: &mut ChaCha8Rng, key: u64) -> f64 {
    rng.set_word_pos((key as u128) << 4);
    rng.gen::<f64>()
}

/// Pauli frame accumulated over one noisy run.
fn sample_frame(evs: &[Event], rng: &mut ChaCha8Rng) -> (u64, u64) {
    let (mut fx, mut fz) = (0u64, 0u64);
    let flip = |fx: &mut u64, fz: &mut u64, q: usize, pauli: u64| {
        // 1 = X, 2 = Z, 3 = Y
        if pauli & 1 != 0 {
            *fx ^= 1 << q;
        }
        if pauli & 2 != 0 {
            *fz ^= 1 << q;
        }
    };
    for ev in evs {
        match *ev {
            Event::H(q) => {
                let b = 1u64 << q;
                let (x, z) = (fx & b, fz & b);
                fx = (fx & !b) | z;
                fz = (fz & !b) | x;
            }
            Event::Cx(c, t) => {
                if fx >> c & 1 == 1 {
                    fx ^= 1 << t;
                }
                if fz >> t & 1 == 1 {
                    fz ^= 1 << c;
                }
            }
            Event::Depol1 { q, p, key } => {
                let u = uniform(rng, key);
                if u < p {
                    let k = ((u / p * 3.0) as u64).min(2) + 1;
                    flip(&mut fx, &mut fz, q, k);
                }
            }
            Event::Depol2 { a, b, p, key } => {
                let u = uniform(rng, key);
                if u < p {
                    let k = ((u / p * 15.0) as u64).min(14) + 1;
                    flip(&mut fx, &mut fz, a, k & 3);
                    flip(&mut fx, &mut fz, b, k >> 2);
                }
            }
            Event::Dephase { q, p, key } => {
                if uniform(rng, key) < p {
                    fz ^= 1 << q;
                }
            }
        }
    }
    (fx, fz)
}

/// Readout response per local qubit: `E[(-1)^m'] = offset + scale (-1)^m`.
struct Readout {
    p01: Vec<f64>,
    p10: Vec<f64>,
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl Readout {
    fn new(c: &TimedCircuit, nm: &NoiseModel) -> Self {
        let qn: Vec<_> = c.placement.iter().map(|&q| nm.qubit(q)).collect();
        Self {
            p01: qn.iter().map(|q| q.readout_p01).collect(),
            p10: qn.iter().map(|q| q.readout_p10).collect(),
            offset: qn.iter().map(|q| q.readout_p10 - q.readout_p01).collect(),
            scale: qn
                .iter()
                .map(|q| 1.0 - q.readout_p01 - q.readout_p10)
                .collect(),
        }
    }
}

#[derive(Clone)]
struct Acc {
    raw: Vec<f64>,
    mit: Vec<f64>,
    f_raw: f64,
    f_raw2: f64,
    f_mit: f64,
    f_mit2: f64,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self {
            raw: vec![0.0; k],
            mit: vec![0.0; k],
            f_raw: 0.0,
            f_raw2: 0.0,
            f_mit: 0.0,
            f_mit2: 0.0,
        }
    }

    fn merge(mut self, o: &Acc) -> Self {
        for (a, b) in self.raw.iter_mut().zip(&o.raw) {
            *a += b;
        }
        for (a, b) in self.mit.iter_mut().zip(&o.mit) {
            *a += b;
        }
        self.f_raw += o.f_raw;
        self.f_raw2 += o.f_raw2;
        self.f_mit += o.f_mit;
        self.f_mit2 += o.f_mit2;
        self
    }
}

/// Fidelity with the target graph state, estimated from all `2^n` stabilizer
/// group elements. Each shot draws one Pauli frame and one outcome per
/// element; all randomness is keyed by `(seed, shot)` so the result does not
/// depend on the thread count.
pub fn estimate_fidelity(
    c: &TimedCircuit,
    nm: &NoiseModel,
    opts: EstimateOptions,
) -> Result<NoisyEstimate, SimError> {
    let n = c.n();
    if n > GROUP_CAP {
        return Err(SimError::CapExceeded { n, cap: GROUP_CAP });
    }
    if opts.shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let ideal = simulate_ideal(c)?;
    let group = stabilizer_group(&c.graph, GROUP_CAP).expect("size checked above");
    let settings: Vec<Setting> = group.iter().map(|p| setting(&ideal, p)).collect();
    let evs = events(c, nm);
    let ro = Readout::new(c, nm);
    let norm = 1.0 / settings.len() as f64;

    let run_shot = |shot: usize, acc: &mut Acc| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(shot as u64);
        let (fx, fz) = sample_frame(&evs, &mut rng);
        rng.set_word_pos(OUTCOME_WORDS);
        let (mut sr, mut sm) = (0.0, 0.0);
        for (k, s) in settings.iter().enumerate() {
            let r = rng.next_u64();
            let mut bits = s.x0;
            for (i, &bv) in s.basis.iter().enumerate() {
                if r >> i & 1 == 1 {
                    bits ^= bv;
                }
            }
            bits ^= ((fx & s.z) ^ (fz & s.x)) & s.support;
            let (mut raw, mut mit) = (s.sign, s.sign);
            let mut rest = s.support;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let m = bits >> j & 1 == 1;
                let pm = if m { -1.0 } else { 1.0 };
                if opts.analytic {
                    raw *= ro.offset[j] + ro.scale[j] * pm;
                    mit *= pm;
                } else {
                    let p_flip = if m { ro.p10[j] } else { ro.p01[j] };
                    let read = if rng.gen::<f64>() < p_flip { -pm } else { pm };
                    raw *= read;
                    mit *= (read - ro.offset[j]) / ro.scale[j];
                }
            }
            acc.raw[k] += raw;
            acc.mit[k] += mit;
            sr += raw;
            sm += mit;
        }
        let (fr, fm) = (sr * norm, sm * norm);
        acc.f_raw += fr;
        acc.f_raw2 += fr * fr;
        acc.f_mit += fm;
        acc.f_mit2 += fm * fm;
    };

    let chunks: Vec<Acc> = (0..opts.shots.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let mut acc = Acc::new(settings.len());
            for shot in ci * CHUNK..((ci + 1) * CHUNK).min(opts.shots) {
                run_shot(shot, &mut acc);
            }
            acc
        })
        .collect();
    let total = chunks
        .iter()
        .fold(Acc::new(settings.len()), |a, b| a.merge(b));

    let shots = opts.shots as f64;
    let stderr = |sum: f64, sum2: f64| {
        if opts.shots < 2 {
            return 0.0;
        }
        let mean = sum / shots;
        let var = ((sum2 - shots * mean * mean) / (shots - 1.0)).max(0.0);
        (var / shots).sqrt()
    };
    let elements = group
        .iter()
        .enumerate()
        .map(|(k, p)| ElementEstimate {
            element: *p,
            raw: total.raw[k] / shots,
            mitigated: opts.mitigate.then(|| total.mit[k] / shots),
        })
        .collect();
    Ok(NoisyEstimate {
        fidelity_raw: total.f_raw / shots,
        fidelity_mitigated: opts.mitigate.then(|| total.f_mit / shots),
        stderr_raw: stderr(total.f_raw, total.f_raw2),
        stderr_mitigated: opts.mitigate.then(|| stderr(total.f_mit, total.f_mit2)),
        elements,
        shots: opts.shots,
        seed: opts.seed,
    })
}
