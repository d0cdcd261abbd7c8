//! Scheduling model for graph-state preparation.
//!
//! Every graph edge becomes a CNOT sandwiched between two Hadamards on its
//! target wire, and every vertex gets a preparation Hadamard. The model has
//! one direction boolean `C` per CNOT, exact start/end times `S`/`T` per gate
//! and one cancellation boolean `B` per Hadamard.
//!
//! Gate ids for `m` CNOTs on `n` vertices:
//!
//! | gate        | id              |
//! |-------------|-----------------|
//! | CNOT `f`    | `f`             |
//! | PREP `v`    | `m + v`         |
//! | PRE `f`     | `m + n + 2f`    |
//! | POST `f`    | `m + n + 2f + 1`|
//!
//! Internally wires are graph vertices; `placement[v]` is the physical qubit.

mod constraints;
mod oracle;
mod smtlib;
mod solve;

use std::fmt;

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::device::DeviceCalibration;
use crate::graph::GraphSpec;
use crate::placement::Embedding;

pub use constraints::{check_solution, Atom, Constraint, Formula, TimeVar, Violation};
pub use oracle::{oracle_search, ORACLE_CAP};
pub use smtlib::{emit_smtlib, parse_external_solution, run_external_solver};
pub use solve::{canonicalize, solve_exact, solve_exact_with, SolveOptions, DEFAULT_EXACT_CAP};

pub type Time = Rational64;

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("embedding does not match graph: {0}")]
    EmbeddingMismatch(String),
    #[error("CNOT on qubits {qubits:?} lasts {cnot_ns} ns, shorter than a {sq_ns} ns Hadamard on its wire")]
    DurationTooShort {
        qubits: (usize, usize),
        cnot_ns: u64,
        sq_ns: u64,
    },
    #[error("{cnots} CNOTs exceed the exact-search cap of {cap}")]
    CapExceeded { cnots: usize, cap: usize },
    #[error("no feasible schedule found")]
    Infeasible,
    #[error("solver reported unsat")]
    Unsat,
    #[error("solver output: {0}")]
    SolverOutput(String),
    #[error("variable {0} missing from solver model")]
    MissingVariable(String),
    #[error("external solver: {0}")]
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GateKind {
    Cnot,
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Origin {
    /// CNOT for graph edge `e` (index into the sorted edge list).
    Edge(usize),
    /// Preparation Hadamard of vertex `v`.
    Prep(usize),
    /// Hadamard before CNOT `f` on its target wire.
    Pre(usize),
    /// Hadamard after CNOT `f` on its target wire.
    Post(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateId {
    pub kind: GateKind,
    pub id: usize,
    /// Physical qubits. CNOTs list the placed coupler endpoints `(a, b)`;
    /// PREP lists its qubit; PRE/POST list the CNOT's endpoints, of which the
    /// target (fixed by `C`) is the actual wire.
    pub qubits: Vec<usize>,
    pub origin: Origin,
}

/// One CNOT as placed on a coupler.
#[derive(Debug, Clone, PartialEq)]
pub struct CnotInfo {
    /// Graph vertex sitting on coupler endpoint `a`.
    pub a: usize,
    /// Graph vertex sitting on coupler endpoint `b`.
    pub b: usize,
    pub duration_ab: i64,
    pub duration_ba: i64,
}

impl CnotInfo {
    /// `C = true` means the vertex on coupler endpoint `a` controls.
    pub fn control(&self, c: bool) -> usize {
        if c {
            self.a
        } else {
            self.b
        }
    }

    pub fn target(&self, c: bool) -> usize {
        if c {
            self.b
        } else {
            self.a
        }
    }

    pub fn duration(&self, c: bool) -> i64 {
        if c {
            self.duration_ab
        } else {
            self.duration_ba
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ObjectiveKind {
    MaxCancellation,
    MinMakespan,
    MaxRemainingCoherence,
    /// Cancellations first, then makespan.
    SmtRuntime,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::MaxCancellation,
        ObjectiveKind::MinMakespan,
        ObjectiveKind::MaxRemainingCoherence,
        ObjectiveKind::SmtRuntime,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Objective {
    pub selector: ObjectiveKind,
    pub crosstalk_free: bool,
}

impl Objective {
    pub fn new(selector: ObjectiveKind) -> Self {
        Self {
            selector,
            crosstalk_free: false,
        }
    }

    pub fn with_crosstalk(mut self, on: bool) -> Self {
        self.crosstalk_free = on;
        self
    }
}

/// Assignment to every model variable.
///
/// `s`, `t` and `b` are indexed by gate id; `b` entries at CNOT ids are
/// unused and must stay `false`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelVars {
    pub c: Vec<bool>,
    pub s: Vec<Time>,
    pub t: Vec<Time>,
    pub b: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveValue {
    Count(i64),
    Time(Time),
    Lex { canceled: i64, makespan: Time },
}

impl ObjectiveValue {
    /// Smaller is better.
    pub fn key(&self, kind: ObjectiveKind) -> (i64, Time) {
        let zero = Time::from_integer(0);
        match (kind, *self) {
            (ObjectiveKind::MaxCancellation, ObjectiveValue::Count(c)) => (-c, zero),
            (ObjectiveKind::MinMakespan, ObjectiveValue::Time(t)) => (0, t),
            (ObjectiveKind::MaxRemainingCoherence, ObjectiveValue::Time(m)) => (0, -m),
            (ObjectiveKind::SmtRuntime, ObjectiveValue::Lex { canceled, makespan }) => {
                (-canceled, makespan)
            }
            (k, v) => panic!("objective value {v:?} does not belong to {k:?}"),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match *self {
            ObjectiveValue::Count(c) => c.into(),
            ObjectiveValue::Time(t) => time_json(t),
            ObjectiveValue::Lex { canceled, makespan } => {
                serde_json::json!([canceled, time_json(makespan)])
            }
        }
    }
}

fn time_json(t: Time) -> serde_json::Value {
    if t.is_integer() {
        (*t.numer()).into()
    } else {
        t.to_string().into()
    }
}

impl fmt::Display for ObjectiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveValue::Count(c) => write!(f, "{c}"),
            ObjectiveValue::Time(t) => write!(f, "{t}"),
            ObjectiveValue::Lex { canceled, makespan } => write!(f, "{canceled} {makespan}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub vars: ModelVars,
    pub objective_value: ObjectiveValue,
    pub proven_optimal: bool,
}

#[derive(Debug, Clone)]
pub struct SchedModel {
    pub graph: GraphSpec,
    /// `placement[v]` is the physical qubit of vertex `v`.
    pub placement: Vec<usize>,
    pub gates: Vec<GateId>,
    /// One per graph edge, in sorted edge order.
    pub cnots: Vec<CnotInfo>,
    /// Hadamard duration per vertex wire.
    pub h_duration: Vec<i64>,
    /// Coherence time `D_q` per vertex wire, whole nanoseconds.
    pub coherence: Vec<i64>,
    /// CNOT ids incident to each vertex wire, ascending.
    pub wire_cnots: Vec<Vec<usize>>,
    /// CNOT pairs on disjoint wires joined by a coupler; empty unless the
    /// objective asks for crosstalk-free schedules.
    pub crosstalk_pairs: Vec<(usize, usize)>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

pub fn build_model(
    g: &GraphSpec,
    e: &Embedding,
    cal: &DeviceCalibration,
    obj: Objective,
) -> Result<SchedModel, SchedError> {
    let n = g.n();
    let mapping = &e.mapping;
    if mapping.len() != n {
        return Err(SchedError::EmbeddingMismatch(format!(
            "{} mapped vertices for a {n}-vertex graph",
            mapping.len()
        )));
    }
    let mut h_duration = Vec::with_capacity(n);
    let mut coherence = Vec::with_capacity(n);
    for (v, &q) in mapping.iter().enumerate() {
        if mapping[..v].contains(&q) {
            return Err(SchedError::EmbeddingMismatch(format!(
                "qubit {q} used twice"
            )));
        }
        let pq = cal
            .qubit(q)
            .ok_or_else(|| SchedError::EmbeddingMismatch(format!("qubit {q} not on device")))?;
        h_duration.push(pq.sq_duration_ns as i64);
        coherence.push(pq.coherence_ns());
    }
    let mut cnots = Vec::with_capacity(g.edges().len());
    for &(u, v) in g.edges() {
        let (qu, qv) = (mapping[u], mapping[v]);
        let cp = cal.coupler(qu, qv).ok_or_else(|| {
            SchedError::EmbeddingMismatch(format!(
                "edge ({u}, {v}) maps to non-coupler ({qu}, {qv})"
            ))
        })?;
        let (a, b) = if cp.a == qu { (u, v) } else { (v, u) };
        let longest_h = h_duration[u].max(h_duration[v]) as u64;
        let shortest = cp.duration_ab_ns.min(cp.duration_ba_ns);
        if shortest < longest_h {
            return Err(SchedError::DurationTooShort {
                qubits: (cp.a, cp.b),
                cnot_ns: shortest,
                sq_ns: longest_h,
            });
        }
        cnots.push(CnotInfo {
            a,
            b,
            duration_ab: cp.duration_ab_ns as i64,
            duration_ba: cp.duration_ba_ns as i64,
        });
    }
    let m = cnots.len();
    let mut gates = Vec::with_capacity(n + 3 * m);
    for (f, c) in cnots.iter().enumerate() {
        gates.push(GateId {
            kind: GateKind::Cnot,
            id: f,
            qubits: vec![mapping[c.a], mapping[c.b]],
            origin: Origin::Edge(f),
        });
    }
    for (v, &q) in mapping.iter().enumerate() {
        gates.push(GateId {
            kind: GateKind::Hadamard,
            id: m + v,
            qubits: vec![q],
            origin: Origin::Prep(v),
        });
    }
    for (f, c) in cnots.iter().enumerate() {
        for (k, origin) in [Origin::Pre(f), Origin::Post(f)].into_iter().enumerate() {
            gates.push(GateId {
                kind: GateKind::Hadamard,
                id: m + n + 2 * f + k,
                qubits: vec![mapping[c.a], mapping[c.b]],
                origin,
            });
        }
    }
    let wire_cnots = (0..n)
        .map(|v| (0..m).filter(|&f| cnots[f].touches(v)).collect())
        .collect();
    let mut crosstalk_pairs = Vec::new();
    if obj.crosstalk_free {
        for i in 0..m {
            for j in i + 1..m {
                let (ci, cj) = (&cnots[i], &cnots[j]);
                let wi = [ci.a, ci.b];
                let wj = [cj.a, cj.b];
                if wi.iter().any(|v| wj.contains(v)) {
                    continue;
                }
                let adjacent = wi.iter().any(|&x| {
                    wj.iter()
                        .any(|&y| cal.coupler(mapping[x], mapping[y]).is_some())
                });
                if adjacent {
                    crosstalk_pairs.push((i, j));
                }
            }
        }
    }
    let mut model = SchedModel {
        graph: g.clone(),
        placement: mapping.clone(),
        gates,
        cnots,
        h_duration,
        coherence,
        wire_cnots,
        crosstalk_pairs,
        constraints: Vec::new(),
        objective: obj,
    };
    model.constraints = constraints::materialize(&model);
    Ok(model)
}

impl SchedModel {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn cnot_count(&self) -> usize {
        self.cnots.len()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates.len() - self.cnots.len()
    }

    pub fn prep_id(&self, v: usize) -> usize {
        self.cnots.len() + v
    }

    pub fn pre_id(&self, f: usize) -> usize {
        self.cnots.len() + self.n() + 2 * f
    }

    pub fn post_id(&self, f: usize) -> usize {
        self.pre_id(f) + 1
    }

    pub fn is_hadamard(&self, id: usize) -> bool {
        id >= self.cnots.len()
    }

    /// Vertex wire of a Hadamard under the given directions.
    pub fn hadamard_wire(&self, id: usize, c: &[bool]) -> usize {
        match self.gates[id].origin {
            Origin::Prep(v) => v,
            Origin::Pre(f) | Origin::Post(f) => self.cnots[f].target(c[f]),
            Origin::Edge(_) => panic!("gate {id} is a CNOT"),
        }
    }

    /// Vertex wires touched by a gate under the given directions.
    pub fn gate_wires(&self, id: usize, c: &[bool]) -> Vec<usize> {
        if self.is_hadamard(id) {
            vec![self.hadamard_wire(id, c)]
        } else {
            let f = &self.cnots[id];
            vec![f.control(c[id]), f.target(c[id])]
        }
    }

    /// Calibrated duration of a gate under the given directions.
    pub fn gate_duration(&self, id: usize, c: &[bool]) -> i64 {
        if self.is_hadamard(id) {
            self.h_duration[self.hadamard_wire(id, c)]
        } else {
            self.cnots[id].duration(c[id])
        }
    }

    pub fn canceled_count(&self, vars: &ModelVars) -> i64 {
        (self.cnots.len()..self.gates.len())
            .filter(|&h| vars.b[h])
            .count() as i64
    }

    pub fn makespan(&self, vars: &ModelVars) -> Time {
        vars.t.iter().copied().max().unwrap_or_default()
    }

    /// End of the last non-canceled gate on each vertex wire.
    pub fn wire_ends(&self, vars: &ModelVars) -> Vec<Time> {
        let mut ends = vec![Time::from_integer(0); self.n()];
        for id in 0..self.gates.len() {
            if self.is_hadamard(id) && vars.b[id] {
                continue;
            }
            for w in self.gate_wires(id, &vars.c) {
                ends[w] = ends[w].max(vars.t[id]);
            }
        }
        ends
    }

    /// `min_q (D_q - T_q)`.
    pub fn remaining_coherence(&self, vars: &ModelVars) -> Time {
        self.wire_ends(vars)
            .into_iter()
            .zip(&self.coherence)
            .map(|(end, &d)| Time::from_integer(d) - end)
            .min()
            .unwrap_or_default()
    }

    pub fn objective_value(&self, vars: &ModelVars) -> ObjectiveValue {
        match self.objective.selector {
            ObjectiveKind::MaxCancellation => ObjectiveValue::Count(self.canceled_count(vars)),
            ObjectiveKind::MinMakespan => ObjectiveValue::Time(self.makespan(vars)),
            ObjectiveKind::MaxRemainingCoherence => {
                ObjectiveValue::Time(self.remaining_coherence(vars))
            }
            ObjectiveKind::SmtRuntime => ObjectiveValue::Lex {
                canceled: self.canceled_count(vars),
                makespan: self.makespan(vars),
            },
        }
    }

    /// Same model with a different objective; the constraint set only
    /// depends on the crosstalk flag.
    pub fn with_selector(&self, selector: ObjectiveKind) -> SchedModel {
        let mut m = self.clone();
        m.objective.selector = selector;
        m
    }
}

#[cfg(test)]
mod tests;
