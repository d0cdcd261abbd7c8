//! Constraint formulas over the model variables.
//!
//! Each constraint is a small boolean formula whose atoms compare gate start
//! and end times. The same formulas are evaluated exactly by
//! [`check_solution`] and printed verbatim into SMT-LIB, so the checker and
//! the external solver always see one constraint set.

use std::fmt;

use super::{ModelVars, Origin, SchedModel, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeVar {
    S(usize),
    T(usize),
}

impl TimeVar {
    fn value(self, v: &ModelVars) -> Time {
        match self {
            TimeVar::S(g) => v.s[g],
            TimeVar::T(g) => v.t[g],
        }
    }
}

impl fmt::Display for TimeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeVar::S(g) => write!(f, "S_{g}"),
            TimeVar::T(g) => write!(f, "T_{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    /// `x <= y`
    Le(TimeVar, TimeVar),
    /// `T_g - S_g = len`
    Span { gate: usize, len: i64 },
    /// `S_g >= 0`
    NonNeg(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    C(usize),
    B(usize),
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

pub(crate) fn le(x: TimeVar, y: TimeVar) -> Formula {
    Formula::Atom(Atom::Le(x, y))
}

pub(crate) fn not(f: Formula) -> Formula {
    match f {
        Formula::Const(b) => Formula::Const(!b),
        Formula::Not(inner) => *inner,
        other => Formula::Not(Box::new(other)),
    }
}

pub(crate) fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::Const(true) => {}
            Formula::Const(false) => return Formula::Const(false),
            Formula::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Formula::Const(true),
        1 => out.pop().unwrap(),
        _ => Formula::And(out),
    }
}

pub(crate) fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Formula::Const(false) => {}
            Formula::Const(true) => return Formula::Const(true),
            Formula::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Formula::Const(false),
        1 => out.pop().unwrap(),
        _ => Formula::Or(out),
    }
}

pub(crate) fn implies(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::Const(false), _) | (_, Formula::Const(true)) => Formula::Const(true),
        (Formula::Const(true), b) => b,
        (a, Formula::Const(false)) => not(a),
        (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
    }
}

fn iff(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::Const(true), x) | (x, Formula::Const(true)) => x,
        (Formula::Const(false), x) | (x, Formula::Const(false)) => not(x),
        (a, b) => Formula::Iff(Box::new(a), Box::new(b)),
    }
}

impl Formula {
    pub fn eval(&self, v: &ModelVars) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::C(f) => v.c[*f],
            Formula::B(h) => v.b[*h],
            Formula::Atom(Atom::Le(x, y)) => x.value(v) <= y.value(v),
            Formula::Atom(Atom::Span { gate, len }) => {
                v.t[*gate] - v.s[*gate] == Time::from_integer(*len)
            }
            Formula::Atom(Atom::NonNeg(g)) => v.s[*g] >= Time::from_integer(0),
            Formula::Not(f) => !f.eval(v),
            Formula::And(fs) => fs.iter().all(|f| f.eval(v)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(v)),
            Formula::Implies(a, b) => !a.eval(v) || b.eval(v),
            Formula::Iff(a, b) => a.eval(v) == b.eval(v),
        }
    }

    /// SMT-LIB 2 term.
    pub fn to_smt(&self) -> String {
        let mut out = String::new();
        self.write_smt(&mut out);
        out
    }

    fn write_smt(&self, out: &mut String) {
        use std::fmt::Write;
        let list = |out: &mut String, op: &str, fs: &[&Formula]| {
            out.push('(');
            out.push_str(op);
            for f in fs {
                out.push(' ');
                f.write_smt(out);
            }
            out.push(')');
        };
        match self {
            Formula::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            Formula::C(f) => write!(out, "C_{f}").unwrap(),
            Formula::B(h) => write!(out, "B_{h}").unwrap(),
            Formula::Atom(Atom::Le(x, y)) => write!(out, "(<= {x} {y})").unwrap(),
            Formula::Atom(Atom::Span { gate, len }) => {
                write!(out, "(= (- T_{gate} S_{gate}) {len})").unwrap()
            }
            Formula::Atom(Atom::NonNeg(g)) => write!(out, "(>= S_{g} 0)").unwrap(),
            Formula::Not(f) => list(out, "not", &[f]),
            Formula::And(fs) => list(out, "and", &fs.iter().collect::<Vec<_>>()),
            Formula::Or(fs) => list(out, "or", &fs.iter().collect::<Vec<_>>()),
            Formula::Implies(a, b) => list(out, "=>", &[a, b]),
            Formula::Iff(a, b) => list(out, "=", &[a, b]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Constraint family, e.g. `cnot-overlap`.
    pub label: &'static str,
    /// Which gates or wires it concerns.
    pub detail: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub label: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.detail)
    }
}

/// Every violated constraint, in model order. Shape mismatches between the
/// assignment and the model are reported as `domain` violations.
pub fn check_solution(m: &SchedModel, s: &super::Solution) -> Vec<Violation> {
    let v = &s.vars;
    let g = m.gate_count();
    let mut bad = Vec::new();
    if v.c.len() != m.cnot_count() || v.s.len() != g || v.t.len() != g || v.b.len() != g {
        bad.push(Violation {
            label: "domain",
            detail: format!(
                "expected {} directions and {g} gates, got {}/{}/{}/{}",
                m.cnot_count(),
                v.c.len(),
                v.s.len(),
                v.t.len(),
                v.b.len()
            ),
        });
        return bad;
    }
    if let Some(f) = (0..m.cnot_count()).find(|&f| v.b[f]) {
        bad.push(Violation {
            label: "domain",
            detail: format!("cancellation flag set on CNOT {f}"),
        });
    }
    for c in &m.constraints {
        if !c.formula.eval(v) {
            bad.push(Violation {
                label: c.label,
                detail: c.detail.clone(),
            });
        }
    }
    bad
}

/// Gate `id` sits on wire `q`, as a formula over the direction variables.
pub(crate) fn on_wire(m: &SchedModel, id: usize, q: usize) -> Formula {
    Sym { m }.on_wire(id, q)
}

pub(crate) fn possible_wires(m: &SchedModel, id: usize) -> Vec<usize> {
    Sym { m }.possible_wires(id)
}

/// Symbolic view of the gate/wire relations the constraints are built from.
struct Sym<'a> {
    m: &'a SchedModel,
}

impl Sym<'_> {
    /// Wires a gate may occupy, depending on directions.
    fn possible_wires(&self, id: usize) -> Vec<usize> {
        match self.m.gates[id].origin {
            Origin::Prep(v) => vec![v],
            Origin::Edge(f) | Origin::Pre(f) | Origin::Post(f) => {
                let c = &self.m.cnots[f];
                vec![c.a, c.b]
            }
        }
    }

    /// CNOT `f` has `q` as target.
    fn targets(&self, f: usize, q: usize) -> Formula {
        let c = &self.m.cnots[f];
        if q == c.b {
            Formula::C(f)
        } else if q == c.a {
            not(Formula::C(f))
        } else {
            Formula::Const(false)
        }
    }

    /// Gate `id` sits on wire `q`.
    fn on_wire(&self, id: usize, q: usize) -> Formula {
        match self.m.gates[id].origin {
            Origin::Prep(v) => Formula::Const(v == q),
            Origin::Edge(f) => Formula::Const(self.m.cnots[f].touches(q)),
            Origin::Pre(f) | Origin::Post(f) => self.targets(f, q),
        }
    }

    fn canceled(&self, id: usize) -> Formula {
        if self.m.is_hadamard(id) {
            Formula::B(id)
        } else {
            Formula::Const(false)
        }
    }

    fn disjoint(&self, x: usize, y: usize) -> Formula {
        or([
            le(TimeVar::T(x), TimeVar::S(y)),
            le(TimeVar::T(y), TimeVar::S(x)),
        ])
    }

    /// `f` is the first CNOT on wire `q`.
    fn first(&self, f: usize, q: usize) -> Formula {
        and(self.m.wire_cnots[q]
            .iter()
            .filter(|&&g| g != f)
            .map(|&g| le(TimeVar::T(f), TimeVar::S(g))))
    }

    /// `g` precedes `f` on wire `q` with no CNOT in between.
    fn immediately_before(&self, g: usize, f: usize, q: usize) -> Formula {
        and(std::iter::once(le(TimeVar::T(g), TimeVar::S(f))).chain(
            self.m.wire_cnots[q]
                .iter()
                .filter(|&&k| k != g && k != f)
                .map(|&k| {
                    or([
                        le(TimeVar::T(k), TimeVar::S(g)),
                        le(TimeVar::T(f), TimeVar::S(k)),
                    ])
                }),
        ))
    }
}

pub(crate) fn materialize(m: &SchedModel) -> Vec<Constraint> {
    let sym = Sym { m };
    let n = m.n();
    let nc = m.cnot_count();
    let mut out = Vec::new();
    let mut push = |label: &'static str, detail: String, formula: Formula| {
        if formula != Formula::Const(true) {
            out.push(Constraint {
                label,
                detail,
                formula,
            });
        }
    };
    let name = |id: usize| -> String {
        match m.gates[id].origin {
            Origin::Edge(f) => format!("cnot {f}"),
            Origin::Prep(v) => format!("prep {v}"),
            Origin::Pre(f) => format!("pre {f}"),
            Origin::Post(f) => format!("post {f}"),
        }
    };

    for id in 0..m.gate_count() {
        push("domain", name(id), Formula::Atom(Atom::NonNeg(id)));
    }

    // durations follow the resolved direction
    for (f, c) in m.cnots.iter().enumerate() {
        let span = |len| Formula::Atom(Atom::Span { gate: f, len });
        let formula = if c.duration_ab == c.duration_ba {
            span(c.duration_ab)
        } else {
            and([
                implies(Formula::C(f), span(c.duration_ab)),
                implies(not(Formula::C(f)), span(c.duration_ba)),
            ])
        };
        push("duration", name(f), formula);
    }
    for v in 0..n {
        let id = m.prep_id(v);
        push(
            "duration",
            name(id),
            Formula::Atom(Atom::Span {
                gate: id,
                len: m.h_duration[v],
            }),
        );
    }
    for (f, c) in m.cnots.iter().enumerate() {
        for id in [m.pre_id(f), m.post_id(f)] {
            let (da, db) = (m.h_duration[c.a], m.h_duration[c.b]);
            let span = |len| Formula::Atom(Atom::Span { gate: id, len });
            let formula = if da == db {
                span(da)
            } else {
                and([
                    implies(Formula::C(f), span(db)),
                    implies(not(Formula::C(f)), span(da)),
                ])
            };
            push("duration", name(id), formula);
        }
    }

    for f in 0..nc {
        let (pre, post) = (m.pre_id(f), m.post_id(f));
        push(
            "sandwich-pre",
            name(f),
            implies(not(Formula::B(pre)), le(TimeVar::T(pre), TimeVar::S(f))),
        );
        push(
            "sandwich-post",
            name(f),
            implies(not(Formula::B(post)), le(TimeVar::T(f), TimeVar::S(post))),
        );
    }

    for q in 0..n {
        let w = &m.wire_cnots[q];
        for (i, &f) in w.iter().enumerate() {
            for &g in &w[i + 1..] {
                push(
                    "cnot-overlap",
                    format!("cnot {f} / cnot {g} on wire {q}"),
                    sym.disjoint(f, g),
                );
            }
        }
    }

    // nothing else on a wire may sit between a CNOT targeting it and its own
    // non-canceled sandwich Hadamards
    for q in 0..n {
        for &f in &m.wire_cnots[q] {
            let (pre, post) = (m.pre_id(f), m.post_id(f));
            for &g in &m.wire_cnots[q] {
                if g == f {
                    continue;
                }
                let before = or([
                    and([Formula::B(pre), le(TimeVar::T(g), TimeVar::S(f))]),
                    and([not(Formula::B(pre)), le(TimeVar::T(g), TimeVar::S(pre))]),
                ]);
                let after = or([
                    and([Formula::B(post), le(TimeVar::T(f), TimeVar::S(g))]),
                    and([not(Formula::B(post)), le(TimeVar::T(post), TimeVar::S(g))]),
                ]);
                push(
                    "sandwich-span",
                    format!("cnot {g} outside sandwich of cnot {f} on wire {q}"),
                    implies(sym.targets(f, q), or([before, after])),
                );
            }
        }
    }

    // a Hadamard is canceled exactly when its window lies inside a CNOT that
    // targets its wire
    for h in nc..m.gate_count() {
        let mut witnesses = Vec::new();
        for q in sym.possible_wires(h) {
            for &k in &m.wire_cnots[q] {
                witnesses.push(and([
                    sym.on_wire(h, q),
                    sym.targets(k, q),
                    le(TimeVar::S(k), TimeVar::S(h)),
                    le(TimeVar::T(h), TimeVar::T(k)),
                ]));
            }
        }
        push("cancel-window", name(h), iff(Formula::B(h), or(witnesses)));
    }

    // non-canceled Hadamards occupy their wire exclusively
    for h in nc..m.gate_count() {
        for other in 0..m.gate_count() {
            if other == h || (m.is_hadamard(other) && other < h) {
                continue;
            }
            let other_wires = sym.possible_wires(other);
            for q in sym.possible_wires(h) {
                if !other_wires.contains(&q) {
                    continue;
                }
                let both_live = and([
                    sym.on_wire(h, q),
                    sym.on_wire(other, q),
                    not(Formula::B(h)),
                    not(sym.canceled(other)),
                ]);
                push(
                    "wire-exclusive",
                    format!("{} / {} on wire {q}", name(h), name(other)),
                    implies(both_live, sym.disjoint(h, other)),
                );
            }
        }
    }

    for v in 0..n {
        let prep = m.prep_id(v);
        for other in 0..m.gate_count() {
            if other == prep || !sym.possible_wires(other).contains(&v) {
                continue;
            }
            push(
                "prep-first",
                format!("{} before {}", name(prep), name(other)),
                implies(
                    and([not(Formula::B(prep)), sym.on_wire(other, v)]),
                    le(TimeVar::T(prep), TimeVar::S(other)),
                ),
            );
        }
    }

    // canceled Hadamards come in adjacent pairs on one wire
    for v in 0..n {
        let prep = m.prep_id(v);
        let partner = or(m.wire_cnots[v]
            .iter()
            .map(|&f| and([sym.targets(f, v), sym.first(f, v), Formula::B(m.pre_id(f))])));
        push(
            "cancel-pair",
            name(prep),
            implies(Formula::B(prep), partner),
        );
    }
    for f in 0..nc {
        let c = &m.cnots[f];
        let mut pre_partner = Vec::new();
        let mut post_partner = Vec::new();
        for q in [c.a, c.b] {
            let mut pre_options = vec![and([sym.first(f, q), Formula::B(m.prep_id(q))])];
            let mut post_options = Vec::new();
            for &g in &m.wire_cnots[q] {
                if g == f {
                    continue;
                }
                pre_options.push(and([
                    sym.targets(g, q),
                    sym.immediately_before(g, f, q),
                    Formula::B(m.post_id(g)),
                ]));
                post_options.push(and([
                    sym.targets(g, q),
                    sym.immediately_before(f, g, q),
                    Formula::B(m.pre_id(g)),
                ]));
            }
            pre_partner.push(and([sym.targets(f, q), or(pre_options)]));
            post_partner.push(and([sym.targets(f, q), or(post_options)]));
        }
        push(
            "cancel-pair",
            name(m.pre_id(f)),
            implies(Formula::B(m.pre_id(f)), or(pre_partner)),
        );
        push(
            "cancel-pair",
            name(m.post_id(f)),
            implies(Formula::B(m.post_id(f)), or(post_partner)),
        );
    }

    for &(i, j) in &m.crosstalk_pairs {
        push(
            "crosstalk",
            format!("cnot {i} / cnot {j}"),
            sym.disjoint(i, j),
        );
    }
    out
}
