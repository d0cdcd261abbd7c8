//! Timed circuits decoded from schedule solutions, plus the naive baseline
//! layout and file exports.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceCalibration;
use crate::graph::GraphSpec;
use crate::placement::Embedding;
use crate::sched::{check_solution, GateKind, Origin, SchedModel, Solution, Time};

/// Version of the circuit JSON layout written by [`export_circuit`].
pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("canceled Hadamards on wire {wire} do not form adjacent pairs: {detail}")]
    PairParity { wire: usize, detail: String },
    #[error("invalid circuit: {0}")]
    Validation(String),
    #[error("cannot export: {0}")]
    Export(String),
    #[error("cannot import circuit: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimedKind {
    H,
    Cx,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedGate {
    pub kind: TimedKind,
    /// Physical qubits; CNOTs list `[control, target]`.
    pub wires: Vec<usize>,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedCircuit {
    pub graph: GraphSpec,
    /// `placement[v]` is the physical qubit of vertex `v`.
    pub placement: Vec<usize>,
    /// Sorted by start time, then by model gate id.
    pub gates: Vec<TimedGate>,
    pub makespan: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    QasmLike,
}

impl TimedCircuit {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == TimedKind::Cx)
            .count()
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == TimedKind::H).count()
    }

    /// Gates touching each physical wire, in circuit order.
    pub fn wire_gates(&self) -> BTreeMap<usize, Vec<&TimedGate>> {
        let mut map: BTreeMap<usize, Vec<&TimedGate>> =
            self.placement.iter().map(|&q| (q, Vec::new())).collect();
        for g in &self.gates {
            for w in &g.wires {
                map.entry(*w).or_default().push(g);
            }
        }
        map
    }

    /// Structural checks: wires belong to the placement, windows are
    /// positive and non-negative, gates on one wire never overlap, the gate
    /// list is sorted and the makespan is the last end time.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let bad = |msg: String| Err(CircuitError::Validation(msg));
        if self.placement.len() != self.graph.n() {
            return bad("placement size differs from graph size".into());
        }
        let zero = Time::from_integer(0);
        for (i, g) in self.gates.iter().enumerate() {
            let arity = if g.kind == TimedKind::H { 1 } else { 2 };
            if g.wires.len() != arity {
                return bad(format!("gate {i} has {} wires", g.wires.len()));
            }
            if g.wires.iter().any(|w| !self.placement.contains(w)) {
                return bad(format!("gate {i} acts outside the placement"));
            }
            if arity == 2 && g.wires[0] == g.wires[1] {
                return bad(format!("gate {i} uses one wire twice"));
            }
            if g.start < zero || g.end <= g.start {
                return bad(format!("gate {i} has window [{}, {})", g.start, g.end));
            }
            if i > 0 && self.gates[i - 1].start > g.start {
                return bad(format!("gate {i} is out of start-time order"));
            }
        }
        for (w, gates) in self.wire_gates() {
            for pair in gates.windows(2) {
                if pair[1].start < pair[0].end {
                    return bad(format!(
                        "overlap on wire {w} at [{}, {})",
                        pair[1].start, pair[0].end
                    ));
                }
            }
        }
        let last = self.gates.iter().map(|g| g.end).max().unwrap_or(zero);
        if last != self.makespan {
            return bad(format!(
                "makespan {} but last gate ends at {last}",
                self.makespan
            ));
        }
        Ok(())
    }

    /// Checks every window against the calibrated duration of its gate.
    pub fn validate_durations(&self, cal: &DeviceCalibration) -> Result<(), CircuitError> {
        for (i, g) in self.gates.iter().enumerate() {
            let expected = match g.kind {
                TimedKind::H => cal.qubit(g.wires[0]).map(|q| q.sq_duration_ns),
                TimedKind::Cx => cal
                    .coupler(g.wires[0], g.wires[1])
                    .map(|c| c.duration_from(g.wires[0])),
            };
            match expected {
                Some(d) if Time::from_integer(d as i64) == g.end - g.start => {}
                Some(d) => {
                    return Err(CircuitError::Validation(format!(
                        "gate {i} lasts {} ns, calibration says {d} ns",
                        g.end - g.start
                    )))
                }
                None => {
                    return Err(CircuitError::Validation(format!(
                        "gate {i} has no calibrated counterpart"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Per-wire logical gate sequence of a solution: PREP, then the CNOTs on the
/// wire by start time, each targeting CNOT wrapped in its PRE and POST.
fn logical_sequence(m: &SchedModel, s: &Solution, q: usize) -> Vec<usize> {
    let mut cnots = m.wire_cnots[q].clone();
    cnots.sort_by_key(|&f| (s.vars.s[f], f));
    let mut seq = vec![m.prep_id(q)];
    for f in cnots {
        let targets = m.cnots[f].target(s.vars.c[f]) == q;
        if targets {
            seq.push(m.pre_id(f));
        }
        seq.push(f);
        if targets {
            seq.push(m.post_id(f));
        }
    }
    seq
}

fn check_pair_parity(m: &SchedModel, s: &Solution) -> Result<(), CircuitError> {
    for q in 0..m.n() {
        let mut pending: Option<usize> = None;
        for id in logical_sequence(m, s, q) {
            let canceled = m.is_hadamard(id) && s.vars.b[id];
            match (canceled, pending) {
                (true, None) => pending = Some(id),
                (true, Some(_)) => pending = None,
                (false, Some(p)) => {
                    return Err(CircuitError::PairParity {
                        wire: m.placement[q],
                        detail: format!("canceled gate {p} has no adjacent partner"),
                    })
                }
                (false, None) => {}
            }
        }
        if let Some(p) = pending {
            return Err(CircuitError::PairParity {
                wire: m.placement[q],
                detail: format!("canceled gate {p} is left unpaired"),
            });
        }
    }
    Ok(())
}

/// Drop canceled Hadamards, resolve CNOT directions and sort by time.
pub fn derive_circuit(m: &SchedModel, s: &Solution) -> Result<TimedCircuit, CircuitError> {
    if s.vars.b.len() != m.gate_count() || s.vars.c.len() != m.cnot_count() {
        return Err(CircuitError::Validation(
            "solution does not match model".into(),
        ));
    }
    check_pair_parity(m, s)?;
    let violations = check_solution(m, s);
    if let Some(v) = violations.first() {
        return Err(CircuitError::Validation(format!(
            "{} violated constraint(s), first {v}",
            violations.len()
        )));
    }
    let mut kept: Vec<(Time, usize, TimedGate)> = Vec::new();
    for (id, gate) in m.gates.iter().enumerate() {
        let (kind, wires) = match (gate.kind, gate.origin) {
            (GateKind::Cnot, Origin::Edge(f)) => {
                let c = &m.cnots[f];
                let dir = s.vars.c[f];
                (
                    TimedKind::Cx,
                    vec![m.placement[c.control(dir)], m.placement[c.target(dir)]],
                )
            }
            _ => {
                if s.vars.b[id] {
                    continue;
                }
                (
                    TimedKind::H,
                    vec![m.placement[m.hadamard_wire(id, &s.vars.c)]],
                )
            }
        };
        kept.push((
            s.vars.s[id],
            id,
            TimedGate {
                kind,
                wires,
                start: s.vars.s[id],
                end: s.vars.t[id],
            },
        ));
    }
    kept.sort_by_key(|(start, id, _)| (*start, *id));
    let gates: Vec<TimedGate> = kept.into_iter().map(|(_, _, g)| g).collect();
    let makespan = gates.iter().map(|g| g.end).max().unwrap_or_default();
    let c = TimedCircuit {
        graph: m.graph.clone(),
        placement: m.placement.clone(),
        gates,
        makespan,
    };
    c.validate()?;
    Ok(c)
}

/// Baseline without any optimization: all PREP Hadamards in parallel, then
/// one fully serialized H-CNOT-H block per edge in sorted edge order, with the
/// lower-numbered vertex as control.
pub fn naive_circuit(g: &GraphSpec, e: &Embedding, cal: &DeviceCalibration) -> TimedCircuit {
    let placement = e.mapping.clone();
    let sq = |q: usize| cal.qubit(q).expect("placed qubit on device").sq_duration_ns as i64;
    let mut gates = Vec::new();
    let mut t = 0;
    for &q in &placement {
        gates.push(TimedGate {
            kind: TimedKind::H,
            wires: vec![q],
            start: Time::from_integer(0),
            end: Time::from_integer(sq(q)),
        });
        t = t.max(sq(q));
    }
    for &(u, v) in g.edges() {
        let (ctl, tgt) = (placement[u], placement[v]);
        let d = cal
            .coupler(ctl, tgt)
            .expect("edge placed on a coupler")
            .duration_from(ctl) as i64;
        let h = sq(tgt);
        for (kind, wires, len) in [
            (TimedKind::H, vec![tgt], h),
            (TimedKind::Cx, vec![ctl, tgt], d),
            (TimedKind::H, vec![tgt], h),
        ] {
            gates.push(TimedGate {
                kind,
                wires,
                start: Time::from_integer(t),
                end: Time::from_integer(t + len),
            });
            t += len;
        }
    }
    TimedCircuit {
        graph: g.clone(),
        placement,
        gates,
        makespan: Time::from_integer(t),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    kind: TimedKind,
    wires: Vec<usize>,
    start_ns: i64,
    end_ns: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n: usize,
    placement: Vec<usize>,
    makespan_ns: i64,
    gates: Vec<GateRecord>,
}

fn whole_ns(t: Time) -> Result<i64, CircuitError> {
    if t.is_integer() {
        Ok(*t.numer())
    } else {
        Err(CircuitError::Export(format!(
            "time {t} ns is not a whole nanosecond"
        )))
    }
}

pub fn export_circuit(c: &TimedCircuit, format: ExportFormat) -> Result<String, CircuitError> {
    match format {
        ExportFormat::Json => {
            let file = CircuitFile {
                n: c.n(),
                placement: c.placement.clone(),
                makespan_ns: whole_ns(c.makespan)?,
                gates: c
                    .gates
                    .iter()
                    .map(|g| {
                        Ok(GateRecord {
                            kind: g.kind,
                            wires: g.wires.clone(),
                            start_ns: whole_ns(g.start)?,
                            end_ns: whole_ns(g.end)?,
                        })
                    })
                    .collect::<Result<_, CircuitError>>()?,
            };
            Ok(serde_json::to_string_pretty(&file).expect("circuit serializes") + "\n")
        }
        ExportFormat::QasmLike => to_qasm_like(c),
    }
}

/// OpenQASM-style listing where explicit `delay` instructions pad every wire
/// up to each gate's exact start time.
fn to_qasm_like(c: &TimedCircuit) -> Result<String, CircuitError> {
    let size = c.placement.iter().max().map_or(0, |m| m + 1);
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "// makespan {} ns", whole_ns(c.makespan)?).unwrap();
    writeln!(out, "qreg q[{size}];").unwrap();
    let mut clock: BTreeMap<usize, i64> = c.placement.iter().map(|&q| (q, 0)).collect();
    for g in &c.gates {
        let start = whole_ns(g.start)?;
        for w in &g.wires {
            let now = clock[w];
            if now < start {
                writeln!(out, "delay({}ns) q[{w}];", start - now).unwrap();
            }
        }
        match g.kind {
            TimedKind::H => writeln!(out, "h q[{}];", g.wires[0]).unwrap(),
            TimedKind::Cx => writeln!(out, "cx q[{}],q[{}];", g.wires[0], g.wires[1]).unwrap(),
        }
        for w in &g.wires {
            clock.insert(*w, whole_ns(g.end)?);
        }
    }
    Ok(out)
}

/// Inverse of the JSON export; the graph is rebuilt from the CX gates.
pub fn import_circuit(text: &str) -> Result<TimedCircuit, CircuitError> {
    let file: CircuitFile =
        serde_json::from_str(text).map_err(|e| CircuitError::Import(e.to_string()))?;
    if file.placement.len() != file.n {
        return Err(CircuitError::Import(format!(
            "placement lists {} qubits for n = {}",
            file.placement.len(),
            file.n
        )));
    }
    let vertex: BTreeMap<usize, usize> = file
        .placement
        .iter()
        .enumerate()
        .map(|(v, &q)| (q, v))
        .collect();
    let mut edges = Vec::new();
    let mut gates = Vec::new();
    for (i, r) in file.gates.into_iter().enumerate() {
        if r.kind == TimedKind::Cx {
            let ends: Option<Vec<usize>> = r.wires.iter().map(|q| vertex.get(q).copied()).collect();
            match ends.as_deref() {
                Some(&[a, b]) => edges.push((a, b)),
                _ => return Err(CircuitError::Import(format!("gate {i} has bad wires"))),
            }
        }
        gates.push(TimedGate {
            kind: r.kind,
            wires: r.wires,
            start: Time::from_integer(r.start_ns),
            end: Time::from_integer(r.end_ns),
        });
    }
    let graph = GraphSpec::new(file.n, edges).map_err(|e| CircuitError::Import(e.to_string()))?;
    let c = TimedCircuit {
        graph,
        placement: file.placement,
        gates,
        makespan: Time::from_integer(file.makespan_ns),
    };
    c.validate()
        .map_err(|e| CircuitError::Import(e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::linear_graph;
    use crate::sched::{build_model, solve_exact, Objective, ObjectiveKind};

    fn sym(n: usize) -> (GraphSpec, DeviceCalibration, Embedding) {
        let g = linear_graph(n).unwrap();
        let cal = DeviceCalibration::uniform(n, g.edges(), 35, 300, 100.0).unwrap();
        (g, cal, Embedding::unscored((0..n).collect()))
    }

    fn optimal(n: usize) -> (SchedModel, Solution) {
        let (g, cal, e) = sym(n);
        let m = build_model(&g, &e, &cal, Objective::new(ObjectiveKind::SmtRuntime)).unwrap();
        let s = solve_exact(&m).unwrap();
        (m, s)
    }

    fn gate(kind: TimedKind, wires: &[usize], start: i64, end: i64) -> TimedGate {
        TimedGate {
            kind,
            wires: wires.to_vec(),
            start: Time::from_integer(start),
            end: Time::from_integer(end),
        }
    }

    #[test]
    fn single_edge_circuit() {
        let (m, s) = optimal(2);
        let c = derive_circuit(&m, &s).unwrap();
        assert_eq!(
            c.gates,
            vec![
                gate(TimedKind::H, &[0], 0, 35),
                gate(TimedKind::Cx, &[0, 1], 35, 335),
                gate(TimedKind::H, &[1], 335, 370),
            ]
        );
        assert_eq!(c.makespan, Time::from_integer(370));
        let json: serde_json::Value =
            serde_json::from_str(&export_circuit(&c, ExportFormat::Json).unwrap()).unwrap();
        assert_eq!(json["gates"].as_array().unwrap().len(), 3);
        assert_eq!(json["makespan_ns"], 370);
    }

    #[test]
    fn linear_three_circuit() {
        let (m, s) = optimal(3);
        let c = derive_circuit(&m, &s).unwrap();
        assert_eq!(
            c.gates,
            vec![
                gate(TimedKind::H, &[0], 0, 35),
                gate(TimedKind::H, &[2], 0, 35),
                gate(TimedKind::Cx, &[0, 1], 35, 335),
                gate(TimedKind::Cx, &[2, 1], 335, 635),
                gate(TimedKind::H, &[1], 635, 670),
            ]
        );
    }

    #[test]
    fn odd_cancellation_is_rejected() {
        let (m, mut s) = optimal(2);
        let post = m.post_id(0);
        s.vars.b[post] = true;
        assert!(matches!(
            derive_circuit(&m, &s),
            Err(CircuitError::PairParity { wire: 1, .. })
        ));
    }

    #[test]
    fn naive_layout() {
        let (g, cal, e) = sym(3);
        let c = naive_circuit(&g, &e, &cal);
        c.validate().unwrap();
        c.validate_durations(&cal).unwrap();
        assert_eq!((c.hadamard_count(), c.cnot_count()), (7, 2));
        assert_eq!(c.makespan, Time::from_integer(35 + 2 * (35 + 300 + 35)));
        let (g, cal, e) = sym(2);
        let c = naive_circuit(&g, &e, &cal);
        assert_eq!((c.hadamard_count(), c.cnot_count()), (4, 1));
    }

    #[test]
    fn json_round_trip() {
        let (m, s) = optimal(3);
        let c = derive_circuit(&m, &s).unwrap();
        let text = export_circuit(&c, ExportFormat::Json).unwrap();
        assert_eq!(import_circuit(&text).unwrap(), c);
        let (g, cal, e) = sym(4);
        let naive = naive_circuit(&g, &e, &cal);
        let text = export_circuit(&naive, ExportFormat::Json).unwrap();
        assert_eq!(import_circuit(&text).unwrap(), naive);
    }

    #[test]
    fn fractional_times_do_not_export() {
        let (m, s) = optimal(2);
        let mut c = derive_circuit(&m, &s).unwrap();
        let half = Time::new(1, 2);
        for g in &mut c.gates {
            g.start += half;
            g.end += half;
        }
        c.makespan += half;
        assert!(matches!(
            export_circuit(&c, ExportFormat::Json),
            Err(CircuitError::Export(_))
        ));
    }

    #[test]
    fn qasm_delays_reach_gate_starts() {
        let (m, s) = optimal(3);
        let c = derive_circuit(&m, &s).unwrap();
        let text = export_circuit(&c, ExportFormat::QasmLike).unwrap();
        // replay the middle wire: delays plus gate durations up to its final H
        let mut clock = 0;
        let mut final_h_at = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("delay(") {
                if rest.ends_with("q[1];") {
                    clock += rest.split("ns").next().unwrap().parse::<i64>().unwrap();
                }
            } else if line == "h q[1];" {
                final_h_at = Some(clock);
                clock += 35;
            } else if line.starts_with("cx") && line.contains("q[1]") {
                clock += 300;
            }
        }
        assert_eq!(final_h_at, Some(635));
        assert!(text.contains("delay(35ns) q[1];"));
    }

    #[test]
    fn validation_catches_overlap() {
        let (m, s) = optimal(2);
        let mut c = derive_circuit(&m, &s).unwrap();
        c.gates[2].start = Time::from_integer(300);
        assert!(c.validate().is_err());
    }
}
