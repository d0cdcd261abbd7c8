use proptest::prelude::*;

use super::*;
use crate::device::DeviceCalibration;
use crate::graph::{builtin, fig1_seven, linear_graph, star_graph, GraphSpec};
use crate::placement::{best_placement, Embedding};

fn r(x: i64) -> Time {
    Time::from_integer(x)
}

/// Device identical to the graph, identity placement.
fn on_itself(g: &GraphSpec, sq: u64, cx: u64) -> (DeviceCalibration, Embedding) {
    let cal = DeviceCalibration::uniform(g.n(), g.edges(), sq, cx, 100.0).unwrap();
    (cal, Embedding::unscored((0..g.n()).collect()))
}

fn model(g: &GraphSpec, kind: ObjectiveKind) -> SchedModel {
    let (cal, e) = on_itself(g, 35, 300);
    build_model(g, &e, &cal, Objective::new(kind)).unwrap()
}

fn assert_sound(m: &SchedModel, s: &Solution) {
    let bad = check_solution(m, s);
    assert!(bad.is_empty(), "violations: {bad:?}");
}

#[test]
fn gate_counts() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    assert_eq!((m.cnot_count(), m.hadamard_count()), (1, 4));
    let m = model(&linear_graph(3).unwrap(), ObjectiveKind::MinMakespan);
    assert_eq!((m.cnot_count(), m.hadamard_count()), (2, 7));
    assert_eq!(m.gates[m.pre_id(1)].origin, Origin::Pre(1));
    assert_eq!(m.gates[m.prep_id(2)].origin, Origin::Prep(2));
}

#[test]
fn single_edge_makespan() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    let s = solve_exact(&m).unwrap();
    assert_sound(&m, &s);
    assert_eq!(s.objective_value, ObjectiveValue::Time(r(370)));
    assert!(s.proven_optimal);
    let v = &s.vars;
    let ctl = m.cnots[0].control(v.c[0]);
    let tgt = m.cnots[0].target(v.c[0]);
    assert_eq!((v.s[m.prep_id(ctl)], v.t[m.prep_id(ctl)]), (r(0), r(35)));
    assert_eq!((v.s[0], v.t[0]), (r(35), r(335)));
    assert!(v.b[m.prep_id(tgt)] && v.b[m.pre_id(0)] && !v.b[m.post_id(0)]);
    assert_eq!((v.s[m.post_id(0)], v.t[m.post_id(0)]), (r(335), r(370)));
    assert_eq!(
        oracle_search(&m).unwrap().objective_value,
        s.objective_value
    );
}

#[test]
fn linear_three_runtime() {
    let m = model(&linear_graph(3).unwrap(), ObjectiveKind::SmtRuntime);
    for s in [solve_exact(&m).unwrap(), oracle_search(&m).unwrap()] {
        assert_sound(&m, &s);
        assert_eq!(
            s.objective_value,
            ObjectiveValue::Lex {
                canceled: 4,
                makespan: r(670)
            }
        );
        for f in 0..2 {
            assert_eq!(m.cnots[f].target(s.vars.c[f]), 1);
        }
    }
    assert_eq!(
        oracle_search(&m.with_selector(ObjectiveKind::MinMakespan))
            .unwrap()
            .objective_value
            .to_string(),
        "670"
    );
}

#[test]
fn linear_five_cancellation() {
    let m = model(&linear_graph(5).unwrap(), ObjectiveKind::MaxCancellation);
    let o = oracle_search(&m).unwrap();
    assert_eq!(o.objective_value, ObjectiveValue::Count(8));
    assert_eq!(m.hadamard_count() as i64 - 8, 5);
    assert_eq!(solve_exact(&m).unwrap().objective_value, o.objective_value);
}

#[test]
fn equal_durations_cancel_maximally() {
    for name in ["linear:4", "star:5", "ring:4", "fig1-seven"] {
        let g = builtin(name).unwrap();
        let m = model(&g, ObjectiveKind::MaxCancellation);
        let s = solve_exact(&m).unwrap();
        assert_sound(&m, &s);
        if m.cnot_count() <= ORACLE_CAP {
            assert_eq!(
                oracle_search(&m).unwrap().objective_value,
                s.objective_value,
                "{name}"
            );
        }
    }
}

#[test]
fn overlap_fault_is_reported() {
    let m = model(&linear_graph(3).unwrap(), ObjectiveKind::MinMakespan);
    let mut s = solve_exact(&m).unwrap();
    // pull CNOT 1 back onto CNOT 0 on the shared wire
    let shift = s.vars.s[1] - s.vars.s[0];
    s.vars.s[1] -= shift;
    s.vars.t[1] -= shift;
    let labels: Vec<_> = check_solution(&m, &s)
        .into_iter()
        .map(|v| v.label)
        .collect();
    assert!(labels.contains(&"cnot-overlap"), "{labels:?}");
}

#[test]
fn bogus_cancellation_is_reported() {
    let m = model(&linear_graph(3).unwrap(), ObjectiveKind::MinMakespan);
    let mut s = solve_exact(&m).unwrap();
    let prep = (0..3)
        .map(|v| m.prep_id(v))
        .find(|&h| !s.vars.b[h])
        .unwrap();
    s.vars.b[prep] = true;
    let labels: Vec<_> = check_solution(&m, &s)
        .into_iter()
        .map(|v| v.label)
        .collect();
    assert!(labels.contains(&"cancel-window"), "{labels:?}");
}

#[test]
fn wrong_shapes_are_domain_violations() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    let mut s = solve_exact(&m).unwrap();
    s.vars.s.pop();
    assert_eq!(check_solution(&m, &s)[0].label, "domain");
}

#[test]
fn mismatched_embedding() {
    let g = linear_graph(3).unwrap();
    let (cal, _) = on_itself(&g, 35, 300);
    let bad = Embedding::unscored(vec![0, 2, 1]);
    assert!(matches!(
        build_model(&g, &bad, &cal, Objective::new(ObjectiveKind::MinMakespan)),
        Err(SchedError::EmbeddingMismatch(_))
    ));
}

#[test]
fn cnot_shorter_than_hadamard_is_rejected() {
    let g = linear_graph(2).unwrap();
    let (cal, e) = on_itself(&g, 35, 20);
    assert!(matches!(
        build_model(&g, &e, &cal, Objective::new(ObjectiveKind::MinMakespan)),
        Err(SchedError::DurationTooShort { .. })
    ));
}

#[test]
fn caps() {
    let m = model(&linear_graph(8).unwrap(), ObjectiveKind::MinMakespan);
    assert!(matches!(
        oracle_search(&m),
        Err(SchedError::CapExceeded { cnots: 7, cap: 6 })
    ));
    let m = model(&linear_graph(12).unwrap(), ObjectiveKind::MinMakespan);
    assert!(matches!(
        solve_exact(&m),
        Err(SchedError::CapExceeded { cnots: 11, cap: 10 })
    ));
}

#[test]
fn direction_flip_keeps_optimum() {
    for name in ["linear:2", "linear:3", "linear:5", "star:4", "fig1-seven"] {
        let g = builtin(name).unwrap();
        for kind in [ObjectiveKind::MinMakespan, ObjectiveKind::SmtRuntime] {
            let m = model(&g, kind);
            let s = solve_exact(&m).unwrap();
            let flipped: Vec<bool> = s.vars.c.iter().map(|c| !c).collect();
            let opts = SolveOptions {
                fixed_directions: Some(flipped),
                ..SolveOptions::default()
            };
            let f = solve_exact_with(&m, &opts).unwrap();
            assert_sound(&m, &f);
            assert_eq!(f.objective_value, s.objective_value, "{name} {kind:?}");
        }
    }
}

#[test]
fn crosstalk_pairs_serialize() {
    // 0-1-2-3 path: CNOTs (0,1) and (2,3) are coupled through 1-2
    let g = linear_graph(4).unwrap();
    let (cal, e) = on_itself(&g, 35, 300);
    let obj = Objective::new(ObjectiveKind::MinMakespan).with_crosstalk(true);
    let m = build_model(&g, &e, &cal, obj).unwrap();
    assert_eq!(m.crosstalk_pairs, vec![(0, 2)]);
    let s = solve_exact(&m).unwrap();
    assert_sound(&m, &s);
    let o = oracle_search(&m).unwrap();
    assert_sound(&m, &o);
    assert_eq!(s.objective_value, o.objective_value);
    let v = &s.vars;
    assert!(v.t[0] <= v.s[2] || v.t[2] <= v.s[0]);
    let free = solve_exact(&model(&g, ObjectiveKind::MinMakespan)).unwrap();
    assert!(
        free.objective_value.key(ObjectiveKind::MinMakespan)
            <= s.objective_value.key(ObjectiveKind::MinMakespan)
    );
}

#[test]
fn smt_declarations_match_gate_set() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::SmtRuntime);
    let text = emit_smtlib(&m);
    let reals = text
        .lines()
        .filter(|l| l.starts_with("(declare-const") && l.ends_with("Real)"))
        .count();
    let bools = text
        .lines()
        .filter(|l| l.starts_with("(declare-const") && l.ends_with("Bool)"))
        .count();
    assert_eq!((reals, bools), (10, 5));
    assert!(text.contains("(set-logic QF_LRA)"));
    let max = text.find("(maximize canceled)").unwrap();
    let min = text.find("(minimize makespan)").unwrap();
    assert!(max < min);
    assert_eq!(text, emit_smtlib(&m.clone()));
    let asserts = text.lines().filter(|l| l.starts_with("(assert")).count();
    assert_eq!(asserts, m.constraints.len());
}

fn fake_solver_output(m: &SchedModel, s: &Solution, skip: Option<&str>) -> String {
    let mut out = String::from("sat\n(\n");
    let mut push = |name: String, sort: &str, value: String| {
        if Some(name.as_str()) != skip {
            out.push_str(&format!("  (define-fun {name} () {sort}\n    {value})\n"));
        }
    };
    let real = |t: Time| {
        let body = |x: i64| {
            if x < 0 {
                format!("(- {}.0)", -x)
            } else {
                format!("{x}.0")
            }
        };
        if t.is_integer() {
            body(*t.numer())
        } else {
            format!("(/ {} {}.0)", body(*t.numer()), t.denom())
        }
    };
    for g in 0..m.gate_count() {
        push(format!("S_{g}"), "Real", real(s.vars.s[g]));
        push(format!("T_{g}"), "Real", real(s.vars.t[g]));
    }
    for f in 0..m.cnot_count() {
        push(format!("C_{f}"), "Bool", s.vars.c[f].to_string());
    }
    for h in m.cnot_count()..m.gate_count() {
        push(format!("B_{h}"), "Bool", s.vars.b[h].to_string());
    }
    out.push_str(")\n");
    out
}

#[test]
fn parse_round_trip() {
    let m = model(&linear_graph(3).unwrap(), ObjectiveKind::SmtRuntime);
    let s = solve_exact(&m).unwrap();
    let parsed = parse_external_solution(&m, &fake_solver_output(&m, &s, None)).unwrap();
    assert_eq!(parsed.vars, s.vars);
    assert_eq!(parsed.objective_value, s.objective_value);
    assert!(parsed.proven_optimal);
    assert_sound(&m, &parsed);
}

#[test]
fn parse_reports_missing_variable() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    let s = solve_exact(&m).unwrap();
    let err = parse_external_solution(&m, &fake_solver_output(&m, &s, Some("T_3"))).unwrap_err();
    assert!(matches!(&err, SchedError::MissingVariable(v) if v == "T_3"));
    assert!(err.to_string().contains("T_3"));
}

#[test]
fn parse_rejects_unsat_and_garbage() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    assert!(matches!(
        parse_external_solution(&m, "unsat\n"),
        Err(SchedError::Unsat)
    ));
    assert!(matches!(
        parse_external_solution(&m, "sat\n((("),
        Err(SchedError::SolverOutput(_))
    ));
    assert!(matches!(
        parse_external_solution(&m, "hello"),
        Err(SchedError::SolverOutput(_))
    ));
}

#[test]
fn parse_fractional_values() {
    let m = model(&linear_graph(2).unwrap(), ObjectiveKind::MinMakespan);
    let s = solve_exact(&m).unwrap();
    let text = fake_solver_output(&m, &s, None).replace(
        "(define-fun S_0 () Real\n    35.0)",
        "(define-fun S_0 () Real\n    (/ 70.0 2.0))",
    );
    assert_eq!(parse_external_solution(&m, &text).unwrap().vars, s.vars);
}

#[test]
fn large_linear_builds_and_emits() {
    let cal =
        crate::device::load_calibration(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample27.json"))
            .unwrap();
    let g = linear_graph(21).unwrap();
    let e = best_placement(&g, &cal).unwrap();
    let t0 = std::time::Instant::now();
    let m = build_model(&g, &e, &cal, Objective::new(ObjectiveKind::SmtRuntime)).unwrap();
    let text = emit_smtlib(&m);
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(m.cnot_count(), 20);
    assert_eq!(text, emit_smtlib(&m));
}

#[test]
fn fig1_and_star_solve() {
    for g in [fig1_seven(), star_graph(5).unwrap()] {
        let m = model(&g, ObjectiveKind::SmtRuntime);
        let s = solve_exact(&m).unwrap();
        assert_sound(&m, &s);
    }
}

fn small_graph() -> impl Strategy<Value = GraphSpec> {
    prop_oneof![
        (2usize..=6).prop_map(|n| linear_graph(n).unwrap()),
        (3usize..=5).prop_map(|n| star_graph(n).unwrap()),
        Just(builtin("ring:4").unwrap()),
        Just(builtin("triangle").unwrap()),
        Just(GraphSpec::new(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap()),
    ]
}

fn random_instance() -> impl Strategy<Value = (GraphSpec, Vec<(u64, u64)>, Vec<(u64, u64)>)> {
    small_graph().prop_flat_map(|g| {
        let n = g.n();
        let m = g.edges().len();
        (
            Just(g),
            proptest::collection::vec((150u64..600, 150u64..600), m),
            proptest::collection::vec((20u64..60, 1u64..400), n),
        )
    })
}

fn hetero(g: &GraphSpec, cx: &[(u64, u64)], q: &[(u64, u64)]) -> (DeviceCalibration, Embedding) {
    use crate::device::{Coupler, PhysicalQubit};
    let qubits = q
        .iter()
        .enumerate()
        .map(|(index, &(sq, coh))| PhysicalQubit {
            index,
            coherence_time_us: coh as f64,
            readout_p01: 0.0,
            readout_p10: 0.0,
            sq_duration_ns: sq,
            sq_error: 0.0,
        })
        .collect();
    let couplers = g
        .edges()
        .iter()
        .zip(cx)
        .map(|(&(a, b), &(ab, ba))| Coupler {
            a,
            b,
            duration_ab_ns: ab,
            duration_ba_ns: ba,
            error: 0.0,
        })
        .collect();
    (
        DeviceCalibration::new("random", qubits, couplers).unwrap(),
        Embedding::unscored((0..g.n()).collect()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_matches_oracle((g, cx, q) in random_instance()) {
        let (cal, e) = hetero(&g, &cx, &q);
        for kind in ObjectiveKind::ALL {
            let m = build_model(&g, &e, &cal, Objective::new(kind)).unwrap();
            let s = solve_exact(&m).unwrap();
            let o = oracle_search(&m).unwrap();
            prop_assert!(check_solution(&m, &s).is_empty(), "{:?}", check_solution(&m, &s));
            prop_assert!(check_solution(&m, &o).is_empty(), "{:?}", check_solution(&m, &o));
            prop_assert_eq!(s.objective_value, o.objective_value, "{:?}", kind);
            prop_assert_eq!(m.objective_value(&o.vars), o.objective_value);

            let canceled = m.canceled_count(&s.vars);
            prop_assert!(canceled % 2 == 0 && canceled <= 2 * m.cnot_count() as i64);
            let mut load = vec![Time::from_integer(0); m.n()];
            for id in 0..m.gate_count() {
                if m.is_hadamard(id) && s.vars.b[id] {
                    continue;
                }
                for w in m.gate_wires(id, &s.vars.c) {
                    load[w] += s.vars.t[id] - s.vars.s[id];
                }
            }
            prop_assert!(m.makespan(&s.vars) >= load.into_iter().max().unwrap());
        }
    }
}
