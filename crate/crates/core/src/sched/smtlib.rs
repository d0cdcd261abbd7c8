//! SMT-LIB 2 emission for optimizing solvers and parsing of their models.

use std::fmt::Write;
use std::path::PathBuf;
use std::process::Command;

use super::constraints::{on_wire, possible_wires};
use super::{ModelVars, ObjectiveKind, SchedError, SchedModel, Solution, Time};

/// Running maximum (or minimum) over `terms` as a chain of `define-fun`s.
/// Returns the name of the last definition.
fn fold_chain(out: &mut String, prefix: &str, terms: &[String], keep_max: bool) -> String {
    let cmp = if keep_max { ">=" } else { "<=" };
    let mut acc = terms[0].clone();
    for (k, term) in terms.iter().enumerate().skip(1) {
        let name = format!("{prefix}_{k}");
        writeln!(
            out,
            "(define-fun {name} () Real (ite ({cmp} {acc} {term}) {acc} {term}))"
        )
        .unwrap();
        acc = name;
    }
    if terms.len() == 1 {
        let name = format!("{prefix}_0");
        writeln!(out, "(define-fun {name} () Real {acc})").unwrap();
        acc = name;
    }
    acc
}

fn define_makespan(m: &SchedModel, out: &mut String) -> String {
    let terms: Vec<String> = (0..m.gate_count()).map(|g| format!("T_{g}")).collect();
    let last = fold_chain(out, "mk", &terms, true);
    writeln!(out, "(define-fun makespan () Real {last})").unwrap();
    "makespan".into()
}

fn define_slack(m: &SchedModel, out: &mut String) -> String {
    let mut slacks = Vec::new();
    for q in 0..m.n() {
        let terms: Vec<String> = (0..m.gate_count())
            .filter(|&g| possible_wires(m, g).contains(&q))
            .map(|g| match on_wire(m, g, q).to_smt().as_str() {
                "true" => format!("T_{g}"),
                cond => format!("(ite {cond} T_{g} 0.0)"),
            })
            .collect();
        let last = fold_chain(out, &format!("end{q}"), &terms, true);
        writeln!(out, "(define-fun wire_end_{q} () Real {last})").unwrap();
        slacks.push(format!("(- {}.0 wire_end_{q})", m.coherence[q]));
    }
    let last = fold_chain(out, "sl", &slacks, false);
    writeln!(out, "(define-fun remaining_coherence () Real {last})").unwrap();
    "remaining_coherence".into()
}

fn define_canceled(m: &SchedModel, out: &mut String) -> String {
    let terms: Vec<String> = (m.cnot_count()..m.gate_count())
        .map(|h| format!("(ite B_{h} 1.0 0.0)"))
        .collect();
    writeln!(out, "(define-fun canceled () Real (+ {}))", terms.join(" ")).unwrap();
    "canceled".into()
}

/// Complete optimization problem over linear real arithmetic with booleans.
/// Output depends only on the model, so identical models give identical text.
pub fn emit_smtlib(m: &SchedModel) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "; graph-state preparation schedule: {} wires, {} CNOTs, {} gates",
        m.n(),
        m.cnot_count(),
        m.gate_count()
    )
    .unwrap();
    writeln!(
        out,
        "; objective {:?}, crosstalk-free {}",
        m.objective.selector, m.objective.crosstalk_free
    )
    .unwrap();
    out.push_str("(set-logic QF_LRA)\n");
    out.push_str("(set-option :produce-models true)\n");
    out.push_str("(set-option :opt.priority lex)\n");
    for g in 0..m.gate_count() {
        writeln!(out, "(declare-const S_{g} Real)").unwrap();
        writeln!(out, "(declare-const T_{g} Real)").unwrap();
    }
    for f in 0..m.cnot_count() {
        writeln!(out, "(declare-const C_{f} Bool)").unwrap();
    }
    for h in m.cnot_count()..m.gate_count() {
        writeln!(out, "(declare-const B_{h} Bool)").unwrap();
    }
    let goals: Vec<(&str, String)> = match m.objective.selector {
        ObjectiveKind::MaxCancellation => vec![("maximize", define_canceled(m, &mut out))],
        ObjectiveKind::MinMakespan => vec![("minimize", define_makespan(m, &mut out))],
        ObjectiveKind::MaxRemainingCoherence => vec![("maximize", define_slack(m, &mut out))],
        ObjectiveKind::SmtRuntime => vec![
            ("maximize", define_canceled(m, &mut out)),
            ("minimize", define_makespan(m, &mut out)),
        ],
    };
    for c in &m.constraints {
        writeln!(out, "; {} {}", c.label, c.detail).unwrap();
        writeln!(out, "(assert {})", c.formula.to_smt()).unwrap();
    }
    for (dir, name) in goals {
        writeln!(out, "({dir} {name})").unwrap();
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SchedError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        match ch {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let list = stack.pop().expect("non-empty stack");
                stack
                    .last_mut()
                    .ok_or_else(|| SchedError::SolverOutput("unbalanced ')'".into()))?
                    .push(Sexp::List(list));
            }
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            '"' => {
                chars.next();
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
        if stack.is_empty() {
            return Err(SchedError::SolverOutput("unbalanced ')'".into()));
        }
    }
    if stack.len() != 1 {
        return Err(SchedError::SolverOutput("unbalanced '('".into()));
    }
    Ok(stack.pop().unwrap())
}

fn parse_decimal(s: &str) -> Option<Time> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty()
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let scale = 10i64.checked_pow(frac.len() as u32)?;
    Some(Time::new(digits, scale))
}

fn real_value(e: &Sexp) -> Option<Time> {
    match e {
        Sexp::Atom(a) => parse_decimal(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => real_value(x).map(|v| -v),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = real_value(y)?;
                if d == Time::from_integer(0) {
                    None
                } else {
                    Some(real_value(x)? / d)
                }
            }
            [Sexp::Atom(op), x, y] if op == "-" => Some(real_value(x)? - real_value(y)?),
            _ => None,
        },
    }
}

/// `S_k`, `T_k`, `C_k` or `B_k`; solvers also list the helper definitions.
fn is_decision_var(name: &str) -> bool {
    match name.split_once('_') {
        Some((p, k)) => {
            matches!(p, "S" | "T" | "C" | "B")
                && !k.is_empty()
                && k.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

enum Value {
    Real(Time),
    Bool(bool),
}

/// Read a `sat` answer plus `(get-model)` listing into a solution.
pub fn parse_external_solution(
    m: &SchedModel,
    solver_output: &str,
) -> Result<Solution, SchedError> {
    let top = parse_sexps(solver_output)?;
    let status = top.iter().find_map(|e| match e {
        Sexp::Atom(a) if a == "sat" || a == "unsat" || a == "unknown" => Some(a.as_str()),
        _ => None,
    });
    match status {
        Some("sat") => {}
        Some("unsat") => return Err(SchedError::Unsat),
        Some(other) => return Err(SchedError::SolverOutput(format!("solver answered {other}"))),
        None => return Err(SchedError::SolverOutput("no sat/unsat answer found".into())),
    }
    let mut values = std::collections::HashMap::new();
    let mut collect = |items: &[Sexp]| -> Result<(), SchedError> {
        if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), Sexp::Atom(sort), value] = items
        {
            if kw == "define-fun" && args.is_empty() && is_decision_var(name) {
                let v = match sort.as_str() {
                    "Bool" => match value {
                        Sexp::Atom(a) if a == "true" => Value::Bool(true),
                        Sexp::Atom(a) if a == "false" => Value::Bool(false),
                        _ => {
                            return Err(SchedError::SolverOutput(format!("bad boolean for {name}")))
                        }
                    },
                    "Real" | "Int" => Value::Real(real_value(value).ok_or_else(|| {
                        SchedError::SolverOutput(format!("bad numeral for {name}"))
                    })?),
                    _ => return Ok(()),
                };
                values.insert(name.clone(), v);
            }
        }
        Ok(())
    };
    for e in &top {
        if let Sexp::List(items) = e {
            if items.first() == Some(&Sexp::Atom("model".into())) {
                for d in &items[1..] {
                    if let Sexp::List(x) = d {
                        collect(x)?;
                    }
                }
            } else if matches!(items.first(), Some(Sexp::List(_))) {
                for d in items {
                    if let Sexp::List(x) = d {
                        collect(x)?;
                    }
                }
            } else {
                collect(items)?;
            }
        }
    }
    let real = |name: String| match values.get(&name) {
        Some(Value::Real(v)) => Ok(*v),
        _ => Err(SchedError::MissingVariable(name)),
    };
    let boolean = |name: String| match values.get(&name) {
        Some(Value::Bool(v)) => Ok(*v),
        _ => Err(SchedError::MissingVariable(name)),
    };
    let g = m.gate_count();
    let mut s = Vec::with_capacity(g);
    let mut t = Vec::with_capacity(g);
    for id in 0..g {
        s.push(real(format!("S_{id}"))?);
        t.push(real(format!("T_{id}"))?);
    }
    let c = (0..m.cnot_count())
        .map(|f| boolean(format!("C_{f}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut b = vec![false; g];
    for (h, slot) in b.iter_mut().enumerate().skip(m.cnot_count()) {
        *slot = boolean(format!("B_{h}"))?;
    }
    let vars = ModelVars { c, s, t, b };
    Ok(Solution {
        objective_value: m.objective_value(&vars),
        vars,
        proven_optimal: true,
    })
}

/// Write the problem to a temporary file, run `command <file>` and return
/// the solver's standard output.
pub fn run_external_solver(command: &str, smt: &str) -> Result<String, SchedError> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| SchedError::External("empty solver command".into()))?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let path: PathBuf =
        std::env::temp_dir().join(format!("gsprep-{}-{stamp}.smt2", std::process::id()));
    std::fs::write(&path, smt)
        .map_err(|e| SchedError::External(format!("{}: {e}", path.display())))?;
    let result = Command::new(program).args(parts).arg(&path).output();
    let _ = std::fs::remove_file(&path);
    let output = result.map_err(|e| SchedError::External(format!("cannot run {program}: {e}")))?;
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    if !output.status.success() && !stdout.contains("sat") {
        return Err(SchedError::External(format!(
            "{program} exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    Ok(stdout)
}
