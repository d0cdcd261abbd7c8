//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or validation failure, 2 graph not native to
//! the device, 3 problem exceeds a solver cap.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::circuit::{
    derive_circuit, export_circuit, import_circuit, ExportFormat, TimedCircuit,
    CIRCUIT_SCHEMA_VERSION,
};
use crate::device::{load_calibration, DeviceCalibration, CALIBRATION_SCHEMA_VERSION};
use crate::graph::{GraphSpec, GRAPH_SCHEMA_VERSION};
use crate::placement::{best_placement, enumerate_embeddings, Embedding, PlacementError};
use crate::sched::{
    build_model, canonicalize, emit_smtlib, oracle_search, parse_external_solution,
    run_external_solver, solve_exact, Objective, ObjectiveKind, SchedError, SchedModel, Solution,
};
use crate::sim::{estimate_fidelity, EstimateOptions, NoiseModel, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_NATIVE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

fn version() -> &'static str {
    Box::leak(
        format!(
            "{} (graph schema {GRAPH_SCHEMA_VERSION}, calibration schema {CALIBRATION_SCHEMA_VERSION}, circuit schema {CIRCUIT_SCHEMA_VERSION}, report schema {REPORT_SCHEMA_VERSION})",
            env!("CARGO_PKG_VERSION")
        )
        .into_boxed_str(),
    )
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "gsprep", version = version(), about = "Compile native graph-state preparation circuits")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place, schedule and write the timed circuit.
    Compile(CompileArgs),
    /// Best placement and the number of candidate embeddings.
    Place(Problem),
    /// Write the SMT-LIB optimization problem.
    EmitSmt(ModelArgs),
    /// Estimate the fidelity of a compiled circuit under calibrated noise.
    Simulate(SimulateArgs),
    /// Exhaustive reference optimum (at most 6 CNOTs).
    Oracle(ModelArgs),
}

#[derive(Debug, Args)]
pub struct Problem {
    /// Builtin name (linear:<n>, ring:<n>, star:<n>, fig1-seven, triangle) or graph file.
    #[arg(long)]
    pub graph: String,
    /// Calibration snapshot.
    #[arg(long, env = "GSPREP_CALIBRATION")]
    pub cal: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Cancellation,
    Runtime,
    Coherence,
    SmtRuntime,
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Cancellation => ObjectiveKind::MaxCancellation,
            ObjectiveArg::Runtime => ObjectiveKind::MinMakespan,
            ObjectiveArg::Coherence => ObjectiveKind::MaxRemainingCoherence,
            ObjectiveArg::SmtRuntime => ObjectiveKind::SmtRuntime,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub problem: Problem,
    /// Required for `compile`; defaults to smt-runtime elsewhere.
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Forbid simultaneous CNOTs on neighbouring couplers.
    #[arg(long)]
    pub crosstalk: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Builtin,
    EmitOnly,
    External(String),
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "builtin" => Ok(Backend::Builtin),
        "emit-only" => Ok(Backend::EmitOnly),
        "external" => Ok(Backend::External(String::new())),
        _ => match s.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(Backend::External(cmd.to_string())),
            _ => Err(format!(
                "unknown backend {s:?} (builtin, emit-only, external:<command>)"
            )),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Qasm,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// builtin, emit-only or external:<command>.
    #[arg(long, default_value = "builtin", value_parser = parse_backend)]
    pub backend: Backend,
    /// Solver command for `--backend external`; the problem file is appended.
    #[arg(long)]
    pub external_solver: Option<String>,
    /// Also write the SMT-LIB problem here.
    #[arg(long)]
    pub smt_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Circuit JSON written by `compile`.
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub mitigate: bool,
    /// Use exact readout expectations instead of sampled flips.
    #[arg(long)]
    pub analytic: bool,
    /// Calibration providing the noise model (noiseless if omitted).
    #[arg(long)]
    pub noise_from: Option<PathBuf>,
    /// Write the JSON report here as well as to standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Repeat with seeds `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<SchedError> for Failure {
    fn from(e: SchedError) -> Self {
        let code = match e {
            SchedError::CapExceeded { .. } => EXIT_CAP,
            _ => EXIT_FAILURE,
        };
        let mut message = e.to_string();
        if code == EXIT_CAP {
            message.push_str("; use --backend emit-only and an external solver");
        }
        Self { code, message }
    }
}

impl From<PlacementError> for Failure {
    fn from(e: PlacementError) -> Self {
        Self {
            code: EXIT_NOT_NATIVE,
            message: e.to_string(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::CapExceeded { .. } => EXIT_CAP,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load_problem(p: &Problem) -> Result<(GraphSpec, DeviceCalibration), Failure> {
    let g = GraphSpec::from_source(&p.graph)
        .map_err(|e| Failure::io(format!("graph {}: {e}", p.graph)))?;
    let cal = load_calibration(&p.cal).map_err(|e| Failure::io(e.to_string()))?;
    Ok((g, cal))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(e.to_string()))
        }
    }
}

fn model_for(args: &ModelArgs) -> Result<(SchedModel, Embedding), Failure> {
    let (g, cal) = load_problem(&args.problem)?;
    let e = best_placement(&g, &cal)?;
    let kind = args.objective.unwrap_or(ObjectiveArg::SmtRuntime);
    let obj = Objective::new(kind.into()).with_crosstalk(args.crosstalk);
    let m = build_model(&g, &e, &cal, obj)?;
    Ok((m, e))
}

fn cmd_place(p: &Problem) -> Result<(), Failure> {
    let (g, cal) = load_problem(p)?;
    let best = best_placement(&g, &cal)?;
    let candidates = enumerate_embeddings(&g, &cal).len();
    let report = json!({
        "mapping": best.mapping,
        "score": best.score,
        "candidates": candidates,
    });
    write_out(
        p.out.as_deref(),
        &(serde_json::to_string_pretty(&report).unwrap() + "\n"),
    )
}

fn cmd_emit(args: &ModelArgs) -> Result<(), Failure> {
    let (m, _) = model_for(args)?;
    write_out(args.problem.out.as_deref(), &emit_smtlib(&m))
}

fn cmd_oracle(args: &ModelArgs) -> Result<(), Failure> {
    let (m, _) = model_for(args)?;
    let s = oracle_search(&m)?;
    write_out(
        args.problem.out.as_deref(),
        &format!("{}\n", s.objective_value),
    )
}

fn summary(m: &SchedModel, e: &Embedding, s: &Solution, c: &TimedCircuit) -> Value {
    json!({
        "placement": e.mapping,
        "placement_score": e.score,
        "objective": m.objective.selector,
        "objective_value": s.objective_value.to_json(),
        "canceled": m.canceled_count(&s.vars),
        "makespan_ns": crate::sched::ObjectiveValue::Time(c.makespan).to_json(),
        "cnots": c.cnot_count(),
        "hadamards": c.hadamard_count(),
        "proven_optimal": s.proven_optimal,
    })
}

fn cmd_compile(args: &CompileArgs) -> Result<(), Failure> {
    if args.model.objective.is_none() {
        return Err(Failure::io("compile needs --objective"));
    }
    let (m, e) = model_for(&args.model)?;
    if let Some(path) = &args.smt_out {
        write_out(Some(path), &emit_smtlib(&m))?;
    }
    let solution = match &args.backend {
        Backend::EmitOnly => {
            return write_out(args.model.problem.out.as_deref(), &emit_smtlib(&m));
        }
        Backend::Builtin => solve_exact(&m)?,
        Backend::External(cmd) => {
            let cmd = if cmd.is_empty() {
                args.external_solver.as_deref().ok_or_else(|| {
                    Failure::io("--backend external needs --external-solver or external:<command>")
                })?
            } else {
                cmd.as_str()
            };
            let output = run_external_solver(cmd, &emit_smtlib(&m))?;
            canonicalize(&m, &parse_external_solution(&m, &output)?)
        }
    };
    let c = derive_circuit(&m, &solution).map_err(|e| Failure::io(e.to_string()))?;
    let format = match args.format {
        FormatArg::Json => ExportFormat::Json,
        FormatArg::Qasm => ExportFormat::QasmLike,
    };
    let text = export_circuit(&c, format).map_err(|e| Failure::io(e.to_string()))?;
    let report = serde_json::to_string_pretty(&summary(&m, &e, &solution, &c)).unwrap() + "\n";
    match &args.model.problem.out {
        Some(path) => {
            write_out(Some(path), &text)?;
            write_out(None, &report)
        }
        None => {
            eprint!("{report}");
            write_out(None, &text)
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.circuit)
        .map_err(|e| Failure::io(format!("{}: {e}", args.circuit.display())))?;
    let c = import_circuit(&text).map_err(|e| Failure::io(e.to_string()))?;
    c.validate().map_err(|e| Failure::io(e.to_string()))?;
    let nm = match &args.noise_from {
        Some(p) => NoiseModel::from_calibration(
            &load_calibration(p).map_err(|e| Failure::io(e.to_string()))?,
        ),
        None => NoiseModel::noiseless(),
    };
    if args.repeat == 0 {
        return Err(Failure::io("--repeat must be at least 1"));
    }
    let mut runs = Vec::with_capacity(args.repeat);
    for r in 0..args.repeat as u64 {
        let opts = EstimateOptions {
            shots: args.shots,
            seed: args.seed.wrapping_add(r),
            mitigate: args.mitigate,
            analytic: args.analytic,
        };
        runs.push(estimate_fidelity(&c, &nm, opts)?);
    }
    let report = if runs.len() == 1 {
        runs[0].to_json()
    } else {
        let mean = |f: &dyn Fn(&crate::sim::NoisyEstimate) -> Option<f64>| {
            let v: Option<Vec<f64>> = runs.iter().map(f).collect();
            v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        json!({
            "fidelity_raw": mean(&|r| Some(r.fidelity_raw)),
            "fidelity_mitigated": mean(&|r| r.fidelity_mitigated),
            "runs": runs.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    };
    let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    if let Some(path) = &args.report {
        write_out(Some(path), &text)?;
    }
    write_out(None, &text)
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        // a pool may already exist when called more than once in a process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Place(p) => cmd_place(p),
        Command::EmitSmt(a) => cmd_emit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

/// Parse the process arguments, run, and return the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
