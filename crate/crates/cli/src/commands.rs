use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qcoord_core::{
    behavioral_from_joint, born_joint, build_diag_universal, build_thm1, build_thm2, check_classical_implementable,
    commutation_witness, discord_one_sided, eval_classical, eval_latent, fit_local_model, verify_model, worked_example,
    JointDistribution, Metric, ProcessSpec, SearchParams, Side,
};

use crate::error::CliError;
use crate::format::{
    parse_bundle_file, parse_distribution_file, parse_latent_model_file, parse_local_model_file, parse_process_file,
    parse_quantum_model_file, parse_states_file, parse_thm2_spec_file, BundleDoc, DecompositionDoc, DistributionDoc,
    LocalModelDoc, ProcessDoc, QuantumModelDoc,
};

/// Exit code for a negative verdict (infeasible, verification failure).
pub const EXIT_NEGATIVE: i32 = 1;
/// Exit code for malformed input of any kind.
pub const EXIT_INPUT: i32 = 2;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Tv,
    L2,
    Kl,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Tv => Metric::TotalVariation,
            MetricArg::L2 => Metric::L2,
            MetricArg::Kl => Metric::Kl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    A,
    B,
}

/// Classical and quantum implementability of joint distributions under
/// restricted information.
#[derive(Debug, Clone, Parser)]
#[command(name = "qcoord", version)]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "human", global = true)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate the joint distribution induced by a model.
    Eval {
        #[command(subcommand)]
        kind: EvalKind,
    },
    /// Decide whether a target is implementable by classical local rules.
    Check(TargetArgs),
    /// Fit the nearest classical local model.
    Fit {
        #[command(flatten)]
        input: TargetArgs,
        #[arg(long, value_enum, default_value = "tv")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = SearchParams::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = SearchParams::default().grid_step)]
        grid_step: f64,
        #[arg(long, default_value_t = SearchParams::default().max_iterations)]
        iterations: usize,
    },
    /// Kuhn conversion of a target into behavioral rules (perfect recall only).
    Behavioral(TargetArgs),
    /// Build a quantum implementation.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
        /// Write the document here instead of printing it.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Compare a quantum model's Born-rule distribution against a target.
    Verify {
        #[arg(long, conflicts_with_all = ["process", "model", "target"])]
        bundle: Option<PathBuf>,
        #[arg(long, requires_all = ["model", "target"])]
        process: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// One-sided discord of a two-subsystem model state.
    Discord {
        /// Quantum model file (or a bundle) with exactly two subsystems.
        #[arg(long)]
        model: PathBuf,
        /// The side that is measured; must be a qubit.
        #[arg(long, value_enum, default_value = "b")]
        side: SideArg,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Commutation witness of an ensemble of matrices.
    WitnessCc {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    #[arg(long)]
    pub process: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub process: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum EvalKind {
    Classical(ModelArgs),
    Latent(ModelArgs),
    Quantum(ModelArgs),
}

#[derive(Debug, Clone, Subcommand)]
pub enum ConstructKind {
    /// Diagonal construction from a latent-variable model.
    Thm1(ModelArgs),
    /// Two-stage construction with pure second-stage states.
    Thm2 {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Diagonal construction with the outcome tuple as latent label.
    DiagUniversal(TargetArgs),
    /// One of the worked examples: illex2, diagonal-flip, three-stage.
    Example { name: String },
}

/// Result of a run: the process exit code and the report text.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: String,
}

pub fn run_command(cfg: &RunConfig) -> Outcome {
    match dispatch(cfg) {
        Ok((exit_code, report)) => Outcome { exit_code, report },
        Err(e) => Outcome {
            exit_code: EXIT_INPUT,
            report: error_record(&e),
        },
    }
}

/// Single-line JSON record for a failed run.
pub fn error_record(e: &CliError) -> String {
    let mut s = json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string();
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_process(path: &Path) -> Result<ProcessSpec, CliError> {
    parse_process_file(&read(path)?)
}

fn load_target(path: &Path, proc: &ProcessSpec) -> Result<JointDistribution, CliError> {
    let t = parse_distribution_file(&read(path)?)?;
    t.check_against(proc)?;
    Ok(t)
}

fn to_value<T: serde::Serialize>(doc: &T) -> Value {
    serde_json::to_value(doc).expect("documents serialize")
}

/// Machine output is one compact line; human output is either a pretty
/// document or the lines in `human`.
fn emit(format: OutputFormat, value: &Value, human: Option<String>) -> String {
    match (format, human) {
        (OutputFormat::Machine, _) => format!("{value}\n"),
        (OutputFormat::Human, Some(text)) => text,
        (OutputFormat::Human, None) => {
            let mut s = serde_json::to_string_pretty(value).expect("values serialize");
            s.push('\n');
            s
        }
    }
}

/// Human-readable number: plain for ordinary magnitudes, scientific otherwise.
fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e6) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn fmt_prefix(p: &[usize]) -> String {
    format!("({})", p.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
}

fn dispatch(cfg: &RunConfig) -> Result<(i32, String), CliError> {
    let format = cfg.format;
    match &cfg.command {
        Command::Eval { kind } => {
            let (proc_path, model_path) = match kind {
                EvalKind::Classical(a) | EvalKind::Latent(a) | EvalKind::Quantum(a) => (&a.process, &a.model),
            };
            let proc = load_process(proc_path)?;
            let text = read(model_path)?;
            let dist = match kind {
                EvalKind::Classical(_) => eval_classical(&parse_local_model_file(&text)?, &proc)?,
                EvalKind::Latent(_) => eval_latent(&parse_latent_model_file(&text, &proc)?, &proc)?,
                EvalKind::Quantum(_) => born_joint(&parse_quantum_model_file(&text)?, &proc)?,
            };
            Ok((
                0,
                emit(format, &to_value(&DistributionDoc::from_distribution(&dist)), None),
            ))
        }

        Command::Check(a) => {
            let proc = load_process(&a.process)?;
            let target = load_target(&a.target, &proc)?;
            let r = check_classical_implementable(&target, &proc)?;
            let witness = r.witness.as_ref().map(|w| {
                json!({
                    "k": w.stage + 1,
                    "y": w.label,
                    "h": w.prefix,
                    "h2": w.other_prefix,
                    "gap": w.discrepancy,
                })
            });
            let certificate = r.certificate.as_ref().map(|m| to_value(&LocalModelDoc::from_model(m)));
            let value = json!({
                "feasible": r.feasible,
                "witness": witness,
                "certificate": certificate,
            });
            let mut human = String::new();
            writeln!(human, "verdict: {}", if r.feasible { "feasible" } else { "infeasible" }).unwrap();
            if let Some(w) = &r.witness {
                writeln!(
                    human,
                    "{}: stage {}, label {}, prefixes {} vs {}, gap {}",
                    if r.feasible { "largest discrepancy" } else { "witness" },
                    w.stage + 1,
                    w.label,
                    fmt_prefix(&w.prefix),
                    fmt_prefix(&w.other_prefix),
                    num(w.discrepancy)
                )
                .unwrap();
            }
            if let Some(m) = &r.certificate {
                writeln!(
                    human,
                    "certificate: {}",
                    serde_json::to_string(&LocalModelDoc::from_model(m)).unwrap()
                )
                .unwrap();
            }
            let code = if r.feasible { 0 } else { EXIT_NEGATIVE };
            Ok((code, emit(format, &value, Some(human))))
        }

        Command::Fit {
            input,
            metric,
            seed,
            restarts,
            grid_step,
            iterations,
        } => {
            let proc = load_process(&input.process)?;
            let target = load_target(&input.target, &proc)?;
            let params = SearchParams {
                seed: *seed,
                restarts: *restarts,
                grid_step: *grid_step,
                max_iterations: *iterations,
            };
            let r = fit_local_model(&target, &proc, (*metric).into(), &params)?;
            let value = json!({
                "metric": r.metric.name(),
                "distance": r.distance,
                "restarts_used": r.restarts_used,
                "iterations": r.iterations,
                "best_restart": r.best_restart,
                "model": to_value(&LocalModelDoc::from_model(&r.best_model)),
            });
            let human = format!(
                "metric: {}\ndistance: {} (upper bound on the classical gap)\nrestarts used: {}, sweeps: {}, best restart: {}\nmodel: {}\n",
                r.metric,
                num(r.distance),
                r.restarts_used,
                r.iterations,
                r.best_restart,
                serde_json::to_string(&LocalModelDoc::from_model(&r.best_model)).unwrap()
            );
            Ok((0, emit(format, &value, Some(human))))
        }

        Command::Behavioral(a) => {
            let proc = load_process(&a.process)?;
            let target = load_target(&a.target, &proc)?;
            let m = behavioral_from_joint(&target, &proc)?;
            Ok((0, emit(format, &to_value(&LocalModelDoc::from_model(&m)), None)))
        }

        Command::Construct { kind, out } => {
            let doc = match kind {
                ConstructKind::Thm1(a) => {
                    let proc = load_process(&a.process)?;
                    let latent = parse_latent_model_file(&read(&a.model)?, &proc)?;
                    let target = eval_latent(&latent, &proc)?;
                    let c = build_thm1(&latent, &proc)?;
                    BundleDoc {
                        process: ProcessDoc::from_spec(&proc),
                        model: QuantumModelDoc::from_model(&c.model),
                        target: DistributionDoc::from_distribution(&target),
                        decomposition: Some(DecompositionDoc::from_decomposition(&c.decomposition)),
                        diagnostics: None,
                    }
                }
                ConstructKind::Thm2 { spec } => {
                    let c = build_thm2(&parse_thm2_spec_file(&read(spec)?)?)?;
                    BundleDoc {
                        process: ProcessDoc::from_spec(&c.process),
                        model: QuantumModelDoc::from_model(&c.construction.model),
                        target: DistributionDoc::from_distribution(&c.target),
                        decomposition: Some(DecompositionDoc::from_decomposition(&c.construction.decomposition)),
                        diagnostics: Some(BTreeMap::from([
                            ("commutation_witness".to_string(), c.commutation_witness),
                            ("declared_basis_offdiag".to_string(), c.declared_basis_offdiag),
                        ])),
                    }
                }
                ConstructKind::DiagUniversal(a) => {
                    let proc = load_process(&a.process)?;
                    let target = load_target(&a.target, &proc)?;
                    let c = build_diag_universal(&target, &proc)?;
                    BundleDoc {
                        process: ProcessDoc::from_spec(&proc),
                        model: QuantumModelDoc::from_model(&c.model),
                        target: DistributionDoc::from_distribution(&target),
                        decomposition: Some(DecompositionDoc::from_decomposition(&c.decomposition)),
                        diagnostics: None,
                    }
                }
                ConstructKind::Example { name } => {
                    BundleDoc::from_example(&worked_example(name).map_err(|e| CliError::Usage(e.to_string()))?)
                }
            };
            let value = to_value(&doc);
            match out {
                Some(path) => {
                    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
                    text.push('\n');
                    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    let summary = json!({ "written": path.display().to_string() });
                    Ok((0, emit(format, &summary, Some(format!("wrote {}\n", path.display())))))
                }
                None => Ok((0, emit(format, &value, None))),
            }
        }

        Command::Verify {
            bundle,
            process,
            model,
            target,
            tol,
        } => {
            let (proc, q, t) = match (bundle, process, model, target) {
                (Some(b), _, _, _) => {
                    let b = parse_bundle_file(&read(b)?)?;
                    (b.process, b.model, b.target)
                }
                (None, Some(p), Some(m), Some(t)) => {
                    let proc = load_process(p)?;
                    let q = parse_quantum_model_file(&read(m)?)?;
                    let t = load_target(t, &proc)?;
                    (proc, q, t)
                }
                _ => {
                    return Err(CliError::Usage(
                        "verify needs --bundle, or all of --process, --model and --target".into(),
                    ))
                }
            };
            let r = verify_model(&q, &proc, &t, *tol)?;
            let value = json!({
                "pass": r.pass,
                "max_abs_error": r.max_abs_error,
                "tolerance": r.tolerance,
                "residuals": r.residuals,
            });
            let human = format!(
                "verdict: {}\nmax abs error: {}\ntolerance: {}\n",
                if r.pass { "pass" } else { "fail" },
                num(r.max_abs_error),
                num(r.tolerance)
            );
            Ok((
                if r.pass { 0 } else { EXIT_NEGATIVE },
                emit(format, &value, Some(human)),
            ))
        }

        Command::Discord { model, side, grid } => {
            let text = read(model)?;
            let q = match parse_quantum_model_file(&text) {
                Ok(q) => q,
                Err(first) => match parse_bundle_file(&text) {
                    Ok(b) => b.model,
                    Err(_) => return Err(first),
                },
            };
            let dims = q.subsystem_dims();
            if dims.len() != 2 {
                return Err(CliError::Usage(format!(
                    "discord needs a two-subsystem state, model has dims {dims:?}"
                )));
            }
            let side = match side {
                SideArg::A => Side::A,
                SideArg::B => Side::B,
            };
            let r = discord_one_sided(q.state(), (dims[0], dims[1]), side, *grid)?;
            let value = json!({
                "discord": r.discord,
                "mutual_information": r.mutual_information,
                "classical_correlation": r.classical_correlation,
                "theta": r.theta,
                "phi": r.phi,
                "grid": grid,
            });
            let human = format!(
                "discord: {} bits\nmutual information: {}\nclassical correlation: {}\noptimal projector angles: theta {}, phi {}\n",
                num(r.discord),
                num(r.mutual_information),
                num(r.classical_correlation),
                num(r.theta),
                num(r.phi)
            );
            Ok((0, emit(format, &value, Some(human))))
        }

        Command::WitnessCc { states, tol } => {
            let ms = parse_states_file(&read(states)?)?;
            let w = commutation_witness(&ms)?;
            let commuting = w <= *tol;
            let value = json!({ "witness": w, "commuting": commuting });
            let human = format!(
                "commutation witness: {}\n{}\n",
                num(w),
                if commuting {
                    "ensemble commutes (jointly diagonalizable)"
                } else {
                    "ensemble does not commute"
                }
            );
            Ok((0, emit(format, &value, Some(human))))
        }
    }
}
