//! `seqnorm` command line: norm evaluation, vector-valued and operator
//! norms, tensor norms and the verification suites, with JSON or CSV
//! reports.

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqnorm::summing::{pi_lambda, pi_lambda_mid, w_lambda_mid, OperatorMatrix};
use seqnorm::tensor::{
    gamma_lambda, gamma_lambda_c_seeded, injective_norm, sharp_estimate, trace_duality_check,
    Representation, Tensor,
};
use seqnorm::vector_norms::{
    chain_check, limited_bound_profile, mid_norm, strong_norm, weak_norm, weak_star_norm,
};
use seqnorm::verify::{run_suite, Suite, SuiteConfig};
use seqnorm::{spaces, Error, OptBudget, Space, SpaceSpec, VectorSequence};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use report::{Format, Report, ReportEntry};

/// Environment variable holding a JSON budget used as the default.
pub const BUDGET_ENV: &str = "SEQNORM_BUDGET";

pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATION: i32 = 1;
    pub const MALFORMED: i32 = 2;
    pub const INVALID_SPEC: i32 = 3;
    pub const UNWRITABLE: i32 = 4;
}

#[derive(Parser, Debug)]
#[command(
    name = "seqnorm",
    version,
    about = "Sequence-space, summing and tensor norms with certified bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// RNG seed for every search.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iterations per restart.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Report path; the report goes to stdout when this is `-`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file in the shape of a report's `config` object.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpaceArgs {
    /// Space in the flag language (`lp:2`, `sargent_m:sqrt`) or as JSON.
    #[arg(long)]
    pub space: Option<String>,
    /// File holding a JSON space spec.
    #[arg(long, conflicts_with = "space")]
    pub space_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VecKind {
    Strong,
    Weak,
    WeakStar,
    Mid,
    Chain,
    Profile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummingKind {
    Pi,
    PiMid,
    WMid,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorKind {
    Gamma,
    GammaC,
    Injective,
    Trace,
}

/// JSON arguments take the value inline or `@path` to read a file.
#[derive(Subcommand, Debug)]
pub enum Command {
    /// Norm of a finite sequence.
    Norm {
        #[command(flatten)]
        space: SpaceArgs,
        /// JSON array of numbers.
        #[arg(long)]
        seq: String,
        #[command(flatten)]
        common: Common,
    },
    /// Köthe dual norm of a finite sequence.
    DualNorm {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        seq: String,
        #[command(flatten)]
        common: Common,
    },
    /// Strong, weak, weak-star and mid norms of a vector sequence.
    Vecnorm {
        #[command(flatten)]
        space: SpaceArgs,
        /// `{"oracle": "l2:2", "vectors": [[..], ..]}`.
        #[arg(long)]
        vectors: String,
        #[arg(long, value_enum, default_value = "chain")]
        kind: VecKind,
        /// Rows of the probing operators for the mid norm.
        #[arg(long, default_value_t = 4)]
        m: usize,
        /// Dual vectors for the bound profile, same shape as `--vectors`.
        #[arg(long)]
        functionals: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Summing norms of a matrix operator.
    Summing {
        #[command(flatten)]
        space: SpaceArgs,
        /// `{"domain": "l2:2", "codomain": "l2:2", "rows": [[..], ..]}`.
        #[arg(long)]
        operator: String,
        #[arg(long, value_enum, default_value = "all")]
        kind: SummingKind,
        /// Length of the test sequences.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Tensor norms of a matrix in `X ⊗ Y`.
    Tensor {
        #[command(flatten)]
        space: SpaceArgs,
        /// `{"domain": "l2:2", "codomain": "l2:2", "entries": [[..], ..]}`.
        #[arg(long)]
        tensor: String,
        #[arg(long, value_enum, default_value = "gamma-c")]
        kind: TensorKind,
        /// Vectors per block; defaults to `min(dim X, dim Y)`.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 3)]
        blocks: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Operator `Y → X*` for `--kind trace`.
        #[arg(long)]
        operator: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomised invariant suites.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        /// Overrides every invariant's trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Echoed into every report; `--config` files use the same shape.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub budget: OptBudget,
    pub format: Format,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Malformed(_) | Error::DimensionMismatch { .. } => exit::MALFORMED,
            Error::InvalidSpec(_)
            | Error::InvalidBudget(_)
            | Error::UnknownDual(_)
            | Error::Precondition(_) => exit::INVALID_SPEC,
            _ => exit::VIOLATION,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn malformed(message: String) -> Failure {
    Failure {
        code: exit::MALFORMED,
        message,
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| malformed(format!("cannot read {}: {e}", path.display())))
}

/// Inline JSON, or the contents of a file when the argument starts with `@`.
fn json_arg<T: serde::de::DeserializeOwned>(what: &str, arg: &str) -> Result<(T, Value), Failure> {
    let text = match arg.strip_prefix('@') {
        Some(path) => read_text(Path::new(path))?,
        None => arg.to_string(),
    };
    let value: Value =
        serde_json::from_str(&text).map_err(|e| malformed(format!("{what}: {e}")))?;
    let parsed = serde_json::from_value(value.clone()).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("invalid space spec") {
            Failure {
                code: exit::INVALID_SPEC,
                message: format!("{what}: {msg}"),
            }
        } else {
            malformed(format!("{what}: {msg}"))
        }
    })?;
    Ok((parsed, value))
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => serde_json::from_str::<RunConfig>(&read_text(path)?)
            .map_err(|e| malformed(format!("config {}: {e}", path.display())))?,
        None => {
            let budget = match std::env::var(BUDGET_ENV) {
                Ok(text) => serde_json::from_str(&text)
                    .map_err(|e| malformed(format!("{BUDGET_ENV}: {e}")))?,
                Err(_) => OptBudget::default(),
            };
            RunConfig {
                budget,
                ..RunConfig::default()
            }
        }
    };
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(seed) = config.seed {
        config.budget.seed = seed;
    }
    if let Some(r) = common.restarts {
        config.budget.restarts = r;
    }
    if let Some(i) = common.iterations {
        config.budget.iterations = i;
    }
    if let Some(f) = common.format {
        config.format = f;
    }
    config.budget.validate()?;
    Ok(config)
}

fn resolve_space(args: &SpaceArgs, config: &mut RunConfig) -> Result<Space, Failure> {
    let spec = match (&args.space, &args.space_file) {
        (Some(text), _) => SpaceSpec::parse_any(text)?,
        (None, Some(path)) => SpaceSpec::parse_any(&read_text(path)?)?,
        (None, None) => config
            .space
            .clone()
            .ok_or_else(|| malformed("a space is required (--space or --space-file)".into()))?,
    };
    let space = Space::new(spec.clone())?;
    config.space = Some(spec);
    Ok(space)
}

fn ms(started: Instant) -> u64 {
    started.elapsed().as_millis() as u64
}

struct Outcome {
    config: RunConfig,
    common: Common,
    results: Vec<ReportEntry>,
}

fn execute(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Norm { space, seq, common } => {
            let mut config = load_config(&common)?;
            config.command = "norm".into();
            let space = resolve_space(&space, &mut config)?;
            let (seq, raw): (Vec<f64>, Value) = json_arg("--seq", &seq)?;
            config.inputs.insert("seq".into(), raw);
            let started = Instant::now();
            let value = space.norm(&seq);
            let entry = ReportEntry::exact("norm", value, ms(started));
            Ok(Outcome {
                config,
                common,
                results: vec![entry],
            })
        }
        Command::DualNorm { space, seq, common } => {
            let mut config = load_config(&common)?;
            config.command = "dual-norm".into();
            let space = resolve_space(&space, &mut config)?;
            let (seq, raw): (Vec<f64>, Value) = json_arg("--seq", &seq)?;
            config.inputs.insert("seq".into(), raw);
            let started = Instant::now();
            let w = spaces::dual_norm(space.spec(), &seq, &config.budget)?;
            let entry = ReportEntry::from_witnessed("dual-norm", &w, ms(started));
            Ok(Outcome {
                config,
                common,
                results: vec![entry],
            })
        }
        Command::Vecnorm {
            space,
            vectors,
            kind,
            m,
            functionals,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.command = "vecnorm".into();
            let space = resolve_space(&space, &mut config)?;
            let (xs, raw): (VectorSequence, Value) = json_arg("--vectors", &vectors)?;
            config.inputs.insert("vectors".into(), raw);
            config.options.insert("kind".into(), json!(kind));
            config.options.insert("m".into(), json!(m));
            let budget = config.budget.clone();
            let started = Instant::now();
            let results = match kind {
                VecKind::Strong => vec![ReportEntry::exact(
                    "strong",
                    strong_norm(&space, &xs),
                    ms(started),
                )],
                VecKind::Weak => vec![ReportEntry::from_witnessed(
                    "weak",
                    &weak_norm(&space, &xs),
                    ms(started),
                )],
                VecKind::WeakStar => {
                    let w = weak_star_norm(&space, &xs, &budget)?;
                    vec![ReportEntry::from_witnessed("weak-star", &w, ms(started))]
                }
                VecKind::Mid => {
                    let w = mid_norm(&space, &xs, m, &budget)?;
                    vec![ReportEntry::from_witnessed("mid", &w, ms(started))]
                }
                VecKind::Chain => {
                    let report = chain_check(&space, &xs, m, &budget)?;
                    let elapsed = ms(started);
                    let mut rows = vec![
                        ReportEntry::from_witnessed("weak", &report.weak, elapsed),
                        ReportEntry::from_witnessed("mid", &report.mid, elapsed),
                        ReportEntry::exact("strong", report.strong, elapsed),
                    ];
                    rows.push(ReportEntry {
                        name: "chain-violations".into(),
                        value: report.violations.len() as f64,
                        bound_direction: seqnorm::BoundDirection::Invariant,
                        witness: (!report.violations.is_empty()).then(|| json!(report.violations)),
                        converged: report.violations.is_empty(),
                        elapsed_ms: elapsed,
                        trials: Some(1),
                        violations: Some(report.violations.len()),
                    });
                    rows
                }
                VecKind::Profile => {
                    let text = functionals
                        .ok_or_else(|| malformed("--kind profile needs --functionals".into()))?;
                    let (fs, raw): (VectorSequence, Value) = json_arg("--functionals", &text)?;
                    config.inputs.insert("functionals".into(), raw);
                    let beta = limited_bound_profile(&space, &xs, &fs)?;
                    let elapsed = ms(started);
                    let mut rows: Vec<ReportEntry> = beta
                        .iter()
                        .enumerate()
                        .map(|(j, b)| {
                            ReportEntry::exact(format!("profile[{}]", j + 1), *b, elapsed)
                        })
                        .collect();
                    rows.push(ReportEntry::exact(
                        "profile-norm",
                        space.norm(&beta),
                        elapsed,
                    ));
                    rows
                }
            };
            Ok(Outcome {
                config,
                common,
                results,
            })
        }
        Command::Summing {
            space,
            operator,
            kind,
            n,
            m,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.command = "summing".into();
            let space = resolve_space(&space, &mut config)?;
            let (t, raw): (OperatorMatrix, Value) = json_arg("--operator", &operator)?;
            config.inputs.insert("operator".into(), raw);
            config.options.insert("kind".into(), json!(kind));
            config.options.insert("n".into(), json!(n));
            config.options.insert("m".into(), json!(m));
            let budget = config.budget.clone();
            let mut results = Vec::new();
            if matches!(kind, SummingKind::Pi | SummingKind::All) {
                let started = Instant::now();
                let w = pi_lambda(&space, &t, n, &budget)?;
                results.push(ReportEntry::from_witnessed("pi", &w, ms(started)));
            }
            if matches!(kind, SummingKind::PiMid | SummingKind::All) {
                let started = Instant::now();
                let w = pi_lambda_mid(&space, &t, n, &budget)?;
                results.push(ReportEntry::from_witnessed("pi-mid", &w, ms(started)));
            }
            if matches!(kind, SummingKind::WMid | SummingKind::All) {
                let started = Instant::now();
                let w = w_lambda_mid(&space, &t, n, m, &budget)?;
                results.push(ReportEntry::from_witnessed("w-mid", &w, ms(started)));
            }
            Ok(Outcome {
                config,
                common,
                results,
            })
        }
        Command::Tensor {
            space,
            tensor,
            kind,
            rank,
            blocks,
            m,
            operator,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.command = "tensor".into();
            let space = resolve_space(&space, &mut config)?;
            let (u, raw): (Tensor, Value) = json_arg("--tensor", &tensor)?;
            config.inputs.insert("tensor".into(), raw);
            let rank = rank.unwrap_or_else(|| u.domain.dim().min(u.codomain.dim()));
            config.options.insert("kind".into(), json!(kind));
            config.options.insert("rank".into(), json!(rank));
            config.options.insert("blocks".into(), json!(blocks));
            config.options.insert("m".into(), json!(m));
            let budget = config.budget.clone();
            let started = Instant::now();
            let mut results = Vec::new();
            match kind {
                TensorKind::Injective => {
                    results.push(ReportEntry::from_witnessed(
                        "injective",
                        &injective_norm(&u),
                        ms(started),
                    ));
                }
                TensorKind::Gamma | TensorKind::GammaC | TensorKind::Trace => {
                    let gamma = gamma_lambda(&space, &u, rank, &budget)?;
                    let found = if kind == TensorKind::Gamma {
                        gamma
                    } else {
                        let seed = gamma
                            .witness
                            .clone()
                            .unwrap_or(Representation { blocks: Vec::new() });
                        gamma_lambda_c_seeded(&space, &u, blocks, rank, &budget, &seed)?
                    };
                    let name = if kind == TensorKind::Gamma {
                        "gamma"
                    } else {
                        "gamma-c"
                    };
                    results.push(ReportEntry::from_witnessed(name, &found, ms(started)));
                    let rep = found
                        .witness
                        .clone()
                        .unwrap_or(Representation { blocks: Vec::new() });
                    if kind == TensorKind::Trace {
                        let text = operator
                            .ok_or_else(|| malformed("--kind trace needs --operator".into()))?;
                        let (t, raw): (OperatorMatrix, Value) = json_arg("--operator", &text)?;
                        config.inputs.insert("operator".into(), raw);
                        let report = trace_duality_check(&space, &t, &u, &rep)?;
                        let elapsed = ms(started);
                        results.push(ReportEntry::exact("trace-phi", report.phi, elapsed));
                        for (name, check) in
                            [("trace-chain", report.chain), ("trace-ratio", report.ratio)]
                        {
                            let violated = usize::from(!check.holds(1e-9));
                            results.push(ReportEntry {
                                name: name.into(),
                                value: check.excess(),
                                bound_direction: seqnorm::BoundDirection::Invariant,
                                witness: Some(json!(check)),
                                converged: violated == 0,
                                elapsed_ms: elapsed,
                                trials: Some(1),
                                violations: Some(violated),
                            });
                        }
                    } else {
                        let sharp = sharp_estimate(&space, &u, &rep, m, &budget)?;
                        results.push(ReportEntry {
                            name: format!("{name}-sharp"),
                            value: sharp,
                            bound_direction: seqnorm::BoundDirection::UpperOfInf,
                            witness: None,
                            converged: false,
                            elapsed_ms: ms(started),
                            trials: None,
                            violations: None,
                        });
                    }
                }
            }
            Ok(Outcome {
                config,
                common,
                results,
            })
        }
        Command::Verify {
            suite,
            trials,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.command = "verify".into();
            if trials.is_some() {
                config.trials = trials;
            }
            config.options.insert("suite".into(), json!(suite));
            let seed = config.seed.unwrap_or(config.budget.seed);
            let mut suite_config = SuiteConfig::new(seed, config.budget.clone());
            suite_config.trials = config.trials;
            let rows = run_suite(suite, &suite_config)?;
            let results = rows.iter().map(ReportEntry::from_invariant).collect();
            Ok(Outcome {
                config,
                common,
                results,
            })
        }
    }
}

fn summary(report: &Report) -> String {
    report
        .results
        .iter()
        .map(|r| match (r.trials, r.violations) {
            (Some(t), Some(v)) => format!(
                "{}\ttrials={t}\tviolations={v}\tworst_excess={:.3e}",
                r.name, r.value
            ),
            _ => format!("{}\t{}", r.name, r.value),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", text.trim_end());
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.exit_code() {
                0 => exit::OK,
                _ => exit::MALFORMED,
            };
        }
    };
    match execute(cli.command) {
        Ok(outcome) => {
            let format = outcome.config.format;
            let config = serde_json::to_value(&outcome.config).expect("config serialises");
            let report = Report::new(config, outcome.results);
            match &outcome.common.out {
                Some(path) if path.as_os_str() == "-" => emit(&report.render(format)),
                Some(path) => {
                    if let Err(e) = report.write(path, format) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return exit::UNWRITABLE;
                    }
                    emit(&summary(&report));
                }
                None => emit(&summary(&report)),
            }
            if report.violations() > 0 {
                exit::VIOLATION
            } else {
                exit::OK
            }
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}
