//! Command-line experiment runner.
//!
//! Every subcommand reads shared experiment flags (optionally seeded from a
//! JSON config file, with flags taking precedence), fans replicas out over a
//! deterministic worker pool and writes CSV or JSON, atomically when an
//! output path is given.
//!
//! Exit codes: 0 success, 1 runtime error or failed check, 2 partition
//! construction failed with a witness, 64 bad configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::block_partition::{partition_matrices, partition_pipeline, PartitionMatrices, PartitionThresholds};
use crate::gibbs_exact::GibbsModel;
use crate::glauber::{energy, magnetization, mask_to_spins, relaxation_time, transition_matrix, worst_tv_curve, HeatBath};
use crate::linalg::sym_eigenvalues;
use crate::random_graph::{couplings_sample, interaction_matrix, sample_gnp, CouplingDist, GraphDump};
use crate::rng::{configured_threads, map_replicas, stream_rng};
use crate::spectral::{ihara_bass_residual, js_norm_experiment, localisation_matrices, nonbacktracking_matrix, LocalisationParams, ShiftForm};
use crate::thresholds::{
    beta_c, beta_rec, gw_sqr_tail_harness, half_normal_tail_harness, kappa_integral, theta_tail_harness,
    upsilon_path_harness, QuadratureRule, TailReport, DEFAULT_ORDER, KAPPA_C,
};
use crate::verification::{run_all, run_criterion, CriterionOutcome};
use crate::weights::WeightContext;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTITION_FAIL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "spinlab", version, about = "Spin-glass experiments on sparse random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// JSON file with experiment settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Mean degree of `G(n, d/n)`.
    #[arg(long, global = true)]
    d: Option<f64>,
    /// Absolute inverse temperature.
    #[arg(long, global = true, conflicts_with = "beta_frac")]
    beta: Option<f64>,
    /// Inverse temperature as a fraction of β_c(d).
    #[arg(long, global = true)]
    beta_frac: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Coupling law: gaussian, rademacher, truncated:<b> or constant:<v>.
    #[arg(long, global = true)]
    coupling: Option<CouplingDist>,
    /// Worker count; defaults to SPINLAB_THREADS or the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// β with d·E tanh²(βγ) = κ.
    Betac {
        #[arg(long, default_value_t = KAPPA_C)]
        kappa: f64,
    },
    /// β with d·E tanh²(βγ) = 1.
    Betarec,
    /// Heat-bath trajectories: energy and magnetization every few sweeps.
    Sample {
        #[arg(long, default_value_t = 100)]
        sweeps: usize,
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Exact worst-start total-variation curve of Glauber dynamics.
    Mix {
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Block partition of one random instance with its validation report.
    Partition {
        /// Mean degree of the sampled graph when it differs from `d`.
        #[arg(long)]
        mean_degree: Option<f64>,
        /// JSON file overriding the partition thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Operator norm of the good-part interaction matrix per replica.
    Jsnorm,
    /// Weighted-sphere sums around the first few vertices.
    Sqr {
        #[arg(long, default_value_t = 3)]
        length: usize,
        #[arg(long, default_value_t = 5)]
        vertices: usize,
    },
    /// Residual of the determinant identity on random symmetric matrices.
    Iharabass {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        per_matrix: usize,
        #[arg(long, default_value_t = 6)]
        size: usize,
    },
    /// Monte-Carlo tail harnesses against their bounds.
    Tails {
        #[arg(value_enum)]
        harness: Harness,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 150.0)]
        c: f64,
        /// Exponent parameter; defaults to half of d/(2κ).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 5)]
        path_len: usize,
    },
    /// Spectrum of the localisation path on one partitioned instance.
    Localisation {
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Acceptance checks; all of them unless one is named.
    Verify {
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Harness {
    Theta,
    GwSqr,
    HalfNormal,
    Upsilon,
}

/// How the inverse temperature is given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSpec {
    Absolute(f64),
    FractionOfCritical(f64),
}

/// Experiment settings as read from a config file; every field optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub n: Option<usize>,
    pub d: Option<f64>,
    pub beta: Option<f64>,
    pub beta_frac: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub coupling: Option<CouplingDist>,
}

/// Fully resolved experiment settings.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub n: usize,
    pub d: f64,
    pub beta_spec: BetaSpec,
    /// `beta_spec` resolved against β_c(d).
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub replicas: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Format,
    pub coupling: CouplingDist,
}

struct Defaults {
    n: usize,
    d: f64,
    beta: BetaSpec,
}

fn defaults(command: &Command) -> Defaults {
    let frac = |f| BetaSpec::FractionOfCritical(f);
    match command {
        Command::Betac { .. } | Command::Betarec => Defaults { n: 0, d: 8.0, beta: frac(1.0) },
        Command::Sample { .. } => Defaults { n: 8, d: 4.0, beta: frac(0.5) },
        Command::Mix { .. } => Defaults { n: 10, d: 3.0, beta: frac(0.5) },
        Command::Partition { .. } => Defaults { n: 200, d: 8.0, beta: frac(1.0) },
        Command::Jsnorm => Defaults { n: 200, d: 8.0, beta: frac(1.0) },
        Command::Sqr { .. } => Defaults { n: 200, d: 8.0, beta: frac(1.0) },
        Command::Iharabass { .. } | Command::Verify { .. } => Defaults { n: 0, d: 8.0, beta: frac(1.0) },
        Command::Tails { harness, .. } => match harness {
            Harness::Theta => Defaults { n: 0, d: 30.0, beta: frac(1.0) },
            Harness::GwSqr => Defaults { n: 0, d: 20.0, beta: frac(1.0) },
            Harness::HalfNormal => Defaults { n: 0, d: 1.0, beta: frac(1.0) },
            Harness::Upsilon => Defaults { n: 500, d: 8.0, beta: frac(1.0) },
        },
        Command::Localisation { .. } => Defaults { n: 40, d: 3.0, beta: frac(0.5) },
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Betac { .. } => "betac",
        Command::Betarec => "betarec",
        Command::Sample { .. } => "sample",
        Command::Mix { .. } => "mix",
        Command::Partition { .. } => "partition",
        Command::Jsnorm => "jsnorm",
        Command::Sqr { .. } => "sqr",
        Command::Iharabass { .. } => "iharabass",
        Command::Tails { .. } => "tails",
        Command::Localisation { .. } => "localisation",
        Command::Verify { .. } => "verify",
    }
}

/// Merges flags over the config file over per-command defaults.
fn resolve(command: &Command, flags: &CommonArgs) -> std::result::Result<ExperimentConfig, String> {
    let file: ConfigFile = match &flags.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("config {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", p.display()))?
        }
        None => ConfigFile::default(),
    };
    let name = command_name(command);
    if let Some(c) = &file.command {
        if c != name {
            return Err(format!("config is for `{c}`, not `{name}`"));
        }
    }
    let def = defaults(command);
    let beta_spec = match (flags.beta, flags.beta_frac) {
        (Some(b), _) => BetaSpec::Absolute(b),
        (None, Some(f)) => BetaSpec::FractionOfCritical(f),
        (None, None) => match (file.beta, file.beta_frac) {
            (Some(_), Some(_)) => return Err("config sets both beta and beta_frac".into()),
            (Some(b), None) => BetaSpec::Absolute(b),
            (None, Some(f)) => BetaSpec::FractionOfCritical(f),
            (None, None) => def.beta,
        },
    };
    let d = flags.d.or(file.d).unwrap_or(def.d);
    if !(d > 0.0) || !d.is_finite() {
        return Err(format!("d must be positive, got {d}"));
    }
    let beta = match beta_spec {
        BetaSpec::Absolute(b) => b,
        BetaSpec::FractionOfCritical(f) => {
            if d <= KAPPA_C {
                return Err(format!("β_c({d}) does not exist: d must exceed {KAPPA_C}"));
            }
            f * beta_c(d, KAPPA_C).map_err(|e| e.to_string())?
        }
    };
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(format!("beta must be finite and nonnegative, got {beta}"));
    }
    let epsilon = flags.epsilon.or(file.epsilon).unwrap_or(0.3);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(ExperimentConfig {
        command: name.into(),
        n: flags.n.or(file.n).unwrap_or(def.n),
        d,
        beta_spec,
        beta,
        epsilon,
        seed: flags.seed.or(file.seed).unwrap_or(0),
        replicas: flags.replicas.or(file.replicas).unwrap_or(1),
        output: flags.output.clone().or(file.output),
        format: flags.format.or(file.format).unwrap_or(Format::Csv),
        coupling: flags.coupling.or(file.coupling).unwrap_or(CouplingDist::Gaussian),
    })
}

/// Entry point for the binary: parses `args` (program name first) and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_threads(args, None)
}

/// As [`run`], with the worker count forced when `threads` is given.
pub fn run_with_threads<I, T>(args: I, threads: Option<usize>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            let _ = e.print();
            report_error("usage", &e.kind().to_string());
            return EXIT_USAGE;
        }
    };
    let cfg = match resolve(&cli.command, &cli.common) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{}", Cli::command_usage());
            report_error("config", &msg);
            return EXIT_USAGE;
        }
    };
    let threads = threads.or(cli.common.threads).unwrap_or_else(configured_threads).max(1);
    match dispatch(&cli.command, &cfg, threads) {
        Ok(Outcome { body, code }) => match emit(&cfg, &body) {
            Ok(()) => code,
            Err(e) => {
                report_error(error_kind(&e), &e.to_string());
                EXIT_ERROR
            }
        },
        Err(e) => {
            report_error(error_kind(&e), &e.to_string());
            if matches!(e, Error::InvalidInput(_)) {
                EXIT_USAGE
            } else {
                EXIT_ERROR
            }
        }
    }
}

impl Cli {
    fn command_usage() -> String {
        use clap::CommandFactory;
        Cli::command().render_usage().to_string()
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::TooLarge { .. } => "too_large",
        Error::Degenerate(_) => "degenerate",
        Error::BudgetExhausted(_) => "budget_exhausted",
        Error::NonReversible(_) => "non_reversible",
        Error::Numerical(_) => "numerical",
        Error::Decomposition(_) => "decomposition",
        Error::Refinement(_) => "refinement",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

struct Outcome {
    body: String,
    code: i32,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, code: EXIT_OK }
    }
}

/// Writes `body` to the configured output through a temporary file in the
/// same directory, or to stdout.
fn emit(cfg: &ExperimentConfig, body: &str) -> Result<()> {
    match &cfg.output {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
        Some(path) => write_atomic(path, body.as_bytes())?,
    }
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Decimal rendering with 17 significant digits, which round-trips.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=16).contains(&exp) {
        return format!("{x:.16e}");
    }
    format!("{:.*}", (16 - exp).max(0) as usize, x)
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }
}

fn json_body(value: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn dispatch(command: &Command, cfg: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    match command {
        Command::Betac { kappa } => scalar(cfg, "beta_c", *kappa, beta_c(cfg.d, *kappa)?),
        Command::Betarec => scalar(cfg, "beta_rec", 1.0, beta_rec(cfg.d)?),
        Command::Sample { sweeps, every } => sample(cfg, *sweeps, *every, threads),
        Command::Mix { steps } => mix(cfg, *steps, threads),
        Command::Partition { mean_degree, thresholds } => partition(cfg, *mean_degree, thresholds.as_deref()),
        Command::Jsnorm => jsnorm(cfg, threads),
        Command::Sqr { length, vertices } => sqr(cfg, *length, *vertices, threads),
        Command::Iharabass { trials, per_matrix, size } => iharabass(cfg, *trials, *per_matrix, *size),
        Command::Tails { harness, delta, samples, count, sigma, depth, c, t, path_len } => {
            tails(cfg, *harness, *delta, *samples, *count, *sigma, *depth, *c, *t, *path_len, threads)
        }
        Command::Localisation { points } => localisation(cfg, *points),
        Command::Verify { criterion } => verify(cfg, *criterion, threads),
    }
}

fn scalar(cfg: &ExperimentConfig, name: &str, target: f64, value: f64) -> Result<Outcome> {
    let rule = QuadratureRule::gauss_hermite(DEFAULT_ORDER)?;
    let residual = kappa_integral(value, cfg.d, &rule) - target;
    Ok(Outcome::ok(match cfg.format {
        Format::Csv => fmt_f64(value) + "\n",
        Format::Json => json_body(json!({ "d": cfg.d, "target": target, name: value, "residual": residual }))?,
    }))
}

fn instance(cfg: &ExperimentConfig, replica: u64, mean_degree: f64) -> Result<GibbsModel> {
    let mut rng = stream_rng(cfg.seed, replica);
    let g = sample_gnp(cfg.n, mean_degree, &mut rng)?;
    let c = couplings_sample(&g, cfg.coupling, &mut rng);
    GibbsModel::zero_field(g, c, cfg.beta)
}

fn sample(cfg: &ExperimentConfig, sweeps: usize, every: usize, threads: usize) -> Result<Outcome> {
    if every == 0 {
        return Err(Error::invalid("--every must be positive"));
    }
    let runs = map_replicas(cfg.replicas, threads, |r| -> Result<Vec<(usize, f64, f64, String)>> {
        let m = instance(cfg, r as u64, cfg.d)?;
        let mut rng = stream_rng(cfg.seed, (1 << 32) + r as u64);
        let chain = HeatBath::new(&m);
        let mut spins: Vec<i8> = (0..m.n()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut rows = Vec::new();
        for s in 0..=sweeps {
            if s > 0 {
                chain.sweep(&mut spins, &mut rng);
            }
            if s % every == 0 || s == sweeps {
                let word: String = spins.iter().map(|&x| if x > 0 { '+' } else { '-' }).collect();
                rows.push((s, energy(&m, &spins), magnetization(&spins), word));
            }
        }
        Ok(rows)
    })?;
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["replica", "sweep", "energy", "magnetization", "spins"]);
            for (r, rows) in runs.iter().enumerate() {
                for (s, e, mg, w) in rows {
                    csv.row(&[r.to_string(), s.to_string(), fmt_f64(*e), fmt_f64(*mg), w.clone()]);
                }
            }
            csv.text
        }
        Format::Json => json_body(json!({
            "config": cfg,
            "replicas": runs.iter().map(|rows| rows.iter().map(|(s, e, mg, w)| json!({
                "sweep": s, "energy": e, "magnetization": mg, "spins": w
            })).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Outcome::ok(body))
}

struct MixRun {
    relaxation_time: f64,
    mixing_time: Option<usize>,
    rows: Vec<(usize, f64, f64, f64)>,
}

fn mix(cfg: &ExperimentConfig, steps: usize, threads: usize) -> Result<Outcome> {
    let eps = 1.0 / (2.0 * std::f64::consts::E);
    let runs = map_replicas(cfg.replicas, threads, |r| -> Result<MixRun> {
        let m = instance(cfg, r as u64, cfg.d)?;
        let pm = m.pair_model();
        let p = transition_matrix(&pm)?;
        let dist = crate::gibbs_exact::exact_from_pairs(&pm, crate::glauber::TRANSITION_CAP)?;
        let mu = dist.probs();
        let relax = relaxation_time(&p, mu)?;
        let curve = worst_tv_curve(&p, mu, steps);
        let mixing_time = curve.iter().position(|&tv| tv <= eps).map(|t| t + 1);
        let n = m.n();
        let dim = p.dim();
        let e: Vec<f64> = (0..dim).map(|s| energy(&m, &mask_to_spins(s as u64, n))).collect();
        let mg: Vec<f64> = (0..dim).map(|s| magnetization(&mask_to_spins(s as u64, n))).collect();
        let mut nu = vec![0.0; dim];
        nu[dim - 1] = 1.0;
        let mut rows = Vec::new();
        for (t, tv) in curve.iter().enumerate() {
            nu = p.evolve(&nu);
            let ee = nu.iter().zip(&e).map(|(a, b)| a * b).sum();
            let mm = nu.iter().zip(&mg).map(|(a, b)| a * b).sum();
            rows.push((t + 1, *tv, ee, mm));
        }
        Ok(MixRun { relaxation_time: relax, mixing_time, rows })
    })?;
    let runs: Vec<MixRun> = runs.into_iter().collect::<Result<_>>()?;
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["replica", "step", "tv_distance", "energy", "magnetization"]);
            for (r, run) in runs.iter().enumerate() {
                for (t, tv, e, m) in &run.rows {
                    csv.row(&[r.to_string(), t.to_string(), fmt_f64(*tv), fmt_f64(*e), fmt_f64(*m)]);
                }
            }
            csv.text
        }
        Format::Json => json_body(json!({
            "config": cfg,
            "replicas": runs.iter().map(|run| json!({
                "relaxation_time": run.relaxation_time,
                "mixing_time": run.mixing_time,
                "tv_curve": run.rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Outcome::ok(body))
}

fn partition(cfg: &ExperimentConfig, mean_degree: Option<f64>, thresholds: Option<&Path>) -> Result<Outcome> {
    let th = match thresholds {
        Some(p) => serde_json::from_str::<PartitionThresholds>(&std::fs::read_to_string(p)?)
            .map_err(|e| Error::invalid(format!("thresholds {}: {e}", p.display())))?,
        None => PartitionThresholds::from_formulas(cfg.n, cfg.d, cfg.epsilon)?,
    };
    let m = instance(cfg, 0, mean_degree.unwrap_or(cfg.d))?;
    let ctx = WeightContext::new(&m, cfg.epsilon, cfg.d)?;
    let outcome = partition_pipeline(&ctx, &th)?;
    let status = outcome.status();
    let (partition, failure) = match &outcome.partition {
        Ok(bp) => {
            let mut bp = bp.clone();
            bp.sort();
            (Some(bp), None)
        }
        Err(f) => (None, Some(f.clone())),
    };
    let value = json!({
        "config": cfg,
        "thresholds": outcome.thresholds,
        "status": status,
        "graph": GraphDump::new(m.graph(), m.couplings()),
        "partition": partition,
        "failure": failure.as_ref(),
        "failure_message": failure.as_ref().map(|f| f.to_string()),
        "report": outcome.report,
    });
    let code = match status {
        "ok" => EXIT_OK,
        "fail" => EXIT_PARTITION_FAIL,
        _ => EXIT_ERROR,
    };
    if code == EXIT_ERROR {
        report_error("invalid_partition", "constructed partition failed validation");
    }
    Ok(Outcome { body: json_body(value)?, code })
}

fn jsnorm(cfg: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let records = js_norm_experiment(cfg.n, cfg.d, cfg.epsilon, cfg.beta, cfg.replicas, cfg.seed, threads, None)?;
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["replica", "n", "d", "eps", "beta", "js_norm", "partition_status"]);
            for r in &records {
                csv.row(&[
                    r.replica.to_string(),
                    r.n.to_string(),
                    fmt_f64(r.d),
                    fmt_f64(r.eps),
                    fmt_f64(r.beta),
                    fmt_f64(r.js_norm),
                    r.partition_status.clone(),
                ]);
            }
            csv.text
        }
        Format::Json => json_body(json!({ "config": cfg, "records": records }))?,
    };
    Ok(Outcome::ok(body))
}

fn sqr(cfg: &ExperimentConfig, length: usize, vertices: usize, threads: usize) -> Result<Outcome> {
    let rule = QuadratureRule::gauss_hermite(DEFAULT_ORDER)?;
    let mean_rate = kappa_integral(cfg.beta, cfg.d, &rule);
    let runs = map_replicas(cfg.replicas, threads, |r| -> Result<Vec<(usize, f64)>> {
        let m = instance(cfg, r as u64, cfg.d)?;
        let ctx = WeightContext::new(&m, cfg.epsilon, cfg.d)?;
        (0..vertices.min(m.n())).map(|v| Ok((v, ctx.sqr_sphere(v, length)?))).collect()
    })?;
    let runs: Vec<Vec<(usize, f64)>> = runs.into_iter().collect::<Result<_>>()?;
    let expected = mean_rate.powi(length as i32);
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["replica", "vertex", "length", "sqr", "mean_rate_power"]);
            for (r, rows) in runs.iter().enumerate() {
                for (v, s) in rows {
                    csv.row(&[r.to_string(), v.to_string(), length.to_string(), fmt_f64(*s), fmt_f64(expected)]);
                }
            }
            csv.text
        }
        Format::Json => json_body(json!({ "config": cfg, "length": length, "mean_rate_power": expected, "sqr": runs }))?,
    };
    Ok(Outcome::ok(body))
}

fn iharabass(cfg: &ExperimentConfig, trials: usize, per_matrix: usize, size: usize) -> Result<Outcome> {
    use rand_distr::StandardNormal;
    let mut rng = stream_rng(cfg.seed, 0);
    let mut worst = 0.0f64;
    let mut evaluations = 0usize;
    for _ in 0..trials {
        let mut q = nalgebra::DMatrix::zeros(size, size);
        for i in 0..size {
            for j in i + 1..size {
                if rng.gen::<f64>() < 0.6 {
                    let x: f64 = rng.sample(StandardNormal);
                    q[(i, j)] = x;
                    q[(j, i)] = x;
                }
            }
        }
        let lambda = nonbacktracking_matrix(&q)?.spectral_radius()?.max(q.amax());
        for _ in 0..per_matrix {
            let t = if lambda > 0.0 { (2.0 * rng.gen::<f64>() - 1.0) * 0.999 / lambda } else { rng.gen() };
            worst = worst.max(ihara_bass_residual(&q, t)?.relative);
            evaluations += 1;
        }
    }
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["trials", "evaluations", "size", "max_relative_residual"]);
            csv.row(&[trials.to_string(), evaluations.to_string(), size.to_string(), fmt_f64(worst)]);
            csv.text
        }
        Format::Json => json_body(json!({
            "trials": trials, "evaluations": evaluations, "size": size, "max_relative_residual": worst
        }))?,
    };
    Ok(Outcome::ok(body))
}

#[allow(clippy::too_many_arguments)]
fn tails(
    cfg: &ExperimentConfig,
    harness: Harness,
    delta: f64,
    samples: usize,
    count: usize,
    sigma: f64,
    depth: usize,
    c: f64,
    t: Option<f64>,
    path_len: usize,
    threads: usize,
) -> Result<Outcome> {
    let report: TailReport = match harness {
        Harness::Theta => theta_tail_harness(cfg.d, cfg.beta, delta, samples, cfg.seed, threads)?,
        Harness::GwSqr => {
            let t = t.unwrap_or(cfg.d / (2.0 * KAPPA_C) * 0.5);
            gw_sqr_tail_harness(cfg.d, cfg.beta, KAPPA_C, depth, c, t, samples, cfg.seed, threads)?
        }
        Harness::HalfNormal => half_normal_tail_harness(count, sigma, delta, samples, cfg.seed, threads)?,
        Harness::Upsilon => {
            let r = upsilon_path_harness(cfg.n, cfg.d, cfg.beta, path_len, samples, cfg.seed, threads)?;
            let body = match cfg.format {
                Format::Csv => {
                    let mut csv = Csv::new(&["harness", "params", "paths", "exceedances", "threshold", "max_upsilon", "fraction"]);
                    csv.row(&[
                        "upsilon".into(),
                        format!("n={};d={};beta={};len={path_len}", cfg.n, cfg.d, fmt_f64(cfg.beta)),
                        r.paths.to_string(),
                        r.exceedances.to_string(),
                        fmt_f64(r.threshold),
                        fmt_f64(r.max_upsilon),
                        fmt_f64(r.fraction()),
                    ]);
                    csv.text
                }
                Format::Json => json_body(json!({ "config": cfg, "report": r, "fraction": r.fraction() }))?,
            };
            return Ok(Outcome::ok(body));
        }
    };
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["harness", "params", "samples", "empirical", "bound", "mc_sigma"]);
            csv.row(&[
                report.harness.clone(),
                report.params.clone(),
                report.samples.to_string(),
                fmt_f64(report.empirical),
                fmt_f64(report.bound),
                fmt_f64(report.mc_sigma),
            ]);
            csv.text
        }
        Format::Json => json_body(json!({ "config": cfg, "report": report, "within_bound": report.within_bound() }))?,
    };
    Ok(Outcome::ok(body))
}

fn localisation(cfg: &ExperimentConfig, points: usize) -> Result<Outcome> {
    if points < 2 {
        return Err(Error::invalid("--points must be at least 2"));
    }
    let m = instance(cfg, 0, cfg.d)?;
    let j = interaction_matrix(m.graph(), m.couplings()).to_dense();
    let ctx = WeightContext::new(&m, cfg.epsilon, cfg.d)?;
    let th = PartitionThresholds::from_formulas(cfg.n.max(3), cfg.d.max(1.5), cfg.epsilon)?;
    let outcome = partition_pipeline(&ctx, &th)?;
    let status = outcome.status();
    let pm = match (&outcome.partition, status) {
        (Ok(bp), "ok") => partition_matrices(&j, bp)?,
        _ => PartitionMatrices::without_partition(&j),
    };
    let params = LocalisationParams {
        epsilon: cfg.epsilon,
        zeta: cfg.epsilon * (1.0 - 1e-4),
        n: cfg.n.max(2),
        d: cfg.d,
        form: ShiftForm::FromEpsilon,
    };
    let lm = localisation_matrices(&pm, &params)?;
    let n = j.nrows();
    let mut rows = Vec::new();
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let jt = lm.j_t(t);
        let eig = sym_eigenvalues(&jt)?;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let leaks = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && jt[(u, v)] != 0.0 && !(pm.in_h[u] && pm.in_h[v]))
            .count();
        rows.push((t, lo, hi, leaks));
    }
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["t", "min_eigenvalue", "max_eigenvalue", "off_diagonal_outside_h"]);
            for (t, lo, hi, leaks) in &rows {
                csv.row(&[fmt_f64(*t), fmt_f64(*lo), fmt_f64(*hi), leaks.to_string()]);
            }
            csv.text
        }
        Format::Json => json_body(json!({
            "config": cfg,
            "partition_status": status,
            "control_min_eigenvalue": lm.c_sq_min_eig,
            "path": rows.iter().map(|(t, lo, hi, leaks)| json!({
                "t": t, "min_eigenvalue": lo, "max_eigenvalue": hi, "off_diagonal_outside_h": leaks
            })).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Outcome::ok(body))
}

fn verify(cfg: &ExperimentConfig, criterion: Option<u8>, threads: usize) -> Result<Outcome> {
    let outcomes: Vec<CriterionOutcome> = match criterion {
        Some(id) => vec![run_criterion(id, cfg.seed, threads)?],
        None => run_all(cfg.seed, threads)?,
    };
    let all = outcomes.iter().all(|o| o.passed);
    let body = match cfg.format {
        Format::Csv => {
            let mut csv = Csv::new(&["criterion", "title", "passed", "seconds", "detail"]);
            for o in &outcomes {
                csv.row(&[
                    o.id.to_string(),
                    o.title.clone(),
                    o.passed.to_string(),
                    format!("{:.3}", o.seconds),
                    format!("\"{}\"", o.detail.replace('"', "\"\"")),
                ]);
            }
            csv.text
        }
        Format::Json => json_body(json!({ "criteria": outcomes, "passed": all }))?,
    };
    Ok(Outcome { body, code: if all { EXIT_OK } else { EXIT_ERROR } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("spinlab".to_string()).chain(s.split_whitespace().map(String::from)).collect()
    }

    fn run_to(dir: &Path, name: &str, cmd: &str) -> (i32, String) {
        let path = dir.join(name);
        let mut a = args(cmd);
        a.push("--output".into());
        a.push(path.to_string_lossy().into_owned());
        let code = run_with_threads(a, Some(2));
        (code, std::fs::read_to_string(&path).unwrap_or_default())
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 123456.789, 2.5e-7, -7.0e20, 0.0, 1e-3] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.50000000000000000");
    }

    #[test]
    fn betac_prints_decimal() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out) = run_to(dir.path(), "b", "betac --d 100");
        assert_eq!(code, 0);
        let v: f64 = out.trim().parse().unwrap();
        assert!((v - beta_c(100.0, KAPPA_C).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn sample_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cmd = "sample --n 8 --d 4 --beta-frac 0.5 --seed 1 --replicas 2";
        let (c1, a) = run_to(dir.path(), "a", cmd);
        let (c2, b) = run_to(dir.path(), "b", cmd);
        assert_eq!((c1, c2), (0, 0));
        assert!(a.starts_with("replica,sweep,energy,magnetization,spins\n"));
        assert_eq!(a, b);
    }

    #[test]
    fn mix_curve_is_monotone() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out) = run_to(dir.path(), "m", "mix --n 6 --d 3 --beta 0.4 --seed 3");
        assert_eq!(code, 0);
        let tv: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert!(!tv.is_empty());
        assert!(tv.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"command": "betac", "d": 50.0}"#).unwrap();
        let (_, from_file) = run_to(dir.path(), "a", &format!("betac --config {}", cfg.display()));
        let (_, flagged) = run_to(dir.path(), "b", &format!("betac --config {} --d 100", cfg.display()));
        assert_eq!(from_file.trim().parse::<f64>().unwrap(), beta_c(50.0, KAPPA_C).unwrap());
        assert_eq!(flagged.trim().parse::<f64>().unwrap(), beta_c(100.0, KAPPA_C).unwrap());
    }

    #[test]
    fn bad_config_exits_64() {
        assert_eq!(run_with_threads(args("betac --d -3"), Some(1)), EXIT_USAGE);
        assert_eq!(run_with_threads(args("nosuch"), Some(1)), EXIT_USAGE);
        assert_eq!(run_with_threads(args("sample --epsilon 2"), Some(1)), EXIT_USAGE);
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"command": "mix"}"#).unwrap();
        assert_eq!(run_with_threads(args(&format!("betac --config {}", cfg.display())), Some(1)), EXIT_USAGE);
    }

    #[test]
    fn partition_writes_json_and_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out) = run_to(dir.path(), "p", "partition --n 200 --d 8 --epsilon 0.3 --seed 7");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let status = v["status"].as_str().unwrap();
        match status {
            "ok" => assert_eq!(code, EXIT_OK),
            "fail" => {
                assert_eq!(code, EXIT_PARTITION_FAIL);
                assert!(v["failure"].is_object());
            }
            other => panic!("unexpected status {other}"),
        }
        assert_eq!(v["graph"]["n"], 200);
    }

    #[test]
    fn iharabass_residual_is_small() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out) = run_to(dir.path(), "i", "iharabass --trials 30 --seed 2");
        assert_eq!(code, 0);
        let last: f64 = out.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert!(last <= 1e-8);
    }

    #[test]
    fn tails_theta_emits_pair() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out) = run_to(dir.path(), "t", "tails theta --d 30 --delta 0.5 --samples 2000");
        assert_eq!(code, 0);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "theta");
        let emp: f64 = row[3].parse().unwrap();
        let bound: f64 = row[4].parse().unwrap();
        assert!(emp <= bound);
    }
}
