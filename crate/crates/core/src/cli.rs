//! Command-line front end: `design`, `sweep`, `eval` and `staircase`.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration or schema
//! error, 3 design did not converge (output files are still written).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{loglog_slope, sweep, DesignOptions, DEFAULT_K_MIN};
use crate::divergence::bre_divergence;
use crate::error::{Error, Result};
use crate::io::{write_risk_curve, write_staircase, write_sweep, Quantizer, QuantizerFile, SweepSummary, TOOL_VERSION};
use crate::models::{BinaryGaussianModel, DetectionModel, ExponentialTernaryModel, Model};
use crate::scalar::ScalarDesignOptions;
use crate::simplex::SimplexPoint;
use crate::simplex_quant::SimplexDesignOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "brequant", version, about = "Minimax Bayes risk error quantization of prior probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Design a quantizer; writes quantizer.json and risk_curve.csv.
    Design(DesignArgs),
    /// Design over a range of K; writes sweep.csv and sweep_fit.json.
    Sweep(SweepArgs),
    /// Quantize one prior with a stored quantizer.
    Eval(EvalArgs),
    /// Binary staircase (p0, q(p0)); writes staircase.csv.
    Staircase(StaircaseArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gaussian,
    Exponential,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c10: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c01: f64,
    /// Rates of the three exponential hypotheses.
    #[arg(long, value_delimiter = ',', default_value = "5,4,3", allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Stopping tolerance on parameter movement.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Number of starts (ternary; default 8) or extra perturbed starts (binary; default 0).
    #[arg(long)]
    pub multistart: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: i64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Inclusive range `lo..hi`.
    #[arg(long = "K-range")]
    pub k_range: String,
    /// Smallest K used in the slope fit.
    #[arg(long, default_value_t = DEFAULT_K_MIN)]
    pub k_min: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub quantizer: PathBuf,
    /// Prior: `p0` for binary models, `p0,p1,p2` for ternary ones.
    #[arg(long, value_delimiter = ',')]
    pub prior: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct StaircaseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "K", default_value_t = 11)]
    pub k: i64,
    /// Use a stored binary quantizer instead of designing one.
    #[arg(long)]
    pub quantizer: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

impl ModelArgs {
    pub fn build(&self) -> Result<Model> {
        let m = match self.model {
            ModelKind::Gaussian => BinaryGaussianModel::new(self.mu, self.sigma2, self.c10, self.c01)?.into(),
            ModelKind::Exponential => {
                if self.lambda.len() != 3 {
                    return Err(Error::Config(format!("--lambda needs 3 values, got {}", self.lambda.len())));
                }
                ExponentialTernaryModel::new(self.lambda[0], self.lambda[1], self.lambda[2])?.into()
            }
        };
        Ok(m)
    }
}

impl SolverArgs {
    fn design_options(&self) -> Result<DesignOptions> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("--tol must be positive, got {t}")));
            }
        }
        let mut scalar = ScalarDesignOptions { seed: self.seed, ..Default::default() };
        let mut simplex = SimplexDesignOptions { seed: self.seed, ..Default::default() };
        if let Some(t) = self.tol {
            scalar.tol = t;
            simplex.tol = t;
        }
        if let Some(n) = self.max_iter {
            scalar.max_iter = n;
            simplex.max_iter = n;
        }
        if let Some(n) = self.multistart {
            scalar.multistart = n;
            simplex.multistart = n;
        }
        Ok(DesignOptions { scalar, simplex })
    }
}

fn check_k(k: i64) -> Result<usize> {
    if k < 1 {
        return Err(Error::Config(format!("K must be at least 1, got {k}")));
    }
    Ok(k as usize)
}

/// Parses `lo..hi` (inclusive) or a single K.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid K range {s:?}; expected lo..hi"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?),
        None => {
            let k = s.trim().parse::<usize>().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_design(a: &DesignArgs) -> Result<i32> {
    let model = a.model.build()?;
    let k = check_k(a.k)?;
    let opts = a.solver.design_options()?;
    let (q, report) = Quantizer::design(&model, k, &opts)?;
    let file = QuantizerFile::new(&model, &q, &report);
    fs::create_dir_all(&a.solver.out)?;
    fs::write(a.solver.out.join("quantizer.json"), file.to_json()?)?;
    write_risk_curve(&model, &q, create(&a.solver.out, "risk_curve.csv")?)?;
    log::info!("K={k} D={} converged={} iterations={}", report.max_divergence, report.converged, report.iterations);
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let model = a.model.build()?;
    let ks = parse_k_range(&a.k_range)?;
    let opts = a.solver.design_options()?;
    let result = sweep(&model, &ks, &opts)?;
    write_sweep(&result, create(&a.solver.out, "sweep.csv")?)?;
    let (slope_fit, reason) = match loglog_slope(&result, a.k_min) {
        Ok(f) => (Some(f), None),
        Err(Error::InsufficientData(_)) => (None, Some("insufficient-data".to_string())),
        Err(e) => return Err(e),
    };
    let summary = SweepSummary { model, k_min: a.k_min, slope_fit, reason, tool_version: TOOL_VERSION.to_string() };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(a.solver.out.join("sweep_fit.json"), json)?;
    let all = result.entries.iter().all(|e| e.converged);
    Ok(if all { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn load(path: &Path) -> Result<(QuantizerFile, Quantizer)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let file = QuantizerFile::from_json(&text)?;
    let q = file.quantizer()?;
    Ok((file, q))
}

fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let (file, q) = load(&a.quantizer)?;
    let model = &file.model;
    let p = match (model.hypotheses(), a.prior.len()) {
        (2, 1) => SimplexPoint::binary(a.prior[0]),
        (m, n) if m == n => SimplexPoint::new(&a.prior),
        (m, n) => Err(Error::Config(format!("prior has {n} values, model has {m} hypotheses"))),
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    let (k, w) = q.quantize(model, &p)?;
    let d = bre_divergence(model, &p, &w)?;
    let report = serde_json::json!({
        "cell": k,
        "weight": w.coords(),
        "divergence": d.value(),
        "max_divergence": q.max_divergence(model)?.value(),
    });
    println!("{report}");
    Ok(EXIT_OK)
}

fn cmd_staircase(a: &StaircaseArgs) -> Result<i32> {
    let (q, converged) = match &a.quantizer {
        Some(path) => (load(path)?.1, true),
        None => {
            let model = a.model.build()?;
            let (q, r) = Quantizer::design(&model, check_k(a.k)?, &a.solver.design_options()?)?;
            (q, r.converged)
        }
    };
    let Quantizer::Scalar(q) = q else {
        return Err(Error::Config("staircase needs a binary quantizer".into()));
    };
    write_staircase(&q, create(&a.solver.out, "staircase.csv")?)?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Schema(_)
        | Error::Domain(_)
        | Error::InvalidModel(_)
        | Error::InvalidPoint(_)
        | Error::UnsupportedDimension(_)
        | Error::Json(_) => EXIT_CONFIG,
        Error::Convergence { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("BREQUANT_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Design(a) => cmd_design(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Staircase(a) => cmd_staircase(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
