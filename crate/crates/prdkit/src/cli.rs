//! Argument parsing and subcommand dispatch for the `prdkit` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use prdkit_core::analysis::{build_envelope, iou, summarize, DEFAULT_B, DEFAULT_EPS};
use prdkit_core::density::{gt_curve, GtConfig, DEFAULT_N_GT};
use prdkit_core::estimator::pareto_clean;
use prdkit_core::extremes::{extreme_report, ExtremeMethod, ExtremeParams, DEFAULT_KPRIME};
use prdkit_core::pipeline::estimate_pr;
use prdkit_core::{make_lambda_grid, split_samples, FamilyConfig, KRule, Method, SigmaRule, Split, SplitSpec};

use crate::embeddings::{read_embeddings, write_embeddings, Format};
use crate::error::{Context, Error, Result};
use crate::experiments::{run_suite, write_run, ExperimentConfig, Suite};
use crate::formats::{read_curve, read_json, read_model, write_curve, write_json, ExtremeJson, SummaryJson};
use crate::plot::render_svg;
use crate::surrogate::{generate, SurrogateConfig};

#[derive(Debug, Parser)]
#[command(name = "prdkit", version, about = "Precision-recall curves between two sets of embeddings")]
#[command(
    after_help = "Set PRDKIT_THREADS to cap the worker threads. Exit codes: 2 bad flags, 3 unreadable input, 4 numeric precondition."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a PR curve between real and generated embeddings.
    Pr(PrArgs),
    /// Scalar extremes (alpha_inf, beta_0) of a published metric.
    Extremes(ExtremesArgs),
    /// AuC, F-scores, PR-median and PR@eps of a curve.
    Summarize(SummarizeArgs),
    /// Intersection over union of two curves; prints one number.
    Iou(IouArgs),
    /// Monte-Carlo ground-truth curve between two density models.
    Gt(GtArgs),
    /// Run an experiment suite and write a run directory.
    Exp(ExpArgs),
    /// Render curves as an SVG figure.
    Plot(PlotArgs),
    /// Write surrogate embeddings for the hybrid suite.
    GenSurrogate(SurrogateArgs),
}

#[derive(Debug, Args)]
pub struct PrArgs {
    /// Embeddings of the real distribution P (csv, npy or raw).
    #[arg(long)]
    pub real: PathBuf,
    /// Embeddings of the generated distribution Q.
    #[arg(long)]
    pub fake: PathBuf,
    /// Classifier family: knn, kde, ipr or cov.
    #[arg(long, default_value = "knn")]
    pub method: String,
    /// Neighbor count, or sqrt for ceil(sqrt(n)).
    #[arg(long, default_value = "sqrt")]
    pub k: String,
    /// KDE bandwidth, or auto for the mean distance to the 100th neighbor.
    #[arg(long, default_value = "auto")]
    pub sigma: String,
    /// Training fraction of each set, or none to train and test on everything.
    #[arg(long, default_value = "0.5")]
    pub split: String,
    /// Number of points on the slope grid.
    #[arg(long, default_value_t = 101)]
    pub lambdas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; metadata goes to the same path with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtremesArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub fake: PathBuf,
    /// One of ipr, cov, eas, prc, ppr.
    #[arg(long)]
    pub method: String,
    /// Neighbor count, or sqrt for ceil(sqrt(n)).
    #[arg(long, default_value = "sqrt")]
    pub k: String,
    /// Neighbors required by prc.
    #[arg(long, default_value_t = DEFAULT_KPRIME)]
    pub kprime: usize,
    /// PPR radius; default is the mean distance to the 4th neighbor within the real set.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Training fraction, or none (the default) to use every point on both sides.
    #[arg(long, default_value = "none")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub curve: PathBuf,
    /// F-score weight b (also reports 1/b).
    #[arg(long, default_value_t = DEFAULT_B)]
    pub b: f64,
    /// Tolerance of PR@eps.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IouArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct GtArgs {
    /// Model JSON of P.
    #[arg(long)]
    pub p: PathBuf,
    /// Model JSON of Q.
    #[arg(long)]
    pub q: PathBuf,
    /// Monte-Carlo draws from each model.
    #[arg(long, default_value_t = DEFAULT_N_GT)]
    pub n_gt: usize,
    #[arg(long, default_value_t = 101)]
    pub lambdas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    /// shift, gmm, variability or hybrid.
    #[arg(long)]
    pub suite: String,
    /// JSON configuration; missing fields take the suite defaults
    /// (k=sqrt, split=0.5, lambdas=101, n-gt=100000, n=10000, d=64).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the repetition count of the configuration.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Curve CSV files, drawn in order.
    #[arg(long, num_args = 1.., required = true)]
    pub curves: Vec<PathBuf>,
    #[arg(long, default_value = "")]
    pub title: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    /// Per-axis variance decays as j^(-spectrum).
    #[arg(long, default_value_t = 1.0)]
    pub spectrum: f64,
    /// Truncation in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    /// Length of the mean offset applied at psi=0.
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    /// Seed of the shared rotation, centre and offset.
    #[arg(long, default_value_t = 0)]
    pub rotation_seed: u64,
    /// Seed of the draws.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; the format follows the extension.
    #[arg(long)]
    pub out: PathBuf,
}

fn usage<T, E: std::fmt::Display>(r: std::result::Result<T, E>, flag: &str) -> Result<T> {
    r.map_err(|e| Error::usage(format!("--{flag}: {e}")))
}

fn parse_split(s: &str, seed: u64) -> Result<SplitSpec> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(SplitSpec::disabled());
    }
    let f: f64 = usage(s.parse(), "split")?;
    let spec = SplitSpec::new(f, seed);
    usage(spec.validate(), "split")?;
    Ok(spec)
}

fn lambda_grid(m: usize) -> Result<prdkit_core::LambdaGrid> {
    usage(make_lambda_grid(m), "lambdas")
}

/// Parses the process arguments and runs the subcommand.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pr(a) => cmd_pr(a),
        Command::Extremes(a) => cmd_extremes(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Iou(a) => cmd_iou(a),
        Command::Gt(a) => cmd_gt(a),
        Command::Exp(a) => cmd_exp(a),
        Command::Plot(a) => cmd_plot(a),
        Command::GenSurrogate(a) => cmd_gen_surrogate(a),
    }
}

fn read_pair(real: &Path, fake: &Path) -> Result<(prdkit_core::SampleSet, prdkit_core::SampleSet)> {
    let x = read_embeddings(real, None)?.with_label(real.display().to_string());
    let y = read_embeddings(fake, None)?.with_label(fake.display().to_string());
    if x.dim() != y.dim() {
        return Err(Error::parse(
            fake,
            format!("dimension {} does not match {} in {}", y.dim(), x.dim(), real.display()),
        ));
    }
    Ok((x, y))
}

pub fn cmd_pr(a: PrArgs) -> Result<()> {
    let method: Method = usage(a.method.parse(), "method")?;
    let k: KRule = usage(a.k.parse(), "k")?;
    let sigma: SigmaRule = usage(a.sigma.parse(), "sigma")?;
    let spec = parse_split(&a.split, a.seed)?;
    let grid = lambda_grid(a.lambdas)?;
    let (x, y) = read_pair(&a.real, &a.fake)?;
    let curve = estimate_pr(&x, &y, &FamilyConfig { method, k, sigma }, &spec, &grid).context("pr")?;
    write_curve(&curve, &a.out)
}

pub fn cmd_extremes(a: ExtremesArgs) -> Result<()> {
    let method: ExtremeMethod = usage(a.method.parse(), "method")?;
    let k: KRule = usage(a.k.parse(), "k")?;
    if a.kprime == 0 {
        return Err(Error::usage("--kprime must be at least 1"));
    }
    if let Some(r) = a.radius.filter(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::usage(format!("--radius must be positive, got {r}")));
    }
    let spec = parse_split(&a.split, a.seed)?;
    let (x, y) = read_pair(&a.real, &a.fake)?;
    let split = if spec.enabled { split_samples(&x, &y, &spec) } else { Split::unsplit(&x, &y) }.context("extremes")?;
    let params = ExtremeParams { k: k.resolve(x.len().min(y.len())), kprime: a.kprime, radius: a.radius };
    let report = extreme_report(method, &split, &params).context("extremes")?;
    emit(&ExtremeJson::from(&report), a.out.as_deref())
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
            Ok(())
        }
    }
}

pub fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    if !(a.b > 0.0 && a.b.is_finite()) {
        return Err(Error::usage("--b must be positive"));
    }
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(Error::usage("--eps must lie in (0, 1)"));
    }
    let curve = read_curve(&a.curve)?;
    let report = summarize(&pareto_clean(&curve), a.b, a.eps).context(a.curve.display())?;
    emit(&SummaryJson::from(&report), a.out.as_deref())
}

pub fn cmd_iou(a: IouArgs) -> Result<()> {
    let env = |p: &Path| -> Result<_> { build_envelope(&pareto_clean(&read_curve(p)?)).context(p.display()) };
    let v = iou(&env(&a.a)?, &env(&a.b)?).context("iou")?;
    println!("{v:.6}");
    Ok(())
}

pub fn cmd_gt(a: GtArgs) -> Result<()> {
    if a.n_gt < 2 {
        return Err(Error::usage("--n-gt must be at least 2"));
    }
    let grid = lambda_grid(a.lambdas)?;
    let p = read_model(&a.p)?;
    let q = read_model(&a.q)?;
    if p.dim() != q.dim() {
        return Err(Error::parse(&a.q, format!("dimension {} does not match {}", q.dim(), p.dim())));
    }
    let curve = gt_curve(&p, &q, &GtConfig::new(grid, a.seed).with_n_gt(a.n_gt)).context("gt")?;
    write_curve(&curve, &a.out)
}

pub fn cmd_exp(a: ExpArgs) -> Result<()> {
    let suite: Suite = a.suite.parse()?;
    let mut cfg = match &a.config {
        Some(p) => {
            let mut c: ExperimentConfig = read_json(p)?;
            c.suite = suite;
            c
        }
        None => ExperimentConfig::for_suite(suite),
    };
    if let Some(r) = a.reps {
        cfg.repetitions = Some(r);
    }
    cfg.validate()?;
    let out = run_suite(&cfg)?;
    write_run(&a.out, &cfg, &out)?;
    print!("{}", out.table.to_csv());
    Ok(())
}

pub fn cmd_plot(a: PlotArgs) -> Result<()> {
    let curves = a
        .curves
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, read_curve(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let svg = render_svg(&curves, &a.title);
    std::fs::write(&a.out, svg).map_err(|e| Error::io(&a.out, e))
}

pub fn cmd_gen_surrogate(a: SurrogateArgs) -> Result<()> {
    let format = Format::from_path(&a.out)?;
    let cfg = SurrogateConfig {
        n: a.n,
        d: a.d,
        spectrum: a.spectrum,
        offset: a.offset,
        rotation_seed: a.rotation_seed,
        sample_seed: a.seed,
    };
    let s = generate(&cfg, a.psi)?;
    write_embeddings(&s, &a.out, format)
}

/// Sizes the global rayon pool from `PRDKIT_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PRDKIT_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::usage(format!("PRDKIT_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::usage(e.to_string()))
}
