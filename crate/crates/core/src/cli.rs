//! Command-line interface. [`run`] parses arguments, dispatches and maps
//! errors to exit codes: 0 success, 1 input error, 2 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::approx::{moment_match_moments, nln_sum_density, GridSpec, NLNComponent};
use crate::error::{Error, Result};
use crate::gaussian_distance::bc_between;
use crate::pipeline::{compare_groups, load_group, report_json, write_outputs, BoundsRule, FitSpec, Reduction, RunConfig};
use crate::quadrature::QuadConfig;
use crate::reduce::{jl_distortion_report, jl_min_dimension, jl_project};
use crate::stein::{
    default_bridge_battery, default_pricing_battery, default_stein_battery, run_bridge_case, run_pricing_case, run_stein_case, BridgeCase, CaseResult,
    PricingCase, SteinCase,
};
use crate::types::{Distribution, DistributionSpec, SampleMatrix};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "BCDIST_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bcdist", version, about = "Bhattacharyya distances between distributions and groups of series")]
struct Cli {
    /// Require --seed for every randomized subcommand.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance between two distributions given as JSON files.
    Distance(DistanceArgs),
    /// Pairwise distance matrices between groups of series.
    Compare(CompareArgs),
    /// Johnson–Lindenstrauss projection tools.
    #[command(subcommand)]
    Jl(JlCommand),
    /// Discrete and grid approximations.
    #[command(subcommand)]
    Approx(ApproxCommand),
    /// Numerical identity batteries.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    a: PathBuf,
    b: PathBuf,
    /// Seed of the randomized rectangle-probability rule.
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice points per replicate for rectangle probabilities.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Pca,
    Jl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Fit {
    Mvn,
    TruncatedMvn,
    Discrete,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Group CSV files, as PATH or NAME=PATH.
    #[arg(required = true)]
    groups: Vec<String>,
    /// Run configuration JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Significant digits of the PCA retention rule.
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Explicit projection dimension.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    fit: Option<Fit>,
    /// Nodes per axis for the discrete fit.
    #[arg(long)]
    nodes: Option<usize>,
    /// Truncation bounds: "observed" or "LOWER,UPPER".
    #[arg(long)]
    bounds: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    log_returns: bool,
    /// Directory for per-iteration JSON/CSV files and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum JlCommand {
    /// Smallest dimension allowed by the distortion bound.
    MinDim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Project the rows of a CSV matrix.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pairwise distance distortion between two CSV matrices.
    Distortion {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        projected: PathBuf,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Debug, Subcommand)]
enum ApproxCommand {
    /// N-point distribution matching given or empirical moments.
    MomentMatch {
        /// Comma-separated raw moments m_0, m_1, ...
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "input")]
        moments: Option<Vec<f64>>,
        /// CSV whose column supplies empirical moments.
        #[arg(long, requires = "column")]
        input: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        nodes: usize,
    },
    /// Grid density of a sum of normal log-normal components.
    NlnGrid {
        /// Component "k,mu_y,sigma_y"; repeat for a sum.
        #[arg(long = "component", required = true, allow_hyphen_values = true)]
        components: Vec<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct BatteryArgs {
    /// JSON array of cases; the built-in battery when absent.
    #[arg(long)]
    cases: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Generalized Stein identity.
    Stein(BatteryArgs),
    /// Distance–covariance relation.
    Bridge(BatteryArgs),
    /// Asset-pricing routes.
    Pricing(BatteryArgs),
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let mut buf: Vec<u8> = Vec::new();
    let status = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
        Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
    };
    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    match status {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn require_seed(strict: bool, seed: Option<u64>, what: &str) -> Result<()> {
    if strict && seed.is_none() {
        return Err(Error::Config(format!("--strict requires --seed for {what}")));
    }
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Distance(a) => distance(a, cli.strict, out),
        Command::Compare(a) => compare(a, cli.strict, out),
        Command::Jl(c) => jl(c, cli.strict, out),
        Command::Approx(c) => approx(c, out),
        Command::Verify(c) => verify(c, out),
    }
}

fn read_distribution(path: &Path) -> Result<Distribution> {
    let text = fs::read_to_string(path)?;
    let spec: DistributionSpec = serde_json::from_str(&text)?;
    Ok(Distribution::try_from(spec)?)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn distance(a: &DistanceArgs, strict: bool, out: &mut dyn Write) -> Result<i32> {
    let p = read_distribution(&a.a)?;
    let q = read_distribution(&a.b)?;
    if matches!(p, Distribution::TruncatedMvn(_)) || matches!(q, Distribution::TruncatedMvn(_)) {
        require_seed(strict, a.seed, "truncated multivariate distances")?;
    }
    let mut cfg = QuadConfig::default();
    if let Some(s) = a.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(n) = a.samples {
        cfg = cfg.with_samples(n);
    }
    cfg.validate()?;
    let d = bc_between(&p, &q, &cfg)?;
    match a.format {
        Format::Json => print_json(out, &d)?,
        Format::Text => writeln!(out, "D={} rho={}", d.distance, d.coefficient)?,
    }
    Ok(0)
}

fn parse_bounds(text: &str) -> Result<BoundsRule> {
    if text == "observed" {
        return Ok(BoundsRule::ObservedRange);
    }
    let parts: Vec<&str> = text.split(',').collect();
    let parse = |s: &str| crate::types::ext_f64::parse_text(s).ok_or_else(|| Error::Config(format!("bad bound {s:?}")));
    match parts.as_slice() {
        [a, b] => Ok(BoundsRule::Fixed(parse(a)?, parse(b)?)),
        _ => Err(Error::Config(format!("bounds must be \"observed\" or \"LOWER,UPPER\", got {text:?}"))),
    }
}

fn run_config(a: &CompareArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<RunConfig>(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    let method = a.method.or(match cfg.reduction {
        Reduction::Pca { .. } if a.digits.is_some() => Some(Method::Pca),
        Reduction::Jl { .. } if a.epsilon.is_some() || a.k.is_some() => Some(Method::Jl),
        _ => None,
    });
    match method {
        Some(Method::Pca) => {
            let current = match cfg.reduction {
                Reduction::Pca { significant_digits } => significant_digits,
                _ => 2,
            };
            cfg.reduction = Reduction::Pca {
                significant_digits: a.digits.unwrap_or(current),
            };
        }
        Some(Method::Jl) => {
            let (e0, k0) = match cfg.reduction {
                Reduction::Jl { epsilon, k } => (epsilon, k),
                _ => (None, None),
            };
            let (epsilon, k) = match (a.epsilon, a.k) {
                (None, None) => (e0.or(if k0.is_none() { Some(0.5) } else { None }), k0),
                (e, k) => (e, k),
            };
            cfg.reduction = Reduction::Jl { epsilon, k };
        }
        None => {}
    }
    if let Some(f) = a.fit {
        cfg.fit = match f {
            Fit::Mvn => FitSpec::Mvn,
            Fit::TruncatedMvn => FitSpec::TruncatedMvn {
                bounds: match cfg.fit {
                    FitSpec::TruncatedMvn { bounds } => bounds,
                    _ => BoundsRule::ObservedRange,
                },
            },
            Fit::Discrete => FitSpec::Discrete {
                nodes: match cfg.fit {
                    FitSpec::Discrete { nodes } => nodes,
                    _ => 3,
                },
            },
        };
    }
    match (&mut cfg.fit, a.nodes, &a.bounds) {
        (FitSpec::Discrete { nodes }, Some(n), _) => *nodes = n,
        (_, Some(_), _) => return Err(Error::Config("--nodes applies to the discrete fit".into())),
        _ => {}
    }
    match (&mut cfg.fit, &a.bounds) {
        (FitSpec::TruncatedMvn { bounds }, Some(b)) => *bounds = parse_bounds(b)?,
        (_, Some(_)) => return Err(Error::Config("--bounds applies to the truncated fit".into())),
        _ => {}
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(l) = a.shrinkage {
        cfg.shrinkage = l;
    }
    if a.log_returns {
        cfg.log_returns = true;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = Some(o.to_string_lossy().into_owned());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn compare(a: &CompareArgs, strict: bool, out: &mut dyn Write) -> Result<i32> {
    require_seed(strict, a.seed, "compare")?;
    let cfg = run_config(a)?;
    let groups = a
        .groups
        .iter()
        .map(|g| {
            let (name, path) = match g.split_once('=') {
                Some((n, p)) => (n.to_string(), PathBuf::from(p)),
                None => {
                    let p = PathBuf::from(g);
                    let n = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| g.clone());
                    (n, p)
                }
            };
            load_group(&path, &name)
        })
        .collect::<Result<Vec<_>>>()?;
    let result = compare_groups(&groups, &cfg)?;
    match &cfg.output_dir {
        Some(dir) => {
            let written = write_outputs(&result, dir)?;
            for p in written {
                writeln!(out, "{}", p.display())?;
            }
        }
        None => writeln!(out, "{}", report_json(&result)?)?,
    }
    Ok(0)
}

fn read_matrix(path: &Path) -> Result<SampleMatrix> {
    SampleMatrix::read_csv(fs::File::open(path)?)
}

fn jl(c: &JlCommand, strict: bool, out: &mut dyn Write) -> Result<i32> {
    match c {
        JlCommand::MinDim { n, eps } => {
            writeln!(out, "{}", jl_min_dimension(*n, *eps)?)?;
        }
        JlCommand::Project { input, k, eps, seed, output } => {
            require_seed(strict, *seed, "jl project")?;
            let data = read_matrix(input)?;
            let k = match (k, eps) {
                (Some(k), _) => *k,
                (None, Some(e)) => jl_min_dimension(data.n_obs(), *e)?,
                (None, None) => return Err(Error::Config("jl project needs --k or --eps".into())),
            };
            let projected = jl_project(data.values(), k, seed.unwrap_or(0))?;
            let labels = (0..k).map(|i| format!("p{i}")).collect();
            let m = SampleMatrix::new(projected, labels)?;
            match output {
                Some(p) => m.write_csv(fs::File::create(p)?)?,
                None => m.write_csv(&mut *out)?,
            }
        }
        JlCommand::Distortion { original, projected, eps } => {
            let a = read_matrix(original)?;
            let b = read_matrix(projected)?;
            print_json(out, &jl_distortion_report(a.values(), b.values(), *eps)?)?;
        }
    }
    Ok(0)
}

fn parse_component(text: &str) -> Result<NLNComponent> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("component must be \"k,mu_y,sigma_y\", got {text:?}"));
    let [k, mu, sigma] = parts.as_slice() else { return Err(bad()) };
    NLNComponent::new(k.parse().map_err(|_| bad())?, mu.parse().map_err(|_| bad())?, sigma.parse().map_err(|_| bad())?)
}

fn approx(c: &ApproxCommand, out: &mut dyn Write) -> Result<i32> {
    match c {
        ApproxCommand::MomentMatch { moments, input, column, nodes } => {
            let m = match (moments, input, column) {
                (Some(m), _, _) => m.clone(),
                (None, Some(path), Some(col)) => {
                    let data = read_matrix(path)?;
                    let j = data
                        .labels()
                        .iter()
                        .position(|l| l == col)
                        .ok_or_else(|| Error::Config(format!("no column {col:?}")))?;
                    empirical_moments(data.values(), j, 2 * nodes)
                }
                _ => return Err(Error::Config("moment-match needs --moments or --input with --column".into())),
            };
            print_json(out, &moment_match_moments(&m, *nodes)?)?;
        }
        ApproxCommand::NlnGrid {
            components,
            points,
            half_width,
            output,
        } => {
            let comps = components.iter().map(|c| parse_component(c)).collect::<Result<Vec<_>>>()?;
            let mut grid = GridSpec::default();
            if let Some(p) = points {
                grid.points = *p;
            }
            grid.half_width = *half_width;
            let density = nln_sum_density(&comps, &grid, &QuadConfig::default())?;
            match output {
                Some(p) => density.write_csv(fs::File::create(p)?)?,
                None => density.write_csv(&mut *out)?,
            }
        }
    }
    Ok(0)
}

fn empirical_moments(x: &DMatrix<f64>, col: usize, count: usize) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..count)
        .map(|j| x.column(col).iter().map(|v| v.powi(j as i32)).sum::<f64>() / n)
        .collect()
}

fn read_cases<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>, default: impl FnOnce() -> Vec<T>) -> Result<Vec<T>> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(default()),
    }
}

fn emit<T: Serialize>(results: &[CaseResult<T>], output: &Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    match output {
        Some(p) => {
            let mut f = fs::File::create(p)?;
            serde_json::to_writer_pretty(&mut f, results)?;
            writeln!(f)?;
        }
        None => print_json(out, &results)?,
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        log::error!("{failed} of {} cases failed", results.len());
        return Ok(2);
    }
    Ok(0)
}

fn verify(c: &VerifyCommand, out: &mut dyn Write) -> Result<i32> {
    use rayon::prelude::*;
    let cfg = QuadConfig::default();
    match c {
        VerifyCommand::Stein(a) => {
            let cases: Vec<SteinCase> = read_cases(&a.cases, default_stein_battery)?;
            let r = cases.par_iter().map(|c| run_stein_case(c, &cfg)).collect::<Result<Vec<_>>>()?;
            emit(&r, &a.output, out)
        }
        VerifyCommand::Bridge(a) => {
            let cases: Vec<BridgeCase> = read_cases(&a.cases, default_bridge_battery)?;
            let r = cases.par_iter().map(|c| run_bridge_case(c, &cfg)).collect::<Result<Vec<_>>>()?;
            emit(&r, &a.output, out)
        }
        VerifyCommand::Pricing(a) => {
            let cases: Vec<PricingCase> = read_cases(&a.cases, default_pricing_battery)?;
            let r = cases.par_iter().map(|c| run_pricing_case(c, &cfg)).collect::<Result<Vec<_>>>()?;
            emit(&r, &a.output, out)
        }
    }
}
