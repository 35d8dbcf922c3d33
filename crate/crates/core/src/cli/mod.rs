//! Command-line front end. Exit codes: 0 success, 1 property or tolerance
//! failure, 2 usage or configuration error.

pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::continuum::{tail_limit_check, TestFunction};
use crate::error::Error;
use crate::ids::{ids_counting_estimate, ids_projection_estimate, sandwich, Geometry, IdsCurve};
use crate::kernel::{cache_file_name, kernel_table, read_cache, write_cache, KernelMethod, KernelTable};
use crate::lifshitz::{fit_synthetic, LifshitzFit, ScanPoint, TailScan};
use crate::specialfn::QuadSpec;
use config::{Command, Estimator, RunConfig};
use verify::{run_verify, Level};

pub const CACHE_ENV: &str = "FRACLAT_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "fraclat", version, about = "Fractional Anderson model numerics")]
pub struct Cli {
    /// Worker threads (default: machine parallelism). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Tabulate the lattice kernel (-Δ)^α(z, 0) for |z|_∞ <= radius.
    Kernel(KernelArgs),
    /// Integrated density of states from a JSON run config.
    Ids {
        /// JSON run config.
        config: PathBuf,
        /// Dirichlet, free and Neumann curves with the per-realization ordering check.
        #[arg(long)]
        sandwich: bool,
        /// Output path (default: the config's `output` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Kernel cache directory (default: $FRACLAT_CACHE_DIR when set).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Lifshitz-tail exponent fit from a JSON run config.
    Lifshitz {
        /// JSON run config.
        config: PathBuf,
        /// Fit N(E) = exp(-1/E) instead of simulating.
        #[arg(long)]
        synthetic: bool,
        /// Output path (default: the config's `output` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Kernel cache directory (default: $FRACLAT_CACHE_DIR when set).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Far-field limit of the continuum fractional Laplacian of a Gaussian.
    Continuum(ContinuumArgs),
    /// Property suite over every module.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Fourier,
    Subordination,
    Dft,
    Both,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Lattice dimension.
    #[arg(long)]
    pub dim: usize,
    /// Fractional exponent in (0, 1].
    #[arg(long)]
    pub alpha: f64,
    /// Largest |z|_∞ tabulated.
    #[arg(long)]
    pub radius: usize,
    /// Default: subordination for d >= 2 and α < 1, Fourier otherwise.
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel cache directory (default: $FRACLAT_CACHE_DIR when set).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionChoice {
    /// e^{-|x|^2}
    Gaussian,
    /// e^{-|x|^2/2}
    GaussianHalf,
}

#[derive(Debug, Args)]
pub struct ContinuumArgs {
    /// Dimension, 1 or 2.
    #[arg(long)]
    pub dim: usize,
    /// Fractional exponent in (0, 1).
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "gaussian-half")]
    pub function: FunctionChoice,
    /// Ascending |x| values along the first axis.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub x: Vec<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Small instance counts (the default).
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    /// Acceptance-sized instance counts.
    #[arg(long)]
    pub full: bool,
    /// Master seed for the random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Kernel cache file to check against the kernel invariants.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Also write the JSON summary here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
    fn property(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Json(_)
            | Error::InsufficientKernelRadius { .. }
            | Error::TooManySites { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Failure::usage("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::property(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("fraclat: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Ids {
            config,
            sandwich,
            out,
            cache,
        } => cmd_ids(&config, sandwich, out, cache),
        Cmd::Lifshitz {
            config,
            synthetic,
            out,
            cache,
        } => cmd_lifshitz(&config, synthetic, out, cache),
        Cmd::Continuum(a) => cmd_continuum(a),
        Cmd::Verify(a) => cmd_verify(a),
    }
}

fn cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Failure::property(format!("cannot write {}: {e}", path.display())))
}

/// Kernel table from the cache directory when present, computed (and stored)
/// otherwise. Unreadable cache entries are reported and bypassed, never removed.
pub fn obtain_kernel(
    dim: usize,
    alpha: f64,
    radius: usize,
    method: KernelMethod,
    tol: f64,
    cache: Option<&Path>,
) -> crate::Result<KernelTable> {
    let spec = QuadSpec::default().with_abs_tol(tol);
    spec.validate()?;
    let path = cache.map(|d| d.join(cache_file_name(dim, alpha, radius, method, tol)));
    if let Some(p) = &path {
        if p.exists() {
            match fs::read_to_string(p).map_err(Error::from).and_then(|t| read_cache(&t)) {
                Ok(t) if t.dim() == dim && t.radius() == radius && t.method() == method && t.alpha() == alpha => {
                    return Ok(t)
                }
                Ok(_) => eprintln!(
                    "fraclat: cache entry {} does not match its key; recomputing",
                    p.display()
                ),
                Err(e) => eprintln!("fraclat: ignoring unreadable cache entry {}: {e}", p.display()),
            }
        }
    }
    let table = kernel_table(dim, alpha, radius, method, &spec)?;
    if let (Some(dir), Some(p)) = (cache, &path) {
        if !p.exists() {
            let mut buf = Vec::new();
            write_cache(&table, &mut buf)?;
            fs::create_dir_all(dir)?;
            // write-then-rename so a concurrent reader never sees a partial file
            let tmp = p.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, &buf)?;
            fs::rename(&tmp, p)?;
        }
    }
    Ok(table)
}

fn table_bytes(t: &KernelTable) -> crate::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_cache(t, &mut buf)?;
    Ok(buf)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_kernel(a: KernelArgs) -> CmdResult {
    let cache = cache_dir(a.cache);
    let run = |m: KernelMethod| obtain_kernel(a.dim, a.alpha, a.radius, m, a.tol, cache.as_deref());
    let choice = a.method.unwrap_or(match KernelMethod::default_for(a.dim, a.alpha) {
        KernelMethod::Fourier => MethodChoice::Fourier,
        KernelMethod::Subordination => MethodChoice::Subordination,
        KernelMethod::DftGrid => MethodChoice::Dft,
    });
    let single = match choice {
        MethodChoice::Fourier | MethodChoice::Both => KernelMethod::Fourier,
        MethodChoice::Subordination => KernelMethod::Subordination,
        MethodChoice::Dft => KernelMethod::DftGrid,
    };
    let table = run(single)?;
    write_file(&a.out, &table_bytes(&table)?)?;
    if let Err(v) = table.check_signs() {
        return Err(Failure::property(format!(
            "sign invariant violated at displacement {:?} (value {:e})",
            v.displacement, v.value
        )));
    }
    if choice != MethodChoice::Both {
        println!(
            "wrote {} ({} values, method {})",
            a.out.display(),
            table.values().len(),
            table.method()
        );
        return Ok(());
    }
    let other = run(KernelMethod::Subordination)?;
    let mut text = String::new();
    text.push_str("# fraclat kernel comparison\n");
    text.push_str(&format!(
        "# dim={} alpha={} radius={} tol={}\n",
        a.dim,
        num(a.alpha),
        a.radius,
        num(a.tol)
    ));
    let zs: Vec<String> = (1..=a.dim).map(|i| format!("z{i}")).collect();
    text.push_str(&format!("{},fourier,subordination,absdiff\n", zs.join(",")));
    let mut worst: Option<(Vec<i64>, f64)> = None;
    for z in table.displacements() {
        let f = table.get(&z).unwrap();
        let s = other.get(&z).unwrap();
        let diff = (f - s).abs();
        let cols: Vec<String> = z.iter().map(|c| c.to_string()).collect();
        text.push_str(&format!("{},{},{},{}\n", cols.join(","), num(f), num(s), num(diff)));
        let excess = diff - 1e-6 * f.abs().max(1.0);
        if excess > 0.0 && worst.as_ref().is_none_or(|w| excess > w.1) {
            worst = Some((z.clone(), excess));
        }
    }
    let cmp = sibling(&a.out, "compare");
    write_file(&cmp, text.as_bytes())?;
    println!("wrote {} and {}", a.out.display(), cmp.display());
    match worst {
        None => Ok(()),
        Some((z, excess)) => Err(Failure::property(format!(
            "fourier and subordination disagree beyond 1e-6 at displacement {z:?} (excess {excess:e})"
        ))),
    }
}

fn load_config(path: &Path, out: Option<PathBuf>, command: Command) -> std::result::Result<RunConfig, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(o) = out {
        cfg.output = Some(o.to_string_lossy().into_owned());
    }
    Ok(cfg.resolve(command)?)
}

fn config_kernel(cfg: &RunConfig, cache: Option<&Path>) -> crate::Result<Option<KernelTable>> {
    match cfg.kernel {
        None => Ok(None),
        Some(k) => Ok(Some(obtain_kernel(
            cfg.dim,
            cfg.alpha,
            k.radius.expect("resolved"),
            k.method.expect("resolved"),
            k.tol.expect("resolved"),
            cache,
        )?)),
    }
}

fn ids_csv(cfg: &RunConfig, curves: &[IdsCurve], label: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("# fraclat ids\n");
    s.push_str(&format!("# config={}\n", cfg.to_json()));
    s.push_str(&format!("# seed={}\n", cfg.seed.unwrap_or(0)));
    if let Some(l) = label {
        s.push_str(&format!("# curve={l}\n"));
    }
    s.push_str("energy,n_hat,stderr,realizations,dim,L,alpha,lambda,bc,seed\n");
    for c in curves {
        for k in 0..c.energies.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                num(c.energies[k]),
                num(c.n_hat[k]),
                num(c.stderr[k]),
                c.realizations,
                c.geometry.dim,
                c.geometry.l,
                num(c.alpha),
                num(c.coupling),
                c.bc,
                c.seed
            ));
        }
    }
    s
}

fn cmd_ids(path: &Path, with_sandwich: bool, out: Option<PathBuf>, cache: Option<PathBuf>) -> CmdResult {
    let command = Command::Ids {
        sandwich: with_sandwich,
    };
    let cfg = load_config(path, out, command)?;
    let cache = cache_dir(cache);
    let kernel = config_kernel(&cfg, cache.as_deref())?;
    let disorder = cfg.disorder_spec()?;
    let energies = cfg.energy_grid(command)?;
    let realizations = cfg.realizations.expect("resolved");
    let output = PathBuf::from(cfg.output.clone().expect("resolved"));

    if with_sandwich {
        let mut curves: [Vec<IdsCurve>; 3] = Default::default();
        let mut violations = Vec::new();
        for l in cfg.ls() {
            let sw = sandwich(
                Geometry { dim: cfg.dim, l },
                cfg.alpha,
                &disorder,
                &energies,
                realizations,
                kernel.as_ref(),
            )?;
            violations.extend(sw.violations.iter().map(|v| (l, v.clone())));
            curves[0].push(sw.dirichlet);
            curves[1].push(sw.middle);
            curves[2].push(sw.neumann);
        }
        for (k, label) in ["dirichlet", "mid", "neumann"].iter().enumerate() {
            let p = sibling(&output, label);
            write_file(&p, ids_csv(&cfg, &curves[k], Some(label)).as_bytes())?;
            println!("wrote {}", p.display());
        }
        if let Some((l, v)) = violations.first() {
            for (l, v) in &violations {
                eprintln!(
                    "sandwich violation: L={l} realization {} (master seed {}) E={}: D={} mid={} N={}",
                    v.realization, disorder.master_seed, v.energy, v.dirichlet, v.middle, v.neumann
                );
            }
            return Err(Failure::property(format!(
                "{} sandwich violations (first at L={l}, realization {})",
                violations.len(),
                v.realization
            )));
        }
        println!("sandwich ordering holds for {realizations} realizations");
        return Ok(());
    }

    let bc = cfg.bc.expect("resolved");
    let mut curves = Vec::new();
    for l in cfg.ls() {
        let geometry = Geometry { dim: cfg.dim, l };
        let c = match cfg.estimator.expect("resolved") {
            Estimator::Counting => ids_counting_estimate(
                geometry,
                bc,
                cfg.alpha,
                &disorder,
                &energies,
                realizations,
                kernel.as_ref(),
            )?,
            Estimator::Projection => ids_projection_estimate(
                geometry,
                cfg.alpha,
                &disorder,
                &energies,
                realizations,
                kernel.as_ref(),
                cfg.inner_fraction.expect("resolved"),
            )?,
        };
        curves.push(c);
    }
    write_file(&output, ids_csv(&cfg, &curves, None).as_bytes())?;
    println!("wrote {}", output.display());
    Ok(())
}

#[derive(Serialize)]
struct Calibration {
    relative_slope_tolerance: f64,
    note: &'static str,
}

#[derive(Serialize)]
struct LifshitzOutput<'a> {
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    gamma_hat: f64,
    target: f64,
    beta: f64,
    points: &'a [(f64, f64)],
    excluded_points: usize,
    mode: &'static str,
    scan: &'a [ScanPoint],
    warnings: &'a [String],
    calibration: Calibration,
    config: &'a RunConfig,
    seed: u64,
}

/// Empirical slope tolerance used by the acceptance suite.
pub const SLOPE_TOLERANCE: f64 = 0.35;

fn cmd_lifshitz(path: &Path, synthetic: bool, out: Option<PathBuf>, cache: Option<PathBuf>) -> CmdResult {
    let cfg = load_config(path, out, Command::Lifshitz)?;
    let energies = cfg.energy_grid(Command::Lifshitz)?;
    let target = -(cfg.dim as f64) / (2.0 * cfg.alpha);
    let beta = cfg.beta.expect("resolved");
    let n_min = cfg.n_min.expect("resolved");
    let fit: LifshitzFit = if synthetic {
        fit_synthetic(&energies, |e| (-1.0 / e).exp(), n_min, target, beta)?
    } else {
        let cache = cache_dir(cache);
        let kernel = config_kernel(&cfg, cache.as_deref())?;
        let mut scan = TailScan::new(
            cfg.dim,
            cfg.alpha,
            cfg.disorder_spec()?,
            energies,
            beta,
            cfg.realizations.expect("resolved"),
        );
        scan.bc = cfg.bc.expect("resolved");
        scan.kernel = kernel.as_ref();
        scan.n_min = n_min;
        scan.l_min = cfg.l_min.expect("resolved");
        scan.l_max = cfg.l_max.expect("resolved");
        scan.include_saturated = cfg.include_saturated.expect("resolved");
        scan.run()?
    };
    let doc = LifshitzOutput {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        intercept: fit.intercept,
        gamma_hat: fit.gamma_hat,
        target: fit.target,
        beta: fit.beta,
        points: &fit.points,
        excluded_points: fit.excluded_points,
        mode: if synthetic { "synthetic" } else { "simulation" },
        scan: &fit.scan,
        warnings: &fit.warnings,
        calibration: Calibration {
            relative_slope_tolerance: SLOPE_TOLERANCE,
            note:
                "empirical desk-scale tolerance on the fitted slope; the limit statement carries no finite-E error bar",
        },
        config: &cfg,
        seed: cfg.seed.expect("resolved"),
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    text.push('\n');
    let output = PathBuf::from(cfg.output.clone().expect("resolved"));
    write_file(&output, text.as_bytes())?;
    println!(
        "slope {:.6} (stderr {:.6}), target {:.6}, excluded points {}",
        fit.slope, fit.slope_stderr, fit.target, fit.excluded_points
    );
    println!("wrote {}", output.display());
    Ok(())
}

#[derive(Serialize)]
struct ContinuumConfig<'a> {
    dim: usize,
    alpha: f64,
    function: FunctionChoice,
    x: &'a [f64],
    tol: f64,
}

fn cmd_continuum(a: ContinuumArgs) -> CmdResult {
    let phi = match a.function {
        FunctionChoice::Gaussian => TestFunction::gaussian(a.dim),
        FunctionChoice::GaussianHalf => TestFunction::gaussian_half(a.dim),
    }?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::usage(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let spec = QuadSpec::default().with_abs_tol(a.tol);
    let t = tail_limit_check(&phi, a.alpha, &a.x, &spec)?;
    let echo = ContinuumConfig {
        dim: a.dim,
        alpha: a.alpha,
        function: a.function,
        x: &a.x,
        tol: a.tol,
    };
    let mut s = String::new();
    s.push_str("# fraclat continuum\n");
    s.push_str(&format!(
        "# config={}\n",
        serde_json::to_string(&echo).map_err(Error::from)?
    ));
    s.push_str(&format!(
        "# function={} dim={} alpha={}\n",
        phi.name(),
        a.dim,
        num(a.alpha)
    ));
    s.push_str(&format!("# limit={}\n", num(t.limit)));
    s.push_str("x,value,ratio\n");
    for p in &t.points {
        s.push_str(&format!("{},{},{}\n", num(p.x), num(p.value), num(p.ratio)));
    }
    write_file(&a.out, s.as_bytes())?;
    for p in &t.points {
        println!("|x| = {:>8}: ratio {:.6}", p.x, p.ratio);
    }
    if t.last_within && (t.points.len() == 1 || t.approaching) {
        Ok(())
    } else {
        Err(Failure::property(format!(
            "far-field ratio {} is not within 10% of 1 or does not approach it",
            t.points.last().unwrap().ratio
        )))
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let level = if a.full { Level::Full } else { Level::Quick };
    let supplied = match &a.kernel {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read kernel {}: {e}", p.display())))?;
            match read_cache(&text) {
                Ok(t) => Some(t),
                Err(e) => {
                    return Err(Failure::property(format!(
                        "module=kernel check=cache_format file={}: {e}",
                        p.display()
                    )))
                }
            }
        }
    };
    let report = run_verify(level, a.seed, supplied.as_ref())?;
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    if let Some(p) = &a.out {
        write_file(p, text.as_bytes())?;
    }
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    if report.passed {
        return Ok(());
    }
    for f in &report.failures {
        eprintln!(
            "FAIL module={} check={} instance_seed={} margin={:e}: {}",
            f.module,
            f.name,
            f.instance_seed.map_or("-".into(), |s| s.to_string()),
            f.margin,
            f.detail
        );
    }
    Err(Failure::property(format!(
        "{} of {} checks failed",
        report.failures.len(),
        report.checks_run
    )))
}
