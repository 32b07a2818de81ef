//! `popdyn`: classify four-bar linkages, simulate pop orbits, estimate
//! rotation numbers, scan them over the ground length and export the
//! closure curve.
//!
//! Exit codes: 0 success, 2 infeasible linkage, 3 orbit drift, 4 ground
//! length outside the admissible interval, 5 monotonicity violation, 1 any
//! other error.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use popdyn::analysis::{linear_grid, DEFAULT_RESOLUTION};
use popdyn::export::{write_chains_svg, write_density_csv, write_gamma_csv, write_gamma_svg, write_scan_csv};
use popdyn::linkage::forward_kinematics_with_tol;
use popdyn::pops::DRIFT_REL_BOUND;
use popdyn::{
    classify, density_report, from_polar, gamma_geometry, on_gamma, orbit_with, scan_rotation,
    theorem_conditions, to_polar, CircleMap, Error, Linkage, Monotonicity, MotionKind,
    OrbitOptions, Pop, ScanOptions,
};

use config::{FileConfig, Start};

const DEFAULT_SIM_POPS: usize = 166;
const DEFAULT_ROTATION_ITERATES: usize = 1_000_000;
const DEFAULT_START_PHI: f64 = 0.3;
const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_QMAX: u64 = 50;
const PERIODICITY_TOL: f64 = 1e-9;
const SVG_CHAINS: usize = 8;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Infeasible { .. }) => 2,
            CliError::Core(Error::DriftExceeded { .. }) => 3,
            CliError::Core(Error::OutsideLambda { .. }) => 4,
            CliError::Core(Error::MonotonicityViolation { .. }) => 5,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "popdyn", version, about = "Pop dynamics of planar four-bar linkages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the motion terms, Grashof flag, motion kind and whether the
    /// density theorem applies.
    Classify(LinkageArg),
    /// Apply alternating pops and write the orbit as CSV.
    Simulate(SimulateArgs),
    /// Estimate the rotation number of the circle map both ways.
    Rotation(RotationArgs),
    /// Rotation number over a grid of ground lengths.
    Scan(ScanArgs),
    /// Extract the closure curve on the angle torus.
    Gamma(GammaArgs),
}

#[derive(Args, Debug)]
struct LinkageArg {
    /// Inline JSON {"l1":..,"l2":..,"l3":..,"L":..} or a path to a JSON file.
    #[arg(long)]
    linkage: String,
}

#[derive(Args, Debug)]
struct StartArgs {
    /// Start angles as JSON {"theta1":..,"theta2":..}; must lie on the closure curve.
    #[arg(long)]
    start_theta: Option<String>,
    /// Start as a polar angle on the closure curve.
    #[arg(long, allow_negative_numbers = true)]
    start_phi: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    linkage: LinkageArg,
    #[command(flatten)]
    start: StartArgs,
    /// Number of pops [default: 166].
    #[arg(long)]
    n: Option<usize>,
    /// First pop: p12 or p23 [default: p12].
    #[arg(long)]
    first: Option<String>,
    /// Project every state back onto the closure curve.
    #[arg(long)]
    renormalize: bool,
    /// Orbit CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Overlay of selected planar chains, first black to last red.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RotationArgs {
    #[command(flatten)]
    linkage: LinkageArg,
    #[command(flatten)]
    start: StartArgs,
    /// Iterates of the orbit average [default: 1000000].
    #[arg(long)]
    n: Option<usize>,
    /// Largest period searched [default: 50].
    #[arg(long)]
    qmax: Option<u64>,
    /// Quadrature tolerance of the integral estimate [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Gap history of the orbit, columns n,max_gap.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Bars as JSON; "L" is ignored.
    #[command(flatten)]
    linkage: LinkageArg,
    /// Ground lengths as min:max:count, endpoints included.
    #[arg(long)]
    grid: Option<String>,
    /// Also search for periods up to this length.
    #[arg(long)]
    qmax: Option<u64>,
    /// Quadrature tolerance [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Scan CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GammaArgs {
    #[command(flatten)]
    linkage: LinkageArg,
    /// Starting grid size per axis, doubled until the topology settles [default: 1024].
    #[arg(long)]
    resolution: Option<usize>,
    /// Polyline CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Torus plot.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

/// Writes CSV to `path` or stdout; returns whether stdout was used so that
/// summaries can move to stderr.
fn emit_csv(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<bool, CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush()?;
            Ok(false)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
            Ok(true)
        }
    }
}

fn summary(to_stderr: bool, lines: &[String]) {
    for line in lines {
        if to_stderr {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
}

fn merged_start(args: &StartArgs, file: &FileConfig) -> Result<Option<Start>, CliError> {
    let (theta, phi) = if args.start_theta.is_some() || args.start_phi.is_some() {
        let theta = args.start_theta.as_deref().map(config::parse_start_theta).transpose()?;
        (theta, args.start_phi)
    } else {
        (file.start_theta, file.start_phi)
    };
    config::start(theta, phi)
}

/// Start angles on the closure curve.
fn resolve_start(linkage: &Linkage, start: Start) -> Result<popdyn::AngleConfig, CliError> {
    match start {
        Start::Theta(a) => {
            if !on_gamma(linkage, &a, linkage.default_tol()) {
                let residual = (popdyn::lbar(&linkage.bars(), &a) - linkage.ground()).abs();
                return Err(Error::NotOnManifold {
                    residual,
                    tol: linkage.default_tol(),
                }
                .into());
            }
            Ok(a)
        }
        Start::Phi(phi) => Ok(from_polar(&linkage.bars(), linkage.ground(), phi)?),
    }
}

fn cmd_classify(args: &LinkageArg) -> Result<(), CliError> {
    let (raw, _) = config::load(&args.linkage)?;
    let linkage = raw.linkage()?;
    let c = classify(&linkage);
    println!("T1 = {}", c.t1);
    println!("T2 = {}", c.t2);
    println!("T3 = {}", c.t3);
    println!("grashof = {}", c.grashof);
    println!("kind = {:?}", c.kind);
    println!("theorem = {}", theorem_conditions(&linkage));
    if c.kind == MotionKind::DegenerateBoundary {
        eprintln!("warning: a motion term vanishes; the linkage can fold flat (DegenerateBoundary)");
    }
    Ok(())
}

/// `count` state indices spread evenly over `0..=last`, both ends included.
fn chain_indices(last: usize, count: usize) -> Vec<usize> {
    if last == 0 || count < 2 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..count)
        .map(|k| ((k as f64 * last as f64) / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (raw, file) = config::load(&args.linkage.linkage)?;
    let linkage = raw.linkage()?;
    let n = args.n.or(file.n).unwrap_or(DEFAULT_SIM_POPS);
    let first = match args.first.as_deref().or(file.first.as_deref()) {
        Some(s) => config::parse_pop(s)?,
        None => Pop::P12,
    };
    let renormalize = args.renormalize || file.renormalize.unwrap_or(false);
    let csv = args.csv.clone().or(file.csv.clone());
    let svg = args.svg.clone().or(file.svg.clone());
    let start = merged_start(&args.start, &file)?
        .ok_or_else(|| CliError::Usage("simulate needs --start-theta or --start-phi".into()))?;
    let start = resolve_start(&linkage, start)?;
    let options = OrbitOptions {
        drift_bound: None,
        renormalize,
    };
    let trace = orbit_with(&linkage, start, n, first, &options)?;
    let on_stdout = emit_csv(csv.as_deref(), |w| trace.write_csv(w))?;
    if let Some(path) = svg {
        let states: Vec<_> = trace.states().collect();
        let tol = DRIFT_REL_BOUND * linkage.ground();
        let chains = chain_indices(n, SVG_CHAINS)
            .into_iter()
            .map(|i| forward_kinematics_with_tol(&linkage, &states[i], tol))
            .collect::<Result<Vec<_>, _>>()?;
        let mut w = create(&path)?;
        write_chains_svg(&mut w, &linkage, &chains)?;
        w.flush()?;
    }
    summary(
        on_stdout,
        &[format!(
            "{n} pops from ({:.6}, {:.6}), max residual {:.3e}",
            start.theta1(),
            start.theta2(),
            trace.max_residual()
        )],
    );
    Ok(())
}

fn cmd_rotation(args: &RotationArgs) -> Result<(), CliError> {
    let (raw, file) = config::load(&args.linkage.linkage)?;
    let linkage = raw.linkage()?;
    let map = CircleMap::from_linkage(&linkage)?;
    let n = args.n.or(file.n).unwrap_or(DEFAULT_ROTATION_ITERATES);
    let q_max = args.qmax.or(file.qmax).unwrap_or(DEFAULT_QMAX);
    let tol = args.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
    let csv = args.csv.clone().or(file.csv.clone());
    let phi0 = match merged_start(&args.start, &file)? {
        Some(Start::Phi(p)) => p,
        Some(Start::Theta(a)) => {
            let a = resolve_start(&linkage, Start::Theta(a))?;
            to_polar(&linkage.bars(), &a)?.phi
        }
        None => DEFAULT_START_PHI,
    };
    let orbit = map.rotation_number_orbit(n, phi0)?;
    let integral = map.rotation_number_integral(phi0, tol)?;
    let period = map.detect_periodicity(q_max, PERIODICITY_TOL)?;
    println!("orbit: rho = {:.12}, error_bound = {:.3e}, n = {n}", orbit.rho, orbit.error_bound);
    println!(
        "integral: rho = {:.12}, error_bound = {:.3e}, nodes = {}",
        integral.rho, integral.error_bound, integral.iterations_or_nodes
    );
    println!(
        "difference: {:.3e}",
        popdyn::circle::rho_distance(orbit.rho, integral.rho)
    );
    match period.rational {
        Some((p, q)) => println!("periodic: q = {q} (rho = {p}/{q}, defect {:.3e})", period.max_defect),
        None => println!("periodic: none with q <= {q_max}"),
    }
    if let Some(path) = csv {
        let report = density_report(&linkage, phi0, n)?;
        let mut w = create(&path)?;
        write_density_csv(&mut w, &report)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_scan(args: &ScanArgs) -> Result<(), CliError> {
    let (raw, file) = config::load(&args.linkage.linkage)?;
    let bars = raw.bars()?;
    let grid = args
        .grid
        .clone()
        .or(file.grid.clone())
        .ok_or_else(|| CliError::Usage("scan needs --grid min:max:count".into()))?;
    let (min, max, count) = config::parse_grid(&grid)?;
    let options = ScanOptions {
        tol: args.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
        q_max: args.qmax.or(file.qmax),
        periodicity_tol: PERIODICITY_TOL,
    };
    let csv = args.csv.clone().or(file.csv.clone());
    let report = scan_rotation(&bars, &linear_grid(min, max, count), &options)?;
    let on_stdout = emit_csv(csv.as_deref(), |w| write_scan_csv(w, &report))?;
    let line = match report.verdict {
        Monotonicity::Monotone {
            increasing,
            min_margin,
        } => format!(
            "monotone {} (min step {:.3e}, max error bound {:.3e})",
            if increasing { "increasing" } else { "decreasing" },
            min_margin,
            report.max_error_bound()
        ),
        Monotonicity::Skipped => "skipped (theorem conditions not met)".into(),
        Monotonicity::Violated { index, .. } => format!("violated between rows {index} and {}", index + 1),
    };
    summary(on_stdout, &[line]);
    report.check()?;
    Ok(())
}

fn cmd_gamma(args: &GammaArgs) -> Result<(), CliError> {
    let (raw, file) = config::load(&args.linkage.linkage)?;
    let linkage = raw.linkage()?;
    let resolution = args.resolution.or(file.resolution).unwrap_or(DEFAULT_RESOLUTION);
    let csv = args.csv.clone().or(file.csv.clone());
    let svg = args.svg.clone().or(file.svg.clone());
    let g = gamma_geometry(&linkage, resolution)?;
    let on_stdout = emit_csv(csv.as_deref(), |w| write_gamma_csv(w, &g))?;
    if let Some(path) = svg {
        let mut w = create(&path)?;
        write_gamma_svg(&mut w, &g)?;
        w.flush()?;
    }
    summary(
        on_stdout,
        &[
            format!("components = {}", g.components),
            format!("resolution = {}", g.resolution),
            format!("max_residual = {:.3e}", g.max_residual),
            format!("avoids_pi_lines = {}", g.avoids_pi_lines),
        ],
    );
    Ok(())
}

/// Caps the rayon pool at `POPDYN_THREADS` when set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("POPDYN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("POPDYN_THREADS must be a positive integer, got {value}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Rotation(a) => cmd_rotation(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Gamma(a) => cmd_gamma(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
