//! `menger` — command-line front end for the polygonal knot-energy library.
//!
//! Subcommands: `gen` (write curve files), `energy` (evaluate one energy),
//! `flow` (gradient-descent relaxation with a CSV log), `check` (verification
//! suites), `bench` (kernel timings). Numeric results go to standard output
//! with 17 significant digits; timings, notes, and diagnostics go to standard
//! error so diffs on numbers ignore them.
//!
//! Exit codes: 0 success, 1 domain error (bad flags, unreadable or malformed
//! files, invalid parameters), 2 a check suite ran and failed.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use menger::curve::{
    gen_circle, gen_pinched, gen_torus_knot, perturb, read_loop, write_loop, PolygonalLoop,
};
use menger::energies::{evaluate, EnergyName, EnergySpec};
use menger::flow::{relax, FlowConfig, FlowStatus};
use menger::harness::{
    check_charge_blowup, check_circle_convergence, check_fary_milnor, check_ordering,
    check_p_limits, CheckResult,
};

#[derive(Parser)]
#[command(
    name = "menger",
    version,
    about = "Knot energies, relaxation flows, and verification suites on polygonal loops",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a curve file (unit-length polygonal loop as JSON)
    Gen(GenArgs),
    /// Evaluate one energy on a curve file and print its value
    Energy(EnergyArgs),
    /// Relax a curve by projected gradient descent, logging CSV to stdout
    Flow(FlowArgs),
    /// Run a verification suite; exit 2 if it fails
    Check(CheckArgs),
    /// Time evaluation kernels on circles over a schedule of sizes
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    Circle,
    TorusKnot,
    Pinched,
}

#[derive(Args)]
struct GenArgs {
    /// Curve family to generate
    #[arg(long, value_enum)]
    shape: Shape,
    /// Winding count around the torus axis (torus-knot only; default 2)
    #[arg(long = "p-torus")]
    p_torus: Option<u32>,
    /// Winding count around the torus tube (torus-knot only; default 3)
    #[arg(long = "q-torus")]
    q_torus: Option<u32>,
    /// Strand separation of the pinched family (pinched only)
    #[arg(long)]
    gap: Option<f64>,
    /// Vertex count
    #[arg(long)]
    n: usize,
    /// Seed for the vertex perturbation (must accompany --perturb)
    #[arg(long, requires = "perturb")]
    seed: Option<u64>,
    /// Max-norm amplitude of a seeded vertex perturbation (must accompany --seed)
    #[arg(long, requires = "seed")]
    perturb: Option<f64>,
    /// Output curve file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnergyArgs {
    /// Input curve file
    #[arg(long = "in")]
    input: PathBuf,
    /// Energy name: Mp, Ip, Up, Ep, EpSym, Moebius, TK, acn, thickness, ropelength
    #[arg(long)]
    name: String,
    /// Exponent for the p-energies (Mp, Ip, Up, Ep, EpSym); p >= 1
    #[arg(long)]
    p: Option<f64>,
    /// Worker threads (default: MENGER_WORKERS, then all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct FlowArgs {
    /// Input curve file
    #[arg(long = "in")]
    input: PathBuf,
    /// Energy name (one of the p-energies: Mp, Ip, Up, Ep, EpSym)
    #[arg(long)]
    name: String,
    /// Exponent; p >= 1
    #[arg(long)]
    p: f64,
    /// Iteration budget
    #[arg(long = "max-iters")]
    max_iters: usize,
    /// Stop when the projected gradient norm falls below this
    #[arg(long = "grad-tol")]
    grad_tol: f64,
    /// Write a snapshot curve file every K accepted iterations
    #[arg(long = "snapshot-every", requires = "snapshot_prefix")]
    snapshot_every: Option<usize>,
    /// Path prefix for snapshot files (suffix: zero-padded iteration + .json)
    #[arg(long = "snapshot-prefix", requires = "snapshot_every")]
    snapshot_prefix: Option<String>,
    /// Output file for the relaxed curve
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Ordering,
    Plimits,
    Charge,
    Farymilnor,
    Circle,
}

#[derive(Args)]
struct CheckArgs {
    /// Which suite to run
    #[arg(long, value_enum)]
    suite: Suite,
    /// Input curve file (suites: ordering, plimits)
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Comma-separated exponent list (ordering default 1,2,3,4; plimits default 1,2,4,8,16,32)
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Comma-separated strictly decreasing gaps (charge; default 0.1,0.05,0.025,0.0125)
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
    /// Vertex count (charge default 128; farymilnor default 256)
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated increasing vertex counts (circle; default 64,128,256,512)
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

#[derive(Args)]
struct BenchArgs {
    /// Energy name; p-energies run at their scale-invariant exponent
    #[arg(long)]
    name: String,
    /// Comma-separated vertex counts
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Worker threads (default: MENGER_WORKERS, then all cores)
    #[arg(long)]
    workers: Option<usize>,
}

enum Outcome {
    Done,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // one-line diagnostic naming the cause; clap's first line carries it
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: bad arguments"));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, String> {
    match cli.cmd {
        Cmd::Gen(args) => {
            configure_workers(None)?;
            cmd_gen(args)
        }
        Cmd::Energy(args) => {
            configure_workers(args.workers)?;
            cmd_energy(args)
        }
        Cmd::Flow(args) => {
            configure_workers(None)?;
            cmd_flow(args)
        }
        Cmd::Check(args) => {
            configure_workers(None)?;
            cmd_check(args)
        }
        Cmd::Bench(args) => {
            configure_workers(args.workers)?;
            cmd_bench(args)
        }
    }
}

/// Installs the global worker pool: explicit flag first, then the
/// MENGER_WORKERS environment variable, else rayon's default (all cores).
/// Results do not depend on the choice — only wall time does.
fn configure_workers(flag: Option<usize>) -> Result<(), String> {
    let from_env = match std::env::var("MENGER_WORKERS") {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid MENGER_WORKERS value {s:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(k) = flag.or(from_env) {
        if k == 0 {
            return Err("worker count must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn err_str(e: impl Display) -> String {
    e.to_string()
}

fn parse_energy_name(token: &str) -> Result<EnergyName, String> {
    token.parse::<EnergyName>().map_err(err_str)
}

fn cmd_gen(args: GenArgs) -> Result<Outcome, String> {
    if args.shape != Shape::TorusKnot && (args.p_torus.is_some() || args.q_torus.is_some()) {
        return Err("--p-torus/--q-torus only apply to --shape torus-knot".into());
    }
    if args.shape != Shape::Pinched && args.gap.is_some() {
        return Err("--gap only applies to --shape pinched".into());
    }
    let loop_ = match args.shape {
        Shape::Circle => gen_circle(args.n).map_err(err_str)?,
        Shape::TorusKnot => {
            let p = args.p_torus.unwrap_or(2);
            let q = args.q_torus.unwrap_or(3);
            gen_torus_knot(p, q, args.n, 2.0, 1.0).map_err(err_str)?
        }
        Shape::Pinched => {
            let gap = args
                .gap
                .ok_or_else(|| "--gap is required for --shape pinched".to_string())?;
            gen_pinched(gap, args.n).map_err(err_str)?
        }
    };
    let loop_ = match (args.perturb, args.seed) {
        (Some(amplitude), Some(seed)) => {
            if amplitude < 0.0 {
                return Err("--perturb amplitude must be >= 0".into());
            }
            perturb(&loop_, amplitude, seed)
        }
        _ => loop_,
    };
    write_loop(&args.out, &loop_).map_err(err_str)?;
    eprintln!("wrote {} ({} vertices)", args.out.display(), loop_.n());
    Ok(Outcome::Done)
}

fn cmd_energy(args: EnergyArgs) -> Result<Outcome, String> {
    let loop_ = read_loop(&args.input).map_err(err_str)?;
    let name = parse_energy_name(&args.name)?;
    let spec = EnergySpec::new(name, args.p).map_err(err_str)?;
    advise_scale_invariance(&spec);
    let start = Instant::now();
    let report = evaluate(&loop_, spec).map_err(err_str)?;
    let elapsed = start.elapsed().as_secs_f64();
    println!("{:.16e}", report.value);
    eprintln!("elapsed: {elapsed:.3} s (n = {})", report.n);
    Ok(Outcome::Done)
}

/// The scale-invariant exponents are where the theory's finiteness thresholds
/// sit; at or below them the continuum energy stops penalizing shrinking
/// features. The discrete sums stay finite, so this is a note, not an error.
fn advise_scale_invariance(spec: &EnergySpec) {
    if let (Some(p), Some(threshold)) = (spec.p(), spec.name().scale_invariant_p()) {
        if p <= threshold {
            eprintln!(
                "note: {} at p = {p} is at or below its scale-invariance threshold (p = {threshold})",
                spec.name()
            );
        }
    }
}

fn cmd_flow(args: FlowArgs) -> Result<Outcome, String> {
    let start_loop = read_loop(&args.input).map_err(err_str)?;
    let name = parse_energy_name(&args.name)?;
    let spec = EnergySpec::new(name, Some(args.p)).map_err(err_str)?;
    advise_scale_invariance(&spec);
    let mut config = FlowConfig::new(spec, args.max_iters, args.grad_tol);
    config.snapshot_every = args.snapshot_every.unwrap_or(0);
    let t0 = Instant::now();
    let state = relax(&start_loop, &config).map_err(err_str)?;
    let elapsed = t0.elapsed().as_secs_f64();

    println!("iter,energy,grad_norm,step");
    for row in &state.log {
        println!(
            "{},{:.16e},{:.16e},{:.16e}",
            row.iter, row.energy, row.grad_norm, row.step
        );
    }
    write_loop(&args.out, &state.loop_).map_err(err_str)?;
    if let Some(prefix) = &args.snapshot_prefix {
        for (iter, snapshot) in &state.snapshots {
            let path = PathBuf::from(format!("{prefix}{iter:06}.json"));
            write_loop(&path, snapshot).map_err(err_str)?;
        }
        eprintln!("snapshots written: {}", state.snapshots.len());
    }
    let status = match state.status {
        FlowStatus::Converged => "converged",
        FlowStatus::MaxIters => "iteration budget exhausted",
        FlowStatus::Stalled => "stalled (no descent step found)",
    };
    eprintln!(
        "status: {status} after {} iterations; final energy {:.16e}; elapsed: {elapsed:.3} s",
        state.iter,
        state.energy_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(Outcome::Done)
}

fn require_input(input: &Option<PathBuf>, suite: &str) -> Result<PolygonalLoop, String> {
    let path = input
        .as_ref()
        .ok_or_else(|| format!("--in is required for --suite {suite}"))?;
    read_loop(path).map_err(err_str)
}

fn reject_flag<T>(value: &Option<T>, flag: &str, suite: &str) -> Result<(), String> {
    if value.is_some() {
        Err(format!("{flag} does not apply to --suite {suite}"))
    } else {
        Ok(())
    }
}

fn cmd_check(args: CheckArgs) -> Result<Outcome, String> {
    let result: CheckResult = match args.suite {
        Suite::Ordering => {
            reject_flag(&args.gaps, "--gaps", "ordering")?;
            reject_flag(&args.n, "--n", "ordering")?;
            reject_flag(&args.n_list, "--n-list", "ordering")?;
            let loop_ = require_input(&args.input, "ordering")?;
            let p_list = args.p.unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]);
            if p_list.iter().any(|&p| p < 1.0) {
                return Err("exponents must satisfy p >= 1".into());
            }
            check_ordering(&loop_, &p_list)
        }
        Suite::Plimits => {
            reject_flag(&args.gaps, "--gaps", "plimits")?;
            reject_flag(&args.n, "--n", "plimits")?;
            reject_flag(&args.n_list, "--n-list", "plimits")?;
            let loop_ = require_input(&args.input, "plimits")?;
            let schedule = args
                .p
                .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
            if schedule.first().is_none_or(|&p| p < 1.0)
                || schedule.windows(2).any(|w| w[0] >= w[1])
                || schedule.last().is_none_or(|&p| p < 32.0)
            {
                return Err("plimits schedule must be increasing, start at p >= 1, and reach 32".into());
            }
            check_p_limits(&loop_, &schedule)
        }
        Suite::Charge => {
            reject_flag(&args.input, "--in", "charge")?;
            reject_flag(&args.p, "--p", "charge")?;
            reject_flag(&args.n_list, "--n-list", "charge")?;
            let gaps = args
                .gaps
                .unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
            if gaps.len() < 2 || gaps.windows(2).any(|w| w[0] <= w[1]) {
                return Err("--gaps must list at least two strictly decreasing values".into());
            }
            check_charge_blowup(&gaps, args.n.unwrap_or(128))
        }
        Suite::Farymilnor => {
            reject_flag(&args.input, "--in", "farymilnor")?;
            reject_flag(&args.p, "--p", "farymilnor")?;
            reject_flag(&args.gaps, "--gaps", "farymilnor")?;
            reject_flag(&args.n_list, "--n-list", "farymilnor")?;
            let n = args.n.unwrap_or(256);
            if n < 64 {
                return Err("--n must be >= 64 for the knot check".into());
            }
            check_fary_milnor(n)
        }
        Suite::Circle => {
            reject_flag(&args.input, "--in", "circle")?;
            reject_flag(&args.p, "--p", "circle")?;
            reject_flag(&args.gaps, "--gaps", "circle")?;
            reject_flag(&args.n, "--n", "circle")?;
            let n_list = args.n_list.unwrap_or_else(|| vec![64, 128, 256, 512]);
            if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
                return Err("--n-list must list at least three increasing sizes".into());
            }
            check_circle_convergence(&n_list)
        }
    };
    // human-readable table, then the machine-readable report on one line
    print!("{result}");
    println!("{}", serde_json::to_string(&result).map_err(err_str)?);
    if result.passed() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::CheckFailed)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<Outcome, String> {
    if args.n_list.is_empty() {
        return Err("--n-list must not be empty".into());
    }
    let name = parse_energy_name(&args.name)?;
    // p-energies are benchmarked at their scale-invariant exponent: the value
    // is then resolution-limited, not shape-limited, which makes timings
    // comparable across n
    let spec = EnergySpec::new(name, name.scale_invariant_p()).map_err(err_str)?;
    for &n in &args.n_list {
        let loop_ = gen_circle(n).map_err(err_str)?;
        let start = Instant::now();
        let report = evaluate(&loop_, spec).map_err(err_str)?;
        let elapsed = start.elapsed().as_secs_f64();
        println!("{n} {:.16e}", report.value);
        eprintln!("bench {} n={n}: {elapsed:.4} s", spec);
    }
    Ok(Outcome::Done)
}
