//! Command line front end for the equidistant-state tomography library.
//!
//! Exit codes: 0 success, 1 argument parsing, 2 domain error (invalid
//! configuration, malformed physics, refused reconstruction), 3 file and
//! format trouble.

use clap::{Args, Parser, Subcommand};
use eqtomo_core::density::{fidelity, random_density, trace_distance, DensityError};
use eqtomo_core::equidistant::{
    build_state_set, povm_completeness_defect, sic_check, EquidistantConfig, EquidistantError,
    DEFAULT_TOLERANCE,
};
use eqtomo_core::io::{self, Document, FormatError};
use eqtomo_core::measurement::{
    born_probabilities, estimate_probabilities, sample_counts, MeasurementError,
    ProbabilityTable,
};
use eqtomo_core::tomography::{
    even_dim_defect, reconstruct, reconstruct_with, ReconstructOptions, TomographyError,
};
use eqtomo_core::{Complex64, DMatrix};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eqtomo",
    about = "State tomography with equidistant measurement families",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a measurement family and write it to a states file
    States(StatesArgs),
    /// Compute the exact outcome table of a state under a family
    Probe(ProbeArgs),
    /// Draw finite-shot counts from an exact table
    Simulate(SimulateArgs),
    /// Invert a table (or counts) back into a density matrix
    Reconstruct(ReconstructArgs),
    /// Show why even dimensions cannot be reconstructed
    DemoEven(DemoEvenArgs),
    /// Scan overlap strength against reconstruction quality
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Hilbert space dimension
    #[arg(long)]
    dim: usize,
    /// Overlap modulus |alpha|
    #[arg(long)]
    alpha_mod: f64,
    /// Overlap phase: radians, or one of `0`, `pi`, `pi/2`, `pi/3`, ...
    #[arg(long, value_parser = parse_theta)]
    theta: f64,
}

impl ConfigArgs {
    fn build(&self) -> Result<EquidistantConfig, AppError> {
        Ok(EquidistantConfig::new(self.dim, self.alpha_mod, self.theta)?)
    }
}

#[derive(Args)]
struct StatesArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output states file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Report file carrying the state to probe
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with_all = ["random_rank", "seed"],
        required_unless_present = "random_rank"
    )]
    state: Option<PathBuf>,
    /// Draw a random state of this rank instead of reading one
    #[arg(long, value_name = "RANK", requires = "seed")]
    random_rank: Option<usize>,
    /// Seed for the random state
    #[arg(long, value_name = "SEED", requires = "random_rank")]
    seed: Option<u64>,
    /// Output probabilities file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the probed state (useful as `--expected` later)
    #[arg(long, value_name = "FILE")]
    state_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Input probabilities file (must be exact)
    #[arg(long, value_name = "FILE")]
    probs: PathBuf,
    /// Number of shots to draw
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    /// Sampling seed
    #[arg(long)]
    seed: u64,
    /// Output counts file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the relative-frequency estimate as a probabilities file
    #[arg(long, value_name = "FILE")]
    estimate_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Input probabilities or counts file
    #[arg(long, value_name = "FILE")]
    probs: PathBuf,
    /// Keep the raw inversion, skip projection onto physical states
    #[arg(long)]
    no_project: bool,
    /// Report or states file with the true state, for quality metrics
    #[arg(long, value_name = "FILE")]
    expected: Option<PathBuf>,
    /// Output report file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoEvenArgs {
    /// Even dimension to demonstrate
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0.3)]
    alpha_mod: f64,
    #[arg(long, value_parser = parse_theta, default_value = "0")]
    theta: f64,
    /// Size of the hidden off-diagonal part (default 0.5/dim)
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Hilbert space dimension
    #[arg(long)]
    dim: usize,
    /// Overlap phase, as for the other commands
    #[arg(long, value_parser = parse_theta)]
    theta: f64,
    /// Overlap grid as LO:HI:STEPS, e.g. 0.05:0.45:9
    #[arg(long, value_name = "LO:HI:STEPS", value_parser = parse_grid)]
    alpha_grid: GridSpec,
    /// Shots per trial; 0 means exact tables
    #[arg(long, default_value_t = 0)]
    shots: u64,
    /// Random states per grid point
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// Base seed; trial seeds are derived deterministically
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct GridSpec(Vec<f64>);

fn parse_theta(token: &str) -> Result<f64, String> {
    let token = token.trim();
    if token == "0" {
        return Ok(0.0);
    }
    if token == "pi" {
        return Ok(PI);
    }
    if let Some(denominator) = token.strip_prefix("pi/") {
        let d: f64 = denominator
            .parse()
            .map_err(|_| format!("bad denominator in `{token}`"))?;
        if d <= 0.0 {
            return Err(format!("denominator must be positive in `{token}`"));
        }
        return Ok(PI / d);
    }
    token
        .parse::<f64>()
        .map_err(|_| format!("`{token}` is not a phase (try 0, pi, pi/2 or a number in radians)"))
}

fn parse_grid(token: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = token.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("`{token}` is not LO:HI:STEPS"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad grid start `{lo}`"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad grid end `{hi}`"))?;
    let steps: usize = steps.parse().map_err(|_| format!("bad step count `{steps}`"))?;
    if steps == 0 {
        return Err("grid needs at least one step".into());
    }
    if hi < lo {
        return Err(format!("grid end {hi} is below start {lo}"));
    }
    if steps == 1 {
        return Ok(GridSpec(vec![lo]));
    }
    let pitch = (hi - lo) / (steps - 1) as f64;
    Ok(GridSpec((0..steps).map(|i| lo + pitch * i as f64).collect()))
}

#[derive(Debug)]
enum AppError {
    /// The request is well formed but physically or numerically invalid.
    Domain(String),
    /// Reading, writing, or decoding a file failed.
    Io(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Domain(_) => 2,
            AppError::Io(_) => 3,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Domain(message) | AppError::Io(message) => write!(f, "{message}"),
        }
    }
}

impl From<FormatError> for AppError {
    fn from(error: FormatError) -> Self {
        match error {
            FormatError::Io(_)
            | FormatError::MalformedDocument { .. }
            | FormatError::SchemaMismatch { .. } => AppError::Io(error.to_string()),
            FormatError::NonFiniteValue { .. }
            | FormatError::InvariantViolation(_)
            | FormatError::KindMismatch { .. } => AppError::Domain(error.to_string()),
        }
    }
}

impl From<EquidistantError> for AppError {
    fn from(error: EquidistantError) -> Self {
        AppError::Domain(error.to_string())
    }
}

impl From<DensityError> for AppError {
    fn from(error: DensityError) -> Self {
        AppError::Domain(error.to_string())
    }
}

impl From<MeasurementError> for AppError {
    fn from(error: MeasurementError) -> Self {
        AppError::Domain(error.to_string())
    }
}

impl From<TomographyError> for AppError {
    fn from(error: TomographyError) -> Self {
        AppError::Domain(error.to_string())
    }
}

/// Output paths: relative ones land under EQTOMO_OUT_DIR when that is set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("EQTOMO_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn read(path: &Path) -> Result<Document, AppError> {
    Ok(io::read_document(path)?)
}

fn write(path: &Path, document: &Document) -> Result<PathBuf, AppError> {
    let target = resolve_out(path);
    io::write_document(&target, document)?;
    Ok(target)
}

/// splitmix64, used to derive independent per-trial seeds from one base seed
fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn format_complex(c: Complex64) -> String {
    format!("{:+.4}{:+.4}i", c.re, c.im)
}

fn format_matrix(m: &DMatrix<Complex64>) -> String {
    (0..m.nrows())
        .map(|p| {
            let row: Vec<String> = (0..m.ncols()).map(|q| format_complex(m[(p, q)])).collect();
            format!("  [ {} ]", row.join("  "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_table(t: &ProbabilityTable) -> String {
    t.values()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            format!("  [ {} ]", cells.join("  "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_states(args: &StatesArgs) -> Result<(), AppError> {
    let config = args.config.build()?;
    let set = build_state_set(&config)?;
    let target = write(&args.out, &io::states_document(&set))?;
    let n = config.dim();
    println!("wrote {} states to {}", n * n, target.display());
    println!("completeness defect: {:.3e}", povm_completeness_defect(&set));
    println!(
        "SIC: {}",
        if sic_check(&set, DEFAULT_TOLERANCE) { "yes" } else { "no" }
    );
    Ok(())
}

fn run_probe(args: &ProbeArgs) -> Result<(), AppError> {
    let config = args.config.build()?;
    let rho = match (&args.state, args.random_rank) {
        (Some(path), _) => io::density_from(&read(path)?)?,
        (None, Some(rank)) => random_density(config.dim(), rank, args.seed.unwrap())?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    if rho.dim() != config.dim() {
        return Err(AppError::Domain(format!(
            "state dimension {} does not match configuration dimension {}",
            rho.dim(),
            config.dim()
        )));
    }
    let set = build_state_set(&config)?;
    let table = born_probabilities(&rho, &set)?;
    let target = write(&args.out, &io::probabilities_document(&table))?;
    println!("wrote exact table to {}", target.display());
    // each of the dim rows is a distribution, so the grand total is dim
    let sum: f64 = table.values().iter().flatten().sum::<f64>() / config.dim() as f64;
    println!("probability sum per row: {sum:.12}");
    if let Some(path) = &args.state_out {
        let target = write(path, &io::density_document(&rho))?;
        println!("wrote probed state to {}", target.display());
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), AppError> {
    let table = io::probability_table_from(&read(&args.probs)?)?;
    let counts = sample_counts(&table, args.shots, args.seed)?;
    let target = write(&args.out, &io::counts_document(&counts))?;
    println!(
        "sampled {} shots over {} outcomes, wrote {}",
        args.shots,
        counts.dim() * counts.dim(),
        target.display()
    );
    if let Some(path) = &args.estimate_out {
        let estimate = estimate_probabilities(&counts);
        let target = write(path, &io::probabilities_document(&estimate))?;
        println!("wrote frequency estimate to {}", target.display());
    }
    Ok(())
}

fn run_reconstruct(args: &ReconstructArgs) -> Result<(), AppError> {
    let config = args.config.build()?;
    let document = read(&args.probs)?;
    let table = match document.kind() {
        "counts" => estimate_probabilities(&io::count_table_from(&document)?),
        _ => io::probability_table_from(&document)?,
    };
    let options = ReconstructOptions { project: !args.no_project };
    let report = reconstruct_with(&table, &config, options)?;

    println!("residual: {:.3e}", report.residual);
    let conditions: Vec<String> = report
        .condition_numbers
        .iter()
        .map(|c| format!("{c:.6}"))
        .collect();
    println!("condition numbers: {}", conditions.join(", "));

    if let Some(path) = &args.expected {
        let expected = io::density_from(&read(path)?)?;
        let Some(physical) = &report.rho_physical else {
            return Err(AppError::Domain(
                "--expected needs the projected state; drop --no-project".into(),
            ));
        };
        println!("fidelity vs expected: {:.12}", fidelity(&expected, physical)?);
        println!(
            "trace distance vs expected: {:.3e}",
            trace_distance(&expected, physical)?
        );
    }

    if let Some(path) = &args.out {
        let target = write(path, &io::report_document(&report, Some(&config)))?;
        println!("wrote report to {}", target.display());
    }
    Ok(())
}

fn run_demo_even(args: &DemoEvenArgs) -> Result<(), AppError> {
    let config = EquidistantConfig::new(args.dim, args.alpha_mod, args.theta)?;
    let epsilon = args.epsilon.unwrap_or(0.5 / args.dim as f64);
    let demo = even_dim_defect(&config, epsilon)?;

    let (p, q) = demo.hidden_pair;
    println!(
        "two states differing only in Im(rho[{p},{q}]) = +/-{:.4}:",
        demo.epsilon
    );
    println!("rho_plus:\n{}", format_matrix(demo.rho_plus.matrix()));
    println!("rho_minus:\n{}", format_matrix(demo.rho_minus.matrix()));
    println!("table of rho_plus:\n{}", format_table(&demo.table_plus));
    println!("table of rho_minus:\n{}", format_table(&demo.table_minus));
    println!(
        "largest difference between the two tables: {:.3e}",
        demo.max_difference
    );

    match reconstruct(&demo.table_plus, &config) {
        Err(error) => println!("reconstruction refuses: {error}"),
        Ok(_) => {
            return Err(AppError::Domain(
                "reconstruction unexpectedly accepted an even dimension".into(),
            ))
        }
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), AppError> {
    let mut rows = Vec::new();
    for &alpha_mod in &args.alpha_grid.0 {
        let config = EquidistantConfig::new(args.dim, alpha_mod, args.theta)?;
        let set = build_state_set(&config)?;
        let mut fidelity_sum = 0.0;
        let mut distance_sum = 0.0;
        let mut worst_condition = 0.0f64;
        for trial in 0..args.trials {
            let rho = random_density(args.dim, args.dim, mix_seed(args.seed, 2 * trial))?;
            let exact = born_probabilities(&rho, &set)?;
            let table = if args.shots == 0 {
                exact
            } else {
                let counts = sample_counts(&exact, args.shots, mix_seed(args.seed, 2 * trial + 1))?;
                estimate_probabilities(&counts)
            };
            let report = reconstruct(&table, &config)?;
            let physical = report
                .rho_physical
                .as_ref()
                .expect("projection is on by default");
            fidelity_sum += fidelity(&rho, physical)?;
            distance_sum += trace_distance(&rho, physical)?;
            for &c in &report.condition_numbers {
                worst_condition = worst_condition.max(c);
            }
        }
        let trials = args.trials as f64;
        rows.push(format!(
            "{alpha_mod:.6},{:.12},{:.6e},{:.6}",
            fidelity_sum / trials,
            distance_sum / trials,
            worst_condition
        ));
    }

    let target = resolve_out(&args.out);
    let mut csv = String::from("alpha_mod,mean_fidelity,mean_trace_distance,max_condition_number\n");
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    std::fs::write(&target, csv)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", target.display())))?;
    println!("wrote {} rows to {}", rows.len(), target.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::States(args) => run_states(args),
        Command::Probe(args) => run_probe(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Reconstruct(args) => run_reconstruct(args),
        Command::DemoEven(args) => run_demo_even(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = if error.use_stderr() { 1 } else { 0 };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.code())
        }
    }
}
