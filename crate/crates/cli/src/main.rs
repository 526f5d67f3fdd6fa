//! `chancompat`: robustness sweeps, figure series, indivisibility measures
//! and the validation suite from the command line.

mod format;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chancompat::figures::{figure_spec, run_figure, FamilyParams, FigureRow, FigureSpec};
use chancompat::qchannel::{Channel, DynamicalMap};
use chancompat::robustness::{
    time_grid, NoiseClass, NoiseSelection, Scan, SearchOptions, SweepOptions,
};
use chancompat::sdp::SolverSettings;
use chancompat::validation::{Golden, Validator, CHECK_NAMES};
use chancompat::witness::{cp_indivisibility_measure, teleport_fidelity, Integrand};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
    Indeterminate(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Failure(_) => EXIT_FAILURE,
            Self::Indeterminate(_) => EXIT_INDETERMINATE,
        }
    }
}

impl From<chancompat::Error> for CliError {
    fn from(e: chancompat::Error) -> Self {
        Self::Failure(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Failure(format!("I/O error: {e}"))
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "chancompat", version, about = "Incompatibility robustness of quantum channel pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness of a pair of dynamical maps along a time grid.
    Sweep(SweepArgs),
    /// The series behind one of the seven reference figures.
    Figure(FigureArgs),
    /// CP-indivisibility measure of a dynamical map.
    Measure(MeasureArgs),
    /// Teleportation figures of merit of the evolved singlet.
    Teleport(TeleportArgs),
    /// Run the acceptance checks.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// Decay rate of the depolarizing families.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Oscillation frequency of the indivisible families.
    #[arg(long, default_value_t = 5.0 * std::f64::consts::PI)]
    omega: f64,
    /// Decay rate of the amplitude-damping family.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

impl FamilyArgs {
    fn params(&self) -> FamilyParams {
        FamilyParams {
            lambda: self.lambda,
            omega: self.omega,
            alpha: self.alpha,
        }
    }

    fn map(&self, name: &str) -> CliResult<DynamicalMap> {
        DynamicalMap::from_name(name, self.lambda, self.omega, self.alpha)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.01)]
    t_step: f64,
}

impl GridArgs {
    fn grid(&self) -> CliResult<Vec<f64>> {
        if !(self.t_step > 0.0) {
            return Err(CliError::Usage(format!("--t-step must be positive, got {}", self.t_step)));
        }
        if !(self.t_min >= 0.0 && self.t_min <= self.t_max) {
            return Err(CliError::Usage(format!(
                "need 0 <= --t-min <= --t-max, got {} and {}",
                self.t_min, self.t_max
            )));
        }
        time_grid(self.t_min, self.t_max, self.t_step).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Grid spacing of the robustness search.
    #[arg(long, default_value_t = 0.005)]
    dr: f64,
    /// Bisect inside the bracketing grid cell.
    #[arg(long)]
    refine: bool,
    /// How the grid is scanned: bisection or linear.
    #[arg(long, default_value = "bisection")]
    scan: Scan,
}

impl SearchArgs {
    fn options(&self) -> CliResult<SearchOptions> {
        if !(self.dr > 0.0 && self.dr.is_finite()) {
            return Err(CliError::Usage(format!("--dr must be positive, got {}", self.dr)));
        }
        Ok(SearchOptions {
            dr: self.dr,
            refine: self.refine,
            scan: self.scan,
            solver: solver_settings()?,
            ..SearchOptions::default()
        })
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads for the sweep.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl OutputArgs {
    fn workers(&self) -> CliResult<usize> {
        if self.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(self.workers)
    }

    fn emit(&self, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
        match &self.output {
            Some(path) => {
                let file = File::create(path)
                    .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                write(&mut w)?;
                w.flush()?;
            }
            None => {
                let mut w = io::stdout().lock();
                write(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct SweepArgs {
    /// First family: identity, depolarizing, depolarizing-indiv, amplitude-damping, eternal.
    #[arg(long, default_value = "depolarizing")]
    family: String,
    /// Second family; defaults to the first.
    #[arg(long)]
    family2: Option<String>,
    /// Time-independent first channel from a JSON file (overrides --family).
    #[arg(long, value_name = "FILE")]
    choi: Option<PathBuf>,
    /// Time-independent second channel from a JSON file (overrides --family2).
    #[arg(long, value_name = "FILE")]
    choi2: Option<PathBuf>,
    /// Noise classes to evaluate: generic, cd or both.
    #[arg(long, default_value = "both")]
    noise: NoiseSelection,
    #[command(flatten)]
    params: FamilyArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure number, 1 to 7.
    #[arg(long)]
    id: u8,
    #[arg(long, default_value = "both")]
    noise: NoiseSelection,
    #[command(flatten)]
    params: FamilyArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandArg {
    Robustness,
    Derivative,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, default_value = "depolarizing-indiv")]
    family: String,
    /// Time-independent channel from a JSON file (overrides --family).
    #[arg(long, value_name = "FILE")]
    choi: Option<PathBuf>,
    /// Fixed reference family the map is paired with.
    #[arg(long, default_value = "identity")]
    reference: String,
    /// Noise class: generic or cd.
    #[arg(long, default_value = "generic")]
    noise: NoiseClass,
    /// Integrate the robustness itself or its rise.
    #[arg(long, value_enum, default_value = "robustness")]
    integrand: IntegrandArg,
    #[command(flatten)]
    params: FamilyArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct TeleportArgs {
    #[arg(long, default_value = "depolarizing-indiv")]
    family: String,
    #[command(flatten)]
    params: FamilyArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run only these checks (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Golden data file replacing the built-in one.
    #[arg(long, value_name = "FILE")]
    golden: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

/// Default solver settings with the iteration cap from `SOLVER_MAX_ITERS`.
fn solver_settings() -> CliResult<SolverSettings> {
    let mut s = SolverSettings::default();
    if let Ok(v) = std::env::var("SOLVER_MAX_ITERS") {
        s.max_iters = v
            .trim()
            .parse()
            .ok()
            .filter(|&n: &usize| n > 0)
            .ok_or_else(|| CliError::Usage(format!("SOLVER_MAX_ITERS must be a positive integer, got '{v}'")))?;
    }
    Ok(s)
}

fn read_channel(path: &Path) -> CliResult<DynamicalMap> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    let ch = Channel::from_json_str(&text)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    Ok(DynamicalMap::Constant(ch))
}

fn run_series(spec: &FigureSpec, grid: &[f64], opts: &SweepOptions, out: &OutputArgs) -> CliResult {
    let rows = run_figure(spec, grid, opts)?;
    out.emit(|w| format::write_figure_csv(w, &rows, spec.teleportation))?;
    check_indeterminate(&rows)
}

fn check_indeterminate(rows: &[FigureRow]) -> CliResult {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.record.indeterminate)
        .map(|r| format::fmt_g(r.record.t))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Indeterminate(format!(
            "solver did not settle feasibility at t = {}; raise SOLVER_MAX_ITERS",
            bad.join(", ")
        )))
    }
}

fn sweep(args: &SweepArgs) -> CliResult {
    let map1 = match &args.choi {
        Some(path) => read_channel(path)?,
        None => args.params.map(&args.family)?,
    };
    let map2 = match (&args.choi2, &args.family2) {
        (Some(path), _) => read_channel(path)?,
        (None, Some(name)) => args.params.map(name)?,
        (None, None) => map1.clone(),
    };
    let spec = FigureSpec {
        id: 0,
        map1,
        map2,
        teleportation: false,
    };
    let opts = SweepOptions {
        search: args.search.options()?,
        noise: args.noise,
        workers: args.out.workers()?,
    };
    run_series(&spec, &args.grid.grid()?, &opts, &args.out)
}

fn figure(args: &FigureArgs) -> CliResult {
    let spec = figure_spec(args.id, &args.params.params()).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = SweepOptions {
        search: args.search.options()?,
        noise: args.noise,
        workers: args.out.workers()?,
    };
    run_series(&spec, &args.grid.grid()?, &opts, &args.out)
}

fn measure(args: &MeasureArgs) -> CliResult {
    let map = match &args.choi {
        Some(path) => read_channel(path)?,
        None => args.params.map(&args.family)?,
    };
    let reference = args.params.map(&args.reference)?;
    let integrand = match args.integrand {
        IntegrandArg::Robustness => Integrand::Robustness,
        IntegrandArg::Derivative => Integrand::Derivative,
    };
    let grid = args.grid.grid()?;
    if grid.len() < 3 {
        return Err(CliError::Usage(format!(
            "the measure needs at least 3 grid points, the grid has {}",
            grid.len()
        )));
    }
    let report = cp_indivisibility_measure(
        &map,
        &reference,
        &grid,
        args.noise,
        &args.search.options()?,
        integrand,
    )?;
    let json = serde_json::json!({
        "map": map.describe(),
        "noise": args.noise.to_string(),
        "integrand": integrand,
        "report": report,
    });
    args.out.emit(|w| {
        serde_json::to_writer_pretty(&mut *w, &json).map_err(io::Error::other)?;
        writeln!(w)
    })
}

fn teleport(args: &TeleportArgs) -> CliResult {
    let map = args.params.map(&args.family)?;
    args.out.workers()?;
    let rows = args
        .grid
        .grid()?
        .into_iter()
        .map(|t| Ok((t, teleport_fidelity(&map, t)?)))
        .collect::<chancompat::Result<Vec<_>>>()?;
    args.out.emit(|w| format::write_teleport_csv(w, &rows))
}

fn validate(args: &ValidateArgs) -> CliResult {
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    for name in &args.only {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown check '{name}'; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let golden = match &args.golden {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
            Golden::parse(&text).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?
        }
        None => Golden::default(),
    };
    let validator = Validator::new(golden, args.workers);
    let names: Vec<&str> = if args.only.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        CHECK_NAMES
            .iter()
            .copied()
            .filter(|n| args.only.iter().any(|o| o == n))
            .collect()
    };
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0);
    let mut failed = Vec::new();
    let mut stdout = io::stdout().lock();
    for name in names {
        let outcome = validator.run(name)?;
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{name:<width$}  {verdict}  {}", outcome.detail)?;
        stdout.flush()?;
        if !outcome.passed {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Figure(a) => figure(a),
        Command::Measure(a) => measure(a),
        Command::Teleport(a) => teleport(a),
        Command::Validate(a) => validate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Failure(m) | CliError::Indeterminate(m) => m,
            };
            eprintln!("chancompat: {msg}");
            ExitCode::from(e.code())
        }
    }
}
