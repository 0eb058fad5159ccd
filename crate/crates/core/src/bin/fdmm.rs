use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdmm::experiment::plot::write_plots;
use fdmm::experiment::{
    check_table, parse_seeds, run_analytic, run_figures, simulate_cells, table_from_cells,
    CheckConfig, ExperimentError, Metric, Mode, ResultTable, Sweep, SweepSpec,
};
use fdmm::{defaults, parse_scenario, Scheme, SystemParameters};

/// Flat vs. predictive/reactive distributed mobility management: analytic
/// model, simulator and sweep studies.
#[derive(Parser)]
#[command(name = "fdmm", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the closed forms over a sweep and emit CSV.
    Analytic(Common),
    /// Simulate a sweep (optionally alongside the closed forms).
    Simulate(SimArgs),
    /// Render SVG plots from a result CSV.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print trend checks for result CSVs, or for the scenario defaults.
    Report {
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        tolerance: Option<f64>,
    },
    /// Run every sweep study, write CSV and plots, print the checks.
    Figures {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "analytic")]
        mode: String,
        #[arg(long, default_value = "1")]
        seeds: String,
        #[arg(long, default_value_t = 2000.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        fleet: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        tolerance: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file of `name = value` lines overriding the defaults.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// `param=min:max:step` or `param=v1,v2,...`
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated schemes (default: all).
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated metrics (default: all).
    #[arg(long)]
    metric: Option<String>,
    /// Output directory; CSV goes to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Seed list `1,2,3` or range `1:10`.
    #[arg(long, default_value = "1")]
    seeds: String,
    #[arg(long, default_value = "simulate")]
    mode: String,
    /// Simulated seconds per vehicle.
    #[arg(long, default_value_t = 2000.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    fleet: u32,
    /// Write per-run message traces into the output directory.
    #[arg(long)]
    trace: bool,
}

enum Failure {
    Err(ExperimentError),
    Checks,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Err(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Err(e.into())
    }
}

fn usage(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Usage(msg.into())
}

fn load_params(path: Option<&Path>) -> Result<SystemParameters, ExperimentError> {
    let Some(path) = path else {
        return Ok(defaults());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let p = parse_scenario(&text).map_err(|e| ExperimentError::Validation(e.to_string()))?;
    p.validate()
        .map_err(|e| ExperimentError::Validation(e.to_string()))?;
    Ok(p)
}

fn parse_list<T>(text: Option<&str>, all: &[T]) -> Result<Vec<T>, ExperimentError>
where
    T: Clone + std::str::FromStr<Err = String>,
{
    match text {
        None => Ok(all.to_vec()),
        Some(t) => t
            .split(',')
            .map(|s| s.trim().parse().map_err(usage))
            .collect(),
    }
}

fn spec_from(c: &Common) -> Result<(SweepSpec, SystemParameters), ExperimentError> {
    let base = load_params(c.scenario.as_deref())?;
    let spec = SweepSpec {
        sweep: c.sweep.as_deref().map(Sweep::parse).transpose()?,
        schemes: parse_list(c.scheme.as_deref(), &Scheme::ALL)?,
        metrics: parse_list(c.metric.as_deref(), &Metric::ALL)?,
        ..SweepSpec::default()
    };
    Ok((spec, base))
}

fn emit(table: &ResultTable, out: Option<&Path>, name: &str) -> Result<(), ExperimentError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            table.write_csv(fs::File::create(&path)?)?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn tolerance(t: Option<f64>) -> CheckConfig {
    t.map(CheckConfig::uniform).unwrap_or_default()
}

fn cmd_simulate(a: &SimArgs) -> Result<(), Failure> {
    let (mut spec, base) = spec_from(&a.common)?;
    spec.mode = a.mode.parse().map_err(usage)?;
    if spec.mode == Mode::Analytic {
        return Err(usage("simulate needs --mode simulate or both").into());
    }
    spec.seeds = parse_seeds(&a.seeds)?;
    spec.duration = a.duration;
    spec.fleet = a.fleet;
    if !(a.duration > 0.0) || a.fleet == 0 {
        return Err(
            ExperimentError::Validation("duration and fleet must be positive".into()).into(),
        );
    }
    let out = a.common.out.as_deref();
    if a.trace && out.is_none() {
        return Err(usage("--trace requires --out").into());
    }
    let cells = simulate_cells(&spec, &base, a.trace)?;
    if a.trace {
        let dir = out.expect("checked above");
        fs::create_dir_all(dir)?;
        for c in &cells {
            let name = match c.value {
                Some(v) => format!("trace_{}_{}_{v}.tsv", c.scheme, c.seed),
                None => format!("trace_{}_{}.tsv", c.scheme, c.seed),
            };
            let mut f = io::BufWriter::new(fs::File::create(dir.join(name))?);
            writeln!(f, "time\tnode\tevent\tkind\tflags\tbytes")?;
            for line in &c.report.trace {
                writeln!(f, "{line}")?;
            }
        }
    }
    let table = table_from_cells(&spec, &base, &cells)?;
    emit(&table, out, "simulate.csv")?;
    Ok(())
}

fn print_checks(checks: &[fdmm::experiment::Check]) -> bool {
    if checks.is_empty() {
        println!("no checks applicable");
    }
    for c in checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.pass)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Analytic(c) => {
            let (spec, base) = spec_from(&c)?;
            let table = run_analytic(&spec, &base)?;
            emit(&table, c.out.as_deref(), "analytic.csv")?;
        }
        Cmd::Simulate(a) => cmd_simulate(&a)?,
        Cmd::Plot { input, out } => {
            let file = fs::File::open(&input)
                .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
            let table = ResultTable::read_csv(file)?;
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("plot")
                .to_string();
            for path in write_plots(&table, &out, &stem)? {
                println!("{}", path.display());
            }
        }
        Cmd::Report {
            input,
            scenario,
            tolerance: tol,
        } => {
            let cfg = tolerance(tol);
            let mut ok = true;
            if input.is_empty() {
                let base = load_params(scenario.as_deref())?;
                let table = run_analytic(&SweepSpec::default(), &base)?;
                println!("== defaults");
                ok &= print_checks(&check_table(&table, &cfg));
            }
            for path in &input {
                let file = fs::File::open(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                let table = ResultTable::read_csv(file)?;
                println!("== {}", path.display());
                ok &= print_checks(&check_table(&table, &cfg));
            }
            if !ok {
                return Err(Failure::Checks);
            }
        }
        Cmd::Figures {
            scenario,
            mode,
            seeds,
            duration,
            fleet,
            out,
            tolerance: tol,
        } => {
            let base = load_params(scenario.as_deref())?;
            let template = SweepSpec {
                mode: mode.parse().map_err(usage)?,
                seeds: parse_seeds(&seeds)?,
                duration,
                fleet,
                ..SweepSpec::default()
            };
            let results = run_figures(&base, &template, &tolerance(tol), out.as_deref())?;
            let mut ok = true;
            for r in &results {
                println!("== {} {} [{}]", r.spec.id, r.spec.title, r.spec.sweep);
                ok &= print_checks(&r.checks);
            }
            let failed = results.iter().filter(|r| !r.passed()).count();
            println!(
                "{} of {} figures pass",
                results.len() - failed,
                results.len()
            );
            if !ok {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(3),
        Err(Failure::Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
