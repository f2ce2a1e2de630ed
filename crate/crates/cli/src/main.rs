use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use feedlab_core::harness::{self, ExperimentConfig, OutputFormat, RunRecord, Units};
use feedlab_core::Error;

#[derive(Parser)]
#[command(name = "feedlab", version, about = "Variable-length feedback and energy-limited transmission experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate-distortion function, slope and dispersion.
    Rd(Common),
    /// Channel capacity and the information-density bound.
    Capacity(Common),
    /// Closed-form minimum energy per source sample.
    Expansion(Common),
    /// Stop-feedback code simulation.
    SimVlf(Common),
    /// Variable-length code with termination simulation.
    SimVlft(Common),
    /// Joint source-channel pipeline simulation.
    SimJscc(Common),
    /// Linear feedback scheme over the Gaussian channel.
    SimSk(Common),
    /// Energy-limited schemes: huffman_energy, separated_energy, lossy_energy, ppm.
    SimEnergy(Common),
    /// Evaluate a bound without simulation.
    Bound(Common),
    /// Run every point of the config's `[sweep]` grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads, 0 for all cores. Output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    units: Option<UnitsArg>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Exit with status 3 when any metric violates its bound.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Nats,
    Bits,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Rd(c) => ("rd", c),
            Command::Capacity(c) => ("capacity", c),
            Command::Expansion(c) => ("expansion", c),
            Command::SimVlf(c) => ("sim-vlf", c),
            Command::SimVlft(c) => ("sim-vlft", c),
            Command::SimJscc(c) => ("sim-jscc", c),
            Command::SimSk(c) => ("sim-sk", c),
            Command::SimEnergy(c) => ("sim-energy", c),
            Command::Bound(c) => ("bound", c),
            Command::Sweep(c) => ("sweep", c),
        }
    }
}

/// Experiment kinds each subcommand accepts; `sweep` takes any.
fn accepted_kinds(command: &str) -> &'static [&'static str] {
    match command {
        "rd" => &["rate_distortion"],
        "capacity" => &["capacity"],
        "expansion" => &["expansion"],
        "sim-vlf" => &["stop_feedback"],
        "sim-vlft" => &["vlft"],
        "sim-jscc" => &["jscc"],
        "sim-sk" => &["sk"],
        "sim-energy" => &["huffman_energy", "separated_energy", "lossy_energy", "ppm"],
        "bound" => &["bound"],
        _ => &[],
    }
}

fn config_error(path: &str, message: String) -> Error {
    Error::Config { path: path.into(), message }
}

fn load(command: &str, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(u) = args.units {
        cfg.units = match u {
            UnitsArg::Nats => Units::Nats,
            UnitsArg::Bits => Units::Bits,
        };
    }
    cfg.validate()?;
    if command == "sweep" {
        if cfg.sweep.is_none() {
            return Err(config_error("sweep", "`sweep` needs a [sweep] section".into()));
        }
        return Ok(cfg);
    }
    if cfg.sweep.is_some() {
        return Err(config_error("sweep", format!("use `feedlab sweep` for configs with a [sweep] section, not `{command}`")));
    }
    let kind = cfg.experiment.name();
    let ok = accepted_kinds(command);
    if !ok.contains(&kind) {
        return Err(config_error("experiment.kind", format!("`{command}` runs {}, got `{kind}`", ok.join(" or "))));
    }
    Ok(cfg)
}

fn emit(records: &[RunRecord], units: Units, args: &Common) -> Result<(), Error> {
    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Jsonl,
    };
    match &args.out {
        Some(path) => harness::write_records(records, units, format, BufWriter::new(File::create(path)?)),
        None => harness::write_records(records, units, format, io::stdout().lock()),
    }
}

fn execute(command: &str, args: &Common) -> Result<bool, Error> {
    let cfg = load(command, args)?;
    let records = harness::run_sweep(&cfg)?;
    for r in &records {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    emit(&records, cfg.units, args)?;
    let violated: Vec<_> = records
        .iter()
        .flat_map(|r| r.violations().into_iter().map(move |m| (r, m)))
        .collect();
    for (r, m) in &violated {
        let c = m.check.as_ref().expect("violation has a check");
        eprintln!(
            "violation: {} {} = {:e} (se {:e}) vs bound {:e} ({:?})",
            r.kind, m.name, m.value.estimate, m.value.std_error, c.bound, c.relation
        );
    }
    Ok(violated.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.parts();
    let code = match execute(name, args) {
        Ok(true) => 0,
        Ok(false) if args.check => EXIT_VIOLATION,
        Ok(false) => 0,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    };
    let _ = io::stdout().flush();
    ExitCode::from(code)
}
