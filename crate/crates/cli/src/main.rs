//! `fdmimo`: run simulations, closed forms and sweeps from the command line.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdmimo_core::rate::Link;
use fdmimo_core::runner::{self, Evaluation, Metric, Row, SweepSpec};
use fdmimo_core::{Error, FilterKind, Scenario, Scheme};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "fdmimo", version, about = "Full-duplex multicell massive MIMO rates, estimation errors and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo ergodic sum rates.
    Simulate(Common),
    /// Closed-form ergodic sum rates.
    Analytic(Common),
    /// Closed-form SI channel NMSE.
    Nmse(Common),
    /// Full- versus half-duplex region check with margins and thresholds.
    Region(Common),
    /// FD/HD (Monte-Carlo) and cooperative/non-cooperative (closed-form) ratios.
    Compare(Common),
    /// Parameter sweep from a sweep file or a named recipe.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Nspt,
    Spt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    NonCooperative,
    Cooperative,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Mf,
    Zf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Dl,
    Ul,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// JSON system configuration.
    #[arg(long)]
    config: PathBuf,
    /// Pilot schemes to evaluate (repeatable).
    #[arg(long, value_enum)]
    scheme: Vec<SchemeArg>,
    #[arg(long, value_enum)]
    scenario: Vec<ScenarioArg>,
    #[arg(long, value_enum)]
    filter: Vec<FilterArg>,
    #[arg(long, value_enum)]
    link: Vec<LinkArg>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// Base configuration; sweep overrides are applied on top.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON sweep file.
    #[arg(long, conflicts_with = "recipe", required_unless_present = "recipe")]
    sweep: Option<PathBuf>,
    /// Built-in sweep.
    #[arg(long, value_parser = ["fig3", "fig4", "fig5", "fig6", "fig7"])]
    recipe: Option<String>,
    #[command(flatten)]
    output: Output,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Domain(_) => 3,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        Error::Singular(_) => 5,
        Error::Contract(_) => 1,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_doc(path: &PathBuf) -> Result<Map<String, Value>, Error> {
    match serde_json::from_str(&read(path)?) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::Validation("config must be a key-value object".into())),
        Err(e) => Err(Error::Validation(format!("malformed config: {e}"))),
    }
}

fn evaluation(c: &Common, outputs: Vec<Metric>, default_schemes: &[Scheme]) -> Evaluation {
    let mut eval = Evaluation::new(outputs);
    if !c.scheme.is_empty() {
        eval.schemes = c
            .scheme
            .iter()
            .map(|s| match s {
                SchemeArg::Nspt => Scheme::NonSimultaneous,
                SchemeArg::Spt => Scheme::Simultaneous,
            })
            .collect();
    } else {
        eval.schemes = default_schemes.to_vec();
    }
    if !c.scenario.is_empty() {
        eval.scenarios = c
            .scenario
            .iter()
            .map(|s| match s {
                ScenarioArg::NonCooperative => Scenario::NonCooperative,
                ScenarioArg::Cooperative => Scenario::Cooperative,
            })
            .collect();
    }
    if !c.filter.is_empty() {
        eval.filters = c
            .filter
            .iter()
            .map(|f| match f {
                FilterArg::Mf => FilterKind::MF,
                FilterArg::Zf => FilterKind::ZF,
            })
            .collect();
    }
    if !c.link.is_empty() {
        eval.links = c
            .link
            .iter()
            .map(|l| match l {
                LinkArg::Dl => Link::DL,
                LinkArg::Ul => Link::UL,
            })
            .collect();
    }
    apply_output(&mut eval, &c.output);
    eval
}

fn apply_output(eval: &mut Evaluation, o: &Output) {
    if let Some(s) = o.seed {
        eval.seed = s;
    }
    if let Some(t) = o.trials {
        eval.trials = t;
    }
}

fn render(rows: &[Row], detail: Option<&Value>, format: Format) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    match (format, detail) {
        (Format::Csv, _) => runner::write_csv(rows, &mut buf)?,
        (Format::Json, Some(v)) => runner::write_json(v, &mut buf)?,
        (Format::Json, None) => runner::write_json(&rows, &mut buf)?,
    }
    Ok(buf)
}

fn emit(bytes: &[u8], out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
        }
        None => Ok(io::stdout().lock().write_all(bytes)?),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let both = [Scheme::NonSimultaneous, Scheme::Simultaneous];
    let nspt = [Scheme::NonSimultaneous];
    let (rows, output, detail): (Vec<Row>, &Output, Option<Value>) = match &cli.command {
        Command::Simulate(c) | Command::Analytic(c) | Command::Nmse(c) | Command::Compare(c) => {
            let (outputs, schemes): (Vec<Metric>, &[Scheme]) = match &cli.command {
                Command::Simulate(_) => (vec![Metric::SumRateMc], &nspt),
                Command::Analytic(_) => (vec![Metric::SumRateAnalytic], &nspt),
                Command::Nmse(_) => (vec![Metric::Nmse], &both),
                _ => (vec![Metric::FdHdRatio, Metric::CoopNoncoopRatio], &nspt),
            };
            let config = fdmimo_core::config::load_config_value(Value::Object(read_doc(&c.config)?))?;
            let eval = evaluation(c, outputs, schemes);
            (runner::evaluate_point(&config, &eval, None, "")?, &c.output, None)
        }
        Command::Region(c) => {
            let config = fdmimo_core::config::load_config_value(Value::Object(read_doc(&c.config)?))?;
            let eval = evaluation(c, vec![Metric::RegionVerdict], &both);
            let (rows, entries) = runner::region_rows(&config, &eval)?;
            (rows, &c.output, Some(serde_json::to_value(entries)?))
        }
        Command::Sweep(s) => {
            let mut spec = match (&s.sweep, &s.recipe) {
                (Some(path), _) => SweepSpec::from_json(&read(path)?)?,
                (None, Some(name)) => runner::recipe(name)?,
                (None, None) => unreachable!("clap requires --sweep or --recipe"),
            };
            apply_output(&mut spec.eval, &s.output);
            let base = match &s.config {
                Some(path) => read_doc(path)?,
                None => Map::new(),
            };
            (runner::run_sweep(&base, &spec)?, &s.output, None)
        }
    };
    let bytes = render(&rows, detail.as_ref(), output.format)?;
    emit(&bytes, &output.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdmimo: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
