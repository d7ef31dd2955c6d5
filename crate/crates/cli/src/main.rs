use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harpy::config::{parse_assignment, with_param, Config, ConfigError, DEFAULT_CONFIG};
use harpy::export::write_bundle;
use harpy::sim::{run_scenario, Outcome, Scenario};
use harpy::sweep::{parse_values, sweep, write_summary, SUMMARY_FILE};

/// Exit codes shared by every verb.
mod code {
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const FELL: u8 = 3;
    pub const BLEW_UP: u8 = 4;
}

#[derive(Parser)]
#[command(name = "harpy", version, about = "Thruster-assisted biped simulator")]
#[command(after_help = "Exit codes: 0 success, 1 other error, 2 config error, 3 fall, 4 numerical blow-up.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its output bundle.
    Run(RunArgs),
    /// Run a scenario once per value of one parameter.
    Sweep(SweepArgs),
    /// Check a config file without simulating.
    Validate(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// Config file; the built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    scenario: String,
    /// Output directory for the bundle.
    #[arg(long, env = "HARPY_OUT", default_value = "out")]
    out: PathBuf,
    /// Override a numeric value, e.g. `--param gait.step_width=0.25`.
    #[arg(long = "param", value_name = "PATH=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    scenario: String,
    /// Dotted parameter path, e.g. `gait.thrust_fraction` or `pushes.0.impulse.0`.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    #[arg(long, env = "HARPY_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, env = "HARPY_JOBS", default_value_t = default_jobs())]
    jobs: usize,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<harpy::Error> for Failure {
    fn from(e: harpy::Error) -> Self {
        match e {
            harpy::Error::Config(c) => Failure::Config(c.to_string()),
            harpy::Error::InvalidInput { .. } => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(arg: &ConfigArg) -> Result<Config, Failure> {
    let config = match &arg.config {
        Some(path) => Config::from_file(path)?,
        None => Config::parse(DEFAULT_CONFIG, "<built-in defaults>")?,
    };
    config.validate()?;
    Ok(config)
}

fn scenario_with_params(config: &Config, name: &str, params: &[String]) -> Result<Scenario, Failure> {
    let mut s = config.scenario(name)?.clone();
    for p in params {
        let (path, value) = parse_assignment(p)?;
        s = with_param(&s, &path, value)?;
    }
    let problems = s.check();
    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems).into());
    }
    Ok(s)
}

fn run(args: &RunArgs) -> Result<u8, Failure> {
    let config = load(&args.config)?;
    let s = scenario_with_params(&config, &args.scenario, &args.params)?;
    let out = run_scenario(&s);
    write_bundle(&args.out, &s, &out)?;
    let m = &out.metrics;
    println!("scenario      {}", m.scenario);
    println!("outcome       {:?}", m.outcome);
    println!("time          {:.3} s", m.simulated_time);
    println!("steps         {}", m.steps);
    if let Some(r) = m.limit_cycle_residual {
        println!("residual      {r:.3e}");
    }
    println!("height error  {:.4} m (mean), {:.4} m (max)", m.mean_com_height_error, m.max_com_height_deviation);
    println!("peak torque   {:.3} N·m (hip), {:.3} N·m (knee)", m.peak_joint_torque, m.peak_knee_torque);
    println!("thrust        {:.3} N·s", m.total_thruster_impulse);
    if let Some(reason) = &m.failure {
        println!("stopped       {reason}");
    }
    println!("bundle        {}", args.out.display());
    Ok(match m.outcome {
        Outcome::Completed => 0,
        Outcome::Fell => code::FELL,
        Outcome::BlewUp => code::BLEW_UP,
    })
}

fn run_sweep(args: &SweepArgs) -> Result<u8, Failure> {
    let values = parse_values(&args.values)?;
    let config = load(&args.config)?;
    let base = config.scenario(&args.scenario)?.clone();
    let rows = sweep(&base, &args.param, &values, args.jobs.max(1), Some(&args.out))?;
    let summary = args.out.join(SUMMARY_FILE);
    write_summary(&summary, &rows)?;
    for r in &rows {
        let outcome = match (&r.outcome, &r.error) {
            (_, Some(e)) => format!("error: {e}"),
            (Some(o), None) => format!("{o:?}"),
            (None, None) => "-".into(),
        };
        println!("{:>12} {outcome}", r.value);
    }
    println!("summary {}", summary.display());
    Ok(0)
}

fn validate(arg: &ConfigArg) -> Result<u8, Failure> {
    let config = load(arg)?;
    println!("{}: ok ({} scenarios: {})", config.origin, config.scenarios.len(), config.scenario_names().join(", "));
    Ok(0)
}

fn exit(result: Result<u8, Failure>) -> ExitCode {
    match result {
        Ok(c) => ExitCode::from(c),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code::CONFIG)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code::OTHER)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    exit(match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Validate(a) => validate(a),
    })
}
