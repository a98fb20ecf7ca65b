//! Scenario runner: validate and run TOML scenarios, execute the built-in
//! pushing-task templates, and sweep parameter grids.
//!
//! Exit codes: 0 success, 2 config error, 3 instability (or a pushing
//! segment that never settles), 4 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tiltpush::config::{self, ScenarioConfig};
use tiltpush::sim::{render_summary, run_scenario, write_telemetry_csv, RunOutcome, RunStatus};

const EXIT_CONFIG: u8 = 2;
const EXIT_INSTABILITY: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "tiltpush",
    about = "Rigid-body simulation of a CoM-shifting tilt-rotor pushing on vertical surfaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario per point of a parameter grid.
    Sweep {
        config: PathBuf,
        /// Grid axis as key=v1,v2,...; repeat for a cartesian product.
        #[arg(long, value_name = "KEY=V1,V2,...", required = true)]
        grid: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a config, print the resolved scenario.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pushing task with CoM displacement (plate slides to 0.18 m).
    Case1 {
        #[command(flatten)]
        common: Common,
    },
    /// Fixed-CoM pushing benchmark (plate locked at zero).
    Case2 {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory for telemetry and summary files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config value on a dotted path, e.g. gains.stiffness=[30,22,80].
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed recorded in the config (for randomized sweeps).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, common } => load_file(&config, &common).and_then(|c| run(c, &common)),
        Command::Sweep { config, grid, common } => {
            load_file(&config, &common).and_then(|c| sweep(c, &grid, &common))
        }
        Command::Validate { config, common } => load_file(&config, &common).map(|c| {
            println!("{}", c.to_toml());
            println!("# ok: scenario '{}' is valid", c.name);
            0
        }),
        Command::Case1 { common } => template(config::case1(), &common).and_then(|c| run(c, &common)),
        Command::Case2 { common } => template(config::case2(), &common).and_then(|c| run(c, &common)),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.exit)
        }
    }
}

struct Failure {
    exit: u8,
    message: String,
}

impl Failure {
    fn config(err: impl std::fmt::Display) -> Self {
        Self {
            exit: EXIT_CONFIG,
            message: err.to_string(),
        }
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        Self {
            exit: EXIT_IO,
            message: format!("{context}: {err}"),
        }
    }
}

fn load_file(path: &Path, common: &Common) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    parse(&text, common)
}

fn template(config: ScenarioConfig, common: &Common) -> Result<ScenarioConfig, Failure> {
    // Route templates through the parser so --set applies uniformly.
    parse(&config.to_toml(), common)
}

fn parse(text: &str, common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut overrides = Vec::new();
    for entry in &common.set {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            Failure::config(format!("--set '{entry}' is not of the form key=value"))
        })?;
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    let mut config =
        config::parse_config_with_overrides(text, &overrides).map_err(Failure::config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(config: ScenarioConfig, common: &Common) -> Result<u8, Failure> {
    let outcome = execute(&config)?;
    write_outputs(&config, &outcome, &common.out)?;
    print_report(&config, &outcome);
    Ok(exit_code(&outcome))
}

fn execute(config: &ScenarioConfig) -> Result<RunOutcome, Failure> {
    run_scenario(config).map_err(Failure::config)
}

fn exit_code(outcome: &RunOutcome) -> u8 {
    if outcome.summary.success() {
        0
    } else {
        EXIT_INSTABILITY
    }
}

fn write_outputs(
    config: &ScenarioConfig,
    outcome: &RunOutcome,
    dir: &Path,
) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(&format!("creating {}", dir.display()), e))?;
    let telemetry_path = dir.join(&config.output.telemetry);
    let mut csv = Vec::new();
    write_telemetry_csv(&outcome.telemetry, &mut csv)
        .map_err(|e| Failure::io("rendering telemetry", e))?;
    fs::write(&telemetry_path, csv)
        .map_err(|e| Failure::io(&format!("writing {}", telemetry_path.display()), e))?;
    let summary_path = dir.join(&config.output.summary);
    fs::write(&summary_path, render_summary(&outcome.summary))
        .map_err(|e| Failure::io(&format!("writing {}", summary_path.display()), e))?;
    Ok(())
}

fn print_report(config: &ScenarioConfig, outcome: &RunOutcome) {
    print!("{}", render_summary(&outcome.summary));
    let pushing: Vec<_> = outcome
        .summary
        .segments
        .iter()
        .filter(|s| s.dp.map(|d| d > 0.0).unwrap_or(false))
        .collect();
    if !pushing.is_empty() {
        println!("\npushing-force table ({}):", config.name);
        println!("   dp[m]   steady_F[N]   max_back_sat");
        for s in pushing {
            println!(
                "  {:6.2}   {:11.3}   {:12.3}",
                s.dp.unwrap(),
                s.steady_force,
                s.max_back_saturation
            );
        }
    }
}

fn sweep(base: ScenarioConfig, grid: &[String], common: &Common) -> Result<u8, Failure> {
    let mut axes = Vec::new();
    for axis in grid {
        let (key, values) = axis.split_once('=').ok_or_else(|| {
            Failure::config(format!("--grid '{axis}' is not of the form key=v1,v2,..."))
        })?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.is_empty() {
            return Err(Failure::config(format!("--grid '{axis}' has no values")));
        }
        axes.push((key.trim().to_string(), values));
    }

    // Cartesian product of the axes.
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for point in &points {
            for value in values {
                let mut extended = point.clone();
                extended.push((key.clone(), value.clone()));
                next.push(extended);
            }
        }
        points = next;
    }

    let base_text = base.to_toml();
    let results: Vec<Result<(String, u8), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(index, overrides)| {
                let base_text = &base_text;
                let common = &common;
                scope.spawn(move || -> Result<(String, u8), Failure> {
                    let mut config = config::parse_config_with_overrides(base_text, overrides)
                        .map_err(Failure::config)?;
                    let label: String = overrides
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    config.name = format!("{}[{label}]", config.name);
                    let outcome = execute(&config)?;
                    let dir = common.out.join(format!("run_{index:03}"));
                    write_outputs(&config, &outcome, &dir)?;
                    Ok((format!("{}: {}", config.name, status_line(&outcome)), exit_code(&outcome)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread")).collect()
    });

    let mut worst = 0u8;
    for result in results {
        let (line, code) = result?;
        println!("{line}");
        worst = worst.max(code);
    }
    Ok(worst)
}

fn status_line(outcome: &RunOutcome) -> String {
    match &outcome.summary.status {
        RunStatus::Completed if outcome.summary.success() => format!(
            "completed, peak force {:.2} N, max saturation {:.3}",
            outcome.summary.peak_force, outcome.summary.max_saturation
        ),
        RunStatus::Completed => "completed with oscillation threshold exceeded".to_string(),
        RunStatus::Unstable { time, reason } => format!("UNSTABLE at {time:.3} s: {reason}"),
    }
}
