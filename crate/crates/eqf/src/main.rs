//! Command-line shell around the library: load a scenario, run the closed
//! loop, export the trace, and optionally gate everything on the invariant
//! suite. Every behavior here is reachable from the library API; the shell
//! only maps errors to exit codes and files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector2;

use eqf::config::{load_config, to_config_string};
use eqf::error::RunError;
use eqf::export;
use eqf::group::SystemState;
use eqf::selfcheck;
use eqf::sim::{run_experiment, RunRecord, ScenarioConfig};
use eqf::slam2d::excitation_metric;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "eqf",
    version,
    about = "Equivariant filter for planar bearing-only landmark estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and export its trace.
    Run(RunOptions),
}

#[derive(Args)]
struct RunOptions {
    /// Scenario configuration file; the reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for trace.csv and snapshot.txt; falls back to $EQF_OUT_DIR.
    /// Nothing is written when neither is given.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the run duration in seconds.
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,

    /// Override the measurement interval in seconds.
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,

    /// Also write chart.svg, a log-scale plot of the Lyapunov traces.
    #[arg(long)]
    emit_chart: bool,

    /// Run the invariant suite first and abort the run if any property
    /// fails.
    #[arg(long)]
    selfcheck: bool,

    /// Echo the effective configuration and per-landmark detail.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let Command::Run(opts) = cli.command;
    match run(&opts) {
        Ok(code) => code,
        Err(RunError::Config(err)) => {
            eprintln!("configuration error: {err}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(RunError::Numerical(err)) => {
            eprintln!("numerical failure: {err}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn run(opts: &RunOptions) -> Result<ExitCode, RunError> {
    if opts.selfcheck {
        let results = selfcheck::run_selfcheck();
        print!("{}", selfcheck::render(&results));
        if !selfcheck::all_passed(&results) {
            eprintln!("invariant suite failed; not running the scenario");
            return Ok(ExitCode::from(EXIT_NUMERICAL));
        }
    }

    let mut config = match &opts.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(duration) = opts.duration {
        config.duration = duration;
    }
    if let Some(dt) = opts.dt {
        config.dt = dt;
    }
    if opts.verbose {
        print!("{}", to_config_string(&config));
    }

    let record = run_experiment(&config)?;
    print_summary(&record, opts.verbose)?;
    write_outputs(&record, opts)?;
    Ok(ExitCode::SUCCESS)
}

fn print_summary(record: &RunRecord, verbose: bool) -> Result<(), RunError> {
    let n = record.landmark_count();
    let config = &record.scenario;
    println!(
        "run: {} landmarks, seed {}, {} s at dt = {}, {} rows",
        n,
        config.seed,
        config.duration,
        config.dt,
        record.steps.len()
    );
    let (Some(first), Some(last)) = (record.steps.first(), record.steps.last()) else {
        return Ok(());
    };
    for i in 0..n {
        println!(
            "landmark {}: l(0) = {:.4e}, l(end) = {:.4e}, ratio {:.2e}",
            i + 1,
            first.lyapunov[i],
            last.lyapunov[i],
            last.lyapunov[i] / first.lyapunov[i]
        );
    }

    if verbose {
        let x_trace: Vec<SystemState> = record
            .steps
            .iter()
            .map(|s| SystemState::new(s.truth.clone()))
            .collect::<Result<_, _>>()?;
        let v_trace: Vec<Vector2<f64>> = record
            .steps
            .iter()
            .map(|s| config.velocity.at(s.t))
            .collect();
        let window = config.excitation_window.min(config.duration);
        let report = excitation_metric(
            &x_trace,
            &v_trace,
            config.dt,
            window,
            config.excitation_threshold,
        )?;
        println!(
            "excitation: window {:.4} s, threshold {:.1e}, {}",
            report.window,
            report.threshold,
            if report.is_excited() {
                "every window excited"
            } else {
                "deficient windows present"
            }
        );
        for i in 0..n {
            println!(
                "landmark {}: min windowed excitation {:.4e}, deficient windows {}",
                i + 1,
                report.minimum[i],
                report.deficient[i]
            );
        }
    }
    Ok(())
}

fn write_outputs(record: &RunRecord, opts: &RunOptions) -> Result<(), RunError> {
    let out_dir = opts
        .out
        .clone()
        .or_else(|| std::env::var_os("EQF_OUT_DIR").map(PathBuf::from));
    let Some(dir) = out_dir else {
        return Ok(());
    };
    std::fs::create_dir_all(&dir).map_err(|source| {
        RunError::Config(eqf::error::ConfigError::Io {
            path: dir.display().to_string(),
            source,
        })
    })?;

    let csv_path = dir.join("trace.csv");
    export::write_text(&csv_path, &export::csv_string(record))?;
    println!("wrote {}", csv_path.display());

    let snapshot_path = dir.join("snapshot.txt");
    export::write_text(&snapshot_path, &export::snapshot_string(record))?;
    println!("wrote {}", snapshot_path.display());

    if opts.emit_chart {
        let chart_path = dir.join("chart.svg");
        export::write_text(&chart_path, &export::chart_svg(record))?;
        println!("wrote {}", chart_path.display());
    }
    Ok(())
}
