use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use iscdetect::scenario::{self, emit, read_value, set_dotted, RunOptions, Scenario};
use iscdetect::Error;

#[derive(Parser)]
#[command(
    name = "iscdetect",
    version,
    about = "Internal short-circuit simulation and detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write timeseries.csv and summary.json.
    Run {
        scenario: PathBuf,
        /// Override noise.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the scenario's `output`, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop the short and run the pack fault-free.
        #[arg(long)]
        healthy: bool,
        /// Also write the duct concentration profile at every frame.
        #[arg(long)]
        profile_dump: bool,
    },
    /// Parse and check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Run the scenario once per value of a dotted parameter, in parallel.
    Sweep {
        scenario: PathBuf,
        /// Dotted key, e.g. `thresholds.eps_f`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Base seed; run i uses base + i (default: noise.seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        healthy: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_numerical() => 3,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    healthy: bool,
    profile_dump: bool,
) -> Result<(), Error> {
    let mut sc = Scenario::load(path)?;
    if let Some(s) = seed {
        sc.noise.seed = s;
    }
    if healthy {
        sc.short = None;
    }
    let dir = out
        .or_else(|| sc.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = scenario::run_with(
        &sc,
        RunOptions {
            keep_profiles: profile_dump,
        },
    )?;
    let files = emit(&result, &dir, profile_dump)?;
    let s = &result.summary;
    println!(
        "force alarm {} s, gas alarm {} s, alert {} s, rupture {} s",
        fmt_time(s.force_alarm_time),
        fmt_time(s.gas_alarm_time),
        fmt_time(s.alert_time),
        fmt_time(s.rupture_time),
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), Error> {
    let sc = Scenario::load(path)?;
    let cycle = scenario::load_cycle(&sc)?;
    println!(
        "{}: ok ({} s, {}, drive cycle {} s)",
        path.display(),
        sc.t_end,
        if sc.short.is_some() {
            "fault"
        } else {
            "healthy"
        },
        cycle.duration()
    );
    Ok(())
}

fn cmd_sweep(
    path: &Path,
    param: &str,
    values: &[String],
    seed: Option<u64>,
    healthy: bool,
) -> Result<(), Error> {
    let base = read_value(path)?;
    let dir = scenario_dir(path);
    let scenarios = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut table = base.clone();
            set_dotted(&mut table, param, v)?;
            let mut sc = Scenario::from_value(table, dir.clone())?;
            sc.noise.seed = seed.unwrap_or(sc.noise.seed) + i as u64;
            if healthy {
                sc.short = None;
            }
            Ok(sc)
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let results: Vec<_> = scenarios.par_iter().map(scenario::run).collect();
    println!("{param},seed,force_alarm,gas_alarm,alert,rupture,peak_theta_hat");
    let mut first_err = None;
    for ((v, sc), r) in values.iter().zip(&scenarios).zip(results) {
        match r {
            Ok(out) => {
                let s = out.summary;
                println!(
                    "{v},{},{},{},{},{},{:.3}",
                    sc.noise.seed,
                    fmt_time(s.force_alarm_time),
                    fmt_time(s.gas_alarm_time),
                    fmt_time(s.alert_time),
                    fmt_time(s.rupture_time),
                    s.peak_theta_hat
                );
            }
            Err(e) => {
                eprintln!("{param} = {v}: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn scenario_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            healthy,
            profile_dump,
        } => cmd_run(&scenario, seed, out, healthy, profile_dump),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Sweep {
            scenario,
            param,
            values,
            seed,
            healthy,
        } => cmd_sweep(&scenario, &param, &values, seed, healthy),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
