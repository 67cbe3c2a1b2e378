use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pairemit::checks::{all_passed, Check};
use pairemit::config::ExperimentConfig;
use pairemit::experiment::{generate_events, run_fit, with_workers};
use pairemit::{derivation, figure, io, RunError};

#[derive(Parser, Debug)]
#[command(name = "pairemit", version, about = "Two-atom emission experiments: simulate, fit, tabulate, derive rates")]
struct Cli {
    /// JSON configuration file; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration field, e.g. `--set amplitude_params.x=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n0: Option<u64>,
    /// `sequential` or `independent`.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for event generation; 0 uses all cores. Output does
    /// not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Evaluate the pass/fail checks and exit with status 3 if any fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate events and write events.csv.
    Simulate,
    /// Fit an existing events.csv and write histograms and report.json.
    Fit {
        /// Event dump to read; defaults to events.csv in the output directory.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Write the normalized detection curves (fig1.csv) and the overlay.
    Fig1,
    /// First-emission ratio and the second-emission sweep (rates.json).
    Rates,
    /// Amplitude-engine property suite (properties.json).
    Properties,
    /// Simulate, fit, tabulate and derive; one combined report.json.
    Full,
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut sets = cli.sets.clone();
    let json = |v: &str| serde_json::to_string(v).expect("string encodes");
    if let Some(s) = cli.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(n) = cli.n0 {
        sets.push(format!("n0={n}"));
    }
    if let Some(m) = &cli.mode {
        sets.push(format!("mode={}", json(m)));
    }
    if let Some(o) = &cli.out {
        sets.push(format!("output_dir={}", json(&o.to_string_lossy())));
    }
    sets
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn run(cli: &Cli) -> Result<Vec<Check>, RunError> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides(cli))?;
    let dir = cfg.output_dir.clone();
    match &cli.command {
        Command::Simulate => {
            io::ensure_dir(&dir)?;
            let ev = generate_events(&cfg)?;
            let path = dir.join(io::EVENTS_FILE);
            io::write_events(&path, &ev.emissions, &ev.detections)?;
            println!("wrote {} molecules to {}", ev.emissions.len(), path.display());
            Ok(Vec::new())
        }
        Command::Fit { events } => {
            let path = events.clone().unwrap_or_else(|| dir.join(io::EVENTS_FILE));
            let report = run_fit(&cfg, &path)?;
            for (name, f) in &report.fits {
                println!("{name}: rate {:.6e} ± {:.2e} s^-1 (Γ̂/Γ = {:.5})", f.rate_hat, f.std_error, report.fit_ratios[name]);
            }
            Ok(report.checks)
        }
        Command::Fig1 => {
            let fig = figure::reproduce_figure1(&cfg, None)?;
            println!("wrote {}", fig.table.display());
            if let Some(p) = &fig.overlay {
                println!("wrote {}", p.display());
            }
            Ok(pairemit::figure_checks(&fig))
        }
        Command::Rates => {
            let reports = derivation::run_rate_derivation(&cfg.amplitude_params)?;
            io::ensure_dir(&dir)?;
            io::write_json(&dir.join(io::RATES_FILE), &reports)?;
            Ok(pairemit::derivation_checks(&reports))
        }
        Command::Properties => {
            let reports = derivation::run_properties(&cfg.amplitude_params)?;
            io::ensure_dir(&dir)?;
            io::write_json(&dir.join(io::PROPERTIES_FILE), &reports)?;
            for r in &reports {
                println!("{}: ratio {:.9}", r.case, r.report.ratio);
            }
            Ok(pairemit::property_checks(&reports))
        }
        Command::Full => {
            let out = pairemit::run_full(&cfg)?;
            println!("wrote {}", dir.join(io::REPORT_FILE).display());
            Ok(out.report.checks)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = with_workers(cli.workers, || run(&cli)).and_then(|r| r);
    match outcome {
        Ok(checks) => {
            if cli.check {
                print_checks(&checks);
                if !all_passed(&checks) {
                    return ExitCode::from(3);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
