use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ghz_transfer::runner::DispersiveRoute;
use ghz_transfer::{AmplitudeSource, RunMode};
use ghz_transfer_cli::sweep::{self, parse_values, WORKERS_ENV};
use ghz_transfer_cli::{budget_table, execute, load_params, parse, run, run_verify, RunConfig, SweepAxis};

#[derive(Parser)]
#[command(name = "ghz-transfer", version, about = "Simulate GHZ-state transfer between two cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and score it against the closed-form states.
    Run(RunArgs),
    /// Run the protocol over a list of values of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// delta-ratio, kappa-inv-us or n.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the timing budget.
    Budget {
        #[arg(long, default_value = "transmon-tlr")]
        params: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the built-in consistency checks.
    Verify {
        #[arg(long, default_value = "transmon-tlr")]
        params: String,
    },
    /// Check a schedule file.
    Parse {
        file: PathBuf,
        #[arg(long, default_value = "transmon-tlr")]
        params: String,
        /// Print the schedule in canonical form.
        #[arg(long)]
        canonical: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name or parameter file.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// ideal-reduced, full-dispersive or lindblad.
    #[arg(long)]
    mode: Option<RunMode>,
    /// `alpha,beta` or `random:<seed>:<count>`.
    #[arg(long)]
    amplitudes: Option<AmplitudeSource>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    delta_ratio: Option<f64>,
    #[arg(long)]
    kappa_inv_us: Option<f64>,
    /// Integrate the dispersive step in the detuned frame.
    #[arg(long)]
    detuned_frame: bool,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    trajectory: bool,
    #[arg(long)]
    plots_data: bool,
    #[arg(long)]
    no_report: bool,
    /// Print the JSON report on stdout.
    #[arg(long)]
    json: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.params {
            c.params = p.clone();
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(a) = &self.amplitudes {
            c.amplitudes = a.clone();
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        if self.schedule.is_some() {
            c.schedule = self.schedule.clone();
        }
        c.cutoff = self.cutoff.or(c.cutoff);
        c.delta_ratio = self.delta_ratio.or(c.delta_ratio);
        c.kappa_inv_us = self.kappa_inv_us.or(c.kappa_inv_us);
        c.tolerance = self.tolerance.or(c.tolerance);
        if self.detuned_frame {
            c.route = DispersiveRoute::DetunedFrame;
        }
        c.emit.trajectory |= self.trajectory;
        c.emit.plots_data |= self.plots_data;
        if self.no_report {
            c.emit.report = false;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a check failed.
fn dispatch(cli: Cli) -> Result<bool> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let result = execute(&cfg)?;
            if let Some(dir) = &cfg.output {
                run::write_outputs(&result, &cfg, dir)?;
            }
            if args.json {
                out.write_all(result.report.to_json().as_bytes())?;
            } else {
                out.write_all(run::render_summary(&result.report).as_bytes())?;
            }
            Ok(result.report.passed)
        }
        Command::Sweep { run, axis, values, workers, csv } => {
            let cfg = run.config()?;
            let axis: SweepAxis = axis.parse()?;
            let rows = sweep::run_sweep(&cfg, axis, &parse_values(&values)?, workers)?;
            match csv {
                Some(path) => {
                    let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    sweep::write_csv(&rows, f)?;
                }
                None => sweep::write_csv(&rows, &mut out)?,
            }
            Ok(rows.iter().all(|r| r.passed))
        }
        Command::Budget { params, n, json } => {
            let table = budget_table(&load_params(&params)?, n, 1e-6)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&table)?)?;
            } else {
                write!(out, "{table}")?;
            }
            Ok(true)
        }
        Command::Verify { params } => {
            let checks = run_verify(&load_params(&params)?, 1e-6)?;
            for c in &checks {
                writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::Parse { file, params, canonical } => {
            let outcome = parse::check_file(&file, &load_params(&params)?)?;
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            match (&outcome.canonical, canonical) {
                (Some(text), true) => out.write_all(text.as_bytes())?,
                (Some(_), false) => writeln!(
                    out,
                    "{}: {} segments, total {:.4} us",
                    file.display(),
                    outcome.segments,
                    outcome.tau.unwrap_or(0.0) * 1e6
                )?,
                (None, _) => {}
            }
            Ok(outcome.ok())
        }
    }
}
