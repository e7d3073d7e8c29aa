//! The `run` command: one protocol execution per amplitude pair, scored and
//! written out as a JSON report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ghz_transfer::analysis::BranchPhases;
use ghz_transfer::runner::{CheckpointReport, FOccupationReport, SegmentReport};
use ghz_transfer::schedule::TimingBudget;
use ghz_transfer::{
    build_schedule, parse_schedule, run_protocol, validate_schedule, Checkpoint, GhzSpec, PhysicalParams, RunOptions,
    RunOutcome, Schedule, SystemLayout,
};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::RunConfig;

/// What was run, with every override resolved.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedRun {
    pub params_source: String,
    pub n: usize,
    pub mode: String,
    pub amplitudes: String,
    pub cutoff: usize,
    pub route: ghz_transfer::runner::DispersiveRoute,
    pub tolerance: Option<f64>,
    pub schedule_source: String,
    pub params: PhysicalParams,
    pub lambda: f64,
    pub lambda_prime: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckpointRow {
    pub checkpoint: Checkpoint,
    pub segment: String,
    pub fidelity: f64,
    pub phases: Option<BranchPhases>,
}

impl From<&CheckpointReport> for CheckpointRow {
    fn from(c: &CheckpointReport) -> Self {
        CheckpointRow { checkpoint: c.checkpoint, segment: c.segment.clone(), fidelity: c.fidelity, phases: c.phases }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub alpha: C64,
    pub beta: C64,
    pub final_fidelity: Option<f64>,
    pub checkpoints: Vec<CheckpointRow>,
    pub segments: Vec<SegmentReport>,
    pub f_occupation: Option<FOccupationReport>,
    pub max_drift: f64,
    pub max_top_fock: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `min` when the value must reach the limit, `max` when it must stay below.
    pub kind: &'static str,
    pub passed: bool,
}

impl Check {
    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, kind: "min", passed: value >= limit }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, kind: "max", passed: value <= limit }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub min_final_fidelity: Option<f64>,
    /// Largest minus smallest final fidelity over the samples.
    pub fidelity_spread: Option<f64>,
    pub min_checkpoint_fidelity: f64,
    pub max_f_occupation: Option<f64>,
    pub max_drift: f64,
    pub max_top_fock: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub run: ResolvedRun,
    pub budget: TimingBudget,
    pub schedule: Schedule,
    pub samples: Vec<SampleReport>,
    pub summary: Summary,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// A run together with the raw outcomes (kept for trajectories).
pub struct RunResult {
    pub report: RunReport,
    pub outcomes: Vec<RunOutcome>,
}

/// Schedule and layout for a config: the `.sched` file if given, else the
/// canonical schedule for `n`.
pub fn resolve_schedule(cfg: &RunConfig, params: &PhysicalParams) -> Result<(Schedule, SystemLayout, PhysicalParams, String)> {
    match &cfg.schedule {
        None => {
            let schedule = build_schedule(params, cfg.n, cfg.resonance_tolerance)?;
            let layout = SystemLayout::new(cfg.n, cfg.n, cfg.cutoff(), cfg.cutoff())?;
            Ok((schedule, layout, params.clone(), "canonical".into()))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let render = |diags: Vec<ghz_transfer::Diagnostic>| {
                let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
                anyhow!("schedule has errors:\n{}", lines.join("\n"))
            };
            let doc = parse_schedule(&text).map_err(render)?;
            let v = validate_schedule(&doc, params).map_err(render)?;
            for w in &v.warnings {
                log::warn!("{}:{w}", path.display());
            }
            if v.layout.n_left != v.layout.n_right {
                bail!("the GHZ state needs as many qubits in R as in L (layout has {} and {})", v.layout.n_left, v.layout.n_right);
            }
            Ok((v.schedule, v.layout, v.params, path.display().to_string()))
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<RunResult> {
    cfg.check()?;
    let base = cfg.physical_params()?;
    let (schedule, layout, params, schedule_source) = resolve_schedule(cfg, &base)?;
    let n = layout.n_left;
    let options = RunOptions {
        mode: cfg.mode,
        route: cfg.route,
        tolerance: cfg.tolerance,
        samples: cfg.samples,
        record_trajectory: cfg.emit.trajectory,
    };
    let rates = params.effective_rates();
    let mut samples = Vec::new();
    let mut outcomes = Vec::new();
    for (i, (alpha, beta)) in cfg.amplitudes.pairs().into_iter().enumerate() {
        log::info!("sample {i}: running {} steps in {} mode", schedule.segments.len(), cfg.mode.name());
        let ghz = GhzSpec::new(alpha, beta, n)?;
        let out = run_protocol(&params, &ghz, &layout, &schedule, &options)?;
        samples.push(SampleReport {
            alpha,
            beta,
            final_fidelity: out.final_fidelity,
            checkpoints: out.checkpoints.iter().map(CheckpointRow::from).collect(),
            segments: out.segments.clone(),
            f_occupation: out.f_occupation.clone(),
            max_drift: out.max_drift(),
            max_top_fock: out.max_top_fock(),
        });
        outcomes.push(out);
    }
    let summary = summarize(&samples);
    let checks = checks(&summary, cfg, &samples);
    let passed = checks.iter().all(|c| c.passed);
    let report = RunReport {
        run: ResolvedRun {
            params_source: cfg.params.clone(),
            n,
            mode: cfg.mode.name().into(),
            amplitudes: cfg.amplitudes.to_string(),
            cutoff: layout.cutoff_l,
            route: cfg.route,
            tolerance: cfg.tolerance,
            schedule_source,
            params,
            lambda: rates.lambda,
            lambda_prime: rates.lambda_prime,
        },
        budget: schedule.budget(),
        schedule,
        samples,
        summary,
        checks,
        passed,
    };
    Ok(RunResult { report, outcomes })
}

fn summarize(samples: &[SampleReport]) -> Summary {
    let finals: Vec<f64> = samples.iter().filter_map(|s| s.final_fidelity).collect();
    let min = finals.iter().copied().reduce(f64::min);
    let max = finals.iter().copied().reduce(f64::max);
    Summary {
        min_final_fidelity: min,
        fidelity_spread: min.zip(max).map(|(a, b)| b - a),
        min_checkpoint_fidelity: samples
            .iter()
            .flat_map(|s| s.checkpoints.iter())
            .filter(|c| c.checkpoint != Checkpoint::Final)
            .map(|c| c.fidelity)
            .fold(1.0, f64::min),
        max_f_occupation: samples.iter().filter_map(|s| s.f_occupation.as_ref().map(|f| f.measured)).reduce(f64::max),
        max_drift: samples.iter().map(|s| s.max_drift).fold(0.0, f64::max),
        max_top_fock: samples.iter().map(|s| s.max_top_fock).fold(0.0, f64::max),
    }
}

fn checks(summary: &Summary, cfg: &RunConfig, samples: &[SampleReport]) -> Vec<Check> {
    let t = cfg.thresholds();
    let mut out = Vec::new();
    if let Some(limit) = t.final_fidelity {
        // a run that never reaches the final checkpoint scores 0
        out.push(Check::at_least("final_fidelity", summary.min_final_fidelity.unwrap_or(0.0), limit));
    }
    if let Some(limit) = t.checkpoint_fidelity {
        out.push(Check::at_least("checkpoint_fidelity", summary.min_checkpoint_fidelity, limit));
    }
    if let Some(limit) = t.max_drift {
        out.push(Check::at_most("max_drift", summary.max_drift, limit));
    }
    if let Some(limit) = t.max_leakage {
        out.push(Check::at_most("max_leakage", summary.max_top_fock, limit));
    }
    if samples.iter().any(|s| s.final_fidelity.is_some_and(f64::is_nan)) {
        out.push(Check { name: "finite_fidelity".into(), value: f64::NAN, limit: 0.0, kind: "max", passed: false });
    }
    out
}

/// Writes the files selected by `cfg.emit` into `dir`.
pub fn write_outputs(result: &RunResult, cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if cfg.emit.report {
        std::fs::write(dir.join("report.json"), result.report.to_json())?;
    }
    if cfg.emit.trajectory {
        let many = result.outcomes.len() > 1;
        for (i, out) in result.outcomes.iter().enumerate() {
            let Some(tr) = &out.trajectory else { continue };
            let name = if many { format!("trajectory-{i}.csv") } else { "trajectory.csv".into() };
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            tr.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    if cfg.emit.plots_data {
        write_plots_data(&result.report, dir)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckpointCsv<'a> {
    sample: usize,
    checkpoint: &'a str,
    segment: &'a str,
    fidelity: f64,
    relative_phase: Option<f64>,
}

#[derive(Serialize)]
struct SegmentCsv<'a> {
    sample: usize,
    label: &'a str,
    start_s: f64,
    ramp_s: f64,
    duration_s: f64,
    method: &'a str,
    drift: f64,
    top_fock: f64,
}

fn write_plots_data(report: &RunReport, dir: &Path) -> Result<()> {
    let mut cps = csv::Writer::from_path(dir.join("checkpoints.csv"))?;
    let mut segs = csv::Writer::from_path(dir.join("segments.csv"))?;
    for (i, s) in report.samples.iter().enumerate() {
        for c in &s.checkpoints {
            cps.serialize(CheckpointCsv {
                sample: i,
                checkpoint: c.checkpoint.name(),
                segment: &c.segment,
                fidelity: c.fidelity,
                relative_phase: c.phases.and_then(|p| p.relative_phase),
            })?;
        }
        for g in &s.segments {
            segs.serialize(SegmentCsv {
                sample: i,
                label: &g.label,
                start_s: g.start,
                ramp_s: g.ramp,
                duration_s: g.duration,
                method: &g.method,
                drift: g.drift,
                top_fock: g.top_fock,
            })?;
        }
    }
    cps.flush()?;
    segs.flush()?;
    Ok(())
}

/// Short human-readable account of a run.
pub fn render_summary(report: &RunReport) -> String {
    let mut s = String::new();
    let r = &report.run;
    s += &format!("mode {}  n = {}  samples = {}  schedule: {}\n", r.mode, r.n, report.samples.len(), r.schedule_source);
    s += &format!("total time {:.4} us\n", report.budget.tau * 1e6);
    if let Some(f) = report.summary.min_final_fidelity {
        s += &format!("final fidelity (worst sample) {f:.12}\n");
    }
    if let Some(f) = report.summary.max_f_occupation {
        s += &format!("spectator f occupation {f:.6}\n");
    }
    for c in &report.checks {
        let op = if c.kind == "min" { ">=" } else { "<=" };
        s += &format!("{} {}: {:e} {op} {:e}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    s
}
