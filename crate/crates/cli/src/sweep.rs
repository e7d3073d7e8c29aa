//! The `sweep` command: independent runs over one numeric axis.

use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::run::execute;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "GHZT_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    DeltaRatio,
    KappaInvUs,
    N,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DeltaRatio => "delta-ratio",
            SweepAxis::KappaInvUs => "kappa-inv-us",
            SweepAxis::N => "n",
        }
    }

    /// `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = cfg.clone();
        match self {
            SweepAxis::DeltaRatio => c.delta_ratio = Some(value),
            SweepAxis::KappaInvUs => c.kappa_inv_us = Some(value),
            SweepAxis::N => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= 64.0) {
                    bail!("n must be a positive integer (got {value})");
                }
                if c.schedule.is_some() {
                    bail!("cannot sweep n over a fixed schedule file");
                }
                c.n = value as usize;
            }
        }
        Ok(c)
    }
}

impl FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta-ratio" | "delta_ratio" => Ok(SweepAxis::DeltaRatio),
            "kappa-inv-us" | "kappa_inv_us" => Ok(SweepAxis::KappaInvUs),
            "n" => Ok(SweepAxis::N),
            "mode" | "params" | "amplitudes" | "route" | "schedule" | "output" => {
                bail!("`{s}` is not a numeric axis; sweepable axes are delta-ratio, kappa-inv-us and n")
            }
            _ => bail!("unknown sweep axis `{s}`; sweepable axes are delta-ratio, kappa-inv-us and n"),
        }
    }
}

/// Comma-separated axis values.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("`{}` is not a number", v.trim())))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("no sweep values");
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub n: usize,
    pub mode: String,
    pub delta_ratio: f64,
    pub kappa_inv_us: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub max_f_occupation: Option<f64>,
    pub peak_f_population: Option<f64>,
    pub tau_s: f64,
    pub passed: bool,
}

fn point(cfg: &RunConfig, axis: SweepAxis, value: f64) -> Result<SweepRow> {
    let c = axis.apply(cfg, value)?;
    let result = execute(&c).with_context(|| format!("{} = {value}", axis.name()))?;
    let r = &result.report;
    let p = &r.run.params;
    Ok(SweepRow {
        axis: axis.name(),
        value,
        n: r.run.n,
        mode: r.run.mode.clone(),
        delta_ratio: p.delta / p.mu,
        kappa_inv_us: p.decoherence.map(|d| 1e6 / d.kappa_l).filter(|k| k.is_finite()),
        final_fidelity: r.summary.min_final_fidelity,
        max_f_occupation: r.summary.max_f_occupation,
        peak_f_population: r.samples.iter().filter_map(|s| s.f_occupation.as_ref().map(|f| f.peak_population)).reduce(f64::max),
        tau_s: r.budget.tau,
        passed: r.passed,
    })
}

/// Worker count: explicit, else the environment variable, else every core.
pub fn worker_count(explicit: Option<usize>) -> Result<Option<usize>> {
    if let Some(w) = explicit {
        return Ok(Some(w.max(1)));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let w: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}=`{v}` is not a count"))?;
            Ok(Some(w.max(1)))
        }
        Err(_) => Ok(None),
    }
}

/// One row per value, in the order given, whatever the worker count.
pub fn run_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64], workers: Option<usize>) -> Result<Vec<SweepRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = worker_count(workers)? {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    pool.install(|| values.par_iter().map(|&v| point(cfg, axis, v)).collect())
}

pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
