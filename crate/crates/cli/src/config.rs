//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ghz_transfer::params::TRANSMON_PRESET_NAME;
use ghz_transfer::runner::DispersiveRoute;
use ghz_transfer::{AmplitudeSource, PhysicalParams, RunMode};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Which auxiliary files a run writes into the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Emit {
    /// Populations over time, `trajectory.csv` (one file per amplitude sample).
    pub trajectory: bool,
    /// `report.json`.
    pub report: bool,
    /// `checkpoints.csv` and `segments.csv`.
    pub plots_data: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Emit { trajectory: false, report: true, plots_data: false }
    }
}

/// Pass/fail limits applied to a run. Unset limits take the mode default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub final_fidelity: Option<f64>,
    pub checkpoint_fidelity: Option<f64>,
    pub max_drift: Option<f64>,
    pub max_leakage: Option<f64>,
}

impl Thresholds {
    pub fn defaults(mode: RunMode) -> Self {
        match mode {
            RunMode::IdealReduced => Thresholds {
                final_fidelity: Some(1.0 - 1e-6),
                checkpoint_fidelity: Some(1.0 - 1e-7),
                max_drift: Some(1e-9),
                max_leakage: Some(1e-6),
            },
            RunMode::FullDispersive => Thresholds {
                final_fidelity: Some(0.96),
                checkpoint_fidelity: None,
                max_drift: Some(1e-9),
                max_leakage: Some(1e-6),
            },
            RunMode::Lindblad => Thresholds {
                final_fidelity: Some(0.9),
                checkpoint_fidelity: None,
                max_drift: Some(1e-6),
                max_leakage: Some(1e-6),
            },
        }
    }

    /// Explicit values win over `base`.
    pub fn over(&self, base: &Thresholds) -> Thresholds {
        Thresholds {
            final_fidelity: self.final_fidelity.or(base.final_fidelity),
            checkpoint_fidelity: self.checkpoint_fidelity.or(base.checkpoint_fidelity),
            max_drift: self.max_drift.or(base.max_drift),
            max_leakage: self.max_leakage.or(base.max_leakage),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Preset name or path to a parameter file.
    pub params: String,
    pub n: usize,
    pub mode: RunMode,
    pub amplitudes: AmplitudeSource,
    /// Directory for result files; nothing is written when unset.
    pub output: Option<PathBuf>,
    pub emit: Emit,
    /// A `.sched` file to run instead of the compiled canonical schedule.
    pub schedule: Option<PathBuf>,
    /// Fock cutoff of both cavities; 4, or 3 in Lindblad mode.
    pub cutoff: Option<usize>,
    pub route: DispersiveRoute,
    pub tolerance: Option<f64>,
    /// Relative tolerance of the resonance condition.
    pub resonance_tolerance: f64,
    pub samples: usize,
    /// Overrides `delta = r mu`, `delta' = r mu'`.
    pub delta_ratio: Option<f64>,
    /// Overrides both cavity lifetimes (microseconds).
    pub kappa_inv_us: Option<f64>,
    pub thresholds: Thresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        RunConfig {
            params: TRANSMON_PRESET_NAME.into(),
            n: 3,
            mode: RunMode::IdealReduced,
            amplitudes: AmplitudeSource::Literal(h, h),
            output: None,
            emit: Emit::default(),
            schedule: None,
            cutoff: None,
            route: DispersiveRoute::TimeDependent,
            tolerance: None,
            resonance_tolerance: 1e-6,
            samples: 32,
            delta_ratio: None,
            kappa_inv_us: None,
            thresholds: Thresholds::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if PhysicalParams::preset(&cfg.params).is_none() && Path::new(&cfg.params).is_relative() {
            cfg.params = base.join(&cfg.params).to_string_lossy().into_owned();
        }
        cfg.output.as_mut().map(rebase);
        cfg.schedule.as_mut().map(rebase);
        Ok(cfg)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or(if self.mode == RunMode::Lindblad { 3 } else { 4 })
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds.over(&Thresholds::defaults(self.mode))
    }

    /// The parameter set with the config's overrides applied and checked.
    pub fn physical_params(&self) -> Result<PhysicalParams> {
        let mut p = load_params(&self.params)?;
        if let Some(r) = self.delta_ratio {
            if !(r > 0.0 && r.is_finite()) {
                bail!("delta_ratio must be positive (got {r})");
            }
            p = p.with_detuning_ratio(r);
        }
        if let Some(k) = self.kappa_inv_us {
            if !(k > 0.0 && k.is_finite()) {
                bail!("kappa_inv_us must be positive (got {k})");
            }
            p = p.with_cavity_lifetime(k * 1e-6);
        }
        for w in p.validate()? {
            log::warn!("{w}");
        }
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 && self.schedule.is_none() {
            bail!("n must be at least 1");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if self.mode == RunMode::Lindblad && self.physical_params()?.decoherence.is_none() {
            bail!("mode lindblad needs decoherence rates; the parameter set `{}` has none", self.params);
        }
        Ok(())
    }
}

/// A preset name, or a path to a parameter file.
pub fn load_params(spec: &str) -> Result<PhysicalParams> {
    if let Some(p) = PhysicalParams::preset(spec) {
        return Ok(p);
    }
    PhysicalParams::from_file(spec).with_context(|| format!("loading parameters `{spec}`"))
}
