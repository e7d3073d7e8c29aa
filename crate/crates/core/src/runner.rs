//! Executes a pulse schedule segment by segment and scores the result
//! against the closed-form checkpoints.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    branch_phases, excitable_population, logical_encode_pulse, make_oracle_state, measured_f_occupation,
    occupation_probability, BranchPhases, Checkpoint, Encoding, FOccupationTrace, GhzSpec,
};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::evolution::trajectory::evaluate;
use crate::evolution::{
    evolve_detuned_frame, evolve_lindblad_report, evolve_unitary_observed, EvolutionSpec, Generator, Method, Observer,
    Tracked, TrajectoryRecorder, DEFAULT_LINDBLAD_TOLERANCE, DEFAULT_UNITARY_TOLERANCE,
};
use crate::hamiltonian::{collapse_operators, h_dispersive_reduced_rates, h_resonant_ef, h_resonant_ge, DispersiveDrive};
use crate::layout::{Cavity, Site, SystemLayout};
use crate::operator::OperatorMatrix;
use crate::params::PhysicalParams;
use crate::schedule::{PulseSegment, Schedule, SegmentKind, SiteSel, TimingBudget};
use crate::state::QuantumState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Resonant steps exactly, phase step under the reduced Hamiltonian.
    #[default]
    IdealReduced,
    /// Phase step under the explicitly time-dependent dispersive coupling.
    FullDispersive,
    /// Master equation with the decoherence rates of the parameter set; the
    /// phase step uses the reduced Hamiltonian and ramps are idle decay.
    Lindblad,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::IdealReduced => "ideal-reduced",
            RunMode::FullDispersive => "full-dispersive",
            RunMode::Lindblad => "lindblad",
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal-reduced" => Ok(RunMode::IdealReduced),
            "full-dispersive" => Ok(RunMode::FullDispersive),
            "lindblad" => Ok(RunMode::Lindblad),
            _ => Err(Error::Params(format!("unknown mode `{s}` (expected ideal-reduced, full-dispersive or lindblad)"))),
        }
    }
}

/// How the full dispersive step is integrated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersiveRoute {
    /// Adaptive integration of `H(t)` in the interaction picture.
    #[default]
    TimeDependent,
    /// Static `H0 + V` in the detuned frame, mapped back afterwards.
    DetunedFrame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub mode: RunMode,
    pub route: DispersiveRoute,
    /// Integrator tolerance; the mode's default when `None`.
    pub tolerance: Option<f64>,
    /// Samples per static segment for trajectories and leakage tracking.
    pub samples: usize,
    pub record_trajectory: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { mode: RunMode::IdealReduced, route: DispersiveRoute::TimeDependent, tolerance: None, samples: 32, record_trajectory: false }
    }
}

impl RunOptions {
    pub fn mode(mode: RunMode) -> Self {
        RunOptions { mode, ..Default::default() }
    }

    fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.mode {
            RunMode::Lindblad => DEFAULT_LINDBLAD_TOLERANCE,
            _ => DEFAULT_UNITARY_TOLERANCE,
        })
    }
}

/// Pure or mixed state carried through a run.
#[derive(Clone, Debug)]
pub enum RunState {
    Pure(QuantumState),
    Mixed(DensityMatrix),
}

impl RunState {
    /// `<psi|rho|psi>` against a pure target.
    pub fn fidelity(&self, target: &QuantumState) -> Result<f64> {
        match self {
            RunState::Pure(s) => Ok(s.inner(target)?.norm_sqr().clamp(0.0, 1.0)),
            RunState::Mixed(r) => Ok(r.fidelity_with_pure(target)?.clamp(0.0, 1.0)),
        }
    }

    pub fn as_pure(&self) -> Option<&QuantumState> {
        match self {
            RunState::Pure(s) => Some(s),
            RunState::Mixed(_) => None,
        }
    }

    pub fn as_mixed(&self) -> Option<&DensityMatrix> {
        match self {
            RunState::Mixed(r) => Some(r),
            RunState::Pure(_) => None,
        }
    }
}

/// Per-segment numerics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentReport {
    pub label: String,
    /// Start of the pulse (after its ramp), seconds since the protocol began.
    pub start: f64,
    pub duration: f64,
    pub ramp: f64,
    pub method: String,
    /// Norm drift (pure states) or trace drift (density matrices).
    pub drift: f64,
    pub subspace_dim: usize,
    /// Largest population of the highest retained Fock level seen.
    pub top_fock: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointReport {
    pub checkpoint: Checkpoint,
    pub segment: String,
    pub fidelity: f64,
    pub phases: Option<BranchPhases>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FOccupationReport {
    /// Largest spectator f population per unit of excitable population.
    pub measured: f64,
    /// `4 mu^2 / (4 mu^2 + delta^2)`.
    pub predicted: f64,
    /// Largest absolute spectator f population.
    pub peak_population: f64,
    pub excitable: f64,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub mode: RunMode,
    pub state: RunState,
    pub segments: Vec<SegmentReport>,
    pub checkpoints: Vec<CheckpointReport>,
    pub final_fidelity: Option<f64>,
    pub budget: TimingBudget,
    pub f_occupation: Option<FOccupationReport>,
    pub trajectory: Option<TrajectoryRecorder>,
}

impl RunOutcome {
    pub fn max_drift(&self) -> f64 {
        self.segments.iter().map(|s| s.drift).fold(0.0, f64::max)
    }

    pub fn max_top_fock(&self) -> f64 {
        self.segments.iter().map(|s| s.top_fock).fold(0.0, f64::max)
    }

    pub fn checkpoint(&self, cp: Checkpoint) -> Option<&CheckpointReport> {
        self.checkpoints.iter().find(|c| c.checkpoint == cp)
    }
}

/// The Hamiltonian a segment switches on, in the given mode.
pub fn segment_generator(
    layout: &SystemLayout,
    params: &PhysicalParams,
    segment: &PulseSegment,
    mode: RunMode,
) -> Result<Generator> {
    let single = |s: &PulseSegment| -> Result<(Cavity, Site)> {
        match (s.cavity.single(), s.site) {
            (Some(c), SiteSel::One(site)) => Ok((c, site)),
            _ => Err(Error::Schedule(format!("segment `{}` needs one cavity and one site", s.label))),
        }
    };
    Ok(match segment.kind {
        SegmentKind::ResonantEf => {
            let (c, site) = single(segment)?;
            Generator::Static(h_resonant_ef(layout, c, site, segment.coupling)?)
        }
        SegmentKind::ResonantGe => {
            let (c, site) = single(segment)?;
            Generator::Static(h_resonant_ge(layout, c, site, segment.coupling)?)
        }
        SegmentKind::Dispersive => match mode {
            RunMode::FullDispersive => Generator::Dispersive(DispersiveDrive::new(layout, params)?),
            _ => {
                let lr = segment
                    .coupling_r
                    .ok_or_else(|| Error::Schedule(format!("dispersive segment `{}` lacks lambda'", segment.label)))?;
                Generator::Static(h_dispersive_reduced_rates(layout, segment.coupling, lr)?)
            }
        },
    })
}

fn top_fock(layout: &SystemLayout, indices: &[usize], probs: &[f64]) -> f64 {
    [Cavity::L, Cavity::R]
        .into_iter()
        // an empty sum is -0.0
        .map(|c| evaluate(layout, Tracked::TopFock(c), indices, probs) + 0.0)
        .fold(0.0, f64::max)
}

/// Runs `schedule` from `initial`; `on_segment` sees the state after each
/// pulse (before the next ramp).
pub fn run_schedule(
    initial: RunState,
    schedule: &Schedule,
    params: &PhysicalParams,
    options: &RunOptions,
    mut on_segment: impl FnMut(&PulseSegment, &RunState) -> Result<()>,
) -> Result<(RunState, Vec<SegmentReport>, Option<FOccupationTrace>, Option<TrajectoryRecorder>)> {
    let layout = match &initial {
        RunState::Pure(s) => *s.layout(),
        RunState::Mixed(r) => *r.layout().ok_or(Error::LayoutMismatch)?,
    };
    let lindblad = options.mode == RunMode::Lindblad;
    if lindblad != matches!(initial, RunState::Mixed(_)) {
        return Err(Error::Params("Lindblad runs take a density matrix, the other modes a pure state".into()));
    }
    let collapse = if lindblad { collapse_operators(&layout, params)? } else { Vec::new() };
    let tol = options.tolerance();
    let mut recorder = options
        .record_trajectory
        .then(|| TrajectoryRecorder::new(layout, TrajectoryRecorder::default_columns(&layout)));
    let mut state = initial;
    let mut clock = 0.0;
    let mut reports = Vec::new();
    let mut f_trace: Option<FOccupationTrace> = None;

    let idle = |state: &RunState, t: f64| -> Result<(RunState, f64)> {
        match state {
            RunState::Mixed(rho) if t > 0.0 => {
                let spec = EvolutionSpec::lindblad(Generator::Static(OperatorMatrix::zero(layout)), t).with_tolerance(tol);
                let out = evolve_lindblad_report(rho, &spec, &collapse)?;
                Ok((RunState::Mixed(out.density), out.trace_drift))
            }
            _ => Ok((state.clone(), 0.0)),
        }
    };

    for seg in &schedule.segments {
        let (after_ramp, ramp_drift) = idle(&state, seg.ramp)?;
        state = after_ramp;
        clock += seg.ramp;
        let start = clock;
        let generator = segment_generator(&layout, params, seg, options.mode)?;
        let mut peak_top = 0.0f64;
        let dispersive_full = seg.kind == SegmentKind::Dispersive && options.mode == RunMode::FullDispersive;

        let (next, method, drift, subspace_dim) = match &state {
            RunState::Pure(psi) => {
                if dispersive_full {
                    let (indices, probs) = populations(psi);
                    f_trace = Some(FOccupationTrace { samples: Vec::new(), excitable: excitable_population(&layout, &indices, &probs) });
                }
                if dispersive_full && options.route == DispersiveRoute::DetunedFrame {
                    let Generator::Dispersive(drive) = &generator else { unreachable!("full mode builds a drive") };
                    let out = evolve_detuned_frame(psi, drive, 0.0, seg.duration)?;
                    let (indices, probs) = populations(&out);
                    peak_top = top_fock(&layout, &indices, &probs);
                    if let Some(rec) = recorder.as_mut() {
                        rec.record(&seg.label, start + seg.duration, &indices, &amps_at(&out, &indices));
                    }
                    let drift = (out.norm() - psi.norm()).abs();
                    (RunState::Pure(out), "detuned-frame".to_string(), drift, layout.dim())
                } else {
                    let spec = EvolutionSpec::unitary(generator, seg.duration).with_tolerance(tol);
                    let mut cb = |t: f64, idx: &[usize], amps: &[C64]| {
                        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
                        peak_top = peak_top.max(top_fock(&layout, idx, &probs));
                        if let Some(tr) = f_trace.as_mut().filter(|_| dispersive_full) {
                            // A restarted segment begins again at t = 0.
                            while tr.samples.last().is_some_and(|&(last, _)| last >= t) {
                                tr.samples.pop();
                            }
                            tr.samples.push((t, evaluate(&layout, Tracked::SpectatorF, idx, &probs)));
                        }
                        if let Some(rec) = recorder.as_mut() {
                            rec.record(&seg.label, start + t, idx, amps);
                        }
                    };
                    let out = evolve_unitary_observed(psi, &spec, Some(Observer { samples: options.samples, callback: &mut cb }))?;
                    (RunState::Pure(out.state), method_name(out.method).to_string(), out.norm_drift, out.subspace_dim)
                }
            }
            RunState::Mixed(rho) => {
                let spec = EvolutionSpec::lindblad(generator, seg.duration).with_tolerance(tol);
                let out = evolve_lindblad_report(rho, &spec, &collapse)?;
                let probs: Vec<f64> = (0..out.density.support().len()).map(|k| out.density.block()[(k, k)].re).collect();
                peak_top = top_fock(&layout, out.density.support(), &probs);
                if let Some(rec) = recorder.as_mut() {
                    rec.record_density(&seg.label, start + seg.duration, &out.density);
                }
                (RunState::Mixed(out.density), "lindblad-dopri45".to_string(), out.trace_drift + ramp_drift, out.subspace_dim)
            }
        };
        state = next;
        clock += seg.duration;
        reports.push(SegmentReport {
            label: seg.label.clone(),
            start,
            duration: seg.duration,
            ramp: seg.ramp,
            method,
            drift,
            subspace_dim,
            top_fock: peak_top,
        });
        on_segment(seg, &state)?;
    }
    let (after, _) = idle(&state, schedule.final_ramp)?;
    Ok((after, reports, f_trace, recorder))
}

fn populations(psi: &QuantumState) -> (Vec<usize>, Vec<f64>) {
    let indices = psi.support();
    let probs = indices.iter().map(|&i| psi.amplitudes()[i].norm_sqr()).collect();
    (indices, probs)
}

fn amps_at(psi: &QuantumState, indices: &[usize]) -> Vec<C64> {
    indices.iter().map(|&i| psi.amplitudes()[i]).collect()
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Eigen => "eigen",
        Method::Krylov => "krylov",
        Method::DormandPrince => "dopri45",
        Method::Magnus4 => "magnus4",
    }
}

/// Prepares the GHZ input, runs the schedule and scores every checkpoint
/// against its closed form.
pub fn run_protocol(
    params: &PhysicalParams,
    ghz: &GhzSpec,
    layout: &SystemLayout,
    schedule: &Schedule,
    options: &RunOptions,
) -> Result<RunOutcome> {
    if options.mode == RunMode::Lindblad && params.decoherence.is_none() {
        return Err(Error::Params("Lindblad mode needs decoherence rates in the parameter set".into()));
    }
    let psi0 = make_oracle_state(Checkpoint::Initial, ghz, layout)?;
    let initial = match options.mode {
        RunMode::Lindblad => RunState::Mixed(DensityMatrix::from_pure(&psi0)),
        _ => RunState::Pure(psi0),
    };
    let ground_f = GhzSpec { encoding: Encoding::GroundF, ..*ghz };
    let mut checkpoints = vec![CheckpointReport {
        checkpoint: Checkpoint::Initial,
        segment: String::new(),
        fidelity: 1.0,
        phases: None,
    }];
    let mut oracles: BTreeMap<Checkpoint, QuantumState> = BTreeMap::new();
    let (state, segments, f_trace, trajectory) = run_schedule(initial, schedule, params, options, |seg, state| {
        if let Some(cp) = Checkpoint::after_segment(&seg.label) {
            let oracle = match oracles.get(&cp) {
                Some(o) => o.clone(),
                None => {
                    let o = make_oracle_state(cp, &ground_f, layout)?;
                    oracles.insert(cp, o.clone());
                    o
                }
            };
            let phases = state.as_pure().map(|psi| branch_phases(psi, cp, &ground_f)).transpose()?;
            checkpoints.push(CheckpointReport { checkpoint: cp, segment: seg.label.clone(), fidelity: state.fidelity(&oracle)?, phases });
        }
        Ok(())
    })?;

    // The logical encoding is a separate single-qubit pulse on qubit 1'.
    let state = match (&state, ghz.encoding) {
        (RunState::Pure(psi), Encoding::Logical) => RunState::Pure(logical_encode_pulse(psi, Site::Right(1))?),
        _ => state,
    };
    let final_fidelity = if checkpoints.iter().any(|c| c.checkpoint == Checkpoint::Final) {
        match (&state, ghz.encoding) {
            (RunState::Mixed(_), Encoding::Logical) => None,
            _ => Some(state.fidelity(&make_oracle_state(Checkpoint::Final, ghz, layout)?)?),
        }
    } else {
        None
    };
    let f_occupation = f_trace.map(|tr| FOccupationReport {
        measured: measured_f_occupation(&tr),
        predicted: occupation_probability(params.mu, params.delta),
        peak_population: tr.samples.iter().map(|s| s.1).fold(0.0, f64::max),
        excitable: tr.excitable,
    });
    Ok(RunOutcome {
        mode: options.mode,
        state,
        segments,
        checkpoints,
        final_fidelity,
        budget: schedule.budget(),
        f_occupation,
        trajectory,
    })
}
