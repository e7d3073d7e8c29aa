//! Closed-form protocol states, fidelities, branch phases and the error
//! estimates used to check a run.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Cavity, Level, Site, SystemLayout, COUPLER_DIM, QUDIT_DIM};
use crate::operator::embed_product;
use crate::state::QuantumState;

/// Tolerance on `|alpha|^2 + |beta|^2 = 1`.
pub const AMPLITUDE_NORM_TOL: f64 = 1e-12;

/// Basis the transferred GHZ state is expressed in at the end.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Qubit 1 (or 1') in g/f, the others in +/-.
    #[default]
    GroundF,
    /// Qubit 1' rotated to +/- by [`logical_encode_pulse`].
    Logical,
}

/// `alpha |g> prod |+> + beta |f> prod |->` on `n` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzSpec {
    pub alpha: C64,
    pub beta: C64,
    pub n: usize,
    pub encoding: Encoding,
}

impl GhzSpec {
    pub fn new(alpha: C64, beta: C64, n: usize) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > AMPLITUDE_NORM_TOL {
            return Err(Error::Amplitudes(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
        }
        if n == 0 {
            return Err(Error::Amplitudes("n must be at least 1".into()));
        }
        Ok(GhzSpec { alpha, beta, n, encoding: Encoding::GroundF })
    }

    pub fn equal_weight(n: usize) -> Self {
        GhzSpec::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0), n).expect("normalized")
    }

    pub fn with_encoding(mut self, encoding: Encoding) -> Self {
        self.encoding = encoding;
        self
    }

    fn branch(&self, alpha: bool) -> GhzSpec {
        let (a, b) = if alpha { (1.0, 0.0) } else { (0.0, 1.0) };
        GhzSpec { alpha: C64::new(a, 0.0), beta: C64::new(b, 0.0), ..*self }
    }
}

/// Points of the protocol with a closed-form state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoint {
    Initial,
    AfterStep1,
    AfterStep2,
    AfterStep3,
    AfterStep4,
    Final,
}

impl Checkpoint {
    pub const ALL: [Checkpoint; 6] = [
        Checkpoint::Initial,
        Checkpoint::AfterStep1,
        Checkpoint::AfterStep2,
        Checkpoint::AfterStep3,
        Checkpoint::AfterStep4,
        Checkpoint::Final,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Checkpoint::Initial => "initial",
            Checkpoint::AfterStep1 => "after_step1",
            Checkpoint::AfterStep2 => "after_step2",
            Checkpoint::AfterStep3 => "after_step3",
            Checkpoint::AfterStep4 => "after_step4",
            Checkpoint::Final => "final",
        }
    }

    /// Checkpoint reached when the canonical segment `label` ends.
    pub fn after_segment(label: &str) -> Option<Checkpoint> {
        match label {
            "step1b" => Some(Checkpoint::AfterStep1),
            "step2b" => Some(Checkpoint::AfterStep2),
            "step3" => Some(Checkpoint::AfterStep3),
            "step4b" => Some(Checkpoint::AfterStep4),
            "step5b" => Some(Checkpoint::Final),
            _ => None,
        }
    }
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Checkpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Checkpoint::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCheckpoint(s.to_string()))
    }
}

fn ket(dim: usize, amps: &[(usize, C64)]) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    for &(i, a) in amps {
        v[i] += a;
    }
    v
}

fn level(l: Level) -> DVector<C64> {
    ket(QUDIT_DIM, &[(l.index(), C64::new(1.0, 0.0))])
}

/// `(|g> + c |e>) / sqrt 2`.
fn ge(c: C64) -> DVector<C64> {
    ket(QUDIT_DIM, &[(0, C64::new(FRAC_1_SQRT_2, 0.0)), (1, c * FRAC_1_SQRT_2)])
}

fn plus() -> DVector<C64> {
    ge(C64::new(1.0, 0.0))
}

fn minus() -> DVector<C64> {
    ge(C64::new(-1.0, 0.0))
}

/// One branch of a protocol state: qubit 1, left spectators, qubit 1', right
/// spectators and photon numbers; the coupler is always in g.
struct Branch {
    q1: DVector<C64>,
    left: DVector<C64>,
    q1p: DVector<C64>,
    right: DVector<C64>,
    photons: (usize, usize),
}

impl Branch {
    fn state(&self, layout: &SystemLayout) -> Result<QuantumState> {
        let mut locals = Vec::with_capacity(layout.num_factors());
        locals.push(self.q1.clone());
        locals.extend(std::iter::repeat_n(self.left.clone(), layout.n_left - 1));
        locals.push(ket(COUPLER_DIM, &[(0, C64::new(1.0, 0.0))]));
        locals.push(self.q1p.clone());
        locals.extend(std::iter::repeat_n(self.right.clone(), layout.n_right - 1));
        for (cavity, n) in [(Cavity::L, self.photons.0), (Cavity::R, self.photons.1)] {
            let cutoff = layout.cutoff(cavity);
            if n > cutoff {
                return Err(Error::Layout(format!("{n} photons exceed the cutoff {cutoff}")));
            }
            locals.push(ket(cutoff + 1, &[(n, C64::new(1.0, 0.0))]));
        }
        QuantumState::product(*layout, &locals)
    }
}

fn check_layout(spec: &GhzSpec, layout: &SystemLayout) -> Result<()> {
    if layout.n_left != spec.n || layout.n_right != spec.n {
        return Err(Error::Layout(format!(
            "GHZ spec has n = {} but the layout holds {} + {} qubits",
            spec.n, layout.n_left, layout.n_right
        )));
    }
    Ok(())
}

/// Alpha and beta branches at a checkpoint, with the printed signs folded into
/// the beta branch.
fn branches(cp: Checkpoint) -> (Branch, Branch, C64) {
    let g = level(Level::G);
    let f = level(Level::F);
    let alpha = Branch { q1: g.clone(), left: plus(), q1p: g.clone(), right: plus(), photons: (0, 0) };
    let one = C64::new(1.0, 0.0);
    let (beta, sign) = match cp {
        Checkpoint::Initial => (Branch { q1: f.clone(), left: minus(), q1p: g.clone(), right: plus(), photons: (0, 0) }, one),
        Checkpoint::AfterStep1 => (Branch { q1: g.clone(), left: minus(), q1p: g.clone(), right: plus(), photons: (2, 0) }, -one),
        Checkpoint::AfterStep2 => (Branch { q1: g.clone(), left: minus(), q1p: g.clone(), right: plus(), photons: (1, 1) }, one),
        Checkpoint::AfterStep3 => (Branch { q1: g.clone(), left: plus(), q1p: g.clone(), right: minus(), photons: (1, 1) }, one),
        Checkpoint::AfterStep4 => (Branch { q1: g.clone(), left: plus(), q1p: g.clone(), right: minus(), photons: (0, 2) }, -one),
        Checkpoint::Final => (Branch { q1: g.clone(), left: plus(), q1p: f.clone(), right: minus(), photons: (0, 0) }, one),
    };
    (alpha, beta, sign)
}

/// The closed-form joint state at `checkpoint`, with the signs as printed.
/// For `Final` with [`Encoding::Logical`], qubit 1' is rotated by
/// [`logical_encode_pulse`].
pub fn make_oracle_state(checkpoint: Checkpoint, spec: &GhzSpec, layout: &SystemLayout) -> Result<QuantumState> {
    check_layout(spec, layout)?;
    let (a, b, sign) = branches(checkpoint);
    let sa = a.state(layout)?;
    let sb = b.state(layout)?;
    let psi = sa.superpose(spec.alpha, &sb, spec.beta * sign)?;
    if checkpoint == Checkpoint::Final && spec.encoding == Encoding::Logical {
        return logical_encode_pulse(&psi, Site::Right(1));
    }
    Ok(psi)
}

/// State during the phase step after phases `phi = lambda t` and
/// `phi' = lambda' t`: the beta branch carries `prod (|g> - e^{i phi}|e>)`
/// on the left spectators and `prod (|g> + e^{i phi'}|e>)` on the right.
pub fn phase_step_state(spec: &GhzSpec, layout: &SystemLayout, phi: f64, phi_prime: f64) -> Result<QuantumState> {
    check_layout(spec, layout)?;
    let g = level(Level::G);
    let alpha = Branch { q1: g.clone(), left: plus(), q1p: g.clone(), right: plus(), photons: (0, 0) };
    let beta = Branch {
        q1: g.clone(),
        left: ge(-C64::from_polar(1.0, phi)),
        q1p: g,
        right: ge(C64::from_polar(1.0, phi_prime)),
        photons: (1, 1),
    };
    alpha.state(layout)?.superpose(spec.alpha, &beta.state(layout)?, spec.beta)
}

/// Overlaps of a state with the two unit-weight branches of a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchPhases {
    /// `<alpha branch|psi> / alpha`; 1 for a perfect run with no global phase.
    pub alpha_ratio: Option<C64>,
    /// `<beta branch|psi> / beta` with the printed sign included in the branch.
    pub beta_ratio: Option<C64>,
    /// `arg(beta_ratio / alpha_ratio)` in `(-pi, pi]`: 0 when the printed
    /// relative sign is reproduced.
    pub relative_phase: Option<f64>,
    /// `arg(alpha_ratio)` (or of `beta_ratio` if alpha = 0).
    pub global_phase: Option<f64>,
}

pub fn branch_phases(state: &QuantumState, checkpoint: Checkpoint, spec: &GhzSpec) -> Result<BranchPhases> {
    let layout = state.layout();
    let a = make_oracle_state(checkpoint, &spec.branch(true), layout)?;
    let b = make_oracle_state(checkpoint, &spec.branch(false), layout)?;
    let ratio = |branch: &QuantumState, coef: C64| -> Result<Option<C64>> {
        if coef.norm() < 1e-12 {
            return Ok(None);
        }
        Ok(Some(branch.inner(state)? / coef))
    };
    let alpha_ratio = ratio(&a, spec.alpha)?;
    let beta_ratio = ratio(&b, spec.beta)?;
    let relative_phase = match (alpha_ratio, beta_ratio) {
        (Some(x), Some(y)) => Some((y / x).arg()),
        _ => None,
    };
    let global_phase = alpha_ratio.or(beta_ratio).map(|r| r.arg());
    Ok(BranchPhases { alpha_ratio, beta_ratio, relative_phase, global_phase })
}

/// Perturbative f-level occupation `4 mu^2 / (4 mu^2 + delta^2)`.
pub fn occupation_probability(mu: f64, delta: f64) -> f64 {
    4.0 * mu * mu / (4.0 * mu * mu + delta * delta)
}

/// Spectator f population sampled over a dispersive segment.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FOccupationTrace {
    /// `(t, total spectator f population)`.
    pub samples: Vec<(f64, f64)>,
    /// Population at the start of the segment in configurations that can be
    /// excited to f: a spectator in e with at least one photon in its cavity,
    /// counted once per such spectator.
    pub excitable: f64,
}

/// Largest spectator f population over the trace, per unit of excitable
/// population, so that it compares directly with [`occupation_probability`].
/// Zero when nothing can be excited.
pub fn measured_f_occupation(trace: &FOccupationTrace) -> f64 {
    if trace.excitable <= 0.0 {
        return 0.0;
    }
    trace.samples.iter().map(|&(_, p)| p).fold(0.0, f64::max) / trace.excitable
}

/// Weight of spectator configurations (e, at least one photon) in `probs`.
pub fn excitable_population(layout: &SystemLayout, indices: &[usize], probs: &[f64]) -> f64 {
    let dims = layout.dims();
    let strides = layout.strides();
    let at = |i: usize, f: usize| (i / strides[f]) % dims[f];
    let mode_l = layout.factor_of(Site::Mode(Cavity::L)).expect("mode");
    let mode_r = layout.factor_of(Site::Mode(Cavity::R)).expect("mode");
    let left: Vec<usize> = (2..=layout.n_left).map(|i| layout.factor_of(Site::Left(i)).expect("site")).collect();
    let right: Vec<usize> = (2..=layout.n_right).map(|i| layout.factor_of(Site::Right(i)).expect("site")).collect();
    indices
        .iter()
        .zip(probs)
        .map(|(&i, p)| {
            let mut count = 0usize;
            if at(i, mode_l) > 0 {
                count += left.iter().filter(|&&f| at(i, f) == Level::E.index()).count();
            }
            if at(i, mode_r) > 0 {
                count += right.iter().filter(|&&f| at(i, f) == Level::E.index()).count();
            }
            count as f64 * p
        })
        .sum()
}

/// Single-qutrit unitary `|g> -> |+>`, `|f> -> |->`, `|e> -> |f>`.
pub fn logical_pulse_matrix() -> DMatrix<C64> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    // columns: images of g, e, f
    DMatrix::from_row_slice(3, 3, &[s, z, s, s, z, -s, z, o, z])
}

/// Population of `qubit` in e, i.e. outside the span of g and f.
pub fn outside_ground_f(state: &QuantumState, qubit: Site) -> Result<f64> {
    let f = state.layout().factor_of(qubit)?;
    Ok(state.factor_population(f, Level::E.index()))
}

/// Applies the classical pulse converting `|g>, |f>` of `qubit` to `|+>, |->`.
/// Warns when the qubit has more than 1e-6 population in e.
pub fn logical_encode_pulse(state: &QuantumState, qubit: Site) -> Result<QuantumState> {
    apply_local(state, qubit, &logical_pulse_matrix())
}

/// Inverse of [`logical_encode_pulse`].
pub fn logical_decode_pulse(state: &QuantumState, qubit: Site) -> Result<QuantumState> {
    let u = logical_pulse_matrix().adjoint();
    let f = state.layout().factor_of(qubit)?;
    if !qubit.is_qudit() {
        return Err(Error::Site(format!("{qubit} is not a qutrit")));
    }
    let m = embed_product(state.layout(), &[(f, &u)])?;
    let out = m.mul_vec(state.amplitudes().as_slice());
    QuantumState::from_amplitudes(*state.layout(), DVector::from_vec(out))
}

fn apply_local(state: &QuantumState, qubit: Site, u: &DMatrix<C64>) -> Result<QuantumState> {
    if !qubit.is_qudit() {
        return Err(Error::Site(format!("{qubit} is not a qutrit")));
    }
    let leak = outside_ground_f(state, qubit)?;
    if leak > 1e-6 {
        log::warn!("{qubit} has population {leak:e} outside span{{g, f}} before the logical pulse");
    }
    let f = state.layout().factor_of(qubit)?;
    let m = embed_product(state.layout(), &[(f, u)])?;
    let out = m.mul_vec(state.amplitudes().as_slice());
    QuantumState::from_amplitudes(*state.layout(), DVector::from_vec(out))
}

/// Two-dimensional subspace of a qutrit that carries one logical qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalBasis {
    /// `{|g>, |f>}`.
    GroundF,
    /// `{|+>, |->}`.
    PlusMinus,
}

/// Reduced state of `site` projected onto the logical basis (2x2).
pub fn logical_reduction(state: &QuantumState, site: Site, basis: LogicalBasis) -> Result<DMatrix<C64>> {
    let rho = state.partial_trace(&[site])?.to_dense();
    let vecs = match basis {
        LogicalBasis::GroundF => [level(Level::G), level(Level::F)],
        LogicalBasis::PlusMinus => [plus(), minus()],
    };
    Ok(DMatrix::from_fn(2, 2, |r, c| (vecs[r].adjoint() * &rho * &vecs[c])[(0, 0)]))
}

/// `max |m - I/2|` over the entries of a 2x2 matrix.
pub fn distance_from_maximally_mixed(m: &DMatrix<C64>) -> f64 {
    let half = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
    (m - half).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `count` amplitude pairs drawn uniformly from the unit sphere in C^2, with
/// the global phase fixed by making alpha real and non-negative.
pub fn sample_amplitudes(seed: u64, count: usize) -> Vec<(C64, C64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a = C64::new(x[0], x[1]) / norm;
            let b = C64::new(x[2], x[3]) / norm;
            let phase = if a.norm() > 0.0 { a.conj() / a.norm() } else { C64::new(1.0, 0.0) };
            let (a, b) = (a * phase, b * phase);
            // renormalize away rounding
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            (C64::new(a.norm() / n, 0.0), b / n)
        })
        .collect()
}

/// GHZ amplitudes as given on the command line or in a run file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AmplitudeSource {
    Literal(C64, C64),
    Random { seed: u64, count: usize },
}

impl AmplitudeSource {
    pub fn pairs(&self) -> Vec<(C64, C64)> {
        match *self {
            AmplitudeSource::Literal(a, b) => vec![(a, b)],
            AmplitudeSource::Random { seed, count } => sample_amplitudes(seed, count),
        }
    }
}

impl fmt::Display for AmplitudeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmplitudeSource::Literal(a, b) => write!(f, "{},{}", fmt_complex(*a), fmt_complex(*b)),
            AmplitudeSource::Random { seed, count } => write!(f, "random:{seed}:{count}"),
        }
    }
}

fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // find the sign separating real and imaginary parts (not an exponent sign)
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        return match split {
            Some(k) => {
                let re: f64 = body[..k].parse().ok()?;
                let im_text = &body[k..];
                let im: f64 = match im_text {
                    "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().ok()?,
                };
                Some(C64::new(re, im))
            }
            None => {
                let im: f64 = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse().ok()?,
                };
                Some(C64::new(0.0, im))
            }
        };
    }
    s.parse::<f64>().ok().map(|re| C64::new(re, 0.0))
}

impl FromStr for AmplitudeSource {
    type Err = Error;

    /// `equal`, `<alpha>,<beta>` (complex numbers like `0.6`, `0.8i`,
    /// `0.3-0.2i`) or `random:<seed>:<count>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "equal" {
            return Ok(AmplitudeSource::Literal(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)));
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let mut parts = rest.split(':');
            let (Some(seed), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Amplitudes(format!("expected random:<seed>:<count>, got `{s}`")));
            };
            let seed = seed.parse().map_err(|_| Error::Amplitudes(format!("bad seed `{seed}`")))?;
            let count: usize = count.parse().map_err(|_| Error::Amplitudes(format!("bad count `{count}`")))?;
            if count == 0 {
                return Err(Error::Amplitudes("random sample count must be positive".into()));
            }
            return Ok(AmplitudeSource::Random { seed, count });
        }
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::Amplitudes(format!("expected `<alpha>,<beta>`, `equal` or random:<seed>:<count>, got `{s}`")))?;
        let a = parse_complex(a).ok_or_else(|| Error::Amplitudes(format!("bad complex number `{a}`")))?;
        let b = parse_complex(b).ok_or_else(|| Error::Amplitudes(format!("bad complex number `{b}`")))?;
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Amplitudes(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
        }
        // Normalize the last few ulps so downstream checks at 1e-12 hold.
        let n = norm.sqrt();
        Ok(AmplitudeSource::Literal(a / n, b / n))
    }
}

impl From<AmplitudeSource> for String {
    fn from(a: AmplitudeSource) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for AmplitudeSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}
