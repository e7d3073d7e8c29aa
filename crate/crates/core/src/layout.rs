//! Tensor-product structure of the two-cavity system.
//!
//! The joint space is ordered, slowest to fastest index:
//!
//! ```text
//! q1 .. qn | A | q1' .. qn' | mode a (cavity L) | mode b (cavity R)
//! ```
//!
//! Intra-cavity qubits carry three levels `g, e, f` (indices 0, 1, 2), the
//! coupler carries `g, e`, and each cavity mode is truncated at its Fock
//! cutoff. A basis index is the mixed-radix number formed by the factor
//! levels in this order. This ordering is part of the snapshot file format
//! (see [`BASIS_ORDER_VERSION`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Levels per intra-cavity qubit (`g, e, f`).
pub const QUDIT_DIM: usize = 3;
/// Levels of the coupler qubit (`g, e`).
pub const COUPLER_DIM: usize = 2;
/// Smallest admissible Fock cutoff. The protocol populates two photons and one
/// level of headroom is needed to detect truncation leakage.
pub const MIN_FOCK_CUTOFF: usize = 3;
pub const DEFAULT_FOCK_CUTOFF: usize = 4;
/// Version tag of the basis ordering documented above.
pub const BASIS_ORDER_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cavity {
    L,
    R,
}

impl fmt::Display for Cavity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cavity::L => write!(f, "L"),
            Cavity::R => write!(f, "R"),
        }
    }
}

/// Level of a qudit or of the coupler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    G = 0,
    E = 1,
    F = 2,
}

impl Level {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        match i {
            0 => Some(Level::G),
            1 => Some(Level::E),
            2 => Some(Level::F),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
        };
        write!(f, "{c}")
    }
}

/// A tensor factor of the joint space. Qubit indices are 1-based, so
/// `Left(1)` is qubit 1 and `Right(1)` is qubit 1'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Left(usize),
    Coupler,
    Right(usize),
    Mode(Cavity),
}

impl Site {
    /// The cavity a qubit sits in; `None` for the coupler and the modes.
    pub fn cavity(self) -> Option<Cavity> {
        match self {
            Site::Left(_) => Some(Cavity::L),
            Site::Right(_) => Some(Cavity::R),
            _ => None,
        }
    }

    pub fn is_qudit(self) -> bool {
        matches!(self, Site::Left(_) | Site::Right(_))
    }

    /// Parses the identifiers used in schedule files: `q3`, `q3'`, `A`.
    pub fn parse_id(id: &str) -> Option<Site> {
        if id == "A" {
            return Some(Site::Coupler);
        }
        let rest = id.strip_prefix('q')?;
        let (digits, right) = match rest.strip_suffix('\'') {
            Some(d) => (d, true),
            None => (rest, false),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let i: usize = digits.parse().ok()?;
        if i == 0 {
            return None;
        }
        Some(if right { Site::Right(i) } else { Site::Left(i) })
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Left(i) => write!(f, "q{i}"),
            Site::Right(i) => write!(f, "q{i}'"),
            Site::Coupler => write!(f, "A"),
            Site::Mode(Cavity::L) => write!(f, "a"),
            Site::Mode(Cavity::R) => write!(f, "b"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLayout {
    pub n_left: usize,
    pub n_right: usize,
    pub cutoff_l: usize,
    pub cutoff_r: usize,
}

/// Builds a layout, rejecting empty cavities and cutoffs below [`MIN_FOCK_CUTOFF`].
pub fn build_layout(n_left: usize, n_right: usize, cutoff_l: usize, cutoff_r: usize) -> Result<SystemLayout> {
    SystemLayout::new(n_left, n_right, cutoff_l, cutoff_r)
}

impl SystemLayout {
    pub fn new(n_left: usize, n_right: usize, cutoff_l: usize, cutoff_r: usize) -> Result<Self> {
        if n_left == 0 || n_right == 0 {
            return Err(Error::Layout(format!(
                "each cavity needs at least one qubit (got n_left = {n_left}, n_right = {n_right})"
            )));
        }
        for (name, c) in [("L", cutoff_l), ("R", cutoff_r)] {
            if c < MIN_FOCK_CUTOFF {
                return Err(Error::Layout(format!(
                    "Fock cutoff of cavity {name} is {c}; the protocol reaches 2 photons and needs one \
                     level of headroom, so the cutoff must be at least {MIN_FOCK_CUTOFF}"
                )));
            }
        }
        let layout = SystemLayout { n_left, n_right, cutoff_l, cutoff_r };
        layout
            .dims()
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Layout("joint dimension overflows usize".into()))?;
        Ok(layout)
    }

    /// Symmetric layout with `n` qubits per cavity and the default cutoff.
    pub fn symmetric(n: usize) -> Result<Self> {
        Self::new(n, n, DEFAULT_FOCK_CUTOFF, DEFAULT_FOCK_CUTOFF)
    }

    pub fn num_factors(&self) -> usize {
        self.n_left + self.n_right + 3
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.num_factors());
        dims.extend(std::iter::repeat_n(QUDIT_DIM, self.n_left));
        dims.push(COUPLER_DIM);
        dims.extend(std::iter::repeat_n(QUDIT_DIM, self.n_right));
        dims.push(self.cutoff_l + 1);
        dims.push(self.cutoff_r + 1);
        dims
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn cutoff(&self, cavity: Cavity) -> usize {
        match cavity {
            Cavity::L => self.cutoff_l,
            Cavity::R => self.cutoff_r,
        }
    }

    /// Position of `site` in the factor ordering.
    pub fn factor_of(&self, site: Site) -> Result<usize> {
        match site {
            Site::Left(i) if i >= 1 && i <= self.n_left => Ok(i - 1),
            Site::Coupler => Ok(self.n_left),
            Site::Right(i) if i >= 1 && i <= self.n_right => Ok(self.n_left + i),
            Site::Mode(Cavity::L) => Ok(self.n_left + self.n_right + 1),
            Site::Mode(Cavity::R) => Ok(self.n_left + self.n_right + 2),
            _ => Err(Error::Site(format!("{site} is not part of layout {self}"))),
        }
    }

    pub fn site_of(&self, factor: usize) -> Option<Site> {
        let nl = self.n_left;
        let nr = self.n_right;
        match factor {
            f if f < nl => Some(Site::Left(f + 1)),
            f if f == nl => Some(Site::Coupler),
            f if f <= nl + nr => Some(Site::Right(f - nl)),
            f if f == nl + nr + 1 => Some(Site::Mode(Cavity::L)),
            f if f == nl + nr + 2 => Some(Site::Mode(Cavity::R)),
            _ => None,
        }
    }

    pub fn site_dim(&self, site: Site) -> Result<usize> {
        Ok(self.dims()[self.factor_of(site)?])
    }

    /// Distance in the flat index between consecutive levels of `factor`.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut strides = vec![1; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        strides
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        let dims = self.dims();
        if levels.len() != dims.len() {
            return Err(Error::Dimension { expected: dims.len(), got: levels.len() });
        }
        let mut idx = 0;
        for (l, d) in levels.iter().zip(&dims) {
            if l >= d {
                return Err(Error::Layout(format!("level {l} out of range for a factor of dimension {d}")));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut levels = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            levels[f] = index % dims[f];
            index /= dims[f];
        }
        levels
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        let levels = self.levels_of(index);
        let nl = self.n_left;
        let nr = self.n_right;
        let lv = |i: usize| Level::from_index(i).expect("qudit level");
        BasisLabel {
            left: levels[..nl].iter().map(|&l| lv(l)).collect(),
            coupler: lv(levels[nl]),
            right: levels[nl + 1..nl + 1 + nr].iter().map(|&l| lv(l)).collect(),
            photons_l: levels[nl + nr + 1],
            photons_r: levels[nl + nr + 2],
        }
    }

    pub fn index_of_label(&self, label: &BasisLabel) -> Result<usize> {
        if label.left.len() != self.n_left || label.right.len() != self.n_right {
            return Err(Error::LayoutMismatch);
        }
        if label.coupler == Level::F {
            return Err(Error::Layout("coupler has no f level".into()));
        }
        let mut levels: Vec<usize> = label.left.iter().map(|l| l.index()).collect();
        levels.push(label.coupler.index());
        levels.extend(label.right.iter().map(|l| l.index()));
        levels.push(label.photons_l);
        levels.push(label.photons_r);
        self.index_of(&levels)
    }
}

impl fmt::Display for SystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n_left={} n_right={} cutoff_l={} cutoff_r={}",
            self.n_left, self.n_right, self.cutoff_l, self.cutoff_r
        )
    }
}

/// Human-readable basis state: qubit levels, coupler level and photon numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub left: Vec<Level>,
    pub coupler: Level,
    pub right: Vec<Level>,
    pub photons_l: usize,
    pub photons_r: usize,
}

impl fmt::Display for BasisLabel {
    /// `|gf;g;ge;1,1>`: left qubits; coupler; right qubits; photons L, R.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for l in &self.left {
            write!(f, "{l}")?;
        }
        write!(f, ";{};", self.coupler)?;
        for l in &self.right {
            write!(f, "{l}")?;
        }
        write!(f, ";{},{}>", self.photons_l, self.photons_r)
    }
}
