//! Truncated phase wave functions and phase windows.
//!
//! A [`HardyState`] holds the Fourier coefficients `(a_0, ..., a_{S-1})` of
//! `psi(theta) = sum_n a_n e^{-i n theta}`; the coefficient `a_n` is the
//! amplitude of the number state `eta_n`. A [`PhaseWindow`] is a finite union
//! of disjoint half-open arcs inside `[0, 2pi)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance on every unit-norm assertion.
pub const TOL_NORM: f64 = 1e-12;

/// Reduces an angle to `[0, 2pi)`.
pub fn canonical_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `[-pi, pi]` symmetrically, so that `reduce(-a) == -reduce(a)`
/// bit for bit (`%` is exact in IEEE arithmetic).
fn symmetric_angle(theta: f64) -> f64 {
    let r = theta % TAU;
    if r > PI {
        r - TAU
    } else if r < -PI {
        r + TAU
    } else {
        r
    }
}

/// How [`HardyState::superpose`] treats a result that is not unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Reject results whose norm differs from 1 by more than [`TOL_NORM`].
    Strict,
    /// Divide the result by its norm.
    Renormalize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyState {
    coeffs: Vec<Complex64>,
}

impl HardyState {
    /// Wraps coefficients that are already unit norm.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::OutOfRange("a state needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = norm_sqr(&coeffs).sqrt();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::NormViolation(norm));
        }
        Ok(Self { coeffs })
    }

    /// Divides `raw` by its Euclidean norm.
    pub fn normalize(raw: &[Complex64]) -> Result<Self> {
        if raw.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = norm_sqr(raw).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let coeffs = raw.iter().map(|c| c / norm).collect();
        Self::new(coeffs)
    }

    /// The number state `eta_n` in a truncation of dimension `dim`.
    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::OutOfRange(format!("number state {n} needs dimension > {n}, got {dim}")));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficients zero-padded to `dim`. Fails if the state is longer than `dim`.
    pub fn padded(&self, dim: usize) -> Result<Vec<Complex64>> {
        if self.dim() > dim {
            return Err(Error::DimensionMismatch(self.dim(), dim));
        }
        let mut out = self.coeffs.clone();
        out.resize(dim, Complex64::new(0.0, 0.0));
        Ok(out)
    }

    /// Index of the highest nonzero coefficient (0 for `eta_0`).
    pub fn band_limit(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm_sqr() != 0.0)
            .unwrap_or(0)
    }

    /// The state `theta -> psi(theta + alpha)`, i.e. `a_n -> a_n e^{-i n alpha}`.
    pub fn phase_shift(&self, alpha: f64) -> Self {
        let alpha = symmetric_angle(alpha);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, -(n as f64) * alpha))
            .collect();
        Self { coeffs }
    }

    /// `psi(theta) = sum_n a_n e^{-i n theta}`.
    pub fn evaluate(&self, theta: f64) -> Complex64 {
        let theta = symmetric_angle(theta);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, -(n as f64) * theta))
            .sum()
    }

    /// `<self, other>`, conjugate-linear in `self`. Shorter states are zero-padded.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `c1 psi + c2 phi`, zero-padding the shorter operand.
    pub fn superpose(
        c1: Complex64,
        psi: &Self,
        c2: Complex64,
        phi: &Self,
        mode: Normalization,
    ) -> Result<Self> {
        let dim = psi.dim().max(phi.dim());
        let a = psi.padded(dim)?;
        let b = phi.padded(dim)?;
        let raw: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| c1 * x + c2 * y).collect();
        let norm = norm_sqr(&raw).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        match mode {
            Normalization::Renormalize => Self::normalize(&raw),
            Normalization::Strict if (norm - 1.0).abs() > TOL_NORM => Err(Error::NormViolation(norm)),
            Normalization::Strict => Ok(Self { coeffs: raw }),
        }
    }
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

/// A finite union of disjoint half-open arcs `[lo, hi)` with `0 <= lo < hi <= 2pi`.
///
/// Arcs are kept sorted and touching arcs are merged, so the full circle always
/// has the single representation `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseWindow {
    arcs: Vec<(f64, f64)>,
}

impl PhaseWindow {
    pub fn new(mut arcs: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &arcs {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite);
            }
            if !(0.0 <= lo && lo < hi && hi <= TAU) {
                return Err(Error::InvalidWindow(format!(
                    "arc [{lo}, {hi}) must satisfy 0 <= lo < hi <= 2pi"
                )));
            }
        }
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in arcs.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidWindow(format!(
                    "arcs [{}, {}) and [{}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(Self { arcs: merge_touching(arcs) })
    }

    /// A single arc `[lo, hi)`.
    pub fn arc(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn full() -> Self {
        Self { arcs: vec![(0.0, TAU)] }
    }

    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn is_full(&self) -> bool {
        self.arcs == [(0.0, TAU)]
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Total length `|X|` in radians.
    pub fn measure(&self) -> f64 {
        if self.is_full() {
            return TAU;
        }
        self.arcs.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Translates every arc by `alpha` (mod 2pi), splitting arcs that wrap past 2pi.
    pub fn shift(&self, alpha: f64) -> Self {
        if self.is_full() {
            return Self::full();
        }
        let alpha = canonical_angle(alpha);
        if alpha == 0.0 {
            return self.clone();
        }
        let mut pieces = Vec::with_capacity(self.arcs.len() + 1);
        for &(lo, hi) in &self.arcs {
            let start = canonical_angle(lo + alpha);
            let end = start + (hi - lo);
            if end > TAU {
                pieces.push((start, TAU));
                pieces.push((0.0, (end - TAU).min(TAU)));
            } else {
                pieces.push((start, end));
            }
        }
        pieces.retain(|(lo, hi)| lo < hi);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { arcs: merge_touching(pieces) }
    }

    /// `[0, 2pi) \ X`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        let mut cursor = 0.0;
        for &(lo, hi) in &self.arcs {
            if lo > cursor {
                out.push((cursor, lo));
            }
            cursor = hi;
        }
        if cursor < TAU {
            out.push((cursor, TAU));
        }
        Self { arcs: out }
    }

    /// Union of two disjoint windows.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut arcs = self.arcs.clone();
        arcs.extend_from_slice(&other.arcs);
        Self::new(arcs)
    }
}

/// Merges sorted arcs that touch or (through rounding) overlap.
fn merge_touching(arcs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(arcs.len());
    for (lo, hi) in arcs {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}
