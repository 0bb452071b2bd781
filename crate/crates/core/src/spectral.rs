//! First-moment operators and localization probes.
//!
//! The first moment `A = (1/2pi) int theta dE(theta)` has matrix elements
//! `pi` on the diagonal and `c_{n,m} i/(m-n)` off it; for the canonical phase it
//! is the Toeplitz compression of multiplication by `theta`.
//!
//! No unit vector puts all of its phase probability inside a window shorter
//! than the full circle. At a finite truncation this shows up as the largest
//! eigenvalue of the window operator staying below 1.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::distribution::window_operator;
use crate::hardy::{HardyState, PhaseWindow};
use crate::linalg::hermitian_eigen;
use crate::observable::{Family, PhaseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentOperator {
    entries: DMatrix<Complex64>,
    source: Family,
}

impl MomentOperator {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn source(&self) -> Family {
        self.source
    }
}

pub fn first_moment(m: &PhaseMatrix, dim: usize) -> Result<MomentOperator> {
    let m = m.leading(dim)?;
    let c = m.entries();
    let entries = DMatrix::from_fn(dim, dim, |n, j| {
        if n == j {
            Complex64::new(PI, 0.0)
        } else {
            c[(n, j)] * Complex64::new(0.0, 1.0 / (j as f64 - n as f64))
        }
    });
    Ok(MomentOperator { entries, source: m.family() })
}

/// Eigenvalues of the first-moment operator, ascending.
pub fn moment_spectrum(m: &PhaseMatrix, dim: usize) -> Result<Vec<f64>> {
    let op = first_moment(m, dim)?;
    Ok(hermitian_eigen(op.entries())?.values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub dim: usize,
    /// Largest eigenvalue of the truncated window operator.
    pub lambda_max: f64,
    /// `1 - lambda_max` as computed; below about 1e-16 it is rounding noise.
    pub deficiency: f64,
    /// Unit eigenvector for `lambda_max`, first nonzero component real positive.
    pub maximizer: HardyState,
}

/// Largest probability any state of the truncation assigns to `window`.
pub fn localization_max(m: &PhaseMatrix, window: &PhaseWindow, dim: usize) -> Result<Localization> {
    let op = window_operator(m, window, dim)?;
    let eig = hermitian_eigen(op.entries())?;
    let top = dim - 1;
    let lambda_max = eig.values[top];
    let coeffs: Vec<Complex64> = eig.vectors.column(top).iter().copied().collect();
    let maximizer = HardyState::normalize(&coeffs)?;
    Ok(Localization { dim, lambda_max, deficiency: 1.0 - lambda_max, maximizer })
}

/// `localization_max` at each truncation in `dims` (strictly ascending).
pub fn localization_sweep(m: &PhaseMatrix, window: &PhaseWindow, dims: &[usize]) -> Result<Vec<(usize, f64)>> {
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("truncations must be strictly ascending".into()));
    }
    dims.par_iter()
        .map(|&dim| localization_max(m, window, dim).map(|l| (dim, l.lambda_max)))
        .collect()
}
