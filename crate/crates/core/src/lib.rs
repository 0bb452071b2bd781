//! Covariant phase observables on a truncated Hardy (number) space.
//!
//! A phase observable is fixed by a phase matrix `(c_{n,m})`: a positive
//! semidefinite complex matrix with unit diagonal. Given a phase wave function
//! `psi(theta) = sum_n a_n e^{-i n theta}` it yields the phase density
//!
//! ```text
//! f(theta) = sum_{n,m} c_{n,m} e^{i(n-m) theta} conj(a_n) a_m
//! ```
//!
//! and the window probabilities `(1/2pi) int_X f`. Everything here works at a
//! finite truncation `S` with dense complex matrices.
//!
//! - [`hardy`]: states, phase shifts, phase windows.
//! - [`observable`]: phase matrices, validation, Kraus (contraction) factorization.
//! - [`distribution`]: densities, window operators, kernels, CDF and sampling.
//! - [`spectral`]: first-moment operator and localization probes.
//! - [`io`]: JSON schemas and CSV emitters.
//! - [`cli`]: the `phaseobs` batch command surface.

#![forbid(unsafe_code)]

pub mod cli;
pub mod distribution;
mod error;
pub mod hardy;
pub mod io;
mod linalg;
pub mod observable;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use distribution::{PhaseDensity, WindowOperator};
pub use hardy::{HardyState, Normalization, PhaseWindow, TOL_NORM};
pub use observable::{Family, KrausFamily, PhaseMatrix, ValidationReport};
pub use spectral::{Localization, MomentOperator};
