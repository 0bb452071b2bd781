//! Phase densities, window probabilities and window operators.
//!
//! For a phase matrix `c` and states `psi = sum a_n eta_n`, `phi = sum b_n eta_n`,
//!
//! ```text
//! f_{psi,phi}(theta) = sum_{n,m} c_{n,m} e^{i(n-m) theta} conj(a_n) b_m
//! P(X)               = sum_{n,m} c_{n,m} F_{n-m}(X) conj(a_n) a_m
//! F_k(X)             = (1/2pi) int_X e^{i k theta} d theta
//! ```
//!
//! Window integrals are always evaluated in closed form.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::hardy::{HardyState, Normalization, PhaseWindow};
use crate::observable::{Family, PhaseMatrix};
use crate::{Error, Result};

/// Imaginary residue allowed in a probability before it is treated as corruption.
pub const TOL_IMAG: f64 = 1e-10;

/// Bisection stops once the bracketing interval is this narrow.
pub const SAMPLE_TOL: f64 = 1e-10;

/// `(1/2pi) int_X e^{i k theta} d theta`.
///
/// Each arc `[lo, hi)` contributes `e^{i k mid} sin(k w / 2) / (pi k)` with
/// `mid = (lo + hi)/2`, `w = hi - lo`, which equals `(e^{ik hi} - e^{ik lo}) / (2 pi i k)`
/// without the cancellation on short arcs. The full circle is exact.
pub fn fourier_window_integral(k: i64, window: &PhaseWindow) -> Complex64 {
    if window.is_full() {
        return Complex64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    if k == 0 {
        return Complex64::new(window.measure() / TAU, 0.0);
    }
    let kf = k as f64;
    window
        .arcs()
        .iter()
        .map(|&(lo, hi)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            Complex64::from_polar((kf * half).sin() / (PI * kf), kf * mid)
        })
        .sum()
}

/// `F_k(X)` for `k = -(dim-1) ..= dim-1`, indexed by `k + dim - 1`.
fn window_integrals(dim: usize, window: &PhaseWindow) -> Vec<Complex64> {
    let span = dim as i64 - 1;
    (-span..=span).map(|k| fourier_window_integral(k, window)).collect()
}

fn padded_pair(m: &PhaseMatrix, psi: &HardyState, phi: &HardyState) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    Ok((psi.padded(m.dim())?, phi.padded(m.dim())?))
}

/// `f_{psi,phi}(theta)` by the direct double sum.
pub fn density(m: &PhaseMatrix, psi: &HardyState, phi: &HardyState, theta: f64) -> Result<Complex64> {
    let (a, b) = padded_pair(m, psi, phi)?;
    Ok(density_padded(m, &a, &b, theta))
}

fn density_padded(m: &PhaseMatrix, a: &[Complex64], b: &[Complex64], theta: f64) -> Complex64 {
    let dim = m.dim();
    let left: Vec<Complex64> = (0..dim)
        .map(|n| a[n].conj() * Complex64::from_polar(1.0, n as f64 * theta))
        .collect();
    let right: Vec<Complex64> = (0..dim)
        .map(|j| b[j] * Complex64::from_polar(1.0, -(j as f64) * theta))
        .collect();
    let c = m.entries();
    let mut total = Complex64::new(0.0, 0.0);
    for (n, l) in left.iter().enumerate() {
        if *l == Complex64::new(0.0, 0.0) {
            continue;
        }
        let row: Complex64 = right.iter().enumerate().map(|(j, r)| c[(n, j)] * r).sum();
        total += l * row;
    }
    total
}

/// Probability that the phase falls in `window`.
///
/// Fails if the imaginary residue exceeds [`TOL_IMAG`] or the value lies outside
/// `[-1e-10, 1 + 1e-10]`; values inside that band are clamped to `[0, 1]`.
pub fn window_probability(m: &PhaseMatrix, psi: &HardyState, window: &PhaseWindow) -> Result<f64> {
    let a = psi.padded(m.dim())?;
    let integrals = window_integrals(m.dim(), window);
    let value = sandwich(m.entries(), &integrals, &a, &a);
    checked_probability(value)
}

/// `sum_{n,m} c_{n,m} F_{n-m} conj(a_n) b_m`.
fn sandwich(c: &DMatrix<Complex64>, integrals: &[Complex64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let dim = c.nrows();
    let offset = dim - 1;
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..dim {
        if a[n] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let row: Complex64 = (0..dim).map(|j| c[(n, j)] * integrals[n + offset - j] * b[j]).sum();
        total += a[n].conj() * row;
    }
    total
}

fn checked_probability(value: Complex64) -> Result<f64> {
    if value.im.abs() > TOL_IMAG {
        return Err(Error::Numerical(format!("probability has imaginary part {:e}", value.im)));
    }
    let p = value.re;
    if !(-TOL_IMAG..=1.0 + TOL_IMAG).contains(&p) {
        return Err(Error::Numerical(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Truncation of the effect `E(X)` to the leading `dim x dim` block.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOperator {
    entries: DMatrix<Complex64>,
    window: PhaseWindow,
    source: Family,
}

impl WindowOperator {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn window(&self) -> &PhaseWindow {
        &self.window
    }

    pub fn source(&self) -> Family {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `<psi | E(X) psi>`.
    pub fn expectation(&self, psi: &HardyState) -> Result<Complex64> {
        let a = psi.padded(self.dim())?;
        let mut total = Complex64::new(0.0, 0.0);
        for n in 0..self.dim() {
            let row: Complex64 = (0..self.dim()).map(|j| self.entries[(n, j)] * a[j]).sum();
            total += a[n].conj() * row;
        }
        Ok(total)
    }
}

/// `E(X)_{n,m} = c_{n,m} F_{n-m}(X)` for `n, m < dim`.
pub fn window_operator(m: &PhaseMatrix, window: &PhaseWindow, dim: usize) -> Result<WindowOperator> {
    let m = m.leading(dim)?;
    let integrals = window_integrals(dim, window);
    let offset = dim - 1;
    let c = m.entries();
    let entries = DMatrix::from_fn(dim, dim, |n, j| c[(n, j)] * integrals[n + offset - j]);
    Ok(WindowOperator { entries, window: window.clone(), source: m.family() })
}

/// Residual of the sesquilinear expansion of `f` for `chi = c1 psi + c2 phi`:
/// `|f_chi - |c1|^2 f_psi - |c2|^2 f_phi - conj(c1) c2 f_{psi,phi} - c1 conj(c2) f_{phi,psi}|`.
pub fn check_interference(
    m: &PhaseMatrix,
    psi: &HardyState,
    phi: &HardyState,
    c1: Complex64,
    c2: Complex64,
    theta: f64,
) -> Result<f64> {
    let chi = HardyState::superpose(c1, psi, c2, phi, Normalization::Strict)?;
    let f = |x: &HardyState, y: &HardyState| density(m, x, y, theta);
    let lhs = f(&chi, &chi)?;
    let rhs = f(psi, psi)? * c1.norm_sqr()
        + f(phi, phi)? * c2.norm_sqr()
        + c1.conj() * c2 * f(psi, phi)?
        + c1 * c2.conj() * f(phi, psi)?;
    Ok((lhs - rhs).norm())
}

/// `|P_M(phase_shift(psi, alpha), X) - P_M(psi, X + alpha)|`.
pub fn check_covariance(m: &PhaseMatrix, psi: &HardyState, alpha: f64, window: &PhaseWindow) -> Result<f64> {
    let shifted_state = window_probability(m, &psi.phase_shift(alpha), window)?;
    let shifted_window = window_probability(m, psi, &window.shift(alpha))?;
    Ok((shifted_state - shifted_window).abs())
}

/// `C_s(x, y) = sum_{n,m <= s} e^{-i n x} c_{n,m} e^{i m y}`.
pub fn kernel_c(m: &PhaseMatrix, s: usize, x: f64, y: f64) -> Result<Complex64> {
    if s >= m.dim() {
        return Err(Error::OutOfRange(format!("kernel order {s} needs s < dim = {}", m.dim())));
    }
    let c = m.entries();
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=s {
        let left = Complex64::from_polar(1.0, -(n as f64) * x);
        let row: Complex64 = (0..=s)
            .map(|j| c[(n, j)] * Complex64::from_polar(1.0, j as f64 * y))
            .sum();
        total += left * row;
    }
    Ok(total)
}

/// Trapezoidal rule on a `grid x grid` lattice for
/// `(1/2pi)^2 int int conj(psi(x)) C_s(x - theta, y - theta) psi(y) dx dy`.
///
/// The lattice sum separates because `C_s` is a finite sum of products
/// `e^{-inx} e^{imy}`; it is accumulated in that order, which is the same sum
/// at `O(grid * s)` cost.
pub fn kernel_apply(m: &PhaseMatrix, s: usize, psi: &HardyState, theta: f64, grid: usize) -> Result<f64> {
    if s >= m.dim() {
        return Err(Error::OutOfRange(format!("kernel order {s} needs s < dim = {}", m.dim())));
    }
    if grid < 2 {
        return Err(Error::OutOfRange(format!("quadrature grid must be at least 2, got {grid}")));
    }
    if psi.band_limit() > s {
        return Err(Error::NotBandLimited(s));
    }
    let samples: Vec<Complex64> = (0..grid).map(|j| psi.evaluate(TAU * j as f64 / grid as f64)).collect();
    // proj[n] = (1/G) sum_j conj(psi(x_j)) e^{-i n (x_j - theta)}
    let proj: Vec<Complex64> = (0..=s)
        .map(|n| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let x = TAU * j as f64 / grid as f64;
                    v.conj() * Complex64::from_polar(1.0, -(n as f64) * (x - theta))
                })
                .sum();
            sum / grid as f64
        })
        .collect();
    // The y-sum is the complex conjugate of the x-sum.
    let c = m.entries();
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=s {
        for j in 0..=s {
            total += proj[n] * c[(n, j)] * proj[j].conj();
        }
    }
    if total.im.abs() > TOL_IMAG {
        return Err(Error::Numerical(format!("kernel quadrature has imaginary part {:e}", total.im)));
    }
    Ok(total.re)
}

/// The density `f_{psi,psi}` in its Fourier form `sum_k g_k e^{i k theta}`.
///
/// `g_k = sum_{n - m = k} c_{n,m} conj(a_n) a_m` and `g_{-k} = conj(g_k)`, so
/// after an `O(S^2)` setup each point costs `O(S)` and a uniform grid is one FFT.
#[derive(Debug, Clone)]
pub struct PhaseDensity {
    /// `g_0, ..., g_{S-1}`.
    coeffs: Vec<Complex64>,
}

impl PhaseDensity {
    pub fn new(m: &PhaseMatrix, psi: &HardyState) -> Result<Self> {
        let a = psi.padded(m.dim())?;
        let c = m.entries();
        let dim = m.dim();
        let coeffs = (0..dim)
            .map(|k| (k..dim).map(|n| c[(n, n - k)] * a[n].conj() * a[n - k]).sum())
            .collect();
        Ok(Self { coeffs })
    }

    pub fn fourier_coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self, theta: f64) -> f64 {
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, g)| (g * Complex64::from_polar(1.0, k as f64 * theta)).re)
            .sum();
        self.coeffs[0].re + 2.0 * tail
    }

    /// Probability of `[0, theta)`, unclamped; `theta` in `[0, 2pi]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= TAU {
            return 1.0;
        }
        let half = 0.5 * theta;
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, g)| {
                let kf = k as f64;
                (g * Complex64::from_polar((kf * half).sin() / (PI * kf), kf * half)).re
            })
            .sum();
        self.coeffs[0].re * theta / TAU + 2.0 * tail
    }

    /// Values at `theta_j = 2 pi j / grid`, `j = 0 .. grid`, via one inverse FFT.
    pub fn grid(&self, grid: usize) -> Result<Vec<f64>> {
        if grid < 2 {
            return Err(Error::OutOfRange(format!("grid must be at least 2, got {grid}")));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        buf[0] += self.coeffs[0];
        for (k, g) in self.coeffs.iter().enumerate().skip(1) {
            buf[k % grid] += g;
            buf[(grid - k % grid) % grid] += g.conj();
        }
        FftPlanner::new().plan_fft_inverse(grid).process(&mut buf);
        buf.iter()
            .map(|v| {
                if v.im.abs() > TOL_IMAG {
                    Err(Error::Numerical(format!("density has imaginary part {:e}", v.im)))
                } else {
                    Ok(v.re)
                }
            })
            .collect()
    }
}

/// `f_{psi,psi}(2 pi j / grid)` for `j = 0 .. grid`.
pub fn density_grid(m: &PhaseMatrix, psi: &HardyState, grid: usize) -> Result<Vec<f64>> {
    PhaseDensity::new(m, psi)?.grid(grid)
}

/// Probability of `[0, theta)` for `theta` in `[0, 2pi]`.
pub fn exact_cdf(m: &PhaseMatrix, psi: &HardyState, theta: f64) -> Result<f64> {
    if !(0.0..=TAU).contains(&theta) {
        return Err(Error::OutOfRange(format!("cdf argument {theta} outside [0, 2pi]")));
    }
    let window = if theta == 0.0 {
        PhaseWindow::empty()
    } else {
        PhaseWindow::arc(0.0, theta)?
    };
    window_probability(m, psi, &window)
}

/// Inverse-CDF sampling of phase outcomes in `[0, 2pi)`.
///
/// Uniform draws come from a ChaCha8 stream seeded with `seed`; each is inverted
/// by bisection on the exact CDF to [`SAMPLE_TOL`].
pub fn sample(m: &PhaseMatrix, psi: &HardyState, count: usize, seed: u64) -> Result<Vec<f64>> {
    let dist = PhaseDensity::new(m, psi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniforms: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
    Ok(uniforms.into_par_iter().map(|u| invert_cdf(&dist, u)).collect())
}

fn invert_cdf(dist: &PhaseDensity, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, TAU);
    while hi - lo > SAMPLE_TOL {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    if theta >= TAU {
        lo
    } else {
        theta
    }
}

/// Kolmogorov-Smirnov distance between the empirical distribution of `samples`
/// and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
