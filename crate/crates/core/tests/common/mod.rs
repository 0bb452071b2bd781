#![allow(dead_code)]

use std::f64::consts::TAU;

use phaseobs::{Complex64, HardyState, PhaseMatrix, PhaseWindow};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit vector with independent complex Gaussian-ish components.
pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    loop {
        let raw: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return raw.iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_state(rng: &mut impl Rng, dim: usize) -> HardyState {
    HardyState::normalize(&random_unit(rng, dim)).unwrap()
}

/// State with `a_n = 0` for `n > band`.
pub fn random_band_limited(rng: &mut impl Rng, dim: usize, band: usize) -> HardyState {
    let mut v = random_unit(rng, band + 1);
    v.resize(dim, c(0.0, 0.0));
    HardyState::normalize(&v).unwrap()
}

/// Gram matrix of `dim` random unit vectors of width `width` (rank <= width).
pub fn random_gram(rng: &mut impl Rng, dim: usize, width: usize) -> PhaseMatrix {
    let vectors: Vec<Vec<Complex64>> = (0..dim).map(|_| random_unit(rng, width)).collect();
    PhaseMatrix::from_gram(&vectors).unwrap()
}

/// One of the built-in families or a Gram matrix.
pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> PhaseMatrix {
    match rng.random_range(0..4) {
        0 => PhaseMatrix::canonical(dim).unwrap(),
        1 => PhaseMatrix::trivial(dim).unwrap(),
        2 => PhaseMatrix::exponential(rng.random_range(0.0..=1.0), dim).unwrap(),
        _ => {
            let width = rng.random_range(1..=dim);
            random_gram(rng, dim, width)
        }
    }
}

/// Up to three arcs, then rotated by a random angle so arcs may wrap past 2pi.
pub fn random_window(rng: &mut impl Rng) -> PhaseWindow {
    let arcs = rng.random_range(1..=3);
    let mut cuts: Vec<f64> = (0..2 * arcs).map(|_| rng.random_range(0.0..TAU)).collect();
    cuts.sort_by(f64::total_cmp);
    let pairs: Vec<(f64, f64)> = cuts
        .chunks(2)
        .map(|p| (p[0], p[1]))
        .filter(|(lo, hi)| lo < hi)
        .collect();
    PhaseWindow::new(pairs).unwrap().shift(rng.random_range(0.0..TAU))
}
