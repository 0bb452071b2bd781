//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, ExitCode};

use common::{c, random_band_limited, random_gram, random_matrix, random_state, random_window};
use phaseobs::distribution::{
    check_covariance, check_interference, density, density_grid, exact_cdf, kernel_apply, kernel_c,
    sample, window_probability, PhaseDensity,
};
use phaseobs::observable::{kraus_decompose, kraus_reconstruct};
use phaseobs::spectral::{localization_max, moment_spectrum};
use phaseobs::{Complex64, HardyState, PhaseMatrix, PhaseWindow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: failed sub-checks plus a summary of worst values.
struct Outcome {
    failures: Vec<String>,
    summary: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failures: Vec::new(), summary: String::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, text: impl AsRef<str>) {
        if !self.summary.is_empty() {
            self.summary.push_str("; ");
        }
        self.summary.push_str(text.as_ref());
    }
}

fn max_entry_diff(a: &nalgebra::DMatrix<Complex64>, b: &nalgebra::DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn plus_state() -> HardyState {
    HardyState::new(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap()
}

/// The matrix set shared by criteria 1 and 4.
fn test_matrices(rng: &mut ChaCha8Rng, dim: usize) -> Vec<PhaseMatrix> {
    let mut ms = vec![
        PhaseMatrix::canonical(dim).unwrap(),
        PhaseMatrix::trivial(dim).unwrap(),
        PhaseMatrix::exponential(0.3, dim).unwrap(),
        PhaseMatrix::exponential(0.7, dim).unwrap(),
    ];
    for _ in 0..10 {
        let width = rng.random_range(1..=dim);
        ms.push(random_gram(rng, dim, width));
    }
    ms
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dim = 32;
    let grid = 10_000;
    let (mut worst_total, mut worst_min, mut worst_quad) = (0.0f64, f64::INFINITY, 0.0f64);
    for m in test_matrices(&mut rng, dim) {
        for _ in 0..100 {
            let psi = random_state(&mut rng, dim);
            let total = window_probability(&m, &psi, &PhaseWindow::full()).unwrap();
            worst_total = worst_total.max((total - 1.0).abs());
            let values = density_grid(&m, &psi, grid).unwrap();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            worst_min = worst_min.min(min);
            let quad = values.iter().sum::<f64>() / grid as f64;
            worst_quad = worst_quad.max((quad - 1.0).abs());
        }
    }
    out.check(worst_total <= 1e-12, || format!("analytic total off by {worst_total:e}"));
    out.check(worst_min >= -1e-12, || format!("density minimum {worst_min:e}"));
    out.check(worst_quad <= 1e-8, || format!("grid quadrature off by {worst_quad:e}"));
    out.note(format!("|total-1| {worst_total:.1e}, min f {worst_min:.1e}, |quad-1| {worst_quad:.1e}"));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut wrapping = 0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=32);
        let m = random_matrix(&mut rng, dim);
        let psi = random_state(&mut rng, dim);
        let window = random_window(&mut rng);
        if window.arcs().first().is_some_and(|a| a.0 == 0.0) && window.arcs().last().is_some_and(|a| a.1 == TAU) {
            wrapping += 1;
        }
        let alpha = rng.random_range(-2.0 * TAU..2.0 * TAU);
        worst = worst.max(check_covariance(&m, &psi, alpha, &window).unwrap());
    }
    out.check(worst <= 1e-12, || format!("covariance residual {worst:e}"));
    out.check(wrapping > 0, || "no wraparound window was exercised".into());
    out.note(format!("max residual {worst:.1e} ({wrapping} wrapping windows)"));
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut tuples = 0;
    while tuples < 100 {
        let dim = rng.random_range(1..=32);
        let m = random_matrix(&mut rng, dim);
        let psi = random_state(&mut rng, dim);
        let phi = random_state(&mut rng, dim);
        let c1 = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let c2 = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let norm = psi
            .coeffs()
            .iter()
            .zip(phi.coeffs())
            .map(|(a, b)| (c1 * a + c2 * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm < 1e-3 {
            continue;
        }
        let theta = rng.random_range(0.0..TAU);
        worst = worst.max(check_interference(&m, &psi, &phi, c1 / norm, c2 / norm, theta).unwrap());
        tuples += 1;
    }
    out.check(worst <= 1e-12, || format!("interference residual {worst:e}"));

    // eta_0, eta_1 under the canonical phase: the expansion is 1/2 + 1/2 + cos(theta)
    let can = PhaseMatrix::canonical(2).unwrap();
    let e0 = HardyState::number(0, 2).unwrap();
    let e1 = HardyState::number(1, 2).unwrap();
    let h = c(FRAC_1_SQRT_2, 0.0);
    let mut worked = 0.0f64;
    for j in 0..64 {
        let theta = TAU * j as f64 / 64.0;
        let f00 = density(&can, &e0, &e0, theta).unwrap();
        let f11 = density(&can, &e1, &e1, theta).unwrap();
        let f01 = density(&can, &e0, &e1, theta).unwrap();
        let f10 = density(&can, &e1, &e0, theta).unwrap();
        let expansion = f00 * 0.5 + f11 * 0.5 + h * h * (f01 + f10);
        worked = worked.max((expansion - c(1.0 + theta.cos(), 0.0)).norm());
        worked = worked.max(check_interference(&can, &e0, &e1, h, h, theta).unwrap());
    }
    out.check(worked <= 1e-12, || format!("worked case residual {worked:e}"));
    out.note(format!("max residual {worst:.1e}, worked case {worked:.1e}"));
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_round = 0.0f64;
    let mut worst_col = 0.0f64;
    for dim in [1, 2, 5, 8, 16, 32] {
        for m in test_matrices(&mut rng, dim) {
            let k = kraus_decompose(&m).unwrap();
            for norm in k.column_norms_sqr() {
                worst_col = worst_col.max((norm - 1.0).abs());
            }
            let back = kraus_reconstruct(&k).unwrap();
            worst_round = worst_round.max(max_entry_diff(back.entries(), m.entries()));
        }
    }
    out.check(worst_round <= 1e-10, || format!("round trip off by {worst_round:e}"));
    out.check(worst_col <= 1e-10, || format!("column norm off by {worst_col:e}"));

    for dim in [1, 2, 8, 32] {
        let k = kraus_decompose(&PhaseMatrix::canonical(dim).unwrap()).unwrap();
        out.check(k.rank() == 1, || format!("canonical({dim}) has rank {}", k.rank()));
        // V_0 = I up to a global phase: every weight shares the phase of the first
        let rows = k.rows();
        let phase = rows[(0, 0)] / rows[(0, 0)].norm();
        let dev = (0..dim).map(|j| (rows[(0, j)] - phase).norm()).fold(0.0, f64::max);
        out.check(dev <= 1e-10, || format!("canonical({dim}) V_0 deviates from I by {dev:e}"));

        let k = kraus_decompose(&PhaseMatrix::trivial(dim).unwrap()).unwrap();
        out.check(k.rank() == dim, || format!("trivial({dim}) has rank {}", k.rank()));
        let mut seen = vec![false; dim];
        for n in 0..k.rank() {
            let row = k.rows().row(n);
            let hits: Vec<usize> = (0..dim).filter(|&j| row[j].norm() > 1e-12).collect();
            let basis = hits.len() == 1 && (row[hits[0]].norm() - 1.0).abs() <= 1e-12;
            out.check(basis, || format!("trivial({dim}) row {n} is not a basis row"));
            if let [j] = hits[..] {
                seen[j] = true;
            }
        }
        out.check(seen.iter().all(|&s| s), || format!("trivial({dim}) rows are not a permutation"));
    }
    out.note(format!("round trip {worst_round:.1e}, column norms {worst_col:.1e}"));
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let dim = 17;
    let can = PhaseMatrix::canonical(dim).unwrap();
    let mut worst_sharp = 0.0f64;
    for s in 0..=16 {
        let v = kernel_c(&can, s, 0.0, 0.0).unwrap();
        let bound = ((s + 1) * (s + 1)) as f64;
        worst_sharp = worst_sharp.max((v - c(bound, 0.0)).norm());
    }
    out.check(worst_sharp <= 1e-9, || format!("canonical C_s(0,0) off by {worst_sharp:e}"));

    let mut others = vec![PhaseMatrix::trivial(dim).unwrap()];
    for q in [0.0, 0.3, 0.5, 0.7, 0.9, 0.99] {
        others.push(PhaseMatrix::exponential(q, dim).unwrap());
    }
    let mut tightest = f64::INFINITY;
    for m in &others {
        for s in 1..=16 {
            let v = kernel_c(m, s, 0.0, 0.0).unwrap().re;
            let gap = ((s + 1) * (s + 1)) as f64 - v;
            tightest = tightest.min(gap);
            out.check(gap > 1e-6, || format!("{} at s={s}: C_s(0,0) = {v}", m.family()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_apply = 0.0f64;
    for _ in 0..20 {
        let dim = rng.random_range(2..=12);
        let s = rng.random_range(0..dim);
        let m = random_matrix(&mut rng, dim);
        let psi = random_band_limited(&mut rng, dim, s);
        for _ in 0..4 {
            let theta = rng.random_range(0.0..TAU);
            let q = kernel_apply(&m, s, &psi, theta, 4096).unwrap();
            let d = density(&m, &psi, &psi, theta).unwrap().re;
            worst_apply = worst_apply.max((q - d).abs());
        }
    }
    out.check(worst_apply <= 1e-6, || format!("kernel_apply off by {worst_apply:e}"));
    out.note(format!(
        "canonical {worst_sharp:.1e}, smallest gap elsewhere {tightest:.3e}, kernel_apply {worst_apply:.1e}"
    ));
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let half = PhaseWindow::arc(0.0, PI).unwrap();
    let can = PhaseMatrix::canonical(512).unwrap();
    let sizes = [2, 4, 8, 16, 32, 64, 512];
    let lambdas: Vec<f64> = sizes
        .iter()
        .map(|&s| localization_max(&can, &half, s).unwrap().lambda_max)
        .collect();

    let oracle = 0.5 + 1.0 / PI;
    out.check((lambdas[0] - oracle).abs() <= 1e-10, || {
        format!("S=2: lambda_max {} vs {oracle}", lambdas[0])
    });
    for (w, s) in lambdas.windows(2).zip(sizes.windows(2)) {
        out.check(w[1] > w[0], || {
            format!("not increasing from S={} to S={}: {:?} -> {:?}", s[0], s[1], w[0], w[1])
        });
    }
    for (&l, s) in lambdas.iter().zip(sizes) {
        out.check(l < 1.0, || format!("S={s}: lambda_max {l:?} is not below 1"));
    }

    for s in [1, 8, 64] {
        let l = localization_max(&PhaseMatrix::trivial(s).unwrap(), &half, s).unwrap().lambda_max;
        out.check(l == half.measure() / TAU, || format!("trivial S={s}: lambda_max {l:?}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_full = 0.0f64;
    for dim in [1, 2, 8, 32] {
        for m in test_matrices(&mut rng, dim) {
            let l = localization_max(&m, &PhaseWindow::full(), dim).unwrap().lambda_max;
            worst_full = worst_full.max((l - 1.0).abs());
        }
    }
    out.check(worst_full <= 1e-12, || format!("full window lambda_max off by {worst_full:e}"));

    let listed: Vec<String> = sizes.iter().zip(&lambdas).map(|(s, l)| format!("S={s}: {l:?}")).collect();
    out.note(listed.join(", "));
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    for dim in [1, 4, 16] {
        let spectrum = moment_spectrum(&PhaseMatrix::trivial(dim).unwrap(), dim).unwrap();
        out.check(spectrum.iter().all(|&x| x == PI), || format!("trivial({dim}) spectrum {spectrum:?}"));
    }
    let spectrum = moment_spectrum(&PhaseMatrix::canonical(2).unwrap(), 2).unwrap();
    let ok = (spectrum[0] - (PI - 1.0)).abs() <= 1e-10 && (spectrum[1] - (PI + 1.0)).abs() <= 1e-10;
    out.check(ok, || format!("canonical(2) spectrum {spectrum:?}"));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut diagonal_ok = true;
    for dim in [1, 2, 5, 16, 32, 64] {
        for m in test_matrices(&mut rng, dim) {
            let op = phaseobs::spectral::first_moment(&m, dim).unwrap();
            diagonal_ok &= (0..dim).all(|n| op.entries()[(n, n)] == c(PI, 0.0));
            let spectrum = moment_spectrum(&m, dim).unwrap();
            lo = lo.min(spectrum[0]);
            hi = hi.max(spectrum[dim - 1]);
        }
    }
    out.check(lo >= -1e-9 && hi <= TAU + 1e-9, || format!("spectrum spans [{lo}, {hi}]"));
    out.check(diagonal_ok, || "a diagonal entry differs from pi".into());
    out.note(format!("spectra within [{lo:.4}, {hi:.4}]"));
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = [
        ("trivial", PhaseMatrix::trivial(8).unwrap(), random_state(&mut rng, 8)),
        ("canonical", PhaseMatrix::canonical(2).unwrap(), plus_state()),
        ("exponential(0.5)", PhaseMatrix::exponential(0.5, 8).unwrap(), random_state(&mut rng, 8)),
    ];
    let mut parts = Vec::new();
    for (name, m, psi) in cases {
        let draws = sample(&m, &psi, 100_000, 8).unwrap();
        let cdf = |t: f64| exact_cdf(&m, &psi, t).unwrap();
        let ks = phaseobs::distribution::ks_distance(&draws, cdf);
        // the closed-form CDF used for sampling must agree with the window form
        let fourier = PhaseDensity::new(&m, &psi).unwrap();
        let gap = (0..=64)
            .map(|j| TAU * j as f64 / 64.0)
            .map(|t| (fourier.cdf(t) - exact_cdf(&m, &psi, t).unwrap()).abs())
            .fold(0.0, f64::max);
        out.check(ks < 0.01, || format!("{name}: KS distance {ks}"));
        out.check(gap <= 1e-12, || format!("{name}: CDF forms differ by {gap:e}"));
        parts.push(format!("{name} KS {ks:.4}"));
    }
    out.note(parts.join(", "));
    out
}

fn run_cli(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_phaseobs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn criterion_9() -> Outcome {
    let mut out = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gram = random_gram(&mut rng, 6, 3);
    std::fs::write(p.join("gram.json"), phaseobs::io::matrix_to_json(&gram)).unwrap();
    std::fs::write(p.join("psi.json"), phaseobs::io::state_to_json(&random_state(&mut rng, 6))).unwrap();
    std::fs::write(
        p.join("bad.json"),
        r#"{"kind": "explicit", "dim": 2, "entries": [[[1,0],[2,0]],[[2,0],[1,0]]]}"#,
    )
    .unwrap();

    let commands: [&[&str]; 11] = [
        &["validate", "--matrix", "gram.json"],
        &["density", "--matrix", "gram.json", "--state", "psi.json", "--grid", "128"],
        &["cdf", "--matrix", "gram.json", "--state", "psi.json", "--grid", "128"],
        &["window-prob", "--matrix", "gram.json", "--state", "psi.json", "--window", "0:pi/3,3pi/2:2pi"],
        &["kraus", "--matrix", "gram.json"],
        &["kernel-check", "--matrix", "gram.json", "--state", "psi.json"],
        &["moment", "--matrix", "gram.json"],
        &["localize", "--matrix", "canonical", "--dim", "16", "--window", "0:pi"],
        &["sweep", "--matrix", "canonical", "--window", "0:pi", "--truncations", "2,4,8,16"],
        &["sweep", "--matrix", "exponential", "--dim", "8", "--q", "0.1,0.5,0.9", "--window", "0:pi"],
        &["sample", "--matrix", "gram.json", "--state", "psi.json", "--samples", "5000", "--seed", "42"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let file = format!("out{i}_{run}");
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", &file]);
            let res = run_cli(p, &full);
            out.check(res.status.success(), || {
                format!("`{}` exited {:?}: {}", args[0], res.status.code(), String::from_utf8_lossy(&res.stderr))
            });
            outputs.push(std::fs::read(p.join(&file)).unwrap_or_default());
        }
        out.check(!outputs[0].is_empty() && outputs[0] == outputs[1], || {
            format!("`{}` output differs between runs", args.join(" "))
        });
    }

    let res = run_cli(p, &["validate", "--matrix", "bad.json"]);
    out.check(res.status.code() == Some(2), || format!("invalid matrix exited {:?}", res.status.code()));
    let res = run_cli(p, &["density", "--matrix", "bad.json", "--state", "psi.json"]);
    out.check(res.status.code() == Some(2), || format!("density on invalid matrix exited {:?}", res.status.code()));
    out.note(format!("{} commands run twice", commands.len()));
    out
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("normalization and positivity", criterion_1),
        ("covariance", criterion_2),
        ("interference", criterion_3),
        ("kraus round trip", criterion_4),
        ("kernel bound", criterion_5),
        ("window localization surrogate", criterion_6),
        ("first moment", criterion_7),
        ("sampling", criterion_8),
        ("cli determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        let status = if outcome.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {} ({name}): {status}: {}", i + 1, outcome.summary);
        for failure in &outcome.failures {
            let _ = write!(line, "\n    {failure}");
        }
        println!("{line}");
        if !outcome.failures.is_empty() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
