//! File formats.
//!
//! ```text
//! state   {"coeffs": [[re, im], ...]}
//! window  {"arcs": [[lo, hi], ...]}
//! matrix  {"kind": "canonical"|"trivial"|"exponential"|"explicit", "dim": S,
//!          "q": number?, "entries": [[[re, im], ...], ...]?}
//! kraus   {"rows": [[[re, im], ...], ...]}
//! ```
//!
//! CSV output uses a `theta,value`-style header and the shortest decimal that
//! round-trips to the same `f64`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{density_grid, exact_cdf};
use crate::hardy::{HardyState, PhaseWindow};
use crate::observable::{Family, KrausFamily, PhaseMatrix};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

type Pair = [f64; 2];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateJson {
    coeffs: Vec<Pair>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowJson {
    arcs: Vec<Pair>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    kind: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<Pair>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausJson {
    rows: Vec<Vec<Pair>>,
}

fn finite(values: impl IntoIterator<Item = f64>) -> IoResult<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(IoError::Format("non-finite number in input".into()))
    }
}

fn to_complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn to_pair(c: &Complex64) -> Pair {
    [c.re, c.im]
}

fn complex_matrix(rows: &[Vec<Pair>], ncols: usize) -> IoResult<DMatrix<Complex64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(IoError::Format(format!("every row must have {ncols} entries")));
    }
    finite(rows.iter().flatten().flatten().copied())?;
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().map(to_complex)))
}

fn matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<Pair>> {
    m.row_iter().map(|r| r.iter().map(to_pair).collect()).collect()
}

pub fn parse_state(text: &str) -> IoResult<HardyState> {
    let raw: StateJson = serde_json::from_str(text)?;
    finite(raw.coeffs.iter().flatten().copied())?;
    Ok(HardyState::new(raw.coeffs.iter().map(to_complex).collect())?)
}

pub fn state_to_json(state: &HardyState) -> String {
    let raw = StateJson { coeffs: state.coeffs().iter().map(to_pair).collect() };
    serde_json::to_string(&raw).expect("state serializes")
}

pub fn parse_window(text: &str) -> IoResult<PhaseWindow> {
    let raw: WindowJson = serde_json::from_str(text)?;
    finite(raw.arcs.iter().flatten().copied())?;
    Ok(PhaseWindow::new(raw.arcs.iter().map(|p| (p[0], p[1])).collect())?)
}

pub fn window_to_json(window: &PhaseWindow) -> String {
    let raw = WindowJson { arcs: window.arcs().iter().map(|&(lo, hi)| [lo, hi]).collect() };
    serde_json::to_string(&raw).expect("window serializes")
}

/// Parses the inline window syntax `lo:hi,lo:hi`.
///
/// Each endpoint is a decimal number or a multiple of pi such as `pi`, `2pi`,
/// `3pi/2`, `0.5pi` or `pi/4`.
pub fn parse_inline_window(spec: &str) -> IoResult<PhaseWindow> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(PhaseWindow::empty());
    }
    let arcs = spec
        .split(',')
        .map(|arc| {
            let (lo, hi) = arc
                .split_once(':')
                .ok_or_else(|| IoError::Format(format!("arc `{arc}` is not of the form lo:hi")))?;
            Ok((parse_angle(lo)?, parse_angle(hi)?))
        })
        .collect::<IoResult<Vec<_>>>()?;
    Ok(PhaseWindow::new(arcs)?)
}

fn parse_angle(token: &str) -> IoResult<f64> {
    let token = token.trim();
    let bad = || IoError::Format(format!("cannot read angle `{token}`"));
    let value = match token.split_once("pi") {
        None => token.parse::<f64>().map_err(|_| bad())?,
        Some((mult, rest)) => {
            let mult = match mult.trim() {
                "" => 1.0,
                "-" => -1.0,
                m => m.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
            };
            let div = match rest.trim() {
                "" => 1.0,
                r => r.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?,
            };
            mult * std::f64::consts::PI / div
        }
    };
    finite([value])?;
    // 2pi written as a multiple of pi is exactly TAU; keep it that way.
    Ok(if (value - TAU).abs() < 1e-15 { TAU } else { value })
}

/// Raw matrix entries plus the declared kind, without phase-matrix validation.
pub fn parse_matrix_entries(text: &str) -> IoResult<(String, DMatrix<Complex64>)> {
    let raw: MatrixJson = serde_json::from_str(text)?;
    let entries = match raw.kind.as_str() {
        "explicit" => {
            let rows = raw
                .entries
                .as_ref()
                .ok_or_else(|| IoError::Format("explicit matrix needs `entries`".into()))?;
            if rows.len() != raw.dim {
                return Err(IoError::Format(format!("`entries` has {} rows, dim is {}", rows.len(), raw.dim)));
            }
            complex_matrix(rows, raw.dim)?
        }
        _ => build_family(&raw)?.entries().clone(),
    };
    Ok((raw.kind, entries))
}

fn build_family(raw: &MatrixJson) -> IoResult<PhaseMatrix> {
    if raw.entries.is_some() {
        return Err(IoError::Format(format!("`entries` is only allowed for explicit matrices, not {}", raw.kind)));
    }
    let m = match raw.kind.as_str() {
        "canonical" => PhaseMatrix::canonical(raw.dim)?,
        "trivial" => PhaseMatrix::trivial(raw.dim)?,
        "exponential" => {
            let q = raw.q.ok_or_else(|| IoError::Format("exponential matrix needs `q`".into()))?;
            finite([q])?;
            PhaseMatrix::exponential(q, raw.dim)?
        }
        other => return Err(IoError::Format(format!("unknown matrix kind `{other}`"))),
    };
    Ok(m)
}

/// Parses and validates a phase matrix; see [`PhaseMatrix::from_entries`] for `strict`.
pub fn parse_matrix(text: &str, strict: bool) -> IoResult<PhaseMatrix> {
    let raw: MatrixJson = serde_json::from_str(text)?;
    if raw.kind == "explicit" {
        let (_, entries) = parse_matrix_entries(text)?;
        return Ok(PhaseMatrix::from_entries(entries, strict)?);
    }
    build_family(&raw)
}

pub fn matrix_to_json(m: &PhaseMatrix) -> String {
    let (kind, q, entries) = match m.family() {
        Family::Canonical | Family::Trivial => (m.family().name(), None, None),
        Family::Exponential(q) => ("exponential", Some(q), None),
        Family::Gram | Family::Explicit => ("explicit", None, Some(matrix_rows(m.entries()))),
    };
    let raw = MatrixJson { kind: kind.into(), dim: m.dim(), q, entries };
    serde_json::to_string(&raw).expect("matrix serializes")
}

pub fn parse_kraus(text: &str) -> IoResult<KrausFamily> {
    let raw: KrausJson = serde_json::from_str(text)?;
    let ncols = raw.rows.first().map_or(0, Vec::len);
    Ok(KrausFamily::new(complex_matrix(&raw.rows, ncols)?)?)
}

pub fn kraus_to_json(k: &KrausFamily) -> String {
    let raw = KrausJson { rows: matrix_rows(k.rows()) };
    serde_json::to_string(&raw).expect("kraus family serializes")
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// CSV with a two-column header and float rows.
pub fn csv<K: std::fmt::Display>(
    header: (&str, &str),
    rows: impl IntoIterator<Item = (K, f64)>,
) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (key, value) in rows {
        writeln!(out, "{key},{}", format_float(value)).expect("writing to a String");
    }
    out
}

fn grid_theta(j: usize, grid: usize) -> f64 {
    TAU * j as f64 / grid as f64
}

/// `theta,value` rows of the density at `theta_j = 2 pi j / grid`, `j < grid`.
pub fn density_csv(m: &PhaseMatrix, psi: &HardyState, grid: usize) -> IoResult<String> {
    let values = density_grid(m, psi, grid)?;
    let rows = values.into_iter().enumerate().map(|(j, v)| (format_float(grid_theta(j, grid)), v));
    Ok(csv(("theta", "value"), rows))
}

/// `theta,value` rows of the CDF at `theta_j = 2 pi j / grid`, `j <= grid`.
pub fn cdf_csv(m: &PhaseMatrix, psi: &HardyState, grid: usize) -> IoResult<String> {
    if grid < 2 {
        return Err(crate::Error::OutOfRange(format!("grid must be at least 2, got {grid}")).into());
    }
    let rows = (0..=grid)
        .map(|j| {
            let theta = if j == grid { TAU } else { grid_theta(j, grid) };
            Ok((format_float(theta), exact_cdf(m, psi, theta)?))
        })
        .collect::<IoResult<Vec<_>>>()?;
    Ok(csv(("theta", "value"), rows))
}

/// One outcome per line.
pub fn samples_text(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 20);
    for s in samples {
        out.push_str(&format_float(*s));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> IoResult<()> {
    let io_err = |source| IoError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes the density grid CSV to `path`.
pub fn emit_density_grid(m: &PhaseMatrix, psi: &HardyState, grid: usize, path: &Path) -> IoResult<()> {
    write_atomic(path, density_csv(m, psi, grid)?.as_bytes())
}

pub fn read_to_string(path: &Path) -> IoResult<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn state_json() {
        let s = parse_state(r#"{"coeffs": [[0.6, 0], [0, 0.8]]}"#).unwrap();
        assert_eq!(s.coeffs()[1], Complex64::new(0.0, 0.8));
        assert_eq!(parse_state(&state_to_json(&s)).unwrap(), s);
        assert!(matches!(parse_state(r#"{"coeffs": [[1, 1]]}"#), Err(IoError::Invalid(_))));
        assert!(matches!(parse_state(r#"{"coeffs": [[NaN, 0]]}"#), Err(IoError::Json(_))));
        assert!(matches!(parse_state(r#"{"coeffs": [[1e999, 0]]}"#), Err(IoError::Json(_) | IoError::Format(_))));
        assert!(matches!(parse_state(r#"{"coef": []}"#), Err(IoError::Json(_))));
    }

    #[test]
    fn window_json_and_inline() {
        let w = parse_window(r#"{"arcs": [[0, 1.5], [3, 4]]}"#).unwrap();
        assert_eq!(w.arcs(), &[(0.0, 1.5), (3.0, 4.0)]);
        assert_eq!(parse_window(&window_to_json(&w)).unwrap(), w);
        assert!(matches!(parse_window(r#"{"arcs": [[2, 1]]}"#), Err(IoError::Invalid(_))));

        let inline = parse_inline_window("0:pi/2, 3pi/2:2pi").unwrap();
        assert_eq!(inline.arcs(), &[(0.0, PI / 2.0), (3.0 * PI / 2.0, TAU)]);
        assert!(parse_inline_window("0:2pi").unwrap().is_full());
        assert_eq!(parse_inline_window("0.5:1.25").unwrap().arcs(), &[(0.5, 1.25)]);
        assert!(parse_inline_window("").unwrap().is_empty());
        assert!(matches!(parse_inline_window("1-2"), Err(IoError::Format(_))));
        assert!(matches!(parse_inline_window("0:xpi"), Err(IoError::Format(_))));
    }

    #[test]
    fn matrix_json() {
        let c = parse_matrix(r#"{"kind": "canonical", "dim": 3}"#, false).unwrap();
        assert_eq!(c, PhaseMatrix::canonical(3).unwrap());
        let e = parse_matrix(r#"{"kind": "exponential", "dim": 4, "q": 0.25}"#, false).unwrap();
        assert_eq!(e, PhaseMatrix::exponential(0.25, 4).unwrap());
        assert!(matches!(parse_matrix(r#"{"kind": "exponential", "dim": 4}"#, false), Err(IoError::Format(_))));
        assert!(matches!(parse_matrix(r#"{"kind": "weird", "dim": 4}"#, false), Err(IoError::Format(_))));

        let bad = r#"{"kind": "explicit", "dim": 2, "entries": [[[1,0],[2,0]],[[2,0],[1,0]]]}"#;
        assert!(matches!(parse_matrix(bad, false), Err(IoError::Invalid(crate::Error::InvalidPhaseMatrix(_)))));
        let (kind, raw) = parse_matrix_entries(bad).unwrap();
        assert_eq!(kind, "explicit");
        assert_eq!(raw[(0, 1)], Complex64::new(2.0, 0.0));

        let ragged = r#"{"kind": "explicit", "dim": 2, "entries": [[[1,0]],[[0,0],[1,0]]]}"#;
        assert!(matches!(parse_matrix(ragged, false), Err(IoError::Format(_))));
    }

    #[test]
    fn explicit_matrix_round_trips_bit_exact() {
        let g = PhaseMatrix::from_gram(&[
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2)],
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8)],
        ])
        .unwrap();
        let text = matrix_to_json(&g);
        let back = parse_matrix(&text, false).unwrap();
        assert_eq!(back.entries(), g.entries());
        assert_eq!(matrix_to_json(&back), text);
    }

    #[test]
    fn kraus_json() {
        let k = KrausFamily::new(DMatrix::identity(2, 2)).unwrap();
        let text = kraus_to_json(&k);
        assert_eq!(parse_kraus(&text).unwrap(), k);
        assert!(matches!(parse_kraus(r#"{"rows": [[[2,0]]]}"#), Err(IoError::Invalid(_))));
    }

    #[test]
    fn csv_formatting() {
        let text = csv(("S", "lambda_max"), [(2, 0.5), (4, 1.0 / 3.0)]);
        assert_eq!(text, "S,lambda_max\n2,0.5\n4,0.3333333333333333\n");
        for x in [0.1, 1.0 / 3.0, 1e-300, TAU, -2.5e17] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn density_csv_rows() {
        let m = PhaseMatrix::canonical(2).unwrap();
        let psi = HardyState::new(vec![Complex64::new(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        let text = density_csv(&m, &psi, 4).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta,value");
        assert_eq!(lines.len(), 5);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert!((first[1] - 2.0).abs() < 1e-12);

        let cdf = cdf_csv(&m, &psi, 4).unwrap();
        assert_eq!(cdf.lines().count(), 6);
        assert!(cdf.ends_with("6.283185307179586,1.0\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("nope").join("out.csv");
        assert!(matches!(write_atomic(&missing, b"x"), Err(IoError::Io { .. })));
    }
}
