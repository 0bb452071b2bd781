//! Phase matrices and their contraction (Kraus) factorization.
//!
//! A phase matrix `(c_{n,m})` is Hermitian, positive semidefinite and has unit
//! diagonal. Every such matrix is a Gram matrix, `c_{k,l} = sum_n z_{n,k} conj(z_{n,l})`,
//! and the rows `z_{n,.}` are the diagonals of contractions `V_n = sum_k z_{n,k} |k><k|`
//! with `E(X) = sum_n V_n E_can(X) V_n^*`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::hermitian_eigen;
use crate::{Error, Result};

/// Negative-eigenvalue tolerance for a `dim x dim` phase matrix.
pub fn tol_psd(dim: usize) -> f64 {
    1e-10 * dim as f64
}

/// Tolerance for hermiticity and unit diagonal of explicit input.
pub const TOL_ENTRY: f64 = 1e-12;

/// Column-norm and reconstruction tolerance of a [`KrausFamily`].
pub const TOL_KRAUS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Canonical,
    Trivial,
    /// `c_{n,m} = q^{|n-m|}`.
    Exponential(f64),
    Gram,
    Explicit,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Canonical => "canonical",
            Family::Trivial => "trivial",
            Family::Exponential(_) => "exponential",
            Family::Gram => "gram",
            Family::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential(q) => write!(f, "exponential({q})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Hermiticity,
    Diagonal,
    PositiveSemidefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub property: Property,
    /// Largest deviation for hermiticity and diagonal; the minimum eigenvalue for PSD.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub failures: Vec<Failure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, property: Property) -> Option<&Failure> {
        self.failures.iter().find(|f| f.property == property)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self
            .failures
            .iter()
            .map(|fail| match fail.property {
                Property::Hermiticity => format!("hermiticity violated by {:e}", fail.worst),
                Property::Diagonal => format!("diagonal deviates from 1 by {:e}", fail.worst),
                Property::PositiveSemidefinite => {
                    format!("PSD failure (min eigenvalue {})", fail.worst)
                }
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks hermiticity and unit diagonal to `tol`, and PSD to [`tol_psd`].
pub fn validate(m: &DMatrix<Complex64>, tol: f64) -> Result<ValidationReport> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare(rows, cols));
    }
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dim = rows;
    let mut failures = Vec::new();

    let mut herm = 0.0f64;
    for i in 0..dim {
        for j in i + 1..dim {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    for i in 0..dim {
        herm = herm.max(m[(i, i)].im.abs());
    }
    if herm > tol {
        failures.push(Failure { property: Property::Hermiticity, worst: herm });
    }

    let diag = (0..dim)
        .map(|i| (m[(i, i)] - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    if diag > tol {
        failures.push(Failure { property: Property::Diagonal, worst: diag });
    }

    let min_eigenvalue = if dim == 0 {
        0.0
    } else {
        hermitian_eigen(m)?.values[0]
    };
    if min_eigenvalue < -tol_psd(dim) {
        failures.push(Failure { property: Property::PositiveSemidefinite, worst: min_eigenvalue });
    }

    Ok(ValidationReport { dim, min_eigenvalue, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    entries: DMatrix<Complex64>,
    family: Family,
}

impl PhaseMatrix {
    /// `c_{n,m} = 1`: the canonical phase.
    pub fn canonical(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            entries: DMatrix::from_element(dim, dim, Complex64::new(1.0, 0.0)),
            family: Family::Canonical,
        })
    }

    /// `c_{n,m} = delta_{n,m}`: the uniform (trivial) phase.
    pub fn trivial(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { entries: DMatrix::identity(dim, dim), family: Family::Trivial })
    }

    /// `c_{n,m} = q^{|n-m|}`, interpolating trivial (`q = 0`) and canonical (`q = 1`).
    pub fn exponential(q: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::OutOfRange(format!("exponential family needs q in [0, 1], got {q}")));
        }
        let entries = DMatrix::from_fn(dim, dim, |n, m| {
            Complex64::new(q.powi(n.abs_diff(m) as i32), 0.0)
        });
        Ok(Self { entries, family: Family::Exponential(q) })
    }

    /// Gram matrix `c_{n,m} = <u_n, u_m>` of unit vectors.
    pub fn from_gram(vectors: &[Vec<Complex64>]) -> Result<Self> {
        check_dim(vectors.len())?;
        let width = vectors[0].len();
        for u in vectors {
            if u.len() != width {
                return Err(Error::DimensionMismatch(u.len(), width));
            }
            if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let norm = u.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > crate::TOL_NORM {
                return Err(Error::NormViolation(norm));
            }
        }
        let dim = vectors.len();
        let mut entries = DMatrix::identity(dim, dim);
        for n in 0..dim {
            for m in n + 1..dim {
                let c: Complex64 = vectors[n].iter().zip(&vectors[m]).map(|(a, b)| a.conj() * b).sum();
                entries[(n, m)] = c;
                entries[(m, n)] = c.conj();
            }
        }
        Ok(Self { entries, family: Family::Gram })
    }

    /// Accepts an explicit matrix that validates to [`TOL_ENTRY`].
    ///
    /// Unless `strict`, the diagonal is then rescaled to exactly 1 (off-diagonals
    /// scaled by `1/sqrt(d_n d_m)`) and the matrix is made exactly Hermitian.
    /// With `strict`, the diagonal must already be exactly 1.
    pub fn from_entries(entries: DMatrix<Complex64>, strict: bool) -> Result<Self> {
        Self::from_entries_with_tol(entries, TOL_ENTRY, strict)
    }

    pub(crate) fn from_entries_with_tol(
        entries: DMatrix<Complex64>,
        tol: f64,
        strict: bool,
    ) -> Result<Self> {
        let report = validate(&entries, tol)?;
        if !report.is_valid() {
            return Err(Error::InvalidPhaseMatrix(report));
        }
        check_dim(report.dim)?;
        let dim = report.dim;
        if strict {
            let exact = (0..dim).all(|i| entries[(i, i)] == Complex64::new(1.0, 0.0));
            if !exact {
                let worst = (0..dim)
                    .map(|i| (entries[(i, i)] - Complex64::new(1.0, 0.0)).norm())
                    .fold(0.0, f64::max);
                return Err(Error::InvalidPhaseMatrix(ValidationReport {
                    dim,
                    min_eigenvalue: report.min_eigenvalue,
                    failures: vec![Failure { property: Property::Diagonal, worst }],
                }));
            }
            return Ok(Self { entries, family: Family::Explicit });
        }
        let scale: Vec<f64> = (0..dim).map(|i| entries[(i, i)].re.sqrt()).collect();
        let mut out = DMatrix::identity(dim, dim);
        for n in 0..dim {
            for m in n + 1..dim {
                let upper = entries[(n, m)];
                let lower = entries[(m, n)].conj();
                let c = (upper + lower) * 0.5 / (scale[n] * scale[m]);
                out[(n, m)] = c;
                out[(m, n)] = c.conj();
            }
        }
        Ok(Self { entries: out, family: Family::Explicit })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    /// The leading `dim x dim` principal block, itself a phase matrix.
    pub fn leading(&self, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if dim > self.dim() {
            return Err(Error::DimensionMismatch(dim, self.dim()));
        }
        if dim == self.dim() {
            return Ok(self.clone());
        }
        Ok(Self {
            entries: self.entries.view((0, 0), (dim, dim)).into_owned(),
            family: self.family,
        })
    }

    /// Whether `c_{n,m}` depends on `n - m` only.
    pub fn is_toeplitz(&self) -> bool {
        let dim = self.dim();
        (1..dim).all(|n| (1..dim).all(|m| self.entries[(n, m)] == self.entries[(n - 1, m - 1)]))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::OutOfRange("truncation must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Diagonal contractions `V_n = sum_k z_{n,k} |k><k|`; row `n` of `rows` holds `z_{n,.}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    rows: DMatrix<Complex64>,
}

impl KrausFamily {
    /// Requires `sum_n |z_{n,k}|^2 = 1` within [`TOL_KRAUS`] for every column `k`.
    pub fn new(rows: DMatrix<Complex64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::OutOfRange("Kraus family needs at least one row and column".into()));
        }
        if rows.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let family = Self { rows };
        for (column, norm_sqr) in family.column_norms_sqr().into_iter().enumerate() {
            if (norm_sqr - 1.0).abs() > TOL_KRAUS {
                return Err(Error::ColumnNorm { column, norm_sqr });
            }
        }
        Ok(family)
    }

    /// Number of retained contractions.
    pub fn rank(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<Complex64> {
        &self.rows
    }

    pub fn column_norms_sqr(&self) -> Vec<f64> {
        self.rows
            .column_iter()
            .map(|col| col.iter().map(Complex64::norm_sqr).sum())
            .collect()
    }

    /// Operator norm of the diagonal contraction `V_n`.
    pub fn contraction_norm(&self, n: usize) -> f64 {
        self.rows.row(n).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Factorizes `M = sum_n z_n z_n^*` through its eigendecomposition.
///
/// Rows come out in descending eigenvalue order. Eigenvalues within
/// [`tol_psd`] of each other are ordered by comparing eigenvector magnitudes
/// lexicographically (largest first), and each eigenvector carries the phase
/// convention "first nonzero component real positive". Eigenvalues at or below
/// [`tol_psd`] are dropped.
pub fn kraus_decompose(m: &PhaseMatrix) -> Result<KrausFamily> {
    let dim = m.dim();
    let tol = tol_psd(dim);
    let eig = hermitian_eigen(m.entries())?;
    if eig.values[0] < -tol {
        return Err(Error::InvalidPhaseMatrix(validate(m.entries(), TOL_ENTRY)?));
    }

    let mut kept: Vec<usize> = (0..dim).rev().filter(|&j| eig.values[j] > tol).collect();
    // Reorder within groups of (numerically) equal eigenvalues.
    let mut start = 0;
    while start < kept.len() {
        let mut end = start + 1;
        while end < kept.len() && eig.values[kept[start]] - eig.values[kept[end]] <= tol {
            end += 1;
        }
        kept[start..end].sort_by(|&a, &b| {
            let va = eig.vectors.column(a);
            let vb = eig.vectors.column(b);
            for (x, y) in va.iter().zip(vb.iter()) {
                let ord = y.norm().total_cmp(&x.norm());
                if (x.norm() - y.norm()).abs() > 1e-12 {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        });
        start = end;
    }

    let rank = kept.len().max(1);
    let mut rows = DMatrix::zeros(rank, dim);
    for (n, &j) in kept.iter().enumerate() {
        let weight = eig.values[j].sqrt();
        for k in 0..dim {
            rows[(n, k)] = eig.vectors[(k, j)] * weight;
        }
    }
    KrausFamily::new(rows)
}

/// `c_{k,l} = sum_n z_{n,k} conj(z_{n,l})`, rescaled to an exact unit diagonal.
pub fn kraus_reconstruct(k: &KrausFamily) -> Result<PhaseMatrix> {
    for (column, norm_sqr) in k.column_norms_sqr().into_iter().enumerate() {
        if (norm_sqr - 1.0).abs() > TOL_KRAUS {
            return Err(Error::ColumnNorm { column, norm_sqr });
        }
    }
    let z = k.rows();
    let entries = z.transpose() * z.conjugate();
    PhaseMatrix::from_entries_with_tol(entries, TOL_KRAUS, false)
}
