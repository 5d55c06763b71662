//! Dense symmetric positive-definite matrices with a cached Cholesky factor,
//! plus the block-precision identities behind the one-dimensional
//! Gaussian-CDF-product reduction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Relative asymmetry accepted (and then averaged away) at construction.
const SYMMETRY_TOL: f64 = 1e-8;
/// Pivot threshold factor: a pivot must exceed `dim * PIVOT_TOL * max_diag`.
const PIVOT_TOL: f64 = 1e-12;
/// Agreement required between two routes to the same matrix quantity.
const CONSISTENCY_TOL: f64 = 1e-10;

pub(crate) fn consistency_tol<T: Real>() -> T {
    T::lit(CONSISTENCY_TOL).max(T::eps() * T::lit(256.0))
}

/// Symmetric positive-definite matrix, stored row-major, with its lower
/// Cholesky factor computed at construction. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PdMatrix<T> {
    dim: usize,
    entries: Vec<T>,
    chol: Vec<T>,
}

/// On-disk JSON form: `{"dim": N, "entries": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<Vec<f64>>,
}

impl<T: Real> PdMatrix<T> {
    /// Builds a matrix from `dim * dim` row-major entries.
    ///
    /// Entries are symmetrized as (M + Mᵀ)/2 after checking that the
    /// asymmetry is within 1e-8 of the largest entry. Matrices whose Cholesky
    /// pivots fall below `dim * 1e-12 * max_diag` are rejected, not repaired.
    pub fn from_entries(dim: usize, mut entries: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return domain("matrix dimension must be positive");
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().position(|x| !x.is_finite()) {
            return domain(format!("matrix entry ({}, {}) is not finite", bad / dim, bad % dim));
        }
        let scale = entries.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tol = T::lit(SYMMETRY_TOL) * scale;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (u, l) = (entries[i * dim + j], entries[j * dim + i]);
                let diff = (u - l).abs();
                if diff > tol {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        diff: diff.as_f64(),
                    });
                }
                let avg = (u + l) * T::lit(0.5);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        let chol = cholesky_lower(dim, &entries)?;
        Ok(Self { dim, entries, chol })
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = T::one();
        }
        Self {
            dim,
            chol: entries.clone(),
            entries,
        }
    }

    pub fn diagonal(diag: &[T]) -> Result<Self> {
        let dim = diag.len();
        let mut entries = vec![T::zero(); dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * dim + i] = d;
        }
        Self::from_entries(dim, entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.dim + col]
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Row-major lower Cholesky factor L with L·Lᵀ = self.
    #[inline]
    pub fn chol(&self) -> &[T] {
        &self.chol
    }

    #[inline]
    pub fn chol_get(&self, row: usize, col: usize) -> T {
        self.chol[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.dim).map(<[T]>::to_vec).collect()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Determinant as the squared product of the Cholesky diagonal.
    pub fn determinant(&self) -> T {
        (0..self.dim)
            .map(|i| self.chol_get(i, i))
            .fold(T::one(), |acc, l| acc * l * l)
    }

    pub fn log_determinant(&self) -> T {
        (0..self.dim)
            .map(|i| self.chol_get(i, i).ln())
            .fold(T::zero(), |acc, l| acc + l + l)
    }

    /// Matrix-vector product M·x.
    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len())?;
        Ok(self
            .entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Lower-factor product L·z, the colouring map for correlated draws.
    pub fn chol_mul_vec(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_len(z.len())?;
        Ok(self
            .chol
            .chunks(self.dim)
            .enumerate()
            .map(|(i, row)| row[..=i].iter().zip(z).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Restriction to the given rows/columns, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return domain("submatrix: index set is empty");
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim) {
            return domain(format!("submatrix: index {bad} out of range for dim {}", self.dim));
        }
        let k = indices.len();
        let mut entries = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                entries.push(self.get(i, j));
            }
        }
        Self::from_entries(k, entries)
    }

    /// Elementwise sum with a diagonal matrix.
    pub fn add_diagonal(&self, diag: &[T]) -> Result<Self> {
        self.check_len(diag.len())?;
        let mut entries = self.entries.clone();
        for (i, &d) in diag.iter().enumerate() {
            entries[i * self.dim + i] = entries[i * self.dim + i] + d;
        }
        Self::from_entries(self.dim, entries)
    }

    /// D·M·D for a diagonal D given by `scale`.
    pub fn scale_sym(&self, scale: &[T]) -> Result<Self> {
        self.check_len(scale.len())?;
        let n = self.dim;
        let entries = (0..n * n)
            .map(|k| scale[k / n] * self.entries[k] * scale[k % n])
            .collect();
        Self::from_entries(n, entries)
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            dim: self.dim,
            entries: self
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(Real::as_f64).collect())
                .collect(),
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.entries.len() != file.dim {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                got: file.entries.len(),
            });
        }
        let rows: Vec<Vec<T>> = file
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| T::lit(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }
}

/// Lower Cholesky factor of a symmetric row-major matrix.
fn cholesky_lower<T: Real>(dim: usize, a: &[T]) -> Result<Vec<T>> {
    let max_diag = (0..dim).fold(T::zero(), |m, i| m.max(a[i * dim + i]));
    let threshold = T::lit(dim as f64 * PIVOT_TOL) * max_diag;
    let mut l = vec![T::zero(); dim * dim];
    for j in 0..dim {
        let mut pivot = a[j * dim + j];
        for k in 0..j {
            pivot = pivot - l[j * dim + k] * l[j * dim + k];
        }
        if !(pivot > threshold) || max_diag <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: pivot.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        let ljj = pivot.sqrt();
        l[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s = s - l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves M·x = rhs using the cached Cholesky factor.
pub fn cholesky_solve<T: Real>(m: &PdMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    m.check_len(rhs.len())?;
    let n = m.dim;
    let l = &m.chol;
    let mut y = rhs.to_vec();
    for i in 0..n {
        let s = (0..i).fold(y[i], |s, k| s - l[i * n + k] * y[k]);
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s = ((i + 1)..n).fold(y[i], |s, k| s - l[k * n + i] * y[k]);
        y[i] = s / l[i * n + i];
    }
    Ok(y)
}

/// Block form of the (N+1)×(N+1) precision matrix
///
/// ```text
/// [ a   b ]
/// [ bᵀ  D ]     D = diag(d_diag)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionBlocks<T> {
    pub a: T,
    pub b: Vec<T>,
    pub d_diag: Vec<T>,
}

impl<T: Real> PrecisionBlocks<T> {
    pub fn new(a: T, b: Vec<T>, d_diag: Vec<T>) -> Result<Self> {
        if b.len() != d_diag.len() {
            return Err(Error::DimensionMismatch {
                expected: d_diag.len(),
                got: b.len(),
            });
        }
        if b.is_empty() {
            return domain("precision blocks need at least one lower block entry");
        }
        if !a.is_finite() || b.iter().any(|x| !x.is_finite()) {
            return domain("precision blocks must be finite");
        }
        if d_diag.iter().any(|&d| !(d > T::zero() && d.is_finite())) {
            return domain("diagonal block entries must be positive and finite");
        }
        Ok(Self { a, b, d_diag })
    }

    /// Blocks of the precision obtained for the variance σ² and scales v:
    /// a = Σ 1/v_r² + 1/σ², b = d = (1/v_r²).
    pub fn from_variances(sigma2: T, v: &[T]) -> Result<Self> {
        check_variances(sigma2, v)?;
        let inv: Vec<T> = v.iter().map(|&x| (x * x).recip()).collect();
        let a = inv.iter().copied().sum::<T>() + sigma2.recip();
        Self::new(a, inv.clone(), inv)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Schur complement a − B·D⁻¹·Bᵀ.
    pub fn schur(&self) -> T {
        self.b
            .iter()
            .zip(&self.d_diag)
            .fold(self.a, |s, (&b, &d)| s - b * b / d)
    }

    /// Dense row-major (N+1)×(N+1) precision matrix.
    pub fn assemble(&self) -> Vec<T> {
        let n = self.len() + 1;
        let mut p = vec![T::zero(); n * n];
        p[0] = self.a;
        for (r, (&b, &d)) in self.b.iter().zip(&self.d_diag).enumerate() {
            p[r + 1] = b;
            p[(r + 1) * n] = b;
            p[(r + 1) * n + r + 1] = d;
        }
        p
    }
}

fn check_variances<T: Real>(sigma2: T, v: &[T]) -> Result<()> {
    if !(sigma2 > T::zero() && sigma2.is_finite()) {
        return domain(format!("sigma2 must be positive and finite, got {sigma2}"));
    }
    if v.is_empty() {
        return domain("v must be non-empty");
    }
    if let Some(bad) = v.iter().find(|&&x| !(x > T::zero() && x.is_finite())) {
        return domain(format!("every v_r must be positive and finite, got {bad}"));
    }
    Ok(())
}

/// Inverts the block precision via the partitioned-inverse formulas
///
/// ```text
/// S = a − B D⁻¹ Bᵀ
/// [ S⁻¹           −S⁻¹ B D⁻¹              ]
/// [ −D⁻¹ Bᵀ S⁻¹   D⁻¹ + D⁻¹ Bᵀ S⁻¹ B D⁻¹   ]
/// ```
///
/// and checks that the product with the assembled precision is the identity
/// to 1e-10 in Frobenius norm.
pub fn partitioned_inverse_check<T: Real>(blocks: &PrecisionBlocks<T>) -> Result<PdMatrix<T>> {
    let s = blocks.schur();
    if !(s > T::zero()) {
        return domain(format!("Schur complement must be positive, got {s}"));
    }
    let n = blocks.len() + 1;
    let s_inv = s.recip();
    // g = D⁻¹ Bᵀ
    let g: Vec<T> = blocks.b.iter().zip(&blocks.d_diag).map(|(&b, &d)| b / d).collect();
    let mut cov = vec![T::zero(); n * n];
    cov[0] = s_inv;
    for r in 0..n - 1 {
        cov[r + 1] = -s_inv * g[r];
        cov[(r + 1) * n] = -s_inv * g[r];
        for c in 0..n - 1 {
            let mut x = g[r] * s_inv * g[c];
            if r == c {
                x = x + blocks.d_diag[r].recip();
            }
            cov[(r + 1) * n + c + 1] = x;
        }
    }

    let precision = blocks.assemble();
    let residual = frobenius_from_identity(n, &precision, &cov);
    if !(residual <= consistency_tol::<T>()) {
        return Err(Error::Inconsistent(format!(
            "precision x covariance differs from identity by {:e} (Frobenius)",
            residual.as_f64()
        )));
    }
    PdMatrix::from_entries(n, cov)
}

/// ‖A·B − I‖_F for row-major n×n matrices.
pub fn frobenius_from_identity<T: Real>(n: usize, a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut x = (0..n).fold(T::zero(), |s, k| s + a[i * n + k] * b[k * n + j]);
            if i == j {
                x = x - T::one();
            }
            acc = acc + x * x;
        }
    }
    acc.sqrt()
}

/// The (N+1)×(N+1) joint covariance written out entrywise:
///
/// ```text
/// [ σ²    −σ²        …  −σ²       ]
/// [ −σ²   v_1² + σ²  …  σ²        ]
/// [ ⋮                ⋱            ]
/// [ −σ²   σ²         …  v_N² + σ² ]
/// ```
pub fn full_covariance<T: Real>(sigma2: T, v: &[T]) -> Result<PdMatrix<T>> {
    check_variances(sigma2, v)?;
    let n = v.len() + 1;
    let mut m = vec![sigma2; n * n];
    for r in 1..n {
        m[r] = -sigma2;
        m[r * n] = -sigma2;
        m[r * n + r] = v[r - 1] * v[r - 1] + sigma2;
    }
    PdMatrix::from_entries(n, m)
}

/// Determinant of [`full_covariance`] from its Cholesky factor, checked
/// against the closed form σ²·∏ v_r² to 1e-10 relative.
pub fn full_cov_determinant<T: Real>(sigma2: T, v: &[T]) -> Result<T> {
    let cov = full_covariance(sigma2, v)?;
    let by_cholesky = cov.determinant();
    let closed = v.iter().fold(sigma2, |acc, &x| acc * x * x);
    let rel = ((by_cholesky - closed) / closed).abs();
    if !(rel <= consistency_tol::<T>()) {
        return Err(Error::Inconsistent(format!(
            "determinant routes disagree: cholesky {by_cholesky}, closed form {closed}"
        )));
    }
    Ok(by_cholesky)
}
