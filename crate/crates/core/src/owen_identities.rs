//! Closed forms for integrals of products of Gaussian CDFs against a Gaussian
//! density.
//!
//! Scalar latent variable:
//!
//! ```text
//! ∫ ∏_r Φ((x − m_r)/v_r) N(x | μ, σ²) dx = F_N(μ·1 | m, diag(v²) + σ²·11ᵀ)
//! ```
//!
//! Vector latent variable:
//!
//! ```text
//! ∫ ∏_r Φ((x_r − m_r)/v_r) N(x | μ, Σ) dx = F_N(μ | m, diag(v²) + Σ)
//! ```

use crate::error::{domain, Error, Result};
use crate::mvn_cdf::{self, MvnEstimate, MvnQuery};
use crate::pd_matrix::PdMatrix;
use crate::scalar::Real;

/// Parameters (μ, σ², m, v) of the scalar-latent identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Params<T> {
    mu: T,
    sigma2: T,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Lemma2Params<T> {
    pub fn new(mu: T, sigma2: T, m: Vec<T>, v: Vec<T>) -> Result<Self> {
        if !mu.is_finite() {
            return domain(format!("mu must be finite, got {mu}"));
        }
        if !(sigma2 > T::zero() && sigma2.is_finite()) {
            return domain(format!("sigma2 must be positive, got {sigma2}"));
        }
        check_shifts_and_scales(&m, &v)?;
        Ok(Self { mu, sigma2, m, v })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn m(&self) -> &[T] {
        &self.m
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// Parameters (μ, Σ, m, v) of the vector-latent identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Params<T> {
    mu: Vec<T>,
    sigma: PdMatrix<T>,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Lemma3Params<T> {
    pub fn new(mu: Vec<T>, sigma: PdMatrix<T>, m: Vec<T>, v: Vec<T>) -> Result<Self> {
        check_shifts_and_scales(&m, &v)?;
        for len in [mu.len(), sigma.dim()] {
            if len != m.len() {
                return Err(Error::DimensionMismatch {
                    expected: m.len(),
                    got: len,
                });
            }
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return domain("mu entries must be finite");
        }
        Ok(Self { mu, sigma, m, v })
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn sigma(&self) -> &PdMatrix<T> {
        &self.sigma
    }

    pub fn m(&self) -> &[T] {
        &self.m
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

fn check_shifts_and_scales<T: Real>(m: &[T], v: &[T]) -> Result<()> {
    if m.is_empty() {
        return domain("at least one CDF factor is required");
    }
    if m.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: v.len(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return domain("m entries must be finite");
    }
    if let Some(bad) = v.iter().find(|&&x| !(x > T::zero() && x.is_finite())) {
        return domain(format!("every v_r must be positive, got {bad}"));
    }
    Ok(())
}

/// V_N = diag(v²) + σ²·11ᵀ.
pub fn build_vn<T: Real>(sigma2: T, v: &[T]) -> Result<PdMatrix<T>> {
    if !(sigma2 > T::zero() && sigma2.is_finite()) {
        return domain(format!("sigma2 must be positive, got {sigma2}"));
    }
    if v.is_empty() || v.iter().any(|&x| !(x > T::zero() && x.is_finite())) {
        return domain("v must be a non-empty vector of positive entries");
    }
    let n = v.len();
    let mut entries = vec![sigma2; n * n];
    for (r, &vr) in v.iter().enumerate() {
        entries[r * n + r] = vr * vr + sigma2;
    }
    PdMatrix::from_entries(n, entries)
}

/// The MVN CDF request F_N(μ·1 | m, V_N).
pub fn lemma2_query<T: Real>(p: &Lemma2Params<T>, accuracy: T) -> Result<MvnQuery<T>> {
    let vn = build_vn(p.sigma2, &p.v)?;
    MvnQuery::new(vec![p.mu; p.dim()], p.m.clone(), vn)?.with_accuracy(accuracy)
}

/// Right-hand side of the scalar-latent identity.
pub fn lemma2_closed_form<T: Real>(p: &Lemma2Params<T>, accuracy: T) -> Result<MvnEstimate<T>> {
    mvn_cdf::cdf(&lemma2_query(p, accuracy)?)
}

/// The MVN CDF request F_N(μ | m, diag(v²) + Σ).
pub fn lemma3_query<T: Real>(p: &Lemma3Params<T>, accuracy: T) -> Result<MvnQuery<T>> {
    let v2: Vec<T> = p.v.iter().map(|&x| x * x).collect();
    let cov = p.sigma.add_diagonal(&v2)?;
    MvnQuery::new(p.mu.clone(), p.m.clone(), cov)?.with_accuracy(accuracy)
}

/// Right-hand side of the vector-latent identity.
pub fn lemma3_closed_form<T: Real>(p: &Lemma3Params<T>, accuracy: T) -> Result<MvnEstimate<T>> {
    mvn_cdf::cdf(&lemma3_query(p, accuracy)?)
}
