//! Multivariate Bernoulli distribution on {−1, +1}^N induced by independent
//! probit trials on a latent Gaussian vector.
//!
//! With f ~ N(μ, Σ) and P(Y_r = y_r | f) = Φ(y_r f_r), the marginal pmf is
//!
//! ```text
//! π(y) = F_N(0 | −I_y μ, I_y Σ I_y + I)  =  F_N(I_y μ | 0, I + I_y Σ I_y)
//! ```
//!
//! where I_y = diag(y).

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gauss_scalar::StdGaussian;
use crate::mvn_cdf::{self, MvnEstimate, MvnQuery};
use crate::pd_matrix::PdMatrix;
use crate::scalar::Real;

/// Largest dimension whose 2^N support is enumerated.
pub const MAX_ENUMERATION_DIM: usize = 15;

/// A point y ∈ {−1, +1}^N.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return domain("sign vector must be non-empty");
        }
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return domain(format!("sign entries must be -1 or +1, got {bad}"));
        }
        Ok(Self(signs))
    }

    /// The support point with index `k`: bit r set means y_r = −1.
    pub fn from_index(dim: usize, k: usize) -> Self {
        Self((0..dim).map(|r| if k >> r & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// All 2^dim support points in index order.
    pub fn support(dim: usize) -> impl Iterator<Item = SignVector> {
        (0..1usize << dim).map(move |k| Self::from_index(dim, k))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .map(|(r, _)| 1 << r)
            .sum()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn select(&self, keep: &[usize]) -> Self {
        Self(keep.iter().map(|&i| self.0[i]).collect())
    }

    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.0.iter().map(|&s| T::lit(f64::from(s))).collect()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SignVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .split(',')
            .map(|t| match t.trim() {
                "1" | "+1" => Ok(1),
                "-1" => Ok(-1),
                other => domain(format!("sign entries must be -1 or +1, got {other:?}")),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(signs)
    }
}

/// The total of the pmf over the enumerated support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization<T> {
    pub total: T,
    /// Sum of the per-term QMC error estimates.
    pub err_estimate: T,
    /// 2^N times the per-term accuracy.
    pub budget: T,
}

/// Probit-linked multivariate Bernoulli with latent mean μ and covariance Σ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbitBernoulli<T> {
    mu: Vec<T>,
    sigma: PdMatrix<T>,
}

impl<T: Real> ProbitBernoulli<T> {
    pub fn new(mu: Vec<T>, sigma: PdMatrix<T>) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                got: mu.len(),
            });
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return domain("latent mean must be finite");
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn sigma(&self) -> &PdMatrix<T> {
        &self.sigma
    }

    fn check_sign_len(&self, y: &SignVector) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// I + I_y Σ I_y.
    fn flipped_cov(&self, y: &SignVector) -> Result<PdMatrix<T>> {
        self.sigma
            .scale_sym(&y.to_real())?
            .add_diagonal(&vec![T::one(); self.dim()])
    }

    /// F_N(I_y μ | 0, I + I_y Σ I_y) as an MVN request.
    pub fn pmf_query(&self, y: &SignVector, accuracy: T) -> Result<MvnQuery<T>> {
        self.check_sign_len(y)?;
        let upper = self
            .mu
            .iter()
            .zip(y.signs())
            .map(|(&m, &s)| m * T::lit(f64::from(s)))
            .collect();
        MvnQuery::new(upper, vec![T::zero(); self.dim()], self.flipped_cov(y)?)?.with_accuracy(accuracy)
    }

    pub fn pmf(&self, y: &SignVector, accuracy: T) -> Result<MvnEstimate<T>> {
        mvn_cdf::cdf(&self.pmf_query(y, accuracy)?)
    }

    /// The same probability through F_N(0 | −I_y μ, I_y Σ I_y + I).
    pub fn pmf_shifted_mean(&self, y: &SignVector, accuracy: T) -> Result<MvnEstimate<T>> {
        self.check_sign_len(y)?;
        let mean = self
            .mu
            .iter()
            .zip(y.signs())
            .map(|(&m, &s)| -m * T::lit(f64::from(s)))
            .collect();
        let q = MvnQuery::new(vec![T::zero(); self.dim()], mean, self.flipped_cov(y)?)?.with_accuracy(accuracy)?;
        mvn_cdf::cdf(&q)
    }

    /// ln π(y); −∞ when the probability underflows.
    pub fn log_pmf(&self, y: &SignVector, accuracy: T) -> Result<T> {
        Ok(self.pmf(y, accuracy)?.value.ln())
    }

    /// Seeded draws: f = μ + L z, then y_r = sign(f_r + ε_r) with ε_r iid
    /// standard normal, which has P(y_r = 1 | f) = Φ(f_r).
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<SignVector>> {
        if count == 0 {
            return domain("sample count must be at least 1");
        }
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = vec![T::zero(); n];
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = T::lit(StandardNormal.sample(&mut rng));
            }
            let f = self.sigma.chol_mul_vec(&z)?;
            let signs = f
                .iter()
                .zip(&self.mu)
                .map(|(&fr, &m)| {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    if fr + m + T::lit(eps) >= T::zero() {
                        1
                    } else {
                        -1
                    }
                })
                .collect();
            out.push(SignVector(signs));
        }
        Ok(out)
    }

    /// Sums the pmf over all 2^N support points (N ≤ 15).
    pub fn normalization(&self, accuracy: T) -> Result<Normalization<T>> {
        let terms = self.support_pmfs(accuracy)?;
        let total = terms.iter().map(|e| e.value).sum();
        let err_estimate = terms.iter().map(|e| e.err_estimate).sum();
        Ok(Normalization {
            total,
            err_estimate,
            budget: T::lit(terms.len() as f64) * accuracy,
        })
    }

    /// pmf at every support point, in [`SignVector::support`] order.
    pub fn support_pmfs(&self, accuracy: T) -> Result<Vec<MvnEstimate<T>>> {
        let n = self.dim();
        if n > MAX_ENUMERATION_DIM {
            return domain(format!(
                "support enumeration is limited to N <= {MAX_ENUMERATION_DIM}, got {n}"
            ));
        }
        (0..1usize << n)
            .into_par_iter()
            .map(|k| self.pmf(&SignVector::from_index(n, k), accuracy))
            .collect()
    }

    /// E[Y_r] = 2 Φ(μ_r / √(1 + Σ_rr)) − 1.
    pub fn mean(&self) -> Vec<T> {
        self.mu
            .iter()
            .enumerate()
            .map(|(r, &m)| {
                let p = StdGaussian::cdf(m / (T::one() + self.sigma.get(r, r)).sqrt());
                T::lit(2.0) * p - T::one()
            })
            .collect()
    }

    /// Distribution of the coordinates in `keep` (0-based, in the given order).
    pub fn marginalize(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return domain("marginalize: keep set is empty");
        }
        let mut seen = vec![false; self.dim()];
        for &i in keep {
            if i >= self.dim() {
                return domain(format!("marginalize: index {i} out of range for N = {}", self.dim()));
            }
            if std::mem::replace(&mut seen[i], true) {
                return domain(format!("marginalize: index {i} repeated"));
            }
        }
        let mu = keep.iter().map(|&i| self.mu[i]).collect();
        Self::new(mu, self.sigma.submatrix(keep)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_correlation_fixture() -> ProbitBernoulli<f64> {
        // I + Σ has unit-scaled correlation 2/(1+3) = 1/2.
        let sigma = PdMatrix::from_rows(&[vec![3.0, 2.0], vec![2.0, 3.0]]).unwrap();
        ProbitBernoulli::new(vec![0.0, 0.0], sigma).unwrap()
    }

    fn signs(s: &str) -> SignVector {
        s.parse().unwrap()
    }

    #[test]
    fn sign_vector_parsing() {
        assert_eq!(signs("1,-1,+1").signs(), &[1, -1, 1]);
        assert!("1,0".parse::<SignVector>().is_err());
        assert!("1,2".parse::<SignVector>().is_err());
        assert!(SignVector::new(vec![]).is_err());
        assert_eq!(signs("-1,1").to_string(), "-1,1");
    }

    #[test]
    fn support_indexing_round_trips() {
        let all: Vec<_> = SignVector::support(3).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].signs(), &[1, 1, 1]);
        for (k, y) in all.iter().enumerate() {
            assert_eq!(y.index(), k);
        }
    }

    #[test]
    fn half_correlation_orthants() {
        let d = half_correlation_fixture();
        for (y, want) in [
            ("1,1", 1.0 / 3.0),
            ("-1,-1", 1.0 / 3.0),
            ("1,-1", 1.0 / 6.0),
            ("-1,1", 1.0 / 6.0),
        ] {
            let p = d.pmf(&signs(y), 1e-6).unwrap().value;
            assert!((p - want).abs() < 1e-12, "{y}: {p}");
        }
        let lp = d.log_pmf(&signs("1,1"), 1e-6).unwrap();
        assert!((lp - (1.0_f64 / 3.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn centred_independent_latents_are_uniform() {
        for n in 1..=4 {
            let d = ProbitBernoulli::new(vec![0.0; n], PdMatrix::diagonal(&vec![0.7; n]).unwrap()).unwrap();
            for y in SignVector::support(n) {
                let p = d.pmf(&y, 1e-6).unwrap().value;
                assert!((p - 0.5_f64.powi(n as i32)).abs() < 1e-9, "n={n} y={y}");
                let lp = d.log_pmf(&y, 1e-6).unwrap();
                assert!((lp + n as f64 * 2.0_f64.ln()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn one_dimensional_pmf_and_mean() {
        let d = ProbitBernoulli::new(vec![0.7], PdMatrix::identity(1)).unwrap();
        let want = StdGaussian::cdf(0.7 / 2.0_f64.sqrt());
        assert!((d.pmf(&signs("1"), 1e-6).unwrap().value - want).abs() < 1e-15);
        let plus = d.pmf(&signs("1"), 1e-6).unwrap().value;
        let minus = d.pmf(&signs("-1"), 1e-6).unwrap().value;
        assert!((d.mean()[0] - (plus - minus)).abs() < 1e-14);
        assert!((plus + minus - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginalize_sums_discarded_coordinate() {
        let d = half_correlation_fixture();
        let m = d.marginalize(&[0]).unwrap();
        assert!((m.pmf(&signs("1"), 1e-6).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(d.marginalize(&[0, 1]).unwrap(), d);
        assert!(d.marginalize(&[]).is_err());
        assert!(d.marginalize(&[2]).is_err());
        assert!(d.marginalize(&[1, 1]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_saturates() {
        let d = half_correlation_fixture();
        assert_eq!(d.sample(100, 7).unwrap(), d.sample(100, 7).unwrap());
        assert_ne!(d.sample(100, 7).unwrap(), d.sample(100, 8).unwrap());
        assert!(d.sample(0, 7).is_err());

        let d = ProbitBernoulli::new(vec![10.0; 3], PdMatrix::identity(3)).unwrap();
        let draws = d.sample(10_000, 1).unwrap();
        let ones = draws.iter().filter(|y| y.signs().iter().all(|&s| s == 1)).count();
        assert!(ones as f64 / 1e4 >= 0.999);
    }

    #[test]
    fn enumeration_limits() {
        let d = ProbitBernoulli::new(vec![0.0; 16], PdMatrix::identity(16)).unwrap();
        assert!(d.normalization(1e-6).is_err());
        let d = half_correlation_fixture();
        let norm = d.normalization(1e-6).unwrap();
        assert!((norm.total - 1.0).abs() < 1e-14);
        assert_eq!(norm.budget, 4e-6);
    }

    #[test]
    fn dimension_errors() {
        let d = half_correlation_fixture();
        assert!(d.pmf(&signs("1"), 1e-6).is_err());
        assert!(ProbitBernoulli::new(vec![0.0], PdMatrix::<f64>::identity(2)).is_err());
    }
}
