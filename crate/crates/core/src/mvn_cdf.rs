//! Multivariate normal distribution function F_N(x | m, V) = P(Z ≤ x),
//! Z ~ N(m, V).
//!
//! One and two dimensions are evaluated in closed form (the latter through
//! Owen's T-function). Three or more dimensions go through Genz's
//! sequential-conditioning transform to the unit cube, integrated with a
//! randomly shifted rank-1 lattice rule.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gauss_scalar::StdGaussian;
use crate::pd_matrix::PdMatrix;
use crate::scalar::Real;

pub const DEFAULT_ACCURACY: f64 = 1e-6;
pub const DEFAULT_MAX_POINTS: usize = 1 << 17;
pub const DEFAULT_SHIFTS: usize = 12;
/// Largest |ρ| the bivariate path accepts.
pub const MAX_ABS_RHO: f64 = 1.0 - 1e-12;

const MIN_LATTICE_POINTS: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Univariate,
    BivariateOwen,
    QmcGenz,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Univariate => "univariate",
            Method::BivariateOwen => "bivariate_owen",
            Method::QmcGenz => "qmc_genz",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of an MVN CDF evaluation.
///
/// `err_estimate` is three standard errors over the lattice shifts for the
/// QMC path and zero for the closed-form paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnEstimate<T> {
    pub value: T,
    pub err_estimate: T,
    pub method: Method,
}

impl<T: Real> MvnEstimate<T> {
    fn exact(value: T, method: Method) -> Self {
        Self {
            value,
            err_estimate: T::zero(),
            method,
        }
    }
}

/// An MVN CDF request: upper limits, mean and covariance plus the QMC
/// accuracy budget.
#[derive(Debug, Clone)]
pub struct MvnQuery<T> {
    upper: Vec<T>,
    mean: Vec<T>,
    cov: PdMatrix<T>,
    accuracy: T,
    max_points: usize,
    shifts: usize,
    seed: u64,
    force_qmc: bool,
}

impl<T: Real> MvnQuery<T> {
    /// Upper limits may be +∞ (that coordinate is marginalized out); every
    /// other value must be finite.
    pub fn new(upper: Vec<T>, mean: Vec<T>, cov: PdMatrix<T>) -> Result<Self> {
        let n = cov.dim();
        for len in [upper.len(), mean.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if let Some(u) = upper.iter().find(|u| u.is_nan() || **u == T::neg_infinity()) {
            return domain(format!("upper limits must be finite or +inf, got {u}"));
        }
        if let Some(m) = mean.iter().find(|m| !m.is_finite()) {
            return domain(format!("mean entries must be finite, got {m}"));
        }
        Ok(Self {
            upper,
            mean,
            cov,
            accuracy: T::lit(DEFAULT_ACCURACY),
            max_points: DEFAULT_MAX_POINTS,
            shifts: DEFAULT_SHIFTS,
            seed: 0,
            force_qmc: false,
        })
    }

    /// Target absolute error, in (0, 0.1].
    pub fn with_accuracy(mut self, accuracy: T) -> Result<Self> {
        if !(accuracy > T::zero() && accuracy <= T::lit(0.1)) {
            return domain(format!("accuracy must lie in (0, 0.1], got {accuracy}"));
        }
        self.accuracy = accuracy;
        Ok(self)
    }

    /// Lattice points per shift at the last refinement level.
    pub fn with_max_points(mut self, max_points: usize) -> Result<Self> {
        if max_points < 2 {
            return domain("max_points must be at least 2");
        }
        self.max_points = max_points;
        Ok(self)
    }

    pub fn with_shifts(mut self, shifts: usize) -> Result<Self> {
        if shifts < 2 {
            return domain("at least two random shifts are needed for an error estimate");
        }
        self.shifts = shifts;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Route every dimension through the QMC integrator (for cross-checks).
    pub fn force_qmc(mut self, force: bool) -> Self {
        self.force_qmc = force;
        self
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &PdMatrix<T> {
        &self.cov
    }

    pub fn accuracy(&self) -> T {
        self.accuracy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Evaluates P(Z ≤ upper) for Z ~ N(mean, cov).
pub fn cdf<T: Real>(q: &MvnQuery<T>) -> Result<MvnEstimate<T>> {
    let active: Vec<usize> = (0..q.dim()).filter(|&i| q.upper[i].is_finite()).collect();
    if active.is_empty() {
        return Ok(MvnEstimate::exact(T::one(), Method::Univariate));
    }
    let cov = if active.len() == q.dim() {
        q.cov.clone()
    } else {
        q.cov.submatrix(&active)?
    };
    let shifted: Vec<T> = active.iter().map(|&i| q.upper[i] - q.mean[i]).collect();

    match (shifted.len(), q.force_qmc) {
        (1, false) => {
            let z = shifted[0] / cov.get(0, 0).sqrt();
            Ok(MvnEstimate::exact(StdGaussian::cdf(z), Method::Univariate))
        }
        (2, false) => {
            let (s1, s2) = (cov.get(0, 0).sqrt(), cov.get(1, 1).sqrt());
            let rho = cov.get(0, 1) / (s1 * s2);
            let p = bivariate_cdf(shifted[0] / s1, shifted[1] / s2, rho)?;
            Ok(MvnEstimate::exact(p, Method::BivariateOwen))
        }
        _ => Ok(genz_qmc(q, &shifted, &cov)),
    }
}

/// Standard bivariate normal CDF P(Z₁ ≤ h, Z₂ ≤ k) with correlation `rho`,
/// built from Owen's T-function:
///
/// ```text
/// Φ₂(h,k,ρ) = ½[Φ(h) + Φ(k)] − T(h, (k−ρh)/(h√(1−ρ²))) − T(k, (h−ρk)/(k√(1−ρ²))) − δ
/// ```
///
/// with δ = ½ when hk < 0 or (hk = 0 and h + k < 0), else 0. Infinite limits
/// reduce to the univariate CDF.
pub fn bivariate_cdf<T: Real>(h: T, k: T, rho: T) -> Result<T> {
    if h.is_nan() || k.is_nan() || rho.is_nan() {
        return domain("bivariate_cdf: NaN argument");
    }
    if rho.abs() > T::lit(MAX_ABS_RHO) {
        return domain(format!(
            "bivariate_cdf: |rho| = {} exceeds 1 - 1e-12; use the degenerate reduction",
            rho.abs()
        ));
    }
    if h == T::neg_infinity() || k == T::neg_infinity() {
        return Ok(T::zero());
    }
    if h == T::infinity() {
        return Ok(StdGaussian::cdf(k));
    }
    if k == T::infinity() {
        return Ok(StdGaussian::cdf(h));
    }
    let half = T::lit(0.5);
    if h == T::zero() && k == T::zero() {
        return Ok(T::lit(0.25) + rho.asin() / T::lit(std::f64::consts::TAU));
    }
    let r = ((T::one() - rho) * (T::one() + rho)).sqrt();
    let t_term = |x: T, y: T| {
        if x == T::zero() {
            T::lit(0.25) * y.signum()
        } else {
            StdGaussian::owen_t(x, (y - rho * x) / (x * r))
        }
    };
    let hk = h * k;
    let delta = if hk < T::zero() || (hk == T::zero() && h + k < T::zero()) {
        half
    } else {
        T::zero()
    };
    let p = half * (StdGaussian::cdf(h) + StdGaussian::cdf(k)) - t_term(h, k) - t_term(k, h) - delta;
    Ok(p.max(T::zero()).min(T::one()))
}

/// Genz's transform with a randomized rank-1 lattice. `shifted` holds the
/// upper limits minus the mean; all are finite.
fn genz_qmc<T: Real>(q: &MvnQuery<T>, shifted: &[T], cov: &PdMatrix<T>) -> MvnEstimate<T> {
    let n = shifted.len();
    // Tightest truncation first.
    let mut order: Vec<usize> = (0..n).collect();
    let width: Vec<T> = (0..n)
        .map(|i| StdGaussian::cdf(shifted[i] / cov.get(i, i).sqrt()))
        .collect();
    order.sort_by(|&a, &b| width[a].partial_cmp(&width[b]).unwrap_or(std::cmp::Ordering::Equal));
    let limits: Vec<T> = order.iter().map(|&i| shifted[i]).collect();
    // A permutation of a PD matrix is PD; the factorization cannot fail here.
    let permuted = cov
        .submatrix(&order)
        .expect("permuted covariance stays positive definite");
    let integrand = GenzIntegrand {
        limits,
        chol: permuted.chol().to_vec(),
        dim: n,
    };

    let first = StdGaussian::cdf(integrand.limits[0] / integrand.chol[0]);
    if n == 1 || first == T::zero() {
        return MvnEstimate::exact(first, Method::QmcGenz);
    }

    let cube_dim = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let shifts: Vec<Vec<f64>> = (0..q.shifts)
        .map(|_| (0..cube_dim).map(|_| rng.random::<f64>()).collect())
        .collect();

    let levels = lattice_sizes(q.max_points);
    let mut estimate = MvnEstimate::exact(T::zero(), Method::QmcGenz);
    for &points in &levels {
        let gen = golden_generator(points, cube_dim);
        let per_shift: Vec<T> = shifts
            .par_iter()
            .map(|shift| integrand.lattice_mean(points, &gen, shift, first))
            .collect();
        let (mean, err) = mean_and_err(&per_shift);
        estimate = MvnEstimate {
            value: mean.max(T::zero()).min(T::one()),
            err_estimate: err,
            method: Method::QmcGenz,
        };
        if err <= q.accuracy {
            break;
        }
    }
    estimate
}

fn mean_and_err<T: Real>(xs: &[T]) -> (T, T) {
    let k = T::lit(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / k;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (k - T::one());
    (mean, T::lit(3.0) * (var / k).sqrt())
}

struct GenzIntegrand<T> {
    limits: Vec<T>,
    chol: Vec<T>,
    dim: usize,
}

impl<T: Real> GenzIntegrand<T> {
    /// Average of the transformed integrand over one shifted lattice.
    fn lattice_mean(&self, points: usize, gen: &[u64], shift: &[f64], first: T) -> T {
        let n = self.dim;
        let mut w = vec![T::zero(); n - 1];
        let mut y = vec![T::zero(); n - 1];
        // Neumaier-compensated sum
        let (mut total, mut comp) = (T::zero(), T::zero());
        for k in 0..points as u64 {
            for (j, wj) in w.iter_mut().enumerate() {
                let base = ((k * gen[j]) % points as u64) as f64 / points as f64;
                let u = (base + shift[j]).fract();
                // Baker's (tent) periodization.
                *wj = T::lit(1.0 - (2.0 * u - 1.0).abs());
            }
            let x = self.eval(&w, &mut y, first);
            let t = total + x;
            comp = comp
                + if total.abs() >= x.abs() {
                    (total - t) + x
                } else {
                    (x - t) + total
                };
            total = t;
        }
        (total + comp) / T::lit(points as f64)
    }

    fn eval(&self, w: &[T], y: &mut [T], first: T) -> T {
        let n = self.dim;
        let lo = T::min_positive_value();
        let hi = T::one() - T::eps();
        let mut f = first;
        let mut e = first;
        for i in 1..n {
            y[i - 1] = StdGaussian::quantile((w[i - 1] * e).max(lo).min(hi));
            let row = &self.chol[i * n..i * n + i];
            let s = row.iter().zip(y.iter()).fold(T::zero(), |s, (&l, &yj)| s + l * yj);
            e = StdGaussian::cdf((self.limits[i] - s) / self.chol[i * n + i]);
            f = f * e;
            if f == T::zero() {
                break;
            }
        }
        f
    }
}

/// Prime lattice sizes, roughly doubling up to the largest prime ≤ max_points.
fn lattice_sizes(max_points: usize) -> Vec<usize> {
    let top = largest_prime_at_most(max_points);
    let mut sizes = Vec::new();
    let mut cap = MIN_LATTICE_POINTS;
    while cap < max_points {
        sizes.push(largest_prime_at_most(cap));
        cap *= 2;
    }
    sizes.push(top);
    sizes.dedup();
    sizes
}

fn largest_prime_at_most(n: usize) -> usize {
    (2..=n.max(2)).rev().find(|&m| is_prime(m)).unwrap_or(2)
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Rank-1 lattice generator from the generalized golden ratio: φ_s is the
/// positive root of x^(s+1) = x + 1 and z_j = round(n / φ_s^(j+1)).
fn golden_generator(points: usize, dim: usize) -> Vec<u64> {
    let s = dim as i32;
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (s as f64 + 1.0));
    }
    (1..=s)
        .map(|j| {
            let alpha = phi.powi(-j).fract();
            let z = (alpha * points as f64).round() as u64 % points as u64;
            z.max(1)
        })
        .collect()
}
