//! Independent reference computations used to check the closed forms:
//! Gauss–Hermite quadrature, plain Monte Carlo and adaptive Gauss–Kronrod
//! quadrature. None of these route through `mvn_cdf`.

#![allow(clippy::excessive_precision)]

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gauss_scalar::StdGaussian;
use crate::mvn_cdf::MvnQuery;
use crate::owen_identities::{Lemma2Params, Lemma3Params};
use crate::scalar::Real;

pub const MIN_HERMITE_ORDER: usize = 20;
pub const MAX_HERMITE_ORDER: usize = 400;
pub const MIN_MC_DRAWS: usize = 10_000;
/// Draws per deterministic substream; the estimate does not depend on how
/// blocks are spread across threads.
const MC_BLOCK: usize = 1 << 14;
const MAX_BISECTIONS: usize = 60;

/// Monte Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub estimate: T,
    pub std_error: T,
}

type Rule = Arc<Vec<(f64, f64)>>;

/// Gauss–Hermite rule for the weight exp(−t²). Nodes ascend.
///
/// Each root of H_n is bracketed by Sturm-sequence bisection on the Jacobi
/// matrix (zero diagonal, off-diagonal √(k/2)) and then polished by Newton
/// iteration on the orthonormal Hermite recurrence, which also yields the
/// weight 2 / (√(2n)·ψ_{n−1}(t))².
pub fn gauss_hermite(order: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&order) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(hermite_rule(order));
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(order, Arc::clone(&rule));
    rule
}

fn hermite_rule(n: usize) -> Vec<(f64, f64)> {
    let count_below = |x: f64| {
        let mut q = -x;
        let mut count = usize::from(q < 0.0);
        for k in 1..n {
            if q == 0.0 {
                q = f64::MIN_POSITIVE;
            }
            q = -x - (k as f64 / 2.0) / q;
            count += usize::from(q < 0.0);
        }
        count
    };
    let bound = (2.0 * n as f64 + 2.0).sqrt();
    let mut rule = vec![(0.0, 0.0); n];
    for j in n / 2..n {
        // j-th smallest eigenvalue; all j >= n/2 are non-negative.
        let (mut lo, mut hi) = (-1e-3, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut dp = hermite_derivative(n, z).1;
        for _ in 0..3 {
            let (p, d) = hermite_derivative(n, z);
            let next = z - p / d;
            if next > lo && next < hi {
                z = next;
            }
            dp = d;
        }
        if n % 2 == 1 && j == n / 2 {
            z = 0.0;
            dp = hermite_derivative(n, z).1;
        }
        let w = 2.0 / (dp * dp);
        rule[j] = (z, w);
        rule[n - 1 - j] = (-z, w);
    }
    rule
}

/// Orthonormal Hermite function value ψ_n(z) (without the Gaussian factor)
/// and its derivative √(2n)·ψ_{n−1}(z).
fn hermite_derivative(n: usize, z: f64) -> (f64, f64) {
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    let (mut p1, mut p2) = (PI_M4, 0.0);
    for j in 0..n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss–Hermite evaluation of ∫ ∏_r Φ((x − m_r)/v_r) N(x | μ, σ²) dx after
/// the substitution x = μ + σ√2·t.
pub fn lemma2_lhs_quadrature<T: Real>(p: &Lemma2Params<T>, order: usize) -> Result<T> {
    if !(MIN_HERMITE_ORDER..=MAX_HERMITE_ORDER).contains(&order) {
        return domain(format!(
            "Gauss-Hermite order must lie in [{MIN_HERMITE_ORDER}, {MAX_HERMITE_ORDER}], got {order}"
        ));
    }
    let scale = (T::lit(2.0) * p.sigma2()).sqrt();
    let sum: T = gauss_hermite(order)
        .iter()
        .map(|&(t, w)| {
            let x = p.mu() + scale * T::lit(t);
            let prod = p
                .m()
                .iter()
                .zip(p.v())
                .fold(T::one(), |acc, (&m, &v)| acc * StdGaussian::cdf((x - m) / v));
            T::lit(w) * prod
        })
        .sum();
    Ok(sum / T::PI().sqrt())
}

/// Plain Monte Carlo for ∫ ∏_r Φ((x_r − m_r)/v_r) N(x | μ, Σ) dx.
pub fn lemma3_lhs_mc<T: Real>(p: &Lemma3Params<T>, draws: usize, seed: u64) -> Result<McEstimate<T>> {
    check_draws(draws)?;
    let sigma = p.sigma();
    Ok(mc_mean(draws, seed, p.dim(), |z| {
        let x = sigma.chol_mul_vec(z).expect("dimension checked at construction");
        x.iter()
            .zip(p.mu())
            .zip(p.m().iter().zip(p.v()))
            .fold(T::one(), |acc, ((&xr, &mu), (&m, &v))| {
                acc * StdGaussian::cdf((xr + mu - m) / v)
            })
    }))
}

/// Crude Monte Carlo for P(Z ≤ upper), Z ~ N(mean, cov).
pub fn mvn_mc<T: Real>(q: &MvnQuery<T>, draws: usize, seed: u64) -> Result<McEstimate<T>> {
    check_draws(draws)?;
    let cov = q.cov();
    Ok(mc_mean(draws, seed, q.dim(), |z| {
        let x = cov.chol_mul_vec(z).expect("dimension checked at construction");
        let inside = x.iter().zip(q.mean()).zip(q.upper()).all(|((&xr, &m), &u)| xr + m <= u);
        if inside {
            T::one()
        } else {
            T::zero()
        }
    }))
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_MC_DRAWS {
        return domain(format!("Monte Carlo needs at least {MIN_MC_DRAWS} draws, got {draws}"));
    }
    Ok(())
}

/// Mean of `f(z)` over `draws` standard-normal vectors of length `dim`.
fn mc_mean<T, F>(draws: usize, seed: u64, dim: usize, f: F) -> McEstimate<T>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let blocks = draws.div_ceil(MC_BLOCK);
    let partial: Vec<(T, T)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = MC_BLOCK.min(draws - b * MC_BLOCK);
            let mut rng = substream(seed, b as u64);
            let mut z = vec![T::zero(); dim];
            let (mut s, mut s2) = (T::zero(), T::zero());
            for _ in 0..count {
                for zi in z.iter_mut() {
                    let draw: f64 = StandardNormal.sample(&mut rng);
                    *zi = T::lit(draw);
                }
                let y = f(&z);
                s = s + y;
                s2 = s2 + y * y;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial
        .into_iter()
        .fold((T::zero(), T::zero()), |(a, b), (x, y)| (a + x, b + y));
    let n = T::lit(draws as f64);
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - T::one())).max(T::zero());
    McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
    }
}

pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` standard-normal draws from the Monte Carlo generator's first
/// substream for `seed`.
pub fn normal_draws(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = substream(seed, 0);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod_15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over [a, b].
///
/// Intervals are bisected until each local error estimate is below its share
/// of `tol` (proportional to width). Exceeding the bisection depth returns
/// [`Error::MaxDepth`] carrying the partial estimate.
pub fn adaptive_quad_1d<T, F>(f: F, a: T, b: T, tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if !(tol >= T::lit(1e-13)) {
        return domain(format!("tolerance must be at least 1e-13, got {tol}"));
    }
    if !a.is_finite() || !b.is_finite() {
        return domain("integration limits must be finite");
    }
    if a == b {
        return Ok(T::zero());
    }
    let width = (b - a).abs();
    let mut total = T::zero();
    let mut exhausted = false;
    let mut stack = vec![(a, b, 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gauss_kronrod_15(&f, lo, hi);
        let budget = tol * (hi - lo).abs() / width;
        if err <= budget || err <= T::eps() * value.abs() {
            total = total + value;
        } else if depth >= MAX_BISECTIONS {
            exhausted = true;
            total = total + value;
        } else {
            let mid = (lo + hi) * T::lit(0.5);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    if exhausted {
        return Err(Error::MaxDepth {
            estimate: total.as_f64(),
        });
    }
    Ok(total)
}

/// Owen's T by adaptive quadrature of its defining integrand.
pub fn owen_t_quadrature<T: Real>(h: T, a: T, tol: T) -> Result<T> {
    let h2 = h * h * T::lit(0.5);
    let integral = adaptive_quad_1d(
        |x: T| {
            let s = T::one() + x * x;
            (-h2 * s).exp() / s
        },
        T::zero(),
        a,
        tol,
    )?;
    Ok(integral / T::lit(std::f64::consts::TAU))
}

/// Standard bivariate normal CDF by nested adaptive quadrature:
/// P(Z₁ ≤ h, Z₂ ≤ k) = ∫_{−∞}^h φ(x) Φ((k − ρx)/√(1−ρ²)) dx, truncated at
/// x = −40 where φ is below 1e-300.
pub fn bivariate_cdf_quadrature<T: Real>(h: T, k: T, rho: T, tol: T) -> Result<T> {
    if !(rho.abs() < T::one()) {
        return domain("correlation must lie in (-1, 1)");
    }
    let r = ((T::one() - rho) * (T::one() + rho)).sqrt();
    let lo = T::lit(-40.0);
    if h <= lo {
        return Ok(T::zero());
    }
    let upper = h.min(T::lit(40.0));
    adaptive_quad_1d(
        |x: T| StdGaussian::pdf(x) * StdGaussian::cdf((k - rho * x) / r),
        lo,
        upper,
        tol,
    )
}
