//! Scalar standard-normal primitives: density, distribution function,
//! quantile function and Owen's T-function.
//!
//! Owen's T-function uses the standard definition
//!
//! ```text
//! T(h, a) = 1/(2π) ∫₀^a exp(-h²(1+x²)/2) / (1+x²) dx
//! ```
//!
//! which is even in `h` and odd in `a`.

#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Standard normal distribution, N(0, 1).
///
/// Stateless; the methods are the unchecked kernels behind [`phi`], [`cdf`],
/// [`inv_cdf`] and [`owen_t`]. They never fail and propagate NaN.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StdGaussian;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;
const SQRT_2PI: f64 = 2.506_628_274_631_000_502_415_765_284_811;
const SQRT_32: f64 = 5.656_854_249_492_380_195_206_754_896_838;

// Cody's rational Chebyshev approximations (central, intermediate, tail).
const CODY_A: [f64; 5] = [
    2.235_252_035_460_683_928_7,
    161.028_231_068_555_878_81,
    1_067.689_485_460_370_958_2,
    18_154.981_253_343_561_249,
    0.065_682_337_918_207_449_113,
];
const CODY_B: [f64; 4] = [
    47.202_581_904_688_241_87,
    976.098_551_737_776_693_22,
    10_260.932_208_618_978_205,
    45_507.789_335_026_729_956,
];
const CODY_C: [f64; 9] = [
    0.398_941_512_088_134_667_64,
    8.883_149_794_388_375_941_2,
    93.506_656_132_177_855_979,
    597.270_276_394_800_262_26,
    2_494.537_585_290_372_671_1,
    6_848.190_450_536_282_332_6,
    11_602.651_437_647_350_124,
    9_842.714_838_383_978_021_8,
    1.076_557_677_372_019_231_7e-8,
];
const CODY_D: [f64; 8] = [
    22.266_688_044_328_115_691,
    235.387_901_782_624_998_61,
    1_519.377_599_407_554_805,
    6_485.558_298_266_760_755,
    18_615.571_640_885_098_091,
    34_900.952_721_145_977_266,
    38_912.003_286_093_271_411,
    19_685.429_676_859_990_727,
];
const CODY_P: [f64; 6] = [
    0.215_898_534_057_956_99,
    0.127_401_161_160_247_363_9,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_466,
    2.911_287_495_116_879_2e-5,
    0.023_073_441_764_940_173_03,
];
const CODY_Q: [f64; 5] = [
    1.284_260_096_144_911_21,
    0.468_238_212_480_865_118,
    0.065_988_137_868_928_551_5,
    0.003_782_396_332_027_582_44,
    7.297_515_550_839_662_05e-5,
];

// Acklam's rational approximation to the normal quantile; refined by Halley.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const ACKLAM_P_LOW: f64 = 0.024_25;

/// Gauss–Legendre order used for Owen's T on |a| <= 1.
const OWEN_T_ORDER: usize = 24;

impl StdGaussian {
    /// Density φ(x).
    #[inline]
    pub fn pdf<T: Real>(x: T) -> T {
        T::lit(FRAC_1_SQRT_2PI) * (-(x * x) * T::lit(0.5)).exp()
    }

    /// Distribution function Φ(x).
    #[inline]
    pub fn cdf<T: Real>(x: T) -> T {
        Self::cdf_both(x).0
    }

    /// Upper tail 1 − Φ(x), computed without cancellation.
    #[inline]
    pub fn sf<T: Real>(x: T) -> T {
        Self::cdf_both(x).1
    }

    /// Returns `(Φ(x), 1 − Φ(x))`, each accurate in its own tail.
    pub fn cdf_both<T: Real>(x: T) -> (T, T) {
        if x.is_nan() {
            return (x, x);
        }
        let half = T::lit(0.5);
        let y = x.abs();
        if y <= T::lit(0.674_489_75) {
            let (mut num, mut den) = (T::zero(), T::zero());
            if y > T::eps() * half {
                let xsq = x * x;
                num = T::lit(CODY_A[4]) * xsq;
                den = xsq;
                for i in 0..3 {
                    num = (num + T::lit(CODY_A[i])) * xsq;
                    den = (den + T::lit(CODY_B[i])) * xsq;
                }
            }
            let t = x * (num + T::lit(CODY_A[3])) / (den + T::lit(CODY_B[3]));
            return (half + t, half - t);
        }

        let tail = if y <= T::lit(SQRT_32) {
            let mut num = T::lit(CODY_C[8]) * y;
            let mut den = y;
            for i in 0..7 {
                num = (num + T::lit(CODY_C[i])) * y;
                den = (den + T::lit(CODY_D[i])) * y;
            }
            let r = (num + T::lit(CODY_C[7])) / (den + T::lit(CODY_D[7]));
            Self::split_exp(y) * r
        } else if y.is_infinite() {
            T::zero()
        } else {
            let xsq = (x * x).recip();
            let mut num = T::lit(CODY_P[5]) * xsq;
            let mut den = xsq;
            for i in 0..4 {
                num = (num + T::lit(CODY_P[i])) * xsq;
                den = (den + T::lit(CODY_Q[i])) * xsq;
            }
            let r = xsq * (num + T::lit(CODY_P[4])) / (den + T::lit(CODY_Q[4]));
            let r = (T::lit(FRAC_1_SQRT_2PI) - r) / y;
            Self::split_exp(y) * r
        };
        if x > T::zero() {
            (T::one() - tail, tail)
        } else {
            (tail, T::one() - tail)
        }
    }

    // exp(-y²/2) evaluated as exp(-s²/2)·exp(-(y-s)(y+s)/2) with s = y rounded
    // down to a multiple of 1/16, so the first factor is exact in its argument.
    #[inline]
    fn split_exp<T: Real>(y: T) -> T {
        let sixteen = T::lit(16.0);
        let s = (y * sixteen).trunc() / sixteen;
        let del = (y - s) * (y + s);
        (-s * s * T::lit(0.5)).exp() * (-del * T::lit(0.5)).exp()
    }

    /// Quantile Φ⁻¹(p). Returns ∓∞ at p = 0, 1 and NaN outside [0, 1].
    pub fn quantile<T: Real>(p: T) -> T {
        if p.is_nan() || p < T::zero() || p > T::one() {
            return T::nan();
        }
        if p == T::zero() {
            return T::neg_infinity();
        }
        if p == T::one() {
            return T::infinity();
        }
        let mut x = Self::acklam(p);
        let upper = p > T::lit(0.5);
        for _ in 0..2 {
            // Residual measured in whichever tail keeps it free of cancellation.
            let e = if upper {
                (T::one() - p) - Self::sf(x)
            } else {
                Self::cdf(x) - p
            };
            let u = e * T::lit(SQRT_2PI) * (x * x * T::lit(0.5)).exp();
            if !u.is_finite() {
                break;
            }
            x = x - u / (T::one() + x * u * T::lit(0.5));
        }
        x
    }

    fn acklam<T: Real>(p: T) -> T {
        let horner = |c: &[f64], t: T| c.iter().fold(T::zero(), |acc, &ci| acc * t + T::lit(ci));
        let p_low = T::lit(ACKLAM_P_LOW);
        if p < p_low || p > T::one() - p_low {
            let tail = if p < p_low { p } else { T::one() - p };
            let q = (T::lit(-2.0) * tail.ln()).sqrt();
            let num = horner(&ACKLAM_C, q);
            let den = horner(&ACKLAM_D, q) * q + T::one();
            let x = num / den;
            if p < p_low {
                x
            } else {
                -x
            }
        } else {
            let q = p - T::lit(0.5);
            let r = q * q;
            horner(&ACKLAM_A, r) * q / (horner(&ACKLAM_B, r) * r + T::one())
        }
    }

    /// Owen's T-function T(h, a). Accepts a = ±∞.
    pub fn owen_t<T: Real>(h: T, a: T) -> T {
        if h.is_nan() || a.is_nan() {
            return T::nan();
        }
        if a == T::zero() {
            return T::zero();
        }
        let sign = a.signum();
        let a = a.abs();
        let h = h.abs();
        let two_pi = T::lit(std::f64::consts::TAU);
        let value = if h == T::zero() {
            a.atan() / two_pi
        } else if a.is_infinite() {
            Self::sf(h) * T::lit(0.5)
        } else if a <= T::one() {
            owen_t_legendre(h, a)
        } else {
            // T(h,a) + T(ah,1/a) = ½[Φ(h)+Φ(ah)] − Φ(h)Φ(ah), rewritten in upper
            // tails for h, a > 0.
            let ah = a * h;
            let qh = Self::sf(h);
            let qah = Self::sf(ah);
            T::lit(0.5) * (qh + qah) - qh * qah - owen_t_legendre(ah, a.recip())
        };
        sign * value
    }
}

fn owen_t_legendre<T: Real>(h: T, a: T) -> T {
    let half_a = a * T::lit(0.5);
    let h2 = h * h * T::lit(0.5);
    let sum: T = gauss_legendre_24()
        .iter()
        .map(|&(node, weight)| {
            let x = half_a * (T::one() + T::lit(node));
            let s = T::one() + x * x;
            T::lit(weight) * (-h2 * s).exp() / s
        })
        .sum();
    sum * half_a / T::lit(std::f64::consts::TAU)
}

fn gauss_legendre_24() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(OWEN_T_ORDER))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule[i] = (-z, w);
        rule[n - 1 - i] = (z, w);
    }
    rule
}

/// Standard normal density φ(x).
pub fn phi<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain(format!("phi: argument must be finite, got {x}"));
    }
    Ok(StdGaussian::pdf(x))
}

/// Standard normal distribution function Φ(x); accepts ±∞.
pub fn cdf<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return domain("cdf: argument is NaN");
    }
    Ok(StdGaussian::cdf(x))
}

/// Standard normal quantile Φ⁻¹(p) for p in the open interval (0, 1).
pub fn inv_cdf<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return domain(format!("inv_cdf: probability must lie in (0, 1), got {p}"));
    }
    Ok(StdGaussian::quantile(p))
}

/// Owen's T-function for finite arguments.
pub fn owen_t<T: Real>(h: T, a: T) -> Result<T> {
    if !h.is_finite() || !a.is_finite() {
        return domain(format!("owen_t: arguments must be finite, got ({h}, {a})"));
    }
    Ok(StdGaussian::owen_t(h, a))
}
