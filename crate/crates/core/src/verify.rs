//! Seeded property suites comparing every closed form with its oracle.
//!
//! Each check reports the number of trials, the failures, and the worst
//! observed deviation next to the tolerance it was held to. `perturb` adds a
//! fixed amount to every measured deviation, which must turn a passing run
//! into a failing one.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::gauss_scalar::{self, StdGaussian};
use crate::mvn_cdf::{self, bivariate_cdf};
use crate::oracles;
use crate::owen_identities::{self, Lemma2Params, Lemma3Params};
use crate::pd_matrix::{self, PdMatrix, PrecisionBlocks};
use crate::probit_bernoulli::{ProbitBernoulli, SignVector};

/// Gauss–Hermite order of the scalar-latent oracle.
pub const HERMITE_ORDER: usize = 200;
/// Monte Carlo draws for the vector-latent oracle.
pub const LEMMA3_DRAWS: usize = 1_000_000;
/// Per-term accuracy for pmf enumeration.
pub const PMF_ACCURACY: f64 = 1e-6;
/// Draws for the generative-equivalence check.
pub const SAMPLE_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma2,
    Lemma3,
    Bernoulli,
    Matrix,
    Scalar,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Scalar,
        Suite::Matrix,
        Suite::Lemma2,
        Suite::Lemma3,
        Suite::Bernoulli,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma2 => "lemma2",
            Suite::Lemma3 => "lemma3",
            Suite::Bernoulli => "bernoulli",
            Suite::Matrix => "matrix",
            Suite::Scalar => "scalar",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemma2" => Suite::Lemma2,
            "lemma3" => Suite::Lemma3,
            "bernoulli" => Suite::Bernoulli,
            "matrix" => Suite::Matrix,
            "scalar" => Suite::Scalar,
            "all" => Suite::All,
            other => return domain(format!("unknown suite {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    /// QMC accuracy for the identity suites.
    pub accuracy: f64,
    pub perturb: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            accuracy: 1e-5,
            perturb: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub allowed_failures: usize,
    pub worst_deviation: f64,
    pub tolerance_at_worst: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.trials > 0 && self.failures <= self.allowed_failures
    }
}

struct Tally {
    suite: &'static str,
    name: &'static str,
    perturb: f64,
    trials: usize,
    failures: usize,
    allowed_failures: usize,
    worst_ratio: f64,
    worst_deviation: f64,
    tolerance_at_worst: f64,
}

impl Tally {
    fn new(suite: Suite, name: &'static str, perturb: f64) -> Self {
        Self {
            suite: suite.name(),
            name,
            perturb,
            trials: 0,
            failures: 0,
            allowed_failures: 0,
            worst_ratio: f64::NEG_INFINITY,
            worst_deviation: 0.0,
            tolerance_at_worst: 0.0,
        }
    }

    fn allow(mut self, failures: usize) -> Self {
        self.allowed_failures = failures;
        self
    }

    fn record(&mut self, deviation: f64, tolerance: f64) {
        let deviation = deviation.abs() + self.perturb;
        self.trials += 1;
        if !(deviation <= tolerance) {
            self.failures += 1;
        }
        let ratio = if deviation.is_nan() {
            f64::INFINITY
        } else {
            deviation / tolerance
        };
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst_deviation = deviation;
            self.tolerance_at_worst = tolerance;
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            suite: self.suite,
            name: self.name,
            trials: self.trials,
            failures: self.failures,
            allowed_failures: self.allowed_failures,
            worst_deviation: self.worst_deviation,
            tolerance_at_worst: self.tolerance_at_worst,
        }
    }
}

/// Runs one suite (or all of them) and returns one result per check.
pub fn run_suite(suite: Suite, config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    if config.trials == 0 {
        return domain("trials must be at least 1");
    }
    if !(config.accuracy > 0.0 && config.accuracy <= 0.1) {
        return domain("accuracy must lie in (0, 0.1]");
    }
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::ALL {
                out.extend(run_suite(s, config)?);
            }
            Ok(out)
        }
        Suite::Scalar => scalar_suite(config),
        Suite::Matrix => matrix_suite(config),
        Suite::Lemma2 => lemma2_suite(config),
        Suite::Lemma3 => lemma3_suite(config),
        Suite::Bernoulli => bernoulli_suite(config),
    }
}

fn rng_for(config: &VerifyConfig, suite: Suite) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(suite as u64 + 1);
    rng
}

/// G·Gᵀ/n + ridge·I with standard-normal G, scaled by `scale`.
pub fn random_pd(rng: &mut impl Rng, n: usize, scale: f64, ridge: f64) -> PdMatrix<f64> {
    let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum();
            a[i * n + j] = scale * dot / n as f64;
        }
        a[i * n + i] += ridge;
    }
    PdMatrix::from_entries(n, a).expect("Gram matrix plus ridge is positive definite")
}

fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn scalar_suite(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let s = Suite::Scalar;
    let p = config.perturb;
    let mut out = Vec::new();

    let mut t = Tally::new(s, "cdf_symmetry", p);
    for i in 0..10_000 {
        let x = -8.0 + 16.0 * i as f64 / 9_999.0;
        t.record(StdGaussian::cdf(x) + StdGaussian::cdf(-x) - 1.0, 1e-14);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "pdf_even", p);
    for i in 0..10_000 {
        let x = -8.0 + 16.0 * i as f64 / 9_999.0;
        t.record(StdGaussian::pdf(x) - StdGaussian::pdf(-x), 1e-16);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "cdf_derivative_matches_pdf", p);
    let step = 1e-5;
    for i in 0..=1_200 {
        let x = -6.0 + i as f64 / 100.0;
        let d = (StdGaussian::cdf(x + step) - StdGaussian::cdf(x - step)) / (2.0 * step);
        t.record(d - StdGaussian::pdf(x), 1e-8);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "inv_cdf_round_trip", p);
    for i in 0..=300 {
        let lp = -15.0 + 15.0 * i as f64 / 300.0;
        for prob in [10f64.powf(lp), 1.0 - 10f64.powf(lp)] {
            if prob > 0.0 && prob < 1.0 {
                let x = gauss_scalar::inv_cdf(prob)?;
                t.record(StdGaussian::cdf(x) - prob, 1e-12);
            }
        }
    }
    out.push(t.finish());

    let grid: Vec<f64> = (0..50).map(|i| -3.0 + 6.0 * i as f64 / 49.0).collect();
    let mut oracle = Tally::new(s, "owen_t_vs_quadrature", p);
    let mut even = Tally::new(s, "owen_t_even_in_h", p);
    for &h in &grid {
        for &a in &grid {
            let v = gauss_scalar::owen_t(h, a)?;
            oracle.record(v - oracles::owen_t_quadrature(h, a, 1e-13)?, 1e-10);
            even.record(v - gauss_scalar::owen_t(-h, a)?, 1e-14);
        }
    }
    out.push(oracle.finish());
    out.push(even.finish());

    let mut t = Tally::new(s, "owen_t_unit_slope", p);
    for h in [0.0, 0.5, -0.5, 2.0, -2.0] {
        let c = StdGaussian::cdf(h);
        t.record(gauss_scalar::owen_t(h, 1.0)? - 0.5 * c * (1.0 - c), 1e-10);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "bivariate_orthant_arcsin", p);
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9_f64] {
        let want = 0.25 + rho.asin() / std::f64::consts::TAU;
        t.record(bivariate_cdf(0.0, 0.0, rho)? - want, 1e-10);
    }
    out.push(t.finish());

    let mut rng = rng_for(config, s);
    let mut comp = Tally::new(s, "bivariate_complement", p);
    let mut quad = Tally::new(s, "bivariate_vs_quadrature", p);
    for _ in 0..config.trials {
        let h = rng.random_range(-3.0..3.0);
        let k = rng.random_range(-3.0..3.0);
        let rho = rng.random_range(-0.95..0.95);
        let v = bivariate_cdf(h, k, rho)?;
        comp.record(v + bivariate_cdf(h, -k, -rho)? - StdGaussian::cdf(h), 1e-9);
        quad.record(v - oracles::bivariate_cdf_quadrature(h, k, rho, 1e-13)?, 1e-10);
    }
    out.push(comp.finish());
    out.push(quad.finish());
    Ok(out)
}

fn matrix_suite(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let s = Suite::Matrix;
    let p = config.perturb;
    let mut rng = rng_for(config, s);

    let mut recon = Tally::new(s, "cholesky_reconstruction", p);
    let mut solve = Tally::new(s, "cholesky_solve_residual", p);
    for _ in 0..config.trials.max(200) {
        let n = rng.random_range(1..=8);
        let a = random_pd(&mut rng, n, 1.0, 0.1);
        let l = a.chol();
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                err += (llt - a.get(i, j)).powi(2);
                norm += a.get(i, j).powi(2);
            }
        }
        recon.record((err / norm).sqrt(), 1e-10);

        let rhs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x = pd_matrix::cholesky_solve(&a, &rhs)?;
        let ax = a.mul_vec(&x)?;
        let resid = ax.iter().zip(&rhs).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
        let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        solve.record(resid, 1e-9 * scale);
    }

    let mut det = Tally::new(s, "determinant_identity", p);
    let mut inv = Tally::new(s, "partitioned_inverse", p);
    let mut structure = Tally::new(s, "partitioned_inverse_structure", p);
    for _ in 0..config.trials {
        let n = rng.random_range(1..=6);
        let sigma2 = rng.random_range(0.1..4.0);
        let v = uniform_vec(&mut rng, n, 0.2, 3.0);
        let closed = v.iter().fold(sigma2, |acc, x| acc * x * x);
        let explicit = pd_matrix::full_covariance(sigma2, &v)?;
        det.record((explicit.determinant() - closed) / closed, 1e-10);

        let blocks = PrecisionBlocks::from_variances(sigma2, &v)?;
        match pd_matrix::partitioned_inverse_check(&blocks) {
            Ok(cov) => {
                let resid = pd_matrix::frobenius_from_identity(n + 1, &blocks.assemble(), cov.entries());
                inv.record(resid, 1e-10);
                let scale = explicit.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                let diff = cov
                    .entries()
                    .iter()
                    .zip(explicit.entries())
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                structure.record(diff, 1e-10 * scale);
            }
            Err(Error::Inconsistent(_)) => {
                inv.record(f64::INFINITY, 1e-10);
                structure.record(f64::INFINITY, 1e-10);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(vec![
        recon.finish(),
        solve.finish(),
        det.finish(),
        inv.finish(),
        structure.finish(),
    ])
}

/// Random parameters for the scalar-latent identity: N ∈ 1..=5,
/// μ, m ∈ [−2, 2], v, σ ∈ [0.3, 2].
pub fn random_lemma2(rng: &mut impl Rng) -> Lemma2Params<f64> {
    let n = rng.random_range(1..=5);
    let mu = rng.random_range(-2.0..2.0);
    let sigma: f64 = rng.random_range(0.3..2.0);
    let m = uniform_vec(rng, n, -2.0, 2.0);
    let v = uniform_vec(rng, n, 0.3, 2.0);
    Lemma2Params::new(mu, sigma * sigma, m, v).expect("parameters drawn inside the domain")
}

/// Random parameters for the vector-latent identity: N ∈ 1..=4.
pub fn random_lemma3(rng: &mut impl Rng) -> Lemma3Params<f64> {
    let n = rng.random_range(1..=4);
    let mu = uniform_vec(rng, n, -1.5, 1.5);
    let sigma = random_pd(rng, n, 1.0, 0.2);
    let m = uniform_vec(rng, n, -1.5, 1.5);
    let v = uniform_vec(rng, n, 0.3, 2.0);
    Lemma3Params::new(mu, sigma, m, v).expect("parameters drawn inside the domain")
}

fn lemma2_suite(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let s = Suite::Lemma2;
    let p = config.perturb;
    let mut rng = rng_for(config, s);
    let mut identity = Tally::new(s, "closed_form_vs_gauss_hermite", p);
    let mut convergence = Tally::new(s, "gauss_hermite_convergence", p);
    let mut structure = Tally::new(s, "vn_structure", p);
    for trial in 0..config.trials {
        let params = random_lemma2(&mut rng);
        let q = owen_identities::lemma2_query(&params, config.accuracy)?.with_seed(config.seed + trial as u64);
        let closed = mvn_cdf::cdf(&q)?;
        let oracle = oracles::lemma2_lhs_quadrature(&params, HERMITE_ORDER)?;
        identity.record(closed.value - oracle, config.accuracy + closed.err_estimate);
        let finer = oracles::lemma2_lhs_quadrature(&params, 2 * HERMITE_ORDER)?;
        convergence.record(oracle - finer, config.accuracy);

        let vn = owen_identities::build_vn(params.sigma2(), params.v())?;
        let n = params.dim();
        let mut diff = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { params.v()[i] * params.v()[i] } else { 0.0 };
                diff = diff.max((vn.get(i, j) - (d + params.sigma2())).abs());
            }
        }
        structure.record(diff, 0.0);
    }
    Ok(vec![identity.finish(), convergence.finish(), structure.finish()])
}

/// Combined 3σ band for a QMC estimate against a Monte Carlo estimate.
pub fn combined_band(mc_std_error: f64, qmc_err_estimate: f64) -> f64 {
    let qmc_se = qmc_err_estimate / 3.0;
    3.0 * (mc_std_error * mc_std_error + qmc_se * qmc_se).sqrt()
}

fn lemma3_suite(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let s = Suite::Lemma3;
    let p = config.perturb;
    let mut rng = rng_for(config, s);
    let mut identity = Tally::new(s, "closed_form_vs_monte_carlo", p).allow(config.trials.div_ceil(50));
    let mut seeds = Tally::new(s, "monte_carlo_seed_stability", p).allow(config.trials.div_ceil(50));
    for trial in 0..config.trials {
        let params = random_lemma3(&mut rng);
        let closed = owen_identities::lemma3_closed_form(&params, config.accuracy)?;
        let seed = config.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
        let mc = oracles::lemma3_lhs_mc(&params, LEMMA3_DRAWS, seed)?;
        identity.record(
            closed.value - mc.estimate,
            combined_band(mc.std_error, closed.err_estimate),
        );
        if trial < 20 {
            let other = oracles::lemma3_lhs_mc(&params, LEMMA3_DRAWS / 10, seed ^ 0x5eed)?;
            let pooled = (mc.std_error.powi(2) + other.std_error.powi(2)).sqrt();
            seeds.record(mc.estimate - other.estimate, 6.0 * pooled);
        }
    }
    Ok(vec![identity.finish(), seeds.finish()])
}

/// The half-correlation fixture: μ = 0, Σ = [[3, 2], [2, 3]], so that
/// I + I_y Σ I_y has correlation ±1/2.
pub fn half_correlation_fixture() -> ProbitBernoulli<f64> {
    let sigma = PdMatrix::from_rows(&[vec![3.0, 2.0], vec![2.0, 3.0]]).expect("fixture is PD");
    ProbitBernoulli::new(vec![0.0, 0.0], sigma).expect("fixture dimensions agree")
}

/// Random probit-Bernoulli parameters of dimension `n`.
pub fn random_bernoulli(rng: &mut impl Rng, n: usize) -> ProbitBernoulli<f64> {
    let mu = uniform_vec(rng, n, -1.0, 1.0);
    let sigma = random_pd(rng, n, 1.0, 0.2);
    ProbitBernoulli::new(mu, sigma).expect("dimensions agree")
}

fn bernoulli_suite(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let s = Suite::Bernoulli;
    let p = config.perturb;
    let acc = PMF_ACCURACY;
    let mut rng = rng_for(config, s);
    let mut out = Vec::new();

    let mut t = Tally::new(s, "half_correlation_orthants", p);
    let d = half_correlation_fixture();
    for (y, want) in [
        ("1,1", 1.0 / 3.0),
        ("-1,-1", 1.0 / 3.0),
        ("1,-1", 1.0 / 6.0),
        ("-1,1", 1.0 / 6.0),
    ] {
        let y: SignVector = y.parse()?;
        t.record(d.pmf(&y, acc)?.value - want, 1e-6);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "normalization", p);
    for _ in 0..config.trials.min(20) {
        let n = rng.random_range(1..=8);
        let d = random_bernoulli(&mut rng, n);
        let norm = d.normalization(acc)?;
        t.record(norm.total - 1.0, norm.budget);
    }
    out.push(t.finish());

    let mut flip = Tally::new(s, "sign_flip", p);
    let mut routes = Tally::new(s, "pmf_route_invariance", p);
    for trial in 0..config.trials.min(50) {
        let n = rng.random_range(1..=5);
        let d = random_bernoulli(&mut rng, n);
        let y = SignVector::from_index(n, rng.random_range(0..1usize << n));
        let neg_mu: Vec<f64> = d.mu().iter().map(|m| -m).collect();
        let mirrored = ProbitBernoulli::new(neg_mu, d.sigma().clone())?;
        let a = d.pmf(&y, acc)?;
        let b = mirrored.pmf(&y.negated(), acc)?;
        flip.record(a.value - b.value, 2.0 * acc + a.err_estimate + b.err_estimate);
        if trial < 10 {
            let c = d.pmf_shifted_mean(&y, acc)?;
            routes.record(a.value - c.value, 2.0 * acc + a.err_estimate + c.err_estimate);
        }
    }
    out.push(flip.finish());
    out.push(routes.finish());

    let mut t = Tally::new(s, "marginal_consistency", p);
    for _ in 0..config.trials.min(20) {
        let n = rng.random_range(2..=5);
        let d = random_bernoulli(&mut rng, n);
        let keep: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        let keep = if keep.is_empty() {
            vec![rng.random_range(0..n)]
        } else {
            keep
        };
        let marginal = d.marginalize(&keep)?;
        let full = d.support_pmfs(acc)?;
        let y_keep = SignVector::from_index(keep.len(), rng.random_range(0..1usize << keep.len()));
        let m = marginal.pmf(&y_keep, acc)?;
        let (mut sum, mut err, mut terms) = (0.0, m.err_estimate, 1.0);
        for (k, e) in full.iter().enumerate() {
            if SignVector::from_index(n, k).select(&keep) == y_keep {
                sum += e.value;
                err += e.err_estimate;
                terms += 1.0;
            }
        }
        t.record(m.value - sum, terms * acc + err);
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "mean_vs_enumeration", p);
    for _ in 0..config.trials.min(10) {
        let d = random_bernoulli(&mut rng, 3);
        let pmfs = d.support_pmfs(acc)?;
        let mean = d.mean();
        for (r, &m) in mean.iter().enumerate() {
            let enumerated: f64 = pmfs
                .iter()
                .enumerate()
                .map(|(k, e)| f64::from(SignVector::from_index(3, k).signs()[r]) * e.value)
                .sum();
            t.record(m - enumerated, 8.0 * acc);
        }
    }
    out.push(t.finish());

    let mut t = Tally::new(s, "generative_equivalence", p);
    for trial in 0..config.trials.min(10) {
        let n = rng.random_range(1..=3);
        let d = random_bernoulli(&mut rng, n);
        generative_check(&d, SAMPLE_DRAWS, config.seed + trial as u64, &mut t)?;
    }
    out.push(t.finish());
    Ok(out)
}

/// Empirical support frequencies from `sample` against the pmf, held to
/// four binomial standard errors per support point.
fn generative_check(d: &ProbitBernoulli<f64>, draws: usize, seed: u64, t: &mut Tally) -> Result<()> {
    let n = d.dim();
    let mut counts = vec![0usize; 1 << n];
    for y in d.sample(draws, seed)? {
        counts[y.index()] += 1;
    }
    let pmfs = d.support_pmfs(PMF_ACCURACY)?;
    for (count, e) in counts.iter().zip(&pmfs) {
        let p = e.value;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        t.record(
            *count as f64 / draws as f64 - p,
            4.0 * se + PMF_ACCURACY + e.err_estimate,
        );
    }
    Ok(())
}
