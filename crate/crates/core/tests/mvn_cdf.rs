use owen_gauss::mvn_cdf::{self, bivariate_cdf, Method, MvnQuery};
use owen_gauss::oracles;
use owen_gauss::verify::random_pd;
use owen_gauss::{PdMatrixF64, StdGaussian};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_cov(n: usize, seed: u64) -> PdMatrixF64 {
    random_pd(&mut ChaCha8Rng::seed_from_u64(seed), n, 1.0, 0.2)
}

#[test]
fn qmc_agrees_with_bivariate_path() {
    for (h, k, rho) in [(0.3, -0.4, 0.6), (-1.0, 0.5, -0.7), (1.5, 1.2, 0.2), (0.0, 0.0, 0.9)] {
        let cov = PdMatrixF64::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let q = MvnQuery::new(vec![h, k], vec![0.0, 0.0], cov).unwrap();
        let exact = mvn_cdf::cdf(&q).unwrap();
        assert_eq!(exact.method, Method::BivariateOwen);
        let qmc = mvn_cdf::cdf(&q.force_qmc(true)).unwrap();
        assert_eq!(qmc.method, Method::QmcGenz);
        assert!(
            (qmc.value - exact.value).abs() <= 1e-6 + qmc.err_estimate,
            "{h} {k} {rho}: {} vs {}",
            qmc.value,
            exact.value
        );
    }
}

#[test]
fn four_dimensional_against_monte_carlo() {
    let cov = random_cov(4, 11);
    let q = MvnQuery::new(vec![0.3, -0.2, 0.8, 0.1], vec![0.0, 0.1, -0.2, 0.0], cov).unwrap();
    let qmc = mvn_cdf::cdf(&q).unwrap();
    let mc = oracles::mvn_mc(&q, 10_000_000, 3).unwrap();
    let band = 3.0 * (mc.std_error.powi(2) + (qmc.err_estimate / 3.0).powi(2)).sqrt();
    assert!(
        (qmc.value - mc.estimate).abs() <= band,
        "{} vs {} ± {}",
        qmc.value,
        mc.estimate,
        mc.std_error
    );
}

#[test]
fn infinite_limits_marginalize() {
    let cov = random_cov(4, 5);
    let upper = vec![0.4, f64::INFINITY, -0.3, f64::INFINITY];
    let full = mvn_cdf::cdf(&MvnQuery::new(upper, vec![0.0; 4], cov.clone()).unwrap()).unwrap();
    let sub = cov.submatrix(&[0, 2]).unwrap();
    let reduced = mvn_cdf::cdf(&MvnQuery::new(vec![0.4, -0.3], vec![0.0; 2], sub).unwrap()).unwrap();
    assert_eq!(full.method, Method::BivariateOwen);
    assert!((full.value - reduced.value).abs() <= 1e-15);

    let all = MvnQuery::new(vec![f64::INFINITY; 4], vec![0.0; 4], cov).unwrap();
    assert_eq!(mvn_cdf::cdf(&all).unwrap().value, 1.0);
}

#[test]
fn one_dimension_is_scalar_cdf() {
    let cov = PdMatrixF64::from_rows(&[vec![2.25]]).unwrap();
    let q = MvnQuery::new(vec![1.0], vec![-0.5], cov).unwrap();
    let e = mvn_cdf::cdf(&q).unwrap();
    assert_eq!(e.method, Method::Univariate);
    assert!((e.value - StdGaussian::cdf(1.0)).abs() <= 1e-15);
}

#[test]
fn same_seed_is_bit_identical() {
    let cov = random_cov(6, 2);
    let q = MvnQuery::new(vec![0.5; 6], vec![0.0; 6], cov).unwrap().with_seed(9);
    let a = mvn_cdf::cdf(&q).unwrap();
    let b = mvn_cdf::cdf(&q).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.err_estimate.to_bits(), b.err_estimate.to_bits());
}

#[test]
fn exhausted_budget_is_flagged() {
    let cov = random_cov(8, 4);
    let q = MvnQuery::new(vec![0.2; 8], vec![0.0; 8], cov)
        .unwrap()
        .with_accuracy(1e-9)
        .unwrap()
        .with_max_points(2048)
        .unwrap();
    let e = mvn_cdf::cdf(&q).unwrap();
    assert!(e.err_estimate > 1e-9);
    assert!(e.value > 0.0 && e.value < 1.0);
}

#[test]
fn query_validation() {
    let cov = PdMatrixF64::identity(2);
    assert!(MvnQuery::new(vec![0.0], vec![0.0, 0.0], cov.clone()).is_err());
    assert!(MvnQuery::new(vec![f64::NAN, 0.0], vec![0.0; 2], cov.clone()).is_err());
    assert!(MvnQuery::new(vec![0.0; 2], vec![0.0; 2], cov.clone())
        .unwrap()
        .with_accuracy(0.0)
        .is_err());
    assert!(MvnQuery::new(vec![0.0; 2], vec![0.0; 2], cov)
        .unwrap()
        .with_accuracy(0.5)
        .is_err());
    assert!(bivariate_cdf(0.0, 0.0, 1.0).is_err());
    assert!(bivariate_cdf(0.0, 0.0, f64::NAN).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bivariate_complement(h in -4.0..4.0_f64, k in -4.0..4.0_f64, rho in -0.99..0.99_f64) {
        let s = bivariate_cdf(h, k, rho).unwrap() + bivariate_cdf(h, -k, -rho).unwrap();
        prop_assert!((s - StdGaussian::cdf(h)).abs() <= 1e-12);
    }

    #[test]
    fn bivariate_matches_quadrature(h in -3.0..3.0_f64, k in -3.0..3.0_f64, rho in -0.95..0.95_f64) {
        let got = bivariate_cdf(h, k, rho).unwrap();
        let want = oracles::bivariate_cdf_quadrature(h, k, rho, 1e-13).unwrap();
        prop_assert!((got - want).abs() <= 1e-10);
    }

    #[test]
    fn bivariate_symmetric_in_limits(h in -4.0..4.0_f64, k in -4.0..4.0_f64, rho in -0.99..0.99_f64) {
        let a = bivariate_cdf(h, k, rho).unwrap();
        let b = bivariate_cdf(k, h, rho).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn monotone_in_each_limit(seed in 0..1000u64, n in 3usize..=5, bump in 0.05..1.0_f64, coord in 0usize..5) {
        let cov = random_cov(n, seed);
        let upper: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.4).collect();
        let mut raised = upper.clone();
        raised[coord % n] += bump;
        let lo = mvn_cdf::cdf(&MvnQuery::new(upper, vec![0.0; n], cov.clone()).unwrap().with_accuracy(1e-5).unwrap()).unwrap();
        let hi = mvn_cdf::cdf(&MvnQuery::new(raised, vec![0.0; n], cov).unwrap().with_accuracy(1e-5).unwrap()).unwrap();
        prop_assert!(hi.value >= lo.value - lo.err_estimate - hi.err_estimate);
    }
}

#[test]
fn qmc_matches_bivariate_on_grid() {
    let axis: Vec<f64> = (0..10).map(|i| -2.5 + 5.0 * f64::from(i) / 9.0).collect();
    let rhos: Vec<f64> = (0..9).map(|i| -0.8 + 0.2 * f64::from(i)).collect();
    let mut worst = 0.0_f64;
    for &h in &axis {
        for &k in &axis {
            for &rho in &rhos {
                let cov = PdMatrixF64::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
                let q = MvnQuery::new(vec![h, k], vec![0.0, 0.0], cov).unwrap().force_qmc(true);
                let qmc = mvn_cdf::cdf(&q).unwrap();
                let exact = bivariate_cdf(h, k, rho).unwrap();
                let diff = (qmc.value - exact).abs();
                // both routes carry rounding of order 1e-16; at rho = 0 the QMC spread is exactly 0
                assert!(
                    diff <= 3.0 * qmc.err_estimate + 1e-15,
                    "({h}, {k}, {rho}): qmc {} ± {:e}, exact {exact}",
                    qmc.value,
                    qmc.err_estimate
                );
                worst = worst.max(diff);
            }
        }
    }
    assert!(worst <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn last_limit_at_infinity_drops_variable(seed in 0..10_000u64, n in 2usize..=5) {
        let cov = random_cov(n, seed);
        let mut upper: Vec<f64> = (0..n).map(|i| 0.5 - 0.25 * i as f64).collect();
        let mean: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        upper[n - 1] = f64::INFINITY;
        let full = mvn_cdf::cdf(&MvnQuery::new(upper.clone(), mean.clone(), cov.clone()).unwrap()).unwrap();
        let keep: Vec<usize> = (0..n - 1).collect();
        let sub = MvnQuery::new(upper[..n - 1].to_vec(), mean[..n - 1].to_vec(), cov.submatrix(&keep).unwrap()).unwrap();
        let reduced = mvn_cdf::cdf(&sub).unwrap();
        prop_assert!((full.value - reduced.value).abs() <= full.err_estimate + reduced.err_estimate + 1e-15);
    }
}
