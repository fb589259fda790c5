mod common;

use brs_core::dist::*;
use brs_core::{BrsParams, Error};
use common::*;
use proptest::prelude::*;

fn p(s2: f64, k: f64, m: f64, rho: f64) -> BrsParams {
    BrsParams::new(s2, k, m, rho).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn pdf_normalizes() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    let r = tail_radius(&q, 0.0, 1e-7);
    let mass = integrate_2d_symmetric(|a, b| joint_pdf(&q, a, b).unwrap(), r, 8);
    assert!((mass - 1.0).abs() < 1e-4, "mass {mass} on [0, {r}]^2");
}

#[test]
fn laguerre_path_at_m1_is_the_same_integral() {
    let q = p(1.3, 2.0, 1.0, 0.6);
    for &(r1, r2) in &[(0.4, 1.9), (1.0, 1.0), (2.5, 0.2)] {
        let a = joint_pdf(&q, r1, r2).unwrap();
        let b = joint_pdf_int_m(&q, r1, r2).unwrap();
        assert!(rel(a, b) < 1e-12, "{a} {b}");
    }
}

#[test]
fn laguerre_path_documented_points() {
    for &(k, m, rho, r1, r2) in &[(1.0, 3.0, 0.5, 1.0, 1.0), (2.0, 2.0, 0.7, 0.5, 2.0)] {
        let q = p(1.0, k, m, rho);
        let a = joint_pdf(&q, r1, r2).unwrap();
        let b = joint_pdf_int_m(&q, r1, r2).unwrap();
        assert!(rel(a, b) < 1e-8);
    }
}

#[test]
fn k_to_zero_is_bivariate_rayleigh() {
    for &rho in &[0.1, 0.5, 0.9] {
        let q = p(1.5, 1e-6, 2.0, rho);
        for &(r1, r2) in &[(0.3, 0.6), (1.2, 1.1), (2.0, 0.7)] {
            let got = joint_pdf(&q, r1, r2).unwrap();
            let expected = bivariate_rayleigh_pdf(1.5, rho, r1, r2);
            assert!(rel(got, expected) < 1e-4, "rho={rho} {got} {expected}");
        }
    }
}

#[test]
fn low_rho_branch_with_k0_matches_rayleigh_at_rho0() {
    let q = p(1.0, 0.0, 3.0, 5e-4);
    let got = joint_pdf(&q, 0.8, 1.3).unwrap();
    let expected = bivariate_rayleigh_pdf(1.0, 0.0, 0.8, 1.3);
    assert!(rel(got, expected) < 1e-10);
}

#[test]
fn cdf_total_mass_and_origin() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    assert!((joint_cdf(&q, 50.0, 50.0).unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(joint_cdf(&q, 0.0, 1.0).unwrap(), 0.0);
}

#[test]
fn cdf_mixed_difference_is_the_density() {
    // the difference quotient over [r, r+h]^2 is centred at r + h/2
    let q = p(1.0, 10.0, 5.0, 0.3);
    let (r1, r2, h) = (1.0, 1.4, 1e-3);
    let f = |a, b| joint_cdf(&q, a, b).unwrap();
    let d = (f(r1 + h, r2 + h) - f(r1 + h, r2) - f(r1, r2 + h) + f(r1, r2)) / (h * h);
    let pdf = joint_pdf(&q, r1 + h / 2.0, r2 + h / 2.0).unwrap();
    assert!(rel(d, pdf) < 1e-3, "{d} vs {pdf}");
}

#[test]
fn marginal_cdf_properties() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    assert_eq!(marginal_cdf(&q, 0.0).unwrap(), 0.0);
    let a = marginal_cdf(&q.with_rho(0.2), 1.0).unwrap();
    let b = marginal_cdf(&q.with_rho(0.8), 1.0).unwrap();
    assert!((a - b).abs() < 1e-6);
    let big = 20.0 * q.mean_power().sqrt();
    for &r in &[0.3, 1.0, 2.2] {
        let m = marginal_cdf(&q, r).unwrap();
        assert!((m - joint_cdf(&q, r, big).unwrap()).abs() < 1e-8);
        // against the closed-form power density
        let oracle = integrate_1d(|x| marginal_power_pdf(&q, x), 0.0, r * r, 16);
        assert!((m - oracle).abs() < 1e-10, "r={r} {m} {oracle}");
    }
}

#[test]
fn marginal_branches_agree() {
    // the degenerate classes use the rho = 0 representation
    let q = p(0.7, 4.0, 1.5, 0.5);
    for &r in &[0.5, 1.5, 3.0] {
        let mid = marginal_cdf(&q, r).unwrap();
        let low = marginal_cdf(&q.with_rho(1e-4), r).unwrap();
        let high = marginal_cdf(&q.with_rho(0.9999), r).unwrap();
        assert!((mid - low).abs() < 1e-10 && (mid - high).abs() < 1e-10);
        let dens = integrate_1d(|s| marginal_pdf(&q, s).unwrap(), 0.0, r, 16);
        assert!((mid - dens).abs() < 1e-10);
    }
}

#[test]
fn cdf_near_full_correlation_is_marginal_on_diagonal() {
    let q = p(1.0, 10.0, 5.0, 0.999);
    for &u in &[1.0, 3.0, 4.0] {
        let joint = joint_cdf(&q, u, u).unwrap();
        let marg = marginal_cdf(&q, u).unwrap();
        assert!(joint <= marg && joint > 0.95 * marg, "u={u} {joint} {marg}");
    }
}

#[test]
fn mgf_univariate_section_matches_power_density() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    let theta = -0.1 / q.sigma2;
    let got = mgf(&q, MgfPoint::new(theta, 0.0)).unwrap();
    let oracle = integrate_1d(
        |x| (theta * x).exp() * marginal_power_pdf(&q, x),
        0.0,
        120.0,
        64,
    );
    assert!(rel(got, oracle) < 1e-6, "{got} {oracle}");
    assert!(rel(got, marginal_power_mgf(&q, theta)) < 1e-13);
}

#[test]
fn mgf_matches_2d_transform() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    let (t1, t2) = (-0.1, -0.2);
    let r = tail_radius(&q, 0.0, 1e-12);
    let oracle = integrate_2d_symmetric(
        |a, b| {
            // symmetrized weight keeps the tensor rule symmetric
            let w = 0.5 * ((t1 * a * a + t2 * b * b).exp() + (t2 * a * a + t1 * b * b).exp());
            joint_pdf(&q, a, b).unwrap() * w
        },
        r,
        10,
    );
    let got = mgf(&q, MgfPoint::new(t1, t2)).unwrap();
    assert!(rel(got, oracle) < 1e-6, "{got} {oracle}");
}

#[test]
fn moments_match_finite_differences() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    let pm = power_moments(&q).unwrap();
    assert!(rel(pm.m10, 2.0) < 1e-12);
    let h = 1e-3 / q.mean_power();
    let (d1, d11, d12) = richardson_derivatives(|a, b| mgf(&q, MgfPoint::new(a, b)).unwrap(), h);
    let (e1, e11, e12) = richardson_derivatives(|a, b| mgf(&q, MgfPoint::new(b, a)).unwrap(), h);
    assert!(rel(pm.m10, d1) < 1e-6);
    assert!(rel(pm.m01, e1) < 1e-6);
    assert!(rel(pm.m20, d11) < 1e-6);
    assert!(rel(pm.m02, e11) < 1e-6);
    assert!(rel(pm.m11, d12) < 1e-6 && rel(pm.m11, e12) < 1e-6);
}

#[test]
fn rho_bs_shape() {
    assert!(rho_bs(&p(1.0, 1.0, 2.0, 0.999)).unwrap() >= 0.99);
    let vals: Vec<f64> = [1.0, 2.0, 5.0, 20.0]
        .iter()
        .map(|&m| rho_bs(&p(1.0, 1.0, m, 0.2)).unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    for &(k, m) in &[(0.0, 1.0), (1.0, 0.5), (10.0, 5.0), (3.0, 40.0)] {
        let curve: Vec<f64> = (0..20)
            .map(|i| rho_bs(&p(1.0, k, m, i as f64 / 19.0)).unwrap())
            .collect();
        assert!(curve.windows(2).all(|w| w[1] >= w[0]), "K={k} m={m}");
    }
    // m -> infinity removes the shared fading: rho_bs -> rho-driven part only
    assert!(rho_bs(&p(1.0, 1.0, 500.0, 0.001)).unwrap() <= 0.02);
}

#[test]
fn degenerate_high_flags_and_errors() {
    let q = p(1.0, 1.0, 2.0, 0.9999);
    assert!(matches!(
        joint_pdf(&q, 1.0, 1.0),
        Err(Error::DiagonalCollapse { .. })
    ));
    assert!(matches!(
        joint_density(&q, 1.0, 2.0).unwrap(),
        JointDensity::Diagonal {
            on_diagonal: false,
            ..
        }
    ));
    assert!(joint_pdf_rho1(&q.with_rho(0.5), 1.0, 1.0).is_err());
    assert!(joint_pdf_rho0(&q.with_rho(0.5), 1.0, 1.0).is_err());
    assert_eq!(crossing_probability(&q, 1.0).unwrap(), 0.0);
}

#[test]
fn rejects_bad_radii() {
    let q = p(1.0, 1.0, 2.0, 0.5);
    assert!(matches!(
        joint_pdf(&q, -1.0, 1.0),
        Err(Error::Domain { .. })
    ));
    assert!(matches!(
        joint_cdf(&q, f64::NAN, 1.0),
        Err(Error::Domain { .. })
    ));
}

fn params_strategy() -> impl Strategy<Value = BrsParams> {
    (0.3f64..3.0, 0.0f64..12.0, 0.5f64..25.0, 0.0f64..1.0)
        .prop_map(|(s2, k, m, rho)| BrsParams::new(s2, k, m, rho).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pdf_symmetric_and_nonnegative(q in params_strategy(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!(q.rho <= 0.999);
        let s = q.mean_power().sqrt();
        let (r1, r2) = (a * s, b * s);
        let x = joint_pdf(&q, r1, r2).unwrap();
        let y = joint_pdf(&q, r2, r1).unwrap();
        prop_assert!(x >= 0.0);
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
    }

    #[test]
    fn cdf_bounded_by_marginals(q in params_strategy(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let s = q.mean_power().sqrt();
        let (r1, r2) = (a * s, b * s);
        let f = joint_cdf(&q, r1, r2).unwrap();
        let g = joint_cdf(&q, r2, r1).unwrap();
        prop_assert!((f - g).abs() < 1e-12);
        let m1 = marginal_cdf(&q, r1).unwrap();
        let m2 = marginal_cdf(&q, r2).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f <= m1.min(m2) + 1e-12);
    }

    #[test]
    fn rectangle_inequality(q in params_strategy(), a in 0.05f64..2.0, d1 in 0.01f64..1.0, b in 0.05f64..2.0, d2 in 0.01f64..1.0) {
        let s = q.mean_power().sqrt();
        let (a1, b1, a2, b2) = (a * s, (a + d1) * s, b * s, (b + d2) * s);
        let f = |x, y| joint_cdf(&q, x, y).unwrap();
        let mass = f(b1, b2) - f(a1, b2) - f(b1, a2) + f(a1, a2);
        prop_assert!(mass >= -1e-9, "{mass}");
        prop_assert!(f(b1, b2) >= f(a1, b2) - 1e-12);
    }

    #[test]
    fn crossing_between_zero_and_marginal(q in params_strategy(), a in 0.01f64..3.0) {
        let u = a * q.mean_power().sqrt();
        let c = crossing_probability(&q, u).unwrap();
        let m = marginal_cdf(&q, u).unwrap();
        prop_assert!(c >= 0.0 && c <= m + 1e-12);
    }

    #[test]
    fn mgf_normalized_and_moments_consistent(q in params_strategy()) {
        prop_assert!((mgf(&q, MgfPoint::new(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-12);
        let pm = power_moments(&q).unwrap();
        prop_assert!(((pm.m10 - q.mean_power()) / q.mean_power()).abs() < 1e-9);
        prop_assert_eq!(pm.m10, pm.m01);
        prop_assert_eq!(pm.m20, pm.m02);
        prop_assert!(pm.m11 >= pm.m10 * pm.m01 * (1.0 - 1e-12));
        let r = rho_bs(&q).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }
}
