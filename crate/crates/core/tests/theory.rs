use std::f64::consts::PI;

use mfbm::estimate::ScalePair;
use mfbm::model::{increment_cross_covariance, max_admissible_rho, MfbmParams};
use mfbm::spectral::inverse_transform;
use mfbm::wavelets::{gaussian_derivative, MixedGaussianDerivative};
use mfbm::wavstats::{
    asymptotic_wavelet_cov, cross_checked_wavelet_cov, decay_exponent_fit, scale_law_constant, theoretical_wavelet_cov, theoretical_wavelet_cov_2d,
    wavelet_correlation_at_scale, WaveletCovQuery,
};
use mfbm::Error;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

/// Closed-form bound on |ρ| for η = 0 from the positivity of the spectral matrix.
fn rho_bound_closed_form(h1: f64, h2: f64) -> f64 {
    let num = gamma(2.0 * h1 + 1.0) * gamma(2.0 * h2 + 1.0) * (PI * h1).sin() * (PI * h2).sin();
    let den = gamma(h1 + h2 + 1.0).powi(2) * (0.5 * PI * (h1 + h2)).sin().powi(2);
    (num / den).sqrt().min(1.0)
}

#[test]
fn existence_bound_matches_closed_form() {
    for &(h1, h2) in &[(0.1, 0.2), (0.1, 0.8), (0.2, 0.9), (0.3, 0.45), (0.7, 0.95), (0.05, 0.6)] {
        if (h1 + h2 - 1.0f64).abs() < 1e-9 {
            continue;
        }
        let bisected = max_admissible_rho(h1, h2).unwrap();
        let closed = rho_bound_closed_form(h1, h2);
        assert!((bisected - closed).abs() < 1e-6, "({h1}, {h2}): {bisected} vs {closed}");
    }
    assert!((max_admissible_rho(0.1, 0.8).unwrap() - 0.514).abs() < 1e-3);
}

#[test]
fn univariate_increments_match_fgn() {
    for h in [0.2, 0.5, 0.8] {
        let p = MfbmParams::fbm(h, 1.3).unwrap();
        for lag in -5i64..=5 {
            let k = lag as f64;
            let fgn = 0.5 * 1.69 * ((k + 1.0).abs().powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h) - 2.0 * k.abs().powf(2.0 * h));
            let got = increment_cross_covariance(&p, 0, 0, lag).unwrap();
            assert!((got - fgn).abs() < 1e-13, "H = {h}, lag {lag}: {got} vs {fgn}");
        }
    }
}

#[test]
fn quadrature_routes_agree() {
    let cases = [
        (MfbmParams::bivariate(0.3, 0.6, 0.4, 0.15).unwrap(), 1u32, 1.0, 2.5, 3.0),
        (MfbmParams::bivariate(0.4, 0.6, 0.3, 0.3).unwrap(), 1, 2.0, 2.0, -1.5),
        (MfbmParams::bivariate(0.7, 0.8, 0.5, -0.1).unwrap(), 2, 1.5, 1.0, 0.0),
    ];
    for (p, m, a1, a2, h) in &cases {
        let w = gaussian_derivative(*m).unwrap();
        let q = WaveletCovQuery::new(0, 1, *a1, *a2, *h).unwrap();
        let one = theoretical_wavelet_cov(&q, p, &w).unwrap();
        let two = theoretical_wavelet_cov_2d(&q, p, &w).unwrap();
        assert!((one - two).norm() <= 1e-6 * one.norm().max(1e-6), "{q:?}: {one} vs {two}");
        assert_eq!(cross_checked_wavelet_cov(&q, p, &w).unwrap(), one);
    }
    let w = MixedGaussianDerivative::new(1, Complex64::new(0.3, 0.6)).unwrap();
    let p = MfbmParams::bivariate(0.35, 0.45, 0.5, 0.2).unwrap();
    let q = WaveletCovQuery::new(0, 1, 1.0, 1.5, 0.7).unwrap();
    let (one, two) = (theoretical_wavelet_cov(&q, &p, &w).unwrap(), theoretical_wavelet_cov_2d(&q, &p, &w).unwrap());
    assert!((one - two).norm() <= 1e-6 * one.norm(), "{one} vs {two}");
    assert!(one.im.abs() > 1e-3 * one.norm());
}

#[test]
fn scale_law_constant_gives_scale_free_correlation() {
    let p = MfbmParams::bivariate(0.3, 0.6, 0.4, 0.15).unwrap();
    let w = gaussian_derivative(1).unwrap();
    let law = scale_law_constant(0, 1, &p, &w).unwrap();
    assert!(law.z_jj > 0.0 && law.z_kk > 0.0);
    assert!(law.correlation.norm() < 1.0);
    for a in [0.5, 3.0, 12.0] {
        let c = wavelet_correlation_at_scale(0, 1, a, &p, &w).unwrap();
        assert!((c - law.correlation).norm() < 1e-8, "a = {a}: {c}");
        let cov = theoretical_wavelet_cov(&WaveletCovQuery::new(0, 1, a, a, 0.0).unwrap(), &p, &w).unwrap();
        assert!((cov - law.z * a.powf(1.9)).norm() < 1e-8 * cov.norm());
    }
}

#[test]
fn decay_exponent_for_two_vanishing_moments() {
    let p = MfbmParams::bivariate(0.4, 0.8, 0.6, 0.0).unwrap();
    let w = gaussian_derivative(2).unwrap();
    let lags: Vec<f64> = (0..7).map(|i| 32.0 * 2f64.powi(i)).collect();
    let fit = decay_exponent_fit(&WaveletCovQuery::new(0, 1, 1.0, 1.0, 0.0).unwrap(), &lags, &p, &w).unwrap();
    assert!((fit.slope + 2.8).abs() < 0.05, "slope {}", fit.slope);
    let err = decay_exponent_fit(&WaveletCovQuery::new(0, 1, 4.0, 4.0, 0.0).unwrap(), &lags, &p, &w).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn asymptote_ratio_approaches_one_monotonically() {
    let p = MfbmParams::bivariate(0.3, 0.5, 0.5, 0.25).unwrap();
    let w = gaussian_derivative(1).unwrap();
    for sign in [1.0, -1.0] {
        let devs: Vec<f64> = [32.0, 64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&h| {
                let q = WaveletCovQuery::new(0, 1, 1.0, 2.0, sign * h).unwrap();
                let exact = theoretical_wavelet_cov(&q, &p, &w).unwrap().re;
                (asymptotic_wavelet_cov(&q, &p, &w).unwrap().corrected.re / exact - 1.0).abs()
            })
            .collect();
        assert!(devs.windows(2).all(|d| d[1] < d[0]), "{devs:?}");
        assert!(devs[4] < 1e-3, "{devs:?}");
    }
}

#[test]
fn symmetric_log_branch_has_no_power_law_leading_term() {
    let p = MfbmParams::bivariate(0.4, 0.6, 0.5, 0.0).unwrap();
    let w = gaussian_derivative(1).unwrap();
    let q = WaveletCovQuery::new(0, 1, 1.0, 1.0, 64.0).unwrap();
    assert!(matches!(asymptotic_wavelet_cov(&q, &p, &w), Err(Error::UpperBoundRegime { .. })));
    // ρ|v| is annihilated away from the kink, so the covariance is negligible
    let c = theoretical_wavelet_cov(&q, &p, &w).unwrap();
    assert!(c.norm() < 1e-12, "{c}");
}

#[test]
fn spectral_density_is_integrable_and_its_transform_decays() {
    let p = MfbmParams::bivariate(0.3, 0.5, 0.5, 0.2).unwrap();
    let w = gaussian_derivative(1).unwrap();
    let pair = ScalePair { j: 0, k: 1, a1: 1.0, a2: 1.0 };
    let at0 = inverse_transform(&pair, &p, &w, 0.0).unwrap();
    assert!(at0.converged && at0.value.norm().is_finite() && at0.value.norm() > 0.0);
    let hs = [16.0, 32.0, 64.0];
    let vals: Vec<f64> = hs.iter().map(|&h| inverse_transform(&pair, &p, &w, h).unwrap().value.re.abs()).collect();
    for i in 0..2 {
        let slope = (vals[i + 1] / vals[i]).ln() / 2f64.ln();
        assert!((slope - (0.8 - 2.0)).abs() < 0.05, "slope {slope} between h = {} and {}", hs[i], hs[i + 1]);
    }
}
