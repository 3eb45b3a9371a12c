//! Cross-spectral density of the wavelet field, coherence, and the
//! integral representations of |v|^α, sign(v)|v|^α, v_±^α and v log|v|
//! against the kernel |ω|^{-α-1}.
//!
//! Convention: Cov(h) = (1/2π) ∫ S(ω) e^{iωh} dω with ψ̂(ω) = ∫ ψ(t) e^{-iωt} dt.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{fit_power_law, FitReport, ScalePair};
use crate::model::{check_existence, CrossKernel, MfbmParams};
use crate::par::{map_slice, try_map_range, Execution};
use crate::quad::{QuadResult, Quadrature};
use crate::special::{factorial, gamma, one_minus_cos_scaled, sign, sin_minus_x_scaled, sinc};
use crate::wavelets::Wavelet;
use crate::wavstats::{theoretical_wavelet_cov, WaveletCovQuery};

/// Relative deviation below which time and frequency routes agree.
pub const CONSISTENCY_TOL: f64 = 1e-3;
/// Target accuracy of the representation quadratures.
pub const REP_TOL: f64 = 1e-8;
/// ε values realizing α → 1⁻ in the v log|v| representation.
pub const LIMIT_EPS: [f64; 3] = [1e-4, 1e-5, 1e-6];

/// ζ_jk(ω) for the sign of ω.
pub fn zeta(j: usize, k: usize, omega_sign: f64, params: &MfbmParams) -> Result<Complex64> {
    Ok(zeta_of(&params.cross(j, k)?, omega_sign))
}

fn zeta_of(kernel: &CrossKernel, omega_sign: f64) -> Complex64 {
    let s = sign(omega_sign);
    if kernel.branch.is_log_branch {
        Complex64::new(kernel.rho, 0.5 * PI * kernel.eta * s)
    } else {
        let half = 0.5 * PI * kernel.alpha();
        Complex64::new(kernel.rho * half.sin(), kernel.eta * half.cos() * s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumGrid {
    pub pair: ScalePair,
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Symmetric grid, log-spaced in |ω| ∈ [lo, hi] with `per_decade` points
/// per decade on each side, zero excluded.
pub fn frequency_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && per_decade > 0) {
        return Err(Error::InvalidArgument(format!("bad frequency grid [{lo}, {hi}] x {per_decade}")));
    }
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    let positive: Vec<f64> = (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect();
    Ok(positive.iter().rev().map(|w| -w).chain(positive.iter().copied()).collect())
}

fn spectral_kernel(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet) -> Result<CrossKernel> {
    if !(pair.a1 > 0.0 && pair.a2 > 0.0) {
        return Err(Error::InvalidArgument(format!("scales must be positive, got ({}, {})", pair.a1, pair.a2)));
    }
    let kernel = params.cross(pair.j, pair.k)?;
    let m = wavelet.vanishing_moments();
    wavelet.decay().require(m)?;
    if kernel.alpha() > 1.0 + crate::model::BRANCH_TOL && m < 2 {
        return Err(Error::InvalidWavelet(format!(
            "H_j + H_k = {} > 1 needs at least 2 vanishing moments, wavelet has {m}",
            kernel.alpha()
        )));
    }
    let existence = check_existence(params);
    if !existence.admissible {
        return Err(Error::Inadmissible { min_eigenvalue: existence.min_eigenvalue });
    }
    Ok(kernel)
}

fn density(kernel: &CrossKernel, pair: &ScalePair, wavelet: &dyn Wavelet, omega: f64) -> Complex64 {
    let alpha = kernel.alpha();
    (pair.a1 * pair.a2).sqrt() * kernel.sigma_prod * gamma(alpha + 1.0) * zeta_of(kernel, omega)
        * wavelet.eval_ft(pair.a1 * omega).conj()
        * wavelet.eval_ft(pair.a2 * omega)
        / omega.abs().powf(alpha + 1.0)
}

/// S^{jk}_{a1,a2}(ω) at one nonzero frequency.
pub fn spectral_density_at(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet, omega: f64) -> Result<Complex64> {
    if omega == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let kernel = spectral_kernel(pair, params, wavelet)?;
    Ok(density(&kernel, pair, wavelet, omega))
}

pub fn cross_spectral_density(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet, omegas: &[f64]) -> Result<SpectrumGrid> {
    if omegas.contains(&0.0) {
        return Err(Error::ZeroFrequency);
    }
    let kernel = spectral_kernel(pair, params, wavelet)?;
    let values = map_slice(Execution::default(), omegas, |&w| density(&kernel, pair, wavelet, w));
    Ok(SpectrumGrid { pair: *pair, omegas: omegas.to_vec(), values })
}

/// |S(ω)| ~ prefactor |ω|^exponent as ω → 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroFrequencyLaw {
    /// 2M - 1 - α.
    pub exponent: f64,
    /// (a1a2)^{M+1/2} σ_jσ_k Γ(α+1) |ψ̂^{(M)}(0)|² |ζ_jk| as stated.
    pub prefactor_literal: f64,
    /// The Taylor coefficient of ψ̂ at 0 is ψ̂^{(M)}(0)/M!, so the limit of
    /// |S| |ω|^{-exponent} is the literal prefactor divided by (M!)².
    pub prefactor: f64,
}

/// Formula only; the spectral existence preconditions are not required.
pub fn zero_frequency_behavior(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet) -> Result<ZeroFrequencyLaw> {
    let kernel = params.cross(pair.j, pair.k)?;
    let m = wavelet.vanishing_moments();
    let alpha = kernel.alpha();
    // ψ̂^{(M)}(0) = (-i)^M ∫ t^M ψ
    let derivative_sq = wavelet.moment().norm_sqr();
    let literal = (pair.a1 * pair.a2).powf(m as f64 + 0.5) * kernel.sigma_prod * gamma(alpha + 1.0) * derivative_sq * zeta_of(&kernel, 1.0).norm();
    Ok(ZeroFrequencyLaw { exponent: 2.0 * m as f64 - 1.0 - alpha, prefactor_literal: literal, prefactor: literal / factorial(m).powi(2) })
}

/// Log-log slope of |S| on ω ∈ [1e-4, 1e-2].
pub fn low_frequency_fit(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet) -> Result<FitReport> {
    let kernel = params.cross(pair.j, pair.k)?;
    let omegas: Vec<f64> = (0..=40).map(|i| 1e-4 * 10f64.powf(2.0 * i as f64 / 40.0)).collect();
    let mags: Vec<f64> = omegas.iter().map(|&w| density(&kernel, pair, wavelet, w).norm()).collect();
    fit_power_law(&omegas, &mags, None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub pair: ScalePair,
    pub omegas: Vec<f64>,
    /// |ζ_jk|² Γ(α+1)² / (Γ(2H_j+1) Γ(2H_k+1)) times the wavelet phase factor.
    pub literal: Vec<Complex64>,
    /// |S^{jk}_{a1,a2}|² / (S^{jj}_{a1,a1} S^{kk}_{a2,a2}).
    pub definition: Vec<f64>,
    /// literal / definition.
    pub discrepancy: Vec<Complex64>,
}

pub fn coherence(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet, omegas: &[f64]) -> Result<CoherenceReport> {
    let cross = cross_spectral_density(pair, params, wavelet, omegas)?;
    let jj = cross_spectral_density(&ScalePair { k: pair.j, a2: pair.a1, ..*pair }, params, wavelet, omegas)?;
    let kk = cross_spectral_density(&ScalePair { j: pair.k, a1: pair.a2, ..*pair }, params, wavelet, omegas)?;
    let kernel = params.cross(pair.j, pair.k)?;
    let h = params.hurst();
    let ratio = gamma(kernel.alpha() + 1.0).powi(2) / (gamma(2.0 * h[pair.j] + 1.0) * gamma(2.0 * h[pair.k] + 1.0));
    let mut literal = Vec::with_capacity(omegas.len());
    let mut definition = Vec::with_capacity(omegas.len());
    for (i, &w) in omegas.iter().enumerate() {
        let f1 = wavelet.eval_ft(pair.a1 * w);
        let f2 = wavelet.eval_ft(pair.a2 * w);
        let phase = f1 * f2.conj() / (f1.conj() * f2);
        literal.push(zeta_of(&kernel, w).norm_sqr() * ratio * phase);
        definition.push(cross.values[i].norm_sqr() / (jj.values[i] * kk.values[i]).re);
    }
    let discrepancy = literal.iter().zip(&definition).map(|(l, d)| l / d).collect();
    Ok(CoherenceReport { pair: *pair, omegas: omegas.to_vec(), literal, definition, discrepancy })
}

/// Inverse Fourier transform (1/2π) ∫ S(ω) e^{iωh} dω by quadrature.
pub fn inverse_transform(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet, h: f64) -> Result<QuadResult<Complex64>> {
    let kernel = spectral_kernel(pair, params, wavelet)?;
    let a_min = pair.a1.min(pair.a2);
    let a_max = pair.a1.max(pair.a2);
    let top = wavelet.frequency_radius() / a_min;
    let knee = 0.5 / a_max;
    let panels = 64.max((top * h.abs() / PI).ceil() as usize);
    let pts: Vec<f64> = (0..=panels).map(|i| knee + (top - knee) * i as f64 / panels as f64).collect();
    let real = wavelet.is_real();
    let f = |w: f64| -> Complex64 {
        let e = Complex64::from_polar(1.0, w * h);
        let plus = density(&kernel, pair, wavelet, w) * e;
        if real {
            Complex64::new(2.0 * plus.re, 0.0)
        } else {
            plus + density(&kernel, pair, wavelet, -w) * e.conj()
        }
    };
    let q = Quadrature::new(1e-14, 1e-12).with_max_subdivisions(8000);
    // S is bounded at 0 under the preconditions; geometric panels resolve
    // the power-law shape without evaluating where |ω|^{-α-1} overflows
    let near_pts: Vec<f64> = std::iter::once(0.0).chain((0..=12).rev().map(|d| knee * 10f64.powi(-d))).collect();
    let near = q.integrate_breaks(f, &near_pts);
    let far = q.integrate_breaks(f, &pts);
    let total = near.combine(far);
    Ok(QuadResult { value: total.value / (2.0 * PI), error: total.error / (2.0 * PI), ..total })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub pair: ScalePair,
    pub lags: Vec<f64>,
    pub time_domain: Vec<Complex64>,
    pub frequency_domain: Vec<Complex64>,
    pub relative_deviation: Vec<f64>,
    pub max_relative_deviation: f64,
    pub passed: bool,
}

/// Compares the inverse transform of S with the time-domain covariance.
pub fn spectral_vs_time_consistency(pair: &ScalePair, params: &MfbmParams, wavelet: &dyn Wavelet, lags: &[f64]) -> Result<ConsistencyReport> {
    let rows = try_map_range(Execution::default(), lags.len(), |i| {
        let time = theoretical_wavelet_cov(&WaveletCovQuery::new(pair.j, pair.k, pair.a1, pair.a2, lags[i])?, params, wavelet)?;
        let freq = inverse_transform(pair, params, wavelet, lags[i])?.within(1e-9)?;
        Ok((time, freq))
    })?;
    let relative_deviation: Vec<f64> = rows.iter().map(|(t, f)| (t - f).norm() / t.norm().max(1e-300)).collect();
    let max = relative_deviation.iter().copied().fold(0.0, f64::max);
    Ok(ConsistencyReport {
        pair: *pair,
        lags: lags.to_vec(),
        time_domain: rows.iter().map(|r| r.0).collect(),
        frequency_domain: rows.iter().map(|r| r.1).collect(),
        relative_deviation,
        max_relative_deviation: max,
        passed: max < CONSISTENCY_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// |v|^α
    Abs,
    /// sign(v)|v|^α
    SignAbs,
    /// v_+^α
    Plus,
    /// v_-^α
    Minus,
    /// v log|v|, the α → 1⁻ limit
    Hlog,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Abs, Variant::SignAbs, Variant::Plus, Variant::Minus, Variant::Hlog];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Abs => "abs",
            Variant::SignAbs => "sign_abs",
            Variant::Plus => "plus",
            Variant::Minus => "minus",
            Variant::Hlog => "hlog",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown representation variant '{s}'")))
    }
}

/// Whether g_α is the zero map (α < 1) or the identity (α > 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensator {
    Zero,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepresentationKernel {
    pub alpha: f64,
    pub variant: Variant,
    pub g_alpha: Compensator,
}

impl RepresentationKernel {
    /// `alpha` is ignored for `Hlog`, which is fixed at the α → 1⁻ limit.
    pub fn new(alpha: f64, variant: Variant) -> Result<Self> {
        if variant == Variant::Hlog {
            return Ok(Self { alpha: 1.0, variant, g_alpha: Compensator::Zero });
        }
        if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2) without 1")));
        }
        let g_alpha = if alpha < 1.0 { Compensator::Zero } else { Compensator::Identity };
        Ok(Self { alpha, variant, g_alpha })
    }

    /// The analytic left-hand side.
    pub fn lhs(&self, v: f64) -> f64 {
        let a = v.abs().powf(self.alpha);
        match self.variant {
            Variant::Abs => a,
            Variant::SignAbs => sign(v) * a,
            Variant::Plus => if v > 0.0 { a } else { 0.0 },
            Variant::Minus => if v < 0.0 { a } else { 0.0 },
            Variant::Hlog => if v == 0.0 { 0.0 } else { v * v.abs().ln() },
        }
    }
}

/// Right-hand side value with its certified error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RepresentationValue {
    pub rhs: f64,
    pub error: f64,
}

/// ∫_Ω^∞ e^{ivω} ω^{-β} dω by integration by parts, with a bound on the
/// truncated remainder.
fn oscillatory_tail(v: f64, beta: f64, omega: f64) -> (Complex64, f64) {
    let iv = Complex64::new(0.0, v);
    let boundary = Complex64::from_polar(1.0, v * omega);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::new(1.0, 0.0);
    let terms = 8;
    for k in 0..terms {
        sum -= coef * boundary * omega.powf(-beta - k as f64) / iv;
        coef *= (beta + k as f64) / iv;
    }
    let last = beta + terms as f64;
    let bound = coef.norm() * omega.powf(1.0 - last) / (last - 1.0);
    (sum, bound)
}

/// 2∫_0^∞ f: (0, w0] with the log substitution, panels of width `step`
/// up to `top`, plus the analytic tail.
fn half_line<F: Fn(f64) -> f64>(f: F, w0: f64, step: f64, top: f64, tail: (f64, f64)) -> Result<(f64, f64)> {
    let q = Quadrature::new(1e-15, 1e-12).with_max_subdivisions(4000);
    let near = q.integrate_from_origin(&f, w0);
    let n = ((top - w0) / step).ceil() as usize;
    let pts: Vec<f64> = (0..=n).map(|i| (w0 + i as f64 * step).min(top)).collect();
    let far = q.integrate_breaks(&f, &pts);
    let body = near.combine(far);
    if !body.converged || !body.value.is_finite() {
        return Err(Error::Quadrature { achieved: body.error, requested: REP_TOL });
    }
    Ok((2.0 * (body.value + tail.0), 2.0 * (body.error + tail.1)))
}

/// Truncation point: 64 full periods of the slowest oscillation.
fn tail_top(v: f64) -> f64 {
    64.0 * 2.0 * PI / v.abs()
}

/// ∫_R (1 - cos ωv)/|ω|^{α+1} dω.
fn abs_integral(alpha: f64, v: f64) -> Result<(f64, f64)> {
    let top = tail_top(v);
    let (osc, bound) = oscillatory_tail(v, alpha + 1.0, top);
    let tail = (top.powf(-alpha) / alpha - osc.re, bound);
    half_line(|w: f64| one_minus_cos_scaled(w * v) * v * v * w.powf(1.0 - alpha), 1.0 / v.abs(), PI / v.abs(), top, tail)
}

/// ∫_R sign(ω)(sin ωv - g_α(ωv))/|ω|^{α+1} dω.
fn sign_integral(alpha: f64, v: f64, g: Compensator) -> Result<(f64, f64)> {
    let top = tail_top(v);
    let (osc, bound) = oscillatory_tail(v, alpha + 1.0, top);
    let (w0, step) = (1.0 / v.abs(), PI / v.abs());
    match g {
        Compensator::Zero => half_line(|w: f64| sinc(w * v) * v * w.powf(-alpha), w0, step, top, (osc.im, bound)),
        Compensator::Identity => {
            let tail = (osc.im - v * top.powf(1.0 - alpha) / (alpha - 1.0), bound);
            half_line(|w: f64| sin_minus_x_scaled(w * v) * v * v * v * w.powf(2.0 - alpha), w0, step, top, tail)
        }
    }
}

/// -∫_0^∞ (sin ωv - v sin ω)/ω^{α+1} dω; tends to v log|v| as α → 1⁻
/// with an O(1 - α) error. The linear term removes the 1/(1 - α)
/// divergence that the unregularized form carries.
fn hlog_at(alpha: f64, v: f64) -> Result<(f64, f64)> {
    let slow = v.abs().min(1.0);
    let fast = v.abs().max(1.0);
    let top = tail_top(slow);
    let (osc_v, bound_v) = oscillatory_tail(v, alpha + 1.0, top);
    let (osc_1, bound_1) = oscillatory_tail(1.0, alpha + 1.0, top);
    let tail = (osc_v.im - v * osc_1.im, bound_v + v.abs() * bound_1);
    let (value, error) = half_line(
        |w: f64| (v * v * v * sin_minus_x_scaled(w * v) - v * sin_minus_x_scaled(w)) * w.powf(2.0 - alpha),
        1.0 / fast,
        PI / fast,
        top,
        tail,
    )?;
    Ok((-0.5 * value, 0.5 * error))
}

/// Numerical right-hand side of the representation selected by `kernel`.
pub fn bahr_essen_eval(kernel: &RepresentationKernel, v: f64) -> Result<RepresentationValue> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("v = {v} must be finite")));
    }
    if v == 0.0 {
        return Ok(RepresentationValue { rhs: 0.0, error: 0.0 });
    }
    let alpha = kernel.alpha;
    let abs_pre = gamma(alpha + 1.0) * (0.5 * PI * alpha).sin() / PI;
    let sign_pre = gamma(alpha + 1.0) * (0.5 * PI * alpha).cos() / PI;
    let (rhs, error) = match kernel.variant {
        Variant::Abs => {
            let (i, e) = abs_integral(alpha, v)?;
            (abs_pre * i, abs_pre * e)
        }
        Variant::SignAbs => {
            let (i, e) = sign_integral(alpha, v, kernel.g_alpha)?;
            (sign_pre * i, sign_pre.abs() * e)
        }
        Variant::Plus | Variant::Minus => {
            let (ia, ea) = abs_integral(alpha, v)?;
            let (is, es) = sign_integral(alpha, v, kernel.g_alpha)?;
            let s = if kernel.variant == Variant::Plus { 1.0 } else { -1.0 };
            (0.5 * (abs_pre * ia + s * sign_pre * is), 0.5 * (abs_pre * ea + sign_pre.abs() * es))
        }
        Variant::Hlog => {
            // Richardson extrapolation of a sequence linear in ε
            let vals = LIMIT_EPS.iter().map(|&eps| hlog_at(1.0 - eps, v)).collect::<Result<Vec<_>>>()?;
            let (e1, e2) = (LIMIT_EPS[1], LIMIT_EPS[2]);
            let extrapolated = (vals[2].0 * e1 - vals[1].0 * e2) / (e1 - e2);
            let err = vals.iter().map(|x| x.1).fold(0.0, f64::max) * (e1 + e2) / (e1 - e2);
            (extrapolated, err)
        }
    };
    if !(error <= REP_TOL * rhs.abs().max(1.0)) {
        return Err(Error::Quadrature { achieved: error, requested: REP_TOL * rhs.abs().max(1.0) });
    }
    Ok(RepresentationValue { rhs, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelets::{gaussian_derivative, MixedGaussianDerivative};

    fn pair(j: usize, k: usize, a1: f64, a2: f64) -> ScalePair {
        ScalePair { j, k, a1, a2 }
    }

    #[test]
    fn zeta_examples() {
        let p = MfbmParams::bivariate(0.3, 0.6, 0.4, 0.2).unwrap();
        let z = zeta(0, 0, 1.0, &p).unwrap();
        assert!((z - Complex64::new((0.3 * PI).sin(), 0.0)).norm() < 1e-15);
        assert_eq!(zeta(0, 0, -1.0, &p).unwrap(), z);
        assert_eq!(zeta(0, 1, -2.0, &p).unwrap(), zeta(0, 1, 3.0, &p).unwrap().conj());

        let log = MfbmParams::bivariate(0.4, 0.6, 0.3, 0.2).unwrap();
        let z = zeta(0, 1, 0.5, &log).unwrap();
        assert!((z - Complex64::new(0.3, 0.1 * PI)).norm() < 1e-15);
    }

    #[test]
    fn grid_is_symmetric_without_zero() {
        let g = frequency_grid(1e-4, 1e3, 16).unwrap();
        assert!(!g.contains(&0.0));
        let n = g.len();
        for i in 0..n / 2 {
            assert_eq!(g[i], -g[n - 1 - i]);
        }
        assert!((g[n - 1] - 1e3).abs() < 1e-9);
        assert!(frequency_grid(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn reduces_to_fbm_wavelet_spectrum() {
        let h = 0.35;
        let p = MfbmParams::new(vec![h], vec![1.7], vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        let w = gaussian_derivative(1).unwrap();
        let a = 2.5;
        for omega in [-3.0, -0.1, 0.02, 0.7, 4.0] {
            let s = spectral_density_at(&pair(0, 0, a, a), &p, &w, omega).unwrap();
            let want = a * 1.7 * 1.7 * gamma(2.0 * h + 1.0) * (PI * h).sin() * w.eval_ft(a * omega).norm_sqr() / omega.abs().powf(2.0 * h + 1.0);
            assert!((s - Complex64::new(want, 0.0)).norm() <= 1e-13 * want, "{omega}");
        }
    }

    #[test]
    fn preconditions() {
        let w1 = gaussian_derivative(1).unwrap();
        let w2 = gaussian_derivative(2).unwrap();
        let long = MfbmParams::bivariate(0.6, 0.7, 0.3, 0.0).unwrap();
        assert!(matches!(spectral_density_at(&pair(0, 1, 1.0, 1.0), &long, &w1, 0.3), Err(Error::InvalidWavelet(_))));
        assert!(spectral_density_at(&pair(0, 1, 1.0, 1.0), &long, &w2, 0.3).is_ok());
        assert!(matches!(cross_spectral_density(&pair(0, 1, 1.0, 1.0), &long, &w2, &[0.1, 0.0]), Err(Error::ZeroFrequency)));
    }

    #[test]
    fn hermitian_symmetries() {
        let p = MfbmParams::bivariate(0.3, 0.45, 0.4, 0.25).unwrap();
        let w = gaussian_derivative(1).unwrap();
        let omegas = [-2.0, -0.3, 0.3, 2.0];
        let s = cross_spectral_density(&pair(0, 1, 1.0, 2.0), &p, &w, &omegas).unwrap();
        let t = cross_spectral_density(&pair(1, 0, 2.0, 1.0), &p, &w, &omegas).unwrap();
        for i in 0..4 {
            assert!((s.values[i] - t.values[i].conj()).norm() < 1e-14);
            assert!((s.values[i] - s.values[3 - i].conj()).norm() < 1e-14);
        }
        let rho_only = MfbmParams::bivariate(0.3, 0.45, 0.4, 0.0).unwrap();
        let s = cross_spectral_density(&pair(0, 1, 1.5, 1.5), &rho_only, &w, &omegas).unwrap();
        assert!(s.values.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn branch_continuity_of_rho_part() {
        let w = gaussian_derivative(2).unwrap();
        let at = |h2: f64| {
            let p = MfbmParams::bivariate(0.4, h2, 0.5, 0.0).unwrap();
            spectral_density_at(&pair(0, 1, 1.0, 2.0), &p, &w, 0.8).unwrap()
        };
        let mid = at(0.6);
        for h2 in [0.6 - 1e-4, 0.6 + 1e-4] {
            assert!((at(h2) - mid).norm() < 1e-3 * mid.norm());
        }
    }

    #[test]
    fn zero_frequency_law() {
        let p = MfbmParams::bivariate(0.3, 0.4, 0.5, 0.1).unwrap();
        let w = gaussian_derivative(1).unwrap();
        let law = zero_frequency_behavior(&pair(0, 1, 1.0, 2.0), &p, &w).unwrap();
        assert!((law.exponent - 0.3).abs() < 1e-15);
        let fit = low_frequency_fit(&pair(0, 1, 1.0, 2.0), &p, &w).unwrap();
        assert!((fit.slope - 0.3).abs() < 0.02);
        let omega = 1e-6;
        let s = spectral_density_at(&pair(0, 1, 1.0, 2.0), &p, &w, omega).unwrap().norm();
        assert!((s / omega.powf(law.exponent) / law.prefactor - 1.0).abs() < 1e-6);

        let steep = MfbmParams::bivariate(0.95, 0.95, 1.0, 0.0).unwrap();
        let law = zero_frequency_behavior(&pair(0, 1, 1.0, 1.0), &steep, &w).unwrap();
        assert!((law.exponent + 0.9).abs() < 1e-12);
    }

    #[test]
    fn coherence_definition_is_flat_and_unit_on_diagonal() {
        let p = MfbmParams::bivariate(0.3, 0.45, 0.4, 0.25).unwrap();
        let w = gaussian_derivative(2).unwrap();
        let omegas: Vec<f64> = (0..40).map(|i| 0.05 + i as f64 * 0.05).collect();
        let diag = coherence(&pair(0, 0, 2.0, 2.0), &p, &w, &omegas).unwrap();
        assert!(diag.definition.iter().all(|c| (c - 1.0).abs() < 1e-12));
        let cross = coherence(&pair(0, 1, 2.0, 2.0), &p, &w, &omegas).unwrap();
        let c0 = cross.definition[0];
        assert!(cross.definition.iter().all(|c| (c - c0).abs() < 1e-10));
        let uneven = coherence(&pair(0, 1, 1.0, 3.0), &p, &w, &omegas).unwrap();
        assert!(uneven.literal.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn time_frequency_consistency() {
        let w = gaussian_derivative(1).unwrap();
        for (h1, h2, rho, eta) in [(0.3, 0.5, 0.5, 0.2), (0.4, 0.6, 0.3, 0.3)] {
            let p = MfbmParams::bivariate(h1, h2, rho, eta).unwrap();
            let r = spectral_vs_time_consistency(&pair(0, 1, 1.0, 2.0), &p, &w, &[0.0, 1.0, 4.0]).unwrap();
            assert!(r.max_relative_deviation < 1e-6, "{r:?}");
            assert!(r.passed);
        }
    }

    #[test]
    fn eta_only_inverse_transform_is_odd() {
        let w = gaussian_derivative(1).unwrap();
        let p = MfbmParams::bivariate(0.3, 0.5, 0.0, 0.3).unwrap();
        let pr = pair(0, 1, 1.0, 1.0);
        for h in [0.5, 2.0] {
            let plus = inverse_transform(&pr, &p, &w, h).unwrap().value;
            let minus = inverse_transform(&pr, &p, &w, -h).unwrap().value;
            assert!((plus + minus).norm() < 1e-6 * plus.norm().max(1e-12));
        }
    }

    #[test]
    fn complex_wavelet_consistency() {
        let w = MixedGaussianDerivative::new(1, Complex64::new(0.3, 0.4)).unwrap();
        let p = MfbmParams::bivariate(0.3, 0.5, 0.5, 0.2).unwrap();
        let pr = pair(0, 1, 1.0, 1.5);
        let r = spectral_vs_time_consistency(&pr, &p, &w, &[0.0, 1.0]).unwrap();
        assert!(r.max_relative_deviation < 1e-6, "{r:?}");
    }

    #[test]
    fn representation_examples() {
        let abs = RepresentationKernel::new(0.5, Variant::Abs).unwrap();
        assert!((bahr_essen_eval(&abs, 1.0).unwrap().rhs - 1.0).abs() < 1e-6);
        let sgn = RepresentationKernel::new(1.5, Variant::SignAbs).unwrap();
        assert_eq!(sgn.g_alpha, Compensator::Identity);
        assert!((bahr_essen_eval(&sgn, -2.0).unwrap().rhs + 2f64.powf(1.5)).abs() < 1e-6);
        let hlog = RepresentationKernel::new(0.0, Variant::Hlog).unwrap();
        assert!(bahr_essen_eval(&hlog, 1.0).unwrap().rhs.abs() < 1e-5);
        assert!(RepresentationKernel::new(1.0, Variant::Abs).is_err());
        assert!(RepresentationKernel::new(2.0, Variant::Plus).is_err());
    }

    #[test]
    fn representation_grid() {
        for alpha in [0.25, 0.5, 0.75, 1.25, 1.5, 1.75] {
            for variant in [Variant::Abs, Variant::SignAbs, Variant::Plus, Variant::Minus] {
                let k = RepresentationKernel::new(alpha, variant).unwrap();
                for v in [-5.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0] {
                    let rhs = bahr_essen_eval(&k, v).unwrap().rhs;
                    let lhs = k.lhs(v);
                    assert!((rhs - lhs).abs() / lhs.abs().max(1.0) < 1e-6, "{variant:?} α={alpha} v={v}: {rhs} vs {lhs}");
                }
            }
        }
        let k = RepresentationKernel::new(0.0, Variant::Hlog).unwrap();
        for v in [-5.0, -2.0, -0.5, 0.5, 2.0, 5.0] {
            let rhs = bahr_essen_eval(&k, v).unwrap().rhs;
            assert!((rhs - k.lhs(v)).abs() / k.lhs(v).abs().max(1.0) < 1e-5, "hlog v={v}: {rhs}");
        }
    }

    #[test]
    fn plus_minus_split_is_exact() {
        for alpha in [0.5, 1.5] {
            let ab = bahr_essen_eval(&RepresentationKernel::new(alpha, Variant::Abs).unwrap(), 2.0).unwrap().rhs;
            let sg = bahr_essen_eval(&RepresentationKernel::new(alpha, Variant::SignAbs).unwrap(), 2.0).unwrap().rhs;
            let pl = bahr_essen_eval(&RepresentationKernel::new(alpha, Variant::Plus).unwrap(), 2.0).unwrap().rhs;
            let mi = bahr_essen_eval(&RepresentationKernel::new(alpha, Variant::Minus).unwrap(), 2.0).unwrap().rhs;
            assert_eq!(pl, 0.5 * (ab + sg));
            assert_eq!(mi, 0.5 * (ab - sg));
        }
    }

    #[test]
    fn oscillatory_tail_matches_quadrature() {
        let (v, beta, top) = (1.7, 1.6, 60.0);
        let (tail, bound) = oscillatory_tail(v, beta, top);
        let q = Quadrature::new(1e-15, 1e-13).with_max_subdivisions(20000);
        let pts: Vec<f64> = (0..=4000).map(|i| top + i as f64 * PI / v).collect();
        let body = q.integrate_breaks(|w: f64| Complex64::from_polar(w.powf(-beta), v * w), &pts).value;
        let end = pts[pts.len() - 1];
        let (rest, _) = oscillatory_tail(v, beta, end);
        assert!((tail - body - rest).norm() < 1e-10, "{tail} vs {}", body + rest);
        assert!(bound < 1e-12);
    }
}
