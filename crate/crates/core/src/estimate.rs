//! Monte Carlo estimators for wavelet fields and increments, and the
//! shared log-log regression.
//!
//! Standard errors always come from the replicate level: each replicate is
//! reduced to its along-shift average first, then a leave-one-out jackknife
//! runs over replicates.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_range, pairwise_sum, pairwise_sum_complex, Execution};
use crate::synth::SamplePath;
use crate::wavelets::WaveletField;

pub const MIN_REPLICATES: usize = 30;

/// Components and scales of a coefficient pair d^j_{a1}, d^k_{a2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalePair {
    pub j: usize,
    pub k: usize,
    pub a1: f64,
    pub a2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCov {
    pub pair: ScalePair,
    /// Lags in units of the shift spacing.
    pub lags: Vec<i64>,
    /// Lags in time units.
    pub h: Vec<f64>,
    pub mean: Vec<Complex64>,
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    pub replicates: usize,
}

impl EmpiricalCov {
    /// Replicate-level means `per_replicate[r][lag]` reduced to mean and
    /// jackknife standard errors.
    pub fn from_replicate_means(pair: ScalePair, lags: &[i64], spacing: f64, per_replicate: &[Vec<Complex64>]) -> Result<Self> {
        if per_replicate.len() < MIN_REPLICATES {
            return Err(Error::InsufficientData(format!("{} replicates, need at least {MIN_REPLICATES}", per_replicate.len())));
        }
        if !lags.contains(&0) {
            return Err(Error::InvalidArgument("lag 0 must be included".into()));
        }
        let mut mean = Vec::with_capacity(lags.len());
        let mut se_re = Vec::with_capacity(lags.len());
        let mut se_im = Vec::with_capacity(lags.len());
        for l in 0..lags.len() {
            let column: Vec<Complex64> = per_replicate.iter().map(|r| r[l]).collect();
            let re: Vec<f64> = column.iter().map(|c| c.re).collect();
            let im: Vec<f64> = column.iter().map(|c| c.im).collect();
            mean.push(pairwise_sum_complex(&column) / column.len() as f64);
            se_re.push(jackknife_se(&re));
            se_im.push(jackknife_se(&im));
        }
        Ok(Self { pair, lags: lags.to_vec(), h: lags.iter().map(|&l| l as f64 * spacing).collect(), mean, se_re, se_im, replicates: per_replicate.len() })
    }
}

/// Jackknife standard error of the mean.
pub fn jackknife_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let total = pairwise_sum(xs);
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1.0)).collect();
    let loo_mean = pairwise_sum(&loo) / n;
    let dev: Vec<f64> = loo.iter().map(|t| (t - loo_mean).powi(2)).collect();
    ((n - 1.0) / n * pairwise_sum(&dev)).sqrt()
}

fn series(field: &WaveletField, j: usize, a: f64) -> Result<&[Complex64]> {
    if j >= field.p() {
        return Err(Error::IndexOutOfRange { index: j, p: field.p() });
    }
    let s = field.scale_index(a).ok_or_else(|| Error::InvalidArgument(format!("scale {a} not present in the field")))?;
    Ok(field.series(j, s))
}

/// Along-shift average of d^j_{a1}(b + l Δb) conj(d^k_{a2}(b)) for one field.
pub fn lagged_products(field: &WaveletField, pair: &ScalePair, lags: &[i64]) -> Result<Vec<Complex64>> {
    field.shift_spacing().ok_or(Error::NonUniformShifts)?;
    let x = series(field, pair.j, pair.a1)?;
    let y = series(field, pair.k, pair.a2)?;
    let n = x.len() as i64;
    lags.iter()
        .map(|&l| {
            let lo = 0.max(-l);
            let hi = n.min(n - l);
            if hi - lo < 1 {
                return Err(Error::InsufficientData(format!("no shift pairs at lag {l}")));
            }
            let prods: Vec<Complex64> = (lo..hi).map(|i| x[(i + l) as usize] * y[i as usize].conj()).collect();
            Ok(pairwise_sum_complex(&prods) / prods.len() as f64)
        })
        .collect()
}

pub fn empirical_wavelet_cov(fields: &[WaveletField], pair: &ScalePair, lags: &[i64]) -> Result<EmpiricalCov> {
    let spacing = fields.first().and_then(|f| f.shift_spacing()).ok_or(if fields.is_empty() {
        Error::InsufficientData("empty ensemble".into())
    } else {
        Error::NonUniformShifts
    })?;
    let per: Vec<Vec<Complex64>> = fields.iter().map(|f| lagged_products(f, pair, lags)).collect::<Result<_>>()?;
    EmpiricalCov::from_replicate_means(*pair, lags, spacing, &per)
}

/// Sample cross-covariance of increments, E[Δx_j(i + l) Δx_k(i)].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementCov {
    pub j: usize,
    pub k: usize,
    pub lags: Vec<i64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub replicates: usize,
}

pub fn increment_lagged_products(path: &SamplePath, j: usize, k: usize, lags: &[i64]) -> Result<Vec<f64>> {
    let p = path.p();
    for idx in [j, k] {
        if idx >= p {
            return Err(Error::IndexOutOfRange { index: idx, p });
        }
    }
    let x = path.increments(j);
    let y = path.increments(k);
    let n = x.len() as i64;
    lags.iter()
        .map(|&l| {
            let lo = 0.max(-l);
            let hi = n.min(n - l);
            if hi - lo < 1 {
                return Err(Error::InsufficientData(format!("no increment pairs at lag {l}")));
            }
            let prods: Vec<f64> = (lo..hi).map(|i| x[(i + l) as usize] * y[i as usize]).collect();
            Ok(pairwise_sum(&prods) / prods.len() as f64)
        })
        .collect()
}

impl IncrementCov {
    pub fn from_replicate_means(j: usize, k: usize, lags: &[i64], per_replicate: &[Vec<f64>]) -> Result<Self> {
        if per_replicate.len() < MIN_REPLICATES {
            return Err(Error::InsufficientData(format!("{} replicates, need at least {MIN_REPLICATES}", per_replicate.len())));
        }
        let mut mean = Vec::new();
        let mut se = Vec::new();
        for l in 0..lags.len() {
            let column: Vec<f64> = per_replicate.iter().map(|r| r[l]).collect();
            mean.push(pairwise_sum(&column) / column.len() as f64);
            se.push(jackknife_se(&column));
        }
        Ok(Self { j, k, lags: lags.to_vec(), mean, se, replicates: per_replicate.len() })
    }
}

pub fn empirical_increment_cov(paths: &[SamplePath], j: usize, k: usize, lags: &[i64]) -> Result<IncrementCov> {
    let per: Vec<Vec<f64>> = paths.iter().map(|p| increment_lagged_products(p, j, k, lags)).collect::<Result<_>>()?;
    IncrementCov::from_replicate_means(j, k, lags, &per)
}

/// Replicate-averaged cross-periodogram with confidence bands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossSpectrumEstimate {
    pub pair: ScalePair,
    pub omegas: Vec<f64>,
    pub mean: Vec<Complex64>,
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
    pub replicates: usize,
}

impl CrossSpectrumEstimate {
    /// Pointwise band mean ± z·SE for the real and imaginary parts.
    pub fn contains(&self, i: usize, value: Complex64, z: f64) -> bool {
        (value.re - self.mean[i].re).abs() <= z * self.se_re[i] && (value.im - self.mean[i].im).abs() <= z * self.se_im[i]
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()).collect()
}

/// Hann-tapered cross-periodogram Δb X(ω) conj(Y(ω)) / Σw² of one field,
/// with X(ω) = Σ_b w_b d^j_{a1}(b) e^{-iωb}.
pub fn cross_periodogram(field: &WaveletField, pair: &ScalePair, omegas: &[f64]) -> Result<Vec<Complex64>> {
    let spacing = field.shift_spacing().ok_or(Error::NonUniformShifts)?;
    let x = series(field, pair.j, pair.a1)?;
    let y = series(field, pair.k, pair.a2)?;
    let taper = hann(x.len());
    let norm = spacing / pairwise_sum(&taper.iter().map(|w| w * w).collect::<Vec<_>>());
    let b0 = field.shifts[0];
    Ok(omegas
        .iter()
        .map(|&omega| {
            let step = Complex64::from_polar(1.0, -omega * spacing);
            let mut phase = Complex64::from_polar(1.0, -omega * b0);
            let (mut sx, mut sy) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (i, w) in taper.iter().enumerate() {
                sx += x[i] * phase * w;
                sy += y[i] * phase * w;
                // re-anchor periodically to keep the recurrence exact
                phase = if (i + 1) % 256 == 0 { Complex64::from_polar(1.0, -omega * (b0 + (i + 1) as f64 * spacing)) } else { phase * step };
            }
            sx * sy.conj() * norm
        })
        .collect())
}

pub fn cross_spectrum_from_replicates(pair: ScalePair, omegas: &[f64], per_replicate: &[Vec<Complex64>]) -> Result<CrossSpectrumEstimate> {
    if per_replicate.len() < MIN_REPLICATES {
        return Err(Error::InsufficientData(format!("{} replicates, need at least {MIN_REPLICATES}", per_replicate.len())));
    }
    let mut mean = Vec::new();
    let mut se_re = Vec::new();
    let mut se_im = Vec::new();
    for i in 0..omegas.len() {
        let column: Vec<Complex64> = per_replicate.iter().map(|r| r[i]).collect();
        mean.push(pairwise_sum_complex(&column) / column.len() as f64);
        se_re.push(jackknife_se(&column.iter().map(|c| c.re).collect::<Vec<_>>()));
        se_im.push(jackknife_se(&column.iter().map(|c| c.im).collect::<Vec<_>>()));
    }
    Ok(CrossSpectrumEstimate { pair, omegas: omegas.to_vec(), mean, se_re, se_im, replicates: per_replicate.len() })
}

pub fn empirical_cross_spectrum(fields: &[WaveletField], pair: &ScalePair, omegas: &[f64]) -> Result<CrossSpectrumEstimate> {
    empirical_cross_spectrum_with(fields, pair, omegas, Execution::default())
}

pub fn empirical_cross_spectrum_with(fields: &[WaveletField], pair: &ScalePair, omegas: &[f64], exec: Execution) -> Result<CrossSpectrumEstimate> {
    let per: Vec<Vec<Complex64>> = map_range(exec, fields.len(), |r| cross_periodogram(&fields[r], pair, omegas)).into_iter().collect::<Result<_>>()?;
    cross_spectrum_from_replicates(*pair, omegas, &per)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Smallest and largest x actually used.
    pub range: (f64, f64),
    pub points: usize,
    /// Points dropped for zero, non-finite or underflowing magnitude.
    pub excluded: usize,
    pub residual_rms: f64,
    pub max_abs_residual: f64,
}

/// Least squares of log|y| on log x, restricted to x in `range` if given.
pub fn fit_power_law(xs: &[f64], ys: &[f64], range: Option<(f64, f64)>) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae vs {} ordinates", xs.len(), ys.len())));
    }
    let mut excluded = 0;
    let mut pts = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if let Some((lo, hi)) = range {
            if x < lo || x > hi {
                continue;
            }
        }
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive abscissa {x}")));
        }
        let m = y.abs();
        if !(m.is_finite() && m >= f64::MIN_POSITIVE) {
            excluded += 1;
            continue;
        }
        pts.push((x.ln(), m.ln(), x));
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable points ({excluded} excluded), need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: Vec<f64> = pts.iter().map(|p| p.1 - intercept - slope * p.0).collect();
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let slope_se = (rss / (n - 2.0) / sxx).sqrt();
    let lo = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(FitReport {
        slope,
        intercept,
        slope_se,
        range: (lo, hi),
        points: pts.len(),
        excluded,
        residual_rms: (rss / n).sqrt(),
        max_abs_residual: resid.iter().fold(0.0, |m, r| m.max(r.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MfbmParams;
    use crate::rng::GaussianStream;

    fn field_from(series: Vec<Vec<Complex64>>, spacing: f64) -> WaveletField {
        let n = series[0].len();
        WaveletField {
            coefficients: series.into_iter().map(|s| vec![s]).collect(),
            scales: vec![4.0],
            shifts: (0..n).map(|i| 100.0 + i as f64 * spacing).collect(),
            dt: 1.0,
            n: 10_000,
            seed: 0,
        }
    }

    fn white_field(seed: u64, n: usize, spacing: f64) -> WaveletField {
        let mut g = GaussianStream::new(seed, 1);
        let xs: Vec<Complex64> = (0..n).map(|_| Complex64::new(g.next_pair().0, 0.0)).collect();
        field_from(vec![xs], spacing)
    }

    #[test]
    fn fit_exact_power_law() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powi(-2)).collect();
        let f = fit_power_law(&xs, &ys, None).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-13);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
        let f = fit_power_law(&xs, &ys, Some((2.0, 6.0))).unwrap();
        assert_eq!(f.points, 5);
        assert_eq!(f.range, (2.0, 6.0));
    }

    #[test]
    fn fit_excludes_zeros_and_reports() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys = [1.0, 0.0, 0.25, 0.125];
        let f = fit_power_law(&xs, &ys, None).unwrap();
        assert_eq!(f.excluded, 1);
        assert!(fit_power_law(&xs, &[0.0, 0.0, 0.0, 1.0], None).is_err());
        assert!(fit_power_law(&[1.0, -1.0, 2.0], &[1.0, 1.0, 1.0], None).is_err());
    }

    #[test]
    fn zero_fields_give_zero() {
        let fields: Vec<WaveletField> = (0..30).map(|_| field_from(vec![vec![Complex64::new(0.0, 0.0); 50]], 1.0)).collect();
        let pair = ScalePair { j: 0, k: 0, a1: 4.0, a2: 4.0 };
        let est = empirical_wavelet_cov(&fields, &pair, &[-2, 0, 1, 4]).unwrap();
        assert!(est.mean.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        assert_eq!(est.h, vec![-2.0, 0.0, 1.0, 4.0]);
    }

    #[test]
    fn preconditions() {
        let few: Vec<WaveletField> = (0..10).map(|s| white_field(s, 50, 1.0)).collect();
        let pair = ScalePair { j: 0, k: 0, a1: 4.0, a2: 4.0 };
        assert!(matches!(empirical_wavelet_cov(&few, &pair, &[0]), Err(Error::InsufficientData(_))));
        let many: Vec<WaveletField> = (0..30).map(|s| white_field(s, 50, 1.0)).collect();
        assert!(empirical_wavelet_cov(&many, &pair, &[1, 2]).is_err());
        assert!(empirical_wavelet_cov(&many, &ScalePair { a1: 8.0, ..pair }, &[0]).is_err());
        let mut bent = many[0].clone();
        bent.shifts[3] += 0.5;
        assert!(matches!(cross_periodogram(&bent, &pair, &[0.1]), Err(Error::NonUniformShifts)));
    }

    #[test]
    fn jackknife_se_is_standard_error_of_mean() {
        let xs = [1.0, 3.0, 2.0, 6.0, 4.0];
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((jackknife_se(&xs) - sd / n.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn white_coefficients_have_flat_spectrum() {
        let fields: Vec<WaveletField> = (0..200).map(|s| white_field(s, 512, 1.0)).collect();
        let pair = ScalePair { j: 0, k: 0, a1: 4.0, a2: 4.0 };
        let omegas = [0.1, 0.5, 1.0, 2.0, 3.0];
        let est = empirical_cross_spectrum(&fields, &pair, &omegas).unwrap();
        let within = (0..omegas.len()).filter(|&i| est.contains(i, Complex64::new(1.0, 0.0), 4.0)).count();
        assert_eq!(within, omegas.len(), "{:?}", est.mean);
    }

    #[test]
    fn increment_estimator_on_brownian_motion() {
        let p = MfbmParams::fbm(0.5, 1.0).unwrap();
        let paths = crate::synth::replicate_ensemble(&p, 257, 1.0, 9, 60).unwrap();
        let est = empirical_increment_cov(&paths, 0, 0, &[0, 1, 2]).unwrap();
        assert!((est.mean[0] - 1.0).abs() < 4.0 * est.se[0]);
        assert!(est.mean[1].abs() < 4.0 * est.se[1]);
        assert!(est.se.iter().all(|&s| s > 0.0));
    }
}
