//! Exact simulation of discretized mfBm paths.
//!
//! The stationary p-variate increment process is embedded in a block
//! circulant covariance; at each Fourier frequency the p x p spectral matrix
//! is factored by a Hermitian eigendecomposition, complex Gaussian vectors
//! are colored with the factor, and one inverse FFT per component gives the
//! increments. Paths are cumulative sums started at zero.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_existence, CrossKernel, MfbmParams};
use crate::par::{map_range, Execution};
use crate::rng::{derive_seed, GaussianStream};

/// Negative eigenvalues down to this fraction of the largest are numerical noise.
pub const NEG_EIG_TOL: f64 = 1e-9;
pub const MAX_DOUBLINGS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    None,
    Clip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub circulant_size: usize,
    pub doublings: u32,
    /// Most negative eigenvalue over all frequencies of the final embedding.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub correction: Correction,
}

impl EmbeddingReport {
    pub fn relative_min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue / self.max_eigenvalue
    }
}

impl fmt::Display for EmbeddingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "circulant size {} after {} doublings, eigenvalues in [{:.3e}, {:.3e}], correction {:?}",
            self.circulant_size, self.doublings, self.min_eigenvalue, self.max_eigenvalue, self.correction
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimulationOptions {
    pub max_doublings: u32,
    /// Clip residual negative eigenvalues instead of failing.
    pub allow_clip: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { max_doublings: MAX_DOUBLINGS, allow_clip: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub params: MfbmParams,
    pub dt: f64,
    pub seed: u64,
    /// values[j][i] = x_j(i dt)
    pub values: Vec<Vec<f64>>,
}

impl SamplePath {
    pub fn n(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    /// First differences of component `j`.
    pub fn increments(&self, j: usize) -> Vec<f64> {
        self.values[j].windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Precomputed spectral factors for one (params, n, dt); cheap to sample
/// repeatedly and safe to share across threads.
pub struct CirculantSampler {
    params: MfbmParams,
    n: usize,
    dt: f64,
    m: usize,
    // per frequency, p x p factor in row-major order
    factors: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
    report: EmbeddingReport,
}

struct Embedding {
    factors: Vec<Complex64>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

fn embed(kernels: &[CrossKernel], p: usize, m: usize, dt: f64, clip: bool) -> Embedding {
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(m);
    let half = m / 2;
    // spectra[j * p + k][f] for j <= k; the other triangle is the conjugate
    let mut spectra = vec![Vec::new(); p * p];
    for j in 0..p {
        for k in j..p {
            let ker = &kernels[j * p + k];
            let mut seq: Vec<Complex64> = (0..m)
                .map(|i| {
                    let c = if i < half {
                        ker.increment_covariance(i as f64, dt)
                    } else if i == half {
                        0.5 * (ker.increment_covariance(half as f64, dt) + ker.increment_covariance(-(half as f64), dt))
                    } else {
                        ker.increment_covariance(i as f64 - m as f64, dt)
                    };
                    Complex64::new(c, 0.0)
                })
                .collect();
            forward.process(&mut seq);
            spectra[j * p + k] = seq;
        }
    }
    let mut factors = vec![Complex64::new(0.0, 0.0); m * p * p];
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_eigenvalue = f64::NEG_INFINITY;
    let mut eigen = Vec::with_capacity(m);
    for f in 0..m {
        let lambda = DMatrix::from_fn(p, p, |j, k| if j <= k { spectra[j * p + k][f] } else { spectra[k * p + j][f].conj() });
        let se = lambda.symmetric_eigen();
        for &ev in se.eigenvalues.iter() {
            min_eigenvalue = min_eigenvalue.min(ev);
            max_eigenvalue = max_eigenvalue.max(ev);
        }
        eigen.push(se);
    }
    let floor = -NEG_EIG_TOL * max_eigenvalue;
    if min_eigenvalue < floor && !clip {
        return Embedding { factors, min_eigenvalue, max_eigenvalue };
    }
    for (f, se) in eigen.into_iter().enumerate() {
        let block = &mut factors[f * p * p..(f + 1) * p * p];
        for c in 0..p {
            let scale = se.eigenvalues[c].max(0.0).sqrt();
            for r in 0..p {
                block[r * p + c] = se.eigenvectors[(r, c)] * scale;
            }
        }
    }
    Embedding { factors, min_eigenvalue, max_eigenvalue }
}

impl CirculantSampler {
    pub fn new(params: &MfbmParams, n: usize, dt: f64, options: SimulationOptions) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n = {n} must be at least 2")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        let existence = check_existence(params);
        if !existence.admissible {
            return Err(Error::Inadmissible { min_eigenvalue: existence.min_eigenvalue });
        }
        let p = params.p();
        let kernels: Vec<CrossKernel> = (0..p * p).map(|i| params.cross(i / p, i % p)).collect::<Result<_>>()?;
        let base = (2 * (n - 1)).next_power_of_two().max(2);
        let mut doublings = 0;
        loop {
            let m = base << doublings;
            let last = doublings == options.max_doublings;
            let emb = embed(&kernels, p, m, dt, last && options.allow_clip);
            let ok = emb.min_eigenvalue >= -NEG_EIG_TOL * emb.max_eigenvalue;
            let report = EmbeddingReport {
                circulant_size: m,
                doublings,
                min_eigenvalue: emb.min_eigenvalue,
                max_eigenvalue: emb.max_eigenvalue,
                correction: if !ok && last && options.allow_clip { Correction::Clip } else { Correction::None },
            };
            if ok || report.correction == Correction::Clip {
                if report.correction == Correction::Clip {
                    eprintln!("warning: circulant embedding clipped negative eigenvalues: {report}");
                }
                let inverse = FftPlanner::<f64>::new().plan_fft_inverse(m);
                return Ok(Self { params: params.clone(), n, dt, m, factors: emb.factors, inverse, report });
            }
            if last {
                return Err(Error::Embedding(report));
            }
            doublings += 1;
        }
    }

    pub fn report(&self) -> &EmbeddingReport {
        &self.report
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The n - 1 increments of every component.
    pub fn sample_increments(&self, seed: u64) -> Vec<Vec<f64>> {
        let p = self.params.p();
        let m = self.m;
        let mut stream = GaussianStream::new(seed, p);
        let mut spectra = vec![vec![Complex64::new(0.0, 0.0); m]; p];
        let mut z = vec![Complex64::new(0.0, 0.0); p];
        for f in 0..m {
            for zj in z.iter_mut() {
                let (re, im) = stream.next_pair();
                *zj = Complex64::new(re, im);
            }
            let block = &self.factors[f * p * p..(f + 1) * p * p];
            for (r, spectrum) in spectra.iter_mut().enumerate() {
                spectrum[f] = (0..p).map(|c| block[r * p + c] * z[c]).sum();
            }
        }
        let norm = 1.0 / (m as f64).sqrt();
        spectra
            .into_iter()
            .map(|mut s| {
                self.inverse.process(&mut s);
                s[..self.n - 1].iter().map(|c| c.re * norm).collect()
            })
            .collect()
    }

    pub fn sample(&self, seed: u64) -> SamplePath {
        let values = self
            .sample_increments(seed)
            .into_iter()
            .map(|inc| {
                let mut x = Vec::with_capacity(self.n);
                let mut acc = 0.0;
                x.push(0.0);
                for d in inc {
                    acc += d;
                    x.push(acc);
                }
                x
            })
            .collect();
        SamplePath { params: self.params.clone(), dt: self.dt, seed, values }
    }
}

pub fn simulate(params: &MfbmParams, n: usize, dt: f64, seed: u64) -> Result<(SamplePath, EmbeddingReport)> {
    let sampler = CirculantSampler::new(params, n, dt, SimulationOptions::default())?;
    Ok((sampler.sample(seed), sampler.report.clone()))
}

/// `count` independent paths; replicate `r` is `simulate` with seed
/// `derive_seed(seed, r)`.
pub fn replicate_ensemble(params: &MfbmParams, n: usize, dt: f64, seed: u64, count: usize) -> Result<Vec<SamplePath>> {
    replicate_ensemble_with(params, n, dt, seed, count, Execution::default())
}

pub fn replicate_ensemble_with(
    params: &MfbmParams,
    n: usize,
    dt: f64,
    seed: u64,
    count: usize,
    exec: Execution,
) -> Result<Vec<SamplePath>> {
    let sampler = CirculantSampler::new(params, n, dt, SimulationOptions::default())?;
    Ok(map_range(exec, count, |r| sampler.sample(derive_seed(seed, r as u64))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_spectral_matrix() {
        let params = MfbmParams::bivariate(0.3, 0.8, 0.4, 0.15).unwrap();
        let kernels: Vec<CrossKernel> = (0..4).map(|i| params.cross(i / 2, i % 2).unwrap()).collect();
        let m = 64;
        let emb = embed(&kernels, 2, m, 0.5, false);
        // B B^* must be Hermitian with real diagonal equal to the FFT of the autocovariances
        for f in 0..m {
            let b = &emb.factors[f * 4..f * 4 + 4];
            let bb01: Complex64 = (0..2).map(|c| b[c] * b[2 + c].conj()).sum();
            let bb10: Complex64 = (0..2).map(|c| b[2 + c] * b[c].conj()).sum();
            assert!((bb01 - bb10.conj()).norm() < 1e-12);
        }
        assert!(emb.min_eigenvalue >= -NEG_EIG_TOL * emb.max_eigenvalue);
    }

    #[test]
    fn path_starts_at_zero_and_is_deterministic() {
        let params = MfbmParams::bivariate(0.4, 0.8, 0.3, 0.0).unwrap();
        let (a, report) = simulate(&params, 100, 0.01, 5).unwrap();
        let (b, _) = simulate(&params, 100, 0.01, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(report.correction, Correction::None);
        assert_eq!(report.circulant_size, 256);
        assert_eq!(a.n(), 100);
        assert_eq!(a.p(), 2);
        assert!(a.values.iter().all(|c| c[0] == 0.0));
        let (c, _) = simulate(&params, 100, 0.01, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ensemble_matches_simulate_with_derived_seed() {
        let params = MfbmParams::bivariate(0.3, 0.6, 0.2, 0.1).unwrap();
        let ens = replicate_ensemble(&params, 50, 1.0, 9, 3).unwrap();
        for (r, path) in ens.iter().enumerate() {
            let (single, _) = simulate(&params, 50, 1.0, derive_seed(9, r as u64)).unwrap();
            assert_eq!(*path, single);
        }
        let seq = replicate_ensemble_with(&params, 50, 1.0, 9, 3, Execution::Sequential).unwrap();
        assert_eq!(ens, seq);
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = MfbmParams::bivariate(0.1, 0.8, 0.6, 0.0).unwrap();
        assert!(matches!(simulate(&params, 10, 1.0, 0), Err(Error::Inadmissible { .. })));
        let ok = MfbmParams::fbm(0.5, 1.0).unwrap();
        assert!(simulate(&ok, 1, 1.0, 0).is_err());
        assert!(simulate(&ok, 10, 0.0, 0).is_err());
    }

    #[test]
    fn brownian_increments_are_white() {
        let params = MfbmParams::fbm(0.5, 1.0).unwrap();
        let n = 1 << 16;
        let dt = 0.25;
        let (path, _) = simulate(&params, n + 1, dt, 11).unwrap();
        let inc = path.increments(0);
        let var = inc.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var / dt - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
        let lag1 = inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / ((n - 1) as f64 * var);
        assert!(lag1.abs() < 4.0 / (n as f64).sqrt(), "lag-1 autocorrelation {lag1}");
    }
}
