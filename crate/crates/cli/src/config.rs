//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mfbm::model::check_existence;
use mfbm::wavelets::{gaussian_derivative, MixedGaussianDerivative, Wavelet};
use mfbm::MfbmParams;
use num_complex::Complex64;
use serde::Deserialize;

use crate::Invalid;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ParamsSource {
    File(PathBuf),
    Inline(toml::Table),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Path of a parameter file (relative to the config) or an inline table.
    pub params: Option<ParamsSource>,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub wavelet: WaveletSpec,
    pub simulation: SimulationSpec,
    pub transform: TransformSpec,
    pub pair: PairSpec,
    pub lags: LagSpec,
    pub frequencies: FrequencySpec,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveletFamily {
    GaussianDerivative,
    MixedGaussianDerivative,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    /// Number of vanishing moments M.
    pub order: u32,
    /// (re, im) weight of the order M+1 component for the mixed family.
    pub mix: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub n: usize,
    pub dt: f64,
    pub replicates: usize,
    /// Fail with exit code 3 instead of clipping negative embedding eigenvalues.
    pub strict_embedding: bool,
    /// `MFBM1` path container used by `cwt` instead of simulating.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSpec {
    pub scales: Vec<f64>,
    pub shift_stride: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairSpec {
    /// 1-based component indices (j, k).
    pub components: [usize; 2],
    pub a1: f64,
    pub a2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LagSpec {
    /// Lags in time units for `theory cov`.
    pub theory: Vec<f64>,
    /// Lags in shift steps for `estimate`.
    pub steps: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySpec {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: None,
            seed: 1,
            out: PathBuf::from("out"),
            threads: None,
            wavelet: WaveletSpec::default(),
            simulation: SimulationSpec::default(),
            transform: TransformSpec::default(),
            pair: PairSpec::default(),
            lags: LagSpec::default(),
            frequencies: FrequencySpec::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self { family: WaveletFamily::GaussianDerivative, order: 2, mix: [0.0, 0.0] }
    }
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self { n: 4096, dt: 1.0, replicates: 1, strict_embedding: false, input: None }
    }
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self { scales: vec![4.0, 8.0, 16.0], shift_stride: 1 }
    }
}

impl Default for PairSpec {
    fn default() -> Self {
        Self { components: [1, 2], a1: 4.0, a2: 4.0 }
    }
}

impl Default for LagSpec {
    fn default() -> Self {
        Self { theory: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0], steps: vec![0, 1, 2, 4, 8] }
    }
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self { lo: 0.01, hi: 10.0, per_decade: 10 }
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Self = toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Model parameters; without a `params` entry, H = (0.4, 0.7), ρ = 0.5, η = 0.1.
    /// Inadmissible parameters are rejected here, before any computation.
    pub fn params(&self) -> anyhow::Result<MfbmParams> {
        let params = match &self.params {
            None => MfbmParams::bivariate(0.4, 0.7, 0.5, 0.1)?,
            Some(ParamsSource::File(p)) => {
                let path = self.resolve(p);
                let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
                MfbmParams::from_toml_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            Some(ParamsSource::Inline(table)) => MfbmParams::from_toml_str(&toml::to_string(table)?).map_err(|e| invalid(format!("params: {e}")))?,
        };
        let existence = check_existence(&params);
        if !existence.admissible {
            return Err(mfbm::Error::Inadmissible { min_eigenvalue: existence.min_eigenvalue }.into());
        }
        Ok(params)
    }

    pub fn wavelet(&self) -> anyhow::Result<Box<dyn Wavelet>> {
        let w = &self.wavelet;
        Ok(match w.family {
            WaveletFamily::GaussianDerivative => Box::new(gaussian_derivative(w.order)?),
            WaveletFamily::MixedGaussianDerivative => Box::new(MixedGaussianDerivative::new(w.order, Complex64::new(w.mix[0], w.mix[1]))?),
        })
    }

    /// 0-based (j, k) checked against p.
    pub fn components(&self, p: usize) -> anyhow::Result<(usize, usize)> {
        let [j, k] = self.pair.components;
        if !(1..=p).contains(&j) || !(1..=p).contains(&k) {
            return Err(invalid(format!("pair.components = [{j}, {k}] must lie in 1..={p}")));
        }
        Ok((j - 1, k - 1))
    }

    pub fn check_simulation(&self) -> anyhow::Result<()> {
        let s = &self.simulation;
        if s.n < 2 {
            return Err(invalid(format!("simulation.n = {} must be at least 2", s.n)));
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(invalid(format!("simulation.dt = {} must be positive", s.dt)));
        }
        if s.replicates == 0 {
            return Err(invalid("simulation.replicates must be at least 1"));
        }
        Ok(())
    }

    pub fn check_transform(&self) -> anyhow::Result<()> {
        let t = &self.transform;
        if t.scales.is_empty() || t.scales.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("transform.scales must be a non-empty list of positive scales"));
        }
        if t.scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("transform.scales must be strictly increasing"));
        }
        if t.shift_stride == 0 {
            return Err(invalid("transform.shift_stride must be at least 1"));
        }
        Ok(())
    }

    pub fn check_pair_scales(&self) -> anyhow::Result<()> {
        let p = &self.pair;
        if !(p.a1 > 0.0 && p.a2 > 0.0 && p.a1.is_finite() && p.a2.is_finite()) {
            return Err(invalid(format!("pair scales ({}, {}) must be positive", p.a1, p.a2)));
        }
        Ok(())
    }

    pub fn check_frequencies(&self) -> anyhow::Result<()> {
        let f = &self.frequencies;
        if !(f.lo > 0.0 && f.hi > f.lo && f.hi.is_finite() && f.per_decade > 0) {
            return Err(invalid(format!("frequency grid [{}, {}] with {} points per decade is invalid", f.lo, f.hi, f.per_decade)));
        }
        Ok(())
    }
}
