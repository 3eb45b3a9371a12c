//! The mfBm parameterization: Hurst vector, amplitudes, the symmetric
//! correlation matrix `rho` and the antisymmetric matrix `eta`, together
//! with the covariance kernel and the existence (admissibility) test.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::special::{gamma, sign};

/// `|H_j + H_k - 1|` at or below this selects the logarithmic kernel branch.
pub const BRANCH_TOL: f64 = 1e-12;
/// Eigenvalue floor for the positive-definiteness test.
pub const EIG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MfbmParams {
    hurst: Vec<f64>,
    sigma: Vec<f64>,
    // row-major p x p
    rho: Vec<f64>,
    eta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelBranch {
    pub alpha: f64,
    pub is_log_branch: bool,
}

impl KernelBranch {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, is_log_branch: (alpha - 1.0).abs() <= BRANCH_TOL }
    }
}

/// Everything needed to evaluate `w_jk` for one ordered pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossKernel {
    pub rho: f64,
    pub eta: f64,
    pub sigma_prod: f64,
    pub branch: KernelBranch,
}

impl CrossKernel {
    pub fn alpha(&self) -> f64 {
        self.branch.alpha
    }

    /// w_jk(h).
    pub fn w(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        if self.branch.is_log_branch {
            self.rho * h.abs() + self.eta * h * h.abs().ln()
        } else {
            (self.rho - self.eta * sign(h)) * h.abs().powf(self.branch.alpha)
        }
    }

    /// r_jk(s, t) = E[x_j(s) x_k(t)].
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        0.5 * self.sigma_prod * (self.w(-s) + self.w(t) - self.w(t - s))
    }

    /// E[(x_j(s+dt) - x_j(s)) (x_k(t+dt) - x_k(t))] with t - s = -h dt.
    pub fn increment_covariance(&self, h: f64, dt: f64) -> f64 {
        0.5 * self.sigma_prod * (self.w(dt * (1.0 - h)) + self.w(dt * (-1.0 - h)) - 2.0 * self.w(-dt * h))
    }

    /// The same ordered pair with `rho` and `eta` replaced.
    pub fn with_parts(&self, rho: f64, eta: f64) -> Self {
        Self { rho, eta, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Existence {
    pub admissible: bool,
    pub min_eigenvalue: f64,
}

impl MfbmParams {
    /// `rho` and `eta` are full p x p matrices given row by row.
    pub fn new(hurst: Vec<f64>, sigma: Vec<f64>, rho: Vec<Vec<f64>>, eta: Vec<Vec<f64>>) -> Result<Self> {
        let p = hurst.len();
        if p == 0 {
            return Err(Error::InvalidParams("p must be at least 1".into()));
        }
        if sigma.len() != p || rho.len() != p || eta.len() != p {
            return Err(Error::InvalidParams(format!("dimension mismatch for p = {p}")));
        }
        if rho.iter().chain(eta.iter()).any(|row| row.len() != p) {
            return Err(Error::InvalidParams("rho and eta must be p x p".into()));
        }
        let params = Self { hurst, sigma, rho: rho.concat(), eta: eta.concat() };
        params.validate()?;
        Ok(params)
    }

    /// Two components with unit amplitudes.
    pub fn bivariate(h1: f64, h2: f64, rho: f64, eta: f64) -> Result<Self> {
        Self::new(vec![h1, h2], vec![1.0, 1.0], vec![vec![1.0, rho], vec![rho, 1.0]], vec![vec![0.0, eta], vec![-eta, 0.0]])
    }

    /// Scalar fractional Brownian motion.
    pub fn fbm(hurst: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![hurst], vec![sigma], vec![vec![1.0]], vec![vec![0.0]])
    }

    fn validate(&self) -> Result<()> {
        let p = self.p();
        for (j, &h) in self.hurst.iter().enumerate() {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::InvalidParams(format!("H[{j}] = {h} is outside (0, 1)")));
            }
        }
        for (j, &s) in self.sigma.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParams(format!("sigma[{j}] = {s} must be positive")));
            }
        }
        for j in 0..p {
            if self.rho(j, j) != 1.0 {
                return Err(Error::InvalidParams(format!("rho[{j}][{j}] must be 1")));
            }
            if self.eta(j, j) != 0.0 {
                return Err(Error::InvalidParams(format!("eta[{j}][{j}] must be 0")));
            }
            for k in 0..p {
                let r = self.rho(j, k);
                if !(-1.0..=1.0).contains(&r) {
                    return Err(Error::InvalidParams(format!("rho[{j}][{k}] = {r} is outside [-1, 1]")));
                }
                if r != self.rho(k, j) {
                    return Err(Error::InvalidParams(format!("rho is not symmetric at ({j}, {k})")));
                }
                if self.eta(j, k) != -self.eta(k, j) || !self.eta(j, k).is_finite() {
                    return Err(Error::InvalidParams(format!("eta is not antisymmetric at ({j}, {k})")));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.hurst.len()
    }

    pub fn hurst(&self) -> &[f64] {
        &self.hurst
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rho(&self, j: usize, k: usize) -> f64 {
        self.rho[j * self.p() + k]
    }

    pub fn eta(&self, j: usize, k: usize) -> f64 {
        self.eta[j * self.p() + k]
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j < self.p() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: j, p: self.p() })
        }
    }

    pub fn branch(&self, j: usize, k: usize) -> Result<KernelBranch> {
        self.check_index(j)?;
        self.check_index(k)?;
        Ok(KernelBranch::new(self.hurst[j] + self.hurst[k]))
    }

    pub fn cross(&self, j: usize, k: usize) -> Result<CrossKernel> {
        let branch = self.branch(j, k)?;
        Ok(CrossKernel { rho: self.rho(j, k), eta: self.eta(j, k), sigma_prod: self.sigma[j] * self.sigma[k], branch })
    }

    /// Off-diagonal `rho` and `eta` multiplied by `c`; diagonal untouched.
    pub fn with_cross_scaled(&self, c: f64) -> Result<Self> {
        let p = self.p();
        let mut out = self.clone();
        for j in 0..p {
            for k in 0..p {
                if j != k {
                    out.rho[j * p + k] *= c;
                    out.eta[j * p + k] *= c;
                }
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Copy with the given off-diagonal entries replaced (both triangles).
    pub fn with_pair(&self, j: usize, k: usize, rho: f64, eta: f64) -> Result<Self> {
        self.check_index(j)?;
        self.check_index(k)?;
        let p = self.p();
        let mut out = self.clone();
        if j != k {
            out.rho[j * p + k] = rho;
            out.rho[k * p + j] = rho;
            out.eta[j * p + k] = eta;
            out.eta[k * p + j] = -eta;
        }
        out.validate()?;
        Ok(out)
    }

    /// Hermitian matrix with entries Γ(H_j + H_k + 1) ξ_jk.
    pub fn existence_matrix(&self) -> DMatrix<Complex64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |j, k| {
            let branch = KernelBranch::new(self.hurst[j] + self.hurst[k]);
            let (rho, eta) = (self.rho(j, k), self.eta(j, k));
            let xi = if j == k {
                Complex64::new((PI * self.hurst[j]).sin(), 0.0)
            } else if branch.is_log_branch {
                Complex64::new(rho, -0.5 * PI * eta)
            } else {
                let half = 0.5 * PI * branch.alpha;
                Complex64::new(rho * half.sin(), -eta * half.cos())
            };
            xi * gamma(branch.alpha + 1.0)
        })
    }
}

pub fn kernel_w(params: &MfbmParams, j: usize, k: usize, h: f64) -> Result<f64> {
    Ok(params.cross(j, k)?.w(h))
}

pub fn cross_covariance(params: &MfbmParams, j: usize, k: usize, s: f64, t: f64) -> Result<f64> {
    Ok(params.cross(j, k)?.covariance(s, t))
}

/// Cross-covariance of the unit-step increment process at integer lag `h`,
/// E[Δx_j(i + h) Δx_k(i)].
pub fn increment_cross_covariance(params: &MfbmParams, j: usize, k: usize, h: i64) -> Result<f64> {
    Ok(params.cross(j, k)?.increment_covariance(h as f64, 1.0))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_hermitian_eigenvalue(m: DMatrix<Complex64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].re;
    }
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn check_existence(params: &MfbmParams) -> Existence {
    let min_eigenvalue = min_hermitian_eigenvalue(params.existence_matrix());
    Existence { admissible: min_eigenvalue >= -EIG_TOL, min_eigenvalue }
}

/// Supremum of admissible `rho_12` for p = 2, `eta = 0`, found by bisection.
pub fn max_admissible_rho(h1: f64, h2: f64) -> Result<f64> {
    let at = |rho: f64| -> Result<bool> { Ok(check_existence(&MfbmParams::bivariate(h1, h2, rho, 0.0)?).admissible) };
    if at(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

// ---------------------------------------------------------------------------
// Parameter files

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    p: toml::Spanned<i64>,
    #[serde(rename = "H")]
    hurst: toml::Spanned<Vec<f64>>,
    sigma: toml::Spanned<Vec<f64>>,
    rho: toml::Spanned<Vec<f64>>,
    #[serde(default)]
    eta: Option<toml::Spanned<Vec<f64>>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl MfbmParams {
    /// Parses the TOML parameter document (`p`, `H`, `sigma`, `rho` as the
    /// row-major lower triangle including the diagonal, `eta` as the
    /// row-major strict lower triangle). Diagnostics carry line numbers.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ParamsDoc = toml::from_str(text).map_err(|e| Error::ParamsFile {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        let at = |span: std::ops::Range<usize>, message: String| Error::ParamsFile { line: line_of(text, span.start), message };

        let p = *doc.p.get_ref();
        if p < 1 {
            return Err(at(doc.p.span(), format!("p = {p} must be at least 1")));
        }
        let p = p as usize;
        let hurst = doc.hurst.get_ref().clone();
        if hurst.len() != p {
            return Err(at(doc.hurst.span(), format!("H has {} entries, expected {p}", hurst.len())));
        }
        if let Some((j, h)) = hurst.iter().enumerate().find(|(_, h)| !(**h > 0.0 && **h < 1.0)) {
            return Err(at(doc.hurst.span(), format!("H[{}] = {h} is outside (0, 1)", j + 1)));
        }
        let sigma = doc.sigma.get_ref().clone();
        if sigma.len() != p {
            return Err(at(doc.sigma.span(), format!("sigma has {} entries, expected {p}", sigma.len())));
        }
        if let Some((j, s)) = sigma.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
            return Err(at(doc.sigma.span(), format!("sigma[{}] = {s} must be positive", j + 1)));
        }

        let lower = doc.rho.get_ref();
        if lower.len() != p * (p + 1) / 2 {
            return Err(at(doc.rho.span(), format!("rho has {} entries, expected {} (lower triangle)", lower.len(), p * (p + 1) / 2)));
        }
        let mut rho = vec![vec![0.0; p]; p];
        let mut idx = 0;
        for j in 0..p {
            for k in 0..=j {
                let v = lower[idx];
                idx += 1;
                if j == k && v != 1.0 {
                    return Err(at(doc.rho.span(), format!("rho diagonal entry ({}, {}) = {v} must be 1", j + 1, k + 1)));
                }
                if !(-1.0..=1.0).contains(&v) {
                    return Err(at(doc.rho.span(), format!("rho({}, {}) = {v} is outside [-1, 1]", j + 1, k + 1)));
                }
                rho[j][k] = v;
                rho[k][j] = v;
            }
        }

        let mut eta = vec![vec![0.0; p]; p];
        let strict = p * (p - 1) / 2;
        match &doc.eta {
            Some(e) => {
                if e.get_ref().len() != strict {
                    return Err(at(e.span(), format!("eta has {} entries, expected {strict} (strict lower triangle)", e.get_ref().len())));
                }
                let mut idx = 0;
                for j in 0..p {
                    for k in 0..j {
                        let v = e.get_ref()[idx];
                        idx += 1;
                        if !v.is_finite() {
                            return Err(at(e.span(), format!("eta({}, {}) is not finite", j + 1, k + 1)));
                        }
                        eta[j][k] = v;
                        eta[k][j] = -v;
                    }
                }
            }
            None if strict > 0 => return Err(Error::ParamsFile { line: 1, message: "missing key `eta`".into() }),
            None => {}
        }
        Self::new(hurst, sigma, rho, eta)
    }

    pub fn to_toml_string(&self) -> String {
        let p = self.p();
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut rho = Vec::new();
        let mut eta = Vec::new();
        for j in 0..p {
            for k in 0..=j {
                rho.push(self.rho(j, k));
                if k < j {
                    eta.push(self.eta(j, k));
                }
            }
        }
        format!(
            "p = {p}\nH = [{}]\nsigma = [{}]\nrho = [{}]\neta = [{}]\n",
            list(&self.hurst),
            list(&self.sigma),
            list(&rho),
            list(&eta)
        )
    }
}
