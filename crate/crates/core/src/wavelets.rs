//! Analyzing wavelets and the discretized continuous wavelet transform.
//!
//! Fourier convention: ψ̂(ω) = ∫ ψ(t) e^{-iωt} dt.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::par::{try_map_range, Execution};
use crate::quad::Quadrature;
use crate::special::{factorial, hermite_he};
use crate::synth::SamplePath;

/// Standardized support radius: ψ is treated as zero for |t| > this.
pub const SUPPORT_RADIUS: f64 = 10.0;
/// Smallest admissible scale in units of the sampling step.
pub const MIN_SCALE_STEPS: f64 = 4.0;
/// Tolerated fraction of wavelet L¹ mass beyond the path boundary.
pub const EDGE_TOL: f64 = 1e-8;
pub const MAX_GAUSSIAN_ORDER: u32 = 12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest K for which t^m ψ(t) is integrable for all m ≤ K.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayOrder {
    Finite(u32),
    Unbounded,
}

impl DecayOrder {
    pub fn covers(&self, k: u32) -> bool {
        match self {
            DecayOrder::Finite(max) => k <= *max,
            DecayOrder::Unbounded => true,
        }
    }

    /// Err unless C2(k) holds.
    pub fn require(&self, k: u32) -> Result<()> {
        match self {
            DecayOrder::Finite(max) if k > *max => Err(Error::InsufficientDecay { required: k, available: *max }),
            _ => Ok(()),
        }
    }
}

pub trait Wavelet: Send + Sync {
    fn name(&self) -> String;
    /// Number of vanishing moments M.
    fn vanishing_moments(&self) -> u32;
    fn eval(&self, t: f64) -> Complex64;
    fn eval_ft(&self, omega: f64) -> Complex64;
    /// ∫ t^M ψ(t) dt.
    fn moment(&self) -> Complex64;
    fn decay(&self) -> DecayOrder;
    fn is_real(&self) -> bool;

    fn support_radius(&self) -> f64 {
        SUPPORT_RADIUS
    }

    /// |ψ̂(ω)| is negligible beyond this frequency.
    fn frequency_radius(&self) -> f64 {
        14.0
    }

    /// Closed-form correlation Γ_ψ(v) between ψ_{a1,b+h} and ψ_{a2,b}, if known.
    fn autocorrelation_closed(&self, _a1: f64, _a2: f64, _h: f64, _v: f64) -> Option<Complex64> {
        None
    }
}

/// ψ_M(t) = (-1)^M d^M/dt^M e^{-t²/2} = He_M(t) e^{-t²/2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDerivative {
    order: u32,
}

pub fn gaussian_derivative(order: u32) -> Result<GaussianDerivative> {
    if order == 0 {
        return Err(Error::InvalidWavelet("Gaussian-derivative order must be at least 1".into()));
    }
    if order > MAX_GAUSSIAN_ORDER {
        return Err(Error::InvalidWavelet(format!("order {order} exceeds {MAX_GAUSSIAN_ORDER}")));
    }
    Ok(GaussianDerivative { order })
}

fn i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn gd_eval(order: u32, t: f64) -> f64 {
    hermite_he(order, t) * (-0.5 * t * t).exp()
}

fn gd_ft(order: u32, omega: f64) -> Complex64 {
    // (-iω)^M sqrt(2π) e^{-ω²/2}
    i_pow(order).conj() * omega.powi(order as i32) * (2.0 * PI).sqrt() * (-0.5 * omega * omega).exp()
}

impl GaussianDerivative {
    pub fn order(&self) -> u32 {
        self.order
    }
}

impl Wavelet for GaussianDerivative {
    fn name(&self) -> String {
        format!("gaussian-derivative-{}", self.order)
    }

    fn vanishing_moments(&self) -> u32 {
        self.order
    }

    fn eval(&self, t: f64) -> Complex64 {
        Complex64::new(gd_eval(self.order, t), 0.0)
    }

    fn eval_ft(&self, omega: f64) -> Complex64 {
        gd_ft(self.order, omega)
    }

    fn moment(&self) -> Complex64 {
        Complex64::new(factorial(self.order) * (2.0 * PI).sqrt(), 0.0)
    }

    fn decay(&self) -> DecayOrder {
        DecayOrder::Unbounded
    }

    fn is_real(&self) -> bool {
        true
    }

    fn autocorrelation_closed(&self, a1: f64, a2: f64, h: f64, v: f64) -> Option<Complex64> {
        let m = self.order;
        let s = (a1 * a1 + a2 * a2).sqrt();
        let x = (v + h) / s;
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let value = (a1 * a2).sqrt() * (a1 * a2).powi(m as i32) * sign * (2.0 * PI).sqrt() * s.powi(-(2 * m as i32) - 1)
            * hermite_he(2 * m, x)
            * (-0.5 * x * x).exp();
        Some(Complex64::new(value, 0.0))
    }
}

/// Complex wavelet ψ_M + c ψ_{M+1} built from Gaussian derivatives; it has
/// exactly M vanishing moments and the same M-th moment as ψ_M.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedGaussianDerivative {
    order: u32,
    mix: Complex64,
}

impl MixedGaussianDerivative {
    pub fn new(order: u32, mix: Complex64) -> Result<Self> {
        if order == 0 || order >= MAX_GAUSSIAN_ORDER {
            return Err(Error::InvalidWavelet(format!("order {order} must be in 1..{MAX_GAUSSIAN_ORDER}")));
        }
        Ok(Self { order, mix })
    }
}

impl Wavelet for MixedGaussianDerivative {
    fn name(&self) -> String {
        format!("mixed-gaussian-derivative-{}({}{:+}i)", self.order, self.mix.re, self.mix.im)
    }

    fn vanishing_moments(&self) -> u32 {
        self.order
    }

    fn eval(&self, t: f64) -> Complex64 {
        gd_eval(self.order, t) + self.mix * gd_eval(self.order + 1, t)
    }

    fn eval_ft(&self, omega: f64) -> Complex64 {
        gd_ft(self.order, omega) + self.mix * gd_ft(self.order + 1, omega)
    }

    fn moment(&self) -> Complex64 {
        Complex64::new(factorial(self.order) * (2.0 * PI).sqrt(), 0.0)
    }

    fn decay(&self) -> DecayOrder {
        DecayOrder::Unbounded
    }

    fn is_real(&self) -> bool {
        self.mix.im == 0.0
    }

    fn frequency_radius(&self) -> f64 {
        15.0
    }
}

/// Numerical certificate of the wavelet conditions.
#[derive(Clone, Debug)]
pub struct WaveletCheck {
    /// ∫ t^m ψ for m = 0..=M.
    pub moments: Vec<Complex64>,
    pub ft_at_zero: Complex64,
    /// max |quadrature FT - eval_ft| over the test grid
    pub ft_mismatch: f64,
}

impl WaveletCheck {
    pub fn moments_vanish(&self, tol: f64) -> bool {
        let m = self.moments.len() - 1;
        self.moments[..m].iter().all(|c| c.norm() <= tol) && self.moments[m].norm() > tol
    }
}

/// Checks admissibility, vanishing moments and the FT pair by quadrature.
pub fn verify_wavelet(wavelet: &dyn Wavelet) -> Result<WaveletCheck> {
    let r = wavelet.support_radius();
    let q = Quadrature::new(1e-13, 1e-13);
    let m = wavelet.vanishing_moments();
    let moments = (0..=m)
        .map(|k| q.integrate_breaks(|t: f64| wavelet.eval(t) * t.powi(k as i32), &[-r, 0.0, r]).within(1e-10))
        .collect::<Result<Vec<_>>>()?;
    let mut ft_mismatch: f64 = 0.0;
    for i in 0..=40 {
        let omega = -6.0 + 0.3 * i as f64;
        let num = q
            .integrate_breaks(|t: f64| wavelet.eval(t) * Complex64::new(0.0, -omega * t).exp(), &[-r, -r / 2.0, 0.0, r / 2.0, r])
            .within(1e-10)?;
        ft_mismatch = ft_mismatch.max((num - wavelet.eval_ft(omega)).norm());
    }
    Ok(WaveletCheck { moments, ft_at_zero: wavelet.eval_ft(0.0), ft_mismatch })
}

/// Γ_ψ(v) = ∫ ψ_{a1,b+h}(u) conj(ψ_{a2,b}(u+v)) du as a pointwise evaluator.
pub struct Autocorrelation<'a> {
    wavelet: &'a dyn Wavelet,
    pub a1: f64,
    pub a2: f64,
    pub h: f64,
}

pub fn wavelet_autocorrelation(wavelet: &dyn Wavelet, a1: f64, a2: f64, h: f64) -> Result<Autocorrelation<'_>> {
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::InvalidArgument(format!("scales must be positive, got ({a1}, {a2})")));
    }
    Ok(Autocorrelation { wavelet, a1, a2, h })
}

impl Autocorrelation<'_> {
    pub fn eval(&self, v: f64) -> Result<Complex64> {
        match self.wavelet.autocorrelation_closed(self.a1, self.a2, self.h, v) {
            Some(value) => Ok(value),
            None => self.eval_quadrature(v),
        }
    }

    /// Quadrature evaluation regardless of a closed form.
    pub fn eval_quadrature(&self, v: f64) -> Result<Complex64> {
        let r = self.wavelet.support_radius();
        let (a1, a2, h) = (self.a1, self.a2, self.h);
        // b = 0
        let lo = (h - r * a1).max(-v - r * a2);
        let hi = (h + r * a1).min(-v + r * a2);
        if lo >= hi {
            return Ok(ZERO);
        }
        let mid = 0.5 * (lo + hi);
        let norm = 1.0 / (a1 * a2).sqrt();
        let q = Quadrature::new(1e-13, 1e-11);
        let value = q
            .integrate_breaks(
                |u: f64| self.wavelet.eval((u - h) / a1) * self.wavelet.eval((u + v) / a2).conj(),
                &[lo, 0.5 * (lo + mid), mid, 0.5 * (mid + hi), hi],
            )
            .within(1e-9)?;
        Ok(value * norm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletField {
    /// coefficients[j][scale][shift]
    pub coefficients: Vec<Vec<Vec<Complex64>>>,
    pub scales: Vec<f64>,
    pub shifts: Vec<f64>,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
}

impl WaveletField {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    pub fn series(&self, j: usize, scale: usize) -> &[Complex64] {
        &self.coefficients[j][scale]
    }

    pub fn scale_index(&self, a: f64) -> Option<usize> {
        self.scales.iter().position(|&s| (s - a).abs() <= 1e-12 * a.abs().max(1.0))
    }

    /// Common spacing of the shift grid, if uniform.
    pub fn shift_spacing(&self) -> Option<f64> {
        if self.shifts.len() < 2 {
            return None;
        }
        let step = self.shifts[1] - self.shifts[0];
        let uniform = self.shifts.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs());
        (uniform && step > 0.0).then_some(step)
    }
}

/// Fraction of the truncated L¹ mass of ψ((t - b)/a) lying outside [0, t_max].
fn edge_mass(wavelet: &dyn Wavelet, a: f64, b: f64, t_max: f64) -> f64 {
    let r = wavelet.support_radius();
    let left = -b / a;
    let right = (t_max - b) / a;
    if left <= -r && right >= r {
        return 0.0;
    }
    let q = Quadrature::new(1e-14, 1e-8);
    let total = q.integrate_breaks(|u: f64| wavelet.eval(u).norm(), &[-r, 0.0, r]).value;
    let mut outside = 0.0;
    if left > -r {
        outside += q.integrate(|u: f64| wavelet.eval(u).norm(), -r, left.min(r)).value;
    }
    if right < r {
        outside += q.integrate(|u: f64| wavelet.eval(u).norm(), right.max(-r), r).value;
    }
    outside / total
}

/// Valid shifts on the sampling grid (every `stride` samples) for the
/// largest scale in `scales`.
pub fn interior_shifts(n: usize, dt: f64, scales: &[f64], wavelet: &dyn Wavelet, stride: usize) -> Vec<f64> {
    let a_max = scales.iter().copied().fold(0.0, f64::max);
    let t_max = (n - 1) as f64 * dt;
    (0..n)
        .step_by(stride.max(1))
        .map(|i| i as f64 * dt)
        .filter(|&b| edge_mass(wavelet, a_max, b, t_max) <= EDGE_TOL)
        .collect()
}

pub fn cwt(path: &SamplePath, wavelet: &dyn Wavelet, scales: &[f64], shifts: &[f64]) -> Result<WaveletField> {
    cwt_with(path, wavelet, scales, shifts, Execution::default())
}

/// d^j_{a,b} = a^{-1/2} Σ_i x_j(t_i) conj(ψ((t_i - b)/a)) dt, by FFT
/// convolution per (component, scale) for on-grid shifts.
pub fn cwt_with(path: &SamplePath, wavelet: &dyn Wavelet, scales: &[f64], shifts: &[f64], exec: Execution) -> Result<WaveletField> {
    let dt = path.dt;
    let n = path.n();
    let t_max = (n - 1) as f64 * dt;
    if scales.is_empty() {
        return Err(Error::InvalidArgument("no scales requested".into()));
    }
    for w in scales.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument("scales must be strictly increasing".into()));
        }
    }
    for &a in scales {
        if !(a >= MIN_SCALE_STEPS * dt) {
            return Err(Error::ScaleBelowResolution { scale: a, min: MIN_SCALE_STEPS * dt });
        }
    }
    for &a in scales {
        for &b in [shifts.first(), shifts.last()].into_iter().flatten() {
            let mass = edge_mass(wavelet, a, b, t_max);
            if mass > EDGE_TOL {
                return Err(Error::ShiftNearBoundary { shift: b, mass });
            }
        }
    }
    for &b in shifts {
        let mass = edge_mass(wavelet, *scales.last().unwrap(), b, t_max);
        if mass > EDGE_TOL {
            return Err(Error::ShiftNearBoundary { shift: b, mass });
        }
    }

    let p = path.p();
    let ns = scales.len();
    let rows = try_map_range(exec, p * ns, |idx| {
        let (j, s) = (idx / ns, idx % ns);
        Ok(transform_one(path.component(j), dt, wavelet, scales[s], shifts))
    })?;
    let mut coefficients = vec![Vec::with_capacity(ns); p];
    for (idx, row) in rows.into_iter().enumerate() {
        coefficients[idx / ns].push(row);
    }
    Ok(WaveletField { coefficients, scales: scales.to_vec(), shifts: shifts.to_vec(), dt, n, seed: path.seed })
}

fn transform_one(x: &[f64], dt: f64, wavelet: &dyn Wavelet, a: f64, shifts: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let r = wavelet.support_radius();
    let q_max = (r * a / dt).ceil() as usize;
    let norm = dt / a.sqrt();
    let size = (n + q_max + 1).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    xs.resize(size, ZERO);
    // g(q') = conj(ψ(-q' dt / a)), stored at q' mod size
    let mut g = vec![ZERO; size];
    for q in -(q_max as i64)..=(q_max as i64) {
        let idx = (-q).rem_euclid(size as i64) as usize;
        g[idx] = wavelet.eval(q as f64 * dt / a).conj();
    }
    forward.process(&mut xs);
    forward.process(&mut g);
    for (xv, gv) in xs.iter_mut().zip(&g) {
        *xv *= gv;
    }
    inverse.process(&mut xs);
    let scale = norm / size as f64;

    shifts
        .iter()
        .map(|&b| {
            let pos = b / dt;
            let l = pos.round();
            if (pos - l).abs() <= 1e-9 * pos.abs().max(1.0) && l >= 0.0 && (l as usize) < n {
                xs[l as usize] * scale
            } else {
                // off-grid shift: direct sum
                let lo = ((b - r * a) / dt).ceil().max(0.0) as usize;
                let hi = (((b + r * a) / dt).floor() as usize).min(n - 1);
                (lo..=hi).map(|i| wavelet.eval((i as f64 * dt - b) / a).conj() * x[i]).sum::<Complex64>() * norm
            }
        })
        .collect()
}
