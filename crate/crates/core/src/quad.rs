//! Globally adaptive Gauss–Kronrod (G10/K21) integration.
//!
//! Works for real and complex integrands, accepts interior breakpoints, and
//! always reports the estimated error so callers can decide whether a
//! non-converged result is acceptable.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Values that can be integrated: f64 and Complex64.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<V: QuadValue> QuadResult<V> {
    /// The value, or a `Quadrature` error when the estimate exceeds `tol`.
    pub fn within(self, tol: f64) -> Result<V> {
        if self.error <= tol && self.error.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Quadrature { achieved: self.error, requested: tol })
        }
    }

    pub fn combine(self, other: QuadResult<V>) -> QuadResult<V> {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 2000 }
    }
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

fn kronrod<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> Panel<V> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = V::zero();
    let mut resabs = fc.magnitude() * WGK[10];
    let mut fv1 = [V::zero(); 10];
    let mut fv2 = [V::zero(); 10];
    for i in 0..10 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[i] = f1;
        fv2[i] = f2;
        resk = resk + (f1 + f2) * WGK[i];
        resabs += WGK[i] * (f1.magnitude() + f2.magnitude());
        if i % 2 == 1 {
            resg = resg + (f1 + f2) * WG[i / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for i in 0..10 {
        resasc += WGK[i] * ((fv1[i] - mean).magnitude() + (fv2[i] - mean).magnitude());
    }
    let h = half.abs();
    let value = resk * half;
    resabs *= h;
    resasc *= h;
    let mut error = ((resk - resg) * half).magnitude();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { a, b, value, error }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn integrate<V: QuadValue, F: Fn(f64) -> V>(&self, f: F, a: f64, b: f64) -> QuadResult<V> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrates over `points[0]..points[last]`, starting from the panels
    /// delimited by the (sorted) breakpoints.
    pub fn integrate_breaks<V: QuadValue, F: Fn(f64) -> V>(&self, f: F, points: &[f64]) -> QuadResult<V> {
        let mut panels: Vec<Panel<V>> = points
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| kronrod(&f, w[0], w[1]))
            .collect();
        let mut evaluations = 21 * panels.len();
        if panels.is_empty() {
            return QuadResult { value: V::zero(), error: 0.0, evaluations: 0, converged: true };
        }
        loop {
            let total = panels.iter().fold(V::zero(), |acc, p| acc + p.value);
            let error: f64 = panels.iter().map(|p| p.error).sum();
            let target = self.abs_tol.max(self.rel_tol * total.magnitude());
            if error <= target || !error.is_finite() {
                return QuadResult { value: total, error, evaluations, converged: error.is_finite() };
            }
            if panels.len() >= self.max_subdivisions {
                return QuadResult { value: total, error, evaluations, converged: false };
            }
            // Bisect the worst panel that can still be split.
            let worst = panels
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    let mid = 0.5 * (p.a + p.b);
                    mid > p.a && mid < p.b && (p.b - p.a) > 1e3 * f64::EPSILON * p.a.abs().max(p.b.abs())
                })
                .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
                .map(|(i, _)| i);
            let Some(i) = worst else {
                return QuadResult { value: total, error, evaluations, converged: false };
            };
            let p = panels.swap_remove(i);
            let mid = 0.5 * (p.a + p.b);
            panels.push(kronrod(&f, p.a, mid));
            panels.push(kronrod(&f, mid, p.b));
            evaluations += 42;
        }
    }

    /// ∫_0^{x0} f(x) dx for integrands with an integrable power-law
    /// singularity or slow algebraic behaviour at the origin, via x = e^s.
    pub fn integrate_from_origin<V: QuadValue, F: Fn(f64) -> V>(&self, f: F, x0: f64) -> QuadResult<V> {
        let s_hi = x0.ln();
        let s_lo = (-700.0_f64).min(s_hi - 1.0);
        // Breakpoints per decade keep the exponential shape resolved.
        let decade = std::f64::consts::LN_10;
        let mut pts = vec![s_lo];
        let mut s = s_hi - 4.0 * decade;
        let mut inner = Vec::new();
        while s > s_lo {
            inner.push(s);
            s -= 4.0 * decade;
        }
        inner.reverse();
        pts.extend(inner);
        pts.push(s_hi);
        self.integrate_breaks(
            |s: f64| {
                let x = s.exp();
                f(x) * x
            },
            &pts,
        )
    }
}
