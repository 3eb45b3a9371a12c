//! Small special-function helpers shared by the model and the wavelet code.

/// Γ(x) for real x. Lanczos approximation (statrs), relative error well
/// below 1e-13 on (0, 3].
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Generalized binomial coefficient C(alpha, l) = alpha (alpha-1) ... (alpha-l+1) / l!.
pub fn binomial(alpha: f64, l: u32) -> f64 {
    (0..l).fold(1.0, |acc, i| acc * (alpha - i as f64) / (i as f64 + 1.0))
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Probabilists' Hermite polynomial He_n(x).
pub fn hermite_he(n: u32, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// sin(x) - x without cancellation for small |x|.
pub fn sin_minus_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // -x^3/3! + x^5/5! - ...
        let x2 = x * x;
        let mut term = -x * x2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -x2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        x.sin() - x
    }
}

/// (sin(x) - x) / x³, finite at 0.
pub fn sin_minus_x_scaled(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term: f64 = -1.0 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -x2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        (x.sin() - x) / (x * x * x)
    }
}

/// sin(x) / x, equal to 1 at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// (1 - cos(x)) / x², equal to 1/2 at 0.
pub fn one_minus_cos_scaled(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        0.5 - x * x / 24.0
    } else {
        one_minus_cos(x) / (x * x)
    }
}

/// 1 - cos(x) without cancellation.
pub fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// sign(x) with sign(0) = 0.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reference_values() {
        // Γ(1/2) = sqrt(pi), Γ(3/2) = sqrt(pi)/2, Γ(2) = 1, Γ(3) = 2
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for (x, want) in [(0.5, sqrt_pi), (1.5, sqrt_pi / 2.0), (2.0, 1.0), (3.0, 2.0), (1.0, 1.0)] {
            assert!(((gamma(x) - want) / want).abs() < 1e-13, "gamma({x})");
        }
        // recurrence Γ(x+1) = xΓ(x) over the range used by the existence test
        for i in 1..200 {
            let x = 1.0 + i as f64 / 100.0;
            let rel = (gamma(x + 1.0) - x * gamma(x)) / gamma(x + 1.0);
            assert!(rel.abs() < 1e-13, "recurrence at {x}");
        }
    }

    #[test]
    fn binomial_matches_integer_case_and_product() {
        assert_eq!(binomial(4.0, 2), 6.0);
        assert_eq!(binomial(2.0, 1), 2.0);
        assert!((binomial(0.7, 2) - (-0.105)).abs() < 1e-15);
        assert_eq!(binomial(1.3, 0), 1.0);
    }

    #[test]
    fn hermite_low_orders() {
        let x = 0.7;
        assert_eq!(hermite_he(2, x), x * x - 1.0);
        assert!((hermite_he(3, x) - (x * x * x - 3.0 * x)).abs() < 1e-15);
        assert!((hermite_he(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn scaled_forms_are_continuous() {
        for x in [1e-300_f64, 1e-6, 9.9e-5, 1.01e-4, 0.49, 0.51, 3.0] {
            assert!((sinc(x) - if x < 1e-3 { 1.0 - x * x / 6.0 } else { x.sin() / x }).abs() < 1e-15);
            let want = if x < 1e-3 { 0.5 - x * x / 24.0 } else { (1.0 - x.cos()) / (x * x) };
            assert!((one_minus_cos_scaled(x) - want).abs() < 1e-12, "{x}");
            let want = if x < 1e-3 { -1.0 / 6.0 + x * x / 120.0 } else { (x.sin() - x) / (x * x * x) };
            assert!((sin_minus_x_scaled(x) - want).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn sin_minus_x_is_accurate() {
        for x in [1e-8_f64, 1e-3, 0.1, 0.49, 0.51, 2.0, -0.3] {
            let direct = x.sin() - x;
            let got = sin_minus_x(x);
            let series_ref = -x.powi(3) / 6.0 + x.powi(5) / 120.0 - x.powi(7) / 5040.0 + x.powi(9) / 362880.0;
            if x.abs() < 0.1 {
                assert!((got - series_ref).abs() <= 1e-15 * series_ref.abs().max(1e-300));
            } else {
                assert!((got - direct).abs() < 1e-15);
            }
        }
    }
}
