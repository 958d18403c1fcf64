//! The Gaussian approximate identity `f_eps(x) = exp(-(x/eps)^2) / (eps sqrt(pi))`
//! together with its derivative and antiderivative.

use crate::error::{Error, Result};

/// Kernel support used by the binned fast paths, in units of `epsilon`.
/// Beyond it the kernel is below `exp(-64)` of its peak.
pub const KERNEL_CUTOFF: f64 = 8.0;

pub(crate) const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    epsilon: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(Self { epsilon })
        } else {
            Err(Error::parameter(
                "epsilon",
                format!("bandwidth must be positive, got {epsilon}"),
            ))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Half-width of the region where the kernel is treated as non-zero.
    pub fn support(&self) -> f64 {
        KERNEL_CUTOFF * self.epsilon
    }

    /// `f_eps(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let z = x / self.epsilon;
        FRAC_1_SQRT_PI / self.epsilon * (-z * z).exp()
    }

    /// `f_eps'(x) = eps^-2 f'(x/eps)` with `f'(z) = -2z exp(-z^2) / sqrt(pi)`.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let z = x / self.epsilon;
        -2.0 * z * FRAC_1_SQRT_PI / (self.epsilon * self.epsilon) * (-z * z).exp()
    }

    /// `F_eps(x) = int_0^x f_eps = erf(x/eps) / 2`, bounded by 1/2.
    pub fn eval_antideriv(&self, x: f64) -> f64 {
        0.5 * libm::erf(x / self.epsilon)
    }

    /// `f_eps(0)`, the largest value the kernel takes.
    pub fn peak(&self) -> f64 {
        FRAC_1_SQRT_PI / self.epsilon
    }
}

/// Sign with `sgn(0) = 0`. NaN maps to NaN.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else if x == 0.0 {
        0.0
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Composite Simpson rule, independent of the closed forms above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn frac_constant_matches_pi() {
        assert!((FRAC_1_SQRT_PI - 1.0 / PI.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn peak_values() {
        let m1 = Mollifier::new(1.0).unwrap();
        assert!((m1.eval(0.0) - 0.564_189_6).abs() < 1e-7);
        let m05 = Mollifier::new(0.5).unwrap();
        assert!((m05.eval(0.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
        assert_eq!(m05.peak(), m05.eval(0.0));
    }

    #[test]
    fn rejects_non_positive_bandwidth() {
        assert!(Mollifier::new(0.0).is_err());
        assert!(Mollifier::new(-0.1).is_err());
        assert!(Mollifier::new(f64::NAN).is_err());
    }

    #[test]
    fn derivative_value_and_finite_difference() {
        let m = Mollifier::new(1.0).unwrap();
        assert_eq!(m.eval_deriv(0.0), 0.0);
        let expected = -2.0 / PI.sqrt() * (-1.0f64).exp();
        assert!((m.eval_deriv(1.0) - expected).abs() < 1e-15);
        assert!((expected + 0.415_107_5).abs() < 1e-7);
        let h = 1e-6;
        let fd = (m.eval(1.0 + h) - m.eval(1.0 - h)) / (2.0 * h);
        assert!((fd - m.eval_deriv(1.0)).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_values() {
        let m = Mollifier::new(1.0).unwrap();
        assert_eq!(m.eval_antideriv(0.0), 0.0);
        let quad = simpson(|t| (-t * t).exp() / PI.sqrt(), 0.0, 1.0, 2000);
        assert!((m.eval_antideriv(1.0) - quad).abs() < 1e-12);
        assert!((quad - 0.421_350_4).abs() < 1e-7);
        let narrow = Mollifier::new(0.01).unwrap();
        assert!((narrow.eval_antideriv(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalization_and_zero_mean_derivative() {
        for eps in [1.0, 0.1, 0.01] {
            let m = Mollifier::new(eps).unwrap();
            let r = KERNEL_CUTOFF * eps;
            let mass = simpson(|x| m.eval(x), -r, r, 4000);
            assert!((mass - 1.0).abs() < 1e-10, "eps={eps} mass={mass}");
            let d = simpson(|x| m.eval_deriv(x), -r, r, 4000);
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn finite_difference_consistency_on_grid() {
        for eps in [1.0, 0.1, 0.01] {
            let m = Mollifier::new(eps).unwrap();
            let h = 1e-4 * eps;
            for i in -30..=30 {
                let x = i as f64 * 0.1 * eps + 0.013 * eps;
                let fd_anti = (m.eval_antideriv(x + h) - m.eval_antideriv(x - h)) / (2.0 * h);
                let rel = (fd_anti - m.eval(x)).abs() / m.eval(x);
                assert!(rel < 1e-6, "antideriv eps={eps} x={x} rel={rel}");
                let fd = (m.eval(x + h) - m.eval(x - h)) / (2.0 * h);
                let rel = (fd - m.eval_deriv(x)).abs() / m.eval_deriv(x).abs();
                assert!(rel < 1e-6, "deriv eps={eps} x={x} rel={rel}");
            }
        }
    }

    #[test]
    fn sgn_convention() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-0.0), 0.0);
        assert_eq!(sgn(-3.2), -1.0);
        assert_eq!(sgn(2.5), 1.0);
        assert!(sgn(f64::NAN).is_nan());
    }

    proptest! {
        #[test]
        fn exact_symmetries(x in -50.0f64..50.0, eps in 0.001f64..5.0) {
            let m = Mollifier::new(eps).unwrap();
            prop_assert_eq!(m.eval(x), m.eval(-x));
            prop_assert_eq!(m.eval_deriv(x), -m.eval_deriv(-x));
            prop_assert_eq!(m.eval_antideriv(x), -m.eval_antideriv(-x));
            prop_assert!(m.eval_antideriv(x).abs() <= 0.5);
            prop_assert!(m.eval(x) >= 0.0);
        }
    }
}
