//! Terms of the Tanaka formula for the derivative of self-intersection
//! local time, and the classical Tanaka formula used for calibration.
//!
//! For a path `B`, level `x` and horizon `t`, with `f_eps` the Gaussian
//! mollifier and `F_eps` its antiderivative:
//!
//! ```text
//! alpha'_{t,eps}(x) = - int_0^t int_0^s f_eps'(B_s - B_r - x) dr ds
//! V(x, eps, t)      =   int_0^t [ int_0^s f_eps(B_s - B_u - x) du ] dB_s
//! ```
//!
//! Itô's formula applied to `F_eps` gives, exactly for every `eps > 0`,
//!
//! ```text
//! 1/2 alpha'_{t,eps}(x) + t F_eps(x) = V(x, eps, t) - int_0^t F_eps(B_t - B_u - x) du
//! ```
//!
//! and letting `eps -> 0` (`F_eps -> sgn / 2`, `V -> int L_s^{B_s - x} dB_s`)
//!
//! ```text
//! 1/2 alpha'_t(x) + 1/2 sgn(x) t = int_0^t L_s^{B_s - x} dB_s - 1/2 int_0^t sgn(B_t - B_u - x) du
//! ```
//!
//! Note the factor 1/2 on the last term: it follows from `F_eps -> sgn / 2`
//! and is what makes the mollified identity close. A report therefore keeps
//! `sgn_integral = int sgn(B_t - B_u - x) du` and forms
//! `rhs = ito_term - sgn_integral / 2`.
//!
//! All `dB` integrals are left-point sums, and double time integrals skip
//! the diagonal `u = s`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_time::{local_time_kernel, pair_sweep, warn_if_coarse, EstimatorMode};
use crate::mollifier::{sgn, Mollifier, FRAC_1_SQRT_PI, KERNEL_CUTOFF};
use crate::path::BrownianPath;

/// `-sum_{s<t} sum_{r<s} f_eps'(B_s - B_r - x) dt^2`, the mollified
/// derivative of self-intersection local time.
pub fn silt_derivative(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    t_index: usize,
    mode: EstimatorMode,
) -> Result<f64> {
    let sweep = pair_sweep(path, x, m, t_index, mode)?;
    Ok(-sweep.deriv_sum * path.dt())
}

/// `sum_{k<t} integrand[k] (B_{k+1} - B_k)`.
///
/// The caller must supply an adapted integrand: `integrand[k]` may depend
/// on `values[0..=k]` only.
pub fn ito_left_sum(integrand: &[f64], path: &BrownianPath, t_index: usize) -> Result<f64> {
    path.check_index(t_index)?;
    if integrand.len() < t_index {
        return Err(Error::LengthMismatch {
            len: integrand.len(),
            needed: t_index,
        });
    }
    let b = path.values();
    Ok(integrand[..t_index]
        .iter()
        .zip(b.windows(2))
        .map(|(h, w)| h * (w[1] - w[0]))
        .sum())
}

/// `V(x, eps, t)`: the left-point Itô sum of the moving-level curve.
pub fn stochastic_integral_v(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    t_index: usize,
    mode: EstimatorMode,
) -> Result<f64> {
    let sweep = pair_sweep(path, x, m, t_index, mode)?;
    ito_left_sum(&sweep.curve, path, t_index)
}

/// `sum_{u<t} sgn(B_t - B_u - x) dt`.
pub fn sgn_time_integral(path: &BrownianPath, x: f64, t_index: usize) -> Result<f64> {
    path.check_index(t_index)?;
    let b = path.values();
    let bt = b[t_index];
    let sum: f64 = b[..t_index].iter().map(|&bu| sgn(bt - bu - x)).sum();
    Ok(sum * path.dt())
}

/// `sum_{u<t} 2 F_eps(B_t - B_u - x) dt`, the mollified counterpart of
/// [`sgn_time_integral`].
pub fn smoothed_sgn_time_integral(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    t_index: usize,
) -> Result<f64> {
    path.check_index(t_index)?;
    let b = path.values();
    let bt = b[t_index];
    let sum: f64 = b[..t_index]
        .iter()
        .map(|&bu| 2.0 * m.eval_antideriv(bt - bu - x))
        .sum();
    Ok(sum * path.dt())
}

/// Which version of the identity a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TanakaForm {
    /// `sgn` terms: the limiting identity, exact only as `eps -> 0`.
    Limit,
    /// `sgn` replaced by `2 F_eps`: exact at every `eps`, up to grid error.
    Mollified,
}

/// All terms of the identity for one path, level and horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TanakaReport {
    pub seed: u64,
    pub replicate: u64,
    pub x: f64,
    pub t: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub alpha_prime: f64,
    pub sgn_term: f64,
    pub ito_term: f64,
    pub sgn_integral: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl TanakaReport {
    /// Left side `alpha'/2 + sgn_term`.
    pub fn lhs_of(alpha_prime: f64, sgn_term: f64) -> f64 {
        0.5 * alpha_prime + sgn_term
    }

    /// Right side `ito_term - sgn_integral / 2`.
    pub fn rhs_of(ito_term: f64, sgn_integral: f64) -> f64 {
        ito_term - 0.5 * sgn_integral
    }
}

/// Assembles every term of the identity at `(x, t = t_index dt)`.
pub fn tanaka_report(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    t_index: usize,
    mode: EstimatorMode,
    form: TanakaForm,
) -> Result<TanakaReport> {
    let sweep = pair_sweep(path, x, m, t_index, mode)?;
    let t = path.time(t_index);
    let alpha_prime = -sweep.deriv_sum * path.dt();
    let ito_term = ito_left_sum(&sweep.curve, path, t_index)?;
    let (sgn_term, sgn_integral) = match form {
        TanakaForm::Limit => (0.5 * sgn(x) * t, sgn_time_integral(path, x, t_index)?),
        TanakaForm::Mollified => (
            m.eval_antideriv(x) * t,
            smoothed_sgn_time_integral(path, x, m, t_index)?,
        ),
    };
    let lhs = TanakaReport::lhs_of(alpha_prime, sgn_term);
    let rhs = TanakaReport::rhs_of(ito_term, sgn_integral);
    Ok(TanakaReport {
        seed: path.seed(),
        replicate: path.replicate(),
        x,
        t,
        epsilon: m.epsilon(),
        dt: path.dt(),
        alpha_prime,
        sgn_term,
        ito_term,
        sgn_integral,
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

/// `|B_t - x| - |x| - sum sgn(B_k - x) dB_k - L_t^x`, with the kernel local
/// time estimate. Vanishes as `(dt, eps) -> 0`.
pub fn classical_tanaka_residual(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    t_index: usize,
) -> Result<f64> {
    path.check_index(t_index)?;
    let b = path.values();
    let integrand: Vec<f64> = b[..t_index].iter().map(|&v| sgn(v - x)).collect();
    let ito = ito_left_sum(&integrand, path, t_index)?;
    let local = local_time_kernel(path, t_index, x, m)?;
    Ok((b[t_index] - x).abs() - x.abs() - ito - local)
}

/// A smooth test function with a closed-form derivative.
pub trait TestFunction: Sync {
    fn value(&self, y: f64) -> f64;
    fn deriv(&self, y: f64) -> f64;
    /// Interval outside which the function is negligible, if any.
    fn support(&self) -> Option<(f64, f64)>;
}

/// `height * exp(-((y - center) / width)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl GaussianBump {
    pub fn standard() -> Self {
        Self {
            center: 0.0,
            width: 1.0,
            height: 1.0,
        }
    }
}

impl TestFunction for GaussianBump {
    fn value(&self, y: f64) -> f64 {
        let z = (y - self.center) / self.width;
        self.height * (-z * z).exp()
    }

    fn deriv(&self, y: f64) -> f64 {
        let z = (y - self.center) / self.width;
        -2.0 * z / self.width * self.height * (-z * z).exp()
    }

    fn support(&self) -> Option<(f64, f64)> {
        let r = 6.5 * self.width;
        Some((self.center - r, self.center + r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _: f64) -> f64 {
        self.0
    }

    fn deriv(&self, _: f64) -> f64 {
        0.0
    }

    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Histogram of pair differences `B_s - B_r` (`r < s < t_index`) with
/// moments about each bin center, from which `alpha'_{t,eps}(y)` can be
/// read at any level without another pass over the pairs.
struct PairDifferences {
    origin: f64,
    width: f64,
    inv_eps: f64,
    mass: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    weight: f64,
    span: f64,
}

impl PairDifferences {
    /// Builds the histogram and, in the same loop, `sum g'(B_s - B_r) dt^2`.
    fn build(
        path: &BrownianPath,
        m: &Mollifier,
        t_index: usize,
        g: &dyn TestFunction,
    ) -> (Self, f64) {
        let b = &path.values()[..t_index];
        let dt2 = path.dt() * path.dt();
        let (lo, hi) = path.range(t_index.saturating_sub(1));
        let span = hi - lo;
        let width = m.epsilon() / 8.0;
        let origin = -span - 2.0 * width;
        let nbins = ((2.0 * span + 4.0 * width) / width).ceil() as usize + 1;
        let mut h = Self {
            origin,
            width,
            inv_eps: 1.0 / m.epsilon(),
            mass: vec![0.0; nbins],
            first: vec![0.0; nbins],
            second: vec![0.0; nbins],
            weight: dt2,
            span,
        };
        let mut direct = 0.0;
        for s in 1..b.len() {
            let bs = b[s];
            let mut row = 0.0;
            for &br in &b[..s] {
                let d = bs - br;
                row += g.deriv(d);
                let j = ((d - h.origin) / width).floor() as usize;
                let off = (d - h.center(j)) * h.inv_eps;
                h.mass[j] += 1.0;
                h.first[j] += off;
                h.second[j] += off * off;
            }
            direct += row;
        }
        (h, direct * dt2)
    }

    fn center(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.width
    }

    /// `alpha'_{t,eps}(y) = -sum f_eps'(B_s - B_r - y) dt^2`, with `f_eps'`
    /// expanded to second order about each bin center.
    fn alpha_at(&self, y: f64) -> f64 {
        let reach = KERNEL_CUTOFF / self.inv_eps;
        let lo = ((y - reach - self.origin) / self.width).floor().max(0.0) as usize;
        let hi = (((y + reach - self.origin) / self.width).floor().max(0.0) as usize)
            .min(self.mass.len() - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            if self.mass[j] == 0.0 {
                continue;
            }
            let a = (self.center(j) - y) * self.inv_eps;
            let phi = (-a * a).exp();
            acc += phi
                * (-2.0 * a * self.mass[j]
                    + (4.0 * a * a - 2.0) * self.first[j]
                    + (6.0 - 4.0 * a * a) * a * self.second[j]);
        }
        -acc * FRAC_1_SQRT_PI * self.inv_eps * self.inv_eps * self.weight
    }
}

/// Compares the two sides of the weak-derivative identity
/// `int int g'(B_s - B_r) dr ds = - int g(y) alpha'_t(y) dy` on one path.
///
/// * `direct` evaluates `g'` at every pair difference (quadratic loop).
/// * `paired` tabulates `alpha'_{t,eps}(y)` on a level grid of spacing
///   `eps / 2` and sums `-g(y) alpha'(y) dy`. The level function is read off
///   a pair-difference histogram, so this side never evaluates `g'`.
///
/// Pairs follow [`silt_derivative`]: `s < t_index`, `r < s`.
pub fn weak_derivative_check(
    path: &BrownianPath,
    g: &dyn TestFunction,
    m: &Mollifier,
    t_index: usize,
) -> Result<(f64, f64)> {
    path.check_index(t_index)?;
    warn_if_coarse(path, m);
    if t_index < 2 {
        return Ok((0.0, 0.0));
    }
    let (pairs, direct) = PairDifferences::build(path, m, t_index, g);

    let reach = KERNEL_CUTOFF * m.epsilon();
    let (mut ylo, mut yhi) = (-pairs.span - reach, pairs.span + reach);
    if let Some((slo, shi)) = g.support() {
        ylo = ylo.max(slo);
        yhi = yhi.min(shi);
    }
    if ylo >= yhi {
        return Ok((direct, 0.0));
    }
    let dy = 0.5 * m.epsilon();
    let n_levels = ((yhi - ylo) / dy).ceil() as usize;
    let mut paired = 0.0;
    for i in 0..=n_levels {
        let y = ylo + i as f64 * dy;
        let gy = g.value(y);
        if gy != 0.0 {
            paired -= gy * pairs.alpha_at(y) * dy;
        }
    }
    Ok((direct, paired))
}
