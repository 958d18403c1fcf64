//! Local time estimators.
//!
//! * [`local_time_kernel`]: smoothed occupation integral at a fixed level.
//! * [`local_time_downcrossing`]: Lévy downcrossing count, used as an
//!   independent cross-check.
//! * [`local_time_histogram`]: occupation histogram density.
//! * [`moving_level_curve`]: the running estimate of `L_s^{B_s - x}`,
//!   `sum_{u<s} f_eps(B_s - B_u - x) dt`, either by the quadratic double loop
//!   or by a binned sweep.
//!
//! The binned sweep keeps, per bin of width `h`, the occupied time and its
//! first two moments about the bin center. The kernel is then expanded to
//! second order around each center, so the truncation error is third order
//! in `h / eps`. Kernel values on consecutive bins follow a two-term
//! multiplicative recurrence, which leaves one `exp` per bin window instead
//! of one per bin.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mollifier::{Mollifier, FRAC_1_SQRT_PI, KERNEL_CUTOFF};
use crate::path::BrownianPath;

/// Largest admissible fast-mode bin width, as a fraction of `epsilon`.
pub const MAX_BIN_FRACTION: f64 = 0.25;
/// Bin width used by [`EstimatorMode::fast`], as a fraction of `epsilon`.
pub const DEFAULT_BIN_FRACTION: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorMode {
    /// Quadratic double loop over all time pairs.
    Reference,
    /// Binned sweep; `None` selects `DEFAULT_BIN_FRACTION * epsilon`.
    Fast { bin_width: Option<f64> },
}

impl EstimatorMode {
    pub const fn fast() -> Self {
        EstimatorMode::Fast { bin_width: None }
    }

    pub fn tag(&self) -> EstimatorTag {
        match self {
            EstimatorMode::Reference => EstimatorTag::KernelReference,
            EstimatorMode::Fast { .. } => EstimatorTag::HistogramFast,
        }
    }

    /// The concrete bin width for bandwidth `m`, or `None` in reference mode.
    pub fn bin_width(&self, m: &Mollifier) -> Result<Option<f64>> {
        match *self {
            EstimatorMode::Reference => Ok(None),
            EstimatorMode::Fast { bin_width: None } => Ok(Some(DEFAULT_BIN_FRACTION * m.epsilon())),
            EstimatorMode::Fast { bin_width: Some(h) } => {
                if h.is_nan() || h <= 0.0 {
                    Err(Error::config(
                        "bin_width",
                        format!("must be positive, got {h}"),
                    ))
                } else if h > MAX_BIN_FRACTION * m.epsilon() {
                    Err(Error::config(
                        "bin_width",
                        format!(
                            "{h} exceeds {MAX_BIN_FRACTION} * epsilon = {}",
                            MAX_BIN_FRACTION * m.epsilon()
                        ),
                    ))
                } else {
                    Ok(Some(h))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorTag {
    KernelReference,
    HistogramFast,
}

impl std::fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorTag::KernelReference => "kernel-reference",
            EstimatorTag::HistogramFast => "histogram-fast",
        })
    }
}

static COARSE_WARNED: AtomicBool = AtomicBool::new(false);

/// Warns (once per process) when the bandwidth is below the typical
/// increment, where kernel estimates are dominated by grid noise.
pub(crate) fn warn_if_coarse(path: &BrownianPath, m: &Mollifier) {
    if m.epsilon() < path.dt().sqrt() && !COARSE_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "epsilon = {} is below sqrt(dt) = {}; kernel estimates are noise dominated",
            m.epsilon(),
            path.dt().sqrt()
        );
    }
}

/// Occupation measure of a path prefix on bins `[origin + k h, origin + (k+1) h)`.
///
/// Each grid step contributes `dt` to the bin holding its left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationHistogram {
    bin_width: f64,
    origin: f64,
    dt: f64,
    first_bin: i64,
    counts: Vec<u64>,
    steps: u64,
}

impl OccupationHistogram {
    pub fn new(bin_width: f64, origin: f64, dt: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::parameter(
                "bin_width",
                format!("must be positive, got {bin_width}"),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::parameter(
                "dt",
                format!("must be positive, got {dt}"),
            ));
        }
        if !origin.is_finite() {
            return Err(Error::parameter("origin", "must be finite"));
        }
        Ok(Self {
            bin_width,
            origin,
            dt,
            first_bin: 0,
            counts: Vec::new(),
            steps: 0,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn bin_of(&self, level: f64) -> i64 {
        ((level - self.origin) / self.bin_width).floor() as i64
    }

    pub fn center(&self, bin: i64) -> f64 {
        self.origin + (bin as f64 + 0.5) * self.bin_width
    }

    /// Records one grid step spent at `level`.
    pub fn push(&mut self, level: f64) {
        let bin = self.bin_of(level);
        if self.counts.is_empty() {
            self.first_bin = bin;
            self.counts.push(0);
        } else if bin < self.first_bin {
            let grow = (self.first_bin - bin) as usize;
            self.counts.splice(0..0, std::iter::repeat_n(0, grow));
            self.first_bin = bin;
        } else if bin >= self.first_bin + self.counts.len() as i64 {
            self.counts.resize((bin - self.first_bin) as usize + 1, 0);
        }
        self.counts[(bin - self.first_bin) as usize] += 1;
        self.steps += 1;
    }

    /// Occupied time in `bin`.
    pub fn mass(&self, bin: i64) -> f64 {
        let offset = bin - self.first_bin;
        if offset < 0 || offset >= self.counts.len() as i64 {
            0.0
        } else {
            self.counts[offset as usize] as f64 * self.dt
        }
    }

    /// `(bin index, occupied time)` for every stored bin, in index order.
    pub fn masses(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.first_bin + i as i64, c as f64 * self.dt))
    }

    pub fn total_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Histogram density at `level`: occupied time per unit level.
    pub fn density_at(&self, level: f64) -> f64 {
        self.mass(self.bin_of(level)) / self.bin_width
    }

    /// `sum_bins g(center) * mass`, the binned side of the occupation formula.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.masses()
            .map(|(bin, mass)| g(self.center(bin)) * mass)
            .sum()
    }
}

/// Occupation histogram of `values[0..up_to]` with bin boundaries on the
/// multiples of `bin_width`.
pub fn occupation_histogram(
    path: &BrownianPath,
    up_to: usize,
    bin_width: f64,
) -> Result<OccupationHistogram> {
    path.check_index(up_to)?;
    let mut hist = OccupationHistogram::new(bin_width, 0.0, path.dt())?;
    for &v in &path.values()[..up_to] {
        hist.push(v);
    }
    Ok(hist)
}

/// Histogram local time at `level`, using a bin centered on the level.
pub fn local_time_histogram(
    path: &BrownianPath,
    up_to: usize,
    level: f64,
    bin_width: f64,
) -> Result<f64> {
    path.check_index(up_to)?;
    let mut hist = OccupationHistogram::new(bin_width, level - 0.5 * bin_width, path.dt())?;
    for &v in &path.values()[..up_to] {
        hist.push(v);
    }
    Ok(hist.density_at(level))
}

/// `sum_{k<up_to} f_eps(B_k - level) dt`.
pub fn local_time_kernel(
    path: &BrownianPath,
    up_to: usize,
    level: f64,
    m: &Mollifier,
) -> Result<f64> {
    path.check_index(up_to)?;
    warn_if_coarse(path, m);
    let sum: f64 = path.values()[..up_to]
        .iter()
        .map(|&b| m.eval(b - level))
        .sum();
    Ok(sum * path.dt())
}

/// `-zeta(1/2) / sqrt(2 pi)`: a Brownian path sampled every `dt` overshoots
/// a barrier by this many `sqrt(dt)` on average before the crossing is seen.
pub const DISCRETE_MONITORING_SHIFT: f64 = 0.582_597_157_939_010_7;

fn count_downcrossings(
    path: &BrownianPath,
    up_to: usize,
    level: f64,
    half_width: f64,
) -> Result<u64> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::parameter(
            "half_width",
            format!("must be positive, got {half_width}"),
        ));
    }
    path.check_index(up_to)?;
    let upper = level + half_width;
    let mut armed = false;
    let mut crossings = 0u64;
    for &b in &path.values()[..=up_to] {
        if armed {
            if b <= level {
                crossings += 1;
                armed = false;
            }
        } else if b >= upper {
            armed = true;
        }
    }
    Ok(crossings)
}

/// `2 * half_width * D`, where `D` counts passages of `values[0..=up_to]`
/// from at or above `level + half_width` down to at or below `level`.
///
/// On a sampled Brownian path this undercounts: the grid sees only the
/// crossings of a band about `2 * 0.58 * sqrt(dt)` wider. See
/// [`local_time_downcrossing_corrected`].
pub fn local_time_downcrossing(
    path: &BrownianPath,
    up_to: usize,
    level: f64,
    half_width: f64,
) -> Result<f64> {
    let d = count_downcrossings(path, up_to, level, half_width)?;
    Ok(2.0 * half_width * d as f64)
}

/// Downcrossing estimate normalized by the effective band width
/// `half_width + 2 * DISCRETE_MONITORING_SHIFT * sigma`, where `sigma` is
/// the root mean square grid increment of `values[0..=up_to]`.
pub fn local_time_downcrossing_corrected(
    path: &BrownianPath,
    up_to: usize,
    level: f64,
    half_width: f64,
) -> Result<f64> {
    let d = count_downcrossings(path, up_to, level, half_width)?;
    if up_to == 0 {
        return Ok(0.0);
    }
    let b = &path.values()[..=up_to];
    let qv: f64 = b.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    let sigma = (qv / up_to as f64).sqrt();
    Ok(2.0 * (half_width + 2.0 * DISCRETE_MONITORING_SHIFT * sigma) * d as f64)
}

/// Running estimate of `L_s^{B_s - x}` on the grid times `0..=up_to`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingLevelCurve {
    pub x: f64,
    pub epsilon: f64,
    pub values: Vec<f64>,
    pub estimator: EstimatorTag,
}

impl MovingLevelCurve {
    /// Writes `step,time,level,estimate`, where `level = B_s - x`.
    pub fn write_csv<W: Write>(&self, path: &BrownianPath, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["step", "time", "level", "estimate"])?;
        for (s, v) in self.values.iter().enumerate() {
            wtr.write_record([
                s.to_string(),
                path.time(s).to_string(),
                (path.values()[s] - self.x).to_string(),
                v.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// `values[s] = sum_{u<s} f_eps(B_s - B_u - x) dt` for `s = 0..=up_to`.
pub fn moving_level_curve(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    up_to: usize,
    mode: EstimatorMode,
) -> Result<MovingLevelCurve> {
    let sweep = pair_sweep(path, x, m, up_to, mode)?;
    Ok(MovingLevelCurve {
        x,
        epsilon: m.epsilon(),
        values: sweep.curve,
        estimator: mode.tag(),
    })
}

/// Both pair functionals that share one pass over `(s, u < s)`:
/// the moving-level curve and `sum_{s<up_to} sum_{u<s} f_eps'(B_s - B_u - x) dt`.
pub(crate) struct PairSweep {
    pub curve: Vec<f64>,
    pub deriv_sum: f64,
}

pub(crate) fn pair_sweep(
    path: &BrownianPath,
    x: f64,
    m: &Mollifier,
    up_to: usize,
    mode: EstimatorMode,
) -> Result<PairSweep> {
    path.check_index(up_to)?;
    warn_if_coarse(path, m);
    match mode.bin_width(m)? {
        None => Ok(reference_sweep(path, x, m, up_to)),
        Some(h) => Ok(binned_sweep(path, x, m, up_to, h)),
    }
}

fn reference_sweep(path: &BrownianPath, x: f64, m: &Mollifier, up_to: usize) -> PairSweep {
    let b = path.values();
    let eps = m.epsilon();
    let inv_eps = 1.0 / eps;
    let mut curve = Vec::with_capacity(up_to + 1);
    let mut deriv_sum = 0.0;
    for (s, &bs) in b[..=up_to].iter().enumerate() {
        let z = bs - x;
        let mut c0 = 0.0;
        let mut c1 = 0.0;
        for &bu in &b[..s] {
            let a = (z - bu) * inv_eps;
            let g = (-a * a).exp();
            c0 += g;
            c1 -= 2.0 * a * g;
        }
        curve.push(c0 * FRAC_1_SQRT_PI * inv_eps * path.dt());
        if s < up_to {
            deriv_sum += c1 * FRAC_1_SQRT_PI * inv_eps * inv_eps * path.dt();
        }
    }
    PairSweep { curve, deriv_sum }
}

/// Bins with occupied time and scaled first/second moments about the center.
struct MomentBins {
    origin: f64,
    width: f64,
    inv_eps: f64,
    mass: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl MomentBins {
    fn covering(lo: f64, hi: f64, width: f64, eps: f64) -> Self {
        let origin = (lo / width).floor() * width - width;
        let n = ((hi - origin) / width).floor() as usize + 2;
        Self {
            origin,
            width,
            inv_eps: 1.0 / eps,
            mass: vec![0.0; n],
            first: vec![0.0; n],
            second: vec![0.0; n],
        }
    }

    fn len(&self) -> usize {
        self.mass.len()
    }

    fn center(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.width
    }

    /// Bin holding `level`, clamped to the allocated range.
    fn index(&self, level: f64) -> isize {
        ((level - self.origin) / self.width).floor() as isize
    }

    fn push(&mut self, level: f64, weight: f64) {
        let j = self.index(level) as usize;
        let d = (level - self.center(j)) * self.inv_eps;
        self.mass[j] += weight;
        self.first[j] += weight * d;
        self.second[j] += weight * d * d;
    }
}

fn binned_sweep(path: &BrownianPath, x: f64, m: &Mollifier, up_to: usize, width: f64) -> PairSweep {
    let b = path.values();
    let eps = m.epsilon();
    let inv_eps = 1.0 / eps;
    let dt = path.dt();
    let (lo, hi) = path.range(up_to);
    let mut bins = MomentBins::covering(lo, hi, width, eps);
    let last = bins.len() as isize - 1;
    let reach = KERNEL_CUTOFF * eps;
    let eta = width * inv_eps;
    let ratio_step = (-2.0 * eta * eta).exp();

    let mut curve = Vec::with_capacity(up_to + 1);
    let mut deriv_sum = 0.0;
    for (s, &bs) in b[..=up_to].iter().enumerate() {
        let z = bs - x;
        let j_lo = bins.index(z - reach).max(0);
        let j_hi = bins.index(z + reach).min(last);
        let mut c0 = 0.0;
        let mut c1 = 0.0;
        if j_lo <= j_hi && s > 0 {
            let j_lo = j_lo as usize;
            let a0 = (z - bins.center(j_lo)) * inv_eps;
            let mut g = (-a0 * a0).exp();
            let mut ratio = (2.0 * a0 * eta - eta * eta).exp();
            for (k, j) in (j_lo..=j_hi as usize).enumerate() {
                let a = a0 - k as f64 * eta;
                let m0 = bins.mass[j];
                let m1 = bins.first[j];
                let m2 = bins.second[j];
                // kernel argument is (z - center) - (B_u - center); expand in the second term
                c0 += g * (m0 + 2.0 * a * m1 + (2.0 * a * a - 1.0) * m2);
                c1 += g * (-2.0 * a * m0 - (4.0 * a * a - 2.0) * m1 + (6.0 - 4.0 * a * a) * a * m2);
                g *= ratio;
                ratio *= ratio_step;
            }
        }
        curve.push(c0 * FRAC_1_SQRT_PI * inv_eps);
        if s < up_to {
            deriv_sum += c1 * FRAC_1_SQRT_PI * inv_eps * inv_eps;
        }
        bins.push(bs, dt);
    }
    PairSweep { curve, deriv_sum }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::generate_path;
    use crate::rng::RngPolicy;
    use proptest::prelude::*;

    fn ramp(n: usize, dt: f64, slope: f64) -> BrownianPath {
        BrownianPath::from_values((0..=n).map(|k| slope * k as f64 * dt).collect(), dt).unwrap()
    }

    fn brownian(rep: u64, n: usize, dt: f64) -> BrownianPath {
        generate_path(RngPolicy::new(2024, rep), n, dt).unwrap()
    }

    #[test]
    fn empty_prefix_histogram() {
        let p = brownian(0, 100, 0.01);
        let h = occupation_histogram(&p, 0, 0.1).unwrap();
        assert_eq!(h.total_time(), 0.0);
        assert_eq!(h.masses().count(), 0);
        assert!(occupation_histogram(&p, 10, 0.0).is_err());
        assert!(occupation_histogram(&p, 101, 0.1).is_err());
    }

    #[test]
    fn ramp_occupation_is_uniform() {
        let dt = 1e-3;
        let p = ramp(1000, dt, 1.0);
        let h = occupation_histogram(&p, 1000, 0.1).unwrap();
        let bins: Vec<_> = h.masses().collect();
        assert_eq!(bins.len(), 10);
        for (k, (bin, mass)) in bins.into_iter().enumerate() {
            assert_eq!(bin, k as i64);
            // the analytic measure is 0.1 per bin; a grid point on a boundary moves one dt
            assert!((mass - 0.1).abs() <= dt + 1e-12, "bin {bin}: {mass}");
        }
    }

    #[test]
    fn histogram_grows_both_ways() {
        let mut h = OccupationHistogram::new(0.5, 0.0, 0.1).unwrap();
        for level in [0.2, -1.3, 2.4, 0.3] {
            h.push(level);
        }
        assert_eq!(h.mass(0), 0.2);
        assert_eq!(h.mass(-3), 0.1);
        assert_eq!(h.mass(4), 0.1);
        assert_eq!(h.mass(17), 0.0);
        assert!((h.total_time() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn occupation_formula_consistency() {
        let p = brownian(3, 10_000, 1e-4);
        let g = |y: f64| (-(y - 0.2) * (y - 0.2)).exp();
        let direct: f64 = p.values()[..10_000].iter().map(|&b| g(b)).sum::<f64>() * p.dt();
        for bw in [0.01, 0.005] {
            let h = occupation_histogram(&p, 10_000, bw).unwrap();
            let binned = h.integrate(g);
            assert!(((binned - direct) / direct).abs() < 1e-3, "bw={bw}");
        }
    }

    #[test]
    fn kernel_local_time_edge_cases() {
        let p = brownian(4, 1000, 1e-3);
        let m = Mollifier::new(0.05).unwrap();
        assert_eq!(local_time_kernel(&p, 0, 0.0, &m).unwrap(), 0.0);
        let mut prev = 0.0;
        for up_to in (0..=1000).step_by(50) {
            let l = local_time_kernel(&p, up_to, 0.1, &m).unwrap();
            assert!(l >= prev);
            prev = l;
        }
        assert!(local_time_kernel(&p, 1001, 0.0, &m).is_err());
    }

    #[test]
    fn triangle_path_local_time() {
        // 0 -> 1 -> 0 with unit slopes: two crossings of level 0.5, L = 2
        let dt = 1e-5;
        let n = 200_000;
        let values = (0..=n)
            .map(|k| {
                let t = k as f64 * dt;
                if t <= 1.0 {
                    t
                } else {
                    2.0 - t
                }
            })
            .collect();
        let p = BrownianPath::from_values(values, dt).unwrap();
        let m = Mollifier::new(0.01).unwrap();
        let l = local_time_kernel(&p, n, 0.5, &m).unwrap();
        assert!((l - 2.0).abs() < 0.02, "{l}");
    }

    #[test]
    fn downcrossing_counts() {
        let up = ramp(1000, 1e-3, 1.0);
        let down = ramp(1000, 1e-3, -1.0);
        assert_eq!(local_time_downcrossing(&up, 1000, 0.5, 0.01).unwrap(), 0.0);
        assert!((local_time_downcrossing(&down, 1000, -0.5, 0.01).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(local_time_downcrossing(&down, 0, -0.5, 0.01).unwrap(), 0.0);
        assert!(local_time_downcrossing(&down, 10, 0.0, 0.0).is_err());
        assert!(local_time_downcrossing_corrected(&down, 10, 0.0, -1.0).is_err());
        assert_eq!(
            local_time_downcrossing_corrected(&down, 0, -0.5, 0.01).unwrap(),
            0.0
        );
        // a ramp moves dt per step, so the band widens by 2 * shift * dt
        let c = local_time_downcrossing_corrected(&down, 1000, -0.5, 0.01).unwrap();
        assert!((c - 2.0 * (0.01 + 2.0 * DISCRETE_MONITORING_SHIFT * 1e-3)).abs() < 1e-15);
    }

    #[test]
    fn monitoring_shift_constant() {
        // -zeta(1/2) = 1.4603545088095868...
        let expected = 1.460_354_508_809_586_8 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((DISCRETE_MONITORING_SHIFT - expected).abs() < 1e-15);
    }

    #[test]
    fn fast_mode_rejects_wide_bins() {
        let p = brownian(5, 100, 1e-3);
        let m = Mollifier::new(0.04).unwrap();
        let err = moving_level_curve(
            &p,
            0.0,
            &m,
            100,
            EstimatorMode::Fast {
                bin_width: Some(0.011),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        assert!(moving_level_curve(
            &p,
            0.0,
            &m,
            100,
            EstimatorMode::Fast {
                bin_width: Some(0.01)
            }
        )
        .is_ok());
    }

    #[test]
    fn moving_curve_starts_at_zero() {
        let p = brownian(6, 500, 1e-3);
        let m = Mollifier::new(0.05).unwrap();
        for mode in [EstimatorMode::Reference, EstimatorMode::fast()] {
            let c = moving_level_curve(&p, 0.3, &m, 500, mode).unwrap();
            assert_eq!(c.values.len(), 501);
            assert_eq!(c.values[0], 0.0);
            assert!(c.values.iter().all(|&v| v >= 0.0));
            assert_eq!(c.estimator, mode.tag());
        }
    }

    #[test]
    fn fast_curve_tracks_reference() {
        let m = Mollifier::new(0.05).unwrap();
        for rep in 0..4 {
            let p = brownian(rep, 4000, 1e-4);
            for x in [0.0, 0.2] {
                let r = pair_sweep(&p, x, &m, 4000, EstimatorMode::Reference).unwrap();
                for frac in [DEFAULT_BIN_FRACTION, MAX_BIN_FRACTION] {
                    let f = pair_sweep(
                        &p,
                        x,
                        &m,
                        4000,
                        EstimatorMode::Fast {
                            bin_width: Some(frac * m.epsilon()),
                        },
                    )
                    .unwrap();
                    let peak = r.curve.iter().cloned().fold(0.0, f64::max);
                    let dev = r
                        .curve
                        .iter()
                        .zip(&f.curve)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    assert!(
                        dev <= 1e-3 * peak,
                        "rep {rep} x {x} frac {frac}: {dev} vs {peak}"
                    );
                    assert!((r.deriv_sum - f.deriv_sum).abs() < 1e-3 * (1.0 + r.deriv_sum.abs()));
                }
            }
        }
    }

    #[test]
    fn reversed_fixed_level_matches_moving_level() {
        let p = brownian(7, 2000, 1e-4);
        let m = Mollifier::new(0.05).unwrap();
        let x = 0.1;
        let curve = moving_level_curve(&p, x, &m, 2000, EstimatorMode::Reference).unwrap();
        for s in [0, 1, 500, 2000] {
            let rev = p.reverse_from(s).unwrap();
            let fixed = local_time_kernel(&rev, s, x, &m).unwrap();
            // the two sums differ only in the endpoint terms u = 0 and u = s
            let b = p.values();
            let endpoint = if s == 0 {
                0.0
            } else {
                (m.eval(-x) - m.eval(b[s] - x)) * p.dt()
            };
            assert!((fixed - curve.values[s] - endpoint).abs() < 1e-10);
            assert!((fixed - curve.values[s]).abs() <= m.peak() * p.dt());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn histogram_mass_is_conserved(rep in 0u64..1000, up_to in 0usize..2000, bw in 0.001f64..0.5) {
            let p = brownian(rep, 2000, 1e-3);
            let h = occupation_histogram(&p, up_to, bw).unwrap();
            let total: f64 = h.masses().map(|(_, m)| m).sum();
            let expected = up_to as f64 * p.dt();
            prop_assert!((total - expected).abs() <= 1e-12 * expected.max(1e-300));
            prop_assert!(h.masses().all(|(_, m)| m >= 0.0));
            prop_assert!((h.total_time() - expected).abs() <= 1e-15 * expected.max(1.0));
        }
    }
}
