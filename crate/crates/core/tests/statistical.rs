//! Distributional and cross-validation checks that need many replicates.

use siltlab_core::stats::{fit_loglog_slope, summarize};
use siltlab_core::{
    generate_path, local_time_downcrossing, local_time_downcrossing_corrected,
    local_time_histogram, local_time_kernel, moving_level_curve, silt_derivative, EstimatorMode,
    Mollifier, RngPolicy,
};

#[test]
fn endpoint_variance_is_one() {
    let reps = 100_000;
    let ends: Vec<f64> = (0..reps)
        .map(|i| {
            generate_path(RngPolicy::new(21, i), 10, 0.1)
                .unwrap()
                .values()[10]
        })
        .collect();
    let centered: Vec<f64> = {
        let mu = summarize(&ends).unwrap().mean;
        ends.iter()
            .map(|b| (b - mu) * (b - mu) * reps as f64 / (reps - 1) as f64)
            .collect()
    };
    let s = summarize(&centered).unwrap();
    assert!(
        (s.mean - 1.0).abs() <= 3.0 * s.stderr,
        "variance {} se {}",
        s.mean,
        s.stderr
    );
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn reflected_increments_match_in_law() {
    let increments = |p: &siltlab_core::BrownianPath| -> Vec<f64> {
        (0..p.n_steps()).map(|k| p.increment(k)).collect()
    };
    let reflected: Vec<f64> = (0..200)
        .flat_map(|i| {
            increments(
                &generate_path(RngPolicy::new(22, i), 100, 1e-2)
                    .unwrap()
                    .reflect(),
            )
        })
        .collect();
    let fresh: Vec<f64> = (200..400)
        .flat_map(|i| increments(&generate_path(RngPolicy::new(22, i), 100, 1e-2).unwrap()))
        .collect();
    let (n, m) = (reflected.len() as f64, fresh.len() as f64);
    let d = ks_statistic(reflected, fresh);
    // two-sample critical value at the 0.1% level
    let crit = 1.949 * ((n + m) / (n * m)).sqrt();
    assert!(d < crit, "KS {d} vs {crit}");
}

#[test]
fn downcrossings_agree_with_kernel() {
    let (n, dt, h) = (100_000, 1e-5, 0.01);
    let m = Mollifier::new(0.01).unwrap();
    let (mut kern, mut raw, mut corrected, mut hist) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..100 {
        let p = generate_path(RngPolicy::new(23, i), n, dt).unwrap();
        kern.push(local_time_kernel(&p, n, 0.0, &m).unwrap());
        hist.push(local_time_histogram(&p, n, 0.0, 0.01).unwrap());
        raw.push(local_time_downcrossing(&p, n, 0.0, h).unwrap());
        corrected.push(local_time_downcrossing_corrected(&p, n, 0.0, h).unwrap());
    }
    let mean = |v: &[f64]| summarize(v).unwrap().mean;
    let (k, r, c, hi) = (mean(&kern), mean(&raw), mean(&corrected), mean(&hist));
    assert!(
        (k - c).abs() <= 0.1 * k,
        "kernel {k} corrected downcrossing {c}"
    );
    assert!((k - hi).abs() <= 0.1 * k, "kernel {k} histogram {hi}");
    assert!(
        (c - hi).abs() <= 0.1 * c,
        "corrected downcrossing {c} histogram {hi}"
    );
    // the raw count sees a band widened by 2 * 0.5826 * sqrt(dt)
    let shrink = h / (h + 2.0 * 0.582_597_157_939 * dt.sqrt());
    assert!(
        (k * shrink - r).abs() <= 0.1 * k * shrink,
        "kernel {k} raw downcrossing {r}"
    );
}

#[test]
fn fast_curve_matches_reference_on_fine_grid() {
    let n = 10_000;
    let m = Mollifier::new(0.05).unwrap();
    for i in 0..20 {
        let p = generate_path(RngPolicy::new(24, i), n, 1e-4).unwrap();
        let r = moving_level_curve(&p, 0.3, &m, n, EstimatorMode::Reference)
            .unwrap()
            .values;
        let f = moving_level_curve(&p, 0.3, &m, n, EstimatorMode::fast())
            .unwrap()
            .values;
        let peak = r.iter().cloned().fold(0.0, f64::max);
        let dev = r
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-3 * peak, "path {i}: {dev} vs {peak}");
    }
}

#[test]
fn silt_derivative_at_zero_is_centered() {
    let m = Mollifier::new(0.05).unwrap();
    let vals: Vec<f64> = (0..2000)
        .map(|i| {
            let p = generate_path(RngPolicy::new(25, i), 1000, 1e-3).unwrap();
            silt_derivative(&p, 0.0, &m, 1000, EstimatorMode::fast()).unwrap()
        })
        .collect();
    let s = summarize(&vals).unwrap();
    assert!(
        s.mean.abs() <= 3.0 * s.stderr,
        "mean {} se {}",
        s.mean,
        s.stderr
    );
}

#[test]
fn gaussian_smoothing_of_silt_derivative() {
    // f_eps * alpha'_{eps'} = alpha'_{eps''} with eps''^2 = eps^2 + eps'^2
    let (eps, eps1, x) = (0.1, 0.05, 0.2);
    let outer = Mollifier::new(eps).unwrap();
    let inner = Mollifier::new(eps1).unwrap();
    let joint = Mollifier::new(eps.hypot(eps1)).unwrap();
    let dy = 0.005;
    let (mut gap, mut scale) = (0.0, 0.0);
    for i in 0..10 {
        let p = generate_path(RngPolicy::new(26, i), 1000, 1e-3).unwrap();
        let smoothed: f64 = (-160..=160)
            .map(|k| {
                let y = x + k as f64 * dy;
                outer.eval(y - x)
                    * silt_derivative(&p, y, &inner, 1000, EstimatorMode::fast()).unwrap()
                    * dy
            })
            .sum();
        let direct = silt_derivative(&p, x, &joint, 1000, EstimatorMode::fast()).unwrap();
        gap += (smoothed - direct).abs();
        scale += direct.abs();
    }
    assert!(gap <= 0.05 * scale, "gap {gap} scale {scale}");
}

#[test]
fn level_increments_scale_linearly() {
    let m = Mollifier::new(0.005).unwrap();
    let gaps = [0.02, 0.04, 0.08, 0.16, 0.3];
    let mut sq = vec![Vec::new(); gaps.len()];
    for i in 0..1000 {
        let p = generate_path(RngPolicy::new(27, i), 10_000, 1e-4).unwrap();
        let l0 = local_time_kernel(&p, 10_000, 0.0, &m).unwrap();
        for (g, acc) in gaps.iter().zip(&mut sq) {
            let l = local_time_kernel(&p, 10_000, *g, &m).unwrap();
            acc.push((l - l0) * (l - l0));
        }
    }
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .zip(&sq)
        .map(|(g, v)| (*g, summarize(v).unwrap().mean))
        .collect();
    let fit = fit_loglog_slope(&pts).unwrap();
    assert!(
        (0.7..=1.1).contains(&fit.slope),
        "slope {} +- {}",
        fit.slope,
        fit.stderr
    );
}
