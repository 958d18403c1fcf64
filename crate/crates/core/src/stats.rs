//! Order-fixed reductions and the summary statistics used by every study.

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The split points depend only on the
/// length, so the result is independent of how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    pub stderr: f64,
    /// Root mean square of the raw values.
    pub rmse: f64,
    /// Standard error of `rmse`, by the delta method.
    pub rmse_stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn summarize(xs: &[f64]) -> Result<Summary> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, need: 2 });
    }
    let nf = n as f64;
    let mu = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - mu) * (x - mu)).collect();
    let std = (pairwise_sum(&dev) / (nf - 1.0)).sqrt();
    let stderr = std / nf.sqrt();

    let squares: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let ms = mean(&squares);
    let rmse = ms.sqrt();
    let sq_dev: Vec<f64> = squares.iter().map(|s| (s - ms) * (s - ms)).collect();
    let ms_stderr = (pairwise_sum(&sq_dev) / (nf - 1.0)).sqrt() / nf.sqrt();
    let rmse_stderr = if rmse > 0.0 {
        ms_stderr / (2.0 * rmse)
    } else {
        0.0
    };

    Ok(Summary {
        n,
        mean: mu,
        std,
        stderr,
        rmse,
        rmse_stderr,
        ci_lo: mu - Z_99 * stderr,
        ci_hi: mu + Z_99 * stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            got: points.len(),
            need: 3,
        });
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::parameter(
            "points",
            format!("log-log fit needs positive coordinates, got ({x}, {y})"),
        ));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxx = pairwise_sum(&lx.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return Err(Error::parameter("points", "all abscissae coincide"));
    }
    let sxy = pairwise_sum(
        &lx.iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .collect::<Vec<_>>(),
    );
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = pairwise_sum(
        &lx.iter()
            .zip(&ly)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .collect::<Vec<_>>(),
    );
    let dof = (points.len() - 2) as f64;
    Ok(SlopeFit {
        slope,
        stderr: (ssr / dof / sxx).sqrt(),
        intercept,
        points: points.len(),
    })
}
