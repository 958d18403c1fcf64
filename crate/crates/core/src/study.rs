//! Study orchestration: replicate fan-out, aggregation, slope fits and
//! pass/fail checks, plus the CSV and JSON artifacts.
//!
//! Every replicate is a pure function of `(master_seed, replicate, config)`.
//! Replicates may run on any number of workers; results are collected in
//! replicate order and reduced with [`pairwise_sum`](crate::stats::pairwise_sum), so the output bytes do
//! not depend on the worker count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Study};
use crate::error::{Error, Result};
use crate::local_time::{moving_level_curve, EstimatorMode};
use crate::mollifier::Mollifier;
use crate::path::{generate_path, BrownianPath};
use crate::rng::RngPolicy;
use crate::stats::{fit_loglog_slope, mean, summarize, SlopeFit, Summary};
use crate::tanaka::{
    classical_tanaka_residual, ito_left_sum, tanaka_report, weak_derivative_check, GaussianBump,
    TanakaForm, TanakaReport,
};

/// Thresholds applied by the studies.
pub mod thresholds {
    /// Residual means must sit within this many standard errors of zero.
    pub const MEAN_SE_MULTIPLE: f64 = 3.0;
    /// Largest classical Tanaka RMS residual accepted at the finest bandwidth.
    pub const CLASSICAL_RMS_CEILING: f64 = 0.05;
    /// Mollified-identity RMS residual must stay below this multiple of `sqrt(dt)`.
    pub const MOLLIFIED_SQRT_DT_MULTIPLE: f64 = 10.0;
    /// Smallest accepted 6th-moment increment slope, in `x` and in `eps`.
    pub const CONTINUITY_MIN_SLOPE: f64 = 1.5;
    /// Tail mass bound at the largest `M`.
    pub const TAIL_DELTA: f64 = 0.01;
    /// Largest accepted relative gap of the weak-derivative identity.
    pub const WEAK_DERIVATIVE_MAX_GAP: f64 = 0.05;
}

/// Time increments of the continuity study, as fractions of `t`.
pub const TIME_INCREMENT_FRACTIONS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

/// One per-replicate, per-parameter row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub parameter: String,
    pub seed: u64,
    pub replicate: u64,
    pub x: f64,
    pub t: f64,
    pub epsilon: f64,
    pub dt: f64,
    /// The quantity aggregated for this parameter.
    pub value: f64,
    /// Present for studies built on the Tanaka report.
    pub report: Option<TanakaReport>,
}

impl ReplicateRow {
    fn from_report(parameter: String, report: TanakaReport) -> Self {
        Self {
            parameter,
            seed: report.seed,
            replicate: report.replicate,
            x: report.x,
            t: report.t,
            epsilon: report.epsilon,
            dt: report.dt,
            value: report.residual,
            report: Some(report),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub parameter: String,
    #[serde(flatten)]
    pub summary: Summary,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    pub name: String,
    pub fit: Option<SlopeFit>,
    /// Lower bound on the slope; `None` for descriptive fits.
    pub min_slope: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            pass: observed <= bound,
        }
    }

    fn below(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            pass: observed < bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub study: Study,
    pub rows: Vec<AggregateRow>,
    pub slopes: Vec<SlopeReport>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn row(&self, parameter: &str) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn slope(&self, name: &str) -> Option<&SlopeReport> {
        self.slopes.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub config: ExperimentConfig,
    /// Replicate-major: all parameters of replicate 0, then replicate 1, ...
    pub replicates: Vec<ReplicateRow>,
    pub report: ConvergenceReport,
}

/// Runs a study on the current rayon pool.
pub fn run_study(config: &ExperimentConfig) -> Result<StudyOutput> {
    config.validate()?;
    let cfg = config;
    let (params, per_replicate) = match cfg.study {
        Study::VerifyTanaka => tanaka_grid(cfg, TanakaForm::Limit)?,
        Study::ConvergeDt => tanaka_grid(cfg, TanakaForm::Mollified)?,
        Study::ClassicalTanaka => classical(cfg)?,
        Study::ConvergeEps => converge_eps(cfg)?,
        Study::ContinuityX => continuity_x(cfg)?,
        Study::ContinuityEps => continuity_eps(cfg)?,
        Study::TailLemma => tail_lemma(cfg)?,
        Study::WeakDerivative => weak_derivative(cfg)?,
    };
    let n_params = params.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_paths); n_params];
    let mut replicates = Vec::with_capacity(cfg.n_paths * n_params);
    for rows in per_replicate {
        debug_assert_eq!(rows.len(), n_params);
        for (col, row) in columns.iter_mut().zip(&rows) {
            col.push(row.value);
        }
        replicates.extend(rows);
    }
    let summaries = columns
        .iter()
        .map(|c| summarize(c))
        .collect::<Result<Vec<_>>>()?;
    let report = judge(cfg, &params, &summaries)?;
    Ok(StudyOutput {
        config: cfg.clone(),
        replicates,
        report,
    })
}

/// Runs a study on a dedicated pool of `threads` workers.
pub fn run_study_with_threads(config: &ExperimentConfig, threads: usize) -> Result<StudyOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_study(config))
}

/// A parameter point: its label and the numbers the checks need.
#[derive(Debug, Clone)]
struct Param {
    label: String,
    x: f64,
    epsilon: f64,
    dt: f64,
    /// Abscissa for slope fits or the swept value.
    abscissa: f64,
    kind: ParamKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ParamKind {
    Plain,
    SpaceIncrement,
    TimeIncrement,
    BandwidthIncrement,
    Direct,
    Paired,
    AbsGap,
    AbsDirect,
    RelGap,
}

type Fanout = (Vec<Param>, Vec<Vec<ReplicateRow>>);

fn fan_out<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<Vec<ReplicateRow>>>
where
    F: Fn(RngPolicy) -> Result<Vec<ReplicateRow>> + Sync,
{
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| f(RngPolicy::new(cfg.master_seed, i)))
        .collect()
}

fn scalar_row(path: &BrownianPath, p: &Param, t: f64, value: f64) -> ReplicateRow {
    ReplicateRow {
        parameter: p.label.clone(),
        seed: path.seed(),
        replicate: path.replicate(),
        x: p.x,
        t,
        epsilon: p.epsilon,
        dt: path.dt(),
        value,
        report: None,
    }
}

fn mollifiers(cfg: &ExperimentConfig) -> Result<Vec<Mollifier>> {
    cfg.eps_schedule
        .iter()
        .map(|&e| Mollifier::new(e))
        .collect()
}

fn mode(cfg: &ExperimentConfig) -> EstimatorMode {
    cfg.mode.estimator()
}

/// Tanaka reports over `x_values x eps_schedule x dt_schedule`.
fn tanaka_grid(cfg: &ExperimentConfig, form: TanakaForm) -> Result<Fanout> {
    let ms = mollifiers(cfg)?;
    let mut params = Vec::new();
    for &dt in &cfg.dt_schedule {
        for &x in &cfg.x_values {
            for m in &ms {
                params.push(Param {
                    label: format!("x={x},eps={},dt={dt}", m.epsilon()),
                    x,
                    epsilon: m.epsilon(),
                    dt,
                    abscissa: m.epsilon(),
                    kind: ParamKind::Plain,
                });
            }
        }
    }
    let rows = fan_out(cfg, |policy| {
        let mut out = Vec::with_capacity(params.len());
        for &dt in &cfg.dt_schedule {
            let n = cfg.n_steps(dt);
            let path = generate_path(policy, n, dt)?;
            for &x in &cfg.x_values {
                for m in &ms {
                    let label = format!("x={x},eps={},dt={dt}", m.epsilon());
                    let r = tanaka_report(&path, x, m, n, mode(cfg), form)?;
                    out.push(ReplicateRow::from_report(label, r));
                }
            }
        }
        Ok(out)
    })?;
    Ok((params, rows))
}

fn classical(cfg: &ExperimentConfig) -> Result<Fanout> {
    let ms = mollifiers(cfg)?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let params: Vec<Param> = cfg
        .x_values
        .iter()
        .flat_map(|&x| {
            ms.iter().map(move |m| Param {
                label: format!("x={x},eps={}", m.epsilon()),
                x,
                epsilon: m.epsilon(),
                dt,
                abscissa: m.epsilon(),
                kind: ParamKind::Plain,
            })
        })
        .collect();
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        params
            .iter()
            .zip(ms.iter().cycle())
            .map(|(p, m)| {
                let r = classical_tanaka_residual(&path, p.x, m, n)?;
                Ok(scalar_row(&path, p, cfg.t, r))
            })
            .collect()
    })?;
    Ok((params, rows))
}

/// `curve_eps(t) - curve_{eps/2}(t)` for each `eps`.
fn converge_eps(cfg: &ExperimentConfig) -> Result<Fanout> {
    let ms = mollifiers(cfg)?;
    let halves = cfg
        .eps_schedule
        .iter()
        .map(|&e| Mollifier::new(0.5 * e))
        .collect::<Result<Vec<_>>>()?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let params: Vec<Param> = cfg
        .x_values
        .iter()
        .flat_map(|&x| {
            ms.iter().map(move |m| Param {
                label: format!("x={x},eps={}", m.epsilon()),
                x,
                epsilon: m.epsilon(),
                dt,
                abscissa: m.epsilon(),
                kind: ParamKind::Plain,
            })
        })
        .collect();
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        params
            .iter()
            .zip(ms.iter().zip(&halves).cycle())
            .map(|(p, (m, h))| {
                let full = moving_level_curve(&path, p.x, m, n, mode(cfg))?.values[n];
                let half = moving_level_curve(&path, p.x, h, n, mode(cfg))?.values[n];
                Ok(scalar_row(&path, p, cfg.t, full - half))
            })
            .collect()
    })?;
    Ok((params, rows))
}

/// Shortest decimal form of `v` rounded to 12 significant digits, so that
/// differences like `0.55 - 0.5` print as `0.05`.
fn tidy(v: f64) -> String {
    format!("{v:.11e}").parse::<f64>().unwrap_or(v).to_string()
}

/// Left-point Itô sums of `curve` up to every index.
fn running_ito(curve: &[f64], path: &BrownianPath) -> Vec<f64> {
    let b = path.values();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(curve.len());
    out.push(0.0);
    for k in 0..curve.len() - 1 {
        acc += curve[k] * (b[k + 1] - b[k]);
        out.push(acc);
    }
    out
}

fn time_increment_params(cfg: &ExperimentConfig, x: f64, eps: f64, dt: f64) -> Vec<Param> {
    TIME_INCREMENT_FRACTIONS
        .iter()
        .map(|f| {
            let lag = f * cfg.t;
            Param {
                label: format!("dtime={}", tidy(lag)),
                x,
                epsilon: eps,
                dt,
                abscissa: lag,
                kind: ParamKind::TimeIncrement,
            }
        })
        .collect()
}

fn time_increment_rows(
    cfg: &ExperimentConfig,
    params: &[Param],
    path: &BrownianPath,
    running: &[f64],
) -> Vec<ReplicateRow> {
    let n = path.n_steps();
    params
        .iter()
        .filter(|p| p.kind == ParamKind::TimeIncrement)
        .map(|p| {
            let lag = ((p.abscissa / path.dt()).round() as usize).min(n);
            scalar_row(path, p, cfg.t, (running[n] - running[n - lag]).powi(6))
        })
        .collect()
}

/// 6th moments of `V(x_i) - V(x_0)` and of `V(t) - V(t - lag)` at `x_0`.
fn continuity_x(cfg: &ExperimentConfig) -> Result<Fanout> {
    let m = Mollifier::new(cfg.eps_schedule[0])?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let x0 = cfg.x_values[0];
    let mut params: Vec<Param> = cfg.x_values[1..]
        .iter()
        .map(|&x| {
            let dx = (x - x0).abs();
            Param {
                label: format!("dx={}", tidy(dx)),
                x,
                epsilon: m.epsilon(),
                dt,
                abscissa: dx,
                kind: ParamKind::SpaceIncrement,
            }
        })
        .collect();
    params.extend(time_increment_params(cfg, x0, m.epsilon(), dt));
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        let base = moving_level_curve(&path, x0, &m, n, mode(cfg))?;
        let running = running_ito(&base.values, &path);
        let v0 = running[n];
        let mut out = Vec::with_capacity(params.len());
        for p in params
            .iter()
            .filter(|p| p.kind == ParamKind::SpaceIncrement)
        {
            let curve = moving_level_curve(&path, p.x, &m, n, mode(cfg))?;
            let v = ito_left_sum(&curve.values, &path, n)?;
            out.push(scalar_row(&path, p, cfg.t, (v - v0).powi(6)));
        }
        out.extend(time_increment_rows(cfg, &params, &path, &running));
        Ok(out)
    })?;
    Ok((params, rows))
}

/// 6th moments of `V(eps_i) - V(eps_base)`, `eps_base` the last entry.
fn continuity_eps(cfg: &ExperimentConfig) -> Result<Fanout> {
    let ms = mollifiers(cfg)?;
    let (base, others) = ms.split_last().expect("validated non-empty");
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let x0 = cfg.x_values[0];
    let mut params: Vec<Param> = others
        .iter()
        .map(|m| {
            let de = m.epsilon() - base.epsilon();
            Param {
                label: format!("deps={}", tidy(de)),
                x: x0,
                epsilon: m.epsilon(),
                dt,
                abscissa: de,
                kind: ParamKind::BandwidthIncrement,
            }
        })
        .collect();
    params.extend(time_increment_params(cfg, x0, base.epsilon(), dt));
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        let base_curve = moving_level_curve(&path, x0, base, n, mode(cfg))?;
        let running = running_ito(&base_curve.values, &path);
        let v0 = running[n];
        let mut out = Vec::with_capacity(params.len());
        for (p, m) in params.iter().zip(others) {
            let curve = moving_level_curve(&path, x0, m, n, mode(cfg))?;
            let v = ito_left_sum(&curve.values, &path, n)?;
            out.push(scalar_row(&path, p, cfg.t, (v - v0).powi(6)));
        }
        out.extend(time_increment_rows(cfg, &params, &path, &running));
        Ok(out)
    })?;
    Ok((params, rows))
}

/// `curve(t)^2 1{|B_t - x| > M}` for each `M`.
fn tail_lemma(cfg: &ExperimentConfig) -> Result<Fanout> {
    let m = Mollifier::new(cfg.eps_schedule[0])?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let params: Vec<Param> = cfg
        .x_values
        .iter()
        .flat_map(|&x| {
            cfg.tail_m.iter().map(move |&big_m| Param {
                label: format!("x={x},M={big_m}"),
                x,
                epsilon: m.epsilon(),
                dt,
                abscissa: big_m,
                kind: ParamKind::Plain,
            })
        })
        .collect();
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        let mut out = Vec::with_capacity(params.len());
        for &x in &cfg.x_values {
            let curve = moving_level_curve(&path, x, &m, n, mode(cfg))?;
            let l = curve.values[n];
            let level = path.values()[n] - x;
            for p in params.iter().filter(|p| p.x == x) {
                let v = if level.abs() > p.abscissa { l * l } else { 0.0 };
                out.push(scalar_row(&path, p, cfg.t, v));
            }
        }
        Ok(out)
    })?;
    Ok((params, rows))
}

fn weak_derivative(cfg: &ExperimentConfig) -> Result<Fanout> {
    let m = Mollifier::new(cfg.eps_schedule[0])?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let g = GaussianBump::standard();
    let params: Vec<Param> = [
        ("direct", ParamKind::Direct),
        ("paired", ParamKind::Paired),
        ("abs_gap", ParamKind::AbsGap),
        ("abs_direct", ParamKind::AbsDirect),
        ("rel_gap", ParamKind::RelGap),
    ]
    .into_iter()
    .map(|(label, kind)| Param {
        label: label.to_string(),
        x: 0.0,
        epsilon: m.epsilon(),
        dt,
        abscissa: 0.0,
        kind,
    })
    .collect();
    let rows = fan_out(cfg, |policy| {
        let path = generate_path(policy, n, dt)?;
        let (direct, paired) = weak_derivative_check(&path, &g, &m, n)?;
        let gap = (direct - paired).abs();
        Ok(params
            .iter()
            .map(|p| {
                let v = match p.kind {
                    ParamKind::Direct => direct,
                    ParamKind::Paired => paired,
                    ParamKind::AbsGap => gap,
                    ParamKind::AbsDirect => direct.abs(),
                    _ => gap / direct.abs().max(f64::MIN_POSITIVE),
                };
                scalar_row(&path, p, cfg.t, v)
            })
            .collect())
    })?;
    Ok((params, rows))
}

/// Applies the study's thresholds to the aggregated rows.
fn judge(
    cfg: &ExperimentConfig,
    params: &[Param],
    summaries: &[Summary],
) -> Result<ConvergenceReport> {
    use thresholds::*;

    let mut pass = vec![true; params.len()];
    let mut slopes = Vec::new();
    let mut checks = Vec::new();
    let idx = |pred: &dyn Fn(&Param) -> bool| -> Vec<usize> {
        params
            .iter()
            .enumerate()
            .filter(|(_, p)| pred(p))
            .map(|(i, _)| i)
            .collect()
    };
    let not_worse = |a: &Summary, b: &Summary| b.rmse <= a.rmse + a.rmse_stderr.max(b.rmse_stderr);

    match cfg.study {
        Study::VerifyTanaka => {
            for (i, s) in summaries.iter().enumerate() {
                pass[i] = s.mean.abs() <= MEAN_SE_MULTIPLE * s.stderr;
            }
            for &dt in &cfg.dt_schedule {
                for &x in &cfg.x_values {
                    let group = idx(&|p| p.x == x && p.dt == dt);
                    if group.len() >= 2 {
                        let (first, last) = (group[0], group[group.len() - 1]);
                        checks.push(Check::below(
                            format!("rmse_decreases,x={x},dt={dt}"),
                            summaries[last].rmse,
                            summaries[first].rmse,
                        ));
                    }
                }
            }
        }
        Study::ConvergeDt => {
            for (i, s) in summaries.iter().enumerate() {
                pass[i] = s.rmse <= MOLLIFIED_SQRT_DT_MULTIPLE * params[i].dt.sqrt();
            }
            for &x in &cfg.x_values {
                for &eps in &cfg.eps_schedule {
                    let group = idx(&|p| p.x == x && p.epsilon == eps);
                    if group.len() >= 2 {
                        let (first, last) = (group[0], group[group.len() - 1]);
                        checks.push(Check::below(
                            format!("rmse_decreases,x={x},eps={eps}"),
                            summaries[last].rmse,
                            summaries[first].rmse,
                        ));
                    }
                }
            }
        }
        Study::ClassicalTanaka | Study::ConvergeEps => {
            for &x in &cfg.x_values {
                let group = idx(&|p| p.x == x);
                for w in group.windows(2) {
                    pass[w[1]] = not_worse(&summaries[w[0]], &summaries[w[1]]);
                }
                let points: Vec<(f64, f64)> = group
                    .iter()
                    .map(|&i| (params[i].abscissa, summaries[i].rmse))
                    .collect();
                slopes.push(slope_report(format!("rmse_vs_eps,x={x}"), &points, None));
                if cfg.study == Study::ClassicalTanaka {
                    let last = group[group.len() - 1];
                    checks.push(Check::at_most(
                        format!("rmse_finest_eps,x={x}"),
                        summaries[last].rmse,
                        CLASSICAL_RMS_CEILING,
                    ));
                }
            }
        }
        Study::ContinuityX | Study::ContinuityEps => {
            let (kind, name) = if cfg.study == Study::ContinuityX {
                (ParamKind::SpaceIncrement, "moment6_vs_dx")
            } else {
                (ParamKind::BandwidthIncrement, "moment6_vs_deps")
            };
            let points = |k: ParamKind| -> Vec<(f64, f64)> {
                idx(&|p| p.kind == k)
                    .into_iter()
                    .map(|i| (params[i].abscissa, summaries[i].mean))
                    .collect()
            };
            slopes.push(slope_report(
                name.to_string(),
                &points(kind),
                Some(CONTINUITY_MIN_SLOPE),
            ));
            slopes.push(slope_report(
                "moment6_vs_dtime".to_string(),
                &points(ParamKind::TimeIncrement),
                None,
            ));
        }
        Study::TailLemma => {
            for &x in &cfg.x_values {
                let group = idx(&|p| p.x == x);
                for w in group.windows(2) {
                    pass[w[1]] = summaries[w[1]].mean <= summaries[w[0]].mean;
                }
                let last = group[group.len() - 1];
                checks.push(Check::below(
                    format!("tail_mass_largest_m,x={x}"),
                    summaries[last].mean,
                    TAIL_DELTA,
                ));
            }
        }
        Study::WeakDerivative => {
            let find = |k: ParamKind| {
                params
                    .iter()
                    .position(|p| p.kind == k)
                    .expect("built above")
            };
            checks.push(Check::at_most(
                "relative_gap",
                summaries[find(ParamKind::RelGap)].mean,
                WEAK_DERIVATIVE_MAX_GAP,
            ));
        }
    }

    let rows: Vec<AggregateRow> = params
        .iter()
        .zip(summaries)
        .zip(&pass)
        .map(|((p, s), &ok)| AggregateRow {
            parameter: p.label.clone(),
            summary: *s,
            pass: ok,
        })
        .collect();
    let ok = rows.iter().all(|r| r.pass)
        && slopes.iter().all(|s| s.pass)
        && checks.iter().all(|c| c.pass);
    Ok(ConvergenceReport {
        study: cfg.study,
        rows,
        slopes,
        checks,
        pass: ok,
    })
}

fn slope_report(name: String, points: &[(f64, f64)], min_slope: Option<f64>) -> SlopeReport {
    let fit = fit_loglog_slope(points).ok();
    let pass = match (min_slope, &fit) {
        (None, _) => true,
        (Some(lo), Some(f)) => f.slope >= lo,
        (Some(_), None) => false,
    };
    SlopeReport {
        name,
        fit,
        min_slope,
        pass,
    }
}

const TANAKA_COLUMNS: [&str; 14] = [
    "seed",
    "replicate",
    "x",
    "t",
    "epsilon",
    "dt",
    "parameter",
    "alpha_prime",
    "sgn_term",
    "ito_term",
    "sgn_integral",
    "lhs",
    "rhs",
    "residual",
];

const SCALAR_COLUMNS: [&str; 8] = [
    "seed",
    "replicate",
    "x",
    "t",
    "epsilon",
    "dt",
    "parameter",
    "value",
];

pub fn write_replicates<W: Write>(rows: &[ReplicateRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let tanaka = rows.first().is_some_and(|r| r.report.is_some());
    if tanaka {
        wtr.write_record(TANAKA_COLUMNS)?;
    } else {
        wtr.write_record(SCALAR_COLUMNS)?;
    }
    for r in rows {
        let mut rec = vec![
            r.seed.to_string(),
            r.replicate.to_string(),
            r.x.to_string(),
            r.t.to_string(),
            r.epsilon.to_string(),
            r.dt.to_string(),
            r.parameter.clone(),
        ];
        match &r.report {
            Some(t) => rec.extend(
                [
                    t.alpha_prime,
                    t.sgn_term,
                    t.ito_term,
                    t.sgn_integral,
                    t.lhs,
                    t.rhs,
                    t.residual,
                ]
                .iter()
                .map(f64::to_string),
            ),
            None => rec.push(r.value.to_string()),
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("replicates.csv", e))?;
    Ok(())
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "parameter",
        "mean",
        "std",
        "stderr",
        "rmse",
        "ci_lo",
        "ci_hi",
        "pass",
    ])?;
    for r in rows {
        let s = &r.summary;
        wtr.write_record([
            r.parameter.clone(),
            s.mean.to_string(),
            s.std.to_string(),
            s.stderr.to_string(),
            s.rmse.to_string(),
            s.ci_lo.to_string(),
            s.ci_hi.to_string(),
            r.pass.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("aggregate.csv", e))?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    study: Study,
    config: &'a ExperimentConfig,
    rows: &'a [AggregateRow],
    slopes: &'a [SlopeReport],
    checks: &'a [Check],
    pass: bool,
    wall_time_seconds: f64,
}

/// Paths of the three artifacts written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct ArtifactPaths {
    pub replicates: PathBuf,
    pub aggregate: PathBuf,
    pub summary: PathBuf,
}

impl ArtifactPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            replicates: dir.join("replicates.csv"),
            aggregate: dir.join("aggregate.csv"),
            summary: dir.join("summary.json"),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `replicates.csv`, `aggregate.csv` and `summary.json` into `dir`.
pub fn write_outputs(
    output: &StudyOutput,
    dir: &Path,
    wall_time_seconds: f64,
) -> Result<ArtifactPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ArtifactPaths::in_dir(dir);
    write_replicates(&output.replicates, create(&paths.replicates)?)?;
    write_aggregate(&output.report.rows, create(&paths.aggregate)?)?;
    let summary = SummaryJson {
        study: output.report.study,
        config: &output.config,
        rows: &output.report.rows,
        slopes: &output.report.slopes,
        checks: &output.report.checks,
        pass: output.report.pass,
        wall_time_seconds,
    };
    let mut w = create(&paths.summary)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n")
        .map_err(|e| Error::io(&paths.summary, e))?;
    w.flush().map_err(|e| Error::io(&paths.summary, e))?;
    Ok(paths)
}

/// Writes one simulated path, its moving-level curve and the Tanaka report
/// at the horizon, for replicate `replicate` of the config's first grid point.
pub fn simulate(cfg: &ExperimentConfig, replicate: u64, dir: &Path) -> Result<TanakaReport> {
    cfg.validate()?;
    let dt = cfg.dt_schedule[0];
    let n = cfg.n_steps(dt);
    let x = cfg.x_values[0];
    let m = Mollifier::new(cfg.eps_schedule[0])?;
    let path = generate_path(RngPolicy::new(cfg.master_seed, replicate), n, dt)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    path.write_csv(create(&dir.join("path.csv"))?)?;
    let curve = moving_level_curve(&path, x, &m, n, mode(cfg))?;
    curve.write_csv(&path, create(&dir.join("curve.csv"))?)?;
    let report = tanaka_report(&path, x, &m, n, mode(cfg), TanakaForm::Limit)?;
    let row =
        ReplicateRow::from_report(format!("x={x},eps={},dt={dt}", m.epsilon()), report.clone());
    write_replicates(&[row], create(&dir.join("report.csv"))?)?;
    Ok(report)
}

/// Mean of one parameter's values, recomputed from replicate rows.
pub fn column_mean(rows: &[ReplicateRow], parameter: &str) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.parameter == parameter)
        .map(|r| r.value)
        .collect();
    (!vals.is_empty()).then(|| mean(&vals))
}
