//! Study configuration: a flat TOML file whose keys are the field names of
//! [`ExperimentConfig`]. Missing keys fall back to the study's preset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_time::EstimatorMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    VerifyTanaka,
    ClassicalTanaka,
    ConvergeEps,
    ConvergeDt,
    ContinuityX,
    ContinuityEps,
    TailLemma,
    WeakDerivative,
}

impl Study {
    pub const ALL: [Study; 8] = [
        Study::VerifyTanaka,
        Study::ClassicalTanaka,
        Study::ConvergeEps,
        Study::ConvergeDt,
        Study::ContinuityX,
        Study::ContinuityEps,
        Study::TailLemma,
        Study::WeakDerivative,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Study::VerifyTanaka => "verify-tanaka",
            Study::ClassicalTanaka => "classical-tanaka",
            Study::ConvergeEps => "converge-eps",
            Study::ConvergeDt => "converge-dt",
            Study::ContinuityX => "continuity-x",
            Study::ContinuityEps => "continuity-eps",
            Study::TailLemma => "tail-lemma",
            Study::WeakDerivative => "weak-derivative",
        }
    }
}

impl std::fmt::Display for Study {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::config("study", format!("unknown study `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Reference,
    Fast,
}

impl ModeName {
    pub fn estimator(&self) -> EstimatorMode {
        match self {
            ModeName::Reference => EstimatorMode::Reference,
            ModeName::Fast => EstimatorMode::fast(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub study: Study,
    /// Horizon.
    pub t: f64,
    pub x_values: Vec<f64>,
    /// Strictly decreasing bandwidths.
    pub eps_schedule: Vec<f64>,
    /// Strictly decreasing time steps; each must divide `t`.
    pub dt_schedule: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub mode: ModeName,
    pub out_dir: PathBuf,
    /// Thresholds `M` of the tail study.
    pub tail_m: Vec<f64>,
}

/// On-disk form; every key optional so that presets fill the gaps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    study: Option<Study>,
    t: Option<f64>,
    x_values: Option<Vec<f64>>,
    eps_schedule: Option<Vec<f64>>,
    dt_schedule: Option<Vec<f64>>,
    n_paths: Option<usize>,
    master_seed: Option<u64>,
    mode: Option<ModeName>,
    out_dir: Option<PathBuf>,
    tail_m: Option<Vec<f64>>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    /// Desk-scale defaults for each study.
    pub fn preset(study: Study) -> Self {
        let base = Self {
            study,
            t: 1.0,
            x_values: vec![0.5],
            eps_schedule: vec![0.05],
            dt_schedule: vec![1e-4],
            n_paths: 1000,
            master_seed: DEFAULT_SEED,
            mode: ModeName::Fast,
            out_dir: PathBuf::from(format!("out/{}", study.name())),
            tail_m: vec![1.0, 2.0, 3.0],
        };
        match study {
            Study::VerifyTanaka => Self {
                x_values: vec![-0.5, 0.0, 0.5],
                eps_schedule: vec![0.2, 0.05, 0.02],
                ..base
            },
            Study::ClassicalTanaka => Self {
                x_values: vec![0.3],
                eps_schedule: vec![0.2, 0.1, 0.05, 0.02],
                ..base
            },
            Study::ConvergeEps => Self {
                eps_schedule: vec![0.2, 0.1, 0.05, 0.02],
                n_paths: 400,
                ..base
            },
            Study::ConvergeDt => Self {
                dt_schedule: vec![1e-3, 1e-4],
                n_paths: 200,
                ..base
            },
            Study::ContinuityX => Self {
                x_values: vec![0.5, 0.55, 0.6, 0.7, 0.9],
                dt_schedule: vec![1e-3],
                n_paths: 4000,
                ..base
            },
            Study::ContinuityEps => Self {
                eps_schedule: vec![0.09, 0.07, 0.06, 0.055, 0.05],
                dt_schedule: vec![1e-3],
                n_paths: 4000,
                ..base
            },
            Study::TailLemma => Self {
                dt_schedule: vec![1e-3],
                n_paths: 4000,
                ..base
            },
            Study::WeakDerivative => Self {
                x_values: vec![0.0],
                eps_schedule: vec![0.02],
                n_paths: 100,
                ..base
            },
        }
    }

    /// Reads a config file. `default_study` applies when the file has no
    /// `study` key.
    pub fn from_file(path: &Path, default_study: Study) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, default_study)
    }

    pub fn from_toml(text: &str, default_study: Study) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| {
            // name the key on the line where the error starts
            let field = e
                .span()
                .and_then(|sp| {
                    let line_start = text[..sp.start].rfind('\n').map_or(0, |i| i + 1);
                    text[line_start..].lines().next()
                })
                .and_then(|line| line.split('=').next())
                .map(|k| k.trim().to_string())
                .filter(|k| !k.is_empty())
                .unwrap_or_else(|| "<file>".to_string());
            Error::config(field, e.message().to_string())
        })?;
        let study = file.study.unwrap_or(default_study);
        let p = Self::preset(study);
        let cfg = Self {
            study,
            t: file.t.unwrap_or(p.t),
            x_values: file.x_values.unwrap_or(p.x_values),
            eps_schedule: file.eps_schedule.unwrap_or(p.eps_schedule),
            dt_schedule: file.dt_schedule.unwrap_or(p.dt_schedule),
            n_paths: file.n_paths.unwrap_or(p.n_paths),
            master_seed: file.master_seed.unwrap_or(p.master_seed),
            mode: file.mode.unwrap_or(p.mode),
            out_dir: file.out_dir.unwrap_or(p.out_dir),
            tail_m: file.tail_m.unwrap_or(p.tail_m),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Number of grid steps for time step `dt`.
    pub fn n_steps(&self, dt: f64) -> usize {
        (self.t / dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::config(
                "t",
                format!("horizon must be positive, got {}", self.t),
            ));
        }
        if self.x_values.is_empty() {
            return Err(Error::config("x_values", "at least one level is required"));
        }
        if let Some(x) = self.x_values.iter().find(|x| !x.is_finite()) {
            return Err(Error::config("x_values", format!("non-finite level {x}")));
        }
        check_schedule("eps_schedule", &self.eps_schedule)?;
        check_schedule("dt_schedule", &self.dt_schedule)?;
        for &dt in &self.dt_schedule {
            let n = self.n_steps(dt);
            if n == 0 || (n as f64 * dt - self.t).abs() > 1e-9 * self.t {
                return Err(Error::config(
                    "dt_schedule",
                    format!("time step {dt} does not divide the horizon {}", self.t),
                ));
            }
        }
        if self.n_paths < 2 {
            return Err(Error::config(
                "n_paths",
                format!("at least 2 replicates are required, got {}", self.n_paths),
            ));
        }
        if self.tail_m.is_empty()
            || self.tail_m.iter().any(|m| !(*m > 0.0 && m.is_finite()))
            || self.tail_m.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                "tail_m",
                "thresholds must be positive and strictly increasing",
            ));
        }
        match self.study {
            Study::ContinuityX => {
                let x0 = self.x_values[0];
                if self.x_values.len() < 4 || self.x_values[1..].contains(&x0) {
                    return Err(Error::config(
                        "x_values",
                        "continuity-x needs a base level and at least three distinct other levels",
                    ));
                }
            }
            Study::ContinuityEps if self.eps_schedule.len() < 4 => {
                return Err(Error::config(
                    "eps_schedule",
                    "continuity-eps needs at least four bandwidths",
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_schedule(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(field, "schedule is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::config(
            field,
            format!("entries must be positive, got {v}"),
        ));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config(field, "schedule must be strictly decreasing"));
    }
    Ok(())
}
