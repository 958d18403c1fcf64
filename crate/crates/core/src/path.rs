//! Discrete Brownian sample paths on a uniform time grid.

use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::RngPolicy;

/// A path `values[k] = B(k * dt)` started at the origin.
///
/// Paths are immutable once built; every transform returns a new path.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    values: Vec<f64>,
    seed: u64,
    replicate: u64,
}

impl BrownianPath {
    /// Wraps explicit levels, e.g. a deterministic test path.
    pub fn from_values(values: Vec<f64>, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        match values.first() {
            None => {
                return Err(Error::parameter(
                    "values",
                    "a path needs at least one level",
                ))
            }
            Some(&v0) if v0 != 0.0 => {
                return Err(Error::parameter(
                    "values",
                    format!("path must start at 0, got {v0}"),
                ))
            }
            _ => {}
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::parameter(
                "values",
                format!("non-finite level {bad}"),
            ));
        }
        Ok(Self {
            dt,
            values,
            seed: 0,
            replicate: 0,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// `B_{k+1} - B_k`.
    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index > self.n_steps() {
            Err(Error::IndexOutOfRange {
                index,
                n_steps: self.n_steps(),
            })
        } else {
            Ok(())
        }
    }

    /// Smallest and largest level visited on `values[0..=up_to]`.
    pub fn range(&self, up_to: usize) -> (f64, f64) {
        self.values[..=up_to]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// The path restricted to `[0, up_to * dt]`.
    pub fn prefix(&self, up_to: usize) -> Result<Self> {
        self.check_index(up_to)?;
        Ok(Self {
            values: self.values[..=up_to].to_vec(),
            ..self.clone()
        })
    }

    /// The time-reversed increment path `u -> B_s - B_{s-u}` on `[0, s]`.
    pub fn reverse_from(&self, s_index: usize) -> Result<Self> {
        self.check_index(s_index)?;
        let b_s = self.values[s_index];
        let values = (0..=s_index)
            .map(|k| b_s - self.values[s_index - k])
            .collect();
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// The mirrored path `-B`.
    pub fn reflect(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    /// Writes `step,time,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["step", "time", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            wtr.write_record([k.to_string(), self.time(k).to_string(), v.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(
            "dt",
            format!("time step must be positive, got {dt}"),
        ))
    }
}

/// Samples a path with i.i.d. `N(0, dt)` increments from the replicate's
/// stream. Bit-identical for equal `(policy, n_steps, dt)`.
pub fn generate_path(policy: RngPolicy, n_steps: usize, dt: f64) -> Result<BrownianPath> {
    check_dt(dt)?;
    if n_steps == 0 {
        return Err(Error::parameter("n_steps", "at least one step is required"));
    }
    let sd = dt.sqrt();
    let mut stream = policy.stream();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut level = 0.0;
    values.push(level);
    for _ in 0..n_steps {
        level += sd * stream.next_normal();
        values.push(level);
    }
    Ok(BrownianPath {
        dt,
        values,
        seed: policy.master_seed,
        replicate: policy.replicate_index,
    })
}
