//! Parameter grids over a base experiment.

use anyhow::{anyhow, bail, Result};
use minimax_core::GNConfig;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config_value, ExperimentConfig};

fn default_repeats() -> usize {
    1
}

fn default_max_runs() -> usize {
    10_000
}

/// Values of one grid axis: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    List { values: Vec<f64> },
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    /// One of `lambda`, `step` (or `h`), `sigma`, `gamma`, `eta`, `beta2`,
    /// `epsilon`, `noise_std`.
    pub param: String,
    #[serde(flatten)]
    pub values: AxisValues,
}

const PARAMS: [&str; 9] = ["lambda", "step", "h", "sigma", "gamma", "eta", "beta2", "epsilon", "noise_std"];

impl GridAxis {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !PARAMS.contains(&self.param.as_str()) {
            bail!("grid: unknown parameter `{}` (expected one of {})", self.param, PARAMS.join(", "));
        }
        let pts = match &self.values {
            AxisValues::List { values } => values.clone(),
            AxisValues::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    bail!("grid `{}`: range needs finite start <= stop and step > 0", self.param);
                }
                // computed from the index so no error accumulates
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() {
            bail!("grid `{}` has no values", self.param);
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// An experiment configuration, as accepted by `run`.
    pub base: serde_json::Value,
    pub grid: Vec<GridAxis>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Added to the base seed, one per repeat; defaults to `0..repeats`.
    #[serde(default)]
    pub seed_offsets: Option<Vec<u64>>,
    #[serde(default = "default_max_runs")]
    pub max_runs: usize,
}

/// One grid point after expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub index: usize,
    /// `(param, value)` in axis order.
    pub params: Vec<(String, f64)>,
    pub seed_offset: u64,
    pub config: Result<ExperimentConfig, String>,
}

fn apply(cfg: &mut ExperimentConfig, params: &[(String, f64)]) -> Result<()> {
    let solver = cfg.solver_mut();
    let mut sigma = None;
    for (name, v) in params {
        let v = *v;
        match name.as_str() {
            "lambda" => solver.gn.lambda = v,
            "step" | "h" => solver.gn.step = v,
            "sigma" => sigma = Some(v),
            "gamma" => solver.baseline.gamma = v,
            "eta" => solver.baseline.eta = v,
            "beta2" => solver.adaptive.beta2 = v,
            "epsilon" => solver.adaptive.epsilon = v,
            "noise_std" => solver.noise_std = v,
            other => bail!("unknown parameter `{other}`"),
        }
    }
    // σ fixes h given the (possibly swept) λ
    if let Some(s) = sigma {
        solver.gn = GNConfig::from_sigma(solver.gn.lambda, s)?;
    }
    cfg.validate()
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| anyhow!("sweep spec is not valid JSON: {e}"))?;
        crate::config::from_value(value)
    }

    pub fn offsets(&self) -> Result<Vec<u64>> {
        if self.repeats == 0 {
            bail!("repeats must be at least 1");
        }
        match &self.seed_offsets {
            Some(o) if o.len() != self.repeats => {
                bail!("seed_offsets has {} entries for {} repeats", o.len(), self.repeats)
            }
            Some(o) => Ok(o.clone()),
            None => Ok((0..self.repeats as u64).collect()),
        }
    }

    /// Number of runs the sweep will execute.
    pub fn size(&self) -> Result<usize> {
        if self.grid.is_empty() {
            bail!("sweep grid is empty");
        }
        let mut n = self.offsets()?.len();
        for axis in &self.grid {
            n = n.saturating_mul(axis.points()?.len());
        }
        Ok(n)
    }

    /// Cartesian product in row-major order (last axis fastest, repeats
    /// innermost).
    pub fn expand(&self) -> Result<Vec<SweepRun>> {
        let size = self.size()?;
        if size > self.max_runs {
            bail!("sweep has {size} runs, above max_runs = {}", self.max_runs);
        }
        let base = parse_config_value(self.base.clone()).map_err(|e| anyhow!("base: {e:#}"))?;
        let axes: Vec<Vec<f64>> = self.grid.iter().map(GridAxis::points).collect::<Result<_>>()?;
        let offsets = self.offsets()?;
        let mut runs = Vec::with_capacity(size);
        let mut idx = vec![0usize; axes.len()];
        loop {
            let params: Vec<(String, f64)> =
                self.grid.iter().zip(&idx).zip(&axes).map(|((a, &i), vals)| (a.param.clone(), vals[i])).collect();
            for &off in &offsets {
                let mut cfg = base.clone();
                cfg.set_seed(base.seed().wrapping_add(off));
                let config = apply(&mut cfg, &params).map(|_| cfg).map_err(|e| format!("{e:#}"));
                runs.push(SweepRun { index: runs.len(), params: params.clone(), seed_offset: off, config });
            }
            // odometer increment
            let mut k = axes.len();
            loop {
                if k == 0 {
                    return Ok(runs);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}
