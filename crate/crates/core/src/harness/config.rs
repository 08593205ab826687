use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simgen::CardinalParams;

/// Which per-market statistics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFlags {
    pub da_efficient: bool,
    pub seq_mbp: bool,
    pub gmbp: bool,
    pub da_eq_ttc: bool,
}

impl Default for MetricFlags {
    fn default() -> Self {
        MetricFlags {
            da_efficient: true,
            seq_mbp: true,
            gmbp: true,
            da_eq_ttc: true,
        }
    }
}

impl MetricFlags {
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.da_efficient, "da_efficient"),
            (self.seq_mbp, "seq_mbp"),
            (self.gmbp, "gmbp"),
            (self.da_eq_ttc, "da_eq_ttc"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

/// A parameter sweep. Cells are the cartesian product of the four value
/// lists, enumerated with `lambda` outermost and `beta` innermost; a cell's
/// position in that order is its index for seed derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    pub lambda_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    pub draws_per_cell: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub metrics: MetricFlags,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

pub const DEFAULT_MASTER_SEED: u64 = 1;

/// `0, 1/steps, ..., 1`.
pub fn unit_grid(steps: u32) -> Vec<f64> {
    (0..=steps).map(|k| f64::from(k) / f64::from(steps)).collect()
}

pub const PRESETS: [&str; 4] = ["smoke", "table3-row1", "table3-qualitative", "table3-full"];

/// Named configurations.
///
/// * `smoke`: a few seconds; small markets, 9 cells.
/// * `table3-row1`: `lambda = alpha = 1`, full 0.05 grid, 100 draws per cell.
/// * `table3-qualitative`: all ten `(lambda, alpha)` rows on a 0.25 grid, 200 draws.
/// * `table3-full`: all ten rows on the 0.05 grid with 1,000 draws. Cluster scale.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let lambdas = vec![1.0, 0.75, 0.5, 0.25, 0.0];
    let alphas = vec![1.0, 0.95];
    let base = ExperimentConfig {
        n: 1000,
        m: 50,
        q: 20,
        lambda_values: vec![1.0],
        alpha_values: vec![1.0],
        delta_values: unit_grid(20),
        beta_values: unit_grid(20),
        draws_per_cell: 100,
        master_seed: DEFAULT_MASTER_SEED,
        metrics: MetricFlags::default(),
        output: None,
        workers: 0,
    };
    let config = match name {
        "smoke" => ExperimentConfig {
            n: 50,
            m: 5,
            q: 10,
            delta_values: unit_grid(2),
            beta_values: unit_grid(2),
            draws_per_cell: 20,
            ..base
        },
        "table3-row1" => base,
        "table3-qualitative" => ExperimentConfig {
            lambda_values: lambdas,
            alpha_values: alphas,
            delta_values: unit_grid(4),
            beta_values: unit_grid(4),
            draws_per_cell: 200,
            ..base
        },
        "table3-full" => ExperimentConfig {
            lambda_values: lambdas,
            alpha_values: alphas,
            draws_per_cell: 1000,
            ..base
        },
        _ => return None,
    };
    Some(config)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in [
            ("lambda_values", &self.lambda_values),
            ("alpha_values", &self.alpha_values),
            ("delta_values", &self.delta_values),
            ("beta_values", &self.beta_values),
        ] {
            if values.is_empty() {
                return Err(Error::InvalidParams(format!("{name} is empty")));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidParams(format!("{name} contains {v}, outside [0, 1]")));
            }
        }
        if self.draws_per_cell == 0 {
            return Err(Error::InvalidParams("draws_per_cell must be at least 1".into()));
        }
        if self.n == 0 || self.m == 0 || self.q == 0 {
            return Err(Error::InvalidParams("n, m and q must be positive".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<CardinalParams> {
        let mut out = Vec::new();
        for &lambda in &self.lambda_values {
            for &alpha in &self.alpha_values {
                for &delta in &self.delta_values {
                    for &beta in &self.beta_values {
                        out.push(CardinalParams {
                            lambda,
                            delta,
                            alpha,
                            beta,
                            n: self.n,
                            m: self.m,
                            q: self.q,
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn row_one_grid_has_441_cells() {
        let config = preset("table3-row1").unwrap();
        assert_eq!(config.cells().len(), 441);
        assert_eq!(config.delta_values[3], 0.15);
        assert_eq!(config.delta_values[20], 1.0);
    }

    #[test]
    fn json_round_trip() {
        let config = preset("smoke").unwrap();
        assert_eq!(ExperimentConfig::from_json(&config.to_json()).unwrap(), config);
    }

    #[test]
    fn zero_draws_rejected() {
        let mut config = preset("smoke").unwrap();
        config.draws_per_cell = 0;
        assert!(config.validate().is_err());
        let mut config = preset("smoke").unwrap();
        config.beta_values = vec![1.2];
        assert!(config.validate().is_err());
    }
}
