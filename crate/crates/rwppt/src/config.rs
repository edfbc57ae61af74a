//! Experiment configuration: a single TOML file describing the model, the
//! quantities to compute, and the seed. Unknown keys are hard errors, and
//! the seed is mandatory so no run ever depends on ambient entropy.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::marginals::MarginalFamily;
use crate::target::{ModelSpec, RegionSpec, TargetModel};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed for every stochastic subcommand.
    pub seed: u64,
    pub model: Option<ModelConfig>,
    pub theory_curve: Option<TheoryCurveConfig>,
    pub optimize: Option<OptimizeConfig>,
    pub ladder: Option<LadderConfig>,
    pub simulate: Option<SimulateConfig>,
    pub convergence: Option<ConvergenceConfig>,
    pub figure: Option<FigureConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    pub regions: Vec<RegionConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Center offset, replicated across all coordinates.
    pub offset: f64,
    pub half_width: f64,
    pub weight: f64,
    pub family: FamilyConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    ExpPower { z: u32, sigma: f64 },
    Tabulated { grid: Vec<f64>, log_values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryCurveConfig {
    pub beta: f64,
    pub ell_start: f64,
    pub ell_stop: f64,
    pub ell_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    /// "geometric" or "optimal".
    pub kind: String,
    pub beta_min: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub betas: Vec<f64>,
    pub n_sweeps: usize,
    pub within_moves_per_sweep: usize,
}

fn default_n_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub beta: f64,
    pub ell: f64,
    pub d_list: Vec<usize>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub m_start: f64,
    pub m_stop: f64,
    pub m_points: usize,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mc = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("this subcommand needs a [model] section".into()))?;
        let regions = mc
            .regions
            .iter()
            .map(|r| {
                let family = match &r.family {
                    FamilyConfig::ExpPower { z, sigma } => MarginalFamily::exp_power(*z, *sigma),
                    FamilyConfig::Tabulated { grid, log_values } => {
                        MarginalFamily::tabulated(grid.clone(), log_values.clone())
                    }
                }
                .map_err(|e| Error::Config(format!("invalid family: {e}")))?;
                Ok(RegionSpec {
                    offset: r.offset,
                    half_width: r.half_width,
                    weight: r.weight,
                    family,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSpec { regions })
    }

    /// Build the model at the configured dimension.
    pub fn build_model(&self) -> Result<TargetModel> {
        let mc = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("this subcommand needs a [model] section".into()))?;
        self.model_spec()?
            .build(mc.dimension)
            .map_err(|e| Error::Config(format!("invalid model: {e}")))
    }
}

/// Evenly spaced inclusive grid.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(stop > start) {
        return Err(Error::Config(format!(
            "grid needs at least 2 points and stop > start, got [{start}, {stop}] x {points}"
        )));
    }
    Ok((0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
seed = 42

[model]
dimension = 4

[[model.regions]]
offset = 0.0
half_width = 8.0
weight = 0.3
family = { kind = "exp_power", z = 2, sigma = 1.0 }

[[model.regions]]
offset = 20.0
half_width = 8.0
weight = 0.7
family = { kind = "exp_power", z = 2, sigma = 1.0 }

[theory_curve]
beta = 1.0
ell_start = 0.0
ell_stop = 6.0
ell_points = 61

[optimize]
beta = 0.5

[figure]
m_start = 0.0
m_stop = 3.0
m_points = 31
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_str(GOOD).unwrap();
        assert_eq!(cfg.seed, 42);
        let m = cfg.build_model().unwrap();
        assert_eq!(m.dimension(), 4);
        assert_eq!(m.n_regions(), 2);
        assert_eq!(m.regions()[1].center, vec![20.0; 4]);
    }

    #[test]
    fn missing_seed_is_config_error() {
        let e = ExperimentConfig::from_str("[model]\ndimension = 1\nregions = []");
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let bad = format!("{GOOD}\n[model.extra]\nfoo = 1\n");
        assert!(ExperimentConfig::from_str(&bad).is_err());
        let bad2 = GOOD.replace("ell_points = 61", "ell_points = 61\ntypo_key = 3");
        assert!(ExperimentConfig::from_str(&bad2).is_err());
    }

    #[test]
    fn invalid_model_is_config_error() {
        let bad = GOOD.replace("weight = 0.7", "weight = 0.8");
        let cfg = ExperimentConfig::from_str(&bad).unwrap();
        assert!(matches!(cfg.build_model(), Err(Error::Config(_))));
    }

    #[test]
    fn grid_generation() {
        assert_eq!(linear_grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(linear_grid(0.0, 1.0, 1).is_err());
        assert!(linear_grid(1.0, 0.0, 5).is_err());
    }
}
