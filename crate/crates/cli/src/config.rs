use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use mrmp_core::benchmark::LayoutParams;
use mrmp_core::diffusion::{BootstrapConfig, ModelConfig, NoiseSchedule, SamplerConfig, TrainConfig};
use mrmp_core::evaluation::EvalMode;
use mrmp_core::projection::ProjectionConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub num_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { num_steps: 25, beta_start: 1e-4, beta_end: 0.24 }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        Ok(NoiseSchedule::linear(self.num_steps, self.beta_start, self.beta_end)?)
    }
}

/// Everything a run can be configured with. Loaded from `--config`, then
/// overridden by command-line flags, then written back into `run.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub layout: LayoutParams,
    /// Used by every projection: bootstrap, sampling, `project`, `sweep-zeta`.
    pub projection: ProjectionConfig,
    /// Sampler settings. Its own `projection` field is replaced by the one above.
    pub sampler: SamplerConfig,
    pub bootstrap: BootstrapConfig,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub mode: EvalMode,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Pushes the shared seed and projection settings into the per-stage configs.
    pub fn finalize(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self.sampler.seed = self.seed;
        self.sampler.projection = self.projection.clone();
        self.bootstrap.seed = self.seed;
        self.bootstrap.projection = self.projection.clone();
        self.train.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"projection": {"zeta": 1.09}, "seed": 3}"#).unwrap();
        assert_eq!(cfg.projection.zeta, 1.09);
        assert_eq!(cfg.projection.delta_a, ProjectionConfig::default().delta_a);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn flag_seed_wins_and_propagates() {
        let mut cfg = RunConfig { seed: 3, ..Default::default() };
        cfg.projection.zeta = 1.01;
        cfg.finalize(Some(9));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sampler.seed, 9);
        assert_eq!(cfg.bootstrap.projection.zeta, 1.01);
        assert_eq!(cfg.sampler.projection.zeta, 1.01);
    }

    #[test]
    fn default_schedule_builds() {
        let s = ScheduleConfig::default().build().unwrap();
        assert!(s.alpha_bar(s.num_steps()) < 0.05);
    }
}
