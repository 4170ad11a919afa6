use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{sgld_into, NoiseSchedule, Normalizer, ScoreFunction};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::projection::{check_convex_nonempty, project_alm, ProjectionConfig};
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Langevin iterations per noise level.
    pub inner_iters: usize,
    /// `γ_t = gamma0·(1 − ᾱ_t)` unless `step_sizes` is given.
    pub gamma0: f64,
    /// Explicit `γ_1..γ_T`.
    pub step_sizes: Option<Vec<f64>>,
    pub seed: u64,
    /// Tolerances used at the final noise level.
    pub projection: ProjectionConfig,
    /// Separation tolerance for projections at `t > 1`.
    pub intermediate_tolerance: f64,
    pub projection_enabled: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            inner_iters: 5,
            gamma0: 0.05,
            step_sizes: None,
            seed: 0,
            projection: ProjectionConfig::default(),
            intermediate_tolerance: 1e-3,
            projection_enabled: true,
        }
    }
}

impl SamplerConfig {
    pub fn step_size(&self, t: usize, schedule: &NoiseSchedule) -> f64 {
        match &self.step_sizes {
            Some(s) => s[t - 1],
            None => self.gamma0 * (1.0 - schedule.alpha_bar(t)),
        }
    }

    pub fn validate(&self, schedule: &NoiseSchedule) -> Result<()> {
        if self.inner_iters == 0 {
            return Err(Error::InvalidConfig("inner_iters must be at least 1".into()));
        }
        if let Some(s) = &self.step_sizes {
            if s.len() != schedule.num_steps() {
                return Err(Error::shape(schedule.num_steps(), s.len()));
            }
        }
        if (1..=schedule.num_steps()).any(|t| !(self.step_size(t, schedule) > 0.0)) {
            return Err(Error::InvalidConfig("step sizes must be positive".into()));
        }
        if !(self.intermediate_tolerance > 0.0) {
            return Err(Error::InvalidConfig("intermediate tolerance must be positive".into()));
        }
        self.projection.validate()
    }
}

/// Projection record after one Langevin iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub t: usize,
    pub i: usize,
    pub h_a_inf: f64,
    pub h_o_inf: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SampleOutput {
    /// World coordinates.
    pub trajectory: Trajectory,
    pub diagnostics: Vec<StepDiagnostic>,
    /// Whether the last projection met the strict tolerances. Always false
    /// with projection disabled.
    pub converged: bool,
}

/// Annealed Langevin sampling from standard normal noise, projecting every
/// iterate onto the feasible set when enabled.
pub fn sample(
    instance: &ProblemInstance,
    model: &dyn ScoreFunction,
    schedule: &NoiseSchedule,
    config: &SamplerConfig,
) -> Result<SampleOutput> {
    config.validate(schedule)?;
    let (n, h) = (instance.num_robots(), instance.horizon);
    let dim = n * h * 2;
    if model.dim() != dim {
        return Err(Error::shape(dim, model.dim()));
    }
    if config.projection_enabled {
        check_convex_nonempty(instance)?;
    }
    let norm = Normalizer::new(instance.workspace_side);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut next = vec![0.0; dim];
    let mut noise = vec![0.0; dim];
    let mut score = vec![0.0; dim];
    let mut world = Trajectory::zeros(n, h);
    let loose = config.projection.with_tolerance(config.intermediate_tolerance);
    let mut diagnostics = Vec::new();
    let mut converged = false;
    let mut projected: Option<Trajectory> = None;

    for t in (1..=schedule.num_steps()).rev() {
        let gamma = config.step_size(t, schedule);
        let proj = if t > 1 { &loose } else { &config.projection };
        for i in 1..=config.inner_iters {
            for z in noise.iter_mut() {
                *z = StandardNormal.sample(&mut rng);
            }
            sgld_into(&x, t, model, gamma, &noise, &mut score, &mut next);
            std::mem::swap(&mut x, &mut next);
            if !config.projection_enabled {
                continue;
            }
            norm.to_world(&x, world.as_mut_slice());
            if !world.is_finite() {
                return Err(Error::InvalidConfig(format!("sampler diverged at t = {t}")));
            }
            let out = project_alm(&world, instance, proj)?;
            diagnostics.push(StepDiagnostic {
                t,
                i,
                h_a_inf: out.residual_a,
                h_o_inf: out.residual_o,
                converged: out.converged,
            });
            converged = out.converged;
            norm.to_model(out.trajectory.as_slice(), &mut x);
            projected = Some(out.trajectory);
        }
    }
    // Return the projection itself; the round trip through model
    // coordinates would perturb the endpoints in the last bits.
    let trajectory = match projected {
        Some(p) => p,
        None => {
            norm.to_world(&x, world.as_mut_slice());
            world
        }
    };
    Ok(SampleOutput { trajectory, diagnostics, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{convex_violation, is_feasible, nonconvex_residuals};
    use crate::diffusion::ZeroScore;
    use crate::instance::tests::two_robot_instance;

    fn fast_config(seed: u64) -> SamplerConfig {
        SamplerConfig { inner_iters: 1, seed, ..Default::default() }
    }

    #[test]
    fn zero_score_sample_is_feasible() {
        let inst = two_robot_instance(0.05, 0.05);
        let schedule = NoiseSchedule::linear(6, 1e-3, 0.5).unwrap();
        let zero = ZeroScore { dim: inst.num_robots() * inst.horizon * 2 };
        let out = sample(&inst, &zero, &schedule, &fast_config(3)).unwrap();
        assert!(out.converged);
        assert_eq!(out.diagnostics.len(), 6);
        assert_eq!(out.diagnostics.last().unwrap().t, 1);
        assert!(convex_violation(&out.trajectory, &inst).unwrap().max() <= 1e-5);
        assert!(nonconvex_residuals(&out.trajectory, &inst).unwrap().max_violation() <= 1e-4);
        assert!(is_feasible(&out.trajectory, &inst, 1e-4).unwrap().feasible);
        for (i, r) in inst.robots.iter().enumerate() {
            let first = out.trajectory.point(i, 0);
            let last = out.trajectory.point(i, inst.horizon - 1);
            assert_eq!(first, r.start);
            assert_eq!(last, r.goal);
        }
    }

    #[test]
    fn sampling_is_bit_reproducible() {
        let inst = two_robot_instance(0.05, 0.05);
        let schedule = NoiseSchedule::linear(4, 1e-3, 0.5).unwrap();
        let zero = ZeroScore { dim: inst.num_robots() * inst.horizon * 2 };
        let a = sample(&inst, &zero, &schedule, &fast_config(11)).unwrap();
        let b = sample(&inst, &zero, &schedule, &fast_config(11)).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn disabled_projection_skips_diagnostics() {
        let inst = two_robot_instance(0.05, 0.05);
        let schedule = NoiseSchedule::default();
        let zero = ZeroScore { dim: inst.num_robots() * inst.horizon * 2 };
        let config = SamplerConfig { projection_enabled: false, ..Default::default() };
        let out = sample(&inst, &zero, &schedule, &config).unwrap();
        assert!(out.diagnostics.is_empty());
        assert!(!out.converged);
        assert_ne!(out.trajectory.point(0, 0), inst.robots[0].start);
    }

    #[test]
    fn wrong_model_dimension_is_rejected() {
        let inst = two_robot_instance(0.05, 0.05);
        let zero = ZeroScore { dim: 3 };
        assert!(sample(&inst, &zero, &NoiseSchedule::default(), &SamplerConfig::default()).is_err());
    }
}
