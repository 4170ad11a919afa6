use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::benchmark::mix_seed;
use crate::constraints::{is_feasible_with, FeasibilityTolerance, CONVEX_TOL};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::projection::{check_convex_nonempty, project_alm, ProjectionConfig};
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub per_instance: usize,
    /// Attempts per instance are capped at this multiple of `per_instance`.
    pub attempt_factor: usize,
    /// Number of sine harmonics in each perturbation.
    pub harmonics: usize,
    /// Standard deviation of the first harmonic's amplitude; harmonic `k`
    /// uses `amplitude / k`.
    pub amplitude: f64,
    pub seed: u64,
    pub projection: ProjectionConfig,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            per_instance: 10,
            attempt_factor: 3,
            harmonics: 3,
            amplitude: 0.15,
            seed: 0,
            projection: ProjectionConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub instance_id: String,
    pub kept: usize,
    pub attempts: usize,
    pub not_converged: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct BootstrapOutput {
    /// Index into the input instances and a feasible trajectory for it.
    pub items: Vec<(usize, Trajectory)>,
    pub stats: Vec<BootstrapStats>,
}

impl BootstrapOutput {
    pub fn yield_fraction(&self, per_instance: usize) -> f64 {
        let requested = per_instance * self.stats.len();
        if requested == 0 {
            return 1.0;
        }
        self.items.len() as f64 / requested as f64
    }
}

/// Straight line plus `Σ_k a_k sin(πk s)` per robot and axis, `s ∈ [0, 1]`
/// along the horizon, so the offset vanishes at both endpoints.
fn perturbed_line(instance: &ProblemInstance, rng: &mut ChaCha8Rng, config: &BootstrapConfig) -> Trajectory {
    let mut traj = Trajectory::straight_line(instance);
    let h = instance.horizon;
    let span = (h - 1).max(1) as f64;
    for i in 0..instance.num_robots() {
        for c in 0..2 {
            let amps: Vec<f64> = (1..=config.harmonics)
                .map(|k| {
                    let std = config.amplitude / k as f64;
                    Normal::new(0.0, std).map_or(0.0, |d| d.sample(rng))
                })
                .collect();
            let path = traj.robot_mut(i);
            for step in 1..h.saturating_sub(1) {
                let s = step as f64 / span;
                let offset: f64 = amps
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * (std::f64::consts::PI * (k + 1) as f64 * s).sin())
                    .sum();
                path[2 * step + c] += offset;
            }
        }
    }
    traj
}

/// Feasible training trajectories built by projecting perturbed straight
/// lines. The first attempt per instance is the unperturbed line. Every kept
/// trajectory passes the convex check at the default tolerance and has no
/// negative separation residual.
pub fn bootstrap_dataset(instances: &[ProblemInstance], config: &BootstrapConfig) -> Result<BootstrapOutput> {
    config.projection.validate()?;
    if !(config.amplitude >= 0.0) {
        return Err(Error::InvalidConfig("perturbation amplitude must be nonnegative".into()));
    }
    let tol = FeasibilityTolerance { convex: CONVEX_TOL, separation: 0.0 };
    let mut items = Vec::new();
    let mut stats = Vec::with_capacity(instances.len());
    for (index, instance) in instances.iter().enumerate() {
        check_convex_nonempty(instance)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, index as u64));
        let mut st = BootstrapStats { instance_id: instance.instance_id.clone(), ..Default::default() };
        let cap = config.per_instance * config.attempt_factor.max(1);
        while st.kept < config.per_instance && st.attempts < cap {
            let candidate = if st.attempts == 0 {
                Trajectory::straight_line(instance)
            } else {
                perturbed_line(instance, &mut rng, config)
            };
            st.attempts += 1;
            let out = project_alm(&candidate, instance, &config.projection)?;
            if !out.converged {
                st.not_converged += 1;
                continue;
            }
            if !is_feasible_with(&out.trajectory, instance, tol)?.feasible {
                st.rejected += 1;
                continue;
            }
            items.push((index, out.trajectory));
            st.kept += 1;
        }
        stats.push(st);
    }
    let output = BootstrapOutput { items, stats };
    if output.yield_fraction(config.per_instance) < 0.5 {
        log::warn!(
            "bootstrap kept {} of {} requested trajectories",
            output.items.len(),
            config.per_instance * instances.len()
        );
        for s in output.stats.iter().filter(|s| s.kept < config.per_instance) {
            log::warn!(
                "  {}: kept {} after {} attempts ({} not converged, {} rejected)",
                s.instance_id,
                s.kept,
                s.attempts,
                s.not_converged,
                s.rejected
            );
        }
    }
    Ok(output)
}
