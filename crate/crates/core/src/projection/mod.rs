//! Projections onto the feasible set: an exact projection onto the convex
//! constraints and an augmented-Lagrangian projection that adds the
//! nonconvex separation constraints.

mod alm;
mod convex;

pub use alm::{
    augmented_lagrangian_value, augmented_lagrangian_value_and_grad, eliminate_slack, project_alm,
    DualState, ProjectionOutcome, TraceRow,
};
pub use convex::{check_convex_nonempty, project_convex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected-gradient settings for the inner minimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSolverConfig {
    /// Initial (and largest) step size.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once a step moves no coordinate by more than this.
    pub tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self { step: 0.5, max_iters: 5, tol: 1e-7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    /// Stopping tolerance on the robot-pair residuals (squared units).
    pub delta_a: f64,
    /// Stopping tolerance on the robot-obstacle residuals (squared units).
    pub delta_o: f64,
    /// Penalty growth factor per outer iteration.
    pub zeta: f64,
    pub rho_init: f64,
    /// Separate initial penalty for obstacle residuals; `rho_init` when unset.
    pub rho_init_obstacle: Option<f64>,
    pub max_outer_iters: usize,
    pub inner: InnerSolverConfig,
    /// Cycle tolerance of the convex projection used by the inner solver.
    pub convex_tol: f64,
    /// Distance added to every separation radius while solving, so that
    /// outputs meeting `delta_a`/`delta_o` are strictly collision free for
    /// separation radii of at least `delta / (2 * clearance)`.
    pub clearance: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            delta_a: 1e-4,
            delta_o: 1e-4,
            zeta: 1.05,
            rho_init: 10.0,
            rho_init_obstacle: None,
            max_outer_iters: 200,
            inner: InnerSolverConfig::default(),
            convex_tol: 1e-7,
            clearance: 6e-4,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_a", self.delta_a),
            ("delta_o", self.delta_o),
            ("rho_init", self.rho_init),
            ("rho_init_obstacle", self.rho_init_obstacle.unwrap_or(self.rho_init)),
            ("inner.step", self.inner.step),
            ("inner.tol", self.inner.tol),
            ("convex_tol", self.convex_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.zeta.is_finite() && self.zeta >= 1.0) {
            return Err(Error::InvalidConfig(format!("zeta must be >= 1, got {}", self.zeta)));
        }
        if self.max_outer_iters == 0 || self.inner.max_iters == 0 {
            return Err(Error::InvalidConfig("iteration limits must be positive".into()));
        }
        if !(self.clearance.is_finite() && self.clearance >= 0.0) {
            return Err(Error::InvalidConfig(format!("clearance must be >= 0, got {}", self.clearance)));
        }
        Ok(())
    }

    /// Same settings with both stopping tolerances set to `delta`.
    pub fn with_tolerance(&self, delta: f64) -> Self {
        Self { delta_a: delta, delta_o: delta, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_shape() {
        let cfg: ProjectionConfig = serde_json::from_str(
            r#"{"delta_a": 1e-3, "delta_o": 2e-3, "zeta": 1.09, "rho_init": 2.0,
                "max_outer_iters": 50, "inner": {"step": 0.25, "max_iters": 10, "tol": 1e-6}}"#,
        )
        .unwrap();
        assert_eq!(cfg.delta_o, 2e-3);
        assert_eq!(cfg.inner.max_iters, 10);
        assert_eq!(cfg.clearance, ProjectionConfig::default().clearance);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_shrinking_penalty() {
        let cfg = ProjectionConfig { zeta: 0.9, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
