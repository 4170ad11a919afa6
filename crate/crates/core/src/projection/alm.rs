//! Augmented-Lagrangian projection onto the full feasible set.
//!
//! Separation constraints `g(Π) ≥ 0` become equalities `g − d = 0` with a
//! slack `d ≥ 0`. For fixed multiplier `ν` and penalty `ρ` the slack has the
//! closed form `d* = max(0, g + ν / (2ρ))`, which leaves the penalty term
//! `φ(g) = ν·H + ρ·H²` with `H = g − d*` and derivative `φ'(g) = ν + 2ρH`.
//! Each outer iteration minimizes `‖Π − anchor‖² + Σ φ` over the convex set
//! by projected gradient descent, then takes a dual ascent step `ν += ρH`
//! and grows the penalty geometrically.

use serde::{Deserialize, Serialize};

use super::convex::{check_convex_nonempty, ConvexProjector};
use super::ProjectionConfig;
use crate::constraints::fill_residuals;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::trajectory::Trajectory;

/// Penalties above this are treated as numerical blow-up.
const RHO_OVERFLOW: f64 = 1e12;

/// Multipliers, penalties and slacks of one projection solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub nu_a: Vec<f64>,
    pub nu_o: Vec<f64>,
    pub slack_a: Vec<f64>,
    pub slack_o: Vec<f64>,
    pub rho_a: f64,
    pub rho_o: f64,
    pub zeta: f64,
    pub iteration: usize,
}

impl DualState {
    /// Zero multipliers sized for `instance`.
    pub fn zeros(instance: &ProblemInstance, rho: f64, zeta: f64) -> Self {
        let n = instance.num_robots();
        let len_a = n * n.saturating_sub(1) / 2 * instance.horizon;
        let len_o = n * instance.num_obstacles() * instance.horizon;
        Self {
            nu_a: vec![0.0; len_a],
            nu_o: vec![0.0; len_o],
            slack_a: vec![0.0; len_a],
            slack_o: vec![0.0; len_o],
            rho_a: rho,
            rho_o: rho,
            zeta,
            iteration: 0,
        }
    }

    fn check(&self, instance: &ProblemInstance) -> Result<()> {
        let expect = Self::zeros(instance, 1.0, 1.0);
        if self.nu_a.len() != expect.nu_a.len() || self.nu_o.len() != expect.nu_o.len() {
            return Err(Error::Shape {
                expected: format!("{} robot-pair and {} obstacle multipliers", expect.nu_a.len(), expect.nu_o.len()),
                found: format!("{} and {}", self.nu_a.len(), self.nu_o.len()),
            });
        }
        if !(self.rho_a > 0.0 && self.rho_o > 0.0) {
            return Err(Error::InvalidConfig("penalties must be positive".into()));
        }
        Ok(())
    }
}

/// Minimizer over `d ≥ 0` of `ν(g − d) + ρ(g − d)²`.
pub fn eliminate_slack(g: f64, nu: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidConfig(format!("penalty must be positive, got {rho}")));
    }
    Ok(slack(g, nu, rho))
}

#[inline]
fn slack(g: f64, nu: f64, rho: f64) -> f64 {
    (g + nu / (2.0 * rho)).max(0.0)
}

/// Returns `(φ, φ')` for one residual.
#[inline]
fn penalty(g: f64, nu: f64, rho: f64) -> (f64, f64) {
    let h = g - slack(g, nu, rho);
    (nu * h + rho * h * h, nu + 2.0 * rho * h)
}

/// Augmented Lagrangian at `traj` with slacks eliminated for `dual`.
pub fn augmented_lagrangian_value(
    traj: &Trajectory,
    anchor: &Trajectory,
    dual: &DualState,
    instance: &ProblemInstance,
) -> Result<f64> {
    traj.check_shape(instance)?;
    anchor.check_shape(instance)?;
    dual.check(instance)?;
    let problem = AlmProblem { instance, anchor: anchor.as_slice(), clearance: 0.0 };
    Ok(problem.value(traj.as_slice(), dual))
}

/// Value and gradient with respect to the positions.
pub fn augmented_lagrangian_value_and_grad(
    traj: &Trajectory,
    anchor: &Trajectory,
    dual: &DualState,
    instance: &ProblemInstance,
) -> Result<(f64, Vec<f64>)> {
    traj.check_shape(instance)?;
    anchor.check_shape(instance)?;
    dual.check(instance)?;
    let problem = AlmProblem { instance, anchor: anchor.as_slice(), clearance: 0.0 };
    let mut grad = vec![0.0; traj.dim()];
    let value = problem.value_grad(traj.as_slice(), dual, Some(&mut grad));
    Ok((value, grad))
}

struct AlmProblem<'a> {
    instance: &'a ProblemInstance,
    anchor: &'a [f64],
    clearance: f64,
}

impl AlmProblem<'_> {
    fn value(&self, x: &[f64], dual: &DualState) -> f64 {
        self.value_grad(x, dual, None)
    }

    /// Walks residuals in the same lexicographic order as `fill_residuals`.
    fn value_grad(&self, x: &[f64], dual: &DualState, mut grad: Option<&mut [f64]>) -> f64 {
        let inst = self.instance;
        let n = inst.num_robots();
        let horizon = inst.horizon;

        let mut value = 0.0;
        for (k, (&xi, &ai)) in x.iter().zip(self.anchor).enumerate() {
            let d = xi - ai;
            value += d * d;
            if let Some(g) = grad.as_deref_mut() {
                g[k] = 2.0 * d;
            }
        }

        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let sep = inst.robots[i].radius + inst.robots[j].radius + self.clearance;
                let sep2 = sep * sep;
                for h in 0..horizon {
                    let (pi, pj) = ((i * horizon + h) * 2, (j * horizon + h) * 2);
                    let dx = x[pi] - x[pj];
                    let dy = x[pi + 1] - x[pj + 1];
                    let (phi, dphi) = penalty(dx * dx + dy * dy - sep2, dual.nu_a[k], dual.rho_a);
                    value += phi;
                    if let Some(g) = grad.as_deref_mut() {
                        if dphi != 0.0 {
                            let (gx, gy) = (2.0 * dphi * dx, 2.0 * dphi * dy);
                            g[pi] += gx;
                            g[pi + 1] += gy;
                            g[pj] -= gx;
                            g[pj + 1] -= gy;
                        }
                    }
                    k += 1;
                }
            }
        }

        let mut k = 0;
        for i in 0..n {
            for o in &inst.obstacles {
                let sep = inst.robots[i].radius + o.radius + self.clearance;
                let sep2 = sep * sep;
                for h in 0..horizon {
                    let pi = (i * horizon + h) * 2;
                    let dx = x[pi] - o.center[0];
                    let dy = x[pi + 1] - o.center[1];
                    let (phi, dphi) = penalty(dx * dx + dy * dy - sep2, dual.nu_o[k], dual.rho_o);
                    value += phi;
                    if let Some(g) = grad.as_deref_mut() {
                        if dphi != 0.0 {
                            g[pi] += 2.0 * dphi * dx;
                            g[pi + 1] += 2.0 * dphi * dy;
                        }
                    }
                    k += 1;
                }
            }
        }
        value
    }
}

/// One row of the per-outer-iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    /// Largest robot-pair violation `max(0, −g)` after the primal step.
    pub h_a_inf: f64,
    pub h_o_inf: f64,
    /// Penalty after the update, `ρ_init · ζ^k`.
    pub rho: f64,
    /// `‖Π − anchor‖²`.
    pub objective: f64,
    pub inner_iters: usize,
}

#[derive(Clone, Debug)]
pub struct ProjectionOutcome {
    pub trajectory: Trajectory,
    pub dual: DualState,
    pub converged: bool,
    pub outer_iterations: usize,
    /// `‖H_a‖∞` of the returned trajectory.
    pub residual_a: f64,
    pub residual_o: f64,
    /// `‖out − in‖²`.
    pub objective: f64,
    pub trace: Vec<TraceRow>,
}

fn max_violation(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, &v| m.max(-v))
}

/// Projects `point` onto the feasible set with the augmented Lagrangian
/// method. Returns `converged = false` with the least-violating iterate when
/// the tolerances are not met within `max_outer_iters` or the penalty blows up.
pub fn project_alm(
    point: &Trajectory,
    instance: &ProblemInstance,
    config: &ProjectionConfig,
) -> Result<ProjectionOutcome> {
    point.check_shape(instance)?;
    config.validate()?;
    check_convex_nonempty(instance)?;

    let problem = AlmProblem { instance, anchor: point.as_slice(), clearance: config.clearance };
    let rho_a0 = config.rho_init;
    let rho_o0 = config.rho_init_obstacle.unwrap_or(config.rho_init);
    let mut projector = ConvexProjector::warm();
    let horizon2 = instance.horizon * 2;

    let project = |x: &mut [f64], projector: &mut ConvexProjector| {
        for (i, chunk) in x.chunks_exact_mut(horizon2).enumerate() {
            projector.project_robot(chunk, instance, i, config.convex_tol);
        }
    };

    let mut x = point.as_slice().to_vec();
    project(&mut x, &mut projector);

    let (mut ga, mut go) = (Vec::new(), Vec::new());
    fill_residuals(&x, instance, config.clearance, &mut ga, &mut go);

    // Warm start: multipliers take the residual at entry (with zero multipliers).
    let mut dual = DualState::zeros(instance, rho_a0, config.zeta);
    dual.rho_o = rho_o0;
    for (nu, &g) in dual.nu_a.iter_mut().zip(&ga) {
        *nu = g.min(0.0);
    }
    for (nu, &g) in dual.nu_o.iter_mut().zip(&go) {
        *nu = g.min(0.0);
    }

    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>, f64, f64)> = None;
    let mut eta = config.inner.step;
    let mut inner = InnerScratch::new(x.len());
    let mut converged = false;

    for k in 1..=config.max_outer_iters {
        let inner_iters = inner.solve(&problem, &mut x, &dual, config, &mut eta, &mut |y| project(y, &mut projector));

        fill_residuals(&x, instance, config.clearance, &mut ga, &mut go);
        for (idx, &g) in ga.iter().enumerate() {
            let d = slack(g, dual.nu_a[idx], dual.rho_a);
            dual.slack_a[idx] = d;
            dual.nu_a[idx] += dual.rho_a * (g - d);
        }
        for (idx, &g) in go.iter().enumerate() {
            let d = slack(g, dual.nu_o[idx], dual.rho_o);
            dual.slack_o[idx] = d;
            dual.nu_o[idx] += dual.rho_o * (g - d);
        }
        let growth = config.zeta.powi(k as i32);
        dual.rho_a = rho_a0 * growth;
        dual.rho_o = rho_o0 * growth;
        dual.iteration = k;

        let (va, vo) = (max_violation(&ga), max_violation(&go));
        let objective = problem_objective(&x, point.as_slice());
        trace.push(TraceRow { k, h_a_inf: va, h_o_inf: vo, rho: dual.rho_a, objective, inner_iters });

        let score = (va / config.delta_a).max(vo / config.delta_o);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), va, vo));
        }
        if va <= config.delta_a && vo <= config.delta_o {
            converged = true;
            break;
        }
        if dual.rho_a.max(dual.rho_o) > RHO_OVERFLOW || !x.iter().all(|v| v.is_finite()) {
            break;
        }
    }

    let outer_iterations = dual.iteration;
    let (x, residual_a, residual_o) = if converged {
        let (va, vo) = (max_violation(&ga), max_violation(&go));
        (x, va, vo)
    } else {
        let (_, bx, va, vo) = best.expect("at least one outer iteration");
        (bx, va, vo)
    };
    let objective = problem_objective(&x, point.as_slice());
    let trajectory = Trajectory::new(instance.num_robots(), instance.horizon, x)?;
    if !converged {
        log::debug!(
            "{}: projection stopped after {outer_iterations} outer iterations, residuals {residual_a:.2e}/{residual_o:.2e}",
            instance.instance_id
        );
    }
    Ok(ProjectionOutcome { trajectory, dual, converged, outer_iterations, residual_a, residual_o, objective, trace })
}

fn problem_objective(x: &[f64], anchor: &[f64]) -> f64 {
    x.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum()
}

struct InnerScratch {
    grad: Vec<f64>,
    trial: Vec<f64>,
}

impl InnerScratch {
    fn new(n: usize) -> Self {
        Self { grad: vec![0.0; n], trial: vec![0.0; n] }
    }

    /// Projected gradient descent with backtracking on the quadratic upper
    /// bound. Returns the number of accepted steps.
    fn solve(
        &mut self,
        problem: &AlmProblem<'_>,
        x: &mut [f64],
        dual: &DualState,
        config: &ProjectionConfig,
        eta: &mut f64,
        project: &mut dyn FnMut(&mut [f64]),
    ) -> usize {
        let mut f = problem.value_grad(x, dual, Some(&mut self.grad));
        let mut accepted_steps = 0;
        for _ in 0..config.inner.max_iters {
            let mut accepted = false;
            let mut moved = 0.0;
            while *eta > 1e-14 {
                for ((t, &xi), &gi) in self.trial.iter_mut().zip(x.iter()).zip(&self.grad) {
                    *t = xi - *eta * gi;
                }
                project(&mut self.trial);
                let (mut lin, mut sq) = (0.0, 0.0);
                moved = 0.0f64;
                for ((&t, &xi), &gi) in self.trial.iter().zip(x.iter()).zip(&self.grad) {
                    let d = t - xi;
                    lin += gi * d;
                    sq += d * d;
                    moved = moved.max(d.abs());
                }
                let f_trial = problem.value(&self.trial, dual);
                if f_trial <= f + lin + sq / (2.0 * *eta) + 1e-14 * f.abs() {
                    accepted = true;
                    break;
                }
                *eta *= 0.5;
            }
            if !accepted {
                break;
            }
            x.copy_from_slice(&self.trial);
            accepted_steps += 1;
            f = problem.value_grad(x, dual, Some(&mut self.grad));
            if moved <= config.inner.tol {
                break;
            }
            *eta = (*eta * 2.0).min(config.inner.step);
        }
        accepted_steps
    }
}
