//! Euclidean projection onto the convex set: fixed endpoints, per-step speed
//! limits and the workspace box.
//!
//! The set decouples by robot. For one robot it is the intersection of three
//! sets that each have a closed-form projection: even-numbered segments,
//! odd-numbered segments (each a product of independent two-point balls) and
//! the endpoint-plus-box set. Dykstra's cyclic scheme over the three converges
//! to the exact projection onto the intersection.

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::trajectory::Trajectory;

pub(crate) const MAX_DYKSTRA_CYCLES: usize = 20_000;

/// Relative slack allowed when checking that the straight line respects the
/// speed limit.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Outcome of projecting one robot's path.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DykstraStats {
    pub cycles: usize,
    pub last_change: f64,
    pub converged: bool,
}

/// Dykstra increments for one robot, one per constraint block.
#[derive(Clone, Debug, Default)]
struct Increments {
    even: Vec<f64>,
    odd: Vec<f64>,
    bounds: Vec<f64>,
}

/// Reusable buffers for repeated projections of the same problem size.
///
/// With `warm` set, each robot's increments carry over to the next call.
/// Dykstra's increments are the block variables of a dual coordinate ascent
/// that converges from any starting point, so the result is still the
/// projection; nearby inputs simply start close to the optimal increments.
#[derive(Clone, Debug, Default)]
pub(crate) struct ConvexProjector {
    warm: bool,
    robots: Vec<Increments>,
    prev: Vec<f64>,
}

/// Fails when some robot cannot reach its goal within the speed limit.
pub fn check_convex_nonempty(instance: &ProblemInstance) -> Result<()> {
    let steps = (instance.horizon - 1) as f64;
    for (i, r) in instance.robots.iter().enumerate() {
        let required = crate::instance::dist(r.start, r.goal) / steps;
        let limit = instance.step_limit(i);
        if required > limit * (1.0 + FEASIBILITY_SLACK) {
            return Err(Error::ConvexInfeasible { robot: i, required, limit });
        }
    }
    Ok(())
}

/// Projects `point` onto the convex set of `instance`. Iterates until a full
/// cycle moves the iterate by less than `tol` and the speed limits hold
/// within `tol`; endpoints and box bounds hold exactly on return.
pub fn project_convex(point: &Trajectory, instance: &ProblemInstance, tol: f64) -> Result<Trajectory> {
    point.check_shape(instance)?;
    check_convex_nonempty(instance)?;
    let mut out = point.clone();
    let mut projector = ConvexProjector::default();
    let mut worst = DykstraStats { cycles: 0, last_change: 0.0, converged: true };
    for i in 0..instance.num_robots() {
        let stats = projector.project_robot(out.robot_mut(i), instance, i, tol);
        if !stats.converged {
            worst = stats;
        }
    }
    if !worst.converged {
        return Err(Error::ConvexNotConverged {
            iterations: worst.cycles,
            residual: worst.last_change,
            last: Box::new(out),
        });
    }
    Ok(out)
}

#[inline]
fn clamp_pair(x: &mut [f64], s: usize, limit: f64) {
    let (px, py, qx, qy) = (x[2 * s], x[2 * s + 1], x[2 * s + 2], x[2 * s + 3]);
    let (dx, dy) = (px - qx, py - qy);
    let len = (dx * dx + dy * dy).sqrt();
    if len > limit {
        let (mx, my) = (0.5 * (px + qx), 0.5 * (py + qy));
        let k = 0.5 * limit / len;
        x[2 * s] = mx + k * dx;
        x[2 * s + 1] = my + k * dy;
        x[2 * s + 2] = mx - k * dx;
        x[2 * s + 3] = my - k * dy;
    }
}

fn max_speed_excess(x: &[f64], limit: f64) -> f64 {
    x.chunks_exact(2)
        .zip(x.chunks_exact(2).skip(1))
        .map(|(p, q)| {
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            ((dx * dx + dy * dy).sqrt() - limit).max(0.0)
        })
        .fold(0.0, f64::max)
}

impl ConvexProjector {
    pub(crate) fn warm() -> Self {
        Self { warm: true, ..Self::default() }
    }

    /// Projects robot `i`'s flat path `x` (length `2 * horizon`) in place.
    pub(crate) fn project_robot(
        &mut self,
        x: &mut [f64],
        instance: &ProblemInstance,
        i: usize,
        tol: f64,
    ) -> DykstraStats {
        let n = x.len();
        let horizon = n / 2;
        let robot = &instance.robots[i];
        let limit = instance.step_limit(i);
        let side = instance.workspace_side;

        if self.robots.len() <= i {
            self.robots.resize_with(i + 1, Increments::default);
        }
        let inc = &mut self.robots[i];
        let reuse = self.warm && inc.even.len() == n;
        if reuse {
            // The iterate paired with increments q is y minus their sum.
            for (k, v) in x.iter_mut().enumerate() {
                *v -= inc.even[k] + inc.odd[k] + inc.bounds[k];
            }
        } else {
            for buf in [&mut inc.even, &mut inc.odd, &mut inc.bounds] {
                buf.clear();
                buf.resize(n, 0.0);
            }
        }
        self.prev.resize(n, 0.0);

        let mut last_change = f64::INFINITY;
        for cycle in 1..=MAX_DYKSTRA_CYCLES {
            self.prev.copy_from_slice(x);

            for parity in 0..2 {
                let q = if parity == 0 { &mut inc.even } else { &mut inc.odd };
                for (v, p) in x.iter_mut().zip(q.iter()) {
                    *v += p;
                }
                // y = x + q is now in x; remember it in q, project, take the difference.
                q.copy_from_slice(x);
                let mut s = parity;
                while s + 1 < horizon {
                    clamp_pair(x, s, limit);
                    s += 2;
                }
                for (p, v) in q.iter_mut().zip(x.iter()) {
                    *p -= v;
                }
            }

            for (v, p) in x.iter_mut().zip(inc.bounds.iter()) {
                *v += p;
            }
            inc.bounds.copy_from_slice(x);
            for v in x.iter_mut() {
                *v = v.clamp(0.0, side);
            }
            x[0] = robot.start[0];
            x[1] = robot.start[1];
            x[n - 2] = robot.goal[0];
            x[n - 1] = robot.goal[1];
            for (p, v) in inc.bounds.iter_mut().zip(x.iter()) {
                *p -= v;
            }

            last_change = x
                .iter()
                .zip(&self.prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if last_change < tol && max_speed_excess(x, limit) <= tol {
                return DykstraStats { cycles: cycle, last_change, converged: true };
            }
        }
        DykstraStats { cycles: MAX_DYKSTRA_CYCLES, last_change, converged: false }
    }
}
