//! Constraint evaluation: the convex set (endpoints, speed limits, workspace
//! box) and the nonconvex separation residuals between robots and obstacles.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{dist, dist_sq, Point, ProblemInstance};
use crate::trajectory::Trajectory;

/// Default tolerance for convex-set membership checks.
pub const CONVEX_TOL: f64 = 1e-6;

/// Largest violation of each family of convex constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexViolation {
    pub endpoint_error: f64,
    pub velocity_error: f64,
    pub workspace_error: f64,
}

impl ConvexViolation {
    pub fn max(&self) -> f64 {
        self.endpoint_error.max(self.velocity_error).max(self.workspace_error)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Start,
    Goal,
    Velocity,
    Workspace,
    RobotPair,
    RobotObstacle,
}

/// A single constraint and how badly it is violated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstConstraint {
    pub kind: ConstraintKind,
    /// `[robot]`, `[robot, step]`, or `[robot, robot|obstacle, step]`.
    pub indices: Vec<usize>,
    /// Amount of violation: a distance for convex constraints, the negated
    /// residual for separation constraints.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub instance_id: String,
    pub feasible: bool,
    pub worst_constraint: Option<WorstConstraint>,
}

/// Separation residuals `‖p − q‖² − R²`; an entry is feasible iff `≥ 0`.
///
/// `robot_pairs` is ordered lexicographically over `(i, j, h)` with `i < j`,
/// `obstacle_pairs` over `(i, j, h)` with `j` an obstacle index.
#[derive(Clone, Debug, PartialEq)]
pub struct NonconvexResiduals {
    pub num_robots: usize,
    pub num_obstacles: usize,
    pub horizon: usize,
    pub robot_pairs: Vec<f64>,
    pub obstacle_pairs: Vec<f64>,
}

impl NonconvexResiduals {
    /// Flat index of robot pair `(i, j)` with `i < j` at step `h`.
    pub fn robot_pair_index(&self, i: usize, j: usize, h: usize) -> usize {
        robot_pair_index(self.num_robots, self.horizon, i, j, h)
    }

    pub fn robot_pair(&self, i: usize, j: usize, h: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.robot_pairs[self.robot_pair_index(a, b, h)]
    }

    pub fn obstacle_pair(&self, i: usize, j: usize, h: usize) -> f64 {
        self.obstacle_pairs[(i * self.num_obstacles + j) * self.horizon + h]
    }

    /// Decodes a flat robot-pair index back into `(i, j, h)`.
    pub fn robot_pair_indices(&self, k: usize) -> (usize, usize, usize) {
        let h = k % self.horizon;
        let mut pair = k / self.horizon;
        let n = self.num_robots;
        for i in 0..n {
            let row = n - 1 - i;
            if pair < row {
                return (i, i + 1 + pair, h);
            }
            pair -= row;
        }
        unreachable!("robot pair index {k} out of range")
    }

    pub fn obstacle_pair_indices(&self, k: usize) -> (usize, usize, usize) {
        let h = k % self.horizon;
        let rest = k / self.horizon;
        (rest / self.num_obstacles, rest % self.num_obstacles, h)
    }

    /// Largest violation `max(0, −g)` over robot pairs.
    pub fn max_robot_violation(&self) -> f64 {
        self.robot_pairs.iter().fold(0.0, |m, &g| m.max(-g))
    }

    pub fn max_obstacle_violation(&self) -> f64 {
        self.obstacle_pairs.iter().fold(0.0, |m, &g| m.max(-g))
    }

    pub fn max_violation(&self) -> f64 {
        self.max_robot_violation().max(self.max_obstacle_violation())
    }
}

pub(crate) fn robot_pair_index(n: usize, horizon: usize, i: usize, j: usize, h: usize) -> usize {
    debug_assert!(i < j && j < n);
    // Pairs before row i: sum_{a<i} (n - 1 - a).
    let before = i * (2 * n - i - 1) / 2;
    (before + (j - i - 1)) * horizon + h
}

pub(crate) fn num_robot_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub fn convex_violation(traj: &Trajectory, instance: &ProblemInstance) -> Result<ConvexViolation> {
    Ok(convex_violation_detail(traj, instance)?.0)
}

fn convex_violation_detail(
    traj: &Trajectory,
    instance: &ProblemInstance,
) -> Result<(ConvexViolation, Vec<WorstConstraint>)> {
    traj.check_shape(instance)?;
    let horizon = traj.horizon();
    let side = instance.workspace_side;
    let mut v = ConvexViolation::default();
    let mut worst = vec![
        WorstConstraint { kind: ConstraintKind::Start, indices: vec![], value: 0.0 },
        WorstConstraint { kind: ConstraintKind::Velocity, indices: vec![], value: 0.0 },
        WorstConstraint { kind: ConstraintKind::Workspace, indices: vec![], value: 0.0 },
    ];
    let mut bump = |slot: usize, kind: ConstraintKind, indices: Vec<usize>, value: f64| {
        if value > worst[slot].value {
            worst[slot] = WorstConstraint { kind, indices, value };
        }
    };

    for (i, robot) in instance.robots.iter().enumerate() {
        let start_err = dist(traj.point(i, 0), robot.start);
        let goal_err = dist(traj.point(i, horizon - 1), robot.goal);
        v.endpoint_error = v.endpoint_error.max(start_err).max(goal_err);
        bump(0, ConstraintKind::Start, vec![i], start_err);
        bump(0, ConstraintKind::Goal, vec![i], goal_err);

        let limit = instance.step_limit(i);
        for h in 0..horizon {
            let p = traj.point(i, h);
            let out = p.iter().fold(0.0f64, |m, &c| m.max(-c).max(c - side));
            v.workspace_error = v.workspace_error.max(out);
            bump(2, ConstraintKind::Workspace, vec![i, h], out);
            if h > 0 {
                let excess = (dist(p, traj.point(i, h - 1)) - limit).max(0.0);
                v.velocity_error = v.velocity_error.max(excess);
                bump(1, ConstraintKind::Velocity, vec![i, h], excess);
            }
        }
    }
    Ok((v, worst))
}

pub fn nonconvex_residuals(traj: &Trajectory, instance: &ProblemInstance) -> Result<NonconvexResiduals> {
    traj.check_shape(instance)?;
    let mut res = NonconvexResiduals {
        num_robots: instance.num_robots(),
        num_obstacles: instance.num_obstacles(),
        horizon: instance.horizon,
        robot_pairs: Vec::new(),
        obstacle_pairs: Vec::new(),
    };
    fill_residuals(traj.as_slice(), instance, 0.0, &mut res.robot_pairs, &mut res.obstacle_pairs);
    Ok(res)
}

/// Writes the separation residuals of flat positions `x`, with every
/// separation radius inflated by `clearance`, into the two buffers.
pub(crate) fn fill_residuals(
    x: &[f64],
    instance: &ProblemInstance,
    clearance: f64,
    robot_pairs: &mut Vec<f64>,
    obstacle_pairs: &mut Vec<f64>,
) {
    let n = instance.num_robots();
    let horizon = instance.horizon;
    robot_pairs.clear();
    obstacle_pairs.clear();
    robot_pairs.reserve(num_robot_pairs(n) * horizon);
    obstacle_pairs.reserve(n * instance.num_obstacles() * horizon);

    for i in 0..n {
        for j in i + 1..n {
            let sep = instance.robots[i].radius + instance.robots[j].radius + clearance;
            let sep2 = sep * sep;
            let (a, b) = (&x[i * horizon * 2..], &x[j * horizon * 2..]);
            for h in 0..horizon {
                let dx = a[2 * h] - b[2 * h];
                let dy = a[2 * h + 1] - b[2 * h + 1];
                robot_pairs.push(dx * dx + dy * dy - sep2);
            }
        }
    }
    for i in 0..n {
        let a = &x[i * horizon * 2..(i + 1) * horizon * 2];
        for o in &instance.obstacles {
            let sep = instance.robots[i].radius + o.radius + clearance;
            let sep2 = sep * sep;
            for h in 0..horizon {
                let dx = a[2 * h] - o.center[0];
                let dy = a[2 * h + 1] - o.center[1];
                obstacle_pairs.push(dx * dx + dy * dy - sep2);
            }
        }
    }
}

/// Per-family tolerances for [`is_feasible_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTolerance {
    /// Allowed convex violation (distance units).
    pub convex: f64,
    /// Allowed negative separation residual (squared distance units).
    pub separation: f64,
}

impl FeasibilityTolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { convex: tol, separation: tol }
    }
}

/// Feasible iff every convex violation is `≤ tol` and every separation
/// residual is `≥ −tol`.
pub fn is_feasible(traj: &Trajectory, instance: &ProblemInstance, tol: f64) -> Result<FeasibilityReport> {
    is_feasible_with(traj, instance, FeasibilityTolerance::uniform(tol))
}

pub fn is_feasible_with(
    traj: &Trajectory,
    instance: &ProblemInstance,
    tol: FeasibilityTolerance,
) -> Result<FeasibilityReport> {
    let (convex, mut candidates) = convex_violation_detail(traj, instance)?;
    let res = nonconvex_residuals(traj, instance)?;

    let feasible = convex.max() <= tol.convex && res.max_violation() <= tol.separation;

    if let Some((k, g)) = min_entry(&res.robot_pairs) {
        let (i, j, h) = res.robot_pair_indices(k);
        candidates.push(WorstConstraint { kind: ConstraintKind::RobotPair, indices: vec![i, j, h], value: -g });
    }
    if let Some((k, g)) = min_entry(&res.obstacle_pairs) {
        let (i, j, h) = res.obstacle_pair_indices(k);
        candidates.push(WorstConstraint {
            kind: ConstraintKind::RobotObstacle,
            indices: vec![i, j, h],
            value: -g,
        });
    }
    let worst_constraint = candidates
        .into_iter()
        .filter(|c| c.value > 0.0)
        .max_by(|a, b| a.value.total_cmp(&b.value));

    Ok(FeasibilityReport { instance_id: instance.instance_id.clone(), feasible, worst_constraint })
}

fn min_entry(values: &[f64]) -> Option<(usize, f64)> {
    values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    RobotRobot,
    RobotObstacle,
}

/// A separation violation found at one interpolated sample point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    /// Robot index.
    pub a: usize,
    /// Second robot or obstacle index.
    pub b: usize,
    /// Segment start step (the waypoint itself when `fraction == 0`).
    pub step: usize,
    pub fraction: f64,
    pub residual: f64,
}

fn lerp(p: Point, q: Point, s: f64) -> Point {
    [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
}

/// Checks separation at `substeps` evenly spaced points per segment (the
/// waypoint plus `substeps − 1` interior points) and at the final waypoint.
/// With `substeps == 1` this is exactly the waypoint check. A point collides
/// when its residual is below `−tol`.
pub fn check_collisions_interpolated(
    traj: &Trajectory,
    instance: &ProblemInstance,
    substeps: usize,
) -> Result<Vec<CollisionEvent>> {
    check_collisions_tol(traj, instance, substeps, 0.0)
}

pub fn check_collisions_tol(
    traj: &Trajectory,
    instance: &ProblemInstance,
    substeps: usize,
    tol: f64,
) -> Result<Vec<CollisionEvent>> {
    traj.check_shape(instance)?;
    let substeps = substeps.max(1);
    let horizon = traj.horizon();
    let n = traj.num_robots();

    // (step, fraction) sample points in time order.
    let mut samples = Vec::with_capacity((horizon - 1) * substeps + 1);
    for h in 0..horizon - 1 {
        for s in 0..substeps {
            samples.push((h, s as f64 / substeps as f64));
        }
    }
    samples.push((horizon - 1, 0.0));

    let at = |i: usize, (h, s): (usize, f64)| {
        if s == 0.0 {
            traj.point(i, h)
        } else {
            lerp(traj.point(i, h), traj.point(i, h + 1), s)
        }
    };

    let mut events = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let sep = instance.robots[i].radius + instance.robots[j].radius;
            for &sample in &samples {
                let g = dist_sq(at(i, sample), at(j, sample)) - sep * sep;
                if g < -tol {
                    events.push(CollisionEvent {
                        kind: CollisionKind::RobotRobot,
                        a: i,
                        b: j,
                        step: sample.0,
                        fraction: sample.1,
                        residual: g,
                    });
                }
            }
        }
    }
    for i in 0..n {
        for (j, o) in instance.obstacles.iter().enumerate() {
            let sep = instance.robots[i].radius + o.radius;
            for &sample in &samples {
                let g = dist_sq(at(i, sample), o.center) - sep * sep;
                if g < -tol {
                    events.push(CollisionEvent {
                        kind: CollisionKind::RobotObstacle,
                        a: i,
                        b: j,
                        step: sample.0,
                        fraction: sample.1,
                        residual: g,
                    });
                }
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{MapFamily, Obstacle, RobotSpec};
    use proptest::prelude::*;

    fn instance(robots: Vec<RobotSpec>, obstacles: Vec<Obstacle>, horizon: usize) -> ProblemInstance {
        ProblemInstance::new("t", MapFamily::Empty, 2.0, robots, obstacles, horizon, 1.0).unwrap()
    }

    fn robot(start: Point, goal: Point, v_max: f64) -> RobotSpec {
        RobotSpec { radius: 0.05, start, goal, v_max }
    }

    #[test]
    fn straight_line_is_convex_feasible() {
        let inst = instance(vec![robot([0.1, 0.1], [1.9, 1.5], 0.08), robot([1.9, 0.1], [0.1, 1.9], 0.08)], vec![], 64);
        let v = convex_violation(&Trajectory::straight_line(&inst), &inst).unwrap();
        assert!(v.max() < 1e-12, "{v:?}");
    }

    #[test]
    fn displaced_start_gives_endpoint_error() {
        let inst = instance(vec![robot([0.1, 0.1], [1.9, 1.5], 0.08)], vec![], 64);
        let mut t = Trajectory::straight_line(&inst);
        let p = t.point(0, 0);
        t.set_point(0, 0, [p[0] + 0.1, p[1]]);
        let v = convex_violation(&t, &inst).unwrap();
        assert!((v.endpoint_error - 0.1).abs() < 1e-12);
    }

    #[test]
    fn velocity_error_example() {
        let inst = instance(vec![robot([0.0, 0.0], [1.0, 0.0], 0.5)], vec![], 3);
        let t = Trajectory::from_points(&[vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]]).unwrap();
        let v = convex_violation(&t, &inst).unwrap();
        assert!((v.velocity_error - 0.5).abs() < 1e-15);
        assert_eq!(v.endpoint_error, 0.0);
    }

    #[test]
    fn workspace_exceedance() {
        let inst = instance(vec![robot([0.0, 0.0], [1.0, 0.0], 2.0)], vec![], 3);
        let t = Trajectory::from_points(&[vec![[0.0, 0.0], [-0.25, 2.1], [1.0, 0.0]]]).unwrap();
        assert!((convex_violation(&t, &inst).unwrap().workspace_error - 0.25).abs() < 1e-15);
    }

    fn pair_at_distance(d: f64) -> (ProblemInstance, Trajectory) {
        let inst = instance(vec![robot([0.5, 1.0], [0.5, 1.5], 1.0), robot([1.5, 1.0], [1.5, 1.5], 1.0)], vec![], 3);
        let t = Trajectory::from_points(&[
            vec![[0.5, 1.0], [1.0, 1.2], [0.5, 1.5]],
            vec![[1.5, 1.0], [1.0 + d, 1.2], [1.5, 1.5]],
        ])
        .unwrap();
        (inst, t)
    }

    #[test]
    fn robot_pair_residuals() {
        // Radii 0.125 and a 0.25 gap are exact in binary, so the residual is exactly zero.
        let wide = |start: Point, goal: Point| RobotSpec { radius: 0.125, start, goal, v_max: 1.0 };
        let inst = instance(vec![wide([0.5, 1.0], [0.5, 1.5]), wide([0.75, 1.0], [0.75, 1.5])], vec![], 4);
        let t = Trajectory::from_points(&[
            vec![[0.5, 1.0], [0.5, 1.25], [0.5, 1.375], [0.5, 1.5]],
            vec![[0.75, 1.0], [0.75, 1.25], [0.75, 1.375], [0.75, 1.5]],
        ])
        .unwrap();
        let r = nonconvex_residuals(&t, &inst).unwrap();
        assert_eq!(r.robot_pairs, vec![0.0; 4]);

        let (inst, t) = pair_at_distance(0.09);
        let r = nonconvex_residuals(&t, &inst).unwrap();
        assert!((r.robot_pair(0, 1, 1) - (0.09f64.powi(2) - 0.01)).abs() < 1e-15);
        assert!((r.robot_pair(0, 1, 1) + 0.0019).abs() < 1e-12);
    }

    #[test]
    fn obstacle_residual() {
        let inst = instance(
            vec![robot([0.2, 0.2], [1.8, 0.2], 1.0)],
            vec![Obstacle { center: [1.0, 1.0], radius: 0.05 }],
            3,
        );
        let t = Trajectory::from_points(&[vec![[0.2, 0.2], [1.2, 1.0], [1.8, 0.2]]]).unwrap();
        let r = nonconvex_residuals(&t, &inst).unwrap();
        assert!((r.obstacle_pair(0, 0, 1) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn feasibility_tolerance() {
        let (inst, t) = pair_at_distance(0.09);
        let rep = is_feasible(&t, &inst, 0.0).unwrap();
        assert!(!rep.feasible);
        let worst = rep.worst_constraint.unwrap();
        assert_eq!(worst.kind, ConstraintKind::RobotPair);
        assert_eq!(worst.indices, vec![0, 1, 1]);
        assert!(is_feasible(&t, &inst, 0.002).unwrap().feasible);

        let inst = instance(vec![robot([0.1, 0.1], [1.9, 1.5], 0.08)], vec![], 64);
        let rep = is_feasible(&Trajectory::straight_line(&inst), &inst, 0.0).unwrap();
        assert!(rep.feasible);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["feasible"], true);
    }

    #[test]
    fn swap_collides_only_between_waypoints() {
        // Robots exchange places in one step; they meet at the midpoint.
        let inst = instance(vec![robot([0.8, 1.0], [1.2, 1.0], 1.0), robot([1.2, 1.0], [0.8, 1.0], 1.0)], vec![], 2);
        let t = Trajectory::straight_line(&inst);
        assert!(check_collisions_interpolated(&t, &inst, 1).unwrap().is_empty());
        let events = check_collisions_interpolated(&t, &inst, 4).unwrap();
        // Interpolated distance at fraction s is 0.4 * |1 - 2s|: 0.2 at s = 1/4, 0 at s = 1/2.
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].fraction, 0.5);
        assert!((events[0].residual + 0.01).abs() < 1e-12);
    }

    #[test]
    fn stationary_and_single_robot_have_no_events() {
        let inst = instance(vec![robot([0.5, 1.0], [0.5, 1.0], 1.0), robot([1.0, 1.0], [1.0, 1.0], 1.0)], vec![], 5);
        let t = Trajectory::straight_line(&inst);
        for s in 1..6 {
            assert!(check_collisions_interpolated(&t, &inst, s).unwrap().is_empty());
        }
        let inst = instance(vec![robot([0.2, 1.0], [1.8, 1.0], 1.0)], vec![], 5);
        let t = Trajectory::straight_line(&inst);
        assert!(check_collisions_interpolated(&t, &inst, 7)
            .unwrap()
            .iter()
            .all(|e| e.kind != CollisionKind::RobotRobot));
    }

    #[test]
    fn pair_index_round_trip() {
        let r = NonconvexResiduals {
            num_robots: 5,
            num_obstacles: 3,
            horizon: 4,
            robot_pairs: vec![0.0; 40],
            obstacle_pairs: vec![0.0; 60],
        };
        let mut k = 0;
        for i in 0..5 {
            for j in i + 1..5 {
                for h in 0..4 {
                    assert_eq!(r.robot_pair_index(i, j, h), k);
                    assert_eq!(r.robot_pair_indices(k), (i, j, h));
                    k += 1;
                }
            }
        }
        assert_eq!(r.obstacle_pair_indices(17), (1, 1, 1));
    }

    fn arb_traj(n: usize, horizon: usize) -> impl Strategy<Value = Trajectory> {
        prop::collection::vec(0.0..2.0f64, n * horizon * 2)
            .prop_map(move |v| Trajectory::new(n, horizon, v).unwrap())
    }

    fn random_instance(n: usize, horizon: usize) -> ProblemInstance {
        let robots = (0..n)
            .map(|i| {
                let y = 0.1 + 0.2 * i as f64;
                RobotSpec { radius: 0.03 + 0.01 * i as f64, start: [0.1, y], goal: [1.9, y], v_max: 1.0 }
            })
            .collect();
        let obstacles = vec![Obstacle { center: [1.0, 1.5], radius: 0.07 }];
        instance(robots, obstacles, horizon)
    }

    proptest! {
        #[test]
        fn discrete_check_matches_residual_signs(t in arb_traj(3, 5)) {
            let inst = random_instance(3, 5);
            let r = nonconvex_residuals(&t, &inst).unwrap();
            let events = check_collisions_interpolated(&t, &inst, 1).unwrap();
            for i in 0..3 {
                for j in i + 1..3 {
                    for h in 0..5 {
                        let flagged = events.iter().any(|e| {
                            e.kind == CollisionKind::RobotRobot && (e.a, e.b, e.step) == (i, j, h)
                        });
                        prop_assert_eq!(flagged, r.robot_pair(i, j, h) < 0.0);
                        prop_assert_eq!(r.robot_pair(i, j, h), r.robot_pair(j, i, h));
                    }
                }
                for h in 0..5 {
                    let flagged = events.iter().any(|e| e.kind == CollisionKind::RobotObstacle && (e.a, e.step) == (i, h));
                    prop_assert_eq!(flagged, r.obstacle_pair(i, 0, h) < 0.0);
                }
            }
        }

        #[test]
        fn spreading_pairs_never_lowers_residuals(t in arb_traj(2, 4), scale in 1.0..3.0f64) {
            let inst = random_instance(2, 4);
            let mut spread = t.clone();
            for h in 0..4 {
                let (p, q) = (t.point(0, h), t.point(1, h));
                let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                spread.set_point(0, h, [mid[0] + scale * (p[0] - mid[0]), mid[1] + scale * (p[1] - mid[1])]);
                spread.set_point(1, h, [mid[0] + scale * (q[0] - mid[0]), mid[1] + scale * (q[1] - mid[1])]);
            }
            let before = nonconvex_residuals(&t, &inst).unwrap();
            let after = nonconvex_residuals(&spread, &inst).unwrap();
            for (a, b) in before.robot_pairs.iter().zip(&after.robot_pairs) {
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn straight_lines_within_speed_are_convex_feasible(
            sx in 0.0..2.0f64, sy in 0.0..2.0f64, gx in 0.0..2.0f64, gy in 0.0..2.0f64, horizon in 2usize..40,
        ) {
            let d = dist([sx, sy], [gx, gy]);
            let v_max = (d / (horizon - 1) as f64).max(1e-3) * 1.0000001;
            let inst = instance(vec![robot([sx, sy], [gx, gy], v_max)], vec![], horizon);
            let v = convex_violation(&Trajectory::straight_line(&inst), &inst).unwrap();
            prop_assert!(v.max() < 1e-12);
        }
    }
}
