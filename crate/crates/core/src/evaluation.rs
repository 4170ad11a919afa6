//! Benchmark metrics per case and aggregated per (family, robot count).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmark::Manifest;
use crate::constraints::{check_collisions_tol, convex_violation, CollisionKind};
use crate::error::{Error, Result};
use crate::instance::{MapFamily, ProblemInstance};
use crate::trajectory::Trajectory;

/// Endpoint and speed errors allowed in a successful case.
pub const SUCCESS_TOL: f64 = 1e-4;

/// Where separation is checked: at waypoints only, or also at evenly spaced
/// points along each segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Discrete,
    Interpolated(usize),
}

impl Default for EvalMode {
    fn default() -> Self {
        EvalMode::Interpolated(4)
    }
}

impl EvalMode {
    fn substeps(self) -> usize {
        match self {
            EvalMode::Discrete => 1,
            EvalMode::Interpolated(k) => k.max(1),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::Discrete => f.write_str("discrete"),
            EvalMode::Interpolated(k) => write!(f, "interpolated:{k}"),
        }
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    /// `discrete`, `interpolated` or `interpolated:<substeps>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "discrete" => Ok(EvalMode::Discrete),
            None if s == "interpolated" => Ok(EvalMode::default()),
            Some(("interpolated", k)) => match k.parse() {
                Ok(k) if k > 0 => Ok(EvalMode::Interpolated(k)),
                _ => Err(Error::InvalidConfig(format!("bad substep count `{k}`"))),
            },
            _ => Err(Error::InvalidConfig(format!("unknown evaluation mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub instance_id: String,
    pub family: MapFamily,
    pub num_robots: usize,
    pub success: bool,
    pub path_length_per_robot: f64,
    pub acceleration: f64,
    pub collision_ratio: f64,
    pub collision_events: usize,
    pub endpoint_error: f64,
    pub velocity_error: f64,
}

/// Scores one trajectory. Separation is checked with zero tolerance.
pub fn evaluate_case(traj: &Trajectory, instance: &ProblemInstance, mode: EvalMode) -> Result<CaseRecord> {
    traj.check_shape(instance)?;
    let n = instance.num_robots();
    let h = instance.horizon;
    let convex = convex_violation(traj, instance)?;
    let events = check_collisions_tol(traj, instance, mode.substeps(), 0.0)?;

    let mut involved = BTreeSet::new();
    for e in &events {
        involved.insert(e.a);
        if e.kind == CollisionKind::RobotRobot {
            involved.insert(e.b);
        }
    }

    let mut length = 0.0;
    let mut accel = 0.0;
    for i in 0..n {
        let mut prev_v: Option<[f64; 2]> = None;
        for step in 1..h {
            let (p, q) = (traj.point(i, step - 1), traj.point(i, step));
            let d = [q[0] - p[0], q[1] - p[1]];
            length += d[0].hypot(d[1]);
            let v = [d[0] / instance.dt, d[1] / instance.dt];
            if let Some(u) = prev_v {
                accel += (v[0] - u[0]).hypot(v[1] - u[1]);
            }
            prev_v = Some(v);
        }
    }
    let accel_terms = n * h.saturating_sub(2);

    let success =
        events.is_empty() && convex.endpoint_error <= SUCCESS_TOL && convex.velocity_error <= SUCCESS_TOL;
    Ok(CaseRecord {
        instance_id: instance.instance_id.clone(),
        family: instance.map_family,
        num_robots: n,
        success,
        path_length_per_robot: length / n as f64,
        acceleration: if accel_terms > 0 { accel / accel_terms as f64 } else { 0.0 },
        collision_ratio: involved.len() as f64 / n as f64,
        collision_events: events.len(),
        endpoint_error: convex.endpoint_error,
        velocity_error: convex.velocity_error,
    })
}

/// Metrics for one (family, robot count) group. Path length and
/// acceleration average over successful cases only and are absent when
/// there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub family: MapFamily,
    pub num_robots: usize,
    pub cases: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub path_length: Option<f64>,
    pub acceleration: Option<f64>,
    pub collision_ratio: f64,
    pub collision_events: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_instance: Vec<CaseRecord>,
    pub aggregate: Vec<AggregateRow>,
}

/// Groups records by family and robot count. With a manifest, every listed
/// instance must have a record.
pub fn aggregate(records: Vec<CaseRecord>, manifest: Option<&Manifest>) -> Result<EvaluationReport> {
    if let Some(m) = manifest {
        let have: BTreeSet<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
        let missing: Vec<String> = m
            .entries
            .iter()
            .filter(|e| !have.contains(e.instance_id.as_str()))
            .map(|e| e.instance_id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingRecords(missing));
        }
    }
    let mut groups: BTreeMap<(MapFamily, usize), Vec<&CaseRecord>> = BTreeMap::new();
    for r in &records {
        groups.entry((r.family, r.num_robots)).or_default().push(r);
    }
    let aggregate = groups
        .into_iter()
        .map(|((family, num_robots), rs)| {
            let successes: Vec<&&CaseRecord> = rs.iter().filter(|r| r.success).collect();
            let mean_over = |f: fn(&CaseRecord) -> f64| {
                (!successes.is_empty()).then(|| successes.iter().map(|r| f(r)).sum::<f64>() / successes.len() as f64)
            };
            AggregateRow {
                family,
                num_robots,
                cases: rs.len(),
                successes: successes.len(),
                success_rate: successes.len() as f64 / rs.len() as f64,
                path_length: mean_over(|r| r.path_length_per_robot),
                acceleration: mean_over(|r| r.acceleration),
                collision_ratio: rs.iter().map(|r| r.collision_ratio).sum::<f64>() / rs.len() as f64,
                collision_events: rs.iter().map(|r| r.collision_events).sum(),
            }
        })
        .collect();
    Ok(EvaluationReport { per_instance: records, aggregate })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

impl EvaluationReport {
    /// Long format: `family,robots,metric,value` with metrics S, L, A, C.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,robots,metric,value\n");
        for r in &self.aggregate {
            for (metric, value) in [
                ("S", r.success_rate.to_string()),
                ("L", opt(r.path_length)),
                ("A", opt(r.acceleration)),
                ("C", r.collision_ratio.to_string()),
            ] {
                out.push_str(&format!("{},{},{metric},{value}\n", r.family, r.num_robots));
            }
        }
        out
    }

    pub fn success_bars_csv(&self) -> String {
        let mut out = String::from("family,robots,cases,success_rate\n");
        for r in &self.aggregate {
            out.push_str(&format!("{},{},{},{}\n", r.family, r.num_robots, r.cases, r.success_rate));
        }
        out
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `success_bars.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(self)?)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        fs::write(dir.join("success_bars.csv"), self.success_bars_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Obstacle, RobotSpec};
    use proptest::prelude::*;

    fn instance(robots: Vec<RobotSpec>, horizon: usize, dt: f64) -> ProblemInstance {
        ProblemInstance::new("e", MapFamily::Empty, 2.0, robots, vec![], horizon, dt).unwrap()
    }

    fn spec(start: [f64; 2], goal: [f64; 2]) -> RobotSpec {
        RobotSpec { radius: 0.05, start, goal, v_max: 0.5 }
    }

    #[test]
    fn straight_unit_line() {
        let inst = instance(vec![spec([0.0, 0.5], [1.0, 0.5])], 9, 1.0);
        let t = Trajectory::straight_line(&inst);
        let r = evaluate_case(&t, &inst, EvalMode::Discrete).unwrap();
        assert!((r.path_length_per_robot - 1.0).abs() < 1e-12);
        assert!(r.acceleration < 1e-12);
        assert!(r.success);
        assert_eq!(r.collision_ratio, 0.0);
    }

    #[test]
    fn overlap_counts_both_robots() {
        let inst = instance(vec![spec([0.2, 1.0], [1.0, 1.0]), spec([1.8, 1.0], [1.0, 1.3])], 3, 1.0);
        let t = Trajectory::from_points(&[
            vec![[0.2, 1.0], [0.6, 1.0], [1.0, 1.0]],
            vec![[1.8, 1.0], [1.4, 1.0], [1.0, 1.3]],
        ])
        .unwrap();
        let r = evaluate_case(&t, &inst, EvalMode::Discrete).unwrap();
        assert!(r.success);
        let t = Trajectory::from_points(&[
            vec![[0.2, 1.0], [0.96, 1.0], [1.0, 1.0]],
            vec![[1.8, 1.0], [1.04, 1.0], [1.0, 1.3]],
        ])
        .unwrap();
        let r = evaluate_case(&t, &inst, EvalMode::Discrete).unwrap();
        assert!(!r.success);
        assert_eq!(r.collision_ratio, 1.0);
    }

    #[test]
    fn right_angle_turn_acceleration() {
        let (s, dt) = (0.2, 0.5);
        let inst = instance(vec![spec([0.0, 0.0], [0.4, 0.4])], 5, dt);
        let t = Trajectory::from_points(&[vec![[0.0, 0.0], [0.2, 0.0], [0.4, 0.0], [0.4, 0.2], [0.4, 0.4]]]).unwrap();
        let r = evaluate_case(&t, &inst, EvalMode::Discrete).unwrap();
        // Three velocity differences; only the turn contributes.
        assert!((r.acceleration * 3.0 - s * 2f64.sqrt() / dt).abs() < 1e-12);
    }

    #[test]
    fn endpoint_miss_fails() {
        let inst = instance(vec![spec([0.0, 0.5], [1.0, 0.5])], 5, 1.0);
        let mut t = Trajectory::straight_line(&inst);
        t.set_point(0, 4, [1.0, 0.5002]);
        let r = evaluate_case(&t, &inst, EvalMode::Discrete).unwrap();
        assert!(!r.success && r.collision_events == 0);
    }

    #[test]
    fn interpolation_catches_tunneling() {
        let mut inst = instance(vec![spec([0.5, 1.0], [1.5, 1.0])], 2, 1.0);
        inst.robots[0].v_max = 1.0;
        inst.obstacles.push(Obstacle { center: [1.0, 1.0], radius: 0.1 });
        let t = Trajectory::straight_line(&inst);
        assert!(evaluate_case(&t, &inst, EvalMode::Discrete).unwrap().success);
        assert!(!evaluate_case(&t, &inst, EvalMode::Interpolated(4)).unwrap().success);
    }

    fn record(id: &str, family: MapFamily, success: bool, c: f64) -> CaseRecord {
        CaseRecord {
            instance_id: id.into(),
            family,
            num_robots: 3,
            success,
            path_length_per_robot: 2.0,
            acceleration: 0.1,
            collision_ratio: c,
            collision_events: usize::from(c > 0.0),
            endpoint_error: 0.0,
            velocity_error: 0.0,
        }
    }

    #[test]
    fn aggregate_rates_and_exclusions() {
        let mut recs: Vec<CaseRecord> =
            (0..10).map(|k| record(&format!("a{k}"), MapFamily::Basic, k != 0, 0.0)).collect();
        recs[0].collision_ratio = 1.0 / 3.0;
        recs.extend((0..4).map(|k| record(&format!("b{k}"), MapFamily::Dense, false, 1.0)));
        let rep = aggregate(recs, None).unwrap();
        assert_eq!(rep.aggregate.len(), 2);
        let basic = &rep.aggregate[0];
        assert_eq!(basic.success_rate, 0.9);
        assert_eq!(basic.path_length, Some(2.0));
        let dense = &rep.aggregate[1];
        assert_eq!(dense.success_rate, 0.0);
        assert_eq!(dense.path_length, None);
        assert_eq!(dense.acceleration, None);
        assert_eq!(dense.collision_ratio, 1.0);
        assert!(rep.to_csv().contains("dense,3,L,\n"));
        assert!(rep.to_csv().contains("basic,3,S,0.9\n"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("discrete".parse::<EvalMode>().unwrap(), EvalMode::Discrete);
        assert_eq!("interpolated".parse::<EvalMode>().unwrap(), EvalMode::Interpolated(4));
        assert_eq!("interpolated:8".parse::<EvalMode>().unwrap(), EvalMode::Interpolated(8));
        assert!("interpolated:0".parse::<EvalMode>().is_err());
        assert!("smooth".parse::<EvalMode>().is_err());
    }

    proptest! {
        #[test]
        fn success_implies_no_collisions_and_relabel_invariance(
            pts in proptest::collection::vec((0.1f64..1.9, 0.1f64..1.9), 8)
        ) {
            let a: Vec<[f64; 2]> = pts[..4].iter().map(|&(x, y)| [x, y]).collect();
            let b: Vec<[f64; 2]> = pts[4..].iter().map(|&(x, y)| [x, y]).collect();
            let robots = vec![
                RobotSpec { radius: 0.01, start: a[0], goal: a[3], v_max: 3.0 },
                RobotSpec { radius: 0.01, start: b[0], goal: b[3], v_max: 3.0 },
            ];
            prop_assume!(crate::instance::dist(a[0], b[0]) > 0.02 && crate::instance::dist(a[3], b[3]) > 0.02);
            let inst = instance(robots.clone(), 4, 1.0);
            let t = Trajectory::from_points(&[a.clone(), b.clone()]).unwrap();
            let r = evaluate_case(&t, &inst, EvalMode::Interpolated(3)).unwrap();
            if r.success {
                prop_assert_eq!(r.collision_ratio, 0.0);
            }
            let swapped = instance(vec![robots[1].clone(), robots[0].clone()], 4, 1.0);
            let ts = Trajectory::from_points(&[b, a]).unwrap();
            let rs = evaluate_case(&ts, &swapped, EvalMode::Interpolated(3)).unwrap();
            prop_assert!((r.path_length_per_robot - rs.path_length_per_robot).abs() < 1e-12);
            prop_assert_eq!(r.success, rs.success);
        }

        #[test]
        fn aggregate_success_rate_is_exact_mean(flags in proptest::collection::vec(any::<bool>(), 1..40)) {
            let recs: Vec<CaseRecord> = flags
                .iter()
                .enumerate()
                .map(|(k, &s)| record(&k.to_string(), MapFamily::Room, s, 0.0))
                .collect();
            let rep = aggregate(recs, None).unwrap();
            let expected = flags.iter().filter(|&&s| s).count() as f64 / flags.len() as f64;
            prop_assert_eq!(rep.aggregate[0].success_rate, expected);
        }
    }
}
