//! Joint trajectories of all robots over the planning horizon.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Point, ProblemInstance};

/// Positions of `num_robots` robots over `horizon` steps.
///
/// Stored flat and robot-major: coordinate `c` of robot `i` at step `h`
/// lives at `(i * horizon + h) * 2 + c`. Steps are zero-based here; step 0
/// is the start and step `horizon - 1` the goal.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    num_robots: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(num_robots: usize, horizon: usize, data: Vec<f64>) -> Result<Self> {
        if num_robots == 0 || horizon < 2 {
            return Err(Error::Shape {
                expected: "at least 1 robot and horizon >= 2".into(),
                found: format!("{num_robots} robots, horizon {horizon}"),
            });
        }
        if data.len() != num_robots * horizon * 2 {
            return Err(Error::Shape {
                expected: format!("{} values", num_robots * horizon * 2),
                found: format!("{} values", data.len()),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape {
                expected: "finite coordinates".into(),
                found: format!("non-finite value at flat index {k}"),
            });
        }
        Ok(Self { num_robots, horizon, data })
    }

    pub fn zeros(num_robots: usize, horizon: usize) -> Self {
        Self { num_robots, horizon, data: vec![0.0; num_robots * horizon * 2] }
    }

    pub fn from_points(points: &[Vec<Point>]) -> Result<Self> {
        let horizon = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != horizon) {
            return Err(Error::Shape {
                expected: format!("every robot with {horizon} steps"),
                found: "ragged positions".into(),
            });
        }
        let data = points.iter().flatten().flat_map(|p| p.iter().copied()).collect();
        Self::new(points.len(), horizon, data)
    }

    /// Constant-speed straight lines from every start to every goal.
    pub fn straight_line(instance: &ProblemInstance) -> Self {
        let h_max = instance.horizon;
        let mut traj = Self::zeros(instance.num_robots(), h_max);
        for (i, r) in instance.robots.iter().enumerate() {
            for h in 0..h_max {
                let s = h as f64 / (h_max - 1) as f64;
                traj.set_point(
                    i,
                    h,
                    [r.start[0] + s * (r.goal[0] - r.start[0]), r.start[1] + s * (r.goal[1] - r.start[1])],
                );
            }
        }
        traj
    }

    pub fn num_robots(&self) -> usize {
        self.num_robots
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn point(&self, i: usize, h: usize) -> Point {
        let k = (i * self.horizon + h) * 2;
        [self.data[k], self.data[k + 1]]
    }

    #[inline]
    pub fn set_point(&mut self, i: usize, h: usize, p: Point) {
        let k = (i * self.horizon + h) * 2;
        self.data[k] = p[0];
        self.data[k + 1] = p[1];
    }

    pub fn robot(&self, i: usize) -> &[f64] {
        let n = self.horizon * 2;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn robot_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.horizon * 2;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn points(&self) -> Vec<Vec<Point>> {
        (0..self.num_robots)
            .map(|i| (0..self.horizon).map(|h| self.point(i, h)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.num_robots == other.num_robots && self.horizon == other.horizon
    }

    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.distance_sq(other).sqrt()
    }

    /// Checks that the trajectory has the robot count and horizon of `instance`.
    pub fn check_shape(&self, instance: &ProblemInstance) -> Result<()> {
        if self.num_robots != instance.num_robots() || self.horizon != instance.horizon {
            return Err(Error::Shape {
                expected: format!("{} robots x {} steps", instance.num_robots(), instance.horizon),
                found: format!("{} robots x {} steps", self.num_robots, self.horizon),
            });
        }
        Ok(())
    }

    pub fn to_file(&self, instance_id: &str) -> TrajectoryFile {
        TrajectoryFile { instance_id: instance_id.to_string(), positions: self.points() }
    }
}

/// On-disk form of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub instance_id: String,
    pub positions: Vec<Vec<Point>>,
}

impl TrajectoryFile {
    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::from_points(&self.positions)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Trajectory::new(1, 1, vec![0.0; 2]).is_err());
        assert!(Trajectory::new(2, 3, vec![0.0; 11]).is_err());
        assert!(Trajectory::new(1, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Trajectory::from_points(&[vec![[0.0, 0.0]; 3], vec![[0.0, 0.0]; 2]]).is_err());
    }

    #[test]
    fn layout_is_robot_major() {
        let t = Trajectory::from_points(&[
            vec![[0.0, 1.0], [2.0, 3.0]],
            vec![[4.0, 5.0], [6.0, 7.0]],
        ])
        .unwrap();
        assert_eq!(t.as_slice(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(t.point(1, 0), [4.0, 5.0]);
        assert_eq!(t.robot(1), &[4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let t = Trajectory::new(1, 2, vec![0.1 + 0.2, 1.0 / 3.0, std::f64::consts::PI, 1e-300]).unwrap();
        let json = serde_json::to_string(&t.to_file("x")).unwrap();
        let back: TrajectoryFile = serde_json::from_str(&json).unwrap();
        let t2 = back.trajectory().unwrap();
        for (a, b) in t.as_slice().iter().zip(t2.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
