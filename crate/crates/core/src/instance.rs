//! Problem instances: workspace, robots, obstacles and their JSON form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane, serialized as `[x, y]`.
pub type Point = [f64; 2];

pub const DEFAULT_WORKSPACE_SIDE: f64 = 2.0;
pub const DEFAULT_HORIZON: usize = 64;
pub const DEFAULT_DT: f64 = 1.0;

#[inline]
pub fn dist_sq(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    dist_sq(a, b).sqrt()
}

/// A disc-shaped robot with its task and speed limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub radius: f64,
    pub start: Point,
    pub goal: Point,
    /// Maximum speed in workspace units per unit time.
    pub v_max: f64,
}

/// A static disc obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFamily {
    Empty,
    Basic,
    Dense,
    Corridor,
    Shelf,
    Room,
}

impl MapFamily {
    pub const ALL: [MapFamily; 6] = [
        MapFamily::Empty,
        MapFamily::Basic,
        MapFamily::Dense,
        MapFamily::Corridor,
        MapFamily::Shelf,
        MapFamily::Room,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapFamily::Empty => "empty",
            MapFamily::Basic => "basic",
            MapFamily::Dense => "dense",
            MapFamily::Corridor => "corridor",
            MapFamily::Shelf => "shelf",
            MapFamily::Room => "room",
        }
    }

    /// Random maps place tasks anywhere; practical maps use predefined zones.
    pub fn is_random(self) -> bool {
        matches!(self, MapFamily::Empty | MapFamily::Basic | MapFamily::Dense)
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MapFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown map family `{s}`")))
    }
}

/// One planning problem. Construct through [`ProblemInstance::new`] or the
/// JSON loaders so the placement invariants are checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub workspace_side: f64,
    pub robots: Vec<RobotSpec>,
    pub obstacles: Vec<Obstacle>,
    pub horizon: usize,
    pub dt: f64,
    pub map_family: MapFamily,
    pub instance_id: String,
}

impl ProblemInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance_id: impl Into<String>,
        map_family: MapFamily,
        workspace_side: f64,
        robots: Vec<RobotSpec>,
        obstacles: Vec<Obstacle>,
        horizon: usize,
        dt: f64,
    ) -> Result<Self> {
        let instance = Self {
            workspace_side,
            robots,
            obstacles,
            horizon,
            dt,
            map_family,
            instance_id: instance_id.into(),
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn num_obstacles(&self) -> usize {
        self.obstacles.len()
    }

    /// Largest displacement robot `i` may make between consecutive steps.
    pub fn step_limit(&self, i: usize) -> f64 {
        self.robots[i].v_max * self.dt
    }

    pub fn in_workspace(&self, p: Point) -> bool {
        p.iter().all(|&c| (0.0..=self.workspace_side).contains(&c))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(format!("{}: {msg}", self.instance_id)));

        if !(self.workspace_side.is_finite() && self.workspace_side > 0.0) {
            return bad(format!("workspace side {} must be positive", self.workspace_side));
        }
        if self.robots.is_empty() {
            return bad("no robots".into());
        }
        if self.horizon < 2 {
            return bad(format!("horizon {} must be at least 2", self.horizon));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt {} must be positive", self.dt));
        }
        for (i, r) in self.robots.iter().enumerate() {
            if !(r.radius.is_finite() && r.radius > 0.0) {
                return bad(format!("robot {i} radius {} must be positive", r.radius));
            }
            if !(r.v_max.is_finite() && r.v_max > 0.0) {
                return bad(format!("robot {i} v_max {} must be positive", r.v_max));
            }
            if !self.in_workspace(r.start) || !self.in_workspace(r.goal) {
                return bad(format!("robot {i} start or goal outside the workspace"));
            }
        }
        for (j, o) in self.obstacles.iter().enumerate() {
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return bad(format!("obstacle {j} radius {} must be positive", o.radius));
            }
            if !o.center.iter().all(|c| c.is_finite()) {
                return bad(format!("obstacle {j} center is not finite"));
            }
        }

        for i in 0..self.robots.len() {
            for j in i + 1..self.robots.len() {
                let (a, b) = (&self.robots[i], &self.robots[j]);
                let sep = a.radius + b.radius;
                if dist(a.start, b.start) < sep {
                    return bad(format!("starts of robots {i} and {j} overlap"));
                }
                if dist(a.goal, b.goal) < sep {
                    return bad(format!("goals of robots {i} and {j} overlap"));
                }
            }
            let r = &self.robots[i];
            for (j, o) in self.obstacles.iter().enumerate() {
                let sep = r.radius + o.radius;
                if dist(r.start, o.center) < sep {
                    return bad(format!("start of robot {i} overlaps obstacle {j}"));
                }
                if dist(r.goal, o.center) < sep {
                    return bad(format!("goal of robot {i} overlaps obstacle {j}"));
                }
            }
        }
        Ok(())
    }

    /// Minimum center distance between robots `i` and `j`.
    pub fn separation_radius_robots(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.robots.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::Index { what: "robot", index: idx, len: n });
            }
        }
        if i == j {
            return Err(Error::SelfPair(i));
        }
        Ok(self.robots[i].radius + self.robots[j].radius)
    }

    /// Minimum distance between robot `i` and the center of obstacle `j`.
    pub fn separation_radius_obstacle(&self, i: usize, j: usize) -> Result<f64> {
        let robot = self.robots.get(i).ok_or(Error::Index {
            what: "robot",
            index: i,
            len: self.robots.len(),
        })?;
        let obstacle = self.obstacles.get(j).ok_or(Error::Index {
            what: "obstacle",
            index: j,
            len: self.obstacles.len(),
        })?;
        Ok(robot.radius + obstacle.radius)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let instance: Self = serde_json::from_str(s)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
