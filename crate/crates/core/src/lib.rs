//! Multi-robot motion planning by projected score-based diffusion.
//!
//! Trajectories for all robots are sampled jointly by annealed Langevin
//! dynamics on a learned score, and every sampling step is projected back
//! onto the feasible set: fixed endpoints, speed limits, the workspace box
//! and disc separation between robots and from obstacles.

pub mod benchmark;
pub mod constraints;
pub mod diffusion;
pub mod error;
pub mod evaluation;
pub mod instance;
pub mod projection;
pub mod trajectory;

pub use error::{Error, Result};
pub use instance::{MapFamily, Obstacle, Point, ProblemInstance, RobotSpec};
pub use trajectory::{Trajectory, TrajectoryFile};
