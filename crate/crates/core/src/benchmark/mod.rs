//! Benchmark generation: six map families, start/goal assignment and
//! seeded suites of problem instances with a manifest.
//!
//! Corridor, shelf and room layouts are parametric reconstructions; walls
//! are chains of discs whose center spacing never exceeds their radius, so
//! the disc separation constraint covers them without gaps.

mod maps;
mod suite;
mod tasks;

pub use maps::{generate_map, MapLayout, Zone};
pub use suite::{benchmark_specs, generate_benchmark, generate_specs, generate_suite, write_suite, BenchmarkSpec, Manifest, ManifestEntry};
pub use tasks::assign_tasks;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_WORKSPACE_SIDE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorridorParams {
    pub robot_radius: f64,
    /// Free passage width beyond one robot diameter.
    pub passage_clearance: f64,
    /// Chamber width in robot diameters.
    pub chamber_factor: f64,
    pub chamber_length: f64,
    /// Uniform shift of the chamber center along the corridor.
    pub chamber_jitter: f64,
    /// Distance of the placement zones from the map edge.
    pub zone_inset: f64,
    pub zone_length: f64,
    /// Half-height of the placement zones about the corridor axis.
    pub zone_lateral: f64,
}

impl Default for CorridorParams {
    fn default() -> Self {
        Self {
            robot_radius: 0.1,
            passage_clearance: 0.05,
            chamber_factor: 3.0,
            chamber_length: 0.6,
            chamber_jitter: 0.15,
            zone_inset: 0.12,
            zone_length: 0.28,
            zone_lateral: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShelfParams {
    pub rows: usize,
    pub cols: usize,
    /// Aisle width in robot diameters.
    pub aisle_factor: f64,
    /// Per-block position and size perturbation.
    pub jitter: f64,
    pub zone_margin: f64,
}

impl Default for ShelfParams {
    fn default() -> Self {
        Self { rows: 2, cols: 3, aisle_factor: 3.0, jitter: 0.03, zone_margin: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoomParams {
    /// Door width in robot diameters.
    pub door_factor: f64,
    /// Minimum distance between a door jamb and a wall end.
    pub door_margin: f64,
    pub zone_margin: f64,
}

impl Default for RoomParams {
    fn default() -> Self {
        Self { door_factor: 2.5, door_margin: 0.1, zone_margin: 0.01 }
    }
}

/// Geometry and kinematics shared by every generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    pub workspace_side: f64,
    pub robot_radius: f64,
    pub horizon: usize,
    pub dt: f64,
    pub v_max: f64,
    pub basic_obstacles: usize,
    pub dense_obstacles: usize,
    pub obstacle_radius_min: f64,
    pub obstacle_radius_max: f64,
    /// Free gap kept between random obstacles and to the map edge.
    pub obstacle_gap: f64,
    pub wall_disc_radius: f64,
    /// Extra clearance over the sum of radii when placing starts and goals.
    pub placement_gap: f64,
    pub max_placement_attempts: usize,
    pub corridor: CorridorParams,
    pub shelf: ShelfParams,
    pub room: RoomParams,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            workspace_side: DEFAULT_WORKSPACE_SIDE,
            robot_radius: 0.05,
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            v_max: 0.08,
            basic_obstacles: 10,
            dense_obstacles: 20,
            obstacle_radius_min: 0.05,
            obstacle_radius_max: 0.1,
            obstacle_gap: 0.1,
            wall_disc_radius: 0.05,
            placement_gap: 0.02,
            max_placement_attempts: 20_000,
            corridor: CorridorParams::default(),
            shelf: ShelfParams::default(),
            room: RoomParams::default(),
        }
    }
}

/// SplitMix64 finalizer; derives independent child seeds.
pub fn mix_seed(parent: u64, salt: u64) -> u64 {
    let mut z = parent ^ salt.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
