use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mrmp_core::benchmark::Manifest;
use mrmp_core::{MapFamily, ProblemInstance, Trajectory, TrajectoryFile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";
pub const RUN_RECORD: &str = "run.json";

/// Which instances of a directory a command works on.
#[derive(Clone, Debug, Default)]
pub struct InstanceFilter {
    pub family: Option<MapFamily>,
    pub robots: Option<usize>,
    pub limit: Option<usize>,
}

impl InstanceFilter {
    fn keeps(&self, inst: &ProblemInstance) -> bool {
        self.family.is_none_or(|f| f == inst.map_family) && self.robots.is_none_or(|n| n == inst.num_robots())
    }
}

pub struct InstanceSet {
    pub instances: Vec<ProblemInstance>,
    pub manifest: Option<Manifest>,
}

/// Loads instances in manifest order when `manifest.json` exists, otherwise
/// every other `*.json` file in name order. A path to a single file loads
/// just that instance.
pub fn load_instances(path: &Path, filter: &InstanceFilter) -> Result<InstanceSet> {
    if path.is_file() {
        let inst = ProblemInstance::load(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(InstanceSet { instances: vec![inst], manifest: None });
    }
    let manifest_path = path.join(MANIFEST);
    let (files, manifest): (Vec<PathBuf>, _) = if manifest_path.is_file() {
        let m = Manifest::load(&manifest_path).with_context(|| format!("loading {}", manifest_path.display()))?;
        (m.entries.iter().map(|e| path.join(format!("{}.json", e.instance_id))).collect(), Some(m))
    } else {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|e| e == "json")
                    && p.file_name().is_some_and(|n| n != MANIFEST && n != RUN_RECORD)
            })
            .collect();
        files.sort();
        (files, None)
    };
    let mut instances = Vec::new();
    for file in files {
        if filter.limit.is_some_and(|l| instances.len() >= l) {
            break;
        }
        let inst = ProblemInstance::load(&file).with_context(|| format!("loading {}", file.display()))?;
        if filter.keeps(&inst) {
            instances.push(inst);
        }
    }
    if instances.is_empty() {
        bail!("no instances selected from {}", path.display());
    }
    Ok(InstanceSet { instances, manifest })
}

/// Training data: feasible trajectories that share one shape and workspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub workspace_side: f64,
    pub num_robots: usize,
    pub horizon: usize,
    pub trajectories: Vec<TrajectoryFile>,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, serde_json::to_string(self)?)?)
    }

    /// Concatenates datasets, which must agree on shape and workspace.
    pub fn merge(parts: Vec<Dataset>) -> Result<Dataset> {
        let mut iter = parts.into_iter();
        let Some(mut first) = iter.next() else { bail!("no datasets given") };
        for d in iter {
            if (d.num_robots, d.horizon) != (first.num_robots, first.horizon) || d.workspace_side != first.workspace_side {
                bail!(
                    "dataset shapes differ: {}x{} on side {} vs {}x{} on side {}",
                    first.num_robots,
                    first.horizon,
                    first.workspace_side,
                    d.num_robots,
                    d.horizon,
                    d.workspace_side
                );
            }
            first.trajectories.extend(d.trajectories);
        }
        Ok(first)
    }

    pub fn trajectories(&self) -> Result<Vec<Trajectory>> {
        Ok(self.trajectories.iter().map(|f| f.trajectory()).collect::<Result<_, _>>()?)
    }
}

/// Straight line with Gaussian noise on every interior waypoint.
pub fn noisy_line(instance: &ProblemInstance, sigma: f64, seed: u64) -> Result<Trajectory> {
    let mut traj = Trajectory::straight_line(instance);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = instance.horizon;
        for i in 0..instance.num_robots() {
            for v in &mut traj.robot_mut(i)[2..2 * (h - 1)] {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Ok(traj)
}

/// Trajectory files are named after their instance.
pub fn trajectory_path(dir: &Path, instance_id: &str) -> PathBuf {
    dir.join(format!("{instance_id}.json"))
}

pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
