use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{assign_tasks, generate_map, mix_seed, LayoutParams};
use crate::error::{Error, Result};
use crate::instance::{MapFamily, ProblemInstance};
use crate::projection::check_convex_nonempty;

/// Task draws tried per case before the placement error is propagated.
const CASE_ATTEMPTS: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub family: MapFamily,
    pub num_maps: usize,
    pub robots_counts: Vec<usize>,
    pub cases_per_config: usize,
    pub seed: u64,
}

impl BenchmarkSpec {
    /// Default sizes for `family`; corridor maps always use two robots.
    pub fn new(family: MapFamily, seed: u64) -> Self {
        let robots_counts = if family == MapFamily::Corridor { vec![2] } else { vec![3, 6, 9] };
        Self { family, num_maps: 25, robots_counts, cases_per_config: 10, seed }
    }

    pub fn num_instances(&self) -> usize {
        self.num_maps * self.robots_counts.len() * self.cases_per_config
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_maps == 0 || self.cases_per_config == 0 || self.robots_counts.is_empty() {
            return Err(Error::InvalidConfig("benchmark counts must be positive".into()));
        }
        if self.robots_counts.contains(&0) {
            return Err(Error::InvalidConfig("robot counts must be positive".into()));
        }
        if self.family == MapFamily::Corridor && self.robots_counts != [2] {
            return Err(Error::InvalidConfig("corridor maps take exactly 2 robots".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub family: MapFamily,
    pub map_index: usize,
    pub num_robots: usize,
    pub case_index: usize,
    pub map_seed: u64,
    pub case_seed: u64,
    /// Rejected task draws before `case_seed` succeeded.
    pub retries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub specs: Vec<BenchmarkSpec>,
    pub layout: LayoutParams,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn count(&self, family: MapFamily) -> usize {
        self.entries.iter().filter(|e| e.family == family).count()
    }
}

/// All instances of one family. Every map and case draws from its own seed
/// derived from `spec.seed`, so instances do not depend on generation order.
pub fn generate_suite(spec: &BenchmarkSpec, params: &LayoutParams) -> Result<(Vec<ProblemInstance>, Manifest)> {
    spec.validate()?;
    let mut instances = Vec::with_capacity(spec.num_instances());
    let mut entries = Vec::with_capacity(spec.num_instances());
    for m in 0..spec.num_maps {
        let map_seed = mix_seed(spec.seed, m as u64);
        let map = generate_map(spec.family, map_seed, params);
        for &n in &spec.robots_counts {
            for c in 0..spec.cases_per_config {
                let id = format!("{}-m{m:02}-r{n}-c{c:02}", spec.family);
                let base = mix_seed(map_seed, ((n as u64) << 32) | c as u64);
                let mut attempt = 0;
                let (robots, case_seed) = loop {
                    let case_seed = mix_seed(base, attempt);
                    match assign_tasks(&map, n, case_seed, params) {
                        Ok(robots) => break (robots, case_seed),
                        Err(e) if attempt + 1 >= CASE_ATTEMPTS => return Err(e),
                        Err(e) => log::debug!("{id}: task draw {attempt} rejected: {e}"),
                    }
                    attempt += 1;
                };
                let inst = ProblemInstance::new(
                    id.clone(),
                    spec.family,
                    params.workspace_side,
                    robots,
                    map.obstacles.clone(),
                    params.horizon,
                    params.dt,
                )?;
                check_convex_nonempty(&inst)?;
                instances.push(inst);
                entries.push(ManifestEntry {
                    instance_id: id,
                    family: spec.family,
                    map_index: m,
                    num_robots: n,
                    case_index: c,
                    map_seed,
                    case_seed,
                    retries: attempt,
                });
            }
        }
    }
    Ok((instances, Manifest { specs: vec![spec.clone()], layout: params.clone(), entries }))
}

/// Specs of the six families at default sizes, each seeded from `seed`.
pub fn benchmark_specs(seed: u64) -> Vec<BenchmarkSpec> {
    MapFamily::ALL
        .iter()
        .enumerate()
        .map(|(k, &family)| BenchmarkSpec::new(family, mix_seed(seed, 0xFA11_0000 + k as u64)))
        .collect()
}

/// Instances of several specs with one combined manifest.
pub fn generate_specs(specs: &[BenchmarkSpec], params: &LayoutParams) -> Result<(Vec<ProblemInstance>, Manifest)> {
    let mut instances = Vec::new();
    let mut manifest = Manifest { specs: Vec::new(), layout: params.clone(), entries: Vec::new() };
    for spec in specs {
        let (inst, m) = generate_suite(spec, params)?;
        instances.extend(inst);
        manifest.specs.extend(m.specs);
        manifest.entries.extend(m.entries);
    }
    Ok((instances, manifest))
}

/// The full benchmark: six families at default sizes.
pub fn generate_benchmark(seed: u64, params: &LayoutParams) -> Result<(Vec<ProblemInstance>, Manifest)> {
    generate_specs(&benchmark_specs(seed), params)
}

/// Writes `<instance_id>.json` per instance and `manifest.json` into `dir`.
pub fn write_suite(dir: impl AsRef<Path>, instances: &[ProblemInstance], manifest: &Manifest) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for inst in instances {
        inst.save(dir.join(format!("{}.json", inst.instance_id)))?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_spec_rejects_other_counts() {
        let mut spec = BenchmarkSpec::new(MapFamily::Corridor, 0);
        assert_eq!(spec.robots_counts, vec![2]);
        spec.robots_counts = vec![3];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn default_counts() {
        assert_eq!(BenchmarkSpec::new(MapFamily::Empty, 0).num_instances(), 750);
        assert_eq!(BenchmarkSpec::new(MapFamily::Corridor, 0).num_instances(), 250);
    }

    #[test]
    fn small_suite_matches_manifest() {
        let spec = BenchmarkSpec { family: MapFamily::Basic, num_maps: 2, robots_counts: vec![3, 6], cases_per_config: 2, seed: 4 };
        let (inst, manifest) = generate_suite(&spec, &LayoutParams::default()).unwrap();
        assert_eq!(inst.len(), 8);
        assert_eq!(manifest.entries.len(), 8);
        for (i, e) in inst.iter().zip(&manifest.entries) {
            assert_eq!(i.instance_id, e.instance_id);
            assert_eq!(i.num_robots(), e.num_robots);
            assert_eq!(i.num_obstacles(), 10);
        }
        assert_eq!(manifest.entries[0].instance_id, "basic-m00-r3-c00");
    }
}
