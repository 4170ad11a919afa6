use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::maps::{MapLayout, Zone};
use super::{rng_from, LayoutParams};
use crate::error::{Error, Result};
use crate::instance::{dist, MapFamily, Point, RobotSpec};

/// Draws a start and goal for each robot by rejection sampling inside the
/// map's zones, keeping every pair of starts (and of goals) and every
/// start/goal–obstacle pair separated by the sum of radii plus
/// `params.placement_gap`.
///
/// Corridor robots alternate ends: even robots go left to right, odd robots
/// right to left, so every pair of neighbours must swap through the chamber.
pub fn assign_tasks(
    map: &MapLayout,
    num_robots: usize,
    case_seed: u64,
    params: &LayoutParams,
) -> Result<Vec<RobotSpec>> {
    let mut rng = rng_from(case_seed);
    let reach = params.v_max * params.dt * (params.horizon - 1) as f64;
    let zone = |name: &str| {
        map.zone(name)
            .ok_or_else(|| Error::InvalidConfig(format!("{} map has no zone `{name}`", map.family)))
    };

    let mut starts: Vec<Point> = Vec::with_capacity(num_robots);
    let mut goals: Vec<Point> = Vec::with_capacity(num_robots);
    for k in 0..num_robots {
        let (start_zone, goal_zone): (&Zone, &Zone) = match map.family {
            MapFamily::Empty | MapFamily::Basic | MapFamily::Dense => (zone("workspace")?, zone("workspace")?),
            MapFamily::Corridor => {
                if k % 2 == 0 {
                    (zone("left_end")?, zone("right_end")?)
                } else {
                    (zone("right_end")?, zone("left_end")?)
                }
            }
            MapFamily::Shelf => {
                if rng.random_bool(0.5) {
                    (zone("pickup")?, zone("dropoff")?)
                } else {
                    (zone("dropoff")?, zone("pickup")?)
                }
            }
            MapFamily::Room => {
                let a = rng.random_range(0..map.zones.len());
                let b = (a + rng.random_range(1..map.zones.len())) % map.zones.len();
                (&map.zones[a], &map.zones[b])
            }
        };

        let start = place(map, start_zone, &starts, &mut rng, params, |_| true)?;
        let goal = place(map, goal_zone, &goals, &mut rng, params, |g| dist(g, start) <= reach)?;
        starts.push(start);
        goals.push(goal);
    }

    Ok(starts
        .into_iter()
        .zip(goals)
        .map(|(start, goal)| RobotSpec { radius: map.robot_radius, start, goal, v_max: params.v_max })
        .collect())
}

fn place(
    map: &MapLayout,
    zone: &Zone,
    taken: &[Point],
    rng: &mut ChaCha8Rng,
    params: &LayoutParams,
    extra: impl Fn(Point) -> bool,
) -> Result<Point> {
    let r = map.robot_radius;
    let gap = params.placement_gap;
    for _ in 0..params.max_placement_attempts {
        let p = zone.sample(rng);
        let clear_of_robots = taken.iter().all(|&q| dist(p, q) >= 2.0 * r + gap);
        let clear_of_obstacles = map.obstacles.iter().all(|o| dist(p, o.center) >= r + o.radius + gap);
        if clear_of_robots && clear_of_obstacles && extra(p) {
            return Ok(p);
        }
    }
    Err(Error::Placement { zone: zone.name.clone(), attempts: params.max_placement_attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::generate_map;

    #[test]
    fn empty_map_tasks_are_separated() {
        let p = LayoutParams::default();
        let map = generate_map(MapFamily::Empty, 3, &p);
        let robots = assign_tasks(&map, 3, 99, &p).unwrap();
        assert_eq!(robots.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(dist(robots[i].start, robots[j].start) >= 0.1);
                assert!(dist(robots[i].goal, robots[j].goal) >= 0.1);
            }
        }
    }

    #[test]
    fn corridor_robots_swap_ends() {
        let p = LayoutParams::default();
        for seed in 0..10 {
            let map = generate_map(MapFamily::Corridor, seed, &p);
            let robots = assign_tasks(&map, 2, seed + 100, &p).unwrap();
            let mid = p.workspace_side / 2.0;
            assert!(robots[0].start[0] < mid && robots[0].goal[0] > mid);
            assert!(robots[1].start[0] > mid && robots[1].goal[0] < mid);
            // Each start shares an end with the other robot's goal.
            assert!(dist(robots[0].start, robots[1].goal) < dist(robots[0].start, robots[1].start));
            assert_eq!(robots[0].radius, 0.1);
        }
    }

    #[test]
    fn dense_nine_robots_is_deterministic() {
        let p = LayoutParams::default();
        let map = generate_map(MapFamily::Dense, 5, &p);
        let a = assign_tasks(&map, 9, 17, &p);
        let b = assign_tasks(&map, 9, 17, &p);
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b),
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            _ => panic!("same seed gave different outcomes"),
        }
    }

    #[test]
    fn exhausted_budget_names_zone() {
        let p = LayoutParams { max_placement_attempts: 50, ..Default::default() };
        let map = generate_map(MapFamily::Corridor, 1, &p);
        // Far more robots than the tiny end zones can hold.
        let err = assign_tasks(&map, 12, 3, &p).unwrap_err();
        assert!(matches!(err, Error::Placement { ref zone, .. } if zone.ends_with("_end")), "{err}");
    }
}
