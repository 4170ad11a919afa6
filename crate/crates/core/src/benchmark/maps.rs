use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rng_from, LayoutParams};
use crate::instance::{dist, MapFamily, Obstacle, Point};

/// Axis-aligned rectangle where starts or goals may be placed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    pub min: Point,
    pub max: Point,
}

impl Zone {
    fn new(name: &str, min: Point, max: Point) -> Self {
        Self { name: name.to_string(), min, max }
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.min[0]..=self.max[0]).contains(&p[0]) && (self.min[1]..=self.max[1]).contains(&p[1])
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let coord = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        [coord(self.min[0], self.max[0], rng), coord(self.min[1], self.max[1], rng)]
    }
}

/// Obstacles of one map plus the zones tasks are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapLayout {
    pub family: MapFamily,
    pub workspace_side: f64,
    pub robot_radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub zones: Vec<Zone>,
}

impl MapLayout {
    pub fn zone(&self, name: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.name == name)
    }
}

/// Discs of radius `radius` from `a` to `b` with center spacing at most `radius`.
fn disc_chain(a: Point, b: Point, radius: f64) -> Vec<Obstacle> {
    let len = dist(a, b);
    let segments = (len / radius).ceil().max(1.0) as usize;
    (0..=segments)
        .map(|k| {
            let s = k as f64 / segments as f64;
            Obstacle { center: [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], radius }
        })
        .collect()
}

/// Generates the obstacle layout of `family` for `map_seed`.
pub fn generate_map(family: MapFamily, map_seed: u64, params: &LayoutParams) -> MapLayout {
    let mut rng = rng_from(map_seed);
    match family {
        MapFamily::Empty => random_map(family, 0, &mut rng, params),
        MapFamily::Basic => random_map(family, params.basic_obstacles, &mut rng, params),
        MapFamily::Dense => random_map(family, params.dense_obstacles, &mut rng, params),
        MapFamily::Corridor => corridor_map(&mut rng, params),
        MapFamily::Shelf => shelf_map(&mut rng, params),
        MapFamily::Room => room_map(&mut rng, params),
    }
}

fn random_map(family: MapFamily, count: usize, rng: &mut ChaCha8Rng, p: &LayoutParams) -> MapLayout {
    let side = p.workspace_side;
    let mut obstacles: Vec<Obstacle> = Vec::with_capacity(count);
    // Rejection sampling; the density targets are far below packing limits.
    while obstacles.len() < count {
        let radius = rng.random_range(p.obstacle_radius_min..=p.obstacle_radius_max);
        let lo = radius + p.obstacle_gap;
        let center = [rng.random_range(lo..side - lo), rng.random_range(lo..side - lo)];
        let clear = obstacles
            .iter()
            .all(|o| dist(o.center, center) >= o.radius + radius + p.obstacle_gap);
        if clear {
            obstacles.push(Obstacle { center, radius });
        }
    }
    let m = p.robot_radius;
    MapLayout {
        family,
        workspace_side: side,
        robot_radius: p.robot_radius,
        obstacles,
        zones: vec![Zone::new("workspace", [m, m], [side - m, side - m])],
    }
}

fn corridor_map(rng: &mut ChaCha8Rng, p: &LayoutParams) -> MapLayout {
    let side = p.workspace_side;
    let c = &p.corridor;
    let r = c.robot_radius;
    let w = p.wall_disc_radius;
    let mid_y = side / 2.0;
    let half_passage = (2.0 * r + c.passage_clearance) / 2.0;
    let half_chamber = c.chamber_factor * 2.0 * r / 2.0;
    let cx = side / 2.0 + rng.random_range(-c.chamber_jitter..=c.chamber_jitter);
    let (x0, x1) = (cx - c.chamber_length / 2.0, cx + c.chamber_length / 2.0);

    let mut obstacles = Vec::new();
    for sign in [-1.0, 1.0] {
        let y_passage = mid_y + sign * (half_passage + w);
        let y_chamber = mid_y + sign * (half_chamber + w);
        obstacles.extend(disc_chain([0.0, y_passage], [x0, y_passage], w));
        obstacles.extend(disc_chain([x1, y_passage], [side, y_passage], w));
        obstacles.extend(disc_chain([x0, y_passage], [x0, y_chamber], w));
        obstacles.extend(disc_chain([x1, y_passage], [x1, y_chamber], w));
        obstacles.extend(disc_chain([x0, y_chamber], [x1, y_chamber], w));
    }
    dedup_discs(&mut obstacles);

    let lane = c.zone_lateral;
    let (a, b) = (c.zone_inset, c.zone_inset + c.zone_length);
    MapLayout {
        family: MapFamily::Corridor,
        workspace_side: side,
        robot_radius: r,
        obstacles,
        zones: vec![
            Zone::new("left_end", [a, mid_y - lane], [b, mid_y + lane]),
            Zone::new("right_end", [side - b, mid_y - lane], [side - a, mid_y + lane]),
        ],
    }
}

fn shelf_map(rng: &mut ChaCha8Rng, p: &LayoutParams) -> MapLayout {
    let side = p.workspace_side;
    let s = &p.shelf;
    let r = p.robot_radius;
    let w = p.wall_disc_radius;
    let aisle = s.aisle_factor * 2.0 * r;
    let block_w = (side - (s.cols as f64 + 1.0) * aisle) / s.cols as f64;
    let block_h = (side - (s.rows as f64 + 1.0) * aisle) / s.rows as f64;

    let mut obstacles = Vec::new();
    let mut left_edge = side;
    let mut right_edge: f64 = 0.0;
    for row in 0..s.rows {
        for col in 0..s.cols {
            let jx = rng.random_range(-s.jitter..=s.jitter);
            let jy = rng.random_range(-s.jitter..=s.jitter);
            let shrink = rng.random_range(0.0..=s.jitter);
            let x0 = aisle + col as f64 * (block_w + aisle) + jx + shrink;
            let y0 = aisle + row as f64 * (block_h + aisle) + jy + shrink;
            let (x1, y1) = (x0 + block_w - 2.0 * shrink, y0 + block_h - 2.0 * shrink);
            left_edge = left_edge.min(x0);
            right_edge = right_edge.max(x1);
            // Disc surfaces sit on the block boundary.
            let (a, b) = ([x0 + w, y0 + w], [x1 - w, y1 - w]);
            obstacles.extend(disc_chain(a, [b[0], a[1]], w));
            obstacles.extend(disc_chain([b[0], a[1]], b, w));
            obstacles.extend(disc_chain(b, [a[0], b[1]], w));
            obstacles.extend(disc_chain([a[0], b[1]], a, w));
        }
    }
    dedup_discs(&mut obstacles);

    let m = r + s.zone_margin;
    MapLayout {
        family: MapFamily::Shelf,
        workspace_side: side,
        robot_radius: r,
        obstacles,
        zones: vec![
            Zone::new("pickup", [m, m], [left_edge - m, side - m]),
            Zone::new("dropoff", [right_edge + m, m], [side - m, side - m]),
        ],
    }
}

fn room_map(rng: &mut ChaCha8Rng, p: &LayoutParams) -> MapLayout {
    let side = p.workspace_side;
    let r = p.robot_radius;
    let w = p.wall_disc_radius;
    let mid = side / 2.0;
    let door = p.room.door_factor * 2.0 * r;
    // Distance from the door center to the first disc center on either side.
    let jamb = door / 2.0 + w;

    let mut door_at = |lo: f64, hi: f64| {
        let margin = jamb + p.room.door_margin;
        rng.random_range(lo + margin..=hi - margin)
    };
    let doors = [door_at(0.0, mid), door_at(mid, side), door_at(0.0, mid), door_at(mid, side)];

    let mut obstacles = Vec::new();
    // Vertical partition x = mid, lower and upper halves.
    for (k, (lo, hi)) in [(0.0, mid), (mid, side)].into_iter().enumerate() {
        obstacles.extend(disc_chain([mid, lo], [mid, doors[k] - jamb], w));
        obstacles.extend(disc_chain([mid, doors[k] + jamb], [mid, hi], w));
    }
    // Horizontal partition y = mid, left and right halves.
    for (k, (lo, hi)) in [(0.0, mid), (mid, side)].into_iter().enumerate() {
        obstacles.extend(disc_chain([lo, mid], [doors[2 + k] - jamb, mid], w));
        obstacles.extend(disc_chain([doors[2 + k] + jamb, mid], [hi, mid], w));
    }
    dedup_discs(&mut obstacles);

    let m = r + p.room.zone_margin;
    let inner = w + r + p.room.zone_margin;
    let zones = vec![
        Zone::new("room_sw", [m, m], [mid - inner, mid - inner]),
        Zone::new("room_se", [mid + inner, m], [side - m, mid - inner]),
        Zone::new("room_nw", [m, mid + inner], [mid - inner, side - m]),
        Zone::new("room_ne", [mid + inner, mid + inner], [side - m, side - m]),
    ];
    MapLayout { family: MapFamily::Room, workspace_side: side, robot_radius: r, obstacles, zones }
}

/// Drops discs whose centers coincide with an earlier disc (chain joints).
fn dedup_discs(discs: &mut Vec<Obstacle>) {
    let mut kept: Vec<Obstacle> = Vec::with_capacity(discs.len());
    for d in discs.drain(..) {
        if !kept.iter().any(|k| dist(k.center, d.center) < 1e-9 && k.radius == d.radius) {
            kept.push(d);
        }
    }
    *discs = kept;
}
