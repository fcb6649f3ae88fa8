//! LED arrangements and strategy-specific serving sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;
use crate::geom::Vec3;
use crate::noma::GroupAssignment;

/// Slack used when clipping lattice points against the room walls.
const WALL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomLayout {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub device_plane: f64,
    pub leds: Vec<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Broadcasting,
    #[serde(rename = "simple", alias = "simplelinking")]
    SimpleLinking,
    #[serde(rename = "smart", alias = "smartlinking")]
    SmartLinking,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Broadcasting, Strategy::SimpleLinking, Strategy::SmartLinking];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Broadcasting => "broadcasting",
            Strategy::SimpleLinking => "simple",
            Strategy::SmartLinking => "smart",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "broadcasting" | "broadcast" => Ok(Strategy::Broadcasting),
            "simple" | "simplelinking" | "simple-linking" => Ok(Strategy::SimpleLinking),
            "smart" | "smartlinking" | "smart-linking" => Ok(Strategy::SmartLinking),
            other => Err(format!("unknown strategy `{other}` (broadcasting|simple|smart)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Triangular,
    Square,
}

/// Radius of the floor disk lit within the half-intensity angle.
pub fn coverage_radius(ceiling: f64, device_plane: f64, half_angle: f64) -> f64 {
    (ceiling - device_plane) * half_angle.tan()
}

/// Largest triangle side for which every point of the device plane lies in
/// some coverage disk.
pub fn triangular_side_bound(ceiling: f64, device_plane: f64, half_angle: f64) -> f64 {
    3f64.sqrt() * coverage_radius(ceiling, device_plane, half_angle)
}

fn inside(x: f64, y: f64, length: f64, width: f64) -> bool {
    x >= -WALL_EPS && x <= length + WALL_EPS && y >= -WALL_EPS && y <= width + WALL_EPS
}

fn sort_by_row(points: &mut [Vec3]) {
    points.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
}

/// Walks integer offsets outwards from the anchor until a full ring of
/// candidates falls outside the room.
fn lattice_points(
    length: f64,
    width: f64,
    z: f64,
    anchor: (f64, f64),
    point: impl Fn(i64, i64) -> (f64, f64),
    row_step: f64,
    col_step: f64,
) -> Vec<Vec3> {
    let rows = (width.max(length) / row_step).ceil() as i64 + 2;
    let cols = (length.max(width) / col_step).ceil() as i64 + 2;
    let mut out = Vec::new();
    for j in -rows..=rows {
        for i in -cols..=cols {
            let (x, y) = point(i, j);
            let (x, y) = (anchor.0 + x, anchor.1 + y);
            if inside(x, y, length, width) {
                out.push(Vec3::new(x.clamp(0.0, length), y.clamp(0.0, width), z));
            }
        }
    }
    sort_by_row(&mut out);
    out
}

/// LEDs on the vertices of equilateral triangles of side `side`, one vertex at
/// `anchor`, clipped to the closed room rectangle.
pub fn triangular_lattice(
    length: f64,
    width: f64,
    ceiling: f64,
    side: f64,
    anchor: (f64, f64),
    side_bound: f64,
) -> Result<Vec<Vec3>, TopologyError> {
    if !(side > 0.0) {
        return Err(TopologyError::InvalidSide(side));
    }
    if side > side_bound {
        return Err(TopologyError::LatticeConstraintViolated { side, bound: side_bound });
    }
    let row = side * 3f64.sqrt() / 2.0;
    Ok(lattice_points(
        length,
        width,
        ceiling,
        anchor,
        |i, j| {
            let shift = if j.rem_euclid(2) == 1 { side / 2.0 } else { 0.0 };
            (i as f64 * side + shift, j as f64 * row)
        },
        row,
        side,
    ))
}

/// LEDs on a square grid of pitch `side` through `anchor`.
pub fn square_lattice(length: f64, width: f64, ceiling: f64, side: f64, anchor: (f64, f64)) -> Result<Vec<Vec3>, TopologyError> {
    if !(side > 0.0) {
        return Err(TopologyError::InvalidSide(side));
    }
    Ok(lattice_points(
        length,
        width,
        ceiling,
        anchor,
        |i, j| (i as f64 * side, j as f64 * side),
        side,
        side,
    ))
}

fn covered(led: Vec3, user: Vec3, r_area: f64) -> bool {
    let (dx, dy) = (user.x - led.x, user.y - led.y);
    dx * dx + dy * dy <= r_area * r_area
}

/// Users inside the coverage disk of each LED.
pub fn coverage_sets(leds: &[Vec3], users: &[Vec3], r_area: f64) -> Vec<Vec<usize>> {
    leds.iter()
        .map(|&s| (0..users.len()).filter(|&k| covered(s, users[k], r_area)).collect())
        .collect()
}

/// Smart LED linking: LEDs whose coverage shares a user are merged, and every
/// LED of a merged cluster carries the union of the cluster's users.
///
/// Follows the incremental procedure: each new LED absorbs every earlier
/// cluster it overlaps, and all absorbed LEDs are overwritten with the merged
/// set.
pub fn smart_linking_sets(leds: &[Vec3], users: &[Vec3], r_area: f64) -> Vec<Vec<usize>> {
    let mut linked: Vec<Vec<usize>> = Vec::with_capacity(leds.len());
    for &s in leds {
        let mut current: Vec<usize> = (0..users.len()).filter(|&k| covered(s, users[k], r_area)).collect();
        let mut merged = Vec::new();
        for (l, set) in linked.iter().enumerate() {
            if set.iter().any(|k| current.contains(k)) {
                merged.push(l);
                for &k in set {
                    if !current.contains(&k) {
                        current.push(k);
                    }
                }
            }
        }
        current.sort_unstable();
        for m in merged {
            linked[m] = current.clone();
        }
        linked.push(current);
    }
    linked
}

/// Per-LED serving sets for `strategy`.
pub fn assign_groups(strategy: Strategy, leds: &[Vec3], users: &[Vec3], r_area: f64) -> GroupAssignment {
    let sets = match strategy {
        Strategy::Broadcasting => vec![(0..users.len()).collect(); leds.len()],
        Strategy::SimpleLinking => coverage_sets(leds, users, r_area),
        Strategy::SmartLinking => smart_linking_sets(leds, users, r_area),
    };
    GroupAssignment::from_led_sets(sets, users.len())
}
