//! Geometry kernel for the body blockage model.
//!
//! Bodies are vertical cylinders standing on the floor. A light path from an
//! LED `S` to a photodiode `D` is blocked by a body when the segment crosses
//! either the top disk of the cylinder or the vertical rectangle obtained by
//! cutting the cylinder with the plane through its axis that faces the light
//! path.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeomError;

/// Relative threshold below which a line is considered parallel to a plane.
pub const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UNIT_Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Projection onto the XOY plane (z set to zero).
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    /// Euclidean distance between the XOY projections of two points.
    pub fn horizontal_distance(self, other: Vec3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        rhs * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A human body modelled as a vertical cylinder from the floor up to
/// `top_center.z == height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyCylinder {
    pub top_center: Vec3,
    pub radius: f64,
    pub height: f64,
}

impl BodyCylinder {
    pub fn new(top_center: Vec3, radius: f64, height: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0) || !(height > 0.0) || !top_center.is_finite() {
            return Err(GeomError::InvalidBody { radius, height });
        }
        Ok(Self {
            top_center: Vec3::new(top_center.x, top_center.y, height),
            radius,
            height,
        })
    }

    /// Point-in-solid test (closed cylinder).
    pub fn contains(&self, p: Vec3) -> bool {
        p.z >= 0.0
            && p.z <= self.height
            && p.horizontal_distance(self.top_center) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self, GeomError> {
        if !(normal.norm() > 0.0) {
            return Err(GeomError::DegenerateNormal);
        }
        Ok(Self { point, normal })
    }

    /// Signed distance scaled by `|normal|`.
    pub fn residual(&self, p: Vec3) -> f64 {
        (p - self.point).dot(self.normal)
    }
}

/// Intersection of the line through `m` with direction `dir` and `plane`.
///
/// Returns the line parameter `t` together with the point `m + t * dir`.
pub fn line_plane_param(m: Vec3, dir: Vec3, plane: &Plane) -> Result<(f64, Vec3), GeomError> {
    let denom = dir.dot(plane.normal);
    let scale = dir.norm() * plane.normal.norm();
    if !(scale > 0.0) || (denom / scale).abs() < PARALLEL_EPS {
        return Err(GeomError::ParallelLinePlane);
    }
    let t = (plane.point - m).dot(plane.normal) / denom;
    Ok((t, m + dir * t))
}

/// Point where the line through `m` with direction `dir` meets `plane`.
pub fn line_plane_intersection(m: Vec3, dir: Vec3, plane: &Plane) -> Result<Vec3, GeomError> {
    line_plane_param(m, dir, plane).map(|(_, p)| p)
}

/// Vertices `B1..B4` of the axial cross-section rectangle of `body` whose
/// horizontal edges run along `(cos phi, -sin phi)`. `B1`, `B2` lie on the top
/// rim and `B3`, `B4` on the floor, ordered so that consecutive vertices share
/// an edge.
pub fn rect_projection_vertices(body: &BodyCylinder, phi: f64) -> [Vec3; 4] {
    let u = body.top_center;
    let dx = body.radius * phi.cos();
    let dy = body.radius * phi.sin();
    [
        Vec3::new(u.x + dx, u.y - dy, body.height),
        Vec3::new(u.x - dx, u.y + dy, body.height),
        Vec3::new(u.x - dx, u.y + dy, 0.0),
        Vec3::new(u.x + dx, u.y - dy, 0.0),
    ]
}

/// First-quadrant bearing `atan(|dy| / |dx|)` from the body axis `u` to the
/// LED `s`, in `[0, pi/2]`.
pub fn azimuth_to_body(s: Vec3, u: Vec3) -> Result<f64, GeomError> {
    let dx = (s.x - u.x).abs();
    let dy = (s.y - u.y).abs();
    if dx == 0.0 && dy == 0.0 {
        return Err(GeomError::DegenerateVertical);
    }
    Ok(dy.atan2(dx))
}

/// Signed angle in `[-pi, pi)` between the XOY projection of the light
/// direction `S -> D` and the y-axis. With this angle the rectangle of
/// [`rect_projection_vertices`] lies in the plane through the body axis whose
/// normal is the horizontal light direction.
pub fn light_azimuth_from_y(s: Vec3, d: Vec3) -> Result<f64, GeomError> {
    let a = d - s;
    if a.x == 0.0 && a.y == 0.0 {
        return Err(GeomError::DegenerateVertical);
    }
    let phi = a.x.atan2(a.y);
    // atan2 yields (-pi, pi]; fold pi onto -pi.
    Ok(if phi >= std::f64::consts::PI { -phi } else { phi })
}

/// Top-centre `U` of the body cylinder of a person holding a device at `d`
/// with azimuth `omega`, where the horizontal offset follows from the
/// device-to-axis distance `l_d` and the body height `h`.
pub fn body_top_center(d: Vec3, omega: f64, l_d: f64, h: f64) -> Vec3 {
    let reach = l_d.hypot(h - d.z);
    Vec3::new(d.x + reach * omega.cos(), d.y + reach * omega.sin(), h)
}

/// Whether `p` lies in the rectangle `b` (same plane), by the two
/// cross-product sign tests on opposite edges.
fn inside_rectangle(b: &[Vec3; 4], p: Vec3) -> bool {
    let [b1, b2, b3, b4] = *b;
    let horizontal = ((b2 - b1).cross(p - b1)).dot((b4 - b3).cross(p - b3));
    let vertical = ((b3 - b2).cross(p - b2)).dot((b1 - b4).cross(p - b4));
    horizontal >= 0.0 && vertical >= 0.0
}

/// Rule for orienting the cross-section rectangle in [`blockage_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectangleAzimuth {
    /// Signed bearing of the light path from the y-axis; the rectangle lies in
    /// the cutting plane. Used by [`is_blocked`].
    LightPath,
    /// First-quadrant bearing of [`azimuth_to_body`], measured from the x-axis.
    /// Kept for comparison; it tilts the rectangle out of the cutting plane.
    FirstQuadrant,
}

/// Outcome of the two blockage conditions for one body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockageTest {
    pub top_disk: bool,
    pub side_rectangle: bool,
}

impl BlockageTest {
    pub fn blocked(self) -> bool {
        self.top_disk || self.side_rectangle
    }
}

/// Whether the light segment `S -> D` is occluded by `body`.
///
/// Expects the LED above the body top and the photodiode at or below it.
/// A photodiode lying inside the body is reported as blocked.
pub fn is_blocked(s: Vec3, d: Vec3, body: &BodyCylinder) -> bool {
    blockage_with(s, d, body, RectangleAzimuth::LightPath).blocked()
}

pub fn blockage_with(s: Vec3, d: Vec3, body: &BodyCylinder, rule: RectangleAzimuth) -> BlockageTest {
    let mut out = BlockageTest::default();
    if body.contains(d) {
        out.top_disk = true;
        return out;
    }
    let a = d - s;
    let u = body.top_center;
    let on_segment = |t: f64| (0.0..=1.0).contains(&t);

    // Top disk: crossing of the horizontal plane through U.
    let top = Plane { point: u, normal: Vec3::UNIT_Z };
    if let Ok((t, q)) = line_plane_param(s, a, &top) {
        out.top_disk = on_segment(t) && (q - u).norm() <= body.radius;
    }
    if out.top_disk {
        return out;
    }

    // Side rectangle in the vertical plane through U facing the light path.
    let phi = match rule {
        RectangleAzimuth::LightPath => light_azimuth_from_y(s, d),
        RectangleAzimuth::FirstQuadrant => azimuth_to_body(s, u),
    };
    let Ok(phi) = phi else {
        return out;
    };
    let side = Plane { point: u, normal: a.horizontal() };
    if let Ok((t, b)) = line_plane_param(s, a, &side) {
        if on_segment(t) {
            out.side_rectangle = inside_rectangle(&rect_projection_vertices(body, phi), b);
        }
    }
    out
}
