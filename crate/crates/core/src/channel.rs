//! Line-of-sight VLC channel with Lambertian LEDs, an optical concentrator at
//! the photodiode, random device orientation and body blockage.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::{self, BodyCylinder, Vec3};

/// Lambertian order `m = -ln 2 / ln cos(theta_half)`.
pub fn lambertian_order(half_angle: f64) -> f64 {
    -std::f64::consts::LN_2 / half_angle.cos().ln()
}

/// Emission pattern shared by every LED of a room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedParams {
    pub half_angle: f64,
    pub order: f64,
}

impl LedParams {
    pub fn new(half_angle: f64) -> Self {
        Self { half_angle, order: lambertian_order(half_angle) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdParams {
    /// Effective photosensitive area, m^2.
    pub area: f64,
    /// Field of view, radians.
    pub fov: f64,
    pub refractive_index: f64,
    /// Responsivity, A/W.
    pub responsivity: f64,
}

/// Device normal: azimuth `omega` from the x-axis and polar `lambda` from the
/// vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub azimuth: f64,
    pub polar: f64,
}

impl Orientation {
    pub const UP: Orientation = Orientation { azimuth: 0.0, polar: 0.0 };
}

/// Orientation statistics of handheld devices while walking: uniform azimuth,
/// Gaussian polar angle clamped into `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationModel {
    pub polar_mean: f64,
    pub polar_std: f64,
}

impl Default for OrientationModel {
    fn default() -> Self {
        Self { polar_mean: 29.67f64.to_radians(), polar_std: 7.78f64.to_radians() }
    }
}

impl OrientationModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Orientation {
        let azimuth = rng.random_range(-PI..PI);
        let polar = Normal::new(self.polar_mean, self.polar_std)
            .expect("polar std must be finite and nonnegative")
            .sample(rng)
            .clamp(0.0, PI / 2.0);
        Orientation { azimuth, polar }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceiverId {
    User(usize),
    Eavesdropper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub id: ReceiverId,
    pub pd_position: Vec3,
    pub orientation: Orientation,
    pub body: BodyCylinder,
}

/// Geometry of the body attached to a device: height `H`, radius `r` and the
/// horizontal device-to-axis distance `l_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    pub height: f64,
    pub radius: f64,
    pub device_offset: f64,
}

impl Receiver {
    pub fn new(id: ReceiverId, pd_position: Vec3, orientation: Orientation, body: &BodyParams) -> Self {
        let top = geom::body_top_center(pd_position, orientation.azimuth, body.device_offset, body.height);
        Self {
            id,
            pd_position,
            orientation,
            body: BodyCylinder { top_center: top, radius: body.radius, height: body.height },
        }
    }
}

/// Cosine of the incidence angle at a device at `d` oriented by `o`, for light
/// from `s`. Negative when the light arrives from behind the surface.
pub fn incidence_cos(s: Vec3, d: Vec3, o: Orientation) -> f64 {
    let dist = (s - d).norm();
    let (sin_l, cos_l) = o.polar.sin_cos();
    (s.x - d.x) / dist * sin_l * o.azimuth.cos()
        + (s.y - d.y) / dist * sin_l * o.azimuth.sin()
        + (s.z - d.z) / dist * cos_l
}

/// Concentrator gain `eta^2 / sin^2(fov)` inside the field of view, else 0.
pub fn concentrator_gain(psi: f64, fov: f64, refractive_index: f64) -> f64 {
    if (0.0..=fov).contains(&psi) {
        refractive_index.powi(2) / fov.sin().powi(2)
    } else {
        0.0
    }
}

/// Lambertian gain of an unobstructed link given the incidence cosine.
fn unblocked_gain(s: Vec3, d: Vec3, cos_psi: f64, led: &LedParams, pd: &PdParams) -> f64 {
    if !(cos_psi > 0.0) {
        return 0.0;
    }
    let dist2 = (s - d).dot(s - d);
    let cos_theta = (s.z - d.z) / dist2.sqrt();
    if !(cos_theta > 0.0) {
        return 0.0;
    }
    let psi = cos_psi.min(1.0).acos();
    pd.area * (led.order + 1.0) * pd.responsivity / (2.0 * PI)
        * cos_theta.powf(led.order)
        * cos_psi
        / dist2
        * concentrator_gain(psi, pd.fov, pd.refractive_index)
}

/// A channel gain together with whether any body cut the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub gain: f64,
    pub blocked: bool,
}

/// LoS channel gain from the LED at `s` to `rx`, including blockage by every
/// body in `bodies` (the receiver's own body among them).
pub fn channel_gain(s: Vec3, rx: &Receiver, bodies: &[BodyCylinder], led: &LedParams, pd: &PdParams) -> f64 {
    link_gain(s, rx, bodies, led, pd).gain
}

pub fn link_gain(s: Vec3, rx: &Receiver, bodies: &[BodyCylinder], led: &LedParams, pd: &PdParams) -> LinkGain {
    let d = rx.pd_position;
    let blocked = bodies.iter().any(|b| geom::is_blocked(s, d, b));
    if blocked {
        return LinkGain { gain: 0.0, blocked };
    }
    let gain = unblocked_gain(s, d, incidence_cos(s, d, rx.orientation), led, pd);
    LinkGain { gain, blocked }
}

/// Azimuth that points the device towards the LED horizontally, maximising the
/// incidence cosine for any fixed polar angle.
pub fn estimated_azimuth(s: Vec3, d: Vec3) -> f64 {
    (s.y - d.y).atan2(s.x - d.x)
}

/// Gain the transmitter can predict from positions alone: mean polar angle,
/// best-case azimuth and no blockage.
pub fn estimated_channel_gain(s: Vec3, d: Vec3, polar_mean: f64, led: &LedParams, pd: &PdParams) -> f64 {
    let o = Orientation { azimuth: estimated_azimuth(s, d), polar: polar_mean };
    unblocked_gain(s, d, incidence_cos(s, d, o), led, pd)
}

/// Same as [`estimated_channel_gain`] but for an explicit azimuth.
pub fn estimated_gain_at_azimuth(s: Vec3, d: Vec3, azimuth: f64, polar: f64, led: &LedParams, pd: &PdParams) -> f64 {
    let o = Orientation { azimuth, polar };
    unblocked_gain(s, d, incidence_cos(s, d, o), led, pd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_led() -> LedParams {
        LedParams::new(70f64.to_radians())
    }

    fn table_pd() -> PdParams {
        PdParams { area: 1e-4, fov: 60f64.to_radians(), refractive_index: 1.5, responsivity: 1.0 }
    }

    fn body_params() -> BodyParams {
        BodyParams { height: 1.6, radius: 0.2, device_offset: 0.4 }
    }

    #[test]
    fn lambertian_order_examples() {
        assert_relative_eq!(lambertian_order(60f64.to_radians()), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lambertian_order(45f64.to_radians()), 2.0, epsilon = 1e-12);
        let m70 = lambertian_order(70f64.to_radians());
        assert_relative_eq!(m70, -(2f64.ln()) / (70f64.to_radians().cos()).ln(), epsilon = 1e-15);
        assert!((m70 - 0.6461).abs() < 1e-4);
    }

    #[test]
    fn incidence_examples() {
        let s = Vec3::new(5.0, 5.0, 3.98);
        let below = Vec3::new(5.0, 5.0, 0.85);
        assert_relative_eq!(incidence_cos(s, below, Orientation::UP), 1.0, epsilon = 1e-15);

        // Device lying on its side, facing away from the LED.
        let d = Vec3::new(0.0, 5.0, 0.85);
        let away = Orientation { azimuth: PI, polar: PI / 2.0 };
        assert!(incidence_cos(s, d, away) <= 0.0);

        let s = Vec3::new(20.0, 20.0, 3.98);
        let d = Vec3::new(13.0, 16.0, 0.85);
        let o = Orientation { azimuth: 4f64.atan2(7.0), polar: 29.67f64.to_radians() };
        let dist = (49.0f64 + 16.0 + 3.13 * 3.13).sqrt();
        let expected = 7.0 / dist * o.polar.sin() * o.azimuth.cos()
            + 4.0 / dist * o.polar.sin() * o.azimuth.sin()
            + 3.13 / dist * o.polar.cos();
        assert_relative_eq!(incidence_cos(s, d, o), expected, max_relative = 1e-12);
    }

    #[test]
    fn zero_polar_ignores_azimuth() {
        let s = Vec3::new(3.0, 1.0, 3.98);
        let d = Vec3::new(0.5, 4.0, 0.85);
        let expected = 3.13 / (s - d).norm();
        for w in [-3.0, -1.0, 0.0, 0.7, 2.9] {
            let o = Orientation { azimuth: w, polar: 0.0 };
            assert_relative_eq!(incidence_cos(s, d, o), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn concentrator_examples() {
        let fov = 60f64.to_radians();
        assert_relative_eq!(concentrator_gain(30f64.to_radians(), fov, 1.5), 3.0, epsilon = 1e-12);
        assert_relative_eq!(concentrator_gain(fov, fov, 1.5), 3.0, epsilon = 1e-12);
        assert_eq!(concentrator_gain(61f64.to_radians(), fov, 1.5), 0.0);
    }

    #[test]
    fn overhead_gain_term_by_term() {
        let s = Vec3::new(10.0, 10.0, 3.98);
        let rx = Receiver::new(ReceiverId::User(0), Vec3::new(10.0, 10.0, 0.85), Orientation::UP, &body_params());
        let led = table_led();
        let h = channel_gain(s, &rx, &[], &led, &table_pd());
        let expected = 1e-4 * (led.order + 1.0) / (2.0 * PI) * (1.0 / (3.13 * 3.13)) * 3.0;
        assert_relative_eq!(h, expected, max_relative = 1e-12);
        assert!((h - 8.02e-6).abs() < 0.01e-6);
    }

    #[test]
    fn gain_factors_multiply() {
        let led = table_led();
        let pd = table_pd();
        let s = Vec3::new(12.0, 7.0, 3.98);
        let d = Vec3::new(10.0, 8.5, 0.85);
        let o = Orientation { azimuth: 0.3, polar: 0.4 };
        let rx = Receiver::new(ReceiverId::User(0), d, o, &body_params());
        let dist = (s - d).norm();
        let cos_psi = incidence_cos(s, d, o);
        let lambert = pd.area * (led.order + 1.0) * pd.responsivity / (2.0 * PI) * ((s.z - d.z) / dist).powf(led.order);
        let expected = lambert * cos_psi / (dist * dist) * concentrator_gain(cos_psi.acos(), pd.fov, pd.refractive_index);
        assert!(expected > 0.0);
        assert_relative_eq!(channel_gain(s, &rx, &[], &led, &pd), expected, max_relative = 1e-12);
    }

    #[test]
    fn blocking_body_annihilates_gain() {
        let s = Vec3::new(5.0, 5.0, 3.98);
        let rx = Receiver::new(ReceiverId::User(0), Vec3::new(6.0, 5.0, 0.85), Orientation::UP, &body_params());
        let blocker = BodyCylinder { top_center: Vec3::new(5.8, 5.0, 1.6), radius: 0.2, height: 1.6 };
        let lg = link_gain(s, &rx, &[blocker], &table_led(), &table_pd());
        assert!(lg.blocked);
        assert_eq!(lg.gain, 0.0);
    }

    #[test]
    fn outside_fov_is_dark() {
        let s = Vec3::new(20.0, 5.0, 3.98);
        let rx = Receiver::new(ReceiverId::User(0), Vec3::new(5.0, 5.0, 0.85), Orientation::UP, &body_params());
        assert_eq!(channel_gain(s, &rx, &[], &table_led(), &table_pd()), 0.0);
    }

    #[test]
    fn gain_decreases_with_distance_at_fixed_angles() {
        // Move the LED along the fixed direction from D: angles constant, d grows.
        let led = table_led();
        let pd = table_pd();
        let d = Vec3::new(5.0, 5.0, 0.85);
        let dir = Vec3::new(0.3, 0.2, 1.0);
        let o = Orientation { azimuth: 0.5, polar: 0.3 };
        let rx = Receiver::new(ReceiverId::User(0), d, o, &body_params());
        let gains: Vec<f64> = [1.0, 2.0, 3.0, 5.0].iter().map(|&k| channel_gain(d + dir * k, &rx, &[], &led, &pd)).collect();
        assert!(gains.windows(2).all(|w| w[0] >= w[1]));
        assert!(gains[0] > 0.0);
    }

    #[test]
    fn orientation_statistics() {
        let model = OrientationModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let samples: Vec<Orientation> = (0..n).map(|_| model.sample(&mut rng)).collect();
        let lam: Vec<f64> = samples.iter().map(|o| o.polar.to_degrees()).collect();
        let mean = lam.iter().sum::<f64>() / n as f64;
        let std = (lam.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 29.67).abs() < 0.1, "mean {mean}");
        assert!((std - 7.78).abs() < 0.1, "std {std}");
        assert!(lam.iter().all(|l| (0.0..=90.0).contains(l)));
        let c = samples.iter().map(|o| o.azimuth.cos()).sum::<f64>() / n as f64;
        let s = samples.iter().map(|o| o.azimuth.sin()).sum::<f64>() / n as f64;
        assert!(c.abs() < 0.01 && s.abs() < 0.01);
        assert!(samples.iter().all(|o| (-PI..PI).contains(&o.azimuth)));
    }

    #[test]
    fn estimated_gain_overhead_uses_mean_polar() {
        let led = table_led();
        let pd = table_pd();
        let s = Vec3::new(10.0, 10.0, 3.98);
        let d = Vec3::new(10.0, 10.0, 0.85);
        let lam = 29.67f64.to_radians();
        let h = estimated_channel_gain(s, d, lam, &led, &pd);
        let expected = 1e-4 * (led.order + 1.0) / (2.0 * PI) * lam.cos() / (3.13 * 3.13) * 3.0;
        assert_relative_eq!(h, expected, max_relative = 1e-12);
    }

    #[test]
    fn estimated_gain_equals_unblocked_gain_at_estimated_orientation() {
        let led = table_led();
        let pd = table_pd();
        let s = Vec3::new(20.0, 20.0, 3.98);
        let d = Vec3::new(16.0, 18.0, 0.85);
        let lam = 29.67f64.to_radians();
        let o = Orientation { azimuth: estimated_azimuth(s, d), polar: lam };
        let rx = Receiver::new(ReceiverId::User(0), d, o, &body_params());
        assert_eq!(estimated_channel_gain(s, d, lam, &led, &pd), channel_gain(s, &rx, &[], &led, &pd));
    }

    #[test]
    fn estimated_gain_rotation_invariant_about_led() {
        let led = table_led();
        let pd = table_pd();
        let s = Vec3::new(20.0, 20.0, 3.98);
        let lam = 29.67f64.to_radians();
        let base = estimated_channel_gain(s, Vec3::new(24.0, 21.0, 0.85), lam, &led, &pd);
        let r = (16.0f64 + 1.0).sqrt();
        for a in [0.1, 1.0, 2.5, -2.0] {
            let d = Vec3::new(20.0 + r * f64::cos(a), 20.0 + r * f64::sin(a), 0.85);
            assert_relative_eq!(estimated_channel_gain(s, d, lam, &led, &pd), base, max_relative = 1e-12);
        }
    }
}
