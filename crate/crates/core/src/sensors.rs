//! Accelerometer, magnetometer and depth handling for per-node attitude.
//!
//! Body frame: x forward (along the camera's optical axis), y left, z up.
//! World frame: x magnetic north, y west, z up. Attitude is the intrinsic
//! yaw-pitch-roll sequence, so `R_world_body = Rz(yaw)·Ry(pitch)·Rx(roll)`.
//! At rest the accelerometer reads the reaction to gravity, `(0, 0, g)` for a
//! level node.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::math;

pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Accepted accelerometer norm band, as multiples of g.
const QUASI_STATIC_BAND: (f64, f64) = (0.5, 1.5);
const VERTICAL_FIELD_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SensorError {
    #[error("accelerometer norm outside the quasi-static band")]
    DynamicMotion,
    #[error("magnetic field is nearly vertical; heading undefined")]
    VerticalField,
    #[error("requested time is outside the log span")]
    OutOfRange,
    #[error("bracketing samples are too far apart")]
    GapTooLarge,
    #[error("sensor log is empty")]
    EmptyLog,
    #[error("sensor log timestamps decrease")]
    NonMonotonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImuSample {
    pub timestamp: f64,
    /// m/s²
    pub accel: [f64; 3],
    /// rad/s; stored but not used for gating.
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MagSample {
    pub timestamp: f64,
    /// µT, body frame
    pub mag: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DepthSample {
    pub timestamp: f64,
    /// Meters below the surface.
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttitudeEstimate {
    pub timestamp: f64,
    /// (−π, π]
    pub roll: f64,
    /// [−π/2, π/2]
    pub pitch: f64,
    /// [0, 2π)
    pub yaw: f64,
    pub depth: f64,
}

impl AttitudeEstimate {
    /// Body-to-world rotation.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        body_to_world(self.roll, self.pitch, self.yaw)
    }
}

pub fn body_to_world(roll: f64, pitch: f64, yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), pitch)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), roll)
}

/// Roll, pitch, yaw of a body-to-world rotation. Yaw in [0, 2π).
pub fn euler_from_rotation(q: &UnitQuaternion<f64>) -> (f64, f64, f64) {
    let m = q.to_rotation_matrix();
    let m = m.matrix();
    let roll = math::atan2(m[(2, 1)], m[(2, 2)]);
    let pitch = math::atan2(-m[(2, 0)], math::sqrt(m[(2, 1)] * m[(2, 1)] + m[(2, 2)] * m[(2, 2)]));
    let yaw = math::wrap_two_pi(math::atan2(m[(1, 0)], m[(0, 0)]));
    (roll, pitch, yaw)
}

/// Rotation taking body-frame vectors into the camera frame: the optical axis
/// is body x, image right is body −y, image down is body −z.
pub fn camera_from_body() -> UnitQuaternion<f64> {
    let m = Matrix3::new(
        0.0, -1.0, 0.0, //
        0.0, 0.0, -1.0, //
        1.0, 0.0, 0.0,
    );
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

/// Roll and pitch from a quasi-static accelerometer sample.
pub fn attitude_from_accel(sample: &ImuSample) -> Result<(f64, f64), SensorError> {
    let [ax, ay, az] = sample.accel;
    let norm = math::sqrt(ax * ax + ay * ay + az * az);
    let (lo, hi) = QUASI_STATIC_BAND;
    if !(norm >= lo * STANDARD_GRAVITY && norm <= hi * STANDARD_GRAVITY) {
        return Err(SensorError::DynamicMotion);
    }
    let roll = math::atan2(ay, az);
    let pitch = math::atan2(-ax, math::sqrt(ay * ay + az * az));
    Ok((roll, pitch))
}

/// Tilt-compensated heading in [0, 2π).
pub fn yaw_from_mag(
    sample: &MagSample,
    roll: f64,
    pitch: f64,
    declination: f64,
) -> Result<f64, SensorError> {
    let m = Vector3::from(sample.mag);
    let total = m.norm();
    if !(total > 0.0) {
        return Err(SensorError::VerticalField);
    }
    let level = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), pitch)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), roll);
    let h = level * m;
    if math::sqrt(h.x * h.x + h.y * h.y) < VERTICAL_FIELD_RATIO * total {
        return Err(SensorError::VerticalField);
    }
    Ok(math::wrap_two_pi(math::atan2(-h.y, h.x) + declination))
}

/// Positive when B is deeper than A.
pub fn relative_depth(a: &DepthSample, b: &DepthSample) -> f64 {
    b.depth - a.depth
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapshotConfig {
    /// Seconds a query may fall outside the log span.
    pub max_extrapolation: f64,
    /// Largest gap between bracketing samples, seconds.
    pub max_gap: f64,
    /// Added to every magnetic heading, radians.
    pub declination: f64,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        Self {
            max_extrapolation: 0.1,
            max_gap: 1.0,
            declination: 0.0,
        }
    }
}

/// One node's sensor streams, validated and pre-converted to angles.
#[derive(Debug, Clone, Default)]
pub struct SensorLogs {
    imu: Vec<ImuSample>,
    mag: Vec<MagSample>,
    depth: Vec<DepthSample>,
    /// (t, roll, pitch) for quasi-static IMU samples only.
    tilt: Vec<(f64, f64, f64)>,
    /// (t, yaw) for usable magnetometer samples.
    heading: Vec<(f64, f64)>,
    config: SnapshotConfig,
}

fn check_sorted(times: impl Iterator<Item = f64>) -> Result<(), SensorError> {
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if !t.is_finite() || t < last {
            return Err(SensorError::NonMonotonic);
        }
        last = t;
    }
    Ok(())
}

/// Index `i` with `times[i] <= t < times[i+1]`, or the clamped end.
fn bracket<T>(items: &[T], t: f64, time: impl Fn(&T) -> f64, cfg: &SnapshotConfig) -> Result<(usize, usize, f64), SensorError> {
    let n = items.len();
    if n == 0 {
        return Err(SensorError::EmptyLog);
    }
    let first = time(&items[0]);
    let last = time(&items[n - 1]);
    if t < first - cfg.max_extrapolation || t > last + cfg.max_extrapolation {
        return Err(SensorError::OutOfRange);
    }
    if t <= first {
        return Ok((0, 0, 0.0));
    }
    if t >= last {
        return Ok((n - 1, n - 1, 0.0));
    }
    let hi = items.partition_point(|s| time(s) <= t);
    let lo = hi - 1;
    let (t0, t1) = (time(&items[lo]), time(&items[hi]));
    if t1 - t0 > cfg.max_gap {
        return Err(SensorError::GapTooLarge);
    }
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    Ok((lo, hi, w))
}

fn lerp_angle(a: f64, b: f64, w: f64) -> f64 {
    a + w * math::wrap_pi(b - a)
}

impl SensorLogs {
    pub fn new(
        imu: Vec<ImuSample>,
        mag: Vec<MagSample>,
        depth: Vec<DepthSample>,
        config: SnapshotConfig,
    ) -> Result<Self, SensorError> {
        check_sorted(imu.iter().map(|s| s.timestamp))?;
        check_sorted(mag.iter().map(|s| s.timestamp))?;
        check_sorted(depth.iter().map(|s| s.timestamp))?;
        let tilt: Vec<_> = imu
            .iter()
            .filter_map(|s| attitude_from_accel(s).ok().map(|(r, p)| (s.timestamp, r, p)))
            .collect();
        let mut logs = Self {
            imu,
            mag,
            depth,
            tilt,
            heading: Vec::new(),
            config,
        };
        let heading = logs
            .mag
            .iter()
            .filter_map(|m| {
                let (roll, pitch) = logs.tilt_at(m.timestamp).ok()?;
                let yaw = yaw_from_mag(m, roll, pitch, config.declination).ok()?;
                Some((m.timestamp, yaw))
            })
            .collect();
        logs.heading = heading;
        Ok(logs)
    }

    pub fn imu(&self) -> &[ImuSample] {
        &self.imu
    }

    pub fn mag(&self) -> &[MagSample] {
        &self.mag
    }

    pub fn depth(&self) -> &[DepthSample] {
        &self.depth
    }

    pub fn config(&self) -> &SnapshotConfig {
        &self.config
    }

    fn tilt_at(&self, t: f64) -> Result<(f64, f64), SensorError> {
        let (i, j, w) = bracket(&self.tilt, t, |s| s.0, &self.config)?;
        let (a, b) = (self.tilt[i], self.tilt[j]);
        Ok((
            math::wrap_pi(lerp_angle(a.1, b.1, w)),
            a.2 + w * (b.2 - a.2),
        ))
    }

    /// Interpolated attitude and depth at time `t`.
    pub fn snapshot_at(&self, t: f64) -> Result<AttitudeEstimate, SensorError> {
        let (roll, pitch) = self.tilt_at(t)?;
        let (i, j, w) = bracket(&self.heading, t, |s| s.0, &self.config)?;
        let yaw = math::wrap_two_pi(lerp_angle(self.heading[i].1, self.heading[j].1, w));
        let (i, j, w) = bracket(&self.depth, t, |s| s.timestamp, &self.config)?;
        let depth = self.depth[i].depth + w * (self.depth[j].depth - self.depth[i].depth);
        Ok(AttitudeEstimate {
            timestamp: t,
            roll,
            pitch,
            yaw,
            depth,
        })
    }
}
