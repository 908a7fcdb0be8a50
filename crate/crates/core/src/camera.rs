//! Pinhole camera with two-coefficient radial distortion.
//!
//! Pixel coordinates place the center of pixel `(col, row)` at `(col, row)`.
//! The distortion model maps a normalized undistorted point `(x, y)` with
//! `r² = x² + y²` to `(x, y) · (1 + k1·r² + k2·r⁴)`.

use nalgebra::Vector3;
use thiserror::Error;

use crate::math;

/// Tolerance on the undistorted radius, in pixels.
const UNDISTORT_TOLERANCE_PX: f64 = 1e-12;
const UNDISTORT_MAX_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum CameraError {
    #[error("pixel coordinates are not finite")]
    NonFinitePixel,
    #[error("iterative undistortion did not converge")]
    DistortionDivergence,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        let du = self.u - other.u;
        let dv = self.v - other.v;
        math::sqrt(du * du + dv * dv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Radial distortion coefficients `[k1, k2]`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub radial_distortion: [f64; 2],
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, CameraError> {
        Self {
            fx,
            fy,
            cx,
            cy,
            image_width,
            image_height,
            radial_distortion: [0.0; 2],
        }
        .validated()
    }

    pub fn with_distortion(mut self, k1: f64, k2: f64) -> Result<Self, CameraError> {
        self.radial_distortion = [k1, k2];
        self.validated()
    }

    /// Checks the type invariants; useful after deserialization.
    pub fn validated(self) -> Result<Self, CameraError> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(CameraError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(self.cx > 0.0 && self.cx < self.image_width as f64) {
            return Err(CameraError::InvalidIntrinsics("cx outside the image"));
        }
        if !(self.cy > 0.0 && self.cy < self.image_height as f64) {
            return Err(CameraError::InvalidIntrinsics("cy outside the image"));
        }
        if !self.radial_distortion.iter().all(|k| k.is_finite()) {
            return Err(CameraError::InvalidIntrinsics("distortion not finite"));
        }
        Ok(self)
    }

    /// A 62° horizontal field of view camera at 1280×960.
    pub fn default_wide() -> Self {
        Self {
            fx: 1060.0,
            fy: 1060.0,
            cx: 640.0,
            cy: 480.0,
            image_width: 1280,
            image_height: 960,
            radial_distortion: [0.0; 2],
        }
    }

    fn distortion_factor(&self, r2: f64) -> f64 {
        let [k1, k2] = self.radial_distortion;
        1.0 + k1 * r2 + k2 * r2 * r2
    }

    /// Projects a camera-frame point. Returns `None` for points on or behind
    /// the image plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<PixelPoint> {
        if !(p.z > 0.0) {
            return None;
        }
        let x = p.x / p.z;
        let y = p.y / p.z;
        let f = self.distortion_factor(x * x + y * y);
        Some(PixelPoint::new(
            self.fx * x * f + self.cx,
            self.fy * y * f + self.cy,
        ))
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0
            && p.v >= 0.0
            && p.u <= (self.image_width - 1) as f64
            && p.v <= (self.image_height - 1) as f64
    }

    /// Inverse of [`project`](Self::project) up to scale.
    pub fn unproject(&self, p: &PixelPoint) -> Result<Bearing, CameraError> {
        if !p.is_finite() {
            return Err(CameraError::NonFinitePixel);
        }
        let xd = (p.u - self.cx) / self.fx;
        let yd = (p.v - self.cy) / self.fy;
        let rd = math::sqrt(xd * xd + yd * yd);
        let scale = if rd == 0.0 || self.radial_distortion == [0.0; 2] {
            1.0
        } else {
            self.undistort_radius(rd)? / rd
        };
        Ok(Bearing::from_vector(&Vector3::new(xd * scale, yd * scale, 1.0)))
    }

    /// Newton iteration on `r·(1 + k1·r² + k2·r⁴) = rd`.
    fn undistort_radius(&self, rd: f64) -> Result<f64, CameraError> {
        let [k1, k2] = self.radial_distortion;
        let tol = UNDISTORT_TOLERANCE_PX / self.fx.max(self.fy);
        let mut r = rd;
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            let r2 = r * r;
            let f = r * (1.0 + k1 * r2 + k2 * r2 * r2) - rd;
            let df = 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
            if !(df > 0.0) {
                return Err(CameraError::DistortionDivergence);
            }
            let step = f / df;
            r -= step;
            if !(r > 0.0) || !r.is_finite() {
                return Err(CameraError::DistortionDivergence);
            }
            if math::abs(step) <= tol {
                return Ok(r);
            }
        }
        Err(CameraError::DistortionDivergence)
    }
}

/// Unit direction from a camera center, expressed in that camera's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bearing {
    x: f64,
    y: f64,
    z: f64,
}

impl Bearing {
    /// Normalizes `v`. `v` must be non-zero and finite.
    pub fn from_vector(v: &Vector3<f64>) -> Self {
        let n = v.norm();
        Self {
            x: v.x / n,
            y: v.y / n,
            z: v.z / n,
        }
    }

    pub const OPTICAL_AXIS: Bearing = Bearing {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// Free-function form of [`CameraIntrinsics::unproject`].
pub fn unproject(p: &PixelPoint, k: &CameraIntrinsics) -> Result<Bearing, CameraError> {
    k.unproject(p)
}
