use nalgebra::{UnitQuaternion, Vector3};

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub(crate) const TAU: f64 = core::f64::consts::TAU;
pub(crate) const PI: f64 = core::f64::consts::PI;

/// Wraps an angle to (-π, π].
pub(crate) fn wrap_pi(a: f64) -> f64 {
    let mut w = a - TAU * floor((a + PI) / TAU);
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Wraps an angle to [0, 2π).
pub(crate) fn wrap_two_pi(a: f64) -> f64 {
    let w = a - TAU * floor(a / TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angle between two vectors, accurate near 0 and π.
pub(crate) fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    atan2(a.cross(b).norm(), a.dot(b))
}

/// Geodesic distance between two rotations, in [0, π].
pub fn geodesic_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let d = a.inverse() * b;
    let v = d.as_ref().imag().norm();
    2.0 * atan2(v, abs(d.as_ref().w))
}

/// Quaternion with non-negative scalar part representing the same rotation.
pub(crate) fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    if q.as_ref().w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}
