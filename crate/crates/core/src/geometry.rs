//! Closed-form two-node relative pose from mutual bearing observations.
//!
//! Node A sees node B's two lights, node B sees node A's two lights. From the
//! angle `alpha` one node's lights subtend at the other camera, and the angle
//! `beta` between the observer's direction to the other camera and the plane
//! perpendicular to its own light baseline, the inter-camera distance is
//!
//! ```text
//! l = d / (2 sin α) · (cos α cos β + sqrt(1 − cos²α sin²β))
//! ```
//!
//! The distance is computed twice with the roles of the images swapped and
//! averaged. The direction to the other camera starts as the bisector of the
//! two landmark bearings and is corrected for the unequal landmark depths,
//! which makes the noise-free solution exact for any relative attitude.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::camera::{Bearing, CameraError, CameraIntrinsics, PixelPoint};
use crate::math;

/// Threshold on norms and sines below which a configuration is unobservable.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

const MAX_REFINEMENT_ITERATIONS: usize = 64;
const REFINEMENT_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum GeometryError {
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("subtended angle is degenerate; range is unobservable")]
    DegenerateAlpha,
    #[error("landmark bearings are antipodal; midpoint direction undefined")]
    DegenerateMidpoint,
    #[error("baseline is collinear with a landmark line; orientation unobservable")]
    DegeneratePlane,
    #[error("angles outside their domain")]
    InvalidAngles,
    #[error("invalid node geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("relative pose must have positive range")]
    InvalidPose,
}

/// Placement of a node's two lights in its camera frame, in meters.
///
/// `left` is the light that appears at smaller image `u` to an upright
/// observer looking at the node's front, i.e. it sits on the node's own +x
/// side. The closed form assumes the camera sits on the midpoint of the two
/// lights, which [`NodeGeometry::symmetric`] guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeGeometry {
    left: Vector3<f64>,
    right: Vector3<f64>,
}

impl NodeGeometry {
    /// Lights at `(±d/2, 0, 0)`, centered on the camera.
    pub fn symmetric(d: f64) -> Result<Self, GeometryError> {
        Self::new(Vector3::new(d / 2.0, 0.0, 0.0), Vector3::new(-d / 2.0, 0.0, 0.0))
    }

    pub fn new(left: Vector3<f64>, right: Vector3<f64>) -> Result<Self, GeometryError> {
        if !left.iter().chain(right.iter()).all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidGeometry("non-finite offsets"));
        }
        if !((left - right).norm() > 0.0) {
            return Err(GeometryError::InvalidGeometry("baseline must be positive"));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> Vector3<f64> {
        self.left
    }

    pub fn right(&self) -> Vector3<f64> {
        self.right
    }

    /// Distance `d` between the lights.
    pub fn baseline(&self) -> f64 {
        (self.left - self.right).norm()
    }

    /// Unit vector from the right light to the left light.
    pub fn axis(&self) -> Vector3<f64> {
        (self.left - self.right) / self.baseline()
    }

    pub fn midpoint(&self) -> Vector3<f64> {
        (self.left + self.right) / 2.0
    }
}

/// The two angles fed to the closed-form range.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnglePair {
    /// Angle subtended by the other node's lights at the observing camera.
    pub alpha: f64,
    /// Angle between the direction to the other camera and the plane
    /// perpendicular to the observer's light baseline.
    pub beta: f64,
}

impl AnglePair {
    /// `alpha ∈ (0, π)`, `beta ∈ [0, π/2]`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self, GeometryError> {
        let half_pi = core::f64::consts::FRAC_PI_2;
        if !(alpha > 0.0 && alpha < math::PI) || !(beta >= 0.0 && beta <= half_pi) {
            return Err(GeometryError::InvalidAngles);
        }
        Ok(Self { alpha, beta })
    }
}

/// Pose of node B's camera expressed in node A's camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelativePose {
    /// Maps B-frame vectors into the A frame; scalar part is non-negative.
    pub rotation: UnitQuaternion<f64>,
    /// Position of B's camera center in the A frame, meters.
    pub translation: Vector3<f64>,
    /// `‖translation‖`, meters.
    pub range: f64,
}

impl RelativePose {
    pub fn new(
        rotation: UnitQuaternion<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let range = translation.norm();
        if !(range > 0.0) || !range.is_finite() {
            return Err(GeometryError::InvalidPose);
        }
        Ok(Self {
            rotation: math::canonical(rotation),
            translation,
            range,
        })
    }

    /// Pose of A expressed in B's frame.
    pub fn inverse(&self) -> RelativePose {
        let rotation = math::canonical(self.rotation.inverse());
        let translation = -(rotation * self.translation);
        RelativePose {
            rotation,
            translation,
            range: self.range,
        }
    }

    pub fn position_error(&self, other: &RelativePose) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Geodesic angle between the two rotations, radians.
    pub fn rotation_error(&self, other: &RelativePose) -> f64 {
        math::geodesic_distance(&self.rotation, &other.rotation)
    }
}

/// Calibration and light placement for both nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodePair {
    pub intrinsics_a: CameraIntrinsics,
    pub intrinsics_b: CameraIntrinsics,
    pub geometry_a: NodeGeometry,
    pub geometry_b: NodeGeometry,
}

/// Bearings observed by both cameras at one instant, ordered `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualBearings {
    /// A's bearings to B's left and right lights, A frame.
    pub a_sees_b: [Bearing; 2],
    /// B's bearings to A's left and right lights, B frame.
    pub b_sees_a: [Bearing; 2],
}

/// Output of [`solve_relative_pose`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoseSolution {
    pub pose: RelativePose,
    /// Range from `alpha` measured in B's image and `beta` in A's image.
    pub range_from_a: f64,
    /// Range from `alpha` measured in A's image and `beta` in B's image.
    pub range_from_b: f64,
    /// Geodesic angle between the rotations recovered from each node's
    /// light plane.
    pub rotation_disagreement: f64,
    pub iterations: usize,
}

/// Angle between two bearings, in `[0, π]`.
pub fn subtended_angle(b1: &Bearing, b2: &Bearing) -> f64 {
    math::angle_between(&b1.to_vector(), &b2.to_vector())
}

fn midpoint_direction(b1: &Vector3<f64>, b2: &Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let m = b1 + b2;
    let n = m.norm();
    if n < DEGENERACY_TOLERANCE {
        return Err(GeometryError::DegenerateMidpoint);
    }
    Ok(m / n)
}

/// Angle between the optical axis and the bisector of the bearings to the
/// other node's two lights.
pub fn baseline_angle(b_left: &Bearing, b_right: &Bearing) -> Result<f64, GeometryError> {
    let m = midpoint_direction(&b_left.to_vector(), &b_right.to_vector())?;
    Ok(math::angle_between(&m, &Vector3::z()))
}

/// Angle between `direction` and the plane perpendicular to `axis`, in
/// `[0, π/2]`. This is the `beta` the closed form expects; it equals the
/// angle to the optical axis whenever the other camera lies in the plane
/// spanned by the optical axis and the light baseline.
pub fn inclination_to_baseline_normal(direction: &Vector3<f64>, axis: &Vector3<f64>) -> f64 {
    let s = math::abs(direction.dot(axis)) / (direction.norm() * axis.norm());
    math::asin(s.min(1.0))
}

/// Distance between the two cameras from light spacing `d` and the angle pair.
pub fn range_closed_form(d: f64, angles: &AnglePair) -> Result<f64, GeometryError> {
    range_from_angles(d, angles.alpha, angles.beta)
}

#[inline]
fn range_from_angles(d: f64, alpha: f64, beta: f64) -> Result<f64, GeometryError> {
    let sin_a = math::sin(alpha);
    if sin_a < DEGENERACY_TOLERANCE {
        return Err(GeometryError::DegenerateAlpha);
    }
    let cos_a = math::cos(alpha);
    let sin_b = math::sin(beta);
    let radicand = (1.0 - cos_a * cos_a * sin_b * sin_b).max(0.0);
    Ok(d / (2.0 * sin_a) * (cos_a * math::cos(beta) + math::sqrt(radicand)))
}

pub fn range_averaged(l_from_a: f64, l_from_b: f64) -> f64 {
    0.5 * (l_from_a + l_from_b)
}

pub fn position_from_range(midpoint_bearing: &Bearing, l: f64) -> Vector3<f64> {
    midpoint_bearing.to_vector() * l
}

/// Directions between the cameras and the two range estimates after the
/// landmark-depth correction has converged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    /// Unit vector from A's camera toward B's camera, A frame.
    pub toward_b: Vector3<f64>,
    /// Unit vector from B's camera toward A's camera, B frame.
    pub toward_a: Vector3<f64>,
    pub range_from_a: f64,
    pub range_from_b: f64,
    pub alpha_at_a: f64,
    pub alpha_at_b: f64,
    pub iterations: usize,
}

/// Direction to the observed node's light midpoint once each light's depth is
/// known from the range `l` and the direction `toward_observer` (observed
/// node's frame) in which the observer lies.
fn depth_corrected_direction(
    rays: &[Vector3<f64>; 2],
    observed: &NodeGeometry,
    l: f64,
    toward_observer: &Vector3<f64>,
) -> Option<Vector3<f64>> {
    let observer = toward_observer * l;
    let depth = |offset: Vector3<f64>| math::sqrt((observer - offset).norm_squared().max(0.0));
    let m = rays[0] * depth(observed.left) + rays[1] * depth(observed.right);
    let n = m.norm();
    (n > DEGENERACY_TOLERANCE && n.is_finite()).then(|| m / n)
}

/// Alternates the closed-form range with the depth correction of both
/// camera-to-camera directions until they stop changing.
pub fn refine_directions(
    view: &MutualBearings,
    geometry_a: &NodeGeometry,
    geometry_b: &NodeGeometry,
) -> Result<Refinement, GeometryError> {
    let rays_a = [view.a_sees_b[0].to_vector(), view.a_sees_b[1].to_vector()];
    let rays_b = [view.b_sees_a[0].to_vector(), view.b_sees_a[1].to_vector()];
    let alpha_at_a = math::angle_between(&rays_a[0], &rays_a[1]);
    let alpha_at_b = math::angle_between(&rays_b[0], &rays_b[1]);
    let (d_a, d_b) = (geometry_a.baseline(), geometry_b.baseline());
    let (axis_a, axis_b) = (geometry_a.axis(), geometry_b.axis());

    let mut toward_b = midpoint_direction(&rays_a[0], &rays_a[1])?;
    let mut toward_a = midpoint_direction(&rays_b[0], &rays_b[1])?;
    let ranges = |tb: &Vector3<f64>, ta: &Vector3<f64>| -> Result<(f64, f64), GeometryError> {
        Ok((
            range_from_angles(d_a, alpha_at_b, inclination_to_baseline_normal(tb, &axis_a))?,
            range_from_angles(d_b, alpha_at_a, inclination_to_baseline_normal(ta, &axis_b))?,
        ))
    };

    let mut iterations = 0;
    while iterations < MAX_REFINEMENT_ITERATIONS {
        iterations += 1;
        let (l_a, l_b) = ranges(&toward_b, &toward_a)?;
        let next_b = depth_corrected_direction(&rays_a, geometry_b, l_a, &toward_a);
        let next_a = depth_corrected_direction(&rays_b, geometry_a, l_b, &toward_b);
        let (Some(next_b), Some(next_a)) = (next_b, next_a) else {
            break;
        };
        let change = (next_b - toward_b).norm().max((next_a - toward_a).norm());
        toward_b = next_b;
        toward_a = next_a;
        if change <= REFINEMENT_TOLERANCE {
            break;
        }
    }
    let (range_from_a, range_from_b) = ranges(&toward_b, &toward_a)?;
    Ok(Refinement {
        toward_b,
        toward_a,
        range_from_a,
        range_from_b,
        alpha_at_a,
        alpha_at_b,
        iterations,
    })
}

fn unit_or_degenerate(v: Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let n = v.norm();
    if n < DEGENERACY_TOLERANCE || !n.is_finite() {
        return Err(GeometryError::DegeneratePlane);
    }
    Ok(v / n)
}

/// Rotation `R` with `R·v1 = w1` exactly and `R·v2` as close to `w2` as the
/// first constraint allows.
fn triad(
    v1: &Vector3<f64>,
    v2: &Vector3<f64>,
    w1: &Vector3<f64>,
    w2: &Vector3<f64>,
) -> Result<UnitQuaternion<f64>, GeometryError> {
    let b2 = unit_or_degenerate(v1.cross(v2))?;
    let r2 = unit_or_degenerate(w1.cross(w2))?;
    let body = Matrix3::from_columns(&[*v1, b2, v1.cross(&b2)]);
    let reference = Matrix3::from_columns(&[*w1, r2, w1.cross(&r2)]);
    let rot = Rotation3::from_matrix_unchecked(reference * body.transpose());
    Ok(UnitQuaternion::from_rotation_matrix(&rot))
}

/// Both per-plane rotation estimates and their sign-aligned normalized mean.
fn rotation_from_refinement(
    view: &MutualBearings,
    geometry_a: &NodeGeometry,
    geometry_b: &NodeGeometry,
    refined: &Refinement,
    range: f64,
) -> Result<(UnitQuaternion<f64>, f64), GeometryError> {
    let rays_a = [view.a_sees_b[0].to_vector(), view.a_sees_b[1].to_vector()];
    let rays_b = [view.b_sees_a[0].to_vector(), view.b_sees_a[1].to_vector()];
    let primary_b = refined.toward_a;
    let primary_a = -refined.toward_b;

    // Plane through B's camera and A's two lights.
    let b_cam_in_a = refined.toward_b * range;
    let normal_a_lights_in_b = unit_or_degenerate(rays_b[0].cross(&rays_b[1]))?;
    let normal_a_lights_in_a = unit_or_degenerate(
        (geometry_a.left - b_cam_in_a).cross(&(geometry_a.right - b_cam_in_a)),
    )?;
    let from_a_plane = triad(&primary_b, &normal_a_lights_in_b, &primary_a, &normal_a_lights_in_a)?;

    // Plane through A's camera and B's two lights.
    let a_cam_in_b = refined.toward_a * range;
    let normal_b_lights_in_b = unit_or_degenerate(
        (geometry_b.left - a_cam_in_b).cross(&(geometry_b.right - a_cam_in_b)),
    )?;
    let normal_b_lights_in_a = unit_or_degenerate(rays_a[0].cross(&rays_a[1]))?;
    let from_b_plane = triad(&primary_b, &normal_b_lights_in_b, &primary_a, &normal_b_lights_in_a)?;

    let disagreement = math::geodesic_distance(&from_a_plane, &from_b_plane);
    let q1 = from_a_plane.into_inner();
    let mut q2 = from_b_plane.into_inner();
    if q1.dot(&q2) < 0.0 {
        q2 = -q2;
    }
    let mean = UnitQuaternion::from_quaternion(q1 + q2);
    Ok((math::canonical(mean), disagreement))
}

/// Relative rotation (B frame into A frame) from the mutual bearings.
pub fn recover_rotation(
    view: &MutualBearings,
    geometry_a: &NodeGeometry,
    geometry_b: &NodeGeometry,
) -> Result<UnitQuaternion<f64>, GeometryError> {
    let refined = refine_directions(view, geometry_a, geometry_b)?;
    let range = range_averaged(refined.range_from_a, refined.range_from_b);
    Ok(rotation_from_refinement(view, geometry_a, geometry_b, &refined, range)?.0)
}

/// Full solve from bearings.
pub fn solve_from_bearings(
    view: &MutualBearings,
    geometry_a: &NodeGeometry,
    geometry_b: &NodeGeometry,
) -> Result<PoseSolution, GeometryError> {
    let refined = refine_directions(view, geometry_a, geometry_b)?;
    let range = range_averaged(refined.range_from_a, refined.range_from_b);
    let (rotation, rotation_disagreement) =
        rotation_from_refinement(view, geometry_a, geometry_b, &refined, range)?;
    let translation = position_from_range(&Bearing::from_vector(&refined.toward_b), range);
    Ok(PoseSolution {
        pose: RelativePose::new(rotation, translation)?,
        range_from_a: refined.range_from_a,
        range_from_b: refined.range_from_b,
        rotation_disagreement,
        iterations: refined.iterations,
    })
}

/// End-to-end solve from labeled light detections in both images.
///
/// `in_a` holds B's `[left, right]` lights as seen in A's image, `in_b` holds
/// A's lights as seen in B's image.
pub fn solve_relative_pose(
    in_a: &[PixelPoint; 2],
    in_b: &[PixelPoint; 2],
    nodes: &NodePair,
) -> Result<PoseSolution, GeometryError> {
    let ka = &nodes.intrinsics_a;
    let kb = &nodes.intrinsics_b;
    let view = MutualBearings {
        a_sees_b: [ka.unproject(&in_a[0])?, ka.unproject(&in_a[1])?],
        b_sees_a: [kb.unproject(&in_b[0])?, kb.unproject(&in_b[1])?],
    };
    solve_from_bearings(&view, &nodes.geometry_a, &nodes.geometry_b)
}
