//! Deterministic synthetic scenes with known ground truth.
//!
//! Node A is the reference. World frame: x north, y west, z up; depth is
//! `-z`. Every random draw comes from a ChaCha8 substream keyed by the
//! dataset seed, a purpose tag and the frame index, so frames can be
//! generated in any order with identical results.

pub mod render;
pub mod synth;
pub mod sweep;
pub mod trajectory;

use bocl_core::camera::{CameraIntrinsics, PixelPoint};
use bocl_core::geometry::{NodeGeometry, NodePair, RelativePose};
use bocl_core::sensors::{body_to_world, camera_from_body};
use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use render::render_beam_image;
pub use synth::synth_sensors;
pub use sweep::{spacing_sweep, SweepRow};
pub use trajectory::{generate_trajectory, PathKind, TrajectorySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("a landmark is behind the camera or outside the image")]
    NotVisible,
}

/// Purpose tags for RNG substreams.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Detections = 1,
    Render = 2,
    Timestamps = 3,
    Sensors = 4,
    Sweep = 5,
}

pub(crate) fn substream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    A,
    B,
}

impl Node {
    pub fn other(self) -> Node {
        match self {
            Node::A => Node::B,
            Node::B => Node::A,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Node::A => "A",
            Node::B => "B",
        }
    }
}

/// World pose of one node. `orientation` maps body vectors into the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl NodePose {
    pub fn from_euler(position: Vector3<f64>, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            position,
            orientation: body_to_world(roll, pitch, yaw),
        }
    }

    pub fn world_from_camera(&self) -> UnitQuaternion<f64> {
        self.orientation * camera_from_body().inverse()
    }

    pub fn to_camera(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.world_from_camera().inverse() * (world - self.position)
    }

    pub fn light(&self, geometry: &NodeGeometry, left: bool) -> Vector3<f64> {
        let local = if left { geometry.left() } else { geometry.right() };
        self.position + self.world_from_camera() * local
    }

    /// Optical axis in the world frame.
    pub fn forward(&self) -> Vector3<f64> {
        self.orientation * Vector3::x()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePose {
    pub timestamp: f64,
    pub a: NodePose,
    pub b: NodePose,
}

impl ScenePose {
    pub fn node(&self, n: Node) -> &NodePose {
        match n {
            Node::A => &self.a,
            Node::B => &self.b,
        }
    }

    /// Ground-truth pose of B's camera in A's camera frame.
    pub fn relative_pose(&self) -> RelativePose {
        let ra = self.a.world_from_camera();
        let rb = self.b.world_from_camera();
        RelativePose::new(ra.inverse() * rb, ra.inverse() * (self.b.position - self.a.position))
            .expect("nodes coincide")
    }
}

/// Fixed properties of the simulated environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub nodes: NodePair,
    /// Depth of the reflecting floor, meters.
    pub floor_depth: f64,
    /// Earth field in the world frame, µT.
    pub magnetic_field: [f64; 3],
}

impl World {
    pub fn symmetric(baseline: f64, intrinsics: CameraIntrinsics, floor_depth: f64) -> Self {
        let g = NodeGeometry::symmetric(baseline).expect("baseline must be positive");
        Self {
            nodes: NodePair {
                intrinsics_a: intrinsics,
                intrinsics_b: intrinsics,
                geometry_a: g,
                geometry_b: g,
            },
            floor_depth,
            magnetic_field: [22.0, 0.0, -42.0],
        }
    }

    pub fn intrinsics(&self, n: Node) -> &CameraIntrinsics {
        match n {
            Node::A => &self.nodes.intrinsics_a,
            Node::B => &self.nodes.intrinsics_b,
        }
    }

    pub fn geometry(&self, n: Node) -> &NodeGeometry {
        match n {
            Node::A => &self.nodes.geometry_a,
            Node::B => &self.nodes.geometry_b,
        }
    }

    /// Mirror image of a world point in the floor plane.
    pub fn mirror(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(p.x, p.y, -2.0 * self.floor_depth - p.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Landmark localization noise, px.
    pub pixel_noise_sigma: f64,
    /// m/s².
    pub accel_noise_sigma: f64,
    /// rad/s.
    pub gyro_noise_sigma: f64,
    /// µT.
    pub mag_noise_sigma: f64,
    /// m.
    pub depth_noise_sigma: f64,
    /// Expected distractor detections per image.
    pub distractor_rate: f64,
    /// Beam decay length along the emission direction, px.
    pub beam_elongation: f64,
    /// Gaussian beam half-width, px.
    pub beam_width: f64,
    /// Per-channel image noise, in units of full scale.
    pub intensity_noise_sigma: f64,
    /// Expected snow speckles per image.
    pub snow_rate: f64,
    /// Half-width of the uniform clock jitter on B's frame timestamps, s.
    pub timestamp_jitter: f64,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pixel_noise_sigma: 1.0,
            accel_noise_sigma: 0.05,
            gyro_noise_sigma: 0.002,
            mag_noise_sigma: 0.5,
            depth_noise_sigma: 0.02,
            distractor_rate: 0.0,
            beam_elongation: 0.0,
            beam_width: 3.0,
            intensity_noise_sigma: 0.01,
            snow_rate: 0.0,
            timestamp_jitter: 0.005,
            rng_seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn zero(rng_seed: u64) -> Self {
        Self {
            pixel_noise_sigma: 0.0,
            accel_noise_sigma: 0.0,
            gyro_noise_sigma: 0.0,
            mag_noise_sigma: 0.0,
            depth_noise_sigma: 0.0,
            distractor_rate: 0.0,
            beam_elongation: 0.0,
            intensity_noise_sigma: 0.0,
            snow_rate: 0.0,
            timestamp_jitter: 0.0,
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("pixel_noise_sigma", self.pixel_noise_sigma),
            ("accel_noise_sigma", self.accel_noise_sigma),
            ("gyro_noise_sigma", self.gyro_noise_sigma),
            ("mag_noise_sigma", self.mag_noise_sigma),
            ("depth_noise_sigma", self.depth_noise_sigma),
            ("distractor_rate", self.distractor_rate),
            ("beam_elongation", self.beam_elongation),
            ("intensity_noise_sigma", self.intensity_noise_sigma),
            ("snow_rate", self.snow_rate),
            ("timestamp_jitter", self.timestamp_jitter),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.beam_width > 0.0) {
            return Err("beam_width must be positive".into());
        }
        Ok(())
    }
}

/// True pixel positions of each node's lights in the other node's image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkPixels {
    /// B's `[left, right]` in A's image.
    pub in_a: [PixelPoint; 2],
    /// A's `[left, right]` in B's image.
    pub in_b: [PixelPoint; 2],
}

impl LandmarkPixels {
    pub fn in_image(&self, observer: Node) -> &[PixelPoint; 2] {
        match observer {
            Node::A => &self.in_a,
            Node::B => &self.in_b,
        }
    }
}

/// Projects a world point into `observer`'s image, if it lands inside it.
pub fn project_world(
    scene: &ScenePose,
    world: &World,
    observer: Node,
    p: &Vector3<f64>,
) -> Option<PixelPoint> {
    let k = world.intrinsics(observer);
    let local = scene.node(observer).to_camera(p);
    k.project(&local).filter(|px| k.contains(px))
}

fn observed_lights(scene: &ScenePose, world: &World, observer: Node) -> [Option<PixelPoint>; 2] {
    let target = observer.other();
    let pose = scene.node(target);
    let g = world.geometry(target);
    [true, false].map(|left| project_world(scene, world, observer, &pose.light(g, left)))
}

/// Pinhole projection (with distortion) of each node's lights into the other image.
pub fn render_landmarks(scene: &ScenePose, world: &World) -> Result<LandmarkPixels, SimError> {
    let grab = |observer| match observed_lights(scene, world, observer) {
        [Some(l), Some(r)] => Ok([l, r]),
        _ => Err(SimError::NotVisible),
    };
    Ok(LandmarkPixels {
        in_a: grab(Node::A)?,
        in_b: grab(Node::B)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    LandmarkLeft,
    LandmarkRight,
    Reflection,
    StrayLight,
    Caustic,
}

/// A bright source in one image, before detection noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub label: PointLabel,
    pub pixel: PixelPoint,
    /// World position for physical sources; caustics have none.
    pub world: Option<Vector3<f64>>,
    /// Peak brightness in `[0, 1]`.
    pub peak: f64,
    /// Unit image-plane direction the beam extends along.
    pub direction: [f64; 2],
}

/// Share of distractors that are floor reflections, stray lamps and caustics.
const REFLECTION_SHARE: f64 = 0.5;
const STRAY_SHARE: f64 = 0.3;
const CAUSTIC_SHARE: f64 = 0.2;
const REFLECTION_GAIN: f64 = 0.55;
const LANDMARK_PEAK: f64 = 0.95;

/// Image-plane direction of the emitting node's beam through `p`.
fn beam_direction(
    scene: &ScenePose,
    world: &World,
    observer: Node,
    p: &Vector3<f64>,
    emission: &Vector3<f64>,
    at: &PixelPoint,
) -> [f64; 2] {
    let k = world.intrinsics(observer);
    let pose = scene.node(observer);
    let ahead = pose.to_camera(&(p + emission * 0.05));
    if let Some(q) = k.project(&ahead) {
        let (du, dv) = (q.u - at.u, q.v - at.v);
        let n = du.hypot(dv);
        if n > 1e-6 {
            return [du / n, dv / n];
        }
    }
    let (du, dv) = (at.u - k.cx, at.v - k.cy);
    let n = du.hypot(dv);
    if n > 1e-6 {
        [du / n, dv / n]
    } else {
        [1.0, 0.0]
    }
}

/// Every bright source visible to `observer`: the other node's lights plus
/// sampled distractors. Deterministic in `(seed, frame index, observer)`.
pub fn image_sources(
    scene: &ScenePose,
    world: &World,
    observer: Node,
    noise: &NoiseModel,
    frame_index: u64,
) -> Vec<ImageSource> {
    let target = observer.other();
    let pose = scene.node(target);
    let g = world.geometry(target);
    let emission = pose.forward();
    let mut rng = substream(
        noise.rng_seed,
        Stream::Detections,
        frame_index * 2 + observer as u64,
    );
    let mut out = Vec::new();
    let push = |label, p: Vector3<f64>, peak, out: &mut Vec<ImageSource>| {
        if let Some(px) = project_world(scene, world, observer, &p) {
            let direction = beam_direction(scene, world, observer, &p, &emission, &px);
            out.push(ImageSource {
                label,
                pixel: px,
                world: Some(p),
                peak,
                direction,
            });
        }
    };
    let lights = [pose.light(g, true), pose.light(g, false)];
    push(PointLabel::LandmarkLeft, lights[0], LANDMARK_PEAK, &mut out);
    push(PointLabel::LandmarkRight, lights[1], LANDMARK_PEAK, &mut out);

    let rate = noise.distractor_rate;
    // Both lights reflect together, so each event contributes two detections.
    let p_reflect = (rate * REFLECTION_SHARE / 2.0).min(1.0);
    if rng.gen::<f64>() < p_reflect {
        for l in &lights {
            push(PointLabel::Reflection, world.mirror(l), LANDMARK_PEAK * REFLECTION_GAIN, &mut out);
        }
    }
    for _ in 0..poisson(&mut rng, rate * STRAY_SHARE) {
        let base = lights[rng.gen_range(0..2)];
        let offset = Vector3::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(1.0..2.0),
        );
        push(PointLabel::StrayLight, base + offset, 0.8, &mut out);
    }
    let k = world.intrinsics(observer);
    for _ in 0..poisson(&mut rng, rate * CAUSTIC_SHARE) {
        let u = rng.gen_range(0.0..(k.image_width - 1) as f64);
        let v = rng.gen_range(0.5..1.0) * (k.image_height - 1) as f64;
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        out.push(ImageSource {
            label: PointLabel::Caustic,
            pixel: PixelPoint::new(u, v),
            world: None,
            peak: rng.gen_range(0.6..0.8),
            direction: [angle.cos(), angle.sin()],
        });
    }
    out
}

pub(crate) fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// A detection as stored in a detections-only dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub u: f64,
    pub v: f64,
    pub label: PointLabel,
}

/// Sources with their pixel positions perturbed by the pixel noise model.
pub fn jittered_sources(
    sources: &[ImageSource],
    noise: &NoiseModel,
    frame_index: u64,
    observer: Node,
) -> Vec<ImageSource> {
    let mut rng = substream(
        noise.rng_seed,
        Stream::Detections,
        (1 << 40) | (frame_index * 2 + observer as u64),
    );
    sources
        .iter()
        .map(|s| {
            let (du, dv) = gaussian_pair(&mut rng, noise.pixel_noise_sigma);
            ImageSource {
                pixel: PixelPoint::new(s.pixel.u + du, s.pixel.v + dv),
                ..*s
            }
        })
        .collect()
}

/// Jittered sources that stay inside the image, sorted by `(u, v)`.
pub fn noisy_detections(
    sources: &[ImageSource],
    intrinsics: &CameraIntrinsics,
    noise: &NoiseModel,
    frame_index: u64,
    observer: Node,
) -> Vec<LabeledPoint> {
    let mut out: Vec<LabeledPoint> = jittered_sources(sources, noise, frame_index, observer)
        .into_iter()
        .filter(|s| intrinsics.contains(&s.pixel))
        .map(|s| LabeledPoint {
            u: s.pixel.u,
            v: s.pixel.v,
            label: s.label,
        })
        .collect();
    out.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    out
}

pub(crate) fn gaussian_pair(rng: &mut ChaCha8Rng, sigma: f64) -> (f64, f64) {
    if sigma == 0.0 {
        return (0.0, 0.0);
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    (n.sample(rng), n.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use bocl_core::geometry::subtended_angle;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn facing(range: f64) -> (ScenePose, World) {
        let world = World::symmetric(1.0, CameraIntrinsics::default_wide(), 20.0);
        let scene = ScenePose {
            timestamp: 0.0,
            a: NodePose::from_euler(Vector3::new(0.0, 0.0, -5.0), 0.0, 0.0, 0.0),
            b: NodePose::from_euler(Vector3::new(range, 0.0, -5.0), 0.0, 0.0, PI),
        };
        (scene, world)
    }

    #[test]
    fn point_on_axis_projects_to_principal_point() {
        let (scene, world) = facing(3.0);
        let p = project_world(&scene, &world, Node::A, &Vector3::new(7.0, 0.0, -5.0)).unwrap();
        let k = world.intrinsics(Node::A);
        assert_abs_diff_eq!(p.u, k.cx, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v, k.cy, epsilon = 1e-12);
    }

    #[test]
    fn half_meter_unit_baseline_subtends_right_angle() {
        let (scene, world) = facing(0.5);
        let px = render_landmarks(&scene, &world);
        // The lights sit 45° off axis and fall outside this camera's 62° field.
        assert_eq!(px, Err(SimError::NotVisible));
        for observer in [Node::A, Node::B] {
            let target = scene.node(observer.other());
            let g = world.geometry(observer.other());
            let pose = scene.node(observer);
            let rays = [true, false].map(|l| {
                bocl_core::Bearing::from_vector(&pose.to_camera(&target.light(g, l)))
            });
            assert_abs_diff_eq!(subtended_angle(&rays[0], &rays[1]), FRAC_PI_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn left_light_appears_at_smaller_u() {
        let (scene, world) = facing(4.0);
        let px = render_landmarks(&scene, &world).unwrap();
        assert!(px.in_a[0].u < px.in_a[1].u);
        assert!(px.in_b[0].u < px.in_b[1].u);
    }

    #[test]
    fn projection_round_trips_to_bearing() {
        let (scene, world) = facing(4.0);
        let k = world.intrinsics(Node::A);
        let px = render_landmarks(&scene, &world).unwrap();
        let g = world.geometry(Node::B);
        let truth = scene.a.to_camera(&scene.b.light(g, true)).normalize();
        let b = k.unproject(&px.in_a[0]).unwrap();
        assert!((b.to_vector() - truth).norm() < 1e-9);
    }

    #[test]
    fn relative_pose_of_facing_nodes() {
        let (scene, _) = facing(4.0);
        let pose = scene.relative_pose();
        assert!((pose.translation - Vector3::new(0.0, 0.0, 4.0)).norm() < 1e-12);
        let half_turn = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), PI);
        assert!(pose.rotation.angle_to(&half_turn) < 1e-12);
    }

    #[test]
    fn reflections_preserve_floor_distance() {
        let (scene, mut world) = facing(5.0);
        world.floor_depth = 5.6;
        let noise = NoiseModel {
            distractor_rate: 4.0,
            ..NoiseModel::zero(11)
        };
        let mut seen = 0;
        for i in 0..50 {
            for s in image_sources(&scene, &world, Node::A, &noise, i) {
                if s.label == PointLabel::Reflection {
                    let w = s.world.unwrap();
                    let floor = -world.floor_depth;
                    let original = world.mirror(&w);
                    assert_abs_diff_eq!(floor - w.z, original.z - floor, epsilon = 1e-12);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn sources_are_deterministic() {
        let (scene, world) = facing(5.0);
        let noise = NoiseModel {
            distractor_rate: 2.0,
            ..NoiseModel::default()
        };
        let a = image_sources(&scene, &world, Node::B, &noise, 7);
        let b = image_sources(&scene, &world, Node::B, &noise, 7);
        assert_eq!(a, b);
    }
}
