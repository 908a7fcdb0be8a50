//! Analytic trajectories and complete on-disk synthetic datasets.
//!
//! A stays put at the origin looking north (+x). B follows the configured
//! path in front of A, always turned to face A, with a slow attitude wobble
//! and a slow depth oscillation.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use bocl_core::camera::{CameraIntrinsics, PixelPoint};
use bocl_core::imaging::EnvironmentPreset;
use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::synth::sensor_logs;
use super::{
    image_sources, jittered_sources, noisy_detections, render_beam_image, substream, Node, NodePose,
    NoiseModel, ScenePose, Stream, World,
};
use crate::dataset::manifest::{write_manifest, DEFAULT_SYNC_TOLERANCE};
use crate::dataset::truth::write_truth;
use crate::dataset::{
    frame_file_name, frames_dir, logs, logs_dir, ns_to_timestamp, write_detection_record, write_png,
    DatasetError, DetectionRecord, Fidelity, Manifest, StoredPoint, SyntheticMetadata, Truth,
    TruthFrame, SCHEMA_VERSION,
};

/// Capture time of the first frame; sensor logs start at zero.
pub const FIRST_FRAME_TIME: f64 = 1.0;
/// Sensor logs extend this far past the last frame, seconds.
const LOG_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Stationary,
    Line,
    Circle,
    Lawnmower,
    /// B dwells at each of `ranges` for `frames_per_station` frames.
    Stations,
}

impl std::str::FromStr for PathKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stationary" => Ok(Self::Stationary),
            "line" => Ok(Self::Line),
            "circle" => Ok(Self::Circle),
            "lawnmower" => Ok(Self::Lawnmower),
            "stations" => Ok(Self::Stations),
            _ => Err(format!("unknown path {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub path: PathKind,
    pub frames: usize,
    pub frame_rate: f64,
    /// Stationary range, m.
    pub range: f64,
    /// Line and lawnmower extent along A's optical axis, m.
    pub start_range: f64,
    pub end_range: f64,
    pub lateral_offset: f64,
    pub center_range: f64,
    pub radius: f64,
    pub turns: f64,
    pub rows: usize,
    /// Lawnmower sweep width, m.
    pub width: f64,
    pub ranges: Vec<f64>,
    pub frames_per_station: usize,
    pub a_depth: f64,
    pub b_depth: f64,
    pub depth_amplitude: f64,
    pub floor_depth: f64,
    /// Amplitude of B's attitude wobble, degrees.
    pub wobble_deg: f64,
    /// A's fixed roll and pitch, degrees.
    pub a_tilt_deg: [f64; 2],
    /// Light spacing on both nodes, m.
    pub baseline: f64,
    pub intrinsics: CameraIntrinsics,
    pub fidelity: Fidelity,
    pub environment: String,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            path: PathKind::Circle,
            frames: 100,
            frame_rate: 10.0,
            range: 4.0,
            start_range: 1.5,
            end_range: 10.0,
            lateral_offset: 0.0,
            center_range: 5.0,
            radius: 2.0,
            turns: 1.0,
            rows: 4,
            width: 3.0,
            ranges: vec![1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            frames_per_station: 50,
            a_depth: 2.0,
            b_depth: 2.0,
            depth_amplitude: 0.2,
            floor_depth: 2.6,
            wobble_deg: 3.0,
            a_tilt_deg: [1.5, -1.0],
            baseline: 0.88,
            intrinsics: CameraIntrinsics::default_wide(),
            fidelity: Fidelity::Detections,
            environment: EnvironmentPreset::ClearNight.name().to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl TrajectorySpec {
    pub fn frame_count(&self) -> usize {
        match self.path {
            PathKind::Stations => self.ranges.len() * self.frames_per_station,
            _ => self.frames,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("frame_rate", self.frame_rate),
            ("baseline", self.baseline),
            ("floor_depth", self.floor_depth),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.frame_count() == 0 {
            return Err("trajectory has no frames".into());
        }
        if self.path == PathKind::Lawnmower && self.rows == 0 {
            return Err("lawnmower needs at least one row".into());
        }
        let min_range = match self.path {
            PathKind::Stationary => self.range,
            PathKind::Line | PathKind::Lawnmower => self.start_range.min(self.end_range),
            PathKind::Circle => self.center_range - self.radius,
            PathKind::Stations => self.ranges.iter().copied().fold(f64::INFINITY, f64::min),
        };
        if !(min_range > 0.0) {
            return Err("B must stay in front of A".into());
        }
        if self.a_depth >= self.floor_depth || self.b_depth + self.depth_amplitude >= self.floor_depth {
            return Err("nodes must be above the floor".into());
        }
        if EnvironmentPreset::from_name(&self.environment).is_none() {
            return Err(format!("unknown environment preset {:?}", self.environment));
        }
        self.intrinsics.validated().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn world(&self) -> World {
        World::symmetric(self.baseline, self.intrinsics, self.floor_depth)
    }

    /// Capture time of frame `k` on the shared clock, in integer nanoseconds.
    pub fn frame_ns(&self, k: usize) -> u64 {
        (FIRST_FRAME_TIME * 1e9).round() as u64 + (k as f64 * 1e9 / self.frame_rate).round() as u64
    }

    /// Horizontal position of B at fractional frame index `u`.
    fn b_plan(&self, u: f64) -> (f64, f64) {
        let n = self.frame_count();
        let s = if n > 1 { (u / (n - 1) as f64).clamp(0.0, 1.0) } else { 0.0 };
        match self.path {
            PathKind::Stationary => (self.range, self.lateral_offset),
            PathKind::Line => (
                self.start_range + s * (self.end_range - self.start_range),
                self.lateral_offset,
            ),
            PathKind::Circle => {
                let th = TAU * self.turns * s;
                (self.center_range + self.radius * th.cos(), self.radius * th.sin())
            }
            PathKind::Lawnmower => {
                let rows = self.rows as f64;
                let row = (s * rows).floor().min(rows - 1.0);
                let f = s * rows - row;
                let step = if self.rows > 1 {
                    (self.end_range - self.start_range) / (rows - 1.0)
                } else {
                    0.0
                };
                let dir = if (row as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
                (
                    self.start_range + row * step,
                    self.lateral_offset + dir * (f - 0.5) * self.width,
                )
            }
            PathKind::Stations => {
                let slot = ((u + 0.5) / self.frames_per_station as f64).floor().max(0.0) as usize;
                (self.ranges[slot.min(self.ranges.len() - 1)], self.lateral_offset)
            }
        }
    }

    pub fn a_pose(&self) -> NodePose {
        let [roll, pitch] = self.a_tilt_deg.map(f64::to_radians);
        NodePose::from_euler(Vector3::new(0.0, 0.0, -self.a_depth), roll, pitch, 0.0)
    }

    pub fn b_pose(&self, t: f64) -> NodePose {
        let u = (t - FIRST_FRAME_TIME) * self.frame_rate;
        let (x, y) = self.b_plan(u);
        let z = -(self.b_depth + self.depth_amplitude * (0.4 * t).sin());
        let a = self.a_pose().position;
        let to_a = a - Vector3::new(x, y, z);
        let w = self.wobble_deg.to_radians();
        let yaw = to_a.y.atan2(to_a.x) + 1.3 * w * (0.7 * t).sin();
        let pitch = -to_a.z.atan2(to_a.xy().norm()) + w * (0.5 * t + 1.0).sin();
        let roll = w * (0.9 * t + 2.0).sin();
        NodePose::from_euler(Vector3::new(x, y, z), roll, pitch, yaw)
    }

    pub fn scene_at(&self, t: f64) -> ScenePose {
        ScenePose {
            timestamp: t,
            a: self.a_pose(),
            b: self.b_pose(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub frames: usize,
    /// Frames with all four lights inside both images.
    pub visible_frames: usize,
}

fn landmark_truth(scene: &ScenePose, world: &World, observer: Node) -> [PixelPoint; 2] {
    let target = observer.other();
    let pose = scene.node(target);
    let g = world.geometry(target);
    let nan = PixelPoint::new(f64::NAN, f64::NAN);
    [true, false].map(|left| super::project_world(scene, world, observer, &pose.light(g, left)).unwrap_or(nan))
}

/// Writes a complete dataset for `spec` under `out`, which must not already
/// hold one.
pub fn generate_trajectory(
    spec: &TrajectorySpec,
    noise: &NoiseModel,
    out: &Path,
) -> Result<GenerationReport, GenerateError> {
    spec.validate().map_err(GenerateError::Config)?;
    noise.validate().map_err(GenerateError::Config)?;
    if noise.timestamp_jitter >= 0.5 / spec.frame_rate {
        return Err(GenerateError::Config(
            "timestamp_jitter must be below half the frame interval".into(),
        ));
    }
    if out.join("manifest.json").exists() {
        return Err(GenerateError::Config(format!(
            "{} already contains a dataset",
            out.display()
        )));
    }
    let world = spec.world();
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| DatasetError::Io { path: p, source }
    };
    for node in [Node::A, Node::B] {
        for dir in [frames_dir(out, node), logs_dir(out, node)] {
            fs::create_dir_all(&dir).map_err(io(&dir))?;
        }
    }

    let n = spec.frame_count();
    let mut truth = Truth::default();
    let mut visible_frames = 0;
    for k in 0..n {
        let ns_a = spec.frame_ns(k);
        let t = ns_to_timestamp(ns_a);
        let scene = spec.scene_at(t);
        let in_a = landmark_truth(&scene, &world, Node::A);
        let in_b = landmark_truth(&scene, &world, Node::B);
        let visible = in_a.iter().chain(&in_b).all(|p| p.is_finite());
        visible_frames += visible as usize;
        truth.frames.push(TruthFrame {
            timestamp: t,
            pose: scene.relative_pose(),
            visible,
            in_a,
            in_b,
        });

        let mut clock = substream(noise.rng_seed, Stream::Timestamps, k as u64);
        let jitter = if noise.timestamp_jitter > 0.0 {
            clock.gen_range(-noise.timestamp_jitter..=noise.timestamp_jitter)
        } else {
            0.0
        };
        let ns_b = (ns_a as i64 + (jitter * 1e9).round() as i64) as u64;
        for (node, ns) in [(Node::A, ns_a), (Node::B, ns_b)] {
            let sources = image_sources(&scene, &world, node, noise, k as u64);
            let k_int = world.intrinsics(node);
            match spec.fidelity {
                Fidelity::Detections => {
                    let candidates = noisy_detections(&sources, k_int, noise, k as u64, node)
                        .into_iter()
                        .map(|p| StoredPoint {
                            u: p.u,
                            v: p.v,
                            label: Some(p.label),
                        })
                        .collect();
                    let record = DetectionRecord {
                        timestamp: ns_to_timestamp(ns),
                        candidates,
                    };
                    let path = frames_dir(out, node).join(frame_file_name(ns, "json"));
                    write_detection_record(&path, &record)?;
                }
                Fidelity::Rendered => {
                    let sources = jittered_sources(&sources, noise, k as u64, node);
                    let img = render_beam_image(&sources, k_int, noise, k as u64, node);
                    let path = frames_dir(out, node).join(frame_file_name(ns, "png"));
                    write_png(&path, &img)?;
                }
            }
        }
    }

    let t_end = ns_to_timestamp(spec.frame_ns(n - 1)) + LOG_MARGIN;
    for node in [Node::A, Node::B] {
        let node_logs = match node {
            Node::A => {
                let a = spec.a_pose();
                sensor_logs(|_| a, &world, noise, node, 0.0, t_end)
            }
            Node::B => sensor_logs(|t| spec.b_pose(t), &world, noise, node, 0.0, t_end),
        };
        let dir = logs_dir(out, node);
        logs::write_imu(&dir.join("imu.csv"), &node_logs.imu)?;
        logs::write_mag(&dir.join("mag.csv"), &node_logs.mag)?;
        logs::write_depth(&dir.join("depth.csv"), &node_logs.depth)?;
    }
    write_truth(out, &truth)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        frame_rate: spec.frame_rate,
        frame_count: n,
        fidelity: spec.fidelity,
        environment: spec.environment.clone(),
        sync_tolerance: DEFAULT_SYNC_TOLERANCE,
        declination: 0.0,
        nodes: world.nodes,
        synthetic: Some(SyntheticMetadata {
            noise: *noise,
            trajectory: spec.clone(),
            floor_depth: world.floor_depth,
            magnetic_field: world.magnetic_field,
        }),
    };
    write_manifest(out, &manifest)?;
    Ok(GenerationReport {
        frames: n,
        visible_frames,
    })
}
