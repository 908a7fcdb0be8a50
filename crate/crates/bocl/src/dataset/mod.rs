//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.json
//! <root>/frames/{A,B}/<ns>.json        detections-only fidelity
//! <root>/frames/{A,B}/<ns>.png|jpg     rendered fidelity
//! <root>/logs/{A,B}/imu.csv            t,ax,ay,az,gx,gy,gz
//! <root>/logs/{A,B}/mag.csv            t,mx,my,mz
//! <root>/logs/{A,B}/depth.csv          t,depth_m
//! <root>/truth/poses.csv               synthetic datasets only
//! <root>/truth/pixels.csv              synthetic datasets only
//! ```
//!
//! `<ns>` is the capture time in integer nanoseconds, zero-padded to 19
//! digits so that lexical and numeric order agree.

pub mod align;
pub mod export;
pub mod logs;
pub mod manifest;
pub mod truth;

use std::fs;
use std::path::{Path, PathBuf};

use bocl_core::imaging::RasterImage;
use bocl_core::sensors::{SensorError, SensorLogs, SnapshotConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::synth::NodeLogs;
use crate::simulator::{Node, PointLabel};

pub use align::{time_align, AlignResult, PairedSample};
pub use export::{export_trajectory, read_trajectory, TrajectoryRecord};
pub use manifest::{Fidelity, Manifest, SyntheticMetadata, SCHEMA_VERSION};
pub use truth::{Truth, TruthFrame};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest not found at {0}")]
    ManifestMissing(PathBuf),
    #[error("unsupported schema version {0} (this build reads version {SCHEMA_VERSION})")]
    SchemaVersionUnsupported(u64),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("{path}:{line}: {message}")]
    CorruptLog {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("unrecognized frame file name {0}")]
    BadFrameName(PathBuf),
    #[error("node {node} has {found} frames, manifest declares {expected}")]
    FrameCountMismatch {
        node: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("node {0} has two frames with the same timestamp")]
    DuplicateFrame(&'static str),
    #[error("cannot decode image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn timestamp_to_ns(t: f64) -> u64 {
    (t * 1e9).round() as u64
}

pub fn ns_to_timestamp(ns: u64) -> f64 {
    ns as f64 / 1e9
}

pub fn frame_file_name(ns: u64, extension: &str) -> String {
    format!("{ns:019}.{extension}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Image,
    Detections,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub node: Node,
    pub timestamp_ns: u64,
    /// Seconds since the shared epoch.
    pub timestamp: f64,
    pub path: PathBuf,
    pub kind: FrameKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredPoint {
    pub u: f64,
    pub v: f64,
    /// Simulator annotation; never read by the pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PointLabel>,
}

/// Candidate light positions for one image of a detections-only dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub timestamp: f64,
    pub candidates: Vec<StoredPoint>,
}

/// A loaded dataset. Frame payloads are read on demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub frames_a: Vec<FrameRecord>,
    pub frames_b: Vec<FrameRecord>,
    /// `None` when the node has no sensor logs.
    pub logs_a: Option<NodeLogs>,
    pub logs_b: Option<NodeLogs>,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn frames(&self, node: Node) -> &[FrameRecord] {
        match node {
            Node::A => &self.frames_a,
            Node::B => &self.frames_b,
        }
    }

    pub fn logs(&self, node: Node) -> Option<&NodeLogs> {
        match node {
            Node::A => self.logs_a.as_ref(),
            Node::B => self.logs_b.as_ref(),
        }
    }

    /// Interpolating view of a node's logs.
    pub fn sensor_logs(&self, node: Node) -> Option<Result<SensorLogs, SensorError>> {
        self.logs(node).map(|l| {
            let cfg = SnapshotConfig {
                declination: self.manifest.declination,
                ..SnapshotConfig::default()
            };
            SensorLogs::new(l.imu.clone(), l.mag.clone(), l.depth.clone(), cfg)
        })
    }

    pub fn read_detections(&self, frame: &FrameRecord) -> Result<DetectionRecord, DatasetError> {
        read_detection_record(&frame.path)
    }

    pub fn read_image(&self, frame: &FrameRecord) -> Result<RasterImage, DatasetError> {
        read_image(&frame.path)
    }
}

pub fn read_detection_record(path: &Path) -> Result<DetectionRecord, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::CorruptLog {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn write_detection_record(path: &Path, record: &DetectionRecord) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(record).expect("records serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_image(path: &Path) -> Result<RasterImage, DatasetError> {
    let img = image::open(path).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage::new(w, h, rgb.into_raw()).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_png(path: &Path, img: &RasterImage) -> Result<(), DatasetError> {
    image::save_buffer(
        path,
        img.as_bytes(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn frames_dir(root: &Path, node: Node) -> PathBuf {
    root.join("frames").join(node.name())
}

pub fn logs_dir(root: &Path, node: Node) -> PathBuf {
    root.join("logs").join(node.name())
}

fn index_frames(root: &Path, node: Node, fidelity: Fidelity) -> Result<Vec<FrameRecord>, DatasetError> {
    let dir = frames_dir(root, node);
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
        let path = entry.map_err(io_err(&dir))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        let kind = match (fidelity, ext.as_str()) {
            (Fidelity::Detections, "json") => FrameKind::Detections,
            (Fidelity::Rendered, "png" | "jpg" | "jpeg") => FrameKind::Image,
            _ => continue,
        };
        let ns = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| DatasetError::BadFrameName(path.clone()))?;
        out.push(FrameRecord {
            node,
            timestamp_ns: ns,
            timestamp: ns_to_timestamp(ns),
            path,
            kind,
        });
    }
    out.sort_by_key(|f| f.timestamp_ns);
    if out.windows(2).any(|w| w[0].timestamp_ns == w[1].timestamp_ns) {
        return Err(DatasetError::DuplicateFrame(node.name()));
    }
    Ok(out)
}

fn load_logs(root: &Path, node: Node) -> Result<Option<NodeLogs>, DatasetError> {
    let dir = logs_dir(root, node);
    let (imu, mag, depth) = (dir.join("imu.csv"), dir.join("mag.csv"), dir.join("depth.csv"));
    if !(imu.exists() && mag.exists() && depth.exists()) {
        return Ok(None);
    }
    Ok(Some(NodeLogs {
        imu: logs::read_imu(&imu)?,
        mag: logs::read_mag(&mag)?,
        depth: logs::read_depth(&depth)?,
    }))
}

/// Validates the manifest and indexes frames, logs and ground truth.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let root = root.as_ref();
    let manifest = manifest::read_manifest(root)?;
    let frames_a = index_frames(root, Node::A, manifest.fidelity)?;
    let frames_b = index_frames(root, Node::B, manifest.fidelity)?;
    for (node, frames) in [(Node::A, &frames_a), (Node::B, &frames_b)] {
        if frames.len() != manifest.frame_count {
            return Err(DatasetError::FrameCountMismatch {
                node: node.name(),
                found: frames.len(),
                expected: manifest.frame_count,
            });
        }
    }
    let truth = truth::read_truth(root)?;
    Ok(Dataset {
        root: root.to_path_buf(),
        logs_a: load_logs(root, Node::A)?,
        logs_b: load_logs(root, Node::B)?,
        manifest,
        frames_a,
        frames_b,
        truth,
    })
}
