use std::fs;
use std::path::Path;

use bocl_core::geometry::{NodeGeometry, NodePair};
use bocl_core::imaging::EnvironmentPreset;
use serde::{Deserialize, Serialize};

use super::{io_err, DatasetError};
use crate::simulator::{NoiseModel, TrajectorySpec};

pub const SCHEMA_VERSION: u64 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_SYNC_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// Frames are stored candidate pixel positions.
    Detections,
    /// Frames are images; detection runs in the pipeline.
    Rendered,
}

/// Provenance of a simulator-generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMetadata {
    pub noise: NoiseModel,
    pub trajectory: TrajectorySpec,
    pub floor_depth: f64,
    pub magnetic_field: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u64,
    /// Nominal frames per second.
    pub frame_rate: f64,
    /// Frames per node.
    pub frame_count: usize,
    pub fidelity: Fidelity,
    /// Detection preset name.
    pub environment: String,
    /// Largest accepted |t_A − t_B| when pairing frames, seconds.
    #[serde(default = "default_sync_tolerance")]
    pub sync_tolerance: f64,
    /// Magnetic declination added to headings, radians.
    #[serde(default)]
    pub declination: f64,
    pub nodes: NodePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticMetadata>,
}

fn default_sync_tolerance() -> f64 {
    DEFAULT_SYNC_TOLERANCE
}

impl Manifest {
    pub fn preset(&self) -> EnvironmentPreset {
        EnvironmentPreset::from_name(&self.environment).expect("validated on load")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version {}", self.schema_version));
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err("frame_rate must be positive".into());
        }
        if !(self.sync_tolerance > 0.0 && self.sync_tolerance.is_finite()) {
            return Err("sync_tolerance must be positive".into());
        }
        if EnvironmentPreset::from_name(&self.environment).is_none() {
            return Err(format!("unknown environment preset {:?}", self.environment));
        }
        let n = &self.nodes;
        for k in [&n.intrinsics_a, &n.intrinsics_b] {
            k.validated().map_err(|e| e.to_string())?;
        }
        for g in [&n.geometry_a, &n.geometry_b] {
            NodeGeometry::new(g.left(), g.right()).map_err(|e| e.to_string())?;
        }
        if let Some(s) = &self.synthetic {
            s.noise.validate()?;
        }
        Ok(())
    }
}

pub fn read_manifest(root: &Path) -> Result<Manifest, DatasetError> {
    let path = root.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(DatasetError::ManifestMissing(path));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DatasetError::InvalidManifest(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DatasetError::InvalidManifest("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersionUnsupported(version));
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| DatasetError::InvalidManifest(e.to_string()))?;
    manifest.validate().map_err(DatasetError::InvalidManifest)?;
    Ok(manifest)
}

pub fn write_manifest(root: &Path, manifest: &Manifest) -> Result<(), DatasetError> {
    let path = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}
