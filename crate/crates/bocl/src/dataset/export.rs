//! Reconstructed-trajectory CSV.

use std::fs;
use std::path::Path;

use bocl_core::geometry::RelativePose;
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::truth::fmt17;
use super::{io_err, DatasetError};

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,range,valid,selection_score";

/// One solved (or skipped) frame pair. Row order in the audit log matches
/// row order here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    /// A's frame timestamp, seconds.
    pub timestamp: f64,
    /// Present exactly when the frame was solved.
    pub pose: Option<RelativePose>,
    /// Score of the selected combination; NaN when skipped.
    pub selection_score: f64,
}

impl TrajectoryRecord {
    pub fn valid(&self) -> bool {
        self.pose.is_some()
    }
}

/// Writes 17 significant digits per value, which round-trips every finite f64.
pub fn export_trajectory(records: &[TrajectoryRecord], path: &Path) -> Result<(), DatasetError> {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        let values = match &r.pose {
            Some(p) => {
                let q = p.rotation.quaternion();
                let t = &p.translation;
                [t.x, t.y, t.z, q.w, q.i, q.j, q.k, p.range]
            }
            None => [f64::NAN; 8],
        };
        out.push_str(&fmt17(r.timestamp));
        for v in values {
            out.push(',');
            out.push_str(&fmt17(v));
        }
        out.push_str(if r.valid() { ",1," } else { ",0," });
        out.push_str(&fmt17(r.selection_score));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let corrupt = |line: usize, message: String| DatasetError::CorruptLog {
        path: path.to_path_buf(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRAJECTORY_HEADER) {
        return Err(corrupt(1, format!("expected header {TRAJECTORY_HEADER}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| corrupt(n, e.to_string()))?;
        if f.len() != 11 {
            return Err(corrupt(n, format!("expected 11 fields, found {}", f.len())));
        }
        let pose = match f[9] {
            1.0 => Some(RelativePose {
                rotation: UnitQuaternion::new_unchecked(Quaternion::new(f[4], f[5], f[6], f[7])),
                translation: Vector3::new(f[1], f[2], f[3]),
                range: f[8],
            }),
            0.0 => None,
            _ => return Err(corrupt(n, "valid must be 0 or 1".into())),
        };
        out.push(TrajectoryRecord {
            timestamp: f[0],
            pose,
            selection_score: f[10],
        });
    }
    Ok(out)
}
