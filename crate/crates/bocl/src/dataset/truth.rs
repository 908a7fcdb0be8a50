//! Ground-truth files written by the simulator.

use std::fs;
use std::path::Path;

use bocl_core::camera::PixelPoint;
use bocl_core::geometry::RelativePose;
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{io_err, DatasetError};

pub const POSES_HEADER: &str = "t,x,y,z,qw,qx,qy,qz,range,visible";
pub const PIXELS_HEADER: &str =
    "t,a_left_u,a_left_v,a_right_u,a_right_v,b_left_u,b_left_v,b_right_u,b_right_v";

/// Ground truth for one capture instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthFrame {
    /// Capture time on A's clock, seconds.
    pub timestamp: f64,
    /// B's camera in A's camera frame.
    pub pose: RelativePose,
    /// Whether all four lights are inside both images.
    pub visible: bool,
    /// True light pixels `[left, right]` in A's image and in B's image;
    /// NaN where a light is not in the image.
    pub in_a: [PixelPoint; 2],
    pub in_b: [PixelPoint; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Truth {
    pub frames: Vec<TruthFrame>,
}

impl Truth {
    /// The frame recorded at exactly this timestamp.
    pub fn at(&self, timestamp: f64) -> Option<&TruthFrame> {
        self.frames
            .binary_search_by(|f| f.timestamp.total_cmp(&timestamp))
            .ok()
            .map(|i| &self.frames[i])
    }
}

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_truth(root: &Path, truth: &Truth) -> Result<(), DatasetError> {
    let dir = root.join("truth");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut poses = String::from(POSES_HEADER);
    poses.push('\n');
    let mut pixels = String::from(PIXELS_HEADER);
    pixels.push('\n');
    for f in &truth.frames {
        let q = f.pose.rotation.quaternion();
        let t = &f.pose.translation;
        let row = [f.timestamp, t.x, t.y, t.z, q.w, q.i, q.j, q.k, f.pose.range];
        let fields: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        poses.push_str(&fields.join(","));
        poses.push_str(if f.visible { ",1\n" } else { ",0\n" });
        let px = [
            f.timestamp,
            f.in_a[0].u,
            f.in_a[0].v,
            f.in_a[1].u,
            f.in_a[1].v,
            f.in_b[0].u,
            f.in_b[0].v,
            f.in_b[1].u,
            f.in_b[1].v,
        ];
        let fields: Vec<String> = px.iter().map(|v| fmt17(*v)).collect();
        pixels.push_str(&fields.join(","));
        pixels.push('\n');
    }
    let p = dir.join("poses.csv");
    fs::write(&p, poses).map_err(io_err(&p))?;
    let p = dir.join("pixels.csv");
    fs::write(&p, pixels).map_err(io_err(&p))
}

fn parse_table(path: &Path, header: &str, width: usize) -> Result<Vec<Vec<f64>>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let corrupt = |line: usize, message: String| DatasetError::CorruptLog {
        path: path.to_path_buf(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(corrupt(1, format!("expected header {header}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| corrupt(n, e.to_string()))?;
        if row.len() != width {
            return Err(corrupt(n, format!("expected {width} fields, found {}", row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads `truth/poses.csv` rows as `(t, pose, visible)`.
pub fn read_poses(path: &Path) -> Result<Vec<(f64, RelativePose, bool)>, DatasetError> {
    let rows = parse_table(path, POSES_HEADER, 10)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let rotation = UnitQuaternion::new_unchecked(Quaternion::new(r[4], r[5], r[6], r[7]));
            let pose = RelativePose {
                rotation,
                translation: Vector3::new(r[1], r[2], r[3]),
                range: r[8],
            };
            (r[0], pose, r[9] != 0.0)
        })
        .collect())
}

pub fn read_truth(root: &Path) -> Result<Option<Truth>, DatasetError> {
    let dir = root.join("truth");
    let poses_path = dir.join("poses.csv");
    let pixels_path = dir.join("pixels.csv");
    if !poses_path.is_file() {
        return Ok(None);
    }
    let poses = read_poses(&poses_path)?;
    let pixels = if pixels_path.is_file() {
        parse_table(&pixels_path, PIXELS_HEADER, 9)?
    } else {
        Vec::new()
    };
    let nan = PixelPoint::new(f64::NAN, f64::NAN);
    let mut frames = Vec::with_capacity(poses.len());
    for (i, (t, pose, visible)) in poses.into_iter().enumerate() {
        let (in_a, in_b) = match pixels.get(i) {
            Some(p) if p[0] == t => (
                [PixelPoint::new(p[1], p[2]), PixelPoint::new(p[3], p[4])],
                [PixelPoint::new(p[5], p[6]), PixelPoint::new(p[7], p[8])],
            ),
            _ => ([nan; 2], [nan; 2]),
        };
        frames.push(TruthFrame {
            timestamp: t,
            pose,
            visible,
            in_a,
            in_b,
        });
    }
    frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(Some(Truth { frames }))
}
