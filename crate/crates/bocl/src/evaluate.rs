//! Error of a reconstructed trajectory against ground truth.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{DatasetError, Truth, TrajectoryRecord};
use crate::svg::{line_plot, Series};

/// Reference error envelope drawn on the error-vs-range plot, meters.
pub const REFERENCE_ENVELOPE: f64 = 0.08;
pub const DEFAULT_BIN_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("{unmatched} trajectory timestamps have no ground-truth frame, first at t = {first}")]
    MismatchedTimestamps { unmatched: usize, first: f64 },
    #[error("bin width must be positive")]
    BadBinWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameError {
    pub timestamp: f64,
    pub valid: bool,
    pub range_true: f64,
    /// NaN for invalid frames, as are the errors below.
    pub range_estimate: f64,
    pub range_error: f64,
    pub position_error: f64,
    pub rotation_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeBin {
    pub center: f64,
    pub count: usize,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub frames: usize,
    pub valid_frames: usize,
    pub max_position_error: f64,
    pub rms_position_error: f64,
    pub max_rotation_error: f64,
    pub mean_abs_range_error: f64,
    #[serde(skip)]
    pub errors: Vec<FrameError>,
    pub bins: Vec<RangeBin>,
}

/// Matches records to truth by exact timestamp; row order is irrelevant.
pub fn evaluate(
    records: &[TrajectoryRecord],
    truth: &Truth,
    bin_width: f64,
) -> Result<EvaluationReport, EvaluateError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(EvaluateError::BadBinWidth);
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let unmatched: Vec<f64> = sorted
        .iter()
        .filter(|r| truth.at(r.timestamp).is_none())
        .map(|r| r.timestamp)
        .collect();
    if let Some(&first) = unmatched.first() {
        return Err(EvaluateError::MismatchedTimestamps {
            unmatched: unmatched.len(),
            first,
        });
    }

    let errors: Vec<FrameError> = sorted
        .iter()
        .map(|r| {
            let t = truth.at(r.timestamp).expect("checked above");
            match &r.pose {
                Some(p) => FrameError {
                    timestamp: r.timestamp,
                    valid: true,
                    range_true: t.pose.range,
                    range_estimate: p.range,
                    range_error: (p.range - t.pose.range).abs(),
                    position_error: p.position_error(&t.pose),
                    rotation_error: p.rotation_error(&t.pose),
                },
                None => FrameError {
                    timestamp: r.timestamp,
                    valid: false,
                    range_true: t.pose.range,
                    range_estimate: f64::NAN,
                    range_error: f64::NAN,
                    position_error: f64::NAN,
                    rotation_error: f64::NAN,
                },
            }
        })
        .collect();

    let valid: Vec<&FrameError> = errors.iter().filter(|e| e.valid).collect();
    let n = valid.len() as f64;
    let (max_pos, rms_pos, max_rot, mae) = if valid.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            valid.iter().map(|e| e.position_error).fold(0.0, f64::max),
            (valid.iter().map(|e| e.position_error.powi(2)).sum::<f64>() / n).sqrt(),
            valid.iter().map(|e| e.rotation_error).fold(0.0, f64::max),
            valid.iter().map(|e| e.range_error).sum::<f64>() / n,
        )
    };

    let mut bins: Vec<(i64, usize, f64)> = Vec::new();
    for e in &valid {
        let key = (e.range_true / bin_width).round() as i64;
        match bins.iter_mut().find(|b| b.0 == key) {
            Some(b) => {
                b.1 += 1;
                b.2 += e.range_error;
            }
            None => bins.push((key, 1, e.range_error)),
        }
    }
    bins.sort_by_key(|b| b.0);
    let bins = bins
        .into_iter()
        .map(|(k, count, sum)| RangeBin {
            center: k as f64 * bin_width,
            count,
            mean_abs_error: sum / count as f64,
        })
        .collect();

    Ok(EvaluationReport {
        frames: errors.len(),
        valid_frames: valid.len(),
        max_position_error: max_pos,
        rms_position_error: rms_pos,
        max_rotation_error: max_rot,
        mean_abs_range_error: mae,
        errors,
        bins,
    })
}

fn write_file(path: &Path, text: String) -> Result<(), DatasetError> {
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `errors.csv`, `range_bins.csv` and `error_vs_range.svg` into `out`.
pub fn write_report(report: &EvaluationReport, out: &Path) -> Result<(), DatasetError> {
    let mut errors = String::from("t,valid,range_true,range_estimate,range_error,position_error,rotation_error\n");
    for e in &report.errors {
        let _ = writeln!(
            errors,
            "{},{},{},{},{},{},{}",
            e.timestamp,
            e.valid as u8,
            e.range_true,
            e.range_estimate,
            e.range_error,
            e.position_error,
            e.rotation_error
        );
    }
    write_file(&out.join("errors.csv"), errors)?;
    let mut bins = String::from("range_center,count,mean_abs_error\n");
    for b in &report.bins {
        let _ = writeln!(bins, "{},{},{}", b.center, b.count, b.mean_abs_error);
    }
    write_file(&out.join("range_bins.csv"), bins)?;
    let series = Series {
        name: "mean absolute range error".into(),
        points: report.bins.iter().map(|b| (b.center, b.mean_abs_error)).collect(),
    };
    let svg = line_plot(
        "Range error against true range",
        "true range (m)",
        "mean absolute error (m)",
        &[series],
        Some(("0.08 m envelope", REFERENCE_ENVELOPE)),
    );
    write_file(&out.join("error_vs_range.svg"), svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TruthFrame;
    use bocl_core::camera::PixelPoint;
    use bocl_core::geometry::RelativePose;
    use nalgebra::{UnitQuaternion, Vector3};

    fn truth(ranges: &[f64]) -> Truth {
        let nan = PixelPoint::new(f64::NAN, f64::NAN);
        Truth {
            frames: ranges
                .iter()
                .enumerate()
                .map(|(i, &r)| TruthFrame {
                    timestamp: 1.0 + i as f64 * 0.1,
                    pose: RelativePose::new(UnitQuaternion::identity(), Vector3::new(0.0, 0.0, r)).unwrap(),
                    visible: true,
                    in_a: [nan; 2],
                    in_b: [nan; 2],
                })
                .collect(),
        }
    }

    fn as_records(t: &Truth) -> Vec<TrajectoryRecord> {
        t.frames
            .iter()
            .map(|f| TrajectoryRecord {
                timestamp: f.timestamp,
                pose: Some(f.pose),
                selection_score: 0.0,
            })
            .collect()
    }

    #[test]
    fn truth_against_itself_has_zero_error() {
        let t = truth(&[1.5, 2.0, 2.6, 3.9]);
        let r = evaluate(&as_records(&t), &t, 0.5).unwrap();
        assert_eq!(r.valid_frames, 4);
        assert_eq!(r.max_position_error, 0.0);
        assert_eq!(r.max_rotation_error, 0.0);
        let centers: Vec<f64> = r.bins.iter().map(|b| b.center).collect();
        assert_eq!(centers, vec![1.5, 2.0, 2.5, 4.0]);
    }

    #[test]
    fn row_order_does_not_matter() {
        let t = truth(&[1.5, 2.0, 2.5, 3.0]);
        let mut recs = as_records(&t);
        for r in &mut recs {
            let p = r.pose.as_mut().unwrap();
            *p = RelativePose::new(p.rotation, p.translation * 1.01).unwrap();
        }
        let a = evaluate(&recs, &t, 0.5).unwrap();
        recs.reverse();
        recs.swap(0, 2);
        let b = evaluate(&recs, &t, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_timestamp_is_reported() {
        let t = truth(&[1.5, 2.0]);
        let mut recs = as_records(&t);
        recs[1].timestamp += 1e-3;
        assert!(matches!(
            evaluate(&recs, &t, 0.5),
            Err(EvaluateError::MismatchedTimestamps { unmatched: 1, .. })
        ));
    }
}
