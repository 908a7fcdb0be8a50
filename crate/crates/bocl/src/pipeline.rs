//! Batch solve of a dataset: detection, pairing, rejection and pose.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bocl_core::camera::PixelPoint;
use bocl_core::imaging::{detect_markers, enumerate_pairs_from_points, DetectorConfig};
use bocl_core::rejection::{
    evaluate_combinations, select_best_pair, CandidateSet, GateConfig, GateMode, GateResult, Selection, SnapshotPair,
};
use bocl_core::sensors::SensorLogs;
use bocl_core::geometry::RelativePose;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    export_trajectory, time_align, Dataset, DatasetError, FrameKind, FrameRecord, TrajectoryRecord, TruthFrame,
};
use crate::simulator::{Node, PointLabel};

/// Slack added to five pixel-noise sigmas when deciding whether a selected
/// point is the true light.
pub const CORRECT_TOLERANCE_PX: f64 = 5.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub gates: GateConfig,
    /// Ignore sensor logs and select by the consistency check alone.
    pub camera_only: bool,
    /// Overrides the manifest's environment preset for image datasets.
    pub detector: Option<DetectorConfig>,
    /// Overrides the manifest's pairing tolerance, seconds.
    pub sync_tolerance: Option<f64>,
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum FrameStatus {
    Solved,
    /// Fewer than two candidates in at least one image.
    NotVisible,
    NoValidPair,
}

/// Points chosen by one selection, `[left, right]` per image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChosenPoints {
    pub in_a: [PixelPoint; 2],
    pub in_b: [PixelPoint; 2],
}

/// Per-frame record written to the audit log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameAudit {
    pub index: usize,
    pub t_a: f64,
    pub t_b: f64,
    pub status: FrameStatus,
    pub mode: GateMode,
    pub candidates_a: usize,
    pub candidates_b: usize,
    pub selected: Option<GateResult>,
    pub points: Option<ChosenPoints>,
    /// Labels of the chosen points, when the dataset stores them.
    pub labels: Option<[Option<PointLabel>; 4]>,
    /// Against ground truth: whether each mode picked the true lights.
    pub correct_full: Option<bool>,
    pub correct_camera_only: Option<bool>,
    pub combinations: Vec<GateResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub frames_a: usize,
    pub frames_b: usize,
    pub paired: usize,
    pub unpaired_a: usize,
    pub unpaired_b: usize,
    pub solved: usize,
    pub skipped: BTreeMap<String, usize>,
    /// Frames that fell back to consistency-only because sensor data was
    /// missing.
    pub sensor_fallbacks: usize,
    /// Paired frames whose truth has all lights visible.
    pub evaluated_frames: usize,
    pub selection_rate_full: Option<f64>,
    pub selection_rate_camera_only: Option<f64>,
    pub config: SolveConfig,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub records: Vec<TrajectoryRecord>,
    pub audits: Vec<FrameAudit>,
    pub summary: SolveSummary,
}

struct FramePoints {
    points: Vec<PixelPoint>,
    labels: Option<Vec<Option<PointLabel>>>,
}

fn frame_points(ds: &Dataset, frame: &FrameRecord, detector: &DetectorConfig) -> Result<FramePoints, DatasetError> {
    match frame.kind {
        FrameKind::Detections => {
            let rec = ds.read_detections(frame)?;
            Ok(FramePoints {
                points: rec.candidates.iter().map(|c| PixelPoint::new(c.u, c.v)).collect(),
                labels: Some(rec.candidates.iter().map(|c| c.label).collect()),
            })
        }
        FrameKind::Image => {
            let img = ds.read_image(frame)?;
            let det = detect_markers(&img, detector);
            Ok(FramePoints {
                points: det.candidates.iter().map(|c| c.position).collect(),
                labels: None,
            })
        }
    }
}

fn open_logs(ds: &Dataset, node: Node) -> Option<SensorLogs> {
    match ds.sensor_logs(node)? {
        Ok(l) => Some(l),
        Err(e) => {
            log::warn!("ignoring sensor logs of node {}: {e}", node.name());
            None
        }
    }
}

fn chosen(sel: &Selection, a: &FramePoints, pa: &[bocl_core::imaging::CandidatePair], b: &FramePoints, pb: &[bocl_core::imaging::CandidatePair]) -> ([usize; 4], ChosenPoints) {
    let ca = pa[sel.best.pair_a];
    let cb = pb[sel.best.pair_b];
    let idx = [ca.left, ca.right, cb.left, cb.right];
    let pts = ChosenPoints {
        in_a: [a.points[ca.left], a.points[ca.right]],
        in_b: [b.points[cb.left], b.points[cb.right]],
    };
    (idx, pts)
}

fn matches_truth(p: &ChosenPoints, truth: &TruthFrame, tol: f64) -> bool {
    p.in_a
        .iter()
        .zip(&truth.in_a)
        .chain(p.in_b.iter().zip(&truth.in_b))
        .all(|(got, want)| got.distance(want) <= tol)
}

fn rate(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

/// Solves every paired frame. Per-frame failures are recorded, never fatal.
pub fn solve_dataset(ds: &Dataset, cfg: &SolveConfig) -> Result<SolveOutput, DatasetError> {
    let m = &ds.manifest;
    let detector = cfg
        .detector
        .unwrap_or_else(|| DetectorConfig::for_environment(m.preset()));
    let tol = cfg.sync_tolerance.unwrap_or(m.sync_tolerance);
    let times = |n: Node| ds.frames(n).iter().map(|f| f.timestamp).collect::<Vec<_>>();
    let aligned = time_align(&times(Node::A), &times(Node::B), tol);

    let (logs_a, logs_b) = (open_logs(ds, Node::A), open_logs(ds, Node::B));
    let sigma = m.synthetic.as_ref().map_or(1.0, |s| s.noise.pixel_noise_sigma);
    let correct_tol = CORRECT_TOLERANCE_PX + 5.0 * sigma;

    let mut records = Vec::with_capacity(aligned.pairs.len());
    let mut audits = Vec::with_capacity(aligned.pairs.len());
    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();
    let (mut solved, mut fallbacks, mut evaluated, mut hits_full, mut hits_cam) = (0, 0, 0, 0, 0);

    for (index, pair) in aligned.pairs.iter().enumerate() {
        let fa = &ds.frames_a[pair.a];
        let fb = &ds.frames_b[pair.b];
        let snaps = match (&logs_a, &logs_b) {
            (Some(la), Some(lb)) => match (la.snapshot_at(fa.timestamp), lb.snapshot_at(fb.timestamp)) {
                (Ok(a), Ok(b)) => Some(SnapshotPair { a, b }),
                (ea, eb) => {
                    log::debug!("frame {index}: no sensor snapshot ({:?}, {:?})", ea.err(), eb.err());
                    None
                }
            },
            _ => None,
        };
        if !cfg.camera_only && snaps.is_none() {
            fallbacks += 1;
        }
        let used = if cfg.camera_only { None } else { snaps };
        let a = frame_points(ds, fa, &detector)?;
        let b = frame_points(ds, fb, &detector)?;
        let roll = |s: Option<f64>| s.unwrap_or(0.0);
        let pairs_a = enumerate_pairs_from_points(&a.points, roll(used.map(|s| s.a.roll)));
        let pairs_b = enumerate_pairs_from_points(&b.points, roll(used.map(|s| s.b.roll)));
        let set_a = CandidateSet { points: &a.points, pairs: &pairs_a };
        let set_b = CandidateSet { points: &b.points, pairs: &pairs_b };
        let truth = ds
            .truth
            .as_ref()
            .and_then(|t| t.at(fa.timestamp))
            .filter(|t| t.visible);

        let enough = a.points.len() >= 2 && b.points.len() >= 2;
        let primary = enough.then(|| select_best_pair(set_a, set_b, used.as_ref(), &m.nodes, &cfg.gates));
        // The other mode's selection is only needed to score it against truth.
        let other = match (&truth, snaps.is_some() && enough) {
            (Some(_), true) => {
                let s = if cfg.camera_only { snaps } else { None };
                Some(select_best_pair(set_a, set_b, s.as_ref(), &m.nodes, &cfg.gates))
            }
            _ => None,
        };

        let mut audit = FrameAudit {
            index,
            t_a: fa.timestamp,
            t_b: fb.timestamp,
            status: FrameStatus::NotVisible,
            mode: if used.is_some() { GateMode::Full } else { GateMode::ConsistencyOnly },
            candidates_a: a.points.len(),
            candidates_b: b.points.len(),
            selected: None,
            points: None,
            labels: None,
            correct_full: None,
            correct_camera_only: None,
            combinations: Vec::new(),
        };
        let mut pose: Option<RelativePose> = None;
        let mut score = f64::NAN;
        let mut picked: Option<ChosenPoints> = None;
        match primary {
            None => {}
            Some(Err(_)) => {
                audit.status = FrameStatus::NoValidPair;
                audit.combinations = evaluate_combinations(set_a, set_b, used.as_ref(), &m.nodes, &cfg.gates)
                    .into_iter()
                    .map(|(g, _)| g)
                    .collect();
            }
            Some(Ok(sel)) => {
                let (idx, pts) = chosen(&sel, &a, &pairs_a, &b, &pairs_b);
                audit.status = FrameStatus::Solved;
                audit.selected = Some(sel.best);
                audit.points = Some(pts);
                audit.labels = match (&a.labels, &b.labels) {
                    (Some(la), Some(lb)) => Some([la[idx[0]], la[idx[1]], lb[idx[2]], lb[idx[3]]]),
                    _ => None,
                };
                pose = Some(sel.pose);
                score = sel.best.score;
                picked = Some(pts);
                audit.combinations = sel.combinations;
            }
        }
        if let Some(t) = truth {
            evaluated += 1;
            let primary_ok = picked.is_some_and(|p| matches_truth(&p, t, correct_tol));
            let other_ok = match &other {
                Some(Ok(sel)) => matches_truth(&chosen(sel, &a, &pairs_a, &b, &pairs_b).1, t, correct_tol),
                Some(Err(_)) => false,
                // Without snapshots both modes are the same selection.
                None => primary_ok,
            };
            let (full_ok, cam_ok) = if cfg.camera_only {
                (other_ok, primary_ok)
            } else {
                (primary_ok, other_ok)
            };
            hits_full += full_ok as usize;
            hits_cam += cam_ok as usize;
            audit.correct_full = Some(full_ok);
            audit.correct_camera_only = Some(cam_ok);
        }
        match audit.status {
            FrameStatus::Solved => solved += 1,
            s => *skipped.entry(format!("{s:?}")).or_default() += 1,
        }
        records.push(TrajectoryRecord {
            timestamp: fa.timestamp,
            pose,
            selection_score: score,
        });
        audits.push(audit);
    }

    let summary = SolveSummary {
        frames_a: ds.frames_a.len(),
        frames_b: ds.frames_b.len(),
        paired: aligned.pairs.len(),
        unpaired_a: aligned.unpaired_a,
        unpaired_b: aligned.unpaired_b,
        solved,
        skipped,
        sensor_fallbacks: fallbacks,
        evaluated_frames: evaluated,
        selection_rate_full: rate(hits_full, evaluated),
        selection_rate_camera_only: rate(hits_cam, evaluated),
        config: cfg.clone(),
    };
    Ok(SolveOutput {
        records,
        audits,
        summary,
    })
}

/// Writes `trajectory.csv` and `audit.jsonl` (one line per trajectory row)
/// into `out`.
pub fn write_outputs(output: &SolveOutput, out: &Path) -> Result<(), DatasetError> {
    export_trajectory(&output.records, &out.join("trajectory.csv"))?;
    let mut audit = String::new();
    for a in &output.audits {
        let line = serde_json::to_string(a).expect("audit serializes");
        let _ = writeln!(audit, "{line}");
    }
    let path = out.join("audit.jsonl");
    fs::write(&path, audit).map_err(|source| DatasetError::Io { path, source })
}
