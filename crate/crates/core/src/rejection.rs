//! Picking the true landmark pair out of many candidates.
//!
//! Every combination of a candidate pair in A's image with a candidate pair
//! in B's image is solved. A correct combination yields two identical range
//! estimates (one per image role assignment); a wrong one generally does not.
//! When attitude and depth snapshots are available, the recovered pose must
//! also agree with the sensors.

use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{UnitQuaternion, Vector3};
use thiserror::Error;

use crate::camera::PixelPoint;
use crate::geometry::{solve_relative_pose, GeometryError, NodePair, PoseSolution, RelativePose};
use crate::imaging::CandidatePair;
use crate::math;
use crate::sensors::{camera_from_body, euler_from_rotation, AttitudeEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConsistencyConfig {
    pub rel_tol: f64,
    /// Meters.
    pub abs_tol: f64,
    /// Largest allowed disagreement between the two rotation constructions, radians.
    pub rotation_tol: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            rel_tol: 0.02,
            abs_tol: 0.02,
            rotation_tol: 0.2,
        }
    }
}

impl ConsistencyConfig {
    pub fn tolerance(&self, range: f64) -> f64 {
        self.rel_tol * range + self.abs_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConsistencyReport {
    pub l_from_a: f64,
    pub l_from_b: f64,
    pub discrepancy: f64,
    pub rotation_disagreement: f64,
    pub passed: bool,
    pub failure: Option<GeometryError>,
}

impl ConsistencyReport {
    fn failed(err: GeometryError) -> Self {
        Self {
            l_from_a: f64::NAN,
            l_from_b: f64::NAN,
            discrepancy: f64::INFINITY,
            rotation_disagreement: f64::INFINITY,
            passed: false,
            failure: Some(err),
        }
    }

    pub fn mean_range(&self) -> f64 {
        0.5 * (self.l_from_a + self.l_from_b)
    }
}

/// Solves one combination and reports the dual-range discrepancy.
///
/// `in_a` is the oriented pair `[left, right]` in A's image, `in_b` in B's.
pub fn dual_estimate_check(
    in_a: &[PixelPoint; 2],
    in_b: &[PixelPoint; 2],
    nodes: &NodePair,
    cfg: &ConsistencyConfig,
) -> (ConsistencyReport, Option<PoseSolution>) {
    match solve_relative_pose(in_a, in_b, nodes) {
        Ok(sol) => {
            let discrepancy = math::abs(sol.range_from_a - sol.range_from_b);
            let mean = 0.5 * (sol.range_from_a + sol.range_from_b);
            let passed = discrepancy <= cfg.tolerance(mean)
                && sol.rotation_disagreement <= cfg.rotation_tol;
            let report = ConsistencyReport {
                l_from_a: sol.range_from_a,
                l_from_b: sol.range_from_b,
                discrepancy,
                rotation_disagreement: sol.rotation_disagreement,
                passed,
                failure: None,
            };
            (report, Some(sol))
        }
        Err(e) => (ConsistencyReport::failed(e), None),
    }
}

/// Sensor gates and score weights. Gate values are 3σ of the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateConfig {
    pub consistency: ConsistencyConfig,
    /// Radians.
    pub yaw_gate: f64,
    /// Meters.
    pub depth_gate: f64,
    /// Radians.
    pub attitude_gate: f64,
    pub discrepancy_weight: f64,
    pub yaw_weight: f64,
    pub depth_weight: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            consistency: ConsistencyConfig::default(),
            yaw_gate: 10f64.to_radians(),
            depth_gate: 0.3,
            attitude_gate: 15f64.to_radians(),
            discrepancy_weight: 1.0,
            yaw_weight: 1.0,
            depth_weight: 1.0,
        }
    }
}

/// Attitude and depth of both nodes at the frame time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapshotPair {
    pub a: AttitudeEstimate,
    pub b: AttitudeEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GateMode {
    Full,
    /// Sensor data missing or disabled; only the consistency test applies.
    ConsistencyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorResiduals {
    pub yaw: f64,
    pub depth: f64,
    pub attitude: f64,
}

/// Residuals of a pose hypothesis against the sensor snapshots.
///
/// The relative rotation implied by the sensors is `C·R_Aᵀ·R_B·Cᵀ`, with `C`
/// the body-to-camera rotation and `R_*` body-to-world attitudes.
pub fn sensor_residuals(pose: &RelativePose, snaps: &SnapshotPair) -> SensorResiduals {
    let c = camera_from_body();
    let ra = snaps.a.rotation();
    let rb = snaps.b.rotation();
    let world_from_cam_a = ra * c.inverse();

    let implied_b = world_from_cam_a * pose.rotation * c;
    let (_, _, implied_yaw) = euler_from_rotation(&implied_b);
    let yaw = math::abs(math::wrap_pi(implied_yaw - snaps.b.yaw));

    let up: Vector3<f64> = world_from_cam_a * pose.translation;
    let relative_depth = snaps.b.depth - snaps.a.depth;
    let depth = math::abs(-up.z - relative_depth);

    let sensed: UnitQuaternion<f64> = c * ra.inverse() * rb * c.inverse();
    let attitude = math::geodesic_distance(&pose.rotation, &sensed);
    SensorResiduals {
        yaw,
        depth,
        attitude,
    }
}

/// Verdict for one combination of candidate pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GateResult {
    pub pair_a: usize,
    pub pair_b: usize,
    pub consistency: ConsistencyReport,
    pub residuals: Option<SensorResiduals>,
    pub mode: GateMode,
    pub accepted: bool,
    /// Lower is better; infinite when rejected.
    pub score: f64,
}

/// Applies the sensor gates to a consistency-checked hypothesis.
pub fn sensor_gate(
    pair_a: usize,
    pair_b: usize,
    consistency: ConsistencyReport,
    pose: Option<&RelativePose>,
    snaps: Option<&SnapshotPair>,
    cfg: &GateConfig,
) -> GateResult {
    let relative = consistency.discrepancy / consistency.mean_range();
    let (mode, residuals) = match (pose, snaps) {
        (Some(p), Some(s)) => (GateMode::Full, Some(sensor_residuals(p, s))),
        (_, None) => (GateMode::ConsistencyOnly, None),
        (None, Some(_)) => (GateMode::Full, None),
    };
    let gates_ok = match (&mode, &residuals) {
        (GateMode::ConsistencyOnly, _) => true,
        (GateMode::Full, Some(r)) => {
            r.yaw <= cfg.yaw_gate && r.depth <= cfg.depth_gate && r.attitude <= cfg.attitude_gate
        }
        (GateMode::Full, None) => false,
    };
    let accepted = consistency.passed && gates_ok;
    let score = if !accepted {
        f64::INFINITY
    } else {
        let sensor_term = residuals.map_or(0.0, |r| {
            cfg.yaw_weight * r.yaw / cfg.yaw_gate + cfg.depth_weight * r.depth / cfg.depth_gate
        });
        cfg.discrepancy_weight * relative + sensor_term
    };
    GateResult {
        pair_a,
        pair_b,
        consistency,
        residuals,
        mode,
        accepted,
        score,
    }
}

/// Candidate points and oriented pairs detected in one image.
#[derive(Debug, Clone, Copy)]
pub struct CandidateSet<'a> {
    pub points: &'a [PixelPoint],
    pub pairs: &'a [CandidatePair],
}

impl CandidateSet<'_> {
    fn oriented(&self, i: usize) -> [PixelPoint; 2] {
        let p = &self.pairs[i];
        [self.points[p.left], self.points[p.right]]
    }
}

/// Every combination with its gate result, in `(pair_a, pair_b)` order.
pub fn evaluate_combinations(
    in_a: CandidateSet<'_>,
    in_b: CandidateSet<'_>,
    snaps: Option<&SnapshotPair>,
    nodes: &NodePair,
    cfg: &GateConfig,
) -> Vec<(GateResult, Option<RelativePose>)> {
    let mut out = Vec::with_capacity(in_a.pairs.len() * in_b.pairs.len());
    for i in 0..in_a.pairs.len() {
        let pa = in_a.oriented(i);
        for j in 0..in_b.pairs.len() {
            let pb = in_b.oriented(j);
            let (report, sol) = dual_estimate_check(&pa, &pb, nodes, &cfg.consistency);
            let pose = sol.map(|s| s.pose);
            let gate = sensor_gate(i, j, report, pose.as_ref(), snaps, cfg);
            out.push((gate, pose));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RejectionError {
    #[error("no candidate pair combination passed the gates")]
    NoValidPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: GateResult,
    pub pose: RelativePose,
    /// All evaluated combinations, for the audit trail.
    pub combinations: Vec<GateResult>,
}

fn pixel_key(p: &[PixelPoint; 2]) -> [f64; 4] {
    [p[0].u, p[0].v, p[1].u, p[1].v]
}

fn cmp_keys(a: &[f64; 4], b: &[f64; 4]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// The accepted combination with the lowest score.
///
/// Ties are broken by the pixel coordinates of the chosen points, then by
/// pair indices, so the choice does not depend on candidate order.
pub fn select_best_pair(
    in_a: CandidateSet<'_>,
    in_b: CandidateSet<'_>,
    snaps: Option<&SnapshotPair>,
    nodes: &NodePair,
    cfg: &GateConfig,
) -> Result<Selection, RejectionError> {
    let all = evaluate_combinations(in_a, in_b, snaps, nodes, cfg);
    let best = all
        .iter()
        .filter_map(|(g, p)| p.filter(|_| g.accepted).map(|p| (g, p)))
        .min_by(|(x, _), (y, _)| {
            x.score
                .total_cmp(&y.score)
                .then_with(|| {
                    cmp_keys(
                        &pixel_key(&in_a.oriented(x.pair_a)),
                        &pixel_key(&in_a.oriented(y.pair_a)),
                    )
                })
                .then_with(|| {
                    cmp_keys(
                        &pixel_key(&in_b.oriented(x.pair_b)),
                        &pixel_key(&in_b.oriented(y.pair_b)),
                    )
                })
                .then_with(|| (x.pair_a, x.pair_b).cmp(&(y.pair_a, y.pair_b)))
        })
        .map(|(g, p)| (*g, p));
    match best {
        Some((best, pose)) => Ok(Selection {
            best,
            pose,
            combinations: all.into_iter().map(|(g, _)| g).collect(),
        }),
        None => Err(RejectionError::NoValidPair),
    }
}
