use alloc::vec::Vec;

use super::MarkerCandidate;
use crate::camera::PixelPoint;
use crate::math;

/// Two candidates hypothesized to be one node's lights, oriented left/right.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidatePair {
    pub left: usize,
    pub right: usize,
    /// Pixel distance between the two candidates.
    pub separation: f64,
}

/// Horizontal coordinate in an image de-rotated by the observer's roll.
pub(crate) fn roll_compensated_u(p: &PixelPoint, roll: f64) -> f64 {
    p.u * math::cos(roll) - p.v * math::sin(roll)
}

/// Every unordered candidate pair, labeled so that `left` has the smaller
/// roll-compensated `u`.
pub fn enumerate_pairs(candidates: &[MarkerCandidate], roll: f64) -> Vec<CandidatePair> {
    let points: Vec<PixelPoint> = candidates.iter().map(|c| c.position).collect();
    enumerate_pairs_from_points(&points, roll)
}

/// [`enumerate_pairs`] over bare pixel positions.
pub fn enumerate_pairs_from_points(points: &[PixelPoint], roll: f64) -> Vec<CandidatePair> {
    let n = points.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let ui = roll_compensated_u(&points[i], roll);
            let uj = roll_compensated_u(&points[j], roll);
            let (left, right) = if uj < ui { (j, i) } else { (i, j) };
            pairs.push(CandidatePair {
                left,
                right,
                separation: points[i].distance(&points[j]),
            });
        }
    }
    pairs
}
