//! Pairing of the two nodes' frames by timestamp.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedSample {
    /// Index into A's frames.
    pub a: usize,
    /// Index into B's frames.
    pub b: usize,
    /// `t_B − t_A`, seconds.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignResult {
    /// Sorted by A's timestamp.
    pub pairs: Vec<PairedSample>,
    pub unpaired_a: usize,
    pub unpaired_b: usize,
}

/// Greedy nearest-neighbour pairing: candidate pairs within `sync_tolerance`
/// are taken in order of increasing |residual|, each frame at most once.
/// Both inputs must be sorted.
pub fn time_align(times_a: &[f64], times_b: &[f64], sync_tolerance: f64) -> AlignResult {
    let mut candidates = Vec::new();
    let mut lo = 0;
    for (i, &ta) in times_a.iter().enumerate() {
        while lo < times_b.len() && times_b[lo] < ta - sync_tolerance {
            lo += 1;
        }
        for (j, &tb) in times_b.iter().enumerate().skip(lo) {
            if tb > ta + sync_tolerance {
                break;
            }
            candidates.push(PairedSample {
                a: i,
                b: j,
                residual: tb - ta,
            });
        }
    }
    candidates.sort_by(|x, y| {
        x.residual
            .abs()
            .total_cmp(&y.residual.abs())
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    let mut used_a = vec![false; times_a.len()];
    let mut used_b = vec![false; times_b.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !used_a[c.a] && !used_b[c.b] {
            used_a[c.a] = true;
            used_b[c.b] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.a);
    AlignResult {
        unpaired_a: times_a.len() - pairs.len(),
        unpaired_b: times_b.len() - pairs.len(),
        pairs,
    }
}
