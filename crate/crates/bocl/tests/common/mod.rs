//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Maximum-cardinality, then minimum total |residual| matching. In one
/// dimension an optimal matching never crosses, so an alignment DP is exact.
pub fn optimal_pairs(a: &[f64], b: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    // (pairs, -cost) maximised lexicographically.
    let mut best = vec![vec![(0usize, 0.0f64); m + 1]; n + 1];
    let better = |x: (usize, f64), y: (usize, f64)| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);
    for i in 1..=n {
        for j in 1..=m {
            let mut v = best[i - 1][j];
            if better(best[i][j - 1], v) {
                v = best[i][j - 1];
            }
            let r = (b[j - 1] - a[i - 1]).abs();
            if r <= tol {
                let c = best[i - 1][j - 1];
                let cand = (c.0 + 1, c.1 + r);
                if better(cand, v) {
                    v = cand;
                }
            }
            best[i][j] = v;
        }
    }
    let (mut i, mut j, mut out) = (n, m, Vec::new());
    while i > 0 && j > 0 {
        let r = (b[j - 1] - a[i - 1]).abs();
        let c = best[i - 1][j - 1];
        if r <= tol && best[i][j] == (c.0 + 1, c.1 + r) {
            out.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if best[i][j] == best[i - 1][j] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}
