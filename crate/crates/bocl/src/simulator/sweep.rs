//! Monte-Carlo study of range error against light spacing and range.

use bocl_core::camera::{CameraIntrinsics, PixelPoint};
use bocl_core::geometry::solve_relative_pose;
use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{render_landmarks, substream, NodePose, NoiseModel, ScenePose, Stream, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: f64,
    pub range: f64,
    /// Trials that produced a solution.
    pub trials: usize,
    /// Trials where a light left the image or the solver failed.
    pub failures: usize,
    pub rms_error: f64,
    pub mean_abs_error: f64,
}

/// Random draws for one trial, shared by every cell so differences between
/// cells are not sampling noise.
struct TrialDraw {
    lateral: f64,
    vertical: f64,
    /// Roll, pitch, yaw perturbation of each node, radians.
    attitude: [[f64; 3]; 2],
    /// Standard-normal pixel noise for the eight landmark coordinates.
    pixel: [f64; 8],
}

fn draw(seed: u64, trial: usize) -> TrialDraw {
    let mut rng = substream(seed, Stream::Sweep, trial as u64);
    let wobble = 2f64.to_radians();
    let mut att = || {
        [
            rng.gen_range(-wobble..wobble),
            rng.gen_range(-wobble..wobble),
            rng.gen_range(-wobble..wobble),
        ]
    };
    let attitude = [att(), att()];
    let lateral = rng.gen_range(-0.05..0.05);
    let vertical = rng.gen_range(-0.05..0.05);
    let mut pixel = [0.0; 8];
    for p in &mut pixel {
        *p = rng.sample(StandardNormal);
    }
    TrialDraw {
        lateral,
        vertical,
        attitude,
        pixel,
    }
}

fn trial_error(
    d: f64,
    range: f64,
    intrinsics: &CameraIntrinsics,
    sigma: f64,
    t: &TrialDraw,
) -> Option<f64> {
    let world = World::symmetric(d, *intrinsics, f64::INFINITY);
    let [ra, rb] = t.attitude;
    // Offsets scale with range so every cell sees the same bearing geometry.
    let b_pos = Vector3::new(range, t.lateral * range, t.vertical * range);
    let to_a = -b_pos;
    let yaw_b = to_a.y.atan2(to_a.x);
    let pitch_b = -to_a.z.atan2(to_a.xy().norm());
    let scene = ScenePose {
        timestamp: 0.0,
        a: NodePose::from_euler(Vector3::zeros(), ra[0], ra[1], ra[2]),
        b: NodePose::from_euler(b_pos, rb[0], pitch_b + rb[1], yaw_b + rb[2]),
    };
    let truth = scene.relative_pose().range;
    let lm = render_landmarks(&scene, &world).ok()?;
    let n = &t.pixel;
    let jitter = |p: &PixelPoint, i: usize| PixelPoint::new(p.u + sigma * n[i], p.v + sigma * n[i + 1]);
    let in_a = [jitter(&lm.in_a[0], 0), jitter(&lm.in_a[1], 2)];
    let in_b = [jitter(&lm.in_b[0], 4), jitter(&lm.in_b[1], 6)];
    let sol = solve_relative_pose(&in_a, &in_b, &world.nodes).ok()?;
    Some(sol.pose.range - truth)
}

/// RMS range error of the full solver for every `(d, range)` cell, rows in
/// `d`-major order.
pub fn spacing_sweep(
    d_values: &[f64],
    ranges: &[f64],
    intrinsics: &CameraIntrinsics,
    noise: &NoiseModel,
    trials: usize,
) -> Result<Vec<SweepRow>, String> {
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    if d_values.iter().chain(ranges).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err("spacings and ranges must be positive".into());
    }
    noise.validate()?;
    let draws: Vec<TrialDraw> = (0..trials).map(|i| draw(noise.rng_seed, i)).collect();
    let mut rows = Vec::with_capacity(d_values.len() * ranges.len());
    for &d in d_values {
        for &range in ranges {
            let errs: Vec<f64> = draws
                .iter()
                .filter_map(|t| trial_error(d, range, intrinsics, noise.pixel_noise_sigma, t))
                .collect();
            let n = errs.len();
            let (rms, mae) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let nf = n as f64;
                (
                    (errs.iter().map(|e| e * e).sum::<f64>() / nf).sqrt(),
                    errs.iter().map(|e| e.abs()).sum::<f64>() / nf,
                )
            };
            rows.push(SweepRow {
                d,
                range,
                trials: n,
                failures: trials - n,
                rms_error: rms,
                mean_abs_error: mae,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_exact() {
        let rows = spacing_sweep(
            &[0.57, 0.88],
            &[1.5, 4.0, 10.0],
            &CameraIntrinsics::default_wide(),
            &NoiseModel::zero(3),
            20,
        )
        .unwrap();
        for r in rows {
            assert_eq!(r.failures, 0);
            assert!(r.rms_error < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn rejects_zero_trials() {
        let k = CameraIntrinsics::default_wide();
        assert!(spacing_sweep(&[0.88], &[4.0], &k, &NoiseModel::default(), 0).is_err());
    }
}
