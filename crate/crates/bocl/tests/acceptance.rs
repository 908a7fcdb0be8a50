//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::hint::black_box;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use bocl::dataset::{export_trajectory, load_dataset, read_trajectory, time_align, Fidelity, TrajectoryRecord};
use bocl::evaluate::{evaluate, write_report, REFERENCE_ENVELOPE};
use bocl::pipeline::{solve_dataset, SolveConfig};
use bocl::simulator::{
    generate_trajectory, image_sources, render_beam_image, render_landmarks, spacing_sweep, Node, NoiseModel,
    PathKind, TrajectorySpec,
};
use bocl_core::camera::{CameraIntrinsics, PixelPoint};
use bocl_core::geometry::{range_closed_form, solve_relative_pose, AnglePair, NodeGeometry, NodePair, RelativePose};
use bocl_core::imaging::{
    extract_regions, hsv_threshold, morph_close, refine_marker, whole_blob_centroid, DetectorConfig,
    EnvironmentPreset,
};
use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{optimal_pairs, snapshot};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn out_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Wide enough that both lights stay in view down to 0.5 m.
fn fisheye_ish() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 400.0,
        fy: 400.0,
        cx: 640.0,
        cy: 480.0,
        image_width: 1280,
        image_height: 960,
        radial_distortion: [0.0; 2],
    }
}

fn closed_form_exactness() -> Outcome {
    let start = Instant::now();
    let k = fisheye_ish();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let half_turn = UnitQuaternion::from_euler_angles(0.0, PI, 0.0);
    let (mut scenes, mut worst_pos, mut worst_rot, mut errors) = (0, 0.0f64, 0.0f64, 0);
    while scenes < 1000 {
        let range = rng.gen_range(0.5..10.0);
        let (az, el): (f64, f64) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.4..0.4));
        let dir = Vector3::new(az.sin() * el.cos(), el.sin(), az.cos() * el.cos());
        let rot_b = half_turn
            * UnitQuaternion::from_euler_angles(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.6..0.6),
            );
        let nodes = NodePair {
            intrinsics_a: k,
            intrinsics_b: k,
            geometry_a: NodeGeometry::symmetric(rng.gen_range(0.57..=0.88)).unwrap(),
            geometry_b: NodeGeometry::symmetric(rng.gen_range(0.57..=0.88)).unwrap(),
        };
        let truth = RelativePose::new(rot_b, dir * range).unwrap();
        let (ga, gb) = (&nodes.geometry_a, &nodes.geometry_b);
        let seen = |p: Vector3<f64>| k.project(&p).filter(|px| k.contains(px));
        let in_a = [seen(truth.translation + rot_b * gb.left()), seen(truth.translation + rot_b * gb.right())];
        let in_b = [
            seen(rot_b.inverse() * (ga.left() - truth.translation)),
            seen(rot_b.inverse() * (ga.right() - truth.translation)),
        ];
        let (Some(al), Some(ar), Some(bl), Some(br)) = (in_a[0], in_a[1], in_b[0], in_b[1]) else {
            continue;
        };
        scenes += 1;
        match solve_relative_pose(&[al, ar], &[bl, br], &nodes) {
            Ok(sol) => {
                worst_pos = worst_pos.max(sol.pose.position_error(&truth));
                worst_rot = worst_rot.max(sol.pose.rotation_error(&truth));
            }
            Err(_) => errors += 1,
        }
    }
    let elapsed = start.elapsed();
    outcome(
        errors == 0 && worst_pos < 1e-6 && worst_rot < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "1000 scenes, max position error {worst_pos:.2e} m, max rotation error {worst_rot:.2e} rad, \
             {errors} solver errors, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn trivial_geometry() -> Outcome {
    let l = range_closed_form(1.0, &AnglePair::new(FRAC_PI_2, 0.0).unwrap()).unwrap();
    let mut worst = (l - 0.5).abs();
    let d = 0.88;
    for i in 0..100 {
        let alpha = 0.01 + (PI - 0.02) * i as f64 / 99.0;
        let l = range_closed_form(d, &AnglePair::new(alpha, FRAC_PI_2).unwrap()).unwrap();
        worst = worst.max((l - d / 2.0).abs());
    }
    outcome(worst <= 1e-12, format!("l(1, pi/2, 0) = {l}, worst deviation {worst:.1e}"))
}

fn station_error_curve() -> Outcome {
    let start = Instant::now();
    let spec = TrajectorySpec {
        path: PathKind::Stations,
        frames_per_station: 200,
        baseline: 0.88,
        ..TrajectorySpec::default()
    };
    let noise = NoiseModel {
        pixel_noise_sigma: 1.0,
        rng_seed: 3,
        ..NoiseModel::default()
    };
    let dir = tempfile::tempdir().unwrap();
    generate_trajectory(&spec, &noise, dir.path()).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let out = solve_dataset(&ds, &SolveConfig::default()).unwrap();
    let report = evaluate(&out.records, ds.truth.as_ref().unwrap(), 0.5).unwrap();
    let plots = out_dir().join("stations");
    std::fs::create_dir_all(&plots).unwrap();
    write_report(&report, &plots).unwrap();
    let svg = std::fs::read_to_string(plots.join("error_vs_range.svg")).unwrap();
    let elapsed = start.elapsed();
    let finite = !report.bins.is_empty() && report.bins.iter().all(|b| b.mean_abs_error.is_finite());
    let monotone = report.bins.windows(2).all(|w| w[0].mean_abs_error <= w[1].mean_abs_error);
    let curve: Vec<String> = report
        .bins
        .iter()
        .map(|b| format!("{:.1} m: {:.4}", b.center, b.mean_abs_error))
        .collect();
    outcome(
        finite && monotone && svg.contains("0.08 m envelope") && elapsed < Duration::from_secs(60),
        format!(
            "[{}] against the {REFERENCE_ENVELOPE} m envelope, plot at {}, {:.1} s",
            curve.join(", "),
            plots.join("error_vs_range.svg").display(),
            elapsed.as_secs_f64()
        ),
    )
}

fn selection_rates() -> Outcome {
    let start = Instant::now();
    let spec = TrajectorySpec {
        path: PathKind::Line,
        frames: 500,
        ..TrajectorySpec::default()
    };
    let noise = NoiseModel {
        distractor_rate: 1.0,
        rng_seed: 11,
        ..NoiseModel::default()
    };
    let dir = tempfile::tempdir().unwrap();
    generate_trajectory(&spec, &noise, dir.path()).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let s = solve_dataset(&ds, &SolveConfig::default()).unwrap().summary;
    let elapsed = start.elapsed();
    let (full, cam) = (s.selection_rate_full.unwrap_or(0.0), s.selection_rate_camera_only.unwrap_or(1.0));
    outcome(
        s.paired >= 500 && full > cam && elapsed < Duration::from_secs(300),
        format!(
            "{} pairs, {} evaluated, full {:.2}% vs camera-only {:.2}%, {:.1} s",
            s.paired,
            s.evaluated_frames,
            100.0 * full,
            100.0 * cam,
            elapsed.as_secs_f64()
        ),
    )
}

fn bright_end() -> Outcome {
    let spec = TrajectorySpec {
        frames: 200,
        ..TrajectorySpec::default()
    };
    let world = spec.world();
    let noise = NoiseModel {
        beam_elongation: 40.0,
        ..NoiseModel::zero(8)
    };
    let det = DetectorConfig::for_environment(EnvironmentPreset::ClearNight);
    let (mut worst_refined, mut best_naive, mut lights, mut missing) = (0.0f64, f64::INFINITY, 0, 0);
    for i in 0..spec.frames {
        let scene = spec.scene_at(spec.frame_ns(i) as f64 * 1e-9);
        let Ok(truth) = render_landmarks(&scene, &world) else {
            continue;
        };
        for node in [Node::A, Node::B] {
            let k = world.intrinsics(node);
            let img = render_beam_image(&image_sources(&scene, &world, node, &noise, i as u64), k, &noise, i as u64, node);
            let mask = morph_close(&hsv_threshold(&img, &det.threshold), det.close_radius);
            let blobs = extract_regions(&mask, &img, det.min_area);
            for p in truth.in_image(node) {
                lights += 1;
                let at = (p.u.round() as u32, p.v.round() as u32);
                let Some((idx, blob)) = blobs.iter().enumerate().find(|(_, b)| b.pixels.contains(&at)) else {
                    missing += 1;
                    continue;
                };
                let refined = refine_marker(blob, &img, idx, &det.refine).unwrap().position;
                let naive: PixelPoint = whole_blob_centroid(blob, &img).unwrap();
                worst_refined = worst_refined.max(refined.distance(p));
                best_naive = best_naive.min(naive.distance(p));
            }
        }
    }
    outcome(
        missing == 0 && lights > 0 && worst_refined <= 2.0 && best_naive > 10.0,
        format!(
            "{lights} lights over 200 frames, worst refined error {worst_refined:.2} px, \
             best whole-blob error {best_naive:.1} px, {missing} lights without a blob"
        ),
    )
}

fn median_ns(mut f: impl FnMut(), batch: u32) -> f64 {
    let mut samples: Vec<f64> = (0..101)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..batch {
                f();
            }
            t.elapsed().as_nanos() as f64 / batch as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn latency() -> Outcome {
    let angles = AnglePair::new(0.2, 0.1).unwrap();
    let eq = median_ns(
        || {
            black_box(range_closed_form(black_box(0.88), black_box(&angles)).ok());
        },
        10_000,
    );
    let k = CameraIntrinsics::default_wide();
    let nodes = NodePair {
        intrinsics_a: k,
        intrinsics_b: k,
        geometry_a: NodeGeometry::symmetric(0.88).unwrap(),
        geometry_b: NodeGeometry::symmetric(0.88).unwrap(),
    };
    let spec = TrajectorySpec::default();
    let truth = render_landmarks(&spec.scene_at(3.0), &spec.world()).unwrap();
    let solve = median_ns(
        || {
            black_box(solve_relative_pose(black_box(&truth.in_a), black_box(&truth.in_b), &nodes).ok());
        },
        1_000,
    );
    outcome(
        eq < 1_000.0 && solve < 10_000.0,
        format!("median closed-form range {eq:.1} ns, median full solve {:.2} us", solve / 1000.0),
    )
}

fn random_record(rng: &mut ChaCha8Rng, t: f64) -> TrajectoryRecord {
    if rng.gen_bool(0.1) {
        return TrajectoryRecord {
            timestamp: t,
            pose: None,
            selection_score: f64::NAN,
        };
    }
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let translation = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..10.0));
    TrajectoryRecord {
        timestamp: t,
        pose: Some(RelativePose::new(UnitQuaternion::from_scaled_axis(axis), translation).unwrap()),
        selection_score: rng.gen_range(0.0..3.0),
    }
}

fn determinism_and_io() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let small = CameraIntrinsics {
        fx: 265.0,
        fy: 265.0,
        cx: 160.0,
        cy: 120.0,
        image_width: 320,
        image_height: 240,
        radial_distortion: [0.0; 2],
    };
    let noise = NoiseModel {
        distractor_rate: 1.0,
        snow_rate: 5.0,
        beam_elongation: 20.0,
        rng_seed: 42,
        ..NoiseModel::default()
    };
    for fidelity in [Fidelity::Detections, Fidelity::Rendered] {
        let spec = TrajectorySpec {
            frames: 20,
            intrinsics: small,
            fidelity,
            ..TrajectorySpec::default()
        };
        let (x, y) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate_trajectory(&spec, &noise, x.path()).unwrap();
        generate_trajectory(&spec, &noise, y.path()).unwrap();
        let same = snapshot(x.path()) == snapshot(y.path());
        pass &= same;
        notes.push(format!("{fidelity:?} regeneration identical: {same}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let records: Vec<TrajectoryRecord> = (0..1000)
        .map(|i| {
            let t = 1.0 + i as f64 / 30.0 + rng.gen_range(0.0..1e-3);
            random_record(&mut rng, t)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectory.csv");
    export_trajectory(&records, &path).unwrap();
    let back = read_trajectory(&path).unwrap();
    let lossless = back.len() == records.len()
        && records.iter().zip(&back).all(|(a, b)| {
            a.timestamp.to_bits() == b.timestamp.to_bits()
                && a.selection_score.to_bits() == b.selection_score.to_bits()
                && match (&a.pose, &b.pose) {
                    (None, None) => true,
                    (Some(p), Some(q)) => {
                        p.translation == q.translation
                            && p.rotation.coords == q.rotation.coords
                            && p.range.to_bits() == q.range.to_bits()
                    }
                    _ => false,
                }
        });
    pass &= lossless;
    notes.push(format!("1000-record round trip lossless: {lossless}"));

    let tol = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut agree = 0;
    let instances = 100;
    for instance in 0..instances {
        let period = [0.06, 0.1, 0.2][instance % 3];
        let a: Vec<f64> = (0..100).map(|i| 1.0 + i as f64 * period).collect();
        let mut b = Vec::new();
        for &t in &a {
            if instance % 2 == 1 && rng.gen_bool(0.05) {
                continue;
            }
            b.push(t + rng.gen_range(-tol / 2.0..=tol / 2.0));
        }
        let greedy: Vec<(usize, usize)> = time_align(&a, &b, tol).pairs.iter().map(|p| (p.a, p.b)).collect();
        agree += (greedy == optimal_pairs(&a, &b, tol)) as usize;
    }
    pass &= agree == instances;
    notes.push(format!("time alignment optimal on {agree}/{instances} instances"));
    outcome(pass, notes.join("; "))
}

fn spacing() -> Outcome {
    let noise = NoiseModel {
        pixel_noise_sigma: 1.0,
        ..NoiseModel::zero(5)
    };
    let rows = spacing_sweep(&[0.57, 0.88], &[4.0], &CameraIntrinsics::default_wide(), &noise, 1000).unwrap();
    let rms = |d: f64| rows.iter().find(|r| r.d == d).unwrap().rms_error;
    let (narrow, wide) = (rms(0.57), rms(0.88));
    outcome(
        wide < narrow,
        format!("RMS range error at 4 m over 1000 trials: d=0.88 {wide:.4} m, d=0.57 {narrow:.4} m"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form exactness", closed_form_exactness),
        ("trivial geometry", trivial_geometry),
        ("station error curve", station_error_curve),
        ("sensor-gated selection", selection_rates),
        ("bright-end detection", bright_end),
        ("solve latency", latency),
        ("determinism and I/O", determinism_and_io),
        ("landmark spacing", spacing),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {}: {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
