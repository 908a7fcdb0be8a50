//! Forward models of the accelerometer, gyroscope, magnetometer and depth gauge.

use bocl_core::sensors::{DepthSample, ImuSample, MagSample, STANDARD_GRAVITY};
use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{substream, Node, NodePose, NoiseModel, Stream, World};

pub const IMU_RATE: f64 = 100.0;
pub const MAG_RATE: f64 = 50.0;
pub const DEPTH_RATE: f64 = 10.0;

fn noisy(rng: &mut ChaCha8Rng, sigma: f64, v: Vector3<f64>) -> [f64; 3] {
    if sigma == 0.0 {
        return v.into();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    [v.x + n.sample(rng), v.y + n.sample(rng), v.z + n.sample(rng)]
}

/// One sample of every sensor for a node at rest in `pose`, plus body rates.
pub fn synth_sensors(
    pose: &NodePose,
    angular_velocity: Vector3<f64>,
    timestamp: f64,
    world: &World,
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> (ImuSample, MagSample, DepthSample) {
    let to_body = pose.orientation.inverse();
    let accel = noisy(rng, noise.accel_noise_sigma, to_body * Vector3::new(0.0, 0.0, STANDARD_GRAVITY));
    let gyro = noisy(rng, noise.gyro_noise_sigma, angular_velocity);
    let mag = noisy(rng, noise.mag_noise_sigma, to_body * Vector3::from(world.magnetic_field));
    let mut depth = -pose.position.z;
    if noise.depth_noise_sigma > 0.0 {
        depth += Normal::new(0.0, noise.depth_noise_sigma).expect("finite sigma").sample(rng);
    }
    (
        ImuSample {
            timestamp,
            accel,
            gyro,
        },
        MagSample { timestamp, mag },
        DepthSample { timestamp, depth },
    )
}

/// Body-frame angular velocity by finite differences of the attitude.
fn body_rate(pose_at: &impl Fn(f64) -> NodePose, t: f64) -> Vector3<f64> {
    const DT: f64 = 1e-3;
    let q0 = pose_at(t - DT).orientation;
    let q1 = pose_at(t + DT).orientation;
    (q0.inverse() * q1).scaled_axis() / (2.0 * DT)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeLogs {
    pub imu: Vec<ImuSample>,
    pub mag: Vec<MagSample>,
    pub depth: Vec<DepthSample>,
}

/// Sensor logs over `[t_start, t_end]` at the fixed sensor rates.
pub fn sensor_logs(
    pose_at: impl Fn(f64) -> NodePose,
    world: &World,
    noise: &NoiseModel,
    node: Node,
    t_start: f64,
    t_end: f64,
) -> NodeLogs {
    let mut logs = NodeLogs::default();
    let times = |rate: f64| {
        let n = ((t_end - t_start) * rate).floor() as usize;
        (0..=n).map(move |i| t_start + i as f64 / rate)
    };
    let mut rng = substream(noise.rng_seed, Stream::Sensors, node as u64 * 3);
    for t in times(IMU_RATE) {
        let (imu, _, _) = synth_sensors(&pose_at(t), body_rate(&pose_at, t), t, world, noise, &mut rng);
        logs.imu.push(imu);
    }
    let mut rng = substream(noise.rng_seed, Stream::Sensors, node as u64 * 3 + 1);
    for t in times(MAG_RATE) {
        let (_, mag, _) = synth_sensors(&pose_at(t), Vector3::zeros(), t, world, noise, &mut rng);
        logs.mag.push(mag);
    }
    let mut rng = substream(noise.rng_seed, Stream::Sensors, node as u64 * 3 + 2);
    for t in times(DEPTH_RATE) {
        let (_, _, depth) = synth_sensors(&pose_at(t), Vector3::zeros(), t, world, noise, &mut rng);
        logs.depth.push(depth);
    }
    logs
}
