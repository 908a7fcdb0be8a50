//! Bearing-only cooperative localization between two camera nodes.
//!
//! Each node carries a camera rigidly mounted between two point lights. When
//! two nodes photograph each other at the same instant, the pair of images
//! contains enough information to recover the full relative pose in closed
//! form. This crate holds the allocation-light algorithmic core:
//!
//! - [`camera`]: pinhole model with two-coefficient radial distortion.
//! - [`geometry`]: subtended/baseline angles, the closed-form range, and the
//!   end-to-end relative pose solve.
//! - [`imaging`]: landmark-light detection tuned for scattering media.
//! - [`sensors`]: accelerometer roll/pitch, tilt-compensated magnetic yaw and
//!   depth handling.
//! - [`rejection`]: dual-range consistency and sensor gating to pick the right
//!   landmark pair out of many candidates.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! Frame conventions: camera frames are x right, y down, z forward. Node body
//! frames (IMU) are x forward, y left, z up, and the world frame is z up.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod camera;
pub mod geometry;
pub mod imaging;
pub mod rejection;
pub mod sensors;

mod math;

pub use camera::{Bearing, CameraError, CameraIntrinsics, PixelPoint};
pub use geometry::{
    AnglePair, GeometryError, NodeGeometry, NodePair, PoseSolution, RelativePose,
};
pub use nalgebra::{UnitQuaternion, Vector3};
