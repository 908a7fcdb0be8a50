//! Landmark-light detection in 8-bit RGB frames.
//!
//! The pipeline is HSV thresholding, morphological closing, 8-connected
//! region extraction and a bright-end refinement that locates the light
//! source inside its scattered beam. Candidate pairs are then enumerated for
//! outlier rejection.

use alloc::vec::Vec;

use thiserror::Error;

mod hsv;
mod morph;
mod pairs;
mod refine;
mod regions;

pub use hsv::{hsv_threshold, rgb_to_hsv, EnvironmentPreset, HsvThreshold};
pub use morph::morph_close;
pub use pairs::{enumerate_pairs, enumerate_pairs_from_points, CandidatePair};
pub use refine::{refine_marker, whole_blob_centroid, MarkerCandidate, RefineConfig};
pub use regions::{extract_regions, Blob, BoundingBox};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ImagingError {
    #[error("image buffer length does not match its dimensions")]
    BufferSize,
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("an end zone of the blob carries no intensity")]
    EmptyEndZone,
    #[error("blob has no pixels")]
    EmptyBlob,
}

/// Row-major interleaved RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyImage);
        }
        if data.len() != width as usize * height as usize * Self::CHANNELS {
            return Err(ImagingError::BufferSize);
        }
        Ok(Self { width, height, data })
    }

    pub fn black(width: u32, height: u32) -> Result<Self, ImagingError> {
        let n = width as usize * height as usize * Self::CHANNELS;
        Self::new(width, height, alloc::vec![0; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * Self::CHANNELS
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// HSV value (max channel) in [0, 1].
    pub fn brightness(&self, x: u32, y: u32) -> f64 {
        let [r, g, b] = self.pixel(x, y);
        r.max(g).max(b) as f64 / 255.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: alloc::vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// True when every pixel set here is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    pub threshold: HsvThreshold,
    pub close_radius: u32,
    pub min_area: usize,
    pub refine: RefineConfig,
}

impl DetectorConfig {
    pub fn for_environment(env: EnvironmentPreset) -> Self {
        Self {
            threshold: env.threshold(),
            ..Self::default()
        }
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: EnvironmentPreset::CaveNight.threshold(),
            close_radius: 2,
            min_area: 9,
            refine: RefineConfig::default(),
        }
    }
}

/// Blobs and the marker candidate refined from each usable blob.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub blobs: Vec<Blob>,
    pub candidates: Vec<MarkerCandidate>,
}

/// Runs the whole detection pipeline on one frame.
pub fn detect_markers(img: &RasterImage, cfg: &DetectorConfig) -> Detection {
    let mask = hsv_threshold(img, &cfg.threshold);
    let closed = morph_close(&mask, cfg.close_radius.max(1));
    let blobs = extract_regions(&closed, img, cfg.min_area.max(1));
    let candidates = blobs
        .iter()
        .enumerate()
        .filter_map(|(i, b)| refine_marker(b, img, i, &cfg.refine).ok())
        .collect();
    Detection { blobs, candidates }
}
