use alloc::vec::Vec;

use super::{Blob, ImagingError, RasterImage};
use crate::camera::PixelPoint;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefineConfig {
    /// Fraction of the major-axis extent covered by each end zone.
    pub end_fraction: f64,
    /// Pixels at or above this percentile of their zone's brightness vote.
    pub brightness_percentile: f64,
    /// Ends whose mean brightness differ by less than this are treated as a
    /// symmetric, undistorted light.
    pub symmetric_tolerance: f64,
    /// Blobs whose major-to-minor axis ratio is below this are treated as
    /// round, undistorted lights.
    pub min_elongation: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            end_fraction: 0.25,
            brightness_percentile: 90.0,
            symmetric_tolerance: 0.05,
            min_elongation: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarkerCandidate {
    pub position: PixelPoint,
    /// Mean brightness of the pixels that located the candidate, in [0, 1].
    pub brightness_score: f64,
    pub source_blob: usize,
}

struct Weighted {
    centroid: PixelPoint,
    mean: f64,
}

fn weighted_centroid<'a>(
    pixels: impl Iterator<Item = (&'a (u32, u32), f64)>,
) -> Option<Weighted> {
    let (mut su, mut sv, mut sw, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (&(x, y), w) in pixels {
        su += w * x as f64;
        sv += w * y as f64;
        sw += w;
        n += 1;
    }
    (sw > 0.0).then(|| Weighted {
        centroid: PixelPoint::new(su / sw, sv / sw),
        mean: sw / n as f64,
    })
}

fn percentile_threshold(values: &mut [f64], percentile: f64) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = values.len();
    let rank = libm::ceil(percentile.clamp(0.0, 100.0) / 100.0 * n as f64) as usize;
    values[rank.clamp(1, n) - 1]
}

struct Axis {
    mean: (f64, f64),
    dir: (f64, f64),
    /// Ratio of the standard deviations along the major and minor axes.
    elongation: f64,
}

/// Principal axis of the pixel-coordinate covariance.
fn major_axis(pixels: &[(u32, u32)]) -> Axis {
    let n = pixels.len() as f64;
    let (mx, my) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
    let (mx, my) = (mx / n, my / n);
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let (dx, dy) = (x as f64 - mx, y as f64 - my);
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    let theta = 0.5 * math::atan2(2.0 * cxy, cxx - cyy);
    let half_sum = 0.5 * (cxx + cyy);
    let root = math::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
    let minor = half_sum - root;
    let elongation = if minor > 0.0 {
        math::sqrt((half_sum + root) / minor)
    } else {
        f64::INFINITY
    };
    Axis {
        mean: (mx, my),
        dir: (math::cos(theta), math::sin(theta)),
        elongation,
    }
}

/// Intensity-weighted centroid of the whole blob.
pub fn whole_blob_centroid(blob: &Blob, img: &RasterImage) -> Option<PixelPoint> {
    weighted_centroid(blob.pixels.iter().map(|p| (p, img.brightness(p.0, p.1)))).map(|w| w.centroid)
}

/// Locates the light source inside a blob: the brighter of the two ends
/// along the blob's major axis, or the whole-blob centroid when the blob is
/// round or both ends are about equally bright.
pub fn refine_marker(
    blob: &Blob,
    img: &RasterImage,
    source_blob: usize,
    cfg: &RefineConfig,
) -> Result<MarkerCandidate, ImagingError> {
    if blob.pixels.is_empty() {
        return Err(ImagingError::EmptyBlob);
    }
    let axis = major_axis(&blob.pixels);
    if axis.elongation < cfg.min_elongation {
        let whole = whole_blob_centroid(blob, img).ok_or(ImagingError::EmptyEndZone)?;
        return Ok(MarkerCandidate {
            position: whole,
            brightness_score: blob.mean_brightness,
            source_blob,
        });
    }
    let ((mx, my), (ex, ey)) = (axis.mean, axis.dir);
    let samples: Vec<(f64, f64)> = blob
        .pixels
        .iter()
        .map(|&(x, y)| ((x as f64 - mx) * ex + (y as f64 - my) * ey, img.brightness(x, y)))
        .collect();
    let (smin, smax) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.0), hi.max(s.0)));
    let reach = cfg.end_fraction * (smax - smin);

    let zone = |in_zone: &dyn Fn(f64) -> bool| -> Result<Weighted, ImagingError> {
        let mut values: Vec<f64> = samples.iter().filter(|s| in_zone(s.0)).map(|s| s.1).collect();
        if values.is_empty() {
            return Err(ImagingError::EmptyEndZone);
        }
        let threshold = percentile_threshold(&mut values, cfg.brightness_percentile);
        weighted_centroid(
            blob.pixels
                .iter()
                .zip(&samples)
                .filter(|(_, s)| in_zone(s.0) && s.1 >= threshold)
                .map(|(p, s)| (p, s.1)),
        )
        .ok_or(ImagingError::EmptyEndZone)
    };
    let low = zone(&|s| s <= smin + reach)?;
    let high = zone(&|s| s >= smax - reach)?;

    if math::abs(low.mean - high.mean) < cfg.symmetric_tolerance {
        let whole = whole_blob_centroid(blob, img).ok_or(ImagingError::EmptyEndZone)?;
        return Ok(MarkerCandidate {
            position: whole,
            brightness_score: low.mean.max(high.mean),
            source_blob,
        });
    }
    let best = if low.mean > high.mean { low } else { high };
    Ok(MarkerCandidate {
        position: best.centroid,
        brightness_score: best.mean,
        source_blob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{extract_regions, hsv_threshold, HsvThreshold};

    fn render(w: u32, h: u32, f: impl Fn(f64, f64) -> f64) -> RasterImage {
        let mut img = RasterImage::black(w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                let v = (f(x as f64, y as f64).clamp(0.0, 1.0) * 255.0).round() as u8;
                img.set_pixel(x, y, [v, v, v]);
            }
        }
        img
    }

    fn single_blob(img: &RasterImage) -> Blob {
        let t = HsvThreshold { val_min: 0.3, ..HsvThreshold::FULL };
        let mut blobs = extract_regions(&hsv_threshold(img, &t), img, 1);
        assert_eq!(blobs.len(), 1);
        blobs.remove(0)
    }

    #[test]
    fn gaussian_blob_gives_center() {
        let (cu, cv) = (40.3, 31.7);
        let img = render(80, 64, |x, y| {
            0.95 * libm::exp(-((x - cu).powi(2) + (y - cv).powi(2)) / (2.0 * 9.0))
        });
        let blob = single_blob(&img);
        let m = refine_marker(&blob, &img, 0, &RefineConfig::default()).unwrap();
        assert!(m.position.distance(&PixelPoint::new(cu, cv)) < 0.5, "{:?}", m.position);
    }

    #[test]
    fn lopsided_round_blob_is_not_split() {
        let (cu, cv) = (30.4, 25.2);
        let img = render(64, 50, |x, y| {
            let g = libm::exp(-((x - cu).powi(2) + (y - cv).powi(2)) / (2.0 * 9.0));
            0.95 * g * (1.0 + 0.03 * (x - cu)).clamp(0.0, 1.0)
        });
        let blob = single_blob(&img);
        let m = refine_marker(&blob, &img, 0, &RefineConfig::default()).unwrap();
        let whole = whole_blob_centroid(&blob, &img).unwrap();
        assert_eq!(m.position, whole);
        assert!(m.position.distance(&PixelPoint::new(cu, cv)) < 0.5, "{:?}", m.position);
    }

    #[test]
    fn uniform_bar_gives_whole_centroid() {
        let img = render(60, 20, |x, y| if (10.0..=49.0).contains(&x) && (8.0..=11.0).contains(&y) { 0.8 } else { 0.0 });
        let blob = single_blob(&img);
        let m = refine_marker(&blob, &img, 3, &RefineConfig::default()).unwrap();
        assert!((m.position.u - 29.5).abs() < 1e-9 && (m.position.v - 9.5).abs() < 1e-9);
        assert_eq!(m.source_blob, 3);
    }

    #[test]
    fn tapered_bar_picks_bright_end() {
        // Brightness decays linearly from x=10 to x=49.
        let img = render(60, 20, |x, y| {
            if (10.0..=49.0).contains(&x) && (8.0..=11.0).contains(&y) {
                1.0 - 0.015 * (x - 10.0)
            } else {
                0.0
            }
        });
        let blob = single_blob(&img);
        let m = refine_marker(&blob, &img, 0, &RefineConfig::default()).unwrap();
        assert!(m.position.u < 12.0, "{:?}", m.position);
        assert!(blob.bbox.contains_dilated(m.position.u, m.position.v, 1.0));
    }

    #[test]
    fn percentile_nearest_rank() {
        let mut v = [5.0, 1.0, 3.0, 2.0, 4.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile_threshold(&mut v, 90.0), 9.0);
        let mut one = [0.4];
        assert_eq!(percentile_threshold(&mut one, 90.0), 0.4);
    }
}
