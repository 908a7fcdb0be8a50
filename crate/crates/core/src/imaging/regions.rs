use alloc::vec::Vec;

use super::{BinaryMask, RasterImage};

/// Inclusive pixel-index rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BoundingBox {
    /// Containment test after growing the box by `margin` pixels.
    pub fn contains_dilated(&self, u: f64, v: f64, margin: f64) -> bool {
        u >= self.x_min as f64 - margin
            && u <= self.x_max as f64 + margin
            && v >= self.y_min as f64 - margin
            && v <= self.y_max as f64 + margin
    }
}

/// One 8-connected region of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub pixels: Vec<(u32, u32)>,
    pub bbox: BoundingBox,
    pub area: usize,
    /// Mean HSV value of the member pixels in the source image.
    pub mean_brightness: f64,
}

fn label_components(mask: &BinaryMask) -> Vec<Vec<(u32, u32)>> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = alloc::vec![false; w as usize * h as usize];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y as usize * w as usize + x as usize;
            if seen[idx] || !mask.get(x, y) {
                continue;
            }
            seen[idx] = true;
            stack.push((x, y));
            let mut pixels = Vec::new();
            while let Some((px, py)) = stack.pop() {
                pixels.push((px, py));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (nx, ny) = (px as i64 + dx, py as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as u32, ny as u32);
                        let nidx = ny as usize * w as usize + nx as usize;
                        if !seen[nidx] && mask.get(nx, ny) {
                            seen[nidx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            pixels.sort_unstable_by_key(|&(x, y)| (y, x));
            components.push(pixels);
        }
    }
    components
}

#[cfg(test)]
pub(crate) fn count_components(mask: &BinaryMask) -> usize {
    label_components(mask).len()
}

/// 8-connected regions with at least `min_area` pixels, in raster order of
/// their first pixel.
pub fn extract_regions(mask: &BinaryMask, img: &RasterImage, min_area: usize) -> Vec<Blob> {
    label_components(mask)
        .into_iter()
        .filter(|px| px.len() >= min_area.max(1))
        .map(|pixels| {
            let mut bbox = BoundingBox {
                x_min: u32::MAX,
                y_min: u32::MAX,
                x_max: 0,
                y_max: 0,
            };
            let mut sum = 0.0;
            for &(x, y) in &pixels {
                bbox.x_min = bbox.x_min.min(x);
                bbox.y_min = bbox.y_min.min(y);
                bbox.x_max = bbox.x_max.max(x);
                bbox.y_max = bbox.y_max.max(y);
                sum += img.brightness(x, y);
            }
            Blob {
                area: pixels.len(),
                mean_brightness: sum / pixels.len() as f64,
                pixels,
                bbox,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask() {
        let img = RasterImage::black(10, 10).unwrap();
        assert!(extract_regions(&BinaryMask::new(10, 10), &img, 1).is_empty());
    }

    #[test]
    fn two_squares() {
        let mut img = RasterImage::black(40, 30).unwrap();
        let mut m = BinaryMask::new(40, 30);
        for (x0, y0) in [(2u32, 3u32), (20, 15)] {
            for y in y0..y0 + 5 {
                for x in x0..x0 + 5 {
                    m.set(x, y, true);
                    img.set_pixel(x, y, [255, 255, 255]);
                }
            }
        }
        let blobs = extract_regions(&m, &img, 9);
        assert_eq!(blobs.len(), 2);
        assert_eq!(blobs[0].bbox, BoundingBox { x_min: 2, y_min: 3, x_max: 6, y_max: 7 });
        assert_eq!(blobs[1].bbox, BoundingBox { x_min: 20, y_min: 15, x_max: 24, y_max: 19 });
        assert_eq!(blobs[0].area, 25);
        assert_eq!(blobs[0].mean_brightness, 1.0);
    }

    #[test]
    fn diagonal_pixels_connect_and_small_regions_drop() {
        let img = RasterImage::black(10, 10).unwrap();
        let mut m = BinaryMask::new(10, 10);
        m.set(1, 1, true);
        m.set(2, 2, true);
        m.set(8, 8, true);
        let blobs = extract_regions(&m, &img, 2);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area, 2);
    }
}
