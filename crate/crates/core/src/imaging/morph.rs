use alloc::vec::Vec;

use super::BinaryMask;

fn disc(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

/// Dilation then erosion with a disc of the given radius. Pixels outside the
/// image count as set during erosion, so the result always contains the input.
pub fn morph_close(mask: &BinaryMask, kernel_radius: u32) -> BinaryMask {
    let se = disc(kernel_radius.max(1));
    let (w, h) = (mask.width() as i64, mask.height() as i64);

    let mut dilated = BinaryMask::new(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            for &(dx, dy) in &se {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    dilated.set(nx as u32, ny as u32, true);
                }
            }
        }
    }

    let mut closed = BinaryMask::new(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !dilated.get(x as u32, y as u32) {
                continue;
            }
            let keep = se.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx < 0 || ny < 0 || nx >= w || ny >= h || dilated.get(nx as u32, ny as u32)
            });
            if keep {
                closed.set(x as u32, y as u32, true);
            }
        }
    }
    closed
}
