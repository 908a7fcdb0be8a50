//! Raster rendering of landmark beams and scattering artifacts.

use bocl_core::camera::CameraIntrinsics;
use bocl_core::imaging::RasterImage;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{poisson, substream, ImageSource, Node, NoiseModel, PointLabel, Stream};

/// Water background, per channel, in units of full scale.
const BACKGROUND: [f64; 3] = [8.0 / 255.0, 24.0 / 255.0, 40.0 / 255.0];
const CAUSTIC_WIDTH: f64 = 1.2;
/// Intensity below which a beam's tail is not drawn.
const CUTOFF: f64 = 1e-3;

fn add_beam(buf: &mut [f64], w: usize, h: usize, s: &ImageSource, noise: &NoiseModel) {
    let sigma = noise.beam_width;
    let elong = noise.beam_elongation;
    let [dx, dy] = s.direction;
    let ahead = if elong > 0.0 {
        elong * (s.peak / CUTOFF).ln().max(0.0)
    } else {
        4.0 * sigma
    };
    let behind = 4.0 * sigma;
    let side = 4.0 * sigma;
    let (cu, cv) = (s.pixel.u, s.pixel.v);
    let corners = [
        (cu - dx * behind - dy * side, cv - dy * behind + dx * side),
        (cu - dx * behind + dy * side, cv - dy * behind - dx * side),
        (cu + dx * ahead - dy * side, cv + dy * ahead + dx * side),
        (cu + dx * ahead + dy * side, cv + dy * ahead - dx * side),
    ];
    let clamp_x = |x: f64| x.clamp(0.0, (w - 1) as f64) as usize;
    let clamp_y = |y: f64| y.clamp(0.0, (h - 1) as f64) as usize;
    let x0 = clamp_x(corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min).floor());
    let x1 = clamp_x(corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max).ceil());
    let y0 = clamp_y(corners.iter().map(|c| c.1).fold(f64::INFINITY, f64::min).floor());
    let y1 = clamp_y(corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max).ceil());
    let two_s2 = 2.0 * sigma * sigma;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (px, py) = (x as f64 - cu, y as f64 - cv);
            let along = px * dx + py * dy;
            let perp = -px * dy + py * dx;
            let axial = if along > 0.0 && elong > 0.0 {
                (-along / elong).exp()
            } else {
                (-along * along / two_s2).exp()
            };
            buf[y * w + x] += s.peak * (-perp * perp / two_s2).exp() * axial;
        }
    }
}

/// A gently curved bright ridge centered on the source.
fn add_caustic(buf: &mut [f64], w: usize, h: usize, s: &ImageSource, length: f64, bend: f64) {
    let [dx, dy] = s.direction;
    let two_s2 = 2.0 * CAUSTIC_WIDTH * CAUSTIC_WIDTH;
    let reach = (3.0 * CAUSTIC_WIDTH).ceil() as i64;
    let steps = (length * 2.0) as i64;
    for k in -steps / 2..=steps / 2 {
        let t = k as f64 * 0.5;
        let off = bend * t * t / length;
        let cu = s.pixel.u + t * dx - off * dy;
        let cv = s.pixel.v + t * dy + off * dx;
        let (iu, iv) = (cu.round() as i64, cv.round() as i64);
        for y in iv - reach..=iv + reach {
            for x in iu - reach..=iu + reach {
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let d2 = (x as f64 - cu).powi(2) + (y as f64 - cv).powi(2);
                let i = (y as usize) * w + x as usize;
                buf[i] = buf[i].max(s.peak * (-d2 / two_s2).exp());
            }
        }
    }
}

/// Renders one image: beams for every physical source, ridges for caustics,
/// snow speckle and per-channel Gaussian noise.
pub fn render_beam_image(
    sources: &[ImageSource],
    intrinsics: &CameraIntrinsics,
    noise: &NoiseModel,
    frame_index: u64,
    observer: Node,
) -> RasterImage {
    let (w, h) = (intrinsics.image_width as usize, intrinsics.image_height as usize);
    let mut rng = substream(noise.rng_seed, Stream::Render, frame_index * 2 + observer as u64);
    let mut buf = vec![0.0f64; w * h];
    let mut ridges = Vec::new();
    for s in sources {
        if s.label == PointLabel::Caustic {
            ridges.push(s);
        } else {
            add_beam(&mut buf, w, h, s, noise);
        }
    }
    for s in ridges {
        let length = rng.gen_range(30.0..80.0);
        let bend = rng.gen_range(-0.3..0.3);
        add_caustic(&mut buf, w, h, s, length, bend);
    }
    for _ in 0..poisson(&mut rng, noise.snow_rate) {
        let x = rng.gen_range(0..w);
        let y = rng.gen_range(0..h);
        let i = y * w + x;
        buf[i] = buf[i].max(rng.gen_range(0.35..0.7));
    }
    let normal = (noise.intensity_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, noise.intensity_noise_sigma).expect("finite sigma"));
    let mut bytes = Vec::with_capacity(w * h * 3);
    for &i in &buf {
        let i = i.min(1.0);
        for bg in BACKGROUND {
            let mut c = bg + i * (1.0 - bg);
            if let Some(n) = &normal {
                c += n.sample(&mut rng);
            }
            bytes.push((c.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    RasterImage::new(w as u32, h as u32, bytes).expect("buffer sized to the image")
}

#[cfg(test)]
mod tests {
    use super::*;
    use bocl_core::camera::PixelPoint;

    fn source(u: f64, v: f64, direction: [f64; 2]) -> ImageSource {
        ImageSource {
            label: PointLabel::LandmarkLeft,
            pixel: PixelPoint::new(u, v),
            world: None,
            peak: 0.95,
            direction,
        }
    }

    fn small() -> CameraIntrinsics {
        CameraIntrinsics::new(200.0, 200.0, 100.0, 80.0, 200, 160).unwrap()
    }

    #[test]
    fn brightest_pixel_is_the_source() {
        let noise = NoiseModel {
            beam_elongation: 40.0,
            ..NoiseModel::zero(1)
        };
        let img = render_beam_image(&[source(60.0, 70.0, [0.8, 0.6])], &small(), &noise, 0, Node::A);
        let mut best = (0.0, 0, 0);
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.brightness(x, y) > best.0 {
                    best = (img.brightness(x, y), x, y);
                }
            }
        }
        assert_eq!((best.1, best.2), (60, 70));
        // The tail extends along the beam direction, not behind it.
        assert!(img.brightness(60 + 16, 70 + 12) > img.brightness(60 - 16, 70 - 12));
    }

    #[test]
    fn zero_elongation_is_symmetric() {
        let img = render_beam_image(&[source(100.0, 80.0, [1.0, 0.0])], &small(), &NoiseModel::zero(1), 0, Node::A);
        for d in 1..6 {
            assert_eq!(img.pixel(100 + d, 80), img.pixel(100 - d, 80));
            assert_eq!(img.pixel(100, 80 + d), img.pixel(100, 80 - d));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let noise = NoiseModel {
            snow_rate: 50.0,
            intensity_noise_sigma: 0.02,
            ..NoiseModel::zero(4)
        };
        let s = [source(50.0, 50.0, [0.0, 1.0])];
        let a = render_beam_image(&s, &small(), &noise, 3, Node::B);
        let b = render_beam_image(&s, &small(), &noise, 3, Node::B);
        assert_eq!(a, b);
        let c = render_beam_image(&s, &small(), &noise, 4, Node::B);
        assert_ne!(a, c);
    }
}
