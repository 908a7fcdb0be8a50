use super::{BinaryMask, RasterImage};

/// Inclusive HSV acceptance box. Hue in degrees; the interval wraps through
/// 360 when `hue_min > hue_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HsvThreshold {
    pub hue_min: f64,
    pub hue_max: f64,
    pub sat_min: f64,
    pub sat_max: f64,
    pub val_min: f64,
    pub val_max: f64,
}

impl HsvThreshold {
    /// Accepts every pixel.
    pub const FULL: HsvThreshold = HsvThreshold {
        hue_min: 0.0,
        hue_max: 360.0,
        sat_min: 0.0,
        sat_max: 1.0,
        val_min: 0.0,
        val_max: 1.0,
    };

    pub fn is_valid(&self) -> bool {
        let unit = |a: f64, b: f64| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a <= b;
        let hue = |h: f64| (0.0..=360.0).contains(&h);
        unit(self.sat_min, self.sat_max)
            && unit(self.val_min, self.val_max)
            && hue(self.hue_min)
            && hue(self.hue_max)
    }

    pub fn contains(&self, h: f64, s: f64, v: f64) -> bool {
        let hue_ok = if self.hue_min <= self.hue_max {
            h >= self.hue_min && h <= self.hue_max
        } else {
            h >= self.hue_min || h <= self.hue_max
        };
        hue_ok && s >= self.sat_min && s <= self.sat_max && v >= self.val_min && v <= self.val_max
    }
}

/// Threshold presets for the lighting conditions the lights are used in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EnvironmentPreset {
    CaveNight,
    TurbidDay,
    ClearDay,
    ClearNight,
}

impl EnvironmentPreset {
    pub const ALL: [EnvironmentPreset; 4] = [
        EnvironmentPreset::CaveNight,
        EnvironmentPreset::TurbidDay,
        EnvironmentPreset::ClearDay,
        EnvironmentPreset::ClearNight,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EnvironmentPreset::CaveNight => "cave_night",
            EnvironmentPreset::TurbidDay => "turbid_day",
            EnvironmentPreset::ClearDay => "clear_day",
            EnvironmentPreset::ClearNight => "clear_night",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn threshold(&self) -> HsvThreshold {
        let base = HsvThreshold::FULL;
        match self {
            // No ambient light: anything moderately bright is a light.
            EnvironmentPreset::CaveNight => HsvThreshold { val_min: 0.3, ..base },
            EnvironmentPreset::ClearNight => HsvThreshold { val_min: 0.35, ..base },
            // Daylight washes out color; keep only near-white, very bright pixels.
            EnvironmentPreset::TurbidDay => HsvThreshold {
                sat_max: 0.35,
                val_min: 0.7,
                ..base
            },
            EnvironmentPreset::ClearDay => HsvThreshold {
                sat_max: 0.25,
                val_min: 0.85,
                ..base
            },
        }
    }
}

impl core::str::FromStr for EnvironmentPreset {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::from_name(s).ok_or(())
    }
}

/// 8-bit RGB to (hue degrees in [0, 360), saturation, value). Achromatic
/// pixels get hue 0.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let mut h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

pub fn hsv_threshold(img: &RasterImage, t: &HsvThreshold) -> BinaryMask {
    let mut mask = BinaryMask::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (h, s, v) = rgb_to_hsv(img.pixel(x, y));
            if t.contains(h, s, v) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}
