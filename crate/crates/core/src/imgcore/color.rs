use rayon::prelude::*;

use super::Frame;
use crate::error::Result;

/// Hexcone RGB to HSV. Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > 0.0 { chroma / max } else { 0.0 };
    if chroma == 0.0 {
        return [0.0, s, max];
    }
    let sector = if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    let mut h = 60.0 * sector;
    if h >= 360.0 {
        h -= 360.0;
    }
    [h, s, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let chroma = v * s;
    let sector = (h / 60.0).rem_euclid(6.0);
    let x = chroma * (1.0 - ((sector % 2.0) - 1.0).abs());
    let (r, g, b) = match sector as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v - chroma;
    [
        (r + m).clamp(0.0, 1.0),
        (g + m).clamp(0.0, 1.0),
        (b + m).clamp(0.0, 1.0),
    ]
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// CIE L* of an sRGB (D65) colour, rescaled from `[0, 100]` to `[0, 1]`.
pub fn rgb_to_lab_l([r, g, b]: [f64; 3]) -> f64 {
    const EPSILON: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    // Y row of the sRGB -> XYZ matrix; white maps to Y = 1 (Yn for D65).
    let y = 0.2126 * srgb_to_linear(r) + 0.7152 * srgb_to_linear(g) + 0.0722 * srgb_to_linear(b);
    let l = if y > EPSILON {
        116.0 * y.cbrt() - 16.0
    } else {
        KAPPA * y
    };
    (l / 100.0).clamp(0.0, 1.0)
}

/// Lab L channel of a whole frame. A luminance frame is treated as gray RGB.
pub fn lab_luma(frame: &Frame) -> Frame {
    let channels = frame.channels();
    let data: Vec<f64> = frame
        .data()
        .par_chunks(channels)
        .map(|px| {
            if channels == 3 {
                rgb_to_lab_l([px[0], px[1], px[2]])
            } else {
                rgb_to_lab_l([px[0]; 3])
            }
        })
        .collect();
    Frame::from_raw(frame.width(), frame.height(), 1, data)
}

/// A frame split into separate hue, saturation and value planes.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvPlanes {
    pub hue: Vec<f64>,
    pub saturation: Vec<f64>,
    pub value: Frame,
}

impl HsvPlanes {
    pub fn from_rgb(frame: &Frame) -> Result<Self> {
        frame.ensure_rgb()?;
        let hsv: Vec<[f64; 3]> = frame
            .data()
            .par_chunks(3)
            .map(|px| rgb_to_hsv([px[0], px[1], px[2]]))
            .collect();
        let hue = hsv.iter().map(|p| p[0]).collect();
        let saturation = hsv.iter().map(|p| p[1]).collect();
        let value = hsv.iter().map(|p| p[2]).collect();
        Ok(HsvPlanes {
            hue,
            saturation,
            value: Frame::from_raw(frame.width(), frame.height(), 1, value),
        })
    }

    pub fn to_rgb(&self) -> Frame {
        let data: Vec<f64> = (0..self.hue.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                hsv_to_rgb([self.hue[i], self.saturation[i], self.value.data()[i]])
            })
            .collect();
        Frame::from_raw(self.value.width(), self.value.height(), 3, data)
    }
}
