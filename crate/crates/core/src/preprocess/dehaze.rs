//! Dark-channel-prior haze removal with a box-filtered transmission map.
//!
//! Haze model: `I = J * t + A * (1 - t)` per channel, with scene radiance `J`,
//! transmission `t` and atmospheric light `A`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DehazeParams {
    pub patch_radius: usize,
    /// Fraction of haze removed, in `(0, 1]`; 0 disables the correction.
    pub omega: f64,
    pub t_floor: f64,
    /// Top fraction of dark-channel pixels averaged into the atmospheric light.
    pub airlight_fraction: f64,
}

impl Default for DehazeParams {
    fn default() -> Self {
        DehazeParams {
            patch_radius: 7,
            omega: 0.95,
            t_floor: 0.1,
            airlight_fraction: 0.001,
        }
    }
}

impl DehazeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::InvalidParameter(format!(
                "omega must be in [0, 1], got {}",
                self.omega
            )));
        }
        if !(self.t_floor > 0.0 && self.t_floor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_floor must be in (0, 1), got {}",
                self.t_floor
            )));
        }
        if !(self.airlight_fraction > 0.0 && self.airlight_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "airlight_fraction must be in (0, 1], got {}",
                self.airlight_fraction
            )));
        }
        Ok(())
    }
}

/// Separable min filter over a `(2r+1) x (2r+1)` window clamped to the image.
fn min_filter(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let mut rows = vec![0.0; values.len()];
    rows.par_chunks_mut(width)
        .zip(values.par_chunks(width))
        .for_each(|(out, row)| {
            for (x, o) in out.iter_mut().enumerate() {
                let lo = x.saturating_sub(radius);
                let hi = (x + radius).min(width - 1);
                *o = row[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
            }
        });
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, o)| {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(height - 1);
        for (x, v) in o.iter_mut().enumerate() {
            *v = (lo..=hi)
                .map(|yy| rows[yy * width + x])
                .fold(f64::INFINITY, f64::min);
        }
    });
    out
}

/// Mean over a `(2r+1) x (2r+1)` window clamped to the image, via an integral image.
fn box_filter(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let stride = width + 1;
    let mut integral = vec![0.0; stride * (height + 1)];
    for y in 0..height {
        let mut row_sum = 0.0;
        for x in 0..width {
            row_sum += values[y * width + x];
            integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row_sum;
        }
    }
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, o)| {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(height - 1) + 1;
        for (x, v) in o.iter_mut().enumerate() {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius).min(width - 1) + 1;
            let sum = integral[y1 * stride + x1] - integral[y0 * stride + x1]
                - integral[y1 * stride + x0]
                + integral[y0 * stride + x0];
            *v = sum / ((x1 - x0) * (y1 - y0)) as f64;
        }
    });
    out
}

/// Per pixel, the minimum over the clamped patch of the minimum colour component.
pub fn dark_channel(frame: &Frame, patch_radius: usize) -> Result<Frame> {
    frame.ensure_rgb()?;
    let per_pixel: Vec<f64> = frame
        .data()
        .par_chunks(3)
        .map(|px| px[0].min(px[1]).min(px[2]))
        .collect();
    let (w, h) = frame.dims();
    Ok(Frame::from_raw(w, h, 1, min_filter(&per_pixel, w, h, patch_radius)))
}

/// Mean RGB of the pixels whose dark-channel value lies in the top
/// `airlight_fraction` of the frame (at least one pixel). Ties are broken by
/// raster order.
pub fn estimate_atmospheric_light(
    frame: &Frame,
    dark: &Frame,
    airlight_fraction: f64,
) -> Result<[f64; 3]> {
    frame.ensure_rgb()?;
    dark.ensure_single_channel()?;
    frame.ensure_same_dims(dark.dims())?;
    if !(airlight_fraction > 0.0 && airlight_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "airlight_fraction must be in (0, 1], got {airlight_fraction}"
        )));
    }
    let n = frame.pixel_count();
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    let count = ((airlight_fraction * n as f64).ceil() as usize).clamp(1, n);
    let d = dark.data();
    let mut order: Vec<usize> = (0..n).collect();
    let brighter_first = |a: &usize, b: &usize| -> Ordering {
        d[*b].total_cmp(&d[*a]).then(a.cmp(b))
    };
    if count < n {
        order.select_nth_unstable_by(count - 1, brighter_first);
    }
    let mut sum = [0.0; 3];
    for &i in &order[..count] {
        for (c, s) in sum.iter_mut().enumerate() {
            *s += frame.data()[i * 3 + c];
        }
    }
    Ok(sum.map(|s| s / count as f64))
}

/// Intermediate products of [`dehaze_detailed`].
#[derive(Debug, Clone)]
pub struct DehazeOutput {
    pub recovered: Frame,
    /// Refined transmission before the `t_floor` clamp.
    pub transmission: Frame,
    pub atmospheric_light: [f64; 3],
}

pub fn dehaze_detailed(frame: &Frame, params: &DehazeParams) -> Result<DehazeOutput> {
    params.validate()?;
    frame.ensure_rgb()?;
    let (w, h) = frame.dims();
    let dark = dark_channel(frame, params.patch_radius)?;
    let airlight = estimate_atmospheric_light(frame, &dark, params.airlight_fraction)?;

    // Dark channel of I / A; channels with zero airlight take no part.
    let normalized: Vec<f64> = frame
        .data()
        .par_chunks(3)
        .map(|px| {
            let m = (0..3)
                .filter(|&c| airlight[c] > 0.0)
                .map(|c| px[c] / airlight[c])
                .fold(f64::INFINITY, f64::min);
            if m.is_finite() {
                m
            } else {
                0.0
            }
        })
        .collect();
    let normalized_dark = min_filter(&normalized, w, h, params.patch_radius);
    let raw: Vec<f64> = normalized_dark
        .iter()
        .map(|d| 1.0 - params.omega * d)
        .collect();
    let transmission = box_filter(&raw, w, h, params.patch_radius);

    // (I - A) / t + A, written as I + (I - A)(1/t - 1) so that t = 1 is exact.
    let recovered: Vec<f64> = frame
        .data()
        .par_chunks(3)
        .zip(transmission.par_iter())
        .flat_map_iter(|(px, &t)| {
            let gain = 1.0 / t.max(params.t_floor) - 1.0;
            (0..3).map(move |c| {
                if airlight[c] > 0.0 {
                    (px[c] + (px[c] - airlight[c]) * gain).clamp(0.0, 1.0)
                } else {
                    px[c]
                }
            })
        })
        .collect();

    let transmission = transmission.into_iter().map(|t| t.clamp(0.0, 1.0)).collect();
    Ok(DehazeOutput {
        recovered: Frame::from_raw(w, h, 3, recovered),
        transmission: Frame::from_raw(w, h, 1, transmission),
        atmospheric_light: airlight,
    })
}

pub fn dehaze(frame: &Frame, params: &DehazeParams) -> Result<Frame> {
    Ok(dehaze_detailed(frame, params)?.recovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_dark(frame: &Frame, r: usize) -> Vec<f64> {
        let (w, h) = frame.dims();
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut m = f64::INFINITY;
                for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                    for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                        for c in 0..3 {
                            m = m.min(frame.get(xx, yy, c));
                        }
                    }
                }
                out.push(m);
            }
        }
        out
    }

    #[test]
    fn white_frame_dark_channel_is_one() {
        let f = Frame::filled(6, 4, 3, 1.0).unwrap();
        assert!(dark_channel(&f, 2).unwrap().data().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn radius_zero_is_channel_min() {
        let f = Frame::rgb_from_fn(5, 3, |x, y| [0.5, x as f64 / 10.0, y as f64 / 5.0]).unwrap();
        let d = dark_channel(&f, 0).unwrap();
        for y in 0..3 {
            for x in 0..5 {
                let [r, g, b] = f.rgb(x, y);
                assert_eq!(d.get(x, y, 0), r.min(g).min(b));
            }
        }
    }

    #[test]
    fn black_pixel_neighbourhood() {
        let f = Frame::rgb_from_fn(5, 5, |x, y| if (x, y) == (2, 1) { [0.0; 3] } else { [0.8, 0.7, 0.9] })
            .unwrap();
        let d = dark_channel(&f, 1).unwrap();
        assert_eq!(d.data(), brute_dark(&f, 1).as_slice());
        for y in 0..5usize {
            for x in 0..5usize {
                let near = x.abs_diff(2) <= 1 && y.abs_diff(1) <= 1;
                assert_eq!(d.get(x, y, 0) == 0.0, near);
            }
        }
    }

    #[test]
    fn airlight_uniform_and_global() {
        let f = Frame::filled(8, 8, 3, 0.3).unwrap();
        let d = dark_channel(&f, 1).unwrap();
        assert_eq!(estimate_atmospheric_light(&f, &d, 0.01).unwrap(), [0.3; 3]);

        let f = Frame::rgb_from_fn(4, 4, |x, y| [x as f64 / 4.0, y as f64 / 4.0, 0.5]).unwrap();
        let d = dark_channel(&f, 0).unwrap();
        let a = estimate_atmospheric_light(&f, &d, 1.0).unwrap();
        let mean = |c: usize| (0..16).map(|i| f.data()[i * 3 + c]).sum::<f64>() / 16.0;
        for (c, v) in a.iter().enumerate() {
            assert!((v - mean(c)).abs() < 1e-12);
        }
    }

    #[test]
    fn airlight_picks_bright_region() {
        // 20x20 frame, 4x4 hazy bright block; fraction selects exactly 16 pixels.
        let f = Frame::rgb_from_fn(20, 20, |x, y| {
            if (8..12).contains(&x) && (8..12).contains(&y) {
                [0.9, 0.92, 0.95]
            } else {
                [0.4, 0.2, 0.1]
            }
        })
        .unwrap();
        let d = dark_channel(&f, 0).unwrap();
        let a = estimate_atmospheric_light(&f, &d, 16.0 / 400.0).unwrap();
        // quantile oracle: full sort of the dark channel, take the top 16
        let mut idx: Vec<usize> = (0..400).collect();
        idx.sort_by(|a, b| d.data()[*b].total_cmp(&d.data()[*a]).then(a.cmp(b)));
        let mut expected = [0.0; 3];
        for &i in &idx[..16] {
            for c in 0..3 {
                expected[c] += f.data()[i * 3 + c] / 16.0;
            }
        }
        for c in 0..3 {
            assert!((a[c] - expected[c]).abs() < 1e-12);
        }
        assert!((a[2] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn omega_zero_is_identity() {
        let f = Frame::rgb_from_fn(9, 9, |x, y| [x as f64 / 9.0, y as f64 / 9.0, 0.7]).unwrap();
        let params = DehazeParams {
            omega: 0.0,
            patch_radius: 2,
            ..DehazeParams::default()
        };
        assert_eq!(dehaze(&f, &params).unwrap(), f);
    }

    #[test]
    fn haze_free_frame_with_black_patches_is_nearly_unchanged() {
        // 33 px so the last column/row is a bar too: every clamped 5x5 patch sees black.
        let f = Frame::rgb_from_fn(33, 33, |x, y| {
            if x % 4 == 0 || y % 4 == 0 {
                [0.0; 3]
            } else {
                [0.6, 0.5, 0.4]
            }
        })
        .unwrap();
        let params = DehazeParams {
            patch_radius: 2,
            ..DehazeParams::default()
        };
        let out = dehaze(&f, &params).unwrap();
        let mae = out
            .data()
            .iter()
            .zip(f.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / f.data().len() as f64;
        assert!(mae < 1e-9, "{mae}");
    }

    #[test]
    fn zero_airlight_channel_passes_through() {
        let f = Frame::rgb_from_fn(6, 6, |x, _| [0.2 + x as f64 * 0.1, 0.5, 0.0]).unwrap();
        let out = dehaze(&f, &DehazeParams { patch_radius: 1, ..DehazeParams::default() }).unwrap();
        for i in 0..36 {
            assert_eq!(out.data()[i * 3 + 2], 0.0);
        }
    }

    #[test]
    fn rehaze_reproduces_input() {
        // Hazy frame with dark structure; re-apply the estimated (t, A).
        let f = Frame::rgb_from_fn(40, 40, |x, y| {
            let j = if (x / 3 + y / 5) % 3 == 0 { 0.05 } else { 0.5 + 0.01 * (x % 7) as f64 };
            let t = 0.7;
            let a = 0.85;
            let v = j * t + a * (1.0 - t);
            [v, v * 0.95, v * 0.9]
        })
        .unwrap();
        let params = DehazeParams {
            patch_radius: 3,
            ..DehazeParams::default()
        };
        let out = dehaze_detailed(&f, &params).unwrap();
        let a = out.atmospheric_light;
        let mut checked = 0;
        for i in 0..f.pixel_count() {
            let t = out.transmission.data()[i];
            if t <= params.t_floor {
                continue;
            }
            for c in 0..3 {
                let j = out.recovered.data()[i * 3 + c];
                if j <= 0.0 || j >= 1.0 {
                    continue;
                }
                let rehazed = j * t + a[c] * (1.0 - t);
                assert!((rehazed - f.data()[i * 3 + c]).abs() < 1e-6);
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn invalid_params_rejected() {
        let f = Frame::filled(4, 4, 3, 0.5).unwrap();
        for bad in [
            DehazeParams { omega: 1.5, ..DehazeParams::default() },
            DehazeParams { t_floor: 0.0, ..DehazeParams::default() },
            DehazeParams { airlight_fraction: 0.0, ..DehazeParams::default() },
        ] {
            assert!(dehaze(&f, &bad).is_err());
        }
        assert!(dark_channel(&Frame::filled(2, 2, 1, 0.5).unwrap(), 1).is_err());
    }

    fn rgb_image() -> impl Strategy<Value = Frame> {
        (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            prop::collection::vec(0.0f64..=1.0, w * h * 3)
                .prop_map(move |data| Frame::new(w, h, 3, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn dark_channel_bounds_and_monotone(f in rgb_image(), r in 0usize..4) {
            let d = dark_channel(&f, r).unwrap();
            let expected = brute_dark(&f, r);
            prop_assert_eq!(d.data(), expected.as_slice());
            let wider = dark_channel(&f, r + 1).unwrap();
            for y in 0..f.height() {
                for x in 0..f.width() {
                    let [a, b, c] = f.rgb(x, y);
                    prop_assert!(d.get(x, y, 0) <= a.min(b).min(c));
                    prop_assert!(wider.get(x, y, 0) <= d.get(x, y, 0));
                }
            }
        }

        #[test]
        fn box_filter_matches_direct_mean(
            w in 1usize..10, h in 1usize..10, r in 0usize..4, seed in 0u64..1000
        ) {
            let values: Vec<f64> = (0..w * h).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0).collect();
            let out = box_filter(&values, w, h, r);
            for y in 0..h {
                for x in 0..w {
                    let mut s = 0.0;
                    let mut n = 0;
                    for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                        for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                            s += values[yy * w + xx];
                            n += 1;
                        }
                    }
                    prop_assert!((out[y * w + x] - s / n as f64).abs() < 1e-12);
                }
            }
        }
    }
}
