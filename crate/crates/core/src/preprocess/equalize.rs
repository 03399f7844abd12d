//! Two-direction illumination equalization on a luminance plane.
//!
//! Each row is shifted by `a_j * (r - l)` where `l`/`r` are the mean
//! luminances of the `(2p+1) x (2q+1)` windows flush with the left and right
//! image edges, centred on that row. `a_j` runs linearly from `+1/2` at the
//! first column to `-1/2` at the last, so the two edges meet at their common
//! mean. The vertical pass does the same with top/bottom windows per column.
//! Rows (columns) closer than `p` (`q`) to the border reuse the nearest
//! window that fits inside the image.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{Frame, HsvPlanes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizationParams {
    /// Half-height of the local window.
    pub p: usize,
    /// Half-width of the local window.
    pub q: usize,
}

impl Default for EqualizationParams {
    fn default() -> Self {
        EqualizationParams { p: 7, q: 7 }
    }
}

impl EqualizationParams {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.p < 1 || self.q < 1 {
            return Err(Error::InvalidParameter(format!(
                "equalization p and q must be >= 1 (p={}, q={})",
                self.p, self.q
            )));
        }
        if 2 * self.p + 1 > height || 2 * self.q + 1 > width {
            return Err(Error::InvalidParameter(format!(
                "equalization window {}x{} does not fit a {width}x{height} image",
                2 * self.q + 1,
                2 * self.p + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMeans {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

/// `a_j` for 0-based index `j` along an axis of length `len`.
pub fn correction_coefficient(j: usize, len: usize) -> f64 {
    (len as f64 - 2.0 * j as f64 - 1.0) / (2.0 * (len as f64 - 1.0))
}

fn window_center(index: usize, half: usize, len: usize) -> usize {
    index.clamp(half, len - 1 - half)
}

fn check_plane(luma: &Frame, params: &EqualizationParams) -> Result<()> {
    luma.ensure_single_channel()?;
    params.validate(luma.width(), luma.height())
}

/// Mean of the rectangle `[x0, x1] x [y0, y1]` (inclusive).
fn rect_mean(luma: &Frame, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
    let w = luma.width();
    let data = luma.data();
    let mut sum = 0.0;
    for y in y0..=y1 {
        sum += data[y * w + x0..=y * w + x1].iter().sum::<f64>();
    }
    sum / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
}

/// Left and right edge means for `row` (clamped to the valid window centres).
pub fn row_edge_means(luma: &Frame, params: &EqualizationParams, row: usize) -> Result<(f64, f64)> {
    check_plane(luma, params)?;
    let (n, m) = luma.dims();
    let c = window_center(row.min(m - 1), params.p, m);
    let left = rect_mean(luma, 0, 2 * params.q, c - params.p, c + params.p);
    let right = rect_mean(luma, n - 1 - 2 * params.q, n - 1, c - params.p, c + params.p);
    Ok((left, right))
}

/// Top and bottom edge means for `col` (clamped to the valid window centres).
pub fn column_edge_means(
    luma: &Frame,
    params: &EqualizationParams,
    col: usize,
) -> Result<(f64, f64)> {
    check_plane(luma, params)?;
    let (n, m) = luma.dims();
    let c = window_center(col.min(n - 1), params.q, n);
    let top = rect_mean(luma, c - params.q, c + params.q, 0, 2 * params.p);
    let bottom = rect_mean(luma, c - params.q, c + params.q, m - 1 - 2 * params.p, m - 1);
    Ok((top, bottom))
}

/// Edge means for row `index` (left/right) and column `index` (top/bottom).
pub fn edge_means(luma: &Frame, params: &EqualizationParams, index: usize) -> Result<EdgeMeans> {
    let (left, right) = row_edge_means(luma, params, index)?;
    let (top, bottom) = column_edge_means(luma, params, index)?;
    Ok(EdgeMeans {
        left,
        right,
        top,
        bottom,
    })
}

/// Sliding sums over windows of `2 * half + 1` consecutive entries of `values`,
/// one per valid centre `half..len - half`.
fn sliding_sums(values: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (half..values.len() - half)
        .map(|c| prefix[c + half + 1] - prefix[c - half])
        .collect()
}

/// Per-row `r - l`, computed with one running sum per edge band.
fn row_differences(luma: &Frame, params: &EqualizationParams) -> Vec<f64> {
    let (n, m) = luma.dims();
    let (p, q) = (params.p, params.q);
    let data = luma.data();
    let band = |x0: usize| -> Vec<f64> {
        (0..m)
            .map(|y| data[y * n + x0..=y * n + x0 + 2 * q].iter().sum())
            .collect()
    };
    let left = sliding_sums(&band(0), p);
    let right = sliding_sums(&band(n - 1 - 2 * q), p);
    let area = ((2 * p + 1) * (2 * q + 1)) as f64;
    (0..m)
        .map(|i| {
            let k = window_center(i, p, m) - p;
            right[k] / area - left[k] / area
        })
        .collect()
}

/// Per-column `b - t`.
fn column_differences(luma: &Frame, params: &EqualizationParams) -> Vec<f64> {
    let (n, m) = luma.dims();
    let (p, q) = (params.p, params.q);
    let data = luma.data();
    let band = |y0: usize| -> Vec<f64> {
        let mut sums = vec![0.0; n];
        for y in y0..=y0 + 2 * p {
            for (s, v) in sums.iter_mut().zip(&data[y * n..(y + 1) * n]) {
                *s += v;
            }
        }
        sums
    };
    let top = sliding_sums(&band(0), q);
    let bottom = sliding_sums(&band(m - 1 - 2 * p), q);
    let area = ((2 * p + 1) * (2 * q + 1)) as f64;
    (0..n)
        .map(|j| {
            let k = window_center(j, q, n) - q;
            bottom[k] / area - top[k] / area
        })
        .collect()
}

/// Horizontal pass without the final clamp to `[0, 1]`.
pub fn equalize_horizontal_unclamped(luma: &Frame, params: &EqualizationParams) -> Result<Vec<f64>> {
    luma.ensure_single_channel()?;
    if luma.width() < 2 {
        return Err(Error::InvalidParameter(
            "horizontal equalization needs at least two columns".into(),
        ));
    }
    check_plane(luma, params)?;
    let n = luma.width();
    let diffs = row_differences(luma, params);
    let coeffs: Vec<f64> = (0..n).map(|j| correction_coefficient(j, n)).collect();
    let mut out = luma.data().to_vec();
    out.par_chunks_mut(n)
        .zip(diffs.par_iter())
        .for_each(|(row, d)| {
            for (v, a) in row.iter_mut().zip(&coeffs) {
                *v += a * d;
            }
        });
    Ok(out)
}

/// Vertical pass without the final clamp to `[0, 1]`.
pub fn equalize_vertical_unclamped(luma: &Frame, params: &EqualizationParams) -> Result<Vec<f64>> {
    luma.ensure_single_channel()?;
    if luma.height() < 2 {
        return Err(Error::InvalidParameter(
            "vertical equalization needs at least two rows".into(),
        ));
    }
    check_plane(luma, params)?;
    let (n, m) = luma.dims();
    let diffs = column_differences(luma, params);
    let mut out = luma.data().to_vec();
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let a = correction_coefficient(i, m);
        for (v, d) in row.iter_mut().zip(&diffs) {
            *v += a * d;
        }
    });
    Ok(out)
}

fn clamped(luma: &Frame, data: Vec<f64>) -> Frame {
    let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Frame::from_raw(luma.width(), luma.height(), 1, data)
}

pub fn equalize_horizontal(luma: &Frame, params: &EqualizationParams) -> Result<Frame> {
    Ok(clamped(luma, equalize_horizontal_unclamped(luma, params)?))
}

pub fn equalize_vertical(luma: &Frame, params: &EqualizationParams) -> Result<Frame> {
    Ok(clamped(luma, equalize_vertical_unclamped(luma, params)?))
}

/// Horizontal then vertical equalization of a luminance plane.
pub fn equalize_luma(luma: &Frame, params: &EqualizationParams) -> Result<Frame> {
    equalize_vertical(&equalize_horizontal(luma, params)?, params)
}

/// Equalizes the HSV value channel, leaving hue and saturation untouched.
pub fn equalize_hsv(planes: &HsvPlanes, params: &EqualizationParams) -> Result<HsvPlanes> {
    Ok(HsvPlanes {
        hue: planes.hue.clone(),
        saturation: planes.saturation.clone(),
        value: equalize_luma(&planes.value, params)?,
    })
}

/// Full illumination equalization. RGB frames go through HSV and only V is
/// corrected; single-channel frames are treated as the V plane directly.
pub fn illumination_equalize(frame: &Frame, params: &EqualizationParams) -> Result<Frame> {
    if frame.channels() == 1 {
        return equalize_luma(frame, params);
    }
    let planes = HsvPlanes::from_rgb(frame)?;
    Ok(equalize_hsv(&planes, params)?.to_rgb())
}
