//! Image containers and the histogram/mean primitives shared by every stage.
//!
//! Intensities are stored as `f64` in `[0, 1]`. Quantization to 8 bits only
//! happens when frames are read from or written to disk.

mod color;

pub use color::{hsv_to_rgb, lab_luma, rgb_to_hsv, rgb_to_lab_l, HsvPlanes};

use crate::error::{Error, Result};

/// Dense row-major raster with 1 (luminance) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Wraps `data`, checking its length and that every sample is finite and in `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidFrame(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidFrame(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::InvalidFrame(format!(
                "sample {pos} = {} outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a frame from samples that are already known to be valid.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Frame {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Frame::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn gray_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Frame::new(width, height, 1, data)
    }

    pub fn rgb_from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Frame::new(width, height, 3, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// RGB triple at `(x, y)`; a luminance frame returns the value replicated.
    pub fn rgb(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        } else {
            [self.data[i]; 3]
        }
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        assert_eq!(self.channels, 3, "set_rgb on a luminance frame");
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn ensure_single_channel(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                found: self.channels,
            });
        }
        Ok(())
    }

    pub fn ensure_rgb(&self) -> Result<()> {
        if self.channels != 3 {
            return Err(Error::ChannelMismatch {
                expected: 3,
                found: self.channels,
            });
        }
        Ok(())
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other,
            });
        }
        Ok(())
    }

    /// Replicates a luminance frame into three channels; RGB frames are cloned.
    pub fn to_rgb(&self) -> Frame {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Frame::from_raw(self.width, self.height, 3, data)
    }
}

/// Per-pixel foreground flags, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "mask length {} does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`get`](Self::get) but out-of-bounds coordinates read as background.
    pub fn get_or_background(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return false;
        }
        self.bits[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other,
            });
        }
        Ok(())
    }
}

pub const HISTOGRAM_BINS: usize = 256;

/// 256-bin histogram of quantized intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: [u64; HISTOGRAM_BINS],
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

/// Bin index of an intensity: `floor(v * 255)`, with 1.0 landing in the last bin.
pub fn histogram_bin(v: f64) -> usize {
    ((v * 255.0).floor() as usize).min(HISTOGRAM_BINS - 1)
}

pub fn histogram(img: &Frame) -> Result<Histogram> {
    img.ensure_single_channel()?;
    let mut bins = [0u64; HISTOGRAM_BINS];
    for &v in img.data() {
        bins[histogram_bin(v)] += 1;
    }
    Ok(Histogram { bins })
}

/// Arithmetic mean of a luminance image, used as the global threshold level.
pub fn global_mean(img: &Frame) -> Result<f64> {
    img.ensure_single_channel()?;
    if img.data().is_empty() {
        return Err(Error::EmptyImage);
    }
    let data = img.data();
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    // Rounding in the sum can push the mean of a constant image past the
    // constant itself; the true mean never leaves [min, max].
    Ok((data.iter().sum::<f64>() / data.len() as f64).clamp(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_rejects_bad_samples() {
        assert!(Frame::new(2, 1, 1, vec![0.0, 1.5]).is_err());
        assert!(Frame::new(2, 1, 1, vec![0.0, f64::NAN]).is_err());
        assert!(Frame::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Frame::new(1, 1, 2, vec![0.0; 2]).is_err());
    }

    #[test]
    fn mean_of_constant_is_exact() {
        for v in [0.1, 0.3, 0.7, 1.0 / 3.0] {
            let img = Frame::filled(300, 300, 1, v).unwrap();
            assert_eq!(global_mean(&img).unwrap(), v);
        }
    }

    #[test]
    fn histogram_uniform_zero() {
        let img = Frame::filled(10, 10, 1, 0.0).unwrap();
        let h = histogram(&img).unwrap();
        assert_eq!(h.bins[0], 100);
        assert_eq!(h.total(), 100);
    }

    #[test]
    fn histogram_two_values() {
        let img = Frame::gray_from_fn(4, 4, |x, _| if x < 2 { 0.0 } else { 1.0 }).unwrap();
        let h = histogram(&img).unwrap();
        assert_eq!(h.bins[0], 8);
        assert_eq!(h.bins[255], 8);
        assert_eq!(h.total(), 16);
    }

    #[test]
    fn histogram_rejects_rgb() {
        let img = Frame::filled(2, 2, 3, 0.5).unwrap();
        assert!(matches!(
            histogram(&img),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn global_mean_examples() {
        let img = Frame::filled(5, 5, 1, 0.3).unwrap();
        assert!((global_mean(&img).unwrap() - 0.3).abs() < 1e-12);
        let img = Frame::gray_from_fn(4, 4, |x, _| if x % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(global_mean(&img).unwrap(), 0.5);
        let img = Frame::new(3, 1, 1, vec![0.1, 0.2, 0.6]).unwrap();
        assert!((global_mean(&img).unwrap() - 0.3).abs() < 1e-12);
        let empty = Frame::new(0, 0, 1, vec![]).unwrap();
        assert!(matches!(global_mean(&empty), Err(Error::EmptyImage)));
    }

    fn gray_image() -> impl Strategy<Value = Frame> {
        (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            prop::collection::vec(0.0f64..=1.0, w * h)
                .prop_map(move |data| Frame::new(w, h, 1, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn histogram_counts_every_pixel(img in gray_image()) {
            let h = histogram(&img).unwrap();
            prop_assert_eq!(h.total() as usize, img.pixel_count());
            // counting oracle: each bin equals a direct count of matching pixels
            for b in [0usize, 1, 127, 254, 255] {
                let direct = img.data().iter().filter(|v| {
                    let q = (**v * 255.0).floor() as usize;
                    q.min(255) == b
                }).count();
                prop_assert_eq!(h.bins[b] as usize, direct);
            }
        }

        #[test]
        fn global_mean_matches_direct_sum(img in gray_image()) {
            let mut acc = 0.0;
            for v in img.data() {
                acc += v;
            }
            let direct = acc / img.pixel_count() as f64;
            let m = global_mean(&img).unwrap();
            prop_assert!((m - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }
}
