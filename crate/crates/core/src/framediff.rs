//! Differencing against a fixed reference frame and global-mean thresholding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::{global_mean, lab_luma, BinaryMask, Frame};

/// Lab L of the first pre-processed frame. Never updated afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrame {
    luma: Frame,
}

impl ReferenceFrame {
    pub fn luma(&self) -> &Frame {
        &self.luma
    }
}

/// Write-once holder for the reference frame.
#[derive(Debug, Default)]
pub struct ReferenceStore {
    reference: Option<ReferenceFrame>,
}

impl ReferenceStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the Lab L channel of `frame`. Fails if a reference already exists.
    pub fn set_reference(&mut self, frame: &Frame) -> Result<&ReferenceFrame> {
        self.set_reference_luma(lab_luma(frame))
    }

    /// Stores an already-converted luminance plane as the reference.
    pub fn set_reference_luma(&mut self, luma: Frame) -> Result<&ReferenceFrame> {
        luma.ensure_single_channel()?;
        if self.reference.is_some() {
            return Err(Error::ReferenceAlreadySet);
        }
        Ok(self.reference.insert(ReferenceFrame { luma }))
    }

    pub fn get(&self) -> Option<&ReferenceFrame> {
        self.reference.as_ref()
    }
}

/// `|L(cf) - L(reference)|` per pixel.
pub fn frame_difference(cf: &Frame, reference: &ReferenceFrame) -> Result<Frame> {
    cf.ensure_same_dims(reference.luma.dims())?;
    luma_difference(&lab_luma(cf), reference.luma())
}

/// Absolute difference of two luminance planes.
pub fn luma_difference(a: &Frame, b: &Frame) -> Result<Frame> {
    a.ensure_single_channel()?;
    b.ensure_single_channel()?;
    a.ensure_same_dims(b.dims())?;
    let data = a
        .data()
        .par_iter()
        .zip(b.data().par_iter())
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(Frame::from_raw(a.width(), a.height(), 1, data))
}

/// Foreground where the value strictly exceeds `threshold`.
pub fn threshold_at(diff: &Frame, threshold: f64) -> Result<BinaryMask> {
    diff.ensure_single_channel()?;
    let bits = diff.data().par_iter().map(|v| *v > threshold).collect();
    BinaryMask::from_bits(diff.width(), diff.height(), bits)
}

/// Thresholds at the image's own global mean. Returns the mask and the level used.
pub fn threshold_mask(diff: &Frame) -> Result<(BinaryMask, f64)> {
    let t = global_mean(diff)?;
    Ok((threshold_at(diff, t)?, t))
}
