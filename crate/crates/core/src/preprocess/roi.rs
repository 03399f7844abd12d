use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Frame;

/// Axis-aligned region of interest, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn full(width: usize, height: usize) -> Self {
        Roi {
            x: 0,
            y: 0,
            width,
            height,
        }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self, frame_width: usize, frame_height: usize) -> Result<()> {
        let fits = self.width >= 1
            && self.height >= 1
            && self.x.checked_add(self.width).is_some_and(|r| r <= frame_width)
            && self.y.checked_add(self.height).is_some_and(|b| b <= frame_height);
        if fits {
            Ok(())
        } else {
            Err(Error::RoiOutOfBounds {
                roi_x: self.x,
                roi_y: self.y,
                roi_w: self.width,
                roi_h: self.height,
                frame_w: frame_width,
                frame_h: frame_height,
            })
        }
    }
}

pub fn crop_roi(frame: &Frame, roi: &Roi) -> Result<Frame> {
    roi.validate(frame.width(), frame.height())?;
    let channels = frame.channels();
    let row_len = roi.width * channels;
    let mut data = Vec::with_capacity(roi.area() * channels);
    for y in roi.y..roi.y + roi.height {
        let start = (y * frame.width() + roi.x) * channels;
        data.extend_from_slice(&frame.data()[start..start + row_len]);
    }
    Ok(Frame::from_raw(roi.width, roi.height, channels, data))
}
