//! Numbered frame sequences and 8-bit PNG conversion.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, RgbImage};
use log::warn;

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, Frame};

/// One file of a numbered sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceEntry {
    pub index: u64,
    pub path: PathBuf,
}

fn split_pattern(pattern: &str) -> Result<(&str, &str)> {
    match pattern.split_once("{}") {
        Some((pre, post)) if !post.contains("{}") => Ok((pre, post)),
        _ => Err(Error::InvalidConfig(format!(
            "pattern {pattern:?} needs exactly one {{}} placeholder"
        ))),
    }
}

/// Frame number encoded in `name`, if it matches `pattern`.
pub fn match_index(pattern: &str, name: &str) -> Result<Option<u64>> {
    let (pre, post) = split_pattern(pattern)?;
    let digits = name
        .strip_prefix(pre)
        .and_then(|rest| rest.strip_suffix(post));
    Ok(match digits {
        Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) => d.parse().ok(),
        _ => None,
    })
}

/// Lists files in `dir` matching `pattern`, sorted by number. Numbers must
/// be consecutive unless `skip_gaps` is set, in which case gaps are logged.
pub fn list_sequence(dir: &Path, pattern: &str, skip_gaps: bool) -> Result<Vec<SequenceEntry>> {
    split_pattern(pattern)?;
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for item in read {
        let item = item.map_err(|e| Error::io(dir, e))?;
        let name = item.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(index) = match_index(pattern, name)? {
            entries.push(SequenceEntry {
                index,
                path: item.path(),
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptySequence {
            dir: dir.to_path_buf(),
            pattern: pattern.into(),
        });
    }
    entries.sort_by(|a, b| a.index.cmp(&b.index).then_with(|| a.path.cmp(&b.path)));
    for pair in entries.windows(2) {
        let (a, b) = (pair[0].index, pair[1].index);
        if a == b {
            return Err(Error::InvalidConfig(format!(
                "frame {a} matched by both {} and {}",
                pair[0].path.display(),
                pair[1].path.display()
            )));
        }
        if b != a + 1 {
            if !skip_gaps {
                return Err(Error::MissingFrame { index: a + 1 });
            }
            warn!("frames {}..{} missing from {}, skipping", a + 1, b, dir.display());
        }
    }
    Ok(entries)
}

/// Loads a whole sequence into memory.
pub fn load_sequence(dir: &Path, pattern: &str, skip_gaps: bool) -> Result<Vec<(u64, Frame)>> {
    list_sequence(dir, pattern, skip_gaps)?
        .into_iter()
        .map(|e| {
            load_frame(&e.path)
                .map(|f| (e.index, f))
                .map_err(|err| err.at_frame(e.index as usize))
        })
        .collect()
}

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads an image as luminance (gray inputs) or RGB (everything else).
pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let gray = matches!(
        img,
        DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let data: Vec<f64> = if gray {
        img.to_luma8().into_raw()
    } else {
        img.to_rgb8().into_raw()
    }
    .into_iter()
    .map(|v| v as f64 / 255.0)
    .collect();
    Frame::new(w, h, if gray { 1 } else { 3 }, data)
}

/// Nearest 8-bit level.
pub fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Rounds every sample to the nearest 8-bit level, as a save/load cycle would.
pub fn quantize(frame: &Frame) -> Frame {
    let data = frame
        .data()
        .iter()
        .map(|v| to_u8(*v) as f64 / 255.0)
        .collect();
    Frame::from_raw(frame.width(), frame.height(), frame.channels(), data)
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let raw: Vec<u8> = frame.data().iter().map(|v| to_u8(*v)).collect();
    let result = if frame.channels() == 1 {
        GrayImage::from_raw(w, h, raw).map(|i| i.save(path))
    } else {
        RgbImage::from_raw(w, h, raw).map(|i| i.save(path))
    };
    result
        .expect("buffer length matches frame dimensions")
        .map_err(|e| image_error(path, e))
}

/// Writes a mask as an 8-bit image with 0 and 255.
pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let raw = mask.bits().iter().map(|b| if *b { 255 } else { 0 }).collect();
    let img: GrayImage = ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer length matches mask dimensions");
    img.save(path).map_err(|e| image_error(path, e))
}

/// Reads a mask; any pixel at or above mid-gray is set.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path).map_err(|e| image_error(path, e))?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    BinaryMask::from_bits(w, h, img.into_raw().into_iter().map(|v| v >= 128).collect())
}
