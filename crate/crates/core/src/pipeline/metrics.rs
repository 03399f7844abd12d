//! Segmentation scoring and hull overlays.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{list_sequence, load_mask};
use crate::error::{Error, Result};
use crate::fusion::{Detection, Point};
use crate::imgcore::{BinaryMask, Frame};
use crate::synthgen::{Manifest, MotionFlag, MASK_PATTERN};

/// `|a ∩ b| / |a ∪ b|`, with two empty masks scoring 1.
pub fn compute_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.bits().iter().zip(b.bits()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

pub const OVERLAY_COLOR: [f64; 3] = [0.0, 1.0, 0.0];

/// Integer points of the segment `a`-`b`, endpoints included.
pub fn line_points(a: Point, b: Point) -> Vec<Point> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Pixels on the closed polyline through `hull`.
pub fn hull_outline(hull: &[Point]) -> Vec<Point> {
    match hull.len() {
        0 => vec![],
        1 => vec![hull[0]],
        n => (0..n)
            .flat_map(|i| line_points(hull[i], hull[(i + 1) % n]))
            .collect(),
    }
}

/// Draws `hull` (shifted by `offset`) in green on an RGB copy of `frame`.
/// Points outside the frame are skipped.
pub fn draw_hull(frame: &Frame, hull: &[Point], offset: (i64, i64)) -> Frame {
    let mut out = frame.to_rgb();
    let (w, h) = (out.width() as i64, out.height() as i64);
    for (x, y) in hull_outline(hull) {
        let (x, y) = (x + offset.0, y + offset.1);
        if (0..w).contains(&x) && (0..h).contains(&y) {
            out.set_rgb(x as usize, y as usize, OVERLAY_COLOR);
        }
    }
    out
}

/// RGB copy of `frame` with the detection hull outlined in green.
pub fn render_overlay(frame: &Frame, detection: Option<&Detection>) -> Frame {
    match detection {
        Some(d) => draw_hull(frame, &d.hull, (0, 0)),
        None => frame.to_rgb(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub index: u64,
    pub iou: f64,
    pub predicted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<MotionFlag>,
}

/// Scores for a predicted mask directory against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub frames: usize,
    pub mean_iou: f64,
    /// Mean IoU over frames where the object is at rest (needs a manifest).
    pub mean_static_iou: Option<f64>,
    /// Frames from the object coming to rest until the first frame whose IoU
    /// reaches `iou_threshold` (needs a manifest; `None` if never reached).
    pub latency_frames: Option<u64>,
    pub iou_threshold: f64,
    /// Static frames at or above `iou_threshold`, as a fraction.
    pub static_hit_rate: Option<f64>,
    /// Frames with a prediction while the object is absent or moving.
    pub false_detections: Option<usize>,
    pub per_frame: Vec<FrameScore>,
}

/// Compares `mask_*.png` files in `pred` and `truth` frame by frame. Motion
/// flags come from `truth/manifest.json` when present.
pub fn evaluate(pred: &Path, truth: &Path, iou_threshold: f64) -> Result<EvalSummary> {
    let truth_seq = list_sequence(truth, MASK_PATTERN, false)?;
    let pred_seq = list_sequence(pred, MASK_PATTERN, true)?;
    let manifest = Manifest::load(truth).ok();
    let flag_of = |index: u64| {
        manifest
            .as_ref()
            .and_then(|m| m.frames.iter().find(|e| e.index as u64 == index))
            .map(|e| e.flag)
    };
    let mut per_frame = Vec::with_capacity(pred_seq.len());
    for p in &pred_seq {
        let Some(t) = truth_seq.iter().find(|t| t.index == p.index) else {
            return Err(Error::MissingFrame { index: p.index });
        };
        let pm = load_mask(&p.path).map_err(|e| e.at_frame(p.index as usize))?;
        let tm = load_mask(&t.path).map_err(|e| e.at_frame(p.index as usize))?;
        per_frame.push(FrameScore {
            index: p.index,
            iou: compute_iou(&pm, &tm).map_err(|e| e.at_frame(p.index as usize))?,
            predicted: !pm.is_empty(),
            flag: flag_of(p.index),
        });
    }
    Ok(summarize(per_frame, manifest.is_some(), iou_threshold))
}

pub fn summarize(per_frame: Vec<FrameScore>, flagged: bool, iou_threshold: f64) -> EvalSummary {
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let all: Vec<f64> = per_frame.iter().map(|s| s.iou).collect();
    let statics: Vec<&FrameScore> = per_frame
        .iter()
        .filter(|s| s.flag == Some(MotionFlag::Static))
        .collect();
    let static_ious: Vec<f64> = statics.iter().map(|s| s.iou).collect();
    let latency = statics.first().and_then(|first| {
        statics
            .iter()
            .find(|s| s.iou >= iou_threshold)
            .map(|s| s.index - first.index)
    });
    let hit_rate = (!statics.is_empty()).then(|| {
        statics.iter().filter(|s| s.iou >= iou_threshold).count() as f64 / statics.len() as f64
    });
    let false_detections = flagged.then(|| {
        per_frame
            .iter()
            .filter(|s| s.predicted && s.flag != Some(MotionFlag::Static))
            .count()
    });
    EvalSummary {
        frames: per_frame.len(),
        mean_iou: mean(&all).unwrap_or(0.0),
        mean_static_iou: if flagged { mean(&static_ious) } else { None },
        latency_frames: if flagged { latency } else { None },
        iou_threshold,
        static_hit_rate: if flagged { hit_rate } else { None },
        false_detections,
        per_frame,
    }
}
