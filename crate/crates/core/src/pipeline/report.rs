//! JSON run report.
//!
//! Layout (`schema_version` 1):
//!
//! ```text
//! { "schema_version": 1,
//!   "config": { ...the PipelineConfig used... },
//!   "frames": [ { "index", "threshold",
//!                 "popcounts": { "dfg", "bsfg", "fused" },
//!                 "detection": null | { "area", "bbox", "centroid", "hull" },
//!                 "components": [ { "label", "area", "bbox", "centroid" } ],
//!                 "timings_ms": { "preprocess", "framediff", "mog", "post", "total" } } ] }
//! ```
//!
//! Coordinates are full-frame pixels (the ROI offset is already added).
//! Keys appear in the order above.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fusion::{BoundingBox, Component};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Popcounts {
    pub dfg: usize,
    pub bsfg: usize,
    pub fused: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTimings {
    pub preprocess: f64,
    pub framediff: f64,
    pub mog: f64,
    pub post: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSummary {
    pub label: u32,
    pub area: usize,
    pub bbox: BoundingBox,
    pub centroid: [f64; 2],
}

impl ComponentSummary {
    pub fn from_component(c: &Component, offset: (usize, usize)) -> Self {
        ComponentSummary {
            label: c.label,
            area: c.area,
            bbox: shift_bbox(&c.bbox, offset),
            centroid: [c.centroid.0 + offset.0 as f64, c.centroid.1 + offset.1 as f64],
        }
    }
}

pub(crate) fn shift_bbox(b: &BoundingBox, (dx, dy): (usize, usize)) -> BoundingBox {
    BoundingBox {
        x_min: b.x_min + dx,
        y_min: b.y_min + dy,
        x_max: b.x_max + dx,
        y_max: b.y_max + dy,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSummary {
    pub area: usize,
    pub bbox: BoundingBox,
    pub centroid: [f64; 2],
    pub hull: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameReport {
    pub index: u64,
    pub threshold: f64,
    pub popcounts: Popcounts,
    pub detection: Option<DetectionSummary>,
    pub components: Vec<ComponentSummary>,
    pub timings_ms: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub config: PipelineConfig,
    pub frames: Vec<FrameReport>,
}

impl Report {
    pub fn new(config: PipelineConfig, frames: Vec<FrameReport>) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            frames,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Copy with every timing zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for f in &mut r.frames {
            f.timings_ms = StageTimings::default();
        }
        r
    }

    pub fn detections(&self) -> usize {
        self.frames.iter().filter(|f| f.detection.is_some()).count()
    }
}
