//! End-to-end processing of a frame sequence: crop, equalize, de-haze,
//! difference against the reference, classify with the background model,
//! fuse and outline.

pub mod config;
pub mod io;
pub mod metrics;
pub mod report;

pub use config::{
    DehazeConfig, EqualizationConfig, InputConfig, OutputConfig, PipelineConfig, ThresholdConfig,
    ThresholdMode,
};
pub use metrics::{compute_iou, draw_hull, evaluate, render_overlay, EvalSummary, FrameScore};
pub use report::{
    ComponentSummary, DetectionSummary, FrameReport, Popcounts, Report, StageTimings, REPORT_FILE,
};

use std::fs;
use std::time::Instant;

use log::{debug, info};

use crate::error::{Error, Result};
use crate::framediff::{luma_difference, threshold_at, ReferenceStore};
use crate::fusion::{detect_detailed, Detection, PostParams};
use crate::imgcore::{global_mean, lab_luma, BinaryMask, Frame};
use crate::mog::{init_model, BackgroundModel, MogParams};
use crate::preprocess::{crop_roi, dehaze, illumination_equalize, DehazeParams, EqualizationParams, Roi};
use report::shift_bbox;

/// Stage parameters, fixed for the lifetime of a [`Pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub roi: Option<Roi>,
    pub equalization: Option<EqualizationParams>,
    pub dehaze: Option<DehazeParams>,
    pub mog: MogParams,
    pub threshold: ThresholdMode,
    pub post: PostParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            roi: None,
            equalization: Some(EqualizationParams::default()),
            dehaze: Some(DehazeParams::default()),
            mog: MogParams::default(),
            threshold: ThresholdMode::PerFrame,
            post: PostParams::default(),
        }
    }
}

impl From<&PipelineConfig> for PipelineParams {
    fn from(c: &PipelineConfig) -> Self {
        PipelineParams {
            roi: c.roi,
            equalization: c.equalization.params(),
            dehaze: c.dehaze.params(),
            mog: c.mog,
            threshold: c.threshold.mode,
            post: c.post,
        }
    }
}

/// Everything produced for one frame. Masks and detection are in ROI
/// coordinates; the report is in full-frame coordinates.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub report: FrameReport,
    pub luma: Frame,
    pub dfg: BinaryMask,
    pub bsfg: BinaryMask,
    pub fused: BinaryMask,
    pub cleaned: BinaryMask,
    pub detection: Option<Detection>,
}

impl FrameOutput {
    /// Detected object as a mask the size of the input frame.
    pub fn object_mask(&self, frame_width: usize, frame_height: usize, roi: Option<Roi>) -> BinaryMask {
        let (ox, oy) = roi.map_or((0, 0), |r| (r.x, r.y));
        let mut m = BinaryMask::new(frame_width, frame_height);
        if let Some(d) = &self.detection {
            for &(x, y) in &d.component.pixels {
                m.set(x as usize + ox, y as usize + oy, true);
            }
        }
        m
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Sequential detector state. The first frame processed becomes the
/// reference and seeds the background model.
#[derive(Debug)]
pub struct Pipeline {
    params: PipelineParams,
    frame_dims: Option<(usize, usize)>,
    reference: ReferenceStore,
    model: Option<BackgroundModel>,
    frozen_threshold: Option<f64>,
}

impl Pipeline {
    pub fn new(params: PipelineParams) -> Result<Self> {
        if let Some(d) = &params.dehaze {
            d.validate()?;
        }
        params.mog.validate()?;
        params.post.validate()?;
        Ok(Pipeline {
            params,
            frame_dims: None,
            reference: ReferenceStore::new(),
            model: None,
            frozen_threshold: None,
        })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn model(&self) -> Option<&BackgroundModel> {
        self.model.as_ref()
    }

    /// Crop, equalize and de-haze, then take Lab L.
    pub fn preprocess(&self, frame: &Frame) -> Result<Frame> {
        let mut f = match &self.params.roi {
            Some(roi) => crop_roi(frame, roi)?,
            None => frame.clone(),
        };
        if f.channels() == 1 {
            f = f.to_rgb();
        }
        if let Some(eq) = &self.params.equalization {
            eq.validate(f.width(), f.height())?;
            f = illumination_equalize(&f, eq)?;
        }
        if let Some(dh) = &self.params.dehaze {
            f = dehaze(&f, dh)?;
        }
        Ok(lab_luma(&f))
    }

    pub fn process(&mut self, index: u64, frame: &Frame) -> Result<FrameOutput> {
        let t_total = Instant::now();
        match self.frame_dims {
            Some(dims) => frame.ensure_same_dims(dims)?,
            None => {
                if let Some(roi) = &self.params.roi {
                    roi.validate(frame.width(), frame.height())?;
                }
                self.frame_dims = Some(frame.dims());
            }
        }

        let t = Instant::now();
        let luma = self.preprocess(frame)?;
        let preprocess_ms = elapsed_ms(t);
        let (w, h) = luma.dims();

        let Some(reference) = self.reference.get() else {
            self.reference.set_reference_luma(luma.clone())?;
            self.model = Some(init_model(w, h, &luma, self.params.mog)?);
            let empty = BinaryMask::new(w, h);
            return Ok(FrameOutput {
                report: FrameReport {
                    index,
                    threshold: 0.0,
                    popcounts: Popcounts::default(),
                    detection: None,
                    components: vec![],
                    timings_ms: StageTimings {
                        preprocess: preprocess_ms,
                        total: elapsed_ms(t_total),
                        ..StageTimings::default()
                    },
                },
                luma,
                dfg: empty.clone(),
                bsfg: empty.clone(),
                fused: empty.clone(),
                cleaned: empty,
                detection: None,
            });
        };

        let t = Instant::now();
        let diff = luma_difference(&luma, reference.luma())?;
        let threshold = match (self.params.threshold, self.frozen_threshold) {
            (ThresholdMode::Frozen, Some(frozen)) => frozen,
            (mode, _) => {
                let mean = global_mean(&diff)?;
                if mode == ThresholdMode::Frozen {
                    self.frozen_threshold = Some(mean);
                }
                mean
            }
        };
        let dfg = threshold_at(&diff, threshold)?;
        let framediff_ms = elapsed_ms(t);

        let t = Instant::now();
        let bsfg = self
            .model
            .as_mut()
            .expect("model exists once the reference is set")
            .update_and_classify(&luma)?;
        let mog_ms = elapsed_ms(t);

        let t = Instant::now();
        let post = detect_detailed(index as usize, &dfg, &bsfg, &self.params.post)?;
        let post_ms = elapsed_ms(t);

        let offset = self.params.roi.map_or((0, 0), |r| (r.x, r.y));
        let detection = post.detection.as_ref().map(|d| {
            let c = ComponentSummary::from_component(&d.component, offset);
            DetectionSummary {
                area: c.area,
                bbox: shift_bbox(&d.component.bbox, offset),
                centroid: c.centroid,
                hull: d
                    .hull
                    .iter()
                    .map(|&(x, y)| [x + offset.0 as i64, y + offset.1 as i64])
                    .collect(),
            }
        });
        let report = FrameReport {
            index,
            threshold,
            popcounts: Popcounts {
                dfg: dfg.popcount(),
                bsfg: bsfg.popcount(),
                fused: post.fused.popcount(),
            },
            detection,
            components: post
                .components
                .iter()
                .map(|c| ComponentSummary::from_component(c, offset))
                .collect(),
            timings_ms: StageTimings {
                preprocess: preprocess_ms,
                framediff: framediff_ms,
                mog: mog_ms,
                post: post_ms,
                total: elapsed_ms(t_total),
            },
        };
        Ok(FrameOutput {
            report,
            luma,
            dfg,
            bsfg,
            fused: post.fused,
            cleaned: post.cleaned,
            detection: post.detection,
        })
    }
}

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub emit_masks: bool,
    pub emit_overlays: bool,
    pub freeze_threshold: bool,
}

impl RunOverrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        cfg.output.masks |= self.emit_masks;
        cfg.output.overlays |= self.emit_overlays;
        if self.freeze_threshold {
            cfg.threshold.mode = ThresholdMode::Frozen;
        }
    }
}

/// Runs the configured sequence and writes the requested outputs. The
/// report is returned whether or not it is written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report> {
    cfg.validate()?;
    let entries = io::list_sequence(&cfg.input.dir, &cfg.input.pattern, cfg.input.skip_gaps)?;
    let out_dir = &cfg.output.dir;
    if cfg.output.masks || cfg.output.overlays || cfg.output.report {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    }
    let params = PipelineParams::from(cfg);
    let mut pipeline = Pipeline::new(params.clone())?;
    info!(
        "processing {} frames from {}",
        entries.len(),
        cfg.input.dir.display()
    );

    let mut frames = Vec::with_capacity(entries.len());
    for entry in &entries {
        let at = |e: Error| e.at_frame(entry.index as usize);
        let frame = io::load_frame(&entry.path).map_err(at)?;
        let out = pipeline.process(entry.index, &frame).map_err(at)?;
        debug!(
            "frame {}: T={:.4} dfg={} bsfg={} detection={}",
            entry.index,
            out.report.threshold,
            out.report.popcounts.dfg,
            out.report.popcounts.bsfg,
            out.report.detection.as_ref().map_or(0, |d| d.area)
        );
        if cfg.output.masks {
            let mask = out.object_mask(frame.width(), frame.height(), params.roi);
            let path = out_dir.join(format!("mask_{:04}.png", entry.index));
            io::save_mask(&mask, &path).map_err(at)?;
        }
        if cfg.output.overlays {
            let offset = params.roi.map_or((0, 0), |r| (r.x as i64, r.y as i64));
            let hull = out.detection.as_ref().map_or(&[][..], |d| &d.hull[..]);
            let overlay = draw_hull(&frame, hull, offset);
            let path = out_dir.join(format!("overlay_{:04}.png", entry.index));
            io::save_frame(&overlay, &path).map_err(at)?;
        }
        frames.push(out.report);
    }

    let report = Report::new(cfg.clone(), frames);
    if cfg.output.report {
        report.write(&out_dir.join(REPORT_FILE))?;
    }
    info!("{} of {} frames with a detection", report.detections(), report.frames.len());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(object: bool) -> Frame {
        Frame::rgb_from_fn(64, 48, |x, y| {
            if object && (20..40).contains(&x) && (15..35).contains(&y) {
                [0.95, 0.9, 0.3]
            } else {
                [0.3 + 0.004 * x as f64, 0.4, 0.35]
            }
        })
        .unwrap()
    }

    fn params() -> PipelineParams {
        PipelineParams {
            equalization: Some(EqualizationParams { p: 3, q: 3 }),
            dehaze: Some(DehazeParams { patch_radius: 3, ..DehazeParams::default() }),
            ..PipelineParams::default()
        }
    }

    fn plain() -> PipelineParams {
        PipelineParams { equalization: None, dehaze: None, ..PipelineParams::default() }
    }

    #[test]
    fn static_scene_gives_nothing() {
        let mut p = Pipeline::new(params()).unwrap();
        for i in 0..6 {
            let out = p.process(i, &scene(false)).unwrap();
            assert!(out.detection.is_none());
            assert!(out.dfg.is_empty() && out.bsfg.is_empty() && out.fused.is_empty());
            assert_eq!(out.report.threshold, 0.0);
        }
    }

    #[test]
    fn object_appearing_at_rest_is_detected() {
        let mut p = Pipeline::new(plain()).unwrap();
        p.process(0, &scene(false)).unwrap();
        let out = p.process(1, &scene(true)).unwrap();
        // Classified against the pre-update model, the object is moving.
        assert!(out.detection.is_none());
        assert!(out.report.popcounts.fused <= out.report.popcounts.dfg);
        let mut last = None;
        for i in 2..80 {
            let out = p.process(i, &scene(true)).unwrap();
            assert!(out.report.popcounts.fused <= out.report.popcounts.dfg);
            last = out.detection;
        }
        let d = last.expect("object absorbed by the model by now");
        let truth = BinaryMask::from_fn(64, 48, |x, y| (20..40).contains(&x) && (15..35).contains(&y));
        let iou = compute_iou(&d.component.to_mask(64, 48), &truth).unwrap();
        assert!(iou > 0.8, "{iou}");
    }

    #[test]
    fn preprocessed_run_still_finds_object() {
        let mut p = Pipeline::new(params()).unwrap();
        let mut last = None;
        for i in 0..80 {
            let out = p.process(i, &scene(i > 0)).unwrap();
            assert!(out.report.popcounts.fused <= out.report.popcounts.dfg);
            last = out.detection;
        }
        let truth = BinaryMask::from_fn(64, 48, |x, y| (20..40).contains(&x) && (15..35).contains(&y));
        let iou = compute_iou(&last.unwrap().component.to_mask(64, 48), &truth).unwrap();
        assert!(iou > 0.7, "{iou}");
    }

    #[test]
    fn disabled_stages_are_identity() {
        let p = Pipeline::new(plain()).unwrap();
        let f = scene(true);
        assert_eq!(p.preprocess(&f).unwrap(), lab_luma(&f));
    }

    #[test]
    fn frame_size_change_rejected() {
        let mut p = Pipeline::new(params()).unwrap();
        p.process(0, &scene(false)).unwrap();
        let small = Frame::filled(32, 48, 3, 0.5).unwrap();
        assert!(matches!(p.process(1, &small), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn roi_crops_and_offsets() {
        let roi = Roi { x: 10, y: 5, width: 40, height: 40 };
        let mut p = Pipeline::new(PipelineParams { roi: Some(roi), ..plain() }).unwrap();
        p.process(0, &scene(false)).unwrap();
        let mut out = None;
        for i in 1..80 {
            out = Some(p.process(i, &scene(true)).unwrap());
        }
        let out = out.unwrap();
        assert_eq!(out.luma.dims(), (40, 40));
        let d = out.report.detection.as_ref().unwrap();
        // The opening widens a square by one pixel on each side.
        assert_eq!((d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max), (19, 14, 40, 35));
        let m = out.object_mask(64, 48, Some(roi));
        assert_eq!(m.popcount(), d.area);
        assert!(m.get(30, 25));

        let bad = Roi { x: 40, y: 0, width: 40, height: 10 };
        let mut p = Pipeline::new(PipelineParams { roi: Some(bad), ..params() }).unwrap();
        assert!(matches!(p.process(0, &scene(false)), Err(Error::RoiOutOfBounds { .. })));
    }

    #[test]
    fn frozen_threshold_reused() {
        let mut p = Pipeline::new(PipelineParams { threshold: ThresholdMode::Frozen, ..params() }).unwrap();
        p.process(0, &scene(false)).unwrap();
        let t1 = p.process(1, &scene(true)).unwrap().report.threshold;
        assert!(t1 > 0.0);
        let t2 = p.process(2, &scene(false)).unwrap().report.threshold;
        assert_eq!(t1, t2);
    }
}
