//! Deterministic synthetic sequences with ground-truth object masks.
//!
//! A static background (optionally with fixtures) is composited with one
//! object that enters, travels along a waypoint path and settles. Degradations
//! are applied afterwards in a fixed order: haze, illumination gradient,
//! droplets, sensor noise. Each frame draws from its own RNG stream derived
//! from the scenario seed and frame index, so frames can be rendered in any
//! order.

mod scenario;

pub use scenario::{
    Axis, Background, Degradation, DropletSpec, Fixture, GradientDirection, HazeSpec,
    IlluminationSpec, NoiseSpec, ObjectSpec, Rgb, Scenario, Shape,
};

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{hsv_to_rgb, rgb_to_hsv, BinaryMask, Frame};
use crate::pipeline::io::{save_frame, save_mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionFlag {
    Absent,
    Moving,
    Static,
}

/// Per-frame truth for a generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub masks: Vec<BinaryMask>,
    pub flags: Vec<MotionFlag>,
    /// Frames before any degradation.
    pub clean: Vec<Frame>,
}

/// One rendered frame and its truth.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub frame: Frame,
    pub clean: Frame,
    pub mask: BinaryMask,
    pub flag: MotionFlag,
    pub droplets: bool,
}

/// Spatially uniform or per-pixel transmission.
#[derive(Debug, Clone)]
pub enum Transmission {
    Uniform(f64),
    Map(Frame),
}

/// `I = J * t + A * (1 - t)` per channel.
pub fn apply_haze(frame: &Frame, transmission: &Transmission, airlight: Rgb) -> Result<Frame> {
    frame.ensure_rgb()?;
    if let Transmission::Map(map) = transmission {
        map.ensure_single_channel()?;
        frame.ensure_same_dims(map.dims())?;
    }
    let t_at = |i: usize| match transmission {
        Transmission::Uniform(t) => *t,
        Transmission::Map(m) => m.data()[i],
    };
    if let Transmission::Uniform(t) = transmission {
        if !(0.0..=1.0).contains(t) {
            return Err(Error::InvalidParameter(format!(
                "transmission must be in [0, 1], got {t}"
            )));
        }
    }
    let data = frame
        .data()
        .chunks(3)
        .enumerate()
        .flat_map(|(i, px)| {
            let t = t_at(i);
            (0..3).map(move |c| (px[c] * t + airlight[c] * (1.0 - t)).clamp(0.0, 1.0))
        })
        .collect();
    Frame::new(frame.width(), frame.height(), 3, data)
}

fn ramp(direction: GradientDirection, strength: f64, x: usize, y: usize, w: usize, h: usize) -> f64 {
    let pos = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 - 0.5 } else { 0.0 };
    match direction {
        GradientDirection::Horizontal => strength * pos(x, w),
        GradientDirection::Vertical => strength * pos(y, h),
        GradientDirection::Diagonal => strength * pos(x, w) + strength * pos(y, h),
    }
}

/// Adds a zero-centred linear ramp of total span `strength` to the HSV value
/// channel (or directly to a luminance frame), clamped to `[0, 1]`.
pub fn apply_illumination_gradient(
    frame: &Frame,
    direction: GradientDirection,
    strength: f64,
) -> Result<Frame> {
    if strength == 0.0 {
        return Ok(frame.clone());
    }
    let (w, h) = frame.dims();
    let channels = frame.channels();
    let data: Vec<f64> = frame
        .data()
        .par_chunks(channels)
        .enumerate()
        .flat_map_iter(|(i, px)| {
            let delta = ramp(direction, strength, i % w, i / w, w, h);
            let out: Vec<f64> = if channels == 1 {
                vec![(px[0] + delta).clamp(0.0, 1.0)]
            } else {
                let [hue, s, v] = rgb_to_hsv([px[0], px[1], px[2]]);
                hsv_to_rgb([hue, s, (v + delta).clamp(0.0, 1.0)]).to_vec()
            };
            out
        })
        .collect();
    Frame::new(w, h, channels, data)
}

/// Additive i.i.d. Gaussian noise, clamped; deterministic for a given seed.
pub fn apply_noise(frame: &Frame, sigma: f64, seed: u64) -> Result<Frame> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(frame.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = frame
        .data()
        .iter()
        .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Frame::new(frame.width(), frame.height(), frame.channels(), data)
}

const STREAM_DROPLETS: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// splitmix64 finalizer, used to derive per-frame seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn frame_seed(seed: u64, frame: usize, stream: u64) -> u64 {
    mix(seed ^ mix(frame as u64 ^ (stream << 48)))
}

fn render_background(s: &Scenario) -> Result<Frame> {
    let (w, h) = (s.width, s.height);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(s.seed));
    let mut frame = match &s.background {
        Background::Uniform { color } => Frame::rgb_from_fn(w, h, |_, _| *color)?,
        Background::Gradient { from, to, axis } => Frame::rgb_from_fn(w, h, |x, y| {
            let t = match axis {
                Axis::Horizontal if w > 1 => x as f64 / (w - 1) as f64,
                Axis::Vertical if h > 1 => y as f64 / (h - 1) as f64,
                _ => 0.0,
            };
            [0, 1, 2].map(|c| from[c] + (to[c] - from[c]) * t)
        })?,
        Background::Speckle {
            base,
            amplitude,
            grain,
        } => {
            let cells_x = w.div_ceil(*grain);
            let cells_y = h.div_ceil(*grain);
            let offsets: Vec<f64> = (0..cells_x * cells_y)
                .map(|_| rng.random_range(-1.0..=1.0) * amplitude)
                .collect();
            Frame::rgb_from_fn(w, h, |x, y| {
                let d = offsets[(y / grain) * cells_x + x / grain];
                base.map(|c| (c + d).clamp(0.0, 1.0))
            })?
        }
        Background::Grid {
            surface,
            bar,
            pitch,
            bar_width,
            texture,
        } => {
            let offsets: Vec<f64> = (0..w * h)
                .map(|_| rng.random_range(-1.0..=1.0) * texture)
                .collect();
            Frame::rgb_from_fn(w, h, |x, y| {
                if x % pitch < *bar_width || y % pitch < *bar_width {
                    *bar
                } else {
                    let d = offsets[y * w + x];
                    surface.map(|c| (c + d).clamp(0.0, 1.0))
                }
            })?
        }
    };
    for f in &s.fixtures {
        for y in f.y..f.y + f.height {
            for x in f.x..f.x + f.width {
                frame.set_rgb(x, y, f.color);
            }
        }
    }
    Ok(frame)
}

/// Renders frames of a validated [`Scenario`] on demand.
#[derive(Debug, Clone)]
pub struct Generator {
    scenario: Scenario,
    background: Frame,
}

impl Generator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let background = render_background(&scenario)?;
        Ok(Generator {
            scenario,
            background,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn len(&self) -> usize {
        self.scenario.frames
    }

    pub fn is_empty(&self) -> bool {
        self.scenario.frames == 0
    }

    pub fn flag(&self, index: usize) -> MotionFlag {
        match &self.scenario.object {
            None => MotionFlag::Absent,
            Some(o) if index < o.entry_frame => MotionFlag::Absent,
            Some(o) if index < o.stop_frame => MotionFlag::Moving,
            Some(_) => MotionFlag::Static,
        }
    }

    /// Integer anchor of the object at `index`, if it is in the scene.
    pub fn anchor(&self, index: usize) -> Option<(i64, i64)> {
        let o = self.scenario.object.as_ref()?;
        if index < o.entry_frame {
            return None;
        }
        let segments = o.path.len() - 1;
        let p = if segments == 0 || o.stop_frame == o.entry_frame || index >= o.stop_frame {
            *o.path.last().expect("validated non-empty")
        } else {
            let s = (index - o.entry_frame) as f64 / (o.stop_frame - o.entry_frame) as f64;
            let u = s * segments as f64;
            let seg = (u.floor() as usize).min(segments - 1);
            let frac = u - seg as f64;
            let (a, b) = (o.path[seg], o.path[seg + 1]);
            [a[0] + (b[0] - a[0]) * frac, a[1] + (b[1] - a[1]) * frac]
        };
        Some((p[0].round() as i64, p[1].round() as i64))
    }

    pub fn object_mask(&self, index: usize) -> BinaryMask {
        let (w, h) = (self.scenario.width, self.scenario.height);
        let mut mask = BinaryMask::new(w, h);
        let (Some(o), Some((ax, ay))) = (&self.scenario.object, self.anchor(index)) else {
            return mask;
        };
        let (x0, y0, x1, y1) = o.shape.extent();
        for dy in y0..=y1 {
            for dx in x0..=x1 {
                let (x, y) = (ax + dx, ay + dy);
                if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && o.shape.contains(dx, dy) {
                    mask.set(x as usize, y as usize, true);
                }
            }
        }
        mask
    }

    pub fn render(&self, index: usize) -> Result<SyntheticFrame> {
        if index >= self.scenario.frames {
            return Err(Error::InvalidParameter(format!(
                "frame {index} beyond sequence of {}",
                self.scenario.frames
            )));
        }
        let mask = self.object_mask(index);
        let mut clean = self.background.clone();
        if let Some(o) = &self.scenario.object {
            for y in 0..clean.height() {
                for x in 0..clean.width() {
                    if mask.get(x, y) {
                        clean.set_rgb(x, y, o.color);
                    }
                }
            }
        }

        let d = &self.scenario.degradation;
        let mut frame = clean.clone();
        if let Some(haze) = d.haze.as_ref().filter(|h| index >= h.onset) {
            frame = apply_haze(&frame, &Transmission::Uniform(haze.transmission), haze.airlight)?;
        }
        if let Some(ill) = d.illumination.as_ref().filter(|i| index >= i.onset) {
            frame = apply_illumination_gradient(&frame, ill.direction, ill.strength)?;
        }
        let droplets = d
            .droplets
            .as_ref()
            .filter(|dr| index >= dr.onset && index < dr.end);
        if let Some(dr) = droplets {
            self.paint_droplets(&mut frame, dr, index);
        }
        if let Some(noise) = d.noise.as_ref().filter(|n| index >= n.onset) {
            frame = apply_noise(&frame, noise.sigma, frame_seed(self.scenario.seed, index, STREAM_NOISE))?;
        }
        Ok(SyntheticFrame {
            frame,
            clean,
            mask,
            flag: self.flag(index),
            droplets: droplets.is_some(),
        })
    }

    fn paint_droplets(&self, frame: &mut Frame, spec: &DropletSpec, index: usize) {
        let (w, h) = frame.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(self.scenario.seed, index, STREAM_DROPLETS));
        let r = spec.radius as i64;
        for _ in 0..spec.count {
            let cx = rng.random_range(0..w) as i64;
            let cy = rng.random_range(0..h) as i64;
            for y in (cy - r).max(0)..=(cy + r).min(h as i64 - 1) {
                for x in (cx - r).max(0)..=(cx + r).min(w as i64 - 1) {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        frame.set_rgb(x as usize, y as usize, [spec.intensity; 3]);
                    }
                }
            }
        }
    }
}

/// Renders a whole sequence into memory.
pub fn generate(scenario: &Scenario) -> Result<(Vec<Frame>, GroundTruth)> {
    let gen = Generator::new(scenario.clone())?;
    let rendered: Vec<SyntheticFrame> = (0..gen.len())
        .into_par_iter()
        .map(|i| gen.render(i))
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(rendered.len());
    let mut truth = GroundTruth {
        masks: Vec::with_capacity(rendered.len()),
        flags: Vec::with_capacity(rendered.len()),
        clean: Vec::with_capacity(rendered.len()),
    };
    for r in rendered {
        frames.push(r.frame);
        truth.masks.push(r.mask);
        truth.flags.push(r.flag);
        truth.clean.push(r.clean);
    }
    Ok((frames, truth))
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub frame: String,
    pub mask: String,
    pub flag: MotionFlag,
    pub droplets: bool,
    pub object_pixels: usize,
}

/// Listing written next to a generated sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub width: usize,
    pub height: usize,
    pub frame_pattern: String,
    pub mask_pattern: String,
    pub frames: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub const FRAME_PATTERN: &str = "frame_{}.png";
pub const MASK_PATTERN: &str = "mask_{}.png";

pub fn indexed_name(pattern: &str, index: usize) -> String {
    pattern.replace("{}", &format!("{index:04}"))
}

/// Writes frames, ground-truth masks and `manifest.json` to `dir`.
pub fn write_sequence(gen: &Generator, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries: Vec<ManifestEntry> = (0..gen.len())
        .into_par_iter()
        .map(|i| {
            let r = gen.render(i)?;
            let frame = indexed_name(FRAME_PATTERN, i);
            let mask = indexed_name(MASK_PATTERN, i);
            save_frame(&r.frame, &dir.join(&frame))?;
            save_mask(&r.mask, &dir.join(&mask))?;
            Ok(ManifestEntry {
                index: i,
                frame,
                mask,
                flag: r.flag,
                droplets: r.droplets,
                object_pixels: r.mask.popcount(),
            })
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        width: gen.scenario().width,
        height: gen.scenario().height,
        frame_pattern: FRAME_PATTERN.into(),
        mask_pattern: MASK_PATTERN.into(),
        frames: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
