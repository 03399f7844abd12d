//! Per-pixel adaptive mixture-of-Gaussians background model.
//!
//! Every pixel keeps `K` weighted 1-D Gaussians over luminance, sorted by
//! fitness `w / sigma`. A pixel is background when the component it matches
//! lies inside the smallest fitness-ordered prefix whose weights sum past
//! `background_portion`. Classification always uses the state before the
//! frame's own update, so a frame never absorbs itself.

mod snapshot;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MogParams {
    /// Gaussians per pixel (K).
    pub components: usize,
    /// Learning rate alpha.
    pub learning_rate: f64,
    /// Match radius in standard deviations (lambda).
    pub match_threshold: f64,
    /// Cumulative weight that counts as background (T_bg).
    pub background_portion: f64,
    pub initial_variance: f64,
    pub variance_floor: f64,
}

impl Default for MogParams {
    fn default() -> Self {
        MogParams {
            components: 3,
            learning_rate: 0.01,
            match_threshold: 2.5,
            background_portion: 0.7,
            initial_variance: (15.0f64 / 255.0).powi(2),
            variance_floor: (2.0f64 / 255.0).powi(2),
        }
    }
}

impl MogParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.components) {
            return Err(Error::InvalidParameter(format!(
                "mixture size must be in [1, 10], got {}",
                self.components
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.match_threshold > 0.0 && self.match_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "match threshold must be positive, got {}",
                self.match_threshold
            )));
        }
        if !(self.background_portion > 0.0 && self.background_portion <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "background portion must be in (0, 1], got {}",
                self.background_portion
            )));
        }
        if !(self.variance_floor > 0.0 && self.initial_variance >= self.variance_floor) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < variance floor ({}) <= initial variance ({})",
                self.variance_floor, self.initial_variance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn fitness(&self) -> f64 {
        self.weight / self.variance.sqrt()
    }
}

/// First component, in stored (fitness) order, with positive weight and
/// `|x - mean| <= lambda * sigma`.
pub fn match_component(mix: &[Gaussian], x: f64, lambda: f64) -> Option<usize> {
    mix.iter()
        .position(|g| g.weight > 0.0 && (x - g.mean).abs() <= lambda * g.variance.sqrt())
}

/// Number of leading components whose cumulative weight first exceeds `portion`.
pub fn background_count(mix: &[Gaussian], portion: f64) -> usize {
    let mut acc = 0.0;
    for (k, g) in mix.iter().enumerate() {
        acc += g.weight;
        if acc > portion {
            return k + 1;
        }
    }
    mix.len()
}

/// Classifies `x` against `mix`, then folds it into the mixture.
/// Returns `true` for foreground.
pub fn update_pixel(mix: &mut [Gaussian], x: f64, params: &MogParams) -> bool {
    let alpha = params.learning_rate;
    let matched = match_component(mix, x, params.match_threshold);
    let foreground = match matched {
        Some(k) => k >= background_count(mix, params.background_portion),
        None => true,
    };

    for g in mix.iter_mut() {
        g.weight *= 1.0 - alpha;
    }
    match matched {
        Some(k) => {
            let g = &mut mix[k];
            g.weight += alpha;
            let rho = (alpha / g.weight).min(1.0);
            g.mean = (1.0 - rho) * g.mean + rho * x;
            let d = x - g.mean;
            g.variance = ((1.0 - rho) * g.variance + rho * d * d).max(params.variance_floor);
        }
        None => {
            let last = mix.len() - 1;
            mix[last] = Gaussian {
                weight: alpha,
                mean: x,
                variance: params.initial_variance,
            };
        }
    }

    let total: f64 = mix.iter().map(|g| g.weight).sum();
    for g in mix.iter_mut() {
        g.weight /= total;
    }
    mix.sort_by(|a, b| b.fitness().total_cmp(&a.fitness()));
    foreground
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    params: MogParams,
    /// `width * height * K` components, pixel-major.
    mixtures: Vec<Gaussian>,
}

/// Seeds one model per pixel: component 0 at the first frame's value with
/// full weight, the rest empty.
pub fn init_model(
    width: usize,
    height: usize,
    first_frame_luma: &Frame,
    params: MogParams,
) -> Result<BackgroundModel> {
    params.validate()?;
    if !(3..=5).contains(&params.components) {
        warn!(
            "mixture size {} is outside the usual 3..=5 range",
            params.components
        );
    }
    first_frame_luma.ensure_single_channel()?;
    first_frame_luma.ensure_same_dims((width, height))?;
    let k = params.components;
    let mut mixtures = Vec::with_capacity(width * height * k);
    for &x in first_frame_luma.data() {
        mixtures.push(Gaussian {
            weight: 1.0,
            mean: x,
            variance: params.initial_variance,
        });
        for _ in 1..k {
            mixtures.push(Gaussian {
                weight: 0.0,
                mean: 0.0,
                variance: params.initial_variance,
            });
        }
    }
    Ok(BackgroundModel {
        width,
        height,
        params,
        mixtures,
    })
}

impl BackgroundModel {
    pub fn params(&self) -> &MogParams {
        &self.params
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mixture(&self, x: usize, y: usize) -> &[Gaussian] {
        let k = self.params.components;
        let i = (y * self.width + x) * k;
        &self.mixtures[i..i + k]
    }

    pub fn mixtures(&self) -> impl Iterator<Item = &[Gaussian]> {
        self.mixtures.chunks(self.params.components)
    }

    /// Labels every pixel of `luma` (1 = moving) and updates the model.
    pub fn update_and_classify(&mut self, luma: &Frame) -> Result<BinaryMask> {
        luma.ensure_single_channel()?;
        luma.ensure_same_dims((self.width, self.height))?;
        let params = self.params;
        let bits = self
            .mixtures
            .par_chunks_mut(params.components)
            .zip(luma.data().par_iter())
            .map(|(mix, &x)| update_pixel(mix, x, &params))
            .collect();
        BinaryMask::from_bits(self.width, self.height, bits)
    }

    /// Mean of the fittest component per pixel.
    pub fn background_luma(&self) -> Frame {
        let data = self
            .mixtures()
            .map(|mix| mix[0].mean.clamp(0.0, 1.0))
            .collect();
        Frame::from_raw(self.width, self.height, 1, data)
    }
}
