use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::PostParams;
use crate::mog::MogParams;
use crate::preprocess::{DehazeParams, EqualizationParams, Roi};

/// Top-level run configuration, read from TOML. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    /// Crop applied to every frame before anything else; whole frame if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<Roi>,
    #[serde(default)]
    pub equalization: EqualizationConfig,
    #[serde(default)]
    pub dehaze: DehazeConfig,
    #[serde(default)]
    pub mog: MogParams,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub post: PostParams,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub dir: PathBuf,
    /// File name with `{}` where the frame number goes, e.g. `frame_{}.png`.
    #[serde(default = "default_pattern")]
    pub pattern: String,
    /// Warn about and skip over missing frame numbers instead of failing.
    #[serde(default)]
    pub skip_gaps: bool,
}

fn default_pattern() -> String {
    "frame_{}.png".into()
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizationConfig {
    #[serde(default = "enabled")]
    pub enabled: bool,
    #[serde(default = "default_half_window")]
    pub p: usize,
    #[serde(default = "default_half_window")]
    pub q: usize,
}

fn default_half_window() -> usize {
    EqualizationParams::default().p
}

impl Default for EqualizationConfig {
    fn default() -> Self {
        let p = EqualizationParams::default();
        EqualizationConfig {
            enabled: true,
            p: p.p,
            q: p.q,
        }
    }
}

impl EqualizationConfig {
    pub fn params(&self) -> Option<EqualizationParams> {
        self.enabled.then_some(EqualizationParams {
            p: self.p,
            q: self.q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DehazeConfig {
    pub enabled: bool,
    pub patch_radius: usize,
    pub omega: f64,
    pub t_floor: f64,
    pub airlight_fraction: f64,
}

impl Default for DehazeConfig {
    fn default() -> Self {
        let d = DehazeParams::default();
        DehazeConfig {
            enabled: true,
            patch_radius: d.patch_radius,
            omega: d.omega,
            t_floor: d.t_floor,
            airlight_fraction: d.airlight_fraction,
        }
    }
}

impl DehazeConfig {
    pub fn params(&self) -> Option<DehazeParams> {
        self.enabled.then_some(DehazeParams {
            patch_radius: self.patch_radius,
            omega: self.omega,
            t_floor: self.t_floor,
            airlight_fraction: self.airlight_fraction,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Global mean of each frame's own difference image.
    #[default]
    PerFrame,
    /// Global mean of frame 1's difference image, reused for every later frame.
    Frozen,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub mode: ThresholdMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write `mask_NNNN.png` with the detected object per frame.
    #[serde(default)]
    pub masks: bool,
    /// Write `overlay_NNNN.png` with the hull drawn in green.
    #[serde(default)]
    pub overlays: bool,
    /// Write `report.json`.
    #[serde(default = "enabled")]
    pub report: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.input.dir = base.join(&cfg.input.dir);
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Checks everything that does not depend on the frame size.
    pub fn validate(&self) -> Result<()> {
        let count = self.input.pattern.matches("{}").count();
        if count != 1 {
            return Err(Error::InvalidConfig(format!(
                "input pattern {:?} needs exactly one {{}} placeholder",
                self.input.pattern
            )));
        }
        if self.input.pattern.contains('/') {
            return Err(Error::InvalidConfig(
                "input pattern must be a bare file name".into(),
            ));
        }
        if let Some(d) = self.dehaze.params() {
            d.validate()?;
        }
        if let Some(e) = self.equalization.params() {
            if e.p < 1 || e.q < 1 {
                return Err(Error::InvalidConfig(
                    "equalization p and q must be >= 1".into(),
                ));
            }
        }
        self.mog.validate()?;
        self.post.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[input]
dir = "frames"

[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.input.pattern, "frame_{}.png");
        assert!(c.equalization.enabled && c.dehaze.enabled);
        assert_eq!(c.equalization.params(), Some(EqualizationParams::default()));
        assert_eq!(c.dehaze.params(), Some(DehazeParams::default()));
        assert_eq!(c.mog, MogParams::default());
        assert_eq!(c.post, PostParams::default());
        assert_eq!(c.threshold.mode, ThresholdMode::PerFrame);
        assert!(c.output.report && !c.output.masks);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        c.roi = Some(Roi { x: 1, y: 2, width: 30, height: 40 });
        c.threshold.mode = ThresholdMode::Frozen;
        c.post.min_area = Some(12);
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in ["[mog]\nlearning_rte = 0.1\n", "[post]\nmin_aera = 3\n", "[dehaze]\nenable = false\n", "bogus = 1\n"] {
            let text = format!("{extra}{MINIMAL}");
            assert!(PipelineConfig::from_toml(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn bad_values_rejected() {
        let text = format!("{MINIMAL}[mog]\ncomponents = 0\n");
        assert!(PipelineConfig::from_toml(&text).is_err());
        let text = MINIMAL.replace("dir = \"frames\"", "dir = \"frames\"\npattern = \"frame.png\"");
        assert!(matches!(PipelineConfig::from_toml(&text), Err(Error::InvalidConfig(_))));
        let text = format!("{MINIMAL}[post]\nerode_size = 4\n");
        assert!(PipelineConfig::from_toml(&text).is_err());
    }
}
