use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// Everything needed to render a synthetic sequence. Rendering is a pure
/// function of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    pub background: Background,
    /// Constant rectangles painted over the background (walls, lamps, ...).
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
    #[serde(default)]
    pub object: Option<ObjectSpec>,
    #[serde(default)]
    pub degradation: Degradation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Background {
    Uniform {
        color: Rgb,
    },
    Gradient {
        from: Rgb,
        to: Rgb,
        axis: Axis,
    },
    /// Square cells of side `grain`, each brightened or darkened by up to `amplitude`.
    Speckle {
        base: Rgb,
        amplitude: f64,
        grain: usize,
    },
    /// Bars of `bar_width` pixels every `pitch` pixels in both directions,
    /// with optional per-pixel `texture` modulation of the surface.
    Grid {
        surface: Rgb,
        bar: Rgb,
        pitch: usize,
        bar_width: usize,
        #[serde(default)]
        texture: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Centred on the anchor.
    Rectangle { width: usize, height: usize },
    Ellipse { rx: f64, ry: f64 },
    /// Vertices relative to the anchor; even-odd fill.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub color: Rgb,
    pub entry_frame: usize,
    /// First frame at which the object rests at the last waypoint. A value
    /// equal to the frame count means it never settles.
    pub stop_frame: usize,
    /// Anchor waypoints, traversed with equal time per segment.
    pub path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Degradation {
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub illumination: Option<IlluminationSpec>,
    #[serde(default)]
    pub haze: Option<HazeSpec>,
    #[serde(default)]
    pub droplets: Option<DropletSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    #[serde(default)]
    pub onset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientDirection {
    Horizontal,
    Vertical,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminationSpec {
    pub direction: GradientDirection,
    /// Total V change across the frame; the ramp is centred on zero.
    pub strength: f64,
    #[serde(default)]
    pub onset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazeSpec {
    pub transmission: f64,
    pub airlight: Rgb,
    #[serde(default)]
    pub onset: usize,
}

/// Short-lived bright specks (water droplets) on frames `onset..end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletSpec {
    pub count: usize,
    pub radius: usize,
    pub intensity: f64,
    #[serde(default)]
    pub onset: usize,
    pub end: usize,
}

fn check_rgb(name: &str, c: &Rgb) -> Result<()> {
    if c.iter().all(|v| (0.0..=1.0).contains(v)) {
        Ok(())
    } else {
        Err(Error::InvalidScenario(format!("{name} {c:?} outside [0, 1]")))
    }
}

impl Shape {
    /// Pixel offsets `(x0, y0, x1, y1)` (inclusive) covered relative to the anchor.
    pub(crate) fn extent(&self) -> (i64, i64, i64, i64) {
        match self {
            Shape::Rectangle { width, height } => {
                let (w, h) = (*width as i64, *height as i64);
                (-(w / 2), -(h / 2), w - w / 2 - 1, h - h / 2 - 1)
            }
            Shape::Ellipse { rx, ry } => {
                let (x, y) = (rx.floor() as i64, ry.floor() as i64);
                (-x, -y, x, y)
            }
            Shape::Polygon { vertices } => {
                let xs = vertices.iter().map(|v| v[0]);
                let ys = vertices.iter().map(|v| v[1]);
                (
                    xs.clone().fold(f64::INFINITY, f64::min).floor() as i64,
                    ys.clone().fold(f64::INFINITY, f64::min).floor() as i64,
                    xs.fold(f64::NEG_INFINITY, f64::max).ceil() as i64,
                    ys.fold(f64::NEG_INFINITY, f64::max).ceil() as i64,
                )
            }
        }
    }

    /// Whether offset `(dx, dy)` from the anchor is inside the shape.
    pub(crate) fn contains(&self, dx: i64, dy: i64) -> bool {
        match self {
            Shape::Rectangle { .. } => {
                let (x0, y0, x1, y1) = self.extent();
                (x0..=x1).contains(&dx) && (y0..=y1).contains(&dy)
            }
            Shape::Ellipse { rx, ry } => {
                let (u, v) = (dx as f64 / rx, dy as f64 / ry);
                u * u + v * v <= 1.0
            }
            Shape::Polygon { vertices } => {
                let (px, py) = (dx as f64, dy as f64);
                let mut inside = false;
                let n = vertices.len();
                for i in 0..n {
                    let [xi, yi] = vertices[i];
                    let [xj, yj] = vertices[(i + n - 1) % n];
                    if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return bad("width, height and frames must be positive".into());
        }
        match &self.background {
            Background::Uniform { color } => check_rgb("background color", color)?,
            Background::Gradient { from, to, .. } => {
                check_rgb("gradient start", from)?;
                check_rgb("gradient end", to)?;
            }
            Background::Speckle { base, amplitude, grain } => {
                check_rgb("speckle base", base)?;
                if *grain == 0 || *amplitude < 0.0 {
                    return bad("speckle needs grain >= 1 and amplitude >= 0".into());
                }
            }
            Background::Grid { surface, bar, pitch, bar_width, texture } => {
                check_rgb("grid surface", surface)?;
                check_rgb("grid bar", bar)?;
                if *pitch == 0 || *bar_width >= *pitch || *texture < 0.0 {
                    return bad("grid needs 0 <= bar_width < pitch and texture >= 0".into());
                }
            }
        }
        for f in &self.fixtures {
            check_rgb("fixture color", &f.color)?;
            if f.x + f.width > self.width || f.y + f.height > self.height {
                return bad(format!("fixture at {},{} leaves the frame", f.x, f.y));
            }
        }
        if let Some(obj) = &self.object {
            check_rgb("object color", &obj.color)?;
            if obj.stop_frame < obj.entry_frame {
                return bad("object stop_frame precedes entry_frame".into());
            }
            if obj.entry_frame >= self.frames || obj.stop_frame > self.frames {
                return bad("object frames fall outside the sequence".into());
            }
            if obj.path.is_empty() {
                return bad("object path needs at least one waypoint".into());
            }
            match &obj.shape {
                Shape::Rectangle { width, height } if *width == 0 || *height == 0 => {
                    return bad("rectangle needs positive size".into())
                }
                Shape::Ellipse { rx, ry } if !(*rx > 0.0 && *ry > 0.0) => {
                    return bad("ellipse needs positive radii".into())
                }
                Shape::Polygon { vertices } if vertices.len() < 3 => {
                    return bad("polygon needs at least three vertices".into())
                }
                _ => {}
            }
            let (x0, y0, x1, y1) = obj.shape.extent();
            for p in &obj.path {
                let (ax, ay) = (p[0].round() as i64, p[1].round() as i64);
                if ax + x0 < 0
                    || ay + y0 < 0
                    || ax + x1 >= self.width as i64
                    || ay + y1 >= self.height as i64
                {
                    return bad(format!("object leaves the frame at waypoint {p:?}"));
                }
            }
        }
        let d = &self.degradation;
        if let Some(n) = &d.noise {
            if !(n.sigma >= 0.0) {
                return bad("noise sigma must be >= 0".into());
            }
        }
        if let Some(h) = &d.haze {
            check_rgb("haze airlight", &h.airlight)?;
            if !(0.0..=1.0).contains(&h.transmission) {
                return bad("haze transmission must be in [0, 1]".into());
            }
        }
        if let Some(i) = &d.illumination {
            if !(i.strength.is_finite() && i.strength.abs() <= 1.0) {
                return bad("illumination strength must be in [-1, 1]".into());
            }
        }
        if let Some(dr) = &d.droplets {
            if !(0.0..=1.0).contains(&dr.intensity) || dr.end < dr.onset {
                return bad("droplets need intensity in [0, 1] and end >= onset".into());
            }
        }
        Ok(())
    }
}
