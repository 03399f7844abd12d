//! Dual-mask fusion and post-processing: subtract the moving-pixel mask from
//! the difference mask, open the result, and outline the largest blob.

mod components;
mod hull;
mod morphology;

pub use components::{connected_components, largest_component, BoundingBox, Component};
pub use hull::{convex_hull, cross, Point};
pub use morphology::{dilate, erode, open, StructuringElement};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imgcore::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostParams {
    pub erode_size: usize,
    pub dilate_size: usize,
    /// Minimum blob area in pixels; `None` means 0.5% of the mask area.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_area: Option<usize>,
}

impl Default for PostParams {
    fn default() -> Self {
        PostParams {
            erode_size: 3,
            dilate_size: 5,
            min_area: None,
        }
    }
}

impl PostParams {
    pub fn resolved_min_area(&self, width: usize, height: usize) -> usize {
        self.min_area
            .unwrap_or_else(|| ((width * height) as f64 * 0.005).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        StructuringElement::ellipse(self.erode_size)?;
        StructuringElement::ellipse(self.dilate_size)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: usize,
    pub component: Component,
    pub hull: Vec<Point>,
}

/// `dfg AND NOT bsfg`.
pub fn subtract_masks(dfg: &BinaryMask, bsfg: &BinaryMask) -> Result<BinaryMask> {
    dfg.ensure_same_dims(bsfg.dims())?;
    let bits = dfg
        .bits()
        .iter()
        .zip(bsfg.bits())
        .map(|(d, b)| *d && !*b)
        .collect();
    BinaryMask::from_bits(dfg.width(), dfg.height(), bits)
}

/// Every intermediate of the post-processing chain.
#[derive(Debug, Clone)]
pub struct PostOutput {
    pub fused: BinaryMask,
    pub cleaned: BinaryMask,
    pub components: Vec<Component>,
    pub detection: Option<Detection>,
}

pub fn detect_detailed(
    frame_index: usize,
    dfg: &BinaryMask,
    bsfg: &BinaryMask,
    params: &PostParams,
) -> Result<PostOutput> {
    let fused = subtract_masks(dfg, bsfg)?;
    let eroded = erode(&fused, &StructuringElement::ellipse(params.erode_size)?);
    let cleaned = dilate(&eroded, &StructuringElement::ellipse(params.dilate_size)?);
    let components = connected_components(&cleaned);
    let min_area = params.resolved_min_area(dfg.width(), dfg.height());
    let detection = match largest_component(&components, min_area) {
        Some(c) => {
            let points: Vec<Point> = c
                .pixels
                .iter()
                .map(|&(x, y)| (x as i64, y as i64))
                .collect();
            Some(Detection {
                frame_index,
                component: c.clone(),
                hull: convex_hull(&points)?,
            })
        }
        None => None,
    };
    Ok(PostOutput {
        fused,
        cleaned,
        components,
        detection,
    })
}

/// Subtract, erode, dilate, label, and return the largest blob with its hull.
pub fn detect(
    frame_index: usize,
    dfg: &BinaryMask,
    bsfg: &BinaryMask,
    params: &PostParams,
) -> Result<Option<Detection>> {
    Ok(detect_detailed(frame_index, dfg, bsfg, params)?.detection)
}

impl Detection {
    /// Every pixel of the detected component lies inside or on the hull.
    pub fn hull_contains_component(&self) -> bool {
        hull_contains(&self.hull, &self.component.pixels)
    }
}

pub(crate) fn hull_contains(hull: &[Point], pixels: &[(u32, u32)]) -> bool {
    if hull.len() < 3 {
        return pixels.iter().all(|&(x, y)| {
            let p = (x as i64, y as i64);
            hull.len() == 1 && hull[0] == p
                || hull.len() == 2 && cross(hull[0], hull[1], p) == 0
        });
    }
    pixels.iter().all(|&(x, y)| {
        let p = (x as i64, y as i64);
        (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= 0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels(w: usize, h: usize, set: &[(usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| set.contains(&(x, y)))
    }

    #[test]
    fn subtraction_truth_table() {
        let dfg = pixels(4, 4, &[(1, 1), (2, 2)]);
        let bsfg = pixels(4, 4, &[(2, 2)]);
        assert_eq!(subtract_masks(&dfg, &bsfg).unwrap(), pixels(4, 4, &[(1, 1)]));
        assert_eq!(subtract_masks(&dfg, &BinaryMask::new(4, 4)).unwrap(), dfg);
        assert!(subtract_masks(&dfg, &dfg).unwrap().is_empty());
        assert!(subtract_masks(&dfg, &BinaryMask::new(4, 3)).is_err());
    }

    /// Erode then dilate straight from the definitions, for the composed oracle.
    fn brute_open(m: &BinaryMask, e: usize, d: usize) -> BinaryMask {
        let ee = StructuringElement::ellipse(e).unwrap();
        let de = StructuringElement::ellipse(d).unwrap();
        let within = |se: &StructuringElement, f: &dyn Fn(isize, isize) -> bool, all: bool| {
            let r = (se.size() / 2) as isize;
            let mut hits = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
                .filter(|&(dx, dy)| se.contains(dx, dy))
                .map(|(dx, dy)| f(dx, dy));
            if all { hits.all(|b| b) } else { hits.any(|b| b) }
        };
        let eroded = BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            within(&ee, &|dx, dy| m.get_or_background(x as isize + dx, y as isize + dy), true)
        });
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            within(&de, &|dx, dy| eroded.get_or_background(x as isize + dx, y as isize + dy), false)
        })
    }

    #[test]
    fn block_detection_area_matches_morphology_oracle() {
        let dfg = BinaryMask::from_fn(60, 60, |x, y| (20..40).contains(&x) && (20..40).contains(&y));
        let params = PostParams {
            min_area: Some(50),
            ..PostParams::default()
        };
        let d = detect(7, &dfg, &BinaryMask::new(60, 60), &params).unwrap().unwrap();
        let expected = brute_open(&dfg, 3, 5).popcount();
        assert_eq!(d.component.area, expected);
        // 18x18 after erosion, regrown to 22x22 less one pixel per corner.
        assert_eq!(expected, 22 * 22 - 4);
        assert_eq!(d.frame_index, 7);
        assert!(d.hull_contains_component());
    }

    #[test]
    fn empty_or_fully_moving_gives_nothing() {
        let params = PostParams::default();
        let empty = BinaryMask::new(30, 30);
        assert!(detect(0, &empty, &empty, &params).unwrap().is_none());
        let dfg = BinaryMask::from_fn(30, 30, |x, y| x > 5 && y > 5 && x < 25 && y < 25);
        assert!(detect(0, &dfg, &dfg, &params).unwrap().is_none());
    }

    #[test]
    fn min_area_is_monotone() {
        let dfg = BinaryMask::from_fn(40, 40, |x, y| {
            (5..15).contains(&x) && (5..15).contains(&y) || (25..32).contains(&x) && (25..38).contains(&y)
        });
        let empty = BinaryMask::new(40, 40);
        let mut seen_none = false;
        for min_area in (0..400).step_by(10) {
            let p = PostParams { min_area: Some(min_area), ..PostParams::default() };
            let d = detect(0, &dfg, &empty, &p).unwrap();
            if seen_none {
                assert!(d.is_none());
            }
            seen_none |= d.is_none();
        }
        assert!(seen_none);
    }

    #[test]
    fn default_min_area_is_half_percent() {
        assert_eq!(PostParams::default().resolved_min_area(300, 300), 450);
    }
}
