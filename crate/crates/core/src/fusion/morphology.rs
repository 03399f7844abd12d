use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

/// Filled discrete ellipse inscribed in a `size x size` square.
///
/// A pixel belongs to the element when its centre lies inside the circle of
/// radius `size / 2` touching the square's sides. A 3x3 element is therefore
/// the full square and 5x5 is a 21-pixel disc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    size: usize,
    bits: Vec<bool>,
}

impl StructuringElement {
    pub fn ellipse(size: usize) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "structuring element size must be odd, got {size}"
            )));
        }
        let r = (size / 2) as i64;
        let semi = size as f64 / 2.0;
        let mut bits = Vec::with_capacity(size * size);
        for dy in -r..=r {
            for dx in -r..=r {
                bits.push(((dx * dx + dy * dy) as f64) <= semi * semi);
            }
        }
        Ok(StructuringElement { size, bits })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        let r = (self.size / 2) as isize;
        if dx.abs() > r || dy.abs() > r {
            return false;
        }
        self.bits[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    /// Offsets `(dx, dy)` of the set bits, relative to the centre.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = (self.size / 2) as isize;
        (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| self.contains(dx, dy))
            .collect()
    }
}

fn apply(mask: &BinaryMask, se: &StructuringElement, all: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    let offsets = se.offsets();
    let mut bits = vec![false; w * h];
    bits.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let hit = |&(dx, dy): &(isize, isize)| {
                mask.get_or_background(x as isize + dx, y as isize + dy)
            };
            *out = if all {
                offsets.iter().all(hit)
            } else {
                offsets.iter().any(hit)
            };
        }
    });
    BinaryMask::from_bits(w, h, bits).expect("same dimensions")
}

/// Pixel survives iff every element offset lands on foreground. Outside the
/// image counts as background.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(mask, se, true)
}

/// Pixel is set iff any element offset lands on foreground.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(mask, se, false)
}

pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}
