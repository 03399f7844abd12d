use serde::{Deserialize, Serialize};

use crate::imgcore::BinaryMask;

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// 1-based, assigned in raster order of each component's first pixel.
    pub label: u32,
    pub area: usize,
    pub bbox: BoundingBox,
    pub centroid: (f64, f64),
    /// `(x, y)` in raster order.
    pub pixels: Vec<(u32, u32)>,
}

impl Component {
    pub fn to_mask(&self, width: usize, height: usize) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for &(x, y) in &self.pixels {
            m.set(x as usize, y as usize, true);
        }
        m
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Keeps the smaller provisional label as root so labels follow raster order.
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// 8-connected components of the foreground, via two-pass union-find labelling.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut sets = DisjointSet { parent: vec![0] };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            let mut current = 0u32;
            let neighbours = [
                (x.wrapping_sub(1), y, x > 0),
                (x.wrapping_sub(1), y.wrapping_sub(1), x > 0 && y > 0),
                (x, y.wrapping_sub(1), y > 0),
                (x + 1, y.wrapping_sub(1), y > 0 && x + 1 < w),
            ];
            for (nx, ny, valid) in neighbours {
                if !valid {
                    continue;
                }
                let l = labels[ny * w + nx];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if l != current {
                    sets.union(current, l);
                }
            }
            if current == 0 {
                current = sets.parent.len() as u32;
                sets.parent.push(current);
            }
            labels[y * w + x] = current;
        }
    }

    // Roots are the smallest provisional label in each set, and provisional
    // labels are issued in raster order, so sorting roots gives raster order.
    let mut final_label = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    for l in 1..sets.parent.len() as u32 {
        if sets.find(l) == l {
            next += 1;
            final_label[l as usize] = next;
        }
    }

    let mut components: Vec<Component> = (1..=next)
        .map(|label| Component {
            label,
            area: 0,
            bbox: BoundingBox {
                x_min: usize::MAX,
                y_min: usize::MAX,
                x_max: 0,
                y_max: 0,
            },
            centroid: (0.0, 0.0),
            pixels: Vec::new(),
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == 0 {
                continue;
            }
            let root = sets.find(l);
            let c = &mut components[final_label[root as usize] as usize - 1];
            c.area += 1;
            c.pixels.push((x as u32, y as u32));
            c.bbox.x_min = c.bbox.x_min.min(x);
            c.bbox.y_min = c.bbox.y_min.min(y);
            c.bbox.x_max = c.bbox.x_max.max(x);
            c.bbox.y_max = c.bbox.y_max.max(y);
            c.centroid.0 += x as f64;
            c.centroid.1 += y as f64;
        }
    }
    for c in &mut components {
        c.centroid = (c.centroid.0 / c.area as f64, c.centroid.1 / c.area as f64);
    }
    components
}

/// Largest component with `area >= min_area`; ties go to the smaller label.
pub fn largest_component(components: &[Component], min_area: usize) -> Option<&Component> {
    components
        .iter()
        .filter(|c| c.area >= min_area)
        .fold(None, |best: Option<&Component>, c| match best {
            Some(b) if b.area >= c.area => Some(b),
            _ => Some(c),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMask::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn empty_mask_has_no_components() {
        assert!(connected_components(&BinaryMask::new(6, 4)).is_empty());
    }

    #[test]
    fn diagonal_pixels_connect() {
        let cs = connected_components(&mask(&["#.", ".#"]));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].area, 2);
    }

    #[test]
    fn labels_follow_raster_order_and_merge_u_shapes() {
        let m = mask(&[
            "#...#..#", //
            "#...#...", //
            "#####...", //
            "......##",
        ]);
        let cs = connected_components(&m);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0].pixels[0], (0, 0));
        assert_eq!(cs[0].area, 9);
        assert_eq!(cs[1].pixels[0], (7, 0));
        assert_eq!(cs[2].area, 2);
        assert_eq!(
            cs[0].bbox,
            BoundingBox { x_min: 0, y_min: 0, x_max: 4, y_max: 2 }
        );
        assert_eq!(cs.iter().map(|c| c.area).sum::<usize>(), m.popcount());
    }

    #[test]
    fn centroid_of_block() {
        let m = BinaryMask::from_fn(10, 10, |x, y| (2..6).contains(&x) && (3..5).contains(&y));
        let cs = connected_components(&m);
        assert_eq!(cs[0].centroid, (3.5, 3.5));
        assert_eq!(cs[0].bbox.width(), 4);
        assert_eq!(cs[0].bbox.height(), 2);
    }

    fn with_areas(areas: &[usize]) -> Vec<Component> {
        areas
            .iter()
            .enumerate()
            .map(|(i, &area)| Component {
                label: i as u32 + 1,
                area,
                bbox: BoundingBox { x_min: 0, y_min: 0, x_max: 0, y_max: 0 },
                centroid: (0.0, 0.0),
                pixels: vec![],
            })
            .collect()
    }

    #[test]
    fn largest_component_rules() {
        assert!(largest_component(&[], 0).is_none());
        let cs = with_areas(&[5, 40, 12]);
        assert_eq!(largest_component(&cs, 10).unwrap().area, 40);
        assert!(largest_component(&cs, 41).is_none());
        let tied = with_areas(&[7, 30, 30]);
        assert_eq!(largest_component(&tied, 1).unwrap().label, 2);
    }
}
