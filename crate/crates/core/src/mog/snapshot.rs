//! Binary snapshot of a [`BackgroundModel`].
//!
//! Layout, all little-endian:
//!
//! | offset | size | field |
//! |--------|------|-------|
//! | 0      | 8    | magic `SODMOG01` |
//! | 8      | 4    | width (u32) |
//! | 12     | 4    | height (u32) |
//! | 16     | 4    | K (u32) |
//! | 20     | 40   | learning rate, match threshold, background portion, initial variance, variance floor (f64 each) |
//! | 60     | 24·W·H·K | per pixel in raster order, per component in fitness order: weight, mean, variance (f64 each) |

use super::{BackgroundModel, Gaussian, MogParams};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SODMOG01";
const HEADER_LEN: usize = 60;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Snapshot(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

impl BackgroundModel {
    pub fn to_snapshot(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.mixtures.len() * 24);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        for v in [self.width, self.height, self.params.components] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let p = &self.params;
        for v in [
            p.learning_rate,
            p.match_threshold,
            p.background_portion,
            p.initial_variance,
            p.variance_floor,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for g in &self.mixtures {
            for v in [g.weight, g.mean, g.variance] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if &r.take::<8>()? != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let components = r.u32()? as usize;
        let params = MogParams {
            components,
            learning_rate: r.f64()?,
            match_threshold: r.f64()?,
            background_portion: r.f64()?,
            initial_variance: r.f64()?,
            variance_floor: r.f64()?,
        };
        params.validate()?;
        let count = width * height * components;
        if bytes.len() != HEADER_LEN + count * 24 {
            return Err(Error::Snapshot(format!(
                "expected {} bytes for {width}x{height}x{components}, got {}",
                HEADER_LEN + count * 24,
                bytes.len()
            )));
        }
        let mut mixtures = Vec::with_capacity(count);
        for _ in 0..count {
            mixtures.push(Gaussian {
                weight: r.f64()?,
                mean: r.f64()?,
                variance: r.f64()?,
            });
        }
        Ok(BackgroundModel {
            width,
            height,
            params,
            mixtures,
        })
    }
}
