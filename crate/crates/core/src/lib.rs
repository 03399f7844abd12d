//! Static object detection in frame sequences.
//!
//! Every frame is compared against a fixed reference frame; pixels that a
//! mixture-of-Gaussians model still considers moving are removed from that
//! difference, and the largest remaining blob is reported as the static
//! object. Illumination equalization and de-hazing run first; morphology and
//! connected-component analysis clean up the fused mask.

pub mod error;
pub mod framediff;
pub mod fusion;
pub mod imgcore;
pub mod mog;
pub mod pipeline;
pub mod preprocess;
pub mod synthgen;

pub use error::{Error, Result};
