//! ROI cropping, illumination equalization and de-hazing.

mod dehaze;
mod equalize;
mod roi;

pub use dehaze::{
    dark_channel, dehaze, dehaze_detailed, estimate_atmospheric_light, DehazeOutput, DehazeParams,
};
pub use equalize::{
    column_edge_means, correction_coefficient, edge_means, equalize_horizontal,
    equalize_horizontal_unclamped, equalize_hsv, equalize_luma, equalize_vertical,
    equalize_vertical_unclamped, illumination_equalize, row_edge_means, EdgeMeans,
    EqualizationParams,
};
pub use roi::{crop_roi, Roi};
