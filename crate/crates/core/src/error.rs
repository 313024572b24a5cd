//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DswError {
    #[error("disparity must be positive, got {0}")]
    NonPositiveDisparity(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("target IoU must lie in (0, 1], got {0}")]
    InvalidTheta(f64),

    #[error("disparity {disparity} outside LUT range [{d_min}, {d_max}]")]
    OutOfRange {
        disparity: f64,
        d_min: f64,
        d_max: f64,
    },

    #[error("object {obj_w}x{obj_h} px does not fit a {img_w}x{img_h} px image")]
    ObjectLargerThanImage {
        obj_w: f64,
        obj_h: f64,
        img_w: u32,
        img_h: u32,
    },

    #[error("image disparities reach {max_seen} but the LUT ends at {d_max}; rebuild the LUT for this range")]
    LutRangeMismatch { max_seen: f64, d_max: f64 },

    #[error("empty disparity image")]
    EmptyImage,

    #[error("malformed calibration: {0}")]
    MalformedCalib(String),

    #[error("stereo baseline must be positive, got {0}")]
    NonPositiveBaseline(f64),

    #[error("unsupported disparity format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        got_w: u32,
        got_h: u32,
    },

    #[error("plant centered at ({x}, {y}) with disparity {disparity} falls outside the {img_w}x{img_h} image")]
    PlantOutOfBounds {
        x: u32,
        y: u32,
        disparity: f64,
        img_w: u32,
        img_h: u32,
    },

    #[error("degenerate box: width and height must be positive")]
    DegenerateBox,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, DswError>;
