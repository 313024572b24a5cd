//! Disparity Sliding Window (DSW) object proposal generation.
//!
//! Given a dense stereo disparity image and the real-world size of an object
//! class, a pinhole projection predicts the pixel size a matching bounding
//! box must have at every pixel. Scanning the image with steps proportional
//! to that predicted size yields a small set of proposals with a provable
//! overlap guarantee, instead of the usual exhaustive multi-scale sweep.
//!
//! The crate contains:
//! - [`camera`]: pinhole stereo geometry (projection, back-projection).
//! - [`sizelut`]: quantized disparity -> box size lookup table.
//! - [`theory`]: closed forms for hypothesis counts and error tolerances of
//!   conventional sliding-window search.
//! - [`proposer`]: the adaptive DSW scan with homogeneity and 3D ROI filters.
//! - [`baseline`]: a conventional dense sliding-window generator.
//! - [`dataset`]: KITTI-format ingestion and synthetic scene generation.
//! - [`metrics`]: IoU, recall curves, proposals-per-image, runtime stats.

pub mod baseline;
pub mod camera;
pub mod dataset;
pub mod error;
pub mod fmt;
pub mod metrics;
pub mod proposer;
pub mod sizelut;
pub mod theory;

pub use camera::{backproject, depth_from_disparity, project_model};
pub use camera::{BoxSize, CameraIntrinsics, ObjectModel, Point3D};
pub use error::{DswError, Result};
pub use proposer::{generate, DisparityImage, DswConfig, Proposal, Region3D};
pub use sizelut::{build_lut, LutConfig, SizeLut};
