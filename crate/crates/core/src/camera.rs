//! Pinhole stereo geometry.
//!
//! A rectified stereo rig maps disparity d to depth Z = fx * baseline / d.
//! Placing the object model at that depth and projecting its corners through
//! the intrinsic matrix gives the pixel size a matching bounding box must
//! have. With zero skew the corner difference collapses to two scalar
//! formulas, which is what [`project_model`] computes.

use crate::error::{DswError, Result};

/// Intrinsic parameters of the rectified left camera plus the stereo baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    /// Focal length x, pixels.
    pub fx: f64,
    /// Focal length y, pixels.
    pub fy: f64,
    /// Principal point x, pixels.
    pub cx: f64,
    /// Principal point y, pixels.
    pub cy: f64,
    /// Skew parameter, pixels. Zero for rectified KITTI calibrations.
    pub skew: f64,
    /// Stereo baseline, meters.
    pub baseline: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, baseline: f64) -> Result<Self> {
        Self::with_skew(fx, fy, cx, cy, 0.0, baseline)
    }

    pub fn with_skew(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64, baseline: f64) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            skew,
            baseline,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0) || !(self.fy > 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0) || !(self.cy >= 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "principal point must be nonnegative, got cx={} cy={}",
                self.cx, self.cy
            )));
        }
        if !(self.baseline > 0.0) {
            return Err(DswError::NonPositiveBaseline(self.baseline));
        }
        Ok(())
    }

    /// KITTI-like rig used throughout tests and as the synthetic default.
    pub fn kitti_like() -> Self {
        Self {
            fx: 721.0,
            fy: 721.0,
            cx: 609.0,
            cy: 172.0,
            skew: 0.0,
            baseline: 0.54,
        }
    }
}

/// Real-world object extent. One model per object class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectModel {
    /// Width, meters.
    pub width_world: f64,
    /// Height, meters.
    pub height_world: f64,
}

impl ObjectModel {
    pub fn new(width_world: f64, height_world: f64) -> Result<Self> {
        if !(width_world > 0.0) || !(height_world > 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "object model dimensions must be positive, got {}x{}",
                width_world, height_world
            )));
        }
        Ok(Self {
            width_world,
            height_world,
        })
    }

    /// Aspect ratio r = height / width.
    pub fn aspect(&self) -> f64 {
        self.height_world / self.width_world
    }

    /// Mean pedestrian extent: 0.60 m wide, 1.73 m tall.
    pub fn pedestrian() -> Self {
        Self {
            width_world: 0.60,
            height_world: 1.73,
        }
    }
}

impl Default for ObjectModel {
    fn default() -> Self {
        Self::pedestrian()
    }
}

/// Point in the camera frame, meters. x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Pixel size of a projected object box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoxSize {
    pub width_px: u32,
    pub height_px: u32,
}

/// Depth from disparity: Z = fx * baseline / d.
pub fn depth_from_disparity(intr: &CameraIntrinsics, disparity: f64) -> Result<f64> {
    if !(disparity > 0.0) {
        return Err(DswError::NonPositiveDisparity(disparity));
    }
    Ok(intr.fx * intr.baseline / disparity)
}

/// Pixel size of the object model seen at the given disparity.
///
/// Corner difference through the intrinsic matrix; the principal point and
/// depth cancel, leaving width = d * w / B and height = (fy/fx) * d * h / B
/// for zero skew. A nonzero skew widens the bounding box of the projected
/// corners by |skew| * h / Z. Rounded half-up once, at the end.
pub fn project_model(
    intr: &CameraIntrinsics,
    model: &ObjectModel,
    disparity: f64,
) -> Result<BoxSize> {
    if !(disparity > 0.0) {
        return Err(DswError::NonPositiveDisparity(disparity));
    }
    // d / B == fx / Z; keeping this factor first preserves exact halves in
    // the common fx == fy case (e.g. 86.5 must round up to 87, not sit at
    // 86.4999... from an equivalent but differently ordered expression).
    let scale = disparity / intr.baseline;
    let width =
        scale * model.width_world + (intr.skew.abs() / intr.fx) * (scale * model.height_world);
    let height = (intr.fy / intr.fx) * (scale * model.height_world);
    Ok(BoxSize {
        width_px: width.round() as u32,
        height_px: height.round() as u32,
    })
}

/// Back-project pixel (u, v) with disparity d to a camera-frame point.
pub fn backproject(intr: &CameraIntrinsics, u: f64, v: f64, disparity: f64) -> Result<Point3D> {
    let z = depth_from_disparity(intr, disparity)?;
    let y = (v - intr.cy) * z / intr.fy;
    let x = ((u - intr.cx) * z - intr.skew * y) / intr.fx;
    Ok(Point3D { x, y, z })
}

/// Project a camera-frame point to pixel coordinates.
pub fn project_point(intr: &CameraIntrinsics, p: &Point3D) -> Result<(f64, f64)> {
    if !(p.z > 0.0) {
        return Err(DswError::InvalidConfig(format!(
            "cannot project point behind the camera, z={}",
            p.z
        )));
    }
    let u = (intr.fx * p.x + intr.skew * p.y) / p.z + intr.cx;
    let v = intr.fy * p.y / p.z + intr.cy;
    Ok((u, v))
}
