//! The adaptive disparity sliding window scan.
//!
//! The image is traversed row-major. At each visited pixel the LUT predicts
//! the box a model-sized object would occupy there; the box is emitted as a
//! proposal (centered on the pixel) iff it survives clipping and an interior
//! homogeneity check. The step to the next pixel is proportional to the
//! predicted box size, so near objects are scanned coarsely and far objects
//! finely, with a disparity-jump correction so small objects cannot be
//! stepped over.

use std::io::Write;

use crate::camera::{backproject, BoxSize, CameraIntrinsics, Point3D};
use crate::error::{DswError, Result};
use crate::fmt::sig6;
use crate::sizelut::SizeLut;
use crate::theory::positioning_error;

/// Dense per-pixel disparity map. Values <= 0 are invalid (unmatched).
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
    /// Sentinel written for invalid pixels, <= 0.
    pub invalid_marker: f32,
}

impl DisparityImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(DswError::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                got_w: data.len() as u32,
                got_h: 1,
            });
        }
        Ok(Self {
            width,
            height,
            data,
            invalid_marker: 0.0,
        })
    }

    /// Image filled with a single value.
    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; (width as usize) * (height as usize)],
            invalid_marker: 0.0,
        }
    }

    /// All-invalid image.
    pub fn blank(width: u32, height: u32) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.data[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: f32) {
        self.data[(y as usize) * (self.width as usize) + x as usize] = value;
    }

    #[inline]
    pub fn is_valid(value: f32) -> bool {
        value > 0.0
    }

    pub fn max_disparity(&self) -> f32 {
        self.data.iter().cloned().fold(0.0, f32::max)
    }
}

/// Axis-aligned camera-frame volume; pixels back-projecting outside are
/// discarded before scanning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region3D {
    pub min: Point3D,
    pub max: Point3D,
}

impl Region3D {
    pub fn new(min: Point3D, max: Point3D) -> Result<Self> {
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(DswError::InvalidConfig(
                "3D region min must not exceed max".into(),
            ));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Point3D) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogeneityMode {
    /// Threshold compares stddev / mean.
    Relative,
    /// Threshold compares raw stddev in disparity units.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DswConfig {
    /// Target IoU the adaptive steps guarantee, in (0, 1).
    pub theta_iou: f64,
    /// Homogeneity threshold; pass when the measured spread is <= sigma.
    pub homogeneity_sigma: f64,
    pub homogeneity_mode: HomogeneityMode,
    /// Disparity difference treated as a jump while stepping, > 0.
    pub jump_threshold: f64,
    /// Minimum (clipped) proposal width worth emitting.
    pub min_box_width_px: u32,
    /// Optional 3D region of interest.
    pub roi: Option<Region3D>,
    /// Smallest pixel advance, >= 1.
    pub min_step_px: u32,
}

impl Default for DswConfig {
    fn default() -> Self {
        Self {
            theta_iou: 0.5,
            homogeneity_sigma: 0.1,
            homogeneity_mode: HomogeneityMode::Relative,
            jump_threshold: 1.0,
            min_box_width_px: 10,
            roi: None,
            min_step_px: 1,
        }
    }
}

impl DswConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_iou > 0.0 && self.theta_iou < 1.0) {
            return Err(DswError::InvalidTheta(self.theta_iou));
        }
        if !(self.homogeneity_sigma >= 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "homogeneity sigma must be nonnegative, got {}",
                self.homogeneity_sigma
            )));
        }
        if !(self.jump_threshold > 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "jump threshold must be positive, got {}",
                self.jump_threshold
            )));
        }
        if self.min_step_px == 0 {
            return Err(DswError::InvalidConfig("min step must be >= 1 px".into()));
        }
        Ok(())
    }
}

/// One object hypothesis: a clipped pixel box with its source disparity.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    /// Top-left corner, pixels.
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    /// Disparity at the anchor pixel; negative sentinel for generators that
    /// carry no disparity.
    pub disparity: f64,
    /// fx * baseline / disparity.
    pub depth_m: f64,
    /// Homogeneity standard deviation, disparity units.
    pub homogeneity_stddev: f64,
    /// Scanned pixel this proposal was anchored at (box center before clip).
    pub anchor_x: u32,
    pub anchor_y: u32,
}

/// Per-run traversal counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerateStats {
    /// Anchors processed: valid disparity, in LUT range, inside ROI.
    pub visited: u64,
    pub emitted: u64,
    pub rejected_homogeneity: u64,
    pub rejected_clip: u64,
    /// Valid disparities outside the LUT range (within the tolerated slack).
    pub skipped_out_of_range: u64,
    /// Valid pixels excluded by the 3D ROI.
    pub skipped_roi: u64,
    /// Invalid-disparity pixel visits.
    pub invalid_pixels: u64,
}

#[derive(Debug, Clone)]
pub struct GenerateOutput {
    pub proposals: Vec<Proposal>,
    pub stats: GenerateStats,
    /// Row-major anchor mask (true = pixel was processed as an anchor);
    /// present when requested.
    pub visited_mask: Option<Vec<bool>>,
}

/// Adaptive steps for a predicted box: round(Delta * dim), at least
/// min_step, with Delta = 2 * positioning_error(theta).
pub fn step_sizes(lut_size: BoxSize, theta_iou: f64) -> Result<(u32, u32)> {
    if !(theta_iou > 0.0 && theta_iou < 1.0) {
        return Err(DswError::InvalidTheta(theta_iou));
    }
    if lut_size.width_px == 0 {
        return Err(DswError::DegenerateBox);
    }
    let delta = 2.0 * positioning_error(theta_iou)?;
    Ok(steps_for(lut_size, delta, 1))
}

#[inline]
fn steps_for(size: BoxSize, delta: f64, min_step: u32) -> (u32, u32) {
    let sx = (delta * size.width_px as f64).round() as u32;
    let sy = (delta * size.height_px as f64).round() as u32;
    (sx.max(min_step).max(1), sy.max(min_step).max(1))
}

/// Sample positions at 25/50/75% of a dimension, inset from the edges.
#[inline]
fn pattern_offsets(dim: u32) -> [u32; 3] {
    let m = (dim - 1) as f64;
    [
        (0.25 * m).round() as u32,
        (0.5 * m).round() as u32,
        (0.75 * m).round() as u32,
    ]
}

fn check_region(
    img: &DisparityImage,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    cfg: &DswConfig,
) -> (bool, f64) {
    if w == 0 || h == 0 {
        return (false, 0.0);
    }
    let xs = pattern_offsets(w);
    let ys = pattern_offsets(h);
    let mut samples = [0.0f64; 9];
    let mut n = 0usize;
    for &dy in &ys {
        let sy = y + dy;
        if sy >= img.height() {
            continue;
        }
        for &dx in &xs {
            let sx = x + dx;
            if sx >= img.width() {
                continue;
            }
            let v = img.at(sx, sy);
            if DisparityImage::is_valid(v) {
                samples[n] = v as f64;
                n += 1;
            }
        }
    }
    if n < 5 {
        return (false, 0.0);
    }
    let mean = samples[..n].iter().sum::<f64>() / n as f64;
    let var = samples[..n]
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    let stddev = var.sqrt();
    let measure = match cfg.homogeneity_mode {
        HomogeneityMode::Relative => stddev / mean,
        HomogeneityMode::Absolute => stddev,
    };
    // <= so that sigma = 0 still accepts perfectly constant interiors.
    (measure <= cfg.homogeneity_sigma, stddev)
}

/// Interior homogeneity of a proposal's box: population standard deviation
/// of a 3x3 sample pattern, edge-inset, ignoring invalid pixels. At least 5
/// valid samples are required.
pub fn homogeneity_check(img: &DisparityImage, prop: &Proposal, cfg: &DswConfig) -> (bool, f64) {
    check_region(img, prop.x, prop.y, prop.w, prop.h, cfg)
}

/// Per-pixel 3D ROI mask: true iff the pixel's disparity is valid and its
/// back-projection lies inside the region.
pub fn roi_filter(intr: &CameraIntrinsics, img: &DisparityImage, roi: &Region3D) -> Vec<bool> {
    let mut mask = vec![false; img.data().len()];
    let w = img.width() as usize;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let d = img.at(x, y);
            if !DisparityImage::is_valid(d) {
                continue;
            }
            if let Ok(p) = backproject(intr, x as f64, y as f64, d as f64) {
                mask[y as usize * w + x as usize] = roi.contains(&p);
            }
        }
    }
    mask
}

/// Run the adaptive scan and return the surviving proposals.
pub fn generate(
    img: &DisparityImage,
    intr: &CameraIntrinsics,
    lut: &SizeLut,
    cfg: &DswConfig,
) -> Result<Vec<Proposal>> {
    Ok(generate_full(img, intr, lut, cfg, false)?.proposals)
}

/// As [`generate`], additionally returning traversal counters and, when
/// `record_mask` is set, the anchor mask.
pub fn generate_full(
    img: &DisparityImage,
    intr: &CameraIntrinsics,
    lut: &SizeLut,
    cfg: &DswConfig,
    record_mask: bool,
) -> Result<GenerateOutput> {
    cfg.validate()?;
    intr.validate()?;
    if img.width() == 0 || img.height() == 0 {
        return Err(DswError::EmptyImage);
    }
    let lut_cfg = *lut.config();
    let max_seen = img.max_disparity() as f64;
    let slack = 0.1 * (lut_cfg.d_max - lut_cfg.d_min);
    if max_seen > lut_cfg.d_max + slack {
        return Err(DswError::LutRangeMismatch {
            max_seen,
            d_max: lut_cfg.d_max,
        });
    }

    let roi_mask = cfg.roi.as_ref().map(|roi| roi_filter(intr, img, roi));

    let delta = 2.0 * positioning_error(cfg.theta_iou)?;
    let min_step = cfg.min_step_px.max(1);
    let width = img.width();
    let height = img.height();
    let mut proposals = Vec::new();
    let mut stats = GenerateStats::default();
    let mut visited_mask = if record_mask {
        Some(vec![false; img.data().len()])
    } else {
        None
    };

    let mut y = 0u32;
    while y < height {
        // Conservative row advance: the minimum vertical step any anchor in
        // this row asked for. Rows without anchors advance minimally.
        let mut row_step: Option<u32> = None;
        let mut x = 0u32;
        while x < width {
            let raw = img.at(x, y);
            if !DisparityImage::is_valid(raw) {
                stats.invalid_pixels += 1;
                x += min_step;
                continue;
            }
            if let Some(mask) = &roi_mask {
                if !mask[y as usize * width as usize + x as usize] {
                    stats.skipped_roi += 1;
                    x += min_step;
                    continue;
                }
            }
            let d = raw as f64;
            let size = match lut.lookup(d) {
                Ok(s) => s,
                Err(_) => {
                    // Too close or (within the slack) too far for the table.
                    stats.skipped_out_of_range += 1;
                    x += min_step;
                    continue;
                }
            };
            if size.width_px == 0 || size.height_px == 0 {
                stats.skipped_out_of_range += 1;
                x += min_step;
                continue;
            }

            let (sx, sy) = steps_for(size, delta, min_step);
            stats.visited += 1;
            if let Some(mask) = &mut visited_mask {
                mask[y as usize * width as usize + x as usize] = true;
            }
            row_step = Some(row_step.map_or(sy, |s| s.min(sy)));

            // Box centered on the anchor, clipped to the image.
            let bx = x as i64 - (size.width_px / 2) as i64;
            let by = y as i64 - (size.height_px / 2) as i64;
            let x0 = bx.max(0) as u32;
            let y0 = by.max(0) as u32;
            let x1 = ((bx + size.width_px as i64).min(width as i64)).max(0) as u32;
            let y1 = ((by + size.height_px as i64).min(height as i64)).max(0) as u32;
            let cw = x1.saturating_sub(x0);
            let ch = y1.saturating_sub(y0);
            let full_area = size.width_px as u64 * size.height_px as u64;
            if cw == 0
                || ch == 0
                || 2 * (cw as u64 * ch as u64) < full_area
                || cw < cfg.min_box_width_px
            {
                stats.rejected_clip += 1;
            } else {
                let (pass, stddev) = check_region(img, x0, y0, cw, ch, cfg);
                if pass {
                    stats.emitted += 1;
                    proposals.push(Proposal {
                        x: x0,
                        y: y0,
                        w: cw,
                        h: ch,
                        disparity: d,
                        depth_m: intr.fx * intr.baseline / d,
                        homogeneity_stddev: stddev,
                        anchor_x: x,
                        anchor_y: y,
                    });
                } else {
                    stats.rejected_homogeneity += 1;
                }
            }

            // Advance, truncating at the first skipped pixel whose disparity
            // jumps away from the anchor's (an invalid pixel counts as a
            // jump): never step over a small object or a depth edge.
            let mut next = x.saturating_add(sx);
            if sx > 1 {
                let scan_end = next.min(width);
                let mut probe = x + 1;
                while probe < scan_end {
                    let v = img.at(probe, y);
                    if !DisparityImage::is_valid(v) || (v as f64 - d).abs() > cfg.jump_threshold {
                        next = probe;
                        break;
                    }
                    probe += 1;
                }
            }
            x = next;
        }
        y += row_step.unwrap_or(min_step).max(1);
    }

    Ok(GenerateOutput {
        proposals,
        stats,
        visited_mask,
    })
}

/// CSV: `image_id,x,y,w,h,disparity,depth_m,stddev`, one row per proposal.
pub fn write_proposals_csv<W: Write>(
    image_id: &str,
    proposals: &[Proposal],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "image_id,x,y,w,h,disparity,depth_m,stddev")?;
    for p in proposals {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            image_id,
            p.x,
            p.y,
            p.w,
            p.h,
            sig6(p.disparity),
            sig6(p.depth_m),
            sig6(p.homogeneity_stddev)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, ObjectModel};
    use crate::sizelut::{build_lut, LutConfig};

    fn setup() -> (CameraIntrinsics, SizeLut) {
        let intr = CameraIntrinsics::kitti_like();
        let lut = build_lut(&intr, &ObjectModel::pedestrian(), LutConfig::default()).unwrap();
        (intr, lut)
    }

    /// Constant-disparity rectangle of the model's projected size centered
    /// at (cx, cy) on an invalid background.
    fn plant(
        img: &mut DisparityImage,
        intr: &CameraIntrinsics,
        cx: u32,
        cy: u32,
        d: f32,
    ) -> (u32, u32, u32, u32) {
        let size =
            crate::camera::project_model(intr, &ObjectModel::pedestrian(), d as f64).unwrap();
        let x0 = cx - size.width_px / 2;
        let y0 = cy - size.height_px / 2;
        for y in y0..y0 + size.height_px {
            for x in x0..x0 + size.width_px {
                img.set(x, y, d);
            }
        }
        (x0, y0, size.width_px, size.height_px)
    }

    fn iou_rect(a: (u32, u32, u32, u32), p: &Proposal) -> f64 {
        let (ax, ay, aw, ah) = a;
        let ix0 = ax.max(p.x) as f64;
        let iy0 = ay.max(p.y) as f64;
        let ix1 = ((ax + aw).min(p.x + p.w)) as f64;
        let iy1 = ((ay + ah).min(p.y + p.h)) as f64;
        let iw = (ix1 - ix0).max(0.0);
        let ih = (iy1 - iy0).max(0.0);
        let inter = iw * ih;
        let union = (aw as f64 * ah as f64) + (p.w as f64 * p.h as f64) - inter;
        inter / union
    }

    #[test]
    fn step_size_examples() {
        assert_eq!(
            step_sizes(
                BoxSize {
                    width_px: 100,
                    height_px: 300
                },
                0.5
            )
            .unwrap(),
            (34, 103)
        );
        assert_eq!(
            step_sizes(
                BoxSize {
                    width_px: 2,
                    height_px: 6
                },
                0.5
            )
            .unwrap(),
            (1, 2)
        );
        assert_eq!(
            step_sizes(
                BoxSize {
                    width_px: 60,
                    height_px: 173
                },
                0.7
            )
            .unwrap(),
            (11, 31)
        );
        assert!(matches!(
            step_sizes(
                BoxSize {
                    width_px: 10,
                    height_px: 30
                },
                1.0
            ),
            Err(DswError::InvalidTheta(_))
        ));
    }

    #[test]
    fn homogeneity_constant_patch_passes_with_zero_stddev() {
        let img = DisparityImage::filled(120, 220, 40.0);
        let cfg = DswConfig::default();
        let (pass, stddev) = check_region(&img, 10, 10, 100, 200, &cfg);
        assert!(pass);
        assert_eq!(stddev, 0.0);
    }

    #[test]
    fn homogeneity_fails_on_vertical_ramp() {
        // Disparity climbing 30 -> 50 across the box rows: the sample rows
        // at 25/50/75% see 35/40/45, relative spread 0.102 > 0.1.
        let mut img = DisparityImage::blank(60, 101);
        for y in 0..101u32 {
            for x in 0..60u32 {
                img.set(x, y, 30.0 + 0.2 * y as f32);
            }
        }
        let cfg = DswConfig::default();
        let (pass, stddev) = check_region(&img, 0, 0, 60, 101, &cfg);
        assert!(!pass);
        assert!((stddev - 4.0824829).abs() < 1e-4);
        assert!((stddev / 40.0 - 0.10206) < 1e-4);
    }

    #[test]
    fn homogeneity_fails_below_five_valid_samples() {
        let mut img = DisparityImage::filled(40, 40, 25.0);
        // Invalidate two of the three sample rows: only 3 valid samples.
        let ys = pattern_offsets(40);
        for x in 0..40 {
            img.set(x, ys[0], 0.0);
            img.set(x, ys[1], 0.0);
        }
        let cfg = DswConfig::default();
        let (pass, _) = check_region(&img, 0, 0, 40, 40, &cfg);
        assert!(!pass);
    }

    #[test]
    fn homogeneity_degenerate_box_fails() {
        let img = DisparityImage::filled(10, 10, 5.0);
        let cfg = DswConfig::default();
        assert!(!check_region(&img, 0, 0, 0, 5, &cfg).0);
    }

    #[test]
    fn roi_excludes_out_of_depth_pixels() {
        let intr = CameraIntrinsics::kitti_like();
        // d = 38.934 -> z = 10 m; d = 19.467 -> z = 20 m.
        let mut img = DisparityImage::blank(4, 1);
        img.set(0, 0, 38.934);
        img.set(1, 0, 19.467);
        img.set(3, 0, 38.934);
        let roi = Region3D::new(
            Point3D {
                x: -1e6,
                y: -1e6,
                z: 0.0,
            },
            Point3D {
                x: 1e6,
                y: 1e6,
                z: 10.5,
            },
        )
        .unwrap();
        let mask = roi_filter(&intr, &img, &roi);
        assert_eq!(mask, vec![true, false, false, true]);
    }

    #[test]
    fn roi_brute_force_oracle() {
        let intr = CameraIntrinsics::kitti_like();
        let mut img = DisparityImage::blank(64, 48);
        for y in 0..48u32 {
            for x in 0..64u32 {
                if (x + y) % 3 != 0 {
                    img.set(x, y, 5.0 + ((x * 7 + y * 13) % 90) as f32);
                }
            }
        }
        let roi = Region3D::new(
            Point3D {
                x: -6.0,
                y: -1.0,
                z: 4.0,
            },
            Point3D {
                x: 6.0,
                y: 3.0,
                z: 40.0,
            },
        )
        .unwrap();
        let mask = roi_filter(&intr, &img, &roi);
        let mut expected = 0usize;
        for y in 0..48u32 {
            for x in 0..64u32 {
                let d = img.at(x, y);
                if DisparityImage::is_valid(d) {
                    let p = backproject(&intr, x as f64, y as f64, d as f64).unwrap();
                    let inside = roi.contains(&p);
                    assert_eq!(mask[y as usize * 64 + x as usize], inside);
                    expected += inside as usize;
                }
            }
        }
        assert_eq!(mask.iter().filter(|&&b| b).count(), expected);
    }

    #[test]
    fn blank_image_yields_no_proposals() {
        let (intr, lut) = setup();
        let img = DisparityImage::blank(200, 100);
        let out = generate(&img, &intr, &lut, &DswConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn planted_object_is_covered_at_target_iou() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(640, 480);
        let gt = plant(&mut img, &intr, 320, 240, 30.0);
        let cfg = DswConfig::default();
        let proposals = generate(&img, &intr, &lut, &cfg).unwrap();
        assert!(!proposals.is_empty());
        let best = proposals
            .iter()
            .map(|p| iou_rect(gt, p))
            .fold(0.0, f64::max);
        assert!(best >= 0.5, "best IoU {}", best);
    }

    #[test]
    fn zero_sigma_absolute_mode_keeps_only_interior_anchors() {
        let (intr, lut) = setup();
        // Valid far background (box width 6 px, below the 10 px minimum, so
        // background anchors die in clipping, not homogeneity) with one
        // plant on top: candidates whose sample pattern straddles the
        // disparity edge mix 5.0 and 30.0 and fail sigma = 0.
        let mut img = DisparityImage::filled(640, 480, 5.0);
        let gt = plant(&mut img, &intr, 320, 240, 30.0);
        let mut cfg = DswConfig::default();
        cfg.homogeneity_sigma = 0.0;
        cfg.homogeneity_mode = HomogeneityMode::Absolute;
        let proposals = generate(&img, &intr, &lut, &cfg).unwrap();
        assert!(!proposals.is_empty());
        let (gx, gy, gw, gh) = gt;
        for p in &proposals {
            assert_eq!(p.homogeneity_stddev, 0.0);
            for &dy in &pattern_offsets(p.h) {
                for &dx in &pattern_offsets(p.w) {
                    let sx = p.x + dx;
                    let sy = p.y + dy;
                    assert!(
                        sx >= gx && sx < gx + gw && sy >= gy && sy < gy + gh,
                        "sample ({}, {}) outside plant",
                        sx,
                        sy
                    );
                }
            }
        }
        // And the relaxed default keeps at least as many proposals.
        let relaxed = generate(&img, &intr, &lut, &DswConfig::default()).unwrap();
        assert!(relaxed.len() >= proposals.len());
    }

    #[test]
    fn emitted_boxes_match_lut_and_depth() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(640, 480);
        plant(&mut img, &intr, 320, 240, 30.0);
        plant(&mut img, &intr, 100, 100, 60.0);
        let proposals = generate(&img, &intr, &lut, &DswConfig::default()).unwrap();
        assert!(!proposals.is_empty());
        for p in &proposals {
            let entry = lut.lookup(p.disparity).unwrap();
            assert!(p.w <= entry.width_px && p.h <= entry.height_px);
            // Unclipped boxes match the LUT entry exactly.
            if p.x > 0 && p.y > 0 && p.x + p.w < 640 && p.y + p.h < 480 {
                assert_eq!(p.w, entry.width_px);
                assert_eq!(p.h, entry.height_px);
            }
            let depth = intr.fx * intr.baseline / p.disparity;
            assert!((p.depth_m - depth).abs() / depth < 1e-9);
        }
    }

    #[test]
    fn determinism_identical_runs() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(640, 480);
        plant(&mut img, &intr, 320, 240, 30.0);
        plant(&mut img, &intr, 500, 200, 54.0);
        let cfg = DswConfig::default();
        let a = generate(&img, &intr, &lut, &cfg).unwrap();
        let b = generate(&img, &intr, &lut, &cfg).unwrap();
        assert_eq!(a, b);
        // Row-major output order.
        for pair in a.windows(2) {
            assert!(
                pair[0].anchor_y < pair[1].anchor_y
                    || (pair[0].anchor_y == pair[1].anchor_y
                        && pair[0].anchor_x < pair[1].anchor_x)
            );
        }
    }

    #[test]
    fn coarser_theta_never_increases_proposal_count() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(640, 480);
        plant(&mut img, &intr, 320, 240, 30.0);
        plant(&mut img, &intr, 120, 120, 50.0);
        let mut prev = usize::MAX;
        // Descending theta = coarser steps.
        for theta in [0.8, 0.7, 0.5, 0.35] {
            let cfg = DswConfig {
                theta_iou: theta,
                ..DswConfig::default()
            };
            let n = generate(&img, &intr, &lut, &cfg).unwrap().len();
            assert!(n <= prev, "theta {} gave {} > {}", theta, n, prev);
            prev = n;
        }
    }

    #[test]
    fn lut_range_mismatch_is_an_error() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(100, 100);
        // d_max 128, range 127, slack 12.7: 145 exceeds it.
        img.set(50, 50, 145.0);
        assert!(matches!(
            generate(&img, &intr, &lut, &DswConfig::default()),
            Err(DswError::LutRangeMismatch { .. })
        ));
        // Within the slack: tolerated, counted as skipped.
        let mut img = DisparityImage::blank(100, 100);
        img.set(50, 50, 135.0);
        let out = generate_full(&img, &intr, &lut, &DswConfig::default(), false).unwrap();
        assert!(out.proposals.is_empty());
        assert_eq!(out.stats.skipped_out_of_range, 1);
    }

    #[test]
    fn empty_image_is_an_error() {
        let (intr, lut) = setup();
        let img = DisparityImage::blank(0, 0);
        assert!(matches!(
            generate(&img, &intr, &lut, &DswConfig::default()),
            Err(DswError::EmptyImage)
        ));
    }

    #[test]
    fn jump_correction_does_not_step_over_a_small_object() {
        let intr = CameraIntrinsics::kitti_like();
        let lut = build_lut(&intr, &ObjectModel::pedestrian(), LutConfig::default()).unwrap();
        let mut img = DisparityImage::blank(400, 300);
        // Near wall: coarse horizontal steps (box 89 px wide, step 31).
        for y in 20..280u32 {
            for x in 20..320u32 {
                img.set(x, y, 80.0);
            }
        }
        // Distant column keeps the row stride fine everywhere so the test
        // isolates the horizontal stepping behavior.
        for y in 0..300u32 {
            for x in 380..394u32 {
                img.set(x, y, 10.0);
            }
        }
        // Narrow far object (13x38 at d=12) embedded in the wall, placed off
        // the wall's 31 px anchor lattice (anchors 20, 51, ..., 206, 237).
        let gt = plant(&mut img, &intr, 216, 150, 12.0);
        let cfg = DswConfig::default();
        let proposals = generate(&img, &intr, &lut, &cfg).unwrap();
        let best = proposals
            .iter()
            .map(|p| iou_rect(gt, p))
            .fold(0.0, f64::max);
        assert!(best >= 0.5, "embedded object missed, best IoU {}", best);

        // With jump detection effectively disabled the coarse steps leap
        // straight over it.
        let blind = DswConfig {
            jump_threshold: 1e9,
            ..DswConfig::default()
        };
        let proposals = generate(&img, &intr, &lut, &blind).unwrap();
        let best = proposals
            .iter()
            .map(|p| iou_rect(gt, p))
            .fold(0.0, f64::max);
        assert!(best < 0.5, "object found without jump correction: {}", best);
    }

    #[test]
    fn adaptive_recall_matches_dense_traversal_on_small_scene() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(64, 64);
        let gt = plant(&mut img, &intr, 32, 32, 15.0);
        let adaptive = generate(&img, &intr, &lut, &DswConfig::default()).unwrap();
        // Near-1 theta collapses the steps to min_step: a dense traversal.
        let dense_cfg = DswConfig {
            theta_iou: 0.999_999,
            ..DswConfig::default()
        };
        let dense = generate(&img, &intr, &lut, &dense_cfg).unwrap();
        let recalled = |props: &[Proposal]| props.iter().any(|p| iou_rect(gt, p) >= 0.5);
        assert!(dense.len() >= adaptive.len());
        assert_eq!(recalled(&adaptive), recalled(&dense));
        assert!(recalled(&adaptive));
    }

    #[test]
    fn visited_mask_and_stats_are_consistent() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(320, 240);
        plant(&mut img, &intr, 160, 120, 40.0);
        let out = generate_full(&img, &intr, &lut, &DswConfig::default(), true).unwrap();
        let mask = out.visited_mask.unwrap();
        assert_eq!(
            mask.iter().filter(|&&b| b).count() as u64,
            out.stats.visited
        );
        assert_eq!(
            out.stats.visited,
            out.stats.emitted + out.stats.rejected_homogeneity + out.stats.rejected_clip
        );
        for p in &out.proposals {
            assert!(mask[p.anchor_y as usize * 320 + p.anchor_x as usize]);
        }
    }

    #[test]
    fn roi_soundness_no_proposal_outside_region() {
        let (intr, lut) = setup();
        let mut img = DisparityImage::blank(640, 480);
        plant(&mut img, &intr, 320, 240, 30.0); // z ~ 12.98 m
        plant(&mut img, &intr, 120, 240, 60.0); // z ~ 6.49 m
        let roi = Region3D::new(
            Point3D {
                x: -1e6,
                y: -1e6,
                z: 10.0,
            },
            Point3D {
                x: 1e6,
                y: 1e6,
                z: 20.0,
            },
        )
        .unwrap();
        let cfg = DswConfig {
            roi: Some(roi),
            ..DswConfig::default()
        };
        let out = generate_full(&img, &intr, &lut, &cfg, false).unwrap();
        assert!(out.stats.skipped_roi > 0);
        assert!(!out.proposals.is_empty());
        for p in &out.proposals {
            let d = img.at(p.anchor_x, p.anchor_y);
            let pt = backproject(&intr, p.anchor_x as f64, p.anchor_y as f64, d as f64).unwrap();
            assert!(roi.contains(&pt));
        }
    }

    #[test]
    fn proposal_csv_is_stable() {
        let p = Proposal {
            x: 10,
            y: 20,
            w: 60,
            h: 173,
            disparity: 54.0,
            depth_m: 7.21,
            homogeneity_stddev: 0.0,
            anchor_x: 40,
            anchor_y: 106,
        };
        let mut buf = Vec::new();
        write_proposals_csv("000042", &[p], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "image_id,x,y,w,h,disparity,depth_m,stddev\n000042,10,20,60,173,54.0000,7.21000,0.00000\n"
        );
    }
}
