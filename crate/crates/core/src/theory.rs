//! Closed forms for conventional sliding-window search cost.
//!
//! A window of width w scanned with relative step Delta over a W x H image
//! needs N_x = floor((1/Delta)(W/w - 1)) + 1 horizontal placements, and the
//! analogous count vertically. The tolerable scaling and positioning errors
//! for a target IoU have closed forms; together they bound how many
//! hypotheses exhaustive search must generate.

use std::io::Write;

use crate::error::{DswError, Result};
use crate::fmt::sig6;

/// Width progression for the multi-scale sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthStep {
    /// Fixed pixel increment between consecutive widths.
    Additive(u32),
    /// Multiplicative factor between consecutive widths, > 1.
    Geometric(f64),
}

impl WidthStep {
    /// Geometric ratio (1 + eps_k)^2 under which every true width lies
    /// within the scaling tolerance of some swept width.
    pub fn geometric_for(theta_iou: f64) -> Result<Self> {
        let e = scaling_error(theta_iou)?;
        Ok(WidthStep::Geometric((1.0 + e) * (1.0 + e)))
    }
}

/// Geometry and sweep parameters of a conventional sliding-window search.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub obj_width_min_px: u32,
    pub obj_width_max_px: u32,
    pub aspect_min: f64,
    pub aspect_max: f64,
    /// Swept aspect ratios; all within [aspect_min, aspect_max].
    pub aspect_list: Vec<f64>,
    pub theta_iou: f64,
    pub width_step_mode: WidthStep,
}

impl TheoryParams {
    /// Single aspect ratio, additive width step of 1 px.
    pub fn new(
        image_width_px: u32,
        image_height_px: u32,
        obj_width_min_px: u32,
        obj_width_max_px: u32,
        aspect: f64,
        theta_iou: f64,
    ) -> Result<Self> {
        let p = Self {
            image_width_px,
            image_height_px,
            obj_width_min_px,
            obj_width_max_px,
            aspect_min: aspect,
            aspect_max: aspect,
            aspect_list: vec![aspect],
            theta_iou,
            width_step_mode: WidthStep::Additive(1),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_aspects(mut self, aspects: &[f64]) -> Result<Self> {
        if aspects.is_empty() {
            return Err(DswError::InvalidConfig("empty aspect list".into()));
        }
        self.aspect_list = aspects.to_vec();
        self.aspect_min = aspects.iter().cloned().fold(f64::MAX, f64::min);
        self.aspect_max = aspects.iter().cloned().fold(f64::MIN, f64::max);
        self.validate()?;
        Ok(self)
    }

    pub fn with_width_step(mut self, mode: WidthStep) -> Result<Self> {
        self.width_step_mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_iou > 0.0 && self.theta_iou < 1.0) {
            return Err(DswError::InvalidTheta(self.theta_iou));
        }
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(DswError::InvalidConfig(
                "image dimensions must be positive".into(),
            ));
        }
        if self.obj_width_min_px == 0 || self.obj_width_min_px > self.obj_width_max_px {
            return Err(DswError::InvalidConfig(format!(
                "invalid width range {}..{}",
                self.obj_width_min_px, self.obj_width_max_px
            )));
        }
        if self.aspect_list.is_empty()
            || self.aspect_list.iter().any(|&r| !(r > 0.0))
            || !(self.aspect_min > 0.0)
            || self.aspect_min > self.aspect_max
        {
            return Err(DswError::InvalidConfig("invalid aspect ratios".into()));
        }
        match self.width_step_mode {
            WidthStep::Additive(s) if s == 0 => {
                return Err(DswError::InvalidConfig(
                    "additive width step must be >= 1".into(),
                ))
            }
            WidthStep::Geometric(q) if !(q > 1.0) => {
                return Err(DswError::InvalidConfig(format!(
                    "geometric width ratio must exceed 1, got {}",
                    q
                )))
            }
            _ => {}
        }
        Ok(())
    }

    /// The swept width sequence, obj_width_min..=obj_width_max.
    pub fn widths(&self) -> Vec<u32> {
        match self.width_step_mode {
            WidthStep::Additive(step) => (self.obj_width_min_px..=self.obj_width_max_px)
                .step_by(step as usize)
                .collect(),
            WidthStep::Geometric(q) => {
                let mut out = Vec::new();
                let mut w = self.obj_width_min_px as f64;
                while w.round() as u32 <= self.obj_width_max_px {
                    let r = w.round() as u32;
                    if out.last() != Some(&r) {
                        out.push(r);
                    }
                    w *= q;
                }
                out
            }
        }
    }

    pub fn aspects(&self) -> &[f64] {
        &self.aspect_list
    }
}

/// Tolerable relative size mismatch for a target IoU: 1/sqrt(theta) - 1.
pub fn scaling_error(theta_iou: f64) -> Result<f64> {
    if !(theta_iou > 0.0 && theta_iou <= 1.0) {
        return Err(DswError::InvalidTheta(theta_iou));
    }
    Ok(1.0 / theta_iou.sqrt() - 1.0)
}

/// Tolerable relative center offset for a target IoU:
/// (theta - 2 sqrt(theta) + 1) / (1 - theta), continued by 0 at theta = 1.
pub fn positioning_error(theta_iou: f64) -> Result<f64> {
    if !(theta_iou > 0.0 && theta_iou <= 1.0) {
        return Err(DswError::InvalidTheta(theta_iou));
    }
    if theta_iou == 1.0 {
        return Ok(0.0);
    }
    let s = theta_iou.sqrt();
    Ok((theta_iou - 2.0 * s + 1.0) / (1.0 - theta_iou))
}

/// Hypotheses needed for one window size: N_x * N_y placements.
pub fn count_fixed_size(
    p: &TheoryParams,
    obj_width_px: u32,
    aspect: f64,
    delta: f64,
) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(DswError::InvalidConfig(format!(
            "step fraction must be positive, got {}",
            delta
        )));
    }
    let w = obj_width_px as f64;
    let h = aspect * w;
    let img_w = p.image_width_px as f64;
    let img_h = p.image_height_px as f64;
    if w > img_w || h > img_h {
        return Err(DswError::ObjectLargerThanImage {
            obj_w: w,
            obj_h: h,
            img_w: p.image_width_px,
            img_h: p.image_height_px,
        });
    }
    let nx = ((1.0 / delta) * (img_w / w - 1.0)).floor() as u64 + 1;
    let ny = ((1.0 / delta) * (img_h / h - 1.0)).floor() as u64 + 1;
    Ok(nx * ny)
}

/// Total hypotheses over the full width and aspect sweep.
pub fn count_total(p: &TheoryParams, delta: f64) -> Result<u64> {
    p.validate()?;
    let mut total = 0u64;
    for w in p.widths() {
        for &r in p.aspects() {
            total += count_fixed_size(p, w, r, delta)?;
        }
    }
    Ok(total)
}

/// Approximate hypothesis bound for w much smaller than the image:
/// sum of 2(1-theta)/((theta+1) - 2 sqrt(theta)) * W*H / (r * w^2).
pub fn count_simplified(p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let theta = p.theta_iou;
    let factor = 2.0 * (1.0 - theta) / ((theta + 1.0) - 2.0 * theta.sqrt());
    let area = p.image_width_px as f64 * p.image_height_px as f64;
    let mut total = 0.0;
    for w in p.widths() {
        for &r in p.aspects() {
            total += factor * area / (r * (w as f64) * (w as f64));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCurveRow {
    pub theta: f64,
    pub eps_k: f64,
    pub eps_delta: f64,
}

/// Error tolerances over a theta grid.
pub fn error_curves(theta_grid: &[f64]) -> Result<Vec<ErrorCurveRow>> {
    theta_grid
        .iter()
        .map(|&theta| {
            Ok(ErrorCurveRow {
                theta,
                eps_k: scaling_error(theta)?,
                eps_delta: positioning_error(theta)?,
            })
        })
        .collect()
}

/// CSV: `theta,eps_k,eps_delta`.
pub fn write_error_curves_csv<W: Write>(rows: &[ErrorCurveRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,eps_k,eps_delta")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{}",
            sig6(r.theta),
            sig6(r.eps_k),
            sig6(r.eps_delta)
        )?;
    }
    Ok(())
}

/// CSV: `theta,n_hypotheses`.
pub fn write_counts_csv<W: Write>(rows: &[(f64, u64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,n_hypotheses")?;
    for (theta, n) in rows {
        writeln!(out, "{},{}", sig6(*theta), n)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scaling_error_examples() {
        assert_relative_eq!(
            scaling_error(0.5).unwrap(),
            0.41421356237,
            max_relative = 1e-9
        );
        assert!((scaling_error(0.5).unwrap() - 0.41421).abs() < 0.0005);
        assert_eq!(scaling_error(1.0).unwrap(), 0.0);
        assert_relative_eq!(scaling_error(0.25).unwrap(), 1.0, max_relative = 1e-12);
        assert!(matches!(scaling_error(0.0), Err(DswError::InvalidTheta(_))));
        assert!(matches!(scaling_error(1.5), Err(DswError::InvalidTheta(_))));
    }

    #[test]
    fn positioning_error_examples() {
        assert_relative_eq!(
            positioning_error(0.5).unwrap(),
            0.17157287525,
            max_relative = 1e-9
        );
        assert!((positioning_error(0.5).unwrap() - 0.17157).abs() < 0.0005);
        assert_eq!(positioning_error(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            positioning_error(0.25).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            positioning_error(-0.1),
            Err(DswError::InvalidTheta(_))
        ));
    }

    #[test]
    fn positioning_error_equals_simplified_form() {
        // (theta - 2 sqrt + 1)/(1 - theta) == (1 - sqrt)/(1 + sqrt)
        let mut theta = 0.001;
        while theta < 1.0 {
            let raw = positioning_error(theta).unwrap();
            let s = theta.sqrt();
            let simplified = (1.0 - s) / (1.0 + s);
            assert!((raw - simplified).abs() < 1e-12, "theta={}", theta);
            theta += 0.001;
        }
    }

    #[test]
    fn error_functions_strictly_decreasing_and_ordered() {
        let mut prev_k = f64::MAX;
        let mut prev_d = f64::MAX;
        let mut theta = 0.01;
        while theta < 1.0 {
            let k = scaling_error(theta).unwrap();
            let d = positioning_error(theta).unwrap();
            assert!(k < prev_k && d < prev_d, "theta={}", theta);
            assert!(k > d, "eps_k must dominate eps_delta at theta={}", theta);
            prev_k = k;
            prev_d = d;
            theta += 0.01;
        }
    }

    #[test]
    fn count_fixed_size_worked_example() {
        let p = TheoryParams::new(1242, 375, 10, 100, 3.0, 0.5).unwrap();
        // Spec-level rounded step fraction.
        assert_eq!(count_fixed_size(&p, 100, 3.0, 0.34314).unwrap(), 34);
        // Exact step fraction for theta = 0.5.
        let delta = 2.0 * positioning_error(0.5).unwrap();
        assert_eq!(count_fixed_size(&p, 100, 3.0, delta).unwrap(), 34);
    }

    #[test]
    fn exactly_one_window_when_object_fills_image() {
        let p = TheoryParams::new(1242, 375, 10, 1242, 3.0, 0.5).unwrap();
        let r = 375.0 / 1242.0;
        assert_eq!(count_fixed_size(&p, 1242, r, 0.34314).unwrap(), 1);
        assert!(matches!(
            count_fixed_size(&p, 1243, r, 0.34314),
            Err(DswError::ObjectLargerThanImage { .. })
        ));
    }

    /// Literal window placement: accumulate the real-valued step, place each
    /// window at the rounded position, count those that fit.
    fn placed_windows_axis(image: u32, obj: f64, delta: f64) -> u64 {
        let step = delta * obj;
        let mut pos = 0.0f64;
        let mut count = 0u64;
        loop {
            if pos.round() + obj > image as f64 {
                break;
            }
            count += 1;
            pos += step;
        }
        count
    }

    #[test]
    fn count_matches_placement_oracle_within_one_per_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let img_w: u32 = rng.random_range(100..2000);
            let img_h: u32 = rng.random_range(100..1000);
            let w: u32 = rng.random_range(10..=img_w.min(400));
            let max_r = img_h as f64 / w as f64;
            let r = rng.random_range(0.2..4.0f64).min(max_r * 0.99);
            let theta = rng.random_range(0.3..0.9);
            let delta = 2.0 * positioning_error(theta).unwrap();
            let p = TheoryParams::new(img_w, img_h, w, w, r, theta).unwrap();

            let nx_formula = ((1.0 / delta) * (img_w as f64 / w as f64 - 1.0)).floor() as i64 + 1;
            let ny_formula =
                ((1.0 / delta) * (img_h as f64 / (r * w as f64) - 1.0)).floor() as i64 + 1;
            let nx_placed = placed_windows_axis(img_w, w as f64, delta) as i64;
            let ny_placed = placed_windows_axis(img_h, r * w as f64, delta) as i64;
            assert!(
                (nx_formula - nx_placed).abs() <= 1,
                "nx {} vs {}",
                nx_formula,
                nx_placed
            );
            assert!(
                (ny_formula - ny_placed).abs() <= 1,
                "ny {} vs {}",
                ny_formula,
                ny_placed
            );
            assert_eq!(
                count_fixed_size(&p, w, r, delta).unwrap(),
                (nx_formula * ny_formula) as u64
            );
        }
    }

    #[test]
    fn count_total_kitti_sweep_exceeds_one_hundred_thousand() {
        let p = TheoryParams::new(1242, 375, 10, 100, 3.0, 0.5).unwrap();
        let delta = 2.0 * positioning_error(0.5).unwrap();
        let n = count_total(&p, delta).unwrap();
        assert_eq!(n, 103_797);
        assert!(n >= 100_000);
    }

    #[test]
    fn coarser_width_step_decreases_count() {
        let delta = 2.0 * positioning_error(0.5).unwrap();
        let fine = TheoryParams::new(1242, 375, 10, 100, 3.0, 0.5).unwrap();
        let coarse = fine
            .clone()
            .with_width_step(WidthStep::Additive(10))
            .unwrap();
        let n_fine = count_total(&fine, delta).unwrap();
        let n_coarse = count_total(&coarse, delta).unwrap();
        assert_eq!(n_coarse, 17_825);
        assert!(n_coarse < n_fine);
    }

    #[test]
    fn count_total_single_term_equals_fixed_size() {
        let p = TheoryParams::new(640, 480, 50, 50, 2.0, 0.5).unwrap();
        let delta = 0.3;
        assert_eq!(
            count_total(&p, delta).unwrap(),
            count_fixed_size(&p, 50, 2.0, delta).unwrap()
        );
    }

    #[test]
    fn count_total_monotone_in_delta_and_min_width() {
        let p = TheoryParams::new(1242, 375, 10, 60, 3.0, 0.5).unwrap();
        let mut prev = u64::MAX;
        for delta in [0.1, 0.2, 0.3, 0.5, 0.8] {
            let n = count_total(&p, delta).unwrap();
            assert!(n <= prev);
            prev = n;
        }
        let mut prev = u64::MAX;
        for wmin in [10, 20, 30, 40] {
            let p = TheoryParams::new(1242, 375, wmin, 60, 3.0, 0.5).unwrap();
            let n = count_total(&p, 0.34314).unwrap();
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn simplified_bound_worked_example() {
        let p = TheoryParams::new(1242, 375, 10, 10, 3.0, 0.5).unwrap();
        let n = count_simplified(&p).unwrap();
        assert!((n - 18097.266).abs() < 0.01, "got {}", n);
        // The same quantity rounded to a whole hypothesis count.
        assert!((n - 18098.0).abs() < 1.0);
    }

    #[test]
    fn simplified_bound_grows_with_theta() {
        let lo = TheoryParams::new(1242, 375, 10, 10, 3.0, 0.5).unwrap();
        let hi = TheoryParams::new(1242, 375, 10, 10, 3.0, 0.7).unwrap();
        assert!(count_simplified(&hi).unwrap() > count_simplified(&lo).unwrap());
    }

    #[test]
    fn simplified_bound_tracks_total_for_small_objects() {
        // Regime where the small-object approximation is tight: the bound
        // stays above 85% of the exact count for w <= W/10 and moderate
        // theta. (For theta near 1 the approximation intentionally drops
        // the quadratic step terms and falls below the exact count.)
        for &theta in &[0.3, 0.4, 0.5, 0.6] {
            for &(wmin, wmax) in &[(10u32, 40u32), (20, 80), (40, 124)] {
                let p = TheoryParams::new(1242, 375, wmin, wmax, 3.0, theta).unwrap();
                let delta = 2.0 * positioning_error(theta).unwrap();
                let total = count_total(&p, delta).unwrap() as f64;
                let simplified = count_simplified(&p).unwrap();
                assert!(
                    simplified >= total * 0.85,
                    "theta={} widths={}..{}: {} < 0.85 * {}",
                    theta,
                    wmin,
                    wmax,
                    simplified,
                    total
                );
            }
        }
    }

    #[test]
    fn geometric_width_sequence_covers_range() {
        let p = TheoryParams::new(1242, 375, 10, 100, 3.0, 0.5)
            .unwrap()
            .with_width_step(WidthStep::geometric_for(0.5).unwrap())
            .unwrap();
        let widths = p.widths();
        assert_eq!(widths.first(), Some(&10));
        assert!(widths.windows(2).all(|w| w[1] > w[0]));
        assert!(*widths.last().unwrap() <= 100);
        // Ratio (1+eps_k)^2 = 2 at theta 0.5: 10, 20, 40, 80.
        assert_eq!(widths, vec![10, 20, 40, 80]);
    }

    #[test]
    fn error_curve_rows() {
        let rows = error_curves(&[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].eps_k - 0.41421).abs() < 0.0005);
        assert!((rows[0].eps_delta - 0.17157).abs() < 0.0005);
        assert_eq!(rows[1].eps_k, 0.0);
        assert_eq!(rows[1].eps_delta, 0.0);
        assert!(error_curves(&[0.5, 1.5]).is_err());
    }

    #[test]
    fn csv_writers_are_stable() {
        let rows = error_curves(&[0.5]).unwrap();
        let mut buf = Vec::new();
        write_error_curves_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "theta,eps_k,eps_delta\n0.500000,0.414214,0.171573\n"
        );
        let mut buf = Vec::new();
        write_counts_csv(&[(0.5, 103_797)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "theta,n_hypotheses\n0.500000,103797\n"
        );
    }
}
