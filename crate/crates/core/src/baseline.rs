//! Conventional dense sliding-window proposal generation.
//!
//! Sweeps every (width, aspect) scale over the whole image with steps
//! proportional to the window size, exactly the search the closed forms in
//! [`crate::theory`] count. Serves as the cost reference DSW is compared
//! against; both use the same step fraction so proposals-per-image numbers
//! are directly comparable.

use crate::error::Result;
use crate::proposer::Proposal;
use crate::theory::{count_fixed_size, positioning_error, TheoryParams};

/// Emit the full dense sweep for the given geometry.
///
/// Placements accumulate the real-valued step Delta * w and round per
/// placement (the k-th window sits at round(k * Delta * w)), so the number
/// of windows per axis equals the closed-form count; per-step integer
/// rounding would drift O(N) placements apart for small windows. Windows
/// are clamped to stay fully inside the image. Proposals carry no
/// disparity: the sentinel -1 marks the fields as unset.
pub fn generate_dense(p: &TheoryParams) -> Result<Vec<Proposal>> {
    p.validate()?;
    let delta = 2.0 * positioning_error(p.theta_iou)?;
    let img_w = p.image_width_px;
    let img_h = p.image_height_px;
    let mut out = Vec::new();
    for w in p.widths() {
        for &r in p.aspects() {
            // Shares the fit/error checks with the count formula.
            count_fixed_size(p, w, r, delta)?;
            let wf = w as f64;
            let hf = r * wf;
            let h = (hf.round() as u32).max(1);
            let nx = ((1.0 / delta) * (img_w as f64 / wf - 1.0)).floor() as u64 + 1;
            let ny = ((1.0 / delta) * (img_h as f64 / hf - 1.0)).floor() as u64 + 1;
            let step_x = delta * wf;
            let step_y = delta * hf;
            for ky in 0..ny {
                let y = ((ky as f64 * step_y).round() as u32).min(img_h - h);
                for kx in 0..nx {
                    let x = ((kx as f64 * step_x).round() as u32).min(img_w - w);
                    out.push(Proposal {
                        x,
                        y,
                        w,
                        h,
                        disparity: -1.0,
                        depth_m: -1.0,
                        homogeneity_stddev: -1.0,
                        anchor_x: x + w / 2,
                        anchor_y: y + h / 2,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DswError;
    use crate::theory::{count_total, WidthStep};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_scale_count_matches_theory() {
        let p = TheoryParams::new(1242, 375, 100, 100, 3.0, 0.5).unwrap();
        let proposals = generate_dense(&p).unwrap();
        assert_eq!(proposals.len(), 34);
        for prop in &proposals {
            assert_eq!((prop.w, prop.h), (100, 300));
            assert!(prop.x + prop.w <= 1242 && prop.y + prop.h <= 375);
        }
    }

    #[test]
    fn object_filling_image_yields_single_window_at_origin() {
        let r = 375.0 / 1242.0;
        let p = TheoryParams::new(1242, 375, 1242, 1242, r, 0.5).unwrap();
        let proposals = generate_dense(&p).unwrap();
        assert_eq!(proposals.len(), 1);
        assert_eq!((proposals[0].x, proposals[0].y), (0, 0));
        let too_big = TheoryParams::new(1242, 375, 1243, 1243, r, 0.5).unwrap();
        assert!(matches!(
            generate_dense(&too_big),
            Err(DswError::ObjectLargerThanImage { .. })
        ));
    }

    #[test]
    fn full_sweep_count_matches_count_total() {
        let p = TheoryParams::new(1242, 375, 10, 100, 3.0, 0.5).unwrap();
        let delta = 2.0 * positioning_error(0.5).unwrap();
        let n_total = count_total(&p, delta).unwrap();
        let n_dense = generate_dense(&p).unwrap().len() as u64;
        let scales = p.widths().len() as u64;
        assert!(
            n_dense.abs_diff(n_total) <= scales,
            "{} vs {} (+-{})",
            n_dense,
            n_total,
            scales
        );
    }

    #[test]
    fn count_consistency_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let img_w: u32 = rng.random_range(300..1500);
            let img_h: u32 = rng.random_range(200..800);
            let wmin: u32 = rng.random_range(20..80);
            let wmax: u32 = wmin + rng.random_range(0..60);
            let step: u32 = rng.random_range(1..12);
            let max_r = img_h as f64 / wmax as f64;
            let r = rng.random_range(0.4..3.5f64).min(max_r * 0.99);
            let theta = rng.random_range(0.35..0.85);
            let p = TheoryParams::new(img_w, img_h, wmin, wmax, r, theta)
                .unwrap()
                .with_width_step(WidthStep::Additive(step))
                .unwrap();
            let delta = 2.0 * positioning_error(theta).unwrap();
            let n_total = count_total(&p, delta).unwrap();
            let n_dense = generate_dense(&p).unwrap().len() as u64;
            let budget = (p.widths().len() * p.aspects().len()) as u64;
            assert!(
                n_dense.abs_diff(n_total) <= budget,
                "dense {} vs total {} budget {}",
                n_dense,
                n_total,
                budget
            );
        }
    }

    #[test]
    fn every_box_fully_inside_image() {
        let p = TheoryParams::new(500, 400, 11, 90, 1.7, 0.4)
            .unwrap()
            .with_width_step(WidthStep::Additive(7))
            .unwrap();
        for prop in generate_dense(&p).unwrap() {
            assert!(prop.x + prop.w <= 500);
            assert!(prop.y + prop.h <= 400);
            assert!(prop.w > 0 && prop.h > 0);
        }
    }

    #[test]
    fn positioning_guarantee_holds_at_each_swept_scale() {
        // A same-size object anywhere in the grid interior is overlapped at
        // IoU >= theta up to placement quantization: the worst offset per
        // axis is the half-step eps_delta*dim plus 0.5 px of rounding, so
        // with p = (1 - eps_delta - 0.5/w)(1 - eps_delta - 0.5/h) the exact
        // overlap is at least p/(2-p). That floor converges to theta from
        // below as the window grows.
        let theta = 0.5;
        let p = TheoryParams::new(1242, 800, 32, 256, 1.0, theta)
            .unwrap()
            .with_width_step(WidthStep::geometric_for(theta).unwrap())
            .unwrap();
        assert_eq!(p.widths(), vec![32, 64, 128, 256]);
        let proposals = generate_dense(&p).unwrap();
        let eps_d = positioning_error(theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for w in p.widths() {
            let wf = w as f64;
            let frac = 1.0 - eps_d - 0.5 / wf;
            let pp = frac * frac;
            let bound = pp / (2.0 - pp);
            let mut worst: f64 = 1.0;
            for _ in 0..100 {
                // Interior placements; the last grid column/row can sit up
                // to a full step from the image edge.
                let x = rng.random_range(0.0..(1242.0 - wf) * 0.6);
                let y = rng.random_range(0.0..(800.0 - wf) * 0.6);
                let mut best: f64 = 0.0;
                for prop in proposals.iter().filter(|p| p.w == w) {
                    let ix0 = (prop.x as f64).max(x);
                    let iy0 = (prop.y as f64).max(y);
                    let ix1 = ((prop.x + prop.w) as f64).min(x + wf);
                    let iy1 = ((prop.y + prop.h) as f64).min(y + wf);
                    let inter = (ix1 - ix0).max(0.0) * (iy1 - iy0).max(0.0);
                    best = best.max(inter / (2.0 * wf * wf - inter));
                }
                worst = worst.min(best);
            }
            assert!(
                worst >= bound - 1e-9,
                "scale {}: worst {} < floor {}",
                w,
                worst,
                bound
            );
            assert!(worst >= theta - 0.04, "scale {}: worst {}", w, worst);
        }
    }
}
