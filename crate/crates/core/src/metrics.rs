//! Evaluation harness: IoU, recall curves, proposals-per-image, occlusion
//! breakdowns, and runtime measurement.
//!
//! Recall uses coverage semantics: a ground-truth box counts as recalled
//! when any proposal overlaps it at or above the threshold (inclusive, so
//! an exact-boundary overlap counts). One proposal may cover several
//! ground truths; there is no one-to-one matching.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::baseline::generate_dense;
use crate::camera::ObjectModel;
use crate::dataset::{GroundTruthBox, Occlusion, Scene};
use crate::error::{DswError, Result};
use crate::fmt::sig6;
use crate::proposer::{generate, DswConfig, Proposal};
use crate::sizelut::{build_lut, LutConfig};
use crate::theory::{TheoryParams, WidthStep};

/// Axis-aligned box, real-valued pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2D {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Box2D { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w > 0.0 && self.h > 0.0
    }
}

impl From<&Proposal> for Box2D {
    fn from(p: &Proposal) -> Self {
        Box2D::new(p.x as f64, p.y as f64, p.w as f64, p.h as f64)
    }
}

impl From<&GroundTruthBox> for Box2D {
    fn from(b: &GroundTruthBox) -> Self {
        Box2D::new(b.x, b.y, b.w, b.h)
    }
}

/// Exact intersection-over-union: |A∩B| / (|A|+|B|−|A∩B|). The union is
/// the true union, not the circumscribing rectangle.
pub fn iou(a: &Box2D, b: &Box2D) -> Result<f64> {
    if !a.valid() || !b.valid() {
        return Err(DswError::DegenerateBox);
    }
    // Areas come from the same corner coordinates as the intersection so
    // identical boxes give exactly 1 despite float rounding.
    let (ax1, ay1) = (a.x + a.w, a.y + a.h);
    let (bx1, by1) = (b.x + b.w, b.y + b.h);
    let ix = ax1.min(bx1) - a.x.max(b.x);
    let iy = ay1.min(by1) - a.y.max(b.y);
    let inter = ix.max(0.0) * iy.max(0.0);
    let area_a = (ax1 - a.x) * (ay1 - a.y);
    let area_b = (bx1 - b.x) * (by1 - b.y);
    Ok(inter / (area_a + area_b - inter))
}

/// Highest IoU any proposal achieves on `gt`; 0 with no proposals.
pub fn best_iou(gt: &Box2D, proposals: &[Box2D]) -> Result<f64> {
    let mut best = 0.0f64;
    for p in proposals {
        best = best.max(iou(gt, p)?);
    }
    Ok(best)
}

/// Fraction of ground-truth boxes covered at IoU >= theta, pooled over
/// images. `proposals` and `gts` are per-image lists and must align.
/// Returns None when there is no ground truth at all (recall undefined).
pub fn recall_at(proposals: &[Vec<Box2D>], gts: &[Vec<Box2D>], theta: f64) -> Result<Option<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DswError::InvalidTheta(theta));
    }
    if proposals.len() != gts.len() {
        return Err(DswError::InvalidConfig(format!(
            "{} proposal lists vs {} ground-truth lists",
            proposals.len(),
            gts.len()
        )));
    }
    let mut total = 0u64;
    let mut covered = 0u64;
    for (props, image_gts) in proposals.iter().zip(gts) {
        for gt in image_gts {
            total += 1;
            if best_iou(gt, props)? >= theta {
                covered += 1;
            }
        }
    }
    if total == 0 {
        return Ok(None);
    }
    Ok(Some(covered as f64 / total as f64))
}

/// A proposal source the harness can time and score.
///
/// `generate` returns the proposals plus preparation milliseconds (size-LUT
/// construction and similar setup) so that sweep time can be reported with
/// preparation excluded, the same way disparity computation is excluded.
pub trait ProposalGenerator: Sync {
    fn name(&self) -> &str;
    fn generate(&self, scene: &Scene) -> Result<(Vec<Proposal>, f64)>;
}

/// Disparity sliding window over a scene, LUT built from the scene's own
/// calibration.
#[derive(Debug, Clone)]
pub struct DswGenerator {
    pub config: DswConfig,
    pub lut: LutConfig,
    pub model: ObjectModel,
}

impl Default for DswGenerator {
    fn default() -> Self {
        DswGenerator {
            config: DswConfig::default(),
            lut: LutConfig::default(),
            model: ObjectModel::pedestrian(),
        }
    }
}

impl ProposalGenerator for DswGenerator {
    fn name(&self) -> &str {
        "dsw"
    }

    fn generate(&self, scene: &Scene) -> Result<(Vec<Proposal>, f64)> {
        let t0 = Instant::now();
        let lut = build_lut(&scene.intrinsics, &self.model, self.lut)?;
        let prep_ms = t0.elapsed().as_secs_f64() * 1e3;
        let proposals = generate(&scene.disparity, &scene.intrinsics, &lut, &self.config)?;
        Ok((proposals, prep_ms))
    }
}

/// Conventional dense sweep with no disparity input; the cost reference.
#[derive(Debug, Clone)]
pub struct DenseGenerator {
    pub obj_width_min_px: u32,
    pub obj_width_max_px: u32,
    pub width_step: WidthStep,
    pub aspect: f64,
    pub theta_iou: f64,
}

impl Default for DenseGenerator {
    fn default() -> Self {
        DenseGenerator {
            obj_width_min_px: 10,
            obj_width_max_px: 100,
            width_step: WidthStep::Additive(10),
            aspect: ObjectModel::pedestrian().aspect(),
            theta_iou: 0.5,
        }
    }
}

impl ProposalGenerator for DenseGenerator {
    fn name(&self) -> &str {
        "dense"
    }

    fn generate(&self, scene: &Scene) -> Result<(Vec<Proposal>, f64)> {
        let params = TheoryParams::new(
            scene.disparity.width(),
            scene.disparity.height(),
            self.obj_width_min_px,
            self.obj_width_max_px,
            self.aspect,
            self.theta_iou,
        )?
        .with_width_step(self.width_step)?;
        Ok((generate_dense(&params)?, 0.0))
    }
}

/// Harness knobs.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Strictly increasing thresholds in (0, 1].
    pub theta_grid: Vec<f64>,
    /// Evaluate scenes across threads (aggregation is order-independent;
    /// outputs keep scene order either way).
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            theta_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            parallel: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() {
            return Err(DswError::InvalidConfig("empty theta grid".into()));
        }
        for pair in self.theta_grid.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(DswError::InvalidConfig(
                    "theta grid must be strictly increasing".into(),
                ));
            }
        }
        for &t in &self.theta_grid {
            if !(t > 0.0 && t <= 1.0) {
                return Err(DswError::InvalidTheta(t));
            }
        }
        Ok(())
    }
}

/// Best overlap achieved on one ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct GtOutcome {
    pub image_id: String,
    pub occlusion: Occlusion,
    pub best_iou: f64,
}

/// A scene the generator failed on; evaluation continues past it.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFailure {
    pub image_id: String,
    pub error: String,
}

/// Aggregated evaluation over a scene set.
#[derive(Debug, Clone)]
pub struct EvalResult {
    /// (theta, recall) per grid entry; recall is NaN when there is no
    /// ground truth (use [`EvalResult::recall`] for the checked view).
    pub recall_curve: Vec<(f64, f64)>,
    /// Best overlap per ground-truth box, in scene order.
    pub outcomes: Vec<GtOutcome>,
    /// Mean proposals per successfully evaluated image.
    pub ppi: f64,
    /// Mean sweep milliseconds per image, preparation excluded.
    pub mean_ms: f64,
    /// Mean preparation milliseconds per image (LUT builds etc.).
    pub prep_ms: f64,
    pub scenes_evaluated: usize,
    pub failures: Vec<SceneFailure>,
    pub total_gt: usize,
}

impl EvalResult {
    /// Recall at a grid threshold; None off-grid or with no ground truth.
    pub fn recall(&self, theta: f64) -> Option<f64> {
        self.recall_curve
            .iter()
            .find(|(t, _)| (t - theta).abs() < 1e-9)
            .and_then(|&(_, r)| r.is_finite().then_some(r))
    }

    /// Per-occlusion (class, ground-truth count, recall) at `theta`;
    /// recall is None for classes with no ground truth.
    pub fn per_occlusion(&self, theta: f64) -> Vec<(Occlusion, usize, Option<f64>)> {
        Occlusion::ALL
            .iter()
            .map(|&occ| {
                let of_class: Vec<&GtOutcome> = self
                    .outcomes
                    .iter()
                    .filter(|o| o.occlusion == occ)
                    .collect();
                let recall = (!of_class.is_empty()).then(|| {
                    of_class.iter().filter(|o| o.best_iou >= theta).count() as f64
                        / of_class.len() as f64
                });
                (occ, of_class.len(), recall)
            })
            .collect()
    }
}

struct SceneOutcome {
    outcomes: Vec<GtOutcome>,
    n_proposals: usize,
    sweep_ms: f64,
    prep_ms: f64,
}

fn evaluate_scene(
    scene: &Scene,
    generator: &dyn ProposalGenerator,
) -> std::result::Result<SceneOutcome, SceneFailure> {
    let fail = |e: DswError| SceneFailure {
        image_id: scene.image_id.clone(),
        error: e.to_string(),
    };
    let t0 = Instant::now();
    let (proposals, prep_ms) = generator.generate(scene).map_err(fail)?;
    let sweep_ms = (t0.elapsed().as_secs_f64() * 1e3 - prep_ms).max(0.0);
    let boxes: Vec<Box2D> = proposals.iter().map(Box2D::from).collect();
    let mut outcomes = Vec::with_capacity(scene.ground_truth.len());
    for gt in &scene.ground_truth {
        let best = best_iou(&Box2D::from(gt), &boxes).map_err(fail)?;
        outcomes.push(GtOutcome {
            image_id: scene.image_id.clone(),
            occlusion: gt.occlusion,
            best_iou: best,
        });
    }
    Ok(SceneOutcome {
        outcomes,
        n_proposals: proposals.len(),
        sweep_ms,
        prep_ms,
    })
}

/// Runs `generator` over every scene, timing each, and aggregates recall,
/// PPI, and per-box best overlaps. Generator failures are collected per
/// scene and never abort the run.
pub fn evaluate(
    scenes: &[Scene],
    generator: &dyn ProposalGenerator,
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(DswError::InvalidConfig("no scenes to evaluate".into()));
    }
    let results: Vec<std::result::Result<SceneOutcome, SceneFailure>> = if cfg.parallel {
        scenes
            .par_iter()
            .map(|s| evaluate_scene(s, generator))
            .collect()
    } else {
        scenes
            .iter()
            .map(|s| evaluate_scene(s, generator))
            .collect()
    };
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    let mut n_proposals = 0usize;
    let mut sweep_ms = 0.0;
    let mut prep_ms = 0.0;
    let mut evaluated = 0usize;
    for r in results {
        match r {
            Ok(s) => {
                outcomes.extend(s.outcomes);
                n_proposals += s.n_proposals;
                sweep_ms += s.sweep_ms;
                prep_ms += s.prep_ms;
                evaluated += 1;
            }
            Err(f) => failures.push(f),
        }
    }
    let total_gt = outcomes.len();
    let recall_curve = cfg
        .theta_grid
        .iter()
        .map(|&t| {
            let r = if total_gt == 0 {
                f64::NAN
            } else {
                outcomes.iter().filter(|o| o.best_iou >= t).count() as f64 / total_gt as f64
            };
            (t, r)
        })
        .collect();
    let per_image = |total: f64| {
        if evaluated == 0 {
            f64::NAN
        } else {
            total / evaluated as f64
        }
    };
    Ok(EvalResult {
        recall_curve,
        outcomes,
        ppi: per_image(n_proposals as f64),
        mean_ms: per_image(sweep_ms),
        prep_ms: per_image(prep_ms),
        scenes_evaluated: evaluated,
        failures,
        total_gt,
    })
}

/// `theta,recall` rows over the evaluated grid.
pub fn write_recall_curve_csv<W: Write>(result: &EvalResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,recall")?;
    for &(t, r) in &result.recall_curve {
        writeln!(out, "{},{}", sig6(t), sig6(r))?;
    }
    Ok(())
}

/// One-row headline summary.
pub fn write_summary_csv<W: Write>(result: &EvalResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "ppi,mean_ms,recall@0.5,recall@0.3")?;
    let at = |t: f64| sig6(result.recall(t).unwrap_or(f64::NAN));
    writeln!(
        out,
        "{},{},{},{}",
        sig6(result.ppi),
        sig6(result.mean_ms),
        at(0.5),
        at(0.3)
    )?;
    Ok(())
}

/// Per-occlusion-class recall at theta.
pub fn write_occlusion_csv<W: Write>(
    result: &EvalResult,
    theta: f64,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "occlusion,gt_count,recall@{}", theta)?;
    for (occ, count, recall) in result.per_occlusion(theta) {
        writeln!(
            out,
            "{},{},{}",
            occ.label(),
            count,
            sig6(recall.unwrap_or(f64::NAN))
        )?;
    }
    Ok(())
}

/// Best overlap per ground-truth box, scene order.
pub fn write_best_iou_csv<W: Write>(result: &EvalResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "image_id,occlusion,best_iou")?;
    for o in &result.outcomes {
        writeln!(
            out,
            "{},{},{}",
            o.image_id,
            o.occlusion.label(),
            sig6(o.best_iou)
        )?;
    }
    Ok(())
}
