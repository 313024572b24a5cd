//! Wire types for the DSW HTTP service.
//!
//! Every request/response body is a plain serde struct mirroring a
//! `dsw-core` type, with defaults matching the library defaults so clients
//! can omit what they do not care about. Conversions into core types
//! validate through the core constructors; nothing here re-implements
//! domain rules.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use dsw_core::dataset::{Background, Occlusion, Plant, SynthSceneSpec};
use dsw_core::proposer::{GenerateStats, HomogeneityMode};
use dsw_core::theory::WidthStep;
use dsw_core::{
    CameraIntrinsics, DisparityImage, DswConfig, DswError, LutConfig, ObjectModel, Point3D,
    Proposal, Region3D,
};

/// Error envelope returned by the service for every non-2xx response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    /// Stable machine-readable discriminator (the core error variant name,
    /// "not_found", or "bad_request").
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

// ---------------------------------------------------------------------------
// Geometry / configuration DTOs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntrinsicsDto {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
    pub baseline: f64,
}

impl Default for IntrinsicsDto {
    fn default() -> Self {
        (&CameraIntrinsics::kitti_like()).into()
    }
}

impl From<&CameraIntrinsics> for IntrinsicsDto {
    fn from(i: &CameraIntrinsics) -> Self {
        IntrinsicsDto {
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            skew: i.skew,
            baseline: i.baseline,
        }
    }
}

impl TryFrom<&IntrinsicsDto> for CameraIntrinsics {
    type Error = DswError;
    fn try_from(d: &IntrinsicsDto) -> Result<Self, DswError> {
        CameraIntrinsics::with_skew(d.fx, d.fy, d.cx, d.cy, d.skew, d.baseline)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelDto {
    /// Real-world object width, meters.
    pub width_m: f64,
    /// Real-world object height, meters.
    pub height_m: f64,
}

impl Default for ModelDto {
    fn default() -> Self {
        (&ObjectModel::pedestrian()).into()
    }
}

impl From<&ObjectModel> for ModelDto {
    fn from(m: &ObjectModel) -> Self {
        ModelDto {
            width_m: m.width_world,
            height_m: m.height_world,
        }
    }
}

impl TryFrom<&ModelDto> for ObjectModel {
    type Error = DswError;
    fn try_from(d: &ModelDto) -> Result<Self, DswError> {
        ObjectModel::new(d.width_m, d.height_m)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LutConfigDto {
    pub d_min: f64,
    pub d_max: f64,
    pub delta_d: f64,
}

impl Default for LutConfigDto {
    fn default() -> Self {
        let c = LutConfig::default();
        LutConfigDto {
            d_min: c.d_min,
            d_max: c.d_max,
            delta_d: c.delta_d,
        }
    }
}

impl From<LutConfigDto> for LutConfig {
    fn from(d: LutConfigDto) -> Self {
        LutConfig {
            d_min: d.d_min,
            d_max: d.d_max,
            delta_d: d.delta_d,
        }
    }
}

/// Axis-aligned 3D region, camera frame, meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionDto {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl TryFrom<&RegionDto> for Region3D {
    type Error = DswError;
    fn try_from(d: &RegionDto) -> Result<Self, DswError> {
        Region3D::new(
            Point3D {
                x: d.min[0],
                y: d.min[1],
                z: d.min[2],
            },
            Point3D {
                x: d.max[0],
                y: d.max[1],
                z: d.max[2],
            },
        )
    }
}

impl From<&Region3D> for RegionDto {
    fn from(r: &Region3D) -> Self {
        RegionDto {
            min: [r.min.x, r.min.y, r.min.z],
            max: [r.max.x, r.max.y, r.max.z],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityModeDto {
    Relative,
    Absolute,
}

impl From<HomogeneityModeDto> for HomogeneityMode {
    fn from(m: HomogeneityModeDto) -> Self {
        match m {
            HomogeneityModeDto::Relative => HomogeneityMode::Relative,
            HomogeneityModeDto::Absolute => HomogeneityMode::Absolute,
        }
    }
}

impl From<HomogeneityMode> for HomogeneityModeDto {
    fn from(m: HomogeneityMode) -> Self {
        match m {
            HomogeneityMode::Relative => HomogeneityModeDto::Relative,
            HomogeneityMode::Absolute => HomogeneityModeDto::Absolute,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DswConfigDto {
    pub theta_iou: f64,
    pub homogeneity_sigma: f64,
    pub homogeneity_mode: HomogeneityModeDto,
    pub jump_threshold: f64,
    pub min_box_width_px: u32,
    pub min_step_px: u32,
    pub roi: Option<RegionDto>,
}

impl Default for DswConfigDto {
    fn default() -> Self {
        (&DswConfig::default()).into()
    }
}

impl From<&DswConfig> for DswConfigDto {
    fn from(c: &DswConfig) -> Self {
        DswConfigDto {
            theta_iou: c.theta_iou,
            homogeneity_sigma: c.homogeneity_sigma,
            homogeneity_mode: c.homogeneity_mode.into(),
            jump_threshold: c.jump_threshold,
            min_box_width_px: c.min_box_width_px,
            min_step_px: c.min_step_px,
            roi: c.roi.as_ref().map(RegionDto::from),
        }
    }
}

impl TryFrom<&DswConfigDto> for DswConfig {
    type Error = DswError;
    fn try_from(d: &DswConfigDto) -> Result<Self, DswError> {
        let cfg = DswConfig {
            theta_iou: d.theta_iou,
            homogeneity_sigma: d.homogeneity_sigma,
            homogeneity_mode: d.homogeneity_mode.into(),
            jump_threshold: d.jump_threshold,
            min_box_width_px: d.min_box_width_px,
            min_step_px: d.min_step_px,
            roi: d.roi.as_ref().map(Region3D::try_from).transpose()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidthStepDto {
    Additive { step_px: u32 },
    Geometric { factor: f64 },
}

impl Default for WidthStepDto {
    fn default() -> Self {
        WidthStepDto::Additive { step_px: 1 }
    }
}

impl From<WidthStepDto> for WidthStep {
    fn from(d: WidthStepDto) -> Self {
        match d {
            WidthStepDto::Additive { step_px } => WidthStep::Additive(step_px),
            WidthStepDto::Geometric { factor } => WidthStep::Geometric(factor),
        }
    }
}

// ---------------------------------------------------------------------------
// Disparity image payload
// ---------------------------------------------------------------------------

/// Dense disparity raster: row-major f32 little-endian, base64.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisparityPayload {
    pub width: u32,
    pub height: u32,
    pub data_b64: String,
}

impl DisparityPayload {
    pub fn encode(img: &DisparityImage) -> Self {
        let mut bytes = Vec::with_capacity(img.data().len() * 4);
        for &v in img.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        DisparityPayload {
            width: img.width(),
            height: img.height(),
            data_b64: B64.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<DisparityImage, DswError> {
        let bytes = B64
            .decode(&self.data_b64)
            .map_err(|e| DswError::UnsupportedFormat(format!("bad base64 raster: {}", e)))?;
        if bytes.len() % 4 != 0 {
            return Err(DswError::UnsupportedFormat(
                "raster byte length not a multiple of 4".into(),
            ));
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        DisparityImage::new(self.width, self.height, data)
    }
}

/// One byte per pixel (1 = scanned as an anchor), base64, row-major.
pub fn encode_mask(mask: &[bool]) -> String {
    let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
    B64.encode(bytes)
}

pub fn decode_mask(b64: &str) -> Result<Vec<bool>, DswError> {
    Ok(B64
        .decode(b64)
        .map_err(|e| DswError::UnsupportedFormat(format!("bad base64 mask: {}", e)))?
        .into_iter()
        .map(|b| b != 0)
        .collect())
}

// ---------------------------------------------------------------------------
// Theory endpoints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorCurvesRequest {
    pub theta_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ErrorCurveRowDto {
    pub theta: f64,
    pub eps_k: f64,
    pub eps_delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorCurvesResponse {
    pub rows: Vec<ErrorCurveRowDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsRequest {
    pub theta_grid: Vec<f64>,
    pub image_width: u32,
    pub image_height: u32,
    pub obj_width_min: u32,
    pub obj_width_max: u32,
    /// Aspect ratio r = height / width swept as the single ratio.
    pub aspect: f64,
    #[serde(default)]
    pub width_step: WidthStepDto,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CountRowDto {
    pub theta: f64,
    pub n_hypotheses: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsResponse {
    pub rows: Vec<CountRowDto>,
}

// ---------------------------------------------------------------------------
// Sessions (calibration + LUT held server-side)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub intrinsics: IntrinsicsDto,
    #[serde(default)]
    pub model: ModelDto,
    #[serde(default)]
    pub lut: LutConfigDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub lut_entries: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LutEntryDto {
    pub disparity: f64,
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LutResponse {
    pub config: LutConfigDto,
    pub entries: Vec<LutEntryDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalsRequest {
    pub image: DisparityPayload,
    #[serde(default)]
    pub config: DswConfigDto,
    /// Also return the scanned-anchor mask (see [`encode_mask`]).
    #[serde(default)]
    pub record_mask: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalDto {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub disparity: f64,
    pub depth_m: f64,
    pub stddev: f64,
    pub anchor_x: u32,
    pub anchor_y: u32,
}

impl From<&Proposal> for ProposalDto {
    fn from(p: &Proposal) -> Self {
        ProposalDto {
            x: p.x,
            y: p.y,
            w: p.w,
            h: p.h,
            disparity: p.disparity,
            depth_m: p.depth_m,
            stddev: p.homogeneity_stddev,
            anchor_x: p.anchor_x,
            anchor_y: p.anchor_y,
        }
    }
}

impl From<&ProposalDto> for Proposal {
    fn from(d: &ProposalDto) -> Self {
        Proposal {
            x: d.x,
            y: d.y,
            w: d.w,
            h: d.h,
            disparity: d.disparity,
            depth_m: d.depth_m,
            homogeneity_stddev: d.stddev,
            anchor_x: d.anchor_x,
            anchor_y: d.anchor_y,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StatsDto {
    pub visited: u64,
    pub emitted: u64,
    pub rejected_homogeneity: u64,
    pub rejected_clip: u64,
    pub skipped_out_of_range: u64,
    pub skipped_roi: u64,
    pub invalid_pixels: u64,
}

impl From<&GenerateStats> for StatsDto {
    fn from(s: &GenerateStats) -> Self {
        StatsDto {
            visited: s.visited,
            emitted: s.emitted,
            rejected_homogeneity: s.rejected_homogeneity,
            rejected_clip: s.rejected_clip,
            skipped_out_of_range: s.skipped_out_of_range,
            skipped_roi: s.skipped_roi,
            invalid_pixels: s.invalid_pixels,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalsResponse {
    pub proposals: Vec<ProposalDto>,
    pub stats: StatsDto,
    /// Present when `record_mask` was set; see [`decode_mask`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_b64: Option<String>,
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorDto {
    Dsw {
        #[serde(default)]
        model: ModelDto,
        #[serde(default)]
        lut: LutConfigDto,
        #[serde(default)]
        config: DswConfigDto,
    },
    Dense {
        obj_width_min: u32,
        obj_width_max: u32,
        #[serde(default)]
        width_step: WidthStepDto,
        aspect: f64,
        theta_iou: f64,
    },
}

impl Default for GeneratorDto {
    fn default() -> Self {
        GeneratorDto::Dsw {
            model: ModelDto::default(),
            lut: LutConfigDto::default(),
            config: DswConfigDto::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateRequest {
    /// Scene-set root on the server's filesystem (KITTI-style layout).
    pub scenes_dir: String,
    #[serde(default = "default_class")]
    pub class_filter: String,
    /// Keep only the first N scene ids (sorted), if set.
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub generator: GeneratorDto,
    /// Strictly increasing IoU thresholds in (0, 1]; empty = library default.
    #[serde(default)]
    pub theta_grid: Vec<f64>,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

fn default_class() -> String {
    "Pedestrian".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecallPointDto {
    pub theta: f64,
    /// None when the scene set has no ground truth.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtOutcomeDto {
    pub image_id: String,
    pub occlusion: String,
    pub best_iou: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFailureDto {
    pub image_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub recall_curve: Vec<RecallPointDto>,
    pub outcomes: Vec<GtOutcomeDto>,
    pub failures: Vec<SceneFailureDto>,
    pub ppi: f64,
    pub mean_ms: f64,
    pub prep_ms: f64,
    pub scenes_evaluated: usize,
    pub total_gt: usize,
}

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlantDto {
    /// Plant center pixel.
    pub x: u32,
    pub y: u32,
    pub disparity: f64,
}

impl From<PlantDto> for Plant {
    fn from(p: PlantDto) -> Self {
        Plant {
            x: p.x,
            y: p.y,
            disparity: p.disparity,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundDto {
    Invalid,
    Constant { value: f32 },
    Ramp { top: f32, bottom: f32 },
}

impl Default for BackgroundDto {
    fn default() -> Self {
        BackgroundDto::Invalid
    }
}

impl From<BackgroundDto> for Background {
    fn from(b: BackgroundDto) -> Self {
        match b {
            BackgroundDto::Invalid => Background::Invalid,
            BackgroundDto::Constant { value } => Background::Constant(value),
            BackgroundDto::Ramp { top, bottom } => Background::Ramp { top, bottom },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpecDto {
    pub width: u32,
    pub height: u32,
    pub plants: Vec<PlantDto>,
    #[serde(default)]
    pub model: ModelDto,
    #[serde(default)]
    pub intrinsics: IntrinsicsDto,
    #[serde(default)]
    pub background: BackgroundDto,
    #[serde(default)]
    pub noise_stddev: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_image_id")]
    pub image_id: String,
    #[serde(default = "default_class")]
    pub class_name: String,
}

fn default_image_id() -> String {
    "000000".to_string()
}

impl TryFrom<&SynthSpecDto> for SynthSceneSpec {
    type Error = DswError;
    fn try_from(d: &SynthSpecDto) -> Result<Self, DswError> {
        Ok(SynthSceneSpec {
            width: d.width,
            height: d.height,
            plants: d.plants.iter().map(|&p| p.into()).collect(),
            model: (&d.model).try_into()?,
            intrinsics: (&d.intrinsics).try_into()?,
            background: d.background.into(),
            noise_stddev: d.noise_stddev,
            seed: d.seed,
            image_id: d.image_id.clone(),
            class_name: d.class_name.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispFormatDto {
    Png16,
    Pfm,
}

impl Default for DispFormatDto {
    fn default() -> Self {
        DispFormatDto::Pfm
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthRequest {
    pub spec: SynthSpecDto,
    /// Directory on the server's filesystem to write the KITTI-style scene
    /// into; when absent the scene is only validated and summarized.
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub format: DispFormatDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthDto {
    pub class_name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub occlusion: String,
    pub truncation: f64,
}

impl GroundTruthDto {
    pub fn occlusion_label(occ: Occlusion) -> String {
        occ.label().to_string()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthResponse {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub ground_truth: Vec<GroundTruthDto>,
    /// Path the scene was written under, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub written_to: Option<String>,
}
