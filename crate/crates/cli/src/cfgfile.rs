//! Flat `key=value` configuration with flag > file > default precedence.
//!
//! The file format: one `key=value` per line, `#` starts a comment, blank
//! lines ignored. Unknown keys are rejected up front so typos fail fast.
//! `--config PATH` names the file explicitly; otherwise the `DSW_CONFIG`
//! environment variable is consulted; otherwise no file is loaded.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::parse;
use crate::CliError;
use dsw_core::proposer::HomogeneityMode;
use dsw_core::{CameraIntrinsics, DswConfig, LutConfig, ObjectModel, Point3D, Region3D};

/// Every key the config file may contain.
pub const KNOWN_KEYS: &[&str] = &[
    // object model / LUT
    "model_width",
    "model_height",
    "lut_min",
    "lut_max",
    "lut_step",
    // DSW knobs
    "theta",
    "sigma",
    "homogeneity_mode",
    "jump_threshold",
    "min_box_width",
    "min_step",
    "roi",
    // intrinsics (generate without a calibration file)
    "fx",
    "fy",
    "cx",
    "cy",
    "skew",
    "baseline",
    "calib",
    // theory geometry
    "image",
    "widths",
    "aspect",
    "theta_grid",
    // dataset / output plumbing
    "dataset_dir",
    "out_dir",
    "class",
    "limit",
    "jobs",
    "generator",
    "occlusion_theta",
    // synth
    "seed",
    "count",
    "plants",
    "plants_file",
    "background",
    "noise",
    "format",
    "start_index",
    // transport
    "server",
];

#[derive(Default)]
pub struct FileCfg {
    map: HashMap<String, String>,
}

impl FileCfg {
    /// Loads the explicit path, else `DSW_CONFIG`, else returns an empty
    /// config. A named-but-unreadable file is a usage error.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path: Option<PathBuf> = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os("DSW_CONFIG").map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(FileCfg::default());
        };
        let content = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {}", path.display(), e))
        })?;
        let mut map = HashMap::new();
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key=value, got '{}'",
                    path.display(),
                    lineno + 1,
                    line
                ))
            })?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown config key '{}'",
                    path.display(),
                    lineno + 1,
                    key
                )));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(FileCfg { map })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// flag > file > default for straight `FromStr` values.
    pub fn get<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get_opt(flag, key)?.unwrap_or(default))
    }

    /// flag > file > None for straight `FromStr` values.
    pub fn get_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                CliError::Usage(format!("config key {}: bad value '{}': {}", key, v, e))
            }),
            None => Ok(None),
        }
    }

    /// flag > file > None through a custom parser (flag arrives already
    /// parsed by clap's value_parser, so only the file value goes through
    /// `parser` here).
    pub fn get_opt_with<T>(
        &self,
        flag: Option<T>,
        key: &str,
        parser: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(v) => parser(v)
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {}: {}", key, e))),
            None => Ok(None),
        }
    }
}

/// Shared `--model-*` / `--lut-*` flags (generate, evaluate, synth).
#[derive(clap::Args, Debug, Default)]
pub struct ModelOpts {
    /// Real-world object width, meters.
    #[arg(long, value_name = "M")]
    pub model_width: Option<f64>,
    /// Real-world object height, meters.
    #[arg(long, value_name = "M")]
    pub model_height: Option<f64>,
    /// Smallest disparity in the size lookup table.
    #[arg(long, value_name = "D")]
    pub lut_min: Option<f64>,
    /// Largest disparity in the size lookup table.
    #[arg(long, value_name = "D")]
    pub lut_max: Option<f64>,
    /// Disparity quantization step of the lookup table.
    #[arg(long, value_name = "D")]
    pub lut_step: Option<f64>,
}

pub fn resolve_model(opts: &ModelOpts, cfg: &FileCfg) -> Result<ObjectModel, CliError> {
    let default = ObjectModel::pedestrian();
    let width = cfg.get(opts.model_width, "model_width", default.width_world)?;
    let height = cfg.get(opts.model_height, "model_height", default.height_world)?;
    ObjectModel::new(width, height).map_err(CliError::usage)
}

pub fn resolve_lut(opts: &ModelOpts, cfg: &FileCfg) -> Result<LutConfig, CliError> {
    let default = LutConfig::default();
    let lut = LutConfig {
        d_min: cfg.get(opts.lut_min, "lut_min", default.d_min)?,
        d_max: cfg.get(opts.lut_max, "lut_max", default.d_max)?,
        delta_d: cfg.get(opts.lut_step, "lut_step", default.delta_d)?,
    };
    lut.validate().map_err(CliError::usage)?;
    Ok(lut)
}

/// Shared DSW traversal knobs (generate, evaluate).
#[derive(clap::Args, Debug, Default)]
pub struct DswOpts {
    /// Target IoU the adaptive steps guarantee, in (0, 1].
    #[arg(long, value_name = "THETA")]
    pub theta: Option<f64>,
    /// Homogeneity threshold (see --homogeneity-mode).
    #[arg(long, value_name = "SIGMA")]
    pub sigma: Option<f64>,
    /// 'relative' (stddev / mean) or 'absolute' (raw stddev).
    #[arg(long, value_name = "MODE", value_parser = parse::homogeneity_mode)]
    pub homogeneity_mode: Option<HomogeneityMode>,
    /// Disparity difference treated as an object boundary while stepping.
    #[arg(long, value_name = "D")]
    pub jump_threshold: Option<f64>,
    /// Minimum clipped proposal width worth emitting, pixels.
    #[arg(long, value_name = "PX")]
    pub min_box_width: Option<u32>,
    /// Smallest pixel advance of the scan.
    #[arg(long, value_name = "PX")]
    pub min_step: Option<u32>,
    /// 3D region of interest `x0,y0,z0:x1,y1,z1` (camera frame, meters).
    #[arg(long, value_name = "REGION", value_parser = parse::roi)]
    pub roi: Option<([f64; 3], [f64; 3])>,
}

pub fn resolve_dsw(opts: &DswOpts, cfg: &FileCfg) -> Result<DswConfig, CliError> {
    let default = DswConfig::default();
    let roi = cfg.get_opt_with(opts.roi, "roi", |s| parse::roi(s))?;
    let roi = roi
        .map(|(lo, hi)| {
            Region3D::new(
                Point3D {
                    x: lo[0],
                    y: lo[1],
                    z: lo[2],
                },
                Point3D {
                    x: hi[0],
                    y: hi[1],
                    z: hi[2],
                },
            )
        })
        .transpose()
        .map_err(CliError::usage)?;
    let resolved = DswConfig {
        theta_iou: cfg.get(opts.theta, "theta", default.theta_iou)?,
        homogeneity_sigma: cfg.get(opts.sigma, "sigma", default.homogeneity_sigma)?,
        homogeneity_mode: cfg
            .get_opt_with(opts.homogeneity_mode, "homogeneity_mode", |s| {
                parse::homogeneity_mode(s)
            })?
            .unwrap_or(default.homogeneity_mode),
        jump_threshold: cfg.get(
            opts.jump_threshold,
            "jump_threshold",
            default.jump_threshold,
        )?,
        min_box_width_px: cfg.get(
            opts.min_box_width,
            "min_box_width",
            default.min_box_width_px,
        )?,
        min_step_px: cfg.get(opts.min_step, "min_step", default.min_step_px)?,
        roi,
    };
    resolved.validate().map_err(CliError::usage)?;
    Ok(resolved)
}

/// Calibration source for `generate`: a KITTI calibration file or explicit
/// intrinsics.
#[derive(clap::Args, Debug, Default)]
pub struct CalibOpts {
    /// KITTI-style calibration file (P2/P3 projection matrices).
    #[arg(long, value_name = "FILE")]
    pub calib: Option<PathBuf>,
    /// Focal length x, pixels.
    #[arg(long)]
    pub fx: Option<f64>,
    /// Focal length y, pixels.
    #[arg(long)]
    pub fy: Option<f64>,
    /// Principal point x, pixels.
    #[arg(long)]
    pub cx: Option<f64>,
    /// Principal point y, pixels.
    #[arg(long)]
    pub cy: Option<f64>,
    /// Skew parameter, pixels.
    #[arg(long)]
    pub skew: Option<f64>,
    /// Stereo baseline, meters.
    #[arg(long)]
    pub baseline: Option<f64>,
}

/// None when neither a calibration file nor any explicit intrinsic was
/// given; partial explicit intrinsics are a usage error.
pub fn resolve_intrinsics_opt(
    opts: &CalibOpts,
    cfg: &FileCfg,
) -> Result<Option<CameraIntrinsics>, CliError> {
    let calib: Option<PathBuf> = match &opts.calib {
        Some(p) => Some(p.clone()),
        None => cfg.raw("calib").map(PathBuf::from),
    };
    if let Some(path) = calib {
        let content = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Runtime(format!("cannot read calibration {}: {}", path.display(), e))
        })?;
        return dsw_core::dataset::parse_calibration(&content)
            .map(Some)
            .map_err(CliError::runtime);
    }
    let fx = cfg.get_opt(opts.fx, "fx")?;
    let fy = cfg.get_opt(opts.fy, "fy")?;
    let cx = cfg.get_opt(opts.cx, "cx")?;
    let cy = cfg.get_opt(opts.cy, "cy")?;
    let skew = cfg.get_opt(opts.skew, "skew")?;
    let baseline = cfg.get_opt(opts.baseline, "baseline")?;
    match (fx, fy, cx, cy, baseline) {
        (Some(fx), Some(fy), Some(cx), Some(cy), Some(baseline)) => {
            CameraIntrinsics::with_skew(fx, fy, cx, cy, skew.unwrap_or(0.0), baseline)
                .map(Some)
                .map_err(CliError::usage)
        }
        (None, None, None, None, None) if skew.is_none() => Ok(None),
        _ => Err(CliError::Usage(
            "incomplete intrinsics: pass all of --fx --fy --cx --cy --baseline".into(),
        )),
    }
}

pub fn resolve_intrinsics(opts: &CalibOpts, cfg: &FileCfg) -> Result<CameraIntrinsics, CliError> {
    resolve_intrinsics_opt(opts, cfg)?.ok_or_else(|| {
        CliError::Usage(
            "calibration required: pass --calib FILE or all of --fx --fy --cx --cy --baseline"
                .into(),
        )
    })
}
