//! `dsw synth` — seeded synthetic scene sets in KITTI-style layout.

use std::path::PathBuf;

use dsw_api as api;
use dsw_client::DswClient;
use dsw_core::dataset::{synth_scene, write_scene, DispFormat, Plant, SynthSceneSpec};
use dsw_core::{CameraIntrinsics, DswError};

use crate::cfgfile::{self, CalibOpts, FileCfg, ModelOpts};
use crate::{parse, CliError};

#[derive(clap::Args, Debug)]
pub struct SynthArgs {
    /// Directory receiving calib/, disp/, and label_2/.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Inline plant list `x,y,d[;x,y,d...]` (centers in pixels).
    #[arg(long, value_name = "LIST")]
    plants: Option<String>,
    /// Plant file: one `x y d` per line, '#' comments.
    #[arg(long, value_name = "FILE")]
    plants_file: Option<PathBuf>,
    /// Image dimensions WxH.
    #[arg(long, value_name = "WxH")]
    image: Option<String>,
    /// Base RNG seed; scene i uses seed + i.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Number of scenes (ids count up from --start-index).
    #[arg(long, value_name = "N")]
    count: Option<u32>,
    /// Background: 'invalid', 'constant:V', or 'ramp:TOP:BOTTOM'.
    #[arg(long, value_name = "SPEC")]
    background: Option<String>,
    /// Gaussian disparity noise stddev on plant pixels.
    #[arg(long, value_name = "SIGMA")]
    noise: Option<f64>,
    /// Disparity file format: 'png' (16-bit) or 'pfm'.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// First image id (ids are zero-padded to six digits).
    #[arg(long, value_name = "N")]
    start_index: Option<u32>,
    /// Class name written to the labels.
    #[arg(long, value_name = "NAME")]
    class: Option<String>,
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    calib: CalibOpts,
}

fn resolve_format(args: &SynthArgs, cfg: &FileCfg) -> Result<DispFormat, CliError> {
    let spec = cfg
        .get_opt(args.format.clone(), "format")?
        .unwrap_or_else(|| "pfm".to_string());
    match spec.to_ascii_lowercase().as_str() {
        "png" | "png16" => Ok(DispFormat::Png16),
        "pfm" => Ok(DispFormat::Pfm),
        other => Err(CliError::Usage(format!(
            "format must be 'png' or 'pfm', got '{}'",
            other
        ))),
    }
}

fn resolve_plants(args: &SynthArgs, cfg: &FileCfg) -> Result<Vec<Plant>, CliError> {
    let inline = cfg.get_opt(args.plants.clone(), "plants")?;
    let file: Option<PathBuf> = cfg.get_opt(args.plants_file.clone(), "plants_file")?;
    match (inline, file) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "pass either --plants or --plants-file, not both".into(),
        )),
        (Some(spec), None) => parse::plants_inline(&spec).map_err(CliError::Usage),
        (None, Some(path)) => {
            let content = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {}", path.display(), e)))?;
            parse::plants_file(&content).map_err(CliError::Usage)
        }
        (None, None) => Err(CliError::Usage(
            "plant spec required: --plants \"x,y,d;...\" or --plants-file FILE".into(),
        )),
    }
}

/// Drops out-of-bounds plants one at a time (reporting each), keeping the
/// rest; an entirely invalid spec is a runtime failure.
fn keep_valid_plants(spec: &SynthSceneSpec, plants: Vec<Plant>) -> Result<Vec<Plant>, CliError> {
    let mut valid = plants;
    loop {
        if valid.is_empty() {
            return Err(CliError::Runtime("all plants out of bounds".into()));
        }
        let mut probe = spec.clone();
        probe.plants = valid.clone();
        match synth_scene(&probe) {
            Ok(_) => return Ok(valid),
            Err(err @ DswError::PlantOutOfBounds { x, y, .. }) => {
                eprintln!("warning: {}", err);
                let pos = valid
                    .iter()
                    .position(|p| p.x == x && p.y == y)
                    .expect("offending plant present");
                valid.remove(pos);
            }
            Err(other) => return Err(CliError::usage(other)),
        }
    }
}

pub fn run(args: &SynthArgs, cfg: &FileCfg, server: Option<&str>) -> Result<(), CliError> {
    let out_dir = cfg
        .get_opt(args.out_dir.clone(), "out_dir")?
        .ok_or_else(|| CliError::Usage("output directory required: --out-dir DIR".into()))?;
    let image_spec = cfg
        .get_opt(args.image.clone(), "image")?
        .unwrap_or_else(|| "1242x375".to_string());
    let (width, height) = parse::wxh(&image_spec).map_err(CliError::Usage)?;
    let background = match cfg.get_opt(args.background.clone(), "background")? {
        Some(s) => parse::background(&s).map_err(CliError::Usage)?,
        None => dsw_core::dataset::Background::Invalid,
    };
    let seed = cfg.get(args.seed, "seed", 0u64)?;
    let count = cfg.get(args.count, "count", 1u32)?;
    if count == 0 {
        return Err(CliError::Usage("count must be at least 1".into()));
    }
    let start_index = cfg.get(args.start_index, "start_index", 0u32)?;
    let format = resolve_format(args, cfg)?;
    let intrinsics = cfgfile::resolve_intrinsics_opt(&args.calib, cfg)?
        .unwrap_or_else(CameraIntrinsics::kitti_like);

    let mut spec = SynthSceneSpec::new(width, height);
    spec.model = cfgfile::resolve_model(&args.model, cfg)?;
    spec.intrinsics = intrinsics;
    spec.background = background;
    spec.noise_stddev = cfg.get(args.noise, "noise", 0.0)?;
    spec.class_name = cfg
        .get_opt(args.class.clone(), "class")?
        .unwrap_or_else(|| "Pedestrian".to_string());

    let plants = resolve_plants(args, cfg)?;
    spec.plants = keep_valid_plants(&spec, plants)?;

    let client = server.map(DswClient::new);
    for i in 0..count {
        let mut scene_spec = spec.clone();
        scene_spec.seed = seed + u64::from(i);
        scene_spec.image_id = format!("{:06}", start_index + i);
        match &client {
            None => {
                let scene = synth_scene(&scene_spec).map_err(CliError::runtime)?;
                write_scene(&scene, &out_dir, format).map_err(CliError::runtime)?;
            }
            Some(client) => {
                client.synth(&api::SynthRequest {
                    spec: spec_to_dto(&scene_spec),
                    out_dir: Some(out_dir.to_string_lossy().into_owned()),
                    format: match format {
                        DispFormat::Png16 => api::DispFormatDto::Png16,
                        DispFormat::Pfm => api::DispFormatDto::Pfm,
                    },
                })?;
            }
        }
    }
    println!("wrote {} scene(s) under {}", count, out_dir.display());
    Ok(())
}

fn spec_to_dto(spec: &SynthSceneSpec) -> api::SynthSpecDto {
    api::SynthSpecDto {
        width: spec.width,
        height: spec.height,
        plants: spec
            .plants
            .iter()
            .map(|p| api::PlantDto {
                x: p.x,
                y: p.y,
                disparity: p.disparity,
            })
            .collect(),
        model: (&spec.model).into(),
        intrinsics: (&spec.intrinsics).into(),
        background: match spec.background {
            dsw_core::dataset::Background::Invalid => api::BackgroundDto::Invalid,
            dsw_core::dataset::Background::Constant(v) => api::BackgroundDto::Constant { value: v },
            dsw_core::dataset::Background::Ramp { top, bottom } => {
                api::BackgroundDto::Ramp { top, bottom }
            }
        },
        noise_stddev: spec.noise_stddev,
        seed: spec.seed,
        image_id: spec.image_id.clone(),
        class_name: spec.class_name.clone(),
    }
}
