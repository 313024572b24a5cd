//! `dsw generate` — proposals for one disparity image.

use std::fs;
use std::path::PathBuf;

use dsw_api as api;
use dsw_client::DswClient;
use dsw_core::dataset::load_disparity;
use dsw_core::proposer::{generate_full, write_proposals_csv, GenerateOutput, GenerateStats};
use dsw_core::{build_lut, Proposal};

use crate::cfgfile::{self, CalibOpts, DswOpts, FileCfg, ModelOpts};
use crate::CliError;

#[derive(clap::Args, Debug)]
pub struct GenerateArgs {
    /// Disparity image: 16-bit PNG (disparity * 256) or PFM.
    #[arg(long, value_name = "FILE")]
    disparity: PathBuf,
    #[command(flatten)]
    calib: CalibOpts,
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    dsw: DswOpts,
    /// Proposal CSV path (default: <out_dir>/proposals.csv).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the scanned-anchor mask as an 8-bit PNG.
    #[arg(long, value_name = "FILE")]
    mask: Option<PathBuf>,
    /// Print traversal counters.
    #[arg(long)]
    stats: bool,
    /// Image id for the CSV rows (default: disparity file stem).
    #[arg(long, value_name = "ID")]
    image_id: Option<String>,
}

fn stats_line(s: &GenerateStats) -> String {
    format!(
        "visited={} emitted={} rejected_homogeneity={} rejected_clip={} \
         skipped_out_of_range={} skipped_roi={} invalid_pixels={}",
        s.visited,
        s.emitted,
        s.rejected_homogeneity,
        s.rejected_clip,
        s.skipped_out_of_range,
        s.skipped_roi,
        s.invalid_pixels
    )
}

fn write_mask_png(mask: &[bool], width: u32, height: u32, path: &PathBuf) -> Result<(), CliError> {
    let pixels: Vec<u8> = mask.iter().map(|&v| if v { 255 } else { 0 }).collect();
    let img = image::GrayImage::from_raw(width, height, pixels)
        .ok_or_else(|| CliError::Runtime("mask size mismatch".into()))?;
    img.save(path)
        .map_err(|e| CliError::Runtime(format!("cannot write mask {}: {}", path.display(), e)))
}

pub fn run(args: &GenerateArgs, cfg: &FileCfg, server: Option<&str>) -> Result<(), CliError> {
    let intrinsics = cfgfile::resolve_intrinsics(&args.calib, cfg)?;
    let model = cfgfile::resolve_model(&args.model, cfg)?;
    let lut_cfg = cfgfile::resolve_lut(&args.model, cfg)?;
    let dsw_cfg = cfgfile::resolve_dsw(&args.dsw, cfg)?;

    let image = load_disparity(&args.disparity, None).map_err(CliError::runtime)?;
    let image_id = match &args.image_id {
        Some(id) => id.clone(),
        None => args
            .disparity
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "000000".to_string()),
    };

    let want_mask = args.mask.is_some();
    let (proposals, stats, mask): (Vec<Proposal>, GenerateStats, Option<Vec<bool>>) = match server {
        None => {
            let lut = build_lut(&intrinsics, &model, lut_cfg).map_err(CliError::runtime)?;
            let GenerateOutput {
                proposals,
                stats,
                visited_mask,
            } = generate_full(&image, &intrinsics, &lut, &dsw_cfg, want_mask)
                .map_err(CliError::runtime)?;
            (proposals, stats, visited_mask)
        }
        Some(url) => {
            let client = DswClient::new(url);
            let session = client.create_session(&api::CreateSessionRequest {
                intrinsics: (&intrinsics).into(),
                model: (&model).into(),
                lut: api::LutConfigDto {
                    d_min: lut_cfg.d_min,
                    d_max: lut_cfg.d_max,
                    delta_d: lut_cfg.delta_d,
                },
            })?;
            let outcome = client.proposals(
                &session.session_id,
                &api::ProposalsRequest {
                    image: api::DisparityPayload::encode(&image),
                    config: (&dsw_cfg).into(),
                    record_mask: want_mask,
                },
            );
            // Best-effort cleanup either way.
            let _ = client.delete_session(&session.session_id);
            let resp = outcome?;
            let mask = resp
                .mask_b64
                .as_deref()
                .map(api::decode_mask)
                .transpose()
                .map_err(CliError::runtime)?;
            (
                resp.proposals.iter().map(Proposal::from).collect(),
                GenerateStats {
                    visited: resp.stats.visited,
                    emitted: resp.stats.emitted,
                    rejected_homogeneity: resp.stats.rejected_homogeneity,
                    rejected_clip: resp.stats.rejected_clip,
                    skipped_out_of_range: resp.stats.skipped_out_of_range,
                    skipped_roi: resp.stats.skipped_roi,
                    invalid_pixels: resp.stats.invalid_pixels,
                },
                mask,
            )
        }
    };

    let out_path = match &args.out {
        Some(p) => p.clone(),
        None => cfg
            .get_opt::<PathBuf>(None, "out_dir")?
            .unwrap_or_else(|| PathBuf::from("."))
            .join("proposals.csv"),
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(CliError::runtime)?;
        }
    }
    let mut file = fs::File::create(&out_path).map_err(CliError::runtime)?;
    write_proposals_csv(&image_id, &proposals, &mut file).map_err(CliError::runtime)?;

    if let Some(mask_path) = &args.mask {
        let mask = mask.ok_or_else(|| CliError::Runtime("mask missing from result".into()))?;
        if let Some(parent) = mask_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(CliError::runtime)?;
            }
        }
        write_mask_png(&mask, image.width(), image.height(), mask_path)?;
    }

    println!(
        "wrote {} proposals to {}",
        proposals.len(),
        out_path.display()
    );
    if args.stats {
        println!("{}", stats_line(&stats));
    }
    Ok(())
}
