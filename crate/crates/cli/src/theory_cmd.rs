//! `dsw theory` — error-tolerance curves and hypothesis counts.

use std::fs;
use std::path::PathBuf;

use dsw_api as api;
use dsw_client::DswClient;
use dsw_core::theory::{
    count_total, error_curves, positioning_error, scaling_error, write_counts_csv,
    write_error_curves_csv, ErrorCurveRow, TheoryParams, WidthStep,
};

use crate::cfgfile::FileCfg;
use crate::{parse, CliError};

#[derive(clap::Args, Debug)]
pub struct TheoryArgs {
    /// Theta grid: START:END:STEP, a comma list, or a single value.
    #[arg(long, value_name = "GRID")]
    theta_grid: Option<String>,
    /// Image dimensions WxH.
    #[arg(long, value_name = "WxH")]
    image: Option<String>,
    /// Swept object widths MIN:MAX[:STEP], pixels.
    #[arg(long, value_name = "SPAN")]
    widths: Option<String>,
    /// Aspect ratio r = height / width.
    #[arg(long, value_name = "R")]
    aspect: Option<f64>,
    /// Use the IoU-preserving geometric width progression instead of the
    /// additive step (the step factor follows each theta).
    #[arg(long)]
    geometric: bool,
    /// Directory for the two CSV files.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

struct Resolved {
    grid: Vec<f64>,
    image: (u32, u32),
    widths: (u32, u32, u32),
    aspect: f64,
    out_dir: PathBuf,
}

fn resolve(args: &TheoryArgs, cfg: &FileCfg) -> Result<Resolved, CliError> {
    let grid_spec = cfg
        .get_opt(args.theta_grid.clone(), "theta_grid")?
        .unwrap_or_else(|| "0.3:0.9:0.05".to_string());
    let image_spec = cfg
        .get_opt(args.image.clone(), "image")?
        .unwrap_or_else(|| "1242x375".to_string());
    let widths_spec = cfg
        .get_opt(args.widths.clone(), "widths")?
        .unwrap_or_else(|| "10:100:1".to_string());
    Ok(Resolved {
        grid: parse::grid(&grid_spec).map_err(CliError::Usage)?,
        image: parse::wxh(&image_spec).map_err(CliError::Usage)?,
        widths: parse::span(&widths_spec).map_err(CliError::Usage)?,
        aspect: cfg.get(args.aspect, "aspect", 3.0)?,
        out_dir: cfg
            .get_opt(args.out_dir.clone(), "out_dir")?
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}

fn params_for(r: &Resolved, theta: f64, geometric: bool) -> Result<TheoryParams, CliError> {
    let (w, h) = r.image;
    let (wmin, wmax, step) = r.widths;
    let mut params =
        TheoryParams::new(w, h, wmin, wmax, r.aspect, theta).map_err(CliError::usage)?;
    let mode = if geometric {
        WidthStep::geometric_for(theta).map_err(CliError::usage)?
    } else {
        WidthStep::Additive(step)
    };
    params = params.with_width_step(mode).map_err(CliError::usage)?;
    Ok(params)
}

fn count_for(r: &Resolved, theta: f64, geometric: bool) -> Result<u64, CliError> {
    let params = params_for(r, theta, geometric)?;
    let delta = 2.0 * positioning_error(theta).map_err(CliError::usage)?;
    count_total(&params, delta).map_err(CliError::usage)
}

pub fn run(args: &TheoryArgs, cfg: &FileCfg, server: Option<&str>) -> Result<(), CliError> {
    let r = resolve(args, cfg)?;

    let (curve_rows, count_rows) = match server {
        None => {
            let curves = error_curves(&r.grid).map_err(CliError::usage)?;
            let counts = r
                .grid
                .iter()
                .map(|&theta| Ok((theta, count_for(&r, theta, args.geometric)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            (curves, counts)
        }
        Some(url) => {
            let client = DswClient::new(url);
            let curves = client
                .error_curves(&api::ErrorCurvesRequest {
                    theta_grid: r.grid.clone(),
                })?
                .rows
                .iter()
                .map(|row| ErrorCurveRow {
                    theta: row.theta,
                    eps_k: row.eps_k,
                    eps_delta: row.eps_delta,
                })
                .collect();
            // The geometric width factor follows theta, so ask per point.
            let mut counts = Vec::with_capacity(r.grid.len());
            for &theta in &r.grid {
                let step = if args.geometric {
                    api::WidthStepDto::Geometric {
                        factor: match WidthStep::geometric_for(theta).map_err(CliError::usage)? {
                            WidthStep::Geometric(f) => f,
                            WidthStep::Additive(_) => unreachable!(),
                        },
                    }
                } else {
                    api::WidthStepDto::Additive {
                        step_px: r.widths.2,
                    }
                };
                let resp = client.counts(&api::CountsRequest {
                    theta_grid: vec![theta],
                    image_width: r.image.0,
                    image_height: r.image.1,
                    obj_width_min: r.widths.0,
                    obj_width_max: r.widths.1,
                    aspect: r.aspect,
                    width_step: step,
                })?;
                counts.push((theta, resp.rows[0].n_hypotheses));
            }
            (curves, counts)
        }
    };

    fs::create_dir_all(&r.out_dir).map_err(CliError::runtime)?;
    let curves_path = r.out_dir.join("error_curves.csv");
    let counts_path = r.out_dir.join("hypothesis_counts.csv");
    let mut curves_file = fs::File::create(&curves_path).map_err(CliError::runtime)?;
    write_error_curves_csv(&curve_rows, &mut curves_file).map_err(CliError::runtime)?;
    let mut counts_file = fs::File::create(&counts_path).map_err(CliError::runtime)?;
    write_counts_csv(&count_rows, &mut counts_file).map_err(CliError::runtime)?;

    // Headline figures at theta = 0.5, independent of the requested grid.
    println!(
        "eps_k(0.5)={:.4}",
        scaling_error(0.5).map_err(CliError::usage)?
    );
    println!(
        "eps_delta(0.5)={:.4}",
        positioning_error(0.5).map_err(CliError::usage)?
    );
    println!("n_hypotheses(0.5)={}", count_for(&r, 0.5, args.geometric)?);
    println!(
        "wrote {} and {}",
        curves_path.display(),
        counts_path.display()
    );
    Ok(())
}
