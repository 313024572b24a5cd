//! `dsw evaluate` — recall / PPI over a KITTI-style scene directory.

use std::fs;
use std::path::PathBuf;

use dsw_api as api;
use dsw_client::DswClient;
use dsw_core::dataset::Occlusion;
use dsw_core::fmt::sig6;
use dsw_core::metrics::{
    evaluate, write_best_iou_csv, write_occlusion_csv, write_recall_curve_csv, write_summary_csv,
    DenseGenerator, DswGenerator, EvalConfig, EvalResult, GtOutcome, ProposalGenerator,
    SceneFailure,
};
use dsw_core::theory::WidthStep;

use crate::cfgfile::{self, DswOpts, FileCfg, ModelOpts};
use crate::{parse, CliError};

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    /// Scene-set root containing calib/, disp/, and optionally label_2/.
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Proposal source: 'dsw' or 'baseline'.
    #[arg(long, value_name = "NAME")]
    generator: Option<String>,
    /// Ground-truth class to keep (empty keeps every class).
    #[arg(long, value_name = "NAME")]
    class: Option<String>,
    /// Evaluate only the first N scene ids.
    #[arg(long, value_name = "N")]
    limit: Option<usize>,
    /// IoU thresholds: START:END:STEP, a comma list, or a single value.
    #[arg(long, value_name = "GRID")]
    theta_grid: Option<String>,
    /// Worker threads for the scene sweep (1 = serial; default: all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Directory for the result CSV files.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// IoU threshold used for the per-occlusion breakdown.
    #[arg(long, value_name = "THETA")]
    occlusion_theta: Option<f64>,
    /// Baseline sweep widths MIN:MAX[:STEP], pixels.
    #[arg(long, value_name = "SPAN")]
    widths: Option<String>,
    /// Baseline aspect ratio r = height / width.
    #[arg(long, value_name = "R")]
    aspect: Option<f64>,
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    dsw: DswOpts,
}

fn occlusion_from_label(label: &str) -> Occlusion {
    Occlusion::ALL
        .iter()
        .copied()
        .find(|o| o.label() == label)
        .unwrap_or(Occlusion::Unknown)
}

enum GeneratorChoice {
    Dsw(DswGenerator),
    Dense(DenseGenerator),
}

fn resolve_generator(args: &EvaluateArgs, cfg: &FileCfg) -> Result<GeneratorChoice, CliError> {
    let name = cfg
        .get_opt(args.generator.clone(), "generator")?
        .unwrap_or_else(|| "dsw".to_string());
    match name.as_str() {
        "dsw" => Ok(GeneratorChoice::Dsw(DswGenerator {
            config: cfgfile::resolve_dsw(&args.dsw, cfg)?,
            lut: cfgfile::resolve_lut(&args.model, cfg)?,
            model: cfgfile::resolve_model(&args.model, cfg)?,
        })),
        "baseline" => {
            let default = DenseGenerator::default();
            let widths_spec = cfg.get_opt(args.widths.clone(), "widths")?;
            let (wmin, wmax, step) = match widths_spec {
                Some(s) => parse::span(&s).map_err(CliError::Usage)?,
                None => (
                    default.obj_width_min_px,
                    default.obj_width_max_px,
                    match default.width_step {
                        WidthStep::Additive(s) => s,
                        WidthStep::Geometric(_) => 1,
                    },
                ),
            };
            Ok(GeneratorChoice::Dense(DenseGenerator {
                obj_width_min_px: wmin,
                obj_width_max_px: wmax,
                width_step: WidthStep::Additive(step),
                aspect: cfg.get(args.aspect, "aspect", default.aspect)?,
                theta_iou: cfg.get(args.dsw.theta, "theta", default.theta_iou)?,
            }))
        }
        other => Err(CliError::Usage(format!(
            "generator must be 'dsw' or 'baseline', got '{}'",
            other
        ))),
    }
}

fn generator_dto(choice: &GeneratorChoice) -> api::GeneratorDto {
    match choice {
        GeneratorChoice::Dsw(g) => api::GeneratorDto::Dsw {
            model: (&g.model).into(),
            lut: api::LutConfigDto {
                d_min: g.lut.d_min,
                d_max: g.lut.d_max,
                delta_d: g.lut.delta_d,
            },
            config: (&g.config).into(),
        },
        GeneratorChoice::Dense(g) => api::GeneratorDto::Dense {
            obj_width_min: g.obj_width_min_px,
            obj_width_max: g.obj_width_max_px,
            width_step: match g.width_step {
                WidthStep::Additive(s) => api::WidthStepDto::Additive { step_px: s },
                WidthStep::Geometric(f) => api::WidthStepDto::Geometric { factor: f },
            },
            aspect: g.aspect,
            theta_iou: g.theta_iou,
        },
    }
}

pub fn run(args: &EvaluateArgs, cfg: &FileCfg, server: Option<&str>) -> Result<(), CliError> {
    let dataset = cfg
        .get_opt(args.dataset.clone(), "dataset_dir")?
        .ok_or_else(|| CliError::Usage("dataset directory required: --dataset DIR".into()))?;
    let class = cfg
        .get_opt(args.class.clone(), "class")?
        .unwrap_or_else(|| "Pedestrian".to_string());
    let limit = cfg.get_opt(args.limit, "limit")?;
    let jobs = cfg.get_opt(args.jobs, "jobs")?;
    let occlusion_theta = cfg.get(args.occlusion_theta, "occlusion_theta", 0.5)?;
    let theta_grid = match cfg.get_opt(args.theta_grid.clone(), "theta_grid")? {
        Some(s) => parse::grid(&s).map_err(CliError::Usage)?,
        None => EvalConfig::default().theta_grid,
    };
    let out_dir = cfg
        .get_opt(args.out_dir.clone(), "out_dir")?
        .unwrap_or_else(|| PathBuf::from("."));
    let choice = resolve_generator(args, cfg)?;

    let eval_cfg = EvalConfig {
        theta_grid: theta_grid.clone(),
        parallel: jobs != Some(1),
    };
    eval_cfg.validate().map_err(CliError::usage)?;

    let result: EvalResult = match server {
        None => {
            let scenes =
                dsw_service::load_scene_set(&dataset, &class, limit).map_err(CliError::runtime)?;
            let generator: &dyn ProposalGenerator = match &choice {
                GeneratorChoice::Dsw(g) => g,
                GeneratorChoice::Dense(g) => g,
            };
            match jobs {
                Some(n) if n > 1 => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(CliError::runtime)?;
                    pool.install(|| evaluate(&scenes, generator, &eval_cfg))
                        .map_err(CliError::runtime)?
                }
                _ => evaluate(&scenes, generator, &eval_cfg).map_err(CliError::runtime)?,
            }
        }
        Some(url) => {
            let client = DswClient::new(url);
            let resp = client.evaluate(&api::EvaluateRequest {
                scenes_dir: dataset.to_string_lossy().into_owned(),
                class_filter: class.clone(),
                limit,
                generator: generator_dto(&choice),
                theta_grid: theta_grid.clone(),
                parallel: eval_cfg.parallel,
            })?;
            EvalResult {
                recall_curve: resp
                    .recall_curve
                    .iter()
                    .map(|p| (p.theta, p.recall.unwrap_or(f64::NAN)))
                    .collect(),
                outcomes: resp
                    .outcomes
                    .iter()
                    .map(|o| GtOutcome {
                        image_id: o.image_id.clone(),
                        occlusion: occlusion_from_label(&o.occlusion),
                        best_iou: o.best_iou,
                    })
                    .collect(),
                ppi: resp.ppi,
                mean_ms: resp.mean_ms,
                prep_ms: resp.prep_ms,
                scenes_evaluated: resp.scenes_evaluated,
                failures: resp
                    .failures
                    .iter()
                    .map(|f| SceneFailure {
                        image_id: f.image_id.clone(),
                        error: f.error.clone(),
                    })
                    .collect(),
                total_gt: resp.total_gt,
            }
        }
    };

    for failure in &result.failures {
        eprintln!("scene {}: {}", failure.image_id, failure.error);
    }
    if result.scenes_evaluated == 0 {
        return Err(CliError::Runtime("no scene evaluated successfully".into()));
    }

    fs::create_dir_all(&out_dir).map_err(CliError::runtime)?;
    let write = |name: &str,
                 f: &dyn Fn(&mut fs::File) -> std::io::Result<()>|
     -> Result<PathBuf, CliError> {
        let path = out_dir.join(name);
        let mut file = fs::File::create(&path).map_err(CliError::runtime)?;
        f(&mut file).map_err(CliError::runtime)?;
        Ok(path)
    };
    write("recall_curve.csv", &|f| write_recall_curve_csv(&result, f))?;
    write("summary.csv", &|f| write_summary_csv(&result, f))?;
    write("occlusion.csv", &|f| {
        write_occlusion_csv(&result, occlusion_theta, f)
    })?;
    write("best_iou.csv", &|f| write_best_iou_csv(&result, f))?;

    let recall_at = |theta: f64| {
        result
            .recall(theta)
            .map(|r| sig6(r))
            .unwrap_or_else(|| "nan".to_string())
    };
    println!(
        "scenes={} gt={} ppi={} mean_ms={} recall@{}={}",
        result.scenes_evaluated,
        result.total_gt,
        sig6(result.ppi),
        sig6(result.mean_ms),
        occlusion_theta,
        recall_at(occlusion_theta)
    );
    println!(
        "wrote recall_curve.csv summary.csv occlusion.csv best_iou.csv under {}",
        out_dir.display()
    );
    Ok(())
}
