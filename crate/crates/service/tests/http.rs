//! End-to-end HTTP tests: real listener on port 0, JSON over the wire,
//! responses compared against the library run in-process.

use dsw_api as api;
use dsw_core::dataset::{synth_scene, write_scene, DispFormat, Plant, SynthSceneSpec};
use dsw_core::metrics::{evaluate, DswGenerator, EvalConfig};
use dsw_core::proposer::generate_full;
use dsw_core::{build_lut, project_model, CameraIntrinsics, DswConfig, LutConfig, ObjectModel};

async fn spawn_app() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, dsw_service::app()).await.unwrap();
    });
    format!("http://{}", addr)
}

fn plant_scene(seed: u64) -> dsw_core::dataset::Scene {
    let mut spec = SynthSceneSpec::new(640, 480);
    spec.seed = seed;
    spec.image_id = format!("{:06}", seed);
    spec.plants.push(Plant {
        x: 320,
        y: 240,
        disparity: 40.0,
    });
    spec.plants.push(Plant {
        x: 120,
        y: 200,
        disparity: 25.0,
    });
    synth_scene(&spec).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn health_reports_ok() {
    let base = spawn_app().await;
    let resp: api::HealthResponse = reqwest::get(format!("{}/health", base))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(resp.status, "ok");
    assert!(!resp.version.is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn theory_endpoints_match_closed_forms() {
    let base = spawn_app().await;
    let http = reqwest::Client::new();

    let curves: api::ErrorCurvesResponse = http
        .post(format!("{}/v1/theory/error-curves", base))
        .json(&api::ErrorCurvesRequest {
            theta_grid: vec![0.3, 0.5, 0.7],
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(curves.rows.len(), 3);
    let mid = &curves.rows[1];
    assert!((mid.eps_k - 0.41421356).abs() < 1e-6);
    assert!((mid.eps_delta - 0.17157287).abs() < 1e-6);

    let counts: api::CountsResponse = http
        .post(format!("{}/v1/theory/counts", base))
        .json(&api::CountsRequest {
            theta_grid: vec![0.5],
            image_width: 1242,
            image_height: 375,
            obj_width_min: 10,
            obj_width_max: 100,
            aspect: 3.0,
            width_step: api::WidthStepDto::Additive { step_px: 1 },
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(counts.rows.len(), 1);
    assert_eq!(counts.rows[0].n_hypotheses, 103_797);
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_theta_yields_422_envelope() {
    let base = spawn_app().await;
    let resp = reqwest::Client::new()
        .post(format!("{}/v1/theory/error-curves", base))
        .json(&api::ErrorCurvesRequest {
            theta_grid: vec![1.5],
        })
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 422);
    let body: api::ApiError = resp.json().await.unwrap();
    assert_eq!(body.kind, "InvalidTheta");
    assert!(body.error.contains("1.5"));
}

#[tokio::test(flavor = "multi_thread")]
async fn session_lifecycle_and_proposals_match_in_process() {
    let base = spawn_app().await;
    let http = reqwest::Client::new();

    let created: api::CreateSessionResponse = http
        .post(format!("{}/v1/sessions", base))
        .json(&api::CreateSessionRequest {
            intrinsics: api::IntrinsicsDto::default(),
            model: api::ModelDto::default(),
            lut: api::LutConfigDto::default(),
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(created.lut_entries, 128);

    // LUT over the wire equals direct projection.
    let lut_resp: api::LutResponse = http
        .get(format!("{}/v1/sessions/{}/lut", base, created.session_id))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(lut_resp.entries.len(), 128);
    let intr = CameraIntrinsics::kitti_like();
    let model = ObjectModel::pedestrian();
    for entry in [&lut_resp.entries[0], &lut_resp.entries[77]] {
        let direct = project_model(&intr, &model, entry.disparity).unwrap();
        assert_eq!(entry.width_px, direct.width_px);
        assert_eq!(entry.height_px, direct.height_px);
    }

    // Proposals over the wire equal the in-process run, mask included.
    let scene = plant_scene(7);
    let req = api::ProposalsRequest {
        image: api::DisparityPayload::encode(&scene.disparity),
        config: api::DswConfigDto::default(),
        record_mask: true,
    };
    let over_wire: api::ProposalsResponse = http
        .post(format!(
            "{}/v1/sessions/{}/proposals",
            base, created.session_id
        ))
        .json(&req)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let lut = build_lut(&intr, &model, LutConfig::default()).unwrap();
    let local = generate_full(
        &scene.disparity,
        &scene.intrinsics,
        &lut,
        &DswConfig::default(),
        true,
    )
    .unwrap();
    assert!(!local.proposals.is_empty());
    assert_eq!(over_wire.proposals.len(), local.proposals.len());
    for (wire, here) in over_wire.proposals.iter().zip(&local.proposals) {
        assert_eq!(dsw_core::Proposal::from(wire), *here);
    }
    assert_eq!(over_wire.stats.visited, local.stats.visited);
    assert_eq!(over_wire.stats.emitted, local.stats.emitted);
    let mask = api::decode_mask(over_wire.mask_b64.as_deref().unwrap()).unwrap();
    assert_eq!(mask, local.visited_mask.unwrap());

    // Delete: 204 once, 404 after, proposals on a dead session 404.
    let del = http
        .delete(format!("{}/v1/sessions/{}", base, created.session_id))
        .send()
        .await
        .unwrap();
    assert_eq!(del.status().as_u16(), 204);
    let del_again = http
        .delete(format!("{}/v1/sessions/{}", base, created.session_id))
        .send()
        .await
        .unwrap();
    assert_eq!(del_again.status().as_u16(), 404);
    let gone = http
        .post(format!(
            "{}/v1/sessions/{}/proposals",
            base, created.session_id
        ))
        .json(&req)
        .send()
        .await
        .unwrap();
    assert_eq!(gone.status().as_u16(), 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn proposals_accept_full_resolution_payloads() {
    // A 1242x375 f32 image is ~2.5 MB base64-encoded, past the 2 MiB
    // default body limit HTTP frameworks commonly apply.
    let base = spawn_app().await;
    let http = reqwest::Client::new();

    let created: api::CreateSessionResponse = http
        .post(format!("{}/v1/sessions", base))
        .json(&api::CreateSessionRequest {
            intrinsics: api::IntrinsicsDto::default(),
            model: api::ModelDto::default(),
            lut: api::LutConfigDto::default(),
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();

    let mut spec = SynthSceneSpec::new(1242, 375);
    spec.plants.push(Plant {
        x: 620,
        y: 280,
        disparity: 40.0,
    });
    let scene = synth_scene(&spec).unwrap();
    let resp = http
        .post(format!(
            "{}/v1/sessions/{}/proposals",
            base, created.session_id
        ))
        .json(&api::ProposalsRequest {
            image: api::DisparityPayload::encode(&scene.disparity),
            config: api::DswConfigDto::default(),
            record_mask: false,
        })
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 200, "{:?}", resp.text().await);
    let body: api::ProposalsResponse = resp.json().await.unwrap();
    assert!(!body.proposals.is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn proposals_reject_invalid_config_and_bad_session() {
    let base = spawn_app().await;
    let http = reqwest::Client::new();
    let created: api::CreateSessionResponse = http
        .post(format!("{}/v1/sessions", base))
        .json(&api::CreateSessionRequest {
            intrinsics: api::IntrinsicsDto::default(),
            model: api::ModelDto::default(),
            lut: api::LutConfigDto::default(),
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();

    let scene = plant_scene(3);
    let mut req = api::ProposalsRequest {
        image: api::DisparityPayload::encode(&scene.disparity),
        config: api::DswConfigDto::default(),
        record_mask: false,
    };
    req.config.theta_iou = 2.0;
    let resp = http
        .post(format!(
            "{}/v1/sessions/{}/proposals",
            base, created.session_id
        ))
        .json(&req)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 422);
    let body: api::ApiError = resp.json().await.unwrap();
    assert_eq!(body.kind, "InvalidTheta");

    let bogus = http
        .get(format!("{}/v1/sessions/not-a-uuid/lut", base))
        .send()
        .await
        .unwrap();
    assert_eq!(bogus.status().as_u16(), 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn evaluate_runs_a_scene_directory() {
    let base = spawn_app().await;
    let http = reqwest::Client::new();
    let dir = tempfile::tempdir().unwrap();
    let mut scenes = Vec::new();
    for seed in 0..3u64 {
        let scene = plant_scene(seed);
        write_scene(&scene, dir.path(), DispFormat::Pfm).unwrap();
        scenes.push(scene);
    }

    let resp: api::EvaluateResponse = http
        .post(format!("{}/v1/evaluate", base))
        .json(&api::EvaluateRequest {
            scenes_dir: dir.path().to_str().unwrap().to_string(),
            class_filter: "Pedestrian".into(),
            limit: None,
            generator: api::GeneratorDto::default(),
            theta_grid: vec![0.3, 0.5, 0.7],
            parallel: true,
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(resp.scenes_evaluated, 3);
    assert_eq!(resp.total_gt, 6);
    assert!(resp.failures.is_empty());
    let at = |theta: f64| {
        resp.recall_curve
            .iter()
            .find(|p| (p.theta - theta).abs() < 1e-9)
            .and_then(|p| p.recall)
            .unwrap()
    };
    assert_eq!(at(0.5), 1.0);

    // Same numbers as the library run.
    let local = evaluate(
        &scenes,
        &DswGenerator::default(),
        &EvalConfig {
            theta_grid: vec![0.3, 0.5, 0.7],
            parallel: false,
        },
    )
    .unwrap();
    assert_eq!(resp.ppi, local.ppi);
    assert_eq!(resp.outcomes.len(), local.outcomes.len());
    for (wire, here) in resp.outcomes.iter().zip(&local.outcomes) {
        assert_eq!(wire.image_id, here.image_id);
        assert_eq!(wire.best_iou, here.best_iou);
    }

    // Missing directory -> 404 envelope.
    let missing = http
        .post(format!("{}/v1/evaluate", base))
        .json(&api::EvaluateRequest {
            scenes_dir: dir.path().join("nope").to_str().unwrap().to_string(),
            class_filter: "Pedestrian".into(),
            limit: None,
            generator: api::GeneratorDto::default(),
            theta_grid: vec![],
            parallel: false,
        })
        .send()
        .await
        .unwrap();
    assert_eq!(missing.status().as_u16(), 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn synth_writes_scene_and_reports_ground_truth() {
    let base = spawn_app().await;
    let http = reqwest::Client::new();
    let dir = tempfile::tempdir().unwrap();

    let resp: api::SynthResponse = http
        .post(format!("{}/v1/synth", base))
        .json(&api::SynthRequest {
            spec: api::SynthSpecDto {
                width: 640,
                height: 480,
                plants: vec![api::PlantDto {
                    x: 320,
                    y: 240,
                    disparity: 40.0,
                }],
                model: api::ModelDto::default(),
                intrinsics: api::IntrinsicsDto::default(),
                background: api::BackgroundDto::Invalid,
                noise_stddev: 0.0,
                seed: 5,
                image_id: "000042".into(),
                class_name: "Pedestrian".into(),
            },
            out_dir: Some(dir.path().to_str().unwrap().to_string()),
            format: api::DispFormatDto::Pfm,
        })
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(resp.image_id, "000042");
    assert_eq!(resp.ground_truth.len(), 1);
    assert_eq!(resp.ground_truth[0].occlusion, "fully_visible");
    assert!(dir.path().join("disp/000042.pfm").is_file());
    assert!(dir.path().join("calib/000042.txt").is_file());
    assert!(dir.path().join("label_2/000042.txt").is_file());

    // Out-of-bounds plant -> 422 with the domain kind.
    let bad = http
        .post(format!("{}/v1/synth", base))
        .json(&api::SynthRequest {
            spec: api::SynthSpecDto {
                width: 100,
                height: 100,
                plants: vec![api::PlantDto {
                    x: 99,
                    y: 99,
                    disparity: 60.0,
                }],
                model: api::ModelDto::default(),
                intrinsics: api::IntrinsicsDto::default(),
                background: api::BackgroundDto::Invalid,
                noise_stddev: 0.0,
                seed: 0,
                image_id: "000000".into(),
                class_name: "Pedestrian".into(),
            },
            out_dir: None,
            format: api::DispFormatDto::Pfm,
        })
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status().as_u16(), 422);
    let body: api::ApiError = bad.json().await.unwrap();
    assert_eq!(body.kind, "PlantOutOfBounds");
}
