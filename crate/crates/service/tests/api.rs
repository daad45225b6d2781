//! Endpoint tests driving the router in-process.

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use risim_core::geometry::{recommend_positions, Environment, Point3, WallPlacement};
use risim_service::api::*;
use risim_service::{router, AppState, Limits};
use serde_json::{json, Value};

fn app() -> Router {
    router(AppState::default())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    use tower::ServiceExt;
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn indoor_side() -> Value {
    json!({
        "environment": "inh",
        "frequency_ghz": 28,
        "wall": "side",
        "tx": [0.0, 25.0, 2.0],
        "rx": [38.0, 48.0, 1.0],
        "ris": [40.0, 50.0, 2.0],
        "elements": 64,
    })
}

fn error_code(bytes: &[u8]) -> String {
    let e: ErrorResponse = serde_json::from_slice(bytes).unwrap();
    assert_eq!(e.schema_version, SCHEMA_VERSION);
    e.error.code
}

#[tokio::test]
async fn validate_accepts_indoor_example() {
    let (status, body) = call(&app(), "POST", "/validate", Some(indoor_side())).await;
    assert_eq!(status, StatusCode::OK);
    let v: ValidateResponse = serde_json::from_slice(&body).unwrap();
    assert!(v.valid);
    assert!(v.violations.is_empty());
    assert_eq!(v.schema_version, SCHEMA_VERSION);
}

#[tokio::test]
async fn validate_lists_violations() {
    let mut s = indoor_side();
    s["rx"] = json!([38.0, 48.0, 2.5]);
    let (status, body) = call(&app(), "POST", "/validate", Some(s)).await;
    assert_eq!(status, StatusCode::OK);
    let v: ValidateResponse = serde_json::from_slice(&body).unwrap();
    assert!(!v.valid);
    assert_eq!(v.violations[0].code.as_str(), "RX_TOO_HIGH");
}

#[tokio::test]
async fn malformed_bodies_get_structured_errors() {
    let app = app();
    let (status, body) = call(&app, "POST", "/validate", Some(json!({"environment": "mars"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "BAD_REQUEST");

    let (status, body) = call(&app, "GET", "/nowhere", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "NOT_FOUND");

    let (status, body) = call(&app, "GET", "/recommend?env=inh", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "BAD_REQUEST");
}

#[tokio::test]
async fn recommend_returns_example_positions() {
    let (status, body) = call(&app(), "GET", "/recommend?env=inh&wall=side", None).await;
    assert_eq!(status, StatusCode::OK);
    let r: RecommendResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(
        r.scenario,
        recommend_positions(Environment::InH, WallPlacement::SideWall)
    );
    assert_eq!(r.scenario.tx, Point3::new(0.0, 25.0, 2.0));

    let (_, body) = call(&app(), "GET", "/recommend?env=umi&wall=opposite&freq=73", None).await;
    let r: RecommendResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(r.scenario.band.ghz(), 73);
}

#[tokio::test]
async fn simulate_is_repeatable_and_echoes_config() {
    let app = app();
    let req = json!({"scenario": indoor_side(), "realizations": 200, "seed": 11, "pt_dbw": [-10.0, 0.0]});
    let (status, a) = call(&app, "POST", "/simulate", Some(req.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = call(&app, "POST", "/simulate", Some(req)).await;
    assert_eq!(a, b);

    let r: SimResponse = serde_json::from_slice(&a).unwrap();
    assert_eq!(r.config.seed, 11);
    assert_eq!(r.config.realizations, 200);
    assert_eq!(r.config.noise_dbm, -100.0);
    assert_eq!(r.reports.len(), 3 * 2);
    assert!(r.violations.is_empty());
    assert!(r.reports.iter().all(|rep| rep.count == 200));
}

#[tokio::test]
async fn simulate_rejects_bad_requests() {
    let app = app();
    let (status, body) = call(
        &app,
        "POST",
        "/simulate",
        Some(json!({"scenario": indoor_side(), "realizations": 10_001})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "LIMIT_EXCEEDED");

    let mut s = indoor_side();
    s["elements"] = json!(50);
    let (status, body) = call(&app, "POST", "/simulate", Some(json!({"scenario": s}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let e: ErrorResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(e.error.code, "INVALID_SCENARIO");
    assert_eq!(e.error.violations[0].code.as_str(), "NON_SQUARE_ELEMENTS");

    let (status, body) = call(
        &app,
        "POST",
        "/simulate",
        Some(json!({"scenario": indoor_side(), "realizations": 0})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "INVALID_PARAMETER");
}

#[tokio::test]
async fn simulate_histogram_counts_every_realization() {
    let req = json!({
        "scenario": indoor_side(),
        "realizations": 300,
        "rules": ["optimal"],
        "histogram": {"bins": 12, "pt_dbw": 0.0},
    });
    let (status, body) = call(&app(), "POST", "/simulate", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    let r: SimResponse = serde_json::from_slice(&body).unwrap();
    let h = &r.histograms[0];
    assert_eq!(h.counts.len(), 12);
    assert_eq!(h.counts.iter().sum::<u64>() + h.zero_gain, 300);
    assert!(h.min_db <= h.max_db);
}

async fn wait_for_job(app: &Router, id: uuid::Uuid) -> JobReport {
    for _ in 0..600 {
        let (status, body) = call(app, "GET", &format!("/heatmap/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let job: JobReport = serde_json::from_slice(&body).unwrap();
        if job.status != JobStatus::Running {
            return job;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("heatmap job did not finish");
}

#[tokio::test]
async fn heatmap_matches_independent_simulations() {
    let app = app();
    let grid = json!({"xs": [30.0, 34.0], "ys": [40.0, 44.0]});
    let req = json!({"scenario": indoor_side(), "grid": grid, "realizations": 150, "seed": 5, "pt_dbw": -5.0});
    let (status, body) = call(&app, "POST", "/heatmap", Some(req)).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let created: JobCreated = serde_json::from_slice(&body).unwrap();
    assert_eq!(created.total, 4);

    let job = wait_for_job(&app, created.job_id).await;
    assert_eq!(job.status, JobStatus::Done);
    assert_eq!(job.done, 4);
    let map = job.result.unwrap();
    assert_eq!(map.cells.len(), 4);

    for cell in &map.cells {
        let mut s = indoor_side();
        s["rx"] = json!([cell.rx.x, cell.rx.y, cell.rx.z]);
        let req = json!({
            "scenario": s, "realizations": 150, "seed": 5, "rules": ["optimal"], "pt_dbw": [-5.0],
        });
        let (_, body) = call(&app, "POST", "/simulate", Some(req)).await;
        let r: SimResponse = serde_json::from_slice(&body).unwrap();
        assert_eq!(r.reports[0], cell.report);
    }
}

#[tokio::test]
async fn heatmap_limits_and_unknown_jobs() {
    let app = app();
    let xs: Vec<f64> = (0..65).map(|i| 1.0 + i as f64 * 0.5).collect();
    let req = json!({"scenario": indoor_side(), "grid": {"xs": xs, "ys": [40.0]}});
    let (status, body) = call(&app, "POST", "/heatmap", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "LIMIT_EXCEEDED");

    // a cell above the Rx height limit is rejected before any work starts
    let req = json!({"scenario": indoor_side(), "grid": {"xs": [30.0], "ys": [40.0], "z": 2.5}});
    let (status, body) = call(&app, "POST", "/heatmap", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "INVALID_SCENARIO");

    let (status, body) = call(&app, "GET", &format!("/heatmap/{}", uuid::Uuid::new_v4()), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "JOB_NOT_FOUND");
    let (status, _) = call(&app, "GET", "/heatmap/not-a-uuid", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn finished_jobs_expire() {
    let app = router(AppState::new(Limits {
        job_ttl: Duration::ZERO,
        ..Limits::default()
    }));
    let req = json!({"scenario": indoor_side(), "grid": {"xs": [30.0], "ys": [40.0]}, "realizations": 20});
    let (_, body) = call(&app, "POST", "/heatmap", Some(req)).await;
    let created: JobCreated = serde_json::from_slice(&body).unwrap();
    for _ in 0..600 {
        let (status, _) = call(&app, "GET", &format!("/heatmap/{}", created.job_id), None).await;
        if status == StatusCode::NOT_FOUND {
            return;
        }
        assert_eq!(status, StatusCode::OK);
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("finished job never expired");
}
