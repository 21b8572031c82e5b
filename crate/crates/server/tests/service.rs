use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use causalis_server::service::{router, start, AppState, ServiceConfig, API_VERSION};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn config(store: &Path, static_dir: Option<&Path>) -> ServiceConfig {
    ServiceConfig {
        store_dir: store.to_path_buf(),
        static_dir: static_dir.map(Path::to_path_buf),
        workers: 1,
        job_slots: 1,
    }
}

fn app(store: &Path) -> (Arc<AppState>, Router) {
    let state = start(&config(store, None)).unwrap();
    (state.clone(), router(state, None))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    send(app, req).await
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn upload(app: &Router, csv: &str) -> (StatusCode, Value) {
    let req = Request::post("/v1/datasets").header("content-type", "text/csv").body(Body::from(csv.to_owned())).unwrap();
    send(app, req).await
}

async fn wait_job(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (status, job) = call(app, Method::GET, &format!("/v1/jobs/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if job["status"] == "done" || job["status"] == "failed" {
            return job;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {id} did not finish");
}

fn chain_csv(n: usize) -> String {
    // deterministic chain x -> y -> z with pseudo-random noise
    let mut s = String::from("x,y,z\n");
    let mut state = 12345u64;
    let mut noise = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for _ in 0..n {
        let x = noise();
        let y = 0.9 * x + 0.3 * noise();
        let z = 0.9 * y + 0.3 * noise();
        s.push_str(&format!("{x},{y},{z}\n"));
    }
    s
}

#[tokio::test]
async fn upload_reports_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let (status, body) = upload(&app, "a,b\n1,2\n3,\n5,6\n").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["n_samples"], 3);
    assert_eq!(body["var_names"], json!(["a", "b"]));
    assert_eq!(body["missing_counts"]["b"], 1);
    assert_eq!(body["api_version"], API_VERSION);

    let id = body["dataset_id"].as_str().unwrap();
    let (status, summary) = call(&app, Method::GET, &format!("/v1/datasets/{id}/summary"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["columns"][0]["mean"], 3.0);

    let (status, body) = upload(&app, "a,b\n1,x\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn multipart_upload() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let boundary = "XBOUNDARYX";
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"d.csv\"\r\nContent-Type: text/csv\r\n\r\na,b\n1,2\n3,4\n\r\n--{boundary}--\r\n"
    );
    let req = Request::post("/v1/datasets")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let (status, body) = send(&app, req).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["n_samples"], 2);
}

#[tokio::test]
async fn contradictory_prior_knowledge_is_422_with_list() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let (_, up) = upload(&app, &chain_csv(50)).await;
    let request = json!({
        "dataset_id": up["dataset_id"],
        "algorithm": "pc",
        "prior_knowledge": {
            "existing_links": {"y": ["x"]},
            "forbidden_links": {"y": ["x"]}
        }
    });
    let (status, body) = call(&app, Method::POST, "/v1/discover", Some(request)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let list = body["contradictions"].as_array().unwrap();
    assert!(!list.is_empty());
    assert!(list[0]["first"].is_string() && list[0]["second"].is_string());
    assert_eq!(body["api_version"], API_VERSION);
}

#[tokio::test]
async fn unknown_resources_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    for uri in ["/v1/jobs/deadbeef", "/v1/datasets/abc123/summary", "/v1/nope"] {
        let (status, body) = call(&app, Method::GET, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["api_version"], API_VERSION, "{uri}");
    }
    let (status, _) = call(&app, Method::DELETE, "/v1/jobs/deadbeef", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_parameters_are_rejected_before_queueing() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let (_, up) = upload(&app, &chain_csv(50)).await;
    let cases = [
        json!({"dataset_id": up["dataset_id"], "algorithm": "magic"}),
        json!({"dataset_id": up["dataset_id"], "algorithm": "lingam", "params": {"ci_test": "pearson"}}),
        json!({"dataset_id": up["dataset_id"], "algorithm": "pc", "params": {"bogus": 1}}),
    ];
    for case in cases {
        let (status, body) = call(&app, Method::POST, "/v1/discover", Some(case.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{case} -> {body}");
    }
    let (_, jobs) = call(&app, Method::GET, "/v1/jobs", None).await;
    assert_eq!(jobs["jobs"].as_array().unwrap().len(), 0);
}

#[tokio::test]
async fn discover_job_runs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let (_, up) = upload(&app, &chain_csv(500)).await;
    let request = json!({"dataset_id": up["dataset_id"], "algorithm": "pc", "params": {"pvalue_threshold": 0.01}});
    let mut results = Vec::new();
    for _ in 0..2 {
        let (status, body) = call(&app, Method::POST, "/v1/discover", Some(request.clone())).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let job = wait_job(&app, body["job_id"].as_str().unwrap()).await;
        assert_eq!(job["status"], "done", "{job}");
        assert!(job["wall_time"].is_number());
        results.push(job["result"].clone());
    }
    assert_eq!(results[0], results[1]);
    let edges = results[0]["graph"]["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 2, "{}", results[0]);
}

#[tokio::test]
async fn infer_with_equal_arms_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let (_, up) = upload(&app, &chain_csv(300)).await;
    let graph = json!({
        "kind": "tabular",
        "variables": ["x", "y", "z"],
        "edges": [
            {"from": "x", "to": "y", "lag": 0, "directed": true},
            {"from": "y", "to": "z", "lag": 0, "directed": true}
        ]
    });
    let request = json!({
        "dataset_id": up["dataset_id"],
        "graph": graph,
        "target": "z",
        "treatments": [{"var_name": "x", "treatment_value": 1.0, "control_value": 1.0}]
    });
    let (status, body) = call(&app, Method::POST, "/v1/infer", Some(request)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["ate"], 0.0);
}

#[tokio::test]
async fn jobs_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let (_, app) = app(dir.path());
        let (_, up) = upload(&app, &chain_csv(200)).await;
        let request = json!({"dataset_id": up["dataset_id"], "algorithm": "pc"});
        let (_, body) = call(&app, Method::POST, "/v1/discover", Some(request)).await;
        let id = body["job_id"].as_str().unwrap().to_owned();
        assert_eq!(wait_job(&app, &id).await["status"], "done");
        id
    };
    let (_, app) = app(dir.path());
    let (status, job) = call(&app, Method::GET, &format!("/v1/jobs/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(job["status"], "done");
    assert!(job["result"]["graph"].is_object());

    let (status, _) = call(&app, Method::DELETE, &format!("/v1/jobs/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, Method::GET, &format!("/v1/jobs/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_client_is_served_with_index_fallback() {
    let store = tempfile::tempdir().unwrap();
    let web = tempfile::tempdir().unwrap();
    std::fs::write(web.path().join("index.html"), "<html>client</html>").unwrap();
    std::fs::write(web.path().join("app.js"), "console.log(1)").unwrap();
    let state = start(&config(store.path(), Some(web.path()))).unwrap();
    let app = router(state, Some(web.path().to_path_buf()));
    for (uri, expect) in [("/", "<html>client</html>"), ("/app.js", "console.log(1)"), ("/graph/view", "<html>client</html>")] {
        let resp = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK, "{uri}");
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        assert_eq!(&bytes[..], expect.as_bytes(), "{uri}");
    }
    let (status, body) = call(&app, Method::GET, "/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["api_version"], API_VERSION);
}

#[tokio::test]
async fn benchmark_job_reports_points() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path());
    let request = json!({"config": {
        "kind": "continuous", "axis": "samples", "values": [200], "algorithms": ["pc"], "seeds": 2
    }});
    let (status, body) = call(&app, Method::POST, "/v1/benchmark", Some(request)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let job = wait_job(&app, body["job_id"].as_str().unwrap()).await;
    assert_eq!(job["status"], "done", "{job}");
    assert_eq!(job["result"]["points"].as_array().unwrap().len(), 1);
}
