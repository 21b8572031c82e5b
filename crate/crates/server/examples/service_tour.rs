// Drives the /v1 API in process: upload a CSV, run PC as a job, poll it, and
// ask a what-if question.

use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use causalis_server::service::{router, start, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> Value {
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    serde_json::from_slice(&bytes).expect("JSON response")
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .expect("request")
}

fn csv() -> String {
    let mut s = String::from("x,y,z\n");
    for i in 0..400 {
        let x = ((i * 37) % 101) as f64 / 50.0 - 1.0;
        let y = 0.9 * x + ((i * 53) % 97) as f64 / 200.0;
        let z = 0.8 * y + ((i * 71) % 89) as f64 / 200.0;
        s.push_str(&format!("{x},{y},{z}\n"));
    }
    s
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = std::env::temp_dir().join(format!("causalis-tour-{}", std::process::id()));
    let config = ServiceConfig {
        store_dir: store.clone(),
        static_dir: None,
        workers: 1,
        job_slots: 1,
    };
    let app = router(start(&config)?, None);

    let upload = call(&app, Request::post("/v1/datasets").body(Body::from(csv()))?).await;
    println!("uploaded: {upload}");
    let dataset_id = upload["dataset_id"].clone();

    let submitted = call(&app, post("/v1/discover", json!({ "dataset_id": dataset_id, "algorithm": "pc" }))).await;
    let job_id = submitted["job_id"].as_str().ok_or("no job id")?.to_owned();
    let job = loop {
        let job = call(&app, Request::get(format!("/v1/jobs/{job_id}")).body(Body::empty())?).await;
        if job["status"] == "done" || job["status"] == "failed" {
            break job;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    println!("discover job {}: {}", job["status"], job["result"]["graph"]);

    let graph = json!({
        "kind": "tabular",
        "variables": ["x", "y", "z"],
        "edges": [
            { "from": "x", "to": "y", "lag": 0, "directed": true },
            { "from": "y", "to": "z", "lag": 0, "directed": true }
        ]
    });
    let what_if = call(
        &app,
        post(
            "/v1/infer",
            json!({
                "dataset_id": dataset_id,
                "graph": graph,
                "target": "z",
                "treatments": [{ "var_name": "x", "treatment_value": 1.0, "control_value": 0.0 }]
            }),
        ),
    )
    .await;
    println!("ATE of x on z: {}", what_if["ate"]);

    std::fs::remove_dir_all(store)?;
    Ok(())
}
