#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sciqa::cli::{self, IngestOptions};
use sciqa::http::{router, AppState};
use sciqa::{ServiceConfig, Snapshot};
use sciqa_core::corpus::SplitConfig;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn ingest_toy(index_dir: &Path) -> cli::IngestSummary {
    cli::ingest(&IngestOptions {
        csv: data("toy_corpus.csv"),
        index_dir: index_dir.to_path_buf(),
        force: true,
        published_from: None,
        published_to: None,
        split: SplitConfig::default(),
        source: "toy".into(),
    })
    .expect("toy corpus ingests")
}

pub fn config(index_dir: &Path) -> ServiceConfig {
    ServiceConfig {
        index_dir: index_dir.to_path_buf(),
        ..Default::default()
    }
}

/// Serves `snapshot` on an ephemeral port from a background runtime.
pub fn serve(config: &ServiceConfig, snapshot: Snapshot) -> String {
    let state = Arc::new(AppState::new(config, snapshot).expect("state builds"));
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(state)).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

/// POSTs a JSON body and returns (status, raw body).
pub fn post(base: &str, path: &str, body: &str) -> (u16, String) {
    let mut resp = agent()
        .post(&format!("{base}{path}"))
        .header("content-type", "application/json")
        .send(body)
        .expect("request completes");
    (
        resp.status().as_u16(),
        resp.body_mut().read_to_string().unwrap(),
    )
}

pub fn get(base: &str, path: &str) -> (u16, String) {
    let mut resp = agent()
        .get(&format!("{base}{path}"))
        .call()
        .expect("request completes");
    (
        resp.status().as_u16(),
        resp.body_mut().read_to_string().unwrap(),
    )
}
