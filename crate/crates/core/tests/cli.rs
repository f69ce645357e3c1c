mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use embedflow::cli::{exit_code, Cli, ComputeArgs, KModeArg, OUTPUT_FILES};
use embedflow::metrics::KMode;
use embedflow::service::{router, AppState};
use http_body_util::BodyExt;
use tower::ServiceExt;

use clap::Parser;
use common::write_small;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_embedflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn compute(manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "compute",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn validate_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    let ok = run(&["validate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    let lfeb = dir.path().join("small.lfeb");
    let bytes = std::fs::read(&lfeb).unwrap();
    std::fs::write(&lfeb, &bytes[..bytes.len() - 3]).unwrap();
    let bad = run(&["validate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FORMAT_ERROR"));

    std::fs::write(&lfeb, &bytes).unwrap();
    std::fs::remove_file(dir.path().join("small.jsonl")).unwrap();
    let missing = run(&["validate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stdout).contains("small.jsonl"));
}

#[test]
fn validate_lists_every_broken_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    std::fs::write(dir.path().join("small.lfeb"), b"LFEB").unwrap();
    std::fs::write(dir.path().join("small.jsonl"), b"{not json}\n").unwrap();
    let out = run(&["validate", "--manifest", manifest.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("violation:")).count(), 2, "{stdout}");
}

#[test]
fn count_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    let jsonl = dir.path().join("small.jsonl");
    let text = std::fs::read_to_string(&jsonl).unwrap();
    let fewer: String = text.lines().take(29).map(|l| format!("{l}\n")).collect();
    std::fs::write(&jsonl, fewer).unwrap();
    let out = run(&["validate", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("COUNT_MISMATCH"));
}

#[test]
fn compute_writes_four_identical_files_twice() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let flags = ["--filter", r#"token=="cell""#, "--projection", "pca"];
    assert_eq!(compute(&manifest, &a, &flags).status.code(), Some(0));
    assert_eq!(compute(&manifest, &b, &flags).status.code(), Some(0));
    for name in OUTPUT_FILES {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn compute_precondition_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    let out = dir.path().join("out");
    // Three points carry "cells"; two of them are NOUN or VERB.
    let two = compute(&manifest, &out, &["--filter", r#"token == "cells" && (POS == "NOUN" || POS == "VERB")"#]);
    assert_eq!(two.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&two.stderr).contains("TOO_FEW_POINTS"));
    let k = compute(&manifest, &out, &["--k", "40"]);
    assert_eq!(k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&k.stderr).contains("K_OUT_OF_RANGE"));
    let missing = compute(&dir.path().join("none.manifest.json"), &out, &[]);
    assert_eq!(missing.status.code(), Some(3));
    let usage = run(&["compute", "--bogus"]);
    assert_eq!(usage.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn flags_map_onto_the_session_config() {
    let cli = Cli::try_parse_from([
        "embedflow", "compute", "--manifest", "m.json", "--out", "o", "--filter", "POS == NOUN", "--projection", "pca",
        "--projection", "external:umap", "--layers", "1-3", "--k", "7", "--width", "300", "--height", "120", "--gap",
        "10", "--padding", "4", "--color-by", "fpr",
    ])
    .unwrap();
    let embedflow::cli::Command::Compute(args) = cli.command else {
        panic!("expected compute");
    };
    let config = args.session_config("demo").unwrap();
    assert_eq!(config.dataset, "demo");
    assert_eq!(config.projections.len(), 2);
    assert_eq!(config.layers, Some([1, 3]));
    assert_eq!(config.metrics.k_mode, KMode::Fixed(7));
    assert_eq!((config.layout.width, config.layout.height, config.layout.gap), (300.0, 120.0, 10.0));
    assert_eq!(config.layout.padding, Some(4.0));
    assert_eq!(serde_json::to_value(config.color_by).unwrap(), "FPR");

    let conflicting = ComputeArgs { k_mode: Some(KModeArg::Cluster), ..args.clone() };
    assert_eq!(conflicting.session_config("demo").unwrap_err().code(), "INVALID_CONFIG");
    let fixed_without_k = ComputeArgs { k_mode: Some(KModeArg::Fixed), k: None, ..args };
    let err = fixed_without_k.session_config("demo").unwrap_err();
    assert_eq!(exit_code(&err), 1);
}

async fn get(app: axum::Router, uri: &str) -> Vec<u8> {
    let resp = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK, "{uri}");
    resp.into_body().collect().await.unwrap().to_bytes().to_vec()
}

#[tokio::test]
async fn compute_output_equals_service_responses() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_small(dir.path());
    let out = dir.path().join("golden");
    let flags = [
        "--filter", r#"POS == "NOUN" || POS == "VERB""#, "--projection", "pca", "--projection", "external:jitter",
        "--layers", "0-2", "--k", "4", "--color-by", "PPS",
    ];
    assert_eq!(compute(&manifest, &out, &flags).status.code(), Some(0));

    let state = Arc::new(AppState::with_default_cap(dir.path()).unwrap());
    let config = serde_json::json!({
        "dataset": "small",
        "token_filter": r#"POS == "NOUN" || POS == "VERB""#,
        "projections": [{"method": "pca"}, {"method": "external:jitter"}],
        "layers": [0, 2],
        "metrics": {"k_mode": {"mode": "fixed", "k": 4}},
        "color_by": "PPS",
    });
    let (session, _) = state.create_session(serde_json::from_value(config).unwrap()).await.unwrap();
    for (name, endpoint) in OUTPUT_FILES.iter().zip(["layout", "metrics", "matrices", "summaries"]) {
        let served = get(router(state.clone()), &format!("/sessions/{}/{endpoint}", session.id)).await;
        let written = std::fs::read(out.join(name)).unwrap();
        assert!(served == written, "{name} differs from GET /{endpoint}");
    }
}

fn http_get(port: u16, path: &str) -> String {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    response
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn serve_empty_directory_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let mut child = bin()
        .args(["serve", "--data-dir", dir.path().to_str().unwrap(), "--port", &port.to_string()])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    while TcpStream::connect(("127.0.0.1", port)).is_err() {
        assert!(Instant::now() < deadline, "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    }
    let response = http_get(port, "/datasets");
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(r#"{"v":1,"datasets":[]}"#), "{response}");
}

#[test]
fn serve_fails_on_occupied_port() {
    let dir = tempfile::tempdir().unwrap();
    let holder = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port().to_string();
    let out = run(&["serve", "--data-dir", dir.path().to_str().unwrap(), "--port", &port]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("already in use"));
}

#[test]
fn serve_fails_on_unreadable_directory() {
    let out = run(&["serve", "--data-dir", "/nonexistent/embedflow", "--port", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("IO_ERROR"));
}
