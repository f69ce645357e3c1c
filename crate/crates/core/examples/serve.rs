//! Start the HTTP service on a generated corpus, create a session and read it
//! back through the API, then shut down.
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use embedflow::service::{bind, serve, AppState};
use embedflow::synthetic::{generate, SyntheticConfig};

async fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> anyhow::Result<String> {
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let response = tokio::task::spawn_blocking(move || -> std::io::Result<String> {
        let mut stream = TcpStream::connect(addr)?;
        stream.write_all(req.as_bytes())?;
        let mut response = String::new();
        stream.read_to_string(&mut response)?;
        Ok(response)
    })
    .await??;
    Ok(response)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile_dir()?;
    generate(&SyntheticConfig::default())?.dataset.save(&dir, "synthetic")?;
    let state = Arc::new(AppState::with_default_cap(&dir)?);
    let listener = bind("127.0.0.1:0".parse()?).await?;
    let addr = listener.local_addr()?;
    let server = tokio::spawn(serve(listener, state));
    println!("listening on http://{addr}");

    println!("{}", request(addr, "GET", "/datasets", "").await?.lines().last().unwrap_or(""));
    let config = r#"{"dataset":"synthetic","token_filter":"token == \"cell\"","projections":[{"method":"pca"}],"layers":[0,1]}"#;
    let created = request(addr, "POST", "/sessions", config).await?;
    let body = created.lines().last().unwrap_or("");
    println!("{body}");
    let id = serde_json::from_str::<serde_json::Value>(body)?["id"].as_str().unwrap_or_default().to_string();
    let reading = request(addr, "GET", &format!("/sessions/{id}/closereading?layer=1"), "").await?;
    let reading: serde_json::Value = serde_json::from_str(reading.lines().last().unwrap_or("{}"))?;
    for c in reading["clusters"].as_array().into_iter().flatten() {
        println!("cluster {} has {} members", c["cluster_id"], c["members"].as_array().map_or(0, Vec::len));
    }
    server.abort();
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("embedflow-serve-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
