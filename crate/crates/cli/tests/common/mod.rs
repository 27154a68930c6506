#![allow(dead_code)] // shared between test targets that use different subsets

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sdpp")
}

/// Minimal chat-completion server answering every POST with `content`.
/// Returns its base URL.
pub fn spawn_completion_server(content: String) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string();
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut buf = vec![0u8; 65536];
            let mut total = 0;
            let header_end = loop {
                let n = stream.read(&mut buf[total..]).unwrap_or(0);
                if n == 0 {
                    break None;
                }
                total += n;
                if let Some(pos) = buf[..total].windows(4).position(|w| w == b"\r\n\r\n") {
                    break Some(pos + 4);
                }
            };
            let Some(header_end) = header_end else { continue };
            let header = String::from_utf8_lossy(&buf[..header_end]).to_string();
            let content_length = header
                .lines()
                .find_map(|l| {
                    let (k, v) = l.split_once(':')?;
                    k.eq_ignore_ascii_case("content-length")
                        .then(|| v.trim().parse::<usize>().ok())?
                })
                .unwrap_or(0);
            while total < header_end + content_length {
                let n = stream.read(&mut buf[total..]).unwrap_or(0);
                if n == 0 {
                    break;
                }
                total += n;
            }
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    format!("http://{addr}")
}

pub fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
        .join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn run_sdpp(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("failed to spawn sdpp")
}

pub fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "sdpp failed ({:?}):\n{}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Blanks the generation timestamp so byte comparisons exclude it.
pub fn normalize_timestamps(json: &str) -> String {
    let mut value: serde_json::Value = serde_json::from_str(json).expect("valid JSON");
    if let Some(ts) = value.pointer_mut("/generation_metadata/generated_at") {
        *ts = serde_json::Value::String(String::new());
    }
    let mut out = serde_json::to_string_pretty(&value).unwrap();
    out.push('\n');
    out
}

/// Standard deterministic run of the bundled fixture into `out_dir`.
pub fn run_fixture_pipeline(out_dir: &std::path::Path, variant: &str) -> Output {
    run_sdpp(&[
        "run",
        "--backend",
        "deterministic",
        "--variant",
        variant,
        "--rules",
        asset("manual_rules.json").to_str().unwrap(),
        asset("mini_map.osm").to_str().unwrap(),
        out_dir.to_str().unwrap(),
    ])
}
