use crate::config::RunConfig;
use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

/// What a subcommand produced: files to write, a summary and an exit code.
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub summary: String,
    pub code: u8,
}

/// SHA-256 over the canonical config JSON followed by the raw input file.
/// The output directory is not an input and is left out.
pub fn input_hash(cfg: &RunConfig, input: Option<&[u8]>) -> String {
    let mut h = Sha256::new();
    let cfg = RunConfig { output: Default::default(), ..cfg.clone() };
    h.update(serde_json::to_vec(&cfg).expect("config serializes"));
    if let Some(bytes) = input {
        h.update(bytes);
    }
    format!("{:x}", h.finalize())
}

/// Standard wrapper around every JSON payload.
pub fn envelope(command: &str, cfg: &RunConfig, hash: &str, body: Value) -> String {
    let mut v = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "input_hash": hash,
    });
    if let (Value::Object(out), Value::Object(extra)) = (&mut v, body) {
        out.extend(extra);
    }
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn write_all(dir: &Path, files: &[(String, String)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
