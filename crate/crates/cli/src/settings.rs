//! Layered configuration: built-in defaults, then a JSON config file, then
//! command-line flags (environment variables count as flags).

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

fn as_object(v: Value, what: &str) -> Result<Map<String, Value>> {
    match v {
        Value::Object(map) => Ok(map),
        _ => bail!("{what} must be a JSON object"),
    }
}

/// Merge defaults of `S`, the optional config file, and the flags that were
/// actually given. Config keys unknown to `S` are rejected.
pub fn merge<A, S>(flags: &A, config: Option<&Path>) -> Result<S>
where
    A: Serialize,
    S: Serialize + DeserializeOwned + Default,
{
    let mut merged = as_object(serde_json::to_value(S::default())?, "defaults")?;
    if let Some(path) = config {
        let file = File::open(path).with_context(|| format!("opening config {}", path.display()))?;
        let value: Value = serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("parsing config {}", path.display()))?;
        for (k, v) in as_object(value, "config file")? {
            if !merged.contains_key(&k) {
                bail!("unknown config key `{k}`");
            }
            merged.insert(k, v);
        }
    }
    for (k, v) in as_object(serde_json::to_value(flags)?, "flags")? {
        merged.insert(k, v);
    }
    serde_json::from_value(Value::Object(merged)).context("invalid configuration")
}

pub fn is_false(b: &bool) -> bool {
    !*b
}
