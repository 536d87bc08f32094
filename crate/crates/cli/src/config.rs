//! Layered configuration: command-line flags over a JSON config file over
//! built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// A flag that was not given arrives as `null` (or `false` for switches) and
/// leaves the lower layer in place.
fn overlay(base: &mut Map<String, Value>, top: &Value, skip_false: bool) {
    if let Value::Object(top) = top {
        for (k, v) in top {
            let unset = v.is_null() || (skip_false && *v == Value::Bool(false));
            if !unset {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

pub fn resolve<T, F>(defaults: &T, file: Option<&Value>, flags: &F) -> Result<T>
where
    T: Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(defaults)? else {
        anyhow::bail!("configuration defaults must be an object");
    };
    if let Some(file) = file {
        // only keys this command knows about
        if let Value::Object(f) = file {
            let known: Vec<String> = merged.keys().cloned().collect();
            for k in known {
                if let Some(v) = f.get(&k).filter(|v| !v.is_null()) {
                    merged.insert(k, v.clone());
                }
            }
        }
    }
    overlay(&mut merged, &serde_json::to_value(flags)?, true);
    serde_json::from_value(Value::Object(merged)).context("invalid configuration value")
}

pub fn load_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| crate::ValidationError(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(crate::ValidationError(format!("{}: config must be a JSON object", path.display())).into());
    }
    Ok(value)
}
