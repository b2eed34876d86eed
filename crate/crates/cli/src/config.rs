//! Scenario loading: preset or JSON file, then `--set key=value` overrides.

use std::fs;
use std::path::Path;

use quadfold::experiments::{preset, ScenarioConfig};
use serde_json::Value;

use crate::CliError;

pub fn load(
    preset_name: Option<&str>,
    config_path: Option<&Path>,
) -> Result<ScenarioConfig, CliError> {
    match (preset_name, config_path) {
        (Some(name), None) => Ok(preset(name)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let raw: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
            from_value(raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
        _ => Err(CliError::Usage(
            "exactly one of --preset or --config is required".into(),
        )),
    }
}

/// Applies each `key=value` override to the serialized scenario and parses
/// the result back, so every override goes through the same validation as a
/// config file.
pub fn apply_overrides(
    cfg: &ScenarioConfig,
    overrides: &[String],
) -> Result<ScenarioConfig, CliError> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut root = serde_json::to_value(cfg).expect("scenario serializes");
    for spec in overrides {
        set_leaf(&mut root, spec)?;
    }
    from_value(root).map_err(|e| CliError::Usage(format!("after --set: {e}")))
}

fn from_value(raw: Value) -> Result<ScenarioConfig, String> {
    let cfg: ScenarioConfig = serde_json::from_value(raw.clone()).map_err(|e| e.to_string())?;
    // Flattened serde structs cannot deny unknown fields themselves.
    let canonical = serde_json::to_value(&cfg).expect("scenario serializes");
    if let Some(key) = unknown_key(&raw, &canonical, "") {
        return Err(format!("unknown key `{key}`"));
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn unknown_key(raw: &Value, canonical: &Value, prefix: &str) -> Option<String> {
    let (Value::Object(r), Value::Object(c)) = (raw, canonical) else {
        return None;
    };
    for (k, v) in r {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match c.get(k) {
            Some(cv) => {
                if let Some(bad) = unknown_key(v, cv, &path) {
                    return Some(bad);
                }
            }
            None if path == "assumptions" => {}
            None => return Some(path),
        }
    }
    None
}

fn set_leaf(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{spec}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!(
            "--set has an empty key in `{spec}`"
        )));
    }
    let unknown = || CliError::Usage(format!("--set: unknown key `{key}`"));

    let slot = if key.contains('.') {
        key.split('.')
            .try_fold(&mut *root, |node, part| node.get_mut(part))
            .ok_or_else(unknown)?
    } else if root.get("params").and_then(|p| p.get(key)).is_some() {
        &mut root["params"][key]
    } else {
        root.get_mut(key).ok_or_else(unknown)?
    };
    if slot.is_object() {
        return Err(CliError::Usage(format!("--set: `{key}` is not a leaf")));
    }
    *slot = parse_value(slot, raw.trim());
    Ok(())
}

/// Interprets `raw` in the type of the value it replaces.
fn parse_value(current: &Value, raw: &str) -> Value {
    match current {
        Value::String(_) => Value::String(raw.to_string()),
        Value::Array(_) if !raw.starts_with('[') => Value::Array(
            raw.split(',')
                .map(|s| Value::String(s.trim().to_string()))
                .collect(),
        ),
        _ => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())),
    }
}
