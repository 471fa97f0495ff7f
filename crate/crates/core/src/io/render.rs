use std::fs;
use std::path::Path;

use serde_json::Value;

use super::{ConfigError, RunError};

const REPORTS: [&str; 4] = ["solve", "certify", "window", "budget"];
const INLINE_ARRAY: usize = 8;

/// Flattens a JSON value into `(dotted.key, text)` pairs. Short scalar
/// arrays are inlined; long arrays are summarized by their length.
pub fn flatten_json(value: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(v, &key, out);
            }
        }
        Value::Array(items) => {
            let scalar = items.iter().all(|v| !(v.is_object() || v.is_array()));
            if scalar && items.len() <= INLINE_ARRAY {
                let parts: Vec<String> = items.iter().map(scalar_text).collect();
                out.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
            } else if !scalar && items.len() <= INLINE_ARRAY {
                for (i, v) in items.iter().enumerate() {
                    flatten_json(v, &format!("{prefix}[{i}]"), out);
                }
            } else {
                out.push((format!("{prefix}.len"), items.len().to_string()));
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders every report found in `dir` as aligned text; also writes the
/// text to `summary.txt` and a `section,key,value` extract to `summary.csv`.
pub fn render_run_dir(dir: &Path) -> Result<Vec<String>, RunError> {
    let mut lines = Vec::new();
    let mut csv = String::from("section,key,value\n");
    let mut found = false;
    for name in REPORTS {
        let path = dir.join(format!("{name}.json"));
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        found = true;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| RunError::Output(format!("{}: {e}", path.display())))?;
        let mut pairs = Vec::new();
        flatten_json(&value, "", &mut pairs);
        pairs.retain(|(k, _)| !k.starts_with("config."));
        let width = pairs.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        lines.push(format!("== {name} =="));
        for (k, v) in &pairs {
            let pad = width - k.chars().count();
            lines.push(format!("{k}{}  {v}", " ".repeat(pad)));
            csv.push_str(&format!("{name},{},{}\n", csv_field(k), csv_field(v)));
        }
        lines.push(String::new());
    }
    if !found {
        return Err(ConfigError::Missing(format!("no reports in run directory {}", dir.display())).into());
    }
    let mut text = lines.join("\n");
    text.push('\n');
    let p = dir.join("summary.txt");
    fs::write(&p, text).map_err(|e| RunError::io(p, e))?;
    let p = dir.join("summary.csv");
    fs::write(&p, csv).map_err(|e| RunError::io(p, e))?;
    Ok(lines)
}
