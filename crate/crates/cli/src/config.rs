//! `--config` handling: every key of the JSON object becomes a flag unless
//! the same flag is already on the command line.

use serde_json::Value;
use std::path::Path;

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(n, _)| n))
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Subcommand named on the command line, if any.
fn subcommand(args: &[String]) -> Option<&str> {
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a.starts_with("--") {
            skip = !a.contains('=');
            continue;
        }
        return Some(a);
    }
    None
}

/// Returns `args` with config-file values appended; errors are usage errors.
pub fn merge(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text =
        std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config {path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let Value::Object(map) = value else {
        return Err(format!("config {path}: expected a JSON object"));
    };
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| flag_name(a))
        .map(str::to_string)
        .collect();
    let mut out = args.clone();
    for (key, v) in map {
        let flag = key.replace('_', "-");
        if flag == "config" || given.contains(&flag) {
            continue;
        }
        if flag == "command" {
            match (&v, subcommand(&args)) {
                (Value::String(c), Some(s)) if c == s => continue,
                (Value::String(c), _) => return Err(format!("config {path}: written for '{c}'")),
                _ => return Err(format!("config {path}: 'command' must be a string")),
            }
        }
        let rendered = match v {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => None,
            Value::Number(n) => Some(n.to_string()),
            Value::String(s) => Some(s),
            Value::Array(items) => Some(
                items
                    .iter()
                    .map(|i| match i {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(format!(
                            "config {path}: '{key}' lists must hold strings or numbers"
                        )),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(","),
            ),
            Value::Object(_) => return Err(format!("config {path}: '{key}' cannot be an object")),
        };
        out.push(format!("--{flag}"));
        out.extend(rendered);
    }
    Ok(out)
}
