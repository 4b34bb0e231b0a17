//! Flat `key=value` configuration files.
//!
//! Entries become command-line options appended after the subcommand, unless
//! the same option was already given on the command line.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::Failure;

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may be written with or without leading dashes.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Usage(format!("{}:{}: expected key=value", origin.display(), i + 1)));
        };
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// The value of `--config` in raw arguments, if present.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Appends options from the configuration file named by `--config`.
pub fn merge_config_file(args: Vec<OsString>, command: &Command) -> Result<Vec<OsString>, Failure> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let entries = parse_config(&text, path)?;
    let Some(sub) = args.iter().skip(1).find_map(|a| command.find_subcommand(a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut merged = args.clone();
    for (key, value) in entries {
        if key == "config" || key == "verbose" || given.contains(&key) {
            continue;
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(Failure::Usage(format!(
                "{}: `{key}` is not an option of {}",
                path.display(),
                sub.get_name()
            )));
        };
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(Failure::Usage(format!("{}: `{key}` takes true or false", path.display()))),
            }
        } else {
            merged.push(format!("--{key}").into());
            merged.push(value.into());
        }
    }
    Ok(merged)
}
