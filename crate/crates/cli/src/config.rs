//! Flat `key = value` config files. Keys are flag names without the leading
//! dashes (`em-iters` or `em_iters`); `#` starts a comment. Values are
//! spliced into the argument list ahead of the command-line flags, and a
//! key is dropped entirely when the same flag appears on the command line.

use std::ffi::OsString;
use std::path::Path;

use crate::CliError;

/// Parsed entries in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::config(format!("config line {}: invalid key", i + 1)));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::config(format!("--config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn mentions_flag(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

/// Returns `args` with the config file's entries inserted after the
/// subcommand name. Without `--config` the arguments are returned unchanged.
pub fn expand_config_args(args: &[OsString]) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(args) else {
        return Ok(args.to_vec());
    };
    if args.len() < 2 {
        return Ok(args.to_vec());
    }
    let entries = read_config(Path::new(&path))?;
    let mut out: Vec<OsString> = args[..2].to_vec();
    for (key, value) in entries {
        if !mentions_flag(&args[2..], &key) {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
