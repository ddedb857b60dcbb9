//! Flat `key = value` config files. Keys name long flags (with `_` or `-`),
//! `#` starts a comment. Values fill in flags absent from the command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::error::{CliError, CliResult};

pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", no + 1)));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(CliError::usage(format!("config key {key:?} given twice")));
        }
    }
    Ok(out)
}

/// Value of `--config` in `argv`, if any.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
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

fn mentions(argv: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let with_value = format!("{long}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == long || s.starts_with(&with_value)
    })
}

/// Returns `argv` with flags from the config file appended. Keys already on
/// the command line are left alone; keys the chosen subcommand does not
/// accept are skipped; keys no subcommand accepts are an error.
pub fn apply_config(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", Path::new(&path).display())))?;
    let entries = parse_config(&text)?;

    let root = Cli::command();
    let sub_name = argv.iter().skip(1).find_map(|a| {
        let s = a.to_string_lossy();
        root.find_subcommand(s.as_ref()).map(|c| c.get_name().to_string())
    });
    let Some(sub_name) = sub_name else {
        return Ok(argv);
    };
    let sub = root.find_subcommand(&sub_name).expect("found above");

    let mut out = argv.clone();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::usage("config files cannot include other config files"));
        }
        let known = root
            .get_subcommands()
            .any(|c| c.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
        if !known {
            return Err(CliError::usage(format!("unknown config key {key:?}")));
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            continue;
        };
        if mentions(&argv, &key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(CliError::usage(format!("config key {key:?}: expected a boolean, got {other:?}")))
                }
            }
        } else {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}
