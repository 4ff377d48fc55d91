//! Flat `key = value` config files. Keys are long flag names of the chosen
//! subcommand; values apply only when the flag is absent from the command
//! line.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;

#[derive(Debug)]
pub struct ConfigError(pub String);

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected key = value", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn subcommand_index(cmd: &Command, args: &[OsString]) -> Option<usize> {
    args.iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|(i, _)| i)
}

fn has_flag(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_eq = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_eq)
    })
}

/// Inserts config-file values as flags after the subcommand name, skipping
/// flags already given on the command line.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| {
        ConfigError(format!(
            "cannot read config '{}': {e}",
            path.to_string_lossy()
        ))
    })?;
    let entries = parse(&text)?;
    let Some(sub_at) = subcommand_index(cmd, &args) else {
        return Ok(args);
    };
    let sub = cmd
        .find_subcommand(args[sub_at].to_string_lossy().as_ref())
        .expect("index found by name");

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| ConfigError(format!("unknown config key '{key}'")))?;
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(ConfigError(format!(
                        "'{key}' expects true/false, got '{other}'"
                    )))
                }
            }
        }
    }
    let mut merged = args[..=sub_at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[sub_at + 1..]);
    Ok(merged)
}
