//! Flat `key = value` configuration files.
//!
//! Every key is the long name of a flag of the chosen subcommand (`max-iters`
//! or `max_iters`). Entries are turned into flags and placed in front of the
//! ones given on the command line, so explicit flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected 'key = value'", k + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key '{}'", k + 1, key);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Finds `--config PATH` (or `--config=PATH`) after the subcommand, removes it
/// and splices the file's entries in right after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let text = a.to_string_lossy();
        if text == "--config" {
            let v = it.next().context("--config needs a path")?;
            path = Some(v);
        } else if let Some(v) = text.strip_prefix("--config=") {
            path = Some(OsString::from(v));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {}", Path::new(&path).display()))?;
    let entries = parse(&text)?;
    // insert after the binary name and the subcommand
    let at = rest.len().min(2);
    let mut flags: Vec<OsString> = Vec::new();
    for (k, v) in entries {
        flags.push(format!("--{k}").into());
        flags.push(v.into());
    }
    rest.splice(at..at, flags);
    Ok(rest)
}
