//! `--config FILE`: a JSON object whose keys mirror the command-line flags.
//! Its entries are spliced into the argument list ahead of the explicit
//! flags, so anything given on the command line wins.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Flags that belong to the top-level command.
const GLOBAL_KEYS: [&str; 4] = ["precision", "format", "out", "workers"];

pub const COMMANDS: [&str; 6] = ["value", "sweep", "respond", "certify", "perturb", "simulate"];

/// Removes `--config` from `args` and returns the merged argument list.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().context("--config needs a file")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.to_string_lossy()))?;
    let cfg: Value = serde_json::from_str(&text).context("config file is not valid JSON")?;
    let Value::Object(map) = cfg else {
        bail!("config file must hold a JSON object");
    };
    let mut globals = Vec::new();
    let mut locals = Vec::new();
    let mut command = None;
    for (k, v) in map {
        if k == "command" {
            command = Some(v.as_str().context("\"command\" must be a string")?.to_string());
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        let target = if GLOBAL_KEYS.contains(&k.as_str()) {
            &mut globals
        } else {
            &mut locals
        };
        match v {
            Value::Bool(true) => target.push(OsString::from(flag)),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                target.push(OsString::from(flag));
                target.push(OsString::from(joined.join(",")));
            }
            other => {
                target.push(OsString::from(flag));
                target.push(OsString::from(scalar(&other)?));
            }
        }
    }
    let mut out = Vec::with_capacity(rest.len() + globals.len() + locals.len() + 1);
    let mut rest = rest.into_iter();
    out.extend(rest.next());
    out.extend(globals);
    let rest: Vec<OsString> = rest.collect();
    let pos = rest.iter().position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()));
    match (pos, command) {
        (Some(i), _) => {
            out.extend(rest[..=i].iter().cloned());
            out.extend(locals);
            out.extend(rest[i + 1..].iter().cloned());
        }
        (None, Some(c)) => {
            // explicit top-level flags stay ahead of the command
            out.extend(rest);
            out.push(OsString::from(c));
            out.extend(locals);
        }
        (None, None) => {
            out.extend(rest);
            if !locals.is_empty() {
                bail!("config file sets command flags but names no command");
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => bail!("unsupported config value {v}"),
    })
}
