//! Experiment config files.
//!
//! `--config run.json` names a JSON object whose keys are long flag names
//! (without the leading dashes) plus an optional `"command"`. The keys are
//! spliced into the argument list right after the subcommand, so flags
//! given on the command line override the file and unknown keys are
//! rejected by the parser like any unknown flag.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

const COMMANDS: [&str; 11] = [
    "phase",
    "lengthmap",
    "spectrum",
    "lindyn",
    "path",
    "ntk-kernel",
    "ntk-train",
    "du-monitor",
    "align",
    "wick",
    "bounds",
];

fn scalar(key: &str, v: &Value) -> Result<Option<String>> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(_) => None,
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|i| scalar(key, i)?.with_context(|| format!("config key '{key}': lists hold scalars")))
                .collect::<Result<_>>()?;
            Some(parts.join(","))
        }
        Value::Null | Value::Object(_) => bail!("config key '{key}' must be a string, number, boolean or list"),
    })
}

fn config_args(path: &Path) -> Result<(Option<String>, Vec<String>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = doc else {
        bail!("config {} must hold a JSON object", path.display());
    };
    let mut command = None;
    let mut args = Vec::new();
    for (key, v) in &map {
        if key == "command" {
            command = Some(v.as_str().context("config key 'command' must be a string")?.to_string());
            continue;
        }
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        match (v, scalar(key, v)?) {
            (Value::Bool(true), _) => args.push(format!("--{key}")),
            (Value::Bool(false), _) => {}
            (_, Some(s)) => {
                args.push(format!("--{key}"));
                args.push(s);
            }
            (_, None) => unreachable!(),
        }
    }
    Ok((command, args))
}

/// Replaces `--config PATH` in `raw` by the flags stored in the file.
pub fn expand(raw: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(raw.len());
    let mut config = None;
    let mut it = raw.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let (command, extra) = config_args(Path::new(&path))?;
    let pos = rest.iter().position(|a| COMMANDS.contains(&a.as_str()));
    match (pos, command) {
        (Some(i), Some(c)) if rest[i] != c => {
            bail!("config names command '{c}' but the command line runs '{}'", rest[i])
        }
        (Some(i), _) => {
            rest.splice(i + 1..i + 1, extra);
        }
        (None, Some(c)) => {
            rest.push(c);
            rest.extend(extra);
        }
        (None, None) => bail!("no subcommand on the command line or in the config file"),
    }
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_follow_the_subcommand() {
        let dir = std::env::temp_dir().join(format!("dltl-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        std::fs::write(&p, r#"{"command":"phase","act":"relu","sigma-w2":"1:2:0.5","seed":3}"#).unwrap();
        let argv = vec!["dltl".to_string(), "--config".into(), p.display().to_string(), "--out".into(), "o.csv".into()];
        let got = expand(argv).unwrap();
        assert_eq!(
            got,
            ["dltl", "--out", "o.csv", "phase", "--act", "relu", "--seed", "3", "--sigma-w2", "1:2:0.5"]
        );
        std::fs::remove_dir_all(dir).unwrap();
    }
}
