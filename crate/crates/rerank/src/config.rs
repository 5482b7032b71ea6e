//! Flat TOML config files: each key is a long flag name, each value its
//! argument. Values are spliced into the command line ahead of the
//! explicit flags, which therefore win.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

use crate::{Error, Result};

/// Flags that take a value before the subcommand name.
const GLOBAL_VALUE_FLAGS: [&str; 2] = ["--threads", "--config"];

/// The `--config` path, if given anywhere on the command line.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Index of the subcommand name in `args`.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_VALUE_FLAGS.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn value_strings(key: &str, value: &toml::Value) -> Result<Vec<String>> {
    Ok(match value {
        toml::Value::String(s) => vec![s.clone()],
        toml::Value::Integer(n) => vec![n.to_string()],
        toml::Value::Float(x) => vec![x.to_string()],
        toml::Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                out.extend(value_strings(key, item)?);
            }
            out
        }
        toml::Value::Boolean(_) | toml::Value::Datetime(_) | toml::Value::Table(_) => {
            return Err(Error::Usage(format!("config key `{key}`: unsupported value `{value}`")));
        }
    })
}

/// Reads the `--config` file named in `args` (if any) and returns `args`
/// with its settings inserted right after the subcommand name. A key that
/// names no flag of any subcommand is a usage error; a key belonging only
/// to other subcommands is skipped, so one file can serve a whole chain.
pub fn apply_config(command: &Command, args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse(path, line_of(&text, e.span()), e.message().to_string()))?;
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let name = args[at].to_string_lossy().into_owned();
    let Some(sub) = command.find_subcommand(&name) else {
        return Ok(args);
    };

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in &table {
        let flag = |c: &Command| {
            c.get_arguments()
                .find(|a| a.get_long() == Some(key.as_str()))
                .map(|a| a.get_action().takes_values())
        };
        let takes_value = match flag(sub).or_else(|| flag(command)) {
            Some(t) => t,
            None if command.get_subcommands().any(|c| flag(c).is_some()) => {
                log::debug!("config key `{key}` does not apply to `{name}`");
                continue;
            }
            None => return Err(Error::Usage(format!("{}: unknown config key `{key}`", path.display()))),
        };
        if takes_value {
            for v in value_strings(key, value)? {
                injected.push(format!("--{key}").into());
                injected.push(v.into());
            }
        } else {
            match value {
                toml::Value::Boolean(true) => injected.push(format!("--{key}").into()),
                toml::Value::Boolean(false) => {}
                other => {
                    return Err(Error::Usage(format!(
                        "config key `{key}` is a switch and needs true or false, got `{other}`"
                    )))
                }
            }
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, injected);
    Ok(out)
}

fn line_of(text: &str, span: Option<std::ops::Range<usize>>) -> usize {
    span.map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{Arg, ArgAction};

    fn command() -> Command {
        Command::new("t")
            .arg(Arg::new("threads").long("threads").global(true))
            .arg(Arg::new("config").long("config").global(true))
            .subcommand(
                Command::new("train")
                    .arg(Arg::new("lr").long("lr"))
                    .arg(Arg::new("fast").long("fast").action(ArgAction::SetTrue)),
            )
            .subcommand(Command::new("eval").arg(Arg::new("cutoff").long("cutoff")))
            .args_override_self(true)
    }

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    fn with_config(text: &str, argv: &[&str]) -> Result<Vec<String>> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        let mut a = args(argv);
        a.insert(1, path.as_os_str().to_owned());
        a.insert(1, "--config".into());
        Ok(apply_config(&command(), a)?
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect())
    }

    #[test]
    fn injects_after_subcommand() {
        let out = with_config("lr = 0.5\nfast = true\ncutoff = 3\n", &["t", "train", "--lr", "0.1"]).unwrap();
        assert_eq!(&out[3..], ["train", "--fast", "--lr", "0.5", "--lr", "0.1"]);
        let m = command().try_get_matches_from(&out).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        assert_eq!(sub.get_one::<String>("lr").unwrap(), "0.1");
        assert!(sub.get_flag("fast"));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = with_config("learning_rate = 1\n", &["t", "train"]).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert!(matches!(
            with_config("fast = 1\n", &["t", "train"]).unwrap_err(),
            Error::Usage(_)
        ));
        assert!(matches!(
            with_config("lr = \n", &["t", "train"]).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn no_config_is_a_no_op() {
        let a = args(&["t", "--threads", "2", "eval", "--cutoff", "5"]);
        assert_eq!(apply_config(&command(), a.clone()).unwrap(), a);
        assert_eq!(subcommand_index(&a), Some(3));
    }
}
