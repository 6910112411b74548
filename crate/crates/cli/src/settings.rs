//! Resolution of `key=value` settings: command-line flags override the
//! config file, which overrides built-in defaults. Every resolved key is
//! recorded for the output header.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

/// A mistake in the invocation itself; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub struct Settings {
    command: &'static str,
    allowed: &'static [&'static str],
    values: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Settings {
    /// Start from the config file, rejecting keys outside `allowed`.
    pub fn load(command: &'static str, allowed: &'static [&'static str], config: Option<&Path>) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
                let k = k.trim();
                if !allowed.contains(&k) {
                    return Err(usage(format!(
                        "{}:{}: unknown key `{k}` for `{command}` (known: {})",
                        path.display(),
                        i + 1,
                        allowed.join(", ")
                    )));
                }
                values.insert(k.to_string(), v.trim().to_string());
            }
        }
        Ok(Self {
            command,
            allowed,
            values,
            resolved: Vec::new(),
        })
    }

    /// Apply a flag value, if given.
    pub fn flag<T: Display>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        debug_assert!(self.allowed.contains(&key), "flag `{key}` missing from key list");
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
        self
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.push((key.to_string(), value));
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T>
    where
        T::Err: Display,
    {
        raw.parse::<T>()
            .map_err(|e| usage(format!("`{key}`: cannot parse `{raw}`: {e}")))
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = match self.values.get(key).cloned() {
            Some(raw) => self.parse(key, &raw)?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.values.get(key).cloned() {
            Some(raw) => {
                let v: T = self.parse(key, &raw)?;
                self.record(key, v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.optional(key)?.ok_or_else(|| {
            usage(format!(
                "`{}` needs --{key} (or `{key}=` in the config file)",
                self.command
            ))
        })
    }

    /// Comma-separated reals.
    pub fn reals(&mut self, key: &str, default: &str) -> Result<Vec<f64>> {
        let raw = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        let v = raw
            .split(',')
            .map(|x| self.parse::<f64>(key, x.trim()))
            .collect::<Result<Vec<_>>>()?;
        self.record(key, raw);
        Ok(v)
    }

    /// Header lines: version, command, and every resolved setting. Keys use
    /// a `config.` prefix so CSV readers that scan `#` metadata ignore them.
    pub fn header(&self) -> String {
        let mut s = format!(
            "# cylstable {}\n# config.command={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for (k, v) in &self.resolved {
            s.push_str(&format!("# config.{k}={v}\n"));
        }
        s
    }
}
