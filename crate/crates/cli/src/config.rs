//! Flat `key = value` TOML run configuration.
//!
//! Keys are the long flag names with `-` replaced by `_` (`t_end`,
//! `assert_stable`, `C`). Command-line flags override file values. Every
//! key must be consumed by the command; leftovers are reported as unknown.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use toml::{Table, Value};

#[derive(Debug, Default)]
pub struct Config {
    table: Table,
    used: BTreeSet<String>,
    source: Option<PathBuf>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let table: Table = text
            .parse()
            .with_context(|| format!("parsing config {}", path.display()))?;
        for (key, value) in &table {
            if matches!(value, Value::Table(_)) {
                bail!("config key `{key}`: nested tables are not supported, use flat key = value pairs");
            }
        }
        Ok(Self {
            table,
            used: BTreeSet::new(),
            source: Some(path.to_path_buf()),
        })
    }

    fn take(&mut self, key: &str) -> Option<&Value> {
        self.used.insert(key.to_string());
        self.table.get(key)
    }

    fn invalid(key: &str, expected: &str, got: &Value) -> anyhow::Error {
        anyhow!("config key `{key}`: expected {expected}, got {got}")
    }

    pub fn f64(&mut self, flag: Option<f64>, key: &str) -> Result<Option<f64>> {
        let value = match self.take(key) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(v) => return Err(Self::invalid(key, "a number", v)),
        };
        Ok(flag.or(value))
    }

    pub fn usize(&mut self, flag: Option<usize>, key: &str) -> Result<Option<usize>> {
        let value = match self.take(key) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as usize),
            Some(v) => return Err(Self::invalid(key, "a nonnegative integer", v)),
        };
        Ok(flag.or(value))
    }

    pub fn u64(&mut self, flag: Option<u64>, key: &str) -> Result<Option<u64>> {
        let value = match self.take(key) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(v) => return Err(Self::invalid(key, "a nonnegative integer", v)),
        };
        Ok(flag.or(value))
    }

    /// A flag that can only switch the option on.
    pub fn flag(&mut self, flag: bool, key: &str) -> Result<bool> {
        let value = match self.take(key) {
            None => false,
            Some(Value::Boolean(b)) => *b,
            Some(v) => return Err(Self::invalid(key, "true or false", v)),
        };
        Ok(flag || value)
    }

    pub fn string(&mut self, flag: Option<String>, key: &str) -> Result<Option<String>> {
        let value = match self.take(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => return Err(Self::invalid(key, "a string", v)),
        };
        Ok(flag.or(value))
    }

    pub fn path(&mut self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>> {
        Ok(self
            .string(flag.map(|p| p.to_string_lossy().into_owned()), key)?
            .map(PathBuf::from))
    }

    pub fn f64_list(&mut self, flag: Option<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>> {
        let value = match self.take(key) {
            None => None,
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(match item {
                        Value::Float(x) => *x,
                        Value::Integer(i) => *i as f64,
                        v => return Err(Self::invalid(key, "an array of numbers", v)),
                    });
                }
                Some(out)
            }
            Some(v) => return Err(Self::invalid(key, "an array of numbers", v)),
        };
        Ok(flag.or(value))
    }

    /// Fails on any key the command did not ask for.
    pub fn finish(&self) -> Result<()> {
        if let Some(key) = self.table.keys().find(|k| !self.used.contains(*k)) {
            match &self.source {
                Some(p) => bail!("unknown config key `{key}` in {}", p.display()),
                None => bail!("unknown config key `{key}`"),
            }
        }
        Ok(())
    }
}

/// Unwraps a required parameter, naming the key when missing.
pub fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| {
        anyhow!(
            "missing required parameter `{key}` (flag --{} or config key `{key}`)",
            key.replace('_', "-")
        )
    })
}
