//! Experiment configs: `[section]` headers followed by `key = value` lines.
//! `#` and `;` start comments. Keys before the first header belong to the
//! unnamed section `""`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_GRID_N: usize = 17;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?
                    .trim();
                if name.is_empty() {
                    bail!("line {}: empty section name", lineno + 1);
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            let table = sections.entry(current.clone()).or_default();
            if table.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key {key:?} in [{current}]", lineno + 1);
            }
        }
        Ok(Self { sections })
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| anyhow!("missing [{section}] {key}"))
    }

    pub fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("[{section}] {key} = {v:?}: {e}"))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(section, key)?.unwrap_or(default))
    }

    /// A strictly positive real, as every numeric parameter must be.
    pub fn positive_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed_or(section, key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            bail!("[{section}] {key} must be positive, got {v}");
        }
        Ok(v)
    }

    pub fn flag(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => bail!("[{section}] {key} = {v:?} is not a boolean"),
        }
    }

    /// Comma-separated reals.
    pub fn reals(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("[{section}] {key}: bad number {s:?}"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed_or("run", "seed", DEFAULT_SEED)
    }

    /// sha256 of the canonical rendering, so formatting and key order do
    /// not change the digest but every effective value does.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, table) in &self.sections {
            writeln!(f, "[{name}]")?;
            for (k, v) in table {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}
