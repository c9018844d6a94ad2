//! Flat `key = value` configuration files.
//!
//! `#` starts a comment. Numbers accept `pi` forms such as `pi/2`, `3pi/4`,
//! `2*pi/3`. Lists are comma separated. Every key must be consumed by the
//! reader, so a misspelt key is an error rather than a silent default.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", n + 1)));
            }
        }
        Ok(Config { entries, used: RefCell::default() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<String> {
        self.raw(key).map(str::to_string).ok_or_else(|| missing(key))
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_number(self.raw(key).ok_or_else(|| missing(key))?).map_err(|e| keyed(key, e))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(v) => parse_number(v).map_err(|e| keyed(key, e)),
            None => Ok(default),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| parse_number(v).map_err(|e| keyed(key, e))).transpose()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key).ok_or_else(|| missing(key))?;
        v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.has(key) {
            self.parsed(key)
        } else {
            Ok(default)
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key}: expected a boolean, got '{v}'"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.raw(key).ok_or_else(|| missing(key))?;
        v.split(',').map(|t| parse_number(t.trim()).map_err(|e| keyed(key, e))).collect()
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        if self.has(key) {
            self.list(key)
        } else {
            Ok(default.to_vec())
        }
    }

    pub fn pair(&self, key: &str) -> Result<(f64, f64)> {
        match self.list(key)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            v => Err(Error::Config(format!("{key}: expected two values, got {}", v.len()))),
        }
    }

    pub fn opt_pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        if self.has(key) {
            self.pair(key).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Keys nobody asked for, in sorted order.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    /// Fails on keys nobody asked for.
    pub fn finish(&self) -> Result<()> {
        let unknown = self.unused();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing key '{key}'"))
}

fn keyed(key: &str, e: Error) -> Error {
    Error::Config(format!("{key}: {e}"))
}

/// Plain float, `inf`, or a multiple of pi: `pi`, `pi/2`, `3pi/4`, `2*pi/3`, `-pi/6`.
pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || Error::Config(format!("not a number: '{s}'"));
    let (head, tail) = t.split_once("pi").ok_or_else(bad)?;
    let head = head.trim().trim_end_matches('*').trim();
    let coef = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let tail = tail.trim();
    let div = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
    };
    Ok(coef * std::f64::consts::PI / div)
}
