//! Flat `key = value` text files used for scenes and run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KvFile {
    source_name: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvFile {
    pub fn parse(source_name: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    key: trimmed.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    key,
                    message: "empty key".into(),
                });
            }
            if entries.contains_key(&key) {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    key,
                    message: "duplicate key".into(),
                });
            }
            entries.insert(key, (v.trim().to_string(), line));
        }
        Ok(KvFile {
            source_name: source_name.to_string(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn empty(source_name: &str) -> Self {
        KvFile {
            source_name: source_name.to_string(),
            entries: BTreeMap::new(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> Error {
        let line = self.entries.get(key).map(|(_, l)| *l).unwrap_or(0);
        Error::Parse {
            source_name: self.source_name.clone(),
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.error(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| self.error(key, "missing required key"))
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| self.error(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Fails on any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(self.error(k, "unknown key"));
            }
        }
        Ok(())
    }
}
