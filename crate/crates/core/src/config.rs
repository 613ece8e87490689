//! Flat `key value...` text files with `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Values {
    pub line: usize,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyValueFile {
    entries: BTreeMap<String, Values>,
}

impl KeyValueFile {
    /// Parses `text`, rejecting keys outside `allowed` and repeated keys.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut toks = content.split_whitespace();
            let key = toks.next().expect("non-empty line");
            if !allowed.contains(&key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key '{key}' (allowed: {})", allowed.join(", ")),
                });
            }
            let items: Vec<String> = toks.map(str::to_owned).collect();
            if items.is_empty() {
                return Err(Error::Parse { line, msg: format!("key '{key}' has no value") });
            }
            if entries.insert(key.to_owned(), Values { line, items }).is_some() {
                return Err(Error::Parse { line, msg: format!("duplicate key '{key}'") });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Values> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn parse_item<T: FromStr>(&self, line: usize, item: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        item.parse::<T>().map_err(|e| Error::Parse { line, msg: format!("bad value '{item}': {e}") })
    }

    fn single<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) if v.items.len() == 1 => self.parse_item(v.line, &v.items[0]).map(Some),
            Some(v) => Err(Error::Parse { line: v.line, msg: format!("key '{key}' takes one value") }),
        }
    }

    fn missing(key: &str) -> Error {
        Error::Parse { line: 0, msg: format!("missing required key '{key}'") }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        self.single(key)?.ok_or_else(|| Self::missing(key))
    }

    pub fn float_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.single(key)?.unwrap_or(default))
    }

    pub fn uint_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.single(key)?.unwrap_or(default))
    }

    pub fn string_opt(&self, key: &str) -> Result<Option<String>> {
        self.single(key)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.items.iter().map(|s| self.parse_item(v.line, s)).collect::<Result<_>>().map(Some),
        }
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)?.ok_or_else(|| Self::missing(key))
    }
}
