//! Key-value configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Lists are comma separated. Keys are case sensitive and a key may
//! appear once.
//!
//! ```text
//! # FER sweep of the rate-1/5 code
//! code = bundled:r1_5
//! d = 8, 128
//! modulation = gaussian
//! beta = 0.76, 0.78, 0.80
//! min_errors = 50
//! max_frames = 20000
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::HarnessError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(HarnessError::Config(format!("line {line_no}: empty key")));
            }
            if entries.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
                return Err(HarnessError::Config(format!("line {line_no}: duplicate key `{key}`")));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key` unless it is already present.
    pub fn set_default(&mut self, key: &str, value: &str) {
        self.entries.entry(key.to_string()).or_insert((0, value.to_string()));
    }

    /// Overrides `key`.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on keys outside `known`, catching typos.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), HarnessError> {
        match self.entries.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, (line, _))) => Err(HarnessError::Config(format!("line {line}: unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> HarnessError {
        let line = self.entries.get(key).map(|(l, _)| *l).unwrap_or(0);
        if line > 0 {
            HarnessError::Config(format!("line {line}: `{key}`: {msg}"))
        } else {
            HarnessError::Config(format!("`{key}`: {msg}"))
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| self.err(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| HarnessError::Config(format!("missing key `{key}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e| self.err(key, format!("cannot parse {s:?}: {e}"))))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        match self.list(key)? {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(HarnessError::Config(format!("missing or empty list `{key}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_and_lists() {
        let cfg = KvConfig::parse("# c\n d = 8, 128 \nbeta=0.8 # tail\n\nname = bundled:r1_5\n").unwrap();
        assert_eq!(cfg.require_list::<usize>("d").unwrap(), vec![8, 128]);
        assert_eq!(cfg.require::<f64>("beta").unwrap(), 0.8);
        assert_eq!(cfg.raw("name"), Some("bundled:r1_5"));
        assert_eq!(cfg.get_or("absent", 3u32).unwrap(), 3);
    }

    #[test]
    fn reports_line_numbers() {
        let err = KvConfig::parse("a = 1\nnonsense\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = KvConfig::parse("a = 1\na = 2\n").unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
        let cfg = KvConfig::parse("a = 1\nb = x\n").unwrap();
        assert!(cfg.require::<f64>("b").unwrap_err().to_string().contains("line 2"));
        assert!(cfg.check_keys(&["a"]).unwrap_err().to_string().contains("unknown key `b`"));
    }
}
