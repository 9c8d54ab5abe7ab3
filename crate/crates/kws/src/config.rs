//! Flat `key = value` settings files.
//!
//! One setting per line; blank lines and lines starting with `#` are
//! ignored. Keys are the long flag names of the subcommand (`batch-size`,
//! `snr`, ...) and values use the flag syntax. A flag given on the command
//! line wins over the file, which wins over the environment and built-in
//! defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{KwsError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            if entries.insert(key.to_string(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: `{key}` set twice", i + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KwsError::io(path, e))?;
        Self::parse(&text).map_err(|m| KwsError::format(path, m))
    }

    /// Rejects keys the subcommand does not know.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let unknown: Vec<&str> = self.entries.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(KwsError::usage(format!(
                "unknown config key(s): {} (valid: {})",
                unknown.join(", "),
                allowed.join(", ")
            )))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Raw text of a setting: the flag, else the file entry.
pub fn raw<'a>(flag: &'a Option<String>, file: &'a ConfigFile, key: &str) -> Option<&'a str> {
    flag.as_deref().or_else(|| file.get(key))
}

pub fn parse_value<T: FromStr>(key: &str, text: &str) -> Result<T>
where
    T::Err: Display,
{
    text.parse().map_err(|e| KwsError::usage(format!("invalid value `{text}` for {key}: {e}")))
}

/// Comma-separated list; empty items are rejected.
pub fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    text.split(',').map(|item| parse_value(key, item.trim())).collect()
}
