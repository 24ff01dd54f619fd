//! Flat INI-style configuration: `[section]` headers and `key = value`
//! lines, `#`/`;` comments. Flags override file values; file values
//! override built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: PathBuf,
    values: BTreeMap<(String, String), (String, usize)>,
}

impl ConfigFile {
    /// An empty configuration (no file given).
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(path, line_no, "unterminated section header"))?;
                section = name.trim().to_lowercase();
                if section.is_empty() {
                    return Err(Error::parse(path, line_no, "empty section name"));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, line_no, "expected `key = value`"))?;
            let key = key.trim().to_lowercase();
            if key.is_empty() {
                return Err(Error::parse(path, line_no, "empty key"));
            }
            values.insert((section.clone(), key), (value.trim().to_string(), line_no));
        }
        Ok(ConfigFile { path: path.to_path_buf(), values })
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(|(v, _)| v.as_str())
    }

    fn get_parsed<T: FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>> {
        match self.values.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((value, line)) => value.parse().map(Some).map_err(|_| {
                Error::parse(
                    &self.path,
                    *line,
                    format!("[{section}] {key} = {value:?} is not {what}"),
                )
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get_parsed(section, key, "a real number")
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get_parsed(section, key, "a non-negative integer")
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.get_parsed(section, key, "a non-negative integer")
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.get_str(section, key) {
            None => Ok(None),
            Some(v) => match v.to_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(Some(true)),
                "false" | "no" | "off" | "0" => Ok(Some(false)),
                _ => {
                    let line = self.values[&(section.to_string(), key.to_string())].1;
                    Err(Error::parse(
                        &self.path,
                        line,
                        format!("[{section}] {key} = {v:?} is not a boolean"),
                    ))
                }
            },
        }
    }

    pub fn get_path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get_str(section, key).map(PathBuf::from)
    }
}

/// flag > file > default, for any copyable setting.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
