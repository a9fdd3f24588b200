//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! Keys are stored flat as `section.key`. Keys before the first header
//! belong to no section. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| format!("line {}: unterminated section header", k + 1))?
                    .trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(format!("line {}: bad section name '{name}'", k + 1));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", k + 1))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(format!("line {}: bad key '{key}'", k + 1));
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            cfg.entries.insert(full, value.trim().to_string());
        }
        Ok(cfg)
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), String> {
        let (key, value) = spec.split_once('=').ok_or_else(|| format!("override '{spec}' is not key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("override '{spec}' has an empty key"));
        }
        self.set(key, value.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, String> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("{key} = '{v}' is not a valid value")),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| format!("{key} = '{v}' is not a valid value")))
            .transpose()
    }

    /// Comma-separated list of numbers.
    pub fn get_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, String> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| format!("{key}: '{t}' is not a number")))
                .collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Sorted `key=value` lines; the hashed form.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let c = Config::parse("top = 1\n[grid]\nnx = 64 # cells\n; note\n[params]\ns=0.3\n").unwrap();
        assert_eq!(c.raw("top"), Some("1"));
        assert_eq!(c.get::<usize>("grid.nx", 0).unwrap(), 64);
        assert_eq!(c.get::<f64>("params.s", 0.0).unwrap(), 0.3);
        assert_eq!(c.get::<f64>("params.gamma", 0.5).unwrap(), 0.5);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[grid\nnx=1").is_err());
        assert!(Config::parse("just words").is_err());
        assert!(Config::parse("a b = 1").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut c = Config::parse("[grid]\nnx = 64\n").unwrap();
        c.apply_override("grid.nx=128").unwrap();
        assert_eq!(c.get::<usize>("grid.nx", 0).unwrap(), 128);
        assert!(c.apply_override("novalue").is_err());
        assert!(c.get::<usize>("grid.nx", 0).is_ok());
        c.set("grid.nx", "x");
        assert!(c.get::<usize>("grid.nx", 0).is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = Config::parse("[p]\ns = 0.5\ngamma = 0.5\n").unwrap();
        let b = Config::parse("# comment\n[p]\n  gamma=0.5\n\ns= 0.5").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Config::parse("[p]\ns = 0.4\ngamma = 0.5\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn lists() {
        let c = Config::parse("r = 0.1, 0.2,0.4").unwrap();
        assert_eq!(c.get_list("r", &[]).unwrap(), vec![0.1, 0.2, 0.4]);
        assert_eq!(c.get_list("q", &[1.0]).unwrap(), vec![1.0]);
    }
}
