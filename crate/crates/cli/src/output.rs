//! Output directory, number formatting and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

const LOCK_NAME: &str = ".fbnl.lock";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with every float printed by [`num`]; non-finite floats become `null`.
pub fn render_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                out.push_str(&if x.is_finite() { num(x) } else { "null".into() });
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

/// CSV text with a header row and rows of numbers.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    /// Operation that produced the numbers in the file.
    pub operation: String,
    pub tolerance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub tolerance: String,
    pub measured: BTreeMap<String, f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, tolerance: impl Into<String>, measured: Vec<(String, f64)>) -> Self {
        Check { name: name.into(), passed, tolerance: tolerance.into(), measured: measured.into_iter().collect() }
    }
}

/// Output directory owned by this process for the duration of the run.
#[derive(Debug)]
pub struct OutDir {
    dir: PathBuf,
    lock: PathBuf,
    pub entries: Vec<OutputEntry>,
}

impl OutDir {
    pub fn open(dir: &Path) -> Result<Self, String> {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let lock = dir.join(LOCK_NAME);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                format!("{} is locked by another run (remove {} if stale)", dir.display(), lock.display())
            } else {
                format!("cannot lock {}: {e}", dir.display())
            }
        })?;
        let _ = writeln!(f, "{}", std::process::id());
        Ok(OutDir { dir: dir.to_path_buf(), lock, entries: Vec::new() })
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), String> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
        fs::rename(&tmp, &target).map_err(|e| format!("cannot move {} into place: {e}", target.display()))
    }

    /// Writes an output file and records its checksum.
    pub fn write(&mut self, name: &str, text: &str, operation: &str, tolerance: &str) -> Result<(), String> {
        self.write_atomic(name, text.as_bytes())?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            operation: operation.to_string(),
            tolerance: tolerance.to_string(),
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value, operation: &str, tolerance: &str) -> Result<(), String> {
        self.write(name, &render_json(v), operation, tolerance)
    }

    /// Written last, so a present manifest means every listed output is complete.
    pub fn write_manifest(&self, manifest: &Value) -> Result<(), String> {
        self.write_atomic("manifest.json", render_json(manifest).as_bytes())
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
            assert_eq!(digits.len(), 17);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn json_is_valid_and_exact() {
        let v = json!({"a": 0.1, "b": [1, 2.5, null], "c": "x\"y", "d": {}, "e": f64::NAN});
        let text = render_json(&v);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][0].as_u64().unwrap(), 1);
        assert_eq!(back["c"].as_str().unwrap(), "x\"y");
        assert!(back["e"].is_null());
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let tmp = tempfile::tempdir().unwrap();
        let a = OutDir::open(tmp.path()).unwrap();
        assert!(OutDir::open(tmp.path()).is_err());
        drop(a);
        let mut b = OutDir::open(tmp.path()).unwrap();
        b.write("x.csv", "a\n1\n", "op", "none").unwrap();
        assert_eq!(fs::read_to_string(tmp.path().join("x.csv")).unwrap(), "a\n1\n");
        assert_eq!(b.entries[0].sha256.len(), 64);
    }
}
