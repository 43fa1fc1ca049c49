//! Artifact files. Every CSV starts with a `#` provenance line and every JSON
//! object carries a `provenance` field, so outputs can be traced to the exact
//! effective config and seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Provenance {
    pub fn new(config_sha256: String, seed: u64) -> Self {
        Provenance {
            config_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "# config_sha256={} seed={}\n",
            self.config_sha256, self.seed
        )
    }
}

/// Plain decimal where it is short, scientific otherwise.
pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub struct OutDir {
    dir: PathBuf,
    prov: Provenance,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, prov: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            prov,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// `header` is the column line without newline; `body` holds the rows.
    pub fn csv(&mut self, name: &str, header: &str, body: &str) -> Result<(), CliError> {
        let text = format!("{}{header}\n{body}", self.prov.csv_line());
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert(
                "provenance".into(),
                serde_json::to_value(&self.prov).expect("provenance serializes"),
            );
        }
        let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        self.write(name, contents)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(2.0 / 3.0), "0.6666666666666666");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(num(4.0), "4");
    }

    #[test]
    fn files_carry_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path(), Provenance::new("ab".into(), 3)).unwrap();
        out.csv("a.csv", "j,x_j", "1,0.5\n").unwrap();
        out.json("a.json", &serde_json::json!({"gamma": 3.0}))
            .unwrap();
        let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(csv, "# config_sha256=ab seed=3\nj,x_j\n1,0.5\n");
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
        assert_eq!(json["provenance"]["seed"], 3);
        assert_eq!(out.written().len(), 2);
    }
}
