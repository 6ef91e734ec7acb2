//! Artifacts are staged in memory and written only after a command succeeds.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub struct Artifacts {
    dir: PathBuf,
    header: Value,
    staged: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize) -> Self {
        let header = json!({
            "tool": "mtbp",
            "version": mtbp_core::VERSION,
            "command": command,
            "config": serde_json::to_value(config).expect("config serializes"),
        });
        Self { dir: dir.to_path_buf(), header, staged: Vec::new() }
    }

    pub fn provenance(&self) -> Value {
        self.header.clone()
    }

    /// The provenance object with `result` attached, as pretty JSON.
    pub fn json_text(&self, result: &impl Serialize) -> String {
        let mut doc = self.header.clone();
        doc["result"] = serde_json::to_value(result).expect("result serializes");
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        text
    }

    pub fn json(&mut self, name: &str, result: &impl Serialize) -> String {
        let text = self.json_text(result);
        self.raw(name, text.clone().into_bytes());
        text
    }

    /// CSV preceded by `# key: value` provenance lines.
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        for key in ["tool", "version", "command"] {
            buf.extend(format!("# {key}: {}\n", self.header[key].as_str().unwrap_or_default()).bytes());
        }
        buf.extend(format!("# config: {}\n", self.header["config"]).bytes());
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header).map_err(CliError::compute)?;
        for r in rows {
            w.write_record(r).map_err(CliError::compute)?;
        }
        let buf = w.into_inner().map_err(|e| CliError::compute(e.to_string()))?;
        self.raw(name, buf);
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.staged.push((name.to_string(), bytes));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::input(format!("{}: {e}", self.dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in self.staged {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::compute(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path(), "demo", &json!({"seed": 7}));
        a.csv("t.csv", &["n".into(), "x".into()], &[vec!["0".into(), fmt(0.5)]]).unwrap();
        let written = a.commit().unwrap();
        let text = std::fs::read_to_string(&written[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# tool: mtbp");
        assert_eq!(lines[2], "# command: demo");
        assert_eq!(lines[3], r#"# config: {"seed":7}"#);
        assert_eq!(&lines[4..], ["n,x", "0,5e-1"]);
    }

    #[test]
    fn nothing_lands_before_commit() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut a = Artifacts::new(&out, "demo", &json!({}));
        let text = a.json("r.json", &json!({"ok": true}));
        assert!(text.ends_with("}\n"));
        assert!(!out.exists());
        drop(a);
        assert!(!out.exists());
    }
}
