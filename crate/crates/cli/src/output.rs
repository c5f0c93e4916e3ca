use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::Failure;

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// One CSV file: `#` comments, a header row and data rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub comments: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<&'static str>) -> Self {
        Self {
            name: name.to_string(),
            comments: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn render(&self, config: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# nclab-core {}", nclab_core::VERSION);
        let _ = writeln!(s, "# config_sha256 {}", config.hash());
        if let Some(m) = config.mode {
            let _ = writeln!(s, "# mode {}", m.name());
        }
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.render(config))
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
