//! Output directory handling and the run summary.

use std::path::{Path, PathBuf};

use nonloc_core::{Domain, GridFunction};
use serde_json::{json, Map, Value};

use crate::config::Emit;
use crate::CliError;

/// Artifacts of one command. The directory is created on first write, so a
/// command that fails validation leaves nothing behind.
pub struct Artifacts {
    dir: PathBuf,
    emit: Vec<Emit>,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, emit: &[Emit]) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            emit: emit.to_vec(),
            written: Vec::new(),
        }
    }

    pub fn wants(&self, kind: Emit) -> bool {
        self.emit.contains(&kind)
    }

    fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Run(format!("cannot create {}: {e}", self.dir.display())))?;
        self.written.push(name.to_string());
        Ok(self.dir.join(name))
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
    }

    pub fn grid_function(&mut self, name: &str, domain: &Domain, u: &GridFunction) -> Result<(), CliError> {
        let path = self.path(name)?;
        Ok(nonloc_core::io::write_grid_function(&path, domain, u)?)
    }

    pub fn with_path<T>(
        &mut self,
        name: &str,
        write: impl FnOnce(&Path) -> nonloc_core::Result<T>,
    ) -> Result<T, CliError> {
        let path = self.path(name)?;
        Ok(write(&path)?)
    }

    /// Writes `summary.json` and returns whether the command succeeded.
    pub fn summary(mut self, s: Summary) -> Result<bool, CliError> {
        let mut body = Map::new();
        body.insert("command".into(), json!(s.command));
        body.insert(s.status_key.into(), json!(s.ok));
        body.insert("key_metrics".into(), Value::Object(s.key_metrics));
        if let Some(e) = &s.error {
            body.insert("error".into(), json!(e));
        }
        body.insert("config".into(), s.config.clone());
        body.insert("config_hash".into(), json!(s.config_hash));
        let mut files = self.written.clone();
        files.push("summary.json".into());
        body.insert("artifacts".into(), json!(files));
        self.json("summary.json", &Value::Object(body))?;
        Ok(s.ok)
    }
}

pub struct Summary {
    pub command: String,
    /// `"converged"` for solvers, `"passed"` for checks.
    pub status_key: &'static str,
    pub ok: bool,
    pub key_metrics: Map<String, Value>,
    pub error: Option<String>,
    pub config: Value,
    pub config_hash: String,
}

/// Builds a metrics map from `(name, value)` pairs; non-finite values become null.
pub fn metrics<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Map<String, Value> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)))
        .collect()
}
