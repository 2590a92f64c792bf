//! Run directory layout and the manifest that ties its files together.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::store::{file_sha256, read_json, write_json};

pub const MANIFEST: &str = "manifest.json";
pub const SNIPPETS: &str = "snippets.ndjson";
pub const PAIRS: &str = "pairs.ndjson";
pub const VERDICTS: &str = "verdicts.ndjson";
pub const REPAIRS: &str = "repairs.ndjson";
pub const REPAIR_DIFFS: &str = "repairs.diff";
pub const ERRORS_CSV: &str = "errors.csv";
pub const ERRORS_JSON: &str = "errors.json";
pub const FEATURES_CSV: &str = "features.csv";
pub const ANNOTATIONS_CSV: &str = "annotations.csv";
pub const ANNOTATED_CSV: &str = "features_annotated.csv";
pub const SAMPLE_JSON: &str = "sample.json";
pub const SEARCH_CSV: &str = "search.csv";
pub const SEARCH_JSON: &str = "search.json";
pub const REPORT_DIR: &str = "report";

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn create(root: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = RunDir::new(root);
        std::fs::create_dir_all(&dir.root)?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    /// Fails with a message naming the command that produces `name`.
    pub fn require(&self, name: &str) -> Result<PathBuf, MissingStage> {
        let path = self.path(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(MissingStage {
                file: name.to_string(),
                command: producer(name).to_string(),
            })
        }
    }

    pub fn load_manifest(&self) -> io::Result<RunManifest> {
        let path = self.path(MANIFEST);
        if path.is_file() {
            read_json(&path)
        } else {
            Ok(RunManifest::default())
        }
    }

    pub fn save_manifest(&self, manifest: &RunManifest) -> io::Result<()> {
        write_json(&self.path(MANIFEST), manifest)
    }

    /// Digests of the named files that exist, keyed by name.
    pub fn digests(&self, names: &[&str]) -> io::Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for name in names {
            let path = self.path(name);
            if path.is_file() {
                out.insert(name.to_string(), file_sha256(&path)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file} is missing; run `snipcheck {command}` first")]
pub struct MissingStage {
    pub file: String,
    pub command: String,
}

fn producer(name: &str) -> &'static str {
    match name {
        SNIPPETS | PAIRS => "ingest",
        VERDICTS => "classify",
        REPAIRS | REPAIR_DIFFS => "repair",
        ERRORS_CSV | ERRORS_JSON => "errors",
        FEATURES_CSV | ANNOTATIONS_CSV => "features",
        SAMPLE_JSON => "sample",
        SEARCH_CSV | SEARCH_JSON => "search-eval",
        _ => "ingest",
    }
}

/// Reproducibility record for a run directory. Each command adds or
/// replaces its own entry in `stages`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_versions: Option<serde_json::Value>,
    #[serde(default)]
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub command: String,
    /// Input path (or run-relative name) to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Run-relative output name to content hash.
    pub outputs: BTreeMap<String, String>,
    pub started_at: u64,
    pub finished_at: u64,
    pub counts: BTreeMap<String, u64>,
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when it is set, so that
/// reruns can be made byte-identical.
pub fn timestamp() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return fixed;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
