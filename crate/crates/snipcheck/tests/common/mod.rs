//! Fixture corpus shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use serde::Deserialize;
use snipcheck::config::Config;
use snipcheck::frontend::Toolchain;
use snipcheck::pipeline::classify_all;
use snipcheck::store::read_ndjson;
use snipcheck_core::{Language, Snippet, StageStatus, UsabilityVerdict};

/// Reference statuses recorded by `fixtures/generate_corpus.py`.
#[derive(Clone, Debug, Deserialize)]
pub struct OracleEntry {
    pub snippet_id: String,
    pub language: Language,
    pub category: String,
    pub parse: Option<String>,
    pub run: Option<String>,
    pub source: Option<String>,
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn corpus() -> Vec<Snippet> {
    read_ndjson(&fixture("corpus.ndjson")).expect("corpus.ndjson")
}

pub fn oracle() -> Vec<OracleEntry> {
    read_ndjson(&fixture("oracle.ndjson")).expect("oracle.ndjson")
}

/// Same budget the oracle was recorded with.
pub fn test_config() -> Config {
    let mut config = Config::default();
    config.sandbox.timeout_ms = 2000;
    config
}

pub fn toolchain() -> &'static Toolchain {
    static TOOLCHAIN: OnceLock<Toolchain> = OnceLock::new();
    TOOLCHAIN.get_or_init(|| Toolchain::new(&test_config()).expect("toolchain"))
}

pub fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Verdicts for the whole corpus, computed once per test binary.
pub fn corpus_verdicts() -> &'static [UsabilityVerdict] {
    static VERDICTS: OnceLock<Vec<UsabilityVerdict>> = OnceLock::new();
    VERDICTS.get_or_init(|| classify_all(toolchain(), &corpus(), jobs(), 0).expect("classify"))
}

pub fn status_label(status: StageStatus) -> &'static str {
    match status {
        StageStatus::Pass => "pass",
        StageStatus::Fail => "fail",
        StageStatus::Timeout => "timeout",
        StageStatus::ToolUnavailable => "unavailable",
    }
}

/// Snippets whose parse or run status differs from the oracle, as
/// `(id, category, expected, found)`.
pub fn oracle_mismatches(verdicts: &[UsabilityVerdict], oracle: &[OracleEntry]) -> Vec<(String, String, String, String)> {
    let mut out = Vec::new();
    for (v, o) in verdicts.iter().zip(oracle) {
        assert_eq!(v.snippet_id, o.snippet_id, "verdicts and oracle out of step");
        let parse = status_label(v.parse.status).to_string();
        let expected_parse = o.parse.clone().unwrap_or_default();
        if parse != expected_parse {
            out.push((o.snippet_id.clone(), o.category.clone(), format!("parse {expected_parse}"), format!("parse {parse}")));
            continue;
        }
        if matches!(o.language, Language::Python | Language::JavaScript) {
            let run = v.second_stage.as_ref().map(|s| status_label(s.status).to_string());
            if run != o.run {
                out.push((o.snippet_id.clone(), o.category.clone(), format!("run {:?}", o.run), format!("run {run:?}")));
            }
        }
    }
    out
}
