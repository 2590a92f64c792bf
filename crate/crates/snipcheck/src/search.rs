//! Search providers and the search-eval command.
//!
//! A fixture store is a directory of JSON records, one per rendered query,
//! named after the SHA-256 of the query string. Replay reads them; record
//! mode queries the live API and writes them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use snipcheck_core::search::{
    evaluate_topk, render_query, select_queries, QueryResults, QueryTemplate, SearchEvaluation, UsabilityTally,
};
use snipcheck_core::{Language, Snippet, UsabilityVerdict};

use crate::config::{Config, ProviderKind, SearchConfig};
use crate::dump::PairRecord;
use crate::pipeline::{PipelineError, Result};
use crate::report::{render_search, Format};
use crate::run::{timestamp, RunDir, PAIRS, SEARCH_CSV, SEARCH_JSON, SNIPPETS, VERDICTS};
use crate::store::{read_json, read_ndjson, sha256_hex, write_json};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("no recorded results for query {0:?}")]
    NotRecorded(String),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("search request failed: {0}")]
    Request(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait SearchProvider {
    /// At most `k` result URLs in rank order.
    fn search(&self, rendered: &str, k: usize) -> std::result::Result<Vec<String>, SearchError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub query: String,
    pub urls: Vec<String>,
}

pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn path_for(&self, rendered: &str) -> PathBuf {
        self.dir.join(format!("{}.json", sha256_hex(rendered.as_bytes())))
    }

    pub fn save(&self, record: &FixtureRecord) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        write_json(&self.path_for(&record.query), record)
    }
}

impl SearchProvider for FixtureStore {
    fn search(&self, rendered: &str, k: usize) -> std::result::Result<Vec<String>, SearchError> {
        let path = self.path_for(rendered);
        if !path.is_file() {
            return Err(SearchError::NotRecorded(rendered.to_string()));
        }
        let record: FixtureRecord = read_json(&path)?;
        if record.query != rendered {
            return Err(SearchError::NotRecorded(rendered.to_string()));
        }
        Ok(record.urls.into_iter().take(k).collect())
    }
}

/// Custom-search JSON API client with a minimum gap between requests.
pub struct LiveProvider {
    agent: ureq::Agent,
    endpoint: String,
    key: String,
    engine_id: String,
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

#[derive(Deserialize)]
struct ApiResponse {
    #[serde(default)]
    items: Vec<ApiItem>,
}

#[derive(Deserialize)]
struct ApiItem {
    link: String,
}

/// The API returns at most this many results per request.
const PAGE: usize = 10;

impl LiveProvider {
    pub fn from_config(config: &SearchConfig) -> std::result::Result<Self, SearchError> {
        let var = |name: &str| std::env::var(name).map_err(|_| SearchError::MissingCredential(name.to_string()));
        Ok(LiveProvider {
            agent: ureq::Agent::new_with_defaults(),
            endpoint: config.endpoint.clone(),
            key: var(&config.api_key_env)?,
            engine_id: var(&config.engine_id_env)?,
            min_interval: Duration::from_millis(config.min_interval_ms),
            last: Mutex::new(None),
        })
    }

    fn pace(&self) {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(at) = *last {
            let since = at.elapsed();
            if since < self.min_interval {
                std::thread::sleep(self.min_interval - since);
            }
        }
        *last = Some(Instant::now());
    }
}

impl SearchProvider for LiveProvider {
    fn search(&self, rendered: &str, k: usize) -> std::result::Result<Vec<String>, SearchError> {
        let mut urls = Vec::new();
        let mut start = 1;
        while urls.len() < k {
            self.pace();
            let num = (k - urls.len()).min(PAGE);
            let response: ApiResponse = self
                .agent
                .get(&self.endpoint)
                .query("key", &self.key)
                .query("cx", &self.engine_id)
                .query("q", rendered)
                .query("num", num.to_string())
                .query("start", start.to_string())
                .call()
                .map_err(|e| SearchError::Request(e.to_string()))?
                .body_mut()
                .read_json()
                .map_err(|e| SearchError::Request(e.to_string()))?;
            let got = response.items.len();
            urls.extend(response.items.into_iter().map(|i| i.link));
            if got < num {
                break;
            }
            start += got;
        }
        urls.truncate(k);
        Ok(urls)
    }
}

/// Live queries, each saved to the fixture store as it arrives.
pub struct RecordingProvider {
    pub live: LiveProvider,
    pub store: FixtureStore,
}

impl SearchProvider for RecordingProvider {
    fn search(&self, rendered: &str, k: usize) -> std::result::Result<Vec<String>, SearchError> {
        let urls = self.live.search(rendered, k)?;
        self.store.save(&FixtureRecord {
            query: rendered.to_string(),
            urls: urls.clone(),
        })?;
        Ok(urls)
    }
}

/// Provider named by the configuration. Relative fixture paths resolve
/// against `base`.
pub fn provider_from_config(config: &SearchConfig, base: &Path) -> std::result::Result<Box<dyn SearchProvider>, SearchError> {
    let dir = if config.fixture_dir.is_absolute() {
        config.fixture_dir.clone()
    } else {
        base.join(&config.fixture_dir)
    };
    Ok(match config.provider {
        ProviderKind::Fixture => Box::new(FixtureStore::new(dir)),
        ProviderKind::Live => Box::new(LiveProvider::from_config(config)?),
        ProviderKind::Record => Box::new(RecordingProvider {
            live: LiveProvider::from_config(config)?,
            store: FixtureStore::new(dir),
        }),
    })
}

pub struct SearchOutcome {
    pub evaluation: SearchEvaluation,
    /// Fewer eligible questions than requested queries.
    pub short: bool,
    /// Query id and reason for every failed query.
    pub failures: Vec<(String, String)>,
}

/// Runs the configured queries and scores the results against the corpus.
pub fn evaluate(
    search: &SearchConfig,
    tag_map: &snipcheck_core::tags::TagMap,
    pairs: &[PairRecord],
    snippets: &[Snippet],
    verdicts: &[UsabilityVerdict],
    provider: &dyn SearchProvider,
) -> Result<SearchOutcome> {
    let language: Language = search
        .language
        .parse()
        .map_err(|e: snipcheck_core::Error| PipelineError::Invalid(e.to_string()))?;
    let mut template = QueryTemplate::for_language(language);
    template.site_filter = search.site.clone();
    template.keyword = search.keyword.clone();
    template.date_range = search.date_range;

    let pairs: Vec<&PairRecord> = pairs.iter().filter(|p| p.language == language).collect();
    let (queries, short) = select_queries(pairs.iter().map(|p| &p.question), language, tag_map, search.queries, &template);

    let mut failures = Vec::new();
    let mut results = Vec::with_capacity(queries.len());
    for query in queries {
        let outcome = render_query(&query)
            .map_err(|e| SearchError::Request(e.to_string()))
            .and_then(|rendered| provider.search(&rendered, search.k));
        match outcome {
            Ok(urls) => results.push(QueryResults { query, urls, failed: false }),
            Err(e) => {
                failures.push((query.query_id.clone(), e.to_string()));
                results.push(QueryResults {
                    query,
                    urls: Vec::new(),
                    failed: true,
                });
            }
        }
    }

    let in_corpus: HashSet<u64> = pairs.iter().map(|p| p.question.id).collect();
    let verdict_of: HashMap<&str, &UsabilityVerdict> = verdicts.iter().map(|v| (v.snippet_id.as_str(), v)).collect();
    let mut by_question: BTreeMap<u64, Vec<(&Snippet, &UsabilityVerdict)>> = BTreeMap::new();
    for s in snippets.iter().filter(|s| s.language == language) {
        if let Some(v) = verdict_of.get(s.snippet_id.as_str()) {
            by_question.entry(s.question_id).or_default().push((s, v));
        }
    }
    let policy = search.policy;
    let evaluation = evaluate_topk(
        &results,
        search.k,
        |id| in_corpus.contains(&id),
        |id| UsabilityTally::for_answer(by_question.get(&id).into_iter().flatten().copied(), policy),
    );
    Ok(SearchOutcome {
        evaluation,
        short,
        failures,
    })
}

pub fn search_eval(run: &RunDir, config: &Config, provider: &dyn SearchProvider, command: &str) -> Result<SearchOutcome> {
    let started_at = timestamp();
    let pairs: Vec<PairRecord> = read_ndjson(&run.require(PAIRS)?)?;
    let snippets: Vec<Snippet> = read_ndjson(&run.require(SNIPPETS)?)?;
    let verdicts: Vec<UsabilityVerdict> = read_ndjson(&run.require(VERDICTS)?)?;
    let outcome = evaluate(&config.search, &config.tags, &pairs, &snippets, &verdicts, provider)?;
    write_json(&run.path(SEARCH_JSON), &outcome.evaluation)?;
    std::fs::write(run.path(SEARCH_CSV), render_search(&outcome.evaluation, Format::Csv))?;

    let e = &outcome.evaluation;
    let counts = BTreeMap::from([
        ("queries".to_string(), e.queries.len() as u64),
        ("failed_queries".to_string(), u64::from(e.failed_queries)),
        ("top1_units".to_string(), e.top1.resolved()),
        ("topk_units".to_string(), e.topk.resolved()),
    ]);
    let mut manifest = run.load_manifest()?;
    manifest.stages.insert(
        "search-eval".into(),
        crate::run::StageRecord {
            command: command.to_string(),
            inputs: run.digests(&[PAIRS, SNIPPETS, VERDICTS])?,
            outputs: run.digests(&[SEARCH_JSON, SEARCH_CSV])?,
            started_at,
            finished_at: timestamp(),
            counts,
        },
    );
    run.save_manifest(&manifest)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let record = FixtureRecord {
            query: "a b site:stackoverflow.com".into(),
            urls: vec!["u1".into(), "u2".into(), "u3".into()],
        };
        store.save(&record).unwrap();
        assert_eq!(store.search(&record.query, 10).unwrap(), record.urls);
        assert_eq!(store.search(&record.query, 1).unwrap(), vec!["u1".to_string()]);
        assert!(matches!(store.search("other", 10), Err(SearchError::NotRecorded(_))));
    }

    #[test]
    fn live_provider_needs_credentials() {
        let config = SearchConfig {
            api_key_env: "SNIPCHECK_TEST_UNSET_KEY".into(),
            ..SearchConfig::default()
        };
        assert!(matches!(LiveProvider::from_config(&config), Err(SearchError::MissingCredential(_))));
    }
}
