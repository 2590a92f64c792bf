//! The run-directory commands, minus argument parsing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use snipcheck_core::classify::{classify_snippet, StageChecker};
use snipcheck_core::features::{
    compute_features, multiline_runnable_subset, sample_stage, stage_population, AnswerQuality, Annotation,
    FeatureVector, SampleCandidate, SampleStage,
};
use snipcheck_core::rates::{aggregate_rates, RateSummary, Variant};
use snipcheck_core::repair::repair_pipeline;
use snipcheck_core::taxonomy::{records_for_verdict, ErrorHistogram, Normalizer, TemplateCounts};
use snipcheck_core::{Language, Ratio, RepairKind, RepairOutcome, Snippet, Stage, UsabilityVerdict};

use crate::config::Config;
use crate::dump::{self, IngestOptions, IngestSummary, PairRecord};
use crate::run::*;
use crate::store::{file_sha256, read_ndjson, write_json, write_ndjson, NdjsonWriter};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Missing(#[from] MissingStage),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn invalid(msg: impl Into<String>) -> PipelineError {
    PipelineError::Invalid(msg.into())
}

fn csv_error(e: csv::Error) -> PipelineError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => PipelineError::Io(e),
        other => invalid(format!("csv: {other:?}")),
    }
}

fn record_stage(
    run: &RunDir,
    name: &str,
    command: &str,
    inputs: BTreeMap<String, String>,
    outputs: &[&str],
    started_at: u64,
    counts: BTreeMap<String, u64>,
) -> Result<()> {
    let mut manifest = run.load_manifest()?;
    manifest.stages.insert(
        name.to_string(),
        StageRecord {
            command: command.to_string(),
            inputs,
            outputs: run.digests(outputs)?,
            started_at,
            finished_at: timestamp(),
            counts,
        },
    );
    run.save_manifest(&manifest)?;
    Ok(())
}

// Ingest ----------------------------------------------------------------------

/// Extracts snippets from a posts dump into `run`. Starts a fresh manifest
/// whose run id is derived from the inputs and configuration.
pub fn ingest(
    run: &RunDir,
    posts: &Path,
    users: Option<&Path>,
    config: &Config,
    languages: &[Language],
    command: &str,
) -> Result<IngestSummary> {
    let started_at = timestamp();
    let mut inputs = BTreeMap::new();
    inputs.insert(posts.display().to_string(), file_sha256(posts)?);
    let reputations = match users {
        Some(path) => {
            inputs.insert(path.display().to_string(), file_sha256(path)?);
            Some(dump::read_reputations(path)?)
        }
        None => None,
    };
    let options = IngestOptions {
        tag_map: config.tags.clone(),
        languages: languages.to_vec(),
        reputations,
    };
    let mut writer = NdjsonWriter::create(&run.path(SNIPPETS))?;
    let (pairs, summary) = dump::ingest(|| File::open(posts).map(BufReader::new), &options, &mut writer)?;
    writer.finish()?;
    write_ndjson(&run.path(PAIRS), &pairs)?;

    let mut id_material = String::new();
    for (path, digest) in &inputs {
        id_material.push_str(&format!("{path}\0{digest}\0"));
    }
    id_material.push_str(&config.to_toml());
    for language in languages {
        id_material.push_str(language.id());
    }
    let manifest = RunManifest {
        run_id: crate::store::sha256_hex(id_material.as_bytes())[..16].to_string(),
        ..RunManifest::default()
    };
    run.save_manifest(&manifest)?;

    let mut counts: BTreeMap<String, u64> = summary
        .snippets
        .iter()
        .map(|(lang, n)| (format!("snippets.{}", lang.id()), *n))
        .collect();
    counts.insert("pairs".into(), summary.pairs);
    counts.insert("rows_skipped".into(), summary.dump.skipped);
    record_stage(run, "ingest", command, inputs, &[SNIPPETS, PAIRS], started_at, counts)?;
    Ok(summary)
}

// Classify --------------------------------------------------------------------

pub struct ClassifySummary {
    pub verdicts: Vec<UsabilityVerdict>,
    pub rates: Vec<RateSummary>,
    /// Languages with snippets but no working parser.
    pub skipped_languages: Vec<Language>,
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| invalid(e.to_string()))
}

/// Classifies `snippets` on `jobs` threads. Output order follows input order.
pub fn classify_all<C>(checker: &C, snippets: &[Snippet], jobs: usize, classified_at: u64) -> Result<Vec<UsabilityVerdict>>
where
    C: StageChecker + Sync + ?Sized,
{
    let pool = thread_pool(jobs)?;
    Ok(pool.install(|| {
        snippets
            .par_iter()
            .map(|s| classify_snippet(checker, s, classified_at))
            .collect()
    }))
}

pub fn classify<C>(run: &RunDir, checker: &C, jobs: usize, command: &str) -> Result<ClassifySummary>
where
    C: StageChecker + Sync + ?Sized,
{
    let started_at = timestamp();
    let snippets: Vec<Snippet> = read_ndjson(&run.require(SNIPPETS)?)?;
    let verdicts = classify_all(checker, &snippets, jobs, started_at)?;
    write_ndjson(&run.path(VERDICTS), &verdicts)?;

    let rates = aggregate_rates(&verdicts, Variant::All).map_err(|e| invalid(e.to_string()))?;
    let skipped_languages = rates
        .iter()
        .filter(|r| r.total == 0 && r.excluded_unavailable > 0)
        .map(|r| r.language)
        .collect();

    let mut manifest = run.load_manifest()?;
    manifest.config_fingerprint = Some(checker.fingerprint().to_string());
    run.save_manifest(&manifest)?;

    let mut counts = BTreeMap::new();
    for r in &rates {
        counts.insert(format!("total.{}", r.language.id()), r.total);
        counts.insert(format!("parsable.{}", r.language.id()), r.parsable.count);
        counts.insert(format!("{}.{}", r.second_stage_label.id(), r.language.id()), r.second_stage.count);
        counts.insert(format!("unavailable.{}", r.language.id()), r.excluded_unavailable);
    }
    let inputs = run.digests(&[SNIPPETS])?;
    record_stage(run, "classify", command, inputs, &[VERDICTS], started_at, counts)?;
    Ok(ClassifySummary {
        verdicts,
        rates,
        skipped_languages,
    })
}

/// Verdicts from the run, checked against the current toolchain.
fn load_verdicts(run: &RunDir, fingerprint: Option<&str>) -> Result<Vec<UsabilityVerdict>> {
    let verdicts: Vec<UsabilityVerdict> = read_ndjson(&run.require(VERDICTS)?)?;
    if let (Some(expected), Some(first)) = (fingerprint, verdicts.first()) {
        if first.config_fingerprint != expected {
            return Err(invalid(
                "verdicts were produced with a different configuration or toolchain; run `snipcheck classify` again",
            ));
        }
    }
    Ok(verdicts)
}

// Repair ----------------------------------------------------------------------

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCounts {
    pub snippets: u64,
    pub parsable_before: u64,
    pub parsable_after: u64,
    pub compilable_before: u64,
    pub compilable_after: u64,
    /// Keyed by the repairs applied, e.g. `class_wrap+semicolon`.
    pub repairs_applied: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub languages: BTreeMap<Language, RepairCounts>,
}

impl RepairReport {
    pub fn from_outcomes<'a, I: IntoIterator<Item = &'a RepairOutcome>>(outcomes: I) -> Self {
        let mut report = RepairReport::default();
        for o in outcomes {
            let c = report.languages.entry(o.before.language).or_default();
            c.snippets += 1;
            c.parsable_before += u64::from(o.before.parsable());
            c.parsable_after += u64::from(o.after.parsable());
            c.compilable_before += u64::from(o.before.second_stage_passed());
            c.compilable_after += u64::from(o.after.second_stage_passed());
            *c.repairs_applied.entry(repair_key(&o.repairs_applied)).or_insert(0) += 1;
        }
        report
    }
}

fn repair_key(applied: &[RepairKind]) -> String {
    if applied.is_empty() {
        return "none".into();
    }
    applied.iter().map(|k| k.id()).collect::<Vec<_>>().join("+")
}

pub fn repair_all<C>(
    checker: &C,
    snippets: &[Snippet],
    verdicts: &[UsabilityVerdict],
    jobs: usize,
    classified_at: u64,
) -> Result<Vec<RepairOutcome>>
where
    C: StageChecker + Sync + ?Sized,
{
    let by_id: HashMap<&str, &UsabilityVerdict> = verdicts.iter().map(|v| (v.snippet_id.as_str(), v)).collect();
    let targets: Vec<(&Snippet, Option<UsabilityVerdict>)> = snippets
        .iter()
        .filter(|s| matches!(s.language, Language::Java | Language::CSharp))
        .map(|s| (s, by_id.get(s.snippet_id.as_str()).map(|v| (*v).clone())))
        .collect();
    let pool = thread_pool(jobs)?;
    Ok(pool.install(|| {
        targets
            .into_par_iter()
            .map(|(s, before)| repair_pipeline(checker, s, before, classified_at))
            .collect()
    }))
}

/// Unified diffs of every snippet the repairs changed.
pub fn repair_diffs(snippets: &[Snippet], outcomes: &[RepairOutcome]) -> String {
    let by_id: HashMap<&str, &Snippet> = snippets.iter().map(|s| (s.snippet_id.as_str(), s)).collect();
    let mut out = String::new();
    for o in outcomes.iter().filter(|o| !o.repairs_applied.is_empty()) {
        let Some(snippet) = by_id.get(o.snippet_id.as_str()) else { continue };
        let before = with_newline(&snippet.text);
        let after = with_newline(&o.repaired_text);
        let diff = similar::TextDiff::from_lines(&before, &after);
        out.push_str(
            &diff
                .unified_diff()
                .context_radius(3)
                .header(&format!("a/{}", o.snippet_id), &format!("b/{}", o.snippet_id))
                .to_string(),
        );
    }
    out
}

fn with_newline(text: &str) -> String {
    if text.ends_with('\n') {
        text.to_string()
    } else {
        format!("{text}\n")
    }
}

pub fn repair<C>(run: &RunDir, checker: &C, jobs: usize, diffs: bool, command: &str) -> Result<RepairReport>
where
    C: StageChecker + Sync + ?Sized,
{
    let started_at = timestamp();
    let snippets: Vec<Snippet> = read_ndjson(&run.require(SNIPPETS)?)?;
    let verdicts = load_verdicts(run, Some(checker.fingerprint()))?;
    let outcomes = repair_all(checker, &snippets, &verdicts, jobs, started_at)?;
    write_ndjson(&run.path(REPAIRS), &outcomes)?;
    let mut outputs = vec![REPAIRS];
    if diffs {
        std::fs::write(run.path(REPAIR_DIFFS), repair_diffs(&snippets, &outcomes))?;
        outputs.push(REPAIR_DIFFS);
    }
    let report = RepairReport::from_outcomes(&outcomes);
    let mut counts = BTreeMap::new();
    for (lang, c) in &report.languages {
        counts.insert(format!("parsable_before.{}", lang.id()), c.parsable_before);
        counts.insert(format!("parsable_after.{}", lang.id()), c.parsable_after);
    }
    let inputs = run.digests(&[SNIPPETS, VERDICTS])?;
    record_stage(run, "repair", command, inputs, &outputs, started_at, counts)?;
    Ok(report)
}

// Errors ----------------------------------------------------------------------

pub fn normalizer(config: &Config) -> Normalizer {
    let mut normalizer = Normalizer::default();
    normalizer.rules.extend(config.taxonomy.extra_rules.iter().cloned());
    normalizer
}

/// Parse and second-stage histograms for every language, in a fixed order.
pub fn error_histograms(normalizer: &Normalizer, verdicts: &[UsabilityVerdict], top_n: usize) -> Vec<ErrorHistogram> {
    let mut counts: BTreeMap<(Language, Stage), TemplateCounts> = BTreeMap::new();
    for language in Language::ALL {
        counts.insert((language, Stage::Parse), TemplateCounts::default());
        counts.insert((language, language.second_stage()), TemplateCounts::default());
    }
    for verdict in verdicts {
        for record in records_for_verdict(normalizer, verdict) {
            counts.entry((record.language, record.stage)).or_default().add(&record.template);
        }
    }
    let mut out: Vec<ErrorHistogram> = Language::ALL
        .iter()
        .flat_map(|l| [(*l, Stage::Parse), (*l, l.second_stage())])
        .map(|key| counts[&key].histogram(key.0, key.1, top_n))
        .collect();
    out.sort_by_key(|h| (Language::ALL.iter().position(|l| *l == h.language), h.stage));
    out
}

pub fn write_histograms_csv<W: io::Write>(out: W, histograms: &[ErrorHistogram]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["language", "stage", "template", "count", "percentage"]).map_err(csv_error)?;
    for h in histograms {
        for e in &h.entries {
            w.write_record([
                h.language.id(),
                h.stage.id(),
                e.template.as_str(),
                &e.count.to_string(),
                e.percentage.to_string().trim_end_matches('%'),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn errors(run: &RunDir, config: &Config, command: &str) -> Result<Vec<ErrorHistogram>> {
    let started_at = timestamp();
    let verdicts = load_verdicts(run, None)?;
    let histograms = error_histograms(&normalizer(config), &verdicts, config.taxonomy.top_n);
    write_histograms_csv(File::create(run.path(ERRORS_CSV))?, &histograms)?;
    write_json(&run.path(ERRORS_JSON), &histograms)?;
    let counts = histograms
        .iter()
        .map(|h| (format!("{}.{}", h.language.id(), h.stage.id()), h.total))
        .collect();
    let inputs = run.digests(&[VERDICTS])?;
    record_stage(run, "errors", command, inputs, &[ERRORS_CSV, ERRORS_JSON], started_at, counts)?;
    Ok(histograms)
}

// Features ----------------------------------------------------------------------

/// Flat CSV form of a feature vector. Tags are space-separated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub snippet_id: String,
    pub language: Language,
    pub question_votes: i64,
    pub answer_votes: i64,
    pub total_answers: u32,
    pub accepted_is_best: bool,
    pub questioner_reputation: Option<i64>,
    pub answerer_reputation: Option<i64>,
    pub single_word: bool,
    pub single_line: bool,
    pub has_surrounding_text: bool,
    pub comment_count: u32,
    pub tags: String,
}

impl FeatureRow {
    fn new(language: Language, f: FeatureVector) -> Self {
        FeatureRow {
            snippet_id: f.snippet_id,
            language,
            question_votes: f.question_votes,
            answer_votes: f.answer_votes,
            total_answers: f.total_answers,
            accepted_is_best: f.accepted_is_best,
            questioner_reputation: f.questioner_reputation,
            answerer_reputation: f.answerer_reputation,
            single_word: f.single_word,
            single_line: f.single_line,
            has_surrounding_text: f.has_surrounding_text,
            comment_count: f.comment_count,
            tags: f.tags.join(" "),
        }
    }
}

/// Feature rows for every snippet with a known accepted pair, in snippet order.
pub fn feature_rows(pairs: &[PairRecord], snippets: &[Snippet]) -> Vec<FeatureRow> {
    let by_answer: HashMap<u64, &PairRecord> = pairs.iter().map(|p| (p.answer.id, p)).collect();
    snippets
        .iter()
        .filter_map(|s| {
            let pair = by_answer.get(&s.answer_id)?;
            let mut f = compute_features(
                &pair.question,
                &pair.answer,
                s,
                &pair.siblings,
                pair.answer.comment_count.unwrap_or(0),
            );
            // Pair records carry no bodies; the flag was taken at ingest.
            f.has_surrounding_text = pair.has_surrounding_text;
            Some(FeatureRow::new(s.language, f))
        })
        .collect()
}

/// CSV form of the human-judged features. Empty cells are unanswered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub snippet_id: String,
    pub title_summarizes: Option<bool>,
    pub description_clear: Option<bool>,
    pub specific_coding_question: Option<bool>,
    pub answers_correct_and_complete: Option<AnswerQuality>,
    pub questioner_compliment: Option<bool>,
    pub annotator: String,
}

impl From<Annotation> for AnnotationRow {
    fn from(a: Annotation) -> Self {
        AnnotationRow {
            snippet_id: a.snippet_id,
            title_summarizes: a.title_summarizes,
            description_clear: a.description_clear,
            specific_coding_question: a.specific_coding_question,
            answers_correct_and_complete: a.answers_correct_and_complete,
            questioner_compliment: a.questioner_compliment,
            annotator: a.annotator,
        }
    }
}

impl From<AnnotationRow> for Annotation {
    fn from(r: AnnotationRow) -> Self {
        Annotation {
            snippet_id: r.snippet_id,
            title_summarizes: r.title_summarizes,
            description_clear: r.description_clear,
            specific_coding_question: r.specific_coding_question,
            answers_correct_and_complete: r.answers_correct_and_complete,
            questioner_compliment: r.questioner_compliment,
            annotator: r.annotator,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRow {
    pub snippet_id: String,
    pub language: Language,
    pub question_votes: i64,
    pub answer_votes: i64,
    pub total_answers: u32,
    pub accepted_is_best: bool,
    pub questioner_reputation: Option<i64>,
    pub answerer_reputation: Option<i64>,
    pub title_summarizes: Option<bool>,
    pub description_clear: Option<bool>,
    pub specific_coding_question: Option<bool>,
    pub answers_correct_and_complete: Option<AnswerQuality>,
    pub single_word: bool,
    pub single_line: bool,
    pub has_surrounding_text: bool,
    pub comment_count: u32,
    pub questioner_compliment: Option<bool>,
    pub tags: String,
    pub annotator: String,
}

pub fn write_csv<T: Serialize, W: io::Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut rows = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        rows.push(row.map_err(|e| invalid(format!("{}: row {}: {e}", path.display(), i + 2)))?);
    }
    Ok(rows)
}

/// Joins filled-in annotations onto feature rows. Every annotation must name
/// a known snippet, at most once.
pub fn merge_annotations(features: &[FeatureRow], annotations: &[AnnotationRow]) -> Result<Vec<AnnotatedRow>> {
    let known: HashSet<&str> = features.iter().map(|f| f.snippet_id.as_str()).collect();
    let mut by_id: HashMap<&str, &AnnotationRow> = HashMap::new();
    for (i, a) in annotations.iter().enumerate() {
        if !known.contains(a.snippet_id.as_str()) {
            return Err(invalid(format!("annotation row {}: unknown snippet {}", i + 2, a.snippet_id)));
        }
        if by_id.insert(a.snippet_id.as_str(), a).is_some() {
            return Err(invalid(format!("annotation row {}: duplicate snippet {}", i + 2, a.snippet_id)));
        }
    }
    Ok(features
        .iter()
        .filter_map(|f| {
            let a = by_id.get(f.snippet_id.as_str())?;
            Some(AnnotatedRow {
                snippet_id: f.snippet_id.clone(),
                language: f.language,
                question_votes: f.question_votes,
                answer_votes: f.answer_votes,
                total_answers: f.total_answers,
                accepted_is_best: f.accepted_is_best,
                questioner_reputation: f.questioner_reputation,
                answerer_reputation: f.answerer_reputation,
                title_summarizes: a.title_summarizes,
                description_clear: a.description_clear,
                specific_coding_question: a.specific_coding_question,
                answers_correct_and_complete: a.answers_correct_and_complete,
                single_word: f.single_word,
                single_line: f.single_line,
                has_surrounding_text: f.has_surrounding_text,
                comment_count: f.comment_count,
                questioner_compliment: a.questioner_compliment,
                tags: f.tags.clone(),
                annotator: a.annotator.clone(),
            })
        })
        .collect())
}

/// Writes `features.csv`; with `annotations`, also merges them into
/// `features_annotated.csv`.
pub fn features(run: &RunDir, annotations: Option<&Path>, command: &str) -> Result<usize> {
    let started_at = timestamp();
    let pairs: Vec<PairRecord> = read_ndjson(&run.require(PAIRS)?)?;
    let snippets: Vec<Snippet> = read_ndjson(&run.require(SNIPPETS)?)?;
    let rows = feature_rows(&pairs, &snippets);
    write_csv(File::create(run.path(FEATURES_CSV))?, &rows)?;
    let mut inputs = run.digests(&[PAIRS, SNIPPETS])?;
    let mut outputs = vec![FEATURES_CSV];
    let mut counts = BTreeMap::from([("features".to_string(), rows.len() as u64)]);
    if let Some(path) = annotations {
        inputs.insert(path.display().to_string(), file_sha256(path)?);
        let filled: Vec<AnnotationRow> = read_csv(path)?;
        let merged = merge_annotations(&rows, &filled)?;
        write_csv(File::create(run.path(ANNOTATED_CSV))?, &merged)?;
        outputs.push(ANNOTATED_CSV);
        counts.insert("annotated".into(), merged.len() as u64);
    }
    record_stage(run, "features", command, inputs, &outputs, started_at, counts)?;
    Ok(rows.len())
}

// Sample ------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSample {
    pub stage: SampleStage,
    pub population: u64,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub language: Language,
    pub seed: u64,
    pub n: usize,
    /// Runnable snippets that are neither single-word nor single-line.
    pub multiline_runnable: Ratio,
    pub stages: Vec<StageSample>,
}

/// Samples `n` runnable snippets of `language` for each review round and
/// writes the blank annotation sheet for all sampled ids.
pub fn sample(run: &RunDir, language: Language, n: usize, seed: u64, command: &str) -> Result<SampleManifest> {
    let started_at = timestamp();
    let snippets: Vec<Snippet> = read_ndjson(&run.require(SNIPPETS)?)?;
    let verdicts = load_verdicts(run, None)?;
    let by_id: HashMap<&str, &UsabilityVerdict> = verdicts.iter().map(|v| (v.snippet_id.as_str(), v)).collect();
    let candidates: Vec<SampleCandidate> = snippets
        .iter()
        .filter(|s| s.language == language)
        .filter_map(|s| by_id.get(s.snippet_id.as_str()).map(|v| SampleCandidate::new(s, v)))
        .collect();
    let multiline_runnable = multiline_runnable_subset(&candidates);
    let runnable: Vec<SampleCandidate> = candidates.into_iter().filter(|c| c.runnable).collect();
    let stages = [SampleStage::All, SampleStage::NoSingleWord, SampleStage::NoSingleWordNoSingleLine]
        .into_iter()
        .map(|stage| StageSample {
            stage,
            population: stage_population(&runnable, stage).len() as u64,
            ids: sample_stage(&runnable, stage, n, seed),
        })
        .collect::<Vec<_>>();
    let manifest = SampleManifest {
        language,
        seed,
        n,
        multiline_runnable,
        stages,
    };
    write_json(&run.path(SAMPLE_JSON), &manifest)?;

    let mut sheet: Vec<AnnotationRow> = Vec::new();
    let mut seen = HashSet::new();
    for stage in &manifest.stages {
        for id in &stage.ids {
            if seen.insert(id.clone()) {
                sheet.push(Annotation::blank(id.clone()).into());
            }
        }
    }
    write_csv(File::create(run.path(ANNOTATIONS_CSV))?, &sheet)?;

    let counts = manifest
        .stages
        .iter()
        .map(|s| (format!("population.{}", stage_id(s.stage)), s.population))
        .collect();
    let inputs = run.digests(&[SNIPPETS, VERDICTS])?;
    record_stage(run, "sample", command, inputs, &[SAMPLE_JSON, ANNOTATIONS_CSV], started_at, counts)?;
    Ok(manifest)
}

fn stage_id(stage: SampleStage) -> &'static str {
    match stage {
        SampleStage::All => "all",
        SampleStage::NoSingleWord => "no_single_word",
        SampleStage::NoSingleWordNoSingleLine => "no_single_word_no_single_line",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use snipcheck_core::StageOutcome;

    fn verdict(id: &str, language: Language, parse: bool, second: bool) -> UsabilityVerdict {
        let parse_outcome = if parse {
            StageOutcome::pass(Stage::Parse, "e")
        } else {
            StageOutcome::fail(Stage::Parse, "e", vec!["SyntaxError: invalid syntax".into()])
        };
        let second_stage = parse.then(|| {
            if second {
                StageOutcome::pass(language.second_stage(), "e")
            } else {
                StageOutcome::fail(language.second_stage(), "e", vec!["NameError: name 'x' is not defined".into()])
            }
        });
        UsabilityVerdict {
            snippet_id: id.into(),
            language,
            parse: parse_outcome,
            second_stage,
            classified_at: 0,
            config_fingerprint: "f".into(),
        }
    }

    #[test]
    fn eight_histograms_always() {
        let verdicts = vec![
            verdict("1-0", Language::Python, false, false),
            verdict("2-0", Language::Python, true, false),
            verdict("3-0", Language::Python, true, false),
        ];
        let hs = error_histograms(&Normalizer::default(), &verdicts, 10);
        assert_eq!(hs.len(), 8);
        let run = hs.iter().find(|h| h.language == Language::Python && h.stage == Stage::Run).unwrap();
        assert_eq!(run.total, 2);
        assert_eq!(run.entries[0].template, "NameError: name [symbol] is not defined");
        let mut csv = Vec::new();
        write_histograms_csv(&mut csv, &hs).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("language,stage,template,count,percentage\n"));
        assert!(text.contains("python,run,NameError: name [symbol] is not defined,2,100.00\n"), "{text}");
    }

    fn feature_row(id: &str) -> FeatureRow {
        FeatureRow {
            snippet_id: id.into(),
            language: Language::Python,
            question_votes: 3,
            answer_votes: 2,
            total_answers: 1,
            accepted_is_best: true,
            questioner_reputation: None,
            answerer_reputation: Some(10),
            single_word: false,
            single_line: true,
            has_surrounding_text: true,
            comment_count: 0,
            tags: "python list".into(),
        }
    }

    #[test]
    fn annotation_round_trip_and_merge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut filled: AnnotationRow = Annotation::blank("1-0").into();
        filled.title_summarizes = Some(true);
        filled.answers_correct_and_complete = Some(AnswerQuality::CorrectIncomplete);
        filled.annotator = "coder1".into();
        let rows = vec![filled.clone(), Annotation::blank("2-0").into()];
        write_csv(File::create(&path).unwrap(), &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("1-0,true,,,correct_incomplete,,coder1"), "{text}");
        let back: Vec<AnnotationRow> = read_csv(&path).unwrap();
        assert_eq!(back, rows);

        let features = vec![feature_row("1-0"), feature_row("2-0"), feature_row("3-0")];
        let merged = merge_annotations(&features, &back).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].title_summarizes, Some(true));

        let unknown = vec![AnnotationRow::from(Annotation::blank("9-9"))];
        assert!(merge_annotations(&features, &unknown).unwrap_err().to_string().contains("unknown snippet 9-9"));
        let dup = vec![back[0].clone(), back[0].clone()];
        assert!(merge_annotations(&features, &dup).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn feature_csv_is_flat() {
        let mut out = Vec::new();
        write_csv(&mut out, &[feature_row("1-0")]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "snippet_id,language,question_votes,answer_votes,total_answers,accepted_is_best,questioner_reputation,answerer_reputation,single_word,single_line,has_surrounding_text,comment_count,tags\n\
             1-0,python,3,2,1,true,,10,false,true,true,0,python list\n"
        );
    }

    #[test]
    fn repair_report_counts() {
        let before = verdict("1-0", Language::Java, false, false);
        let after = verdict("1-0", Language::Java, true, true);
        let o = RepairOutcome {
            snippet_id: "1-0".into(),
            repairs_applied: vec![RepairKind::ClassWrap],
            repaired_text: String::new(),
            before,
            after,
        };
        let report = RepairReport::from_outcomes([&o]);
        let java = &report.languages[&Language::Java];
        assert_eq!((java.parsable_before, java.parsable_after, java.compilable_after), (0, 1, 1));
        assert_eq!(java.repairs_applied["class_wrap"], 1);
    }

    #[test]
    fn diffs_are_unified() {
        let s = Snippet::new(1, 2, Language::Java, 0, "int x = 1".into());
        let o = RepairOutcome {
            snippet_id: s.snippet_id.clone(),
            repairs_applied: vec![RepairKind::Semicolon],
            repaired_text: "int x = 1;".into(),
            before: verdict("2-0", Language::Java, false, false),
            after: verdict("2-0", Language::Java, true, false),
        };
        let diff = repair_diffs(&[s], &[o]);
        assert_eq!(diff, "--- a/2-0\n+++ b/2-0\n@@ -1 +1 @@\n-int x = 1\n+int x = 1;\n");
    }
}
