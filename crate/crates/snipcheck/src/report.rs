//! Table rendering and the report bundle.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use snipcheck_core::features::is_single_word;
use snipcheck_core::rates::{aggregate_rates, group_thousands, validate_percentages, RateSummary, Variant, Violation};
use snipcheck_core::search::{SearchEvaluation, TopkRates};
use snipcheck_core::taxonomy::ErrorHistogram;
use snipcheck_core::{Language, Percent, Ratio, RepairOutcome, Snippet, UsabilityVerdict};

use crate::pipeline::{error_histograms, normalizer, RepairReport};
use crate::config::Config;
use crate::run::{RunDir, MissingStage, REPAIRS, SEARCH_JSON, SNIPPETS, VERDICTS};
use crate::store::{read_json, read_ndjson};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("refusing to render: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("missing stage outputs: {}", .0.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("; "))]
    Missing(Vec<MissingStage>),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn csv_line(fields: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields).expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 fields")
}

fn cell(count: u64, percent: Percent) -> String {
    format!("{} ({percent})", group_thousands(count))
}

// Rate tables -----------------------------------------------------------------

/// Renders summary rows after checking every printed percentage against its
/// counts. Any inconsistent cell refuses the whole render.
pub fn render_summary(rows: &[RateSummary], format: Format) -> Result<String, ReportError> {
    let violations: Vec<Violation> = rows.iter().filter_map(|r| validate_percentages(r).err()).flatten().collect();
    if !violations.is_empty() {
        return Err(ReportError::Validation(violations));
    }
    Ok(match format {
        Format::Json => to_json(rows),
        Format::Csv => {
            let mut out = csv_line(&[
                "language",
                "variant",
                "total",
                "parsable",
                "parsable_percent",
                "second_stage",
                "second_stage_count",
                "second_stage_percent",
                "excluded_unavailable",
                "second_stage_unavailable",
            ]);
            for r in rows {
                out.push_str(&csv_line(&[
                    r.language.id(),
                    r.variant.id(),
                    &r.total.to_string(),
                    &r.parsable.count.to_string(),
                    r.parsable.percent.to_string().trim_end_matches('%'),
                    r.second_stage_label.id(),
                    &r.second_stage.count.to_string(),
                    r.second_stage.percent.to_string().trim_end_matches('%'),
                    &r.excluded_unavailable.to_string(),
                    &r.second_stage_unavailable.to_string(),
                ]));
            }
            out
        }
        Format::Text => text_tables(rows),
    })
}

/// One block per variant; languages are columns, as in the published tables.
fn text_tables(rows: &[RateSummary]) -> String {
    let mut variants: Vec<Variant> = rows.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    let mut out = String::new();
    for variant in variants {
        let cols: Vec<&RateSummary> = rows.iter().filter(|r| r.variant == variant).collect();
        let title = match variant {
            Variant::All => "Summary of results",
            Variant::NoSingleWord => "Summary of results after single-word snippet removal",
            Variant::AfterRepairs => "Summary of results after repairs",
        };
        let dash = || "--".to_string();
        let mut table: Vec<Vec<String>> = vec![
            std::iter::once(String::new()).chain(cols.iter().map(|r| r.language.display_name().to_string())).collect(),
            std::iter::once("Total Snippets Processed".to_string())
                .chain(cols.iter().map(|r| group_thousands(r.total)))
                .collect(),
            std::iter::once("Parsable Snippets (Percentage)".to_string())
                .chain(cols.iter().map(|r| cell(r.parsable.count, r.parsable.percent)))
                .collect(),
        ];
        let compiled = cols.iter().any(|r| r.second_stage_label.id() == "compilable");
        let ran = cols.iter().any(|r| r.second_stage_label.id() == "runnable");
        for (label, id, present) in [
            ("Compilable Snippets (Percentage)", "compilable", compiled),
            ("Runnable Snippets (Percentage)", "runnable", ran),
        ] {
            if !present {
                continue;
            }
            table.push(
                std::iter::once(label.to_string())
                    .chain(cols.iter().map(|r| {
                        if r.second_stage_label.id() == id {
                            cell(r.second_stage.count, r.second_stage.percent)
                        } else {
                            dash()
                        }
                    }))
                    .collect(),
            );
        }
        let unavailable: u64 = cols.iter().map(|r| r.excluded_unavailable + r.second_stage_unavailable).sum();
        if unavailable > 0 {
            table.push(
                std::iter::once("Tool Unavailable (parse / second stage)".to_string())
                    .chain(cols.iter().map(|r| format!("{} / {}", r.excluded_unavailable, r.second_stage_unavailable)))
                    .collect(),
            );
        }
        let _ = writeln!(out, "{title}");
        out.push_str(&align(&table));
        out.push('\n');
    }
    out
}

fn align(table: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

// Deltas ----------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaRow {
    pub language: Language,
    pub stage: &'static str,
    pub steps: Vec<(Variant, Percent)>,
}

impl DeltaRow {
    fn text(&self) -> String {
        let mut s = format!("{} {}: ", self.language.display_name(), self.stage);
        let mut prev: Option<Percent> = None;
        let mut diffs = Vec::new();
        for (i, (_, p)) in self.steps.iter().enumerate() {
            if i > 0 {
                s.push_str(" -> ");
            }
            let _ = write!(s, "{}", p.to_string().trim_end_matches('%'));
            if let Some(prev) = prev {
                diffs.push(signed(p.delta(prev)));
            }
            prev = Some(*p);
        }
        if !diffs.is_empty() {
            let _ = write!(s, " ({})", diffs.join(", "));
        }
        s
    }
}

fn signed(delta: i64) -> String {
    let body = Percent::format_delta(delta);
    if delta > 0 {
        format!("+{body}")
    } else {
        body
    }
}

/// Parse and second-stage percentages across the variants present in
/// `rows`, per language, in variant order.
pub fn delta_rows(rows: &[RateSummary], languages: &[Language]) -> Vec<DeltaRow> {
    let mut out = Vec::new();
    for &language in languages {
        let mut lang_rows: Vec<&RateSummary> = rows.iter().filter(|r| r.language == language).collect();
        lang_rows.sort_by_key(|r| r.variant);
        if lang_rows.len() < 2 {
            continue;
        }
        out.push(DeltaRow {
            language,
            stage: "parsable",
            steps: lang_rows.iter().map(|r| (r.variant, r.parsable.percent)).collect(),
        });
        out.push(DeltaRow {
            language,
            stage: lang_rows[0].second_stage_label.id(),
            steps: lang_rows.iter().map(|r| (r.variant, r.second_stage.percent)).collect(),
        });
    }
    out
}

pub fn render_deltas(rows: &[DeltaRow], format: Format) -> String {
    match format {
        Format::Json => to_json(rows),
        Format::Text => rows.iter().map(|r| r.text() + "\n").collect(),
        Format::Csv => {
            let mut out = csv_line(&["language", "stage", "variant", "percent", "delta"]);
            for r in rows {
                let mut prev: Option<Percent> = None;
                for (variant, p) in &r.steps {
                    let delta = prev.map(|q| signed(p.delta(q))).unwrap_or_default();
                    out.push_str(&csv_line(&[
                        r.language.id(),
                        r.stage,
                        variant.id(),
                        p.to_string().trim_end_matches('%'),
                        &delta,
                    ]));
                    prev = Some(*p);
                }
            }
            out
        }
    }
}

// Histograms ------------------------------------------------------------------

pub fn render_histogram(h: &ErrorHistogram, format: Format) -> String {
    match format {
        Format::Json => to_json(h),
        Format::Csv => {
            let mut out = csv_line(&["language", "stage", "template", "count", "percentage"]);
            for e in &h.entries {
                out.push_str(&csv_line(&[
                    h.language.id(),
                    h.stage.id(),
                    &e.template,
                    &e.count.to_string(),
                    e.percentage.to_string().trim_end_matches('%'),
                ]));
            }
            out
        }
        Format::Text => {
            let mut out = format!(
                "Most common {} error messages for {} ({} total)\n",
                h.stage.id(),
                h.language.display_name(),
                group_thousands(h.total)
            );
            for (i, e) in h.entries.iter().enumerate() {
                let _ = writeln!(out, "{:>3}. {:>7}  {:>8}  {}", i + 1, e.percentage.to_string(), group_thousands(e.count), e.template);
            }
            out
        }
    }
}

// Search table ------------------------------------------------------------------

fn rate(r: Ratio) -> String {
    r.percent_string(1).unwrap_or_else(|| "--".into())
}

/// Top-1 / top-k usability rows, percentages to one decimal.
pub fn render_topk(top1: &TopkRates, topk: &TopkRates, format: Format) -> String {
    let rows = [("Top 1".to_string(), top1), (format!("Top {}", topk.k), topk)];
    match format {
        Format::Json => to_json(&serde_json::json!({ "top1": top1, "topk": topk })),
        Format::Csv => {
            let mut out = csv_line(&[
                "results",
                "units",
                "parsable_count",
                "parsable",
                "runnable_count",
                "runnable",
                "multiline_count",
                "multiline",
            ]);
            for (label, r) in rows {
                let pct = |x: Ratio| x.percent_string(1).map(|s| s.trim_end_matches('%').to_string()).unwrap_or_default();
                out.push_str(&csv_line(&[
                    &label,
                    &r.resolved().to_string(),
                    &r.parsable.numerator.to_string(),
                    &pct(r.parsable),
                    &r.runnable.numerator.to_string(),
                    &pct(r.runnable),
                    &r.multiline.numerator.to_string(),
                    &pct(r.multiline),
                ]));
            }
            out
        }
        Format::Text => {
            let mut table = vec![vec![
                String::new(),
                "Parsable".into(),
                "Runnable".into(),
                "Multi-line".into(),
                "Units".into(),
            ]];
            for (label, r) in rows {
                table.push(vec![label, rate(r.parsable), rate(r.runnable), rate(r.multiline), r.resolved().to_string()]);
            }
            align(&table)
        }
    }
}

pub fn render_search(eval: &SearchEvaluation, format: Format) -> String {
    let mut out = render_topk(&eval.top1, &eval.topk, format);
    if format == Format::Text {
        let s = &eval.rank_stats;
        let _ = writeln!(
            out,
            "\nOriginal question at rank 1: {}; lower in top {}: {}; absent: {}; failed queries: {}",
            s.first, eval.k, s.lower_in_top_k, s.absent, eval.failed_queries
        );
    }
    out
}

// Repairs ---------------------------------------------------------------------

pub fn render_repairs(report: &RepairReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let mut out = csv_line(&[
                "language",
                "snippets",
                "parsable_before",
                "parsable_after",
                "compilable_before",
                "compilable_after",
                "repairs_applied",
                "count",
            ]);
            for (lang, c) in &report.languages {
                for (kind, n) in &c.repairs_applied {
                    out.push_str(&csv_line(&[
                        lang.id(),
                        &c.snippets.to_string(),
                        &c.parsable_before.to_string(),
                        &c.parsable_after.to_string(),
                        &c.compilable_before.to_string(),
                        &c.compilable_after.to_string(),
                        kind,
                        &n.to_string(),
                    ]));
                }
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (lang, c) in &report.languages {
                let _ = writeln!(
                    out,
                    "{}: {} snippets; parsable {} -> {}; compilable {} -> {}",
                    lang.display_name(),
                    group_thousands(c.snippets),
                    cell(c.parsable_before, Percent::of(c.parsable_before, c.snippets)),
                    cell(c.parsable_after, Percent::of(c.parsable_after, c.snippets)),
                    cell(c.compilable_before, Percent::of(c.compilable_before, c.snippets)),
                    cell(c.compilable_after, Percent::of(c.compilable_after, c.snippets)),
                );
                for (kind, n) in &c.repairs_applied {
                    let _ = writeln!(out, "  {kind}: {}", group_thousands(*n));
                }
            }
            out
        }
    }
}

// Bundle ------------------------------------------------------------------------

/// Rate rows for the three populations. Single-word snippets are dropped
/// from the second and third; the third takes post-repair verdicts where
/// a repair ran.
pub fn variant_rows(
    snippets: &[Snippet],
    verdicts: &[UsabilityVerdict],
    repairs: Option<&[RepairOutcome]>,
) -> Result<Vec<RateSummary>, ReportError> {
    let invalid = |e: snipcheck_core::Error| ReportError::Invalid(e.to_string());
    let compiled = [Language::CSharp, Language::Java];
    let mut rows = aggregate_rates(verdicts, Variant::All).map_err(invalid)?;

    let single: HashMap<&str, bool> = snippets.iter().map(|s| (s.snippet_id.as_str(), is_single_word(&s.text))).collect();
    let kept: Vec<&UsabilityVerdict> = verdicts
        .iter()
        .filter(|v| compiled.contains(&v.language))
        .filter(|v| !single.get(v.snippet_id.as_str()).copied().unwrap_or(false))
        .collect();
    let no_single = aggregate_rates(kept.iter().copied(), Variant::NoSingleWord).map_err(invalid)?;
    rows.extend(no_single.into_iter().filter(|r| compiled.contains(&r.language)));

    if let Some(repairs) = repairs {
        let after: HashMap<&str, &UsabilityVerdict> = repairs.iter().map(|o| (o.snippet_id.as_str(), &o.after)).collect();
        let repaired: Vec<&UsabilityVerdict> = kept
            .iter()
            .map(|v| after.get(v.snippet_id.as_str()).copied().unwrap_or(v))
            .collect();
        let after_rows = aggregate_rates(repaired, Variant::AfterRepairs).map_err(invalid)?;
        rows.extend(after_rows.into_iter().filter(|r| compiled.contains(&r.language)));
    }
    Ok(rows)
}

/// Report files keyed by their path under `report/`, plus notices about
/// anything left out.
#[derive(Debug, Default)]
pub struct ReportBundle {
    pub files: BTreeMap<String, String>,
    pub notices: Vec<String>,
}

pub fn build_report(run: &RunDir, config: &Config, format: Format) -> Result<ReportBundle, ReportError> {
    let missing: Vec<MissingStage> = [SNIPPETS, VERDICTS].iter().filter_map(|n| run.require(n).err()).collect();
    if !missing.is_empty() {
        return Err(ReportError::Missing(missing));
    }
    let snippets: Vec<Snippet> = read_ndjson(&run.path(SNIPPETS))?;
    let verdicts: Vec<UsabilityVerdict> = read_ndjson(&run.path(VERDICTS))?;
    let repairs: Option<Vec<RepairOutcome>> = if run.exists(REPAIRS) {
        Some(read_ndjson(&run.path(REPAIRS))?)
    } else {
        None
    };
    let ext = format.extension();
    let mut bundle = ReportBundle::default();

    let rows = variant_rows(&snippets, &verdicts, repairs.as_deref())?;
    for (variant, name) in [
        (Variant::All, "table2"),
        (Variant::NoSingleWord, "table3"),
        (Variant::AfterRepairs, "table4"),
    ] {
        let part: Vec<RateSummary> = rows.iter().filter(|r| r.variant == variant).cloned().collect();
        if part.is_empty() {
            continue;
        }
        bundle.files.insert(format!("{name}.{ext}"), render_summary(&part, format)?);
    }
    if repairs.is_none() {
        bundle
            .notices
            .push("no repair results; the after-repairs table is omitted (run `snipcheck repair`)".into());
    }
    bundle.files.insert(
        format!("deltas.{ext}"),
        render_deltas(&delta_rows(&rows, &[Language::CSharp, Language::Java]), format),
    );
    if let Some(repairs) = &repairs {
        bundle
            .files
            .insert(format!("repairs.{ext}"), render_repairs(&RepairReport::from_outcomes(repairs), format));
    }

    for h in error_histograms(&normalizer(config), &verdicts, config.taxonomy.top_n) {
        bundle.files.insert(
            format!("histograms/{}_{}.{ext}", h.language.id(), h.stage.id()),
            render_histogram(&h, format),
        );
    }

    if run.exists(SEARCH_JSON) {
        let eval: SearchEvaluation = read_json(&run.path(SEARCH_JSON))?;
        bundle.files.insert(format!("table6.{ext}"), render_search(&eval, format));
    } else {
        bundle.notices.push("no search evaluation; table 6 is omitted (run `snipcheck search-eval`)".into());
    }
    if !bundle.notices.is_empty() {
        let text: String = bundle.notices.iter().map(|n| format!("{n}\n")).collect();
        bundle.files.insert("NOTICES.txt".into(), text);
    }
    Ok(bundle)
}

/// Writes the bundle under `report/`, replacing whatever was there.
pub fn write_report(run: &RunDir, bundle: &ReportBundle) -> std::io::Result<()> {
    let dir = run.path(crate::run::REPORT_DIR);
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    for (name, body) in &bundle.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, body)?;
    }
    Ok(())
}
