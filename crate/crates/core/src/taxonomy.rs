//! Error message templates and their histograms.
//!
//! Raw diagnostics carry identifiers, literals, paths and positions that
//! make every message unique. [`normalize_message`] replaces those
//! fragments with `[symbol]` so messages group into a small set of
//! templates, which [`build_histogram`] then ranks.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::token::is_ident_char;
use crate::{Error, Language, Percent, Stage, StageOutcome, StageStatus, UsabilityVerdict};

pub const SYMBOL: &str = "[symbol]";

/// Template recorded for a run that hit the time limit.
pub const TIMEOUT_TEMPLATE: &str = "[timeout]";

/// One substitution pass. Rules run in the order they are listed in a
/// [`Normalizer`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `'x'`, `"x"`, `` `x` `` and mono-style `` `x' `` spans.
    QuotedSpans,
    /// A kind word followed by a name, e.g. `variable foo` or
    /// `method bar(int)`. The kind word goes too.
    KindQualified { kinds: Vec<String> },
    /// The name in front of `is not defined`, `is not a function`, ...
    UndefinedSubject { suffixes: Vec<String> },
    /// Tokens that look like file paths, with any trailing `:line:col`.
    FilePaths,
    /// `(12,5)` style coordinates and `:12:5` suffixes.
    Coordinates,
    /// Standalone numeric literals.
    Numbers,
    /// Literal text replacement, for language-specific clean-ups.
    Literal { from: String, to: String },
}

/// Ordered rule set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    pub rules: Vec<Rule>,
}

impl Default for Normalizer {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Normalizer {
            rules: alloc::vec![
                Rule::QuotedSpans,
                Rule::KindQualified {
                    kinds: owned(&[
                        "variable",
                        "method",
                        "class",
                        "interface",
                        "enum",
                        "package",
                        "field",
                        "constructor",
                    ]),
                },
                Rule::UndefinedSubject {
                    suffixes: owned(&[
                        " is not defined",
                        " is not a function",
                        " is not a constructor",
                        " is not iterable",
                    ]),
                },
                Rule::FilePaths,
                Rule::Coordinates,
                Rule::Numbers,
            ],
        }
    }
}

impl Normalizer {
    /// Applies the rules in order, repeating until nothing changes, then
    /// collapses whitespace. The result is a fixed point, so normalizing
    /// twice gives the same template.
    pub fn normalize(&self, raw: &str) -> String {
        let mut current = collapse_whitespace(raw);
        // Every rule only removes trigger characters, so this settles fast.
        for _ in 0..16 {
            let mut next = current.clone();
            for rule in &self.rules {
                next = apply(rule, &next);
            }
            next = collapse_whitespace(&next);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }
}

/// [`Normalizer::normalize`] with the default rules.
pub fn normalize_message(raw: &str) -> String {
    Normalizer::default().normalize(raw)
}

fn apply(rule: &Rule, s: &str) -> String {
    match rule {
        Rule::QuotedSpans => replace_quoted(s),
        Rule::KindQualified { kinds } => replace_kind_qualified(s, kinds),
        Rule::UndefinedSubject { suffixes } => replace_undefined_subject(s, suffixes),
        Rule::FilePaths => replace_paths(s),
        Rule::Coordinates => replace_coordinates(s),
        Rule::Numbers => replace_numbers(s),
        Rule::Literal { from, to } if !from.is_empty() => s.replace(from.as_str(), to),
        Rule::Literal { .. } => s.to_string(),
    }
}

/// Single spaces between words, and no two placeholders back to back.
fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    let doubled = "[symbol][symbol]";
    while out.contains(doubled) {
        out = out.replace(doubled, SYMBOL);
    }
    out
}

fn replace_quoted(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let opens = matches!(c, '\'' | '"' | '`') && (i == 0 || !is_ident_char(chars[i - 1]));
        if opens {
            if let Some(end) = find_closing_quote(&chars, i) {
                out.push_str(SYMBOL);
                i = end + 1;
                continue;
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

fn find_closing_quote(chars: &[char], open: usize) -> Option<usize> {
    let q = chars[open];
    (open + 1..chars.len()).find(|&j| {
        let c = chars[j];
        let matches = c == q || (q == '`' && c == '\'');
        let followed_ok = chars.get(j + 1).is_none_or(|n| !is_ident_char(*n));
        matches && (q == '"' || followed_ok)
    })
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_name_char(c: char) -> bool {
    is_ident_char(c) || c == '$' || c == '.' || c == '<' || c == '>'
}

fn replace_kind_qualified(s: &str, kinds: &[String]) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    'scan: while i < chars.len() {
        if introduces_name(&chars[..i]) {
            for kind in kinds {
                let klen = kind.chars().count();
                if i + klen >= chars.len() || !chars[i..i + klen].iter().copied().eq(kind.chars()) {
                    continue;
                }
                let mut j = i + klen;
                if !chars[j].is_whitespace() {
                    continue;
                }
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j >= chars.len() || !is_name_start(chars[j]) {
                    continue;
                }
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '(' {
                    if let Some(close) = chars[j..].iter().position(|c| *c == ')') {
                        j += close + 1;
                    }
                }
                out.push_str(SYMBOL);
                i = j;
                continue 'scan;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// Kind words only count after a separator, as in `symbol - variable x`
/// or `location: class A`, so prose like `a method from` is left alone.
fn introduces_name(before: &[char]) -> bool {
    match before.last() {
        None => true,
        Some(c) if c.is_whitespace() => matches!(
            before.iter().rev().find(|c| !c.is_whitespace()),
            None | Some('-' | ':')
        ),
        Some(_) => false,
    }
}

fn replace_undefined_subject(s: &str, suffixes: &[String]) -> String {
    let mut out = s.to_string();
    for suffix in suffixes {
        let mut from = 0;
        while let Some(pos) = out[from..].find(suffix.as_str()) {
            let at = from + pos;
            let start = out[..at]
                .char_indices()
                .rev()
                .take_while(|(_, c)| is_ident_char(*c) || *c == '$' || *c == '.')
                .last()
                .map(|(i, _)| i);
            match start {
                Some(start) if out[start..at].chars().next().is_some_and(is_name_start) => {
                    out.replace_range(start..at, SYMBOL);
                    from = start + SYMBOL.len() + suffix.len();
                }
                _ => from = at + suffix.len(),
            }
        }
    }
    out
}

const SOURCE_EXTENSIONS: [&str; 7] = [".java", ".cs", ".py", ".js", ".jar", ".dll", ".class"];

fn replace_paths(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut run = String::new();
    let flush = |run: &mut String, out: &mut String| {
        if !run.is_empty() {
            let (body, colons) = split_trailing_colon(run);
            if looks_like_path(body) {
                out.push_str(SYMBOL);
                out.push_str(colons);
            } else {
                out.push_str(run);
            }
            run.clear();
        }
    };
    for c in s.chars() {
        if c.is_whitespace() || matches!(c, '\'' | '"' | '`' | '(' | ')' | ',' | '[' | ']') {
            flush(&mut run, &mut out);
            out.push(c);
        } else {
            run.push(c);
        }
    }
    flush(&mut run, &mut out);
    out
}

fn split_trailing_colon(run: &str) -> (&str, &str) {
    match run.strip_suffix(':') {
        Some(body) => (body, ":"),
        None => (run, ""),
    }
}

fn looks_like_path(token: &str) -> bool {
    // drop `:12` / `:12:5` suffixes before looking at the extension
    let mut base = token;
    while let Some((head, tail)) = base.rsplit_once(':') {
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            base = head;
        } else {
            break;
        }
    }
    let has_alnum = base.chars().any(char::is_alphanumeric);
    let separated = (base.contains('/') || base.contains('\\')) && has_alnum && !base.starts_with("//");
    let lower = base.to_ascii_lowercase();
    let with_ext = SOURCE_EXTENSIONS
        .iter()
        .any(|ext| lower.len() > ext.len() && lower.ends_with(ext));
    separated || with_ext
}

fn replace_coordinates(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        // (12,5) or (12, 5)
        if chars[i] == '(' {
            if let Some(end) = match_paren_coordinates(&chars, i) {
                out.push_str(SYMBOL);
                i = end;
                continue;
            }
        }
        // :12 or :12:5 glued to the previous token
        if chars[i] == ':' && i > 0 && !chars[i - 1].is_whitespace() {
            let mut j = i;
            let mut groups = 0;
            while j < chars.len() && chars[j] == ':' {
                let digits = chars[j + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
                if digits == 0 {
                    break;
                }
                j += 1 + digits;
                groups += 1;
            }
            if groups > 0 && chars.get(j).is_none_or(|c| !is_ident_char(*c)) {
                out.push(':');
                out.push_str(SYMBOL);
                i = j;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn match_paren_coordinates(chars: &[char], open: usize) -> Option<usize> {
    let mut j = open + 1;
    let mut numbers = 0;
    loop {
        while j < chars.len() && chars[j] == ' ' {
            j += 1;
        }
        let digits = chars[j..].iter().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return None;
        }
        j += digits;
        numbers += 1;
        while j < chars.len() && chars[j] == ' ' {
            j += 1;
        }
        match chars.get(j) {
            Some(',') => j += 1,
            Some(')') if numbers == 2 => return Some(j + 1),
            _ => return None,
        }
    }
}

fn replace_numbers(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        let starts = chars[i].is_ascii_digit() && (i == 0 || !(is_ident_char(chars[i - 1]) || chars[i - 1] == '.'));
        if starts {
            let mut j = i;
            while j < chars.len() && (is_ident_char(chars[j]) || (chars[j] == '.' && chars.get(j + 1).is_some_and(char::is_ascii_digit))) {
                j += 1;
            }
            out.push_str(SYMBOL);
            i = j;
            continue;
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// One normalized diagnostic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub language: Language,
    pub stage: Stage,
    pub raw: String,
    pub template: String,
    pub snippet_id: String,
}

/// Error records for one verdict. Java and C# contribute every diagnostic;
/// JavaScript and Python contribute only their first. A timeout yields the
/// reserved [`TIMEOUT_TEMPLATE`]; unavailable tools yield nothing.
pub fn records_for_verdict(normalizer: &Normalizer, verdict: &UsabilityVerdict) -> Vec<ErrorRecord> {
    let mut out = Vec::new();
    let stages = core::iter::once(&verdict.parse).chain(verdict.second_stage.as_ref());
    for outcome in stages {
        push_records(normalizer, verdict, outcome, &mut out);
    }
    out
}

fn push_records(normalizer: &Normalizer, verdict: &UsabilityVerdict, outcome: &StageOutcome, out: &mut Vec<ErrorRecord>) {
    let record = |raw: &str, template: String| ErrorRecord {
        language: verdict.language,
        stage: outcome.stage,
        raw: raw.to_string(),
        template,
        snippet_id: verdict.snippet_id.clone(),
    };
    match outcome.status {
        StageStatus::Timeout => out.push(record(TIMEOUT_TEMPLATE, TIMEOUT_TEMPLATE.to_string())),
        StageStatus::Fail => {
            let take = if verdict.language.reports_first_error_only() {
                1
            } else {
                usize::MAX
            };
            for raw in outcome.errors.iter().take(take) {
                out.push(record(raw, normalizer.normalize(raw)));
            }
        }
        StageStatus::Pass | StageStatus::ToolUnavailable => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub template: String,
    pub count: u64,
    pub percentage: Percent,
}

/// Most frequent templates for one language and stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub language: Language,
    pub stage: Stage,
    pub entries: Vec<HistogramEntry>,
    pub total: u64,
}

/// Mergeable template counts for one language and stage.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TemplateCounts {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TemplateCounts {
    pub fn add(&mut self, template: &str) {
        self.total += 1;
        match self.counts.get_mut(template) {
            Some(n) => *n += 1,
            None => {
                self.counts.insert(template.to_string(), 1);
            }
        }
    }

    pub fn merge(&mut self, other: &TemplateCounts) {
        self.total += other.total;
        for (template, n) in &other.counts {
            *self.counts.entry(template.clone()).or_insert(0) += n;
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Ranks templates by count, ties broken by template text, and keeps
    /// the first `top_n`. Percentages are of the full total.
    pub fn histogram(&self, language: Language, stage: Stage, top_n: usize) -> ErrorHistogram {
        let mut ranked: Vec<(&String, u64)> = self.counts.iter().map(|(t, n)| (t, *n)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(top_n);
        ErrorHistogram {
            language,
            stage,
            entries: ranked
                .into_iter()
                .map(|(template, count)| HistogramEntry {
                    template: template.clone(),
                    count,
                    percentage: Percent::of(count, self.total),
                })
                .collect(),
            total: self.total,
        }
    }
}

/// Histogram of `records`, which must all belong to `language` and `stage`.
pub fn build_histogram<'a, I>(language: Language, stage: Stage, records: I, top_n: usize) -> Result<ErrorHistogram, Error>
where
    I: IntoIterator<Item = &'a ErrorRecord>,
{
    let mut counts = TemplateCounts::default();
    for record in records {
        if record.language != language || record.stage != stage {
            return Err(Error::MixedRecords);
        }
        counts.add(&record.template);
    }
    Ok(counts.histogram(language, stage, top_n))
}
