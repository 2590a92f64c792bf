//! Stage sequencing for one snippet.
//!
//! Every snippet is parsed. Only snippets that parse go on to the second
//! stage, which is compilation for C# and Java and execution for JavaScript
//! and Python. The actual frontends sit behind [`StageChecker`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Language, Snippet, Stage, StageOutcome, StageStatus, UsabilityVerdict};

/// Engine identifiers used by the two Python grammars.
pub const PYTHON_V2: &str = "python-v2";
pub const PYTHON_V3: &str = "python-v3";

/// Frontends and toolchains for all languages.
pub trait StageChecker {
    /// Hash of everything that can change an outcome: tool identities,
    /// versions, language pins and sandbox limits.
    fn fingerprint(&self) -> &str;

    fn parse(&self, snippet: &Snippet) -> StageOutcome;

    /// Only called for C# and Java snippets that parsed.
    fn compile(&self, snippet: &Snippet) -> StageOutcome;

    /// Only called for JavaScript and Python snippets that parsed. `parse`
    /// tells Python which grammar accepted the snippet.
    fn run(&self, snippet: &Snippet, parse: &StageOutcome) -> StageOutcome;
}

/// Parse, then compile or run when parsing passed.
pub fn classify_snippet<C: StageChecker + ?Sized>(checker: &C, snippet: &Snippet, classified_at: u64) -> UsabilityVerdict {
    let parse = checker.parse(snippet);
    classify_after_parse(checker, snippet, parse, classified_at)
}

/// Second half of [`classify_snippet`] for callers that already parsed.
pub fn classify_after_parse<C: StageChecker + ?Sized>(
    checker: &C,
    snippet: &Snippet,
    parse: StageOutcome,
    classified_at: u64,
) -> UsabilityVerdict {
    let second_stage = parse.passed().then(|| match snippet.language.second_stage() {
        Stage::Compile => checker.compile(snippet),
        _ => checker.run(snippet, &parse),
    });
    UsabilityVerdict {
        snippet_id: snippet.snippet_id.clone(),
        language: snippet.language,
        parse,
        second_stage,
        classified_at,
        config_fingerprint: String::from(checker.fingerprint()),
    }
}

/// Combines the two Python grammars: the v2 result stands when it passes,
/// otherwise v3 is consulted. When both fail the outcome is attributed to
/// v2 and lists the v2 errors followed by the v3 errors. An unavailable
/// engine defers to the other one.
pub fn combine_dual_parse<F>(v2: StageOutcome, v3: F) -> StageOutcome
where
    F: FnOnce() -> StageOutcome,
{
    if v2.passed() {
        return v2;
    }
    let v3 = v3();
    match (v2.status, v3.status) {
        (_, StageStatus::Pass) => v3,
        (StageStatus::ToolUnavailable, StageStatus::ToolUnavailable) => {
            let mut errors = v2.errors;
            errors.extend(v3.errors);
            StageOutcome {
                stage: Stage::Parse,
                status: StageStatus::ToolUnavailable,
                errors,
                engine: String::from(PYTHON_V2),
            }
        }
        (StageStatus::ToolUnavailable, _) => v3,
        (_, StageStatus::ToolUnavailable) => v2,
        _ => {
            let mut errors: Vec<String> = v2.errors;
            errors.extend(v3.errors);
            StageOutcome::fail(Stage::Parse, PYTHON_V2, errors)
        }
    }
}

/// File stem used when compiling a snippet as a single compilation unit:
/// its first declared type, or [`PLACEHOLDER_UNIT`] when it declares none.
pub fn compilation_unit_name(text: &str) -> &str {
    crate::token::first_declared_type(text).unwrap_or(PLACEHOLDER_UNIT)
}

pub const PLACEHOLDER_UNIT: &str = "Snippet";

/// True for languages whose second stage is compilation.
pub fn is_compiled(language: Language) -> bool {
    language.second_stage() == Stage::Compile
}
