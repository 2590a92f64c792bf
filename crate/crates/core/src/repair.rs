//! Heuristic syntax repairs for Java and C# snippets.
//!
//! Two repairs exist. The class wrap puts Java code that declares no type
//! inside `class Program{ ... }`. The semicolon repair appends `;` to lines
//! that look like unterminated statements. Both work on raw text: comments
//! and string literals are not recognized.

use alloc::string::String;
use alloc::vec::Vec;

use crate::classify::{classify_after_parse, classify_snippet, StageChecker};
use crate::token::{contains_any_word, contains_word};
use crate::{Language, RepairKind, RepairOutcome, Snippet, UsabilityVerdict};

/// Name of the class introduced by the class wrap.
pub const WRAPPER_CLASS: &str = "Program";

const INDENT: &str = "  ";

/// Words whose presence means the snippet already has type scaffolding.
const SCAFFOLD_WORDS: [&str; 3] = ["import", "package", "class"];

/// Lines containing one of these words never get a semicolon.
const BLOCK_WORDS: [&str; 8] = ["class", "if", "else", "do", "while", "for", "try", "catch"];

/// True when none of `import`, `package` or `class` appears as a whole word.
pub fn needs_class_wrap(text: &str) -> bool {
    !contains_any_word(text, &SCAFFOLD_WORDS)
}

/// Wraps `text` in `class Program{ ... }`, indenting each non-blank line
/// one level. Adds exactly two lines.
pub fn repair_class(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 32);
    out.push_str("class ");
    out.push_str(WRAPPER_CLASS);
    out.push_str("{\n");
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if !line.trim().is_empty() {
            out.push_str(INDENT);
        }
        out.push_str(line);
    }
    out.push_str("\n}");
    out
}

/// Appends `;` to every line that passes all three checks:
///
/// 1. it contains none of `;`, `{`, `(`;
/// 2. it contains none of the words `class if else do while for try catch`;
/// 3. it does not end with `=` or `}`.
///
/// Blank lines are untouched and the line count never changes. Trailing
/// whitespace stays after the inserted `;`.
pub fn repair_semicolons(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if needs_semicolon(line) {
            let content = line.trim_end();
            out.push_str(content);
            out.push(';');
            out.push_str(&line[content.len()..]);
        } else {
            out.push_str(line);
        }
    }
    out
}

fn needs_semicolon(line: &str) -> bool {
    let content = line.trim_end();
    if content.trim_start().is_empty() {
        return false;
    }
    if content.contains([';', '{', '(']) {
        return false;
    }
    if BLOCK_WORDS.iter().any(|w| contains_word(content, w)) {
        return false;
    }
    !(content.ends_with('=') || content.ends_with('}'))
}

/// Runs the repair workflow on one snippet.
///
/// Snippets that already parse are returned untouched. Otherwise Java gets
/// the class wrap (when [`needs_class_wrap`] says so) and, if it still does
/// not parse, the semicolon repair; C# only gets the semicolon repair.
/// The final text is classified again, so `after` carries the compile
/// outcome when the repaired snippet parses. Other languages pass through.
pub fn repair_pipeline<C: StageChecker + ?Sized>(
    checker: &C,
    snippet: &Snippet,
    before: Option<UsabilityVerdict>,
    classified_at: u64,
) -> RepairOutcome {
    let before = before.unwrap_or_else(|| classify_snippet(checker, snippet, classified_at));
    let untouched = |before: UsabilityVerdict| RepairOutcome {
        snippet_id: snippet.snippet_id.clone(),
        repairs_applied: Vec::new(),
        repaired_text: snippet.text.clone(),
        after: before.clone(),
        before,
    };
    if before.parsable() || !matches!(snippet.language, Language::Java | Language::CSharp) {
        return untouched(before);
    }

    let mut applied = Vec::new();
    let mut text = snippet.text.clone();
    let mut parse = None;

    if snippet.language == Language::Java && needs_class_wrap(&text) {
        text = repair_class(&text);
        applied.push(RepairKind::ClassWrap);
        let outcome = checker.parse(&snippet.with_text(text.clone()));
        if !outcome.passed() {
            parse = Some(outcome);
        } else {
            let repaired = snippet.with_text(text.clone());
            let after = classify_after_parse(checker, &repaired, outcome, classified_at);
            return RepairOutcome {
                snippet_id: snippet.snippet_id.clone(),
                repairs_applied: applied,
                repaired_text: text,
                before,
                after,
            };
        }
    }

    let semicolons = repair_semicolons(&text);
    if semicolons != text {
        text = semicolons;
        applied.push(RepairKind::Semicolon);
        parse = None;
    }

    if applied.is_empty() {
        return untouched(before);
    }
    let repaired = snippet.with_text(text.clone());
    let parse = parse.unwrap_or_else(|| checker.parse(&repaired));
    let after = classify_after_parse(checker, &repaired, parse, classified_at);
    RepairOutcome {
        snippet_id: snippet.snippet_id.clone(),
        repairs_applied: applied,
        repaired_text: text,
        before,
        after,
    }
}
