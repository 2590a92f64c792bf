//! Domain records shared by every stage of the toolchain.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// The four languages the toolchain knows how to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    CSharp,
    Java,
    JavaScript,
    Python,
}

impl Language {
    pub const ALL: [Language; 4] = [
        Language::CSharp,
        Language::Java,
        Language::JavaScript,
        Language::Python,
    ];

    /// Stable lowercase identifier used in files and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Language::CSharp => "csharp",
            Language::Java => "java",
            Language::JavaScript => "javascript",
            Language::Python => "python",
        }
    }

    /// Human-facing name used as a table column header.
    pub fn display_name(self) -> &'static str {
        match self {
            Language::CSharp => "C#",
            Language::Java => "Java",
            Language::JavaScript => "JavaScript",
            Language::Python => "Python",
        }
    }

    /// Statically typed languages are compiled after parsing; dynamic ones are run.
    pub fn second_stage(self) -> Stage {
        match self {
            Language::CSharp | Language::Java => Stage::Compile,
            Language::JavaScript | Language::Python => Stage::Run,
        }
    }

    /// Whether the frontend reports at most one error per snippet.
    pub fn reports_first_error_only(self) -> bool {
        matches!(self, Language::JavaScript | Language::Python)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csharp" | "c#" | "cs" => Ok(Language::CSharp),
            "java" => Ok(Language::Java),
            "javascript" | "js" => Ok(Language::JavaScript),
            "python" | "py" => Ok(Language::Python),
            _ => Err(Error::UnknownLanguage(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostType {
    Question,
    Answer,
}

/// A day in the proleptic Gregorian calendar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CalendarDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CalendarDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self, Error> {
        let date = CalendarDate { year, month, day };
        if month == 0 || month > 12 || day == 0 || day > days_in_month(year, month) {
            return Err(Error::InvalidDate(format!("{date}")));
        }
        Ok(date)
    }

    /// Julian day number, the unit search engines expect in `daterange:`.
    pub fn julian_day(self) -> i64 {
        let a = (14 - i64::from(self.month)) / 12;
        let y = i64::from(self.year) + 4800 - a;
        let m = i64::from(self.month) + 12 * a - 3;
        i64::from(self.day) + (153 * m + 2) / 5 + 365 * y + y / 4 - y / 100 + y / 400 - 32045
    }
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        _ => 28,
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for CalendarDate {
    type Err = Error;

    /// Accepts `YYYY-MM-DD` optionally followed by a `T...` time part, which
    /// is how dump rows spell `CreationDate`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidDate(s.to_string());
        let date = s.split(['T', ' ']).next().unwrap_or("");
        let mut parts = date.splitn(3, '-');
        let year = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let month = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let day = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        CalendarDate::new(year, month, day).map_err(|_| bad())
    }
}

impl Serialize for CalendarDate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CalendarDate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of the posts table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: u64,
    pub post_type: PostType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_answer_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u64>,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default)]
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner_user_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner_reputation: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creation_date: Option<CalendarDate>,
}

impl Post {
    /// Minimal question row; handy in tests and fixtures.
    pub fn question(id: u64, accepted_answer_id: Option<u64>, tags: &[&str]) -> Self {
        Post {
            id,
            post_type: PostType::Question,
            accepted_answer_id,
            parent_id: None,
            body: String::new(),
            title: None,
            tags: tags.iter().map(|t| t.to_string()).collect(),
            score: 0,
            view_count: None,
            owner_user_id: None,
            owner_reputation: None,
            comment_count: None,
            creation_date: None,
        }
    }

    /// Minimal answer row.
    pub fn answer(id: u64, parent_id: u64, body: &str) -> Self {
        Post {
            id,
            post_type: PostType::Answer,
            accepted_answer_id: None,
            parent_id: Some(parent_id),
            body: body.to_string(),
            title: None,
            tags: Vec::new(),
            score: 0,
            view_count: None,
            owner_user_id: None,
            owner_reputation: None,
            comment_count: None,
            creation_date: None,
        }
    }

    pub fn is_question(&self) -> bool {
        self.post_type == PostType::Question
    }

    pub fn is_answer(&self) -> bool {
        self.post_type == PostType::Answer
    }

    /// Checks the row-level invariants: only questions carry tags or an
    /// accepted answer, and every answer names its parent.
    pub fn validate(&self) -> Result<(), Error> {
        match self.post_type {
            PostType::Answer if self.parent_id.is_none() => {
                Err(Error::Invalid(format!("answer {} has no parent", self.id)))
            }
            PostType::Answer if !self.tags.is_empty() || self.accepted_answer_id.is_some() => Err(
                Error::Invalid(format!("answer {} carries question-only fields", self.id)),
            ),
            _ => Ok(()),
        }
    }

    /// Same post without its body, for indexes that must stay small.
    pub fn without_body(&self) -> Post {
        Post {
            body: String::new(),
            ..self.clone()
        }
    }
}

/// One code block pulled out of an accepted answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub snippet_id: String,
    pub question_id: u64,
    pub answer_id: u64,
    pub language: Language,
    pub text: String,
    pub block_index: u32,
}

impl Snippet {
    pub fn new(question_id: u64, answer_id: u64, language: Language, block_index: u32, text: String) -> Self {
        Snippet {
            snippet_id: Snippet::make_id(answer_id, block_index),
            question_id,
            answer_id,
            language,
            text,
            block_index,
        }
    }

    /// `(answer_id, block_index)` is unique, so it doubles as the id.
    pub fn make_id(answer_id: u64, block_index: u32) -> String {
        format!("{answer_id}-{block_index}")
    }

    /// Copy of this snippet with different source text (used by repairs).
    pub fn with_text(&self, text: String) -> Snippet {
        Snippet {
            text,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Compile,
    Run,
}

impl Stage {
    pub fn id(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Compile => "compile",
            Stage::Run => "run",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parse" => Ok(Stage::Parse),
            "compile" => Ok(Stage::Compile),
            "run" => Ok(Stage::Run),
            _ => Err(Error::Invalid(format!("unknown stage {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pass,
    Fail,
    Timeout,
    ToolUnavailable,
}

/// Result of one stage for one snippet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub status: StageStatus,
    #[serde(default)]
    pub errors: Vec<String>,
    pub engine: String,
}

/// Placeholder error recorded when a frontend fails without saying why.
pub const UNSPECIFIED_ERROR: &str = "unspecified error";

impl StageOutcome {
    pub fn pass(stage: Stage, engine: impl Into<String>) -> Self {
        StageOutcome {
            stage,
            status: StageStatus::Pass,
            errors: Vec::new(),
            engine: engine.into(),
        }
    }

    /// A failure always carries at least one message.
    pub fn fail(stage: Stage, engine: impl Into<String>, mut errors: Vec<String>) -> Self {
        if errors.is_empty() {
            errors.push(UNSPECIFIED_ERROR.to_string());
        }
        StageOutcome {
            stage,
            status: StageStatus::Fail,
            errors,
            engine: engine.into(),
        }
    }

    /// Only the run stage can time out.
    pub fn timeout(engine: impl Into<String>) -> Self {
        StageOutcome {
            stage: Stage::Run,
            status: StageStatus::Timeout,
            errors: Vec::new(),
            engine: engine.into(),
        }
    }

    pub fn unavailable(stage: Stage, engine: impl Into<String>, reason: impl Into<String>) -> Self {
        StageOutcome {
            stage,
            status: StageStatus::ToolUnavailable,
            errors: alloc::vec![reason.into()],
            engine: engine.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == StageStatus::Pass
    }

    pub fn is_unavailable(&self) -> bool {
        self.status == StageStatus::ToolUnavailable
    }
}

/// Per-snippet stage ladder: parse, then compile or run when parsing passed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsabilityVerdict {
    pub snippet_id: String,
    pub language: Language,
    pub parse: StageOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_stage: Option<StageOutcome>,
    /// Seconds since the Unix epoch.
    pub classified_at: u64,
    pub config_fingerprint: String,
}

impl UsabilityVerdict {
    pub fn parsable(&self) -> bool {
        self.parse.passed()
    }

    /// Compilable (C#, Java) or runnable (JavaScript, Python).
    pub fn second_stage_passed(&self) -> bool {
        self.second_stage.as_ref().is_some_and(StageOutcome::passed)
    }

    pub fn any_unavailable(&self) -> bool {
        self.parse.is_unavailable()
            || self.second_stage.as_ref().is_some_and(StageOutcome::is_unavailable)
    }

    /// Gating holds and the second stage kind matches the language.
    pub fn is_well_formed(&self) -> bool {
        match &self.second_stage {
            None => true,
            Some(second) => self.parse.passed() && second.stage == self.language.second_stage(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    ClassWrap,
    Semicolon,
}

impl RepairKind {
    pub fn id(self) -> &'static str {
        match self {
            RepairKind::ClassWrap => "class_wrap",
            RepairKind::Semicolon => "semicolon",
        }
    }
}

/// Before/after record of running the repair workflow on one snippet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub snippet_id: String,
    pub repairs_applied: Vec<RepairKind>,
    pub repaired_text: String,
    pub before: UsabilityVerdict,
    pub after: UsabilityVerdict,
}
