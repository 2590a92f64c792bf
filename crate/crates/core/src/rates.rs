//! Per-language usability rates and their consistency checks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Language, Percent, Stage, UsabilityVerdict};

/// Which population a summary row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    All,
    NoSingleWord,
    AfterRepairs,
}

impl Variant {
    pub fn id(self) -> &'static str {
        match self {
            Variant::All => "all",
            Variant::NoSingleWord => "no_single_word",
            Variant::AfterRepairs => "after_repairs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondStageLabel {
    Compilable,
    Runnable,
}

impl SecondStageLabel {
    pub fn for_language(language: Language) -> Self {
        match language.second_stage() {
            Stage::Run => SecondStageLabel::Runnable,
            _ => SecondStageLabel::Compilable,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            SecondStageLabel::Compilable => "compilable",
            SecondStageLabel::Runnable => "runnable",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPercent {
    pub count: u64,
    pub percent: Percent,
}

impl CountPercent {
    pub fn of(count: u64, total: u64) -> Self {
        CountPercent {
            count,
            percent: Percent::of(count, total),
        }
    }
}

impl fmt::Display for CountPercent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", group_thousands(self.count), self.percent)
    }
}

/// `914974` as `914,974`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// One table row: totals and stage pass counts for one language and population.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateSummary {
    pub language: Language,
    pub variant: Variant,
    pub total: u64,
    pub parsable: CountPercent,
    pub second_stage_label: SecondStageLabel,
    pub second_stage: CountPercent,
    /// Snippets left out of `total` because no parser was available.
    #[serde(default)]
    pub excluded_unavailable: u64,
    /// Parsable snippets whose compiler or runtime was unavailable.
    #[serde(default)]
    pub second_stage_unavailable: u64,
}

impl RateSummary {
    /// Row with percentages computed from the counts.
    pub fn from_counts(language: Language, variant: Variant, total: u64, parsable: u64, second: u64) -> Self {
        RateSummary {
            language,
            variant,
            total,
            parsable: CountPercent::of(parsable, total),
            second_stage_label: SecondStageLabel::for_language(language),
            second_stage: CountPercent::of(second, total),
            excluded_unavailable: 0,
            second_stage_unavailable: 0,
        }
    }

    /// Row carrying percentages exactly as printed somewhere else, to be
    /// checked with [`validate_percentages`].
    pub fn printed(
        language: Language,
        variant: Variant,
        total: u64,
        parsable: (u64, Percent),
        second: (u64, Percent),
    ) -> Self {
        RateSummary {
            language,
            variant,
            total,
            parsable: CountPercent {
                count: parsable.0,
                percent: parsable.1,
            },
            second_stage_label: SecondStageLabel::for_language(language),
            second_stage: CountPercent {
                count: second.0,
                percent: second.1,
            },
            excluded_unavailable: 0,
            second_stage_unavailable: 0,
        }
    }
}

/// A cell whose printed value disagrees with its counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Percent {
        cell: String,
        expected: Percent,
        found: Percent,
    },
    Ordering {
        detail: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Percent {
                cell,
                expected,
                found,
            } => write!(f, "{cell}: expected {expected}, found {found}"),
            Violation::Ordering { detail } => f.write_str(detail),
        }
    }
}

/// Recomputes every percentage from its counts and checks
/// `second_stage <= parsable <= total`.
pub fn validate_percentages(summary: &RateSummary) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let row = alloc::format!("{}/{}", summary.language.id(), summary.variant.id());
    let cells = [
        ("parsable", summary.parsable),
        (summary.second_stage_label.id(), summary.second_stage),
    ];
    for (name, cell) in cells {
        let expected = Percent::of(cell.count, summary.total);
        if expected != cell.percent {
            violations.push(Violation::Percent {
                cell: alloc::format!("{row}/{name}"),
                expected,
                found: cell.percent,
            });
        }
    }
    if summary.parsable.count > summary.total {
        violations.push(Violation::Ordering {
            detail: alloc::format!("{row}: parsable {} exceeds total {}", summary.parsable.count, summary.total),
        });
    }
    if summary.second_stage.count > summary.parsable.count {
        violations.push(Violation::Ordering {
            detail: alloc::format!(
                "{row}: {} {} exceeds parsable {}",
                summary.second_stage_label.id(),
                summary.second_stage.count,
                summary.parsable.count
            ),
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Commutative accumulator behind [`aggregate_rates`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RateCounts {
    pub total: u64,
    pub parsable: u64,
    pub second_stage: u64,
    pub excluded_unavailable: u64,
    pub second_stage_unavailable: u64,
}

impl RateCounts {
    pub fn add(&mut self, verdict: &UsabilityVerdict) {
        if verdict.parse.is_unavailable() {
            self.excluded_unavailable += 1;
            return;
        }
        self.total += 1;
        if verdict.parsable() {
            self.parsable += 1;
        }
        match &verdict.second_stage {
            Some(s) if s.passed() => self.second_stage += 1,
            Some(s) if s.is_unavailable() => self.second_stage_unavailable += 1,
            _ => {}
        }
    }

    pub fn merge(mut self, other: RateCounts) -> RateCounts {
        self.total += other.total;
        self.parsable += other.parsable;
        self.second_stage += other.second_stage;
        self.excluded_unavailable += other.excluded_unavailable;
        self.second_stage_unavailable += other.second_stage_unavailable;
        self
    }

    pub fn summary(&self, language: Language, variant: Variant) -> RateSummary {
        let mut row = RateSummary::from_counts(language, variant, self.total, self.parsable, self.second_stage);
        row.excluded_unavailable = self.excluded_unavailable;
        row.second_stage_unavailable = self.second_stage_unavailable;
        row
    }
}

/// One summary row per language, in [`Language::ALL`] order. Verdicts must
/// share a configuration fingerprint. Snippets whose parser was unavailable
/// are left out of the denominators and reported separately.
pub fn aggregate_rates<'a, I>(verdicts: I, variant: Variant) -> Result<Vec<RateSummary>, Error>
where
    I: IntoIterator<Item = &'a UsabilityVerdict>,
{
    let mut counts = [RateCounts::default(); 4];
    let mut fingerprint: Option<&str> = None;
    for verdict in verdicts {
        match fingerprint {
            None => fingerprint = Some(&verdict.config_fingerprint),
            Some(first) if first != verdict.config_fingerprint => {
                return Err(Error::MixedFingerprints {
                    first: first.to_string(),
                    other: verdict.config_fingerprint.clone(),
                });
            }
            Some(_) => {}
        }
        let slot = Language::ALL.iter().position(|l| *l == verdict.language).unwrap_or(0);
        counts[slot].add(verdict);
    }
    Ok(Language::ALL
        .iter()
        .zip(counts.iter())
        .map(|(lang, c)| c.summary(*lang, variant))
        .collect())
}
