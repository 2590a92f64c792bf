//! Snippet quality features and the staged random sampling used for manual
//! review.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::html::has_surrounding_text;
use crate::{Post, Ratio, Snippet, UsabilityVerdict};

/// One token made only of letters, e.g. `print` but not `print()`.
pub fn is_single_word(text: &str) -> bool {
    let trimmed = text.trim();
    !trimmed.is_empty() && trimmed.chars().all(char::is_alphabetic)
}

/// No line break once surrounding whitespace is trimmed.
pub fn is_single_line(text: &str) -> bool {
    !text.trim().contains(['\n', '\r'])
}

/// Automatable snippet features. Field comments give the row number in
/// the feature table used for manual review.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub snippet_id: String,
    /// 1
    pub question_votes: i64,
    /// 2
    pub answer_votes: i64,
    /// 3
    pub total_answers: u32,
    /// 4
    pub accepted_is_best: bool,
    /// 5
    pub questioner_reputation: Option<i64>,
    /// 6
    pub answerer_reputation: Option<i64>,
    /// 11
    pub single_word: bool,
    /// 12
    pub single_line: bool,
    /// 13
    pub has_surrounding_text: bool,
    /// 14
    pub comment_count: u32,
    /// 16
    pub tags: Vec<String>,
}

/// Aggregate over all answers of one question (accepted one included).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiblingSummary {
    pub answer_count: u32,
    pub max_score: Option<i64>,
}

impl SiblingSummary {
    pub fn add(&mut self, score: i64) {
        self.answer_count += 1;
        self.max_score = Some(self.max_score.map_or(score, |m| m.max(score)));
    }

    pub fn from_answers<'a, I: IntoIterator<Item = &'a Post>>(answers: I) -> Self {
        let mut summary = SiblingSummary::default();
        for answer in answers {
            summary.add(answer.score);
        }
        summary
    }
}

/// Fills every feature that needs no human judgement. The accepted answer
/// is the best answer when no sibling out-scores it.
pub fn compute_features(
    question: &Post,
    answer: &Post,
    snippet: &Snippet,
    siblings: &SiblingSummary,
    comment_count: u32,
) -> FeatureVector {
    let single_word = is_single_word(&snippet.text);
    FeatureVector {
        snippet_id: snippet.snippet_id.clone(),
        question_votes: question.score,
        answer_votes: answer.score,
        total_answers: siblings.answer_count,
        accepted_is_best: siblings.max_score.is_none_or(|max| answer.score >= max),
        questioner_reputation: question.owner_reputation,
        answerer_reputation: answer.owner_reputation,
        single_word,
        single_line: single_word || is_single_line(&snippet.text),
        has_surrounding_text: has_surrounding_text(&answer.body),
        comment_count,
        tags: question.tags.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerQuality {
    No,
    CorrectIncomplete,
    Yes,
}

/// Features only a human can judge. Absent until a coder fills them in.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub snippet_id: String,
    /// 7
    pub title_summarizes: Option<bool>,
    /// 8
    pub description_clear: Option<bool>,
    /// 9
    pub specific_coding_question: Option<bool>,
    /// 10
    pub answers_correct_and_complete: Option<AnswerQuality>,
    /// 15
    pub questioner_compliment: Option<bool>,
    pub annotator: String,
}

impl Annotation {
    pub fn blank(snippet_id: impl Into<String>) -> Self {
        Annotation {
            snippet_id: snippet_id.into(),
            ..Annotation::default()
        }
    }
}

/// Populations for the three review rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStage {
    All,
    NoSingleWord,
    NoSingleWordNoSingleLine,
}

impl SampleStage {
    pub fn admits(self, candidate: &SampleCandidate) -> bool {
        match self {
            SampleStage::All => true,
            SampleStage::NoSingleWord => !candidate.single_word,
            SampleStage::NoSingleWordNoSingleLine => !candidate.single_word && !candidate.single_line,
        }
    }
}

/// What sampling needs to know about a snippet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCandidate {
    pub snippet_id: String,
    pub runnable: bool,
    pub single_word: bool,
    pub single_line: bool,
}

impl SampleCandidate {
    pub fn new(snippet: &Snippet, verdict: &UsabilityVerdict) -> Self {
        let single_word = is_single_word(&snippet.text);
        SampleCandidate {
            snippet_id: snippet.snippet_id.clone(),
            runnable: verdict.second_stage_passed(),
            single_word,
            single_line: single_word || is_single_line(&snippet.text),
        }
    }
}

/// Members of `stage`'s population, ordered by snippet id so the result
/// does not depend on input order.
pub fn stage_population(candidates: &[SampleCandidate], stage: SampleStage) -> Vec<&SampleCandidate> {
    let mut members: Vec<&SampleCandidate> = candidates.iter().filter(|c| stage.admits(c)).collect();
    members.sort_by(|a, b| a.snippet_id.cmp(&b.snippet_id));
    members
}

/// Uniform sample without replacement of `min(n, population)` ids from the
/// stage's population. The same seed always draws the same ids; they come
/// back in population order.
pub fn sample_stage(candidates: &[SampleCandidate], stage: SampleStage, n: usize, seed: u64) -> Vec<String> {
    let population = stage_population(candidates, stage);
    let amount = n.min(population.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, population.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| population[i].snippet_id.clone()).collect()
}

/// Runnable snippets that are neither single-word nor single-line, as a
/// share of all runnable snippets.
pub fn multiline_runnable_subset(candidates: &[SampleCandidate]) -> Ratio {
    let runnable = candidates.iter().filter(|c| c.runnable);
    let (mut total, mut multi) = (0u64, 0u64);
    for c in runnable {
        total += 1;
        if !c.single_word && !c.single_line {
            multi += 1;
        }
    }
    Ratio::new(multi, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Language;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn single_word_rule() {
        assert!(is_single_word("print"));
        assert!(is_single_word("  HashMap\n"));
        assert!(is_single_word("naïve"));
        assert!(!is_single_word("print()"));
        assert!(!is_single_word("hello world"));
        assert!(!is_single_word("x1"));
        assert!(!is_single_word(""));
    }

    #[test]
    fn single_line_rule() {
        assert!(is_single_line("x = 1"));
        assert!(!is_single_line("x = 1\ny = 2"));
        assert!(is_single_line("x = 1\n"));
        assert!(is_single_line("\n\n  x\n"));
    }

    fn snippet(text: &str) -> Snippet {
        Snippet::new(1, 2, Language::Python, 0, text.to_string())
    }

    #[test]
    fn features_from_posts() {
        let mut q = Post::question(1, Some(2), &["python"]);
        q.score = 5;
        q.owner_reputation = Some(100);
        let mut a = Post::answer(2, 1, "<code>x</code>");
        a.score = 10;
        let siblings = SiblingSummary { answer_count: 3, max_score: Some(10) };
        let f = compute_features(&q, &a, &snippet("x"), &siblings, 2);
        assert!(f.accepted_is_best);
        assert!(!f.has_surrounding_text);
        assert!(f.single_word && f.single_line);
        assert_eq!((f.question_votes, f.answer_votes, f.total_answers, f.comment_count), (5, 10, 3, 2));
        assert_eq!(f.questioner_reputation, Some(100));
        assert_eq!(f.answerer_reputation, None);

        let outvoted = SiblingSummary { answer_count: 3, max_score: Some(11) };
        assert!(!compute_features(&q, &a, &snippet("x"), &outvoted, 0).accepted_is_best);
    }

    #[test]
    fn sibling_summary_counts() {
        let mut answers: Vec<Post> = (0..4).map(|i| Post::answer(10 + i, 1, "")).collect();
        answers[2].score = 7;
        let s = SiblingSummary::from_answers(&answers);
        assert_eq!(s.answer_count, 4);
        assert_eq!(s.max_score, Some(7));
    }

    fn candidates() -> Vec<SampleCandidate> {
        (0..40)
            .map(|i| SampleCandidate {
                snippet_id: format!("s{i:02}"),
                runnable: i % 4 != 0,
                single_word: i % 3 == 0,
                single_line: i % 3 == 0 || i % 2 == 0,
            })
            .collect()
    }

    #[test]
    fn sampling_respects_filters_and_size() {
        let cs = candidates();
        let ids = sample_stage(&cs, SampleStage::NoSingleWordNoSingleLine, 50, 1);
        let pop = stage_population(&cs, SampleStage::NoSingleWordNoSingleLine);
        assert_eq!(ids.len(), pop.len());
        for id in &ids {
            let c = cs.iter().find(|c| &c.snippet_id == id).unwrap();
            assert!(!c.single_word && !c.single_line);
        }
        assert_eq!(sample_stage(&cs, SampleStage::All, 5, 9).len(), 5);
        assert!(sample_stage(&[], SampleStage::All, 5, 9).is_empty());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let cs = candidates();
        let a = sample_stage(&cs, SampleStage::All, 10, 42);
        assert_eq!(a, sample_stage(&cs, SampleStage::All, 10, 42));
        let mut reversed = cs.clone();
        reversed.reverse();
        assert_eq!(a, sample_stage(&reversed, SampleStage::All, 10, 42));
    }

    #[test]
    fn multiline_share() {
        let mk = |multi: bool| SampleCandidate {
            snippet_id: "x".into(),
            runnable: true,
            single_word: false,
            single_line: !multi,
        };
        let mut cs: Vec<SampleCandidate> = (0..10).map(|i| mk(i < 3)).collect();
        cs.push(SampleCandidate { runnable: false, ..mk(true) });
        let r = multiline_runnable_subset(&cs);
        assert_eq!((r.numerator, r.denominator), (3, 10));
        assert_eq!(r.percent_string(1).unwrap(), "30.0%");
        let none = multiline_runnable_subset(&[]);
        assert_eq!((none.numerator, none.denominator), (0, 0));
        assert_eq!(none.percent().to_string(), "0.00%");
        let _ = vec![0u8];
    }
}
