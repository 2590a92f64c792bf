//! Search-result usability: query construction, result resolution and
//! top-k scoring.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::{is_single_line, is_single_word};
use crate::tags::TagMap;
use crate::{CalendarDate, Error, Language, Post, Ratio, Snippet, UsabilityVerdict};

pub const DEFAULT_SITE: &str = "stackoverflow.com";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub query_id: String,
    pub question_id: u64,
    pub text: String,
    pub site_filter: String,
    pub keyword: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_range: Option<(CalendarDate, CalendarDate)>,
}

/// Settings shared by every query of one evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryTemplate {
    pub site_filter: String,
    pub keyword: String,
    pub date_range: Option<(CalendarDate, CalendarDate)>,
}

impl QueryTemplate {
    pub fn for_language(language: Language) -> Self {
        QueryTemplate {
            site_filter: DEFAULT_SITE.to_string(),
            keyword: language.display_name().to_string(),
            date_range: None,
        }
    }
}

/// Picks the `n` highest-voted titled questions of `language`, ties broken
/// by ascending id, and turns their titles into queries. The flag is true
/// when fewer than `n` questions were available.
pub fn select_queries<'a, I>(
    questions: I,
    language: Language,
    tag_map: &TagMap,
    n: usize,
    template: &QueryTemplate,
) -> (Vec<SearchQuery>, bool)
where
    I: IntoIterator<Item = &'a Post>,
{
    let mut eligible: Vec<&Post> = questions
        .into_iter()
        .filter(|q| q.is_question())
        .filter(|q| q.title.as_deref().is_some_and(|t| !t.trim().is_empty()))
        .filter(|q| tag_map.language_of(&q.tags) == Some(language))
        .collect();
    eligible.sort_by(|a, b| b.score.cmp(&a.score).then(a.id.cmp(&b.id)));
    let short = eligible.len() < n;
    let queries = eligible
        .into_iter()
        .take(n)
        .map(|q| SearchQuery {
            query_id: format!("q{}", q.id),
            question_id: q.id,
            text: q.title.clone().unwrap_or_default(),
            site_filter: template.site_filter.clone(),
            keyword: template.keyword.clone(),
            date_range: template.date_range,
        })
        .collect();
    (queries, short)
}

/// `<title> <keyword> site:<site> daterange:<start>-<end>`, where the date
/// bounds are Julian day numbers and the `daterange:` clause is present
/// only when the query has a range. Runs of whitespace in the title
/// collapse to one space.
pub fn render_query(query: &SearchQuery) -> Result<String, Error> {
    let title: Vec<&str> = query.text.split_whitespace().collect();
    if title.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut out = title.join(" ");
    if !query.keyword.is_empty() {
        out.push(' ');
        out.push_str(&query.keyword);
    }
    out.push_str(" site:");
    out.push_str(&query.site_filter);
    if let Some((start, end)) = query.date_range {
        out.push_str(&format!(" daterange:{}-{}", start.julian_day(), end.julian_day()));
    }
    Ok(out)
}

/// Question id named by a result URL such as
/// `https://stackoverflow.com/questions/1602934/check-if-a-given-key...`
/// or the short `/q/1602934` form, provided `in_corpus` knows it.
pub fn resolve_result<F: Fn(u64) -> bool>(url: &str, in_corpus: F) -> Option<u64> {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let (host, path) = rest.split_once('/').unwrap_or((rest, ""));
    let host = host.rsplit_once('@').map_or(host, |(_, h)| h);
    let host = host.split(':').next().unwrap_or(host).to_ascii_lowercase();
    if host != DEFAULT_SITE && !host.ends_with(".stackoverflow.com") {
        return None;
    }
    let path = path.split(['?', '#']).next().unwrap_or("");
    let mut segments = path.split('/').filter(|s| !s.is_empty());
    match segments.next() {
        Some("questions") | Some("q") => {}
        _ => return None,
    }
    let id: u64 = segments.next()?.parse().ok()?;
    in_corpus(id).then_some(id)
}

/// How an accepted answer with several snippets is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsablePolicy {
    /// One unit per answer, usable when any of its snippets is.
    #[default]
    AnyUsable,
    /// One unit per answer, usable only when all of its snippets are.
    AllUsable,
    /// One unit per snippet.
    PerSnippet,
}

/// Usability counts over some number of units (answers or snippets).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsabilityTally {
    pub units: u64,
    pub parsable: u64,
    pub runnable: u64,
    pub multiline: u64,
}

impl UsabilityTally {
    /// One unit with the given flags.
    pub fn single(parsable: bool, runnable: bool, multiline: bool) -> Self {
        UsabilityTally {
            units: 1,
            parsable: u64::from(parsable),
            runnable: u64::from(runnable),
            multiline: u64::from(multiline),
        }
    }

    pub fn merge(&mut self, other: &UsabilityTally) {
        self.units += other.units;
        self.parsable += other.parsable;
        self.runnable += other.runnable;
        self.multiline += other.multiline;
    }

    /// Folds one accepted answer's snippets under `policy`. Snippets with
    /// an unavailable tool are skipped; `None` if nothing is left.
    pub fn for_answer<'a, I>(snippets: I, policy: UsablePolicy) -> Option<Self>
    where
        I: IntoIterator<Item = (&'a Snippet, &'a UsabilityVerdict)>,
    {
        let mut per_snippet = UsabilityTally::default();
        for (snippet, verdict) in snippets {
            if verdict.any_unavailable() {
                continue;
            }
            let multiline = !is_single_word(&snippet.text) && !is_single_line(&snippet.text);
            per_snippet.merge(&UsabilityTally::single(verdict.parsable(), verdict.second_stage_passed(), multiline));
        }
        if per_snippet.units == 0 {
            return None;
        }
        let n = per_snippet.units;
        Some(match policy {
            UsablePolicy::PerSnippet => per_snippet,
            UsablePolicy::AnyUsable => {
                UsabilityTally::single(per_snippet.parsable > 0, per_snippet.runnable > 0, per_snippet.multiline > 0)
            }
            UsablePolicy::AllUsable => {
                UsabilityTally::single(per_snippet.parsable == n, per_snippet.runnable == n, per_snippet.multiline == n)
            }
        })
    }
}

/// Ranked URLs returned for one query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResults {
    pub query: SearchQuery,
    pub urls: Vec<String>,
    /// The provider failed; the query is left out of every aggregate.
    #[serde(default)]
    pub failed: bool,
}

/// Parsable / runnable / multi-line shares over the units of a set of
/// resolved results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopkRates {
    pub k: usize,
    pub parsable: Ratio,
    pub runnable: Ratio,
    pub multiline: Ratio,
}

impl TopkRates {
    fn add(&mut self, tally: &UsabilityTally) {
        self.parsable.denominator += tally.units;
        self.runnable.denominator += tally.units;
        self.multiline.denominator += tally.units;
        self.parsable.numerator += tally.parsable;
        self.runnable.numerator += tally.runnable;
        self.multiline.numerator += tally.multiline;
    }

    /// Rates from raw aggregate counts.
    pub fn from_tally(k: usize, tally: &UsabilityTally) -> Self {
        let mut rates = TopkRates { k, ..TopkRates::default() };
        rates.add(tally);
        rates
    }

    /// Number of units behind the rates.
    pub fn resolved(&self) -> u64 {
        self.parsable.denominator
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvalResult {
    pub query_id: String,
    /// Resolved question ids in rank order.
    pub ranked_post_ids: Vec<u64>,
    /// 1-based rank of the source question among the returned URLs.
    pub original_rank: Option<u32>,
    pub top1: Option<UsabilityTally>,
    pub topk: TopkRates,
    pub unresolved: u32,
}

/// Where the source question landed across all queries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankStats {
    pub first: u32,
    pub lower_in_top_k: u32,
    pub absent: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchEvaluation {
    pub k: usize,
    pub queries: Vec<QueryEvalResult>,
    pub top1: TopkRates,
    pub topk: TopkRates,
    pub rank_stats: RankStats,
    pub failed_queries: u32,
}

/// Scores the first `k` URLs of every query.
///
/// A URL counts only when it resolves to a corpus question whose accepted
/// answer has usability data (`usability`), and then contributes that
/// answer's tally. The top-1 figures use the URL
/// at rank 1 alone, so they draw on a subset of the top-k results. A
/// question id repeated within one result list counts once.
pub fn evaluate_topk<F, U>(results: &[QueryResults], k: usize, in_corpus: F, usability: U) -> SearchEvaluation
where
    F: Fn(u64) -> bool,
    U: Fn(u64) -> Option<UsabilityTally>,
{
    let mut eval = SearchEvaluation {
        k,
        queries: Vec::new(),
        top1: TopkRates { k: 1, ..TopkRates::default() },
        topk: TopkRates { k, ..TopkRates::default() },
        rank_stats: RankStats::default(),
        failed_queries: 0,
    };
    for result in results {
        if result.failed {
            eval.failed_queries += 1;
            continue;
        }
        let mut per_query = QueryEvalResult {
            query_id: result.query.query_id.clone(),
            ranked_post_ids: Vec::new(),
            original_rank: None,
            top1: None,
            topk: TopkRates { k, ..TopkRates::default() },
            unresolved: 0,
        };
        let mut seen = BTreeSet::new();
        for (rank, url) in result.urls.iter().take(k).enumerate() {
            let Some(id) = resolve_result(url, &in_corpus) else {
                per_query.unresolved += 1;
                continue;
            };
            if id == result.query.question_id && per_query.original_rank.is_none() {
                per_query.original_rank = Some(rank as u32 + 1);
            }
            if !seen.insert(id) {
                continue;
            }
            per_query.ranked_post_ids.push(id);
            let Some(u) = usability(id) else {
                continue;
            };
            per_query.topk.add(&u);
            eval.topk.add(&u);
            if rank == 0 {
                per_query.top1 = Some(u);
                eval.top1.add(&u);
            }
        }
        match per_query.original_rank {
            Some(1) => eval.rank_stats.first += 1,
            Some(_) => eval.rank_stats.lower_in_top_k += 1,
            None => eval.rank_stats.absent += 1,
        }
        eval.queries.push(per_query);
    }
    eval
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn q(id: u64, score: i64, title: &str, tags: &[&str]) -> Post {
        let mut p = Post::question(id, None, tags);
        p.score = score;
        p.title = Some(title.to_string());
        p
    }

    #[test]
    fn selects_top_voted_with_id_tiebreak() {
        let posts = vec![
            q(5, 7, "e", &["python"]),
            q(1, 9, "a", &["python"]),
            q(3, 7, "c", &["python"]),
            q(2, 2, "b", &["python"]),
            q(4, 1, "d", &["python"]),
            q(6, 99, "java one", &["java"]),
        ];
        let t = QueryTemplate::for_language(Language::Python);
        let (qs, short) = select_queries(&posts, Language::Python, &TagMap::default(), 3, &t);
        let ids: Vec<u64> = qs.iter().map(|q| q.question_id).collect();
        assert_eq!(ids, [1, 3, 5]);
        assert!(!short);
        let (none, _) = select_queries(&posts, Language::Python, &TagMap::default(), 0, &t);
        assert!(none.is_empty());
        let (all, short) = select_queries(&posts, Language::Python, &TagMap::default(), 10, &t);
        assert_eq!(all.len(), 5);
        assert!(short);
    }

    fn query(text: &str, range: Option<(CalendarDate, CalendarDate)>) -> SearchQuery {
        SearchQuery {
            query_id: "q1".into(),
            question_id: 1602934,
            text: text.into(),
            site_filter: DEFAULT_SITE.into(),
            keyword: "Python".into(),
            date_range: range,
        }
    }

    #[test]
    fn renders_queries() {
        let title = "Check if a given key already exists in a dictionary";
        assert_eq!(
            render_query(&query(title, None)).unwrap(),
            "Check if a given key already exists in a dictionary Python site:stackoverflow.com"
        );
        let range = (CalendarDate::new(2008, 7, 31).unwrap(), CalendarDate::new(2014, 4, 30).unwrap());
        assert_eq!(
            render_query(&query("a  b", Some(range))).unwrap(),
            "a b Python site:stackoverflow.com daterange:2454679-2456778"
        );
        assert_eq!(render_query(&query("  ", None)), Err(Error::EmptyQuery));
    }

    #[test]
    fn resolves_question_urls() {
        let all = |_| true;
        assert_eq!(
            resolve_result(
                "http://stackoverflow.com/questions/1602934/check-if-a-given-key-already-exists-in-a-dictionary",
                all
            ),
            Some(1602934)
        );
        assert_eq!(resolve_result("https://stackoverflow.com/q/42", all), Some(42));
        assert_eq!(resolve_result("https://stackoverflow.com/questions/42/t/43#43", all), Some(42));
        assert_eq!(resolve_result("https://stackoverflow.com/tags/python", all), None);
        assert_eq!(resolve_result("https://example.com/questions/42", all), None);
        assert_eq!(resolve_result("https://stackoverflow.com/questions/tagged/python", all), None);
        assert_eq!(resolve_result("https://stackoverflow.com/questions/42", |id| id != 42), None);
    }

    fn results(id: u64, urls: &[&str]) -> QueryResults {
        QueryResults {
            query: SearchQuery {
                question_id: id,
                ..query("t", None)
            },
            urls: urls.iter().map(|u| u.to_string()).collect(),
            failed: false,
        }
    }

    #[test]
    fn two_query_fixture_matches_hand_computation() {
        let url = |id: u64| format!("https://stackoverflow.com/questions/{id}/x");
        let u1 = url(1);
        let u2 = url(2);
        let u3 = url(3);
        let u4 = url(4);
        let rs = vec![
            results(1, &[&u1, &u2, "https://stackoverflow.com/tags/x"]),
            results(3, &[&u4, &u3, &u1]),
        ];
        let usability = |id: u64| match id {
            1 => Some(UsabilityTally::single(true, true, true)),
            2 => Some(UsabilityTally::single(true, false, false)),
            3 => Some(UsabilityTally::single(false, false, true)),
            _ => None,
        };
        let in_corpus = |id: u64| id <= 3;
        let e = evaluate_topk(&rs, 10, in_corpus, usability);
        // top-1: query 1 -> answer 1; query 2 rank 1 is id 4, not in corpus
        assert_eq!(e.top1.parsable, Ratio::new(1, 1));
        assert_eq!(e.top1.runnable, Ratio::new(1, 1));
        // top-10 resolved: 1, 2 | 3, 1
        assert_eq!(e.topk.parsable, Ratio::new(3, 4));
        assert_eq!(e.topk.runnable, Ratio::new(2, 4));
        assert_eq!(e.topk.multiline, Ratio::new(3, 4));
        assert_eq!(e.rank_stats, RankStats { first: 1, lower_in_top_k: 1, absent: 0 });
        assert_eq!(e.queries[0].unresolved, 1);
        assert_eq!(e.queries[1].original_rank, Some(2));
        assert_eq!(e.queries[1].ranked_post_ids, [3, 1]);
    }

    #[test]
    fn failed_and_empty_queries() {
        let mut failed = results(1, &[]);
        failed.failed = true;
        let e = evaluate_topk(&[failed, results(2, &[])], 10, |_| true, |_| None);
        assert_eq!(e.failed_queries, 1);
        assert_eq!(e.topk.parsable.value(), None);
        assert_eq!(e.rank_stats.absent, 1);
    }

    #[test]
    fn k_limits_the_window() {
        let rs = vec![results(9, &["https://stackoverflow.com/q/1", "https://stackoverflow.com/q/9"])];
        let e = evaluate_topk(&rs, 1, |_| true, |_| {
            Some(UsabilityTally::single(true, true, false))
        });
        assert_eq!(e.topk.resolved(), 1);
        assert_eq!(e.rank_stats.absent, 1);
    }

    fn verdict(id: &str, parse: bool, run: bool) -> UsabilityVerdict {
        use crate::{Stage, StageOutcome};
        let p = if parse {
            StageOutcome::pass(Stage::Parse, "t")
        } else {
            StageOutcome::fail(Stage::Parse, "t", vec!["e".into()])
        };
        let second = parse.then(|| {
            if run {
                StageOutcome::pass(Stage::Run, "t")
            } else {
                StageOutcome::fail(Stage::Run, "t", vec!["e".into()])
            }
        });
        UsabilityVerdict {
            snippet_id: id.into(),
            language: Language::Python,
            parse: p,
            second_stage: second,
            classified_at: 0,
            config_fingerprint: "f".into(),
        }
    }

    #[test]
    fn answer_policies() {
        let s1 = Snippet::new(1, 2, Language::Python, 0, "x = 1\ny = 2".into());
        let s2 = Snippet::new(1, 2, Language::Python, 1, "print x".into());
        let v1 = verdict(&s1.snippet_id, true, true);
        let v2 = verdict(&s2.snippet_id, true, false);
        let pairs = || [(&s1, &v1), (&s2, &v2)];
        assert_eq!(
            UsabilityTally::for_answer(pairs(), UsablePolicy::AnyUsable),
            Some(UsabilityTally::single(true, true, true))
        );
        assert_eq!(
            UsabilityTally::for_answer(pairs(), UsablePolicy::AllUsable),
            Some(UsabilityTally::single(true, false, false))
        );
        assert_eq!(
            UsabilityTally::for_answer(pairs(), UsablePolicy::PerSnippet),
            Some(UsabilityTally { units: 2, parsable: 2, runnable: 1, multiline: 1 })
        );
        assert_eq!(UsabilityTally::for_answer([], UsablePolicy::AnyUsable), None);
    }
}
