//! Acceptance checks. Prints one PASS, FAIL or UNVERIFIED line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines
//! always show up in `cargo test` output.

mod common;

use std::collections::HashMap;
use std::process::{Command, Stdio};
use std::time::Instant;

use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use snipcheck::dump::PairRecord;
use snipcheck::pipeline::{repair_all, RepairReport};
use snipcheck::report::{delta_rows, render_deltas, render_topk, Format};
use snipcheck::sandbox::find_program;
use snipcheck::search::{evaluate, FixtureStore};
use snipcheck_core::classify::{compilation_unit_name, StageChecker, PYTHON_V2, PYTHON_V3};
use snipcheck_core::features::{
    is_single_line, is_single_word, sample_stage, stage_population, SampleCandidate, SampleStage,
};
use snipcheck_core::rates::{aggregate_rates, validate_percentages, RateSummary, Variant};
use snipcheck_core::repair::{repair_class, repair_semicolons};
use snipcheck_core::search::{UsabilityTally, UsablePolicy};
use snipcheck_core::taxonomy::{build_histogram, normalize_message, ErrorRecord};
use snipcheck_core::{Language, Percent, Post, PostType, Snippet, Stage, StageOutcome, StageStatus, UsabilityVerdict};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    /// Nothing to check against in this environment.
    Unverified,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { verdict: Verdict::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { verdict: Verdict::Fail, detail: detail.into() }
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn runner() -> TestRunner {
    TestRunner::new(RunnerConfig {
        cases: 1000,
        failure_persistence: None,
        ..RunnerConfig::default()
    })
}

type Criterion = (&'static str, fn() -> Outcome);

/// Question id, title and the (parsable, runnable, multiline) flags of its
/// accepted answer; `None` when the toolchain was unavailable.
type SearchAnswer = (u64, &'static str, Option<(bool, bool, bool)>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("arithmetic reproduction", arithmetic),
        ("repair golden", repair_golden),
        ("pipeline gating", gating),
        ("oracle equivalence (parse, run)", oracle_parse_run),
        ("oracle equivalence (compile)", oracle_compile),
        ("repair non-regression", repair_non_regression),
        ("python dual engine", python_dual_engine),
        ("error taxonomy", taxonomy),
        ("filters", filters),
        ("search-eval replay", search_replay),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unverified => "UNVERIFIED",
        };
        println!("{tag} {name} [{secs:.2}s] {}", outcome.detail);
        if outcome.verdict == Verdict::Fail {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// Independent round-half-up to two decimals, in hundredths of a percent.
fn hundredths(count: u64, total: u64) -> u64 {
    let scaled = u128::from(count) * 10_000;
    let total = u128::from(total);
    ((scaled * 2 + total) / (total * 2)) as u64
}

fn printed(language: Language, variant: Variant, total: u64, p: (u64, u32), s: (u64, u32)) -> RateSummary {
    RateSummary::printed(
        language,
        variant,
        total,
        (p.0, Percent::from_hundredths(p.1)),
        (s.0, Percent::from_hundredths(s.1)),
    )
}

fn published_rows() -> Vec<RateSummary> {
    use Language::*;
    use Variant::*;
    vec![
        printed(CSharp, All, 810_829, (129_727, 1600), (986, 12)),
        printed(Java, All, 914_974, (35_619, 389), (9_177, 100)),
        printed(JavaScript, All, 816_227, (537_767, 6588), (163_247, 2000)),
        printed(Python, All, 527_774, (402_249, 7622), (135_147, 2561)),
        printed(CSharp, NoSingleWord, 514_992, (129_691, 2518), (986, 19)),
        printed(Java, NoSingleWord, 572_742, (35_619, 622), (9_177, 160)),
        printed(CSharp, AfterRepairs, 514_992, (135_421, 2630), (986, 19)),
        printed(Java, AfterRepairs, 572_742, (110_203, 1924), (17_286, 302)),
    ]
}

fn arithmetic() -> Outcome {
    let rows = published_rows();
    let mut cells = 0;
    for row in &rows {
        if let Err(v) = validate_percentages(row) {
            return fail(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "));
        }
        for cell in [row.parsable, row.second_stage] {
            if u64::from(cell.percent.hundredths()) != hundredths(cell.count, row.total) {
                return fail(format!("independent rounding disagrees on {:?}/{:?}", row.language, row.variant));
            }
            cells += 1;
        }
    }
    let deltas = render_deltas(&delta_rows(&rows, &[Language::CSharp, Language::Java]), Format::Text);
    let expected = [
        "C# parsable: 16.00 -> 25.18 -> 26.30 (+9.18, +1.12)",
        "Java parsable: 3.89 -> 6.22 -> 19.24 (+2.33, +13.02)",
        "Java compilable: 1.00 -> 1.60 -> 3.02 (+0.60, +1.42)",
    ];
    for line in expected {
        if !deltas.lines().any(|l| l == line) {
            return fail(format!("delta line missing: {line}\n{deltas}"));
        }
    }
    pass(format!("{cells} printed cells and 3 delta chains reproduce exactly"))
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect()
}

fn repair_golden() -> Outcome {
    let candidate = "public void main(String args []){\n  System.out.println(\"Hello World\");\n}";
    let expected = "class Program{\n  public void main(String args []){\n    System.out.println(\"Hello World\");\n  }\n}";
    let repaired = repair_class(candidate);
    if squash(&repaired) != squash(expected) {
        return fail(format!("class repair produced {repaired:?}"));
    }
    let snippet = Snippet::new(1, 1, Language::Java, 0, repaired);
    let parse = toolchain().parse(&snippet);
    if !parse.passed() {
        return fail(format!("repaired listing does not parse: {:?}", parse.errors));
    }
    let corrupt = [
        "try\n{  <code>\n}catch (Exception e) {\n}",
        " Double s_dev =\n     Math.pow(sum(mean_sq(al))/al.size(),0.5);",
        "if ()\n{   <code>\n}\nelse\n{   <code>\n}",
    ];
    for listing in corrupt {
        let out = repair_semicolons(listing);
        if out != listing {
            return fail(format!("semicolon repair changed {listing:?} into {out:?}"));
        }
    }
    pass("class wrap matches the listing and parses; 3 corruption listings untouched")
}

fn gating() -> Outcome {
    let verdicts = corpus_verdicts();
    let bad: Vec<&str> = verdicts
        .iter()
        .filter(|v| v.second_stage.is_some() && !v.parsable() || !v.is_well_formed())
        .map(|v| v.snippet_id.as_str())
        .collect();
    if !bad.is_empty() {
        return fail(format!("second stage without parse pass: {bad:?}"));
    }
    let rates = match aggregate_rates(verdicts, Variant::All) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let mut per_language = Vec::new();
    for r in &rates {
        if r.second_stage.count > r.parsable.count || r.parsable.count > r.total {
            return fail(format!("monotonicity broken for {:?}", r.language));
        }
        let n = corpus().iter().filter(|s| s.language == r.language).count();
        if n < 200 {
            return fail(format!("only {n} {:?} snippets", r.language));
        }
        per_language.push(format!("{}={}", r.language.id(), n));
    }
    pass(format!("{} verdicts gated, {}", verdicts.len(), per_language.join(" ")))
}

fn oracle_parse_run() -> Outcome {
    let oracle = oracle();
    let mismatches = oracle_mismatches(corpus_verdicts(), &oracle);
    if mismatches.is_empty() {
        let runs = oracle.iter().filter(|o| o.run.is_some()).count();
        return pass(format!("{} parse and {runs} run statuses agree", oracle.len()));
    }
    let sample: Vec<String> = mismatches.iter().take(5).map(|m| format!("{} ({}): want {}, got {}", m.0, m.1, m.2, m.3)).collect();
    fail(format!("{} disagreements, e.g. {}", mismatches.len(), sample.join("; ")))
}

/// Status of invoking the reference compiler directly on `text`.
fn direct_compile(program: &str, args: &[&str], ext: &str, text: &str) -> StageStatus {
    let dir = tempfile::tempdir().expect("tempdir");
    let file = dir.path().join(format!("{}.{ext}", compilation_unit_name(text)));
    std::fs::write(&file, text).expect("write source");
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).expect("outdir");
    let args: Vec<String> = args
        .iter()
        .map(|a| a.replace("{file}", &file.to_string_lossy()).replace("{outdir}", &out.to_string_lossy()))
        .collect();
    let status = Command::new(program)
        .args(&args)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status();
    match status {
        Ok(s) if s.success() => StageStatus::Pass,
        Ok(_) => StageStatus::Fail,
        Err(_) => StageStatus::ToolUnavailable,
    }
}

fn oracle_compile() -> Outcome {
    let compilers = [
        (Language::Java, "javac", vec!["-nowarn", "-source", "1.7", "-target", "1.7", "-d", "{outdir}", "{file}"], "java"),
        (Language::CSharp, "mcs", vec!["-target:library", "-out:{outdir}/snippet.dll", "{file}"], "cs"),
    ];
    let corpus = corpus();
    let verdicts = corpus_verdicts();
    let mut notes = Vec::new();
    let mut compared = 0;
    for (language, program, args, ext) in compilers {
        if find_program(program).is_none() {
            let unavailable = verdicts
                .iter()
                .filter(|v| v.language == language && v.parsable())
                .all(|v| v.second_stage.as_ref().is_some_and(StageOutcome::is_unavailable));
            if !unavailable {
                return fail(format!("{program} is absent but some {language:?} compile statuses are not tool-unavailable"));
            }
            notes.push(format!("{program} not installed, {language:?} compile statuses UNVERIFIED"));
            continue;
        }
        for (s, v) in corpus.iter().zip(verdicts) {
            if s.language != language || !v.parsable() {
                continue;
            }
            let expected = direct_compile(program, &args, ext, &s.text);
            let found = v.second_stage.as_ref().map(|o| o.status);
            if found != Some(expected) {
                return fail(format!("{}: direct {program} says {expected:?}, pipeline {found:?}", s.snippet_id));
            }
            compared += 1;
        }
    }
    if compared == 0 {
        return Outcome {
            verdict: Verdict::Unverified,
            detail: notes.join("; "),
        };
    }
    pass(format!("{compared} compile statuses agree with direct invocation; {}", notes.join("; ")))
}

fn code_line() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        Just(";".to_string()),
        Just("{".to_string()),
        Just("}".to_string()),
        Just("(".to_string()),
        Just(")".to_string()),
        Just("=".to_string()),
        Just("class".to_string()),
        Just("if".to_string()),
        Just("else".to_string()),
        Just("try".to_string()),
        Just("return".to_string()),
        "[a-z][a-zA-Z0-9_]{0,6}",
        "[0-9]{1,3}",
        Just("\"s;\"".to_string()),
        Just("//".to_string()),
    ];
    (prop::collection::vec(token, 0..8), "[ \t]{0,3}").prop_map(|(tokens, indent)| format!("{indent}{}", tokens.join(" ")))
}

fn repair_non_regression() -> Outcome {
    let corpus = corpus();
    let verdicts = corpus_verdicts();
    let outcomes = match repair_all(toolchain(), &corpus, verdicts, jobs(), 0) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let report = RepairReport::from_outcomes(&outcomes);
    let mut summary = Vec::new();
    for language in [Language::Java, Language::CSharp] {
        let Some(c) = report.languages.get(&language) else {
            return fail(format!("no {language:?} repair outcomes"));
        };
        if c.parsable_after < c.parsable_before {
            return fail(format!("{language:?} parsable fell from {} to {}", c.parsable_before, c.parsable_after));
        }
        summary.push(format!("{} {}->{}", language.id(), c.parsable_before, c.parsable_after));
    }
    let mut runner = runner();
    let idempotent = runner.run(&code_line(), |line| {
        let once = repair_semicolons(&line);
        prop_assert_eq!(repair_semicolons(&once), once);
        Ok(())
    });
    if let Err(e) = idempotent {
        return fail(format!("semicolon repair not idempotent: {e}"));
    }
    pass(format!("parsable {}; semicolon repair idempotent on 1000 random lines", summary.join(", ")))
}

fn python_dual_engine() -> Outcome {
    let cases = [
        ("print \"hello\"", true, PYTHON_V2),
        ("def f(*, a):\n    return a", true, PYTHON_V3),
        ("print \"x\"\nprint(f\"{x}\")", false, PYTHON_V2),
    ];
    for (text, parsable, engine) in cases {
        let snippet = Snippet::new(1, 1, Language::Python, 0, text.to_string());
        let outcome = toolchain().parse(&snippet);
        if outcome.passed() != parsable || outcome.engine != engine {
            return fail(format!("{text:?}: got {:?} via {}", outcome.status, outcome.engine));
        }
    }
    pass("v2-only and v3-only fixtures parse, the both-invalid one does not")
}

fn message() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Z]{1,8}",
        "[0-9]{1,4}",
        Just("'foo'".to_string()),
        Just("\"bar baz\"".to_string()),
        Just("/tmp/x/Main.java:12:3".to_string()),
        Just("line 4".to_string()),
        Just("variable count".to_string()),
        Just("is not defined".to_string()),
        Just(":".to_string()),
    ];
    prop::collection::vec(piece, 0..10).prop_map(|p| p.join(" "))
}

fn taxonomy() -> Outcome {
    let mut runner = runner();
    let idempotent = runner.run(&message(), |raw| {
        let once = normalize_message(&raw);
        prop_assert_eq!(normalize_message(&once), once);
        Ok(())
    });
    if let Err(e) = idempotent {
        return fail(format!("normalization not idempotent: {e}"));
    }

    // 10k records from a fixed linear congruential stream.
    let heads = [
        "cannot find symbol",
        "incompatible types: {q} cannot be converted to {q}",
        "{q} expected",
        "illegal start of expression",
        "class {q} is public, should be declared in a file named {q}",
        "unreachable statement",
        "missing return statement",
        "variable {q} might not have been initialized",
        "NameError: name {q} is not defined",
        "TypeError: {q} is not a function",
        "SyntaxError: Unexpected token {q}",
        "IndentationError: unexpected indent at line {n}",
        "The name {q} does not exist in the current context",
        "CS{n}: Invalid token {q}",
        "error at /tmp/build/Main.java:{n}:{n}",
    ];
    let mut state: u64 = 0x5eed;
    let mut next = || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        state >> 33
    };
    let records: Vec<ErrorRecord> = (0..10_000)
        .map(|i| {
            let head = heads[(next() % heads.len() as u64) as usize];
            let mut raw = String::new();
            let mut rest = head;
            while let Some(at) = rest.find('{') {
                raw.push_str(&rest[..at]);
                let hole = &rest[at..at + 3];
                if hole == "{q}" {
                    raw.push_str(&format!("'v{}'", next() % 50));
                } else {
                    raw.push_str(&(next() % 500).to_string());
                }
                rest = &rest[at + 3..];
            }
            raw.push_str(rest);
            // A suffix on about a third of the records multiplies the templates.
            if next() % 3 == 0 {
                raw.push_str(&format!(" (kind {})", ["a", "b", "c"][(next() % 3) as usize]));
            }
            ErrorRecord {
                language: Language::Java,
                stage: Stage::Parse,
                template: normalize_message(&raw),
                raw,
                snippet_id: format!("{i}-0"),
            }
        })
        .collect();
    let histogram = match build_histogram(Language::Java, Stage::Parse, &records, usize::MAX) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for r in &records {
        *counts.entry(r.template.as_str()).or_default() += 1;
    }
    let mut brute: Vec<(&str, u64)> = counts.into_iter().collect();
    brute.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let got: Vec<(&str, u64)> = histogram.entries.iter().map(|e| (e.template.as_str(), e.count)).collect();
    if got != brute || histogram.total != 10_000 {
        return fail("histogram differs from the brute-force group count");
    }
    pass(format!("normalization idempotent on 1000 messages; 10k-record histogram ({} templates) matches", got.len()))
}

fn filters() -> Outcome {
    let mut runner = runner();
    let implication = runner.run(&"[ \n\t\ra-zA-Z0-9_();.=]{0,24}", |text| {
        prop_assert!(!is_single_word(&text) || is_single_line(&text));
        Ok(())
    });
    if let Err(e) = implication {
        return fail(format!("single word without single line: {e}"));
    }

    let corpus = corpus();
    let verdicts = corpus_verdicts();
    let candidates: Vec<SampleCandidate> = corpus
        .iter()
        .zip(verdicts)
        .filter(|(s, v)| s.language == Language::Python && v.second_stage_passed())
        .map(|(s, v)| SampleCandidate::new(s, v))
        .collect();
    let all = stage_population(&candidates, SampleStage::All);
    let no_word = stage_population(&candidates, SampleStage::NoSingleWord);
    let multi = stage_population(&candidates, SampleStage::NoSingleWordNoSingleLine);
    let ids = |p: &[&SampleCandidate]| p.iter().map(|c| c.snippet_id.clone()).collect::<std::collections::BTreeSet<_>>();
    let (a, b, c) = (ids(&all), ids(&no_word), ids(&multi));
    if !(c.is_subset(&b) && b.is_subset(&a)) {
        return fail("sampling populations are not nested");
    }
    for stage in [SampleStage::All, SampleStage::NoSingleWord, SampleStage::NoSingleWordNoSingleLine] {
        for seed in [0, 1, 2014] {
            let first = sample_stage(&candidates, stage, 20, seed);
            if first != sample_stage(&candidates, stage, 20, seed) {
                return fail(format!("{stage:?} sample differs between draws with seed {seed}"));
            }
        }
    }
    check(
        a.len() > b.len() && b.len() > c.len(),
        format!("single word => single line on 1000 inputs; populations {} > {} > {}; seeded draws repeat", a.len(), b.len(), c.len()),
    )
}

// Search fixture: questions 101..113; 101..110 are the queried ones.
fn search_answers() -> Vec<SearchAnswer> {
    vec![
        (101, "How do I merge two dictionaries in a single expression", Some((true, true, true))),
        (102, "How do I check whether a file exists without exceptions", Some((true, false, true))),
        (103, "What does the yield keyword do", Some((true, true, false))),
        (104, "Accessing the index in for loops", Some((false, false, true))),
        (105, "How to make a flat list out of a list of lists", Some((true, false, false))),
        (106, "Does Python have a ternary conditional operator", Some((true, true, true))),
        (107, "What are metaclasses", Some((false, false, false))),
        (108, "How do I list all files of a directory", Some((true, false, true))),
        (109, "Calling an external command", Some((true, true, false))),
        (110, "How can I safely create a nested directory", Some((true, false, false))),
        (111, "Sorting a dictionary by value", Some((true, true, true))),
        (112, "Iterating over dictionaries", Some((false, false, true))),
        (113, "Reading a file line by line", None),
    ]
}

fn post(id: u64, post_type: PostType, title: Option<&str>, score: i64) -> Post {
    Post {
        id,
        post_type,
        accepted_answer_id: None,
        parent_id: None,
        body: String::new(),
        title: title.map(String::from),
        tags: vec!["python".into()],
        score,
        view_count: None,
        owner_user_id: None,
        owner_reputation: None,
        comment_count: None,
        creation_date: None,
    }
}

fn verdict(snippet: &Snippet, parse: StageStatus, run: Option<StageStatus>) -> UsabilityVerdict {
    let outcome = |stage, status| StageOutcome {
        stage,
        status,
        errors: Vec::new(),
        engine: PYTHON_V3.into(),
    };
    UsabilityVerdict {
        snippet_id: snippet.snippet_id.clone(),
        language: Language::Python,
        parse: outcome(Stage::Parse, parse),
        second_stage: run.map(|s| outcome(Stage::Run, s)),
        classified_at: 0,
        config_fingerprint: "fixture".into(),
    }
}

fn search_corpus() -> (Vec<PairRecord>, Vec<Snippet>, Vec<UsabilityVerdict>) {
    let (mut pairs, mut snippets, mut verdicts) = (Vec::new(), Vec::new(), Vec::new());
    for (qid, title, usability) in search_answers() {
        let answer_id = qid * 10;
        let mut question = post(qid, PostType::Question, Some(title), 1000 - qid as i64);
        question.accepted_answer_id = Some(answer_id);
        let mut answer = post(answer_id, PostType::Answer, None, 10);
        answer.parent_id = Some(qid);
        pairs.push(PairRecord {
            language: Language::Python,
            question,
            answer,
            siblings: Default::default(),
            has_surrounding_text: true,
            snippet_count: 1,
        });
        let status = |b: bool| if b { StageStatus::Pass } else { StageStatus::Fail };
        let block = snippets.len() as u32;
        match usability {
            None => {
                let s = Snippet::new(qid, answer_id, Language::Python, block, "x = 1\ny = 2".into());
                verdicts.push(verdict(&s, StageStatus::ToolUnavailable, None));
                snippets.push(s);
            }
            Some((p, r, m)) => {
                let text = if m { "a = 1\nprint(a)" } else { "print(1)" };
                let s = Snippet::new(qid, answer_id, Language::Python, block, text.into());
                verdicts.push(verdict(&s, status(p), p.then_some(status(r))));
                snippets.push(s);
                if qid == 101 {
                    // A second, unusable snippet; the answer still counts as usable.
                    let s = Snippet::new(qid, answer_id, Language::Python, block + 1000, "foo(".into());
                    verdicts.push(verdict(&s, StageStatus::Fail, None));
                    snippets.push(s);
                }
            }
        }
    }
    (pairs, snippets, verdicts)
}

fn search_replay() -> Outcome {
    let mut config = test_config();
    config.search.queries = 10;
    config.search.k = 10;
    config.search.policy = UsablePolicy::AnyUsable;
    let store = FixtureStore::new(fixture("search"));
    let (pairs, snippets, verdicts) = search_corpus();
    let outcome = match evaluate(&config.search, &config.tags, &pairs, &snippets, &verdicts, &store) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let e = &outcome.evaluation;
    if !outcome.failures.is_empty() || e.queries.len() != 10 {
        return fail(format!("replay failures: {:?}", outcome.failures));
    }
    // Worked by hand from the fixture URL lists (see search_answers).
    let top1 = (6, 5, 2, 4);
    let topk = (23, 17, 9, 13);
    let got = |r: &snipcheck_core::search::TopkRates| (r.resolved(), r.parsable.numerator, r.runnable.numerator, r.multiline.numerator);
    if got(&e.top1) != top1 || got(&e.topk) != topk {
        return fail(format!("top-1 {:?} top-10 {:?}, expected {top1:?} {topk:?}", got(&e.top1), got(&e.topk)));
    }
    let rates = [
        (e.top1.parsable, "83.33%"),
        (e.top1.runnable, "33.33%"),
        (e.top1.multiline, "66.67%"),
        (e.topk.parsable, "73.91%"),
        (e.topk.runnable, "39.13%"),
        (e.topk.multiline, "56.52%"),
    ];
    for (ratio, want) in rates {
        if ratio.percent_string(2).as_deref() != Some(want) {
            return fail(format!("rate {:?} renders as {:?}, expected {want}", ratio, ratio.percent_string(2)));
        }
    }
    let s = e.rank_stats;
    if (s.first, s.lower_in_top_k, s.absent) != (5, 4, 1) {
        return fail(format!("rank stats {s:?}"));
    }

    // Published aggregates, fed back as raw counts.
    let paper_top1 = snipcheck_core::search::TopkRates::from_tally(1, &UsabilityTally { units: 169, parsable: 132, runnable: 52, multiline: 57 });
    let paper_top10 = snipcheck_core::search::TopkRates::from_tally(10, &UsabilityTally { units: 249, parsable: 194, runnable: 73, multiline: 81 });
    let table = render_topk(&paper_top1, &paper_top10, Format::Text);
    let row = |label: &str| table.lines().find(|l| l.starts_with(label)).map(|l| l.split_whitespace().collect::<Vec<_>>());
    let want1 = ["Top", "1", "78.1%", "30.8%", "33.7%", "169"];
    let want10 = ["Top", "10", "77.9%", "29.3%", "32.5%", "249"];
    if row("Top 1 ").as_deref() != Some(&want1[..]) || row("Top 10").as_deref() != Some(&want10[..]) {
        return fail(format!("table 6 renders as\n{table}"));
    }
    pass("10 recorded queries give top-1 5/6, 2/6, 4/6 and top-10 17/23, 9/23, 13/23; published rows render 78.1/30.8/33.7 and 77.9/29.3/32.5")
}
