//! Streaming reader for Stack Exchange `Posts.xml` / `Users.xml` dumps and
//! the two-pass snippet extraction built on it.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use serde::{Deserialize, Serialize};
use snipcheck_core::features::SiblingSummary;
use snipcheck_core::html::{extract_code_blocks, has_surrounding_text};
use snipcheck_core::link::AcceptedIndex;
use snipcheck_core::tags::{parse_tags, TagMap};
use snipcheck_core::{Language, Post, PostType, Snippet};

use crate::store::NdjsonWriter;

/// Tallies of everything the reader had to skip or could not use.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpDiagnostics {
    pub rows: u64,
    /// Rows that could not be turned into a post.
    pub skipped: u64,
    pub skip_reasons: BTreeMap<String, u64>,
    /// Rows with a post type other than question or answer.
    pub other_post_types: u64,
}

impl DumpDiagnostics {
    fn skip(&mut self, reason: &str) {
        self.skipped += 1;
        *self.skip_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }
}

/// Iterator over the posts of a dump, one `row` element at a time.
///
/// Malformed rows are skipped and counted. An XML error (a truncated last
/// row, say) ends the stream and counts as one skipped row.
pub struct PostReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    diagnostics: DumpDiagnostics,
    done: bool,
}

impl PostReader<BufReader<File>> {
    pub fn open(path: &Path) -> io::Result<Self> {
        Ok(PostReader::new(BufReader::with_capacity(1 << 16, File::open(path)?)))
    }
}

impl<R: BufRead> PostReader<R> {
    pub fn new(source: R) -> Self {
        PostReader {
            reader: Reader::from_reader(source),
            buf: Vec::with_capacity(4096),
            diagnostics: DumpDiagnostics::default(),
            done: false,
        }
    }

    pub fn diagnostics(&self) -> &DumpDiagnostics {
        &self.diagnostics
    }
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = Post;

    fn next(&mut self) -> Option<Post> {
        while !self.done {
            self.buf.clear();
            let event = self.reader.read_event_into(&mut self.buf);
            match event {
                Ok(Event::Empty(e)) | Ok(Event::Start(e)) if e.name().as_ref() == "row" => {
                    self.diagnostics.rows += 1;
                    match post_from_row(&e) {
                        Ok(Some(post)) => return Some(post),
                        Ok(None) => self.diagnostics.other_post_types += 1,
                        Err(reason) => self.diagnostics.skip(reason),
                    }
                }
                Ok(Event::Eof) => self.done = true,
                Ok(_) => {}
                Err(_) => {
                    self.diagnostics.rows += 1;
                    self.diagnostics.skip("xml");
                    self.done = true;
                }
            }
        }
        None
    }
}

fn row_attributes(e: &BytesStart<'_>) -> Result<HashMap<String, String>, &'static str> {
    let mut map = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|_| "attribute")?;
        let key = attr.key.as_ref().to_string();
        let value = attr.normalized_value(XmlVersion::Implicit1_0).map_err(|_| "attribute")?;
        map.insert(key, value.into_owned());
    }
    Ok(map)
}

fn post_from_row(e: &BytesStart<'_>) -> Result<Option<Post>, &'static str> {
    let mut attrs = row_attributes(e)?;
    let num = |attrs: &HashMap<String, String>, key: &str| -> Result<Option<u64>, &'static str> {
        attrs.get(key).map(|v| v.trim().parse().map_err(|_| "number")).transpose()
    };
    let id = num(&attrs, "Id")?.ok_or("missing id")?;
    let post_type = match attrs.get("PostTypeId").map(String::as_str) {
        Some("1") => PostType::Question,
        Some("2") => PostType::Answer,
        Some(_) => return Ok(None),
        None => return Err("missing post type"),
    };
    let score = attrs
        .get("Score")
        .map(|v| v.trim().parse::<i64>().map_err(|_| "number"))
        .transpose()?
        .unwrap_or(0);
    let creation_date = attrs.get("CreationDate").and_then(|d| d.parse().ok());
    let post = Post {
        id,
        post_type,
        accepted_answer_id: num(&attrs, "AcceptedAnswerId")?,
        parent_id: num(&attrs, "ParentId")?,
        body: attrs.remove("Body").unwrap_or_default(),
        title: attrs.remove("Title"),
        tags: attrs.get("Tags").map(|t| parse_tags(t)).unwrap_or_default(),
        score,
        view_count: num(&attrs, "ViewCount")?,
        owner_user_id: num(&attrs, "OwnerUserId")?,
        owner_reputation: None,
        comment_count: num(&attrs, "CommentCount")?.map(|c| c.min(u32::MAX as u64) as u32),
        creation_date,
    };
    post.validate().map_err(|_| "invariant")?;
    Ok(Some(post))
}

/// `Id -> Reputation` from a users dump.
pub fn read_reputations(path: &Path) -> io::Result<HashMap<u64, i64>> {
    let mut reader = Reader::from_reader(BufReader::new(File::open(path)?));
    let mut buf = Vec::new();
    let mut out = HashMap::new();
    loop {
        buf.clear();
        match reader.read_event_into(&mut buf) {
            Ok(Event::Empty(e)) | Ok(Event::Start(e)) if e.name().as_ref() == "row" => {
                if let Ok(attrs) = row_attributes(&e) {
                    let id = attrs.get("Id").and_then(|v| v.parse().ok());
                    let rep = attrs.get("Reputation").and_then(|v| v.parse().ok());
                    if let (Some(id), Some(rep)) = (id, rep) {
                        out.insert(id, rep);
                    }
                }
            }
            Ok(Event::Eof) | Err(_) => break,
            Ok(_) => {}
        }
    }
    Ok(out)
}

/// Everything later stages need to know about one accepted pair, without
/// post bodies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub language: Language,
    pub question: Post,
    pub answer: Post,
    pub siblings: SiblingSummary,
    pub has_surrounding_text: bool,
    pub snippet_count: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub dump: DumpDiagnostics,
    pub questions_with_accepted: u64,
    pub questions_without_language: u64,
    pub pairs: u64,
    pub dangling_accepted: u64,
    pub unclosed_code_spans: u64,
    pub empty_code_blocks: u64,
    pub snippets: BTreeMap<Language, u64>,
}

pub struct IngestOptions {
    pub tag_map: TagMap,
    pub languages: Vec<Language>,
    pub reputations: Option<HashMap<u64, i64>>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            tag_map: TagMap::default(),
            languages: Language::ALL.to_vec(),
            reputations: None,
        }
    }
}

/// Two passes over the dump. The first indexes questions with an accepted
/// answer in a wanted language; the second streams answers, emits the
/// snippets of accepted ones in file order and counts sibling answers.
/// `open` is called once per pass.
pub fn ingest<R, F, W>(open: F, options: &IngestOptions, snippets: &mut NdjsonWriter<W>) -> io::Result<(Vec<PairRecord>, IngestSummary)>
where
    R: BufRead,
    F: Fn() -> io::Result<R>,
    W: Write,
{
    let mut summary = IngestSummary::default();
    let mut languages: HashMap<u64, Language> = HashMap::new();

    let mut pass1 = PostReader::new(open()?);
    let mut index = AcceptedIndex::new();
    for post in pass1.by_ref() {
        if !post.is_question() || post.accepted_answer_id.is_none() {
            continue;
        }
        summary.questions_with_accepted += 1;
        match options.tag_map.language_of(&post.tags) {
            Some(lang) if options.languages.contains(&lang) => {
                languages.insert(post.id, lang);
                let mut question = post.without_body();
                attach_reputation(&mut question, options);
                index.insert(&question);
            }
            _ => summary.questions_without_language += 1,
        }
    }
    summary.dump = pass1.diagnostics().clone();

    let mut siblings: HashMap<u64, SiblingSummary> = HashMap::new();
    let mut accepted: Vec<(Post, Post, bool, u32)> = Vec::new();
    let mut pass2 = PostReader::new(open()?);
    for post in pass2.by_ref() {
        if !post.is_answer() {
            continue;
        }
        let parent = post.parent_id.unwrap_or(0);
        if languages.contains_key(&parent) {
            siblings.entry(parent).or_default().add(post.score);
        }
        let Some(question) = index.match_answer(&post) else {
            continue;
        };
        let language = languages[&question.id];
        let blocks = extract_code_blocks(&post.body);
        summary.unclosed_code_spans += blocks.unclosed_spans as u64;
        let mut emitted = 0u32;
        for (i, text) in blocks.blocks.into_iter().enumerate() {
            if text.trim().is_empty() {
                summary.empty_code_blocks += 1;
                continue;
            }
            let snippet = Snippet::new(question.id, post.id, language, i as u32, text);
            snippets.write(&snippet)?;
            *summary.snippets.entry(language).or_insert(0) += 1;
            emitted += 1;
        }
        let surrounding = has_surrounding_text(&post.body);
        let mut answer = post.without_body();
        attach_reputation(&mut answer, options);
        accepted.push((question, answer, surrounding, emitted));
    }
    let stats = index.stats();
    summary.pairs = stats.pairs;
    summary.dangling_accepted = stats.dangling;

    let pairs = accepted
        .into_iter()
        .map(|(question, answer, has_surrounding_text, snippet_count)| PairRecord {
            language: languages[&question.id],
            siblings: siblings.get(&question.id).copied().unwrap_or_default(),
            question,
            answer,
            has_surrounding_text,
            snippet_count,
        })
        .collect();
    Ok((pairs, summary))
}

fn attach_reputation(post: &mut Post, options: &IngestOptions) {
    if let (Some(map), Some(user)) = (&options.reputations, post.owner_user_id) {
        post.owner_reputation = map.get(&user).copied();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUMP: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" AcceptedAnswerId="7" Score="3" Title="Add ints" Tags="&lt;java&gt;&lt;math&gt;" CreationDate="2010-01-02T03:04:05.678" Body="&lt;p&gt;q&lt;/p&gt;" />
  <row Id="7" PostTypeId="2" ParentId="1" Score="5" Body="&lt;p&gt;Try&lt;/p&gt;&lt;pre&gt;&lt;code&gt;int a = 1 &amp;lt; 2;&#xA;&lt;/code&gt;&lt;/pre&gt;" />
  <row Id="8" PostTypeId="5" Body="wiki" />
</posts>
"#;

    #[test]
    fn maps_row_fields() {
        let posts: Vec<Post> = PostReader::new(DUMP.as_bytes()).collect();
        assert_eq!(posts.len(), 2);
        assert_eq!(posts[0].post_type, PostType::Question);
        assert_eq!(posts[0].accepted_answer_id, Some(7));
        assert_eq!(posts[0].tags, ["java", "math"]);
        assert_eq!(posts[0].creation_date.unwrap().to_string(), "2010-01-02");
        assert_eq!(posts[1].parent_id, Some(1));
        assert!(posts[1].body.contains("1 &lt; 2;\n</code>"));
    }

    #[test]
    fn counts_other_types_and_bad_rows() {
        let text = "<posts><row Id=\"x\" PostTypeId=\"1\" /><row PostTypeId=\"2\" ParentId=\"1\" /><row Id=\"3\" PostTypeId=\"2\" /><row Id=\"4\" PostTypeId=\"3\" /></posts>";
        let mut reader = PostReader::new(text.as_bytes());
        assert_eq!(reader.by_ref().count(), 0);
        let d = reader.diagnostics();
        assert_eq!((d.rows, d.skipped, d.other_post_types), (4, 3, 1));
    }

    #[test]
    fn truncated_final_row_is_one_skip() {
        let full = "<posts>\n<row Id=\"1\" PostTypeId=\"1\" />\n<row Id=\"2\" PostTypeId=\"2\" ParentId=\"1\" />\n<row Id=\"3\" PostTypeId=\"2\" ParentId=\"1\" />\n</posts>\n";
        let cut = &full[..full.rfind("<row").unwrap() + 12];
        let mut reader = PostReader::new(cut.as_bytes());
        assert_eq!(reader.by_ref().count(), 2);
        assert_eq!(reader.diagnostics().skipped, 1);
    }

    #[test]
    fn ingest_extracts_accepted_snippets() {
        let mut out = NdjsonWriter::new(Vec::new());
        let (pairs, summary) = ingest(|| Ok(DUMP.as_bytes()), &IngestOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out.into_inner().unwrap()).unwrap();
        let snippet: Snippet = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(snippet.text, "int a = 1 < 2;\n");
        assert_eq!(snippet.snippet_id, "7-0");
        assert_eq!(snippet.language, Language::Java);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].has_surrounding_text);
        assert_eq!(pairs[0].siblings.answer_count, 1);
        assert_eq!(summary.snippets[&Language::Java], 1);
        assert_eq!(summary.pairs, 1);
    }
}
