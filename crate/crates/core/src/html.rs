//! Code-span extraction from post bodies.

use alloc::string::String;
use alloc::vec::Vec;

const CLOSE: &str = "</code>";

/// Code spans found in a body, plus how many opening tags were never closed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CodeBlocks {
    pub blocks: Vec<String>,
    pub unclosed_spans: usize,
}

/// Returns the decoded contents of every `<code>...</code>` span in document
/// order. Whitespace inside a span is kept byte for byte. An opening tag with
/// no matching close ends the scan and is reported in `unclosed_spans`.
pub fn extract_code_blocks(body: &str) -> CodeBlocks {
    let mut out = CodeBlocks::default();
    let mut rest = body;
    while let Some((content_start, _)) = find_open_tag(rest) {
        let after_open = &rest[content_start..];
        match after_open.find(CLOSE) {
            Some(end) => {
                out.blocks.push(decode_entities(&after_open[..end]));
                rest = &after_open[end + CLOSE.len()..];
            }
            None => {
                out.unclosed_spans += 1;
                break;
            }
        }
    }
    out
}

/// Finds the next `<code>` or `<code attr=...>` tag. Returns the offset just
/// past the tag and the offset where the tag starts.
fn find_open_tag(s: &str) -> Option<(usize, usize)> {
    let mut from = 0;
    while let Some(pos) = s[from..].find("<code") {
        let start = from + pos;
        let after = &s[start + 5..];
        match after.chars().next() {
            Some('>') => return Some((start + 6, start)),
            Some(c) if c.is_ascii_whitespace() => {
                let gt = after.find('>')?;
                return Some((start + 5 + gt + 1, start));
            }
            _ => from = start + 5,
        }
    }
    None
}

/// Decodes the HTML entities that show up inside code spans: the named
/// `&lt; &gt; &amp; &quot; &apos; &nbsp;` and numeric `&#NN;` / `&#xHH;`.
/// Unknown entities are left as written. Decoding is single pass, so
/// `&amp;lt;` becomes `&lt;`.
pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        match decode_one(tail) {
            Some((ch, used)) => {
                out.push(ch);
                rest = &tail[used..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_one(tail: &str) -> Option<(char, usize)> {
    let semi = tail[..tail.len().min(12)].find(';')?;
    let name = &tail[1..semi];
    let ch = match name {
        "lt" => '<',
        "gt" => '>',
        "amp" => '&',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => '\u{a0}',
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)?
        }
    };
    Some((ch, semi + 1))
}

/// True when the body has visible text outside its code spans.
pub fn has_surrounding_text(body: &str) -> bool {
    let mut outside = String::new();
    let mut rest = body;
    loop {
        match find_open_tag(rest) {
            Some((content_start, tag_start)) => {
                outside.push_str(&rest[..tag_start]);
                let after_open = &rest[content_start..];
                match after_open.find(CLOSE) {
                    Some(end) => rest = &after_open[end + CLOSE.len()..],
                    None => {
                        rest = "";
                    }
                }
            }
            None => {
                outside.push_str(rest);
                break;
            }
        }
    }
    let text = strip_tags(&outside);
    decode_entities(&text).chars().any(|c| !c.is_whitespace())
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fenced_block_keeps_newline() {
        let got = extract_code_blocks("<p>use</p><pre><code>x = 1\n</code></pre>");
        assert_eq!(got.blocks, vec!["x = 1\n"]);
        assert_eq!(got.unclosed_spans, 0);
    }

    #[test]
    fn decodes_entities() {
        assert_eq!(extract_code_blocks("<code>a &lt; b</code>").blocks, vec!["a < b"]);
        assert_eq!(decode_entities("&quot;x&quot; &amp;&amp; y &gt; 2"), "\"x\" && y > 2");
        assert_eq!(decode_entities("&amp;lt;"), "&lt;");
        assert_eq!(decode_entities("&#39;&#x41;"), "'A");
        assert_eq!(decode_entities("AT&T &bogus;"), "AT&T &bogus;");
    }

    #[test]
    fn blocks_come_out_in_document_order() {
        let body = "<p>a <code>one</code></p><pre class=\"lang-py\"><code>two\n</code></pre><code class=\"x\">three</code>";
        assert_eq!(extract_code_blocks(body).blocks, vec!["one", "two\n", "three"]);
    }

    #[test]
    fn unclosed_span_is_counted_and_dropped() {
        let got = extract_code_blocks("<code>ok</code><p>then</p><code>never closed");
        assert_eq!(got.blocks, vec!["ok"]);
        assert_eq!(got.unclosed_spans, 1);
    }

    #[test]
    fn lookalike_tags_are_not_code() {
        assert!(extract_code_blocks("<codex>no</codex>").blocks.is_empty());
    }

    #[test]
    fn surrounding_text_detection() {
        assert!(!has_surrounding_text("<code>x</code>"));
        assert!(!has_surrounding_text("<pre><code>x\n</code></pre>\n"));
        assert!(has_surrounding_text("<p>Try this:</p><pre><code>x</code></pre>"));
        assert!(!has_surrounding_text("<p>&nbsp;</p><code>x</code>"));
    }
}
