use alloc::vec::Vec;

/// Identifier characters for whole-word matching.
pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// True when `word` occurs in `text` with identifier boundaries on both
/// sides, so `class` matches in `public class A` but not in `classCount`.
pub(crate) fn contains_word(text: &str, word: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = text[from..].find(word) {
        let start = from + pos;
        let end = start + word.len();
        let before_ok = text[..start].chars().next_back().is_none_or(|c| !is_ident_char(c));
        let after_ok = text[end..].chars().next().is_none_or(|c| !is_ident_char(c));
        if before_ok && after_ok {
            return true;
        }
        from = start + word.len().max(1);
    }
    false
}

pub(crate) fn contains_any_word(text: &str, words: &[&str]) -> bool {
    words.iter().any(|w| contains_word(text, w))
}

/// Name of the first `class`, `interface` or `enum` declared in `text`.
/// Member access such as `Foo.class` is not a declaration.
pub(crate) fn first_declared_type(text: &str) -> Option<&str> {
    let is_word = |c: char| is_ident_char(c) || c == '$';
    let mut words = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices().chain(core::iter::once((text.len(), ' '))) {
        match (start, is_word(c)) {
            (None, true) => start = Some(i),
            (Some(s), false) => {
                let dotted = text[..s].trim_end().ends_with('.');
                words.push((&text[s..i], dotted));
                start = None;
            }
            _ => {}
        }
    }
    let mut iter = words.into_iter();
    while let Some((word, dotted)) = iter.next() {
        if !dotted && matches!(word, "class" | "interface" | "enum") {
            if let Some((name, _)) = iter.next() {
                if name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$') {
                    return Some(name);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_word_boundaries() {
        assert!(contains_word("public class A", "class"));
        assert!(contains_word("class", "class"));
        assert!(contains_word("(class)", "class"));
        assert!(!contains_word("int classCount = 0;", "class"));
        assert!(!contains_word("subclass x", "class"));
        assert!(!contains_word("class_name", "class"));
        assert!(contains_word("a classy class", "class"));
    }

    #[test]
    fn first_type_name() {
        assert_eq!(first_declared_type("public class Foo { }"), Some("Foo"));
        assert_eq!(first_declared_type("import x; enum E {A}"), Some("E"));
        assert_eq!(first_declared_type("int x;"), None);
        assert_eq!(first_declared_type("Foo.class.getName()"), None);
    }
}
