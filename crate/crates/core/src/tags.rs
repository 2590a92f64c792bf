//! Question tags to language identity.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Language;

/// Which tags mark a question as belonging to each language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagMap {
    pub csharp: Vec<String>,
    pub java: Vec<String>,
    pub javascript: Vec<String>,
    pub python: Vec<String>,
}

impl Default for TagMap {
    /// Conservative mapping. `node.js` is deliberately not JavaScript.
    fn default() -> Self {
        let owned = |tags: &[&str]| tags.iter().map(|t| t.to_string()).collect();
        TagMap {
            csharp: owned(&["c#"]),
            java: owned(&["java"]),
            javascript: owned(&["javascript"]),
            python: owned(&["python", "python-2.7", "python-3.x"]),
        }
    }
}

impl TagMap {
    pub fn tags_for(&self, language: Language) -> &[String] {
        match language {
            Language::CSharp => &self.csharp,
            Language::Java => &self.java,
            Language::JavaScript => &self.javascript,
            Language::Python => &self.python,
        }
    }

    /// The single language whose tag set intersects `tags`. Questions that
    /// match no language, or more than one, yield `None`.
    pub fn language_of<S: AsRef<str>>(&self, tags: &[S]) -> Option<Language> {
        let mut found = None;
        for language in Language::ALL {
            let set = self.tags_for(language);
            if tags.iter().any(|t| set.iter().any(|s| s == t.as_ref())) {
                if found.is_some() {
                    return None;
                }
                found = Some(language);
            }
        }
        found
    }
}

/// [`TagMap::language_of`] with the default mapping.
pub fn language_of<S: AsRef<str>>(tags: &[S]) -> Option<Language> {
    TagMap::default().language_of(tags)
}

/// Splits a dump `Tags` attribute. Older dumps write `<java><string>`,
/// newer ones `|java|string|`. Tags are lowercased.
pub fn parse_tags(raw: &str) -> Vec<String> {
    raw.split(['<', '>', '|'])
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}
