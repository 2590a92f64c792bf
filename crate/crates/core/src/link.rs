//! Question / accepted-answer joining.
//!
//! Dumps do not promise that an answer follows its question, so linking is
//! two passes over the same post stream: the first pass indexes questions
//! by their accepted answer id, the second matches answers against that
//! index. Only body-less question rows are held in memory.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::Post;

/// Counters for posts that could not be paired.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub questions_indexed: u64,
    pub pairs: u64,
    /// Questions whose accepted answer id never resolved to an answer row.
    pub dangling: u64,
}

/// First-pass index: accepted answer id to the (body-less) question.
#[derive(Debug, Default)]
pub struct AcceptedIndex {
    by_answer: BTreeMap<u64, Post>,
    matched: BTreeSet<u64>,
    pairs: u64,
}

impl AcceptedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the index from any post stream, keeping only questions that
    /// name an accepted answer and that pass `keep`.
    pub fn build<I, F>(posts: I, mut keep: F) -> Self
    where
        I: IntoIterator<Item = Post>,
        F: FnMut(&Post) -> bool,
    {
        let mut index = AcceptedIndex::new();
        for post in posts {
            if post.is_question() && post.accepted_answer_id.is_some() && keep(&post) {
                index.insert(&post);
            }
        }
        index
    }

    pub fn insert(&mut self, question: &Post) {
        if let Some(answer_id) = question.accepted_answer_id {
            self.by_answer.insert(answer_id, question.without_body());
        }
    }

    pub fn len(&self) -> usize {
        self.by_answer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_answer.is_empty()
    }

    /// Question whose accepted answer has id `answer_id`.
    pub fn question_for(&self, answer_id: u64) -> Option<&Post> {
        self.by_answer.get(&answer_id)
    }

    /// Second-pass step: pairs `post` with its question when it is the
    /// accepted answer. Each question pairs at most once.
    pub fn match_answer(&mut self, post: &Post) -> Option<Post> {
        if !post.is_answer() {
            return None;
        }
        let question = self.by_answer.get(&post.id)?;
        if post.parent_id != Some(question.id) || !self.matched.insert(post.id) {
            return None;
        }
        self.pairs += 1;
        Some(question.clone())
    }

    /// Every indexed question whose accepted answer was never matched.
    pub fn stats(&self) -> LinkStats {
        let questions = self.by_answer.len() as u64;
        LinkStats {
            questions_indexed: questions,
            pairs: self.pairs,
            dangling: questions - self.matched.len() as u64,
        }
    }
}

/// In-memory convenience over the two passes: `posts` is walked twice.
pub fn link_accepted_pairs(posts: &[Post]) -> (Vec<(Post, Post)>, LinkStats) {
    let mut index = AcceptedIndex::build(posts.iter().cloned(), |_| true);
    let mut pairs = Vec::new();
    for post in posts {
        if let Some(question) = index.match_answer(post) {
            pairs.push((question, post.clone()));
        }
    }
    (pairs, index.stats())
}
