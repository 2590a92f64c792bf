//! Core algorithms for measuring how usable Q&A code snippets are.
//!
//! This crate is `no_std` and only needs `alloc`. Everything that touches
//! files, processes or the network lives in the `snipcheck` crate; here we
//! keep the pieces that are pure functions of their inputs:
//!
//! * [`html`] and [`tags`] pull code blocks out of post bodies and decide the
//!   language of a question.
//! * [`link`] joins questions with their accepted answers.
//! * [`classify`] sequences the parse / compile / run stages behind the
//!   [`classify::StageChecker`] trait, and [`repair`] runs the class-wrap and
//!   semicolon heuristics on top of it.
//! * [`taxonomy`] turns raw diagnostics into `[symbol]` templates.
//! * [`features`], [`search`] and [`rates`] compute the reported numbers.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod classify;
pub mod error;
pub mod features;
pub mod html;
pub mod link;
pub mod model;
pub mod percent;
pub mod rates;
pub mod repair;
pub mod search;
pub mod tags;
pub mod taxonomy;
mod token;

pub use error::Error;
pub use model::{
    CalendarDate, Language, Post, PostType, RepairKind, RepairOutcome, Snippet, Stage,
    StageOutcome, StageStatus, UsabilityVerdict,
};
pub use percent::{Percent, Ratio};
