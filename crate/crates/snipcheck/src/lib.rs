//! Command-line toolchain around `snipcheck-core`: dump ingestion, sandboxed
//! frontends, run directories, search providers and report rendering.

pub mod config;
pub mod dump;
pub mod frontend;
pub mod sandbox;
pub mod store;
pub mod pipeline;
pub mod run;
pub mod report;
pub mod search;
