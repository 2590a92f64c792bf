//! External compiler adapter for Java and C#.
//!
//! The snippet is written to `<unit>.java` or `<unit>.cs` in a scratch
//! directory and the configured command runs on it inside the sandbox.

use std::ffi::OsString;
use std::sync::OnceLock;

use regex::Regex;
use snipcheck_core::classify::compilation_unit_name;
use snipcheck_core::{Language, Snippet, Stage, StageOutcome};

use crate::config::CompilerConfig;
use crate::sandbox::{ExitKind, Invocation, Sandbox, SandboxError};

/// Recorded when a compiler exits badly without reporting a diagnostic.
pub const ADAPTER_CRASH: &str = "adapter-crash";

pub struct Compiler {
    language: Language,
    config: CompilerConfig,
    engine: String,
}

impl Compiler {
    pub fn new(language: Language, config: CompilerConfig) -> Self {
        let engine = config.program().unwrap_or("none").to_string();
        Compiler {
            language,
            config,
            engine,
        }
    }

    pub fn engine(&self) -> &str {
        &self.engine
    }

    fn extension(&self) -> &'static str {
        match self.language {
            Language::Java => "java",
            _ => "cs",
        }
    }

    pub fn compile(&self, sandbox: &Sandbox, snippet: &Snippet) -> StageOutcome {
        let Some(program) = self.config.program() else {
            return StageOutcome::unavailable(Stage::Compile, &self.engine, "no compiler configured");
        };
        let scratch = match sandbox.scratch() {
            Ok(dir) => dir,
            Err(e) => return StageOutcome::unavailable(Stage::Compile, &self.engine, e.to_string()),
        };
        let file = scratch
            .path()
            .join(format!("{}.{}", compilation_unit_name(&snippet.text), self.extension()));
        let outdir = scratch.path().join("out");
        if let Err(e) = std::fs::write(&file, &snippet.text).and_then(|_| std::fs::create_dir(&outdir)) {
            return StageOutcome::unavailable(Stage::Compile, &self.engine, e.to_string());
        }
        let args: Vec<OsString> = self.config.command[1..]
            .iter()
            .map(|a| {
                a.replace("{file}", &file.to_string_lossy())
                    .replace("{outdir}", &outdir.to_string_lossy())
                    .into()
            })
            .collect();
        let result = sandbox.execute(&Invocation {
            program,
            args,
            dir: scratch.path(),
            limit_memory: false,
        });
        let result = match result {
            Ok(r) => r,
            Err(SandboxError::NotFound(p)) => {
                return StageOutcome::unavailable(Stage::Compile, &self.engine, format!("program not found: {p}"))
            }
            Err(e) => return StageOutcome::unavailable(Stage::Compile, &self.engine, e.to_string()),
        };
        let mut output = String::from_utf8_lossy(&result.stdout).into_owned();
        output.push('\n');
        output.push_str(&String::from_utf8_lossy(&result.stderr));
        let errors = match self.language {
            Language::Java => javac_errors(&output),
            _ => csharp_errors(&output),
        };
        match result.exit {
            ExitKind::Code(0) => StageOutcome::pass(Stage::Compile, &self.engine),
            ExitKind::Code(_) if !errors.is_empty() => StageOutcome::fail(Stage::Compile, &self.engine, errors),
            _ => StageOutcome::fail(Stage::Compile, &self.engine, vec![ADAPTER_CRASH.to_string()]),
        }
    }
}

/// `File.java:N: error: message` lines. A following `symbol:` detail line
/// is appended as `message - detail`.
pub fn javac_errors(output: &str) -> Vec<String> {
    static HEAD: OnceLock<Regex> = OnceLock::new();
    let head = HEAD.get_or_init(|| Regex::new(r"^\S*?\.java:\d+: error: (.*)$").unwrap());
    let mut errors: Vec<String> = Vec::new();
    let mut open = false;
    for line in output.lines() {
        if let Some(c) = head.captures(line) {
            errors.push(c[1].trim().to_string());
            open = true;
        } else if open {
            if let Some(detail) = line.trim_start().strip_prefix("symbol:") {
                if let Some(last) = errors.last_mut() {
                    last.push_str(" - ");
                    last.push_str(detail.trim());
                }
                open = false;
            } else if line.trim_start().starts_with("location:") || head_like_warning(line) {
                open = false;
            }
        }
    }
    errors
}

fn head_like_warning(line: &str) -> bool {
    line.contains(".java:") && line.contains(": warning:")
}

/// `File.cs(l,c): error CSxxxx: message` lines, as `CSxxxx: message`.
pub fn csharp_errors(output: &str) -> Vec<String> {
    static LINE: OnceLock<Regex> = OnceLock::new();
    let re = LINE.get_or_init(|| Regex::new(r"\(\d+,\d+\): error (CS\d+): (.*?)(?:\s*\[[^\]]*\])?$").unwrap());
    output
        .lines()
        .filter_map(|line| re.captures(line.trim_end()))
        .map(|c| format!("{}: {}", &c[1], c[2].trim()))
        .collect()
}
