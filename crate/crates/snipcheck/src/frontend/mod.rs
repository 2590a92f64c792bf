//! Concrete parse, compile and run frontends behind `StageChecker`.

pub mod compile;
pub mod helper;
pub mod syntax;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::Serialize;
use snipcheck_core::classify::{combine_dual_parse, StageChecker, PYTHON_V2, PYTHON_V3};
use snipcheck_core::{Language, Snippet, Stage, StageOutcome};

use crate::config::Config;
use crate::sandbox::{ExitKind, Invocation, Sandbox, SandboxError};
use crate::store::sha256_hex;
use compile::Compiler;
use helper::{HelperError, HelperPool, Reply};
use syntax::{syntax_errors, SyntaxLanguage, CSHARP_GRAMMAR_VERSION, JAVA_GRAMMAR_VERSION};

const PYTHON_HELPER: &str = include_str!("../helpers/python_helper.py");
const JS_HELPER: &str = include_str!("../helpers/js_helper.js");

pub const JAVA_PARSER: &str = "tree-sitter-java";
pub const CSHARP_PARSER: &str = "tree-sitter-c-sharp";
pub const NODE: &str = "node";

/// Identity of every tool an outcome can depend on.
#[derive(Clone, Debug, Serialize)]
pub struct ToolVersions {
    pub snipcheck: String,
    pub python3: String,
    pub python2: String,
    pub node: String,
    pub java_compiler: String,
    pub csharp_compiler: String,
    pub java_grammar: String,
    pub csharp_grammar: String,
    pub helpers: BTreeMap<String, String>,
}

pub struct Toolchain {
    _scripts: tempfile::TempDir,
    python_script: PathBuf,
    js_script: PathBuf,
    python3: String,
    python2: Option<String>,
    node: String,
    py3_pool: HelperPool,
    py2_pool: Option<HelperPool>,
    node_pool: HelperPool,
    sandbox: Result<Sandbox, String>,
    java: Compiler,
    csharp: Compiler,
    versions: ToolVersions,
    fingerprint: String,
}

impl Toolchain {
    pub fn new(config: &Config) -> std::io::Result<Self> {
        let scripts = tempfile::Builder::new().prefix("snipcheck-helpers-").tempdir()?;
        let python_script = scripts.path().join("python_helper.py");
        let js_script = scripts.path().join("js_helper.js");
        std::fs::write(&python_script, PYTHON_HELPER)?;
        std::fs::write(&js_script, JS_HELPER)?;

        let timeout = Duration::from_millis(config.sandbox.timeout_ms);
        let python3 = config.python.python3.clone();
        let python2 = Some(config.python.python2.clone()).filter(|p| !p.is_empty());
        let node = config.javascript.node.clone();
        let sandbox = Sandbox::new(&config.sandbox).map_err(|e| e.to_string());

        let versions = ToolVersions {
            snipcheck: env!("CARGO_PKG_VERSION").to_string(),
            python3: tool_version(&python3, &["--version"]),
            python2: python2
                .as_deref()
                .map(|p| tool_version(p, &["--version"]))
                .unwrap_or_else(|| "emulated".into()),
            node: tool_version(&node, &["--version"]),
            java_compiler: compiler_version(&config.java),
            csharp_compiler: compiler_version(&config.csharp),
            java_grammar: JAVA_GRAMMAR_VERSION.into(),
            csharp_grammar: CSHARP_GRAMMAR_VERSION.into(),
            helpers: BTreeMap::from([
                ("python_helper.py".to_string(), sha256_hex(PYTHON_HELPER.as_bytes())),
                ("js_helper.js".to_string(), sha256_hex(JS_HELPER.as_bytes())),
            ]),
        };
        let fingerprint = fingerprint(config, &versions);

        Ok(Toolchain {
            py3_pool: HelperPool::new(&python3, python_script.clone(), timeout),
            py2_pool: python2.as_deref().map(|p| HelperPool::new(p, python_script.clone(), timeout)),
            node_pool: HelperPool::new(&node, js_script.clone(), timeout),
            _scripts: scripts,
            python_script,
            js_script,
            python3,
            python2,
            node,
            sandbox,
            java: Compiler::new(Language::Java, config.java.clone()),
            csharp: Compiler::new(Language::CSharp, config.csharp.clone()),
            versions,
            fingerprint,
        })
    }

    pub fn versions(&self) -> &ToolVersions {
        &self.versions
    }

    fn python_parse(&self, text: &str) -> StageOutcome {
        let v2 = match &self.py2_pool {
            Some(pool) => helper_outcome(pool.parse("v2", text), PYTHON_V2),
            None => helper_outcome(self.py3_pool.parse("v2", text), PYTHON_V2),
        };
        combine_dual_parse(v2, || helper_outcome(self.py3_pool.parse("v3", text), PYTHON_V3))
    }

    fn sandboxed_run(&self, engine: &str, program: &str, script: &PathBuf, mode: &[&str], text: &str, limit_memory: bool) -> StageOutcome {
        let sandbox = match &self.sandbox {
            Ok(s) => s,
            Err(e) => return StageOutcome::unavailable(Stage::Run, engine, e.clone()),
        };
        let scratch = match sandbox.scratch() {
            Ok(dir) => dir,
            Err(e) => return StageOutcome::unavailable(Stage::Run, engine, e.to_string()),
        };
        let file = scratch.path().join("snippet");
        if let Err(e) = std::fs::write(&file, text) {
            return StageOutcome::unavailable(Stage::Run, engine, e.to_string());
        }
        let mut args: Vec<OsString> = vec![script.into()];
        args.extend(mode.iter().map(OsString::from));
        args.push(file.into());
        let result = sandbox.execute(&Invocation {
            program,
            args,
            dir: scratch.path(),
            limit_memory,
        });
        let result = match result {
            Ok(r) => r,
            Err(e @ SandboxError::NotFound(_)) => return StageOutcome::unavailable(Stage::Run, engine, e.to_string()),
            Err(e) => return StageOutcome::unavailable(Stage::Run, engine, e.to_string()),
        };
        if result.exit == ExitKind::TimedOut {
            return StageOutcome::timeout(engine);
        }
        let stdout = String::from_utf8_lossy(&result.stdout);
        let reply = stdout
            .lines()
            .rev()
            .find_map(|line| serde_json::from_str::<Reply>(line).ok());
        match reply {
            Some(reply) => reply_outcome(reply, Stage::Run, engine),
            None => {
                let why = match result.exit {
                    ExitKind::Signal(sig) => format!("Killed: signal {sig}"),
                    ExitKind::Code(code) => format!("Crashed: exit status {code}"),
                    ExitKind::TimedOut => unreachable!(),
                };
                StageOutcome::fail(Stage::Run, engine, vec![why])
            }
        }
    }
}

impl StageChecker for Toolchain {
    fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    fn parse(&self, snippet: &Snippet) -> StageOutcome {
        match snippet.language {
            Language::Python => self.python_parse(&snippet.text),
            Language::JavaScript => helper_outcome(self.node_pool.parse("js", &snippet.text), NODE),
            Language::Java => tree_sitter_outcome(SyntaxLanguage::Java, JAVA_PARSER, &snippet.text),
            Language::CSharp => tree_sitter_outcome(SyntaxLanguage::CSharp, CSHARP_PARSER, &snippet.text),
        }
    }

    fn compile(&self, snippet: &Snippet) -> StageOutcome {
        let compiler = match snippet.language {
            Language::Java => &self.java,
            Language::CSharp => &self.csharp,
            _ => return StageOutcome::unavailable(Stage::Compile, "none", "language is not compiled"),
        };
        match &self.sandbox {
            Ok(sandbox) => compiler.compile(sandbox, snippet),
            Err(e) => StageOutcome::unavailable(Stage::Compile, compiler.engine(), e.clone()),
        }
    }

    fn run(&self, snippet: &Snippet, parse: &StageOutcome) -> StageOutcome {
        match snippet.language {
            Language::Python => {
                let v2 = parse.engine == PYTHON_V2;
                let (program, mode) = match (&self.python2, v2) {
                    (Some(p2), true) => (p2.as_str(), "v2"),
                    (None, true) => (self.python3.as_str(), "v2"),
                    _ => (self.python3.as_str(), "v3"),
                };
                self.sandboxed_run(&parse.engine, program, &self.python_script, &["run", mode], &snippet.text, true)
            }
            Language::JavaScript => self.sandboxed_run(NODE, &self.node, &self.js_script, &["run"], &snippet.text, false),
            _ => StageOutcome::unavailable(Stage::Run, "none", "language is not run"),
        }
    }
}

fn reply_outcome(reply: Reply, stage: Stage, engine: &str) -> StageOutcome {
    if reply.status == "pass" {
        StageOutcome::pass(stage, engine)
    } else {
        StageOutcome::fail(stage, engine, reply.error.into_iter().collect())
    }
}

fn helper_outcome(reply: Result<Reply, HelperError>, engine: &str) -> StageOutcome {
    match reply {
        Ok(reply) => reply_outcome(reply, Stage::Parse, engine),
        Err(HelperError::Unavailable(why)) => StageOutcome::unavailable(Stage::Parse, engine, why),
        Err(HelperError::Timeout) => StageOutcome::unavailable(Stage::Parse, engine, "parse server timed out"),
        Err(HelperError::Crashed(why)) => StageOutcome::unavailable(Stage::Parse, engine, format!("parse server crashed: {why}")),
    }
}

fn tree_sitter_outcome(language: SyntaxLanguage, engine: &str, text: &str) -> StageOutcome {
    match syntax_errors(language, text) {
        Ok(errors) if errors.is_empty() => StageOutcome::pass(Stage::Parse, engine),
        Ok(errors) => StageOutcome::fail(Stage::Parse, engine, errors),
        Err(why) => StageOutcome::unavailable(Stage::Parse, engine, why),
    }
}

/// First line the tool prints for its version flag, or `unavailable`.
fn tool_version(program: &str, args: &[&str]) -> String {
    let Some(path) = crate::sandbox::find_program(program) else {
        return "unavailable".into();
    };
    let output = Command::new(path).args(args).stdin(Stdio::null()).output();
    match output {
        Ok(out) => {
            let text = if out.stdout.iter().any(|b| !b.is_ascii_whitespace()) {
                out.stdout
            } else {
                out.stderr
            };
            String::from_utf8_lossy(&text).lines().next().unwrap_or("").trim().to_string()
        }
        Err(_) => "unavailable".into(),
    }
}

fn compiler_version(config: &crate::config::CompilerConfig) -> String {
    match config.program() {
        Some(program) => {
            let args: Vec<&str> = config.version_args.iter().map(String::as_str).collect();
            tool_version(program, &args)
        }
        None => "unavailable".into(),
    }
}

fn fingerprint(config: &Config, versions: &ToolVersions) -> String {
    let material = serde_json::json!({
        "sandbox": config.sandbox,
        "python": config.python,
        "javascript": config.javascript,
        "java": config.java,
        "csharp": config.csharp,
        "versions": versions,
    });
    sha256_hex(material.to_string().as_bytes())
}
