//! Long-lived parse servers speaking one JSON object per line.
//!
//! Parsing never executes snippet code, so parse servers run outside the
//! sandbox and are reused across snippets. Each worker thread checks a
//! server out of the pool for the duration of one request.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Serialize)]
struct Request<'a> {
    engine: &'a str,
    code: &'a str,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct Reply {
    pub status: String,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HelperError {
    Unavailable(String),
    Timeout,
    Crashed(String),
}

struct Server {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<String>,
}

impl Server {
    fn spawn(argv: &[String]) -> Result<Server, HelperError> {
        let (program, args) = argv.split_first().ok_or_else(|| HelperError::Unavailable("empty command".into()))?;
        let program = crate::sandbox::find_program(program)
            .ok_or_else(|| HelperError::Unavailable(format!("program not found: {program}")))?;
        let mut child = Command::new(program)
            .args(args)
            .env_clear()
            .env("PATH", std::env::var_os("PATH").unwrap_or_default())
            .env("LANG", "C.UTF-8")
            .env("PYTHONIOENCODING", "utf-8")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| HelperError::Unavailable(e.to_string()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Server {
            child,
            stdin,
            replies: rx,
        })
    }

    fn ask(&mut self, request: &Request<'_>, timeout: Duration) -> Result<Reply, HelperError> {
        let mut line = serde_json::to_string(request).map_err(|e| HelperError::Crashed(e.to_string()))?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| HelperError::Crashed(e.to_string()))?;
        match self.replies.recv_timeout(timeout) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| HelperError::Crashed(format!("bad reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(HelperError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(HelperError::Crashed("parse server exited".into())),
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct HelperPool {
    argv: Vec<String>,
    idle: Mutex<Vec<Server>>,
    timeout: Duration,
}

impl HelperPool {
    pub fn new(program: &str, script: PathBuf, timeout: Duration) -> Self {
        HelperPool {
            argv: vec![program.to_string(), script.to_string_lossy().into_owned(), "serve".into()],
            idle: Mutex::new(Vec::new()),
            timeout,
        }
    }

    /// Sends one parse request. A server that times out or dies is
    /// discarded; a crash is retried once on a fresh server.
    pub fn parse(&self, engine: &str, code: &str) -> Result<Reply, HelperError> {
        let request = Request { engine, code };
        let mut last = HelperError::Crashed(String::new());
        for _ in 0..2 {
            let mut server = match self.idle.lock().map(|mut v| v.pop()) {
                Ok(Some(s)) => s,
                _ => Server::spawn(&self.argv)?,
            };
            match server.ask(&request, self.timeout) {
                Ok(reply) => {
                    if let Ok(mut idle) = self.idle.lock() {
                        idle.push(server);
                    }
                    return Ok(reply);
                }
                Err(HelperError::Timeout) => return Err(HelperError::Timeout),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}
