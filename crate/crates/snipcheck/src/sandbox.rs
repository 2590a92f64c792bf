//! Child-process sandbox for running snippets and compilers.
//!
//! Each invocation gets its own session (so the whole process tree can be
//! killed), a cleared environment, empty stdin, resource limits and, when
//! the host permits it, a private network namespace with no interfaces.

use std::ffi::OsString;
use std::io::{self, Read};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use crate::config::{NetworkIsolation, SandboxConfig};

/// Bytes kept from each output stream; the rest is drained and dropped.
const OUTPUT_CAP: usize = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum SandboxError {
    #[error("program not found: {0}")]
    NotFound(String),
    #[error("network isolation required but unavailable")]
    IsolationUnavailable,
    #[error("cannot start {program}: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("sandbox i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Code(i32),
    Signal(i32),
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct ExecResult {
    pub exit: ExitKind,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub elapsed: Duration,
}

impl ExecResult {
    pub fn success(&self) -> bool {
        self.exit == ExitKind::Code(0)
    }
}

/// One command to run inside `dir`.
pub struct Invocation<'a> {
    pub program: &'a str,
    pub args: Vec<OsString>,
    pub dir: &'a Path,
    /// Apply the address-space limit. Off for runtimes that reserve large
    /// virtual ranges up front (JVM, V8).
    pub limit_memory: bool,
}

#[derive(Clone, Debug)]
pub struct Sandbox {
    limits: SandboxConfig,
    isolate_network: bool,
}

impl Sandbox {
    pub fn new(limits: &SandboxConfig) -> Result<Self, SandboxError> {
        let isolate_network = match limits.network {
            NetworkIsolation::Off => false,
            NetworkIsolation::Auto => network_namespace_available(),
            NetworkIsolation::Required => {
                if !network_namespace_available() {
                    return Err(SandboxError::IsolationUnavailable);
                }
                true
            }
        };
        Ok(Sandbox {
            limits: limits.clone(),
            isolate_network,
        })
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.limits.timeout_ms)
    }

    pub fn isolates_network(&self) -> bool {
        self.isolate_network
    }

    /// Scratch directory for one invocation, removed on drop.
    pub fn scratch(&self) -> io::Result<tempfile::TempDir> {
        tempfile::Builder::new().prefix("snipcheck-").tempdir()
    }

    pub fn execute(&self, inv: &Invocation<'_>) -> Result<ExecResult, SandboxError> {
        let program = find_program(inv.program).ok_or_else(|| SandboxError::NotFound(inv.program.to_string()))?;
        let mut cmd = if self.isolate_network {
            let mut c = Command::new("unshare");
            c.args(["--user", "--net", "--map-root-user", "--"]).arg(&program);
            c
        } else {
            Command::new(&program)
        };
        cmd.args(&inv.args)
            .current_dir(inv.dir)
            .env_clear()
            .env("PATH", std::env::var_os("PATH").unwrap_or_else(|| "/usr/bin:/bin".into()))
            .env("HOME", inv.dir)
            .env("TMPDIR", inv.dir)
            .env("LANG", "C.UTF-8")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONIOENCODING", "utf-8")
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());

        let memory = inv.limit_memory.then_some(self.limits.memory_mb << 20);
        let file_size = self.limits.max_file_mb << 20;
        // SAFETY: only async-signal-safe libc calls run between fork and exec.
        unsafe {
            cmd.pre_exec(move || {
                if libc::setsid() < 0 {
                    return Err(io::Error::last_os_error());
                }
                set_limit(libc::RLIMIT_CORE, 0)?;
                set_limit(libc::RLIMIT_FSIZE, file_size)?;
                if let Some(bytes) = memory {
                    set_limit(libc::RLIMIT_AS, bytes)?;
                }
                Ok(())
            });
        }

        let start = Instant::now();
        let mut child = cmd.spawn().map_err(|source| SandboxError::Spawn {
            program: inv.program.to_string(),
            source,
        })?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());
        let exit = wait_or_kill(&mut child, self.timeout())?;
        let elapsed = start.elapsed();
        Ok(ExecResult {
            exit,
            stdout: out.join().unwrap_or_default(),
            stderr: err.join().unwrap_or_default(),
            elapsed,
        })
    }
}

#[cfg(all(target_os = "linux", target_env = "gnu"))]
type Resource = libc::__rlimit_resource_t;
#[cfg(not(all(target_os = "linux", target_env = "gnu")))]
type Resource = libc::c_int;

fn set_limit(resource: Resource, value: u64) -> io::Result<()> {
    let lim = libc::rlimit {
        rlim_cur: value as libc::rlim_t,
        rlim_max: value as libc::rlim_t,
    };
    // SAFETY: plain syscall with a valid pointer.
    if unsafe { libc::setrlimit(resource, &lim) } != 0 {
        return Err(io::Error::last_os_error());
    }
    Ok(())
}

fn drain<R: Read + Send + 'static>(stream: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let Some(mut stream) = stream else {
            return kept;
        };
        let mut buf = [0u8; 8192];
        loop {
            match stream.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = OUTPUT_CAP.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        kept
    })
}

/// Waits for the child, then kills whatever is left of its process group
/// so background processes cannot outlive the invocation.
fn wait_or_kill(child: &mut Child, timeout: Duration) -> io::Result<ExitKind> {
    let pid = child.id() as libc::pid_t;
    let kill_group = || {
        // SAFETY: the child leads its own session, so its pid is the group id.
        unsafe {
            libc::killpg(pid, libc::SIGKILL);
        }
    };
    match child.wait_timeout(timeout)? {
        Some(status) => {
            kill_group();
            Ok(match (status.code(), status.signal()) {
                (Some(code), _) => ExitKind::Code(code),
                (None, Some(sig)) => ExitKind::Signal(sig),
                (None, None) => ExitKind::Signal(0),
            })
        }
        None => {
            kill_group();
            let _ = child.kill();
            let _ = child.wait();
            Ok(ExitKind::TimedOut)
        }
    }
}

/// Resolves `program` against PATH unless it already names a file.
pub fn find_program(program: &str) -> Option<PathBuf> {
    if program.is_empty() {
        return None;
    }
    let path = Path::new(program);
    if program.contains('/') {
        return path.is_file().then(|| path.to_path_buf());
    }
    let dirs = std::env::var_os("PATH")?;
    std::env::split_paths(&dirs)
        .map(|d| d.join(program))
        .find(|candidate| is_executable(candidate))
}

fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    path.metadata()
        .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
        .unwrap_or(false)
}

/// Whether `unshare --user --net` works here. Probed once per process.
pub fn network_namespace_available() -> bool {
    static PROBE: OnceLock<bool> = OnceLock::new();
    *PROBE.get_or_init(|| {
        find_program("unshare").is_some()
            && Command::new("unshare")
                .args(["--user", "--net", "--map-root-user", "true"])
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .stderr(Stdio::null())
                .status()
                .map(|s| s.success())
                .unwrap_or(false)
    })
}
