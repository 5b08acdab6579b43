//! Subprocess execution of candidate programs under resource limits.
//!
//! Programs run in a fresh temp directory with stdin piped; wall time is
//! enforced by a kill deadline, address space by rlimit, and stdout by a
//! capture cap. Heavier isolation (namespaces) can be layered on through
//! the runner command template.

mod judge;

pub use judge::{JudgeReport, Verdict};

use std::io::Write;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    #[serde(rename = "wall_time_ms", with = "duration_ms")]
    pub wall_time: Duration,
    #[serde(rename = "memory_bytes")]
    pub memory: u64,
    #[serde(rename = "output_cap_bytes")]
    pub output_cap: u64,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            wall_time: Duration::from_secs(10),
            memory: 512 * 1024 * 1024,
            output_cap: 1024 * 1024,
        }
    }
}

impl ExecutionLimits {
    pub fn validate(&self) -> Result<()> {
        if self.wall_time.is_zero() || self.memory == 0 || self.output_cap == 0 {
            return Err(Error::Config("execution limits must be strictly positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    RuntimeError,
    Timeout,
    MemoryExceeded,
    OutputTruncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    #[serde(rename = "duration_ms", with = "duration_ms")]
    pub duration: Duration,
}

/// Command template for the target-language runner. `{src}` is replaced
/// by the temp source path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerSpec {
    pub command: Vec<String>,
    pub file_extension: String,
}

impl Default for RunnerSpec {
    fn default() -> Self {
        RunnerSpec {
            command: vec!["python3".into(), "{src}".into()],
            file_extension: "py".into(),
        }
    }
}

impl RunnerSpec {
    fn validate(&self) -> Result<()> {
        if self.command.is_empty() {
            return Err(Error::Config("runner command template is empty".into()));
        }
        if !self.command.iter().any(|p| p.contains("{src}")) {
            return Err(Error::Config("runner command template lacks a {src} placeholder".into()));
        }
        Ok(())
    }
}

/// Program executor with a bounded worker pool for fan-out judging.
pub struct Sandbox {
    runner: RunnerSpec,
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Sandbox {
    /// `workers = 0` uses the logical core count.
    pub fn new(runner: RunnerSpec, workers: usize) -> Result<Self> {
        runner.validate()?;
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Sandbox(format!("worker pool: {e}")))?;
        Ok(Sandbox { runner, pool, workers })
    }

    pub fn with_default_runner(workers: usize) -> Result<Self> {
        Sandbox::new(RunnerSpec::default(), workers)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Run `code` once with `stdin` piped, enforcing `limits`.
    pub fn run_program(&self, code: &str, stdin: &str, limits: &ExecutionLimits) -> Result<ExecutionResult> {
        limits.validate()?;
        let dir = tempfile::TempDir::new().map_err(|e| Error::Sandbox(format!("temp dir: {e}")))?;
        let src = dir.path().join(format!("main.{}", self.runner.file_extension));
        std::fs::write(&src, code).map_err(|e| Error::Sandbox(format!("write source: {e}")))?;

        let argv: Vec<String> = self
            .runner
            .command
            .iter()
            .map(|part| part.replace("{src}", &src.to_string_lossy()))
            .collect();
        let mut command = Command::new(&argv[0]);
        command
            .args(&argv[1..])
            .current_dir(dir.path())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        set_memory_limit(&mut command, limits.memory);

        let start = Instant::now();
        let mut child = command.spawn().map_err(|e| {
            Error::Sandbox(format!("failed to spawn runner '{}': {e}", argv[0]))
        })?;

        // Feed stdin from a thread; the child may never read it.
        let stdin_pipe = child.stdin.take();
        let stdin_data = stdin.as_bytes().to_vec();
        let feeder = std::thread::spawn(move || {
            if let Some(mut pipe) = stdin_pipe {
                let _ = pipe.write_all(&stdin_data);
            }
        });
        let stdout_reader = capped_reader(child.stdout.take(), limits.output_cap as usize);
        let stderr_reader = capped_reader(child.stderr.take(), limits.output_cap as usize);

        let (exit, timed_out) = wait_with_deadline(&mut child, start, limits.wall_time)?;
        let duration = start.elapsed();
        let _ = feeder.join();
        let (stdout, stdout_truncated) = stdout_reader.join().unwrap_or_default();
        let (stderr, _) = stderr_reader.join().unwrap_or_default();

        let status = if timed_out {
            ExecStatus::Timeout
        } else if looks_like_oom(exit, &stderr) {
            ExecStatus::MemoryExceeded
        } else if !exit_ok(exit) {
            ExecStatus::RuntimeError
        } else if stdout_truncated {
            ExecStatus::OutputTruncated
        } else {
            ExecStatus::Ok
        };
        Ok(ExecutionResult { status, stdout, stderr, duration })
    }
}

fn exit_ok(exit: Option<std::process::ExitStatus>) -> bool {
    exit.is_some_and(|s| s.success())
}

fn looks_like_oom(exit: Option<std::process::ExitStatus>, stderr: &str) -> bool {
    if exit_ok(exit) {
        return false;
    }
    // CPython raises MemoryError when the address-space rlimit bites;
    // a SIGKILL without our timeout is the kernel OOM path.
    stderr.contains("MemoryError") || killed_by_signal(exit, libc::SIGKILL)
}

#[cfg(unix)]
fn killed_by_signal(exit: Option<std::process::ExitStatus>, sig: i32) -> bool {
    use std::os::unix::process::ExitStatusExt;
    exit.and_then(|s| s.signal()) == Some(sig)
}

#[cfg(not(unix))]
fn killed_by_signal(_exit: Option<std::process::ExitStatus>, _sig: i32) -> bool {
    false
}

#[cfg(unix)]
fn set_memory_limit(command: &mut Command, bytes: u64) {
    use std::os::unix::process::CommandExt;
    // Safety: setrlimit is async-signal-safe; nothing else runs in the
    // forked child before exec.
    unsafe {
        command.pre_exec(move || {
            let limit = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
            libc::setrlimit(libc::RLIMIT_AS, &limit);
            Ok(())
        });
    }
}

#[cfg(not(unix))]
fn set_memory_limit(_command: &mut Command, _bytes: u64) {}

/// Drain a pipe into a capped buffer; returns (text, truncated).
fn capped_reader<R: std::io::Read + Send + 'static>(
    pipe: Option<R>,
    cap: usize,
) -> std::thread::JoinHandle<(String, bool)> {
    std::thread::spawn(move || {
        let Some(mut pipe) = pipe else { return (String::new(), false) };
        let mut buf = Vec::new();
        let mut chunk = [0u8; 8192];
        let mut truncated = false;
        loop {
            match std::io::Read::read(&mut pipe, &mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(buf.len());
                    if n > room {
                        buf.extend_from_slice(&chunk[..room]);
                        truncated = true;
                        // keep draining so the child is never blocked on a
                        // full pipe
                    } else {
                        buf.extend_from_slice(&chunk[..n]);
                    }
                }
            }
        }
        (String::from_utf8_lossy(&buf).into_owned(), truncated)
    })
}

fn wait_with_deadline(
    child: &mut Child,
    start: Instant,
    wall_time: Duration,
) -> Result<(Option<std::process::ExitStatus>, bool)> {
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Ok((Some(status), false)),
            Ok(None) => {
                if start.elapsed() >= wall_time {
                    let _ = child.kill();
                    let status = child.wait().ok();
                    return Ok((status, true));
                }
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(Error::Sandbox(format!("wait: {e}"))),
        }
    }
}
