//! Compile-and-judge driver for runnability, correctness and time/space
//! measurements.
//!
//! There is no sandbox beyond the wall-clock limit and an optional
//! address-space rlimit. Only run trusted programs.
//!
//! Toolchains are configured in TOML:
//!
//! ```toml
//! [languages.cpp]
//! compile = ["g++", "-O2", "-o", "{output}", "{source}"]
//! run = ["{output}"]
//! time_limit_ms = 1000
//! ```
//!
//! Placeholders: `{source}` (the source file as staged in the work
//! directory), `{output}` (`<workdir>/prog`) and `{dir}` (the work
//! directory).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::Language;

/// Inputs at least this large are tagged [`Scale::Large`].
pub const LARGE_INPUT_BYTES: u64 = 64 * 1024;
const POLL_INTERVAL: Duration = Duration::from_millis(1);

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no toolchain for {language}: {reason}")]
    ToolchainMissing { language: Language, reason: String },
    #[error("toolchain config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("no test cases (input_<k>.txt + expected_<k>.txt) in {0}")]
    NoCases(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toolchain {
    pub compile: Vec<String>,
    pub run: Vec<String>,
    #[serde(default = "default_time_limit")]
    pub time_limit_ms: u64,
    #[serde(default)]
    pub memory_limit_bytes: Option<u64>,
    /// Name the source is copied to before compiling, e.g. `Main.java`.
    #[serde(default)]
    pub source_name: Option<String>,
}

fn default_time_limit() -> u64 {
    1000
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainConfig {
    #[serde(default)]
    pub languages: BTreeMap<Language, Toolchain>,
    /// Parallel cases; 0 means one per core.
    #[serde(default)]
    pub jobs: usize,
}

impl ToolchainConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// `g++` for C++ and `javac`/`java` for Java.
    pub fn builtin() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let mut languages = BTreeMap::new();
        languages.insert(
            Language::Cpp,
            Toolchain {
                compile: s(&["g++", "-O2", "-std=c++17", "-o", "{output}", "{source}"]),
                run: s(&["{output}"]),
                time_limit_ms: default_time_limit(),
                memory_limit_bytes: None,
                source_name: None,
            },
        );
        languages.insert(
            Language::Java,
            Toolchain {
                compile: s(&["javac", "-d", "{dir}", "{source}"]),
                run: s(&["java", "-cp", "{dir}", "Main"]),
                time_limit_ms: 2 * default_time_limit(),
                memory_limit_bytes: None,
                source_name: Some("Main.java".into()),
            },
        );
        ToolchainConfig { languages, jobs: 0 }
    }

    pub fn toolchain(&self, language: Language) -> Result<&Toolchain, HarnessError> {
        self.languages.get(&language).ok_or(HarnessError::ToolchainMissing {
            language,
            reason: "not configured".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCase {
    pub task: String,
    pub index: u32,
    pub input: String,
    pub expected: String,
    pub scale: Scale,
}

impl TaskCase {
    pub fn id(&self) -> String {
        format!("{}/{}", self.task, self.index)
    }
}

/// Reads `input_<k>.txt` / `expected_<k>.txt` pairs from a task directory,
/// ordered by `k`. An input without an expected file is an error.
pub fn load_cases(task_dir: &Path) -> Result<Vec<TaskCase>, HarnessError> {
    let task = task_dir
        .file_name()
        .map_or_else(|| task_dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    let mut indices = Vec::new();
    for entry in fs::read_dir(task_dir).map_err(io_err(task_dir))? {
        let entry = entry.map_err(io_err(task_dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(k) = name
            .strip_prefix("input_")
            .and_then(|r| r.strip_suffix(".txt"))
            .and_then(|k| k.parse::<u32>().ok())
        {
            indices.push(k);
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(HarnessError::NoCases(task_dir.display().to_string()));
    }
    indices
        .into_iter()
        .map(|k| {
            let ip = task_dir.join(format!("input_{k}.txt"));
            let ep = task_dir.join(format!("expected_{k}.txt"));
            let input = fs::read_to_string(&ip).map_err(io_err(&ip))?;
            let expected = fs::read_to_string(&ep).map_err(io_err(&ep))?;
            let scale = if input.len() as u64 >= LARGE_INPUT_BYTES {
                Scale::Large
            } else {
                Scale::Small
            };
            Ok(TaskCase {
                task: task.clone(),
                index: k,
                input,
                expected,
                scale,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    CompileError,
    RuntimeError,
    WrongAnswer,
    TimeLimit,
    Accepted,
}

impl Outcome {
    pub fn id(self) -> &'static str {
        match self {
            Outcome::CompileError => "CE",
            Outcome::RuntimeError => "RE",
            Outcome::WrongAnswer => "WA",
            Outcome::TimeLimit => "TLE",
            Outcome::Accepted => "AC",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub case: String,
    pub outcome: Outcome,
    /// Absent when the program never started.
    pub wall_time_ms: Option<f64>,
    /// Absent when the platform does not report it.
    pub peak_memory_bytes: Option<u64>,
}

/// Per-line trailing whitespace and trailing blank lines are ignored.
pub fn outputs_match(actual: &str, expected: &str) -> bool {
    fn norm(s: &str) -> Vec<&str> {
        let mut lines: Vec<&str> = s.lines().map(str::trim_end).collect();
        while lines.last() == Some(&"") {
            lines.pop();
        }
        lines
    }
    norm(actual) == norm(expected)
}

/// A compiled program ready to run. Owns its work directory.
#[derive(Debug)]
pub struct Artifact {
    pub language: Language,
    pub run: Vec<String>,
    pub time_limit: Duration,
    pub memory_limit_bytes: Option<u64>,
    dir: tempfile::TempDir,
}

impl Artifact {
    pub fn dir(&self) -> &Path {
        self.dir.path()
    }
}

#[derive(Debug)]
pub enum Compiled {
    Artifact(Artifact),
    CompileError { diagnostics: String },
}

fn expand(template: &[String], source: &Path, dir: &Path) -> Vec<String> {
    let output = dir.join("prog");
    template
        .iter()
        .map(|t| {
            t.replace("{source}", &source.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
                .replace("{dir}", &dir.to_string_lossy())
        })
        .collect()
}

/// Compiles `source` with the configured toolchain. A nonzero compiler
/// exit is a [`Compiled::CompileError`]; a missing toolchain is an error.
pub fn check_runnable(source: &Path, language: Language, config: &ToolchainConfig) -> Result<Compiled, HarnessError> {
    let tc = config.toolchain(language)?;
    let missing = |reason: String| HarnessError::ToolchainMissing { language, reason };
    if tc.compile.is_empty() || tc.run.is_empty() {
        return Err(missing("empty compile or run command".into()));
    }
    let dir = tempfile::tempdir().map_err(io_err(Path::new("<tempdir>")))?;
    let staged = dir.path().join(match &tc.source_name {
        Some(n) => n.clone(),
        None => source
            .file_name()
            .map_or_else(|| "source".into(), |n| n.to_string_lossy().into_owned()),
    });
    fs::copy(source, &staged).map_err(io_err(source))?;
    let cmd = expand(&tc.compile, &staged, dir.path());
    let out = match Command::new(&cmd[0]).args(&cmd[1..]).current_dir(dir.path()).output() {
        Ok(o) => o,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(missing(format!("{} not found", cmd[0]))),
        Err(e) => return Err(io_err(Path::new(&cmd[0]))(e)),
    };
    if !out.status.success() {
        let mut diagnostics = String::from_utf8_lossy(&out.stderr).into_owned();
        diagnostics.push_str(&String::from_utf8_lossy(&out.stdout));
        return Ok(Compiled::CompileError { diagnostics });
    }
    Ok(Compiled::Artifact(Artifact {
        language,
        run: expand(&tc.run, &staged, dir.path()),
        time_limit: Duration::from_millis(tc.time_limit_ms),
        memory_limit_bytes: tc.memory_limit_bytes,
        dir,
    }))
}

enum Exit {
    Code(i32),
    Signal,
    TimedOut,
}

struct Run {
    exit: Exit,
    stdout: Vec<u8>,
    wall: Duration,
    peak_memory: Option<u64>,
}

#[cfg(unix)]
fn wait_with_limit(child: &std::process::Child, limit: Duration, start: Instant) -> io::Result<(Exit, Option<u64>)> {
    let pid = child.id() as libc::pid_t;
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain old data; wait4 fills it.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let mut timed_out = false;
    loop {
        let flags = if timed_out { 0 } else { libc::WNOHANG };
        // SAFETY: pid is our unreaped child; pointers are valid for the call.
        let r = unsafe { libc::wait4(pid, &mut status, flags, &mut usage) };
        if r == pid {
            break;
        }
        if r < 0 {
            let e = io::Error::last_os_error();
            if e.kind() == io::ErrorKind::Interrupted {
                continue;
            }
            return Err(e);
        }
        if start.elapsed() >= limit {
            // SAFETY: the child leads its own process group.
            unsafe { libc::kill(-pid, libc::SIGKILL) };
            timed_out = true;
            continue;
        }
        thread::sleep(POLL_INTERVAL);
    }
    // ru_maxrss is in kilobytes on Linux
    let peak = (usage.ru_maxrss > 0).then(|| usage.ru_maxrss as u64 * 1024);
    let exit = if timed_out {
        Exit::TimedOut
    } else if libc::WIFEXITED(status) {
        Exit::Code(libc::WEXITSTATUS(status))
    } else {
        Exit::Signal
    };
    Ok((exit, peak))
}

#[cfg(not(unix))]
fn wait_with_limit(child: &mut std::process::Child, limit: Duration, start: Instant) -> io::Result<(Exit, Option<u64>)> {
    loop {
        if let Some(st) = child.try_wait()? {
            return Ok((st.code().map_or(Exit::Signal, Exit::Code), None));
        }
        if start.elapsed() >= limit {
            child.kill()?;
            child.wait()?;
            return Ok((Exit::TimedOut, None));
        }
        thread::sleep(POLL_INTERVAL);
    }
}

fn run_once(cmd: &[String], cwd: &Path, input: &str, limit: Duration, memory: Option<u64>) -> io::Result<Run> {
    let mut command = Command::new(&cmd[0]);
    command
        .args(&cmd[1..])
        .current_dir(cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        command.process_group(0);
        if let Some(bytes) = memory {
            // SAFETY: only async-signal-safe setrlimit runs between fork and exec.
            unsafe {
                command.pre_exec(move || {
                    let lim = libc::rlimit {
                        rlim_cur: bytes as libc::rlim_t,
                        rlim_max: bytes as libc::rlim_t,
                    };
                    if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                        return Err(io::Error::last_os_error());
                    }
                    Ok(())
                });
            }
        }
    }
    #[cfg(not(unix))]
    let _ = memory;
    let start = Instant::now();
    #[allow(unused_mut)]
    let mut child = command.spawn()?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let input = input.as_bytes().to_vec();
    let writer = thread::spawn(move || {
        // a program that ignores its input closes the pipe early
        let _ = stdin.write_all(&input);
    });
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    #[cfg(unix)]
    let (exit, peak_memory) = wait_with_limit(&child, limit, start)?;
    #[cfg(not(unix))]
    let (exit, peak_memory) = wait_with_limit(&mut child, limit, start)?;
    let wall = start.elapsed();
    let _ = writer.join();
    let stdout = reader.join().unwrap_or_default();
    Ok(Run {
        exit,
        stdout,
        wall,
        peak_memory,
    })
}

fn judge_case(artifact: &Artifact, case: &TaskCase) -> Verdict {
    let run = run_once(
        &artifact.run,
        artifact.dir(),
        &case.input,
        artifact.time_limit,
        artifact.memory_limit_bytes,
    );
    let Ok(run) = run else {
        return Verdict {
            case: case.id(),
            outcome: Outcome::RuntimeError,
            wall_time_ms: None,
            peak_memory_bytes: None,
        };
    };
    let outcome = match run.exit {
        Exit::TimedOut => Outcome::TimeLimit,
        Exit::Signal | Exit::Code(1..) | Exit::Code(..=-1) => Outcome::RuntimeError,
        Exit::Code(0) => {
            if outputs_match(&String::from_utf8_lossy(&run.stdout), &case.expected) {
                Outcome::Accepted
            } else {
                Outcome::WrongAnswer
            }
        }
    };
    Verdict {
        case: case.id(),
        outcome,
        wall_time_ms: Some(run.wall.as_secs_f64() * 1000.0),
        peak_memory_bytes: run.peak_memory,
    }
}

/// Runs every case, `jobs` at a time (0 = one per core). Verdicts come back
/// in case order; one failing case never stops the rest.
pub fn judge(artifact: &Artifact, cases: &[TaskCase], jobs: usize) -> Result<Vec<Verdict>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| cases.par_iter().map(|c| judge_case(artifact, c)).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub source: String,
    pub language: Language,
    pub compiled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    pub verdicts: Vec<Verdict>,
}

impl JudgeReport {
    /// Count of each outcome, in pipeline order.
    pub fn summary(&self) -> BTreeMap<Outcome, usize> {
        let mut m = BTreeMap::new();
        for v in &self.verdicts {
            *m.entry(v.outcome).or_insert(0) += 1;
        }
        m
    }

    /// `case<TAB>outcome[<TAB>ms<TAB>bytes]` lines. Without timings the
    /// text depends only on the program and the cases.
    pub fn to_text(&self, timings: bool) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&v.case);
            out.push('\t');
            out.push_str(v.outcome.id());
            if timings {
                let ms = v.wall_time_ms.map_or("-".to_string(), |t| format!("{t:.1}"));
                let mem = v.peak_memory_bytes.map_or("-".to_string(), |b| b.to_string());
                out.push_str(&format!("\t{ms}\t{mem}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Compile once, then judge every case. A compile failure yields a
/// CompileError verdict per case.
pub fn judge_source(
    source: &Path,
    language: Language,
    cases: &[TaskCase],
    config: &ToolchainConfig,
) -> Result<JudgeReport, HarnessError> {
    let mut report = JudgeReport {
        source: source.display().to_string(),
        language,
        compiled: false,
        diagnostics: None,
        verdicts: Vec::new(),
    };
    match check_runnable(source, language, config)? {
        Compiled::CompileError { diagnostics } => {
            report.diagnostics = Some(diagnostics);
            report.verdicts = cases
                .iter()
                .map(|c| Verdict {
                    case: c.id(),
                    outcome: Outcome::CompileError,
                    wall_time_ms: None,
                    peak_memory_bytes: None,
                })
                .collect();
        }
        Compiled::Artifact(a) => {
            report.compiled = true;
            report.verdicts = judge(&a, cases, config.jobs)?;
        }
    }
    Ok(report)
}

/// Cases of every task directory under `root`, or of `root` itself when
/// it holds cases directly.
pub fn load_task_tree(root: &Path) -> Result<Vec<TaskCase>, HarnessError> {
    if let Ok(cases) = load_cases(root) {
        return Ok(cases);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut all = Vec::new();
    for d in dirs {
        match load_cases(&d) {
            Ok(c) => all.extend(c),
            Err(HarnessError::NoCases(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if all.is_empty() {
        return Err(HarnessError::NoCases(root.display().to_string()));
    }
    Ok(all)
}
