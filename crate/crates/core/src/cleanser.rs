//! Repository manifest cleansing: initial cleanup, temporal segmentation
//! and spatial segmentation.
//!
//! Manifests are line-delimited JSON, one [`RepoRecord`] per line:
//!
//! ```text
//! {"id":"u/tool","owner_type":"user","fork":false,"created_at":2021,"contributors":1,
//!  "files":[{"path":"src/main.cpp","sha256":"9f86…","size":120}]}
//! ```
//!
//! A record may give `root` (a local checkout) instead of `files`; the tree
//! is then scanned and hashed.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::profile::Language;

pub const MIN_YEAR: i32 = 2000;
pub const DEFAULT_WINDOW_YEARS: i32 = 2;
const DEFAULT_THIRD_PARTY: &str = include_str!("../data/third_party.txt");

#[derive(Debug, Error)]
pub enum CleanseError {
    #[error("{path}:{line}: {message}")]
    Manifest { path: String, line: usize, message: String },
    #[error("invalid year window {0}..{1}")]
    InvalidWindow(i32, i32),
    #[error("cannot parse window {0:?}; expected START:END")]
    WindowSyntax(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CleanseError + '_ {
    move |source| CleanseError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerType {
    User,
    Organization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
}

impl FileEntry {
    pub fn new(path: impl Into<String>, sha256: impl Into<String>, size: u64) -> Self {
        let path = path.into();
        FileEntry {
            language: Language::from_path(&path),
            path,
            sha256: sha256.into(),
            size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub id: String,
    pub owner_type: OwnerType,
    pub fork: bool,
    /// Creation year.
    pub created_at: i32,
    pub contributors: u32,
    #[serde(default)]
    pub files: Vec<FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
}

impl RepoRecord {
    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty repository id".into());
        }
        if self.contributors == 0 {
            return Err(format!("{}: contributor count must be at least 1", self.id));
        }
        for f in &self.files {
            if !is_sha256_hex(&f.sha256) {
                return Err(format!("{}: {}: hash must be 64 lowercase hex digits", self.id, f.path));
            }
        }
        Ok(())
    }
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Every regular file under `root`, hashed in parallel, sorted by path.
pub fn scan_tree(root: &Path) -> Result<Vec<FileEntry>, CleanseError> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CleanseError::Io {
            path: root.display().to_string(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() {
            paths.push(entry.into_path());
        }
    }
    paths
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(io_err(p))?;
            let rel = p.strip_prefix(root).unwrap_or(p);
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok(FileEntry::new(rel, sha256_hex(&bytes), bytes.len() as u64))
        })
        .collect()
}

/// Where repository records come from. The JSONL reader is the only
/// implementation shipped; a hosting-API fetcher would be another.
pub trait ManifestSource {
    fn records(&self) -> Result<Vec<RepoRecord>, CleanseError>;
}

pub struct JsonlManifest {
    pub path: PathBuf,
}

impl ManifestSource for JsonlManifest {
    fn records(&self) -> Result<Vec<RepoRecord>, CleanseError> {
        let file = fs::File::open(&self.path).map_err(io_err(&self.path))?;
        let base = self.path.parent().unwrap_or(Path::new("."));
        read_manifest(io::BufReader::new(file), &self.path.display().to_string(), base)
    }
}

/// Parses a manifest. Relative `root` paths resolve against `base`.
pub fn read_manifest(input: impl BufRead, source: &str, base: &Path) -> Result<Vec<RepoRecord>, CleanseError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(io_err(Path::new(source)))?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| CleanseError::Manifest {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let mut rec: RepoRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        for f in &mut rec.files {
            if f.language.is_none() {
                f.language = Language::from_path(&f.path);
            }
        }
        if rec.files.is_empty() {
            if let Some(root) = &rec.root {
                let root = base.join(root);
                rec.files = scan_tree(&root)?;
                rec.root = Some(root);
            }
        } else if let Some(root) = &rec.root {
            rec.root = Some(base.join(root));
        }
        rec.validate().map_err(fail)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_manifest(records: &[RepoRecord], mut out: impl Write) -> Result<(), CleanseError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(io_err(Path::new("<manifest>")))?;
    }
    Ok(())
}

/// Lower-cased third-party directory and library names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThirdPartyList {
    names: BTreeSet<String>,
}

impl ThirdPartyList {
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        ThirdPartyList { names }
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_THIRD_PARTY)
    }

    pub fn load(path: &Path) -> Result<Self, CleanseError> {
        Ok(Self::parse(&fs::read_to_string(path).map_err(io_err(path))?))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// True if any directory segment, or the file name without its
    /// extension, is listed.
    pub fn matches(&self, path: &str) -> bool {
        let segments: Vec<&str> = path.split(['/', '\\']).filter(|s| !s.is_empty()).collect();
        let Some((file, dirs)) = segments.split_last() else {
            return false;
        };
        let stem = file.split_once('.').map_or(*file, |(s, _)| s);
        let listed = |s: &str| self.names.contains(&s.to_lowercase());
        dirs.iter().any(|s| listed(s)) || listed(file) || listed(stem)
    }
}

/// Repository and file counts through one stage. Files of a removed
/// repository are counted under the repository's rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub repos_in: usize,
    pub repos_out: usize,
    pub removed_repos: BTreeMap<String, usize>,
    pub files_in: usize,
    pub files_out: usize,
    pub removed_files: BTreeMap<String, usize>,
}

impl StageReport {
    fn start(stage: &str, records: &[RepoRecord]) -> Self {
        StageReport {
            stage: stage.to_string(),
            repos_in: records.len(),
            files_in: records.iter().map(|r| r.files.len()).sum(),
            ..Default::default()
        }
    }

    fn drop_repo(&mut self, rule: &str, r: &RepoRecord) {
        *self.removed_repos.entry(rule.to_string()).or_insert(0) += 1;
        *self.removed_files.entry(rule.to_string()).or_insert(0) += r.files.len();
    }

    fn drop_file(&mut self, rule: &str) {
        *self.removed_files.entry(rule.to_string()).or_insert(0) += 1;
    }

    fn finish(mut self, records: &[RepoRecord]) -> Self {
        self.repos_out = records.len();
        self.files_out = records.iter().map(|r| r.files.len()).sum();
        self
    }

    pub fn repos_removed(&self, rule: &str) -> usize {
        self.removed_repos.get(rule).copied().unwrap_or(0)
    }

    pub fn files_removed(&self, rule: &str) -> usize {
        self.removed_files.get(rule).copied().unwrap_or(0)
    }

    pub fn conserved(&self) -> bool {
        self.repos_in == self.repos_out + self.removed_repos.values().sum::<usize>()
            && self.files_in == self.files_out + self.removed_files.values().sum::<usize>()
    }
}

pub mod rule {
    pub const ORGANIZATION: &str = "organization";
    pub const FORK: &str = "fork";
    pub const DUPLICATE_REPO: &str = "duplicate_repo";
    pub const DUPLICATE_FILE: &str = "duplicate_file";
    pub const YEAR_OUT_OF_RANGE: &str = "year_out_of_range";
    pub const OUTSIDE_WINDOW: &str = "outside_window";
    pub const MULTIPLE_CONTRIBUTORS: &str = "multiple_contributors";
    pub const THIRD_PARTY: &str = "third_party";
}

fn canonical(mut records: Vec<RepoRecord>) -> Vec<RepoRecord> {
    records.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
    for r in &mut records {
        r.files.sort_by(|a, b| a.path.cmp(&b.path));
    }
    records
}

/// Drops organization repos, forks, repos whose file-hash multiset equals
/// an earlier one (earliest year, then smallest id, survives) and files
/// whose hash was already seen in that same order.
pub fn initial_cleanup(records: Vec<RepoRecord>) -> (Vec<RepoRecord>, StageReport) {
    let records = canonical(records);
    let mut report = StageReport::start("initial_cleanup", &records);
    let mut kept = Vec::new();
    let mut multisets: HashSet<Vec<String>> = HashSet::new();
    for r in records {
        if r.owner_type == OwnerType::Organization {
            report.drop_repo(rule::ORGANIZATION, &r);
            continue;
        }
        if r.fork {
            report.drop_repo(rule::FORK, &r);
            continue;
        }
        let mut hashes: Vec<String> = r.files.iter().map(|f| f.sha256.clone()).collect();
        hashes.sort();
        // empty repos never count as copies of each other
        if !hashes.is_empty() && !multisets.insert(hashes) {
            report.drop_repo(rule::DUPLICATE_REPO, &r);
            continue;
        }
        kept.push(r);
    }
    let mut seen: HashSet<String> = HashSet::new();
    for r in &mut kept {
        r.files.retain(|f| {
            let fresh = seen.insert(f.sha256.clone());
            if !fresh {
                report.drop_file(rule::DUPLICATE_FILE);
            }
            fresh
        });
    }
    let report = report.finish(&kept);
    (kept, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self, CleanseError> {
        if start > end {
            return Err(CleanseError::InvalidWindow(start, end));
        }
        Ok(YearWindow { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

impl std::str::FromStr for YearWindow {
    type Err = CleanseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CleanseError::WindowSyntax(s.to_string());
        let (a, b) = s.split_once([':', '-']).ok_or_else(bad)?;
        YearWindow::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
    }
}

impl std::fmt::Display for YearWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub id: String,
    pub created_at: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSegments {
    /// Repository count for every year from the earliest to the latest
    /// in-range year, empty years included.
    pub buckets: BTreeMap<i32, usize>,
    pub window: Option<YearWindow>,
    pub selected: Vec<RepoRecord>,
    pub quarantined: Vec<Quarantined>,
    pub report: StageReport,
}

/// Buckets records by creation year and keeps those inside `window`.
/// Without a window the latest two years present are selected. Years
/// outside `[MIN_YEAR, max_year]` are quarantined.
pub fn temporal_segment(records: Vec<RepoRecord>, window: Option<YearWindow>, max_year: i32) -> TemporalSegments {
    let mut report = StageReport::start("temporal_segment", &records);
    let mut quarantined = Vec::new();
    let mut in_range = Vec::new();
    for r in records {
        if (MIN_YEAR..=max_year).contains(&r.created_at) {
            in_range.push(r);
        } else {
            report.drop_repo(rule::YEAR_OUT_OF_RANGE, &r);
            quarantined.push(Quarantined {
                id: r.id,
                created_at: r.created_at,
            });
        }
    }
    let mut buckets = BTreeMap::new();
    if let (Some(lo), Some(hi)) = (
        in_range.iter().map(|r| r.created_at).min(),
        in_range.iter().map(|r| r.created_at).max(),
    ) {
        for y in lo..=hi {
            buckets.insert(y, 0);
        }
    }
    for r in &in_range {
        *buckets.entry(r.created_at).or_insert(0) += 1;
    }
    let window = window.or_else(|| {
        let hi = *buckets.keys().next_back()?;
        Some(YearWindow {
            start: hi - DEFAULT_WINDOW_YEARS + 1,
            end: hi,
        })
    });
    let mut selected = Vec::new();
    for r in in_range {
        if window.is_some_and(|w| w.contains(r.created_at)) {
            selected.push(r);
        } else {
            report.drop_repo(rule::OUTSIDE_WINDOW, &r);
        }
    }
    let report = report.finish(&selected);
    TemporalSegments {
        buckets,
        window,
        selected,
        quarantined,
        report,
    }
}

/// Drops repos with more than one contributor, then files on a
/// third-party path.
pub fn spatial_segment(records: Vec<RepoRecord>, third_party: &ThirdPartyList) -> (Vec<RepoRecord>, StageReport) {
    let mut report = StageReport::start("spatial_segment", &records);
    let mut kept = Vec::new();
    for mut r in records {
        if r.contributors > 1 {
            report.drop_repo(rule::MULTIPLE_CONTRIBUTORS, &r);
            continue;
        }
        r.files.retain(|f| {
            let vendored = third_party.matches(&f.path);
            if vendored {
                report.drop_file(rule::THIRD_PARTY);
            }
            !vendored
        });
        kept.push(r);
    }
    let report = report.finish(&kept);
    (kept, report)
}

#[derive(Debug, Clone)]
pub struct CleanseConfig {
    pub window: Option<YearWindow>,
    pub max_year: i32,
    pub third_party: ThirdPartyList,
}

impl CleanseConfig {
    pub fn new(max_year: i32) -> Self {
        CleanseConfig {
            window: None,
            max_year,
            third_party: ThirdPartyList::builtin(),
        }
    }
}

/// The current calendar year (UTC).
pub fn current_year() -> i32 {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64);
    // civil-from-days, proleptic Gregorian
    let z = secs.div_euclid(86_400) + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    (yoe + era * 400 + i64::from(month <= 2)) as i32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanseReport {
    pub input_repos: usize,
    pub input_files: usize,
    pub output_repos: usize,
    pub output_files: usize,
    pub stages: Vec<StageReport>,
    pub buckets: BTreeMap<i32, usize>,
    pub window: Option<YearWindow>,
    pub quarantined: Vec<Quarantined>,
}

impl CleanseReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn repos_removed(&self, rule: &str) -> usize {
        self.stages.iter().map(|s| s.repos_removed(rule)).sum()
    }

    pub fn files_removed(&self, rule: &str) -> usize {
        self.stages.iter().map(|s| s.files_removed(rule)).sum()
    }

    pub fn conserved(&self) -> bool {
        let repos: usize = self.stages.iter().flat_map(|s| s.removed_repos.values()).sum();
        let files: usize = self.stages.iter().flat_map(|s| s.removed_files.values()).sum();
        self.stages.iter().all(StageReport::conserved)
            && self.input_repos == self.output_repos + repos
            && self.input_files == self.output_files + files
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "input: {} repos, {} files; output: {} repos, {} files",
            self.input_repos, self.input_files, self.output_repos, self.output_files
        );
        for s in &self.stages {
            let _ = writeln!(
                out,
                "\n{}: repos {} -> {}, files {} -> {}",
                s.stage, s.repos_in, s.repos_out, s.files_in, s.files_out
            );
            let rules: BTreeSet<&String> = s.removed_repos.keys().chain(s.removed_files.keys()).collect();
            for r in rules {
                let _ = writeln!(out, "  {:<22} repos {:>6}  files {:>8}", r, s.repos_removed(r), s.files_removed(r));
            }
        }
        if let Some(w) = self.window {
            let _ = writeln!(out, "\nwindow: {w}");
        }
        let _ = writeln!(out, "year buckets: {}", self.buckets.len());
        for (y, n) in &self.buckets {
            let _ = writeln!(out, "  {y}  {n}");
        }
        for q in &self.quarantined {
            let _ = writeln!(out, "quarantined: {} (year {})", q.id, q.created_at);
        }
        out
    }
}

pub fn cleanse(records: Vec<RepoRecord>, cfg: &CleanseConfig) -> (Vec<RepoRecord>, CleanseReport) {
    let input_repos = records.len();
    let input_files = records.iter().map(|r| r.files.len()).sum();
    let (records, initial) = initial_cleanup(records);
    let temporal = temporal_segment(records, cfg.window, cfg.max_year);
    let (records, spatial) = spatial_segment(temporal.selected, &cfg.third_party);
    let report = CleanseReport {
        input_repos,
        input_files,
        output_repos: records.len(),
        output_files: records.iter().map(|r| r.files.len()).sum(),
        stages: vec![initial, temporal.report, spatial],
        buckets: temporal.buckets,
        window: temporal.window,
        quarantined: temporal.quarantined,
    };
    (records, report)
}

/// Copies surviving files of records that have a local `root` into
/// `out/<repo id>/<path>`. Returns the number of files copied.
pub fn materialize(records: &[RepoRecord], out: &Path) -> Result<usize, CleanseError> {
    let mut copied = 0;
    for r in records {
        let Some(root) = &r.root else { continue };
        for f in &r.files {
            let dest = out.join(&r.id).join(&f.path);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            let src = root.join(&f.path);
            fs::copy(&src, &dest).map_err(io_err(&src))?;
            copied += 1;
        }
    }
    Ok(copied)
}
