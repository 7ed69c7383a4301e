//! Plumbing shared by every subcommand: errors, config, report output,
//! the output-directory guard, and the batch runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use phonprep::{Severity, ValidationReport};
use rayon::prelude::*;
use thiserror::Error;

/// Failures that stop a run before or while producing output (exit 2).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("refusing to write {} inside input directory {}", output.display(), input.display())]
    OutputInsideInput { output: PathBuf, input: PathBuf },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// The message without the path prefix when it concerns `file` itself.
    pub fn detail_for(&self, file: &Path) -> String {
        match self {
            CliError::Io { path, source } if path == file => source.to_string(),
            CliError::Input { path, message } if path == file => message.clone(),
            other => other.to_string(),
        }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| CliError::Input { path: path.to_path_buf(), message: "not valid UTF-8".into() })
}

/// Attach the offending path to a core error.
pub fn input_err(path: &Path) -> impl Fn(&dyn std::fmt::Display) -> CliError + '_ {
    move |e| CliError::Input { path: path.to_path_buf(), message: e.to_string() }
}

/// `key = value` settings; `#` starts a comment. Command-line flags win.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub const KEYS: [&'static str; 13] = [
        "jobs",
        "silence",
        "strip_chars",
        "separator",
        "min_end_margin",
        "recommended_end_margin",
        "require_separator_intervals",
        "sample_rate",
        "word_tier",
        "phone_tier",
        "vot_tier",
        "tolerance",
        "oov_phone",
    ];

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?).map_err(|message| CliError::Input { path: path.to_path_buf(), message })
    }

    pub fn parse(content: &str) -> std::result::Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let k = k.trim();
            if !Self::KEYS.contains(&k) {
                return Err(format!("line {}: unknown key {k:?}", i + 1));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Usage(format!("config: bad value {v:?} for {key}"))),
        }
    }

    /// Flag if given, else config, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

/// Findings grouped by the file they concern, in a stable order.
#[derive(Debug, Default)]
pub struct Reports {
    entries: Vec<(String, ValidationReport)>,
}

impl Reports {
    pub fn add(&mut self, file: impl Into<String>, report: ValidationReport) {
        if !report.is_empty() {
            self.entries.push((file.into(), report));
        }
    }

    pub fn error(&mut self, file: impl Into<String>, location: &str, message: impl Into<String>) {
        let mut r = ValidationReport::new();
        r.error(location, message);
        self.add(file, r);
    }

    /// A per-file failure inside a batch.
    pub fn failure(&mut self, file: &Path, location: &str, err: &CliError) {
        self.error(file_label(file), location, err.detail_for(file));
    }

    pub fn warning(&mut self, file: impl Into<String>, location: &str, message: impl Into<String>) {
        let mut r = ValidationReport::new();
        r.warning(location, message);
        self.add(file, r);
    }

    pub fn has_errors(&self) -> bool {
        self.entries.iter().any(|(_, r)| r.has_errors())
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.entries.iter().map(|(_, r)| r.count(severity)).sum()
    }

    /// `SEVERITY<TAB>file<TAB>location<TAB>message` per finding.
    pub fn to_machine(&self) -> String {
        let mut out = String::new();
        for (file, r) in &self.entries {
            for line in r.to_machine().lines() {
                let (sev, rest) = line.split_once('\t').unwrap_or((line, ""));
                let _ = writeln!(out, "{sev}\t{}\t{rest}", clean(file));
            }
        }
        out
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        for (file, r) in &self.entries {
            for f in &r.findings {
                let _ = writeln!(out, "{:<7} {file}: {}: {}", f.severity, f.location, f.message);
            }
        }
        let (e, w) = (self.count(Severity::Error), self.count(Severity::Warning));
        if e + w > 0 {
            let _ = writeln!(out, "{e} error(s), {w} warning(s)");
        }
        out
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Lexically absolute path with `.`/`..` resolved, following symlinks on
/// the longest existing prefix.
pub fn resolve(path: &Path) -> PathBuf {
    let abs = if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(path)).unwrap_or_else(|_| path.to_path_buf())
    };
    let mut clean = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::ParentDir => {
                clean.pop();
            }
            Component::CurDir => {}
            other => clean.push(other),
        }
    }
    let mut existing = clean.clone();
    let mut tail = Vec::new();
    while !existing.exists() {
        match existing.file_name() {
            Some(name) => {
                tail.push(name.to_os_string());
                existing.pop();
            }
            None => break,
        }
    }
    let mut out = existing.canonicalize().unwrap_or(existing);
    for part in tail.into_iter().rev() {
        out.push(part);
    }
    out
}

/// Directory an input lives in (the input itself if it is a directory).
fn input_dir(path: &Path) -> PathBuf {
    let p = resolve(path);
    if p.is_dir() {
        p
    } else {
        p.parent().map(Path::to_path_buf).unwrap_or(p)
    }
}

/// Writes outputs, or only lists them under `--dry-run`. Every output is
/// checked against the input directories before anything is written.
pub struct Writer {
    dry_run: bool,
    input_dirs: Vec<PathBuf>,
    /// Outputs written later (the report) that every guard also checks.
    reserved: Vec<PathBuf>,
    pub planned: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dry_run: bool) -> Self {
        Self { dry_run, input_dirs: Vec::new(), reserved: Vec::new(), planned: Vec::new() }
    }

    /// Register inputs and verify each output (file or directory) is not
    /// inside any of their directories.
    pub fn guard<P: AsRef<Path>, Q: AsRef<Path>>(&mut self, inputs: &[P], outputs: &[Q]) -> Result<()> {
        self.input_dirs.extend(inputs.iter().map(|p| input_dir(p.as_ref())));
        for out in outputs.iter().map(AsRef::as_ref).chain(self.reserved.iter().map(PathBuf::as_path)) {
            self.check(out)?;
        }
        Ok(())
    }

    /// Register inputs for a run that writes nothing but the report.
    pub fn inputs<P: AsRef<Path>>(&mut self, inputs: &[P]) -> Result<()> {
        self.guard::<P, &Path>(inputs, &[])
    }

    pub fn reserve(&mut self, output: &Path) {
        self.reserved.push(output.to_path_buf());
    }

    fn check(&self, output: &Path) -> Result<()> {
        let out = resolve(output);
        for dir in &self.input_dirs {
            if out.starts_with(dir) {
                return Err(CliError::OutputInsideInput { output: output.to_path_buf(), input: dir.clone() });
            }
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        self.check(path)?;
        self.planned.push(path.to_path_buf());
        if self.dry_run {
            println!("would write {}", path.display());
            return Ok(());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
        }
        fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }
}

/// Expand paths, glob patterns, and directories (to files with one of
/// `extensions`) into a sorted, de-duplicated file list.
pub fn expand_inputs(patterns: &[String], extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let matches_ext = |p: &Path| {
        extensions.is_empty()
            || p.extension().and_then(|e| e.to_str()).is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
    };
    let mut out = Vec::new();
    for pat in patterns {
        let path = Path::new(pat);
        if path.is_dir() {
            let entries = fs::read_dir(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
            for entry in entries {
                let p = entry.map_err(|source| CliError::Io { path: path.to_path_buf(), source })?.path();
                if p.is_file() && matches_ext(&p) {
                    out.push(p);
                }
            }
        } else if pat.contains(['*', '?', '[']) {
            let paths = glob::glob(pat).map_err(|e| CliError::Usage(format!("bad pattern {pat:?}: {e}")))?;
            out.extend(paths.filter_map(std::result::Result::ok).filter(|p| p.is_file()));
        } else {
            out.push(path.to_path_buf());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Run `f` over `items` on `jobs` workers; results keep the input order.
pub fn run_batch<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

pub fn file_label(path: &Path) -> String {
    path.display().to_string()
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
