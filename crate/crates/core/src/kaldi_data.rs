//! Kaldi-style data directories: `text`, `segments`, `wav.scp`, `utt2spk`,
//! `spk2utt`, plus `conf/mfcc.conf`.
//!
//! Every file is kept as an ordered list of lines so the validator can see
//! ordering and duplicate problems. Sorting is byte-wise (C locale), which
//! is what Kaldi's own tooling expects.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::report::ValidationReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KaldiError {
    #[error("{file}:{line}: {message}")]
    MalformedLine { file: &'static str, line: usize, message: String },
    #[error("invalid utterance id {0:?}")]
    InvalidUttId(String),
    #[error("speaker rule produced no speaker for utterance {0}")]
    RuleFailure(String),
    #[error("duplicate utterance {0}")]
    DuplicateUtt(String),
    #[error("file {file_id} is given two different audio sources")]
    ConflictingAudio { file_id: String },
    #[error("no utterance survives: {0}")]
    EmptyResult(String),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
}

pub type Result<T> = std::result::Result<T, KaldiError>;

/// Utterance identifier: a non-empty token without whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UttId(String);

impl UttId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(KaldiError::InvalidUttId(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UttId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A time in seconds that remembers how it was written.
///
/// Values read from a file re-render exactly as read (`4.60` stays
/// `4.60`); values built from numbers render as the shortest decimal
/// with at least one fractional digit (`0.0`, `3.44`).
#[derive(Debug, Clone, PartialEq)]
pub struct Timestamp {
    value: f64,
    text: String,
}

impl Timestamp {
    pub fn from_secs(value: f64) -> Self {
        let rounded = (value * 1e6).round() / 1e6 + 0.0;
        let mut text = format!("{rounded:?}");
        if text.contains('e') {
            text = format!("{rounded:.6}").trim_end_matches('0').to_string();
            if text.ends_with('.') {
                text.push('0');
            }
        }
        Self { value: rounded, text }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let value: f64 = s.parse().ok()?;
        value.is_finite().then(|| Self { value, text: s.to_string() })
    }

    pub fn secs(&self) -> f64 {
        self.value
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptLine {
    pub utt: UttId,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLine {
    pub utt: UttId,
    pub file_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AudioSource {
    PlainPath(String),
    /// A shell pipeline whose stdout is the wav data; ends in `|`.
    PipedCommand(String),
}

impl AudioSource {
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s.ends_with('|') {
            AudioSource::PipedCommand(s.to_string())
        } else {
            AudioSource::PlainPath(s.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            AudioSource::PlainPath(s) | AudioSource::PipedCommand(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavScpEntry {
    pub file_id: String,
    pub source: AudioSource,
}

/// The five data files, line by line, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KaldiDataDir {
    pub text: Vec<TranscriptLine>,
    pub segments: Vec<SegmentLine>,
    pub wav_scp: Vec<WavScpEntry>,
    pub utt2spk: Vec<(UttId, String)>,
    pub spk2utt: Vec<(String, Vec<UttId>)>,
}

/// Raw file contents for a data directory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataDirFiles {
    pub text: String,
    pub segments: String,
    pub wav_scp: String,
    pub utt2spk: String,
    pub spk2utt: String,
}

impl DataDirFiles {
    pub const NAMES: [&'static str; 5] = ["text", "segments", "wav.scp", "utt2spk", "spk2utt"];

    /// `(file name, contents)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, &str); 5] {
        [
            ("text", &self.text),
            ("segments", &self.segments),
            ("wav.scp", &self.wav_scp),
            ("utt2spk", &self.utt2spk),
            ("spk2utt", &self.spk2utt),
        ]
    }
}

fn content_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Split off the first whitespace-delimited field; tabs count as spaces.
fn first_field(line: &str) -> (&str, &str) {
    let line = line.trim_start();
    match line.find([' ', '\t']) {
        Some(i) => (&line[..i], line[i..].trim_start_matches([' ', '\t'])),
        None => (line, ""),
    }
}

fn malformed(file: &'static str, line: usize, message: impl Into<String>) -> KaldiError {
    KaldiError::MalformedLine { file, line, message: message.into() }
}

pub fn parse_text(content: &str) -> Result<Vec<TranscriptLine>> {
    content_lines(content)
        .map(|(n, line)| {
            let mut fields = line.split_whitespace();
            let utt = UttId::new(fields.next().unwrap_or_default())?;
            let words: Vec<String> = fields.map(str::to_string).collect();
            if words.is_empty() {
                return Err(malformed("text", n, format!("utterance {utt} has no words")));
            }
            Ok(TranscriptLine { utt, words })
        })
        .collect()
}

pub fn parse_segments(content: &str) -> Result<Vec<SegmentLine>> {
    content_lines(content)
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(malformed("segments", n, format!("expected 4 fields, found {}", fields.len())));
            }
            let time = |s: &str| Timestamp::parse(s).ok_or_else(|| malformed("segments", n, format!("bad time {s:?}")));
            Ok(SegmentLine {
                utt: UttId::new(fields[0])?,
                file_id: fields[1].to_string(),
                start: time(fields[2])?,
                end: time(fields[3])?,
            })
        })
        .collect()
}

pub fn parse_wav_scp(content: &str) -> Result<Vec<WavScpEntry>> {
    content_lines(content)
        .map(|(n, line)| {
            let (file_id, rest) = first_field(line);
            if rest.trim().is_empty() {
                return Err(malformed("wav.scp", n, format!("no audio source for {file_id}")));
            }
            Ok(WavScpEntry { file_id: file_id.to_string(), source: AudioSource::parse(rest) })
        })
        .collect()
}

pub fn parse_utt2spk(content: &str) -> Result<Vec<(UttId, String)>> {
    content_lines(content)
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(malformed("utt2spk", n, format!("expected 2 fields, found {}", fields.len())));
            }
            Ok((UttId::new(fields[0])?, fields[1].to_string()))
        })
        .collect()
}

pub fn parse_spk2utt(content: &str) -> Result<Vec<(String, Vec<UttId>)>> {
    content_lines(content)
        .map(|(n, line)| {
            let mut fields = line.split_whitespace();
            let spk = fields.next().unwrap_or_default().to_string();
            let utts = fields.map(UttId::new).collect::<Result<Vec<_>>>()?;
            if utts.is_empty() {
                return Err(malformed("spk2utt", n, format!("speaker {spk} has no utterances")));
            }
            Ok((spk, utts))
        })
        .collect()
}

pub fn render_text(lines: &[TranscriptLine]) -> String {
    lines.iter().map(|l| format!("{} {}\n", l.utt, l.words.join(" "))).collect()
}

pub fn render_segments(lines: &[SegmentLine]) -> String {
    lines.iter().map(|s| format!("{} {} {} {}\n", s.utt, s.file_id, s.start, s.end)).collect()
}

pub fn render_wav_scp(lines: &[WavScpEntry]) -> String {
    lines.iter().map(|w| format!("{} {}\n", w.file_id, w.source.as_str())).collect()
}

pub fn render_utt2spk(lines: &[(UttId, String)]) -> String {
    lines.iter().map(|(u, s)| format!("{u} {s}\n")).collect()
}

pub fn render_spk2utt(lines: &[(String, Vec<UttId>)]) -> String {
    lines
        .iter()
        .map(|(s, utts)| {
            let utts: Vec<&str> = utts.iter().map(UttId::as_str).collect();
            format!("{s} {}\n", utts.join(" "))
        })
        .collect()
}

impl KaldiDataDir {
    /// Parse all five files. A missing `spk2utt` may be passed as empty text.
    pub fn parse(files: &DataDirFiles) -> Result<Self> {
        Ok(Self {
            text: parse_text(&files.text)?,
            segments: parse_segments(&files.segments)?,
            wav_scp: parse_wav_scp(&files.wav_scp)?,
            utt2spk: parse_utt2spk(&files.utt2spk)?,
            spk2utt: parse_spk2utt(&files.spk2utt)?,
        })
    }

    pub fn render(&self) -> DataDirFiles {
        DataDirFiles {
            text: render_text(&self.text),
            segments: render_segments(&self.segments),
            wav_scp: render_wav_scp(&self.wav_scp),
            utt2spk: render_utt2spk(&self.utt2spk),
            spk2utt: render_spk2utt(&self.spk2utt),
        }
    }

    pub fn utt2spk_map(&self) -> BTreeMap<UttId, String> {
        self.utt2spk.iter().cloned().collect()
    }
}

/// How to obtain a speaker ID from an utterance ID.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeakerRule {
    /// The `field`-th (1-based) field when splitting on `delimiter`.
    FieldBeforeDelimiter { delimiter: String, field: usize },
    FixedPrefixLength(usize),
    ExplicitTable(BTreeMap<UttId, String>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeakerAssignment {
    pub utt2spk: BTreeMap<UttId, String>,
    pub warnings: ValidationReport,
}

pub fn derive_utt2spk(utts: &[UttId], rule: &SpeakerRule) -> Result<SpeakerAssignment> {
    let mut out = SpeakerAssignment::default();
    for utt in utts {
        let id = utt.as_str();
        let speaker = match rule {
            SpeakerRule::FieldBeforeDelimiter { delimiter, field } => {
                if delimiter.is_empty() || !id.contains(delimiter.as_str()) {
                    out.warnings.warning(id, format!("no {delimiter:?} in utterance id; using the whole id as speaker"));
                    id.to_string()
                } else {
                    field
                        .checked_sub(1)
                        .and_then(|i| id.split(delimiter.as_str()).nth(i))
                        .unwrap_or_default()
                        .to_string()
                }
            }
            SpeakerRule::FixedPrefixLength(n) => {
                if id.chars().count() < *n {
                    String::new()
                } else {
                    id.chars().take(*n).collect()
                }
            }
            SpeakerRule::ExplicitTable(table) => table.get(utt).cloned().unwrap_or_default(),
        };
        if speaker.is_empty() || speaker.chars().any(char::is_whitespace) {
            return Err(KaldiError::RuleFailure(id.to_string()));
        }
        out.utt2spk.insert(utt.clone(), speaker);
    }
    Ok(out)
}

/// Speaker to byte-sorted utterance list.
pub fn invert_utt2spk(utt2spk: &BTreeMap<UttId, String>) -> BTreeMap<String, Vec<UttId>> {
    let mut out: BTreeMap<String, Vec<UttId>> = BTreeMap::new();
    // BTreeMap iteration is already in utterance order
    for (utt, spk) in utt2spk {
        out.entry(spk.clone()).or_default().push(utt.clone());
    }
    out
}

pub fn spk2utt_to_utt2spk(spk2utt: &BTreeMap<String, Vec<UttId>>) -> BTreeMap<UttId, String> {
    spk2utt
        .iter()
        .flat_map(|(spk, utts)| utts.iter().map(move |u| (u.clone(), spk.clone())))
        .collect()
}

fn check_sorted_unique<'a>(
    report: &mut ValidationReport,
    file: &str,
    keys: impl Iterator<Item = &'a str>,
    allow_identical: Option<&[String]>,
) {
    let keys: Vec<&str> = keys.collect();
    for (i, pair) in keys.windows(2).enumerate() {
        if pair[1] < pair[0] {
            report.error(format!("{file}:{}", i + 2), format!("{file} is not sorted: {:?} after {:?}", pair[1], pair[0]));
            break;
        }
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, key) in keys.iter().enumerate() {
        if let Some(&prev) = seen.get(key) {
            let identical = allow_identical.is_some_and(|lines| lines[prev] == lines[i]);
            if identical {
                report.warning(format!("{file}:{}", i + 1), format!("identical duplicate entry for {key}"));
            } else {
                report.error(format!("{file}:{}", i + 1), format!("duplicate entry for {key} (first at line {})", prev + 1));
            }
        } else {
            seen.insert(key, i);
        }
    }
}

/// Trailing numeric field with leading zeros stripped, for padding-only mismatches.
fn padding_key(id: &str) -> Option<String> {
    let (head, tail) = id.rsplit_once('_')?;
    if tail.is_empty() || !tail.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = tail.trim_start_matches('0');
    Some(format!("{head}_{}", if digits.is_empty() { "0" } else { digits }))
}

pub fn validate_data_dir(dir: &KaldiDataDir, strict_speaker_prefix: bool) -> ValidationReport {
    let mut report = ValidationReport::new();

    check_sorted_unique(&mut report, "text", dir.text.iter().map(|l| l.utt.as_str()), None);
    check_sorted_unique(&mut report, "segments", dir.segments.iter().map(|l| l.utt.as_str()), None);
    let wav_lines: Vec<String> = dir.wav_scp.iter().map(|w| format!("{} {}", w.file_id, w.source.as_str())).collect();
    check_sorted_unique(&mut report, "wav.scp", dir.wav_scp.iter().map(|w| w.file_id.as_str()), Some(&wav_lines));
    check_sorted_unique(&mut report, "utt2spk", dir.utt2spk.iter().map(|(u, _)| u.as_str()), None);
    check_sorted_unique(&mut report, "spk2utt", dir.spk2utt.iter().map(|(s, _)| s.as_str()), None);

    let text_ids: BTreeSet<&UttId> = dir.text.iter().map(|l| &l.utt).collect();
    let seg_ids: BTreeSet<&UttId> = dir.segments.iter().map(|l| &l.utt).collect();
    let spk_ids: BTreeSet<&UttId> = dir.utt2spk.iter().map(|(u, _)| u).collect();
    let all: BTreeSet<&UttId> = text_ids.iter().chain(&seg_ids).chain(&spk_ids).copied().collect();
    for utt in &all {
        for (name, ids) in [("text", &text_ids), ("segments", &seg_ids), ("utt2spk", &spk_ids)] {
            if !ids.contains(utt) {
                report.error(name, format!("utterance {utt} missing from {name}"));
            }
        }
    }

    let seg_by_padding: HashMap<String, &UttId> =
        seg_ids.iter().filter_map(|u| padding_key(u.as_str()).map(|k| (k, *u))).collect();
    for utt in text_ids.difference(&seg_ids) {
        if let Some(other) = padding_key(utt.as_str()).and_then(|k| seg_by_padding.get(&k)) {
            if !text_ids.contains(other) {
                report.warning("segments", format!("utterance {utt} in text and {other} in segments differ only by zero-padding"));
            }
        }
    }

    let wav_ids: BTreeSet<&str> = dir.wav_scp.iter().map(|w| w.file_id.as_str()).collect();
    let mut used_files = BTreeSet::new();
    for (i, seg) in dir.segments.iter().enumerate() {
        let loc = format!("segments:{}", i + 1);
        if seg.start.secs() < 0.0 {
            report.error(&loc, format!("utterance {} starts before 0", seg.utt));
        }
        if seg.start.secs() >= seg.end.secs() {
            report.error(&loc, format!("utterance {} has start {} >= end {}", seg.utt, seg.start, seg.end));
        }
        if !wav_ids.contains(seg.file_id.as_str()) {
            report.error(&loc, format!("file {} of utterance {} not in wav.scp", seg.file_id, seg.utt));
        }
        used_files.insert(seg.file_id.as_str());
    }
    for file in wav_ids.difference(&used_files) {
        report.warning("wav.scp", format!("file {file} has no segments"));
    }

    let utt2spk = dir.utt2spk_map();
    let expected: Vec<(String, Vec<UttId>)> = invert_utt2spk(&utt2spk).into_iter().collect();
    if dir.spk2utt != expected {
        report.error("spk2utt", "spk2utt is not the inversion of utt2spk");
    }

    for (utt, spk) in &dir.utt2spk {
        if spk.is_empty() {
            report.error("utt2spk", format!("utterance {utt} has an empty speaker"));
        } else if strict_speaker_prefix && !utt.as_str().starts_with(spk.as_str()) {
            report.warning("utt2spk", format!("speaker {spk} is not a prefix of utterance {utt}"));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedLine {
    pub file: &'static str,
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FixLog {
    pub dropped: Vec<DroppedLine>,
}

impl FixLog {
    fn drop(&mut self, file: &'static str, line: String, reason: impl Into<String>) {
        self.dropped.push(DroppedLine { file, line, reason: reason.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty()
    }
}

/// Keys occurring more than once.
fn duplicated<'a>(keys: impl Iterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for k in keys {
        if !seen.insert(k) {
            dups.insert(k);
        }
    }
    dups
}

/// Sort every file, keep only utterances present in text, segments and
/// utt2spk, drop unused wav.scp entries, and regenerate spk2utt.
///
/// Lines that cannot be repaired (duplicated utterance IDs, segments with
/// bad times or unknown files) are dropped along with their utterance.
pub fn fix_data_dir(dir: &KaldiDataDir) -> Result<(KaldiDataDir, FixLog)> {
    let mut log = FixLog::default();

    // wav.scp: identical duplicates collapse, conflicting ones are dropped
    let mut wav: BTreeMap<&str, &WavScpEntry> = BTreeMap::new();
    let mut conflicting = BTreeSet::new();
    for w in &dir.wav_scp {
        match wav.get(w.file_id.as_str()) {
            Some(prev) if *prev == w => log.drop("wav.scp", render_wav_scp(std::slice::from_ref(w)).trim_end().into(), "identical duplicate"),
            Some(_) => {
                conflicting.insert(w.file_id.as_str());
            }
            None => {
                wav.insert(&w.file_id, w);
            }
        }
    }
    for id in &conflicting {
        for w in dir.wav_scp.iter().filter(|w| w.file_id == *id) {
            log.drop("wav.scp", render_wav_scp(std::slice::from_ref(w)).trim_end().into(), "conflicting audio sources");
        }
        wav.remove(id);
    }

    let text_dups = duplicated(dir.text.iter().map(|l| l.utt.as_str()));
    let seg_dups = duplicated(dir.segments.iter().map(|l| l.utt.as_str()));
    let spk_dups = duplicated(dir.utt2spk.iter().map(|(u, _)| u.as_str()));

    let seg_ok = |s: &SegmentLine| {
        !seg_dups.contains(s.utt.as_str())
            && s.start.secs() >= 0.0
            && s.start.secs() < s.end.secs()
            && wav.contains_key(s.file_id.as_str())
    };
    let text_ids: BTreeSet<&UttId> = dir.text.iter().filter(|l| !text_dups.contains(l.utt.as_str())).map(|l| &l.utt).collect();
    let seg_ids: BTreeSet<&UttId> = dir.segments.iter().filter(|s| seg_ok(s)).map(|s| &s.utt).collect();
    let spk_ids: BTreeSet<&UttId> = dir
        .utt2spk
        .iter()
        .filter(|(u, s)| !spk_dups.contains(u.as_str()) && !s.is_empty())
        .map(|(u, _)| u)
        .collect();
    let keep: BTreeSet<&UttId> = text_ids
        .iter()
        .filter(|u| seg_ids.contains(*u) && spk_ids.contains(*u))
        .copied()
        .collect();

    let reason = |utt: &UttId, file_dups: &BTreeSet<&str>| {
        if file_dups.contains(utt.as_str()) {
            "duplicate utterance id".to_string()
        } else {
            let mut missing = Vec::new();
            if !text_ids.contains(utt) {
                missing.push("text");
            }
            if !seg_ids.contains(utt) {
                missing.push("segments");
            }
            if !spk_ids.contains(utt) {
                missing.push("utt2spk");
            }
            format!("utterance not usable in {}", missing.join(", "))
        }
    };

    let mut text = Vec::new();
    for l in &dir.text {
        if keep.contains(&l.utt) && !text_dups.contains(l.utt.as_str()) {
            text.push(l.clone());
        } else {
            log.drop("text", render_text(std::slice::from_ref(l)).trim_end().into(), reason(&l.utt, &text_dups));
        }
    }
    let mut segments = Vec::new();
    for s in &dir.segments {
        if keep.contains(&s.utt) && seg_ok(s) {
            segments.push(s.clone());
        } else {
            let why = if seg_dups.contains(s.utt.as_str()) {
                "duplicate utterance id".to_string()
            } else if s.start.secs() < 0.0 || s.start.secs() >= s.end.secs() {
                "invalid segment times".to_string()
            } else if !wav.contains_key(s.file_id.as_str()) {
                format!("file {} not in wav.scp", s.file_id)
            } else {
                reason(&s.utt, &seg_dups)
            };
            log.drop("segments", render_segments(std::slice::from_ref(s)).trim_end().into(), why);
        }
    }
    let mut utt2spk = Vec::new();
    for (u, s) in &dir.utt2spk {
        if keep.contains(u) && !spk_dups.contains(u.as_str()) && !s.is_empty() {
            utt2spk.push((u.clone(), s.clone()));
        } else {
            log.drop("utt2spk", format!("{u} {s}"), reason(u, &spk_dups));
        }
    }

    if keep.is_empty() {
        return Err(KaldiError::EmptyResult(format!(
            "{} text, {} segments and {} utt2spk lines share no utterance",
            dir.text.len(),
            dir.segments.len(),
            dir.utt2spk.len()
        )));
    }

    let used: BTreeSet<&str> = segments.iter().map(|s| s.file_id.as_str()).collect();
    let mut wav_scp = Vec::new();
    for (id, w) in wav {
        if used.contains(id) {
            wav_scp.push(w.clone());
        } else {
            log.drop("wav.scp", render_wav_scp(std::slice::from_ref(w)).trim_end().into(), "no surviving segment");
        }
    }

    text.sort_by(|a, b| a.utt.cmp(&b.utt));
    segments.sort_by(|a, b| a.utt.cmp(&b.utt));
    utt2spk.sort_by(|a, b| a.0.cmp(&b.0));
    let spk2utt: Vec<(String, Vec<UttId>)> = invert_utt2spk(&utt2spk.iter().cloned().collect()).into_iter().collect();
    if !dir.spk2utt.is_empty() && dir.spk2utt != spk2utt {
        for (s, utts) in &dir.spk2utt {
            if !spk2utt.iter().any(|(s2, u2)| s2 == s && u2 == utts) {
                log.drop("spk2utt", render_spk2utt(&[(s.clone(), utts.clone())]).trim_end().into(), "regenerated from utt2spk");
            }
        }
    }

    Ok((KaldiDataDir { text, segments, wav_scp, utt2spk, spk2utt }, log))
}

/// One utterance's worth of information for building a data directory.
#[derive(Debug, Clone, PartialEq)]
pub struct UttRecord {
    pub utt: UttId,
    pub file_id: String,
    pub start: f64,
    pub end: f64,
    pub words: Vec<String>,
    pub speaker: String,
    pub audio: AudioSource,
}

pub fn build_from_records(records: &[UttRecord]) -> Result<KaldiDataDir> {
    if records.is_empty() {
        return Err(KaldiError::EmptyResult("no records".into()));
    }
    let mut by_utt: BTreeMap<&UttId, &UttRecord> = BTreeMap::new();
    let mut audio: BTreeMap<&str, &AudioSource> = BTreeMap::new();
    for r in records {
        if by_utt.insert(&r.utt, r).is_some() {
            return Err(KaldiError::DuplicateUtt(r.utt.to_string()));
        }
        if r.words.is_empty() {
            return Err(KaldiError::MalformedLine { file: "text", line: 0, message: format!("utterance {} has no words", r.utt) });
        }
        if !(r.start >= 0.0 && r.start < r.end) {
            return Err(KaldiError::MalformedLine {
                file: "segments",
                line: 0,
                message: format!("utterance {} has start {} >= end {}", r.utt, r.start, r.end),
            });
        }
        if r.speaker.is_empty() || r.speaker.chars().any(char::is_whitespace) {
            return Err(KaldiError::RuleFailure(r.utt.to_string()));
        }
        if let Some(prev) = audio.insert(&r.file_id, &r.audio) {
            if prev != &r.audio {
                return Err(KaldiError::ConflictingAudio { file_id: r.file_id.clone() });
            }
        }
    }

    let text = by_utt.values().map(|r| TranscriptLine { utt: r.utt.clone(), words: r.words.clone() }).collect();
    let segments = by_utt
        .values()
        .map(|r| SegmentLine {
            utt: r.utt.clone(),
            file_id: r.file_id.clone(),
            start: Timestamp::from_secs(r.start),
            end: Timestamp::from_secs(r.end),
        })
        .collect();
    let wav_scp = audio
        .into_iter()
        .map(|(f, a)| WavScpEntry { file_id: f.to_string(), source: a.clone() })
        .collect();
    let utt2spk: BTreeMap<UttId, String> = by_utt.values().map(|r| (r.utt.clone(), r.speaker.clone())).collect();
    let spk2utt = invert_utt2spk(&utt2spk).into_iter().collect();
    Ok(KaldiDataDir { text, segments, wav_scp, utt2spk: utt2spk.into_iter().collect(), spk2utt })
}

/// Contents of `conf/mfcc.conf`.
pub fn write_mfcc_conf(sample_rate: u32) -> Result<String> {
    if sample_rate == 0 {
        return Err(KaldiError::InvalidSampleRate);
    }
    Ok(format!("--use-energy=false\n--sample-frequency={sample_rate}\n"))
}
