//! FAVE five-column transcripts, MFA TextGrid constraints, and plain
//! single-line transcripts.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kaldi_data::Timestamp;
use crate::lexicon::{Lexicon, DEFAULT_STRIP_CHARS};
use crate::report::ValidationReport;
use crate::textgrid::{TextGrid, TIME_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptError {
    #[error("line {line}: expected 5 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: time {value:?} is not a number")]
    NonNumericTime { line: usize, value: String },
    #[error("line {line}: empty transcription")]
    EmptyText { line: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, TranscriptError>;

/// Seconds each phone is assumed to need when checking an utterance span.
pub const PHONE_BUDGET_SECS: f64 = 0.030;

#[derive(Debug, Clone, PartialEq)]
pub struct FaveRecord {
    pub speaker_id: String,
    pub speaker_name: String,
    pub onset: Timestamp,
    pub offset: Timestamp,
    pub text: String,
}

impl FaveRecord {
    pub fn render(&self) -> String {
        format!("{}\t{}\t{}\t{}\t{}", self.speaker_id, self.speaker_name, self.onset, self.offset, self.text)
    }
}

pub fn parse_fave_transcript(content: &str) -> Result<Vec<FaveRecord>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 5 {
            return Err(TranscriptError::FieldCount { line, found: f.len() });
        }
        let time = |s: &str| {
            Timestamp::parse(s.trim()).ok_or_else(|| TranscriptError::NonNumericTime { line, value: s.to_string() })
        };
        let text = f[4].trim();
        if text.is_empty() {
            return Err(TranscriptError::EmptyText { line });
        }
        out.push(FaveRecord {
            speaker_id: f[0].to_string(),
            speaker_name: f[1].to_string(),
            onset: time(f[2])?,
            offset: time(f[3])?,
            text: text.to_string(),
        });
    }
    Ok(out)
}

pub fn render_fave_transcript(records: &[FaveRecord]) -> String {
    records.iter().map(|r| r.render() + "\n").collect()
}

/// Shortest-pronunciation phone count for `text`; words missing from the
/// lexicon are returned separately.
fn phone_floor<'a>(text: &'a str, lex: &Lexicon) -> (usize, Vec<&'a str>) {
    let mut phones = 0;
    let mut unknown = Vec::new();
    for word in text.split_whitespace() {
        match lex.prons(word).map(|p| p.len()).min() {
            Some(n) => phones += n,
            None => unknown.push(word),
        }
    }
    (phones, unknown)
}

/// True when `phones` at the fixed per-phone budget do not fit in `span`.
pub fn exceeds_phone_budget(phones: usize, span: f64) -> bool {
    phones as f64 * PHONE_BUDGET_SECS > span + TIME_EPS
}

pub fn validate_fave(records: &[FaveRecord], wav_duration: Option<f64>, lexicon: Option<&Lexicon>) -> ValidationReport {
    let mut report = ValidationReport::new();
    let loc = |i: usize| format!("line {}", i + 1);

    for (i, r) in records.iter().enumerate() {
        let (on, off) = (r.onset.secs(), r.offset.secs());
        if on >= off {
            report.error(loc(i), format!("onset {} is not before offset {}", r.onset, r.offset));
            continue;
        }
        if let Some(d) = wav_duration {
            if off > d + TIME_EPS {
                report.warning(loc(i), format!("offset {} is past the end of the audio ({d}); the aligner will warn", r.offset));
            }
        }
        if let Some(lex) = lexicon {
            let (phones, unknown) = phone_floor(&r.text, lex);
            if exceeds_phone_budget(phones, off - on) {
                report.warning(
                    loc(i),
                    format!(
                        "{phones} phones need at least {:.3} s but the utterance spans {:.3} s; alignments may overlap",
                        phones as f64 * PHONE_BUDGET_SECS,
                        off - on
                    ),
                );
            }
            if !unknown.is_empty() {
                report.info(loc(i), format!("not in lexicon: {}", unknown.join(" ")));
            }
        }
    }

    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.onset.secs() < r.offset.secs() {
            by_speaker.entry(&r.speaker_id).or_default().push(i);
        }
    }
    for (speaker, mut idx) in by_speaker {
        idx.sort_by(|&a, &b| records[a].onset.secs().total_cmp(&records[b].onset.secs()));
        for w in idx.windows(2) {
            let (a, b) = (&records[w[0]], &records[w[1]]);
            if b.onset.secs() < a.offset.secs() - TIME_EPS {
                report.error(loc(w[1]), format!("speaker {speaker} overlaps {} ({}-{})", loc(w[0]), a.onset, a.offset));
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfaCheckConfig {
    pub min_end_margin: f64,
    pub recommended_end_margin: f64,
    pub require_separator_intervals: bool,
}

impl Default for MfaCheckConfig {
    fn default() -> Self {
        Self { min_end_margin: 0.020, recommended_end_margin: 0.050, require_separator_intervals: false }
    }
}

impl MfaCheckConfig {
    pub fn new(min_end_margin: f64, recommended_end_margin: f64, require_separator_intervals: bool) -> Result<Self> {
        let cfg = Self { min_end_margin, recommended_end_margin, require_separator_intervals };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_end_margin > 0.0 && self.min_end_margin <= self.recommended_end_margin) {
            return Err(TranscriptError::InvalidConfig(format!(
                "need 0 < min_end_margin ({}) <= recommended_end_margin ({})",
                self.min_end_margin, self.recommended_end_margin
            )));
        }
        Ok(())
    }
}

pub fn validate_mfa_textgrid(grid: &TextGrid, wav_duration: f64, cfg: &MfaCheckConfig) -> ValidationReport {
    let mut report = ValidationReport::new();
    if (grid.xmax - wav_duration).abs() > 1e-3 {
        report.error("grid", format!("xmax {} differs from the audio duration {wav_duration}", grid.xmax));
    }
    let mut any = false;
    for tier in grid.interval_tiers() {
        any = true;
        let end = wav_duration.min(grid.xmax);
        let mut last_text_end: Option<f64> = None;
        let mut prev_text: Option<f64> = None;
        for (j, iv) in tier.intervals.iter().enumerate() {
            let loc = format!("tier {} interval {}", tier.name, j + 1);
            if iv.is_blank() {
                prev_text = None;
                continue;
            }
            if iv.xmin.abs() <= TIME_EPS {
                report.error(&loc, "text interval starts at the start of the file");
            }
            if iv.xmax >= end - TIME_EPS {
                report.error(&loc, "final boundary at file end");
            }
            if cfg.require_separator_intervals && prev_text.is_some_and(|p| (p - iv.xmin).abs() <= TIME_EPS) {
                report.warning(&loc, "adjacent to the previous text interval with no empty interval between");
            }
            prev_text = Some(iv.xmax);
            last_text_end = Some(iv.xmax);
        }
        if let Some(last) = last_text_end.filter(|&l| l < end - TIME_EPS) {
            let margin = end - last;
            let loc = format!("tier {}", tier.name);
            if margin < cfg.min_end_margin - TIME_EPS {
                report.error(loc, format!("final boundary {last} leaves {margin:.3} s, below the {:.3} s minimum", cfg.min_end_margin));
            } else if margin < cfg.recommended_end_margin - TIME_EPS {
                report.warning(
                    loc,
                    format!("final boundary {last} leaves {margin:.3} s, below the recommended {:.3} s", cfg.recommended_end_margin),
                );
            }
        }
    }
    if !any {
        report.error("grid", "no interval tier");
    }
    report
}

/// Markup tokens passed through untouched.
pub const OPAQUE_TOKENS: [&str; 2] = ["{NS}", "{SP}"];

pub fn validate_single_line_transcript(content: &str) -> ValidationReport {
    let mut report = ValidationReport::new();
    let mut saw_sp = false;
    for (i, line) in content.lines().enumerate() {
        for tok in line.split_whitespace() {
            if OPAQUE_TOKENS.contains(&tok) {
                continue;
            }
            if tok == "sp" {
                saw_sp = true;
                continue;
            }
            for c in tok.chars().filter(|c| DEFAULT_STRIP_CHARS.contains(*c)) {
                report.error(format!("line {}", i + 1), format!("punctuation {c:?} in {tok:?}"));
            }
        }
    }
    if saw_sp {
        report.info("transcript", "\"sp\" between words is not necessary; the aligner inserts optional pauses itself");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon, SeparatorPolicy};
    use crate::report::Severity;
    use crate::textgrid::{Interval, IntervalTier};

    fn rec(speaker: &str, on: f64, off: f64, text: &str) -> FaveRecord {
        FaveRecord {
            speaker_id: speaker.into(),
            speaker_name: speaker.into(),
            onset: Timestamp::from_secs(on),
            offset: Timestamp::from_secs(off),
            text: text.into(),
        }
    }

    #[test]
    fn parse_fave() {
        let r = parse_fave_transcript("S1\tSpeaker One\t0.0\t3.44\tSAY TUTT AGAIN\n").unwrap();
        assert_eq!(r[0].speaker_id, "S1");
        assert_eq!(r[0].speaker_name, "Speaker One");
        assert_eq!(r[0].onset.secs(), 0.0);
        assert_eq!(r[0].offset.secs(), 3.44);
        assert_eq!(r[0].text, "SAY TUTT AGAIN");
        assert_eq!(render_fave_transcript(&r), "S1\tSpeaker One\t0.0\t3.44\tSAY TUTT AGAIN\n");
        assert_eq!(parse_fave_transcript("a\tb\t0\t1\n"), Err(TranscriptError::FieldCount { line: 1, found: 4 }));
        assert!(matches!(parse_fave_transcript("a\tb\tx\t1\tHI\n"), Err(TranscriptError::NonNumericTime { .. })));
        let same = parse_fave_transcript("Ann\tAnn\t1\t2\tHI\n").unwrap();
        assert!(validate_fave(&same, None, None).is_empty());
    }

    #[test]
    fn fave_checks() {
        let r = validate_fave(&[rec("S", 0.0, 9999.0, "HI")], Some(30.0), None);
        assert_eq!((r.count(Severity::Error), r.count(Severity::Warning)), (0, 1));
        assert!(validate_fave(&[rec("S", 5.0, 4.0, "HI")], None, None).has_errors());
        let overlap = validate_fave(&[rec("S", 0.0, 2.0, "A"), rec("S", 1.5, 3.0, "B"), rec("T", 1.0, 2.0, "C")], None, None);
        assert_eq!(overlap.count(Severity::Error), 1);
    }

    #[test]
    fn phone_budget() {
        let (lex, _) = parse_lexicon("TEN T EH1 N T UW1 P AH0 L S IY0\nTEN T EH N T UW P AH L S IY\n", SeparatorPolicy::AnyWhitespace).unwrap();
        let r = validate_fave(&[rec("S", 0.0, 0.2, "TEN")], None, Some(&lex));
        assert_eq!(r.count(Severity::Warning), 1);
        let ok = validate_fave(&[rec("S", 0.0, 0.3, "TEN")], None, Some(&lex));
        assert_eq!(ok.count(Severity::Warning), 0);
        assert!(exceeds_phone_budget(10, 0.2));
        assert!(!exceeds_phone_budget(10, 0.3));
    }

    fn grid(intervals: &[(f64, f64, &str)], xmax: f64) -> TextGrid {
        let ivs = intervals.iter().map(|&(a, b, t)| Interval::new(a, b, t).unwrap()).collect();
        TextGrid::with_tiers(0.0, xmax, vec![IntervalTier::with_intervals("words", 0.0, xmax, ivs).normalized().unwrap().into()])
    }

    #[test]
    fn mfa_boundaries() {
        let cfg = MfaCheckConfig::default();
        let r = validate_mfa_textgrid(&grid(&[(1.0, 10.0, "HI")], 10.0), 10.0, &cfg);
        assert!(r.errors().any(|f| f.message.contains("file end")));
        let r = validate_mfa_textgrid(&grid(&[(1.0, 9.97, "HI")], 10.0), 10.0, &cfg);
        assert_eq!((r.count(Severity::Error), r.count(Severity::Warning)), (0, 1));
        let r = validate_mfa_textgrid(&grid(&[(1.0, 9.99, "HI")], 10.0), 10.0, &cfg);
        assert_eq!(r.count(Severity::Error), 1);
        let r = validate_mfa_textgrid(&grid(&[(0.0, 5.0, "HI")], 10.0), 10.0, &cfg);
        assert_eq!(r.count(Severity::Error), 1);
        assert!(validate_mfa_textgrid(&grid(&[(1.0, 5.0, "HI")], 10.0), 10.0, &cfg).is_empty());
        assert!(validate_mfa_textgrid(&grid(&[(1.0, 5.0, "HI")], 10.0), 10.5, &cfg).has_errors());
    }

    #[test]
    fn mfa_separators() {
        let g = grid(&[(1.0, 2.0, "A"), (2.0, 3.0, "B")], 10.0);
        assert!(validate_mfa_textgrid(&g, 10.0, &MfaCheckConfig::default()).is_empty());
        let cfg = MfaCheckConfig::new(0.02, 0.05, true).unwrap();
        assert_eq!(validate_mfa_textgrid(&g, 10.0, &cfg).count(Severity::Warning), 1);
        assert!(MfaCheckConfig::new(0.06, 0.05, false).is_err());
        assert!(MfaCheckConfig::new(0.0, 0.05, false).is_err());
    }

    #[test]
    fn single_line() {
        assert!(validate_single_line_transcript("SAY PAT AGAIN").is_empty());
        let r = validate_single_line_transcript("SAY PAT, AGAIN");
        assert_eq!(r.count(Severity::Error), 1);
        assert!(validate_single_line_transcript("I'M HERE").is_empty());
        assert!(validate_single_line_transcript("{NS} HI {SP}").is_empty());
        let r = validate_single_line_transcript("SAY sp PAT");
        assert_eq!((r.count(Severity::Info), r.findings.len()), (1, 1));
    }
}
