//! Aligner CTM output to phone- and word-level TextGrids.
//!
//! The pipeline is: parse CTM lines, resolve numeric phone IDs through
//! `phones.txt`, shift utterance-relative times onto the file timeline via
//! `segments`, split by file, regroup phones into words using their
//! `_B/_I/_E/_S` position suffixes, and look the resulting pronunciations
//! up in the lexicon.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::kaldi_data::{SegmentLine, Timestamp, UttId};
use crate::lexicon::{Lexicon, Pronunciation};
use crate::textgrid::{stack_tiers, Interval, IntervalTier, TextGrid, TextGridError, TIME_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtmError {
    #[error("ctm line {line}: {message}")]
    MalformedCtmLine { line: usize, message: String },
    #[error("phones.txt line {line}: {message}")]
    MalformedPhoneTable { line: usize, message: String },
    #[error("alignment table line {line}: {message}")]
    MalformedTable { line: usize, message: String },
    #[error("phone id {id} on ctm line {line} is not in phones.txt")]
    UnknownPhoneId { id: u32, line: usize },
    #[error("utterance {0} has no segments entry")]
    UnknownUtterance(String),
    #[error("token {phone} in {file_id} ends at {end} beyond the file duration {duration}")]
    TokenBeyondDuration { file_id: String, phone: String, end: f64, duration: f64 },
    #[error("word {word} has no pronunciation \"{pron}\" in the lexicon")]
    PronunciationMismatch { word: String, pron: String },
    #[error("pronunciation \"{pron}\" matches several words: {}", candidates.join(", "))]
    AmbiguousPron { pron: String, candidates: Vec<String> },
    #[error("pronunciation \"{pron}\" matches no lexicon word")]
    UnknownPronunciation { pron: String },
    #[error("utterance {utt}: transcript has {expected} words but {found} were aligned")]
    WordCountMismatch { utt: String, expected: usize, found: usize },
    #[error(transparent)]
    TextGrid(#[from] TextGridError),
}

pub type Result<T> = std::result::Result<T, CtmError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CtmPhone {
    Id(u32),
    Symbol(String),
}

impl fmt::Display for CtmPhone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtmPhone::Id(id) => write!(f, "{id}"),
            CtmPhone::Symbol(s) => f.write_str(s),
        }
    }
}

/// One CTM line. `start` is relative to the utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmEntry {
    pub utt: String,
    /// Carried through, never interpreted.
    pub channel: u32,
    pub start: f64,
    pub dur: f64,
    pub phone: CtmPhone,
    /// 1-based source line, for error messages.
    pub line: usize,
}

pub fn parse_ctm(content: &str) -> Result<Vec<CtmEntry>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| CtmError::MalformedCtmLine { line, message };
        let f: Vec<&str> = raw.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", f.len())));
        }
        let channel = f[1].parse().map_err(|_| err(format!("bad channel {:?}", f[1])))?;
        let time = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(format!("bad time {s:?}")));
        let start = time(f[2])?;
        let dur = time(f[3])?;
        if start < 0.0 {
            return Err(err(format!("negative start {start}")));
        }
        if dur <= 0.0 {
            return Err(err(format!("non-positive duration {dur}")));
        }
        let phone = match f[4].parse::<u32>() {
            Ok(id) => CtmPhone::Id(id),
            Err(_) => CtmPhone::Symbol(f[4].to_string()),
        };
        out.push(CtmEntry { utt: f[0].to_string(), channel, start, dur, phone, line });
    }
    Ok(out)
}

/// `phones.txt`: `symbol id` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhoneSymbolTable {
    by_id: BTreeMap<u32, String>,
    by_symbol: HashMap<String, u32>,
}

impl PhoneSymbolTable {
    pub fn parse(content: &str) -> Result<Self> {
        let mut table = Self::default();
        for (i, raw) in content.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let err = |message: String| CtmError::MalformedPhoneTable { line, message };
            let f: Vec<&str> = raw.split_whitespace().collect();
            if f.len() != 2 {
                return Err(err(format!("expected 2 fields, found {}", f.len())));
            }
            let id: u32 = f[1].parse().map_err(|_| err(format!("bad id {:?}", f[1])))?;
            if table.by_id.insert(id, f[0].to_string()).is_some() {
                return Err(err(format!("duplicate id {id}")));
            }
            if table.by_symbol.insert(f[0].to_string(), id).is_some() {
                return Err(err(format!("duplicate symbol {}", f[0])));
            }
        }
        Ok(table)
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<u32> {
        self.by_symbol.get(symbol).copied()
    }
}

pub fn resolve_phone_ids(entries: &[CtmEntry], table: &PhoneSymbolTable) -> Result<Vec<CtmEntry>> {
    entries
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if let CtmPhone::Id(id) = e.phone {
                let sym = table.symbol(id).ok_or(CtmError::UnknownPhoneId { id, line: e.line })?;
                e.phone = CtmPhone::Symbol(sym.to_string());
            }
            Ok(e)
        })
        .collect()
}

/// Word-position marker carried by a phone symbol suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Begin,
    Internal,
    End,
    Singleton,
}

impl Position {
    pub fn suffix(self) -> &'static str {
        match self {
            Position::Begin => "_B",
            Position::Internal => "_I",
            Position::End => "_E",
            Position::Singleton => "_S",
        }
    }
}

/// Split `AH1_B` into (`AH1`, Begin). Symbols without a suffix pass through.
pub fn split_position(symbol: &str) -> (&str, Option<Position>) {
    let Some(base) = symbol.get(..symbol.len().saturating_sub(2)) else {
        return (symbol, None);
    };
    let pos = match &symbol[base.len()..] {
        "_B" => Position::Begin,
        "_I" => Position::Internal,
        "_E" => Position::End,
        "_S" => Position::Singleton,
        _ => return (symbol, None),
    };
    if base.is_empty() {
        return (symbol, None);
    }
    (base, Some(pos))
}

/// An aligned phone on the file timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneToken {
    /// Full symbol as aligned, suffix included.
    pub phone: String,
    pub base: String,
    pub position: Option<Position>,
    pub utt: String,
    pub channel: u32,
    pub file_id: String,
    pub start: f64,
    pub end: f64,
    pub start_in_utt: f64,
    pub utt_start: f64,
    pub utt_end: f64,
}

impl PhoneToken {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Default non-word symbols.
pub fn default_silence_set() -> BTreeSet<String> {
    ["SIL", "sp", "SP", "oov", "<eps>"].into_iter().map(String::from).collect()
}

/// Shift entries onto file time using each utterance's segment.
pub fn to_file_times(entries: &[CtmEntry], segments: &[SegmentLine]) -> Result<Vec<PhoneToken>> {
    let by_utt: HashMap<&str, &SegmentLine> = segments.iter().map(|s| (s.utt.as_str(), s)).collect();
    entries
        .iter()
        .map(|e| {
            let seg = by_utt.get(e.utt.as_str()).ok_or_else(|| CtmError::UnknownUtterance(e.utt.clone()))?;
            let phone = e.phone.to_string();
            let (base, position) = split_position(&phone);
            let start = seg.start.secs() + e.start;
            Ok(PhoneToken {
                base: base.to_string(),
                position,
                utt: e.utt.clone(),
                channel: e.channel,
                file_id: seg.file_id.clone(),
                start,
                end: start + e.dur,
                start_in_utt: e.start,
                utt_start: seg.start.secs(),
                utt_end: seg.end.secs(),
                phone,
            })
        })
        .collect()
}

/// Group tokens by file, each group in start order.
pub fn split_by_file(tokens: &[PhoneToken]) -> BTreeMap<String, Vec<PhoneToken>> {
    let mut out: BTreeMap<String, Vec<PhoneToken>> = BTreeMap::new();
    for t in tokens {
        out.entry(t.file_id.clone()).or_default().push(t.clone());
    }
    for group in out.values_mut() {
        group.sort_by(|a, b| a.start.total_cmp(&b.start));
    }
    out
}

pub const ALIGNMENT_TABLE_HEADER: &str = "file_utt\tfile\tid\tali\tstartinutt\tdur\tphone\tstart_utt\tend_utt\tstart\tend";

fn fmt_time(t: f64) -> String {
    Timestamp::from_secs(t).to_string()
}

/// The 11-column intermediate table (`final_ali.txt`), header included.
/// `ali` is the numeric phone ID when a table is given.
pub fn render_alignment_table(tokens: &[PhoneToken], table: Option<&PhoneSymbolTable>) -> String {
    let mut out = String::from(ALIGNMENT_TABLE_HEADER);
    out.push('\n');
    for t in tokens {
        let ali = table.and_then(|tb| tb.id(&t.phone)).map_or_else(|| t.phone.clone(), |id| id.to_string());
        let row = [
            t.utt.clone(),
            t.file_id.clone(),
            t.channel.to_string(),
            ali,
            fmt_time(t.start_in_utt),
            fmt_time(t.duration()),
            t.phone.clone(),
            fmt_time(t.utt_start),
            fmt_time(t.utt_end),
            fmt_time(t.start),
            fmt_time(t.end),
        ];
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

pub fn parse_alignment_table(content: &str) -> Result<Vec<PhoneToken>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw == ALIGNMENT_TABLE_HEADER {
            continue;
        }
        let err = |message: String| CtmError::MalformedTable { line, message };
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 11 {
            return Err(err(format!("expected 11 columns, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        let (base, position) = split_position(f[6]);
        out.push(PhoneToken {
            phone: f[6].to_string(),
            base: base.to_string(),
            position,
            utt: f[0].to_string(),
            channel: f[2].parse().map_err(|_| err(format!("bad channel {:?}", f[2])))?,
            file_id: f[1].to_string(),
            start: num(f[9])?,
            end: num(f[10])?,
            start_in_utt: num(f[4])?,
            utt_start: num(f[7])?,
            utt_end: num(f[8])?,
        });
    }
    Ok(out)
}

/// Phones between a `_B` and its `_E`, or a lone `_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordUnit {
    pub pron: Pronunciation,
    pub start: f64,
    pub end: f64,
    pub phones: Vec<PhoneToken>,
}

impl WordUnit {
    fn from_phones(phones: Vec<PhoneToken>) -> Self {
        let pron = Pronunciation::new(phones.iter().map(|p| p.base.clone()).collect()).expect("non-empty phone symbols");
        Self { pron, start: phones[0].start, end: phones[phones.len() - 1].end, phones }
    }

    pub fn utt(&self) -> &str {
        &self.phones[0].utt
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingDefect {
    /// `_I` or `_E` with no open word.
    OrphanedPosition { index: usize, phone: String },
    /// An open word was interrupted before its `_E`.
    UnterminatedWord { index: usize, phone: String },
    /// A symbol with no position suffix that is not a silence symbol.
    Unpositioned { index: usize, phone: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordGrouping {
    pub units: Vec<WordUnit>,
    pub non_words: Vec<PhoneToken>,
    pub defects: Vec<GroupingDefect>,
}

/// Regroup phones into word units. Defects are logged and grouping resumes
/// at the next `_B` or `_S`; tokens of broken words go to `non_words`.
pub fn group_words(tokens: &[PhoneToken], silence: &BTreeSet<String>) -> WordGrouping {
    let mut out = WordGrouping::default();
    let mut open: Vec<PhoneToken> = Vec::new();
    let mut open_at = 0;

    fn abandon(out: &mut WordGrouping, open: &mut Vec<PhoneToken>, index: usize) {
        if let Some(first) = open.first() {
            out.defects.push(GroupingDefect::UnterminatedWord { index, phone: first.phone.clone() });
            out.non_words.append(open);
        }
    }

    for (i, tok) in tokens.iter().enumerate() {
        match tok.position {
            None => {
                abandon(&mut out, &mut open, open_at);
                if !silence.contains(&tok.base) {
                    out.defects.push(GroupingDefect::Unpositioned { index: i, phone: tok.phone.clone() });
                }
                out.non_words.push(tok.clone());
            }
            Some(Position::Singleton) => {
                abandon(&mut out, &mut open, open_at);
                out.units.push(WordUnit::from_phones(vec![tok.clone()]));
            }
            Some(Position::Begin) => {
                abandon(&mut out, &mut open, open_at);
                open_at = i;
                open.push(tok.clone());
            }
            Some(Position::Internal) if !open.is_empty() => open.push(tok.clone()),
            Some(Position::End) if !open.is_empty() => {
                open.push(tok.clone());
                out.units.push(WordUnit::from_phones(std::mem::take(&mut open)));
            }
            Some(Position::Internal | Position::End) => {
                out.defects.push(GroupingDefect::OrphanedPosition { index: i, phone: tok.phone.clone() });
                out.non_words.push(tok.clone());
            }
        }
    }
    abandon(&mut out, &mut open, open_at);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedWord {
    pub word: String,
    pub pron: Pronunciation,
    pub file_id: String,
    pub start: f64,
    pub end: f64,
    pub phones: Vec<PhoneToken>,
}

/// Attach a lexicon word to each unit.
///
/// With `reference_words` (the utterance's transcript) units are matched by
/// position and each pronunciation is checked against that word's entries.
/// Without it the pronunciation is looked up in the reverse index and must
/// name exactly one word.
pub fn match_words(units: &[WordUnit], lex: &Lexicon, reference_words: Option<&[String]>) -> Result<Vec<AlignedWord>> {
    let aligned = |unit: &WordUnit, word: &str| AlignedWord {
        word: word.to_string(),
        pron: unit.pron.clone(),
        file_id: unit.phones[0].file_id.clone(),
        start: unit.start,
        end: unit.end,
        phones: unit.phones.clone(),
    };
    match reference_words {
        Some(words) => {
            if words.len() != units.len() {
                return Err(CtmError::WordCountMismatch {
                    utt: units.first().map(|u| u.utt().to_string()).unwrap_or_default(),
                    expected: words.len(),
                    found: units.len(),
                });
            }
            units
                .iter()
                .zip(words)
                .map(|(unit, word)| {
                    if lex.prons(word).any(|p| *p == unit.pron) {
                        Ok(aligned(unit, word))
                    } else {
                        Err(CtmError::PronunciationMismatch { word: word.clone(), pron: unit.pron.to_string() })
                    }
                })
                .collect()
        }
        None => {
            let reverse = lex.reverse_index();
            units
                .iter()
                .map(|unit| match reverse.get(&unit.pron).map(Vec::as_slice) {
                    Some([word]) => Ok(aligned(unit, word)),
                    Some(many) if many.len() > 1 => Err(CtmError::AmbiguousPron {
                        pron: unit.pron.to_string(),
                        candidates: many.iter().map(|w| w.to_string()).collect(),
                    }),
                    _ => Err(CtmError::UnknownPronunciation { pron: unit.pron.to_string() }),
                })
                .collect()
        }
    }
}

fn spans_to_tier<'a>(
    name: &str,
    spans: impl Iterator<Item = (f64, f64, &'a str)>,
    file_id: &str,
    file_duration: f64,
) -> Result<IntervalTier> {
    let mut intervals = Vec::new();
    for (start, end, label) in spans {
        if end > file_duration + TIME_EPS {
            return Err(CtmError::TokenBeyondDuration {
                file_id: file_id.to_string(),
                phone: label.to_string(),
                end,
                duration: file_duration,
            });
        }
        intervals.push(Interval::new(start, end.min(file_duration), label)?);
    }
    Ok(IntervalTier::with_intervals(name, 0.0, file_duration, intervals).normalized()?)
}

/// Tier `phones`: one interval per token, full symbol as label.
pub fn phones_to_tier(tokens: &[PhoneToken], file_duration: f64) -> Result<IntervalTier> {
    let file_id = tokens.first().map(|t| t.file_id.as_str()).unwrap_or_default();
    spans_to_tier("phones", tokens.iter().map(|t| (t.start, t.end, t.phone.as_str())), file_id, file_duration)
}

/// Tier `words`: one interval per aligned word.
pub fn words_to_tier(words: &[AlignedWord], file_duration: f64) -> Result<IntervalTier> {
    let file_id = words.first().map(|w| w.file_id.as_str()).unwrap_or_default();
    spans_to_tier("words", words.iter().map(|w| (w.start, w.end, w.word.as_str())), file_id, file_duration)
}

/// Everything produced for one audio file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileAlignment {
    pub file_id: String,
    pub duration: f64,
    pub tokens: Vec<PhoneToken>,
    pub words: Vec<AlignedWord>,
    pub non_words: Vec<PhoneToken>,
    pub defects: Vec<GroupingDefect>,
    /// `phones` tier stacked over `words` tier.
    pub grid: TextGrid,
}

/// Inputs shared by every file of one conversion run.
pub struct AlignmentContext<'a> {
    pub segments: &'a [SegmentLine],
    pub lexicon: &'a Lexicon,
    /// Per-utterance transcript words (the data-dir `text` file), if known.
    pub reference: Option<&'a BTreeMap<UttId, Vec<String>>>,
    /// Known file durations; otherwise the last segment end is used.
    pub durations: &'a BTreeMap<String, f64>,
    pub silence: &'a BTreeSet<String>,
}

impl AlignmentContext<'_> {
    pub fn file_duration(&self, file_id: &str) -> f64 {
        self.durations.get(file_id).copied().unwrap_or_else(|| {
            self.segments
                .iter()
                .filter(|s| s.file_id == file_id)
                .map(|s| s.end.secs())
                .fold(0.0, f64::max)
        })
    }
}

/// Group, match, and build the TextGrid for one file's sorted tokens.
pub fn align_file(file_id: &str, tokens: &[PhoneToken], ctx: &AlignmentContext) -> Result<FileAlignment> {
    let duration = ctx.file_duration(file_id);
    let mut words = Vec::new();
    let mut non_words = Vec::new();
    let mut defects = Vec::new();

    // tokens of one utterance are contiguous on the file timeline
    let mut rest = tokens;
    while let Some(first) = rest.first() {
        let n = rest.iter().take_while(|t| t.utt == first.utt).count();
        let (utt_tokens, tail) = rest.split_at(n);
        rest = tail;

        let grouping = group_words(utt_tokens, ctx.silence);
        let reference = match ctx.reference {
            Some(map) => {
                let utt = UttId::new(first.utt.clone()).map_err(|_| CtmError::UnknownUtterance(first.utt.clone()))?;
                Some(map.get(&utt).ok_or_else(|| CtmError::UnknownUtterance(first.utt.clone()))?.as_slice())
            }
            None => None,
        };
        words.extend(match_words(&grouping.units, ctx.lexicon, reference)?);
        non_words.extend(grouping.non_words);
        defects.extend(grouping.defects);
    }

    let phones = TextGrid::with_tiers(0.0, duration, vec![phones_to_tier(tokens, duration)?.into()]);
    let word_grid = TextGrid::with_tiers(0.0, duration, vec![words_to_tier(&words, duration)?.into()]);
    let grid = stack_tiers(&[phones, word_grid])?;
    Ok(FileAlignment {
        file_id: file_id.to_string(),
        duration,
        tokens: tokens.to_vec(),
        words,
        non_words,
        defects,
        grid,
    })
}

/// Run the whole conversion on resolved CTM entries. File-level failures
/// are returned per file so one bad file does not sink the rest.
pub fn align_all(entries: &[CtmEntry], ctx: &AlignmentContext) -> Result<BTreeMap<String, Result<FileAlignment>>> {
    let tokens = to_file_times(entries, ctx.segments)?;
    Ok(split_by_file(&tokens)
        .into_iter()
        .map(|(file, toks)| {
            let result = align_file(&file, &toks, ctx);
            (file, result)
        })
        .collect())
}
