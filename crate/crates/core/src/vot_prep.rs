//! AutoVOT preparation and post-processing: pick prevocalic stop words,
//! locate them in aligned TextGrids, build padded analysis windows, and
//! measure the decoded tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ctm_align::split_position;
use crate::lexicon::{is_vowel_base, phone_base, Lexicon};
use crate::report::ValidationReport;
use crate::textgrid::{Interval, IntervalTier, TextGrid, TextGridError, Tier, TIME_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VotError {
    #[error("tier {0} not found or not an interval tier")]
    MissingTier(String),
    #[error("no phone interval starts within tolerance of word {word} at {start}")]
    PhoneAlignmentGap { word: String, start: f64 },
    #[error("word {word} at {start} begins with {phone}, not a stop")]
    NotAStop { word: String, start: f64, phone: String },
    #[error("window label {0:?} is not one of P T K B D G")]
    UnknownLabel(String),
    #[error("no vowel follows the stop of the token at {at}")]
    MissingVowel { at: f64 },
    #[error("no word interval contains the token at {at}")]
    NoContainingWord { at: f64 },
    #[error("speaking rate requested but the word tier has no double-silence sentence breaks")]
    NoSentenceStructure,
    #[error("line {line}: {message}")]
    MalformedLocations { line: usize, message: String },
    #[error(transparent)]
    TextGrid(#[from] TextGridError),
}

pub type Result<T> = std::result::Result<T, VotError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Voicing {
    Voiceless,
    Voiced,
}

impl Voicing {
    /// Window extension on each side. The odd millisecond keeps window
    /// edges off the aligner's 10 ms boundary grid.
    pub fn padding(self) -> f64 {
        match self {
            Voicing::Voiceless => 0.031,
            Voicing::Voiced => 0.011,
        }
    }

    pub fn min_vot(self) -> f64 {
        match self {
            Voicing::Voiceless => 0.015,
            Voicing::Voiced => 0.004,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stop {
    P,
    T,
    K,
    B,
    D,
    G,
}

impl Stop {
    pub const ALL: [Stop; 6] = [Stop::P, Stop::T, Stop::K, Stop::B, Stop::D, Stop::G];

    pub fn letter(self) -> &'static str {
        match self {
            Stop::P => "P",
            Stop::T => "T",
            Stop::K => "K",
            Stop::B => "B",
            Stop::D => "D",
            Stop::G => "G",
        }
    }

    pub fn voicing(self) -> Voicing {
        match self {
            Stop::P | Stop::T | Stop::K => Voicing::Voiceless,
            Stop::B | Stop::D | Stop::G => Voicing::Voiced,
        }
    }

    /// Accepts bare letters and aligned symbols such as `P_B`.
    pub fn from_symbol(symbol: &str) -> Option<Stop> {
        let (base, _) = split_position(symbol);
        Stop::from_str(phone_base(base)).ok()
    }
}

impl FromStr for Stop {
    type Err = VotError;

    fn from_str(s: &str) -> Result<Self> {
        Stop::ALL.into_iter().find(|st| st.letter() == s).ok_or_else(|| VotError::UnknownLabel(s.to_string()))
    }
}

impl fmt::Display for Stop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

/// Words with a stop followed by a vowel at the start of any pronunciation.
pub fn find_cv_stop_words(lex: &Lexicon) -> Vec<String> {
    let words: BTreeSet<&str> = lex
        .entries()
        .iter()
        .filter(|(_, pron)| match pron.phones() {
            [first, second, ..] => Stop::from_str(phone_base(first)).is_ok() && is_vowel_base(phone_base(second)),
            _ => false,
        })
        .map(|(w, _)| w.as_str())
        .collect();
    words.into_iter().map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordOccurrence {
    pub word: String,
    pub file_id: String,
    pub start: f64,
    pub end: f64,
    pub stop: Stop,
    /// End of the word-initial stop on the phone tier.
    pub stop_end: f64,
}

/// Default tolerance for a phone boundary to coincide with a word start:
/// just over one 10 ms alignment frame.
pub const LOCATE_TOLERANCE: f64 = 0.011;

fn interval_tier<'a>(grid: &'a TextGrid, name: &str) -> Result<&'a IntervalTier> {
    grid.interval_tier(name).ok_or_else(|| VotError::MissingTier(name.to_string()))
}

pub fn locate_words(
    grid: &TextGrid,
    file_id: &str,
    word_tier: &str,
    phone_tier: &str,
    words: &BTreeSet<String>,
    tolerance: f64,
) -> Result<Vec<WordOccurrence>> {
    let wt = interval_tier(grid, word_tier)?;
    let pt = interval_tier(grid, phone_tier)?;
    let mut out = Vec::new();
    for w in wt.labeled().filter(|w| words.contains(w.text.trim())) {
        let word = w.text.trim().to_string();
        let phone = pt
            .labeled()
            .map(|p| ((p.xmin - w.xmin).abs(), p))
            .filter(|(d, _)| *d <= tolerance + TIME_EPS)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| p)
            .ok_or_else(|| VotError::PhoneAlignmentGap { word: word.clone(), start: w.xmin })?;
        let stop = Stop::from_symbol(phone.text.trim()).ok_or_else(|| VotError::NotAStop {
            word: word.clone(),
            start: w.xmin,
            phone: phone.text.clone(),
        })?;
        out.push(WordOccurrence { word, file_id: file_id.to_string(), start: w.xmin, end: w.xmax, stop, stop_end: phone.xmax });
    }
    Ok(out)
}

/// `CVWordLocations.txt`: file_id, word, start, end, stop, stop_end.
pub fn render_locations(occurrences: &[WordOccurrence]) -> String {
    occurrences
        .iter()
        .map(|o| format!("{}\t{}\t{}\t{}\t{}\t{}\n", o.file_id, o.word, o.start, o.end, o.stop, o.stop_end))
        .collect()
}

pub fn parse_locations(content: &str) -> Result<Vec<WordOccurrence>> {
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| VotError::MalformedLocations { line, message };
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad time {s:?}")));
        let occ = WordOccurrence {
            file_id: f[0].to_string(),
            word: f[1].to_string(),
            start: num(f[2])?,
            end: num(f[3])?,
            stop: f[4].trim().parse().map_err(|_| err(format!("bad stop {:?}", f[4])))?,
            stop_end: num(f[5])?,
        };
        if !(occ.start < occ.stop_end && occ.stop_end <= occ.end + TIME_EPS) {
            return Err(err("need start < stop_end <= end".into()));
        }
        out.push(occ);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotWindow {
    pub label: Stop,
    pub start: f64,
    pub end: f64,
    pub occurrence: WordOccurrence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOverlap {
    pub first: usize,
    pub second: usize,
    pub start: f64,
    pub end: f64,
    pub midpoint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<VotWindow>,
    /// The `vot` tier, gap-filled over the file.
    pub tier: IntervalTier,
    pub overlaps: Vec<WindowOverlap>,
    /// Indices of windows cut back to the file edges.
    pub clamped: Vec<usize>,
}

impl WindowSet {
    pub fn report(&self) -> ValidationReport {
        let mut r = ValidationReport::new();
        for o in &self.overlaps {
            r.warning(
                format!("window {}", o.second + 1),
                format!("overlaps window {} over [{}, {}]; both cut at {}", o.first + 1, o.start, o.end, o.midpoint),
            );
        }
        for &i in &self.clamped {
            r.info(format!("window {}", i + 1), "truncated at the file edge");
        }
        r
    }
}

pub const VOT_TIER: &str = "vot";

/// One padded window per occurrence, clamped to the file. Overlapping
/// neighbours are both cut at the midpoint of their overlap.
pub fn make_vot_windows(occurrences: &[WordOccurrence], file_duration: f64) -> Result<WindowSet> {
    let mut sorted: Vec<&WordOccurrence> = occurrences.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));

    let mut windows: Vec<VotWindow> = Vec::with_capacity(sorted.len());
    let mut overlaps = Vec::new();
    let mut clamped = Vec::new();
    // boundaries first
    for (i, occ) in sorted.into_iter().enumerate() {
        let pad = occ.stop.voicing().padding();
        let (raw_start, raw_end) = (occ.start - pad, occ.stop_end + pad);
        let (mut start, end) = (raw_start.max(0.0), raw_end.min(file_duration));
        if start != raw_start || end != raw_end {
            clamped.push(i);
        }
        if let Some(prev) = windows.last_mut() {
            if start < prev.end {
                let overlap_end = prev.end.min(end);
                let midpoint = (start + overlap_end) / 2.0;
                overlaps.push(WindowOverlap { first: i - 1, second: i, start, end: overlap_end, midpoint });
                prev.end = midpoint;
                start = midpoint;
            }
        }
        windows.push(VotWindow { label: occ.stop, start, end, occurrence: occ.clone() });
    }
    // then labels
    let intervals = windows
        .iter()
        .map(|w| Interval::new(w.start, w.end, w.label.letter()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let tier = IntervalTier::with_intervals(VOT_TIER, 0.0, file_duration, intervals).normalized()?;
    Ok(WindowSet { windows, tier, overlaps, clamped })
}

/// One tier per stop letter (named by the letter), so the decoder can be
/// run once per label.
pub fn split_windows_by_stop(tier: &IntervalTier) -> Result<BTreeMap<Stop, IntervalTier>> {
    let mut buckets: BTreeMap<Stop, Vec<Interval>> = Stop::ALL.into_iter().map(|s| (s, Vec::new())).collect();
    for iv in tier.labeled() {
        let stop: Stop = iv.text.trim().parse()?;
        buckets.get_mut(&stop).expect("all stops present").push(iv.clone());
    }
    buckets
        .into_iter()
        .map(|(stop, ivs)| Ok((stop, IntervalTier::with_intervals(stop.letter(), tier.xmin, tier.xmax, ivs).normalized()?)))
        .collect()
}

pub const LIST_WAV_FILES: &str = "ListWavFiles.txt";
pub const LIST_TEXTGRIDS: &str = "ListTextGrids.txt";

/// One path per line, in the order given.
pub fn render_path_list<S: AsRef<str>>(paths: &[S]) -> String {
    paths.iter().map(|p| format!("{}\n", p.as_ref())).collect()
}

/// The decoder invocation for one stop label.
pub fn decode_command(stop: Stop, window_tier: &str, wav_list: &str, textgrid_list: &str, model: &str) -> String {
    let ms = (stop.voicing().min_vot() * 1000.0).round() as u32;
    format!(
        "auto_vot_decode.py --window_tier {window_tier} --window_mark {stop} --min_vot_length {ms} {wav_list} {textgrid_list} {model}"
    )
}

/// File-name stages of the workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStage {
    AllAuto,
    Stops,
    Stacked,
    Stacked2,
}

impl GridStage {
    pub fn suffix(self) -> &'static str {
        match self {
            GridStage::AllAuto => "_allauto",
            GridStage::Stops => "_stops",
            GridStage::Stacked => "_stacked",
            GridStage::Stacked2 => "_stacked2",
        }
    }

    pub fn file_name(self, stem: &str) -> String {
        format!("{stem}{}.TextGrid", self.suffix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenDelta {
    pub manual: usize,
    pub auto: usize,
    pub label: String,
    /// Signed auto − manual.
    pub burst_delta: f64,
    pub vowel_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryComparison {
    pub pairs: Vec<TokenDelta>,
    /// Indices into the labeled tokens of each tier.
    pub unpaired_manual: Vec<usize>,
    pub unpaired_auto: Vec<usize>,
    /// (manual, auto) whose best partner was already taken.
    pub conflicts: Vec<(usize, usize)>,
}

/// Pair manual and auto tokens one-to-one. Each manual token takes the auto
/// token it overlaps most (a gap up to `tolerance` still counts as touching);
/// an auto token already taken leaves the later manual token unpaired and
/// logged as a conflict.
fn pair_tokens(manual: &[&Interval], auto: &[&Interval], tolerance: f64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut taken = vec![false; auto.len()];
    let mut pairs = Vec::new();
    let mut conflicts = Vec::new();
    for (mi, m) in manual.iter().enumerate() {
        let best = auto
            .iter()
            .enumerate()
            .map(|(ai, a)| (ai, a.xmax.min(m.xmax) - a.xmin.max(m.xmin)))
            .filter(|&(_, ov)| ov > 0.0 || (tolerance > 0.0 && ov > -tolerance))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((ai, _)) if taken[ai] => conflicts.push((mi, ai)),
            Some((ai, _)) => {
                taken[ai] = true;
                pairs.push((mi, ai));
            }
            None => {}
        }
    }
    (pairs, conflicts)
}

pub fn compare_boundaries(manual: &IntervalTier, auto: &IntervalTier, pairing_tolerance: f64) -> BoundaryComparison {
    let m: Vec<&Interval> = manual.labeled().collect();
    let a: Vec<&Interval> = auto.labeled().collect();
    let (pairs, conflicts) = pair_tokens(&m, &a, pairing_tolerance);
    let paired_m: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    let paired_a: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
    BoundaryComparison {
        pairs: pairs
            .into_iter()
            .map(|(mi, ai)| TokenDelta {
                manual: mi,
                auto: ai,
                label: a[ai].text.clone(),
                burst_delta: a[ai].xmin - m[mi].xmin,
                vowel_delta: a[ai].xmax - m[mi].xmax,
            })
            .collect(),
        unpaired_manual: (0..m.len()).filter(|i| !paired_m.contains(i)).collect(),
        unpaired_auto: (0..a.len()).filter(|i| !paired_a.contains(i)).collect(),
        conflicts,
    }
}

/// Give auto tokens the boundaries of the manual token covering them,
/// keeping the auto label. The auto tier is replaced in place.
///
/// A replacement happens only when the manual and auto token overlap each
/// other and nothing else on the opposite tier; any other overlap pattern
/// is ambiguous, left automatic, and reported. This keeps the result free
/// of collisions and makes a second pass a no-op.
pub fn prefer_manual(grid: &TextGrid, manual_tier: &str, auto_tier: &str) -> Result<(TextGrid, ValidationReport)> {
    let manual = interval_tier(grid, manual_tier)?;
    let auto = interval_tier(grid, auto_tier)?;
    let m: Vec<&Interval> = manual.labeled().collect();
    let a: Vec<&Interval> = auto.labeled().collect();
    let overlaps = |x: &Interval, y: &Interval| x.overlap_with(y) > TIME_EPS;
    let partners_of_auto: Vec<Vec<usize>> =
        a.iter().map(|ai| (0..m.len()).filter(|&j| overlaps(ai, m[j])).collect()).collect();
    let partners_of_manual: Vec<Vec<usize>> =
        m.iter().map(|mi| (0..a.len()).filter(|&j| overlaps(mi, a[j])).collect()).collect();

    let mut report = ValidationReport::new();
    let mut tokens: Vec<Interval> = Vec::with_capacity(a.len());
    for (ai, tok) in a.iter().enumerate() {
        match partners_of_auto[ai].as_slice() {
            [] => tokens.push((*tok).clone()),
            [mi] if partners_of_manual[*mi] == [ai] => {
                tokens.push(Interval::new(m[*mi].xmin, m[*mi].xmax, tok.text.clone())?);
            }
            _ => {
                report.warning(
                    format!("{auto_tier} token {}", ai + 1),
                    "overlapping manual tokens are not one-to-one; kept automatic boundaries",
                );
                tokens.push((*tok).clone());
            }
        }
    }
    let new_tier = IntervalTier::with_intervals(auto.name.clone(), auto.xmin, auto.xmax, tokens).normalized()?;
    let mut out = grid.clone();
    let (idx, _) = out.find_tier(auto_tier).expect("tier checked above");
    out.tiers[idx] = Tier::Interval(new_tier);
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotMeasurement {
    pub file_id: String,
    pub word: String,
    pub stop: String,
    pub burst_onset: f64,
    pub vocalic_onset: f64,
    pub vot: f64,
    pub vowel_duration: f64,
    pub word_duration: f64,
    pub speaking_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOptions {
    pub speaking_rate: bool,
    /// Word-tier labels counted as silence for sentence detection.
    pub silence_labels: BTreeSet<String>,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            speaking_rate: true,
            silence_labels: ["", "sp", "SP", "sil", "SIL"].into_iter().map(String::from).collect(),
        }
    }
}

/// Sentence index for each word-tier interval (`None` for silences).
/// Sentences break at two or more consecutive silent intervals.
fn sentence_ids(words: &IntervalTier, silence: &BTreeSet<String>) -> (Vec<Option<usize>>, bool) {
    let mut ids = Vec::with_capacity(words.intervals.len());
    let mut sentence = 0;
    let mut run = 0;
    let mut any_break = false;
    let mut seen_word = false;
    for iv in &words.intervals {
        if silence.contains(iv.text.trim()) {
            run += 1;
            if run == 2 {
                any_break = true;
                if seen_word {
                    sentence += 1;
                    seen_word = false;
                }
            }
            ids.push(None);
        } else {
            run = 0;
            seen_word = true;
            ids.push(Some(sentence));
        }
    }
    (ids, any_break)
}

/// Measure each decoded token on `vot_tier` against the phone and word tiers.
pub fn measure_cues(
    grid: &TextGrid,
    file_id: &str,
    vot_tier: &str,
    phone_tier: &str,
    word_tier: &str,
    opts: &MeasureOptions,
) -> Result<Vec<VotMeasurement>> {
    let vt = interval_tier(grid, vot_tier)?;
    let pt = interval_tier(grid, phone_tier)?;
    let wt = interval_tier(grid, word_tier)?;

    let rates: Option<(Vec<Option<usize>>, BTreeMap<usize, f64>)> = if opts.speaking_rate {
        let (ids, any_break) = sentence_ids(wt, &opts.silence_labels);
        if !any_break {
            return Err(VotError::NoSentenceStructure);
        }
        let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (iv, id) in wt.intervals.iter().zip(&ids) {
            if let Some(s) = id {
                let e = sums.entry(*s).or_insert((0.0, 0));
                e.0 += iv.duration();
                e.1 += 1;
            }
        }
        Some((ids, sums.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect()))
    } else {
        None
    };

    let mut out = Vec::new();
    for tok in vt.labeled() {
        let mid = (tok.xmin + tok.xmax) / 2.0;
        let (wi, word) = wt
            .intervals
            .iter()
            .enumerate()
            .find(|(_, w)| !opts.silence_labels.contains(w.text.trim()) && w.xmin - TIME_EPS <= mid && mid < w.xmax)
            .ok_or(VotError::NoContainingWord { at: tok.xmin })?;
        // the word-initial phone is the stop; the next phone must be a vowel
        let stop_idx = pt
            .intervals
            .iter()
            .position(|p| !p.is_blank() && (p.xmin - word.xmin).abs() <= LOCATE_TOLERANCE + TIME_EPS)
            .ok_or(VotError::PhoneAlignmentGap { word: word.text.clone(), start: word.xmin })?;
        let vowel = pt
            .intervals
            .get(stop_idx + 1)
            .filter(|p| is_vowel_base(phone_base(split_position(p.text.trim()).0)))
            .ok_or(VotError::MissingVowel { at: tok.xmin })?;
        let stop = match Stop::from_symbol(tok.text.trim()) {
            Some(s) => s.letter().to_string(),
            None => Stop::from_symbol(pt.intervals[stop_idx].text.trim())
                .map_or_else(|| tok.text.trim().to_string(), |s| s.letter().to_string()),
        };
        let speaking_rate = rates.as_ref().and_then(|(ids, means)| ids[wi].and_then(|s| means.get(&s).copied()));
        out.push(VotMeasurement {
            file_id: file_id.to_string(),
            word: word.text.trim().to_string(),
            stop,
            burst_onset: tok.xmin,
            vocalic_onset: tok.xmax,
            vot: tok.xmax - tok.xmin,
            vowel_duration: vowel.duration(),
            word_duration: word.duration(),
            speaking_rate,
        });
    }
    Ok(out)
}

pub const MEASUREMENT_HEADER: &str =
    "file_id\tword\tstop\tburst_onset\tvocalic_onset\tvot\tvowel_duration\tword_duration\tspeaking_rate";

/// Tab-separated table with a header row; rows in the order given.
pub fn render_measurements(rows: &[VotMeasurement]) -> String {
    let mut out = String::from(MEASUREMENT_HEADER);
    out.push('\n');
    for m in rows {
        let rate = m.speaking_rate.map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"));
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
            m.file_id, m.word, m.stop, m.burst_onset, m.vocalic_onset, m.vot, m.vowel_duration, m.word_duration, rate
        ));
    }
    out
}

/// Tokens shorter than their class minimum, i.e. decodes that ignored
/// `--min_vot_length`. Reported, never dropped.
pub fn min_vot_violations(rows: &[VotMeasurement]) -> ValidationReport {
    let mut r = ValidationReport::new();
    for m in rows {
        let Some(stop) = Stop::from_symbol(&m.stop) else { continue };
        let min = stop.voicing().min_vot();
        if m.vot < min - 1e-9 {
            r.warning(
                format!("{} {} at {}", m.file_id, m.word, m.burst_onset),
                format!("vot {:.4} s is below the {} s minimum for {}", m.vot, min, stop),
            );
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon, SeparatorPolicy};
    use crate::textgrid::merge_interval_tiers;

    fn tier(name: &str, xmax: f64, ivs: &[(f64, f64, &str)]) -> IntervalTier {
        IntervalTier::with_intervals(name, 0.0, xmax, ivs.iter().map(|&(a, b, t)| Interval::new(a, b, t).unwrap()).collect())
            .normalized()
            .unwrap()
    }

    fn occ(stop: Stop, start: f64, stop_end: f64) -> WordOccurrence {
        WordOccurrence { word: "W".into(), file_id: "f".into(), start, end: stop_end + 0.2, stop, stop_end }
    }

    #[test]
    fn cv_words() {
        let (lex, _) = parse_lexicon("PAT P AE1 T\nKLATT K L AE1 T\nSAY S EY1\nBOOK B UH1 K\nTO T UW1\nTO T AH0\n", SeparatorPolicy::AnyWhitespace).unwrap();
        assert_eq!(find_cv_stop_words(&lex), ["BOOK", "PAT", "TO"]);
    }

    #[test]
    fn locate() {
        let g = TextGrid::with_tiers(
            0.0,
            2.0,
            vec![
                tier("words", 2.0, &[(1.0, 1.3, "PAT"), (1.4, 1.6, "SAY")]).into(),
                tier("phones", 2.0, &[(1.0, 1.08, "P"), (1.08, 1.2, "AE1"), (1.2, 1.3, "T")]).into(),
            ],
        );
        let words: BTreeSet<String> = ["PAT".to_string()].into();
        let o = locate_words(&g, "f", "words", "phones", &words, LOCATE_TOLERANCE).unwrap();
        assert_eq!(o, [WordOccurrence { word: "PAT".into(), file_id: "f".into(), start: 1.0, end: 1.3, stop: Stop::P, stop_end: 1.08 }]);

        let shifted = TextGrid::with_tiers(
            0.0,
            2.0,
            vec![tier("words", 2.0, &[(1.0, 1.3, "PAT")]).into(), tier("phones", 2.0, &[(1.03, 1.08, "P")]).into()],
        );
        assert!(matches!(
            locate_words(&shifted, "f", "words", "phones", &words, LOCATE_TOLERANCE),
            Err(VotError::PhoneAlignmentGap { .. })
        ));
        assert!(matches!(locate_words(&g, "f", "nope", "phones", &words, 0.011), Err(VotError::MissingTier(_))));
    }

    #[test]
    fn locations_round_trip() {
        let o = vec![occ(Stop::P, 1.0, 1.08), occ(Stop::G, 2.5, 2.53)];
        assert_eq!(parse_locations(&render_locations(&o)).unwrap(), o);
        assert!(parse_locations("f\tW\t1\t2\tQ\t1.5\n").is_err());
    }

    #[test]
    fn worked_windows() {
        let w = make_vot_windows(&[occ(Stop::P, 1.0, 1.08), occ(Stop::B, 2.0, 2.04)], 5.0).unwrap();
        assert!((w.windows[0].start - 0.969).abs() < 1e-9 && (w.windows[0].end - 1.111).abs() < 1e-9);
        assert!((w.windows[1].start - 1.989).abs() < 1e-9 && (w.windows[1].end - 2.051).abs() < 1e-9);
        let labels: Vec<&str> = w.tier.labeled().map(|i| i.text.as_str()).collect();
        assert_eq!(labels, ["P", "B"]);
        assert!(w.overlaps.is_empty() && w.clamped.is_empty());

        let c = make_vot_windows(&[occ(Stop::P, 0.01, 0.06)], 5.0).unwrap();
        assert_eq!(c.windows[0].start, 0.0);
        assert!((c.windows[0].end - 0.091).abs() < 1e-9);
        assert_eq!(c.clamped, [0]);
    }

    #[test]
    fn overlapping_windows_cut_at_midpoint() {
        let w = make_vot_windows(&[occ(Stop::P, 1.0, 1.08), occ(Stop::T, 1.1, 1.2)], 5.0).unwrap();
        // [0.969, 1.111] and [1.069, 1.231] overlap over [1.069, 1.111]
        assert_eq!(w.overlaps.len(), 1);
        let mid = (1.1 - 0.031 + 1.08 + 0.031) / 2.0;
        assert_eq!(w.windows[0].end, mid);
        assert_eq!(w.windows[1].start, mid);
        assert_eq!(w.report().count(crate::Severity::Warning), 1);
    }

    #[test]
    fn split_and_merge_back() {
        let w = make_vot_windows(&[occ(Stop::P, 1.0, 1.08), occ(Stop::B, 2.0, 2.04), occ(Stop::P, 3.0, 3.05)], 5.0).unwrap();
        let parts = split_windows_by_stop(&w.tier).unwrap();
        assert_eq!(parts.len(), 6);
        assert_eq!(parts[&Stop::P].labeled().count(), 2);
        assert_eq!(parts[&Stop::B].labeled().count(), 1);
        assert_eq!(parts[&Stop::K].intervals.len(), 1);

        let grid = TextGrid::with_tiers(0.0, 5.0, parts.into_values().map(Tier::from).collect());
        let merged = merge_interval_tiers(&grid, &[1, 2, 3, 4, 5, 6], "vot").unwrap();
        let back = merged.interval_tier("vot").unwrap();
        assert_eq!(back.labeled().collect::<Vec<_>>(), w.tier.labeled().collect::<Vec<_>>());

        assert!(split_windows_by_stop(&tier("vot", 1.0, &[(0.1, 0.2, "Q")])).is_err());
        assert!(split_windows_by_stop(&tier("vot", 1.0, &[])).unwrap().values().all(|t| t.labeled().count() == 0));
    }

    #[test]
    fn decode_commands() {
        assert_eq!(
            decode_command(Stop::P, "vot", "config/ListWavFiles.txt", "config/ListTextGrids.txt", "m.model"),
            "auto_vot_decode.py --window_tier vot --window_mark P --min_vot_length 15 config/ListWavFiles.txt config/ListTextGrids.txt m.model"
        );
        assert!(decode_command(Stop::B, "vot", "a", "b", "c").contains("--min_vot_length 4 "));
        assert_eq!(GridStage::Stacked2.file_name("x"), "x_stacked2.TextGrid");
        assert_eq!(render_path_list(&["/a/x.wav", "/a/y.wav"]), "/a/x.wav\n/a/y.wav\n");
    }

    #[test]
    fn comparison() {
        let manual = tier("m", 3.0, &[(1.0, 1.06, "P")]);
        let auto = tier("a", 3.0, &[(1.004, 1.061, "P"), (2.0, 2.05, "B")]);
        let c = compare_boundaries(&manual, &auto, 0.0);
        assert_eq!(c.pairs.len(), 1);
        assert!((c.pairs[0].burst_delta - 0.004).abs() < 1e-9);
        assert!((c.pairs[0].vowel_delta - 0.001).abs() < 1e-9);
        assert_eq!(c.unpaired_auto, [1]);
        let same = compare_boundaries(&auto, &auto, 0.0);
        assert!(same.pairs.iter().all(|p| p.burst_delta == 0.0 && p.vowel_delta == 0.0));
        assert!(same.unpaired_auto.is_empty() && same.unpaired_manual.is_empty());
    }

    #[test]
    fn one_manual_two_auto_conflict() {
        let manual = tier("m", 3.0, &[(1.0, 1.06, "P"), (1.06, 1.1, "P")]);
        let auto = tier("a", 3.0, &[(1.0, 1.1, "P")]);
        let c = compare_boundaries(&manual, &auto, 0.0);
        assert_eq!(c.pairs.len(), 1);
        assert_eq!(c.conflicts, [(1, 0)]);
        assert_eq!(c.unpaired_manual, [1]);
    }

    #[test]
    fn manual_preferred() {
        let g = TextGrid::with_tiers(
            0.0,
            3.0,
            vec![
                tier("manual", 3.0, &[(1.0, 1.06, "x"), (2.5, 2.6, "y")]).into(),
                tier("auto", 3.0, &[(1.004, 1.061, "P"), (2.0, 2.05, "B")]).into(),
            ],
        );
        let (out, report) = prefer_manual(&g, "manual", "auto").unwrap();
        assert!(report.is_empty());
        let toks: Vec<_> = out.interval_tier("auto").unwrap().labeled().map(|i| (i.xmin, i.xmax, i.text.clone())).collect();
        assert_eq!(toks, [(1.0, 1.06, "P".to_string()), (2.0, 2.05, "B".to_string())]);
        assert_eq!(prefer_manual(&out, "manual", "auto").unwrap().0, out);

        let none = TextGrid::with_tiers(0.0, 3.0, vec![tier("manual", 3.0, &[]).into(), tier("auto", 3.0, &[(2.0, 2.05, "B")]).into()]);
        assert_eq!(prefer_manual(&none, "manual", "auto").unwrap().0, none);
    }

    fn measure_grid() -> TextGrid {
        TextGrid::with_tiers(
            0.0,
            4.0,
            vec![
                tier("words", 4.0, &[(1.0, 1.3, "PAT"), (1.3, 1.8, "AGAIN"), (1.8, 1.9, "sp"), (2.0, 2.4, "BOOK")]).into(),
                tier("phones", 4.0, &[(1.0, 1.06, "P"), (1.06, 1.21, "AE1"), (1.21, 1.3, "T"), (2.0, 2.05, "B"), (2.05, 2.2, "UH1")]).into(),
                tier("vot", 4.0, &[(1.0, 1.06, "P"), (2.0, 2.012, "B")]).into(),
            ],
        )
    }

    #[test]
    fn measurement() {
        let m = measure_cues(&measure_grid(), "f", "vot", "phones", "words", &MeasureOptions::default()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].word.as_str(), m[0].stop.as_str()), ("PAT", "P"));
        assert_eq!(m[0].vot, 1.06 - 1.0);
        assert_eq!(m[0].vowel_duration, 1.21 - 1.06);
        assert_eq!(m[0].word_duration, 1.3 - 1.0);
        assert_eq!(m[0].speaking_rate, Some(((1.3 - 1.0) + (1.8 - 1.3)) / 2.0));
        assert_eq!(m[1].speaking_rate, Some(2.4 - 2.0));
        let table = render_measurements(&m);
        assert!(table.starts_with(MEASUREMENT_HEADER));
        assert_eq!(table.lines().count(), 3);
        let v = min_vot_violations(&m);
        assert!(v.is_empty());
    }

    #[test]
    fn measurement_errors() {
        let mut g = measure_grid();
        // a single sp between sentences is not a break
        g.tiers[0] = tier("words", 4.0, &[(1.0, 1.3, "PAT"), (1.3, 2.0, "sp"), (2.0, 4.0, "BOOK")]).into();
        assert_eq!(
            measure_cues(&g, "f", "vot", "phones", "words", &MeasureOptions::default()),
            Err(VotError::NoSentenceStructure)
        );
        let skip = MeasureOptions { speaking_rate: false, ..MeasureOptions::default() };
        assert!(measure_cues(&g, "f", "vot", "phones", "words", &skip).unwrap().iter().all(|m| m.speaking_rate.is_none()));

        let mut g = measure_grid();
        g.tiers[1] = tier("phones", 4.0, &[(1.0, 1.06, "P"), (1.06, 1.21, "L"), (2.0, 2.05, "B"), (2.05, 2.2, "UH1")]).into();
        assert_eq!(
            measure_cues(&g, "f", "vot", "phones", "words", &MeasureOptions::default()),
            Err(VotError::MissingVowel { at: 1.0 })
        );
    }

    #[test]
    fn short_tokens_reported() {
        let mut m = measure_cues(&measure_grid(), "f", "vot", "phones", "words", &MeasureOptions::default()).unwrap();
        m[0].vot = 0.010;
        assert_eq!(min_vot_violations(&m).findings.len(), 1);
    }
}
