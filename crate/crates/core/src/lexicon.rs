//! Pronunciation lexicons, corpus word lists and the Kaldi phone-set files
//! derived from them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::report::ValidationReport;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("invalid stress on {0:?}: stress digits 0-2 go on vowels only")]
    InvalidStress(String),
    #[error("invalid phone symbol {0:?}")]
    InvalidPhone(String),
}

pub type Result<T> = std::result::Result<T, LexiconError>;

/// Arpabet vowel bases; only these carry stress digits.
pub const ARPABET_VOWELS: [&str; 15] =
    ["AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"];

pub fn is_vowel_base(base: &str) -> bool {
    ARPABET_VOWELS.contains(&base)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pronunciation(Vec<String>);

impl Pronunciation {
    pub fn new(phones: Vec<String>) -> Result<Self> {
        if phones.is_empty() {
            return Err(LexiconError::InvalidPhone(String::new()));
        }
        if let Some(bad) = phones.iter().find(|p| p.is_empty() || p.chars().any(char::is_whitespace)) {
            return Err(LexiconError::InvalidPhone(bad.clone()));
        }
        Ok(Self(phones))
    }

    pub fn phones(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::str::FromStr for Pronunciation {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.split_whitespace().map(str::to_string).collect())
    }
}

impl fmt::Display for Pronunciation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Ordered word/pronunciation entries with a word index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: Vec<(String, Pronunciation)>,
    index: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an entry; returns false if the exact pair is already present.
    pub fn insert(&mut self, word: impl Into<String>, pron: Pronunciation) -> bool {
        let word = word.into();
        if self.prons(&word).any(|p| *p == pron) {
            return false;
        }
        self.index.entry(word.clone()).or_default().push(self.entries.len());
        self.entries.push((word, pron));
        true
    }

    pub fn entries(&self) -> &[(String, Pronunciation)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn prons<'a>(&'a self, word: &str) -> impl Iterator<Item = &'a Pronunciation> + 'a {
        self.index
            .get(word)
            .into_iter()
            .flatten()
            .map(move |&i| &self.entries[i].1)
    }

    pub fn words(&self) -> BTreeSet<&str> {
        self.index.keys().map(String::as_str).collect()
    }

    /// Pronunciation to the words that have it, words in entry order.
    pub fn reverse_index(&self) -> BTreeMap<&Pronunciation, Vec<&str>> {
        let mut out: BTreeMap<&Pronunciation, Vec<&str>> = BTreeMap::new();
        for (w, p) in &self.entries {
            let words = out.entry(p).or_default();
            if !words.contains(&w.as_str()) {
                words.push(w);
            }
        }
        out
    }

    /// Render as `lexicon.txt` lines.
    pub fn render(&self, separator: SeparatorPolicy) -> String {
        let sep = match separator {
            SeparatorPolicy::AnyWhitespace => " ",
            SeparatorPolicy::TwoSpaces => "  ",
            SeparatorPolicy::Tab => "\t",
        };
        self.entries.iter().map(|(w, p)| format!("{w}{sep}{p}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatorPolicy {
    #[default]
    AnyWhitespace,
    /// CMU/P2FA style: `WORD  P H O N E S`.
    TwoSpaces,
    Tab,
}

/// Parse `lexicon.txt`-style content. Duplicate entries are collapsed and
/// reported as warnings; `;;;` comment lines are skipped.
pub fn parse_lexicon(content: &str, separator: SeparatorPolicy) -> Result<(Lexicon, ValidationReport)> {
    let mut lex = Lexicon::new();
    let mut report = ValidationReport::new();
    for (i, raw) in content.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with(";;;") {
            continue;
        }
        let split = match separator {
            SeparatorPolicy::AnyWhitespace => {
                let line = line.trim_start();
                line.find(char::is_whitespace).map(|i| (&line[..i], &line[i..]))
            }
            SeparatorPolicy::TwoSpaces => line.find("  ").map(|i| (&line[..i], &line[i + 2..])),
            SeparatorPolicy::Tab => line.find('\t').map(|i| (&line[..i], &line[i + 1..])),
        };
        let (word, phones) = split.ok_or_else(|| LexiconError::MalformedLine {
            line: n,
            message: format!("no pronunciation for {:?}", line.trim()),
        })?;
        let word = word.trim();
        if word.is_empty() {
            return Err(LexiconError::MalformedLine { line: n, message: "empty word".into() });
        }
        let pron: Pronunciation = phones.parse().map_err(|_| LexiconError::MalformedLine {
            line: n,
            message: format!("no pronunciation for {word:?}"),
        })?;
        if !lex.insert(word, pron) {
            report.warning(format!("line {n}"), format!("duplicate entry for {word} collapsed"));
        }
    }
    Ok((lex, report))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationPolicy {
    pub uppercase: bool,
    pub strip_chars: String,
    pub keep_apostrophes: bool,
}

pub const DEFAULT_STRIP_CHARS: &str = ".,?!;:";

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self { uppercase: true, strip_chars: DEFAULT_STRIP_CHARS.to_string(), keep_apostrophes: true }
    }
}

impl NormalizationPolicy {
    /// Normalize one whitespace-free token; `None` when nothing is left.
    pub fn normalize(&self, token: &str) -> Option<String> {
        let mut out: String = token
            .chars()
            .filter(|c| !self.strip_chars.contains(*c))
            .filter(|c| self.keep_apostrophes || *c != '\'')
            .collect();
        if self.uppercase {
            out = out.to_uppercase();
        }
        (!out.is_empty()).then_some(out)
    }

    pub fn tokens<'a>(&'a self, text: &'a str) -> impl Iterator<Item = String> + 'a {
        text.split_whitespace().filter_map(|t| self.normalize(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordCount {
    pub word: String,
    pub count: usize,
}

/// Word frequencies, most frequent first, ties in byte order.
pub fn extract_word_list(transcripts: &str, policy: &NormalizationPolicy) -> Vec<WordCount> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for token in policy.tokens(transcripts) {
        *counts.entry(token).or_default() += 1;
    }
    let mut out: Vec<WordCount> = counts.into_iter().map(|(word, count)| WordCount { word, count }).collect();
    // stable sort keeps the byte order from the BTreeMap within equal counts
    out.sort_by(|a, b| b.count.cmp(&a.count));
    out
}

/// The sorted unique word set (`words.txt`).
pub fn unique_words(counts: &[WordCount]) -> Vec<String> {
    let set: BTreeSet<&str> = counts.iter().map(|c| c.word.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OovEntry {
    pub word: String,
    pub phone: String,
}

impl Default for OovEntry {
    fn default() -> Self {
        Self { word: "<oov>".into(), phone: "oov".into() }
    }
}

/// Keep only entries for `words`, with the OOV entry first.
pub fn filter_lexicon(lex: &Lexicon, words: &BTreeSet<String>, oov: &OovEntry) -> Lexicon {
    let mut out = Lexicon::new();
    out.insert(oov.word.clone(), Pronunciation(vec![oov.phone.clone()]));
    for (w, p) in lex.entries() {
        if words.contains(w) {
            out.insert(w.clone(), p.clone());
        }
    }
    out
}

/// Words with no lexicon entry, byte-sorted.
pub fn missing_words(words: &BTreeSet<String>, lex: &Lexicon) -> Vec<String> {
    words.iter().filter(|w| !lex.contains(w)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArpabetPhone {
    pub base: String,
    pub stress: Option<u8>,
}

impl ArpabetPhone {
    pub fn is_vowel(&self) -> bool {
        is_vowel_base(&self.base)
    }
}

impl fmt::Display for ArpabetPhone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        if let Some(s) = self.stress {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn parse_arpabet(symbol: &str) -> Result<ArpabetPhone> {
    if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
        return Err(LexiconError::InvalidPhone(symbol.to_string()));
    }
    let last = symbol.chars().last().expect("non-empty");
    if let Some(d) = last.to_digit(10) {
        let base = &symbol[..symbol.len() - 1];
        if d > 2 || !is_vowel_base(base) {
            return Err(LexiconError::InvalidStress(symbol.to_string()));
        }
        return Ok(ArpabetPhone { base: base.to_string(), stress: Some(d as u8) });
    }
    Ok(ArpabetPhone { base: symbol.to_string(), stress: None })
}

/// Base of a phone symbol with any trailing stress digits removed.
pub fn phone_base(symbol: &str) -> &str {
    symbol.trim_end_matches(|c: char| c.is_ascii_digit())
}

/// `nonsilence_phones.txt` groups: stress variants of a vowel share a
/// line, every other phone is alone on its line.
pub fn derive_nonsilence_phones(lex: &Lexicon) -> Vec<Vec<String>> {
    let mut groups: BTreeMap<String, BTreeSet<(Option<u8>, String)>> = BTreeMap::new();
    for (_, pron) in lex.entries() {
        for phone in pron.phones() {
            let (key, stress) = match parse_arpabet(phone) {
                Ok(p) => (p.base, p.stress),
                Err(_) => (phone.clone(), None),
            };
            groups.entry(key).or_default().insert((stress, phone.clone()));
        }
    }
    groups
        .into_values()
        .map(|members| members.into_iter().map(|(_, p)| p).collect())
        .collect()
}

pub fn render_phone_groups(groups: &[Vec<String>]) -> String {
    groups.iter().map(|g| format!("{}\n", g.join(" "))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilenceFiles {
    pub silence_phones: String,
    pub optional_silence: String,
}

pub fn derive_silence_files() -> SilenceFiles {
    SilenceFiles { silence_phones: "SIL\noov\n".into(), optional_silence: "SIL\n".into() }
}

/// Info findings for pronunciations whose vowels are all unstressed.
pub fn stress_report(lex: &Lexicon) -> ValidationReport {
    let mut report = ValidationReport::new();
    for (w, p) in lex.entries() {
        let stresses: Vec<u8> = p
            .phones()
            .iter()
            .filter_map(|ph| parse_arpabet(ph).ok())
            .filter(ArpabetPhone::is_vowel)
            .filter_map(|ph| ph.stress)
            .collect();
        if !stresses.is_empty() && stresses.iter().all(|&s| s == 0) {
            report.info(w.as_str(), format!("pronunciation \"{p}\" has no stressed vowel"));
        }
    }
    report
}
