use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use phonprep::lexicon::{
    derive_nonsilence_phones, derive_silence_files, filter_lexicon, missing_words, parse_lexicon, render_phone_groups,
    stress_report, Lexicon, NormalizationPolicy, OovEntry, SeparatorPolicy, DEFAULT_STRIP_CHARS,
};
use phonprep::ValidationReport;

use crate::common::{file_label, input_err, read_text, CliError, Reports, Result};
use crate::Ctx;

#[derive(Debug, Subcommand)]
pub enum LexiconCmd {
    /// Keep only the entries for words used in the transcripts, plus the OOV entry.
    Filter(FilterArgs),
    /// List transcript words that have no lexicon entry.
    Missing(MissingArgs),
    /// Write nonsilence_phones.txt, silence_phones.txt and optional_silence.txt.
    Phones(PhonesArgs),
}

#[derive(Debug, Args)]
pub struct LexiconOpts {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// `whitespace`, `two-spaces` or `tab`.
    #[arg(long)]
    pub separator: Option<String>,
}

#[derive(Debug, Args)]
pub struct TranscriptOpts {
    /// Transcript text; with --kaldi-text the first column (utterance id) is ignored.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub kaldi_text: bool,
    /// Characters removed from tokens before lookup.
    #[arg(long)]
    pub strip_chars: Option<String>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub lex: LexiconOpts,
    #[command(flatten)]
    pub words: TranscriptOpts,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "<oov>")]
    pub oov_word: String,
    #[arg(long)]
    pub oov_phone: Option<String>,
}

#[derive(Debug, Args)]
pub struct MissingArgs {
    #[command(flatten)]
    pub lex: LexiconOpts,
    #[command(flatten)]
    pub words: TranscriptOpts,
    /// Write the missing words here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhonesArgs {
    #[command(flatten)]
    pub lex: LexiconOpts,
    /// Output directory (e.g. data/local/dict).
    #[arg(long)]
    pub out: PathBuf,
    /// Symbols excluded from the nonsilence groups (space-separated).
    #[arg(long)]
    pub silence: Option<String>,
}

pub fn run(cmd: &LexiconCmd, ctx: &mut Ctx) -> Result<Reports> {
    match cmd {
        LexiconCmd::Filter(a) => filter(a, ctx),
        LexiconCmd::Missing(a) => missing(a, ctx),
        LexiconCmd::Phones(a) => phones(a, ctx),
    }
}

pub fn separator_policy(name: &str) -> Result<SeparatorPolicy> {
    match name {
        "whitespace" => Ok(SeparatorPolicy::AnyWhitespace),
        "two-spaces" => Ok(SeparatorPolicy::TwoSpaces),
        "tab" => Ok(SeparatorPolicy::Tab),
        _ => Err(CliError::Usage(format!("unknown separator {name:?} (whitespace, two-spaces, tab)"))),
    }
}

pub fn load_lexicon(opts: &LexiconOpts, ctx: &Ctx) -> Result<(Lexicon, SeparatorPolicy, ValidationReport)> {
    let sep = separator_policy(&ctx.config.pick(opts.separator.clone(), "separator", "whitespace".into())?)?;
    let (lex, report) = parse_lexicon(&read_text(&opts.lexicon)?, sep).map_err(|e| input_err(&opts.lexicon)(&e))?;
    Ok((lex, sep, report))
}

fn transcript_words(opts: &TranscriptOpts, ctx: &Ctx) -> Result<BTreeSet<String>> {
    let strip_chars = ctx.config.pick(opts.strip_chars.clone(), "strip_chars", DEFAULT_STRIP_CHARS.into())?;
    let policy = NormalizationPolicy { strip_chars, ..NormalizationPolicy::default() };
    let content = read_text(&opts.text)?;
    let mut words = BTreeSet::new();
    for line in content.lines() {
        let body = if opts.kaldi_text { line.split_once(char::is_whitespace).map_or("", |(_, rest)| rest) } else { line };
        words.extend(policy.tokens(body));
    }
    Ok(words)
}

fn filter(a: &FilterArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.lex.lexicon, &a.words.text], &[&a.out])?;
    let (lex, sep, report) = load_lexicon(&a.lex, ctx)?;
    let words = transcript_words(&a.words, ctx)?;
    let oov = OovEntry { word: a.oov_word.clone(), phone: ctx.config.pick(a.oov_phone.clone(), "oov_phone", OovEntry::default().phone)? };
    let filtered = filter_lexicon(&lex, &words, &oov);
    ctx.writer.write(&a.out, filtered.render(sep))?;
    let mut reports = Reports::default();
    reports.add(file_label(&a.lex.lexicon), report);
    reports.add(file_label(&a.words.text), missing_report(&words, &lex));
    Ok(reports)
}

fn missing_report(words: &BTreeSet<String>, lex: &Lexicon) -> ValidationReport {
    let mut r = ValidationReport::new();
    for w in missing_words(words, lex) {
        r.warning(w, "not in lexicon");
    }
    r
}

fn missing(a: &MissingArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.lex.lexicon, &a.words.text], a.out.as_slice())?;
    let (lex, _, report) = load_lexicon(&a.lex, ctx)?;
    let words = transcript_words(&a.words, ctx)?;
    let list: String = missing_words(&words, &lex).into_iter().map(|w| w + "\n").collect();
    match &a.out {
        Some(out) => ctx.writer.write(out, list)?,
        None => print!("{list}"),
    }
    let mut reports = Reports::default();
    reports.add(file_label(&a.lex.lexicon), report);
    reports.add(file_label(&a.words.text), missing_report(&words, &lex));
    Ok(reports)
}

pub fn silence_set(flag: Option<String>, ctx: &Ctx) -> Result<BTreeSet<String>> {
    let default = phonprep::ctm_align::default_silence_set().into_iter().collect::<Vec<_>>().join(" ");
    Ok(ctx.config.pick(flag, "silence", default)?.split_whitespace().map(String::from).collect())
}

fn phones(a: &PhonesArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.lex.lexicon], &[&a.out])?;
    let (lex, _, report) = load_lexicon(&a.lex, ctx)?;
    let silence = silence_set(a.silence.clone(), ctx)?;
    let mut speech = Lexicon::new();
    for (w, p) in lex.entries() {
        if !p.phones().iter().any(|ph| silence.contains(ph)) {
            speech.insert(w.clone(), p.clone());
        }
    }
    let groups = derive_nonsilence_phones(&speech);
    let sil = derive_silence_files();
    let out: &Path = &a.out;
    ctx.writer.write(&out.join("nonsilence_phones.txt"), render_phone_groups(&groups))?;
    ctx.writer.write(&out.join("silence_phones.txt"), sil.silence_phones)?;
    ctx.writer.write(&out.join("optional_silence.txt"), sil.optional_silence)?;
    let mut all = report;
    all.extend(stress_report(&lex));
    let mut reports = Reports::default();
    reports.add(file_label(&a.lex.lexicon), all);
    Ok(reports)
}
