use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use phonprep::audio_check::{parse_wav_header, validate_for_rate, MFA_SAMPLE_RATE};
use phonprep::transcripts::{parse_fave_transcript, validate_fave, validate_mfa_textgrid, validate_single_line_transcript, MfaCheckConfig};
use phonprep::ValidationReport;

use crate::common::{expand_inputs, file_label, input_err, read_bytes, read_text, run_batch, CliError, Reports, Result};
use crate::lexicon::{load_lexicon, LexiconOpts};
use crate::vot::load_grid;
use crate::Ctx;

/// Check wav + transcript pairs against the aligner's input requirements.
#[derive(Debug, Args)]
pub struct ValidateMfaArgs {
    #[arg(long, requires = "textgrid", conflicts_with = "corpus")]
    pub wav: Option<PathBuf>,
    #[arg(long, requires = "wav")]
    pub textgrid: Option<PathBuf>,
    /// Corpus directories or globs: every `.wav` is paired with a
    /// same-stem `.TextGrid`, `.lab` or `.txt`.
    #[arg(long, num_args = 1.., required_unless_present = "wav")]
    pub corpus: Vec<String>,
    #[arg(long)]
    pub min_end_margin: Option<f64>,
    #[arg(long)]
    pub recommended_end_margin: Option<f64>,
    /// Warn when two text intervals touch with no empty interval between them.
    #[arg(long)]
    pub require_separator_intervals: bool,
    #[arg(long)]
    pub sample_rate: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum FaveCmd {
    /// Check tab-delimited five-column transcripts.
    Check(FaveCheckArgs),
}

#[derive(Debug, Args)]
pub struct FaveCheckArgs {
    /// Transcript files, directories (`.txt`), or globs.
    #[arg(required = true)]
    pub transcripts: Vec<String>,
    /// Directory holding `<stem>.wav` for each transcript.
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,
    /// Pronouncing dictionary for the per-phone time budget check.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub separator: Option<String>,
}

pub fn validate_mfa(a: &ValidateMfaArgs, ctx: &mut Ctx) -> Result<Reports> {
    let cfg = MfaCheckConfig::new(
        ctx.config.pick(a.min_end_margin, "min_end_margin", MfaCheckConfig::default().min_end_margin)?,
        ctx.config.pick(a.recommended_end_margin, "recommended_end_margin", MfaCheckConfig::default().recommended_end_margin)?,
        a.require_separator_intervals || ctx.config.get("require_separator_intervals")?.unwrap_or(false),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let rate = ctx.config.pick(a.sample_rate, "sample_rate", MFA_SAMPLE_RATE)?;

    let mut reports = Reports::default();
    let pairs: Vec<(PathBuf, Option<PathBuf>)> = match (&a.wav, &a.textgrid) {
        (Some(w), Some(t)) => vec![(w.clone(), Some(t.clone()))],
        _ => {
            let wavs = expand_inputs(&a.corpus, &["wav"])?;
            if wavs.is_empty() {
                reports.warning("-", "inputs", "no .wav files matched");
            }
            wavs.into_iter().map(|w| { let t = transcript_for(&w); (w, t) }).collect()
        }
    };
    ctx.writer.inputs(&pairs.iter().flat_map(|(w, t)| std::iter::once(w).chain(t)).collect::<Vec<_>>())?;
    let results = run_batch(&pairs, ctx.jobs, |(wav, transcript)| check_pair(wav, transcript.as_deref(), rate, &cfg));
    for ((wav, _), r) in pairs.iter().zip(results) {
        match r {
            Ok(report) => reports.add(file_label(wav), report),
            Err(e) => reports.failure(wav, "read", &e),
        }
    }
    Ok(reports)
}

fn transcript_for(wav: &Path) -> Option<PathBuf> {
    ["TextGrid", "lab", "txt"].iter().map(|ext| wav.with_extension(ext)).find(|p| p.is_file())
}

fn check_pair(wav: &Path, transcript: Option<&Path>, rate: u32, cfg: &MfaCheckConfig) -> Result<ValidationReport> {
    let info = parse_wav_header(&read_bytes(wav)?).map_err(|e| input_err(wav)(&e))?;
    let mut report = validate_for_rate(&info, rate);
    match transcript {
        None => report.error("transcript", "no .TextGrid, .lab or .txt with the same name"),
        Some(t) if t.extension().is_some_and(|e| e == "TextGrid") => {
            report.extend(validate_mfa_textgrid(&load_grid(t)?, info.duration(), cfg));
        }
        Some(t) => report.extend(validate_single_line_transcript(&read_text(t)?)),
    }
    Ok(report)
}

pub fn fave(cmd: &FaveCmd, ctx: &mut Ctx) -> Result<Reports> {
    let FaveCmd::Check(a) = cmd;
    let lexicon = match &a.lexicon {
        Some(path) => {
            let opts = LexiconOpts { lexicon: path.clone(), separator: a.separator.clone() };
            Some(load_lexicon(&opts, ctx)?.0)
        }
        None => None,
    };
    let mut reports = Reports::default();
    let files = expand_inputs(&a.transcripts, &["txt"])?;
    if files.is_empty() {
        reports.warning("-", "inputs", "no transcripts matched");
    }
    let mut inputs = files.clone();
    inputs.extend(a.wav_dir.iter().cloned());
    inputs.extend(a.lexicon.iter().cloned());
    ctx.writer.inputs(&inputs)?;
    let results = run_batch(&files, ctx.jobs, |path| -> Result<ValidationReport> {
        let records = parse_fave_transcript(&read_text(path)?).map_err(|e| input_err(path)(&e))?;
        let duration = match &a.wav_dir {
            Some(dir) => {
                let wav = dir.join(format!("{}.wav", crate::common::stem(path)));
                Some(parse_wav_header(&read_bytes(&wav)?).map_err(|e| input_err(&wav)(&e))?.duration())
            }
            None => None,
        };
        Ok(validate_fave(&records, duration, lexicon.as_ref()))
    });
    for (p, r) in files.iter().zip(results) {
        match r {
            Ok(report) => reports.add(file_label(p), report),
            Err(e) => reports.failure(p, "read", &e),
        }
    }
    Ok(reports)
}
