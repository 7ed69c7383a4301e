use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use phonprep::audio_check::parse_wav_header;
use phonprep::ctm_align::{
    align_file, parse_ctm, render_alignment_table, resolve_phone_ids, split_by_file, to_file_times, AlignmentContext,
    CtmPhone, GroupingDefect, PhoneSymbolTable,
};
use phonprep::kaldi_data::{parse_segments, parse_text};
use phonprep::textgrid::write_textgrid;
use phonprep::ValidationReport;

use crate::common::{file_label, input_err, read_bytes, read_text, run_batch, CliError, Reports, Result};
use crate::lexicon::{load_lexicon, silence_set, LexiconOpts};
use crate::Ctx;

/// Convert a phone-level CTM into one TextGrid (phones + words tiers) per recording.
#[derive(Debug, Args)]
pub struct Ctm2TgArgs {
    #[arg(long)]
    pub ctm: PathBuf,
    /// Kaldi `segments` file mapping utterances to recordings.
    #[arg(long)]
    pub segments: PathBuf,
    /// `phones.txt` symbol table; needed when the CTM holds integer phone IDs.
    #[arg(long)]
    pub phones: Option<PathBuf>,
    #[command(flatten)]
    pub lex: LexiconOpts,
    /// Output directory for `<file_id>.TextGrid`.
    #[arg(long)]
    pub out: PathBuf,
    /// Data-dir `text`; when given, word identities are checked against it.
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Directory with `<file_id>.wav`; its durations set each grid's xmax.
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,
    /// Also write the intermediate per-phone table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Silence symbols (space-separated).
    #[arg(long)]
    pub silence: Option<String>,
}

pub fn run(a: &Ctm2TgArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut inputs = vec![a.ctm.clone(), a.segments.clone(), a.lex.lexicon.clone()];
    inputs.extend(a.phones.iter().cloned());
    inputs.extend(a.text.iter().cloned());
    inputs.extend(a.wav_dir.iter().cloned());
    let mut outputs = vec![a.out.clone()];
    outputs.extend(a.table.iter().cloned());
    ctx.writer.guard(&inputs, &outputs)?;

    let mut entries = parse_ctm(&read_text(&a.ctm)?).map_err(|e| input_err(&a.ctm)(&e))?;
    let table = match &a.phones {
        Some(p) => Some(PhoneSymbolTable::parse(&read_text(p)?).map_err(|e| input_err(p)(&e))?),
        None => None,
    };
    match &table {
        Some(t) => entries = resolve_phone_ids(&entries, t).map_err(|e| input_err(&a.ctm)(&e))?,
        None if entries.iter().any(|e| matches!(e.phone, CtmPhone::Id(_))) => {
            return Err(CliError::Usage("the CTM uses integer phone IDs; pass --phones phones.txt".into()))
        }
        None => {}
    }
    let segments = parse_segments(&read_text(&a.segments)?).map_err(|e| input_err(&a.segments)(&e))?;
    let (lexicon, _, lex_report) = load_lexicon(&a.lex, ctx)?;
    let reference = match &a.text {
        Some(p) => Some(
            parse_text(&read_text(p)?)
                .map_err(|e| input_err(p)(&e))?
                .into_iter()
                .map(|l| (l.utt, l.words))
                .collect::<BTreeMap<_, _>>(),
        ),
        None => None,
    };
    let silence = silence_set(a.silence.clone(), ctx)?;

    let tokens = to_file_times(&entries, &segments).map_err(|e| input_err(&a.ctm)(&e))?;
    let by_file: Vec<_> = split_by_file(&tokens).into_iter().collect();

    let mut reports = Reports::default();
    reports.add(file_label(&a.lex.lexicon), lex_report);
    let mut durations = BTreeMap::new();
    if let Some(dir) = &a.wav_dir {
        for (file_id, _) in &by_file {
            let path = dir.join(format!("{file_id}.wav"));
            match read_bytes(&path).and_then(|b| parse_wav_header(&b).map_err(|e| input_err(&path)(&e))) {
                Ok(info) => {
                    durations.insert(file_id.clone(), info.duration());
                }
                Err(e) => reports.warning(file_label(&path), "duration", format!("{e}; using the last segment end")),
            }
        }
    }

    let actx = AlignmentContext {
        segments: &segments,
        lexicon: &lexicon,
        reference: reference.as_ref(),
        durations: &durations,
        silence: &silence,
    };
    let results = run_batch(&by_file, ctx.jobs, |(file_id, toks)| {
        align_file(file_id, toks, &actx).and_then(|fa| Ok((write_textgrid(&fa.grid)?, fa)))
    });

    if let Some(path) = &a.table {
        ctx.writer.write(path, render_alignment_table(&tokens, table.as_ref()))?;
    }
    for ((file_id, _), result) in by_file.iter().zip(results) {
        let out = a.out.join(format!("{file_id}.TextGrid"));
        match result {
            Ok((bytes, fa)) => {
                ctx.writer.write(&out, bytes)?;
                let mut r = ValidationReport::new();
                for d in &fa.defects {
                    let (loc, msg) = match d {
                        GroupingDefect::OrphanedPosition { index, phone } => (index, format!("{phone} continues no open word")),
                        GroupingDefect::UnterminatedWord { index, phone } => (index, format!("word interrupted by {phone}")),
                        GroupingDefect::Unpositioned { index, phone } => (index, format!("{phone} has no position suffix")),
                    };
                    r.warning(format!("token {}", loc + 1), msg);
                }
                reports.add(file_id.clone(), r);
            }
            Err(e) => reports.error(file_id.clone(), "align", e.to_string()),
        }
    }
    Ok(reports)
}
