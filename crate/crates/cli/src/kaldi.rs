use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use phonprep::kaldi_data::{
    build_from_records, derive_utt2spk, fix_data_dir, validate_data_dir, write_mfcc_conf, AudioSource, DataDirFiles,
    KaldiDataDir, SpeakerRule, UttId, UttRecord,
};
use phonprep::ValidationReport;

use crate::common::{expand_inputs, file_label, input_err, read_text, run_batch, CliError, Reports, Result};
use crate::Ctx;

#[derive(Debug, Subcommand)]
pub enum KaldiCmd {
    /// Build a data directory from a tab-separated utterance table
    /// (utt_id, file_id, start, end, audio, transcript).
    Build(BuildArgs),
    /// Check data directories for sorting and cross-file consistency.
    Validate(ValidateArgs),
    /// Write a repaired copy of a data directory.
    Fix(FixArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `field:<delim>:<n>` (1-based), `prefix:<n>`, or `table:<path>` (utt speaker per line).
    #[arg(long, default_value = "field:_:1")]
    pub speaker_rule: String,
    /// Also write `conf/mfcc.conf` for this rate.
    #[arg(long)]
    pub sample_rate: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Data directories (or glob patterns).
    #[arg(required = true)]
    pub dirs: Vec<String>,
    /// Warn when a speaker ID is not a prefix of its utterance IDs.
    #[arg(long)]
    pub strict_speaker_prefix: bool,
}

#[derive(Debug, Args)]
pub struct FixArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cmd: &KaldiCmd, ctx: &mut Ctx) -> Result<Reports> {
    match cmd {
        KaldiCmd::Build(a) => build(a, ctx),
        KaldiCmd::Validate(a) => validate(a, ctx),
        KaldiCmd::Fix(a) => fix(a, ctx),
    }
}

pub fn read_data_dir(dir: &Path) -> Result<KaldiDataDir> {
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        if p.exists() {
            read_text(&p)
        } else {
            Ok(String::new())
        }
    };
    let files = DataDirFiles {
        text: read("text")?,
        segments: read("segments")?,
        wav_scp: read("wav.scp")?,
        utt2spk: read("utt2spk")?,
        spk2utt: read("spk2utt")?,
    };
    KaldiDataDir::parse(&files).map_err(|e| input_err(dir)(&e))
}

fn write_data_dir(dir: &KaldiDataDir, out: &Path, ctx: &mut Ctx) -> Result<()> {
    let files = dir.render();
    for (name, content) in files.entries() {
        ctx.writer.write(&out.join(name), content)?;
    }
    Ok(())
}

fn parse_speaker_rule(spec: &str) -> Result<SpeakerRule> {
    let bad = || CliError::Usage(format!("bad --speaker-rule {spec:?}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "field" => {
            let (delim, n) = rest.rsplit_once(':').ok_or_else(bad)?;
            let n: usize = n.parse().map_err(|_| bad())?;
            if delim.is_empty() || n == 0 {
                return Err(bad());
            }
            Ok(SpeakerRule::FieldBeforeDelimiter { delimiter: delim.to_string(), field: n })
        }
        "prefix" => Ok(SpeakerRule::FixedPrefixLength(rest.parse().map_err(|_| bad())?)),
        "table" => {
            let path = Path::new(rest);
            let mut table = BTreeMap::new();
            for line in read_text(path)?.lines().filter(|l| !l.trim().is_empty()) {
                let mut f = line.split_whitespace();
                match (f.next(), f.next()) {
                    (Some(u), Some(s)) => {
                        table.insert(UttId::new(u).map_err(|e| input_err(path)(&e))?, s.to_string());
                    }
                    _ => return Err(CliError::Input { path: path.into(), message: format!("bad line {line:?}") }),
                }
            }
            Ok(SpeakerRule::ExplicitTable(table))
        }
        _ => Err(bad()),
    }
}

fn build(a: &BuildArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.records], &[&a.out])?;
    let rule = parse_speaker_rule(&a.speaker_rule)?;
    let content = read_text(&a.records)?;
    let err = |line: usize, m: String| CliError::Input { path: a.records.clone(), message: format!("line {line}: {m}") };
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(err(i + 1, format!("expected 6 tab-separated fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(i + 1, format!("bad time {s:?}")));
        let utt = UttId::new(f[0].trim()).map_err(|e| err(i + 1, e.to_string()))?;
        rows.push((utt, f[1].trim().to_string(), num(f[2])?, num(f[3])?, AudioSource::parse(f[4]), f[5]));
    }
    let utts: Vec<UttId> = rows.iter().map(|r| r.0.clone()).collect();
    let assignment = derive_utt2spk(&utts, &rule).map_err(|e| input_err(&a.records)(&e))?;
    let records: Vec<UttRecord> = rows
        .into_iter()
        .map(|(utt, file_id, start, end, audio, text)| UttRecord {
            speaker: assignment.utt2spk[&utt].clone(),
            words: text.split_whitespace().map(String::from).collect(),
            utt,
            file_id,
            start,
            end,
            audio,
        })
        .collect();
    let dir = build_from_records(&records).map_err(|e| input_err(&a.records)(&e))?;
    write_data_dir(&dir, &a.out, ctx)?;
    if let Some(rate) = a.sample_rate {
        let conf = write_mfcc_conf(rate).map_err(|e| CliError::Usage(e.to_string()))?;
        ctx.writer.write(&a.out.join("conf").join("mfcc.conf"), conf)?;
    }
    let mut reports = Reports::default();
    reports.add(file_label(&a.records), assignment.warnings);
    reports.add(file_label(&a.out), validate_data_dir(&dir, false));
    Ok(reports)
}

fn validate(a: &ValidateArgs, ctx: &mut Ctx) -> Result<Reports> {
    let dirs = expand_dirs(&a.dirs)?;
    let mut reports = Reports::default();
    if dirs.is_empty() {
        reports.warning("-", "inputs", "no data directories matched");
    }
    ctx.writer.inputs(&dirs)?;
    let strict = a.strict_speaker_prefix;
    let results = run_batch(&dirs, ctx.jobs, |d| read_data_dir(d).map(|dir| validate_data_dir(&dir, strict)));
    for (d, r) in dirs.iter().zip(results) {
        match r {
            Ok(report) => reports.add(file_label(d), report),
            Err(e) => reports.failure(d, "read", &e),
        }
    }
    Ok(reports)
}

fn expand_dirs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        if Path::new(p).is_dir() {
            out.push(PathBuf::from(p));
        } else if p.contains(['*', '?', '[']) {
            let paths = glob::glob(p).map_err(|e| CliError::Usage(format!("bad pattern {p:?}: {e}")))?;
            out.extend(paths.filter_map(std::result::Result::ok).filter(|p| p.is_dir()));
        } else {
            out.extend(expand_inputs(&[p.clone()], &[])?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn fix(a: &FixArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.dir], &[&a.out])?;
    let dir = read_data_dir(&a.dir)?;
    let (fixed, log) = fix_data_dir(&dir).map_err(|e| input_err(&a.dir)(&e))?;
    write_data_dir(&fixed, &a.out, ctx)?;
    let mut r = ValidationReport::new();
    for d in &log.dropped {
        r.info(d.file, format!("dropped {:?}: {}", d.line, d.reason));
    }
    let mut reports = Reports::default();
    reports.add(file_label(&a.dir), r);
    reports.add(file_label(&a.out), validate_data_dir(&fixed, false));
    Ok(reports)
}
