use std::path::PathBuf;

use clap::{Args, Subcommand};
use phonprep::audio_check::{extract_channel, parse_wav_header, validate_for_rate, WavInfo, MFA_SAMPLE_RATE};

use crate::common::{expand_inputs, file_label, input_err, read_bytes, run_batch, Reports, Result};
use crate::Ctx;

#[derive(Debug, Subcommand)]
pub enum AudioCmd {
    /// Print rate, channels, bit depth and duration of each file.
    Info(InfoArgs),
    /// Write one channel of a PCM file as a mono WAV.
    Mono(MonoArgs),
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// WAV files, directories, or globs.
    #[arg(required = true)]
    pub files: Vec<String>,
    /// Report files that are not mono at the target rate as errors.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub sample_rate: Option<u32>,
}

#[derive(Debug, Args)]
pub struct MonoArgs {
    pub input: PathBuf,
    /// 1-based channel number.
    #[arg(long, default_value_t = 1)]
    pub channel: u16,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cmd: &AudioCmd, ctx: &mut Ctx) -> Result<Reports> {
    match cmd {
        AudioCmd::Info(a) => info(a, ctx),
        AudioCmd::Mono(a) => mono(a, ctx),
    }
}

fn info(a: &InfoArgs, ctx: &mut Ctx) -> Result<Reports> {
    let rate = ctx.config.pick(a.sample_rate, "sample_rate", MFA_SAMPLE_RATE)?;
    let mut reports = Reports::default();
    let files = expand_inputs(&a.files, &["wav"])?;
    if files.is_empty() {
        reports.warning("-", "inputs", "no .wav files matched");
    }
    ctx.writer.inputs(&files)?;
    let results = run_batch(&files, ctx.jobs, |p| -> Result<WavInfo> {
        parse_wav_header(&read_bytes(p)?).map_err(|e| input_err(p)(&e))
    });
    println!("file\tsample_rate\tchannels\tbits\tduration");
    for (p, r) in files.iter().zip(results) {
        match r {
            Ok(info) => {
                println!("{}\t{}\t{}\t{}\t{:.6}", p.display(), info.sample_rate, info.channels, info.bits_per_sample, info.duration());
                if a.check {
                    reports.add(file_label(p), validate_for_rate(&info, rate));
                }
            }
            Err(e) => reports.failure(p, "header", &e),
        }
    }
    Ok(reports)
}

fn mono(a: &MonoArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.input], &[&a.out])?;
    let bytes = read_bytes(&a.input)?;
    let out = extract_channel(&bytes, a.channel).map_err(|e| input_err(&a.input)(&e))?;
    ctx.writer.write(&a.out, out)?;
    Ok(Reports::default())
}
