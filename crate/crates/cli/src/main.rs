//! `phonprep`: corpus preparation and checking for forced alignment and
//! VOT measurement workflows.

mod audio;
mod checks;
mod common;
mod ctm;
mod kaldi;
mod lexicon;
mod tg;
mod vot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{CliError, Config, Reports, Writer};

#[derive(Debug, Parser)]
#[command(name = "phonprep", version, about = "Prepare and check corpora for forced alignment and VOT measurement")]
struct Cli {
    /// Also write findings as `SEVERITY<TAB>file<TAB>location<TAB>message` lines.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for multi-file runs.
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    /// List the files that would be written without writing them.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kaldi data directories.
    #[command(subcommand)]
    KaldiPrep(kaldi::KaldiCmd),
    /// Pronouncing dictionaries.
    #[command(subcommand)]
    Lexicon(lexicon::LexiconCmd),
    Ctm2tg(ctm::Ctm2TgArgs),
    ValidateMfa(checks::ValidateMfaArgs),
    /// FAVE-align transcripts.
    #[command(subcommand)]
    Fave(checks::FaveCmd),
    /// WAV headers and channel extraction.
    #[command(subcommand)]
    Audio(audio::AudioCmd),
    /// AutoVOT preparation and post-processing.
    #[command(subcommand)]
    Vot(vot::VotCmd),
    /// TextGrid tier operations.
    #[command(subcommand)]
    Tg(tg::TgCmd),
}

pub struct Ctx {
    pub config: Config,
    pub jobs: usize,
    pub writer: Writer,
}

fn dispatch(cli: &Cli) -> common::Result<(Reports, Writer)> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let jobs = config.pick(cli.jobs, "jobs", 1)?;
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mut ctx = Ctx { config, jobs, writer: Writer::new(cli.dry_run) };
    if let Some(report) = &cli.report {
        ctx.writer.reserve(report);
    }
    let reports = match &cli.command {
        Command::KaldiPrep(c) => kaldi::run(c, &mut ctx),
        Command::Lexicon(c) => lexicon::run(c, &mut ctx),
        Command::Ctm2tg(a) => ctm::run(a, &mut ctx),
        Command::ValidateMfa(a) => checks::validate_mfa(a, &mut ctx),
        Command::Fave(c) => checks::fave(c, &mut ctx),
        Command::Audio(c) => audio::run(c, &mut ctx),
        Command::Vot(c) => vot::run(c, &mut ctx),
        Command::Tg(c) => tg::run(c, &mut ctx),
    }?;
    Ok((reports, ctx.writer))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok((reports, mut writer)) => {
            eprint!("{}", reports.to_human());
            if let Some(path) = &cli.report {
                // the report must not land inside an input directory either
                if let Err(e) = writer.write(path, reports.to_machine()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if reports.has_errors() { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(2)
        }
    }
}
