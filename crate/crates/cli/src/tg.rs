use std::path::PathBuf;

use clap::{Args, Subcommand};
use phonprep::textgrid::{diagnose_overlaps, merge_interval_tiers, rename_tier, stack_tiers, write_textgrid, TextGrid};
use phonprep::ValidationReport;

use crate::common::{expand_inputs, file_label, input_err, run_batch, Reports, Result};
use crate::vot::{load_grid, parse_positions};
use crate::Ctx;

#[derive(Debug, Subcommand)]
pub enum TgCmd {
    /// Put the tiers of several grids into one, in the order given.
    Stack(StackArgs),
    /// Rename one tier (1-based position).
    Rename(RenameArgs),
    /// Collapse several interval tiers into one new tier.
    Merge(MergeArgs),
    /// Report overlapping intervals in every interval tier.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct StackArgs {
    #[arg(required = true)]
    pub grids: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenameArgs {
    pub grid: PathBuf,
    #[arg(long)]
    pub tier: usize,
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    pub grid: PathBuf,
    /// 1-based positions, e.g. `3-8` or `1,3`.
    #[arg(long)]
    pub tiers: String,
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// TextGrid files, directories, or globs.
    #[arg(required = true)]
    pub grids: Vec<String>,
}

pub fn run(cmd: &TgCmd, ctx: &mut Ctx) -> Result<Reports> {
    match cmd {
        TgCmd::Stack(a) => {
            ctx.writer.guard(&a.grids, &[&a.out])?;
            let grids = a.grids.iter().map(|p| load_grid(p)).collect::<Result<Vec<TextGrid>>>()?;
            let out = stack_tiers(&grids).map_err(|e| input_err(&a.grids[0])(&e))?;
            write(&out, &a.out, ctx)
        }
        TgCmd::Rename(a) => {
            ctx.writer.guard(&[&a.grid], &[&a.out])?;
            let out = rename_tier(&load_grid(&a.grid)?, a.tier, &a.name).map_err(|e| input_err(&a.grid)(&e))?;
            write(&out, &a.out, ctx)
        }
        TgCmd::Merge(a) => {
            ctx.writer.guard(&[&a.grid], &[&a.out])?;
            let positions = parse_positions(&a.tiers)?;
            let out = merge_interval_tiers(&load_grid(&a.grid)?, &positions, &a.name).map_err(|e| input_err(&a.grid)(&e))?;
            write(&out, &a.out, ctx)
        }
        TgCmd::Diagnose(a) => diagnose(a, ctx),
    }
}

fn write(grid: &TextGrid, out: &std::path::Path, ctx: &mut Ctx) -> Result<Reports> {
    let bytes = write_textgrid(grid).map_err(|e| input_err(out)(&e))?;
    ctx.writer.write(out, bytes)?;
    Ok(Reports::default())
}

fn diagnose(a: &DiagnoseArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut reports = Reports::default();
    let files = expand_inputs(&a.grids, &["TextGrid"])?;
    if files.is_empty() {
        reports.warning("-", "inputs", "no TextGrid files matched");
    }
    ctx.writer.inputs(&files)?;
    let results = run_batch(&files, ctx.jobs, |p| -> Result<ValidationReport> {
        let grid = load_grid(p)?;
        let mut r = ValidationReport::new();
        for tier in grid.interval_tiers() {
            for o in diagnose_overlaps(tier) {
                r.error(
                    format!("tier {:?} intervals {} and {}", tier.name, o.first + 1, o.second + 1),
                    format!("overlap over [{}, {}]", o.start, o.end),
                );
            }
        }
        Ok(r)
    });
    for (p, r) in files.iter().zip(results) {
        match r {
            Ok(report) => reports.add(file_label(p), report),
            Err(e) => reports.failure(p, "read", &e),
        }
    }
    Ok(reports)
}
