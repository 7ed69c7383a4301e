use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use phonprep::textgrid::{merge_interval_tiers, parse_textgrid, write_textgrid, TextGrid};
use phonprep::vot_prep::{
    compare_boundaries, decode_command, find_cv_stop_words, locate_words, make_vot_windows, measure_cues,
    min_vot_violations, parse_locations, prefer_manual, render_locations, render_measurements, render_path_list,
    GridStage, MeasureOptions, Stop, VotMeasurement, WordOccurrence, LIST_TEXTGRIDS, LIST_WAV_FILES, LOCATE_TOLERANCE,
    VOT_TIER,
};
use phonprep::ValidationReport;

use crate::common::{expand_inputs, file_label, input_err, read_bytes, read_text, resolve, run_batch, CliError, Reports, Result};
use crate::lexicon::{load_lexicon, LexiconOpts};
use crate::Ctx;

#[derive(Debug, Subcommand)]
pub enum VotCmd {
    /// Write wordList.txt: words whose pronunciation starts with a stop plus vowel.
    Words(WordsArgs),
    /// Write CVWordLocations.txt: where the listed words occur in aligned grids.
    Locate(LocateArgs),
    /// Add a `vot` window tier to each grid (written as `<stem>_allauto.TextGrid`).
    Windows(WindowsArgs),
    /// Write ListWavFiles.txt / ListTextGrids.txt and print the decoder commands.
    Lists(ListsArgs),
    /// Collapse the per-stop decoder tiers into one (written as `<stem>_stops.TextGrid`).
    Merge(MergeArgs),
    /// Copy manual boundaries onto matching automatic tokens (`<stem>_stacked2.TextGrid`).
    PreferManual(PreferArgs),
    /// Write a measurement table (burst, vocalic onset, VOT, vowel and word durations).
    Measure(MeasureArgs),
    /// Report burst and vowel-onset differences between manual and automatic tiers.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GridInputs {
    /// TextGrid files, directories, or glob patterns.
    #[arg(required = true)]
    pub grids: Vec<String>,
}

#[derive(Debug, Args)]
pub struct WordsArgs {
    #[command(flatten)]
    pub lex: LexiconOpts,
    /// Restrict to words that occur in this transcript text.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TierNames {
    #[arg(long)]
    pub word_tier: Option<String>,
    #[arg(long)]
    pub phone_tier: Option<String>,
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    /// wordList.txt
    #[arg(long)]
    pub words: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub tiers: TierNames,
    /// How far a phone boundary may sit from the word start, in seconds.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WindowsArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    /// CVWordLocations.txt; rows are matched to grids by file stem.
    #[arg(long)]
    pub locations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ListsArgs {
    /// Directory holding the `.wav` files.
    #[arg(long)]
    pub wav_dir: PathBuf,
    /// Directory holding the `_allauto` TextGrids.
    #[arg(long)]
    pub grid_dir: PathBuf,
    /// Directory for the two list files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "models/vot_predictor.amanda.max_num_instances_1000.model")]
    pub model: String,
    #[arg(long)]
    pub vot_tier: Option<String>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    /// 1-based tier positions of the decoder output, e.g. `3-8` or `3,4,5`.
    #[arg(long, default_value = "3-8")]
    pub tiers: String,
    #[arg(long, default_value = "AutoVOT")]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreferArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    #[arg(long)]
    pub manual_tier: String,
    #[arg(long, default_value = "AutoVOT")]
    pub auto_tier: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    #[arg(long)]
    pub vot_tier: Option<String>,
    #[command(flatten)]
    pub tiers: TierNames,
    #[arg(long)]
    pub no_speaking_rate: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: GridInputs,
    #[arg(long)]
    pub manual_tier: String,
    #[arg(long, default_value = "AutoVOT")]
    pub auto_tier: String,
    /// Gap (seconds) still counted as touching when pairing tokens.
    #[arg(long, default_value_t = 0.0)]
    pub pairing_tolerance: f64,
    /// Write a per-token delta table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cmd: &VotCmd, ctx: &mut Ctx) -> Result<Reports> {
    match cmd {
        VotCmd::Words(a) => words(a, ctx),
        VotCmd::Locate(a) => locate(a, ctx),
        VotCmd::Windows(a) => windows(a, ctx),
        VotCmd::Lists(a) => lists(a, ctx),
        VotCmd::Merge(a) => merge(a, ctx),
        VotCmd::PreferManual(a) => prefer(a, ctx),
        VotCmd::Measure(a) => measure(a, ctx),
        VotCmd::Compare(a) => compare(a, ctx),
    }
}

/// File stem with any workflow-stage suffix removed.
pub fn base_stem(path: &Path) -> String {
    let stem = crate::common::stem(path);
    for stage in [GridStage::Stacked2, GridStage::Stacked, GridStage::Stops, GridStage::AllAuto] {
        if let Some(base) = stem.strip_suffix(stage.suffix()) {
            return base.to_string();
        }
    }
    stem
}

pub fn load_grid(path: &Path) -> Result<TextGrid> {
    parse_textgrid(&read_bytes(path)?).map_err(|e| input_err(path)(&e))
}

fn grid_paths(inputs: &GridInputs, reports: &mut Reports) -> Result<Vec<PathBuf>> {
    let paths = expand_inputs(&inputs.grids, &["TextGrid"])?;
    if paths.is_empty() {
        reports.warning("-", "inputs", "no TextGrid files matched");
    }
    Ok(paths)
}

fn word_tier(t: &TierNames, ctx: &Ctx) -> Result<String> {
    ctx.config.pick(t.word_tier.clone(), "word_tier", "words".into())
}

fn phone_tier(t: &TierNames, ctx: &Ctx) -> Result<String> {
    ctx.config.pick(t.phone_tier.clone(), "phone_tier", "phones".into())
}

fn words(a: &WordsArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut inputs = vec![a.lex.lexicon.clone()];
    inputs.extend(a.text.iter().cloned());
    ctx.writer.guard(&inputs, &[&a.out])?;
    let (lex, _, report) = load_lexicon(&a.lex, ctx)?;
    let mut list = find_cv_stop_words(&lex);
    if let Some(text) = &a.text {
        let used: BTreeSet<String> = read_text(text)?.split_whitespace().map(str::to_uppercase).collect();
        list.retain(|w| used.contains(&w.to_uppercase()));
    }
    ctx.writer.write(&a.out, list.iter().map(|w| format!("{w}\n")).collect::<String>())?;
    let mut reports = Reports::default();
    reports.add(file_label(&a.lex.lexicon), report);
    Ok(reports)
}

fn locate(a: &LocateArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut reports = Reports::default();
    let paths = grid_paths(&a.inputs, &mut reports)?;
    let mut inputs = paths.clone();
    inputs.push(a.words.clone());
    ctx.writer.guard(&inputs, &[&a.out])?;
    let wanted: BTreeSet<String> = read_text(&a.words)?.split_whitespace().map(String::from).collect();
    let (wt, pt) = (word_tier(&a.tiers, ctx)?, phone_tier(&a.tiers, ctx)?);
    let tol = ctx.config.pick(a.tolerance, "tolerance", LOCATE_TOLERANCE)?;
    let results = run_batch(&paths, ctx.jobs, |p| {
        let grid = load_grid(p)?;
        locate_words(&grid, &base_stem(p), &wt, &pt, &wanted, tol).map_err(|e| input_err(p)(&e))
    });
    let mut all: Vec<WordOccurrence> = Vec::new();
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok(occs) => all.extend(occs),
            Err(e) => reports.failure(p, "locate", &e),
        }
    }
    ctx.writer.write(&a.out, render_locations(&all))?;
    Ok(reports)
}

fn windows(a: &WindowsArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut reports = Reports::default();
    let paths = grid_paths(&a.inputs, &mut reports)?;
    let mut inputs = paths.clone();
    inputs.push(a.locations.clone());
    ctx.writer.guard(&inputs, &[&a.out])?;
    let occs = parse_locations(&read_text(&a.locations)?).map_err(|e| input_err(&a.locations)(&e))?;
    let mut by_file: BTreeMap<&str, Vec<WordOccurrence>> = BTreeMap::new();
    for o in &occs {
        by_file.entry(o.file_id.as_str()).or_default().push(o.clone());
    }
    let results = run_batch(&paths, ctx.jobs, |p| -> Result<(Vec<u8>, ValidationReport)> {
        let mut grid = load_grid(p)?;
        let mine = by_file.get(base_stem(p).as_str()).map(Vec::as_slice).unwrap_or_default();
        let set = make_vot_windows(mine, grid.xmax).map_err(|e| input_err(p)(&e))?;
        if let Some((i, _)) = grid.find_tier(VOT_TIER) {
            grid.tiers.remove(i);
        }
        grid.push_tier(set.tier.clone());
        let bytes = write_textgrid(&grid).map_err(|e| input_err(p)(&e))?;
        Ok((bytes, set.report()))
    });
    let stems: BTreeSet<String> = paths.iter().map(|p| base_stem(p)).collect();
    for file in by_file.keys().filter(|f| !stems.contains(**f)) {
        reports.warning(file_label(&a.locations), file, "no matching TextGrid among the inputs");
    }
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok((bytes, report)) => {
                ctx.writer.write(&a.out.join(GridStage::AllAuto.file_name(&base_stem(p))), bytes)?;
                reports.add(file_label(p), report);
            }
            Err(e) => reports.failure(p, "windows", &e),
        }
    }
    Ok(reports)
}

fn lists(a: &ListsArgs, ctx: &mut Ctx) -> Result<Reports> {
    ctx.writer.guard(&[&a.wav_dir, &a.grid_dir], &[&a.out])?;
    let mut reports = Reports::default();
    let wavs = expand_inputs(&[a.wav_dir.display().to_string()], &["wav"])?;
    let mut wav_list = Vec::new();
    let mut grid_list = Vec::new();
    for w in &wavs {
        let grid = a.grid_dir.join(GridStage::AllAuto.file_name(&base_stem(w)));
        if grid.is_file() {
            wav_list.push(resolve(w).display().to_string());
            grid_list.push(resolve(&grid).display().to_string());
        } else {
            reports.warning(file_label(w), "lists", format!("no {} found; left out of both lists", grid.display()));
        }
    }
    if wav_list.is_empty() {
        reports.warning(file_label(&a.wav_dir), "lists", "no wav/TextGrid pairs found");
    }
    let wav_path = a.out.join(LIST_WAV_FILES);
    let grid_path = a.out.join(LIST_TEXTGRIDS);
    ctx.writer.write(&wav_path, render_path_list(&wav_list))?;
    ctx.writer.write(&grid_path, render_path_list(&grid_list))?;
    let tier = ctx.config.pick(a.vot_tier.clone(), "vot_tier", VOT_TIER.into())?;
    for stop in Stop::ALL {
        println!(
            "{}",
            decode_command(stop, &tier, &wav_path.display().to_string(), &grid_path.display().to_string(), &a.model)
        );
    }
    Ok(reports)
}

pub fn parse_positions(spec: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad tier list {spec:?}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi): (usize, usize) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
                if lo == 0 || hi < lo {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().ok().filter(|&n| n > 0).ok_or_else(bad)?),
        }
    }
    Ok(out)
}

/// Apply `f` to every grid and write the result under `out` with `stage` naming.
fn transform_grids<F>(inputs: &GridInputs, out: &Path, stage: GridStage, ctx: &mut Ctx, f: F) -> Result<Reports>
where
    F: Fn(&TextGrid) -> std::result::Result<(TextGrid, ValidationReport), String> + Sync + Send,
{
    let mut reports = Reports::default();
    let paths = grid_paths(inputs, &mut reports)?;
    ctx.writer.guard(&paths, &[out])?;
    let results = run_batch(&paths, ctx.jobs, |p| -> Result<(Vec<u8>, ValidationReport)> {
        let grid = load_grid(p)?;
        let (g, r) = f(&grid).map_err(|m| CliError::Input { path: p.clone(), message: m })?;
        Ok((write_textgrid(&g).map_err(|e| input_err(p)(&e))?, r))
    });
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok((bytes, report)) => {
                ctx.writer.write(&out.join(stage.file_name(&base_stem(p))), bytes)?;
                reports.add(file_label(p), report);
            }
            Err(e) => reports.failure(p, "transform", &e),
        }
    }
    Ok(reports)
}

fn merge(a: &MergeArgs, ctx: &mut Ctx) -> Result<Reports> {
    let positions = parse_positions(&a.tiers)?;
    transform_grids(&a.inputs, &a.out, GridStage::Stops, ctx, |g| {
        merge_interval_tiers(g, &positions, &a.name).map(|g| (g, ValidationReport::new())).map_err(|e| e.to_string())
    })
}

fn prefer(a: &PreferArgs, ctx: &mut Ctx) -> Result<Reports> {
    transform_grids(&a.inputs, &a.out, GridStage::Stacked2, ctx, |g| {
        prefer_manual(g, &a.manual_tier, &a.auto_tier).map_err(|e| e.to_string())
    })
}

fn measure(a: &MeasureArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut reports = Reports::default();
    let paths = grid_paths(&a.inputs, &mut reports)?;
    ctx.writer.guard(&paths, &[&a.out])?;
    let vt = ctx.config.pick(a.vot_tier.clone(), "vot_tier", "AutoVOT".into())?;
    let (wt, pt) = (word_tier(&a.tiers, ctx)?, phone_tier(&a.tiers, ctx)?);
    let opts = MeasureOptions { speaking_rate: !a.no_speaking_rate, ..MeasureOptions::default() };
    let results = run_batch(&paths, ctx.jobs, |p| {
        let grid = load_grid(p)?;
        measure_cues(&grid, &base_stem(p), &vt, &pt, &wt, &opts).map_err(|e| input_err(p)(&e))
    });
    let mut rows: Vec<VotMeasurement> = Vec::new();
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok(m) => rows.extend(m),
            Err(e) => reports.failure(p, "measure", &e),
        }
    }
    rows.sort_by(|x, y| x.file_id.cmp(&y.file_id).then(x.burst_onset.total_cmp(&y.burst_onset)));
    reports.add(file_label(&a.out), min_vot_violations(&rows));
    ctx.writer.write(&a.out, render_measurements(&rows))?;
    Ok(reports)
}

const COMPARE_HEADER: &str = "file\tlabel\tmanual_start\tmanual_end\tauto_start\tauto_end\tburst_delta\tvowel_delta";

fn compare(a: &CompareArgs, ctx: &mut Ctx) -> Result<Reports> {
    let mut reports = Reports::default();
    let paths = grid_paths(&a.inputs, &mut reports)?;
    ctx.writer.guard(&paths, a.out.as_slice())?;
    let results = run_batch(&paths, ctx.jobs, |p| -> Result<(String, ValidationReport)> {
        let grid = load_grid(p)?;
        let tier = |name: &str| {
            grid.interval_tier(name)
                .ok_or_else(|| CliError::Input { path: p.clone(), message: format!("no interval tier {name:?}") })
        };
        let (m, au) = (tier(&a.manual_tier)?, tier(&a.auto_tier)?);
        let c = compare_boundaries(m, au, a.pairing_tolerance);
        let mt: Vec<_> = m.labeled().collect();
        let at: Vec<_> = au.labeled().collect();
        let mut rows = String::new();
        for d in &c.pairs {
            let (mi, ai) = (mt[d.manual], at[d.auto]);
            let _ = writeln!(
                rows,
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                base_stem(p),
                d.label,
                mi.xmin,
                mi.xmax,
                ai.xmin,
                ai.xmax,
                d.burst_delta,
                d.vowel_delta
            );
        }
        let mut r = ValidationReport::new();
        for &i in &c.unpaired_manual {
            r.warning(format!("{} token {}", a.manual_tier, i + 1), "no automatic token to pair with");
        }
        for &i in &c.unpaired_auto {
            r.info(format!("{} token {}", a.auto_tier, i + 1), "no manual token to pair with");
        }
        for &(mi, ai) in &c.conflicts {
            r.warning(
                format!("{} token {}", a.manual_tier, mi + 1),
                format!("best match {} token {} already paired", a.auto_tier, ai + 1),
            );
        }
        Ok((rows, r))
    });
    let mut table = format!("{COMPARE_HEADER}\n");
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok((rows, report)) => {
                table.push_str(&rows);
                reports.add(file_label(p), report);
            }
            Err(e) => reports.failure(p, "compare", &e),
        }
    }
    match &a.out {
        Some(out) => ctx.writer.write(out, table)?,
        None => print!("{table}"),
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_suffixes_are_stripped() {
        assert_eq!(base_stem(Path::new("d/s01_allauto.TextGrid")), "s01");
        assert_eq!(base_stem(Path::new("s01_stacked2.TextGrid")), "s01");
        assert_eq!(base_stem(Path::new("s01_stacked.TextGrid")), "s01");
        assert_eq!(base_stem(Path::new("s01.TextGrid")), "s01");
    }

    #[test]
    fn tier_positions() {
        assert_eq!(parse_positions("3-8").unwrap(), vec![3, 4, 5, 6, 7, 8]);
        assert_eq!(parse_positions("1, 3").unwrap(), vec![1, 3]);
        assert!(parse_positions("0-2").is_err());
        assert!(parse_positions("4-2").is_err());
        assert!(parse_positions("x").is_err());
    }
}
