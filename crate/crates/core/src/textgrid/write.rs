use std::fmt::Write as _;

use super::{Result, TextGrid, TextGridError, Tier};

/// Serialize in Praat's long text format (UTF-8, no BOM).
///
/// Interval tiers are normalized first, so gaps come out as empty
/// intervals. A grid with overlapping intervals is refused.
pub fn write_textgrid(grid: &TextGrid) -> Result<Vec<u8>> {
    let grid = grid.normalized()?;
    for tier in grid.interval_tiers() {
        // six-decimal rendering must not collapse an interval
        if let Some(iv) = tier.intervals.iter().find(|iv| time(iv.xmin) == time(iv.xmax)) {
            return Err(TextGridError::ZeroLengthInterval { tier: tier.name.clone(), at: iv.xmin });
        }
    }

    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    let _ = writeln!(out, "xmin = {} ", time(grid.xmin));
    let _ = writeln!(out, "xmax = {} ", time(grid.xmax));
    if grid.tiers.is_empty() {
        out.push_str("tiers? <absent> \n");
        return Ok(out.into_bytes());
    }
    out.push_str("tiers? <exists> \n");
    let _ = writeln!(out, "size = {} ", grid.tiers.len());
    out.push_str("item []: \n");
    for (i, tier) in grid.tiers.iter().enumerate() {
        let _ = writeln!(out, "    item [{}]:", i + 1);
        match tier {
            Tier::Interval(t) => {
                out.push_str("        class = \"IntervalTier\" \n");
                let _ = writeln!(out, "        name = {} ", quote(&t.name));
                let _ = writeln!(out, "        xmin = {} ", time(t.xmin));
                let _ = writeln!(out, "        xmax = {} ", time(t.xmax));
                let _ = writeln!(out, "        intervals: size = {} ", t.intervals.len());
                for (j, iv) in t.intervals.iter().enumerate() {
                    let _ = writeln!(out, "        intervals [{}]:", j + 1);
                    let _ = writeln!(out, "            xmin = {} ", time(iv.xmin));
                    let _ = writeln!(out, "            xmax = {} ", time(iv.xmax));
                    let _ = writeln!(out, "            text = {} ", quote(&iv.text));
                }
            }
            Tier::Point(t) => {
                out.push_str("        class = \"TextTier\" \n");
                let _ = writeln!(out, "        name = {} ", quote(&t.name));
                let _ = writeln!(out, "        xmin = {} ", time(t.xmin));
                let _ = writeln!(out, "        xmax = {} ", time(t.xmax));
                let _ = writeln!(out, "        points: size = {} ", t.points.len());
                for (j, p) in t.points.iter().enumerate() {
                    let _ = writeln!(out, "        points [{}]:", j + 1);
                    let _ = writeln!(out, "            number = {} ", time(p.time));
                    let _ = writeln!(out, "            mark = {} ", quote(&p.mark));
                }
            }
        }
    }
    Ok(out.into_bytes())
}

fn time(t: f64) -> String {
    // `+ 0.0` turns -0.0 into 0.0
    format!("{:.6}", t + 0.0)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
