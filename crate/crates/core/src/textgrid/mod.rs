//! Praat TextGrid annotations (long text format).
//!
//! Interval tiers are the working representation for every alignment
//! procedure in this crate. Point tiers are carried through parse/write
//! untouched so user files survive a round trip, but none of the tier
//! operations look inside them.
//!
//! A tier is *normalized* when its intervals are sorted, contiguous, and
//! span exactly the tier bounds. Gaps are filled with empty-text intervals
//! by [`IntervalTier::normalized`]; overlaps are structural defects and are
//! reported, never repaired.

mod parse;
mod write;

use thiserror::Error;

pub use parse::parse_textgrid;
pub use write::write_textgrid;

/// Two times closer than this are treated as the same boundary.
pub const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextGridError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported TextGrid format: {0} (only the long text format is supported)")]
    UnsupportedFormat(&'static str),
    #[error("interval {index} of tier {tier:?} ends before it starts ({xmin} > {xmax})")]
    NonMonotonicInterval { tier: String, index: usize, xmin: f64, xmax: f64 },
    #[error("zero-length interval at {at} in tier {tier:?}")]
    ZeroLengthInterval { tier: String, at: f64 },
    #[error("{context}: declared size {declared} but found {found}")]
    TierCountMismatch { context: String, declared: usize, found: usize },
    #[error("encoding error: {0}")]
    EncodingError(String),
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("tier {tier:?} has overlapping intervals {first} and {second} over [{start}, {end}]")]
    Overlap { tier: String, first: usize, second: usize, start: f64, end: f64 },
    #[error("tier {tier:?} extends outside [{xmin}, {xmax}]")]
    OutOfBounds { tier: String, xmin: f64, xmax: f64 },
    #[error("tier index {index} out of range (grid has {count} tiers)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("tier {index} is not an interval tier")]
    NotIntervalTier { index: usize },
    #[error("invalid merge: {0}")]
    InvalidMerge(String),
    #[error("merge conflict: tier {first_tier} and tier {second_tier} overlap over [{start}, {end}]")]
    MergeConflict { first_tier: usize, second_tier: usize, start: f64, end: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, TextGridError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub xmin: f64,
    pub xmax: f64,
    pub text: String,
}

impl Interval {
    /// Zero-length and reversed intervals are rejected.
    pub fn new(xmin: f64, xmax: f64, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if !(xmin.is_finite() && xmax.is_finite()) || xmax < xmin {
            return Err(TextGridError::NonMonotonicInterval { tier: String::new(), index: 0, xmin, xmax });
        }
        if xmax == xmin {
            return Err(TextGridError::ZeroLengthInterval { tier: String::new(), at: xmin });
        }
        Ok(Self { xmin, xmax, text })
    }

    pub fn duration(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }

    pub fn overlap_with(&self, other: &Interval) -> f64 {
        self.xmax.min(other.xmax) - self.xmin.max(other.xmin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTier {
    pub name: String,
    pub xmin: f64,
    pub xmax: f64,
    pub intervals: Vec<Interval>,
}

/// A detected overlap between two intervals of one tier.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    /// Indices into the tier's interval list, in the order given.
    pub first: usize,
    pub second: usize,
    pub start: f64,
    pub end: f64,
}

impl IntervalTier {
    pub fn new(name: impl Into<String>, xmin: f64, xmax: f64) -> Self {
        Self { name: name.into(), xmin, xmax, intervals: Vec::new() }
    }

    pub fn with_intervals(name: impl Into<String>, xmin: f64, xmax: f64, intervals: Vec<Interval>) -> Self {
        Self { name: name.into(), xmin, xmax, intervals }
    }

    /// Non-blank intervals, in stored order.
    pub fn labeled(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|iv| !iv.is_blank())
    }

    /// Sorted, gap-filled copy spanning exactly `[xmin, xmax]`.
    pub fn normalized(&self) -> Result<IntervalTier> {
        if let Some(o) = diagnose_overlaps(self).first() {
            return Err(TextGridError::Overlap {
                tier: self.name.clone(),
                first: o.first,
                second: o.second,
                start: o.start,
                end: o.end,
            });
        }
        let mut sorted = self.intervals.clone();
        sorted.sort_by(|a, b| a.xmin.total_cmp(&b.xmin));

        let out_of_bounds = || TextGridError::OutOfBounds { tier: self.name.clone(), xmin: self.xmin, xmax: self.xmax };
        let mut out = Vec::with_capacity(sorted.len() * 2 + 1);
        let mut cursor = self.xmin;
        for mut iv in sorted {
            if iv.xmin < self.xmin - TIME_EPS {
                return Err(out_of_bounds());
            }
            if iv.xmin > cursor + TIME_EPS {
                out.push(Interval { xmin: cursor, xmax: iv.xmin, text: String::new() });
            } else {
                iv.xmin = cursor;
            }
            if iv.xmax <= iv.xmin {
                return Err(TextGridError::ZeroLengthInterval { tier: self.name.clone(), at: iv.xmin });
            }
            cursor = iv.xmax;
            out.push(iv);
        }
        if cursor > self.xmax + TIME_EPS {
            return Err(out_of_bounds());
        }
        if cursor < self.xmax - TIME_EPS || out.is_empty() {
            if self.xmax <= cursor {
                return Err(TextGridError::ZeroLengthInterval { tier: self.name.clone(), at: cursor });
            }
            out.push(Interval { xmin: cursor, xmax: self.xmax, text: String::new() });
        } else if let Some(last) = out.last_mut() {
            last.xmax = self.xmax;
        }
        Ok(IntervalTier { name: self.name.clone(), xmin: self.xmin, xmax: self.xmax, intervals: out })
    }

    /// Widen the tier bounds; normalization later fills the new space.
    pub fn extend_to(&mut self, xmin: f64, xmax: f64) {
        self.xmin = self.xmin.min(xmin);
        self.xmax = self.xmax.max(xmax);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub time: f64,
    pub mark: String,
}

/// A point tier (Praat `TextTier`), kept only so it survives a round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTier {
    pub name: String,
    pub xmin: f64,
    pub xmax: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tier {
    Interval(IntervalTier),
    Point(PointTier),
}

impl Tier {
    pub fn name(&self) -> &str {
        match self {
            Tier::Interval(t) => &t.name,
            Tier::Point(t) => &t.name,
        }
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        match self {
            Tier::Interval(t) => t.name = name.into(),
            Tier::Point(t) => t.name = name.into(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Tier::Interval(t) => (t.xmin, t.xmax),
            Tier::Point(t) => (t.xmin, t.xmax),
        }
    }

    pub fn as_interval(&self) -> Option<&IntervalTier> {
        match self {
            Tier::Interval(t) => Some(t),
            Tier::Point(_) => None,
        }
    }

    pub fn as_interval_mut(&mut self) -> Option<&mut IntervalTier> {
        match self {
            Tier::Interval(t) => Some(t),
            Tier::Point(_) => None,
        }
    }

    fn extend_to(&mut self, xmin: f64, xmax: f64) {
        match self {
            Tier::Interval(t) => t.extend_to(xmin, xmax),
            Tier::Point(t) => {
                t.xmin = t.xmin.min(xmin);
                t.xmax = t.xmax.max(xmax);
            }
        }
    }
}

impl From<IntervalTier> for Tier {
    fn from(t: IntervalTier) -> Self {
        Tier::Interval(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextGrid {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<Tier>,
}

impl TextGrid {
    pub fn new(xmin: f64, xmax: f64) -> Self {
        Self { xmin, xmax, tiers: Vec::new() }
    }

    pub fn with_tiers(xmin: f64, xmax: f64, tiers: Vec<Tier>) -> Self {
        Self { xmin, xmax, tiers }
    }

    pub fn push_tier(&mut self, tier: impl Into<Tier>) {
        self.tiers.push(tier.into());
    }

    /// First tier with this name, plus how many tiers share it.
    pub fn find_tier(&self, name: &str) -> Option<(usize, usize)> {
        let mut matches = self.tiers.iter().enumerate().filter(|(_, t)| t.name() == name);
        let (first, _) = matches.next()?;
        Some((first, 1 + matches.count()))
    }

    pub fn interval_tier(&self, name: &str) -> Option<&IntervalTier> {
        self.tiers.iter().filter_map(Tier::as_interval).find(|t| t.name == name)
    }

    pub fn interval_tiers(&self) -> impl Iterator<Item = &IntervalTier> {
        self.tiers.iter().filter_map(Tier::as_interval)
    }

    /// Normalize every interval tier and check tier bounds against the grid.
    pub fn normalized(&self) -> Result<TextGrid> {
        let mut tiers = Vec::with_capacity(self.tiers.len());
        for tier in &self.tiers {
            let (lo, hi) = tier.bounds();
            if lo < self.xmin - TIME_EPS || hi > self.xmax + TIME_EPS {
                return Err(TextGridError::OutOfBounds { tier: tier.name().to_string(), xmin: self.xmin, xmax: self.xmax });
            }
            tiers.push(match tier {
                Tier::Interval(t) => Tier::Interval(t.normalized()?),
                Tier::Point(t) => Tier::Point(t.clone()),
            });
        }
        Ok(TextGrid { xmin: self.xmin, xmax: self.xmax, tiers })
    }

    /// Structural equality with times compared to within `tol` seconds.
    pub fn approx_eq(&self, other: &TextGrid, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        close(self.xmin, other.xmin)
            && close(self.xmax, other.xmax)
            && self.tiers.len() == other.tiers.len()
            && self.tiers.iter().zip(&other.tiers).all(|pair| match pair {
                (Tier::Interval(a), Tier::Interval(b)) => {
                    a.name == b.name
                        && close(a.xmin, b.xmin)
                        && close(a.xmax, b.xmax)
                        && a.intervals.len() == b.intervals.len()
                        && a.intervals.iter().zip(&b.intervals).all(|(x, y)| {
                            x.text == y.text && close(x.xmin, y.xmin) && close(x.xmax, y.xmax)
                        })
                }
                (Tier::Point(a), Tier::Point(b)) => {
                    a.name == b.name
                        && close(a.xmin, b.xmin)
                        && close(a.xmax, b.xmax)
                        && a.points.len() == b.points.len()
                        && a.points.iter().zip(&b.points).all(|(x, y)| x.mark == y.mark && close(x.time, y.time))
                }
                _ => false,
            })
    }

    fn check_index(&self, index: usize) -> Result<usize> {
        if index == 0 || index > self.tiers.len() {
            return Err(TextGridError::IndexOutOfRange { index, count: self.tiers.len() });
        }
        Ok(index - 1)
    }
}

/// Concatenate the tiers of every grid, in order, over the envelope of all
/// their time ranges.
pub fn stack_tiers(grids: &[TextGrid]) -> Result<TextGrid> {
    let first = grids.first().ok_or(TextGridError::Empty("stack_tiers needs at least one grid"))?;
    let xmin = grids.iter().map(|g| g.xmin).fold(first.xmin, f64::min);
    let xmax = grids.iter().map(|g| g.xmax).fold(first.xmax, f64::max);
    let mut out = TextGrid::new(xmin, xmax);
    for grid in grids {
        // each input is normalized over its own range first, so padding shows up as a separate interval
        for mut tier in grid.normalized()?.tiers {
            tier.extend_to(xmin, xmax);
            out.tiers.push(tier);
        }
    }
    out.normalized()
}

/// Rename the tier at 1-based `index`.
pub fn rename_tier(grid: &TextGrid, index: usize, new_name: &str) -> Result<TextGrid> {
    let i = grid.check_index(index)?;
    let mut out = grid.clone();
    out.tiers[i].set_name(new_name);
    Ok(out)
}

/// Collapse the labeled intervals of several interval tiers into one new
/// tier appended after the remaining tiers.
pub fn merge_interval_tiers(grid: &TextGrid, indices: &[usize], new_name: &str) -> Result<TextGrid> {
    if indices.is_empty() {
        return Err(TextGridError::InvalidMerge("no tiers selected".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &index in indices {
        let i = grid.check_index(index)?;
        if !seen.insert(index) {
            return Err(TextGridError::InvalidMerge(format!("tier {index} selected more than once")));
        }
        if grid.tiers[i].as_interval().is_none() {
            return Err(TextGridError::NotIntervalTier { index });
        }
    }

    let mut pooled: Vec<(usize, &Interval)> = indices
        .iter()
        .flat_map(|&index| {
            let tier = grid.tiers[index - 1].as_interval().expect("checked above");
            tier.labeled().map(move |iv| (index, iv))
        })
        .collect();
    pooled.sort_by(|a, b| a.1.xmin.total_cmp(&b.1.xmin));

    // sorted by start, so any overlap shows up between neighbours
    for pair in pooled.windows(2) {
        let (ta, a) = pair[0];
        let (tb, b) = pair[1];
        if b.xmin < a.xmax - TIME_EPS {
            return Err(TextGridError::MergeConflict {
                first_tier: ta,
                second_tier: tb,
                start: b.xmin,
                end: a.xmax.min(b.xmax),
            });
        }
    }

    let merged = IntervalTier::with_intervals(
        new_name,
        grid.xmin,
        grid.xmax,
        pooled.into_iter().map(|(_, iv)| iv.clone()).collect(),
    );
    let mut out = TextGrid::new(grid.xmin, grid.xmax);
    for (i, tier) in grid.tiers.iter().enumerate() {
        if !seen.contains(&(i + 1)) {
            out.tiers.push(tier.clone());
        }
    }
    out.tiers.push(Tier::Interval(merged.normalized()?));
    Ok(out)
}

/// Report overlapping intervals by scanning neighbours in start order.
pub fn diagnose_overlaps(tier: &IntervalTier) -> Vec<OverlapReport> {
    let mut order: Vec<usize> = (0..tier.intervals.len()).collect();
    order.sort_by(|&a, &b| tier.intervals[a].xmin.total_cmp(&tier.intervals[b].xmin));
    order
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&tier.intervals[w[0]], &tier.intervals[w[1]]);
            (b.xmin < a.xmax - TIME_EPS).then(|| OverlapReport {
                first: w[0],
                second: w[1],
                start: b.xmin,
                end: a.xmax.min(b.xmax),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64, t: &str) -> Interval {
        Interval::new(a, b, t).unwrap()
    }

    fn grid_with(name: &str, xmax: f64, ivs: Vec<Interval>) -> TextGrid {
        TextGrid::with_tiers(0.0, xmax, vec![IntervalTier::with_intervals(name, 0.0, xmax, ivs).into()])
    }

    #[test]
    fn interval_rejects_zero_length_and_reversed() {
        assert!(matches!(Interval::new(1.0, 1.0, ""), Err(TextGridError::ZeroLengthInterval { .. })));
        assert!(matches!(Interval::new(2.0, 1.0, ""), Err(TextGridError::NonMonotonicInterval { .. })));
    }

    #[test]
    fn normalization_fills_gaps_and_is_idempotent() {
        let tier = IntervalTier::with_intervals("w", 0.0, 1.0, vec![iv(0.2, 0.4, "HI")]);
        let n = tier.normalized().unwrap();
        assert_eq!(n.intervals, vec![iv(0.0, 0.2, ""), iv(0.2, 0.4, "HI"), iv(0.4, 1.0, "")]);
        assert_eq!(n.normalized().unwrap(), n);
    }

    #[test]
    fn empty_tier_normalizes_to_single_interval() {
        let n = IntervalTier::new("x", 0.0, 3.0).normalized().unwrap();
        assert_eq!(n.intervals, vec![iv(0.0, 3.0, "")]);
    }

    #[test]
    fn stack_concatenates_and_pads() {
        let a = grid_with("phones", 10.0, vec![iv(1.0, 2.0, "K")]);
        let b = grid_with("words", 12.0, vec![iv(1.0, 2.0, "KLATT")]);
        let s = stack_tiers(&[a.clone(), b]).unwrap();
        assert_eq!(s.xmax, 12.0);
        let names: Vec<_> = s.tiers.iter().map(Tier::name).collect();
        assert_eq!(names, ["phones", "words"]);
        let phones = s.tiers[0].as_interval().unwrap();
        assert_eq!(phones.intervals.last().unwrap(), &iv(10.0, 12.0, ""));

        let single = stack_tiers(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single, a.normalized().unwrap());
        assert!(stack_tiers(&[]).is_err());
    }

    #[test]
    fn rename_cases() {
        let mut g = grid_with("a", 1.0, vec![]);
        g.push_tier(IntervalTier::new("b", 0.0, 1.0));
        g.push_tier(IntervalTier::new("AutoVOT", 0.0, 1.0));
        let r = rename_tier(&g, 3, "P_auto").unwrap();
        assert_eq!(r.tiers[2].name(), "P_auto");
        assert_eq!(r.tiers[2].as_interval().unwrap().intervals, g.tiers[2].as_interval().unwrap().intervals);
        assert_eq!(rename_tier(&g, 1, "a").unwrap(), g);
        assert_eq!(rename_tier(&g, 9, "x"), Err(TextGridError::IndexOutOfRange { index: 9, count: 3 }));
        assert!(rename_tier(&g, 0, "x").is_err());
    }

    #[test]
    fn merge_disjoint_stop_tiers() {
        let mut g = TextGrid::new(0.0, 10.0);
        g.push_tier(IntervalTier::new("phone", 0.0, 10.0));
        g.push_tier(IntervalTier::new("word", 0.0, 10.0));
        for (k, label) in ["P", "T", "K", "B", "D", "G"].iter().enumerate() {
            let start = 1.0 + k as f64;
            g.push_tier(IntervalTier::with_intervals(*label, 0.0, 10.0, vec![iv(start, start + 0.05, label)]));
        }
        let m = merge_interval_tiers(&g, &[3, 4, 5, 6, 7, 8], "vot").unwrap();
        assert_eq!(m.tiers.len(), 3);
        let vot = m.tiers[2].as_interval().unwrap();
        assert_eq!(vot.name, "vot");
        let labels: Vec<_> = vot.labeled().map(|i| i.text.as_str()).collect();
        assert_eq!(labels, ["P", "T", "K", "B", "D", "G"]);
    }

    #[test]
    fn merge_rejects_duplicates_and_conflicts() {
        let mut g = TextGrid::new(0.0, 3.0);
        g.push_tier(IntervalTier::new("a", 0.0, 3.0));
        g.push_tier(IntervalTier::new("b", 0.0, 3.0));
        g.push_tier(IntervalTier::with_intervals("P", 0.0, 3.0, vec![iv(1.0, 1.1, "P")]));
        g.push_tier(IntervalTier::with_intervals("B", 0.0, 3.0, vec![iv(1.05, 1.15, "B")]));
        assert!(matches!(merge_interval_tiers(&g, &[3, 3], "x"), Err(TextGridError::InvalidMerge(_))));
        match merge_interval_tiers(&g, &[3, 4], "x") {
            Err(TextGridError::MergeConflict { first_tier, second_tier, start, end }) => {
                assert_eq!((first_tier, second_tier), (3, 4));
                assert_eq!((start, end), (1.05, 1.1));
            }
            other => panic!("expected conflict, got {other:?}"),
        }
    }

    #[test]
    fn overlap_reports() {
        let t = IntervalTier::with_intervals("t", 0.0, 2.0, vec![iv(0.0, 1.0, "A"), iv(0.9, 2.0, "B")]);
        let r = diagnose_overlaps(&t);
        assert_eq!(r, vec![OverlapReport { first: 0, second: 1, start: 0.9, end: 1.0 }]);
        let ok = IntervalTier::with_intervals("t", 0.0, 2.0, vec![iv(0.0, 1.0, "A"), iv(1.0, 2.0, "B")]);
        assert!(diagnose_overlaps(&ok).is_empty());
    }

    #[test]
    fn cascading_overlaps_match_brute_force() {
        let t = IntervalTier::with_intervals(
            "t",
            0.0,
            3.0,
            vec![iv(0.0, 1.0, "A"), iv(0.9, 2.0, "B"), iv(1.9, 3.0, "C")],
        );
        let scan: Vec<_> = diagnose_overlaps(&t).iter().map(|o| (o.first, o.second)).collect();
        let mut brute = Vec::new();
        for i in 0..t.intervals.len() {
            for j in i + 1..t.intervals.len() {
                if t.intervals[i].overlap_with(&t.intervals[j]) > 0.0 {
                    brute.push((i, j));
                }
            }
        }
        assert_eq!(scan, brute);
        assert_eq!(scan.len(), 2);
    }

    #[test]
    fn find_tier_counts_duplicates() {
        let mut g = TextGrid::new(0.0, 1.0);
        g.push_tier(IntervalTier::new("x", 0.0, 1.0));
        g.push_tier(IntervalTier::new("y", 0.0, 1.0));
        g.push_tier(IntervalTier::new("x", 0.0, 1.0));
        assert_eq!(g.find_tier("x"), Some((0, 2)));
        assert_eq!(g.find_tier("z"), None);
    }
}
