use super::{Interval, IntervalTier, Point, PointTier, Result, TextGrid, TextGridError, Tier};

/// Parse a TextGrid file image in Praat's long text format.
///
/// UTF-8 (with or without BOM) and UTF-16 (BOM required) are accepted.
pub fn parse_textgrid(content: &[u8]) -> Result<TextGrid> {
    let text = decode(content)?;
    let mut s = Scanner::new(&text);

    if s.rest().trim_start().starts_with("ooBinaryFile") {
        return Err(TextGridError::UnsupportedFormat("binary"));
    }
    if !s.try_literal("File type") || !s.try_literal("=") {
        return Err(TextGridError::MalformedHeader("missing `File type = \"ooTextFile\"`".into()));
    }
    match s.string() {
        Ok(ft) if ft == "ooTextFile" => {}
        Ok(ft) if ft.starts_with("ooBinaryFile") => return Err(TextGridError::UnsupportedFormat("binary")),
        _ => return Err(TextGridError::MalformedHeader("file type is not \"ooTextFile\"".into())),
    }
    if !s.try_literal("Object class") || !s.try_literal("=") || s.string().ok().as_deref() != Some("TextGrid") {
        return Err(TextGridError::MalformedHeader("missing `Object class = \"TextGrid\"`".into()));
    }
    if !s.peek_literal("xmin") {
        return Err(TextGridError::UnsupportedFormat("short text"));
    }

    let xmin = s.keyed_number("xmin")?;
    let xmax = s.keyed_number("xmax")?;
    s.expect("tiers?")?;
    let mut grid = TextGrid::new(xmin, xmax);
    if s.try_literal("<absent>") {
        s.finish()?;
        return Ok(grid);
    }
    s.expect("<exists>")?;
    let declared = s.keyed_count("size")?;
    s.expect("item")?;
    s.expect("[")?;
    s.expect("]")?;
    s.expect(":")?;

    while s.peek_literal("item") {
        s.indexed_header("item")?;
        grid.tiers.push(parse_tier(&mut s)?);
    }
    if grid.tiers.len() != declared {
        return Err(TextGridError::TierCountMismatch {
            context: "tiers".into(),
            declared,
            found: grid.tiers.len(),
        });
    }
    s.finish()?;
    Ok(grid)
}

fn parse_tier(s: &mut Scanner) -> Result<Tier> {
    s.expect("class")?;
    s.expect("=")?;
    let class = s.string()?;
    s.expect("name")?;
    s.expect("=")?;
    let name = s.string()?;
    let xmin = s.keyed_number("xmin")?;
    let xmax = s.keyed_number("xmax")?;
    match class.as_str() {
        "IntervalTier" => {
            s.expect("intervals:")?;
            let declared = s.keyed_count("size")?;
            let mut intervals = Vec::new();
            while s.peek_literal("intervals") {
                s.indexed_header("intervals")?;
                let a = s.keyed_number("xmin")?;
                let b = s.keyed_number("xmax")?;
                s.expect("text")?;
                s.expect("=")?;
                let text = s.string()?;
                if b < a {
                    return Err(TextGridError::NonMonotonicInterval { tier: name, index: intervals.len() + 1, xmin: a, xmax: b });
                }
                if b == a {
                    return Err(TextGridError::ZeroLengthInterval { tier: name, at: a });
                }
                intervals.push(Interval { xmin: a, xmax: b, text });
            }
            if intervals.len() != declared {
                return Err(TextGridError::TierCountMismatch {
                    context: format!("intervals of tier {name:?}"),
                    declared,
                    found: intervals.len(),
                });
            }
            Ok(Tier::Interval(IntervalTier { name, xmin, xmax, intervals }))
        }
        "TextTier" => {
            s.expect("points:")?;
            let declared = s.keyed_count("size")?;
            let mut points = Vec::new();
            while s.peek_literal("points") {
                s.indexed_header("points")?;
                let time = s.keyed_number("number")?;
                s.expect("mark")?;
                s.expect("=")?;
                let mark = s.string()?;
                points.push(Point { time, mark });
            }
            if points.len() != declared {
                return Err(TextGridError::TierCountMismatch {
                    context: format!("points of tier {name:?}"),
                    declared,
                    found: points.len(),
                });
            }
            Ok(Tier::Point(PointTier { name, xmin, xmax, points }))
        }
        other => Err(s.error(format!("unknown tier class {other:?}"))),
    }
}

fn decode(content: &[u8]) -> Result<String> {
    let utf16 = |bytes: &[u8], to_u16: fn([u8; 2]) -> u16| -> Result<String> {
        if bytes.len() % 2 != 0 {
            return Err(TextGridError::EncodingError("odd byte count in UTF-16 input".into()));
        }
        let units: Vec<u16> = bytes.chunks_exact(2).map(|c| to_u16([c[0], c[1]])).collect();
        String::from_utf16(&units).map_err(|e| TextGridError::EncodingError(e.to_string()))
    };
    match content {
        [0xFF, 0xFE, rest @ ..] => utf16(rest, u16::from_le_bytes),
        [0xFE, 0xFF, rest @ ..] => utf16(rest, u16::from_be_bytes),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| TextGridError::EncodingError(e.to_string()))
        }
        _ => String::from_utf8(content.to_vec()).map_err(|e| TextGridError::EncodingError(e.to_string())),
    }
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn line(&self) -> usize {
        1 + self.src[..self.pos].matches('\n').count()
    }

    fn error(&self, message: impl Into<String>) -> TextGridError {
        TextGridError::Syntax { line: self.line(), message: message.into() }
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek_literal(&mut self, lit: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(lit)
    }

    fn try_literal(&mut self, lit: &str) -> bool {
        if self.peek_literal(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.try_literal(lit) {
            Ok(())
        } else {
            let found: String = self.rest().chars().take(20).collect();
            Err(self.error(format!("expected `{lit}`, found {found:?}")))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn number(&mut self) -> Result<f64> {
        let w = self.word();
        w.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error(format!("expected a number, found {w:?}")))
    }

    fn keyed_number(&mut self, key: &str) -> Result<f64> {
        self.expect(key)?;
        self.expect("=")?;
        self.number()
    }

    fn keyed_count(&mut self, key: &str) -> Result<usize> {
        self.expect(key)?;
        self.expect("=")?;
        let w = self.word();
        w.parse::<usize>().map_err(|_| self.error(format!("expected a count, found {w:?}")))
    }

    /// `name [n]:`
    fn indexed_header(&mut self, name: &str) -> Result<()> {
        self.expect(name)?;
        self.expect("[")?;
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(']').ok_or_else(|| self.error("unterminated index"))?;
        if rest[..end].trim().parse::<usize>().is_err() {
            return Err(self.error(format!("bad index {:?}", &rest[..end])));
        }
        self.pos += end;
        self.expect("]")?;
        self.expect(":")
    }

    /// A double-quoted string; `""` inside stands for one quote.
    fn string(&mut self) -> Result<String> {
        self.skip_ws();
        if !self.rest().starts_with('"') {
            return Err(self.error("expected a quoted string"));
        }
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = self.rest();
            let q = rest.find('"').ok_or_else(|| self.error("unterminated string"))?;
            out.push_str(&rest[..q]);
            self.pos += q + 1;
            if self.rest().starts_with('"') {
                out.push('"');
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.error("trailing content after last tier"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\nxmin = 0 \nxmax = 2.5 \ntiers? <exists> \nsize = 1 \nitem []: \n    item [1]:\n        class = \"IntervalTier\" \n        name = \"phones\" \n        xmin = 0 \n        xmax = 2.5 \n        intervals: size = 1 \n        intervals [1]:\n            xmin = 0 \n            xmax = 2.5 \n            text = \"\" \n";

    #[test]
    fn minimal_grid() {
        let g = parse_textgrid(MINIMAL.as_bytes()).unwrap();
        assert_eq!((g.xmin, g.xmax), (0.0, 2.5));
        assert_eq!(g.tiers.len(), 1);
        let t = g.tiers[0].as_interval().unwrap();
        assert_eq!(t.name, "phones");
        assert_eq!(t.intervals, vec![Interval { xmin: 0.0, xmax: 2.5, text: String::new() }]);
    }

    #[test]
    fn interval_count_mismatch() {
        let bad = MINIMAL.replace("intervals: size = 1", "intervals: size = 3");
        assert!(matches!(
            parse_textgrid(bad.as_bytes()),
            Err(TextGridError::TierCountMismatch { declared: 3, found: 1, .. })
        ));
        let bad = MINIMAL.replace("size = 1 \nitem", "size = 2 \nitem");
        assert!(matches!(parse_textgrid(bad.as_bytes()), Err(TextGridError::TierCountMismatch { declared: 2, .. })));
    }

    #[test]
    fn header_errors() {
        let no_type = MINIMAL.replacen("File type = \"ooTextFile\"", "", 1);
        assert!(matches!(parse_textgrid(no_type.as_bytes()), Err(TextGridError::MalformedHeader(_))));
        let wrong_class = MINIMAL.replace("\"TextGrid\"", "\"Sound\"");
        assert!(matches!(parse_textgrid(wrong_class.as_bytes()), Err(TextGridError::MalformedHeader(_))));
        assert!(matches!(
            parse_textgrid(b"ooBinaryFile\x08TextGrid"),
            Err(TextGridError::UnsupportedFormat("binary"))
        ));
    }

    #[test]
    fn short_format_rejected() {
        let short = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n2.5\n<exists>\n1\n\"IntervalTier\"\n\"a\"\n0\n2.5\n1\n0\n2.5\n\"\"\n";
        assert_eq!(parse_textgrid(short.as_bytes()), Err(TextGridError::UnsupportedFormat("short text")));
    }

    #[test]
    fn reversed_interval_rejected() {
        let bad = MINIMAL.replace("            xmax = 2.5", "            xmax = -1");
        assert!(matches!(parse_textgrid(bad.as_bytes()), Err(TextGridError::NonMonotonicInterval { .. })));
    }

    #[test]
    fn utf16_and_bom_inputs() {
        let with_label = MINIMAL.replace("text = \"\"", "text = \"ʃ\"\"x\"\"\"");
        let mut le = vec![0xFF, 0xFE];
        le.extend(with_label.encode_utf16().flat_map(u16::to_le_bytes));
        let mut be = vec![0xFE, 0xFF];
        be.extend(with_label.encode_utf16().flat_map(u16::to_be_bytes));
        let mut bom8 = vec![0xEF, 0xBB, 0xBF];
        bom8.extend(with_label.as_bytes());
        let expected = parse_textgrid(with_label.as_bytes()).unwrap();
        assert_eq!(expected.tiers[0].as_interval().unwrap().intervals[0].text, "ʃ\"x\"");
        for input in [le, be, bom8] {
            assert_eq!(parse_textgrid(&input).unwrap(), expected);
        }
        assert!(matches!(parse_textgrid(&[0xFF, 0xFE, 0x00]), Err(TextGridError::EncodingError(_))));
        assert!(matches!(parse_textgrid(&[0xC3, 0x28]), Err(TextGridError::EncodingError(_))));
    }

    #[test]
    fn point_tiers_and_absent_tiers() {
        let src = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\nxmin = 0\nxmax = 1\ntiers? <exists>\nsize = 1\nitem []:\n item [1]:\n  class = \"TextTier\"\n  name = \"bell\"\n  xmin = 0\n  xmax = 1\n  points: size = 1\n  points [1]:\n   number = 0.5\n   mark = \"ding\"\n";
        let g = parse_textgrid(src.as_bytes()).unwrap();
        assert_eq!(g.tiers[0], Tier::Point(PointTier {
            name: "bell".into(),
            xmin: 0.0,
            xmax: 1.0,
            points: vec![Point { time: 0.5, mark: "ding".into() }],
        }));
        let absent = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\nxmin = 0\nxmax = 1\ntiers? <absent>\n";
        assert!(parse_textgrid(absent.as_bytes()).unwrap().tiers.is_empty());
    }

    #[test]
    fn multiline_label() {
        let src = MINIMAL.replace("text = \"\"", "text = \"two\nlines\"");
        let g = parse_textgrid(src.as_bytes()).unwrap();
        assert_eq!(g.tiers[0].as_interval().unwrap().intervals[0].text, "two\nlines");
    }
}
