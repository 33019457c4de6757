//! Context readers (Burmeister CXT, FIMI transactions, dense CSV), dataset
//! statistics and concept-list writers.
//!
//! Paths ending in `.gz` are decompressed transparently.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::GzDecoder;
use serde::Serialize;

use crate::context::{lectic_cmp, AttributeSet, ConceptList, FormalContext};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Cxt,
    Fimi,
    Csv,
}

impl InputFormat {
    /// Guesses from the file extension, looking through a trailing `.gz`.
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        let ext = name.rsplit_once('.')?.1;
        match ext {
            "cxt" => Some(InputFormat::Cxt),
            "dat" | "fimi" | "txt" => Some(InputFormat::Fimi),
            "csv" => Some(InputFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cxt" => Ok(InputFormat::Cxt),
            "fimi" => Ok(InputFormat::Fimi),
            "csv" => Ok(InputFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown input format {s:?}"))),
        }
    }
}

pub fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    let gz = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    Ok(if gz {
        Box::new(BufReader::new(GzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    })
}

/// Reads a context from `path`. `format` defaults to a guess from the
/// extension; `attribute_count` only affects FIMI input.
pub fn read_path(path: &Path, format: Option<InputFormat>, attribute_count: Option<usize>) -> Result<FormalContext> {
    let format = match format.or_else(|| InputFormat::from_path(path)) {
        Some(f) => f,
        None => {
            return Err(Error::InvalidArgument(format!(
                "cannot tell the format of {}; pass --format",
                path.display()
            )))
        }
    };
    let reader = open(path)?;
    match format {
        InputFormat::Cxt => read_cxt(reader),
        InputFormat::Fimi => read_fimi(reader, attribute_count),
        InputFormat::Csv => read_csv(reader),
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self { inner: r.lines(), number: 0 }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(line) => {
                self.number += 1;
                Ok(Some(line?.trim_end_matches('\r').to_string()))
            }
        }
    }

    fn expect(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| Error::parse(self.number + 1, format!("unexpected end of file, expected {what}")))
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let line = self.expect(what)?;
        line.trim()
            .parse()
            .map_err(|_| Error::parse(self.number, format!("expected {what}, found {line:?}")))
    }
}

/// Burmeister format: `B`, a blank (or name) line, object count, attribute
/// count, a blank line, the names, then one `X`/`.` row per object.
pub fn read_cxt<R: BufRead>(reader: R) -> Result<FormalContext> {
    let mut lines = Lines::new(reader);
    let magic = lines.expect("header \"B\"")?;
    if magic.trim() != "B" {
        return Err(Error::parse(lines.number, format!("expected header \"B\", found {magic:?}")));
    }
    lines.expect("blank line")?;
    let n = lines.count("object count")?;
    let m = lines.count("attribute count")?;
    let blank = lines.expect("blank line")?;
    if !blank.trim().is_empty() {
        return Err(Error::parse(lines.number, "expected a blank line after the counts"));
    }
    let mut object_names = Vec::with_capacity(n);
    for _ in 0..n {
        object_names.push(lines.expect("object name")?);
    }
    let mut attribute_names = Vec::with_capacity(m);
    for _ in 0..m {
        attribute_names.push(lines.expect("attribute name")?);
    }
    let mut rows = Vec::with_capacity(n);
    for o in 0..n {
        let line = lines.expect(&format!("row for object {:?}", object_names[o]))?;
        let cells = line.trim_end();
        if cells.chars().count() != m {
            return Err(Error::parse(
                lines.number,
                format!("row has {} cells, expected {m}", cells.chars().count()),
            ));
        }
        let mut row = AttributeSet::empty(m);
        for (j, c) in cells.chars().enumerate() {
            match c {
                'X' | 'x' => {
                    row.insert(j);
                }
                '.' => {}
                other => {
                    return Err(Error::parse(lines.number, format!("illegal cell character {other:?}")));
                }
            }
        }
        rows.push(row);
    }
    while let Some(extra) = lines.next_line()? {
        if !extra.trim().is_empty() {
            return Err(Error::parse(lines.number, "more rows than the declared object count"));
        }
    }
    FormalContext::new(object_names, attribute_names, rows)
}

pub fn write_cxt<W: Write>(ctx: &FormalContext, mut w: W) -> Result<()> {
    writeln!(w, "B\n\n{}\n{}\n", ctx.object_count(), ctx.attribute_count())?;
    for name in ctx.object_names().iter().chain(ctx.attribute_names()) {
        writeln!(w, "{name}")?;
    }
    for row in ctx.rows() {
        let line: String = (0..ctx.attribute_count())
            .map(|j| if row.contains(j) { 'X' } else { '.' })
            .collect();
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// One transaction per line: whitespace-separated attribute indices. The
/// attribute count is `attribute_count` or one past the largest index.
pub fn read_fimi<R: BufRead>(reader: R, attribute_count: Option<usize>) -> Result<FormalContext> {
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut max: Option<usize> = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let j: usize = tok
                .parse()
                .map_err(|_| Error::parse(k + 1, format!("expected an attribute index, found {tok:?}")))?;
            if let Some(m) = attribute_count {
                if j >= m {
                    return Err(Error::parse(k + 1, format!("attribute index {j} out of range 0..{m}")));
                }
            }
            max = max.max(Some(j));
            row.push(j);
        }
        rows.push(row);
    }
    let m = attribute_count.unwrap_or_else(|| max.map_or(0, |j| j + 1));
    FormalContext::from_index_rows(m, &rows)
}

pub fn write_fimi<W: Write>(ctx: &FormalContext, mut w: W) -> Result<()> {
    for row in ctx.rows() {
        let items: Vec<String> = row.iter().map(|j| j.to_string()).collect();
        writeln!(w, "{}", items.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Header row of attribute names (first cell ignored), then one row per
/// object: its name followed by `0`/`1` cells.
pub fn read_csv<R: Read>(reader: R) -> Result<FormalContext> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let attribute_names: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let m = attribute_names.len();
    let mut object_names = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != m + 1 {
            return Err(Error::parse(line, format!("{} cells, expected {}", record.len(), m + 1)));
        }
        object_names.push(record[0].to_string());
        let mut row = AttributeSet::empty(m);
        for (j, cell) in record.iter().skip(1).enumerate() {
            match cell {
                "1" => {
                    row.insert(j);
                }
                "0" => {}
                other => return Err(Error::parse(line, format!("cell {other:?} is not 0 or 1"))),
            }
        }
        rows.push(row);
    }
    FormalContext::new(object_names, attribute_names, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub objects: usize,
    pub attributes: usize,
    pub incidences: usize,
    /// `|I| / (|O|·|P|)`, 0 for an empty matrix.
    pub density: f64,
}

pub fn stats(ctx: &FormalContext) -> DatasetStats {
    let (n, m) = (ctx.object_count(), ctx.attribute_count());
    let incidences = ctx.incidence_count();
    let cells = n * m;
    DatasetStats {
        objects: n,
        attributes: m,
        incidences,
        density: if cells == 0 { 0.0 } else { incidences as f64 / cells as f64 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    JsonLines,
    Csv,
    CountOnly,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json_lines" => Ok(OutputFormat::JsonLines),
            "csv" => Ok(OutputFormat::Csv),
            "count_only" => Ok(OutputFormat::CountOnly),
            _ => Err(Error::InvalidArgument(format!("unknown output format {s:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::JsonLines => "json_lines",
            OutputFormat::Csv => "csv",
            OutputFormat::CountOnly => "count_only",
        })
    }
}

#[derive(Serialize)]
struct Record<'a> {
    extent: Vec<&'a str>,
    intent: Vec<&'a str>,
}

/// Writes one record per concept, ordered lectically by intent whatever
/// order `concepts` is in. Names are listed in context order.
pub fn write_concepts<W: Write>(
    ctx: &FormalContext,
    concepts: &ConceptList,
    format: OutputFormat,
    mut w: W,
) -> Result<()> {
    let mut order: Vec<usize> = (0..concepts.len()).collect();
    order.sort_by(|&a, &b| lectic_cmp(&concepts.0[a].intent, &concepts.0[b].intent));
    let record = |k: usize| {
        let c = &concepts.0[k];
        Record {
            extent: c.extent.iter().map(|o| ctx.object_names()[o].as_str()).collect(),
            intent: c.intent.iter().map(|j| ctx.attribute_names()[j].as_str()).collect(),
        }
    };
    match format {
        OutputFormat::JsonLines => {
            for k in order {
                serde_json::to_writer(&mut w, &record(k))?;
                w.write_all(b"\n")?;
            }
        }
        OutputFormat::Csv => {
            let mut out = csv::Writer::from_writer(&mut w);
            out.write_record(["extent", "intent"])?;
            for k in order {
                let r = record(k);
                out.write_record([r.extent.join(" "), r.intent.join(" ")])?;
            }
            out.flush()?;
        }
        OutputFormat::CountOnly => writeln!(w, "{}", concepts.len())?,
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::all_closures;
    use crate::fixtures::{random_context, toy_context};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    const TOY_CXT: &str = "B\n\n6\n7\n\n1\n2\n3\n4\n5\n6\na\nb\nc\nd\ne\nf\ng\n\
XX.X.X.\nX.X.X.X\n.XXX.XX\n.X.XX..\nX..XXX.\n.XX..XX\n";

    #[test]
    fn reads_the_toy_context() {
        let ctx = read_cxt(Cursor::new(TOY_CXT)).unwrap();
        assert_eq!(ctx.object_count(), 6);
        assert_eq!(ctx.attribute_count(), 7);
        assert_eq!(ctx, toy_context());
        let line: String = (0..7).map(|j| if ctx.has(1, j) { 'X' } else { '.' }).collect();
        assert_eq!(line, "X.X.X.X");
    }

    #[test]
    fn empty_cxt_is_legal() {
        let ctx = read_cxt(Cursor::new("B\n\n0\n2\n\na\nb\n")).unwrap();
        assert_eq!(ctx.object_count(), 0);
        assert_eq!(ctx.attribute_count(), 2);
    }

    #[test]
    fn bad_cell_reports_its_line() {
        let bad = TOY_CXT.replace("X.X.X.X", "X.X.Y.X");
        match read_cxt(Cursor::new(bad)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 20),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_cxt(Cursor::new("C\n")), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_cxt(Cursor::new("B\n\nsix\n")), Err(Error::Parse { line: 3, .. })));
        let short = TOY_CXT.replace(".XX..XX\n", "");
        assert!(read_cxt(Cursor::new(short)).is_err());
        let wide = TOY_CXT.replace("X.X.X.X", "X.X.X.X.");
        assert!(read_cxt(Cursor::new(wide)).is_err());
    }

    #[test]
    fn fimi_basics() {
        let ctx = read_fimi(Cursor::new("0 2 4\n1 3\n"), None).unwrap();
        assert_eq!((ctx.object_count(), ctx.attribute_count()), (2, 5));
        assert_eq!(stats(&ctx).density, 0.5);
        let ctx = read_fimi(Cursor::new("1\n\n0\n"), None).unwrap();
        assert!(ctx.row(1).is_empty());
        assert!(matches!(read_fimi(Cursor::new("0 x\n"), None), Err(Error::Parse { line: 1, .. })));
        assert!(read_fimi(Cursor::new("0 7\n"), Some(5)).is_err());
        assert_eq!(read_fimi(Cursor::new("0\n"), Some(9)).unwrap().attribute_count(), 9);
    }

    #[test]
    fn csv_input() {
        let ctx = read_csv(Cursor::new("obj,a,b\nx,1,0\ny,1,1\n")).unwrap();
        assert_eq!(ctx.attribute_names(), ["a", "b"]);
        assert_eq!(ctx.object_names(), ["x", "y"]);
        assert!(ctx.has(1, 1) && !ctx.has(0, 1));
        assert!(read_csv(Cursor::new("obj,a\nx,2\n")).is_err());
    }

    #[test]
    fn toy_stats() {
        let s = stats(&toy_context());
        assert_eq!(s.incidences, 24);
        assert!((s.density - 24.0 / 42.0).abs() < 1e-12);
        let full = FormalContext::from_index_rows(2, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(stats(&full).density, 1.0);
    }

    #[test]
    fn concept_records() {
        let ctx = toy_context();
        let concepts = all_closures(&ctx);
        let mut buf = Vec::new();
        write_concepts(&ctx, &concepts, OutputFormat::JsonLines, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.lines().any(|l| l == r#"{"extent":["1","5"],"intent":["a","d","f"]}"#));

        let mut reversed = concepts.clone();
        reversed.0.reverse();
        let mut again = Vec::new();
        write_concepts(&ctx, &reversed, OutputFormat::JsonLines, &mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), text);

        let mut count = Vec::new();
        write_concepts(&ctx, &ConceptList::new(), OutputFormat::CountOnly, &mut count).unwrap();
        assert_eq!(count, b"0\n");
        let mut empty = Vec::new();
        write_concepts(&ctx, &ConceptList::new(), OutputFormat::JsonLines, &mut empty).unwrap();
        assert!(empty.is_empty());

        let mut csv = Vec::new();
        write_concepts(&ctx, &concepts, OutputFormat::Csv, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("\n1 5,a d f\n"));
    }

    #[test]
    fn gzip_by_extension() {
        use flate2::write::GzEncoder;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.cxt.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), flate2::Compression::default());
        enc.write_all(TOY_CXT.as_bytes()).unwrap();
        enc.finish().unwrap();
        assert_eq!(read_path(&path, None, None).unwrap(), toy_context());
    }

    #[test]
    fn formats_agree_on_concept_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ctx = random_context(&mut rng, 10, 9, 0.4);
        let mut cxt = Vec::new();
        write_cxt(&ctx, &mut cxt).unwrap();
        let mut fimi = Vec::new();
        write_fimi(&ctx, &mut fimi).unwrap();
        let a = read_cxt(Cursor::new(cxt)).unwrap();
        let b = read_fimi(Cursor::new(fimi), Some(9)).unwrap();
        assert_eq!(all_closures(&a).len(), all_closures(&b).len());
    }

    proptest! {
        #[test]
        fn cxt_round_trip(seed in any::<u64>(), n in 0usize..15, m in 0usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ctx = random_context(&mut rng, n, m, 0.5);
            let mut buf = Vec::new();
            write_cxt(&ctx, &mut buf).unwrap();
            prop_assert_eq!(read_cxt(Cursor::new(buf)).unwrap(), ctx);
        }
    }
}
