//! CSV formats for unique pairs, frequencies and kinetics.

use std::io::{Read, Write};
use std::str::FromStr;

use super::{CoCitedPair, PairCount, PairFrequency};
use crate::error::{Error, Result};
use crate::ingest::Catalog;
use crate::kinetics::YearSeries;

pub const PAIRS_HEADER: [&str; 3] = ["a", "b", "first_possible_year"];
pub const FREQUENCIES_HEADER: [&str; 3] = ["a", "b", "total"];
pub const KINETICS_LONG_HEADER: [&str; 4] = ["a", "b", "year", "count"];

fn flush<W: Write>(w: &mut csv::Writer<W>, what: &str) -> Result<()> {
    w.flush().map_err(|e| Error::resource(what.to_string(), e))
}

pub fn write_pairs_csv<W, I>(out: W, pairs: I, catalog: &Catalog) -> Result<u64>
where
    W: Write,
    I: IntoIterator<Item = CoCitedPair>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIRS_HEADER)?;
    let mut n = 0;
    for p in pairs {
        let (a, b) = p.ids(catalog);
        w.write_record([a, b, &p.first_possible_year.to_string()])?;
        n += 1;
    }
    flush(&mut w, "pairs csv")?;
    Ok(n)
}

fn field<T: FromStr>(record: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    record[i]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value {:?} in column {}", &record[i], i + 1)))
}

fn resolve_pair(catalog: &Catalog, a: &str, b: &str, line: u64) -> Result<CoCitedPair> {
    let lookup = |id: &str| {
        catalog
            .lookup(id)
            .ok_or_else(|| Error::Data(format!("line {line}: unknown publication {id}")))
    };
    let (ia, ib) = (lookup(a)?, lookup(b)?);
    if ia >= ib {
        return Err(Error::Data(format!("line {line}: pair {a},{b} is not canonical")));
    }
    CoCitedPair::new(ia, ib, catalog)
}

/// Reads a unique-pairs file, checking each row against the catalog.
pub fn read_pairs_csv<'c, R: Read + 'c>(
    stream: R,
    catalog: &'c Catalog,
) -> Result<impl Iterator<Item = Result<CoCitedPair>> + 'c> {
    let mut reader = csv::Reader::from_reader(stream);
    if reader.headers()?.iter().collect::<Vec<_>>() != PAIRS_HEADER {
        return Err(Error::parse(1, "expected header a,b,first_possible_year"));
    }
    Ok(reader.into_records().map(move |rec| {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let pair = resolve_pair(catalog, &rec[0], &rec[1], line)?;
        let year: i32 = field(&rec, 2, line)?;
        if year != pair.first_possible_year {
            return Err(Error::Data(format!(
                "line {line}: first_possible_year {year} disagrees with catalog ({})",
                pair.first_possible_year
            )));
        }
        Ok(pair)
    }))
}

pub fn write_frequencies_csv<'a, W, I>(out: W, freqs: I, catalog: &Catalog) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PairFrequency>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FREQUENCIES_HEADER)?;
    for f in freqs {
        let (a, b) = f.pair.ids(catalog);
        w.write_record([a, b, &f.total.to_string()])?;
    }
    flush(&mut w, "frequencies csv")
}

/// Reads a frequencies file back, checking each pair against the catalog.
pub fn read_frequencies_csv<'c, R: Read + 'c>(
    stream: R,
    catalog: &'c Catalog,
) -> Result<impl Iterator<Item = Result<PairFrequency>> + 'c> {
    let mut reader = csv::Reader::from_reader(stream);
    if reader.headers()?.iter().collect::<Vec<_>>() != FREQUENCIES_HEADER {
        return Err(Error::parse(1, "expected header a,b,total"));
    }
    Ok(reader.into_records().map(move |rec| {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        Ok(PairFrequency {
            pair: resolve_pair(catalog, &rec[0], &rec[1], line)?,
            total: field(&rec, 2, line)?,
        })
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticsFormat {
    /// One `a,b,year,count` row per pair-year, zero rows included.
    Long,
    /// One row per pair with a column per year; cells before the pair's
    /// first possible year are empty.
    Wide { first_year: i32, end_year: i32 },
}

/// Streaming writer for kinetics rows.
pub struct KineticsWriter<W: Write> {
    inner: csv::Writer<W>,
    format: KineticsFormat,
}

impl<W: Write> KineticsWriter<W> {
    pub fn new(out: W, format: KineticsFormat) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        match format {
            KineticsFormat::Long => inner.write_record(KINETICS_LONG_HEADER)?,
            KineticsFormat::Wide {
                first_year,
                end_year,
            } => {
                let mut header = vec!["a".to_string(), "b".into(), "first_possible_year".into()];
                header.extend((first_year..=end_year).map(|y| y.to_string()));
                inner.write_record(&header)?;
            }
        }
        Ok(KineticsWriter { inner, format })
    }

    pub fn write(&mut self, count: &PairCount, catalog: &Catalog) -> Result<()> {
        let (a, b) = count.pair.ids(catalog);
        match self.format {
            KineticsFormat::Long => {
                for (year, c) in count.series.iter() {
                    self.inner
                        .write_record([a, b, &year.to_string(), &c.to_string()])?;
                }
            }
            KineticsFormat::Wide {
                first_year,
                end_year,
            } => {
                if count.series.start_year() < first_year || count.series.end_year() != end_year {
                    return Err(Error::Contract(format!(
                        "series {}..={} outside wide columns {first_year}..={end_year}",
                        count.series.start_year(),
                        count.series.end_year()
                    )));
                }
                let mut row = vec![a.to_string(), b.to_string(), count.pair.first_possible_year.to_string()];
                row.extend((first_year..=end_year).map(|y| {
                    count.series.get(y).map(|c| c.to_string()).unwrap_or_default()
                }));
                self.inner.write_record(&row)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        flush(&mut self.inner, "kinetics csv")?;
        self.inner
            .into_inner()
            .map_err(|e| Error::resource("kinetics csv", e.into_error()))
    }
}

pub fn write_kinetics_long<'a, W, I>(out: W, counts: I, catalog: &Catalog) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PairCount>,
{
    let mut w = KineticsWriter::new(out, KineticsFormat::Long)?;
    for c in counts {
        w.write(c, catalog)?;
    }
    w.finish().map(|_| ())
}

pub fn write_kinetics_wide<'a, W, I>(
    out: W,
    counts: I,
    catalog: &Catalog,
    first_year: i32,
    end_year: i32,
) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PairCount>,
{
    let mut w = KineticsWriter::new(
        out,
        KineticsFormat::Wide {
            first_year,
            end_year,
        },
    )?;
    for c in counts {
        w.write(c, catalog)?;
    }
    w.finish().map(|_| ())
}

/// Reads a long-format kinetics file back into one series per pair. Rows of
/// a pair must be consecutive and cover contiguous years.
pub fn read_kinetics_long<'c, R: Read + 'c>(
    stream: R,
    catalog: &'c Catalog,
) -> Result<impl Iterator<Item = Result<(CoCitedPair, YearSeries)>> + 'c> {
    let mut reader = csv::Reader::from_reader(stream);
    if reader.headers()?.iter().collect::<Vec<_>>() != KINETICS_LONG_HEADER {
        return Err(Error::parse(1, "expected header a,b,year,count"));
    }
    let mut rows = reader.into_records().peekable();
    Ok(std::iter::from_fn(move || {
        let first = rows.next()?;
        let read = || -> Result<(CoCitedPair, YearSeries)> {
            let rec = first?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let pair = resolve_pair(catalog, &rec[0], &rec[1], line)?;
            let start: i32 = field(&rec, 2, line)?;
            if start != pair.first_possible_year {
                return Err(Error::Data(format!(
                    "line {line}: series starts {start}, first possible year is {}",
                    pair.first_possible_year
                )));
            }
            let mut counts = vec![field::<u32>(&rec, 3, line)?];
            while let Some(Ok(next)) = rows.peek() {
                if next[0] != rec[0] || next[1] != rec[1] {
                    break;
                }
                let next = rows.next().unwrap()?;
                let line = next.position().map(|p| p.line()).unwrap_or(0);
                let year: i32 = field(&next, 2, line)?;
                if year != start + counts.len() as i32 {
                    return Err(Error::Data(format!("line {line}: non-contiguous year {year}")));
                }
                counts.push(field(&next, 3, line)?);
            }
            Ok((pair, YearSeries::new(start, counts)?))
        };
        Some(read())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_nodelist;

    fn catalog() -> Catalog {
        parse_nodelist("id,year,type,subjects\nA,1990,article,\nB,1992,article,\nC,1993,article,\n".as_bytes())
            .unwrap()
    }

    fn count(cat: &Catalog, a: &str, b: &str, counts: &[u32]) -> PairCount {
        let pair = CoCitedPair::new(cat.lookup(a).unwrap(), cat.lookup(b).unwrap(), cat).unwrap();
        PairCount {
            pair,
            total: counts.iter().map(|&c| c as u64).sum(),
            series: YearSeries::new(pair.first_possible_year, counts.to_vec()).unwrap(),
        }
    }

    #[test]
    fn long_kinetics_roundtrip() {
        let cat = catalog();
        let counts = vec![count(&cat, "A", "B", &[1, 0, 2]), count(&cat, "A", "C", &[0, 4])];
        let mut buf = Vec::new();
        write_kinetics_long(&mut buf, &counts, &cat).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "a,b,year,count\nA,B,1992,1\nA,B,1993,0\nA,B,1994,2\nA,C,1993,0\nA,C,1994,4\n");
        let back: Vec<_> = read_kinetics_long(buf.as_slice(), &cat).unwrap().map(Result::unwrap).collect();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, counts[0].series);
        assert_eq!(back[1].0, counts[1].pair);
    }

    #[test]
    fn wide_kinetics_layout() {
        let cat = catalog();
        let counts = vec![count(&cat, "A", "B", &[1, 0, 2]), count(&cat, "A", "C", &[0, 4])];
        let mut buf = Vec::new();
        write_kinetics_wide(&mut buf, &counts, &cat, 1992, 1994).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b,first_possible_year,1992,1993,1994\nA,B,1992,1,0,2\nA,C,1993,,0,4\n"
        );
    }

    #[test]
    fn pairs_file_is_validated() {
        let cat = catalog();
        let ok: Vec<_> = read_pairs_csv("a,b,first_possible_year\nA,B,1992\n".as_bytes(), &cat)
            .unwrap()
            .collect();
        assert!(ok[0].is_ok());
        let bad: Vec<_> = read_pairs_csv("a,b,first_possible_year\nB,A,1992\nA,B,1990\nA,Q,1990\n".as_bytes(), &cat)
            .unwrap()
            .collect();
        assert!(bad.iter().all(|r| r.is_err()));
    }

    #[test]
    fn frequencies_roundtrip() {
        let cat = catalog();
        let freqs = vec![count(&cat, "A", "B", &[1, 0, 2]).frequency(), count(&cat, "B", "C", &[7]).frequency()];
        let mut buf = Vec::new();
        write_frequencies_csv(&mut buf, &freqs, &cat).unwrap();
        let back: Vec<_> = read_frequencies_csv(buf.as_slice(), &cat).unwrap().map(Result::unwrap).collect();
        assert_eq!(back, freqs);
    }

    #[test]
    fn gap_in_kinetics_rejected() {
        let cat = catalog();
        let text = "a,b,year,count\nA,B,1992,1\nA,B,1994,2\n";
        let rows: Vec<_> = read_kinetics_long(text.as_bytes(), &cat).unwrap().collect();
        assert!(rows[0].is_err());
    }
}
