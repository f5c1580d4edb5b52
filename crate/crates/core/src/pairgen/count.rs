//! Co-citation counting by intersecting the citing sets of the two pair
//! members.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use super::{CoCitedPair, PairKey};
use crate::error::{Error, Result};
use crate::ingest::{CitationGraph, NodeIx};
use crate::kinetics::YearSeries;

/// Above this size ratio the smaller citing list is binary-searched into the
/// larger one instead of merged with it.
const GALLOP_RATIO: usize = 32;

/// For each publication, the sorted list of publications citing it, with the
/// citing year alongside.
#[derive(Debug, Clone)]
pub struct CitingIndex {
    offsets: Vec<usize>,
    citing: Vec<NodeIx>,
    citing_year: Vec<i32>,
    years: Vec<Option<i32>>,
}

impl CitingIndex {
    pub fn build(graph: &CitationGraph) -> Self {
        let catalog = graph.catalog();
        let n = catalog.len();
        let mut offsets = vec![0usize; n + 1];
        for (_, cited) in graph.edges() {
            offsets[cited as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut citing = vec![0; graph.edge_count()];
        let mut citing_year = vec![0; graph.edge_count()];
        // edges() walks citing publications in ascending order, so every
        // citing list comes out sorted
        for (from, cited) in graph.edges() {
            let slot = &mut fill[cited as usize];
            citing[*slot] = from;
            citing_year[*slot] = catalog.year(from).expect("curated edges have years");
            *slot += 1;
        }
        CitingIndex {
            offsets,
            citing,
            citing_year,
            years: catalog.iter().map(|(_, p)| p.year).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    fn range(&self, cited: NodeIx) -> Result<std::ops::Range<usize>> {
        let i = cited as usize;
        if i >= self.years.len() {
            return Err(Error::Contract(format!("publication index {cited} not in graph")));
        }
        Ok(self.offsets[i]..self.offsets[i + 1])
    }

    /// Publications citing `cited`, ascending.
    pub fn citing(&self, cited: NodeIx) -> &[NodeIx] {
        self.range(cited).map(|r| &self.citing[r]).unwrap_or(&[])
    }

    pub fn citation_count(&self, cited: NodeIx) -> usize {
        self.citing(cited).len()
    }

    /// Calls `f` with the citing year of every publication citing both
    /// members of `key`.
    fn for_each_cociting(&self, key: PairKey, mut f: impl FnMut(i32)) -> Result<()> {
        let ra = self.range(key.a)?;
        let rb = self.range(key.b)?;
        let (small, large) = if ra.len() <= rb.len() { (ra, rb) } else { (rb, ra) };
        let small_years = &self.citing_year[small.clone()];
        let small = &self.citing[small];
        let large = &self.citing[large];
        if small.is_empty() {
            return Ok(());
        }
        if large.len() / small.len() >= GALLOP_RATIO {
            let mut lo = 0;
            for (i, x) in small.iter().enumerate() {
                match large[lo..].binary_search(x) {
                    Ok(p) => {
                        f(small_years[i]);
                        lo += p + 1;
                    }
                    Err(p) => lo += p,
                }
                if lo >= large.len() {
                    break;
                }
            }
        } else {
            let (mut i, mut j) = (0, 0);
            while i < small.len() && j < large.len() {
                match small[i].cmp(&large[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        f(small_years[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFrequency {
    pub pair: CoCitedPair,
    pub total: u64,
}

/// Total and per-year co-citation counts of one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCount {
    pub pair: CoCitedPair,
    /// Distinct publications citing both members, any year.
    pub total: u64,
    /// Per-year counts from the first possible year through the end year.
    pub series: YearSeries,
}

impl PairCount {
    pub fn frequency(&self) -> PairFrequency {
        PairFrequency {
            pair: self.pair,
            total: self.total,
        }
    }
}

/// Number of distinct publications citing both members of `key`.
pub fn count_total(key: PairKey, index: &CitingIndex) -> Result<u64> {
    let mut total = 0;
    index.for_each_cociting(key, |_| total += 1)?;
    Ok(total)
}

/// Per-year co-citation counts from the pair's first possible year through
/// `end_year`, zero-filled. Co-citations after `end_year` are not counted.
pub fn count_yearly(pair: &CoCitedPair, index: &CitingIndex, end_year: i32) -> Result<YearSeries> {
    Ok(count_pair(pair, index, end_year)?.series)
}

/// Total and yearly counts from a single intersection.
pub fn count_pair(pair: &CoCitedPair, index: &CitingIndex, end_year: i32) -> Result<PairCount> {
    let mut series = YearSeries::zeros(pair.first_possible_year, end_year)?;
    let mut total = 0;
    let mut early = None;
    index.for_each_cociting(pair.key, |year| {
        total += 1;
        if year < pair.first_possible_year {
            early = Some(year);
        } else {
            series.record(year);
        }
    })?;
    if let Some(year) = early {
        return Err(Error::Contract(format!(
            "co-citation in {year} precedes first possible year {}",
            pair.first_possible_year
        )));
    }
    Ok(PairCount {
        pair: *pair,
        total,
        series,
    })
}

/// Yearly citation counts of one publication from its publication year
/// through `end_year`.
pub fn citation_series(publication: NodeIx, index: &CitingIndex, end_year: i32) -> Result<YearSeries> {
    let r = index.range(publication)?;
    let start = index.years[publication as usize].ok_or_else(|| {
        Error::Contract(format!("publication index {publication} has no year"))
    })?;
    let mut series = YearSeries::zeros(start, end_year)?;
    for &year in &index.citing_year[r] {
        series.record(year);
    }
    Ok(series)
}

/// Counts `pairs` in batches of `batch` pairs spread over `partitions`
/// worker threads. Output order equals input order, so the result is the
/// same for every partition and batch setting.
pub fn count_parallel(
    pairs: &[CoCitedPair],
    index: &CitingIndex,
    end_year: i32,
    partitions: usize,
    batch: usize,
) -> Result<Vec<PairCount>> {
    if partitions == 0 || batch == 0 {
        return Err(Error::Config(format!(
            "partitions and batch must be >= 1 (got {partitions}, {batch})"
        )));
    }
    let count_batch = |b: usize, chunk: &[CoCitedPair]| -> Result<Vec<PairCount>> {
        chunk
            .iter()
            .map(|p| count_pair(p, index, end_year))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Batch {
                batch: b,
                source: Box::new(e),
            })
    };

    let chunks: Vec<&[CoCitedPair]> = pairs.chunks(batch).collect();
    if partitions == 1 || chunks.len() <= 1 {
        let mut out = Vec::with_capacity(pairs.len());
        for (b, chunk) in chunks.into_iter().enumerate() {
            out.extend(count_batch(b, chunk)?);
        }
        return Ok(out);
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Vec<PairCount>>>>> =
        chunks.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..partitions.min(chunks.len()) {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::Relaxed);
                let Some(chunk) = chunks.get(b) else { break };
                let result = count_batch(b, chunk);
                let failed = result.is_err();
                *slots[b].lock().unwrap() = Some(result);
                if failed {
                    // stop handing out work; earlier batches still finish
                    next.fetch_max(chunks.len(), Ordering::Relaxed);
                    break;
                }
            });
        }
    });

    let mut out = Vec::with_capacity(pairs.len());
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(result) => out.extend(result?),
            None => break,
        }
    }
    if out.len() != pairs.len() {
        // a batch failed; the loop above returned it unless it was skipped
        return Err(Error::Contract("counting stopped before all batches ran".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{curate, parse_edgelist, parse_nodelist};

    fn graph(nodes: &str, edges: &str) -> CitationGraph {
        let cat = parse_nodelist(nodes.as_bytes()).unwrap();
        let raw = parse_edgelist(edges.as_bytes(), &cat).unwrap();
        curate(&raw, cat).0
    }

    const NODES: &str = "id,year,type,subjects\nA,1980,article,\nB,1985,article,\nC,1970,article,\nX,1985,article,\nY,1990,article,\nZ,1995,article,\n";

    fn pair(g: &CitationGraph, a: &str, b: &str) -> CoCitedPair {
        let c = g.catalog();
        CoCitedPair::new(c.lookup(a).unwrap(), c.lookup(b).unwrap(), c).unwrap()
    }

    #[test]
    fn no_common_citer_is_zero() {
        let g = graph(NODES, "citing_id,cited_id\nX,A\nY,B\n");
        let idx = CitingIndex::build(&g);
        assert_eq!(count_total(pair(&g, "A", "B").key, &idx).unwrap(), 0);
    }

    #[test]
    fn single_event_zero_filled() {
        let g = graph(NODES, "citing_id,cited_id\nX,A\nX,B\nY,A\n");
        let idx = CitingIndex::build(&g);
        let p = pair(&g, "A", "B");
        assert_eq!(p.first_possible_year, 1985);
        let s = count_yearly(&p, &idx, 1995).unwrap();
        assert_eq!(s.counts(), &[1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert!(matches!(count_yearly(&p, &idx, 1984), Err(Error::Config(_))));
    }

    #[test]
    fn yearly_sum_matches_total_within_horizon() {
        let g = graph(NODES, "citing_id,cited_id\nX,A\nX,C\nY,A\nY,C\nZ,A\nZ,C\n");
        let idx = CitingIndex::build(&g);
        let p = pair(&g, "A", "C");
        let c = count_pair(&p, &idx, 1990).unwrap();
        assert_eq!(c.total, 3);
        assert_eq!(c.series.total(), 2);
        assert_eq!(count_pair(&p, &idx, 2000).unwrap().series.total(), 3);
    }

    #[test]
    fn citation_series_counts_by_year() {
        let g = graph(NODES, "citing_id,cited_id\nX,A\nY,A\nZ,A\n");
        let idx = CitingIndex::build(&g);
        let s = citation_series(g.catalog().lookup("A").unwrap(), &idx, 1995).unwrap();
        assert_eq!(s.start_year(), 1980);
        assert_eq!(s.get(1985), Some(1));
        assert_eq!(s.total(), 3);
    }

    #[test]
    fn parallel_batch_failure_names_batch() {
        let g = graph(NODES, "citing_id,cited_id\nZ,A\nZ,B\nZ,C\nZ,Y\n");
        let idx = CitingIndex::build(&g);
        let pairs = vec![pair(&g, "A", "B"), pair(&g, "A", "C"), pair(&g, "A", "Y"), pair(&g, "B", "C")];
        // A-Y starts in 1990, past the 1989 horizon
        let err = count_parallel(&pairs, &idx, 1989, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Batch { batch: 2, .. }), "{err}");
        let ok = count_parallel(&pairs, &idx, 2000, 3, 1).unwrap();
        assert_eq!(ok, count_parallel(&pairs, &idx, 2000, 1, 10).unwrap());
        assert!(count_parallel(&pairs, &idx, 2000, 0, 1).is_err());
    }

    #[test]
    fn out_of_range_member_is_contract_violation() {
        let g = graph(NODES, "citing_id,cited_id\n");
        let idx = CitingIndex::build(&g);
        assert!(matches!(
            count_total(PairKey { a: 0, b: 99 }, &idx),
            Err(Error::Contract(_))
        ));
    }
}
