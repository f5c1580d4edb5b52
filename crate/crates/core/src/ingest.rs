//! Citation graph ingestion: nodelist/edgelist parsing, reference curation
//! and source-article selection.
//!
//! Publications are stored in a [`Catalog`] sorted by the byte order of their
//! identifiers, so a [`NodeIx`] compares exactly like the identifier it stands
//! for. Everything downstream (pair canonicalisation, spill records, output
//! ordering) relies on that.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Dense index of a publication inside a [`Catalog`].
pub type NodeIx = u32;

pub const NODELIST_HEADER: [&str; 4] = ["id", "year", "type", "subjects"];
pub const EDGELIST_HEADER: [&str; 2] = ["citing_id", "cited_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub id: String,
    pub year: Option<i32>,
    pub pub_type: String,
    /// Sorted, duplicate-free subject-area codes.
    pub subject_codes: Vec<String>,
}

impl Publication {
    pub fn new(id: impl Into<String>, year: Option<i32>, pub_type: impl Into<String>) -> Self {
        Publication {
            id: id.into(),
            year,
            pub_type: pub_type.into(),
            subject_codes: Vec::new(),
        }
    }

    pub fn with_subjects<I, S>(mut self, codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.subject_codes = normalize_codes(codes.into_iter().map(Into::into));
        self
    }
}

pub(crate) fn normalize_codes(codes: impl Iterator<Item = String>) -> Vec<String> {
    let mut codes: Vec<String> = codes
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    codes.sort();
    codes.dedup();
    codes
}

/// Publications keyed by identifier, stored in identifier byte order.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pubs: Vec<Publication>,
    index: HashMap<String, NodeIx>,
}

impl Catalog {
    pub fn from_publications(mut pubs: Vec<Publication>) -> Result<Self> {
        if pubs.len() > NodeIx::MAX as usize {
            return Err(Error::Data(format!(
                "catalog of {} publications exceeds index capacity",
                pubs.len()
            )));
        }
        for p in &pubs {
            if p.id.is_empty() {
                return Err(Error::Integrity("empty publication id".into()));
            }
            if matches!(p.year, Some(y) if y <= 0) {
                return Err(Error::Integrity(format!(
                    "publication {} has non-positive year",
                    p.id
                )));
            }
        }
        pubs.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = pubs.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Integrity(format!("duplicate id {}", w[0].id)));
        }
        let index = pubs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i as NodeIx))
            .collect();
        Ok(Catalog { pubs, index })
    }

    pub fn len(&self) -> usize {
        self.pubs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pubs.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Option<NodeIx> {
        self.index.get(id).copied()
    }

    pub fn get(&self, ix: NodeIx) -> &Publication {
        &self.pubs[ix as usize]
    }

    pub fn by_id(&self, id: &str) -> Option<&Publication> {
        self.lookup(id).map(|ix| self.get(ix))
    }

    pub fn id(&self, ix: NodeIx) -> &str {
        &self.pubs[ix as usize].id
    }

    pub fn year(&self, ix: NodeIx) -> Option<i32> {
        self.pubs[ix as usize].year
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeIx, &Publication)> {
        self.pubs.iter().enumerate().map(|(i, p)| (i as NodeIx, p))
    }

    /// Number of publications per known year.
    pub fn year_counts(&self) -> BTreeMap<i32, usize> {
        let mut counts = BTreeMap::new();
        for y in self.pubs.iter().filter_map(|p| p.year) {
            *counts.entry(y).or_default() += 1;
        }
        counts
    }

    /// Replaces the subject codes of the listed publications. Unknown ids are
    /// returned so the caller can report them.
    pub fn override_subjects(&mut self, overrides: &[(String, Vec<String>)]) -> Vec<String> {
        let mut unknown = Vec::new();
        for (id, codes) in overrides {
            match self.lookup(id) {
                Some(ix) => self.pubs[ix as usize].subject_codes = codes.clone(),
                None => unknown.push(id.clone()),
            }
        }
        unknown
    }
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::parse(
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

fn csv_reader<R: Read>(stream: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(stream)
}

fn parse_year(field: &str, line: u64) -> Result<Option<i32>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    match field.parse::<i32>() {
        Ok(y) if y > 0 => Ok(Some(y)),
        Ok(y) => Err(Error::parse(line, format!("year must be positive, found {y}"))),
        Err(_) => Err(Error::parse(line, format!("non-integer year {field:?}"))),
    }
}

/// Parses a `id,year,type,subjects` nodelist. `subjects` is pipe-separated
/// and may be empty; an empty `year` marks a publication without a date.
pub fn parse_nodelist<R: Read>(stream: R) -> Result<Catalog> {
    let mut reader = csv_reader(stream);
    check_header(&mut reader, &NODELIST_HEADER)?;
    let mut pubs = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record[0].trim();
        if id.is_empty() {
            return Err(Error::parse(line, "empty id"));
        }
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(Error::Integrity(format!(
                "duplicate id {id} on lines {first} and {line}"
            )));
        }
        let year = parse_year(&record[1], line)?;
        let codes = normalize_codes(record[3].split('|').map(str::to_string));
        pubs.push(Publication {
            id: id.to_string(),
            year,
            pub_type: record[2].trim().to_string(),
            subject_codes: codes,
        });
    }
    Catalog::from_publications(pubs)
}

/// Parses an `id,subjects` file used to override the nodelist subject codes.
pub fn parse_subject_overrides<R: Read>(stream: R) -> Result<Vec<(String, Vec<String>)>> {
    let mut reader = csv_reader(stream);
    check_header(&mut reader, &["id", "subjects"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = record[0].trim();
        if id.is_empty() {
            return Err(Error::parse(line, "empty id"));
        }
        out.push((
            id.to_string(),
            normalize_codes(record[1].split('|').map(str::to_string)),
        ));
    }
    Ok(out)
}

/// One row of an edgelist before curation. Endpoints missing from the
/// catalog keep `None` indices and are dropped by [`curate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub citing: String,
    pub cited: String,
    pub citing_ix: Option<NodeIx>,
    pub cited_ix: Option<NodeIx>,
}

impl RawEdge {
    pub fn resolve(citing: &str, cited: &str, catalog: &Catalog) -> Self {
        RawEdge {
            citing: citing.to_string(),
            cited: cited.to_string(),
            citing_ix: catalog.lookup(citing),
            cited_ix: catalog.lookup(cited),
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.citing_ix.is_some() && self.cited_ix.is_some()
    }
}

/// Parses a `citing_id,cited_id` edgelist, keeping input order.
pub fn parse_edgelist<R: Read>(stream: R, catalog: &Catalog) -> Result<Vec<RawEdge>> {
    let mut reader = csv_reader(stream);
    check_header(&mut reader, &EDGELIST_HEADER)?;
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record?;
        edges.push(RawEdge::resolve(record[0].trim(), record[1].trim(), catalog));
    }
    Ok(edges)
}

/// Tally of what [`curate`] did with each input edge. Every input edge lands
/// in exactly one bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CurationReport {
    pub dropped_unresolved_refs: u64,
    pub dropped_self_citations: u64,
    pub dropped_missing_year: u64,
    pub dropped_future_refs: u64,
    pub collapsed_duplicates: u64,
    pub retained_edges: u64,
}

impl CurationReport {
    pub fn input_edges(&self) -> u64 {
        self.dropped_unresolved_refs
            + self.dropped_self_citations
            + self.dropped_missing_year
            + self.dropped_future_refs
            + self.collapsed_duplicates
            + self.retained_edges
    }

    pub fn rows(&self) -> [(&'static str, u64); 7] {
        [
            ("input_edges", self.input_edges()),
            ("dropped_unresolved_refs", self.dropped_unresolved_refs),
            ("dropped_self_citations", self.dropped_self_citations),
            ("dropped_missing_year", self.dropped_missing_year),
            ("dropped_future_refs", self.dropped_future_refs),
            ("collapsed_duplicates", self.collapsed_duplicates),
            ("retained_edges", self.retained_edges),
        ]
    }

    /// Writes the report as `metric,count` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "count"])?;
        for (metric, count) in self.rows() {
            w.write_record([metric, &count.to_string()])?;
        }
        w.flush().map_err(|e| Error::resource("curation report", e))?;
        Ok(())
    }
}

/// A curated citation graph. Reference lists are sorted and duplicate free;
/// every edge satisfies `cited.year <= citing.year` and `citing != cited`.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    catalog: Catalog,
    refs: Vec<Vec<NodeIx>>,
    edge_count: usize,
}

impl CitationGraph {
    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn into_catalog(self) -> Catalog {
        self.catalog
    }

    /// Curated references of `citing`, in ascending order.
    pub fn references(&self, citing: NodeIx) -> &[NodeIx] {
        &self.refs[citing as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeIx, NodeIx)> + '_ {
        self.refs
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&c| (i as NodeIx, c)))
    }

    /// Curated edges in raw form, e.g. to re-run curation.
    pub fn to_raw_edges(&self) -> Vec<RawEdge> {
        self.edges()
            .map(|(a, b)| RawEdge {
                citing: self.catalog.id(a).to_string(),
                cited: self.catalog.id(b).to_string(),
                citing_ix: Some(a),
                cited_ix: Some(b),
            })
            .collect()
    }

    /// Number of curated citations received by each publication.
    pub fn citation_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.catalog.len()];
        for (_, cited) in self.edges() {
            counts[cited as usize] += 1;
        }
        counts
    }
}

/// Applies the reference curation rules. Checks run in a fixed order
/// (unresolved, self-citation, missing year, future reference, duplicate) so
/// each dropped edge is counted once.
pub fn curate(edges: &[RawEdge], catalog: Catalog) -> (CitationGraph, CurationReport) {
    let mut report = CurationReport::default();
    let mut refs: Vec<Vec<NodeIx>> = vec![Vec::new(); catalog.len()];
    for edge in edges {
        let (Some(citing), Some(cited)) = (edge.citing_ix, edge.cited_ix) else {
            report.dropped_unresolved_refs += 1;
            continue;
        };
        if citing == cited {
            report.dropped_self_citations += 1;
            continue;
        }
        let (Some(citing_year), Some(cited_year)) = (catalog.year(citing), catalog.year(cited))
        else {
            report.dropped_missing_year += 1;
            continue;
        };
        if cited_year > citing_year {
            report.dropped_future_refs += 1;
            continue;
        }
        refs[citing as usize].push(cited);
    }
    let mut edge_count = 0;
    for list in &mut refs {
        let before = list.len();
        list.sort_unstable();
        list.dedup();
        report.collapsed_duplicates += (before - list.len()) as u64;
        edge_count += list.len();
    }
    report.retained_edges = edge_count as u64;
    (
        CitationGraph {
            catalog,
            refs,
            edge_count,
        },
        report,
    )
}

/// Inclusive range of publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Self {
        YearWindow { start, end }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

/// Publications of type `pub_type`, published inside `window`, with at
/// least `min_refs` curated references. Returned in catalog order.
pub fn select_source_articles(
    graph: &CitationGraph,
    window: YearWindow,
    min_refs: usize,
    pub_type: &str,
) -> Result<Vec<NodeIx>> {
    if window.start > window.end {
        return Err(Error::Config(format!(
            "empty year window {}..={}",
            window.start, window.end
        )));
    }
    if min_refs < 2 {
        return Err(Error::Config(format!("min_refs must be >= 2, got {min_refs}")));
    }
    Ok(graph
        .catalog()
        .iter()
        .filter(|(ix, p)| {
            p.pub_type == pub_type
                && p.year.is_some_and(|y| window.contains(y))
                && graph.references(*ix).len() >= min_refs
        })
        .map(|(ix, _)| ix)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(text: &str) -> Catalog {
        parse_nodelist(text.as_bytes()).unwrap()
    }

    const NODES: &str = "id,year,type,subjects\n\
        A,1990,article,BGMB|MED\n\
        B,1980,article,\n\
        C,1995,review,PHY\n\
        D,,article,CHE\n";

    #[test]
    fn parses_three_rows() {
        let cat = catalog("id,year,type,subjects\nP1,1990,article,\nP2,1991,article,MED\nP3,1992,review,PHY|CHE\n");
        assert_eq!(cat.len(), 3);
        assert_eq!(cat.by_id("P3").unwrap().subject_codes, vec!["CHE", "PHY"]);
    }

    #[test]
    fn duplicate_id_names_the_id() {
        let err = parse_nodelist("id,year,type,subjects\nX,1990,article,\nX,1991,article,\n".as_bytes())
            .unwrap_err();
        assert!(matches!(&err, Error::Integrity(m) if m.contains("X")), "{err}");
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = parse_nodelist("id,year,type,subjects\nX,1990,article,\nY,1990\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_nodelist("id,year,type,subjects\nX,19x0,article,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_nodelist("id,type\nX,article\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn missing_year_is_kept() {
        let cat = catalog(NODES);
        assert_eq!(cat.by_id("D").unwrap().year, None);
    }

    #[test]
    fn ids_are_indexed_in_byte_order() {
        let cat = catalog("id,year,type,subjects\nb,1990,article,\nB,1990,article,\na10,1990,article,\na2,1990,article,\n");
        let ids: Vec<&str> = cat.iter().map(|(_, p)| p.id.as_str()).collect();
        assert_eq!(ids, vec!["B", "a10", "a2", "b"]);
    }

    #[test]
    fn edgelist_header_only_is_empty() {
        let cat = catalog(NODES);
        assert!(parse_edgelist("citing_id,cited_id\n".as_bytes(), &cat).unwrap().is_empty());
    }

    #[test]
    fn edgelist_keeps_unresolved_endpoints() {
        let cat = catalog(NODES);
        let edges = parse_edgelist("citing_id,cited_id\nA,B\nA,ZZZ\n".as_bytes(), &cat).unwrap();
        assert_eq!(edges.len(), 2);
        assert!(edges[0].is_resolved());
        assert!(!edges[1].is_resolved());
        assert_eq!(edges[1].cited, "ZZZ");
    }

    #[test]
    fn edgelist_malformed_row() {
        let cat = catalog(NODES);
        let err = parse_edgelist("citing_id,cited_id\nA,B\nA\n".as_bytes(), &cat).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn curation_buckets() {
        let cat = catalog(NODES);
        let text = "citing_id,cited_id\nA,A\nA,C\nA,D\nD,B\nA,Q\nA,B\nA,B\nC,A\n";
        let edges = parse_edgelist(text.as_bytes(), &cat).unwrap();
        let (graph, report) = curate(&edges, cat);
        assert_eq!(report.dropped_self_citations, 1);
        assert_eq!(report.dropped_future_refs, 1);
        assert_eq!(report.dropped_missing_year, 2);
        assert_eq!(report.dropped_unresolved_refs, 1);
        assert_eq!(report.collapsed_duplicates, 1);
        assert_eq!(report.retained_edges, 2);
        assert_eq!(report.input_edges(), 8);
        assert_eq!(graph.edge_count(), 2);
    }

    #[test]
    fn future_reference_dropped() {
        let cat = catalog("id,year,type,subjects\nX,1990,article,\nY,1995,article,\n");
        let edges = parse_edgelist("citing_id,cited_id\nX,Y\n".as_bytes(), &cat).unwrap();
        let (graph, report) = curate(&edges, cat);
        assert_eq!(report.dropped_future_refs, 1);
        assert_eq!(graph.edge_count(), 0);
    }

    #[test]
    fn curation_report_csv() {
        let report = CurationReport {
            dropped_self_citations: 1,
            retained_edges: 4,
            ..Default::default()
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,count\ninput_edges,5\n"));
        assert!(text.contains("dropped_self_citations,1\n"));
    }

    #[test]
    fn selection_rules() {
        let mut nodes = String::from("id,year,type,subjects\nS1990,1990,article,\nS1984,1984,article,\nR1990,1990,review,\n");
        for i in 0..50 {
            nodes.push_str(&format!("r{i:02},1980,article,\n"));
        }
        let cat = catalog(&nodes);
        let mut edges = String::from("citing_id,cited_id\n");
        for i in 0..5 {
            edges.push_str(&format!("S1990,r{i:02}\nR1990,r{i:02}\n"));
        }
        for i in 0..50 {
            edges.push_str(&format!("S1984,r{i:02}\n"));
        }
        let raw = parse_edgelist(edges.as_bytes(), &cat).unwrap();
        let (graph, _) = curate(&raw, cat);
        let w = YearWindow::new(1985, 1995);
        let sel = select_source_articles(&graph, w, 5, "article").unwrap();
        let ids: Vec<&str> = sel.iter().map(|&i| graph.catalog().id(i)).collect();
        assert_eq!(ids, vec!["S1990"]);
        assert!(select_source_articles(&graph, w, 6, "article").unwrap().is_empty());
        assert!(matches!(
            select_source_articles(&graph, YearWindow::new(1995, 1985), 5, "article"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            select_source_articles(&graph, w, 1, "article"),
            Err(Error::Config(_))
        ));
    }
}
