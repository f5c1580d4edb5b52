//! Subject-area co-occurrence graph of a detected pair cohort.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::Catalog;

/// Code used for cohort members without any subject code.
pub const UNKNOWN_CODE: &str = "UNK";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubjectGraph {
    /// Code → number of distinct cohort articles carrying it.
    pub nodes: BTreeMap<String, u64>,
    /// Unordered code pair (stored sorted) → number of increments.
    pub edges: BTreeMap<(String, String), u64>,
    /// Distinct cohort articles that had no code and were counted as `UNK`.
    pub unknown_articles: u64,
}

impl SubjectGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_edge(&mut self, x: &str, y: &str, weight: u64) {
        let key = if x <= y {
            (x.to_string(), y.to_string())
        } else {
            (y.to_string(), x.to_string())
        };
        *self.edges.entry(key).or_insert(0) += weight;
    }
}

/// Builds the graph for `pairs` of publication ids. Every code of member `a`
/// combined with every code of member `b` increments one edge.
pub fn build_subject_graph<'a, I>(pairs: I, catalog: &Catalog) -> Result<SubjectGraph>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let unknown = vec![UNKNOWN_CODE.to_string()];
    let codes = |id: &str| -> Result<&[String]> {
        let p = catalog
            .by_id(id)
            .ok_or_else(|| Error::Contract(format!("cohort member {id} not in catalog")))?;
        Ok(if p.subject_codes.is_empty() {
            &unknown
        } else {
            &p.subject_codes
        })
    };

    let mut graph = SubjectGraph::default();
    let mut articles = BTreeSet::new();
    for (a, b) in pairs {
        let (ca, cb) = (codes(a)?, codes(b)?);
        articles.insert(a);
        articles.insert(b);
        for x in ca {
            for y in cb {
                graph.add_edge(x, y, 1);
            }
        }
    }
    for id in articles {
        let p = catalog.by_id(id).expect("checked above");
        if p.subject_codes.is_empty() {
            graph.unknown_articles += 1;
        }
        for code in codes(id)? {
            *graph.nodes.entry(code.clone()).or_insert(0) += 1;
        }
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "graphml" => Ok(GraphFormat::GraphMl),
            other => Err(Error::Config(format!("unsupported graph format {other:?}"))),
        }
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the graph with `weight` attributes on nodes and edges, in
/// lexicographic order.
pub fn export_graph(graph: &SubjectGraph, format: GraphFormat) -> Result<String> {
    if graph.is_empty() {
        return Err(Error::Data("cannot export an empty subject graph".into()));
    }
    let mut out = String::new();
    match format {
        GraphFormat::Dot => {
            out.push_str("graph subjects {\n");
            for (code, w) in &graph.nodes {
                writeln!(out, "  {} [weight={w}];", dot_quote(code)).unwrap();
            }
            for ((x, y), w) in &graph.edges {
                writeln!(out, "  {} -- {} [weight={w}];", dot_quote(x), dot_quote(y)).unwrap();
            }
            out.push_str("}\n");
        }
        GraphFormat::GraphMl => {
            out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            out.push_str("  <key id=\"nw\" for=\"node\" attr.name=\"weight\" attr.type=\"long\"/>\n");
            out.push_str("  <key id=\"ew\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n");
            out.push_str("  <graph id=\"subjects\" edgedefault=\"undirected\">\n");
            for (code, w) in &graph.nodes {
                writeln!(
                    out,
                    "    <node id=\"{}\"><data key=\"nw\">{w}</data></node>",
                    xml_escape(code)
                )
                .unwrap();
            }
            for ((x, y), w) in &graph.edges {
                writeln!(
                    out,
                    "    <edge source=\"{}\" target=\"{}\"><data key=\"ew\">{w}</data></edge>",
                    xml_escape(x),
                    xml_escape(y)
                )
                .unwrap();
            }
            out.push_str("  </graph>\n</graphml>\n");
        }
    }
    Ok(out)
}
