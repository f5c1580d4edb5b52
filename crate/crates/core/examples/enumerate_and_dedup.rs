//! Enumerate co-cited pairs of several reference lists and deduplicate them
//! through the external sorter with a deliberately tiny memory budget.
//!
//!     cargo run --example enumerate_and_dedup

use cocite::pairgen::{dedup_pairs, enumerate_keys, CoCitedPair};
use cocite::synth::{SynthConfig, SyntheticCorpus};
use cocite::ingest::{curate, parse_edgelist, parse_nodelist, select_source_articles, YearWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SynthConfig {
        publications: 20_000,
        edges: 150_000,
        ..Default::default()
    })?;
    let (mut nodes, mut edges) = (Vec::new(), Vec::new());
    corpus.write_nodelist(&mut nodes)?;
    corpus.write_edgelist(&mut edges)?;
    let catalog = parse_nodelist(nodes.as_slice())?;
    let raw = parse_edgelist(edges.as_slice(), &catalog)?;
    let (graph, _) = curate(&raw, catalog);

    let sources = select_source_articles(&graph, YearWindow::new(1985, 1995), 5, "article")?;
    let emitted: usize = sources.iter().map(|&s| graph.references(s).len()).map(|n| n * (n - 1) / 2).sum();

    let spill = tempfile::tempdir()?;
    let keys = sources.iter().flat_map(|&s| enumerate_keys(graph.references(s)));
    let mut sorted = dedup_pairs(keys, 50_000, spill.path())?;
    let mut first = Vec::new();
    let mut unique = 0u64;
    for key in sorted.by_ref() {
        let key = key?;
        if first.len() < 5 {
            first.push(CoCitedPair::from_key(key, graph.catalog())?);
        }
        unique += 1;
    }
    let stats = sorted.stats();
    println!("{} source articles emitted {emitted} pairs", sources.len());
    println!("{unique} unique pairs after merging {} spilled runs", stats.spilled_runs);
    for p in first {
        let (a, b) = p.ids(graph.catalog());
        println!("  {a} + {b} (first possible {})", p.first_possible_year);
    }
    Ok(())
}
