//! Parse a tiny nodelist/edgelist, curate it and pick source articles.
//!
//!     cargo run --example ingest_and_curate

use cocite::ingest::{curate, parse_edgelist, parse_nodelist, select_source_articles, YearWindow};

const NODES: &str = "id,year,type,subjects
W1,1990,article,PHYS
W2,1991,article,PHYS|MATH
R1,1975,article,CHEM
R2,1980,review,
R3,1985,article,MATH
R4,,article,MED
";

const EDGES: &str = "citing_id,cited_id
W1,R1
W1,R2
W1,R3
W1,R3
W1,W1
W1,W2
W2,R1
W2,R3
W2,R4
W2,GHOST
";

fn main() -> cocite::Result<()> {
    let catalog = parse_nodelist(NODES.as_bytes())?;
    let raw = parse_edgelist(EDGES.as_bytes(), &catalog)?;
    let (graph, report) = curate(&raw, catalog);

    for (metric, count) in report.rows() {
        println!("{metric:<24} {count}");
    }

    let sources = select_source_articles(&graph, YearWindow::new(1990, 1991), 2, "article")?;
    for s in sources {
        let refs: Vec<&str> = graph.references(s).iter().map(|&r| graph.catalog().id(r)).collect();
        println!("{} cites {}", graph.catalog().id(s), refs.join(", "));
    }
    Ok(())
}
