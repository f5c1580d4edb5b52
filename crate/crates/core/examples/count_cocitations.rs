//! Count total and yearly co-citations for a handful of pairs, serially and
//! with four partitions.
//!
//!     cargo run --example count_cocitations

use cocite::ingest::{curate, parse_edgelist, parse_nodelist};
use cocite::pairgen::{count_parallel, count_total, count_yearly, CitingIndex, CoCitedPair};

const NODES: &str = "id,year,type,subjects
A,1980,article,
B,1982,article,
C,1984,article,
X1,1990,article,
X2,1995,article,
X3,1995,article,
X4,2001,article,
";

const EDGES: &str = "citing_id,cited_id
X1,A
X1,B
X2,A
X2,B
X2,C
X3,A
X3,B
X4,B
X4,C
";

fn main() -> cocite::Result<()> {
    let catalog = parse_nodelist(NODES.as_bytes())?;
    let raw = parse_edgelist(EDGES.as_bytes(), &catalog)?;
    let (graph, _) = curate(&raw, catalog);
    let index = CitingIndex::build(&graph);
    let cat = graph.catalog();
    let ix = |id| cat.lookup(id).unwrap();

    let pairs = vec![
        CoCitedPair::new(ix("A"), ix("B"), cat)?,
        CoCitedPair::new(ix("A"), ix("C"), cat)?,
        CoCitedPair::new(ix("B"), ix("C"), cat)?,
    ];
    for p in &pairs {
        let (a, b) = p.ids(cat);
        let series = count_yearly(p, &index, 2002)?;
        let nonzero: Vec<String> = series.iter().filter(|(_, c)| *c > 0).map(|(y, c)| format!("{y}:{c}")).collect();
        println!("{a}-{b} total {} [{}]", count_total(p.key, &index)?, nonzero.join(" "));
    }

    let serial = count_parallel(&pairs, &index, 2002, 1, 1)?;
    let parallel = count_parallel(&pairs, &index, 2002, 4, 1)?;
    assert_eq!(serial, parallel);
    println!("partitions 1 and 4 agree");
    Ok(())
}
