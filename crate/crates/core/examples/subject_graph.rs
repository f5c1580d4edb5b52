//! Subject-area co-occurrence graph of a small cohort, as DOT and GraphML.
//!
//!     cargo run --example subject_graph

use cocite::ingest::parse_nodelist;
use cocite::subjects::{build_subject_graph, export_graph, GraphFormat};

const NODES: &str = "id,year,type,subjects
A,1970,article,PHYS
B,1972,article,MATH|PHYS
C,1975,article,CHEM
D,1979,article,
";

fn main() -> cocite::Result<()> {
    let catalog = parse_nodelist(NODES.as_bytes())?;
    let cohort = [("A", "B"), ("A", "C"), ("C", "D")];
    let graph = build_subject_graph(cohort, &catalog)?;
    print!("{}", export_graph(&graph, GraphFormat::Dot)?);
    println!();
    print!("{}", export_graph(&graph, GraphFormat::GraphMl)?);
    Ok(())
}
