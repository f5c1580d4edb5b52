//! Generate a seeded corpus, run every stage in a temporary workdir and
//! compare the detections with the planting manifest.
//!
//!     cargo run --release --example synthetic_pipeline

use std::collections::BTreeSet;
use std::fs;

use cocite::pipeline::{self, Command, PipelineConfig};

fn pairs(path: &std::path::Path, kind: Option<&str>) -> BTreeSet<(String, String)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| kind.is_none_or(|k| f[col("kind")] == k))
        .map(|f| (f[col("a")].to_string(), f[col("b")].to_string()))
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path().display().to_string();
    let text = format!(
        "gen.out = {root}/corpus\nnodelist = {root}/corpus/nodelist.csv\nedgelist = {root}/corpus/edgelist.csv\n\
         workdir = {root}/work\nend_year = 2018\ngen.publications = 30000\ngen.edges = 250000\n"
    );
    let cfg = PipelineConfig::parse(&text)?;
    let corpus = pipeline::generate(&cfg)?;
    println!("{} publications, {} edges", corpus.publication_count(), corpus.edge_count());

    let report = pipeline::run(&cfg, Command::All, false)?;
    for (stage, took) in &report.stages {
        println!("{:<9} {took:.2?}", stage.name());
    }

    let work = dir.path().join("work");
    let planted = dir.path().join("corpus/planted.csv");
    for (kind, file) in [("delayed", "delayed.csv"), ("flash_in_pan", "flash_in_pan.csv")] {
        let truth = pairs(&planted, Some(kind));
        let found = pairs(&work.join(file), None);
        let hit = truth.intersection(&found).count();
        println!("{kind:<13} planted {} found {} matched {hit}", truth.len(), found.len());
    }
    Ok(())
}
