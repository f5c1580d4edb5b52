#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cocite::ingest::{curate, parse_edgelist, parse_nodelist, CitationGraph, CurationReport};

/// A random citation graph with its valid edges known independently of the
/// library's curation.
pub struct RandomGraph {
    pub nodelist: String,
    pub edgelist: String,
    pub ids: Vec<String>,
    pub years: Vec<i32>,
    pub types: Vec<&'static str>,
    /// Valid, distinct (citing, cited) index pairs.
    pub valid: BTreeSet<(usize, usize)>,
    /// Rows that curation must drop or collapse.
    pub noise_rows: usize,
}

pub fn random_graph(seed: u64, nodes: usize, refs_per_node: usize) -> RandomGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // shuffled id strings so catalog order differs from generation order
    let mut ids: Vec<String> = (0..nodes).map(|i| format!("N{:05}x{}", i, rng.gen_range(0..100))).collect();
    let years: Vec<i32> = (0..nodes).map(|_| rng.gen_range(1960..=2018)).collect();
    let types: Vec<&'static str> = (0..nodes)
        .map(|_| if rng.gen_bool(0.85) { "article" } else { "review" })
        .collect();
    ids.reverse();

    let mut by_year: Vec<usize> = (0..nodes).collect();
    by_year.sort_by_key(|&i| years[i]);
    let mut valid = BTreeSet::new();
    let mut rows = Vec::new();
    for &i in &by_year {
        let eligible: Vec<usize> = by_year
            .iter()
            .copied()
            .take_while(|&j| years[j] <= years[i])
            .filter(|&j| j != i)
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let k = rng.gen_range(0..=2 * refs_per_node).min(eligible.len());
        for _ in 0..k {
            let j = eligible[rng.gen_range(0..eligible.len())];
            if valid.insert((i, j)) {
                rows.push((ids[i].clone(), ids[j].clone()));
            }
        }
    }
    let mut noise_rows = 0;
    for _ in 0..(valid.len() / 50).max(3) {
        let i = rng.gen_range(0..nodes);
        let j = rng.gen_range(0..nodes);
        let row = match rng.gen_range(0..3) {
            0 => (ids[i].clone(), ids[i].clone()),
            1 => (ids[i].clone(), format!("missing-{j}")),
            _ => {
                if years[j] > years[i] {
                    (ids[i].clone(), ids[j].clone())
                } else {
                    (ids[i].clone(), ids[i].clone())
                }
            }
        };
        rows.push(row);
        noise_rows += 1;
    }
    // a few duplicates of valid rows
    for _ in 0..3 {
        if let Some(&(i, j)) = valid.iter().nth(rng.gen_range(0..valid.len().max(1))) {
            rows.push((ids[i].clone(), ids[j].clone()));
            noise_rows += 1;
        }
    }
    for k in (1..rows.len()).rev() {
        rows.swap(k, rng.gen_range(0..=k));
    }

    let mut nodelist = String::from("id,year,type,subjects\n");
    for i in 0..nodes {
        writeln!(nodelist, "{},{},{},", ids[i], years[i], types[i]).unwrap();
    }
    let mut edgelist = String::from("citing_id,cited_id\n");
    for (a, b) in &rows {
        writeln!(edgelist, "{a},{b}").unwrap();
    }
    RandomGraph {
        nodelist,
        edgelist,
        ids,
        years,
        types,
        valid,
        noise_rows,
    }
}

impl RandomGraph {
    pub fn curated(&self) -> (CitationGraph, CurationReport) {
        let cat = parse_nodelist(self.nodelist.as_bytes()).unwrap();
        let raw = parse_edgelist(self.edgelist.as_bytes(), &cat).unwrap();
        curate(&raw, cat)
    }

    /// Reference sets per citing node, from the generator's own edge list.
    pub fn references(&self) -> Vec<Vec<usize>> {
        let mut refs = vec![Vec::new(); self.ids.len()];
        for &(i, j) in &self.valid {
            refs[i].push(j);
        }
        refs
    }

    /// Pairs of ids reachable from articles in `[start, end]` with at
    /// least `min_refs` references, as canonically ordered id strings.
    pub fn enumerable_pairs(&self, start: i32, end: i32, min_refs: usize) -> BTreeSet<(String, String)> {
        let refs = self.references();
        let mut out = BTreeSet::new();
        for (i, r) in refs.iter().enumerate() {
            if self.types[i] != "article" || !(start..=end).contains(&self.years[i]) || r.len() < min_refs {
                continue;
            }
            for x in 0..r.len() {
                for y in x + 1..r.len() {
                    let (a, b) = (&self.ids[r[x]], &self.ids[r[y]]);
                    out.insert(if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) });
                }
            }
        }
        out
    }
}

/// Brute force counting: scans every citing publication's reference set
/// for both members, bucketing hits by citing year.
pub struct ScanOracle {
    refs: Vec<Vec<usize>>,
    years: Vec<i32>,
    index: HashMap<String, usize>,
}

impl ScanOracle {
    pub fn new(g: &RandomGraph) -> Self {
        ScanOracle {
            refs: g.references(),
            years: g.years.clone(),
            index: g.ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect(),
        }
    }

    pub fn citations(&self, id: &str) -> u64 {
        let ix = self.index[id];
        self.refs.iter().filter(|r| r.contains(&ix)).count() as u64
    }

    pub fn count(&self, a: &str, b: &str) -> (u64, BTreeMap<i32, u64>) {
        let (ia, ib) = (self.index[a], self.index[b]);
        let mut total = 0;
        let mut by_year = BTreeMap::new();
        for (i, refs) in self.refs.iter().enumerate() {
            if refs.contains(&ia) && refs.contains(&ib) {
                total += 1;
                *by_year.entry(self.years[i]).or_insert(0) += 1;
            }
        }
        (total, by_year)
    }
}
