use std::collections::BTreeMap;

use proptest::prelude::*;

use cocite::ingest::{parse_nodelist, Catalog, Publication};
use cocite::subjects::{build_subject_graph, export_graph, GraphFormat, SubjectGraph, UNKNOWN_CODE};
use cocite::synth::{PlantedKind, SynthConfig, SyntheticCorpus, SUBJECT_CODES};

const CODES: [&str; 5] = ["AGRI", "CHEM", "MATH", "MED", "PHYS"];

fn catalog(subjects: &[Vec<usize>]) -> Catalog {
    Catalog::from_publications(
        subjects
            .iter()
            .enumerate()
            .map(|(i, s)| Publication::new(format!("p{i:02}"), Some(1990), "article").with_subjects(s.iter().map(|&k| CODES[k])))
            .collect(),
    )
    .unwrap()
}

fn setup() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<(usize, usize)>)> {
    prop::collection::vec(prop::collection::btree_set(0..CODES.len(), 0..3), 2..20).prop_flat_map(|subjects| {
        let n = subjects.len();
        let subjects: Vec<Vec<usize>> = subjects.into_iter().map(|s| s.into_iter().collect()).collect();
        let pairs = prop::collection::vec((0..n, 0..n), 1..30)
            .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>())
            .prop_filter("need a pair", |v| !v.is_empty());
        (Just(subjects), pairs)
    })
}

/// Parses the DOT export back into node and edge weights.
fn parse_dot(text: &str) -> SubjectGraph {
    let mut g = SubjectGraph::default();
    let quoted = |s: &str| s.trim().trim_matches('"').to_string();
    let weight = |s: &str| s.split("weight=").nth(1).unwrap().trim_end_matches("];").parse::<u64>().unwrap();
    for line in text.lines().map(str::trim) {
        if let Some((lhs, attrs)) = line.split_once(" [") {
            if let Some((x, y)) = lhs.split_once(" -- ") {
                g.edges.insert((quoted(x), quoted(y)), weight(attrs));
            } else {
                g.nodes.insert(quoted(lhs), weight(attrs));
            }
        }
    }
    g
}

fn parse_graphml(text: &str) -> SubjectGraph {
    let mut g = SubjectGraph::default();
    let attr = |line: &str, name: &str| -> String {
        let start = line.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
        line[start..].split('"').next().unwrap().to_string()
    };
    let data = |line: &str| -> u64 {
        let data = &line[line.find("<data").unwrap()..];
        let start = data.find("\">").unwrap() + 2;
        data[start..].split('<').next().unwrap().parse().unwrap()
    };
    for line in text.lines().map(str::trim) {
        if line.starts_with("<node ") {
            g.nodes.insert(attr(line, "id"), data(line));
        } else if line.starts_with("<edge ") {
            g.edges.insert((attr(line, "source"), attr(line, "target")), data(line));
        }
    }
    g
}

proptest! {
    #[test]
    fn edge_weights_sum_to_code_products((subjects, pairs) in setup()) {
        let cat = catalog(&subjects);
        let ids: Vec<(String, String)> = pairs.iter().map(|&(a, b)| (format!("p{a:02}"), format!("p{b:02}"))).collect();
        let g = build_subject_graph(ids.iter().map(|(a, b)| (a.as_str(), b.as_str())), &cat).unwrap();
        let width = |i: usize| subjects[i].len().max(1) as u64;
        let expected: u64 = pairs.iter().map(|&(a, b)| width(a) * width(b)).sum();
        prop_assert_eq!(g.edges.values().sum::<u64>(), expected);
        prop_assert!(g.edges.keys().all(|(x, y)| x <= y));

        let mut members: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        members.sort_unstable();
        members.dedup();
        let unknown = members.iter().filter(|&&m| subjects[m].is_empty()).count() as u64;
        prop_assert_eq!(g.unknown_articles, unknown);
        prop_assert_eq!(g.nodes.get(UNKNOWN_CODE).copied().unwrap_or(0), unknown);
        prop_assert_eq!(g.nodes.values().sum::<u64>(), members.iter().map(|&m| width(m)).sum::<u64>());

        let dot = export_graph(&g, GraphFormat::Dot).unwrap();
        let xml = export_graph(&g, GraphFormat::GraphMl).unwrap();
        prop_assert_eq!(&parse_dot(&dot), &SubjectGraph { unknown_articles: 0, ..g.clone() });
        prop_assert_eq!(&parse_graphml(&xml), &SubjectGraph { unknown_articles: 0, ..g.clone() });

        let reversed = build_subject_graph(ids.iter().rev().map(|(a, b)| (b.as_str(), a.as_str())), &cat).unwrap();
        prop_assert_eq!(export_graph(&reversed, GraphFormat::Dot).unwrap(), dot);
    }
}

#[test]
fn planted_pairs_use_nodelist_codes() {
    let corpus = SyntheticCorpus::generate(&SynthConfig {
        publications: 20_000,
        edges: 150_000,
        ..Default::default()
    })
    .unwrap();
    let mut nodes = Vec::new();
    corpus.write_nodelist(&mut nodes).unwrap();
    let text = String::from_utf8(nodes).unwrap();
    let codes: BTreeMap<&str, Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0], f[3].split('|').filter(|c| !c.is_empty()).collect())
        })
        .collect();
    let cat = parse_nodelist(text.as_bytes()).unwrap();
    let delayed: Vec<(&str, &str)> = corpus
        .planted_of(PlantedKind::Delayed)
        .map(|p| (p.a.as_str(), p.b.as_str()))
        .collect();
    let g = build_subject_graph(delayed.iter().copied(), &cat).unwrap();

    let mut want: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (a, b) in &delayed {
        for x in &codes[a] {
            for y in &codes[b] {
                let key = if x <= y { (x.to_string(), y.to_string()) } else { (y.to_string(), x.to_string()) };
                *want.entry(key).or_insert(0) += 1;
            }
        }
    }
    assert_eq!(g.edges, want);
    assert!(g.nodes.keys().all(|c| SUBJECT_CODES.contains(&c.as_str())));
}
