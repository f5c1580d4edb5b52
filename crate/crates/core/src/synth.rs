//! Seeded synthetic citation corpora with a planting manifest.
//!
//! Three pair populations are planted on top of a random background graph:
//! delayed co-citations, flash-in-the-pan band pairs and ordinary pairs that
//! must fail both detectors. Each planted pair gets two dedicated member
//! publications and its own set of citing articles, so its co-citation series
//! is exactly the planted one. Every planted series has at least one
//! co-citation inside the source window, which makes the pair reachable from
//! a selected source article.
//!
//! Curation violations of every kind are planted among background
//! publications and tallied in the manifest.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{CurationReport, YearWindow};
use crate::kinetics::{beauty_coefficient, YearSeries};

pub const SUBJECT_CODES: [&str; 24] = [
    "ABS", "A&H", "BGMB", "BMA", "CEN", "CHE", "CS", "DCS", "EPS", "EEF", "EGY", "ENG", "ENS",
    "GEN", "HP", "IMM", "MAT", "MTH", "MED", "NEU", "PTP", "PHY", "PSY", "SS",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Target number of publications; background fills what planting leaves.
    /// Planted citers always come first, so with the default planting sizes
    /// targets below roughly 80k are exceeded.
    pub publications: usize,
    /// Target number of edgelist rows, violations included.
    pub edges: usize,
    pub delayed: usize,
    pub flash: usize,
    pub ordinary: usize,
    pub violations: usize,
    pub window: YearWindow,
    pub end_year: i32,
    pub first_year: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            publications: 100_000,
            edges: 1_000_000,
            delayed: 50,
            flash: 50,
            ordinary: 500,
            violations: 50,
            window: YearWindow::new(1985, 1995),
            end_year: 2018,
            first_year: 1960,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrdinaryKind {
    /// Cited steadily from the start: never sleeps.
    Steady,
    /// Proper sleep, but the peak stays below the minimum.
    ShallowPeak,
    /// Long low period whose average exceeds one per year.
    Restless,
    /// Delayed shape with one member published before the cut-off year.
    OldMember,
    /// Band total with two years at the peak level.
    BandMultiPeak,
    /// Band total peaking within the first decade.
    BandEarlyPeak,
    /// Band total that never reaches the peak level.
    BandLow,
}

const ORDINARY_KINDS: [OrdinaryKind; 7] = [
    OrdinaryKind::Steady,
    OrdinaryKind::ShallowPeak,
    OrdinaryKind::Restless,
    OrdinaryKind::OldMember,
    OrdinaryKind::BandMultiPeak,
    OrdinaryKind::BandEarlyPeak,
    OrdinaryKind::BandLow,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlantedKind {
    Delayed,
    FlashInPan,
    Ordinary(OrdinaryKind),
}

impl fmt::Display for PlantedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PlantedKind::Delayed => "delayed",
            PlantedKind::FlashInPan => "flash_in_pan",
            PlantedKind::Ordinary(k) => match k {
                OrdinaryKind::Steady => "ordinary:steady",
                OrdinaryKind::ShallowPeak => "ordinary:shallow_peak",
                OrdinaryKind::Restless => "ordinary:restless",
                OrdinaryKind::OldMember => "ordinary:old_member",
                OrdinaryKind::BandMultiPeak => "ordinary:band_multi_peak",
                OrdinaryKind::BandEarlyPeak => "ordinary:band_early_peak",
                OrdinaryKind::BandLow => "ordinary:band_low",
            },
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedPair {
    pub a: String,
    pub b: String,
    pub kind: PlantedKind,
    pub member_years: (i32, i32),
    pub series: YearSeries,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationManifest {
    pub unresolved: u64,
    pub self_citations: u64,
    pub missing_year: u64,
    pub future_refs: u64,
    pub duplicates: u64,
}

impl ViolationManifest {
    pub fn total(&self) -> u64 {
        self.unresolved + self.self_citations + self.missing_year + self.future_refs + self.duplicates
    }

    /// True when a curation report dropped exactly what was planted.
    pub fn matches(&self, report: &CurationReport) -> bool {
        report.dropped_unresolved_refs == self.unresolved
            && report.dropped_self_citations == self.self_citations
            && report.dropped_missing_year == self.missing_year
            && report.dropped_future_refs == self.future_refs
            && report.collapsed_duplicates == self.duplicates
    }
}

struct GenPub {
    id: String,
    year: Option<i32>,
    pub_type: &'static str,
    subjects: Vec<&'static str>,
}

/// A generated corpus, ready to be written as nodelist and edgelist.
pub struct SyntheticCorpus {
    pubs: Vec<GenPub>,
    /// Indices into `pubs`.
    edges: Vec<(u32, u32)>,
    /// Citing index plus a cited id that is not in the nodelist.
    dangling: Vec<(u32, String)>,
    pub planted: Vec<PlantedPair>,
    pub violations: ViolationManifest,
    pub config: SynthConfig,
}

struct Builder<'c> {
    rng: ChaCha8Rng,
    cfg: &'c SynthConfig,
    pubs: Vec<GenPub>,
    edges: Vec<(u32, u32)>,
}

impl Builder<'_> {
    fn subjects(&mut self) -> Vec<&'static str> {
        let n = if self.rng.gen_bool(0.3) { 2 } else { 1 };
        let mut codes: Vec<&'static str> = SUBJECT_CODES
            .choose_multiple(&mut self.rng, n)
            .copied()
            .collect();
        codes.sort_unstable();
        codes
    }

    fn add_pub(&mut self, id: String, year: Option<i32>, pub_type: &'static str) -> u32 {
        let subjects = self.subjects();
        self.pubs.push(GenPub {
            id,
            year,
            pub_type,
            subjects,
        });
        (self.pubs.len() - 1) as u32
    }

    fn in_window(&self, start: i32, counts: &[u32]) -> bool {
        counts
            .iter()
            .enumerate()
            .any(|(t, &c)| c > 0 && self.cfg.window.contains(start + t as i32))
    }

    /// Sleeping-period counts in {0,1,2} averaging at most one per year.
    fn sleep(&mut self, len: usize) -> Vec<u32> {
        let mut s: Vec<u32> = (0..len)
            .map(|_| match self.rng.gen_range(0..20) {
                0..=9 => 0,
                10..=16 => 1,
                _ => 2,
            })
            .collect();
        while s.iter().sum::<u32>() as usize > len {
            let i = self.rng.gen_range(0..len);
            s[i] = s[i].saturating_sub(1);
        }
        s
    }

    /// Decaying tail from just below `peak`, never dropping under `floor`.
    fn tail(&mut self, peak: u32, floor: u32, len: usize) -> Vec<u32> {
        let mut level = peak as f64;
        (0..len)
            .map(|_| {
                level *= self.rng.gen_range(0.75..0.95);
                (level.round() as u32).clamp(floor, peak.saturating_sub(1).max(floor))
            })
            .collect()
    }

    fn delayed_series(&mut self, span: usize) -> Vec<u32> {
        let sleep_len = self.rng.gen_range(10..=18usize).min(span.saturating_sub(12));
        let mut s = self.sleep(sleep_len);
        let peak = self.rng.gen_range(22..=45u32);
        if self.rng.gen_bool(0.1) {
            s.push(peak);
        } else {
            let ramp = self.rng.gen_range(2..=6usize);
            let wake = self.rng.gen_range(3..=6u32);
            for k in 0..ramp {
                s.push(wake + (peak - wake) * k as u32 / ramp as u32);
            }
            s.push(peak);
        }
        let rest = span - s.len();
        let floor = self.rng.gen_range(1..=3);
        let tail = self.tail(peak, floor, rest);
        s.extend(tail);
        s
    }

    fn flash_series(&mut self, span: usize) -> Vec<u32> {
        let spike_at = self.rng.gen_range(10..=(span - 2).min(25));
        let mut s: Vec<u32> = (0..spike_at).map(|_| u32::from(self.rng.gen_bool(0.25))).collect();
        s.push(self.rng.gen_range(20..=30));
        let after = self.rng.gen_range(2..=5u32);
        for k in 0..after.min((span - s.len()) as u32) {
            s.push(self.rng.gen_range(0..=(6 - k).min(6)));
        }
        while s.len() < span {
            s.push(u32::from(self.rng.gen_bool(0.1)));
        }
        s
    }

    fn ordinary_series(&mut self, kind: OrdinaryKind, span: usize) -> Vec<u32> {
        match kind {
            OrdinaryKind::Steady => {
                let mut s: Vec<u32> = (0..span).map(|_| self.rng.gen_range(2..=4)).collect();
                s[0] = 3;
                s
            }
            OrdinaryKind::ShallowPeak => {
                let len = self.rng.gen_range(10..=14);
                let mut s = self.sleep(len);
                let peak = self.rng.gen_range(12..=19);
                s.extend([4, 8, peak]);
                let rest = span - s.len();
                let tail = self.tail(peak, 3, rest);
                s.extend(tail);
                s
            }
            OrdinaryKind::Restless => {
                let len = self.rng.gen_range(10..=14);
                let mut s: Vec<u32> = (0..len).map(|_| self.rng.gen_range(1..=2)).collect();
                if s.iter().sum::<u32>() as usize <= len {
                    s[0] = 2;
                    s[1] = 2;
                }
                let peak = self.rng.gen_range(22..=40);
                s.extend([5, 12, peak]);
                let rest = span - s.len();
                let tail = self.tail(peak, 1, rest);
                s.extend(tail);
                s
            }
            OrdinaryKind::OldMember => self.delayed_series(span),
            OrdinaryKind::BandMultiPeak => {
                let first = self.rng.gen_range(10..=(span - 4).min(20));
                let mut s = vec![0; span];
                s[first] = self.rng.gen_range(20..=25);
                s[first + self.rng.gen_range(1..=3)] = self.rng.gen_range(20..=24);
                for _ in 0..self.rng.gen_range(0..5) {
                    let i = self.rng.gen_range(0..span);
                    if s[i] == 0 {
                        s[i] = 1;
                    }
                }
                s
            }
            OrdinaryKind::BandEarlyPeak => {
                let mut s = vec![0; span];
                let at = self.rng.gen_range(0..8);
                s[at] = self.rng.gen_range(20..=30);
                let end = (at + 6).min(span);
                for c in &mut s[at + 1..end] {
                    *c = self.rng.gen_range(1..=6);
                }
                s
            }
            OrdinaryKind::BandLow => (0..span)
                .map(|t| if t % 2 == 0 { self.rng.gen_range(1..=4) } else { 0 })
                .collect(),
        }
    }
}

fn band_total(total: u64) -> bool {
    (20..100).contains(&total)
}

impl SyntheticCorpus {
    pub fn generate(cfg: &SynthConfig) -> Result<Self> {
        if cfg.window.start > cfg.window.end || cfg.end_year <= cfg.window.end + 20 {
            return Err(Error::Config(
                "synthetic corpus needs a window ending at least 20 years before end_year".into(),
            ));
        }
        if cfg.first_year > 1965 {
            return Err(Error::Config("first_year must be 1965 or earlier".into()));
        }
        let mut b = Builder {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            pubs: Vec::new(),
            edges: Vec::new(),
        };

        // planted series and member publications
        let mut kinds = Vec::new();
        kinds.extend(std::iter::repeat_n(PlantedKind::Delayed, cfg.delayed));
        kinds.extend(std::iter::repeat_n(PlantedKind::FlashInPan, cfg.flash));
        kinds.extend(
            (0..cfg.ordinary).map(|i| PlantedKind::Ordinary(ORDINARY_KINDS[i % ORDINARY_KINDS.len()])),
        );
        let mut planted = Vec::with_capacity(kinds.len());
        let mut members = Vec::with_capacity(kinds.len());
        for (n, kind) in kinds.into_iter().enumerate() {
            let (ya, yb, counts) = loop {
                let (lo, hi) = match kind {
                    PlantedKind::Ordinary(OrdinaryKind::OldMember) => (1960, 1969),
                    PlantedKind::Delayed => (1970, 1983),
                    _ => (1970, 1990),
                };
                let ya = b.rng.gen_range(lo..=hi);
                let yb = b.rng.gen_range(1970..=1983);
                let start = ya.max(yb);
                let span = (cfg.end_year - start + 1) as usize;
                let counts = match kind {
                    PlantedKind::Delayed => b.delayed_series(span),
                    PlantedKind::FlashInPan => b.flash_series(span),
                    PlantedKind::Ordinary(k) => b.ordinary_series(k, span),
                };
                let series = YearSeries::new(start, counts.clone())?;
                let total = series.total();
                let ok = b.in_window(start, &counts)
                    && match kind {
                        PlantedKind::Delayed => (100..250).contains(&total),
                        PlantedKind::FlashInPan => {
                            band_total(total) && beauty_coefficient(&series) >= 0.0
                        }
                        PlantedKind::Ordinary(
                            OrdinaryKind::BandMultiPeak
                            | OrdinaryKind::BandEarlyPeak
                            | OrdinaryKind::BandLow,
                        ) => band_total(total),
                        PlantedKind::Ordinary(_) => (100..160).contains(&total),
                    };
                if ok {
                    break (ya, yb, counts);
                }
            };
            let ia = b.add_pub(format!("M{n:05}A"), Some(ya), "article");
            let ib = b.add_pub(format!("M{n:05}B"), Some(yb), "article");
            let start = ya.max(yb);
            planted.push(PlantedPair {
                a: format!("M{n:05}A"),
                b: format!("M{n:05}B"),
                kind,
                member_years: (ya, yb),
                series: YearSeries::new(start, counts)?,
            });
            members.push((ia, ib));
        }

        // background publications, sorted by year for prefix sampling
        let planted_citers: usize = planted.iter().map(|p| p.series.total() as usize).sum();
        let n_missing_year = cfg.violations.div_ceil(5);
        let background = cfg
            .publications
            .saturating_sub(b.pubs.len() + planted_citers + n_missing_year)
            .max(cfg.publications / 4)
            .max(200);
        let mut years: Vec<i32> = (0..background)
            .map(|_| b.rng.gen_range(cfg.first_year..=cfg.end_year))
            .collect();
        years.sort_unstable();
        let bg_start = b.pubs.len() as u32;
        for (i, &y) in years.iter().enumerate() {
            let t = match b.rng.gen_range(0..20) {
                0..=16 => "article",
                17..=18 => "review",
                _ => "conference",
            };
            b.add_pub(format!("P{i:07}"), Some(y), t);
        }
        // prefix_end[k]: number of background pubs with year <= first_year + k
        let prefix_end: Vec<usize> = (cfg.first_year..=cfg.end_year)
            .map(|y| years.partition_point(|&v| v <= y))
            .collect();
        let prefix = |y: i32| prefix_end[(y - cfg.first_year) as usize];

        // planted citing articles
        let mut citer_no = 0usize;
        for (p, &(ia, ib)) in planted.iter().zip(&members) {
            for (year, c) in p.series.iter() {
                for _ in 0..c {
                    let id = format!("C{citer_no:07}");
                    citer_no += 1;
                    let me = b.add_pub(id, Some(year), "article");
                    b.edges.push((me, ia));
                    b.edges.push((me, ib));
                    let avail = prefix(year);
                    let fillers = b.rng.gen_range(3..=6).min(avail);
                    for f in rand::seq::index::sample(&mut b.rng, avail, fillers) {
                        b.edges.push((me, bg_start + f as u32));
                    }
                }
            }
        }

        // background references
        let budget = cfg
            .edges
            .saturating_sub(b.edges.len() + cfg.violations);
        let per_pub = budget / background;
        let extra = budget % background;
        let mut bonus: Vec<bool> = (0..background).map(|i| i < extra).collect();
        bonus.shuffle(&mut b.rng);
        for i in 0..background {
            let y = years[i];
            let avail = prefix(y);
            let k = (per_pub + bonus[i] as usize).min(avail.saturating_sub(1));
            if k == 0 {
                continue;
            }
            let me = bg_start + i as u32;
            for f in rand::seq::index::sample(&mut b.rng, avail, k + 1)
                .into_iter()
                .filter(|&f| f != i)
                .take(k)
            {
                b.edges.push((me, bg_start + f as u32));
            }
        }

        // curation violations among background publications
        let mut violations = ViolationManifest::default();
        let mut dangling = Vec::new();
        let mut missing_year_pubs = Vec::new();
        for k in 0..n_missing_year {
            missing_year_pubs.push(b.add_pub(format!("NY{k:04}"), None, "article"));
        }
        let valid_edges = b.edges.len();
        let mut duplicated = std::collections::HashSet::new();
        for v in 0..cfg.violations {
            let pick = |rng: &mut ChaCha8Rng| bg_start + rng.gen_range(0..background) as u32;
            match v % 5 {
                0 => {
                    let me = pick(&mut b.rng);
                    dangling.push((me, format!("X-MISSING-{v:04}")));
                    violations.unresolved += 1;
                }
                1 => {
                    let me = pick(&mut b.rng);
                    b.edges.push((me, me));
                    violations.self_citations += 1;
                }
                2 => {
                    let ny = missing_year_pubs[v / 5 % missing_year_pubs.len()];
                    let other = pick(&mut b.rng);
                    let edge = if v % 2 == 0 { (other, ny) } else { (ny, other) };
                    b.edges.push(edge);
                    violations.missing_year += 1;
                }
                3 => {
                    // oldest background publication citing a newer one
                    let newer = bg_start + (background - 1 - b.rng.gen_range(0..10)) as u32;
                    let older = bg_start + b.rng.gen_range(0..10) as u32;
                    if b.pubs[older as usize].year < b.pubs[newer as usize].year {
                        b.edges.push((older, newer));
                        violations.future_refs += 1;
                    } else {
                        b.edges.push((older, older));
                        violations.self_citations += 1;
                    }
                }
                _ => loop {
                    let e = b.edges[b.rng.gen_range(0..valid_edges)];
                    if duplicated.insert(e) {
                        b.edges.push(e);
                        violations.duplicates += 1;
                        break;
                    }
                },
            }
        }
        b.edges.shuffle(&mut b.rng);

        planted.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
        Ok(SyntheticCorpus {
            pubs: b.pubs,
            edges: b.edges,
            dangling,
            planted,
            violations,
            config: cfg.clone(),
        })
    }

    pub fn publication_count(&self) -> usize {
        self.pubs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len() + self.dangling.len()
    }

    pub fn planted_of(&self, kind: PlantedKind) -> impl Iterator<Item = &PlantedPair> {
        self.planted.iter().filter(move |p| p.kind == kind)
    }

    pub fn write_nodelist<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(crate::ingest::NODELIST_HEADER)?;
        for p in &self.pubs {
            let year = p.year.map(|y| y.to_string()).unwrap_or_default();
            w.write_record([p.id.as_str(), &year, p.pub_type, &p.subjects.join("|")])?;
        }
        w.flush().map_err(|e| Error::resource("nodelist", e))
    }

    pub fn write_edgelist<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(crate::ingest::EDGELIST_HEADER)?;
        for &(a, c) in &self.edges {
            w.write_record([&self.pubs[a as usize].id, &self.pubs[c as usize].id])?;
        }
        for (a, missing) in &self.dangling {
            w.write_record([&self.pubs[*a as usize].id, missing])?;
        }
        w.flush().map_err(|e| Error::resource("edgelist", e))
    }

    /// `a,b,kind,a_year,b_year,total` for every planted pair.
    pub fn write_planted<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "kind", "a_year", "b_year", "total"])?;
        for p in &self.planted {
            w.write_record([
                p.a.clone(),
                p.b.clone(),
                p.kind.to_string(),
                p.member_years.0.to_string(),
                p.member_years.1.to_string(),
                p.series.total().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::resource("planted manifest", e))
    }

    pub fn write_violations<W: Write>(&self, out: W) -> Result<()> {
        let v = &self.violations;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "count"])?;
        for (m, c) in [
            ("dropped_unresolved_refs", v.unresolved),
            ("dropped_self_citations", v.self_citations),
            ("dropped_missing_year", v.missing_year),
            ("dropped_future_refs", v.future_refs),
            ("collapsed_duplicates", v.duplicates),
        ] {
            w.write_record([m, &c.to_string()])?;
        }
        w.flush().map_err(|e| Error::resource("violation manifest", e))
    }

    /// Writes `nodelist.csv`, `edgelist.csv`, `planted.csv` and
    /// `planted_violations.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            fs::File::create(&path)
                .map(BufWriter::new)
                .map_err(|e| Error::io(path, e))
        };
        self.write_nodelist(create("nodelist.csv")?)?;
        self.write_edgelist(create("edgelist.csv")?)?;
        self.write_planted(create("planted.csv")?)?;
        self.write_violations(create("planted_violations.csv")?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{curate, parse_edgelist, parse_nodelist};
    use crate::kinetics::{summarize, DetectionCriteria};

    fn small() -> SynthConfig {
        SynthConfig {
            publications: 3_000,
            edges: 20_000,
            delayed: 7,
            flash: 7,
            ordinary: 21,
            violations: 23,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let render = |cfg: &SynthConfig| {
            let c = SyntheticCorpus::generate(cfg).unwrap();
            let (mut n, mut e, mut p) = (Vec::new(), Vec::new(), Vec::new());
            c.write_nodelist(&mut n).unwrap();
            c.write_edgelist(&mut e).unwrap();
            c.write_planted(&mut p).unwrap();
            (n, e, p)
        };
        assert_eq!(render(&small()), render(&small()));
        let other = SynthConfig { seed: 7, ..small() };
        assert_ne!(render(&small()).1, render(&other).1);
    }

    #[test]
    fn planted_series_have_intended_shape() {
        let c = SyntheticCorpus::generate(&small()).unwrap();
        let crit = DetectionCriteria::default();
        for p in &c.planted {
            let s = summarize(&p.series, crit.sleep_max_per_year);
            let accepted = crit.accepts(&s, p.member_years);
            assert_eq!(accepted, p.kind == PlantedKind::Delayed, "{} {:?}", p.kind, p.series);
        }
    }

    #[test]
    fn violations_match_curation() {
        let c = SyntheticCorpus::generate(&small()).unwrap();
        let (mut n, mut e) = (Vec::new(), Vec::new());
        c.write_nodelist(&mut n).unwrap();
        c.write_edgelist(&mut e).unwrap();
        let cat = parse_nodelist(n.as_slice()).unwrap();
        let raw = parse_edgelist(e.as_slice(), &cat).unwrap();
        let (_, report) = curate(&raw, cat);
        assert_eq!(c.violations.total(), 23);
        assert!(c.violations.matches(&report), "{report:?} vs {:?}", c.violations);
        assert_eq!(report.input_edges() as usize, c.edge_count());
    }
}
