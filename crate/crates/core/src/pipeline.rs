//! Configuration, workdir manifest and the end-to-end stages.
//!
//! Every stage reads its inputs from the configured files or from earlier
//! stages' artifacts under the workdir, so stages can run one at a time or
//! all together. `manifest.txt` in the workdir holds the configuration, its
//! SHA-256 and one completion marker per stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{
    curate, parse_edgelist, parse_nodelist, parse_subject_overrides, select_source_articles,
    CitationGraph, CurationReport, YearWindow,
};
use crate::kinetics::{
    detect_delayed, detect_vanraan, format_rational, parse_rational, screen_flash_in_pan,
    write_detection_csv, write_vanraan_csv, BandScreen, DetectionCriteria, DetectionRecord,
    FlashCriteria, Subject, VanRaanCriteria, VanRaanOutcome,
};
use crate::pairgen::{
    citation_series, count_pair, count_parallel, dedup_pairs, enumerate_keys, read_frequencies_csv,
    read_pairs_csv, write_pairs_csv, CitingIndex, CoCitedPair, KineticsFormat, KineticsWriter,
    PairFrequency, FREQUENCIES_HEADER,
};
use crate::stats::{ecdf, percentiles, summarize_cohort, write_ecdf_csv, HistogramBuilder, DEFAULT_LAST_BOUND};
use crate::subjects::{build_subject_graph, export_graph, GraphFormat};
use crate::synth::{SynthConfig, SyntheticCorpus};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const GEN_MANIFEST_FILE: &str = "gen_manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticsLayout {
    Long,
    Wide,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSettings {
    pub out: PathBuf,
    pub publications: usize,
    pub edges: usize,
    pub delayed: usize,
    pub flash: usize,
    pub ordinary: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub nodelist: PathBuf,
    pub edgelist: PathBuf,
    /// Optional `id,subjects` file replacing nodelist subject codes.
    pub subjects: Option<PathBuf>,
    pub workdir: PathBuf,
    pub window: YearWindow,
    pub min_refs: usize,
    pub pub_type: String,
    /// Kinetics horizon. Required; there is no default.
    pub end_year: i32,
    /// Pair keys held in memory by the dedup stage before spilling a run.
    pub memory_budget: usize,
    pub partitions: usize,
    pub batch: usize,
    pub kinetics_layout: KineticsLayout,
    /// Pairs below this total are left out of the kinetics file.
    pub kinetics_min_total: u64,
    pub percentiles: Vec<f64>,
    pub delayed: DetectionCriteria,
    pub vanraan: VanRaanCriteria,
    pub flash: FlashCriteria,
    pub seed: u64,
    pub gen: GenSettings,
}

/// Every configuration key, in manifest order.
pub const CONFIG_KEYS: [&str; 38] = [
    "nodelist",
    "edgelist",
    "subjects",
    "workdir",
    "window.start",
    "window.end",
    "min_refs",
    "pub_type",
    "end_year",
    "memory_budget",
    "partitions",
    "batch",
    "kinetics.format",
    "kinetics.min_total",
    "percentiles",
    "delayed.min_total",
    "delayed.min_peak",
    "delayed.min_member_year",
    "delayed.min_sleep_years",
    "delayed.sleep_max_per_year",
    "delayed.sleep_avg_max",
    "vanraan.min_sleep_years",
    "vanraan.sleep_avg_max",
    "vanraan.awakening_window",
    "vanraan.min_awakening_intensity",
    "vanraan.sleep_threshold",
    "flash.band_min",
    "flash.band_max",
    "flash.min_peak_span",
    "flash.peak_level",
    "seed",
    "gen.out",
    "gen.publications",
    "gen.edges",
    "gen.delayed",
    "gen.flash",
    "gen.ordinary",
    "gen.violations",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))
}

fn rational(key: &str, value: &str) -> Result<crate::kinetics::Rational> {
    parse_rational(value).map_err(|_| Error::Config(format!("{key}: expected a decimal, got {value:?}")))
}

impl PipelineConfig {
    /// Builds a configuration from `key = value` entries applied over the
    /// defaults. Later entries win.
    pub fn from_entries<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = PipelineConfig {
            nodelist: "nodelist.csv".into(),
            edgelist: "edgelist.csv".into(),
            subjects: None,
            workdir: "work".into(),
            window: YearWindow::new(1985, 1995),
            min_refs: 5,
            pub_type: "article".into(),
            end_year: 0,
            memory_budget: 4_000_000,
            partitions: 4,
            batch: 1000,
            kinetics_layout: KineticsLayout::Long,
            kinetics_min_total: 20,
            percentiles: vec![90.0, 95.0, 99.0],
            delayed: DetectionCriteria::default(),
            vanraan: VanRaanCriteria::default(),
            flash: FlashCriteria::default(),
            seed: 42,
            gen: GenSettings {
                out: "synthetic".into(),
                publications: 100_000,
                edges: 1_000_000,
                delayed: 50,
                flash: 50,
                ordinary: 500,
                violations: 50,
            },
        };
        let mut end_year = None;
        for (key, value) in entries {
            let value = value.trim();
            match key.trim() {
                "nodelist" => cfg.nodelist = value.into(),
                "edgelist" => cfg.edgelist = value.into(),
                "subjects" => cfg.subjects = (!value.is_empty()).then(|| value.into()),
                "workdir" => cfg.workdir = value.into(),
                "window.start" => cfg.window.start = num("window.start", value)?,
                "window.end" => cfg.window.end = num("window.end", value)?,
                "min_refs" => cfg.min_refs = num("min_refs", value)?,
                "pub_type" => cfg.pub_type = value.into(),
                "end_year" => end_year = Some(num("end_year", value)?),
                "memory_budget" => cfg.memory_budget = num("memory_budget", value)?,
                "partitions" => cfg.partitions = num("partitions", value)?,
                "batch" => cfg.batch = num("batch", value)?,
                "kinetics.format" => {
                    cfg.kinetics_layout = match value {
                        "long" => KineticsLayout::Long,
                        "wide" => KineticsLayout::Wide,
                        other => {
                            return Err(Error::Config(format!(
                                "kinetics.format: expected long or wide, got {other:?}"
                            )))
                        }
                    }
                }
                "kinetics.min_total" => cfg.kinetics_min_total = num("kinetics.min_total", value)?,
                "percentiles" => {
                    cfg.percentiles = value
                        .split(',')
                        .map(|p| num("percentiles", p.trim()))
                        .collect::<Result<_>>()?
                }
                "delayed.min_total" => cfg.delayed.min_total = num(key, value)?,
                "delayed.min_peak" => cfg.delayed.min_peak = num(key, value)?,
                "delayed.min_member_year" => cfg.delayed.min_member_year = num(key, value)?,
                "delayed.min_sleep_years" => cfg.delayed.min_sleep_years = num(key, value)?,
                "delayed.sleep_max_per_year" => cfg.delayed.sleep_max_per_year = num(key, value)?,
                "delayed.sleep_avg_max" => cfg.delayed.sleep_avg_max = rational(key, value)?,
                "vanraan.min_sleep_years" => cfg.vanraan.min_sleep_years = num(key, value)?,
                "vanraan.sleep_avg_max" => cfg.vanraan.sleep_avg_max = rational(key, value)?,
                "vanraan.awakening_window" => cfg.vanraan.awakening_window = num(key, value)?,
                "vanraan.min_awakening_intensity" => {
                    cfg.vanraan.min_awakening_intensity = rational(key, value)?
                }
                "vanraan.sleep_threshold" => cfg.vanraan.sleep_threshold = num(key, value)?,
                "flash.band_min" => cfg.flash.band_min = num(key, value)?,
                "flash.band_max" => cfg.flash.band_max = num(key, value)?,
                "flash.min_peak_span" => cfg.flash.min_peak_span = num(key, value)?,
                "flash.peak_level" => cfg.flash.peak_level = num(key, value)?,
                "seed" => cfg.seed = num(key, value)?,
                "gen.out" => cfg.gen.out = value.into(),
                "gen.publications" => cfg.gen.publications = num(key, value)?,
                "gen.edges" => cfg.gen.edges = num(key, value)?,
                "gen.delayed" => cfg.gen.delayed = num(key, value)?,
                "gen.flash" => cfg.gen.flash = num(key, value)?,
                "gen.ordinary" => cfg.gen.ordinary = num(key, value)?,
                "gen.violations" => cfg.gen.violations = num(key, value)?,
                other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
            }
        }
        cfg.end_year = end_year.ok_or_else(|| Error::Config("end_year: required".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a flat `key = value` file; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(parse_entries(text)?)
    }

    /// Applies `defaults`, then the optional config file, then `overrides`.
    pub fn load(
        path: Option<&Path>,
        defaults: &[(&str, &str)],
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let mut entries = defaults.to_vec();
        entries.extend(parse_entries(&text)?);
        entries.extend(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        Self::from_entries(entries)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.window.start > self.window.end {
            return bad(format!(
                "window.start: {} is after window.end {}",
                self.window.start, self.window.end
            ));
        }
        if self.window.end >= self.end_year {
            return bad(format!(
                "window.end: {} must be before end_year {}",
                self.window.end, self.end_year
            ));
        }
        if self.partitions == 0 {
            return bad("partitions: must be >= 1".into());
        }
        if self.batch == 0 {
            return bad("batch: must be >= 1".into());
        }
        if self.memory_budget == 0 {
            return bad("memory_budget: must be >= 1".into());
        }
        if self.min_refs < 2 {
            return bad(format!("min_refs: must be >= 2, got {}", self.min_refs));
        }
        if let Some(p) = self.percentiles.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return bad(format!("percentiles: {p} is outside (0, 100]"));
        }
        let scoped = |prefix: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{prefix}.*: {m}")),
                other => other,
            })
        };
        scoped("delayed", self.delayed.validate())?;
        scoped("vanraan", self.vanraan.validate())?;
        scoped("flash", self.flash.validate())?;
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let d = &self.delayed;
        let v = &self.vanraan;
        let f = &self.flash;
        let g = &self.gen;
        let path = |p: &Path| p.display().to_string();
        let values: [String; 38] = [
            path(&self.nodelist),
            path(&self.edgelist),
            self.subjects.as_deref().map(path).unwrap_or_default(),
            path(&self.workdir),
            self.window.start.to_string(),
            self.window.end.to_string(),
            self.min_refs.to_string(),
            self.pub_type.clone(),
            self.end_year.to_string(),
            self.memory_budget.to_string(),
            self.partitions.to_string(),
            self.batch.to_string(),
            match self.kinetics_layout {
                KineticsLayout::Long => "long".into(),
                KineticsLayout::Wide => "wide".into(),
            },
            self.kinetics_min_total.to_string(),
            self.percentiles
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(","),
            d.min_total.to_string(),
            d.min_peak.to_string(),
            d.min_member_year.to_string(),
            d.min_sleep_years.to_string(),
            d.sleep_max_per_year.to_string(),
            format_rational(&d.sleep_avg_max),
            v.min_sleep_years.to_string(),
            format_rational(&v.sleep_avg_max),
            v.awakening_window.to_string(),
            format_rational(&v.min_awakening_intensity),
            v.sleep_threshold.to_string(),
            f.band_min.to_string(),
            f.band_max.to_string(),
            f.min_peak_span.to_string(),
            f.peak_level.to_string(),
            self.seed.to_string(),
            path(&g.out),
            g.publications.to_string(),
            g.edges.to_string(),
            g.delayed.to_string(),
            g.flash.to_string(),
            g.ordinary.to_string(),
            g.violations.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            publications: self.gen.publications,
            edges: self.gen.edges,
            delayed: self.gen.delayed,
            flash: self.gen.flash,
            ordinary: self.gen.ordinary,
            violations: self.gen.violations,
            window: self.window,
            end_year: self.end_year,
            ..SynthConfig::default()
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

fn parse_entries(text: &str) -> Result<Vec<(&str, &str)>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        entries.push((k.trim(), v.trim()));
    }
    Ok(entries)
}

/// Turns `--key value` and `--key=value` arguments into override entries.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("unexpected argument {arg:?}")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it
                .next()
                .ok_or_else(|| Error::Config(format!("--{key}: missing value")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Pairs,
    Count,
    Detect,
    Stats,
    Subjects,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Pairs,
        Stage::Count,
        Stage::Detect,
        Stage::Stats,
        Stage::Subjects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Pairs => "pairs",
            Stage::Count => "count",
            Stage::Detect => "detect",
            Stage::Stats => "stats",
            Stage::Subjects => "subjects",
        }
    }

    fn previous(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|&s| s == self).unwrap();
        i.checked_sub(1).map(|j| Stage::ALL[j])
    }

    /// Files this stage writes into the workdir.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["curation_report.csv"],
            Stage::Pairs => &["pairs.csv", "pairs_report.csv"],
            Stage::Count => &["frequencies.csv", "kinetics.csv"],
            Stage::Detect => &[
                "delayed.csv",
                "flash_in_pan.csv",
                "band_screen.csv",
                "vanraan.csv",
                "detect_report.csv",
            ],
            Stage::Stats => &[
                "histogram.csv",
                "ecdf.csv",
                "percentiles.csv",
                "summary.csv",
                "peak_summary.csv",
                "summary_report.csv",
            ],
            Stage::Subjects => &["subjects.dot", "subjects.graphml", "subjects_report.csv"],
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageState {
    Started,
    Done,
}

/// Contents of `manifest.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub config_hash: String,
    pub stages: BTreeMap<Stage, StageState>,
}

impl Manifest {
    pub fn new(config: PipelineConfig) -> Self {
        Manifest {
            config_hash: config.hash(),
            config,
            stages: BTreeMap::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# cocite pipeline manifest\n");
        out.push_str(&self.config.to_text());
        writeln!(out, "config_hash = {}", self.config_hash).unwrap();
        for (stage, state) in &self.stages {
            let state = match state {
                StageState::Started => "started",
                StageState::Done => "done",
            };
            writeln!(out, "stage.{} = {state}", stage.name()).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Vec::new();
        let mut hash = None;
        let mut stages = BTreeMap::new();
        for (k, v) in parse_entries(text)? {
            if k == "config_hash" {
                hash = Some(v.to_string());
            } else if let Some(name) = k.strip_prefix("stage.") {
                let state = match v {
                    "started" => StageState::Started,
                    "done" => StageState::Done,
                    other => return Err(Error::Data(format!("manifest: bad stage state {other:?}"))),
                };
                stages.insert(name.parse()?, state);
            } else {
                config.push((k, v));
            }
        }
        let config = PipelineConfig::from_entries(config)?;
        let config_hash = hash.ok_or_else(|| Error::Data("manifest: config_hash missing".into()))?;
        if config_hash != config.hash() {
            return Err(Error::Data("manifest: config_hash does not match its config".into()));
        }
        Ok(Manifest {
            config,
            config_hash,
            stages,
        })
    }

    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => Self::parse(&text).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(".manifest.tmp");
        fs::write(&tmp, self.to_text()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stage(Stage),
    All,
}

/// Wall time of each stage that ran.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub stages: Vec<(Stage, Duration)>,
}

/// Results of the detect stage.
#[derive(Debug, Clone, Default)]
pub struct Detection {
    /// Pairs whose total reached the lower of the delayed and band minimums.
    pub candidates: u64,
    pub delayed: Vec<DetectionRecord>,
    pub screen: BandScreen,
    /// Van Raan outcome for each distinct member of a delayed pair, by id.
    pub vanraan: Vec<(String, VanRaanOutcome)>,
}

impl Detection {
    pub fn sleeping_beauties(&self) -> BTreeSet<&str> {
        self.vanraan
            .iter()
            .filter(|(_, o)| o.is_accepted())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    fn pair_ids(&self) -> impl Iterator<Item = (&str, &str)> {
        self.delayed.iter().filter_map(|r| match &r.subject {
            Subject::Pair { a, b } => Some((a.as_str(), b.as_str())),
            Subject::Publication(_) => None,
        })
    }
}

/// Loads and curates the configured inputs.
pub fn load_graph(cfg: &PipelineConfig) -> Result<(CitationGraph, CurationReport)> {
    let open = |p: &Path| File::open(p).map(BufReader::new).map_err(|e| Error::io(p, e));
    let mut catalog = parse_nodelist(open(&cfg.nodelist)?)?;
    if let Some(path) = &cfg.subjects {
        let overrides = parse_subject_overrides(open(path)?)?;
        let unknown = catalog.override_subjects(&overrides);
        if !unknown.is_empty() {
            log::warn!("{} subject overrides name unknown ids", unknown.len());
        }
    }
    let raw = parse_edgelist(open(&cfg.edgelist)?, &catalog)?;
    Ok(curate(&raw, catalog))
}

/// Runs the delayed, van Raan and band detectors over a frequency list.
pub fn detect(
    cfg: &PipelineConfig,
    graph: &CitationGraph,
    index: &CitingIndex,
    frequencies: impl IntoIterator<Item = Result<PairFrequency>>,
) -> Result<Detection> {
    let catalog = graph.catalog();
    let floor = cfg.delayed.min_total.min(cfg.flash.band_min);
    let mut out = Detection::default();
    let mut band = Vec::new();
    for freq in frequencies {
        let freq = freq?;
        if freq.total < floor {
            continue;
        }
        out.candidates += 1;
        let series = count_pair(&freq.pair, index, cfg.end_year)?.series;
        let (a, b) = freq.pair.ids(catalog);
        let subject = Subject::Pair {
            a: a.to_string(),
            b: b.to_string(),
        };
        if series.total() >= cfg.delayed.min_total {
            let years = (catalog.year(freq.pair.key.a), catalog.year(freq.pair.key.b));
            if let Some(rec) = detect_delayed(subject.clone(), &series, years, &cfg.delayed)? {
                out.delayed.push(rec);
            }
        }
        if cfg.flash.in_band(series.total()) {
            band.push((subject, series));
        }
    }
    out.screen = screen_flash_in_pan(band, &cfg.flash);

    let members: BTreeSet<String> = out
        .pair_ids()
        .flat_map(|(a, b)| [a.to_string(), b.to_string()])
        .collect();
    for id in members {
        let ix = catalog.lookup(&id).expect("detected pairs come from the catalog");
        let series = citation_series(ix, index, cfg.end_year)?;
        let outcome = detect_vanraan(Subject::Publication(id.clone()), &series, &cfg.vanraan);
        out.vanraan.push((id, outcome));
    }
    Ok(out)
}

struct Session<'c> {
    cfg: &'c PipelineConfig,
    dir: PathBuf,
    graph: Option<(CitationGraph, CurationReport)>,
    index: Option<CitingIndex>,
    detection: Option<Detection>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

fn write_metrics(path: &Path, rows: &[(&str, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["metric", "count"])?;
    for (m, c) in rows {
        w.write_record([*m, &c.to_string()])?;
    }
    w.flush().map_err(|e| Error::resource(path.display().to_string(), e))
}

impl<'c> Session<'c> {
    fn graph(&mut self) -> Result<&CitationGraph> {
        if self.graph.is_none() {
            let t = Instant::now();
            self.graph = Some(load_graph(self.cfg)?);
            log::info!("loaded and curated graph in {:.2?}", t.elapsed());
        }
        Ok(&self.graph.as_ref().unwrap().0)
    }

    fn index(&mut self) -> Result<(&CitationGraph, &CitingIndex)> {
        self.graph()?;
        if self.index.is_none() {
            self.index = Some(CitingIndex::build(&self.graph.as_ref().unwrap().0));
        }
        Ok((&self.graph.as_ref().unwrap().0, self.index.as_ref().unwrap()))
    }

    fn open(&self, name: &str) -> Result<BufReader<File>> {
        let path = self.dir.join(name);
        File::open(&path)
            .map(|f| BufReader::with_capacity(1 << 20, f))
            .map_err(|e| Error::io(path, e))
    }

    fn detection(&mut self) -> Result<&Detection> {
        if self.detection.is_none() {
            let freqs = self.open("frequencies.csv")?;
            let cfg = self.cfg;
            let (graph, index) = self.index()?;
            let d = detect(cfg, graph, index, read_frequencies_csv(freqs, graph.catalog())?)?;
            self.detection = Some(d);
        }
        Ok(self.detection.as_ref().unwrap())
    }

    fn run(&mut self, stage: Stage) -> Result<()> {
        for name in stage.artifacts() {
            let path = self.dir.join(name);
            if path.exists() {
                fs::remove_file(&path).map_err(|e| Error::io(path, e))?;
            }
        }
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Pairs => self.pairs(),
            Stage::Count => self.count(),
            Stage::Detect => self.detect(),
            Stage::Stats => self.stats(),
            Stage::Subjects => self.subjects(),
        }
    }

    fn ingest(&mut self) -> Result<()> {
        self.graph()?;
        let report = self.graph.as_ref().unwrap().1;
        report.write_csv(create(&self.dir.join("curation_report.csv"))?)
    }

    fn pairs(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let spill = self.dir.join("spill");
        if spill.exists() {
            fs::remove_dir_all(&spill).map_err(|e| Error::io(&spill, e))?;
        }
        let dir = self.dir.clone();
        let graph = self.graph()?;
        let sources = select_source_articles(graph, cfg.window, cfg.min_refs, &cfg.pub_type)?;
        let keys = sources.iter().flat_map(|&s| enumerate_keys(graph.references(s)));
        let mut sorted = dedup_pairs(keys, cfg.memory_budget, &spill)?;
        let catalog = graph.catalog();
        let mut failure = None;
        let pairs = sorted.by_ref().map_while(|k| {
            match k.and_then(|k| CoCitedPair::from_key(k, catalog)) {
                Ok(p) => Some(p),
                Err(e) => {
                    failure = Some(e);
                    None
                }
            }
        });
        let unique = write_pairs_csv(create(&dir.join("pairs.csv"))?, pairs, catalog)?;
        if let Some(e) = failure {
            return Err(e);
        }
        let stats = sorted.stats();
        drop(sorted);
        if spill.exists() {
            fs::remove_dir_all(&spill).map_err(|e| Error::io(&spill, e))?;
        }
        log::info!(
            "{} source articles, {} enumerated pairs, {unique} unique, {} spill runs",
            sources.len(),
            stats.input_records,
            stats.spilled_runs
        );
        write_metrics(
            &dir.join("pairs_report.csv"),
            &[
                ("source_articles", sources.len() as u64),
                ("enumerated_pairs", stats.input_records),
                ("unique_pairs", unique),
                ("spill_runs", stats.spilled_runs as u64),
            ],
        )
    }

    fn count(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let dir = self.dir.clone();
        let pairs_in = self.open("pairs.csv")?;
        let (graph, index) = self.index()?;
        let catalog = graph.catalog();
        let format = match cfg.kinetics_layout {
            KineticsLayout::Long => KineticsFormat::Long,
            KineticsLayout::Wide => KineticsFormat::Wide {
                first_year: catalog.iter().filter_map(|(_, p)| p.year).min().unwrap_or(cfg.end_year),
                end_year: cfg.end_year,
            },
        };
        let mut freq_out = csv::Writer::from_writer(create(&dir.join("frequencies.csv"))?);
        freq_out.write_record(FREQUENCIES_HEADER)?;
        let mut kinetics = KineticsWriter::new(create(&dir.join("kinetics.csv"))?, format)?;

        let chunk_len = cfg.batch.saturating_mul(cfg.partitions).saturating_mul(16);
        let mut pairs = read_pairs_csv(pairs_in, catalog)?;
        let mut chunk = Vec::with_capacity(chunk_len.min(1 << 20));
        let mut batches_done = 0usize;
        let mut total_pairs = 0u64;
        loop {
            chunk.clear();
            for p in pairs.by_ref().take(chunk_len) {
                chunk.push(p?);
            }
            if chunk.is_empty() {
                break;
            }
            let counts = count_parallel(&chunk, index, cfg.end_year, cfg.partitions, cfg.batch)
                .map_err(|e| match e {
                    Error::Batch { batch, source } => Error::Batch {
                        batch: batch + batches_done,
                        source,
                    },
                    other => other,
                })?;
            batches_done += chunk.len().div_ceil(cfg.batch);
            total_pairs += counts.len() as u64;
            for c in &counts {
                let (a, b) = c.pair.ids(catalog);
                freq_out.write_record([a, b, &c.total.to_string()])?;
                if c.total >= cfg.kinetics_min_total {
                    kinetics.write(c, catalog)?;
                }
            }
        }
        freq_out
            .flush()
            .map_err(|e| Error::resource("frequencies.csv", e))?;
        kinetics.finish()?;
        log::info!("counted {total_pairs} pairs in {batches_done} batches");
        Ok(())
    }

    fn detect(&mut self) -> Result<()> {
        self.detection = None;
        let dir = self.dir.clone();
        let d = self.detection()?;
        write_detection_csv(create(&dir.join("delayed.csv"))?, &d.delayed)?;
        write_detection_csv(create(&dir.join("flash_in_pan.csv"))?, &d.screen.flash_in_pan)?;
        write_metrics(&dir.join("band_screen.csv"), &d.screen.rows())?;
        write_vanraan_csv(
            create(&dir.join("vanraan.csv"))?,
            d.vanraan.iter().map(|(id, o)| (id.as_str(), o)),
        )?;
        let beauties = d.sleeping_beauties();
        let both = d
            .pair_ids()
            .filter(|(a, b)| beauties.contains(a) && beauties.contains(b))
            .count();
        let inconclusive = d
            .vanraan
            .iter()
            .filter(|(_, o)| matches!(o, VanRaanOutcome::Inconclusive(_)))
            .count();
        log::info!(
            "{} delayed pairs, {} flash-in-the-pan pairs, {} Sleeping Beauties",
            d.delayed.len(),
            d.screen.flash_in_pan.len(),
            beauties.len()
        );
        write_metrics(
            &dir.join("detect_report.csv"),
            &[
                ("candidates", d.candidates),
                ("delayed", d.delayed.len() as u64),
                ("band_pairs", d.screen.band_pairs),
                ("flash_in_pan", d.screen.flash_in_pan.len() as u64),
                ("delayed_members", d.vanraan.len() as u64),
                ("sleeping_beauties", beauties.len() as u64),
                ("vanraan_inconclusive", inconclusive as u64),
                ("pairs_both_sleeping_beauties", both as u64),
            ],
        )
    }

    fn stats(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let dir = self.dir.clone();
        let freqs_in = self.open("frequencies.csv")?;
        let (graph, index) = self.index()?;
        let catalog = graph.catalog();

        let mut hist = HistogramBuilder::new(DEFAULT_LAST_BOUND)?;
        let mut totals = Vec::new();
        for f in read_frequencies_csv(freqs_in, catalog)? {
            let total = f?.total;
            if total > 0 {
                hist.add(total)?;
                totals.push(total);
            }
        }
        if totals.is_empty() {
            return Err(Error::Data("no co-cited pairs to summarise".into()));
        }
        hist.finish().write_csv(create(&dir.join("histogram.csv"))?)?;
        write_ecdf_csv(create(&dir.join("ecdf.csv"))?, &ecdf(totals.iter().copied())?)?;

        let citations: Vec<u64> = (0..index.len() as u32)
            .map(|ix| index.citation_count(ix) as u64)
            .filter(|&c| c > 0)
            .collect();
        let mut w = csv::Writer::from_writer(create(&dir.join("percentiles.csv"))?);
        w.write_record(["population", "percentile", "value"])?;
        for (name, values) in [("co_citation", &totals), ("citation", &citations)] {
            if values.is_empty() {
                continue;
            }
            let got = percentiles(values.iter().copied(), &cfg.percentiles)?;
            for (p, v) in cfg.percentiles.iter().zip(got) {
                w.write_record([name, &p.to_string(), &v.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::resource("percentiles.csv", e))?;

        let cohort = &self.detection()?.delayed;
        if cohort.is_empty() {
            log::warn!("no delayed co-citations; summary tables skipped");
            return write_metrics(
                &dir.join("summary_report.csv"),
                &[("cohort_size", 0), ("slope_excluded", 0)],
            );
        }
        let table = summarize_cohort(cohort)?;
        table.write_csv(create(&dir.join("summary.csv"))?)?;
        table.write_peak_csv(create(&dir.join("peak_summary.csv"))?)?;
        write_metrics(
            &dir.join("summary_report.csv"),
            &[
                ("cohort_size", table.cohort_size as u64),
                ("slope_excluded", table.slope_excluded as u64),
            ],
        )
    }

    fn subjects(&mut self) -> Result<()> {
        let dir = self.dir.clone();
        self.detection()?;
        let d = self.detection.as_ref().unwrap();
        let catalog = self.graph.as_ref().unwrap().0.catalog();
        if d.delayed.is_empty() {
            log::warn!("no delayed co-citations; subject graph skipped");
            return write_metrics(&dir.join("subjects_report.csv"), &[("pairs", 0)]);
        }
        let g = build_subject_graph(d.pair_ids(), catalog)?;
        let articles: BTreeSet<&str> = d.pair_ids().flat_map(|(a, b)| [a, b]).collect();
        for (name, format) in [("subjects.dot", GraphFormat::Dot), ("subjects.graphml", GraphFormat::GraphMl)] {
            let path = dir.join(name);
            fs::write(&path, export_graph(&g, format)?).map_err(|e| Error::io(path, e))?;
        }
        write_metrics(
            &dir.join("subjects_report.csv"),
            &[
                ("pairs", d.delayed.len() as u64),
                ("articles", articles.len() as u64),
                ("article_codes", g.nodes.values().sum::<u64>()),
                ("unknown_articles", g.unknown_articles),
                ("nodes", g.nodes.len() as u64),
                ("edges", g.edges.len() as u64),
                ("edge_weight", g.edges.values().sum::<u64>()),
            ],
        )
    }
}

/// Checks the workdir against the manifest and returns the manifest to
/// continue from. Refuses on partial or foreign state unless `force`.
fn open_workdir(cfg: &PipelineConfig, force: bool) -> Result<Manifest> {
    let dir = &cfg.workdir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let partial = |reason: String| Error::PartialState {
        dir: dir.clone(),
        reason,
    };
    let fresh = Manifest::new(cfg.clone());
    let existing = match Manifest::read(dir) {
        Ok(m) => m,
        Err(e) if force => {
            log::warn!("ignoring unreadable manifest: {e}");
            None
        }
        Err(e) => return Err(partial(format!("unreadable manifest ({e})"))),
    };
    let Some(existing) = existing else {
        let stray = Stage::ALL
            .iter()
            .flat_map(|s| s.artifacts())
            .find(|name| dir.join(name).exists());
        if let (Some(name), false) = (stray, force) {
            return Err(partial(format!("{name} exists but there is no manifest")));
        }
        return Ok(fresh);
    };
    if existing.config_hash != fresh.config_hash {
        if !force {
            return Err(partial("outputs were produced with a different configuration".into()));
        }
        return Ok(fresh);
    }
    if let Some((stage, _)) = existing.stages.iter().find(|(_, s)| **s == StageState::Started) {
        if !force {
            return Err(partial(format!("stage {} did not finish", stage.name())));
        }
        let mut m = existing.clone();
        m.stages.retain(|s, _| s < stage);
        return Ok(m);
    }
    Ok(existing)
}

/// Runs a stage, or every stage in order, under the configured workdir.
pub fn run(cfg: &PipelineConfig, command: Command, force: bool) -> Result<RunReport> {
    cfg.validate()?;
    let mut manifest = open_workdir(cfg, force)?;
    let dir = cfg.workdir.clone();
    manifest.write(&dir)?;
    let stages: Vec<Stage> = match command {
        Command::Stage(s) => {
            if let Some(prev) = s.previous() {
                if manifest.stages.get(&prev) != Some(&StageState::Done) {
                    return Err(Error::Config(format!(
                        "stage {} needs {} to have completed first",
                        s.name(),
                        prev.name()
                    )));
                }
            }
            vec![s]
        }
        Command::All => Stage::ALL.to_vec(),
    };
    let mut session = Session {
        cfg,
        dir: dir.clone(),
        graph: None,
        index: None,
        detection: None,
    };
    let mut report = RunReport::default();
    for stage in stages {
        manifest.stages.retain(|s, _| *s < stage);
        manifest.stages.insert(stage, StageState::Started);
        manifest.write(&dir)?;
        let t = Instant::now();
        log::info!("stage {} started", stage.name());
        session.run(stage)?;
        let took = t.elapsed();
        log::info!("stage {} done in {took:.2?}", stage.name());
        report.stages.push((stage, took));
        manifest.stages.insert(stage, StageState::Done);
        manifest.write(&dir)?;
    }
    Ok(report)
}

/// Writes a synthetic corpus plus `gen_manifest.txt` into `cfg.gen.out`.
pub fn generate(cfg: &PipelineConfig) -> Result<SyntheticCorpus> {
    let corpus = SyntheticCorpus::generate(&cfg.synth_config())?;
    let out = &cfg.gen.out;
    corpus.write_to(out)?;
    let mut text = String::from("# cocite synthetic corpus\n");
    let s = &corpus.config;
    for (k, v) in [
        ("seed", s.seed.to_string()),
        ("publications", corpus.publication_count().to_string()),
        ("edges", corpus.edge_count().to_string()),
        ("planted_delayed", s.delayed.to_string()),
        ("planted_flash_in_pan", s.flash.to_string()),
        ("planted_ordinary", s.ordinary.to_string()),
        ("planted_violations", corpus.violations.total().to_string()),
        ("window.start", s.window.start.to_string()),
        ("window.end", s.window.end.to_string()),
        ("end_year", s.end_year.to_string()),
    ] {
        writeln!(text, "{k} = {v}").unwrap();
    }
    for name in ["nodelist.csv", "edgelist.csv", "planted.csv", "planted_violations.csv"] {
        let path = out.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(text, "sha256.{name} = {}", sha256_hex(&bytes)).unwrap();
    }
    let path = out.join(GEN_MANIFEST_FILE);
    let mut f = create(&path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PipelineConfig {
        PipelineConfig::from_entries([("end_year", "2018")]).unwrap()
    }

    #[test]
    fn end_year_is_required() {
        let err = PipelineConfig::from_entries([]).unwrap_err();
        assert!(err.to_string().contains("end_year"), "{err}");
    }

    #[test]
    fn field_level_messages() {
        let cases = [
            ("window.end", "2018", "window.end"),
            ("partitions", "0", "partitions"),
            ("min_refs", "x", "min_refs"),
            ("bogus", "1", "bogus"),
            ("delayed.min_peak", "0", "delayed"),
            ("percentiles", "90,101", "percentiles"),
        ];
        for (k, v, needle) in cases {
            let err = PipelineConfig::from_entries([("end_year", "2018"), (k, v)]).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
            assert!(err.to_string().contains(needle), "{err}");
        }
    }

    #[test]
    fn text_roundtrip() {
        let cfg = PipelineConfig::from_entries([
            ("end_year", "2018"),
            ("delayed.sleep_avg_max", "0.75"),
            ("subjects", "codes.csv"),
            ("percentiles", "50,99.9"),
            ("kinetics.format", "wide"),
        ])
        .unwrap();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let m = Manifest::new(cfg);
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn tampered_manifest_rejected() {
        let m = Manifest::new(base());
        let text = m.to_text().replace("min_refs = 5", "min_refs = 6");
        assert!(Manifest::parse(&text).is_err());
    }

    #[test]
    fn overrides() {
        let args: Vec<String> = ["--seed", "7", "--partitions=2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            parse_overrides(&args).unwrap(),
            vec![("seed".into(), "7".into()), ("partitions".into(), "2".into())]
        );
        assert!(parse_overrides(&["--seed".to_string()]).is_err());
        assert!(parse_overrides(&["seed".to_string()]).is_err());
    }
}
