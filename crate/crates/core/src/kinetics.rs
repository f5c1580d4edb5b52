//! Citation kinetics of a single series: peak, awakening, sleep statistics,
//! slope and Beauty Coefficient, plus the detectors built on them.
//!
//! Sleep averages, slopes and the fractional thresholds they are compared
//! against are exact rationals, so a boundary such as "average at most 1"
//! never depends on floating-point rounding.

use std::fmt;
use std::io::Write;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Awakening happens in the first year whose count exceeds this.
pub const DEFAULT_SLEEP_THRESHOLD: u32 = 2;

/// Contiguous annual counts starting at `start_year`. Years without events
/// are present as zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct YearSeries {
    start_year: i32,
    counts: Vec<u32>,
}

impl YearSeries {
    pub fn new(start_year: i32, counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Data("year series must not be empty".into()));
        }
        Ok(YearSeries { start_year, counts })
    }

    /// All-zero series covering `start..=end`.
    pub fn zeros(start: i32, end: i32) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!(
                "end year {end} precedes start year {start}"
            )));
        }
        Ok(YearSeries {
            start_year: start,
            counts: vec![0; (end - start + 1) as usize],
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.counts.len() as i32 - 1
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, year: i32) -> Option<u32> {
        let t = year.checked_sub(self.start_year)?;
        usize::try_from(t).ok().and_then(|t| self.counts.get(t).copied())
    }

    /// Adds one event in `year`. Years outside the span are ignored and
    /// reported as `false`.
    pub fn record(&mut self, year: i32) -> bool {
        match usize::try_from(year - self.start_year) {
            Ok(t) if t < self.counts.len() => {
                self.counts[t] += 1;
                true
            }
            _ => false,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// `(year, count)` for every entry.
    pub fn iter(&self) -> impl Iterator<Item = (i32, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(t, &c)| (self.start_year + t as i32, c))
    }

    /// Offset of the earliest maximum.
    pub fn peak_offset(&self) -> usize {
        let max = *self.counts.iter().max().expect("non-empty");
        self.counts.iter().position(|&c| c == max).expect("max exists")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticsSummary {
    pub start_year: i32,
    pub total: u64,
    pub peak_year: i32,
    pub peak_count: u32,
    pub awakening_year: Option<i32>,
    pub awakening_count: Option<u32>,
    /// Years from the start year up to (excluding) the awakening year.
    pub sleep_duration: Option<u32>,
    /// Mean count over the sleeping years; absent if there are none.
    pub sleep_avg: Option<Rational>,
    pub sleep_max: Option<u32>,
    /// Co-citations gained per year between awakening and peak.
    pub slope: Option<Rational>,
    pub beauty: f64,
}

impl KineticsSummary {
    /// True when awakening exists but coincides with the peak year, i.e. the
    /// slope is reported as `NA` rather than left empty.
    pub fn slope_is_na(&self) -> bool {
        self.awakening_year.is_some() && self.slope.is_none()
    }
}

pub fn summarize(series: &YearSeries, sleep_threshold: u32) -> KineticsSummary {
    let counts = series.counts();
    let peak_t = series.peak_offset();
    let peak_count = counts[peak_t];
    let peak_year = series.start_year() + peak_t as i32;

    let awakening_t = counts.iter().position(|&c| c > sleep_threshold);
    let (mut sleep_avg, mut sleep_max, mut slope_value) = (None, None, None);
    if let Some(t) = awakening_t {
        let sleep = &counts[..t];
        if !sleep.is_empty() {
            let sum: i64 = sleep.iter().map(|&c| c as i64).sum();
            sleep_avg = Some(Rational::new(sum, sleep.len() as i64));
            sleep_max = sleep.iter().copied().max();
        }
        slope_value = slope(
            (series.start_year() + t as i32, counts[t]),
            (peak_year, peak_count),
        );
    }

    KineticsSummary {
        start_year: series.start_year(),
        total: series.total(),
        peak_year,
        peak_count,
        awakening_year: awakening_t.map(|t| series.start_year() + t as i32),
        awakening_count: awakening_t.map(|t| counts[t]),
        sleep_duration: awakening_t.map(|t| t as u32),
        sleep_avg,
        sleep_max,
        slope: slope_value,
        beauty: beauty_coefficient(series),
    }
}

/// `(peak_count - awakening_count) / (peak_year - awakening_year)`, or
/// `None` when both fall in the same year.
pub fn slope(awakening: (i32, u32), peak: (i32, u32)) -> Option<Rational> {
    let dy = peak.0 as i64 - awakening.0 as i64;
    if dy == 0 {
        return None;
    }
    Some(Rational::new(peak.1 as i64 - awakening.1 as i64, dy))
}

/// Beauty Coefficient with the series start year as `t = 0`. The sum runs up
/// to the earliest peak `t_m`; each term is the gap between the straight line
/// from `(0, c_0)` to `(t_m, c_{t_m})` and the observed count, divided by
/// `max(1, c_t)`. Defined as 0 when the peak is the first year.
pub fn beauty_coefficient(series: &YearSeries) -> f64 {
    let counts = series.counts();
    let tm = series.peak_offset();
    if tm == 0 {
        return 0.0;
    }
    let c0 = counts[0] as i64;
    let rise = counts[tm] as i64 - c0;
    let tm_i = tm as i64;
    counts[..=tm]
        .iter()
        .enumerate()
        .map(|(t, &ct)| {
            // line(t) - c_t, scaled by t_m so the numerator stays integral
            let gap = rise * t as i64 + (c0 - ct as i64) * tm_i;
            gap as f64 / (tm_i * (ct as i64).max(1)) as f64
        })
        .sum()
}

/// Parses a non-negative decimal such as `1`, `0.75` or `2.5` into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Config(format!("not a non-negative decimal: {text:?}"));
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty()
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
        || frac.len() > 12
    {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    int.checked_mul(den)
        .and_then(|v| v.checked_add(frac))
        .map(|num| Rational::new(num, den))
        .ok_or_else(bad)
}

/// Decimal rendering of a rational, shortest round-trip form of its `f64`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    format!("{}", *r.numer() as f64 / *r.denom() as f64)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Thresholds for delayed co-citation detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionCriteria {
    pub min_total: u64,
    pub min_peak: u32,
    pub min_member_year: i32,
    pub min_sleep_years: u32,
    pub sleep_max_per_year: u32,
    pub sleep_avg_max: Rational,
}

impl Default for DetectionCriteria {
    fn default() -> Self {
        DetectionCriteria {
            min_total: 100,
            min_peak: 20,
            min_member_year: 1970,
            min_sleep_years: 10,
            sleep_max_per_year: 2,
            sleep_avg_max: Rational::from_integer(1),
        }
    }
}

impl DetectionCriteria {
    pub fn validate(&self) -> Result<()> {
        let zero = Rational::from_integer(0);
        if self.min_total == 0
            || self.min_peak == 0
            || self.min_member_year <= 0
            || self.min_sleep_years == 0
            || self.sleep_max_per_year == 0
            || self.sleep_avg_max <= zero
        {
            return Err(Error::Config(
                "delayed co-citation thresholds must be strictly positive".into(),
            ));
        }
        if self.sleep_avg_max > Rational::from_integer(self.sleep_max_per_year as i64) {
            return Err(Error::Config(
                "sleep_avg_max must not exceed sleep_max_per_year".into(),
            ));
        }
        Ok(())
    }

    /// The full delayed co-citation test on an already computed summary.
    /// `summary` must have been produced with `sleep_max_per_year` as the
    /// sleep threshold.
    pub fn accepts(&self, summary: &KineticsSummary, member_years: (i32, i32)) -> bool {
        let sleeping_ok = match (summary.sleep_duration, summary.sleep_avg, summary.sleep_max) {
            (Some(d), Some(avg), Some(max)) => {
                d >= self.min_sleep_years
                    && max <= self.sleep_max_per_year
                    && avg <= self.sleep_avg_max
            }
            _ => false,
        };
        member_years.0 >= self.min_member_year
            && member_years.1 >= self.min_member_year
            && summary.total >= self.min_total
            && summary.peak_count >= self.min_peak
            && sleeping_ok
    }
}

/// Sleeping Beauty thresholds for single-publication series, restricted to
/// one sleeping period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VanRaanCriteria {
    pub min_sleep_years: u32,
    pub sleep_avg_max: Rational,
    pub awakening_window: u32,
    pub min_awakening_intensity: Rational,
    pub sleep_threshold: u32,
}

impl Default for VanRaanCriteria {
    fn default() -> Self {
        VanRaanCriteria {
            min_sleep_years: 10,
            sleep_avg_max: Rational::from_integer(1),
            awakening_window: 5,
            min_awakening_intensity: Rational::from_integer(5),
            sleep_threshold: DEFAULT_SLEEP_THRESHOLD,
        }
    }
}

impl VanRaanCriteria {
    pub fn validate(&self) -> Result<()> {
        let zero = Rational::from_integer(0);
        if self.min_sleep_years == 0
            || self.sleep_avg_max <= zero
            || self.awakening_window == 0
            || self.min_awakening_intensity <= zero
            || self.sleep_threshold == 0
        {
            return Err(Error::Config(
                "Sleeping Beauty thresholds must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Band screening thresholds for flash-in-the-pan candidates. The band is
/// half-open: `band_min <= total < band_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlashCriteria {
    pub band_min: u64,
    pub band_max: u64,
    pub min_peak_span: u32,
    pub peak_level: u32,
}

impl Default for FlashCriteria {
    fn default() -> Self {
        FlashCriteria {
            band_min: 20,
            band_max: 100,
            min_peak_span: 10,
            peak_level: 20,
        }
    }
}

impl FlashCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.band_min == 0 || self.band_max <= self.band_min || self.peak_level == 0 {
            return Err(Error::Config(
                "flash screening needs 0 < band_min < band_max and peak_level > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn in_band(&self, total: u64) -> bool {
        (self.band_min..self.band_max).contains(&total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Delayed,
    SleepingBeauty,
    FlashInPan,
    None,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Delayed => "delayed",
            Verdict::SleepingBeauty => "sleeping_beauty",
            Verdict::FlashInPan => "flash_in_pan",
            Verdict::None => "none",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a detection record is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Pair { a: String, b: String },
    Publication(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriteriaSnapshot {
    Delayed(DetectionCriteria),
    VanRaan(VanRaanCriteria),
    Flash(FlashCriteria),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub subject: Subject,
    pub summary: KineticsSummary,
    pub verdict: Verdict,
    pub criteria: CriteriaSnapshot,
}

/// Runs the delayed co-citation test. Returns a record only for accepted
/// pairs.
pub fn detect_delayed(
    subject: Subject,
    series: &YearSeries,
    member_years: (Option<i32>, Option<i32>),
    criteria: &DetectionCriteria,
) -> Result<Option<DetectionRecord>> {
    let (Some(ya), Some(yb)) = member_years else {
        return Err(Error::Contract(format!(
            "member year missing for {subject:?}"
        )));
    };
    let summary = summarize(series, criteria.sleep_max_per_year);
    if !criteria.accepts(&summary, (ya, yb)) {
        return Ok(None);
    }
    Ok(Some(DetectionRecord {
        subject,
        summary,
        verdict: Verdict::Delayed,
        criteria: CriteriaSnapshot::Delayed(criteria.clone()),
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub enum VanRaanOutcome {
    Accepted(DetectionRecord),
    Rejected(KineticsSummary),
    /// The series ends before the awakening window is complete.
    Inconclusive(KineticsSummary),
}

impl VanRaanOutcome {
    pub fn summary(&self) -> &KineticsSummary {
        match self {
            VanRaanOutcome::Accepted(r) => &r.summary,
            VanRaanOutcome::Rejected(s) | VanRaanOutcome::Inconclusive(s) => s,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            VanRaanOutcome::Accepted(_) => "accepted",
            VanRaanOutcome::Rejected(_) => "rejected",
            VanRaanOutcome::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, VanRaanOutcome::Accepted(_))
    }
}

/// Sleeping Beauty test for a single publication's citation series, which
/// must start at its publication year.
pub fn detect_vanraan(
    subject: Subject,
    series: &YearSeries,
    criteria: &VanRaanCriteria,
) -> VanRaanOutcome {
    let summary = summarize(series, criteria.sleep_threshold);
    let (Some(awake), Some(sleep)) = (summary.awakening_year, summary.sleep_duration) else {
        return VanRaanOutcome::Rejected(summary);
    };
    let depth_ok = summary.sleep_avg.is_some_and(|avg| avg <= criteria.sleep_avg_max);
    if sleep < criteria.min_sleep_years || !depth_ok {
        return VanRaanOutcome::Rejected(summary);
    }
    let from = (awake - series.start_year()) as usize;
    let window = criteria.awakening_window as usize;
    let Some(awake_counts) = series.counts().get(from..from + window) else {
        return VanRaanOutcome::Inconclusive(summary);
    };
    let sum: i64 = awake_counts.iter().map(|&c| c as i64).sum();
    if Rational::new(sum, window as i64) < criteria.min_awakening_intensity {
        return VanRaanOutcome::Rejected(summary);
    }
    VanRaanOutcome::Accepted(DetectionRecord {
        subject,
        summary,
        verdict: Verdict::SleepingBeauty,
        criteria: CriteriaSnapshot::VanRaan(criteria.clone()),
    })
}

/// Outcome of band screening. Every in-band input lands in exactly one of
/// the three removal tallies, `flash_in_pan` or `multi_peak`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BandScreen {
    pub band_pairs: u64,
    pub out_of_band: u64,
    pub removed_short_span: u64,
    pub removed_negative_beauty: u64,
    pub removed_no_peak: u64,
    /// Survivors with exactly one year at or above the peak level.
    pub flash_in_pan: Vec<DetectionRecord>,
    /// Survivors with two or more such years.
    pub multi_peak: Vec<DetectionRecord>,
}

impl BandScreen {
    pub fn survivors(&self) -> u64 {
        (self.flash_in_pan.len() + self.multi_peak.len()) as u64
    }

    pub fn rows(&self) -> [(&'static str, u64); 8] {
        [
            ("band_pairs", self.band_pairs),
            ("out_of_band", self.out_of_band),
            ("removed_short_span", self.removed_short_span),
            ("removed_negative_beauty", self.removed_negative_beauty),
            ("removed_no_peak", self.removed_no_peak),
            ("survivors", self.survivors()),
            ("flash_in_pan", self.flash_in_pan.len() as u64),
            ("multi_peak", self.multi_peak.len() as u64),
        ]
    }
}

/// Screens series whose totals fall in the frequency band. Inputs outside
/// the band are skipped and counted in `out_of_band`.
pub fn screen_flash_in_pan<I>(items: I, criteria: &FlashCriteria) -> BandScreen
where
    I: IntoIterator<Item = (Subject, YearSeries)>,
{
    let mut screen = BandScreen::default();
    for (subject, series) in items {
        if !criteria.in_band(series.total()) {
            screen.out_of_band += 1;
            continue;
        }
        screen.band_pairs += 1;
        let summary = summarize(&series, DEFAULT_SLEEP_THRESHOLD);
        if ((summary.peak_year - summary.start_year) as u32) < criteria.min_peak_span {
            screen.removed_short_span += 1;
        } else if summary.beauty < 0.0 {
            screen.removed_negative_beauty += 1;
        } else if summary.peak_count < criteria.peak_level {
            screen.removed_no_peak += 1;
        } else {
            let peaks = series
                .counts()
                .iter()
                .filter(|&&c| c >= criteria.peak_level)
                .count();
            let single = peaks == 1;
            let record = DetectionRecord {
                subject,
                summary,
                verdict: if single { Verdict::FlashInPan } else { Verdict::None },
                criteria: CriteriaSnapshot::Flash(criteria.clone()),
            };
            if single {
                screen.flash_in_pan.push(record);
            } else {
                screen.multi_peak.push(record);
            }
        }
    }
    screen
}

pub const DETECTION_HEADER: [&str; 12] = [
    "a",
    "b",
    "total",
    "peak_year",
    "peak_count",
    "awakening_year",
    "sleep_duration",
    "sleep_avg",
    "sleep_max",
    "slope",
    "beauty",
    "verdict",
];

pub(crate) fn summary_fields(s: &KineticsSummary) -> [String; 9] {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let slope = match (&s.slope, s.slope_is_na()) {
        (Some(r), _) => format_rational(r),
        (None, true) => "NA".to_string(),
        (None, false) => String::new(),
    };
    [
        s.total.to_string(),
        s.peak_year.to_string(),
        s.peak_count.to_string(),
        opt(s.awakening_year.map(|v| v.to_string())),
        opt(s.sleep_duration.map(|v| v.to_string())),
        opt(s.sleep_avg.as_ref().map(format_rational)),
        opt(s.sleep_max.map(|v| v.to_string())),
        slope,
        format!("{}", s.beauty),
    ]
}

/// Writes pair records as detection CSV. Publication records are skipped;
/// use [`write_vanraan_csv`] for those.
pub fn write_detection_csv<'a, W, I>(out: W, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a DetectionRecord>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DETECTION_HEADER)?;
    for r in records {
        let Subject::Pair { a, b } = &r.subject else {
            continue;
        };
        let mut row = vec![a.clone(), b.clone()];
        row.extend(summary_fields(&r.summary));
        row.push(r.verdict.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::resource("detection csv", e))?;
    Ok(())
}

pub const VANRAAN_HEADER: [&str; 11] = [
    "id",
    "total",
    "peak_year",
    "peak_count",
    "awakening_year",
    "sleep_duration",
    "sleep_avg",
    "sleep_max",
    "slope",
    "beauty",
    "outcome",
];

pub fn write_vanraan_csv<'a, W, I>(out: W, outcomes: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a VanRaanOutcome)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VANRAAN_HEADER)?;
    for (id, outcome) in outcomes {
        let mut row = vec![id.to_string()];
        row.extend(summary_fields(outcome.summary()));
        row.push(outcome.label().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::resource("van Raan csv", e))?;
    Ok(())
}
