//! Frequency distribution tables, ECDF, percentiles and cohort summaries.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kinetics::{rational_to_f64, DetectionRecord};

/// Upper bound of the last closed histogram bucket; larger values fall in
/// the open-ended final bucket.
pub const DEFAULT_LAST_BOUND: u64 = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    /// Exclusive lower bound.
    pub lower: u64,
    /// Inclusive upper bound; `None` for the open-ended bucket.
    pub upper: Option<u64>,
    pub count: u64,
    pub percentage: f64,
}

/// Frequency classes `(0,2]`, `(2,4]`, `(4,8]`, ... up to the last bound,
/// then everything above it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyHistogram {
    pub buckets: Vec<Bucket>,
    pub total: u64,
}

impl FrequencyHistogram {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lower", "upper", "count", "percentage"])?;
        for b in &self.buckets {
            let upper = b.upper.map_or_else(|| "inf".to_string(), |u| u.to_string());
            w.write_record([
                b.lower.to_string(),
                upper,
                b.count.to_string(),
                format!("{}", b.percentage),
            ])?;
        }
        w.flush().map_err(|e| Error::resource("histogram csv", e))
    }
}

/// Single-pass, mergeable histogram accumulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramBuilder {
    bounds: Vec<u64>,
    counts: Vec<u64>,
}

impl Default for HistogramBuilder {
    fn default() -> Self {
        Self::new(DEFAULT_LAST_BOUND).expect("default bound is valid")
    }
}

impl HistogramBuilder {
    /// `last_bound` must be a power of two, at least 2.
    pub fn new(last_bound: u64) -> Result<Self> {
        if last_bound < 2 || !last_bound.is_power_of_two() {
            return Err(Error::Config(format!(
                "histogram last bound must be a power of two >= 2, got {last_bound}"
            )));
        }
        let mut bounds = vec![2u64];
        while *bounds.last().unwrap() < last_bound {
            bounds.push(bounds.last().unwrap() * 2);
        }
        let counts = vec![0; bounds.len() + 1];
        Ok(HistogramBuilder { bounds, counts })
    }

    pub fn add(&mut self, value: u64) -> Result<()> {
        if value < 1 {
            return Err(Error::Data(format!("frequency {value} is below 1")));
        }
        let i = self.bounds.partition_point(|&b| b < value);
        self.counts[i] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &HistogramBuilder) -> Result<()> {
        if self.bounds != other.bounds {
            return Err(Error::Contract("merging histograms with different bounds".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn finish(&self) -> FrequencyHistogram {
        let total: u64 = self.counts.iter().sum();
        let buckets = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &count)| Bucket {
                lower: if i == 0 { 0 } else { self.bounds[i - 1] },
                upper: self.bounds.get(i).copied(),
                count,
                percentage: if total == 0 {
                    0.0
                } else {
                    count as f64 * 100.0 / total as f64
                },
            })
            .collect();
        FrequencyHistogram { buckets, total }
    }
}

pub fn histogram<I: IntoIterator<Item = u64>>(frequencies: I) -> Result<FrequencyHistogram> {
    let mut h = HistogramBuilder::default();
    for f in frequencies {
        h.add(f)?;
    }
    Ok(h.finish())
}

fn value_counts<I: IntoIterator<Item = u64>>(values: I) -> (BTreeMap<u64, u64>, u64) {
    let mut counts = BTreeMap::new();
    let mut n = 0;
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
        n += 1;
    }
    (counts, n)
}

/// `(value, fraction of observations <= value)` at every distinct value.
pub fn ecdf<I: IntoIterator<Item = u64>>(frequencies: I) -> Result<Vec<(u64, f64)>> {
    let (counts, n) = value_counts(frequencies);
    if n == 0 {
        return Err(Error::Data("ECDF of an empty sample".into()));
    }
    let mut seen = 0;
    Ok(counts
        .into_iter()
        .map(|(v, c)| {
            seen += c;
            (v, seen as f64 / n as f64)
        })
        .collect())
}

pub fn write_ecdf_csv<W: Write>(out: W, points: &[(u64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frequency", "cumulative_fraction"])?;
    for (v, f) in points {
        w.write_record([v.to_string(), format!("{f}")])?;
    }
    w.flush().map_err(|e| Error::resource("ecdf csv", e))
}

/// Nearest-rank percentiles: the value at 1-based rank `ceil(p/100 * n)` of
/// the ascending sample. `p` must lie in `(0, 100]` with at most six decimal
/// places.
pub fn percentiles<I: IntoIterator<Item = u64>>(values: I, requested: &[f64]) -> Result<Vec<u64>> {
    let mut scaled = Vec::with_capacity(requested.len());
    for &p in requested {
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::Config(format!("percentile {p} outside (0, 100]")));
        }
        scaled.push((p * 1e6).round() as u128);
    }
    let (counts, n) = value_counts(values);
    if n == 0 {
        return Err(Error::Data("percentiles of an empty sample".into()));
    }
    Ok(scaled
        .into_iter()
        .map(|p| {
            let rank = (p * n as u128).div_ceil(100_000_000).max(1) as u64;
            let mut seen = 0;
            counts
                .iter()
                .find(|(_, &c)| {
                    seen += c;
                    seen >= rank
                })
                .map(|(&v, _)| v)
                .expect("rank within sample")
        })
        .collect())
}

/// Order statistics of one cohort column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between closest ranks, `h = (n-1)q`.
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ColumnSummary {
    pub fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(ColumnSummary {
            min: values[0],
            q1: interpolated_quantile(&values, 0.25),
            median: interpolated_quantile(&values, 0.5),
            mean,
            q3: interpolated_quantile(&values, 0.75),
            max: *values.last().unwrap(),
        })
    }

    fn get(&self, stat: usize) -> f64 {
        [self.min, self.q1, self.median, self.mean, self.q3, self.max][stat]
    }
}

const STATISTICS: [&str; 6] = ["min", "q1", "median", "mean", "q3", "max"];

/// Summary of a detection cohort. `slope` is `None` when every slope in the
/// cohort is `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub cohort_size: usize,
    pub total: ColumnSummary,
    pub sleep_duration: Option<ColumnSummary>,
    pub slope: Option<ColumnSummary>,
    pub beauty: ColumnSummary,
    pub peak: ColumnSummary,
    /// Records whose slope was `NA` or absent.
    pub slope_excluded: usize,
}

impl SummaryTable {
    /// Writes `statistic,total,sleep_duration,slope,beauty`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statistic", "total", "sleep_duration", "slope", "beauty"])?;
        let cell = |c: Option<&ColumnSummary>, i| c.map(|c| format!("{}", c.get(i))).unwrap_or_default();
        for (i, stat) in STATISTICS.iter().enumerate() {
            w.write_record([
                stat.to_string(),
                cell(Some(&self.total), i),
                cell(self.sleep_duration.as_ref(), i),
                cell(self.slope.as_ref(), i),
                cell(Some(&self.beauty), i),
            ])?;
        }
        w.flush().map_err(|e| Error::resource("summary csv", e))
    }

    /// Writes `statistic,peak` for the peak-count column.
    pub fn write_peak_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statistic", "peak"])?;
        for (i, stat) in STATISTICS.iter().enumerate() {
            w.write_record([stat.to_string(), format!("{}", self.peak.get(i))])?;
        }
        w.flush().map_err(|e| Error::resource("peak summary csv", e))
    }
}

pub fn summarize_cohort(records: &[DetectionRecord]) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::Data("cannot summarise an empty cohort".into()));
    }
    let col = |f: &dyn Fn(&DetectionRecord) -> Option<f64>| {
        ColumnSummary::from_values(records.iter().filter_map(f).collect())
    };
    let slopes: Vec<f64> = records
        .iter()
        .filter_map(|r| r.summary.slope.as_ref().map(rational_to_f64))
        .collect();
    Ok(SummaryTable {
        cohort_size: records.len(),
        total: col(&|r| Some(r.summary.total as f64)).expect("non-empty"),
        sleep_duration: col(&|r| r.summary.sleep_duration.map(f64::from)),
        slope_excluded: records.len() - slopes.len(),
        slope: ColumnSummary::from_values(slopes),
        beauty: col(&|r| Some(r.summary.beauty)).expect("non-empty"),
        peak: col(&|r| Some(r.summary.peak_count as f64)).expect("non-empty"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{summarize, CriteriaSnapshot, DetectionCriteria, Subject, Verdict, YearSeries};

    #[test]
    fn table_bucket_convention() {
        let h = histogram([1, 1, 2, 3, 9]).unwrap();
        assert_eq!(h.total, 5);
        let nonzero: Vec<_> = h
            .buckets
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.lower, b.upper, b.count))
            .collect();
        assert_eq!(nonzero, vec![(0, Some(2), 3), (2, Some(4), 1), (8, Some(16), 1)]);
        assert_eq!(h.buckets.len(), 12);
        assert_eq!(h.buckets.last().unwrap().lower, 2048);
        assert_eq!(h.buckets.last().unwrap().upper, None);
    }

    #[test]
    fn histogram_boundaries_and_errors() {
        let h = histogram([2, 4, 2048, 2049, 52471]).unwrap();
        let counts: Vec<u64> = h.buckets.iter().map(|b| b.count).collect();
        assert_eq!(counts[0], 1);
        assert_eq!(counts[1], 1);
        assert_eq!(counts[10], 1);
        assert_eq!(counts[11], 2);
        assert!(matches!(histogram([0]), Err(Error::Data(_))));
        assert!(HistogramBuilder::new(1000).is_err());
    }

    #[test]
    fn histogram_csv_layout() {
        let mut buf = Vec::new();
        histogram([1, 3]).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lower,upper,count,percentage\n0,2,1,50\n2,4,1,50\n4,8,0,0\n"));
        assert!(text.ends_with("2048,inf,0,0\n"));
    }

    #[test]
    fn ecdf_three_elements() {
        let e = ecdf([1, 1, 2]).unwrap();
        assert_eq!(e, vec![(1, 2.0 / 3.0), (2, 1.0)]);
        assert!(ecdf(Vec::new()).is_err());
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentiles(v.clone(), &[90.0, 0.5, 100.0]).unwrap(), vec![90, 1, 100]);
        assert_eq!(percentiles([5, 1, 3], &[50.0]).unwrap(), vec![3]);
        assert!(percentiles(v.clone(), &[0.0]).is_err());
        assert!(percentiles(v, &[100.5]).is_err());
        assert!(percentiles(Vec::new(), &[50.0]).is_err());
    }

    fn record(counts: &[u32]) -> DetectionRecord {
        DetectionRecord {
            subject: Subject::Pair { a: "a".into(), b: "b".into() },
            summary: summarize(&YearSeries::new(1980, counts.to_vec()).unwrap(), 2),
            verdict: Verdict::Delayed,
            criteria: CriteriaSnapshot::Delayed(DetectionCriteria::default()),
        }
    }

    #[test]
    fn interpolated_quartiles_match_numpy() {
        // numpy.quantile defaults, evaluated offline
        let c = ColumnSummary::from_values(vec![3., 1., 4., 1., 5., 9., 2., 6., 5., 3., 5., 8., 9., 7., 9.]).unwrap();
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (1.0, 3.0, 5.0, 7.5, 9.0));
        assert!((c.mean - 5.133333333333334).abs() < 1e-12);
        let c = ColumnSummary::from_values(vec![10.5, 2.25, 7.0, 7.0, 1.0, 13.75]).unwrap();
        assert_eq!((c.q1, c.median, c.q3), (3.4375, 7.0, 9.625));
    }

    #[test]
    fn singleton_cohort() {
        let r = record(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 30, 80]);
        let t = summarize_cohort(std::slice::from_ref(&r)).unwrap();
        for i in 0..6 {
            assert_eq!(t.total.get(i), 113.0);
            assert_eq!(t.sleep_duration.unwrap().get(i), 11.0);
            assert_eq!(t.slope.unwrap().get(i), 38.5);
            assert_eq!(t.beauty.get(i), r.summary.beauty);
        }
        assert_eq!(t.slope_excluded, 0);
    }

    #[test]
    fn na_slopes_excluded() {
        let na = record(&[0, 0, 40]);
        let t = summarize_cohort(&[na.clone(), record(&[0, 3, 5])]).unwrap();
        assert_eq!(t.slope_excluded, 1);
        assert_eq!(t.slope.unwrap().min, 2.0);
        let only_na = summarize_cohort(&[na]).unwrap();
        assert!(only_na.slope.is_none());
        let mut buf = Vec::new();
        only_na.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("\nmin,40,2,,20\n"));
        assert!(summarize_cohort(&[]).is_err());
    }
}
