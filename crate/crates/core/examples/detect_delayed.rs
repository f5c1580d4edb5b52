//! Summarise a few co-citation series and run the delayed co-citation test.
//!
//!     cargo run --example detect_delayed

use cocite::kinetics::{detect_delayed, format_rational, summarize, DetectionCriteria, Subject, YearSeries};

fn main() -> cocite::Result<()> {
    let criteria = DetectionCriteria::default();
    let cases: [(&str, i32, Vec<u32>); 3] = [
        ("slept twelve years", 1978, [vec![0, 1, 0, 0, 2, 0, 1, 0, 0, 1, 0, 0], vec![4, 12, 25, 31, 28, 19]].concat()),
        ("noisy sleep", 1978, [vec![0, 3, 0, 0, 2, 0, 1, 0, 0, 1, 0, 0], vec![4, 12, 25, 31, 28, 19]].concat()),
        ("cited at once", 1990, vec![30, 28, 25, 21, 18, 12]),
    ];
    for (name, start, counts) in cases {
        let series = YearSeries::new(start, counts)?;
        let s = summarize(&series, criteria.sleep_max_per_year);
        let subject = Subject::Pair { a: "A".into(), b: "B".into() };
        let verdict = detect_delayed(subject, &series, (Some(start - 3), Some(start)), &criteria)?;
        println!(
            "{name:<20} total={:<4} peak={}@{} awake={:?} sleep={:?} slope={} B={:.2} -> {}",
            s.total,
            s.peak_count,
            s.peak_year,
            s.awakening_year,
            s.sleep_duration,
            s.slope.as_ref().map(format_rational).unwrap_or_else(|| "NA".into()),
            s.beauty,
            if verdict.is_some() { "delayed" } else { "-" }
        );
    }
    Ok(())
}
