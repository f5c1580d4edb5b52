use proptest::prelude::*;

use cocite::kinetics::{
    beauty_coefficient, detect_delayed, detect_vanraan, screen_flash_in_pan, summarize, DetectionCriteria,
    FlashCriteria, Rational, Subject, VanRaanCriteria, YearSeries,
};

fn series(counts: &[u32]) -> YearSeries {
    YearSeries::new(1980, counts.to_vec()).unwrap()
}

fn pair() -> Subject {
    Subject::Pair {
        a: "A".into(),
        b: "B".into(),
    }
}

/// Direct floating point transcription of the coefficient.
fn beauty_oracle(c: &[u32]) -> f64 {
    let max = *c.iter().max().unwrap();
    let tm = c.iter().position(|&x| x == max).unwrap();
    if tm == 0 {
        return 0.0;
    }
    let (c0, ctm) = (c[0] as f64, c[tm] as f64);
    (0..=tm)
        .map(|t| ((ctm - c0) / tm as f64 * t as f64 + c0 - c[t] as f64) / (c[t] as f64).max(1.0))
        .sum()
}

#[test]
fn frozen_beauty_values() {
    let cases: [(&[u32], f64); 3] = [
        (&[0, 0, 0, 5], 5.0),
        (&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 9, 20, 12], 96.13675213675214),
        (&[2, 1, 1, 0, 5, 21], 29.24),
    ];
    for (c, want) in cases {
        let got = beauty_coefficient(&series(c));
        assert!((got - want).abs() < 1e-9, "{c:?}: {got} vs {want}");
        assert!((beauty_oracle(c) - want).abs() < 1e-9);
    }
}

#[test]
fn peak_at_start_has_zero_beauty() {
    assert_eq!(beauty_coefficient(&series(&[9, 3, 1, 0])), 0.0);
    assert_eq!(beauty_coefficient(&series(&[4])), 0.0);
}

fn counts_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..40, 1..40)
}

proptest! {
    #[test]
    fn beauty_matches_oracle(c in counts_strategy()) {
        let b = beauty_coefficient(&series(&c));
        prop_assert!((b - beauty_oracle(&c)).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn beauty_ignores_years_after_peak(c in counts_strategy(), tail in prop::collection::vec(0u32..40, 0..10)) {
        let peak = *c.iter().max().unwrap();
        let mut longer = c.clone();
        longer.extend(tail.into_iter().map(|x| x.min(peak.saturating_sub(1))));
        prop_assert_eq!(beauty_coefficient(&series(&c)), beauty_coefficient(&series(&longer)));
    }

    #[test]
    fn peak_is_earliest_maximum(c in counts_strategy()) {
        let s = summarize(&series(&c), 2);
        let max = *c.iter().max().unwrap();
        prop_assert_eq!(s.peak_count, max);
        let first = c.iter().position(|&x| x == max).unwrap();
        prop_assert_eq!(s.peak_year, 1980 + first as i32);
    }

    #[test]
    fn accepted_pairs_really_slept(c in prop::collection::vec(0u32..30, 10..40), scale in 1u32..8) {
        let crit = DetectionCriteria { min_total: 20, min_peak: 10, ..Default::default() };
        let c: Vec<u32> = c.iter().enumerate().map(|(i, &x)| if i < 12 { x % 3 } else { x * scale }).collect();
        if let Some(rec) = detect_delayed(pair(), &series(&c), (Some(1975), Some(1980)), &crit).unwrap() {
            let s = &rec.summary;
            let sleep = s.sleep_duration.unwrap() as usize;
            prop_assert!(sleep >= 10);
            prop_assert!(c[..sleep].iter().all(|&x| x <= 2));
            prop_assert!(c[sleep] > 2);
            let avg = Rational::new(c[..sleep].iter().map(|&x| x as i64).sum(), sleep as i64);
            prop_assert!(avg <= Rational::from_integer(1));
            prop_assert!(s.total >= 20 && s.peak_count >= 10);
            prop_assert!(s.slope.is_none_or(|v| v >= Rational::from_integer(0)));
        }
    }

    #[test]
    fn raising_a_threshold_never_adds_detections(c in prop::collection::vec(0u32..30, 12..40), bump in 1u64..50) {
        let c: Vec<u32> = c.iter().enumerate().map(|(i, &x)| if i < 11 { x % 2 } else { x * 3 }).collect();
        let loose = DetectionCriteria { min_total: 20, min_peak: 10, ..Default::default() };
        let strict = DetectionCriteria { min_total: 20 + bump, min_peak: 10 + bump as u32, min_sleep_years: 11, ..loose.clone() };
        let s = series(&c);
        let years = (Some(1975), Some(1979));
        if detect_delayed(pair(), &s, years, &strict).unwrap().is_some() {
            prop_assert!(detect_delayed(pair(), &s, years, &loose).unwrap().is_some());
        }
    }
}

#[test]
fn member_year_gate_and_missing_years() {
    let mut c = vec![0; 12];
    c.extend([5, 30, 40, 60]);
    let crit = DetectionCriteria::default();
    assert!(detect_delayed(pair(), &series(&c), (Some(1970), Some(1980)), &crit).unwrap().is_some());
    assert!(detect_delayed(pair(), &series(&c), (Some(1969), Some(1980)), &crit).unwrap().is_none());
    assert!(detect_delayed(pair(), &series(&c), (None, Some(1980)), &crit).is_err());
}

#[test]
fn van_raan_requires_sleep_and_window() {
    let crit = VanRaanCriteria::default();
    let mut deep = vec![1; 10];
    deep.extend([5, 5, 5, 5, 5]);
    let pub_ = || Subject::Publication("P".into());
    assert!(detect_vanraan(pub_(), &series(&deep), &crit).is_accepted());
    let mut restless = vec![2; 10];
    restless.extend([9, 9, 9, 9, 9]);
    assert_eq!(detect_vanraan(pub_(), &series(&restless), &crit).label(), "rejected");
    let mut short = vec![0; 9];
    short.extend([9, 9, 9, 9, 9]);
    assert_eq!(detect_vanraan(pub_(), &series(&short), &crit).label(), "rejected");
    assert_eq!(detect_vanraan(pub_(), &series(&[0; 20]), &crit).label(), "rejected");
}

#[test]
fn band_screen_partitions_inputs() {
    let crit = FlashCriteria::default();
    let mut single = vec![0; 10];
    single.extend([2, 25, 3]);
    let mut twin = vec![0; 10];
    twin.extend([20, 21]);
    let mut early = vec![1; 3];
    early.extend([25, 1]);
    let mut falling = vec![0];
    falling.extend([3; 10]);
    falling.push(5);
    let mut low = vec![1; 12];
    low.extend([15, 2]);
    let inputs = [single, twin, early, falling, low, vec![0, 1, 2], vec![50; 3]];
    let screen = screen_flash_in_pan(inputs.iter().map(|c| (pair(), series(c))), &crit);
    assert_eq!(screen.band_pairs, 5);
    assert_eq!(screen.out_of_band, 2);
    assert_eq!(screen.removed_short_span, 1);
    assert_eq!(screen.removed_negative_beauty, 1);
    assert_eq!(screen.removed_no_peak, 1);
    assert_eq!(screen.flash_in_pan.len(), 1);
    assert_eq!(screen.multi_peak.len(), 1);
    assert_eq!(
        screen.removed_short_span
            + screen.removed_negative_beauty
            + screen.removed_no_peak
            + screen.survivors(),
        screen.band_pairs
    );
}
