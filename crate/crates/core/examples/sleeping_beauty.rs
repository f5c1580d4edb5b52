//! Single-publication Sleeping Beauty test and the Beauty Coefficient.
//!
//!     cargo run --example sleeping_beauty

use cocite::kinetics::{beauty_coefficient, detect_vanraan, Subject, VanRaanCriteria, YearSeries};

fn main() -> cocite::Result<()> {
    let criteria = VanRaanCriteria::default();
    let quiet = vec![0, 1, 0, 0, 1, 0, 2, 0, 1, 0, 0];
    let cases = [
        ("strong awakening", [quiet.clone(), vec![6, 7, 5, 6, 8, 9]].concat()),
        ("weak awakening", [quiet.clone(), vec![3, 4, 4, 5, 4, 4]].concat()),
        ("too recent", [quiet, vec![9, 9]].concat()),
    ];
    for (name, counts) in cases {
        let series = YearSeries::new(1960, counts)?;
        let outcome = detect_vanraan(Subject::Publication(name.into()), &series, &criteria);
        println!("{name:<18} {:<12} B={:.3}", outcome.label(), beauty_coefficient(&series));
    }
    Ok(())
}
