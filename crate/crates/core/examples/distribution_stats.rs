//! Frequency histogram, ECDF and nearest-rank percentiles of a skewed sample.
//!
//!     cargo run --example distribution_stats

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cocite::stats::{ecdf, histogram, percentiles};

fn main() -> cocite::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sample: Vec<u64> = (0..50_000).map(|_| 1 + (rng.gen::<f64>() * 8.0).exp() as u64).collect();

    let h = histogram(sample.iter().copied())?;
    for b in h.buckets.iter().filter(|b| b.count > 0) {
        let upper = b.upper.map(|u| u.to_string()).unwrap_or_else(|| "inf".into());
        println!("({:>4}, {:>4}] {:>6} {:>6.2}%", b.lower, upper, b.count, b.percentage);
    }

    let points = ecdf(sample.iter().copied())?;
    let median_point = points.iter().find(|(_, f)| *f >= 0.5).unwrap();
    println!("ECDF crosses 0.5 at {}", median_point.0);

    let ps = [50.0, 90.0, 95.0, 99.0];
    for (p, v) in ps.iter().zip(percentiles(sample, &ps)?) {
        println!("p{p} = {v}");
    }
    Ok(())
}
