//! Band screening of mid-frequency series into flash-in-the-pan and
//! multi-peak survivors.
//!
//!     cargo run --example flash_in_pan

use cocite::kinetics::{screen_flash_in_pan, FlashCriteria, Subject, YearSeries};

fn main() -> cocite::Result<()> {
    let inputs: Vec<(&str, Vec<u32>)> = vec![
        ("one spike", [vec![0; 11], vec![3, 24, 4, 1]].concat()),
        ("two spikes", [vec![0; 10], vec![21, 2, 22]].concat()),
        ("early peak", vec![5, 25, 3, 1]),
        ("never reaches 20", [vec![1; 12], vec![15, 2]].concat()),
        ("too popular", vec![60; 4]),
    ];
    let items = inputs
        .iter()
        .map(|(name, c)| Ok((Subject::Publication(name.to_string()), YearSeries::new(1980, c.clone())?)))
        .collect::<cocite::Result<Vec<_>>>()?;
    let screen = screen_flash_in_pan(items, &FlashCriteria::default());
    for (metric, n) in screen.rows() {
        println!("{metric:<24} {n}");
    }
    for r in &screen.flash_in_pan {
        println!("flash in the pan: {:?}", r.subject);
    }
    Ok(())
}
