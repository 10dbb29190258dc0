//! Repeats a counting scan at several transmissions: the count rate drops
//! with loss while the visibility does not.
//!
//! `cargo run --release --example loss_study`

use cbw::analysis::loss_invariance_study;
use cbw::cascade::CascadeSpec;
use cbw::montecarlo::CountingSetup;

fn main() -> cbw::Result<()> {
    let mut setup = CountingSetup::default();
    setup.scan.rng_seed = 5;
    let study = loss_invariance_study(&CascadeSpec::new(2)?, &[1.0, 0.5, 0.1], &setup, 500)?;
    for r in &study.rows {
        println!(
            "T = {:<4} V = {:6.2} ± {:.2} %  rate = {:.5} (expected {:.5})",
            r.transmission, r.visibility.visibility, r.visibility.uncertainty, r.mean_count_rate, r.expected_count_rate
        );
    }
    println!("visibility spread: {:.2} pp", study.visibility_spread);
    Ok(())
}
