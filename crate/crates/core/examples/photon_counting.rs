//! Runs an attenuated-source counting scan and compares the tallies with
//! Poisson expectations.
//!
//! `cargo run --release --example photon_counting`

use cbw::cascade::CascadeSpec;
use cbw::montecarlo::{
    multi_photon_fraction_expectation, simulate_scan_binned, CountChannel, CountingSetup, LossChannel,
};

fn main() -> cbw::Result<()> {
    let mut setup = CountingSetup::default();
    setup.scan.rng_seed = 11;
    let cascade = CascadeSpec::new(2)?;
    let counts = simulate_scan_binned(&cascade, &setup, &LossChannel::default(), 500)?;
    let s = counts.summary;
    println!("windows            {}", s.windows);
    println!("photons            {}", s.photons);
    println!("clicks A / B       {} / {}", s.clicks_a, s.clicks_b);
    println!("coincidences       {}", s.coincidences);
    println!(
        "multi-photon share {:.4} (Poisson {:.4})",
        s.multi_photon_fraction(),
        multi_photon_fraction_expectation(setup.source.mean_photons_per_window)?
    );
    let a = counts.trace(CountChannel::A)?;
    let peak = a.values().iter().cloned().fold(0.0, f64::max);
    println!("peak counts per bin on A: {peak}");
    Ok(())
}
