//! Simulates count fringes for N = 1..3 and estimates visibility, period and
//! extrema from them.
//!
//! `cargo run --release --example visibility_analysis`

use cbw::analysis::{estimate_period, locate_extrema, visibility};
use cbw::cascade::CascadeSpec;
use cbw::montecarlo::{simulate_scan_binned, CountChannel, CountingSetup, LossChannel};

fn main() -> cbw::Result<()> {
    for n in 1..=3 {
        let mut setup = CountingSetup::default();
        setup.scan.rng_seed = 100 + u64::from(n);
        let counts = simulate_scan_binned(&CascadeSpec::new(n)?, &setup, &LossChannel::default(), 500)?;
        for channel in [CountChannel::A, CountChannel::B] {
            let trace = counts.trace(channel)?;
            let v = visibility(&trace, n)?;
            let p = estimate_period(&trace)?;
            let extrema = locate_extrema(&trace, n)?;
            println!(
                "N = {n} {channel:?}: V = {:.2} ± {:.2} %  period = {:.4} rad  order ≈ {:.3}  {} extrema",
                v.visibility,
                v.uncertainty,
                p.fundamental_period,
                p.order_estimate,
                extrema.len()
            );
        }
    }
    Ok(())
}
