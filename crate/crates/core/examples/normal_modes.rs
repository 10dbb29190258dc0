//! Normal-mode frequencies of a chain of N coupled oscillators, against the
//! linear scaling p·ω₁ of a single pair.
//!
//! `cargo run --example normal_modes -- 6`

use cbw::analytic::normal_mode_table;

fn main() -> cbw::Result<()> {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    println!("  p   omega_p    p*omega_1  deviation");
    for row in normal_mode_table(1.0, 1.0, n)? {
        println!(
            "{:>3}  {:>8.5}  {:>10.5}  {:>9.5}",
            row.p,
            row.omega,
            row.omega - row.linear_deviation,
            row.linear_deviation
        );
    }
    Ok(())
}
