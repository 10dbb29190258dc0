//! Prints the fringe intensities, their product and the phase basis for a
//! few orders.
//!
//! `cargo run --example analytic_fringes`

use std::f64::consts::PI;

use cbw::analytic::{coincidence_product, fringe_intensity, parity_port, phase_basis, Port};

fn main() -> cbw::Result<()> {
    for n in 1..=3 {
        let basis = phase_basis(n)?;
        println!(
            "N = {n}: period 2π/{n}, node spacing {:.4} rad, bright port at φ = 0: {}",
            basis.spacing(),
            parity_port(n)?
        );
        for k in 0..=8 {
            let phi = k as f64 * PI / 8.0;
            println!(
                "  φ = {phi:.4}  I_A = {:.4}  I_B = {:.4}  R_AB = {:.4}",
                fringe_intensity(n, Port::A, phi)?.0,
                fringe_intensity(n, Port::B, phi)?.0,
                coincidence_product(n, phi)?
            );
        }
    }
    Ok(())
}
