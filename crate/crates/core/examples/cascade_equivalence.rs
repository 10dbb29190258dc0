//! Compares the stage-by-stage chain with the closed form and with the Nth
//! power of the unit MZI.
//!
//! `cargo run --example cascade_equivalence -- 5`

use cbw::analytic::parity_port;
use cbw::cascade::{
    closed_form, equal_up_to_global_phase, equal_up_to_port_phases, explicit_cascade, mzi_power, output_intensities,
    CascadeSpec,
};
use cbw::optics::FieldPair;

fn main() -> cbw::Result<()> {
    let max_order: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let phi = 0.7;
    let input = FieldPair::upper_port();
    println!("phi = {phi}");
    println!("  N  global-phase  port-phases  I_A(chain)  I_A(closed)  I(U^N upper)  parity port");
    for n in 1..=max_order {
        let spec = CascadeSpec::new(n)?;
        let chain = explicit_cascade(&spec, phi);
        let closed = closed_form(&spec, phi)?;
        let power = mzi_power(phi, n)?;
        let (a_chain, _) = output_intensities(&chain, &input);
        let (a_closed, _) = output_intensities(&closed, &input);
        let (u_upper, _) = output_intensities(&power, &input);
        println!(
            "{n:>3}  {:>12}  {:>11}  {:>10.6}  {:>11.6}  {:>12.6}  {:>11}",
            equal_up_to_global_phase(&chain, &closed, 1e-12)?,
            equal_up_to_port_phases(&chain, &closed, 1e-12)?,
            a_chain.0,
            a_closed.0,
            u_upper.0,
            parity_port(n)?
        );
    }
    Ok(())
}
