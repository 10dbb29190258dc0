//! Builds the unit MZI from a beam splitter and phase plate and checks that
//! it stays unitary and conserves photon number.
//!
//! `cargo run --example transfer_matrices`

use cbw::cascade::unit_mzi;
use cbw::optics::{apply, beam_splitter, intensities, phase_plate, FieldPair};

fn main() -> cbw::Result<()> {
    let bs = beam_splitter();
    println!("beam splitter unitary: {}", bs.is_unitary(1e-12));

    for phi in [0.0, 0.25, 1.0, std::f64::consts::PI] {
        let bpb = bs * phase_plate(phi)? * bs;
        let u = unit_mzi(phi)?;
        let out = apply(&u, &FieldPair::upper_port());
        let (a, b) = intensities(&out);
        println!(
            "phi = {phi:.3}: unitary U {} BPB {}, upper = {:.6}, lower = {:.6}, sum = {:.15}",
            u.is_unitary(1e-12),
            bpb.is_unitary(1e-12),
            a.0,
            b.0,
            a.0 + b.0
        );
    }
    Ok(())
}
