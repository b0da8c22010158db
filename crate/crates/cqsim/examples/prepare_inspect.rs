//! Inspect the uniform-superposition preparation schedule: print every
//! segment (durations, drive settings, parameter snapshots) and the final
//! interaction-picture amplitudes.
//!
//! Run with `cargo run --release --example prepare_inspect`.

use cqsim::{
    free_phase_angles, paper_cphase, prepare_uniform_superposition, propagate, CompositeSpace,
    QutritLevel, C64,
};

fn main() {
    let preset = paper_cphase();
    let params = preset.params.clone();
    let space = CompositeSpace::new(params.n_res(), preset.cutoff).unwrap();
    let schedule = prepare_uniform_superposition(&params).unwrap();
    for s in &schedule.segments {
        println!(
            "segment {} dur {:.6} origin {:.6} omega_r {:?} coupling {:?} drive {:?}",
            s.label, s.duration, s.drive_time_origin, s.params.omega_r, s.params.coupling_on,
            s.drive
        );
    }

    let input = space
        .basis_state(QutritLevel::G, &vec![0; params.n_res()])
        .unwrap();
    let (psi, _) = propagate(&input, &schedule, &preset.evolution_config()).unwrap();

    // Strip the free phases so the amplitudes are directly comparable to
    // the intended (|0> + |1>)/sqrt(2) pattern on each resonator.
    let theta = free_phase_angles(&space, &schedule).unwrap();
    println!("-- corrected amplitudes (|amp| > 1e-6):");
    for (i, (z, th)) in psi.amplitudes().iter().zip(theta.iter()).enumerate() {
        let zc = z * C64::from_polar(1.0, *th);
        if zc.norm() > 1e-6 {
            let (q, ns) = space.unindex(i);
            println!(
                "  ({q:?},{ns:?}) amp {:+.6} {:+.6}i  |amp|² {:.6} arg {:+.4} rad",
                zc.re,
                zc.im,
                zc.norm_sqr(),
                zc.arg()
            );
        }
    }
}
