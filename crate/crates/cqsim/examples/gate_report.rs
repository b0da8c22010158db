//! Run the bundled gate experiments straight from the library and print a
//! compact report: calibration stages, fidelities, truth-matrix diagonals.
//!
//! Usage: `cargo run --release --example gate_report [section ...]`
//! with sections from {cphase-cal, cphase-run, rabi, ccphase-cal,
//! ccphase-run}; no arguments runs all of them. The three-resonator
//! sections take tens of seconds each.

use std::time::Instant;

use cqsim::{
    calibrate_drive, paper_ccphase, paper_cphase, refine_ccphase_calibration,
    refine_cphase_calibration, rotation_stage_params, run_ccphase, run_cphase,
    run_selective_rabi, CompositeSpace, C64,
};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let all = which.is_empty();
    let has = |k: &str| all || which.iter().any(|w| w == k);

    if has("cphase-cal") {
        let preset = paper_cphase();
        let space = CompositeSpace::new(2, preset.cutoff).unwrap();
        let rot = rotation_stage_params(&preset.params).unwrap();
        let t0 = Instant::now();
        let stage_a =
            calibrate_drive(&space, &rot, preset.drive_amplitude, &[0, 0], None).unwrap();
        println!(
            "cphase stage A: wd {:.6} res {:.6} dur {:.3} sel {:.6} rescan {} [{:?}]",
            stage_a.drive_frequency,
            stage_a.resonance_frequency,
            stage_a.pulse_duration,
            stage_a.achieved_selectivity,
            stage_a.rescan_recommended,
            t0.elapsed()
        );
        let t1 = Instant::now();
        let cal = refine_cphase_calibration(&space, &preset.params, &stage_a).unwrap();
        println!(
            "cphase stage B: wd {:.6} t {:.4} F {:.6} [{:?}]",
            cal.drive_frequency,
            cal.pulse_duration,
            cal.achieved_fidelity.unwrap(),
            t1.elapsed()
        );
    }

    if has("cphase-run") {
        let preset = paper_cphase();
        let space = CompositeSpace::new(2, preset.cutoff).unwrap();
        let t0 = Instant::now();
        let report = run_cphase(
            &space,
            &preset.params,
            preset.drive_amplitude,
            None,
            &preset.evolution_config(),
        )
        .unwrap();
        println!(
            "cphase run: F {:.6} Fconv {:.6} T {:.3} leak {:.2e} phase_inv {:.4} [{:?}]",
            report.fidelity,
            report.fidelity_conventional,
            report.total_time,
            report.leakage,
            report.truth.phase_invariant,
            t0.elapsed()
        );
        print_truth(&report.truth.matrix, None);
        println!(
            "  unitarity dev {:.2e}  virtual_z {:?}",
            report.truth.unitarity_deviation, report.truth.virtual_z
        );
    }

    if has("rabi") {
        let preset = paper_cphase();
        let space = CompositeSpace::new(2, preset.cutoff).unwrap();
        let rot = rotation_stage_params(&preset.params).unwrap();
        let t0 = Instant::now();
        let rep = run_selective_rabi(
            &space,
            &rot,
            preset.drive_amplitude,
            None,
            &preset.evolution_config(),
        )
        .unwrap();
        println!(
            "selective rabi: peak_target {:.6} max_spectator {:.6} window {:.2} wd {:.6} [{:?}]",
            rep.peak_transfer_target,
            rep.max_transfer_spectator,
            rep.window,
            rep.calibration.drive_frequency,
            t0.elapsed()
        );
    }

    if has("ccphase-cal") {
        let preset = paper_ccphase();
        let space = CompositeSpace::new(3, preset.cutoff).unwrap();
        let rot = rotation_stage_params(&preset.params).unwrap();
        let t0 = Instant::now();
        let stage_a =
            calibrate_drive(&space, &rot, preset.drive_amplitude, &[1, 1, 0], None).unwrap();
        println!(
            "ccphase stage A: wd {:.6} res {:.6} dur {:.3} sel {:.6} rescan {} [{:?}]",
            stage_a.drive_frequency,
            stage_a.resonance_frequency,
            stage_a.pulse_duration,
            stage_a.achieved_selectivity,
            stage_a.rescan_recommended,
            t0.elapsed()
        );
        let t1 = Instant::now();
        let cal = refine_ccphase_calibration(&space, &preset.params, &stage_a).unwrap();
        println!(
            "ccphase stage B: wd {:.6} (det {:+.4} MHz) t {:.4} F {:.6} [{:?}]",
            cal.drive_frequency,
            (cal.drive_frequency - cal.resonance_frequency) * 1e3,
            cal.pulse_duration,
            cal.achieved_fidelity.unwrap(),
            t1.elapsed()
        );
    }

    if has("ccphase-run") {
        let preset = paper_ccphase();
        let space = CompositeSpace::new(3, preset.cutoff).unwrap();
        let t0 = Instant::now();
        let report = run_ccphase(
            &space,
            &preset.params,
            preset.drive_amplitude,
            None,
            &preset.evolution_config(),
        )
        .unwrap();
        println!(
            "ccphase run: F {:.6} Fconv {:.6} T {:.3} leak {:.2e} phase_inv {:.4} [{:?}]",
            report.fidelity,
            report.fidelity_conventional,
            report.total_time,
            report.leakage,
            report.truth.phase_invariant,
            t0.elapsed()
        );
        println!(
            "cal: wd {:.6} (det {:+.4} MHz) t {:.4} Foracle {:.6}",
            report.calibration.drive_frequency,
            (report.calibration.drive_frequency - report.calibration.resonance_frequency) * 1e3,
            report.calibration.pulse_duration,
            report.calibration.achieved_fidelity.unwrap()
        );
        print_truth(&report.truth.matrix, Some(C64::new(1.0, 0.0)));
        println!("  unitarity dev {:.2e}", report.truth.unitarity_deviation);
    }
}

/// Print the diagonal of a truth matrix (optionally with each entry's
/// deviation from a reference value) and the largest off-diagonal magnitude.
fn print_truth(m: &ndarray::Array2<C64>, dev_from: Option<C64>) {
    let k = m.nrows();
    println!("truth diag:");
    for i in 0..k {
        let z = m[(i, i)];
        match dev_from {
            Some(r) => println!(
                "  [{i}][{i}] = {:+.5} {:+.5}i  |dev| {:.4}",
                z.re,
                z.im,
                (z - r).norm()
            ),
            None => println!("  [{i}][{i}] = {:+.5} {:+.5}i", z.re, z.im),
        }
    }
    let mut maxoff = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                maxoff = maxoff.max(m[(i, j)].norm());
            }
        }
    }
    println!("  max |off-diag| {maxoff:.2e}");
}
