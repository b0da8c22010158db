//! One function per named experiment: run the physics, then emit the
//! uniform output-file set (trajectory.tsv, summary.txt,
//! density_matrix.tsv, manifest.json, plus shifts.tsv for shift-table).

use std::path::{Path, PathBuf};
use std::time::Instant;

use cqsim::{
    calibrate_drive, cc_group_label, cc_shift, rotation_stage_params, run_ccphase, run_cphase,
    run_prepare, run_selective_rabi, CalibrationResult, CompositeSpace, Result, ScanRange,
};

use crate::config::{Experiment, ResolvedConfig};
use crate::output::{
    density_table, emit, empty_density_table, empty_trajectory_table, merged_trajectory_table,
    sig12, summary_text, trajectory_table, ManifestConfig,
};

fn manifest_config(cfg: &ResolvedConfig) -> ManifestConfig {
    ManifestConfig {
        experiment: cfg.experiment.name().to_string(),
        preset: cfg.preset_name.clone(),
        omega_ge_ghz: cfg.params.omega_ge,
        omega_ef_ghz: cfg.params.omega_ef,
        omega_r_ghz: cfg.params.omega_r.clone(),
        g_ge_ghz: cfg.params.g_ge.clone(),
        g_ef_ghz: cfg.params.g_ef.clone(),
        coupling_on: cfg.params.coupling_on.clone(),
        drive_amplitude_rad_per_ns: cfg.drive_amplitude,
        nominal_drive_frequency_ghz: cfg.nominal_drive_frequency,
        cutoff_photons: cfg.cutoff,
        max_step_ns: cfg.max_step,
        sample_interval_ns: cfg.sample_interval,
        target_photons: cfg.target_photons.clone(),
        scan_halfwidth_ghz: cfg.scan_halfwidth_ghz,
        seed: cfg.seed,
        seed_note: "seed is used by random-input robustness tests only; \
                    the shipped experiments are deterministic"
            .to_string(),
    }
}

fn scan_override(cfg: &ResolvedConfig) -> Option<ScanRange> {
    cfg.scan_halfwidth_ghz.map(|halfwidth| ScanRange {
        center: cfg.nominal_drive_frequency,
        halfwidth,
    })
}

fn calibration_summary(cal: &CalibrationResult) -> Vec<(&'static str, String)> {
    let mut pairs = vec![
        (
            "calibration_drive_frequency_ghz",
            sig12(cal.drive_frequency),
        ),
        (
            "calibration_resonance_frequency_ghz",
            sig12(cal.resonance_frequency),
        ),
        (
            "calibration_drive_amplitude_rad_per_ns",
            sig12(cal.drive_amplitude),
        ),
        ("calibration_pulse_duration_ns", sig12(cal.pulse_duration)),
        (
            "calibration_target_photons",
            cal.target_photons
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        (
            "calibration_selectivity",
            sig12(cal.achieved_selectivity),
        ),
        ("calibration_scan_center_ghz", sig12(cal.scan_center)),
        (
            "calibration_scan_halfwidth_ghz",
            sig12(cal.scan_halfwidth),
        ),
        (
            "calibration_scan_resolution_ghz",
            sig12(cal.scan_resolution),
        ),
        (
            "calibration_scan_points",
            cal.scan_points.to_string(),
        ),
        (
            "calibration_rescan_recommended",
            cal.rescan_recommended.to_string(),
        ),
    ];
    if let Some(f) = cal.achieved_fidelity {
        pairs.push(("calibration_oracle_fidelity", sig12(f)));
    }
    pairs
}

/// Run the configured experiment, writing its files into `out_dir`.
pub fn run(cfg: &ResolvedConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let evo = cfg.evolution_config();
    let n_res = cfg.params.n_res();

    let mut summary: Vec<(&'static str, String)> = vec![
        ("experiment", cfg.experiment.name().to_string()),
        ("preset", cfg.preset_name.clone()),
    ];
    let trajectory;
    let density;
    let mut extra_files: Vec<(&'static str, String)> = Vec::new();

    match cfg.experiment {
        Experiment::CPhase | Experiment::CCPhase => {
            let space = CompositeSpace::new(n_res, cfg.cutoff)?;
            let report = if cfg.experiment == Experiment::CPhase {
                run_cphase(
                    &space,
                    &cfg.params,
                    cfg.drive_amplitude,
                    scan_override(cfg),
                    &evo,
                )?
            } else {
                run_ccphase(
                    &space,
                    &cfg.params,
                    cfg.drive_amplitude,
                    scan_override(cfg),
                    &evo,
                )?
            };
            summary.push(("fidelity", sig12(report.fidelity)));
            summary.push((
                "fidelity_conventional",
                sig12(report.fidelity_conventional),
            ));
            summary.push(("total_time_ns", sig12(report.total_time)));
            summary.push(("leakage", sig12(report.leakage)));
            summary.push((
                "phase_invariant_rad",
                sig12(report.truth.phase_invariant),
            ));
            summary.push((
                "truth_unitarity_deviation",
                sig12(report.truth.unitarity_deviation),
            ));
            summary.extend(calibration_summary(&report.calibration));
            trajectory = trajectory_table(&report.trajectory);
            density = density_table(&report.final_reduced);
        }
        Experiment::SelectiveRabi => {
            let space = CompositeSpace::new(n_res, cfg.cutoff)?;
            let rot = rotation_stage_params(&cfg.params)?;
            let report = run_selective_rabi(
                &space,
                &rot,
                cfg.drive_amplitude,
                scan_override(cfg),
                &evo,
            )?;
            summary.push((
                "peak_transfer_target",
                sig12(report.peak_transfer_target),
            ));
            summary.push((
                "max_transfer_spectator",
                sig12(report.max_transfer_spectator),
            ));
            summary.push(("window_ns", sig12(report.window)));
            summary.push((
                "spectator_photons",
                report
                    .spectator_photons
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
            summary.extend(calibration_summary(&report.calibration));
            trajectory = merged_trajectory_table(&[
                &report.trajectory_target,
                &report.trajectory_spectator,
            ])?;
            density = empty_density_table();
        }
        Experiment::Prepare => {
            let space = CompositeSpace::new(n_res, cfg.cutoff)?;
            let report = run_prepare(&space, &cfg.params, &evo)?;
            summary.push(("fidelity", sig12(report.fidelity)));
            summary.push((
                "fidelity_conventional",
                sig12(report.fidelity_conventional),
            ));
            summary.push(("total_time_ns", sig12(report.total_time)));
            match report.entropy_bits {
                Some(bits) => summary.push(("residual_entropy_bits", sig12(bits))),
                None => summary.push(("residual_entropy_bits", "n/a".to_string())),
            }
            trajectory = trajectory_table(&report.trajectory);
            density = density_table(&report.final_reduced);
        }
        Experiment::Calibrate => {
            let space = CompositeSpace::new(n_res, cfg.cutoff)?;
            let rot = rotation_stage_params(&cfg.params)?;
            let target = cfg
                .target_photons
                .clone()
                .unwrap_or_else(|| vec![0; n_res]);
            let cal = calibrate_drive(
                &space,
                &rot,
                cfg.drive_amplitude,
                &target,
                scan_override(cfg),
            )?;
            summary.extend(calibration_summary(&cal));
            trajectory = empty_trajectory_table();
            density = empty_density_table();
        }
        Experiment::ShiftTable => {
            let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
            for (n1, n2) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
                rows.push((n1, n2, cc_group_label(n1, n2), cc_shift(&cfg.params, n1, n2)?));
            }
            rows.sort_by_key(|r| r.2);
            let mut table = String::from("n1\tn2\tN\tshift_ghz\n");
            for (n1, n2, group, shift) in &rows {
                table.push_str(&format!("{n1}\t{n2}\t{group}\t{}\n", sig12(*shift)));
                }
            summary.push((
                "groups",
                rows.iter()
                    .map(|r| r.2.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
            for (_, _, group, shift) in &rows {
                let key: &'static str = match group {
                    0 => "shift_n0_ghz",
                    2 => "shift_n2_ghz",
                    6 => "shift_n6_ghz",
                    8 => "shift_n8_ghz",
                    _ => "shift_other_ghz",
                };
                summary.push((key, sig12(*shift)));
            }
            extra_files.push(("shifts.tsv", table));
            trajectory = empty_trajectory_table();
            density = empty_density_table();
        }
    }

    let mut files: Vec<(&'static str, String)> = vec![
        ("trajectory.tsv", trajectory),
        ("summary.txt", summary_text(&summary)),
        ("density_matrix.tsv", density),
    ];
    files.append(&mut extra_files);
    emit(
        out_dir,
        &files,
        manifest_config(cfg),
        started.elapsed().as_secs_f64(),
    )
}
