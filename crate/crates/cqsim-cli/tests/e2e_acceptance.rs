//! End-to-end acceptance suite.
//!
//! Each test covers one numbered acceptance criterion and prints a single
//! `criterion N: PASS/FAIL — details` line before asserting, so running with
//! `cargo test -p cqsim-cli --test acceptance -- --nocapture` yields a
//! one-line verdict per criterion. A failing criterion still prints its line
//! (captured output is replayed on failure).

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cqsim::hilbert::total_excitation;
use cqsim::{
    build_static, cc_group_label, cc_shift, dispersive_shift_two_level, exact_shift_two_level,
    extract_truth_matrix, paper_ccphase, paper_cphase, partial_trace, resonant_swap_segment,
    rotation_stage_params, run_ccphase, run_cphase, run_prepare, run_selective_rabi,
    uhlmann_fidelity, uhlmann_fidelity_conventional, CompositeSpace, DensityMatrix, DriveParams,
    GateReport, Schedule, Segment, StateVector, SwapFraction, SystemParams, C64,
};

const PI: f64 = std::f64::consts::PI;

fn verdict(n: usize, pass: bool, details: &str) {
    println!(
        "criterion {n}: {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Shared two-resonator conditional-phase run (criteria 2 and 6).
fn cphase_report() -> &'static GateReport {
    static REPORT: OnceLock<GateReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let preset = paper_cphase();
        let space = CompositeSpace::new(2, preset.cutoff).unwrap();
        run_cphase(
            &space,
            &preset.params,
            preset.drive_amplitude,
            None,
            &preset.evolution_config(),
        )
        .unwrap()
    })
}

#[test]
fn criterion_1_state_selective_rotation() {
    let preset = paper_cphase();
    let space = CompositeSpace::new(2, preset.cutoff).unwrap();
    let rot = rotation_stage_params(&preset.params).unwrap();
    let started = Instant::now();
    let rep = run_selective_rabi(
        &space,
        &rot,
        preset.drive_amplitude,
        None,
        &preset.evolution_config(),
    )
    .unwrap();
    let secs = started.elapsed().as_secs_f64();

    let pass = rep.peak_transfer_target >= 0.99 && rep.max_transfer_spectator <= 0.05 && secs < 30.0;
    verdict(
        1,
        pass,
        &format!(
            "target-group peak transfer {:.6} (need >= 0.99), spectator-group max transfer {:.6} \
             (need <= 0.05, spectator photons {:?}), runtime {secs:.1} s (need < 30 s)",
            rep.peak_transfer_target, rep.max_transfer_spectator, rep.spectator_photons
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_two_qudit_conditional_phase() {
    let rep = cphase_report();

    let f_ok = rep.fidelity >= 0.985;
    let dur_ok = (46.5..=139.5).contains(&rep.total_time);

    // Truth matrix vs the ideal diag(1, 1, 1, -1), elementwise.
    let m = rep.truth_matrix();
    let mut truth_dev = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let ideal = if i == j {
                C64::new(if i == 3 { -1.0 } else { 1.0 }, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            truth_dev = truth_dev.max((m[(i, j)] - ideal).norm());
        }
    }
    let truth_ok = truth_dev <= 0.05;
    let phase_dev = (rep.truth.phase_invariant.abs() - PI).abs();
    let phase_ok = phase_dev <= 0.05;

    let pass = f_ok && dur_ok && truth_ok && phase_ok;
    verdict(
        2,
        pass,
        &format!(
            "fidelity {:.6} (need >= 0.985), duration {:.2} ns (need 46.5..139.5), \
             truth-matrix deviation from diag(1,1,1,-1) {:.4} (need <= 0.05), \
             conditional phase off by {:.4} rad from pi (need <= 0.05)",
            rep.fidelity, rep.total_time, truth_dev, phase_dev
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_three_qudit_conditional_phase() {
    let preset = paper_ccphase();
    let space = CompositeSpace::new(3, preset.cutoff).unwrap();
    let rep = run_ccphase(
        &space,
        &preset.params,
        preset.drive_amplitude,
        None,
        &preset.evolution_config(),
    )
    .unwrap();

    let f_ok = rep.fidelity >= 0.90;
    let dur_ok = (62.32..=186.96).contains(&rep.total_time);

    // The sign flip must be confined to the all-ones configuration: every
    // other diagonal within 0.08 of +1.
    let m = rep.truth_matrix();
    let mut worst_dev = 0.0f64;
    let mut worst_cfg = String::new();
    for (i, cfg) in rep.truth.configs.iter().enumerate() {
        if cfg.iter().all(|&n| n == 1) {
            continue;
        }
        let dev = (m[(i, i)] - C64::new(1.0, 0.0)).norm();
        if dev > worst_dev {
            worst_dev = dev;
            worst_cfg = format!("{cfg:?}");
        }
    }
    let confined_ok = worst_dev <= 0.08;

    let pass = f_ok && dur_ok && confined_ok;
    verdict(
        3,
        pass,
        &format!(
            "fidelity {:.6} (need >= 0.90), duration {:.2} ns (need 62.32..186.96), \
             worst spectator diagonal deviation from +1 is {:.3} at photons {worst_cfg} \
             (need <= 0.08)",
            rep.fidelity, rep.total_time, worst_dev
        ),
    );
    assert!(
        pass,
        "three-qudit gate falls short at the published operating point: fidelity {:.4} < 0.90 \
         and spectator diagonals deviate up to {:.2} from +1. The single weak drive cannot \
         fully separate the four dressed photon groups at this amplitude/detuning budget; \
         see README 'Known limitations' for the analysis.",
        rep.fidelity, worst_dev
    );
}

#[test]
fn criterion_4_frequency_grouping() {
    let preset = paper_ccphase();
    let p = &preset.params;

    let mut rows: Vec<(usize, f64)> = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(n1, n2)| (cc_group_label(n1, n2), cc_shift(p, n1, n2).unwrap()))
        .collect();
    rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

    let mut distinct = true;
    for w in rows.windows(2) {
        if (w[1].1 - w[0].1).abs() <= 1e-9 {
            distinct = false;
        }
    }
    let labels: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let ordered = labels == vec![0, 2, 6, 8];

    let d1 = p.omega_ef - p.omega_r[0];
    let d2 = p.omega_ef - p.omega_r[1];
    let ratio_dev = (3.0 * p.g_ef[0] * p.g_ef[0] / d1 - p.g_ef[1] * p.g_ef[1] / d2).abs();
    let ratio_ok = ratio_dev <= 1e-12;

    let pass = distinct && ordered && ratio_ok;
    verdict(
        4,
        pass,
        &format!(
            "shift-sorted group labels {labels:?} (need [0, 2, 6, 8], four distinct shifts: {}), \
             ratio condition |3 g1^2/D1 - g2^2/D2| = {ratio_dev:.2e} (need <= 1e-12)",
            if distinct { "yes" } else { "no" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_dispersive_shift_validator() {
    let mut worst_rel = 0.0f64;
    let mut worst_at = String::new();
    let mut pass = true;
    for &ratio in &[0.05, 0.1, 0.2] {
        for n in 0..3usize {
            let delta = 1.0;
            let g = ratio * delta;
            let approx = dispersive_shift_two_level(g, delta, n).unwrap();
            let exact = exact_shift_two_level(g, delta, n).unwrap();
            let rel = ((approx - exact) / exact).abs();
            let bound = 3.0 * ratio * ratio;
            if rel > bound {
                pass = false;
            }
            if rel / bound > worst_rel {
                worst_rel = rel / bound;
                worst_at = format!("g/D = {ratio}, n = {n}: rel err {rel:.4} vs bound {bound:.4}");
            }
        }
    }
    verdict(
        5,
        pass,
        &format!("worst case uses {:.0}% of its 3 (g/D)^2 budget ({worst_at})", 100.0 * worst_rel),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 6 helpers: self-contained random-instance oracles.
// ---------------------------------------------------------------------------

fn decode(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        idx[k] = flat % d;
        flat /= d;
    }
    idx
}

fn encode(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn random_unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|z| z / norm).collect();
        }
    }
}

/// Random orthonormal set of `k` vectors in dimension `d` (Gram–Schmidt).
fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = random_unit_vector(rng, d);
        for u in &basis {
            let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= overlap * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.iter().map(|z| z / norm).collect());
        }
    }
    basis
}

fn projector_mixture(dims: Vec<usize>, vecs: &[Vec<C64>], weights: &[f64]) -> DensityMatrix {
    let d = vecs[0].len();
    let mut mat = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for (v, &w) in vecs.iter().zip(weights) {
        for i in 0..d {
            for j in 0..d {
                mat[(i, j)] += w * v[i] * v[j].conj();
            }
        }
    }
    // Symmetrize away rounding noise before the constructor's checks.
    let herm = (&mat + &mat.t().mapv(|z| z.conj())).mapv(|z| 0.5 * z);
    DensityMatrix::from_matrix(dims, herm).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Independent reduced-matrix oracle for a pure state: direct summation over
/// the traced indices.
fn reduced_oracle(psi: &[C64], dims: &[usize], traced: &[usize]) -> Array2<C64> {
    let kept: Vec<usize> = (0..dims.len()).filter(|k| !traced.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();
    let mut out = Array2::from_elem((dk, dk), C64::new(0.0, 0.0));
    for a in 0..dk {
        for b in 0..dk {
            for t in 0..dt {
                let ia = decode(a, &kept_dims);
                let ib = decode(b, &kept_dims);
                let it = decode(t, &traced_dims);
                let mut fa = vec![0usize; dims.len()];
                let mut fb = vec![0usize; dims.len()];
                for (pos, &k) in kept.iter().enumerate() {
                    fa[k] = ia[pos];
                    fb[k] = ib[pos];
                }
                for (pos, &k) in traced.iter().enumerate() {
                    fa[k] = it[pos];
                    fb[k] = it[pos];
                }
                out[(a, b)] += psi[encode(&fa, dims)] * psi[encode(&fb, dims)].conj();
            }
        }
    }
    out
}

#[test]
fn criterion_6_property_suites() {
    let mut checks: Vec<(bool, String)> = Vec::new();

    // (a) Norm drift across the full two-qudit gate schedule.
    let drift = cphase_report().trajectory.max_norm_drift;
    checks.push((
        drift <= 1e-8,
        format!("norm drift {drift:.2e} (need <= 1e-8)"),
    ));

    // (b) The static Hamiltonian conserves total excitation number.
    let preset = paper_cphase();
    let space = CompositeSpace::new(2, preset.cutoff).unwrap();
    let h = build_static(&space, &preset.params).unwrap();
    let n_op = total_excitation(&space);
    let hn = h.data().dot(n_op.data());
    let nh = n_op.data().dot(h.data());
    let comm_max = (&hn - &nh)
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    checks.push((
        comm_max <= 1e-10,
        format!("excitation-number commutator max |[H,N]| {comm_max:.2e} rad/ns (need <= 1e-10)"),
    ));

    // (c) 200 random instances (dim <= 8): 100 partial-trace reductions vs a
    // direct-summation oracle, 100 fidelity evaluations vs closed forms.
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let shapes: [&[usize]; 6] = [&[2, 2], &[2, 3], &[3, 2], &[2, 4], &[2, 2, 2], &[4, 2]];
    let mut reduction_dev = 0.0f64;
    for case in 0..100 {
        let dims = shapes[case % shapes.len()].to_vec();
        let d: usize = dims.iter().product();
        let psi = random_unit_vector(&mut rng, d);
        let n_factors = dims.len();
        let traced: Vec<usize> = loop {
            let t: Vec<usize> = (0..n_factors).filter(|_| rng.gen_bool(0.5)).collect();
            if !t.is_empty() && t.len() < n_factors {
                break t;
            }
        };
        let rho = DensityMatrix::from_pure_vector(dims.clone(), &Array1::from(psi.clone())).unwrap();
        let reduced = partial_trace(&rho, &traced).unwrap();
        let oracle = reduced_oracle(&psi, &dims, &traced);
        for (got, want) in reduced.data().iter().zip(oracle.iter()) {
            reduction_dev = reduction_dev.max((got - want).norm());
        }
        let trace: C64 = reduced.data().diag().iter().sum();
        reduction_dev = reduction_dev.max((trace - C64::new(1.0, 0.0)).norm());
    }
    checks.push((
        reduction_dev <= 1e-12,
        format!("100 partial-trace oracle cases, max deviation {reduction_dev:.2e} (need <= 1e-12)"),
    ));

    let mut fidelity_dev = 0.0f64;
    for case in 0..100 {
        let d = 2 + case % 7; // 2..=8
        let dims = vec![d];
        match case % 3 {
            0 => {
                // Pure–pure: both forms equal |<psi|phi>|^2.
                let a = random_unit_vector(&mut rng, d);
                let b = random_unit_vector(&mut rng, d);
                let overlap: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
                let expected = overlap.norm_sqr();
                let ra =
                    DensityMatrix::from_pure_vector(dims.clone(), &Array1::from(a)).unwrap();
                let rb =
                    DensityMatrix::from_pure_vector(dims.clone(), &Array1::from(b)).unwrap();
                for f in [
                    uhlmann_fidelity(&ra, &rb).unwrap(),
                    uhlmann_fidelity_conventional(&ra, &rb).unwrap(),
                    uhlmann_fidelity(&rb, &ra).unwrap(),
                ] {
                    fidelity_dev = fidelity_dev.max((f - expected).abs());
                }
            }
            1 => {
                // Pure–mixed: both forms equal <psi| sigma |psi>.
                let psi = random_unit_vector(&mut rng, d);
                let rank = 1 + case % d;
                let vecs: Vec<Vec<C64>> =
                    (0..rank).map(|_| random_unit_vector(&mut rng, d)).collect();
                let weights = random_weights(&mut rng, rank);
                let sigma = projector_mixture(dims.clone(), &vecs, &weights);
                let expected: f64 = vecs
                    .iter()
                    .zip(&weights)
                    .map(|(v, &w)| {
                        let ov: C64 = psi.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                        w * ov.norm_sqr()
                    })
                    .sum();
                let rp =
                    DensityMatrix::from_pure_vector(dims.clone(), &Array1::from(psi)).unwrap();
                for f in [
                    uhlmann_fidelity(&rp, &sigma).unwrap(),
                    uhlmann_fidelity_conventional(&rp, &sigma).unwrap(),
                    uhlmann_fidelity(&sigma, &rp).unwrap(),
                ] {
                    fidelity_dev = fidelity_dev.max((f - expected).abs());
                }
            }
            _ => {
                // Commuting mixed–mixed (shared eigenbasis): the
                // trace-overlap form gives sum(p q); the conventional form
                // gives (sum sqrt(p q))^2.
                let basis = random_orthonormal(&mut rng, d, d);
                let p = random_weights(&mut rng, d);
                let q = random_weights(&mut rng, d);
                let rho = projector_mixture(dims.clone(), &basis, &p);
                let sigma = projector_mixture(dims.clone(), &basis, &q);
                let overlap: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
                let sqrt_sum: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
                let f1 = uhlmann_fidelity(&rho, &sigma).unwrap();
                let f2 = uhlmann_fidelity_conventional(&rho, &sigma).unwrap();
                fidelity_dev = fidelity_dev.max((f1 - overlap).abs());
                fidelity_dev = fidelity_dev.max((f2 - sqrt_sum * sqrt_sum).abs());
            }
        }
    }
    checks.push((
        fidelity_dev <= 1e-9,
        format!("100 fidelity oracle cases, max deviation {fidelity_dev:.2e} (need <= 1e-9)"),
    ));

    // (d) Step-halving convergence on a driven segment.
    let space1 = CompositeSpace::new(1, 3).unwrap();
    let params1 = SystemParams {
        omega_ge: 8.7,
        omega_ef: 8.0,
        omega_r: vec![7.5],
        g_ge: vec![0.2],
        g_ef: vec![0.2],
        coupling_on: vec![true],
    };
    let seg = Segment {
        duration: 12.0,
        params: params1.clone(),
        drive: DriveParams::ef(0.0115, 8.04),
        drive_time_origin: 0.0,
        adiabatic_boundaries: false,
        label: "drive".into(),
    };
    let start = space1.basis_state(cqsim::QutritLevel::E, &[0]).unwrap();
    let run_at = |max_step: f64| -> StateVector {
        let mut cfg = preset.evolution_config();
        cfg.max_step = max_step;
        let (out, _) =
            cqsim::propagate(&start, &Schedule::new(vec![seg.clone()]), &cfg).unwrap();
        out
    };
    let coarse = run_at(5e-5);
    let fine = run_at(2.5e-5);
    let halving_dev = coarse
        .amplitudes()
        .iter()
        .zip(fine.amplitudes().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    checks.push((
        halving_dev <= 1e-7,
        format!("step-halving amplitude change {halving_dev:.2e} (need <= 1e-7)"),
    ));

    // (e) Four half-swaps compose to the identity on the photon register.
    let parked = SystemParams {
        omega_r: vec![8.7],
        ..params1.clone()
    };
    let swap = resonant_swap_segment(&parked, 0, SwapFraction::Half).unwrap();
    let four = Schedule::new(vec![swap.clone(), swap.clone(), swap.clone(), swap]);
    let truth = extract_truth_matrix(&space1, &four, &preset.evolution_config()).unwrap();
    let mut swap_dev = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let ideal = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            swap_dev = swap_dev.max((truth.interaction[(i, j)] - ideal).norm());
        }
    }
    checks.push((
        swap_dev <= 1e-3,
        format!("four-half-swap composition deviation from identity {swap_dev:.2e} (need <= 1e-3)"),
    ));

    let pass = checks.iter().all(|(ok, _)| *ok);
    let details: Vec<String> = checks
        .iter()
        .map(|(ok, msg)| format!("{}{msg}", if *ok { "" } else { "[FAILED] " }))
        .collect();
    verdict(6, pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_7_state_preparation() {
    let preset = paper_cphase();
    let space = CompositeSpace::new(2, preset.cutoff).unwrap();
    let rep = run_prepare(&space, &preset.params, &preset.evolution_config()).unwrap();
    let pass = rep.fidelity >= 0.99;
    verdict(
        7,
        pass,
        &format!(
            "two-resonator uniform-superposition fidelity {:.8} (need >= 0.99), \
             residual entanglement {:.2e} bits, duration {:.2} ns",
            rep.fidelity,
            rep.entropy_bits.unwrap_or(f64::NAN),
            rep.total_time
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Criterion 8 helpers.
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_cqsim"))
        .args(args)
        .output()
        .expect("launch cqsim binary");
    assert!(
        out.status.success(),
        "cqsim {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &std::path::Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

/// Manifest comparison ignoring the wall-clock field (the one intentionally
/// non-deterministic value, kept out of every other artifact).
fn manifests_equal(a: &[u8], b: &[u8]) -> bool {
    let mut va: serde_json::Value = serde_json::from_slice(a).unwrap();
    let mut vb: serde_json::Value = serde_json::from_slice(b).unwrap();
    va.as_object_mut().unwrap().remove("wall_clock_seconds");
    vb.as_object_mut().unwrap().remove("wall_clock_seconds");
    va == vb
}

/// Token-wise comparison: numeric tokens must agree to `rel` relative
/// tolerance (with an equal absolute floor, so values at numerical-noise
/// scale are not held to impossible precision), everything else
/// byte-for-byte.
fn numerically_close(golden: &str, got: &str, rel: f64) -> Result<(), String> {
    let gl: Vec<&str> = golden.lines().collect();
    let ol: Vec<&str> = got.lines().collect();
    if gl.len() != ol.len() {
        return Err(format!("line count {} vs {}", gl.len(), ol.len()));
    }
    for (ln, (g, o)) in gl.iter().zip(&ol).enumerate() {
        let gt: Vec<&str> = g.split_whitespace().collect();
        let ot: Vec<&str> = o.split_whitespace().collect();
        if gt.len() != ot.len() {
            return Err(format!("line {}: token count differs", ln + 1));
        }
        for (a, b) in gt.iter().zip(&ot) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let scale = x.abs().max(y.abs()).max(1.0);
                    if (x - y).abs() > rel * scale {
                        return Err(format!("line {}: {x} vs {y}", ln + 1));
                    }
                }
                _ => {
                    if a != b {
                        return Err(format!("line {}: '{a}' vs '{b}'", ln + 1));
                    }
                }
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_8_determinism() {
    let mut checks: Vec<(bool, String)> = Vec::new();

    // Repeated runs must be byte-identical in every data artifact.
    for (experiment, extra) in [("prepare", None), ("shift-table", Some("shifts.tsv"))] {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_cli(&["run", "--experiment", experiment, "--out", d1.path().to_str().unwrap()]);
        run_cli(&["run", "--experiment", experiment, "--out", d2.path().to_str().unwrap()]);
        let mut files = vec!["trajectory.tsv", "summary.txt", "density_matrix.tsv"];
        files.extend(extra);
        let mut identical = true;
        for f in &files {
            if read(d1.path(), f) != read(d2.path(), f) {
                identical = false;
            }
        }
        let manifest_ok = manifests_equal(
            &read(d1.path(), "manifest.json"),
            &read(d2.path(), "manifest.json"),
        );
        checks.push((
            identical && manifest_ok,
            format!(
                "{experiment} reruns byte-identical across {} data files{}",
                files.len(),
                if manifest_ok {
                    ", manifests equal up to wall clock"
                } else {
                    ", MANIFESTS DIFFER"
                }
            ),
        ));
    }

    // Fresh outputs must match the checked-in goldens to 1e-9 relative.
    let golden_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens");
    let d = tempfile::tempdir().unwrap();
    run_cli(&["run", "--experiment", "prepare", "--out", d.path().to_str().unwrap()]);
    let ds = tempfile::tempdir().unwrap();
    run_cli(&["run", "--experiment", "shift-table", "--out", ds.path().to_str().unwrap()]);
    for (golden_name, fresh_dir, fresh_name) in [
        ("prepare_summary.txt", d.path(), "summary.txt"),
        ("prepare_trajectory.tsv", d.path(), "trajectory.tsv"),
        ("shift_table_shifts.tsv", ds.path(), "shifts.tsv"),
    ] {
        let golden = std::fs::read_to_string(golden_dir.join(golden_name))
            .unwrap_or_else(|e| panic!("golden {golden_name} missing: {e}"));
        let fresh = String::from_utf8(read(fresh_dir, fresh_name)).unwrap();
        let outcome = numerically_close(&golden, &fresh, 1e-9);
        checks.push((
            outcome.is_ok(),
            match outcome {
                Ok(()) => format!("golden {golden_name} matches to 1e-9"),
                Err(e) => format!("golden {golden_name} MISMATCH: {e}"),
            },
        ));
    }

    let pass = checks.iter().all(|(ok, _)| *ok);
    let details: Vec<String> = checks.into_iter().map(|(_, msg)| msg).collect();
    verdict(8, pass, &details.join("; "));
    assert!(pass);
}
