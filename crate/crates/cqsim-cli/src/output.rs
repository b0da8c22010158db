//! Deterministic output files: delimited tables at 12 significant digits,
//! a key/value summary, and a manifest recording a SHA-256 digest of every
//! emitted file. Wall-clock time appears only in the manifest, so repeated
//! runs produce byte-identical tables and summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cqsim::{density_matrix_table, DensityMatrix, Error, Result, Trajectory};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Format with 12 significant digits (scientific), normalizing negative
/// zero so equal values always serialize identically.
pub fn sig12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

fn io_err(path: &Path, err: std::io::Error) -> Error {
    Error::InvalidParameter(format!("cannot write {}: {err}", path.display()))
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| io_err(path, e))
}

/// Trajectory table: `time_ns` then one column per monitored state.
pub fn trajectory_table(traj: &Trajectory) -> String {
    let mut out = String::from("time_ns");
    for label in &traj.labels {
        out.push('\t');
        out.push_str(label);
    }
    out.push('\n');
    for (row, t) in traj.times.iter().enumerate() {
        out.push_str(&sig12(*t));
        for col in 0..traj.labels.len() {
            out.push('\t');
            out.push_str(&sig12(traj.populations[row][col]));
        }
        out.push('\n');
    }
    out
}

/// Trajectory table with the columns of several same-length trajectories
/// side by side (used when an experiment runs multiple monitored inputs
/// over the same time grid).
pub fn merged_trajectory_table(trajs: &[&Trajectory]) -> Result<String> {
    let first = trajs.first().ok_or_else(|| {
        Error::InvalidParameter("merged trajectory table needs at least one trajectory".into())
    })?;
    for t in trajs {
        if t.times.len() != first.times.len() {
            return Err(Error::DimensionMismatch(format!(
                "trajectories sample {} vs {} time points",
                t.times.len(),
                first.times.len()
            )));
        }
    }
    let mut out = String::from("time_ns");
    for t in trajs {
        for label in &t.labels {
            out.push('\t');
            out.push_str(label);
        }
    }
    out.push('\n');
    for row in 0..first.times.len() {
        out.push_str(&sig12(first.times[row]));
        for t in trajs {
            for col in 0..t.labels.len() {
                out.push('\t');
                out.push_str(&sig12(t.populations[row][col]));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Empty trajectory table (experiments that do not produce one still emit
/// the file so the output schema is uniform; see the README).
pub fn empty_trajectory_table() -> String {
    "time_ns\n".to_string()
}

/// Density-matrix table: `row col real imag` over all elements of the
/// reduced density matrix.
pub fn density_table(rho: &DensityMatrix) -> String {
    let mut out = String::from("row\tcol\treal\timag\n");
    for (i, j, re, im) in density_matrix_table(rho) {
        out.push_str(&format!("{i}\t{j}\t{}\t{}\n", sig12(re), sig12(im)));
    }
    out
}

pub fn empty_density_table() -> String {
    "row\tcol\treal\timag\n".to_string()
}

/// Key/value summary document.
pub fn summary_text(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct ManifestConfig {
    pub experiment: String,
    pub preset: String,
    pub omega_ge_ghz: f64,
    pub omega_ef_ghz: f64,
    pub omega_r_ghz: Vec<f64>,
    pub g_ge_ghz: Vec<f64>,
    pub g_ef_ghz: Vec<f64>,
    pub coupling_on: Vec<bool>,
    pub drive_amplitude_rad_per_ns: f64,
    pub nominal_drive_frequency_ghz: f64,
    pub cutoff_photons: usize,
    pub max_step_ns: f64,
    pub sample_interval_ns: f64,
    pub target_photons: Option<Vec<usize>>,
    pub scan_halfwidth_ghz: Option<f64>,
    pub seed: Option<u64>,
    pub seed_note: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub config: ManifestConfig,
    pub wall_clock_seconds: f64,
    /// SHA-256 digest of every emitted file (hex).
    pub output_digests: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Write all experiment files plus the manifest. `files` maps file name to
/// content; the manifest records each file's digest and is written last.
pub fn emit(
    out_dir: &Path,
    files: &[(&str, String)],
    config: ManifestConfig,
    wall_clock_seconds: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidParameter(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        )))?;
    let mut written = Vec::new();
    let mut digests = BTreeMap::new();
    for (name, content) in files {
        let path = out_dir.join(name);
        write_text(&path, content)?;
        digests.insert(name.to_string(), sha256_hex(content.as_bytes()));
        written.push(path);
    }
    let manifest = Manifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        wall_clock_seconds,
        output_digests: digests,
    };
    let manifest_path = out_dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| {
        Error::InvalidParameter(format!("manifest serialization failed: {e}"))
    })?;
    write_text(&manifest_path, &(body + "\n"))?;
    written.push(manifest_path);
    Ok(written)
}
