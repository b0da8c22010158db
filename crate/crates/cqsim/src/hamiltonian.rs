//! Hamiltonian assembly for the qutrit–resonator system, dispersive-shift
//! formulas, and dressed-state identification.
//!
//! # Unit convention
//!
//! All stored frequencies and coupling strengths (`omega_*`, `g_*`,
//! [`DriveParams::frequency`]) are **ordinary** frequencies in GHz, exactly
//! as quoted on a spectrum analyzer; the single ×2π conversion to angular
//! units (rad/ns) happens here at matrix-assembly time and nowhere else.
//!
//! The one deliberate exception is [`DriveParams::amplitude`]: it is the
//! **angular** Rabi rate Ω in rad/ns and enters matrices without another 2π.
//! With this reading the reference parameter sets produce the selectivity
//! and gate-duration behaviour the protocols are built around (the
//! state-selective rotation requires Ω far below the angular group
//! separations, and the group-separation guard in the protocols module is
//! expressed in the same units).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, number_operator, qutrit_projector, qutrit_transition, CompositeSpace,
    Operator, QutritLevel,
};
use crate::linalg::{self, C64, C_ZERO, TAU};

/// Static system parameters: qutrit transition frequencies, resonator
/// frequencies, and per-resonator coupling strengths with on/off switches.
/// All values in GHz (ordinary frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// g↔e qutrit transition frequency (GHz).
    pub omega_ge: f64,
    /// e↔f qutrit transition frequency (GHz).
    pub omega_ef: f64,
    /// Resonator frequencies (GHz), one per resonator.
    pub omega_r: Vec<f64>,
    /// g↔e coupling strength to each resonator (GHz).
    pub g_ge: Vec<f64>,
    /// e↔f coupling strength to each resonator (GHz).
    pub g_ef: Vec<f64>,
    /// Per-resonator coupling switch; `false` decouples the resonator
    /// entirely (hard switch between protocol segments).
    pub coupling_on: Vec<bool>,
}

impl SystemParams {
    /// Number of resonators described.
    pub fn n_res(&self) -> usize {
        self.omega_r.len()
    }

    /// Check construction invariants: equal list lengths, strictly positive
    /// frequencies, non-negative couplings.
    pub fn validate(&self) -> Result<()> {
        let n = self.omega_r.len();
        if self.g_ge.len() != n || self.g_ef.len() != n || self.coupling_on.len() != n {
            return Err(Error::InvalidParameter(format!(
                "parameter list lengths disagree: omega_r {n}, g_ge {}, g_ef {}, coupling_on {}",
                self.g_ge.len(),
                self.g_ef.len(),
                self.coupling_on.len()
            )));
        }
        if !(self.omega_ge > 0.0) || !(self.omega_ef > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "qutrit frequencies must be positive (omega_ge={}, omega_ef={})",
                self.omega_ge, self.omega_ef
            )));
        }
        for (j, &w) in self.omega_r.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "resonator {j} frequency must be positive, got {w}"
                )));
            }
        }
        for (j, &g) in self.g_ge.iter().chain(self.g_ef.iter()).enumerate() {
            if !(g >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "coupling entry {j} must be non-negative, got {g}"
                )));
            }
        }
        Ok(())
    }

    /// Dispersive-regime warnings: one message per active coupling with
    /// (g/Δ)² > 0.1, where Δ is the relevant transition–resonator detuning.
    /// These do not fail construction; resonant swap segments legitimately
    /// run at Δ = 0.
    pub fn dispersive_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for j in 0..self.n_res() {
            if !self.coupling_on[j] {
                continue;
            }
            for (label, g, omega_q) in [
                ("g↔e", self.g_ge[j], self.omega_ge),
                ("e↔f", self.g_ef[j], self.omega_ef),
            ] {
                let delta = omega_q - self.omega_r[j];
                let ratio2 = if delta == 0.0 {
                    f64::INFINITY
                } else {
                    (g / delta).powi(2)
                };
                if ratio2 > 0.1 {
                    warnings.push(format!(
                        "resonator {j}: ({label} coupling/detuning)² = {ratio2:.3} exceeds 0.1; \
                         dispersive formulas are unreliable here"
                    ));
                }
            }
        }
        warnings
    }

    /// Copy with all couplings switched off (the idle frame between
    /// protocol segments).
    pub fn uncoupled(&self) -> SystemParams {
        let mut p = self.clone();
        p.coupling_on = vec![false; self.n_res()];
        p
    }

    /// Bare qutrit level energy in rad/ns (E_g = 0 reference).
    pub fn level_energy(&self, level: QutritLevel) -> f64 {
        match level {
            QutritLevel::G => 0.0,
            QutritLevel::E => TAU * self.omega_ge,
            QutritLevel::F => TAU * (self.omega_ge + self.omega_ef),
        }
    }
}

/// Which qutrit transition a drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveTransition {
    /// g↔e (used by state preparation π/2 pulses).
    GE,
    /// e↔f (used by the state-selective gate rotations).
    EF,
}

impl DriveTransition {
    /// The lowering operator of the transition on the full space.
    pub fn lowering(self, space: &CompositeSpace) -> Operator {
        let (a, b) = match self {
            DriveTransition::GE => (QutritLevel::G, QutritLevel::E),
            DriveTransition::EF => (QutritLevel::E, QutritLevel::F),
        };
        qutrit_transition(space, a, b).expect("neighbouring transition is always supported")
    }
}

/// Classical microwave drive on a qutrit transition:
/// `H_d(t) = Ω (σ⁺ e^{−i·2π·f·t} + σ⁻ e^{+i·2π·f·t})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Angular Rabi amplitude Ω in rad/ns (see module docs: no extra 2π).
    pub amplitude: f64,
    /// Drive frequency in GHz (ordinary; ×2π applied at assembly).
    pub frequency: f64,
    /// Addressed transition; gate rotations use e↔f.
    pub transition: DriveTransition,
    /// Whether the drive is on during the segment.
    pub active: bool,
}

impl DriveParams {
    /// An e↔f drive with the given amplitude (rad/ns) and frequency (GHz).
    pub fn ef(amplitude: f64, frequency: f64) -> Self {
        DriveParams {
            amplitude,
            frequency,
            transition: DriveTransition::EF,
            active: true,
        }
    }

    /// A g↔e drive with the given amplitude (rad/ns) and frequency (GHz).
    pub fn ge(amplitude: f64, frequency: f64) -> Self {
        DriveParams {
            amplitude,
            frequency,
            transition: DriveTransition::GE,
            active: true,
        }
    }

    /// A switched-off drive (segments without microwave input).
    pub fn inactive() -> Self {
        DriveParams {
            amplitude: 0.0,
            frequency: 1.0,
            transition: DriveTransition::EF,
            active: false,
        }
    }

    /// Validate amplitude/frequency ranges for an active drive.
    pub fn validate(&self) -> Result<()> {
        if !self.active {
            return Ok(());
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive frequency must be positive, got {}",
                self.frequency
            )));
        }
        Ok(())
    }

    /// Angular drive frequency ω_d in rad/ns.
    pub fn angular_frequency(&self) -> f64 {
        TAU * self.frequency
    }
}

/// Assemble the static (rotating-wave) Hamiltonian in rad/ns:
///
/// `H = Σ_l E_l |l⟩⟨l| + Σ_j [ 2π·ω_rj a_j†a_j
///      + 2π·g_ge,j (a_j† σ_ge⁻ + a_j σ_ge⁺)
///      + 2π·g_ef,j (a_j† σ_ef⁻ + a_j σ_ef⁺) ]`,
///
/// with E_g = 0, E_e = 2π·ω_ge, E_f = 2π·(ω_ge + ω_ef), and coupling terms
/// present only where `coupling_on[j]`. Exactly Hermitian by construction
/// and commutes with the total excitation number.
pub fn build_static(space: &CompositeSpace, params: &SystemParams) -> Result<Operator> {
    params.validate()?;
    if params.n_res() != space.n_res() {
        return Err(Error::DimensionMismatch(format!(
            "params describe {} resonators, space has {}",
            params.n_res(),
            space.n_res()
        )));
    }
    let dim = space.dim();
    let mut h = Array2::from_elem((dim, dim), C_ZERO);

    // Diagonal: qutrit levels and photon energies.
    for i in 0..dim {
        let (q, photons) = space.unindex(i);
        let mut e = params.level_energy(q);
        for (j, &n) in photons.iter().enumerate() {
            e += TAU * params.omega_r[j] * n as f64;
        }
        h[(i, i)] = C64::new(e, 0.0);
    }

    // Excitation-conserving couplings.
    for j in 0..space.n_res() {
        if !params.coupling_on[j] {
            continue;
        }
        let a = annihilation(space, j)?;
        for (g, trans) in [
            (params.g_ge[j], DriveTransition::GE),
            (params.g_ef[j], DriveTransition::EF),
        ] {
            if g == 0.0 {
                continue;
            }
            let sigma_minus = trans.lowering(space);
            // 2π·g (a† σ⁻ + a σ⁺)
            let term = linalg::matmul(a.adjoint().data().view(), sigma_minus.data().view());
            let scale = C64::new(TAU * g, 0.0);
            for ((r, c), v) in term.indexed_iter() {
                if *v != C_ZERO {
                    let x = scale * *v;
                    h[(r, c)] += x;
                    h[(c, r)] += x.conj();
                }
            }
        }
    }

    Operator::new(space.dims(), h, true)
}

/// The static part of the drive coupling, `D₀ = Ω (σ⁺ + σ⁻)` on the drive's
/// transition (zero matrix if the drive is inactive). The full drive is
/// `H_d(t) = R(φ) D₀ R(φ)†` with `R(φ) = exp(−iφ N̂)`, `φ = ω_d·(t − t₀)`.
pub fn drive_coupling(space: &CompositeSpace, drive: &DriveParams) -> Result<Operator> {
    drive.validate()?;
    let dim = space.dim();
    if !drive.active || drive.amplitude == 0.0 {
        return Operator::new(space.dims(), Array2::from_elem((dim, dim), C_ZERO), true);
    }
    let sigma_minus = drive.transition.lowering(space);
    let mut m = Array2::from_elem((dim, dim), C_ZERO);
    let amp = C64::new(drive.amplitude, 0.0);
    for ((r, c), v) in sigma_minus.data().indexed_iter() {
        if *v != C_ZERO {
            let x = amp * *v;
            m[(r, c)] += x;
            m[(c, r)] += x.conj();
        }
    }
    Operator::new(space.dims(), m, true)
}

/// The literal lab-frame drive matrix at global time `t` (ns):
/// `Ω (σ⁺ e^{−i ω_d (t − t₀)} + h.c.)` with `t₀ = phase_origin`.
/// Used by tests and diagnostics; the propagator evaluates the same object
/// through its factored form.
pub fn build_drive(
    space: &CompositeSpace,
    drive: &DriveParams,
    t: f64,
    phase_origin: f64,
) -> Result<Operator> {
    drive.validate()?;
    let dim = space.dim();
    if !drive.active || drive.amplitude == 0.0 {
        return Operator::new(space.dims(), Array2::from_elem((dim, dim), C_ZERO), true);
    }
    let sigma_minus = drive.transition.lowering(space);
    let phase = C64::from_polar(1.0, -drive.angular_frequency() * (t - phase_origin));
    let mut m = Array2::from_elem((dim, dim), C_ZERO);
    let amp = C64::new(drive.amplitude, 0.0);
    for ((r, c), v) in sigma_minus.data().indexed_iter() {
        if *v != C_ZERO {
            // σ⁻ entry at (lower, upper); σ⁺ = transpose-conjugate.
            let raising = amp * v.conj() * phase; // σ⁺ e^{−iφ}
            m[(c, r)] += raising;
            m[(r, c)] += raising.conj();
        }
    }
    Operator::new(space.dims(), m, true)
}

/// Second-order dispersive shift of a two-level transition coupled to a
/// resonator holding `n` photons: `(g²/Δ)(2n+1)`, in GHz for `g`, `Δ` in
/// GHz. Errors at zero detuning where the expansion is meaningless.
pub fn dispersive_shift_two_level(g: f64, delta: f64, n: usize) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::DegenerateDetuning(
            "dispersive shift requested at zero detuning".into(),
        ));
    }
    Ok(g * g / delta * (2.0 * n as f64 + 1.0))
}

/// Exact counterpart of [`dispersive_shift_two_level`] from diagonalizing
/// the two-level Jaynes–Cummings doublets: the qubit transition with `n`
/// photons shifts by `[√(Δ²+4g²(n+1)) − Δ]/2 + [√(Δ²+4g²n) − Δ]/2`.
/// Same units as the inputs. Used as the validation oracle for the
/// second-order formula.
pub fn exact_shift_two_level(g: f64, delta: f64, n: usize) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::DegenerateDetuning(
            "exact two-level shift requested at zero detuning".into(),
        ));
    }
    let nf = n as f64;
    let sign = delta.signum();
    let up = (delta * delta + 4.0 * g * g * (nf + 1.0)).sqrt() - delta.abs();
    let dn = (delta * delta + 4.0 * g * g * nf).sqrt() - delta.abs();
    Ok(sign * 0.5 * (up + dn))
}

/// Photon-number-conditioned shift of the e↔f drive resonance for the first
/// two resonators (the qudit holders in the three-resonator gate):
///
/// `shift(n₁, n₂) = 2 (g₁²/Δ₁) n₁ + 2 (g₂²/Δ₂) n₂`,  Δ_j = ω_ef − ω_rj,
///
/// with g_j the e↔f couplings, in GHz. When the parameter set satisfies the
/// ratio condition `3 g₁²/Δ₁ = g₂²/Δ₂` the shifts organize into groups
/// labeled by `N = 2 n₁ + 6 n₂` in units of `g₁²/Δ₁`.
pub fn cc_shift(params: &SystemParams, n1: usize, n2: usize) -> Result<f64> {
    params.validate()?;
    if params.n_res() < 2 {
        return Err(Error::InvalidParameter(
            "cc_shift needs at least two resonators".into(),
        ));
    }
    let mut shift = 0.0;
    for (j, n) in [(0usize, n1), (1usize, n2)] {
        let delta = params.omega_ef - params.omega_r[j];
        if delta == 0.0 {
            return Err(Error::DegenerateDetuning(format!(
                "resonator {j} is resonant with the e↔f transition"
            )));
        }
        shift += 2.0 * params.g_ef[j] * params.g_ef[j] / delta * (n as f64);
    }
    Ok(shift)
}

/// Group label `N = 2 n₁ + 6 n₂` of a photon configuration under the ratio
/// condition (see [`cc_shift`]).
pub fn cc_group_label(n1: usize, n2: usize) -> usize {
    2 * n1 + 6 * n2
}

/// Dressed basis of a static Hamiltonian: eigenstates labeled by the bare
/// product state each one is adiabatically connected to (identified by
/// dominant overlap).
#[derive(Debug, Clone)]
pub struct DressedBasis {
    space: CompositeSpace,
    /// Eigen-energy (rad/ns) of the dressed state labeled by bare index.
    energies: Vec<f64>,
    /// Column `b` is the dressed state labeled by bare index `b`, with the
    /// dominant amplitude gauged positive real.
    vectors: Array2<C64>,
    /// Smallest dominant-component weight |⟨bare|dressed⟩|² over all labels.
    min_weight: f64,
}

impl DressedBasis {
    /// The space the basis lives on.
    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    /// Dressed energy (rad/ns) of the state labeled `|photons, level⟩`.
    pub fn energy(&self, level: QutritLevel, photons: &[usize]) -> Result<f64> {
        Ok(self.energies[self.space.index(level, photons)?])
    }

    /// Dressed energy (rad/ns) by flat bare index.
    pub fn energy_by_index(&self, bare: usize) -> f64 {
        self.energies[bare]
    }

    /// Dressed state vector labeled `|photons, level⟩` as a column.
    pub fn vector(&self, level: QutritLevel, photons: &[usize]) -> Result<ndarray::Array1<C64>> {
        let b = self.space.index(level, photons)?;
        Ok(self.vectors.column(b).to_owned())
    }

    /// The bare→dressed map as a unitary matrix: column `b` is the dressed
    /// partner of bare basis state `b`.
    pub fn map(&self) -> &Array2<C64> {
        &self.vectors
    }

    /// Smallest dominant-component weight over all dressed states; 1.0 when
    /// all couplings are off.
    pub fn min_weight(&self) -> f64 {
        self.min_weight
    }
}

/// Diagonalize `build_static(space, params)` and label every eigenstate by
/// its dominant bare component.
///
/// Fails with a non-dispersive-regime error if any eigenstate has dominant
/// weight below 0.5 or two eigenstates claim the same bare label (hybridized
/// beyond recognition — e.g. a resonator parked on resonance).
pub fn dressed_basis(space: &CompositeSpace, params: &SystemParams) -> Result<DressedBasis> {
    let h = build_static(space, params)?;
    dressed_basis_of(space, h.data().view())
}

/// As [`dressed_basis`] but for an already-assembled Hermitian matrix.
pub fn dressed_basis_of(
    space: &CompositeSpace,
    h: ndarray::ArrayView2<C64>,
) -> Result<DressedBasis> {
    let dim = space.dim();
    let eig = linalg::eigh(h)?;
    let mut energies = vec![0.0f64; dim];
    let mut vectors = Array2::from_elem((dim, dim), C_ZERO);
    let mut claimed = vec![usize::MAX; dim]; // bare index -> eig column
    let mut min_weight = 1.0f64;

    for k in 0..dim {
        let col = eig.vectors.column(k);
        let (mut best_i, mut best_w) = (0usize, -1.0f64);
        for (i, z) in col.iter().enumerate() {
            let w = z.norm_sqr();
            if w > best_w {
                best_w = w;
                best_i = i;
            }
        }
        if best_w < 0.5 {
            let (q, photons) = space.unindex(best_i);
            return Err(Error::NonDispersiveRegime(format!(
                "eigenstate {k} has no majority bare component \
                 (best |⟨{:?},{:?}|·⟩|² = {best_w:.3} < 0.5)",
                photons, q
            )));
        }
        if claimed[best_i] != usize::MAX {
            let (q, photons) = space.unindex(best_i);
            return Err(Error::NonDispersiveRegime(format!(
                "two eigenstates both match bare state |{:?},{:?}⟩; \
                 dressed labeling is ambiguous",
                photons, q
            )));
        }
        claimed[best_i] = k;
        if best_w < min_weight {
            min_weight = best_w;
        }
        energies[best_i] = eig.values[k];
        // Gauge: dominant amplitude positive real.
        let dom = col[best_i];
        let phase = if dom.norm() > 0.0 {
            (dom / dom.norm()).conj()
        } else {
            crate::linalg::C_ONE
        };
        for i in 0..dim {
            vectors[(i, best_i)] = col[i] * phase;
        }
    }

    Ok(DressedBasis {
        space: *space,
        energies,
        vectors,
        min_weight,
    })
}

/// Dressed transition frequency (GHz) between two labeled bare states under
/// the given parameters: `[Ẽ(to) − Ẽ(from)] / 2π`.
pub fn dressed_frequency(
    space: &CompositeSpace,
    params: &SystemParams,
    from: (QutritLevel, &[usize]),
    to: (QutritLevel, &[usize]),
) -> Result<f64> {
    let basis = dressed_basis(space, params)?;
    Ok((basis.energy(to.0, to.1)? - basis.energy(from.0, from.1)?) / TAU)
}

/// Diagonal of the uncoupled Hamiltonian (all couplings off) in rad/ns, by
/// bare basis index. These are the free phases removed when protocol results
/// are compared in the interaction picture of the idle system.
pub fn uncoupled_energies(space: &CompositeSpace, params: &SystemParams) -> Vec<f64> {
    let dim = space.dim();
    let mut e = vec![0.0f64; dim];
    for i in 0..dim {
        let (q, photons) = space.unindex(i);
        let mut v = params.level_energy(q);
        for (j, &n) in photons.iter().enumerate() {
            v += TAU * params.omega_r[j] * n as f64;
        }
        e[i] = v;
    }
    e
}

/// Convenience: the projector onto a qutrit level (re-export wrapper used by
/// monitors).
pub fn level_projector(space: &CompositeSpace, level: QutritLevel) -> Operator {
    qutrit_projector(space, level)
}

/// Number operator re-export wrapper (symmetry with `level_projector`).
pub fn photon_number(space: &CompositeSpace, res: usize) -> Result<Operator> {
    number_operator(space, res)
}
