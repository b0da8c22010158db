//! Composite Hilbert space of one transmon qutrit and a register of
//! truncated-Fock microwave resonators, plus the states and operators living
//! on it.
//!
//! Basis ordering is fixed: the qutrit index varies slowest, then the
//! resonators in register order (row-major). All matrices are dense; at the
//! default photon cutoff of 3 the largest space used by the protocols is
//! 3·4³ = 192 dimensional, where dense linear algebra is both simple and
//! fast.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{C64, C_ONE, C_ZERO};

/// Number of transmon levels kept (g, e, f).
pub const QUTRIT_DIM: usize = 3;

/// The three transmon levels in ascending energy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QutritLevel {
    /// Ground state |g⟩.
    G,
    /// First excited state |e⟩.
    E,
    /// Second excited state |f⟩.
    F,
}

impl QutritLevel {
    /// Basis index of the level (g=0, e=1, f=2).
    pub fn index(self) -> usize {
        match self {
            QutritLevel::G => 0,
            QutritLevel::E => 1,
            QutritLevel::F => 2,
        }
    }

    /// Level from a basis index.
    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(QutritLevel::G),
            1 => Some(QutritLevel::E),
            2 => Some(QutritLevel::F),
            _ => None,
        }
    }

    /// Excitation number carried by the level (g=0, e=1, f=2).
    pub fn excitation(self) -> usize {
        self.index()
    }
}

/// A qutrit ⊗ resonator-register product space with a fixed photon cutoff.
///
/// `n_max` is the largest photon number kept, so each resonator contributes
/// `n_max + 1` Fock levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeSpace {
    n_res: usize,
    n_max: usize,
}

impl CompositeSpace {
    /// Create a space with `n_res` resonators truncated at photon number
    /// `n_max` (must be ≥ 1 so the |0⟩/|1⟩ qudit levels exist; the shipped
    /// protocols use ≥ 2 so that leakage into higher Fock levels is
    /// representable).
    pub fn new(n_res: usize, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "photon cutoff n_max must be ≥ 1, got {n_max}"
            )));
        }
        Ok(CompositeSpace { n_res, n_max })
    }

    /// Number of resonators.
    pub fn n_res(&self) -> usize {
        self.n_res
    }

    /// Largest photon number kept per resonator.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Fock-space dimension of one resonator (`n_max + 1`).
    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total Hilbert-space dimension `3 · (n_max+1)^n_res`.
    pub fn dim(&self) -> usize {
        QUTRIT_DIM * self.fock_dim().pow(self.n_res as u32)
    }

    /// Factor dimensions in basis order: `[3, n_max+1, …, n_max+1]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(1 + self.n_res);
        d.push(QUTRIT_DIM);
        d.extend(std::iter::repeat(self.fock_dim()).take(self.n_res));
        d
    }

    /// Flat basis index of `|photons, qutrit⟩` (qutrit slowest).
    pub fn index(&self, q: QutritLevel, photons: &[usize]) -> Result<usize> {
        if photons.len() != self.n_res {
            return Err(Error::DimensionMismatch(format!(
                "expected {} photon numbers, got {}",
                self.n_res,
                photons.len()
            )));
        }
        let fock = self.fock_dim();
        let mut i = q.index();
        for (r, &n) in photons.iter().enumerate() {
            if n > self.n_max {
                return Err(Error::InvalidParameter(format!(
                    "photon number {n} on resonator {r} exceeds cutoff {}",
                    self.n_max
                )));
            }
            i = i * fock + n;
        }
        Ok(i)
    }

    /// Inverse of [`CompositeSpace::index`].
    pub fn unindex(&self, mut i: usize) -> (QutritLevel, Vec<usize>) {
        assert!(i < self.dim(), "basis index {i} out of range {}", self.dim());
        let fock = self.fock_dim();
        let mut photons = vec![0usize; self.n_res];
        for r in (0..self.n_res).rev() {
            photons[r] = i % fock;
            i /= fock;
        }
        let q = QutritLevel::from_index(i).expect("unindex: qutrit index in range");
        (q, photons)
    }

    /// Unit basis vector `|photons, qutrit⟩`.
    pub fn basis_state(&self, q: QutritLevel, photons: &[usize]) -> Result<StateVector> {
        let mut data = Array1::from_elem(self.dim(), C_ZERO);
        data[self.index(q, photons)?] = C_ONE;
        Ok(StateVector {
            space: *self,
            data,
        })
    }
}

/// A normalized pure state on a [`CompositeSpace`].
#[derive(Debug, Clone)]
pub struct StateVector {
    space: CompositeSpace,
    data: Array1<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector; the norm must be 1 within 1e-10.
    pub fn new(space: CompositeSpace, data: Array1<C64>) -> Result<Self> {
        Self::new_with_tolerance(space, data, 1e-10)
    }

    /// Wrap an amplitude vector with a caller-chosen norm tolerance. Used by
    /// the propagator, whose long step products accumulate roundoff beyond
    /// the strict construction tolerance while staying within its own audit.
    pub fn new_with_tolerance(
        space: CompositeSpace,
        data: Array1<C64>,
        tolerance: f64,
    ) -> Result<Self> {
        if data.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes, space dimension is {}",
                data.len(),
                space.dim()
            )));
        }
        let norm = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::InvalidState(format!(
                "state norm {norm:.12} deviates from 1 beyond {tolerance:.1e}"
            )));
        }
        Ok(StateVector { space, data })
    }

    /// Build and normalize a superposition from `(amplitude, level, photons)`
    /// terms. Errors if all amplitudes vanish.
    pub fn superposition(
        space: CompositeSpace,
        terms: &[(C64, QutritLevel, Vec<usize>)],
    ) -> Result<Self> {
        let mut data = Array1::from_elem(space.dim(), C_ZERO);
        for (amp, q, photons) in terms {
            data[space.index(*q, photons)?] += *amp;
        }
        let norm = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(Error::InvalidParameter(
                "superposition has zero norm".into(),
            ));
        }
        data.mapv_inplace(|z| z / norm);
        Ok(StateVector { space, data })
    }

    /// The space the state lives on.
    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    /// Amplitudes in basis order.
    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.data
    }

    /// Euclidean norm (≈ 1 by construction).
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch(
                "inner product between different spaces".into(),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Population |⟨basis i|ψ⟩|² of a flat basis index.
    pub fn population(&self, i: usize) -> f64 {
        self.data[i].norm_sqr()
    }
}

/// A density matrix on a tensor-product space described by factor dimensions
/// (e.g. `[3, 4, 4]` for the full space, `[4, 4]` after tracing the qutrit).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    data: Array2<C64>,
}

impl DensityMatrix {
    /// |ψ⟩⟨ψ| of a pure state (valid by construction).
    pub fn from_pure(state: &StateVector) -> Self {
        let d = state.data.len();
        let mut data = Array2::from_elem((d, d), C_ZERO);
        for i in 0..d {
            for j in 0..d {
                data[(i, j)] = state.data[i] * state.data[j].conj();
            }
        }
        DensityMatrix {
            dims: state.space.dims(),
            data,
        }
    }

    /// |v⟩⟨v| from a raw normalized amplitude vector on the given factor
    /// dimensions (used for ideal reference states on the resonator
    /// register).
    pub fn from_pure_vector(dims: Vec<usize>, v: &Array1<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if v.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match space dimension {d}",
                v.len()
            )));
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "pure-state vector norm {norm:.12} deviates from 1 beyond 1e-10"
            )));
        }
        let mut data = Array2::from_elem((d, d), C_ZERO);
        for i in 0..d {
            for j in 0..d {
                data[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(DensityMatrix { dims, data })
    }

    /// Validate and wrap a general density matrix: Hermitian within 1e-10,
    /// unit trace within 1e-10, eigenvalues ≥ −1e-9.
    pub fn from_matrix(dims: Vec<usize>, data: Array2<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if data.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "matrix shape {:?} does not match space dimension {d}",
                data.dim()
            )));
        }
        let herm = crate::linalg::hermiticity_deviation(data.view());
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!(
                "density matrix deviates from Hermiticity by {herm:.3e} (> 1e-10)"
            )));
        }
        let trace: C64 = (0..d).map(|i| data[(i, i)]).sum();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "density matrix trace {trace} deviates from 1 beyond 1e-10"
            )));
        }
        let eig = crate::linalg::eigh(data.view())?;
        if let Some(&lo) = eig.values.first() {
            if lo < -1e-9 {
                return Err(Error::InvalidState(format!(
                    "density matrix has eigenvalue {lo:.3e} below -1e-9"
                )));
            }
        }
        Ok(DensityMatrix { dims, data })
    }

    /// Factor dimensions of the space the matrix lives on.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.data.dim().0
    }

    /// The matrix elements.
    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    /// Trace (≈ 1 for a valid density matrix).
    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }
}

/// Decode a flat index into per-factor indices for the given dimensions.
fn decode(dims: &[usize], mut i: usize) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = i % dims[k];
        i /= dims[k];
    }
    idx
}

/// Encode per-factor indices into a flat index.
fn encode(dims: &[usize], idx: &[usize]) -> usize {
    let mut i = 0usize;
    for (k, &d) in dims.iter().enumerate() {
        i = i * d + idx[k];
    }
    i
}

/// Partial trace over the listed factor axes; the reduced matrix lives on
/// the remaining factors in their original order. Trace is preserved.
pub fn partial_trace(rho: &DensityMatrix, traced: &[usize]) -> Result<DensityMatrix> {
    let n_axes = rho.dims.len();
    let mut traced_sorted = traced.to_vec();
    traced_sorted.sort_unstable();
    traced_sorted.dedup();
    if traced_sorted.len() != traced.len() {
        return Err(Error::InvalidParameter(
            "partial_trace: repeated axis in trace list".into(),
        ));
    }
    if traced_sorted.iter().any(|&a| a >= n_axes) {
        return Err(Error::InvalidParameter(format!(
            "partial_trace: axis out of range (space has {n_axes} factors)"
        )));
    }
    let kept: Vec<usize> = (0..n_axes).filter(|a| !traced_sorted.contains(a)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&a| rho.dims[a]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out = Array2::from_elem((out_dim, out_dim), C_ZERO);

    let full_dim = rho.dim();
    for i in 0..full_dim {
        let idx_i = decode(&rho.dims, i);
        for j in 0..full_dim {
            let idx_j = decode(&rho.dims, j);
            if traced_sorted.iter().any(|&a| idx_i[a] != idx_j[a]) {
                continue;
            }
            let ki: Vec<usize> = kept.iter().map(|&a| idx_i[a]).collect();
            let kj: Vec<usize> = kept.iter().map(|&a| idx_j[a]).collect();
            out[(encode(&kept_dims, &ki), encode(&kept_dims, &kj))] += rho.data[(i, j)];
        }
    }
    Ok(DensityMatrix {
        dims: kept_dims,
        data: out,
    })
}

/// Reduced density matrix of the resonator register from a pure full-space
/// state (traces the qutrit without materializing the full |ψ⟩⟨ψ|).
pub fn reduce_to_resonators(state: &StateVector) -> DensityMatrix {
    let space = state.space();
    let res_dim = space.dim() / QUTRIT_DIM;
    let psi = state.amplitudes();
    let mut out = Array2::from_elem((res_dim, res_dim), C_ZERO);
    for q in 0..QUTRIT_DIM {
        let block = q * res_dim; // qutrit index is the slowest factor
        for m in 0..res_dim {
            let am = psi[block + m];
            if am == C_ZERO {
                continue;
            }
            for n in 0..res_dim {
                out[(m, n)] += am * psi[block + n].conj();
            }
        }
    }
    let dims = space.dims()[1..].to_vec();
    DensityMatrix { dims, data: out }
}

/// A dense operator on a tensor-product space.
#[derive(Debug, Clone)]
pub struct Operator {
    dims: Vec<usize>,
    data: Array2<C64>,
    hermitian: bool,
}

impl Operator {
    /// Wrap a matrix. With `hermitian_hint = true` the matrix must satisfy
    /// ‖M − M†‖_max < 1e-12 or construction fails.
    pub fn new(dims: Vec<usize>, data: Array2<C64>, hermitian_hint: bool) -> Result<Self> {
        let d: usize = dims.iter().product();
        if data.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "operator shape {:?} does not match space dimension {d}",
                data.dim()
            )));
        }
        if hermitian_hint {
            let dev = crate::linalg::hermiticity_deviation(data.view());
            if dev >= 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "operator hinted Hermitian deviates by {dev:.3e} (≥ 1e-12)"
                )));
            }
        }
        Ok(Operator {
            dims,
            data,
            hermitian: hermitian_hint,
        })
    }

    /// Identity on the given factor dimensions.
    pub fn identity(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        let mut data = Array2::from_elem((d, d), C_ZERO);
        for i in 0..d {
            data[(i, i)] = C_ONE;
        }
        Operator {
            dims,
            data,
            hermitian: true,
        }
    }

    /// Factor dimensions.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.data.dim().0
    }

    /// Matrix elements.
    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    /// Whether the operator was constructed/verified Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            data: crate::linalg::adjoint(self.data.view()),
            hermitian: self.hermitian,
        }
    }

    /// Operator product `self · other`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(
                "operator product between different spaces".into(),
            ));
        }
        Ok(Operator {
            dims: self.dims.clone(),
            data: crate::linalg::matmul(self.data.view(), other.data.view()),
            hermitian: false,
        })
    }

    /// Tensor (Kronecker) product; factor lists concatenate.
    pub fn tensor(&self, other: &Operator) -> Operator {
        let (m, n) = self.data.dim();
        let (p, q) = other.data.dim();
        let mut data = Array2::from_elem((m * p, n * q), C_ZERO);
        for i in 0..m {
            for j in 0..n {
                let a = self.data[(i, j)];
                if a == C_ZERO {
                    continue;
                }
                for k in 0..p {
                    for l in 0..q {
                        data[(i * p + k, j * q + l)] = a * other.data[(k, l)];
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Operator {
            dims,
            data,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// Linear combination `self + c · other`.
    pub fn add_scaled(&self, c: C64, other: &Operator) -> Result<Operator> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(
                "operator sum between different spaces".into(),
            ));
        }
        let data = &self.data + &other.data.mapv(|z| c * z);
        Ok(Operator {
            dims: self.dims.clone(),
            data,
            hermitian: self.hermitian && other.hermitian && c.im == 0.0,
        })
    }

    /// Apply to a state, returning the raw (possibly unnormalized) image.
    pub fn apply(&self, state: &StateVector) -> Result<Array1<C64>> {
        if self.dim() != state.amplitudes().len() {
            return Err(Error::DimensionMismatch(
                "operator/state dimension mismatch".into(),
            ));
        }
        Ok(crate::linalg::matvec(
            self.data.view(),
            state.amplitudes().as_slice().expect("contiguous state"),
        ))
    }

    /// Expectation value ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let image = self.apply(state)?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(image.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Embed a single-factor matrix at `axis` into the full product space
/// (identity on all other factors).
fn embed_factor(space: &CompositeSpace, axis: usize, local: &Array2<C64>) -> Array2<C64> {
    let dims = space.dims();
    let d_local = dims[axis];
    assert_eq!(local.dim(), (d_local, d_local), "embed_factor: local shape");
    let dim = space.dim();
    let mut out = Array2::from_elem((dim, dim), C_ZERO);
    for j in 0..dim {
        let idx = decode(&dims, j);
        let b = idx[axis];
        for a in 0..d_local {
            let v = local[(a, b)];
            if v == C_ZERO {
                continue;
            }
            let mut idx_i = idx.clone();
            idx_i[axis] = a;
            out[(encode(&dims, &idx_i), j)] = v;
        }
    }
    out
}

/// Annihilation operator `a` on resonator `res` (⟨n−1|a|n⟩ = √n), identity
/// elsewhere. Not Hermitian.
pub fn annihilation(space: &CompositeSpace, res: usize) -> Result<Operator> {
    if res >= space.n_res() {
        return Err(Error::InvalidParameter(format!(
            "resonator index {res} out of range ({} resonators)",
            space.n_res()
        )));
    }
    let fock = space.fock_dim();
    let mut local = Array2::from_elem((fock, fock), C_ZERO);
    for n in 1..fock {
        local[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator {
        dims: space.dims(),
        data: embed_factor(space, 1 + res, &local),
        hermitian: false,
    })
}

/// Photon-number operator `a†a` on resonator `res`.
pub fn number_operator(space: &CompositeSpace, res: usize) -> Result<Operator> {
    if res >= space.n_res() {
        return Err(Error::InvalidParameter(format!(
            "resonator index {res} out of range ({} resonators)",
            space.n_res()
        )));
    }
    let fock = space.fock_dim();
    let mut local = Array2::from_elem((fock, fock), C_ZERO);
    for n in 0..fock {
        local[(n, n)] = C64::new(n as f64, 0.0);
    }
    Ok(Operator {
        dims: space.dims(),
        data: embed_factor(space, 1 + res, &local),
        hermitian: true,
    })
}

/// Projector |level⟩⟨level| on the qutrit factor.
pub fn qutrit_projector(space: &CompositeSpace, level: QutritLevel) -> Operator {
    let mut local = Array2::from_elem((QUTRIT_DIM, QUTRIT_DIM), C_ZERO);
    local[(level.index(), level.index())] = C_ONE;
    Operator {
        dims: space.dims(),
        data: embed_factor(space, 0, &local),
        hermitian: true,
    }
}

/// Lowering operator of a neighbouring qutrit transition: |g⟩⟨e| for (g,e)
/// or |e⟩⟨f| for (e,f), in either argument order. The g↔f pair carries no
/// direct matrix element in this model and is rejected.
pub fn qutrit_transition(
    space: &CompositeSpace,
    a: QutritLevel,
    b: QutritLevel,
) -> Result<Operator> {
    let (lo, hi) = if a.index() < b.index() { (a, b) } else { (b, a) };
    match (lo, hi) {
        (QutritLevel::G, QutritLevel::E) | (QutritLevel::E, QutritLevel::F) => {}
        _ => {
            return Err(Error::UnsupportedTransition(format!(
                "{:?}↔{:?} is not a neighbouring qutrit transition",
                a, b
            )));
        }
    }
    let mut local = Array2::from_elem((QUTRIT_DIM, QUTRIT_DIM), C_ZERO);
    local[(lo.index(), hi.index())] = C_ONE;
    Ok(Operator {
        dims: space.dims(),
        data: embed_factor(space, 0, &local),
        hermitian: false,
    })
}

/// Total excitation number: qutrit excitation (g=0, e=1, f=2) plus all
/// photon numbers. Commutes with every rotating-wave Hamiltonian built by
/// this crate.
pub fn total_excitation(space: &CompositeSpace) -> Operator {
    let dim = space.dim();
    let mut data = Array2::from_elem((dim, dim), C_ZERO);
    for i in 0..dim {
        let (q, photons) = space.unindex(i);
        let n = q.excitation() + photons.iter().sum::<usize>();
        data[(i, i)] = C64::new(n as f64, 0.0);
    }
    Operator {
        dims: space.dims(),
        data,
        hermitian: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2() -> CompositeSpace {
        CompositeSpace::new(2, 3).unwrap()
    }

    #[test]
    fn index_round_trip_is_exhaustive() {
        let s = space2();
        assert_eq!(s.dim(), 48);
        for i in 0..s.dim() {
            let (q, photons) = s.unindex(i);
            assert_eq!(s.index(q, &photons).unwrap(), i);
        }
    }

    #[test]
    fn qutrit_is_the_slowest_factor() {
        let s = space2();
        assert_eq!(s.index(QutritLevel::G, &[0, 0]).unwrap(), 0);
        assert_eq!(s.index(QutritLevel::G, &[0, 1]).unwrap(), 1);
        assert_eq!(s.index(QutritLevel::G, &[1, 0]).unwrap(), 4);
        assert_eq!(s.index(QutritLevel::E, &[0, 0]).unwrap(), 16);
        assert_eq!(s.index(QutritLevel::F, &[3, 3]).unwrap(), 47);
    }

    #[test]
    fn photon_number_beyond_cutoff_is_rejected() {
        let s = space2();
        assert!(s.index(QutritLevel::G, &[4, 0]).is_err());
        assert!(s.index(QutritLevel::G, &[0]).is_err());
    }

    #[test]
    fn commutator_of_ladder_ops_is_identity_below_top_fock() {
        let s = space2();
        let a = annihilation(&s, 0).unwrap();
        let ad = a.adjoint();
        let comm = a
            .matmul(&ad)
            .unwrap()
            .add_scaled(C64::new(-1.0, 0.0), &ad.matmul(&a).unwrap())
            .unwrap();
        // On every basis state with n₀ < n_max the commutator acts as +1.
        for i in 0..s.dim() {
            let (q, photons) = s.unindex(i);
            if photons[0] >= s.n_max() {
                continue;
            }
            let st = s.basis_state(q, &photons).unwrap();
            let expect = comm.expectation(&st).unwrap();
            assert!(
                (expect - C_ONE).norm() < 1e-14,
                "[a,a†] ≠ 1 on basis index {i}"
            );
        }
    }

    #[test]
    fn annihilation_matrix_elements_are_sqrt_n() {
        let s = space2();
        let a = annihilation(&s, 1).unwrap();
        for n in 1..=s.n_max() {
            let from = s.basis_state(QutritLevel::G, &[0, n]).unwrap();
            let image = a.apply(&from).unwrap();
            let to = s.index(QutritLevel::G, &[0, n - 1]).unwrap();
            assert!((image[to].re - (n as f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn qutrit_transition_rejects_g_to_f() {
        let s = space2();
        assert!(matches!(
            qutrit_transition(&s, QutritLevel::G, QutritLevel::F),
            Err(Error::UnsupportedTransition(_))
        ));
        assert!(qutrit_transition(&s, QutritLevel::E, QutritLevel::G).is_ok());
        assert!(qutrit_transition(&s, QutritLevel::F, QutritLevel::E).is_ok());
    }

    #[test]
    fn hermitian_hint_is_verified() {
        let s = space2();
        let a = annihilation(&s, 0).unwrap();
        let res = Operator::new(s.dims(), a.data().clone(), true);
        assert!(matches!(res, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn partial_trace_preserves_trace_and_matches_direct_reduction() {
        let s = space2();
        // Entangled-ish superposition touching both factors and the qutrit.
        let st = StateVector::superposition(
            s,
            &[
                (C64::new(0.6, 0.0), QutritLevel::G, vec![0, 1]),
                (C64::new(0.0, 0.5), QutritLevel::E, vec![1, 0]),
                (C64::new(-0.4, 0.2), QutritLevel::F, vec![2, 3]),
            ],
        )
        .unwrap();
        let rho = DensityMatrix::from_pure(&st);
        let reduced = partial_trace(&rho, &[0]).unwrap();
        assert!((reduced.trace() - C_ONE).norm() < 1e-12);
        let direct = reduce_to_resonators(&st);
        assert!(
            crate::linalg::max_abs_diff(reduced.data().view(), direct.data().view()) < 1e-13
        );
        // Tracing everything but one resonator also preserves trace.
        let single = partial_trace(&rho, &[0, 2]).unwrap();
        assert!((single.trace() - C_ONE).norm() < 1e-12);
        assert_eq!(single.dims(), &[4]);
    }

    #[test]
    fn density_matrix_validation_rejects_bad_inputs() {
        let dims = vec![2];
        // Non-unit trace.
        let m = Array2::from_elem((2, 2), C_ZERO);
        assert!(matches!(
            DensityMatrix::from_matrix(dims.clone(), m),
            Err(Error::InvalidState(_))
        ));
        // Negative eigenvalue beyond tolerance.
        let mut m = Array2::from_elem((2, 2), C_ZERO);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(dims.clone(), m),
            Err(Error::InvalidState(_))
        ));
        // Valid mixed state passes.
        let mut m = Array2::from_elem((2, 2), C_ZERO);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.2);
        m[(1, 0)] = C64::new(0.1, -0.2);
        assert!(DensityMatrix::from_matrix(dims, m).is_ok());
    }

    #[test]
    fn expectation_of_number_operator_counts_photons() {
        let s = space2();
        let n1 = number_operator(&s, 1).unwrap();
        let st = s.basis_state(QutritLevel::E, &[0, 2]).unwrap();
        assert!((n1.expectation(&st).unwrap().re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn total_excitation_counts_qutrit_and_photons() {
        let s = space2();
        let n = total_excitation(&s);
        let st = s.basis_state(QutritLevel::F, &[1, 2]).unwrap();
        assert!((n.expectation(&st).unwrap().re - 5.0).abs() < 1e-14);
    }
}
