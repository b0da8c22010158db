//! Dense complex linear algebra: Hermitian eigendecomposition, matrix
//! products, and propagator construction.
//!
//! Everything here is hand-rolled scalar code on contiguous buffers. The
//! matrices in this crate are small (≤ 192×192 at the default cutoff) and the
//! priority is bit-level determinism of results for a given platform: a
//! cyclic Jacobi eigensolver with a fixed rotation order has no run-to-run or
//! thread-count variability, unlike BLAS/LAPACK backends.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = Complex64;

/// 2π — conversion factor between ordinary (GHz) and angular (rad/ns)
/// frequency units.
pub const TAU: f64 = std::f64::consts::TAU;

/// Zero of the working scalar type.
pub const C_ZERO: C64 = C64::new(0.0, 0.0);
/// One of the working scalar type.
pub const C_ONE: C64 = C64::new(1.0, 0.0);
/// The imaginary unit.
pub const C_I: C64 = C64::new(0.0, 1.0);

/// Dense matrix product `a · b`.
///
/// Inputs must be contiguous row-major (`Array2` built normally is); shapes
/// must chain. Accumulation order is fixed (i, k, j loops) so results are
/// deterministic.
pub fn matmul(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    let (m, ka) = a.dim();
    let (kb, n) = b.dim();
    assert_eq!(ka, kb, "matmul: inner dimensions differ ({ka} vs {kb})");
    let a_std = a.as_standard_layout();
    let b_std = b.as_standard_layout();
    let a_s = a_std.as_slice().expect("matmul: lhs not contiguous");
    let b_s = b_std.as_slice().expect("matmul: rhs not contiguous");
    let mut out = vec![C_ZERO; m * n];
    for i in 0..m {
        let arow = &a_s[i * ka..(i + 1) * ka];
        let orow = &mut out[i * n..(i + 1) * n];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == C_ZERO {
                continue;
            }
            let brow = &b_s[k * n..(k + 1) * n];
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
    Array2::from_shape_vec((m, n), out).expect("matmul: output shape")
}

/// Product with the adjoint on the left: `a† · b`.
pub fn matmul_adjoint_left(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    let (ka, m) = a.dim(); // a is (ka × m); a† is (m × ka)
    let (kb, n) = b.dim();
    assert_eq!(ka, kb, "matmul_adjoint_left: inner dimensions differ");
    let a_std = a.as_standard_layout();
    let b_std = b.as_standard_layout();
    let a_s = a_std.as_slice().expect("matmul_adjoint_left: lhs");
    let b_s = b_std.as_slice().expect("matmul_adjoint_left: rhs");
    let mut out = vec![C_ZERO; m * n];
    // out[i,j] = Σ_k conj(a[k,i]) b[k,j]; iterate k outer for unit-stride rows.
    for k in 0..ka {
        let arow = &a_s[k * m..(k + 1) * m];
        let brow = &b_s[k * n..(k + 1) * n];
        for i in 0..m {
            let c = arow[i].conj();
            if c == C_ZERO {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += c * brow[j];
            }
        }
    }
    Array2::from_shape_vec((m, n), out).expect("matmul_adjoint_left: output shape")
}

/// Matrix–vector product `a · x`.
pub fn matvec(a: ArrayView2<C64>, x: &[C64]) -> Array1<C64> {
    let (m, k) = a.dim();
    assert_eq!(k, x.len(), "matvec: dimension mismatch");
    let a_std = a.as_standard_layout();
    let a_s = a_std.as_slice().expect("matvec: matrix not contiguous");
    let mut out = vec![C_ZERO; m];
    for i in 0..m {
        let row = &a_s[i * k..(i + 1) * k];
        let mut acc = C_ZERO;
        for j in 0..k {
            acc += row[j] * x[j];
        }
        out[i] = acc;
    }
    Array1::from_vec(out)
}

/// Conjugate transpose.
pub fn adjoint(a: ArrayView2<C64>) -> Array2<C64> {
    let (m, n) = a.dim();
    let mut out = Array2::from_elem((n, m), C_ZERO);
    for i in 0..m {
        for j in 0..n {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

/// Largest absolute deviation from Hermiticity, `max |A − A†|`.
pub fn hermiticity_deviation(a: ArrayView2<C64>) -> f64 {
    let (m, n) = a.dim();
    if m != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Frobenius norm.
pub fn frobenius(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest elementwise absolute difference between two equal-shaped matrices.
pub fn max_abs_diff(a: ArrayView2<C64>, b: ArrayView2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff: shape mismatch");
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = (x - y).norm();
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Result of a Hermitian eigendecomposition: `A = V · diag(values) · V†`,
/// eigenvalues ascending, eigenvectors as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose k-th column is the eigenvector of `values[k]`.
    pub vectors: Array2<C64>,
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// The input must be square and Hermitian (the strictly lower triangle is
/// ignored; the diagonal's imaginary part is dropped). Converges to
/// off-diagonal mass below ~1e-15 of the Frobenius norm, which keeps
/// propagator phases accurate to ≲1e-9 rad over the longest schedules this
/// crate runs.
pub fn eigh(a: ArrayView2<C64>) -> Result<Eigh> {
    let (m, n) = a.dim();
    if m != n {
        return Err(Error::DimensionMismatch(format!(
            "eigh requires a square matrix, got {m}×{n}"
        )));
    }
    if n == 0 {
        return Ok(Eigh {
            values: vec![],
            vectors: Array2::from_elem((0, 0), C_ZERO),
        });
    }

    // Working copy, upper triangle authoritative.
    let mut w = vec![C_ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = a[(i, j)];
        }
    }
    for i in 0..n {
        w[i * n + i] = C64::new(w[i * n + i].re, 0.0);
    }
    let mut v = vec![C_ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = C_ONE;
    }

    let fro = {
        let s: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        s.sqrt()
    };
    if fro == 0.0 {
        // Zero matrix: eigenvalues all zero, eigenvectors the standard basis.
        let vectors = Array2::from_shape_vec((n, n), v).expect("eigh: V shape");
        return Ok(Eigh {
            values: vec![0.0; n],
            vectors,
        });
    }
    let stop = fro * 3e-16;

    let mut converged = false;
    for _sweep in 0..100 {
        let mut off2 = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off2 += w[p * n + q].norm_sqr();
            }
        }
        if (2.0 * off2).sqrt() <= stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                let ab = apq.norm();
                if ab <= stop * 1e-2 / (n as f64) {
                    continue;
                }
                let app = w[p * n + p].re;
                let aqq = w[q * n + q].re;
                let alpha = apq / ab;
                let tau = (aqq - app) / (2.0 * ab);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = alpha * (t * c); // complex sine

                // A ← J† A J with J = I except J[p,p]=J[q,q]=c,
                // J[p,q]=s, J[q,p]=−conj(s).
                // Column update (A ← A·J):
                for i in 0..n {
                    let aip = w[i * n + p];
                    let aiq = w[i * n + q];
                    w[i * n + p] = aip * c - aiq * s.conj();
                    w[i * n + q] = aip * s + aiq * c;
                }
                // Row update (A ← J†·A):
                for j in 0..n {
                    let apj = w[p * n + j];
                    let aqj = w[q * n + j];
                    w[p * n + j] = apj * c - aqj * s;
                    w[q * n + j] = apj * s.conj() + aqj * c;
                }
                // Re-symmetrize the touched diagonal entries (rounding).
                w[p * n + p] = C64::new(w[p * n + p].re, 0.0);
                w[q * n + q] = C64::new(w[q * n + q].re, 0.0);
                w[p * n + q] = C_ZERO;
                w[q * n + p] = C_ZERO;

                // V ← V·J.
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip * c - viq * s.conj();
                    v[i * n + q] = vip * s + viq * c;
                }
            }
        }
    }
    if !converged {
        return Err(Error::InvalidState(
            "Jacobi eigendecomposition did not converge in 100 sweeps \
             (matrix likely non-Hermitian)"
                .into(),
        ));
    }

    // Sort ascending; stable order keeps results deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("eigh: NaN eigenvalue"));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::from_elem((n, n), C_ZERO);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_col)] = v[i * n + old_col];
        }
    }
    Ok(Eigh { values, vectors })
}

impl Eigh {
    /// Build the unitary `exp(−i·A·t) = V · diag(e^{−i·E·t}) · V†` from this
    /// decomposition.
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        let n = self.values.len();
        // V · diag(phases)
        let mut vp = self.vectors.clone();
        for (k, &e) in self.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            for i in 0..n {
                vp[(i, k)] *= ph;
            }
        }
        // (V · diag) · V†
        let vt = adjoint(self.vectors.view());
        matmul(vp.view(), vt.view())
    }

    /// Apply `exp(−i·A·t)` to a block of column vectors without forming the
    /// full propagator: `V · diag(e^{−iEt}) · (V† · x)`.
    pub fn apply_propagator(&self, t: f64, x: ArrayView2<C64>) -> Array2<C64> {
        let mut y = matmul_adjoint_left(self.vectors.view(), x);
        let k = y.dim().1;
        for (row, &e) in self.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            for j in 0..k {
                y[(row, j)] *= ph;
            }
        }
        matmul(self.vectors.view(), y.view())
    }
}

/// `exp(−i·h·t)` for Hermitian `h`, via eigendecomposition.
pub fn expm_hermitian(h: ArrayView2<C64>, t: f64) -> Result<Array2<C64>> {
    Ok(eigh(h)?.propagator(t))
}

/// Multiply each row `i` of `x` in place by `phases[i]`.
pub fn scale_rows(x: &mut Array2<C64>, phases: &[C64]) {
    let (m, n) = x.dim();
    assert_eq!(m, phases.len(), "scale_rows: length mismatch");
    for i in 0..m {
        let p = phases[i];
        for j in 0..n {
            x[(i, j)] *= p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_hermitian(n: usize, seed: u64) -> Array2<C64> {
        // Small deterministic LCG so unit tests need no external RNG.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut a = Array2::from_elem((n, n), C_ZERO);
        for i in 0..n {
            for j in i..n {
                if i == j {
                    a[(i, i)] = C64::new(next(), 0.0);
                } else {
                    let z = C64::new(next(), next());
                    a[(i, j)] = z;
                    a[(j, i)] = z.conj();
                }
            }
        }
        a
    }

    #[test]
    fn eigh_diagonal_matrix_is_exact() {
        let a = array![
            [C64::new(3.0, 0.0), C_ZERO],
            [C_ZERO, C64::new(-1.0, 0.0)]
        ];
        let e = eigh(a.view()).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        // Columns are ±e_k; check moduli.
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((e.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_pauli_x_and_y() {
        let x = array![[C_ZERO, C_ONE], [C_ONE, C_ZERO]];
        let e = eigh(x.view()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);

        let y = array![[C_ZERO, -C_I], [C_I, C_ZERO]];
        let e = eigh(y.view()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        for seed in 1..6u64 {
            let n = 3 + (seed as usize % 4) * 5; // 3..=18
            let a = random_hermitian(n, seed);
            let e = eigh(a.view()).unwrap();
            // V unitary
            let vtv = matmul_adjoint_left(e.vectors.view(), e.vectors.view());
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { C_ONE } else { C_ZERO };
                    assert!(
                        (vtv[(i, j)] - want).norm() < 1e-13,
                        "V†V deviates at ({i},{j})"
                    );
                }
            }
            // A = V E V†
            let mut ve = e.vectors.clone();
            for (k, &val) in e.values.iter().enumerate() {
                for i in 0..n {
                    ve[(i, k)] *= val;
                }
            }
            let rec = matmul(ve.view(), adjoint(e.vectors.view()).view());
            assert!(
                max_abs_diff(rec.view(), a.view()) < 1e-12 * frobenius(a.view()).max(1.0),
                "reconstruction failed for seed {seed}"
            );
        }
    }

    #[test]
    fn propagator_matches_closed_form_rotation() {
        // exp(−i σx t) = cos t · I − i sin t · σx
        let x = array![[C_ZERO, C_ONE], [C_ONE, C_ZERO]];
        let t = 0.7_f64;
        let u = expm_hermitian(x.view(), t).unwrap();
        let (c, s) = (t.cos(), t.sin());
        let want = array![
            [C64::new(c, 0.0), C64::new(0.0, -s)],
            [C64::new(0.0, -s), C64::new(c, 0.0)]
        ];
        assert!(max_abs_diff(u.view(), want.view()) < 1e-14);
    }

    #[test]
    fn propagator_is_unitary_and_composes() {
        let a = random_hermitian(9, 42);
        let e = eigh(a.view()).unwrap();
        let u1 = e.propagator(0.31);
        let u2 = e.propagator(0.57);
        let u12 = e.propagator(0.88);
        let comp = matmul(u2.view(), u1.view());
        assert!(max_abs_diff(comp.view(), u12.view()) < 1e-13);
        let id = matmul_adjoint_left(u1.view(), u1.view());
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { C_ONE } else { C_ZERO };
                assert!((id[(i, j)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn apply_propagator_agrees_with_dense_propagator() {
        let a = random_hermitian(7, 5);
        let e = eigh(a.view()).unwrap();
        let x = random_hermitian(7, 9); // any matrix of columns
        let dense = matmul(e.propagator(1.3).view(), x.view());
        let applied = e.apply_propagator(1.3, x.view());
        assert!(max_abs_diff(dense.view(), applied.view()) < 1e-12);
    }

    #[test]
    fn matmul_against_manual_product() {
        let a = array![
            [C64::new(1.0, 1.0), C64::new(2.0, 0.0)],
            [C64::new(0.0, -1.0), C64::new(1.0, 0.0)]
        ];
        let b = array![
            [C64::new(0.5, 0.0), C64::new(0.0, 2.0)],
            [C64::new(1.0, -1.0), C64::new(3.0, 0.0)]
        ];
        let c = matmul(a.view(), b.view());
        for i in 0..2 {
            for j in 0..2 {
                let mut want = C_ZERO;
                for k in 0..2 {
                    want += a[(i, k)] * b[(k, j)];
                }
                assert!((c[(i, j)] - want).norm() < 1e-15);
            }
        }
        let d = matmul_adjoint_left(a.view(), b.view());
        let d_ref = matmul(adjoint(a.view()).view(), b.view());
        assert!(max_abs_diff(d.view(), d_ref.view()) < 1e-15);
    }

    #[test]
    fn eigh_rejects_non_square() {
        let a = Array2::from_elem((2, 3), C_ZERO);
        assert!(matches!(
            eigh(a.view()),
            Err(crate::error::Error::DimensionMismatch(_))
        ));
    }
}
