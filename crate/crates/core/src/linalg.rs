//! Dense linear-algebra helpers shared across the crate: Hermitian and
//! unitary eigendecompositions, generalized eigensolves, uniform grids
//! with fourth-order quadrature, and seeded random unitaries.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Frobenius deviation of `u` from unitarity, `|| u* u - I ||_F`.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    if n != u.ncols() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Frobenius deviation of `m` from Hermiticity.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Rotates `v` by a global phase so its largest-modulus entry is real
/// and positive. First index wins ties, which keeps outputs reproducible.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let nz = z.norm();
        if nz > best_norm {
            best = i;
            best_norm = nz;
        }
    }
    if best_norm > 0.0 {
        let rot = v[best].conj() / Complex64::new(best_norm, 0.0);
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvector phases fixed deterministically.
///
/// The QR sweep is followed by cyclic Jacobi sweeps on the rotated
/// matrix: from a near-diagonal start they converge quadratically and
/// clean up both residual slop and the vector mixing left inside
/// near-degenerate clusters.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let mut vectors = eig.eigenvectors;
    jacobi_polish(&sym, &mut values, &mut vectors);

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut sorted_values = Vec::with_capacity(n);
    let mut sorted_vectors = CMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        sorted_values.push(values[i]);
        let mut col = vectors.column(i).clone_owned();
        fix_phase(&mut col);
        sorted_vectors.set_column(k, &col);
    }
    (sorted_values, sorted_vectors)
}

/// Cyclic Jacobi sweeps on `b = v* h v`, accumulating the rotations into
/// `v` and the diagonal into `values`.
fn jacobi_polish(h: &CMatrix, values: &mut [f64], v: &mut CMatrix) {
    let n = h.nrows();
    if n < 2 {
        if n == 1 {
            values[0] = h[(0, 0)].re;
        }
        return;
    }
    let mut b = (v.adjoint() * h * &*v).clone_owned();
    let scale = (0..n).fold(1e-300f64, |acc, i| acc.max(b[(i, i)].re.abs()));
    let target = 1e-14 * scale;
    for _ in 0..4 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(b[(i, j)].norm());
            }
        }
        if off <= target {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                let w = b[(i, j)];
                let r = w.norm();
                if r <= target {
                    continue;
                }
                // unitary 2x2 rotation diagonalizing [[a, w], [w*, c]]
                let a = b[(i, i)].re;
                let c = b[(j, j)].re;
                let phase = w / Complex64::new(r, 0.0);
                let tau = (c - a) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                // columns: (i, j) <- (cos*i + sin*phase*j', ...) with the
                // phase absorbed so the 2x2 block becomes real symmetric
                let gii = Complex64::new(cos, 0.0);
                let gij = phase * sin;
                let gji = -phase.conj() * sin;
                let gjj = Complex64::new(cos, 0.0);
                // update B = G* B G on rows/cols i, j
                for k in 0..n {
                    let bki = b[(k, i)];
                    let bkj = b[(k, j)];
                    b[(k, i)] = bki * gii + bkj * gji;
                    b[(k, j)] = bki * gij + bkj * gjj;
                }
                for k in 0..n {
                    let bik = b[(i, k)];
                    let bjk = b[(j, k)];
                    b[(i, k)] = gii.conj() * bik + gji.conj() * bjk;
                    b[(j, k)] = gij.conj() * bik + gjj.conj() * bjk;
                }
                b[(i, j)] = C_ZERO;
                b[(j, i)] = C_ZERO;
                for k in 0..n {
                    let vki = v[(k, i)];
                    let vkj = v[(k, j)];
                    v[(k, i)] = vki * gii + vkj * gji;
                    v[(k, j)] = vki * gij + vkj * gjj;
                }
            }
        }
    }
    for i in 0..n {
        values[i] = b[(i, i)].re;
    }
}

/// Real symmetric counterpart of [`hermitian_eigen`], with the same
/// Jacobi polish.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let mut vectors = eig.eigenvectors;
    jacobi_polish_real(&sym, &mut values, &mut vectors);

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut sorted_values = Vec::with_capacity(n);
    let mut sorted_vectors = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        sorted_values.push(values[i]);
        let mut col = vectors.column(i).clone_owned();
        // sign convention: largest-modulus entry positive
        let mut best = 0usize;
        for (j, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = j;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
        sorted_vectors.set_column(k, &col);
    }
    (sorted_values, sorted_vectors)
}

fn jacobi_polish_real(h: &DMatrix<f64>, values: &mut [f64], v: &mut DMatrix<f64>) {
    let n = h.nrows();
    if n < 2 {
        if n == 1 {
            values[0] = h[(0, 0)];
        }
        return;
    }
    let mut b = (v.transpose() * h * &*v).clone_owned();
    let scale = (0..n).fold(1e-300f64, |acc, i| acc.max(b[(i, i)].abs()));
    let target = 1e-14 * scale;
    for _ in 0..4 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(b[(i, j)].abs());
            }
        }
        if off <= target {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                let r = b[(i, j)];
                if r.abs() <= target {
                    continue;
                }
                let tau = (b[(j, j)] - b[(i, i)]) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let bki = b[(k, i)];
                    let bkj = b[(k, j)];
                    b[(k, i)] = bki * cos - bkj * sin;
                    b[(k, j)] = bki * sin + bkj * cos;
                }
                for k in 0..n {
                    let bik = b[(i, k)];
                    let bjk = b[(j, k)];
                    b[(i, k)] = bik * cos - bjk * sin;
                    b[(j, k)] = bik * sin + bjk * cos;
                }
                b[(i, j)] = 0.0;
                b[(j, i)] = 0.0;
                for k in 0..n {
                    let vki = v[(k, i)];
                    let vkj = v[(k, j)];
                    v[(k, i)] = vki * cos - vkj * sin;
                    v[(k, j)] = vki * sin + vkj * cos;
                }
            }
        }
    }
    for i in 0..n {
        values[i] = b[(i, i)];
    }
}

fn cluster_tol() -> f64 {
    1e-8
}

/// Eigendecomposition of a unitary (hence normal) matrix through two
/// commuting Hermitian problems: `(U + U*)/2` separates the real parts of
/// the spectrum and `(U - U*)/(2i)` resolves each level. Eigenvalues are
/// returned on the unit circle, sorted by principal argument.
pub fn unitary_eigen(u: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.ncols(),
        });
    }
    let h_re = (u + u.adjoint()).scale(0.5);
    let h_im = (u - u.adjoint()) * Complex64::new(0.0, -0.5);
    let (c_vals, c_vecs) = hermitian_eigen(&h_re);

    let mut pairs: Vec<(Complex64, CVector)> = Vec::with_capacity(n);
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && (c_vals[end] - c_vals[end - 1]).abs() < cluster_tol() {
            end += 1;
        }
        let block = c_vecs.columns(start, end - start).clone_owned();
        let small = block.adjoint() * &h_im * &block;
        let (_, s_vecs) = hermitian_eigen(&small);
        let rotated = &block * s_vecs;
        for k in 0..(end - start) {
            let mut col = rotated.column(k).clone_owned();
            fix_phase(&mut col);
            // Rayleigh quotient against U itself, renormalized to |.| = 1.
            let lambda = (col.adjoint() * u * &col)[(0, 0)];
            let lambda = if lambda.norm() > 0.0 {
                lambda / Complex64::new(lambda.norm(), 0.0)
            } else {
                C_ONE
            };
            pairs.push((lambda, col));
        }
        start = end;
    }
    pairs.sort_by(|a, b| a.0.arg().partial_cmp(&b.0.arg()).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    let mut worst = 0.0f64;
    for (k, (lambda, col)) in pairs.iter().enumerate() {
        let residual = (u * col - col * *lambda).norm();
        worst = worst.max(residual);
        values.push(*lambda);
        vectors.set_column(k, col);
    }
    if worst > 1e-8 {
        return Err(Error::SolverFailure(format!(
            "unitary eigendecomposition residual {worst:.3e}"
        )));
    }
    Ok((values, vectors))
}

/// Solution of the Hermitian-definite pencil `a v = lambda b v`.
pub struct GeneralizedEigen {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// B-orthonormal eigenvectors, one column per eigenvalue.
    pub eigenvectors: CMatrix,
}

/// Solves `a v = lambda b v` for Hermitian `a` and Hermitian positive
/// definite `b` by Cholesky reduction to a standard Hermitian problem.
/// Exactly-real pencils take the cheaper real symmetric path.
pub fn generalized_hermitian_eigen(a: &CMatrix, b: &CMatrix) -> Result<GeneralizedEigen> {
    let is_real = a.iter().all(|z| z.im == 0.0) && b.iter().all(|z| z.im == 0.0);
    if is_real {
        let n = a.nrows();
        let ar = DMatrix::from_fn(n, n, |i, j| a[(i, j)].re);
        let br = DMatrix::from_fn(n, n, |i, j| b[(i, j)].re);
        let (eigenvalues, vr) = generalized_symmetric_eigen(&ar, &br)?;
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| Complex64::new(vr[(i, j)], 0.0));
        return Ok(GeneralizedEigen {
            eigenvalues,
            eigenvectors,
        });
    }
    let chol = Cholesky::new((b + b.adjoint()).scale(0.5))
        .ok_or_else(|| Error::SolverFailure("mass matrix is not positive definite".to_string()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    let z = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    let reduced = z.adjoint();
    let (values, u) = hermitian_eigen(&reduced);
    let vectors = l
        .adjoint()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    Ok(GeneralizedEigen {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Real symmetric-definite counterpart of [`generalized_hermitian_eigen`].
pub fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new((b + b.transpose()).scale(0.5))
        .ok_or_else(|| Error::SolverFailure("mass matrix is not positive definite".to_string()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    let reduced = z.transpose();
    let (values, u) = symmetric_eigen(&reduced);
    let vectors = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".to_string()))?;
    Ok((values, vectors))
}

/// Lifts a real matrix into the complex field.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// Diagonal complex matrix from a slice.
pub fn cdiag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

// ---------------------------------------------------------------------------
// uniform grids and quadrature
// ---------------------------------------------------------------------------

/// Quadrature weights for a uniform grid of `n` points with spacing `h`:
/// boundary-corrected trapezoid with end weights 17/48, 59/48, 43/48,
/// 49/48, fourth-order accurate and positive.
pub fn quadrature_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 9, "quadrature rule needs at least 9 points");
    let mut w = vec![1.0; n];
    let head = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
    for (i, &c) in head.iter().enumerate() {
        w[i] = c;
        w[n - 1 - i] = c;
    }
    for x in w.iter_mut() {
        *x *= h;
    }
    w
}

/// Uniform grid on `[start, end]` carrying fourth-order quadrature weights.
#[derive(Debug, Clone)]
pub struct UniformGrid {
    pub points: Vec<f64>,
    pub step: f64,
    pub weights: Vec<f64>,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, n: usize) -> Self {
        assert!(n >= 9 && end > start);
        let step = (end - start) / (n as f64 - 1.0);
        let points = (0..n).map(|i| start + step * i as f64).collect();
        let weights = quadrature_weights(n, step);
        UniformGrid {
            points,
            step,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Discrete L2 inner product, conjugate-linear in the first slot.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        assert_eq!(f.len(), self.len());
        assert_eq!(g.len(), self.len());
        let mut acc = C_ZERO;
        for i in 0..f.len() {
            acc += f[i].conj() * g[i] * self.weights[i];
        }
        acc
    }

    /// Inner product of multi-component samples stored as `n x c` matrices.
    pub fn inner_matrix(&self, f: &CMatrix, g: &CMatrix) -> Complex64 {
        assert_eq!(f.nrows(), self.len());
        assert_eq!(f.shape(), g.shape());
        let mut acc = C_ZERO;
        for c in 0..f.ncols() {
            for i in 0..f.nrows() {
                acc += f[(i, c)].conj() * g[(i, c)] * self.weights[i];
            }
        }
        acc
    }

    pub fn norm_matrix(&self, f: &CMatrix) -> f64 {
        self.inner_matrix(f, f).re.max(0.0).sqrt()
    }
}

/// Fourth-order central second derivative on the interior (indices
/// `2..n-2`) of uniformly sampled data. Returns `(start_index, values)`.
pub fn second_derivative_fd4(f: &[Complex64], h: f64) -> (usize, Vec<Complex64>) {
    let n = f.len();
    assert!(n >= 5);
    let scale = 1.0 / (12.0 * h * h);
    let mut out = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let v = -f[i - 2] + f[i - 1] * 16.0 - f[i] * 30.0 + f[i + 1] * 16.0 - f[i + 2];
        out.push(v * scale);
    }
    (2, out)
}

// ---------------------------------------------------------------------------
// random matrices
// ---------------------------------------------------------------------------

/// One standard normal sample by Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Standard complex Gaussian vector.
pub fn random_cvector<R: Rng>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    })
}

/// Haar-distributed random unitary (Ginibre + QR with phase correction).
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut u = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / Complex64::new(d.norm(), 0.0)
        } else {
            C_ONE
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Random unitary whose spectrum keeps at least `min_gap` angular distance
/// from -1: Haar eigenvectors with phases drawn from the gapped arc.
pub fn random_gapped_unitary<R: Rng>(n: usize, min_gap: f64, rng: &mut R) -> CMatrix {
    assert!(min_gap > 0.0 && min_gap < std::f64::consts::PI);
    let q = random_unitary(n, rng);
    let span = std::f64::consts::PI - min_gap;
    let d = CVector::from_fn(n, |_, _| {
        let t = (2.0 * rng.gen::<f64>() - 1.0) * span;
        Complex64::from_polar(1.0, t)
    });
    &q * CMatrix::from_diagonal(&d) * q.adjoint()
}
