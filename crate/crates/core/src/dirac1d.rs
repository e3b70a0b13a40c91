//! 1D Dirac-type operators with unitary boundary conditions, and the
//! sector-split representation of quadratic forms that are not
//! semibounded.
//!
//! On the interval the operator is `D = i sigma_1 d/dx` on C^2 spinors.
//! Clifford multiplication by the outward normal gives `J = -i sigma_1`
//! at the left endpoint and `+i sigma_1` at the right one; boundary
//! conditions are graphs `phi_- = U phi_+` of unitaries between the
//! +/- i eigenspaces of `J`. Eigenvalues are located as the zeros of a
//! real-analytic secular function built from the exact transfer matrix:
//! the boundary-condition determinant has an E-independent phase, which
//! is divided out.
//!
//! Sector splits realize forms `Q = Q_+ + Q_-` over an orthogonal
//! decomposition with one lower- and one upper-semibounded sector; the
//! position and momentum forms are built in, and `T = T_+ P_+ + T_- P_-`
//! reconstructs the representing operator.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::linalg::{self, CMatrix, CVector};
use crate::spectral::SpectralResult;
use crate::{Error, Result};

/// Number of scan cells used over a secular bracket before refinement.
pub const SCAN_RESOLUTION: usize = 10_000;
/// Maximum number of scan refinements before giving up.
pub const MAX_REFINEMENTS: u32 = 6;
/// Bisection width for secular roots.
pub const ROOT_TOL: f64 = 1e-10;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn sigma1() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[linalg::C_ZERO, linalg::C_ONE, linalg::C_ONE, linalg::C_ZERO],
    )
}

/// Boundary polarization data for a Dirac operator: the boundary Clifford
/// action `J` with `J^2 = -I`, bases of its `+/- i` eigenspaces, and the
/// unitary `U : H_+ -> H_-` fixing the boundary condition.
#[derive(Debug, Clone)]
pub struct DiracBoundarySetup {
    j_matrix: CMatrix,
    h_plus_basis: CMatrix,
    h_minus_basis: CMatrix,
    u_map: CMatrix,
    canonical_interval: bool,
}

impl DiracBoundarySetup {
    /// The interval setup: boundary spinor space `C^2 (+) C^2` over the
    /// endpoints, `J = diag(-i sigma_1, +i sigma_1)`, and `H_pm` bases
    /// the normalized `sigma_1` eigenvectors with positive first
    /// component (left endpoint slot first).
    pub fn interval(u_map: CMatrix) -> Result<Self> {
        if u_map.nrows() != 2 || u_map.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: u_map.nrows(),
            });
        }
        let dev = linalg::unitary_deviation(&u_map);
        if !(dev <= 1e-12) {
            return Err(Error::NonUnitary(dev));
        }
        let s1 = sigma1();
        let mut j = CMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                j[(a, b)] = s1[(a, b)] * Complex64::new(0.0, -1.0);
                j[(2 + a, 2 + b)] = s1[(a, b)] * Complex64::new(0.0, 1.0);
            }
        }
        let e_plus = [
            Complex64::new(SQRT_HALF, 0.0),
            Complex64::new(SQRT_HALF, 0.0),
        ];
        let e_minus = [
            Complex64::new(SQRT_HALF, 0.0),
            Complex64::new(-SQRT_HALF, 0.0),
        ];
        let embed = |slot: usize, v: &[Complex64; 2]| -> CVector {
            let mut out = CVector::zeros(4);
            out[2 * slot] = v[0];
            out[2 * slot + 1] = v[1];
            out
        };
        let mut h_plus = CMatrix::zeros(4, 2);
        h_plus.set_column(0, &embed(0, &e_minus));
        h_plus.set_column(1, &embed(1, &e_plus));
        let mut h_minus = CMatrix::zeros(4, 2);
        h_minus.set_column(0, &embed(0, &e_plus));
        h_minus.set_column(1, &embed(1, &e_minus));
        Ok(DiracBoundarySetup {
            j_matrix: j,
            h_plus_basis: h_plus,
            h_minus_basis: h_minus,
            u_map,
            canonical_interval: true,
        })
    }

    /// General setup from an explicit boundary Clifford action. `H_pm`
    /// bases are computed from the Hermitian matrix `iJ` with
    /// deterministic phases.
    pub fn new(j_matrix: CMatrix, u_map: CMatrix) -> Result<Self> {
        let n = j_matrix.nrows();
        if n != j_matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: j_matrix.ncols(),
            });
        }
        let squared = &j_matrix * &j_matrix + CMatrix::identity(n, n);
        if squared.norm() > 1e-12 {
            return Err(Error::InvalidInput(
                "boundary Clifford action must satisfy J^2 = -I".to_string(),
            ));
        }
        let dev = linalg::unitary_deviation(&j_matrix);
        if !(dev <= 1e-12) {
            return Err(Error::NonUnitary(dev));
        }
        // iJ is Hermitian; J v = +/- i v corresponds to iJ v = -/+ v
        let ij = &j_matrix * linalg::C_I;
        let (vals, vecs) = linalg::hermitian_eigen(&ij);
        let mut plus_cols = Vec::new();
        let mut minus_cols = Vec::new();
        for (k, v) in vals.iter().enumerate() {
            if (*v + 1.0).abs() < 1e-10 {
                plus_cols.push(vecs.column(k).clone_owned());
            } else if (*v - 1.0).abs() < 1e-10 {
                minus_cols.push(vecs.column(k).clone_owned());
            } else {
                return Err(Error::InvalidInput(
                    "spectrum of iJ must be +/- 1".to_string(),
                ));
            }
        }
        if plus_cols.len() != minus_cols.len() {
            return Err(Error::InvalidInput(
                "the +i and -i eigenspaces of J must have equal dimension".to_string(),
            ));
        }
        let d = plus_cols.len();
        if u_map.nrows() != d || u_map.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: u_map.nrows(),
            });
        }
        let u_dev = linalg::unitary_deviation(&u_map);
        if !(u_dev <= 1e-12) {
            return Err(Error::NonUnitary(u_dev));
        }
        let mut h_plus = CMatrix::zeros(n, d);
        let mut h_minus = CMatrix::zeros(n, d);
        for (k, v) in plus_cols.iter().enumerate() {
            h_plus.set_column(k, v);
        }
        for (k, v) in minus_cols.iter().enumerate() {
            h_minus.set_column(k, v);
        }
        Ok(DiracBoundarySetup {
            j_matrix,
            h_plus_basis: h_plus,
            h_minus_basis: h_minus,
            u_map,
            canonical_interval: false,
        })
    }

    pub fn j_matrix(&self) -> &CMatrix {
        &self.j_matrix
    }

    pub fn h_plus_basis(&self) -> &CMatrix {
        &self.h_plus_basis
    }

    pub fn h_minus_basis(&self) -> &CMatrix {
        &self.h_minus_basis
    }

    pub fn u_map(&self) -> &CMatrix {
        &self.u_map
    }

    pub fn boundary_dim(&self) -> usize {
        self.j_matrix.nrows()
    }

    /// The boundary form `Sigma(phi, psi) = <J phi, psi>`.
    pub fn boundary_form(&self, phi: &CVector, psi: &CVector) -> Complex64 {
        ((&self.j_matrix * phi).adjoint() * psi)[(0, 0)]
    }

    /// `H_pm` components of a boundary vector.
    pub fn polarize(&self, phi: &CVector) -> (CVector, CVector) {
        (
            self.h_plus_basis.adjoint() * phi,
            self.h_minus_basis.adjoint() * phi,
        )
    }

    /// Residual of the condition `phi_- = U phi_+` for a boundary vector.
    pub fn condition_residual(&self, phi: &CVector) -> f64 {
        let (plus, minus) = self.polarize(phi);
        (minus - &self.u_map * plus).norm()
    }

    /// Boundary vector with prescribed `H_+` components satisfying the
    /// condition.
    pub fn boundary_vector_from_plus(&self, plus: &CVector) -> CVector {
        let minus = &self.u_map * plus;
        &self.h_plus_basis * plus + &self.h_minus_basis * minus
    }

    /// Serializes with explicit basis vectors so results are
    /// basis-reproducible.
    pub fn to_json(&self) -> serde_json::Value {
        let enc = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
            (0..m.ncols())
                .map(|c| {
                    (0..m.nrows())
                        .map(|r| [m[(r, c)].re, m[(r, c)].im])
                        .collect()
                })
                .collect()
        };
        serde_json::json!({
            "j_matrix": enc(&self.j_matrix),
            "h_plus_basis": enc(&self.h_plus_basis),
            "h_minus_basis": enc(&self.h_minus_basis),
            "u_map": enc(&self.u_map),
        })
    }
}

/// Spectrum of `D = i d/d theta` on the circle through `2 n_modes + 1`
/// Fourier modes: exactly the integers `-n_modes ..= n_modes`.
pub fn circle_dirac_spectrum(n_modes: usize) -> SpectralResult {
    let total = 2 * n_modes + 1;
    let n = n_modes as i64;
    let eigenvalues: Vec<f64> = (-n..=n).map(|k| k as f64).collect();
    // mode with frequency m sits at row m + n_modes; eigenvalue -m
    let mut eigenvectors = CMatrix::zeros(total, total);
    for (col, &e) in eigenvalues.iter().enumerate() {
        let mode = -(e as i64) + n;
        eigenvectors[(mode as usize, col)] = linalg::C_ONE;
    }
    SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals: vec![0.0; total],
        mesh_n: total,
    }
}

/// The transfer matrix `exp(-i E x sigma_1)` propagating spinor solutions
/// of `D xi = E xi` from `xi(0)`; reconstructs eigenfunctions from the
/// boundary spinors returned by [`interval_dirac_spectrum`].
pub fn transfer(e: f64, x: f64) -> CMatrix {
    let c = Complex64::new((e * x).cos(), 0.0);
    let s = Complex64::new(0.0, -(e * x).sin());
    CMatrix::from_row_slice(2, 2, &[c, s, s, c])
}

fn det2(m: &CMatrix) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Eigenvalues of `D = i sigma_1 d/dx` on `[0, L]` under the boundary
/// condition `phi_- = U phi_+`, located by sign-change scanning and
/// bisection of the secular function over `bracket`. Returns at most
/// `n_eigs` roots, those of smallest magnitude, sorted ascending; the
/// eigenvector columns are the spinors `xi(0)` generating each
/// eigenfunction through the transfer matrix.
pub fn interval_dirac_spectrum(
    length: f64,
    setup: &DiracBoundarySetup,
    n_eigs: usize,
    bracket: (f64, f64),
) -> Result<SpectralResult> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(
            "interval length must be positive".to_string(),
        ));
    }
    if !setup.canonical_interval {
        return Err(Error::InvalidInput(
            "interval spectra need the canonical interval setup".to_string(),
        ));
    }
    if n_eigs == 0 {
        return Err(Error::InvalidInput("n_eigs must be positive".to_string()));
    }
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(
            "bracket must be a finite interval".to_string(),
        ));
    }

    let u_det = det2(&setup.u_map);
    let phase = Complex64::from_polar(1.0, u_det.arg() / 2.0 + PI / 2.0);
    let secular = SecularFn::new(&setup.u_map, length, phase);

    // Scan for sign changes; refine until the located roots stabilize.
    // Stability alone is not enough: an aliased scan of the oscillatory
    // secular function can reproducibly see a sparse subset of roots. The
    // spectrum is the union of two lattices of spacing 2 pi / L, so
    // consecutive roots (and the bracket edges) can never be further
    // apart than that; a scan violating the density is too coarse.
    let mut cells = SCAN_RESOLUTION;
    let mut previous: Option<Vec<f64>> = None;
    let mut refinement = 0u32;
    let roots = loop {
        let roots = scan_roots(&secular, lo, hi, cells)?;
        let stable = previous
            .as_ref()
            .map(|prev| roots_agree(prev, &roots))
            .unwrap_or(false);
        if stable && density_ok(&roots, lo, hi, length) {
            break roots;
        }
        previous = Some(roots);
        refinement += 1;
        if refinement > MAX_REFINEMENTS {
            return Err(Error::BracketTooCoarse(MAX_REFINEMENTS));
        }
        cells *= 2;
    };

    let mut selected: Vec<f64> = roots;
    selected.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    selected.truncate(n_eigs);
    selected.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut eigenvalues = Vec::with_capacity(selected.len());
    let mut residuals = Vec::with_capacity(selected.len());
    let mut eigenvectors = CMatrix::zeros(2, selected.len());
    for (k, &e) in selected.iter().enumerate() {
        let (f, _) = secular.eval(e);
        let m = secular.boundary_matrix(e);
        let r0 = m[(0, 0)].norm_sqr() + m[(0, 1)].norm_sqr();
        let r1 = m[(1, 0)].norm_sqr() + m[(1, 1)].norm_sqr();
        let mut v = if r0 >= r1 {
            CVector::from_column_slice(&[m[(0, 1)], -m[(0, 0)]])
        } else {
            CVector::from_column_slice(&[m[(1, 1)], -m[(1, 0)]])
        };
        let norm = v.norm();
        if norm > 0.0 {
            v /= Complex64::new(norm, 0.0);
        }
        linalg::fix_phase(&mut v);
        eigenvalues.push(e);
        residuals.push(f.abs());
        eigenvectors.set_column(k, &v);
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals,
        mesh_n: cells,
    })
}

struct SecularFn {
    length: f64,
    u: [Complex64; 4],
    phase: Complex64,
}

impl SecularFn {
    fn new(u_map: &CMatrix, length: f64, phase: Complex64) -> Self {
        SecularFn {
            length,
            u: [u_map[(0, 0)], u_map[(0, 1)], u_map[(1, 0)], u_map[(1, 1)]],
            phase,
        }
    }

    /// Entries of `M(E) = V_-(E) - U V_+(E)` acting on `xi(0)`. In the
    /// canonical endpoint bases the functional rows reduce to
    /// `V_+ = [(s, -s); e^{-iEL}(s, s)]`, `V_- = [(s, s); e^{iEL}(s, -s)]`
    /// with `s = 1/sqrt(2)`.
    fn entries(&self, e: f64) -> [Complex64; 4] {
        let s = SQRT_HALF;
        let ph = Complex64::from_polar(1.0, e * self.length);
        let phc = ph.conj();
        let [u00, u01, u10, u11] = self.u;
        let vp = [
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
            phc * s,
            phc * s,
        ];
        let vm = [
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            ph * s,
            -ph * s,
        ];
        [
            vm[0] - (u00 * vp[0] + u01 * vp[2]),
            vm[1] - (u00 * vp[1] + u01 * vp[3]),
            vm[2] - (u10 * vp[0] + u11 * vp[2]),
            vm[3] - (u10 * vp[1] + u11 * vp[3]),
        ]
    }

    fn boundary_matrix(&self, e: f64) -> CMatrix {
        let m = self.entries(e);
        CMatrix::from_row_slice(2, 2, &m)
    }

    fn eval(&self, e: f64) -> (f64, f64) {
        let [m00, m01, m10, m11] = self.entries(e);
        let det = m00 * m11 - m01 * m10;
        let rotated = det * self.phase.conj();
        (rotated.re, rotated.im.abs())
    }
}

fn roots_agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8)
}

fn density_ok(roots: &[f64], lo: f64, hi: f64, length: f64) -> bool {
    let max_gap = 2.0 * PI / length * (1.0 + 1e-9) + 1e-12;
    let mut prev = lo;
    for &r in roots {
        if r - prev > max_gap {
            return false;
        }
        prev = r;
    }
    hi - prev <= max_gap
}

fn scan_roots(secular: &SecularFn, lo: f64, hi: f64, cells: usize) -> Result<Vec<f64>> {
    let step = (hi - lo) / cells as f64;
    let mut roots = Vec::new();
    let mut max_imag = 0.0f64;
    let mut max_mag = 0.0f64;
    let (mut f_prev, im) = secular.eval(lo);
    max_imag = max_imag.max(im);
    for k in 1..=cells {
        let x = lo + step * k as f64;
        let (f, im) = secular.eval(x);
        max_imag = max_imag.max(im);
        max_mag = max_mag.max(f.abs());
        if f_prev == 0.0 {
            roots.push(lo + step * (k - 1) as f64);
        } else if f_prev * f < 0.0 {
            roots.push(bisect(secular, lo + step * (k - 1) as f64, x, f_prev));
        }
        f_prev = f;
    }
    if f_prev == 0.0 {
        roots.push(hi);
    }
    if max_imag > 1e-9 * (1.0 + max_mag) {
        return Err(Error::SolverFailure(format!(
            "secular phase factorization failed (residual imaginary part {max_imag:.3e})"
        )));
    }
    Ok(roots)
}

fn bisect(secular: &SecularFn, mut a: f64, mut b: f64, f_a: f64) -> f64 {
    let mut sign_a = f_a.signum();
    for _ in 0..200 {
        if (b - a).abs() <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (a + b);
        let (f_mid, _) = secular.eval(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == sign_a {
            a = mid;
            sign_a = f_mid.signum();
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

// ---------------------------------------------------------------------------
// sector splits
// ---------------------------------------------------------------------------

/// Built-in and custom sector-split constructions.
pub enum SectorKind<'a> {
    /// Multiplication by `x` on a symmetric-about-zero grid (unit
    /// weights).
    Position { grid: &'a [f64] },
    /// `i d/dx` on the circle through an odd Fourier truncation, pulled
    /// back to the sample grid.
    Momentum { n_fourier: usize },
    /// Explicit Hermitian form and plus-sector projector.
    Custom { q_matrix: CMatrix, p_plus: CMatrix },
}

/// A quadratic form split across `W_+ (+) W_-` with semibounded sectors.
#[derive(Debug, Clone)]
pub struct SectorSplit {
    p_plus: CMatrix,
    p_minus: CMatrix,
    q_matrix: CMatrix,
    basis_plus: CMatrix,
    basis_minus: CMatrix,
    t_plus: CMatrix,
    t_minus: CMatrix,
    /// Smallest eigenvalue of `T_+` (lower bound of the plus sector).
    pub plus_lower_bound: f64,
    /// Largest eigenvalue of `T_-` (upper bound of the minus sector).
    pub minus_upper_bound: f64,
}

/// Dispatches to the named constructors.
pub fn build_sector_split(kind: SectorKind<'_>) -> Result<SectorSplit> {
    match kind {
        SectorKind::Position { grid } => SectorSplit::position(grid),
        SectorKind::Momentum { n_fourier } => SectorSplit::momentum(n_fourier),
        SectorKind::Custom { q_matrix, p_plus } => SectorSplit::custom(q_matrix, p_plus),
    }
}

impl SectorSplit {
    fn from_bases(q_matrix: CMatrix, basis_plus: CMatrix, basis_minus: CMatrix) -> Result<Self> {
        let off = (basis_plus.adjoint() * &q_matrix * &basis_minus).norm();
        if off > 1e-10 {
            return Err(Error::NotAdditive(off));
        }
        let p_plus = &basis_plus * basis_plus.adjoint();
        let p_minus = &basis_minus * basis_minus.adjoint();
        let t_plus = basis_plus.adjoint() * &q_matrix * &basis_plus;
        let t_minus = basis_minus.adjoint() * &q_matrix * &basis_minus;
        let plus_lower_bound = if t_plus.nrows() > 0 {
            linalg::hermitian_eigen(&t_plus).0[0]
        } else {
            0.0
        };
        let minus_upper_bound = if t_minus.nrows() > 0 {
            *linalg::hermitian_eigen(&t_minus).0.last().unwrap()
        } else {
            0.0
        };
        Ok(SectorSplit {
            p_plus,
            p_minus,
            q_matrix,
            basis_plus,
            basis_minus,
            t_plus,
            t_minus,
            plus_lower_bound,
            minus_upper_bound,
        })
    }

    /// Position form `Q = diag(x_i)` with `W_pm` the spans of the grid
    /// points of positive/nonpositive coordinate (the zero coordinate
    /// goes to the upper-semibounded minus sector).
    pub fn position(grid: &[f64]) -> Result<Self> {
        Self::position_weighted(grid, None)
    }

    /// Position form with quadrature weights: `Q = diag(x_i w_i)`.
    pub fn position_weighted(grid: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "position grid must be nonempty".to_string(),
            ));
        }
        for w in grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidInput(
                    "position grid must be strictly ascending".to_string(),
                ));
            }
        }
        for i in 0..n {
            if (grid[i] + grid[n - 1 - i]).abs() > 1e-12 {
                return Err(Error::InvalidInput(
                    "position grid must be symmetric about zero".to_string(),
                ));
            }
        }
        let w = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: w.len(),
                    });
                }
                if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::InvalidInput("weights must be positive".to_string()));
                }
                w.to_vec()
            }
            None => vec![1.0; n],
        };
        let values: Vec<f64> = grid.iter().zip(&w).map(|(x, w)| x * w).collect();
        let mut q = CMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            q[(i, i)] = Complex64::new(*v, 0.0);
        }
        let plus_idx: Vec<usize> = (0..n).filter(|&i| grid[i] > 0.0).collect();
        let minus_idx: Vec<usize> = (0..n).filter(|&i| grid[i] <= 0.0).collect();
        let coord_basis = |idx: &[usize]| {
            let mut b = CMatrix::zeros(n, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                b[(i, c)] = linalg::C_ONE;
            }
            b
        };
        Self::from_bases(q, coord_basis(&plus_idx), coord_basis(&minus_idx))
    }

    /// Momentum form on the circle: `i d/dtheta` acts as `-m` on the
    /// Fourier mode of frequency `m`; `W_pm` are the spans of the modes
    /// with positive/nonpositive symbol, pulled back to the sample grid
    /// by the unitary DFT.
    pub fn momentum(n_fourier: usize) -> Result<Self> {
        if n_fourier == 0 || n_fourier.is_multiple_of(2) {
            return Err(Error::InvalidInput(
                "momentum truncation must be odd and positive".to_string(),
            ));
        }
        let n = n_fourier;
        let k = (n as i64 - 1) / 2;
        let scale = 1.0 / (n as f64).sqrt();
        // mode column c has frequency m = c - k; symbol -m
        let fourier = CMatrix::from_fn(n, n, |j, c| {
            let m = c as i64 - k;
            let theta = 2.0 * PI * j as f64 / n as f64;
            Complex64::from_polar(scale, m as f64 * theta)
        });
        let symbols: Vec<f64> = (0..n).map(|c| -((c as i64 - k) as f64)).collect();
        let d = linalg::cdiag(
            &symbols
                .iter()
                .map(|s| Complex64::new(*s, 0.0))
                .collect::<Vec<_>>(),
        );
        let q = {
            let m = &fourier * d * fourier.adjoint();
            (&m + m.adjoint()).scale(0.5)
        };
        // order sectors by ascending symbol value for reproducibility
        let mut plus: Vec<usize> = (0..n).filter(|&c| symbols[c] > 0.0).collect();
        let mut minus: Vec<usize> = (0..n).filter(|&c| symbols[c] <= 0.0).collect();
        plus.sort_by(|&a, &b| symbols[a].partial_cmp(&symbols[b]).unwrap());
        minus.sort_by(|&a, &b| symbols[a].partial_cmp(&symbols[b]).unwrap());
        let pick = |idx: &[usize]| {
            let mut b = CMatrix::zeros(n, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                b.set_column(c, &fourier.column(i));
            }
            b
        };
        Self::from_bases(q, pick(&plus), pick(&minus))
    }

    /// Validates and block-decomposes an explicit form.
    pub fn custom(q_matrix: CMatrix, p_plus: CMatrix) -> Result<Self> {
        let n = q_matrix.nrows();
        if q_matrix.ncols() != n || p_plus.nrows() != n || p_plus.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p_plus.nrows(),
            });
        }
        if linalg::hermitian_deviation(&q_matrix) > 1e-12 {
            return Err(Error::InvalidInput(
                "form matrix must be Hermitian".to_string(),
            ));
        }
        if linalg::hermitian_deviation(&p_plus) > 1e-12
            || (&p_plus * &p_plus - &p_plus).norm() > 1e-12
        {
            return Err(Error::InvalidInput(
                "p_plus must be an orthogonal projector".to_string(),
            ));
        }
        let (vals, vecs) = linalg::hermitian_eigen(&p_plus);
        let mut plus_cols = Vec::new();
        let mut minus_cols = Vec::new();
        for (k, v) in vals.iter().enumerate() {
            if (*v - 1.0).abs() < 1e-8 {
                plus_cols.push(k);
            } else if v.abs() < 1e-8 {
                minus_cols.push(k);
            } else {
                return Err(Error::InvalidInput(
                    "p_plus eigenvalues must be 0 or 1".to_string(),
                ));
            }
        }
        let pick = |idx: &[usize]| {
            let mut b = CMatrix::zeros(n, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                b.set_column(c, &vecs.column(i));
            }
            b
        };
        Self::from_bases(q_matrix, pick(&plus_cols), pick(&minus_cols))
    }

    pub fn dim(&self) -> usize {
        self.q_matrix.nrows()
    }

    pub fn p_plus(&self) -> &CMatrix {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &CMatrix {
        &self.p_minus
    }

    pub fn q_matrix(&self) -> &CMatrix {
        &self.q_matrix
    }

    /// Representing block on `ran P_+` in the split's plus basis.
    pub fn t_plus(&self) -> &CMatrix {
        &self.t_plus
    }

    pub fn t_minus(&self) -> &CMatrix {
        &self.t_minus
    }

    pub fn sector_dims(&self) -> (usize, usize) {
        (self.basis_plus.ncols(), self.basis_minus.ncols())
    }

    /// Sector spectra (plus ascending, minus ascending).
    pub fn sector_spectra(&self) -> (Vec<f64>, Vec<f64>) {
        let plus = if self.t_plus.nrows() > 0 {
            linalg::hermitian_eigen(&self.t_plus).0
        } else {
            Vec::new()
        };
        let minus = if self.t_minus.nrows() > 0 {
            linalg::hermitian_eigen(&self.t_minus).0
        } else {
            Vec::new()
        };
        (plus, minus)
    }

    /// Sesquilinear form value `<u, Q v>`.
    pub fn form(&self, u: &CVector, v: &CVector) -> Complex64 {
        (u.adjoint() * &self.q_matrix * v)[(0, 0)]
    }

    /// The representing operator `T = T_+ P_+ + T_- P_-` embedded in the
    /// full space.
    pub fn reconstruct_operator(&self) -> CMatrix {
        &self.basis_plus * &self.t_plus * self.basis_plus.adjoint()
            + &self.basis_minus * &self.t_minus * self.basis_minus.adjoint()
    }

    /// Largest defect `|Q(u, v) - <u, T v>|` over random pairs.
    pub fn verify_reconstruction<R: Rng>(&self, n_pairs: usize, rng: &mut R) -> f64 {
        let t = self.reconstruct_operator();
        let mut worst = 0.0f64;
        for _ in 0..n_pairs {
            let u = linalg::random_cvector(self.dim(), rng);
            let v = linalg::random_cvector(self.dim(), rng);
            let q = self.form(&u, &v);
            let tv = (u.adjoint() * &t * &v)[(0, 0)];
            worst = worst.max((q - tv).norm() / (u.norm() * v.norm()));
        }
        worst
    }

    /// The graph norm squared
    /// `(1+a)||P_+ phi||^2 + Q_+(phi) + (1+b)||P_- phi||^2 - Q_-(phi)`
    /// with `a, b` the sector bounds clipped at zero.
    pub fn graph_norm_squared(&self, phi: &CVector) -> f64 {
        let a = (-self.plus_lower_bound).max(0.0);
        let b = self.minus_upper_bound.max(0.0);
        let plus = &self.p_plus * phi;
        let minus = &self.p_minus * phi;
        let q_plus = self.form(&plus, &plus).re;
        let q_minus = self.form(&minus, &minus).re;
        (1.0 + a) * plus.norm_squared() + q_plus + (1.0 + b) * minus.norm_squared() - q_minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_spectrum_is_the_integer_lattice() {
        let result = circle_dirac_spectrum(2);
        assert_eq!(result.eigenvalues, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let trivial = circle_dirac_spectrum(0);
        assert_eq!(trivial.eigenvalues, vec![0.0]);
        // Lichnerowicz check: the squares reproduce the free circle
        // Laplacian spectrum {n^2}
        let mut squares: Vec<f64> = result.eigenvalues.iter().map(|e| e * e).collect();
        squares.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(squares, vec![0.0, 1.0, 1.0, 4.0, 4.0]);
    }

    #[test]
    fn interval_identity_condition_gives_pi_lattice() {
        let setup = DiracBoundarySetup::interval(CMatrix::identity(2, 2)).unwrap();
        let result = interval_dirac_spectrum(1.0, &setup, 7, (-11.0, 11.0)).unwrap();
        assert_eq!(result.eigenvalues.len(), 7);
        for e in &result.eigenvalues {
            let k = e / PI;
            assert!(
                (k - k.round()).abs() < 1e-9,
                "eigenvalue {e} not on the lattice"
            );
        }
        for r in &result.residuals {
            assert!(*r < 1e-9);
        }
        // eigenvectors generate fields satisfying the boundary condition
        for k in 0..result.eigenvalues.len() {
            let e = result.eigenvalues[k];
            let xi0 = result.eigenvectors.column(k).clone_owned();
            let xil = transfer(e, 1.0) * &xi0;
            let mut boundary = CVector::zeros(4);
            boundary[0] = xi0[0];
            boundary[1] = xi0[1];
            boundary[2] = xil[0];
            boundary[3] = xil[1];
            assert!(setup.condition_residual(&boundary) < 1e-8);
        }
    }

    #[test]
    fn decoupled_phases_shift_the_lattice() {
        let tau0 = 0.9f64;
        let tau1 = 1.7f64;
        let u = linalg::cdiag(&[
            Complex64::from_polar(1.0, tau0),
            Complex64::from_polar(1.0, tau1),
        ]);
        let setup = DiracBoundarySetup::interval(u).unwrap();
        let length = 1.3;
        let result = interval_dirac_spectrum(length, &setup, 9, (-14.0, 14.0)).unwrap();
        // lattice with spacing pi/L and offset (tau0 + tau1)/(2L)
        let offset = 0.5 * (tau0 + tau1) / length;
        for e in &result.eigenvalues {
            let k = (e - offset) * length / PI;
            assert!(
                (k - k.round()).abs() < 1e-8,
                "eigenvalue {e} misses the shifted lattice"
            );
        }
        for pair in result.eigenvalues.windows(2) {
            assert!((pair[1] - pair[0] - PI / length).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_form_is_antisymmetric() {
        let setup = DiracBoundarySetup::interval(CMatrix::identity(2, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let phi = linalg::random_cvector(4, &mut rng);
            let psi = linalg::random_cvector(4, &mut rng);
            let ab = setup.boundary_form(&phi, &psi);
            let ba = setup.boundary_form(&psi, &phi);
            assert!((ab.conj() + ba).norm() <= 1e-14 * (1.0 + ab.norm()));
        }
    }

    #[test]
    fn condition_satisfying_boundary_vectors_are_isotropic() {
        // on the graph of U the boundary form vanishes identically
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = linalg::random_unitary(2, &mut rng);
        let setup = DiracBoundarySetup::interval(u).unwrap();
        for _ in 0..10 {
            let plus_a = linalg::random_cvector(2, &mut rng);
            let plus_b = linalg::random_cvector(2, &mut rng);
            let va = setup.boundary_vector_from_plus(&plus_a);
            let vb = setup.boundary_vector_from_plus(&plus_b);
            assert!(setup.condition_residual(&va) < 1e-12);
            assert!(setup.boundary_form(&va, &vb).norm() < 1e-12);
        }
    }

    #[test]
    fn general_setup_recovers_polarization() {
        let s1 = sigma1();
        let mut j = CMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                j[(a, b)] = s1[(a, b)] * Complex64::new(0.0, -1.0);
                j[(2 + a, 2 + b)] = s1[(a, b)] * Complex64::new(0.0, 1.0);
            }
        }
        let setup = DiracBoundarySetup::new(j.clone(), CMatrix::identity(2, 2)).unwrap();
        // J on h_plus columns acts as +i
        for c in 0..2 {
            let v = setup.h_plus_basis().column(c).clone_owned();
            assert!((&j * &v - &v * linalg::C_I).norm() < 1e-10);
            let w = setup.h_minus_basis().column(c).clone_owned();
            assert!((&j * &w + &w * linalg::C_I).norm() < 1e-10);
        }
        // h_plus and h_minus are mutually orthogonal
        let overlap = setup.h_plus_basis().adjoint() * setup.h_minus_basis();
        assert!(overlap.norm() < 1e-12);

        let bad = CMatrix::identity(4, 4);
        assert!(DiracBoundarySetup::new(bad, CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn bracket_too_coarse_is_detected() {
        let setup = DiracBoundarySetup::interval(CMatrix::identity(2, 2)).unwrap();
        // ~3e6 lattice roots over the bracket: never resolvable within
        // the refinement budget
        let result = interval_dirac_spectrum(1.0, &setup, 4, (-1e7, 1e7));
        assert!(matches!(result, Err(Error::BracketTooCoarse(_))));
    }

    #[test]
    fn position_split_example() {
        let split = SectorSplit::position(&[-1.0, -0.5, 0.5, 1.0]).unwrap();
        let (dp, dm) = split.sector_dims();
        assert_eq!((dp, dm), (2, 2));
        for (i, expected) in [0.0, 0.0, 1.0, 1.0].iter().enumerate() {
            assert_eq!(split.p_plus()[(i, i)].re, *expected);
        }
        let (plus, minus) = split.sector_spectra();
        assert_eq!(plus, vec![0.5, 1.0]);
        assert_eq!(minus, vec![-1.0, -0.5]);
        assert!(split.plus_lower_bound >= 0.0);
        assert!(split.minus_upper_bound <= 0.0);
        // reconstruction is exactly the diagonal form
        let t = split.reconstruct_operator();
        assert_eq!(t, split.q_matrix().clone());
    }

    #[test]
    fn momentum_split_example() {
        let split = SectorSplit::momentum(5).unwrap();
        let (plus, minus) = split.sector_spectra();
        let round = |v: Vec<f64>| -> Vec<f64> {
            v.into_iter().map(|x| (x * 1e10).round() / 1e10).collect()
        };
        assert_eq!(round(plus), vec![1.0, 2.0]);
        assert_eq!(round(minus), vec![-2.0, -1.0, 0.0]);
        assert!(split.plus_lower_bound >= 0.0);
        assert!(split.minus_upper_bound <= 1e-12);

        // reconstruction equals the direct Fourier representation
        let n = 5usize;
        let k = 2i64;
        let scale = 1.0 / (n as f64).sqrt();
        let fourier = CMatrix::from_fn(n, n, |j, c| {
            let m = c as i64 - k;
            Complex64::from_polar(scale, m as f64 * 2.0 * PI * j as f64 / n as f64)
        });
        let d = linalg::cdiag(
            &(0..n)
                .map(|c| Complex64::new(-((c as i64 - k) as f64), 0.0))
                .collect::<Vec<_>>(),
        );
        let direct = &fourier * d * fourier.adjoint();
        assert!((split.reconstruct_operator() - direct).norm() < 1e-12);
    }

    #[test]
    fn cross_sector_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for split in [
            SectorSplit::position(&[-2.0, -1.0, -0.25, 0.25, 1.0, 2.0]).unwrap(),
            SectorSplit::momentum(7).unwrap(),
        ] {
            let (dp, dm) = split.sector_dims();
            for _ in 0..50 {
                let cp = linalg::random_cvector(dp, &mut rng);
                let cm = linalg::random_cvector(dm, &mut rng);
                let phi = &split.basis_plus * cp;
                let psi = &split.basis_minus * cm;
                let sum = &phi + &psi;
                let q_sum = split.form(&sum, &sum).re;
                let q_parts = split.form(&phi, &phi).re + split.form(&psi, &psi).re;
                let scale = 1.0 + q_sum.abs();
                assert!(
                    (q_sum - q_parts).abs() <= 1e-12 * scale,
                    "additivity defect {}",
                    (q_sum - q_parts).abs()
                );
            }
        }
    }

    #[test]
    fn reconstruction_represents_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let split = SectorSplit::momentum(9).unwrap();
        let worst = split.verify_reconstruction(50, &mut rng);
        assert!(worst < 1e-10, "defect {worst}");
    }

    #[test]
    fn graph_norm_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let split = SectorSplit::momentum(7).unwrap();
        for _ in 0..50 {
            let phi = linalg::random_cvector(split.dim(), &mut rng);
            let g = split.graph_norm_squared(&phi);
            assert!(g > 0.0, "graph norm {g} not positive");
        }
        let pos = SectorSplit::position(&[-1.5, -1.0, 1.0, 1.5]).unwrap();
        for _ in 0..50 {
            let phi = linalg::random_cvector(4, &mut rng);
            assert!(pos.graph_norm_squared(&phi) > 0.0);
        }
    }

    #[test]
    fn custom_split_validation() {
        // block-diagonal form: accepted
        let q = linalg::cdiag(&[Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0)]);
        let p = linalg::cdiag(&[linalg::C_ONE, linalg::C_ZERO]);
        let split = SectorSplit::custom(q, p.clone()).unwrap();
        let (plus, minus) = split.sector_spectra();
        assert_eq!(plus, vec![2.0]);
        assert_eq!(minus, vec![-3.0]);

        // coupled form: rejected as not additive
        let mut q = linalg::cdiag(&[Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0)]);
        q[(0, 1)] = Complex64::new(0.5, 0.0);
        q[(1, 0)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            SectorSplit::custom(q, p),
            Err(Error::NotAdditive(_))
        ));

        // grids that are not symmetric are rejected
        assert!(SectorSplit::position(&[-1.0, 0.5, 1.0]).is_err());
        assert!(SectorSplit::momentum(4).is_err());
    }
}
