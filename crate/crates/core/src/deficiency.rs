//! Von Neumann deficiency-space machinery for concrete 1D operators.
//!
//! Deficiency spaces `N_pm = ker(T* -/+ i)` are computed in closed form
//! for the half-line and interval Laplacian and sampled on a grid; the
//! bipartite construction tensors shifted deficiency vectors of the
//! auxiliary operator into the eigenvector slots of a finite bulk
//! Hamiltonian, so `n_pm(AB) = n_pm(A) * dim(H_B)`. A unitary
//! `K : N_+ -> N_-` then defines the extension
//! `T_K (Phi_0 + (I + K) xi_+) = T Phi_0 + i (I - K) xi_+`.

use num_complex::Complex64;

use crate::linalg::{self, CMatrix, CVector, UniformGrid};
use crate::{Error, Result};

/// Relative ODE residual accepted for any produced deficiency vector.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Required decay of deficiency vectors at the far end of the grid.
pub const DECAY_TOL: f64 = 1e-8;

/// The minimal symmetric operators whose deficiency spaces are built.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseOperator {
    /// `-d^2/dx^2` on compactly supported functions in `(0, inf)`,
    /// sampled on `[0, extent]`.
    HalfLineLaplacian { extent: f64 },
    /// `-d^2/dx^2` on compactly supported functions in `(0, length)`.
    IntervalLaplacian { length: f64 },
}

/// Grid-sampled bases of the deficiency spaces `N_+` and `N_-`.
///
/// Basis elements are `n_grid x components` matrices; multi-component
/// entries occupy the eigenvector slots of the bulk Hamiltonian of a
/// bipartite system. Component `c` of any basis element solves
/// `-f'' + shift_c f = +/- i f`.
#[derive(Debug, Clone)]
pub struct DeficiencyPair {
    pub n_plus: usize,
    pub n_minus: usize,
    pub basis_plus: Vec<CMatrix>,
    pub basis_minus: Vec<CMatrix>,
    pub grid: UniformGrid,
    /// Real shift added to the operator in each component slot.
    pub component_shifts: Vec<f64>,
    pub base: BaseOperator,
    /// Relative defining-equation residuals of `basis_plus`.
    pub residuals_plus: Vec<f64>,
    /// Relative defining-equation residuals of `basis_minus`.
    pub residuals_minus: Vec<f64>,
}

impl DeficiencyPair {
    pub fn components(&self) -> usize {
        self.component_shifts.len()
    }

    /// Gram matrix of a basis in the discrete L2 inner product.
    pub fn gram(&self, basis: &[CMatrix]) -> CMatrix {
        let m = basis.len();
        CMatrix::from_fn(m, m, |i, j| self.grid.inner_matrix(&basis[i], &basis[j]))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let encode = |basis: &[CMatrix]| -> Vec<Vec<[f64; 2]>> {
            basis
                .iter()
                .map(|b| {
                    let mut flat = Vec::with_capacity(b.nrows() * b.ncols());
                    for i in 0..b.nrows() {
                        for c in 0..b.ncols() {
                            flat.push([b[(i, c)].re, b[(i, c)].im]);
                        }
                    }
                    flat
                })
                .collect()
        };
        serde_json::json!({
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "grid": self.grid.points,
            "components": self.components(),
            "component_shifts": self.component_shifts,
            "basis_plus": encode(&self.basis_plus),
            "basis_minus": encode(&self.basis_minus),
            "residuals_plus": self.residuals_plus,
            "residuals_minus": self.residuals_minus,
        })
    }
}

/// Relative residual of `(-d^2/dx^2 + shift_c -/+ i) f` over the interior
/// grid, all component slots combined.
fn residual_of_element(m: &CMatrix, grid: &UniformGrid, shifts: &[f64], sign: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..m.ncols() {
        let col: Vec<Complex64> = (0..m.nrows()).map(|i| m[(i, c)]).collect();
        let (start, d2) = linalg::second_derivative_fd4(&col, grid.step);
        for (k, d) in d2.iter().enumerate() {
            let i = start + k;
            let r = -d + col[i] * Complex64::new(shifts[c], -sign);
            num += r.norm_sqr();
            den += col[i].norm_sqr();
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Exponents of the square-integrable closed-form solutions of
/// `-f'' + shift f = sign * i f`. The square root takes the branch of
/// positive real part, the only decaying choice on the half-line.
fn solution_exponents(base: &BaseOperator, shift: f64, sign: f64) -> Vec<Complex64> {
    let mu = Complex64::new(shift, -sign).sqrt();
    match base {
        BaseOperator::HalfLineLaplacian { .. } => vec![-mu],
        BaseOperator::IntervalLaplacian { .. } => vec![-mu, mu],
    }
}

fn sample_exponential(grid: &UniformGrid, exponent: Complex64) -> Vec<Complex64> {
    grid.points.iter().map(|&x| (exponent * x).exp()).collect()
}

/// Fixes the global phase so the value at the left endpoint is real and
/// positive, falling back to the largest entry when that value vanishes.
fn fix_slot_phase(values: &mut CMatrix) {
    let mut anchor = linalg::C_ZERO;
    for c in 0..values.ncols() {
        if values[(0, c)].norm() > anchor.norm() {
            anchor = values[(0, c)];
        }
    }
    if anchor.norm() > 1e-10 {
        let rot = anchor.conj() / Complex64::new(anchor.norm(), 0.0);
        for z in values.iter_mut() {
            *z *= rot;
        }
    } else {
        let mut v = CVector::from_iterator(values.len(), values.iter().cloned());
        linalg::fix_phase(&mut v);
        for (z, w) in values.iter_mut().zip(v.iter()) {
            *z = *w;
        }
    }
}

struct BasisBuild {
    elements: Vec<CMatrix>,
    residuals: Vec<f64>,
}

/// Builds the grid basis of one deficiency space: per component slot,
/// closed-form decaying solutions orthonormalized within the slot.
fn build_basis(
    base: &BaseOperator,
    grid: &UniformGrid,
    shifts: &[f64],
    sign: f64,
) -> Result<BasisBuild> {
    let n = grid.len();
    let extent = grid.points[n - 1] - grid.points[0];
    let mut elements = Vec::new();
    let mut residuals = Vec::new();
    for (slot, &shift) in shifts.iter().enumerate() {
        let exponents = solution_exponents(base, shift, sign);
        if matches!(base, BaseOperator::HalfLineLaplacian { .. }) {
            let decay = (-exponents[0].re.abs() * extent).exp();
            if decay >= DECAY_TOL {
                return Err(Error::GridTooShort {
                    decay,
                    tol: DECAY_TOL,
                });
            }
        }
        let mut slot_elements: Vec<CMatrix> = Vec::new();
        for exponent in exponents {
            let samples = sample_exponential(grid, exponent);
            let mut m = CMatrix::zeros(n, shifts.len());
            for (i, z) in samples.iter().enumerate() {
                m[(i, slot)] = *z;
            }
            // Gram-Schmidt against the previous solutions in this slot
            for prev in &slot_elements {
                let overlap = grid.inner_matrix(prev, &m);
                m -= prev * overlap;
            }
            let norm = grid.norm_matrix(&m);
            if norm < 1e-12 {
                return Err(Error::SolverFailure(
                    "deficiency solutions are numerically dependent".to_string(),
                ));
            }
            m /= Complex64::new(norm, 0.0);
            fix_slot_phase(&mut m);
            slot_elements.push(m);
        }
        for m in slot_elements {
            residuals.push(residual_of_element(&m, grid, shifts, sign));
            elements.push(m);
        }
    }
    Ok(BasisBuild {
        elements,
        residuals,
    })
}

fn pair_from_parts(
    base: BaseOperator,
    grid: UniformGrid,
    shifts: Vec<f64>,
) -> Result<DeficiencyPair> {
    let plus = build_basis(&base, &grid, &shifts, 1.0)?;
    let minus = build_basis(&base, &grid, &shifts, -1.0)?;
    Ok(DeficiencyPair {
        n_plus: plus.elements.len(),
        n_minus: minus.elements.len(),
        basis_plus: plus.elements,
        basis_minus: minus.elements,
        grid,
        component_shifts: shifts,
        base,
        residuals_plus: plus.residuals,
        residuals_minus: minus.residuals,
    })
}

/// Deficiency pair of the half-line Laplacian: `n_+ = n_- = 1` with
/// normalized samples of the decaying solutions of `-f'' = +/- i f`.
pub fn half_line_laplacian_deficiency(grid_extent: f64, grid_n: usize) -> Result<DeficiencyPair> {
    if grid_n < 100 {
        return Err(Error::InvalidInput(
            "half-line deficiency grid needs at least 100 points".to_string(),
        ));
    }
    if !(grid_extent > 0.0) || !grid_extent.is_finite() {
        return Err(Error::InvalidInput(
            "grid extent must be positive".to_string(),
        ));
    }
    let decay = (-grid_extent / 2f64.sqrt()).exp();
    if decay >= DECAY_TOL {
        return Err(Error::GridTooShort {
            decay,
            tol: DECAY_TOL,
        });
    }
    let grid = UniformGrid::new(0.0, grid_extent, grid_n);
    pair_from_parts(
        BaseOperator::HalfLineLaplacian {
            extent: grid_extent,
        },
        grid,
        vec![0.0],
    )
}

/// Deficiency pair of the Laplacian on `[0, length]` with both endpoints
/// free: both exponential branches are square integrable, so
/// `n_+ = n_- = 2`.
pub fn interval_laplacian_deficiency(length: f64, grid_n: usize) -> Result<DeficiencyPair> {
    if grid_n < 100 {
        return Err(Error::InvalidInput(
            "interval deficiency grid needs at least 100 points".to_string(),
        ));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(
            "interval length must be positive".to_string(),
        ));
    }
    let grid = UniformGrid::new(0.0, length, grid_n);
    pair_from_parts(BaseOperator::IntervalLaplacian { length }, grid, vec![0.0])
}

/// Deficiency pair of the bipartite operator `H_A (x) I + I (x) H_B`,
/// where `def_a` describes `H_A` and `h_b_eigenvalues` are the bulk
/// eigenvalues sorted strictly descending. Component slot `k` of the
/// result solves `H_A* Phi_k = (+/- i - lambda_k) Phi_k`; slots for
/// distinct eigenvalues are exactly orthogonal.
pub fn bipartite_deficiency(
    def_a: &DeficiencyPair,
    h_b_eigenvalues: &[f64],
) -> Result<DeficiencyPair> {
    if def_a.components() != 1 {
        return Err(Error::InvalidInput(
            "bipartite construction starts from a one-component deficiency pair".to_string(),
        ));
    }
    for pair in h_b_eigenvalues.windows(2) {
        if !(pair[0] > pair[1]) {
            return Err(Error::InvalidInput(
                "bulk eigenvalues must be sorted strictly descending".to_string(),
            ));
        }
    }
    if h_b_eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput(
            "bulk eigenvalues must be finite".to_string(),
        ));
    }
    pair_from_parts(
        def_a.base.clone(),
        def_a.grid.clone(),
        h_b_eigenvalues.to_vec(),
    )
}

/// A von Neumann extension `T_K` of the minimal operator underlying a
/// deficiency pair, fixed by a unitary `K : N_+ -> N_-` expressed in the
/// pair's bases.
#[derive(Debug, Clone)]
pub struct VonNeumannExtension {
    pair: DeficiencyPair,
    k_matrix: CMatrix,
}

impl VonNeumannExtension {
    pub fn new(pair: DeficiencyPair, k_matrix: CMatrix) -> Result<Self> {
        if pair.n_plus != pair.n_minus {
            return Err(Error::InvalidInput(
                "a von Neumann extension needs equal deficiency indices".to_string(),
            ));
        }
        if k_matrix.nrows() != pair.n_plus || k_matrix.ncols() != pair.n_plus {
            return Err(Error::DimensionMismatch {
                expected: pair.n_plus,
                got: k_matrix.nrows(),
            });
        }
        let deviation = linalg::unitary_deviation(&k_matrix);
        if !(deviation <= 1e-12) {
            return Err(Error::NonUnitary(deviation));
        }
        Ok(VonNeumannExtension { pair, k_matrix })
    }

    pub fn pair(&self) -> &DeficiencyPair {
        &self.pair
    }

    pub fn k_matrix(&self) -> &CMatrix {
        &self.k_matrix
    }

    /// Applies the extension to `Phi = Phi_0 + (I + K) xi_+`: returns the
    /// sampled domain element and its image `T Phi_0 + i (I - K) xi_+`.
    ///
    /// `phi0` must live in the minimal domain at grid resolution: zero on
    /// the first and last two nodes. Its image is computed by fourth-order
    /// finite differences and set to zero on those edge nodes.
    pub fn apply(&self, phi0: &CMatrix, xi_plus: &CVector) -> Result<(CMatrix, CMatrix)> {
        let grid = &self.pair.grid;
        let n = grid.len();
        if phi0.nrows() != n || phi0.ncols() != self.pair.components() {
            return Err(Error::DimensionMismatch {
                expected: n * self.pair.components(),
                got: phi0.nrows() * phi0.ncols(),
            });
        }
        if xi_plus.len() != self.pair.n_plus {
            return Err(Error::DimensionMismatch {
                expected: self.pair.n_plus,
                got: xi_plus.len(),
            });
        }
        let scale = phi0.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for &i in &[0usize, 1, n - 2, n - 1] {
            for col in 0..phi0.ncols() {
                if phi0[(i, col)].norm() > 1e-12 * (1.0 + scale) {
                    return Err(Error::InvalidInput(
                        "phi0 must vanish on the first and last two nodes".to_string(),
                    ));
                }
            }
        }

        let k_xi = &self.k_matrix * xi_plus;
        let mut domain = phi0.clone();
        let mut image = CMatrix::zeros(n, self.pair.components());
        for col in 0..phi0.ncols() {
            let samples: Vec<Complex64> = (0..n).map(|i| phi0[(i, col)]).collect();
            let (start, d2) = linalg::second_derivative_fd4(&samples, grid.step);
            for (k, d) in d2.iter().enumerate() {
                let i = start + k;
                image[(i, col)] = -d + samples[i] * self.pair.component_shifts[col];
            }
        }
        for (j, xi) in self.pair.basis_plus.iter().enumerate() {
            domain += xi * xi_plus[j];
            image += xi * (xi_plus[j] * linalg::C_I);
        }
        for (j, eta) in self.pair.basis_minus.iter().enumerate() {
            domain += eta * k_xi[j];
            image -= eta * (k_xi[j] * linalg::C_I);
        }
        Ok((domain, image))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C_ONE, C_ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn half_line_indices_and_closed_form() {
        let pair = half_line_laplacian_deficiency(40.0, 4000).unwrap();
        assert_eq!(pair.n_plus, 1);
        assert_eq!(pair.n_minus, 1);
        // N_+ solves -f'' = i f: decaying branch exp(-(1 - i) x / sqrt(2))
        let plus = &pair.basis_plus[0];
        let raw: Vec<Complex64> = pair
            .grid
            .points
            .iter()
            .map(|&x| (Complex64::new(-SQRT_HALF, SQRT_HALF) * x).exp())
            .collect();
        let norm = {
            let m = CMatrix::from_fn(raw.len(), 1, |i, _| raw[i]);
            pair.grid.norm_matrix(&m)
        };
        for (i, z) in raw.iter().enumerate() {
            assert!((plus[(i, 0)] - z / Complex64::new(norm, 0.0)).norm() < 1e-12);
        }
        // and N_- is its conjugate
        let minus = &pair.basis_minus[0];
        for i in 0..raw.len() {
            assert!((minus[(i, 0)] - plus[(i, 0)].conj()).norm() < 1e-12);
        }
        assert!(pair.residuals_plus[0] <= RESIDUAL_TOL);
        assert!(pair.residuals_minus[0] <= RESIDUAL_TOL);
    }

    #[test]
    fn short_grid_is_rejected() {
        match half_line_laplacian_deficiency(10.0, 1000) {
            Err(Error::GridTooShort { decay, .. }) => assert!(decay > 1e-8),
            other => panic!("expected GridTooShort, got {other:?}"),
        }
    }

    #[test]
    fn interval_has_two_dimensional_spaces() {
        let pair = interval_laplacian_deficiency(1.0, 400).unwrap();
        assert_eq!(pair.n_plus, 2);
        assert_eq!(pair.n_minus, 2);
        let gram = pair.gram(&pair.basis_plus);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { C_ONE } else { C_ZERO };
                assert!((gram[(i, j)] - expected).norm() < 1e-8);
            }
        }
        for r in pair.residuals_plus.iter().chain(&pair.residuals_minus) {
            assert!(*r <= RESIDUAL_TOL, "residual {r}");
        }
    }

    #[test]
    fn bipartite_dimension_law_and_orthogonality() {
        let one_body = half_line_laplacian_deficiency(40.0, 2000).unwrap();
        let pair = bipartite_deficiency(&one_body, &[2.0, 1.0]).unwrap();
        assert_eq!(pair.n_plus, 2);
        assert_eq!(pair.n_minus, 2);
        assert_eq!(pair.components(), 2);
        // slots are exactly orthogonal
        let overlap = pair
            .grid
            .inner_matrix(&pair.basis_plus[0], &pair.basis_plus[1]);
        assert!(overlap.norm() <= 1e-12);
        for r in pair.residuals_plus.iter().chain(&pair.residuals_minus) {
            assert!(*r <= RESIDUAL_TOL);
        }

        let empty = bipartite_deficiency(&one_body, &[]).unwrap();
        assert_eq!(empty.n_plus, 0);
        assert_eq!(empty.n_minus, 0);
    }

    #[test]
    fn bipartite_zero_eigenvalue_matches_one_body_vector() {
        let one_body = half_line_laplacian_deficiency(40.0, 2000).unwrap();
        let pair = bipartite_deficiency(&one_body, &[0.0]).unwrap();
        let produced = &pair.basis_plus[0];
        let reference = &one_body.basis_plus[0];
        for i in 0..pair.grid.len() {
            assert!((produced[(i, 0)] - reference[(i, 0)]).norm() < 1e-12);
        }
    }

    #[test]
    fn bipartite_dimension_law_scales_with_both_factors() {
        // n_pm(AB) = n_pm(A) * dim(H_B) for the interval base as well
        let one_body = interval_laplacian_deficiency(1.0, 300).unwrap();
        let pair = bipartite_deficiency(&one_body, &[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(pair.n_plus, 6);
        assert_eq!(pair.n_minus, 6);
        let gram = pair.gram(&pair.basis_plus);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { C_ONE } else { C_ZERO };
                assert!(
                    (gram[(i, j)] - expected).norm() < 1e-8,
                    "gram ({i}, {j}) = {}",
                    gram[(i, j)]
                );
            }
        }
        for r in pair.residuals_plus.iter().chain(&pair.residuals_minus) {
            assert!(*r <= RESIDUAL_TOL);
        }
    }

    #[test]
    fn descending_order_is_enforced() {
        let one_body = half_line_laplacian_deficiency(40.0, 1000).unwrap();
        assert!(matches!(
            bipartite_deficiency(&one_body, &[1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    fn smooth_bump(grid: &UniformGrid, center: f64, width: f64) -> Vec<Complex64> {
        grid.points
            .iter()
            .map(|&x| {
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    Complex64::new((-1.0 / (1.0 - t * t)).exp(), 0.0)
                } else {
                    C_ZERO
                }
            })
            .collect()
    }

    #[test]
    fn minimal_action_and_k_identity_examples() {
        let pair = half_line_laplacian_deficiency(40.0, 4000).unwrap();
        let n = pair.grid.len();
        let ext = VonNeumannExtension::new(pair.clone(), CMatrix::identity(1, 1)).unwrap();

        // xi = 0: plain minimal-domain action; image is -phi0''
        let bump = smooth_bump(&pair.grid, 20.0, 5.0);
        let phi0 = CMatrix::from_fn(n, 1, |i, _| bump[i]);
        let (domain, image) = ext.apply(&phi0, &CVector::zeros(1)).unwrap();
        assert!((&domain - &phi0).norm() < 1e-14);
        let h = pair.grid.step;
        for i in (100..n - 100).step_by(57) {
            let second = (bump[i - 1] - bump[i] * 2.0 + bump[i + 1]) / (h * h);
            assert!(
                (image[(i, 0)] + second).norm() < 1e-4 * (1.0 + second.norm()),
                "node {i}: {} vs {}",
                image[(i, 0)].re,
                -second.re
            );
        }

        // phi0 = 0 and K = I: domain xi_+ + xi_-, image i (xi_+ - xi_-)
        let zero = CMatrix::zeros(n, 1);
        let xi = CVector::from_element(1, C_ONE);
        let (domain, image) = ext.apply(&zero, &xi).unwrap();
        let expected_domain = &pair.basis_plus[0] + &pair.basis_minus[0];
        let expected_image = (&pair.basis_plus[0] - &pair.basis_minus[0]) * linalg::C_I;
        assert!((&domain - &expected_domain).norm() < 1e-12);
        assert!((&image - &expected_image).norm() < 1e-12);
    }

    #[test]
    fn extension_is_symmetric_for_random_k() {
        let pair = half_line_laplacian_deficiency(40.0, 4000).unwrap();
        let n = pair.grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let phase =
                Complex64::from_polar(1.0, (2.0 * rng.gen::<f64>() - 1.0) * std::f64::consts::PI);
            let k = CMatrix::from_element(1, 1, phase);
            let ext = VonNeumannExtension::new(pair.clone(), k).unwrap();
            for _ in 0..10 {
                let make = |rng: &mut ChaCha8Rng| {
                    let center = 10.0 + rng.gen::<f64>() * 18.0;
                    let width = 3.0 + rng.gen::<f64>() * 3.0;
                    let amp =
                        Complex64::new(linalg::standard_normal(rng), linalg::standard_normal(rng));
                    let bump = smooth_bump(&pair.grid, center, width);
                    let phi0 = CMatrix::from_fn(n, 1, |i, _| bump[i] * amp);
                    let xi = linalg::random_cvector(1, rng);
                    (phi0, xi)
                };
                let (phi_a, xi_a) = make(&mut rng);
                let (phi_b, xi_b) = make(&mut rng);
                let (da, ia) = ext.apply(&phi_a, &xi_a).unwrap();
                let (db, ib) = ext.apply(&phi_b, &xi_b).unwrap();
                let lhs = pair.grid.inner_matrix(&da, &ib);
                let rhs = pair.grid.inner_matrix(&ia, &db);
                let na = pair.grid.norm_matrix(&da);
                let nb = pair.grid.norm_matrix(&db);
                assert!(
                    (lhs - rhs).norm() <= 1e-6 * na * nb,
                    "symmetry defect {} vs allowance {}",
                    (lhs - rhs).norm(),
                    1e-6 * na * nb
                );
            }
        }
    }

    #[test]
    fn interval_extension_is_symmetric_for_matrix_k() {
        // n_pm = 2 on the interval: K is a genuine 2x2 unitary here
        let pair = interval_laplacian_deficiency(1.0, 2001).unwrap();
        let n = pair.grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let k = linalg::random_unitary(2, &mut rng);
            let ext = VonNeumannExtension::new(pair.clone(), k).unwrap();
            for _ in 0..6 {
                let make = |rng: &mut ChaCha8Rng| {
                    let center = 0.3 + rng.gen::<f64>() * 0.4;
                    let width = 0.12 + rng.gen::<f64>() * 0.1;
                    let amp =
                        Complex64::new(linalg::standard_normal(rng), linalg::standard_normal(rng));
                    let bump = smooth_bump(&pair.grid, center, width);
                    let phi0 = CMatrix::from_fn(n, 1, |i, _| bump[i] * amp);
                    let xi = linalg::random_cvector(2, rng);
                    (phi0, xi)
                };
                let (phi_a, xi_a) = make(&mut rng);
                let (phi_b, xi_b) = make(&mut rng);
                let (da, ia) = ext.apply(&phi_a, &xi_a).unwrap();
                let (db, ib) = ext.apply(&phi_b, &xi_b).unwrap();
                let lhs = pair.grid.inner_matrix(&da, &ib);
                let rhs = pair.grid.inner_matrix(&ia, &db);
                let na = pair.grid.norm_matrix(&da);
                let nb = pair.grid.norm_matrix(&db);
                assert!(
                    (lhs - rhs).norm() <= 1e-6 * na * nb,
                    "interval symmetry defect {}",
                    (lhs - rhs).norm()
                );
            }
        }
    }

    #[test]
    fn non_unitary_k_is_rejected() {
        let pair = half_line_laplacian_deficiency(40.0, 500).unwrap();
        let k = CMatrix::from_element(1, 1, Complex64::new(1.2, 0.0));
        assert!(matches!(
            VonNeumannExtension::new(pair, k),
            Err(Error::NonUnitary(_))
        ));
    }

    #[test]
    fn json_shape_is_stable() {
        let pair = half_line_laplacian_deficiency(40.0, 500).unwrap();
        let v = pair.to_json();
        assert_eq!(v["n_plus"], 1);
        assert_eq!(v["grid"].as_array().unwrap().len(), 500);
        assert_eq!(v["basis_plus"].as_array().unwrap().len(), 1);
    }
}
