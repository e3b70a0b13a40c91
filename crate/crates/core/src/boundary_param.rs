//! Unitary parametrization of self-adjoint boundary conditions.
//!
//! A finite unitary `U` on the boundary-data space fixes an extension
//! through the boundary equation
//!
//! ```text
//! phi - i phidot = U (phi + i phidot)        (asorey convention)
//! ```
//!
//! Splitting off the eigenspace `W` of eigenvalue -1, the equation becomes
//! `P_W phi = 0` together with `phidot = A_U phi` on the complement, where
//! `A_U = i (U - I)(U + I)^-1` is the partial Cayley transform. The gap of
//! `U` (angular distance of the rest of the spectrum from -1) bounds
//! `||A_U||` and hence controls semiboundedness of the associated
//! quadratic form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::linalg::{self, CMatrix, CVector};
use crate::{Error, Result};

/// Unitarity tolerance accepted by [`BoundaryUnitary::from_matrix`].
pub const UNITARITY_TOL: f64 = 1e-10;
/// Eigenvalues within this angular distance of -1 are clustered into `W`.
pub const W_ANGLE_TOL: f64 = 1e-9;
/// Below this gap the unitary is flagged as numerically gapless.
pub const NO_GAP_DELTA: f64 = 1e-8;

/// The convention tag accepted in serialized form.
pub const CONVENTION: &str = "asorey";

/// Finite unitary boundary parametrization with its spectral metadata.
#[derive(Debug, Clone)]
pub struct BoundaryUnitary {
    matrix: CMatrix,
    eigenvalues: Vec<Complex64>,
    gap_delta: f64,
    no_gap: bool,
    w_basis: Vec<CVector>,
    w_perp_basis: Vec<CVector>,
    w_perp_cayley_values: Vec<f64>,
    cayley: CMatrix,
}

impl BoundaryUnitary {
    /// Builds the parametrization from a unitary matrix: eigendecomposes,
    /// clusters the near-(-1) spectrum into `W`, computes the gap and the
    /// partial Cayley transform on the complement.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let deviation = linalg::unitary_deviation(&matrix);
        if !(deviation <= UNITARITY_TOL) {
            return Err(Error::NonUnitary(deviation));
        }
        let n = matrix.nrows();
        let (eigenvalues, eigenvectors) = linalg::unitary_eigen(&matrix)?;

        let mut w_basis = Vec::new();
        let mut w_perp_basis = Vec::new();
        let mut w_perp_cayley_values = Vec::new();
        let mut gap_delta = PI;
        let mut cayley = CMatrix::zeros(n, n);
        for (k, lambda) in eigenvalues.iter().enumerate() {
            let theta = lambda.arg();
            let dist = PI - theta.abs();
            let v = eigenvectors.column(k).clone_owned();
            if dist <= W_ANGLE_TOL {
                w_basis.push(v);
            } else {
                gap_delta = gap_delta.min(dist);
                let a = -(0.5 * theta).tan();
                cayley += (&v * v.adjoint()) * Complex64::new(a, 0.0);
                w_perp_basis.push(v);
                w_perp_cayley_values.push(a);
            }
        }
        let no_gap = gap_delta < NO_GAP_DELTA;

        Ok(BoundaryUnitary {
            matrix,
            eigenvalues,
            gap_delta,
            no_gap,
            w_basis,
            w_perp_basis,
            w_perp_cayley_values,
            cayley,
        })
    }

    /// Boundary-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Unit-circle eigenvalues sorted by principal argument.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Angular distance of the non-(-1) spectrum from -1; `pi` when the
    /// spectrum away from -1 is empty.
    pub fn gap_delta(&self) -> f64 {
        self.gap_delta
    }

    /// Numerically gapless: some eigenvalue sits next to -1 without being
    /// clustered into `W`. Flagged, never silently perturbed.
    pub fn no_gap(&self) -> bool {
        self.no_gap
    }

    pub fn has_gap(&self) -> bool {
        !self.no_gap
    }

    /// Orthonormal basis of the eigenvalue -1 eigenspace `W`.
    pub fn w_basis(&self) -> &[CVector] {
        &self.w_basis
    }

    pub fn w_dim(&self) -> usize {
        self.w_basis.len()
    }

    /// Orthonormal basis of the complement `W_perp` (eigenvectors of `U`).
    pub fn w_perp_basis(&self) -> &[CVector] {
        &self.w_perp_basis
    }

    /// Partial Cayley transform `i (U - I)(U + I)^-1` as a full-space
    /// Hermitian matrix supported on `W_perp` (zero on `W`).
    pub fn cayley(&self) -> &CMatrix {
        &self.cayley
    }

    /// The Cayley transform restricted to `W_perp`, expressed in
    /// [`Self::w_perp_basis`]; a `(n - dim W)` square diagonal matrix.
    pub fn cayley_restricted(&self) -> CMatrix {
        let m = self.w_perp_basis.len();
        let mut out = CMatrix::zeros(m, m);
        for (k, a) in self.w_perp_cayley_values.iter().enumerate() {
            out[(k, k)] = Complex64::new(*a, 0.0);
        }
        out
    }

    /// Operator norm of the partial Cayley transform,
    /// `max |tan(theta/2)|` over the gapped spectrum.
    pub fn cayley_norm(&self) -> f64 {
        self.w_perp_cayley_values
            .iter()
            .fold(0.0, |acc, a| acc.max(a.abs()))
    }

    /// Orthogonal projector onto `W`.
    pub fn w_projector(&self) -> CMatrix {
        let n = self.dim();
        let mut p = CMatrix::zeros(n, n);
        for w in &self.w_basis {
            p += w * w.adjoint();
        }
        p
    }

    /// Norm of the `W`-component of a boundary vector.
    pub fn w_component_norm(&self, phi: &CVector) -> f64 {
        self.w_basis
            .iter()
            .map(|w| (w.adjoint() * phi)[(0, 0)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Serializes as `{"matrix": [[re, im], ...] (row-major), "convention": "asorey"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut flat = Vec::with_capacity(self.dim() * self.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                flat.push([z.re, z.im]);
            }
        }
        serde_json::json!({ "matrix": flat, "convention": CONVENTION })
    }

    /// Parses the JSON form; the `convention` tag is mandatory and must be
    /// `"asorey"`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: BoundaryUnitaryJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("boundary unitary JSON: {e}")))?;
        if parsed.convention != CONVENTION {
            return Err(Error::InvalidInput(format!(
                "unsupported convention {:?}; only {:?} is accepted",
                parsed.convention, CONVENTION
            )));
        }
        let len = parsed.matrix.len();
        let n = (len as f64).sqrt().round() as usize;
        if n * n != len || n == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix entry count {len} is not a positive perfect square"
            )));
        }
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = parsed.matrix[i * n + j];
            Complex64::new(re, im)
        });
        Self::from_matrix(matrix)
    }
}

#[derive(Serialize, Deserialize)]
struct BoundaryUnitaryJson {
    matrix: Vec<[f64; 2]>,
    convention: String,
}

/// Inverse of the partial Cayley transform: the unitary
/// `(I - iA)(I + iA)^-1` whose Cayley transform is the Hermitian `A`.
/// Always defined; the result has no eigenvalue -1.
pub fn inverse_cayley(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let ia = a * linalg::C_I;
    let plus = CMatrix::identity(n, n) + &ia;
    let minus = CMatrix::identity(n, n) - &ia;
    let inv = plus
        .lu()
        .solve(&CMatrix::identity(n, n))
        .ok_or_else(|| Error::SolverFailure("I + iA is singular".to_string()))?;
    Ok(minus * inv)
}

/// The standard named conditions on an `n`-dimensional boundary space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedCondition {
    /// `phi = 0`: `U = -I`.
    Dirichlet,
    /// `phidot = 0`: `U = I`.
    Neumann,
    /// `phidot = c phi`: `U = e^{i alpha} I` with `alpha = -2 atan(c)`.
    Robin { coupling: f64 },
    /// Two-endpoint coupling `phi_1 = e^{i tau} phi_0`,
    /// `Phi'(L) = e^{i tau} Phi'(0)`; requires `n = 2`.
    QuasiPeriodic { tau: f64 },
}

/// Builds the boundary unitary of a named condition.
pub fn named_condition(kind: NamedCondition, n: usize) -> Result<BoundaryUnitary> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "boundary dimension must be >= 1".into(),
        ));
    }
    let matrix = match kind {
        NamedCondition::Dirichlet => CMatrix::identity(n, n) * Complex64::new(-1.0, 0.0),
        NamedCondition::Neumann => CMatrix::identity(n, n),
        NamedCondition::Robin { coupling } => {
            if !coupling.is_finite() {
                return Err(Error::InvalidInput("robin coupling must be finite".into()));
            }
            let alpha = -2.0 * coupling.atan();
            CMatrix::identity(n, n) * Complex64::from_polar(1.0, alpha)
        }
        NamedCondition::QuasiPeriodic { tau } => {
            if n != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: n,
                });
            }
            if !tau.is_finite() {
                return Err(Error::InvalidInput(
                    "quasi-periodic phase must be finite".into(),
                ));
            }
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 1)] = Complex64::from_polar(1.0, -tau);
            m[(1, 0)] = Complex64::from_polar(1.0, tau);
            m
        }
    };
    BoundaryUnitary::from_matrix(matrix)
}

/// Boundary samples of a function: trace and outward normal trace.
///
/// For two-point domains index 0 is the left endpoint and index 1 the
/// right endpoint; the normal trace is `(-Phi'(left), +Phi'(right))`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub trace: CVector,
    pub normal_trace: CVector,
}

impl BoundaryData {
    pub fn new(trace: CVector, normal_trace: CVector) -> Result<Self> {
        if trace.len() != normal_trace.len() {
            return Err(Error::DimensionMismatch {
                expected: trace.len(),
                got: normal_trace.len(),
            });
        }
        Ok(BoundaryData {
            trace,
            normal_trace,
        })
    }

    pub fn dim(&self) -> usize {
        self.trace.len()
    }
}

/// Outcome of a boundary-condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionCheck {
    Satisfied,
    Violated { residual: f64 },
}

impl ConditionCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, ConditionCheck::Satisfied)
    }

    pub fn residual(&self) -> f64 {
        match self {
            ConditionCheck::Satisfied => 0.0,
            ConditionCheck::Violated { residual } => *residual,
        }
    }
}

/// Tests the split boundary equation: `||P_W phi|| <= tol` and
/// `||phidot_perp - A_U phi_perp|| <= tol`. The reported residual is the
/// larger of the two norms.
pub fn check_boundary_condition(
    bu: &BoundaryUnitary,
    bd: &BoundaryData,
    tol: f64,
) -> Result<ConditionCheck> {
    if bd.dim() != bu.dim() {
        return Err(Error::DimensionMismatch {
            expected: bu.dim(),
            got: bd.dim(),
        });
    }
    let w_residual = bu.w_component_norm(&bd.trace);
    // project the normal trace on W_perp and compare with A_U phi
    let mut perp_residual_sq = 0.0;
    for (k, v) in bu.w_perp_basis().iter().enumerate() {
        let phidot_c = (v.adjoint() * &bd.normal_trace)[(0, 0)];
        let phi_c = (v.adjoint() * &bd.trace)[(0, 0)];
        let a = bu.w_perp_cayley_values[k];
        perp_residual_sq += (phidot_c - phi_c * a).norm_sqr();
    }
    let perp_residual = perp_residual_sq.sqrt();
    let residual = w_residual.max(perp_residual);
    if residual <= tol {
        Ok(ConditionCheck::Satisfied)
    } else {
        Ok(ConditionCheck::Violated { residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cdiag, random_gapped_unitary, C_I, C_ONE};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cvec(entries: &[Complex64]) -> CVector {
        CVector::from_column_slice(entries)
    }

    #[test]
    fn identity_has_full_gap_and_zero_cayley() {
        let bu = BoundaryUnitary::from_matrix(CMatrix::identity(2, 2)).unwrap();
        assert_eq!(bu.gap_delta(), PI);
        assert_eq!(bu.w_dim(), 0);
        assert!(bu.cayley().iter().all(|z| z.norm() == 0.0));
        assert!(bu.has_gap());
    }

    #[test]
    fn minus_identity_is_all_w() {
        let m = CMatrix::identity(2, 2) * Complex64::new(-1.0, 0.0);
        let bu = BoundaryUnitary::from_matrix(m).unwrap();
        assert_eq!(bu.w_dim(), 2);
        assert_eq!(bu.cayley_restricted().nrows(), 0);
        assert_eq!(bu.gap_delta(), PI); // vacuous gap
        for w in bu.w_basis() {
            let uv = bu.matrix() * w;
            assert!((uv + w).norm() < 1e-10);
        }
    }

    #[test]
    fn quarter_phase_example() {
        // diag(e^{i pi/2}, 1): gap pi/2, cayley = diag(-tan(pi/4), 0) = diag(-1, 0)
        let m = cdiag(&[Complex64::from_polar(1.0, PI / 2.0), C_ONE]);
        let bu = BoundaryUnitary::from_matrix(m).unwrap();
        assert!((bu.gap_delta() - PI / 2.0).abs() < 1e-12);
        let a = bu.cayley();
        assert!((a[(0, 0)] + C_ONE).norm() < 1e-12);
        assert!(a[(0, 1)].norm() < 1e-12);
        assert!(a[(1, 1)].norm() < 1e-12);
        assert!(linalg::hermitian_deviation(a) < 1e-12);
    }

    #[test]
    fn from_matrix_rejects_non_unitary() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        match BoundaryUnitary::from_matrix(m) {
            Err(Error::NonUnitary(dev)) => assert!(dev > 1e-10),
            other => panic!("expected NonUnitary, got {other:?}"),
        }
    }

    #[test]
    fn near_minus_one_spectrum_is_flagged_gapless() {
        // angular distance 1e-8.5-ish: outside W clustering, below NO_GAP_DELTA
        let theta = PI - 3e-9;
        let bu = BoundaryUnitary::from_matrix(cdiag(&[Complex64::from_polar(1.0, theta)])).unwrap();
        assert_eq!(bu.w_dim(), 0);
        assert!(bu.no_gap());
    }

    #[test]
    fn named_conditions_match_their_matrices() {
        let neumann = named_condition(NamedCondition::Neumann, 1).unwrap();
        assert!((neumann.matrix()[(0, 0)] - C_ONE).norm() < 1e-15);
        assert!(neumann.cayley()[(0, 0)].norm() == 0.0);

        let robin = named_condition(NamedCondition::Robin { coupling: 1.0 }, 1).unwrap();
        assert!((robin.matrix()[(0, 0)] + C_I).norm() < 1e-14);
        assert!((robin.cayley()[(0, 0)] - C_ONE).norm() < 1e-12);

        let dirichlet = named_condition(NamedCondition::Dirichlet, 2).unwrap();
        assert_eq!(dirichlet.w_dim(), 2);
    }

    #[test]
    fn quasi_periodic_couples_endpoints() {
        let tau = 0.7;
        let bu = named_condition(NamedCondition::QuasiPeriodic { tau }, 2).unwrap();
        // data satisfying Phi(L) = e^{i tau} Phi(0), Phi'(L) = e^{i tau} Phi'(0)
        let phase = Complex64::from_polar(1.0, tau);
        let phi0 = Complex64::new(0.8, -0.3);
        let dphi0 = Complex64::new(-0.2, 0.5);
        let bd =
            BoundaryData::new(cvec(&[phi0, phase * phi0]), cvec(&[-dphi0, phase * dphi0])).unwrap();
        let check = check_boundary_condition(&bu, &bd, 1e-10).unwrap();
        assert!(check.is_satisfied(), "residual {}", check.residual());

        // violated data
        let bad = BoundaryData::new(cvec(&[phi0, phi0]), cvec(&[-dphi0, dphi0])).unwrap();
        let check = check_boundary_condition(&bu, &bad, 1e-10).unwrap();
        assert!(!check.is_satisfied());
    }

    #[test]
    fn check_condition_examples() {
        let neumann = named_condition(NamedCondition::Neumann, 1).unwrap();
        let bd = BoundaryData::new(cvec(&[C_ONE]), cvec(&[linalg::C_ZERO])).unwrap();
        assert!(check_boundary_condition(&neumann, &bd, 1e-12)
            .unwrap()
            .is_satisfied());

        let dirichlet = named_condition(NamedCondition::Dirichlet, 1).unwrap();
        let bd = BoundaryData::new(cvec(&[Complex64::new(0.5, 0.0)]), cvec(&[C_ONE])).unwrap();
        match check_boundary_condition(&dirichlet, &bd, 1e-12).unwrap() {
            ConditionCheck::Violated { residual } => assert!((residual - 0.5).abs() < 1e-14),
            other => panic!("expected violation, got {other:?}"),
        }

        let robin = named_condition(NamedCondition::Robin { coupling: 1.0 }, 1).unwrap();
        let bd = BoundaryData::new(cvec(&[C_ONE]), cvec(&[C_ONE])).unwrap();
        assert!(check_boundary_condition(&robin, &bd, 1e-10)
            .unwrap()
            .is_satisfied());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bu = named_condition(NamedCondition::Neumann, 2).unwrap();
        let bd = BoundaryData::new(cvec(&[C_ONE]), cvec(&[C_ONE])).unwrap();
        assert!(matches!(
            check_boundary_condition(&bu, &bd, 1e-10),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn cayley_norm_respects_gap_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let u = random_gapped_unitary(4, 0.3, &mut rng);
            let bu = BoundaryUnitary::from_matrix(u).unwrap();
            let bound = ((PI - bu.gap_delta()) / 2.0).tan();
            assert!(bu.cayley_norm() <= bound + 1e-9);
        }
    }

    #[test]
    fn cayley_matches_the_direct_formula() {
        // A_U = i (U - I)(U + I)^-1 on gapped unitaries without W
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let u = random_gapped_unitary(3, 0.4, &mut rng);
            let bu = BoundaryUnitary::from_matrix(u.clone()).unwrap();
            let n = 3;
            let plus = &u + CMatrix::identity(n, n);
            let direct = (&u - CMatrix::identity(n, n))
                * plus.lu().solve(&CMatrix::identity(n, n)).unwrap()
                * C_I;
            assert!((bu.cayley() - direct).norm() < 1e-10);
            assert!(linalg::hermitian_deviation(bu.cayley()) < 1e-12);
        }
    }

    #[test]
    fn inverse_cayley_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 2, 3, 5] {
            for _ in 0..10 {
                let u = random_gapped_unitary(n, 0.35, &mut rng);
                let bu = BoundaryUnitary::from_matrix(u.clone()).unwrap();
                let rebuilt = inverse_cayley(bu.cayley()).unwrap();
                assert!(
                    (rebuilt - &u).norm() < 1e-10,
                    "round trip failed at n = {n}"
                );
            }
        }
    }

    #[test]
    fn generated_boundary_data_satisfies_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            let u = random_gapped_unitary(3, 0.4, &mut rng);
            let bu = BoundaryUnitary::from_matrix(u).unwrap();
            // phi arbitrary in W_perp, phidot = A_U phi
            let coeffs = linalg::random_cvector(bu.w_perp_basis().len(), &mut rng);
            let mut phi = CVector::zeros(bu.dim());
            for (k, v) in bu.w_perp_basis().iter().enumerate() {
                phi += v * coeffs[k];
            }
            let phidot = bu.cayley() * &phi;
            let bd = BoundaryData::new(phi, phidot).unwrap();
            let check = check_boundary_condition(&bu, &bd, 1e-9).unwrap();
            assert!(check.is_satisfied(), "residual {}", check.residual());
        }
    }

    #[test]
    fn json_round_trip_and_convention_guard() {
        let bu = named_condition(NamedCondition::Robin { coupling: -0.4 }, 2).unwrap();
        let json = bu.to_json();
        let back = BoundaryUnitary::from_json(&json).unwrap();
        assert!((back.matrix() - bu.matrix()).norm() < 1e-15);

        let mut tampered = json.clone();
        tampered["convention"] = serde_json::json!("asorey1");
        assert!(matches!(
            BoundaryUnitary::from_json(&tampered),
            Err(Error::InvalidInput(_))
        ));

        let missing = serde_json::json!({ "matrix": [[1.0, 0.0]] });
        assert!(BoundaryUnitary::from_json(&missing).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scalar_cayley_is_minus_tan_half(alpha in -3.1f64..3.1) {
            let u = cdiag(&[Complex64::from_polar(1.0, alpha)]);
            let bu = BoundaryUnitary::from_matrix(u).unwrap();
            let expected = -(alpha / 2.0).tan();
            let got = bu.cayley()[(0, 0)].re;
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }
}
