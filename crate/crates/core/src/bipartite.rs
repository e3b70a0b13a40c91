//! The half-line x C^2 bipartite system: bound states selected by the
//! boundary condition, the compatibility curve
//! `sigma = tan^2(alpha_1/2) - tan^2(alpha_2/2)`, adiabatic families of
//! boundary conditions, and the separability criterion for the dynamics
//! generated by a boundary unitary.
//!
//! The bulk Hamiltonian is written in its eigenbasis, `H_B =
//! diag(lambda_1, lambda_2)` with `lambda_1 >= lambda_2`; spin components
//! of all states refer to that basis.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::boundary_param::BoundaryUnitary;
use crate::linalg::{self, CMatrix, CVector};
use crate::quadform1d;
use crate::{Error, Result};

/// Entanglement entropy below this value counts as separable
/// (discretization noise floor measured on the identity dynamics).
pub const SEPARABLE_TOL: f64 = 1e-8;
/// Width of the existence boundary `tan^2(alpha_1/2) = sigma` treated as
/// the non-normalizable marker along adiabatic paths.
pub const EXIST_TOL: f64 = 1e-12;
/// Number of time samples taken by the separability protocol.
pub const TIME_SAMPLES: usize = 20;

/// Half-line Laplacian coupled to a two-level bulk system.
#[derive(Debug, Clone)]
pub struct BipartiteSystem {
    lambda1: f64,
    lambda2: f64,
    boundary: Option<BoundaryUnitary>,
}

impl BipartiteSystem {
    /// `lambda1 >= lambda2`; the degenerate case is allowed and produces
    /// product bound states only.
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::InvalidInput(
                "bulk eigenvalues must be finite".to_string(),
            ));
        }
        if lambda1 < lambda2 {
            return Err(Error::InvalidInput(
                "bulk eigenvalues must satisfy lambda1 >= lambda2".to_string(),
            ));
        }
        Ok(BipartiteSystem {
            lambda1,
            lambda2,
            boundary: None,
        })
    }

    pub fn with_boundary(mut self, boundary: BoundaryUnitary) -> Result<Self> {
        if boundary.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: boundary.dim(),
            });
        }
        self.boundary = Some(boundary);
        Ok(self)
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn sigma(&self) -> f64 {
        self.lambda1 - self.lambda2
    }

    pub fn boundary(&self) -> Option<&BoundaryUnitary> {
        self.boundary.as_ref()
    }
}

/// A bound state `C_1 e^{-kappa_1 x} (x) rho_1 + C_2 e^{-kappa_2 x} (x) rho_2`
/// of the bipartite system, with its Schmidt data.
#[derive(Debug, Clone)]
pub struct BipartiteBoundState {
    pub energy: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Squared Schmidt coefficients, descending, summing to one.
    pub schmidt: [f64; 2],
    /// Entanglement entropy in nats.
    pub entropy: f64,
}

impl BipartiteBoundState {
    /// The diagonal boundary unitary (asorey convention) whose condition
    /// each spatial component satisfies: `phidot_a = kappa_a phi_a` means
    /// angles `-2 atan(kappa_a)`.
    pub fn verifying_unitary(&self) -> Result<BoundaryUnitary> {
        let u = linalg::cdiag(&[
            Complex64::from_polar(1.0, -2.0 * self.kappa1.atan()),
            Complex64::from_polar(1.0, -2.0 * self.kappa2.atan()),
        ]);
        BoundaryUnitary::from_matrix(u)
    }
}

fn entropy_nats(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for &w in weights {
        let p = (w / total).clamp(0.0, 1.0);
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    s.max(0.0)
}

fn is_alpha_singular(alpha: f64) -> bool {
    let m = (alpha / PI).round();
    (m as i64).rem_euclid(2) == 1 && (alpha - m * PI).abs() <= 1e-12
}

/// Squared Schmidt coefficients and entropy of
/// `sum_a c_a e^{-kappa_a x} (x) rho_a` from the closed-form Gram matrix
/// `<e^{-kappa_a .}, e^{-kappa_b .}> = 1/(kappa_a + kappa_b)`.
pub fn schmidt_from_gram(kappa: [f64; 2], amplitudes: [Complex64; 2]) -> ([f64; 2], f64) {
    let g = |a: usize, b: usize| 1.0 / (kappa[a] + kappa[b]);
    let d0 = amplitudes[0].norm_sqr() * g(0, 0);
    let d1 = amplitudes[1].norm_sqr() * g(1, 1);
    let off = amplitudes[0] * amplitudes[1].conj() * g(0, 1);
    let trace = d0 + d1;
    let det = d0 * d1 - off.norm_sqr();
    let disc = (trace * trace / 4.0 - det).max(0.0).sqrt();
    let hi = (trace / 2.0 + disc).max(0.0);
    let lo = (trace / 2.0 - disc).max(0.0);
    let s = [hi / trace, lo / trace];
    let entropy = entropy_nats(&[hi, lo]);
    (s, entropy)
}

/// The unique bound state selected by the boundary angle `alpha_1`:
/// `E = lambda_1 - tan^2(alpha_1/2)`, decay rates
/// `kappa_a = sqrt(lambda_a - E)`, and `alpha_2` on the principal branch
/// of the compatibility condition. Amplitudes are fixed symmetric,
/// `C_1 = C_2`, before normalization.
pub fn bound_state(sys: &BipartiteSystem, alpha1: f64) -> Result<BipartiteBoundState> {
    bound_state_with_amplitudes(sys, alpha1, [linalg::C_ONE, linalg::C_ONE])
}

/// Same as [`bound_state`] with explicit (unnormalized) amplitudes.
pub fn bound_state_with_amplitudes(
    sys: &BipartiteSystem,
    alpha1: f64,
    amplitudes: [Complex64; 2],
) -> Result<BipartiteBoundState> {
    if !alpha1.is_finite() {
        return Err(Error::InvalidInput("alpha1 must be finite".to_string()));
    }
    if is_alpha_singular(alpha1) {
        return Err(Error::AlphaSingular);
    }
    let t = (alpha1 / 2.0).tan();
    let tan_sq = t * t;
    let sigma = sys.sigma();
    if !(tan_sq > sigma) {
        return Err(Error::NoBoundState { tan_sq, sigma });
    }
    let energy = sys.lambda1 - tan_sq;
    let kappa1 = t.abs();
    let kappa2 = (tan_sq - sigma).sqrt();
    let alpha2 = 2.0 * kappa2.atan();
    let (schmidt, entropy) = schmidt_from_gram([kappa1, kappa2], amplitudes);
    Ok(BipartiteBoundState {
        energy,
        alpha1,
        alpha2,
        kappa1,
        kappa2,
        schmidt,
        entropy,
    })
}

/// Reason a compatibility-curve sample was omitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SkipReason {
    /// `tan^2(alpha_1/2) < sigma`: no partner angle exists.
    Inadmissible { tan_sq: f64 },
}

/// The admissible part of the curve `sigma = tan^2(a1/2) - tan^2(a2/2)`.
#[derive(Debug, Clone)]
pub struct CompatibilityCurve {
    /// `(alpha_1, alpha_2)` with `alpha_2` on the principal branch `[0, pi)`.
    pub points: Vec<(f64, f64)>,
    pub skipped: Vec<(f64, SkipReason)>,
}

/// Solves the compatibility condition for each sample of `alpha_1`;
/// inadmissible samples are recorded rather than dropped silently.
pub fn compatibility_curve(sigma: f64, alpha1_samples: &[f64]) -> Result<CompatibilityCurve> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(
            "sigma must be finite and nonnegative".to_string(),
        ));
    }
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &a1 in alpha1_samples {
        if !a1.is_finite() {
            return Err(Error::InvalidInput(
                "alpha1 samples must be finite".to_string(),
            ));
        }
        let t = (a1 / 2.0).tan();
        let tan_sq = t * t;
        if tan_sq >= sigma {
            let a2 = 2.0 * (tan_sq - sigma).sqrt().atan();
            points.push((a1, a2));
        } else {
            skipped.push((a1, SkipReason::Inadmissible { tan_sq }));
        }
    }
    Ok(CompatibilityCurve { points, skipped })
}

/// Status of one sample along an adiabatic path.
#[derive(Debug, Clone)]
pub enum AdiabaticPoint {
    Bound(BipartiteBoundState),
    /// `tan(s') = 0`: the second component stops being square integrable.
    NonNormalizable,
    NoBoundState,
    /// `s` sits on a pole of `tan`.
    Singular,
}

#[derive(Debug, Clone)]
pub struct AdiabaticSample {
    pub s: f64,
    /// The partner parameter `s'` where defined.
    pub s_prime: Option<f64>,
    pub point: AdiabaticPoint,
}

impl AdiabaticSample {
    pub fn flag(&self) -> &'static str {
        match self.point {
            AdiabaticPoint::Bound(_) => "ok",
            AdiabaticPoint::NonNormalizable => "non-normalizable",
            AdiabaticPoint::NoBoundState => "no-bound-state",
            AdiabaticPoint::Singular => "singular",
        }
    }
}

/// Instantaneous bound states along the family
/// `U(s) = diag(e^{2is}, e^{2is'})` with `s'` fixed by the compatibility
/// condition. Samples where the state ceases to exist are marked, not
/// dropped.
pub fn adiabatic_path(sys: &BipartiteSystem, s_samples: &[f64]) -> Result<Vec<AdiabaticSample>> {
    let sigma = sys.sigma();
    let mut out = Vec::with_capacity(s_samples.len());
    for &s in s_samples {
        if !s.is_finite() {
            return Err(Error::InvalidInput(
                "path samples must be finite".to_string(),
            ));
        }
        let alpha1 = 2.0 * s;
        if is_alpha_singular(alpha1) {
            out.push(AdiabaticSample {
                s,
                s_prime: None,
                point: AdiabaticPoint::Singular,
            });
            continue;
        }
        let t = s.tan();
        let excess = t * t - sigma;
        let sample = if excess > EXIST_TOL {
            let state = bound_state(sys, alpha1)?;
            AdiabaticSample {
                s,
                s_prime: Some(state.alpha2 / 2.0),
                point: AdiabaticPoint::Bound(state),
            }
        } else if excess.abs() <= EXIST_TOL {
            AdiabaticSample {
                s,
                s_prime: Some(0.0),
                point: AdiabaticPoint::NonNormalizable,
            }
        } else {
            AdiabaticSample {
                s,
                s_prime: None,
                point: AdiabaticPoint::NoBoundState,
            }
        };
        out.push(sample);
    }
    Ok(out)
}

/// Truncated half-line `[0, radius]` with an auxiliary Dirichlet
/// condition at the far end.
#[derive(Debug, Clone, Copy)]
pub struct HalfLineMesh {
    pub radius: f64,
    pub n_elements: usize,
}

impl HalfLineMesh {
    pub fn new(radius: f64, n_elements: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(
                "mesh radius must be positive".to_string(),
            ));
        }
        if n_elements < 8 {
            return Err(Error::InvalidInput(
                "mesh needs at least 8 elements".to_string(),
            ));
        }
        Ok(HalfLineMesh { radius, n_elements })
    }

    /// Radius `12 / kappa_min`, beyond which states decaying at rate
    /// `kappa_min` carry less than 1e-6 truncated mass.
    pub fn for_decay_rate(kappa_min: f64, n_elements: usize) -> Result<Self> {
        if !(kappa_min > 0.0) {
            return Err(Error::InvalidInput(
                "decay rate must be positive".to_string(),
            ));
        }
        Self::new(12.0 / kappa_min, n_elements)
    }
}

/// Outcome of the separability protocol.
#[derive(Debug, Clone)]
pub struct SeparabilityReport {
    pub separable: bool,
    pub max_entropy: f64,
    /// `(time, entanglement entropy)` samples.
    pub samples: Vec<(f64, f64)>,
}

/// Evolves a product initial state under `e^{-itH_U}` (exact matrix
/// exponential through the discrete eigenbasis) and tracks the
/// entanglement entropy at [`TIME_SAMPLES`] uniform times in
/// `[0, evolve_time]`.
///
/// The boundary unitary acts on the spin trace at `x = 0` in the bulk
/// eigenbasis. The initial state is the lowest Dirichlet-at-R profile
/// times the balanced spin vector `(1, 1)/sqrt(2)`: a bulk eigenvector
/// would evolve inside a single spin component and stay product under
/// every component-diagonal condition, so the balanced vector is the one
/// that makes the protocol discriminating.
pub fn separability_test(
    sys: &BipartiteSystem,
    boundary: &BoundaryUnitary,
    evolve_time: f64,
    mesh: &HalfLineMesh,
) -> Result<SeparabilityReport> {
    if boundary.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: boundary.dim(),
        });
    }
    if !boundary.has_gap() {
        return Err(Error::NoGap(boundary.gap_delta()));
    }
    if !(evolve_time > 0.0) || !evolve_time.is_finite() {
        return Err(Error::InvalidInput(
            "evolve_time must be positive".to_string(),
        ));
    }
    let n_nodes = mesh.n_elements + 1;
    let (stiffness, mass) = quadform1d::p1_matrices(mesh.radius, mesh.n_elements);

    // spin-space system, DOF = 2 * node + spin component
    let dim = 2 * n_nodes;
    let lambda = [sys.lambda1, sys.lambda2];
    let mut a = CMatrix::zeros(dim, dim);
    let mut b = CMatrix::zeros(dim, dim);
    for i in 0..n_nodes {
        for j in 0..n_nodes {
            let k = stiffness[(i, j)];
            let m = mass[(i, j)];
            if k == 0.0 && m == 0.0 {
                continue;
            }
            for (s, &l) in lambda.iter().enumerate() {
                a[(2 * i + s, 2 * j + s)] = Complex64::new(k + m * l, 0.0);
                b[(2 * i + s, 2 * j + s)] = Complex64::new(m, 0.0);
            }
        }
    }
    let cayley = boundary.cayley();
    for s in 0..2 {
        for t in 0..2 {
            a[(s, t)] -= cayley[(s, t)];
        }
    }

    // constrained basis: W-free spin directions at node 0, all interior
    // nodes, Dirichlet at the last node
    let free = boundary.w_perp_basis().len() + 2 * (n_nodes - 2);
    let mut z = CMatrix::zeros(dim, free);
    let mut col = 0;
    for v in boundary.w_perp_basis() {
        let mut e = CVector::zeros(dim);
        e[0] = v[0];
        e[1] = v[1];
        z.set_column(col, &e);
        col += 1;
    }
    for i in 1..n_nodes - 1 {
        for s in 0..2 {
            let mut e = CVector::zeros(dim);
            e[2 * i + s] = linalg::C_ONE;
            z.set_column(col, &e);
            col += 1;
        }
    }

    let a_c = {
        let m = z.adjoint() * &a * &z;
        (&m + m.adjoint()).scale(0.5)
    };
    let b_c = {
        let m = z.adjoint() * &b * &z;
        (&m + m.adjoint()).scale(0.5)
    };
    let eig = linalg::generalized_hermitian_eigen(&a_c, &b_c)?;

    // ground profile of the scalar Dirichlet-at-R problem
    let scalar_dim = n_nodes - 1;
    let k_s = stiffness
        .view((0, 0), (scalar_dim, scalar_dim))
        .clone_owned();
    let m_s = mass.view((0, 0), (scalar_dim, scalar_dim)).clone_owned();
    let (_, scalar_vecs) = linalg::generalized_symmetric_eigen(&k_s, &m_s)?;
    let mut profile = scalar_vecs.column(0).clone_owned();
    if profile[0] < 0.0 {
        profile.neg_mut();
    }

    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi0 = CVector::zeros(dim);
    for i in 0..scalar_dim {
        for s in 0..2 {
            psi0[2 * i + s] = Complex64::new(profile[i] * half, 0.0);
        }
    }
    let mut p = z.adjoint() * &psi0;
    let norm = (p.adjoint() * &b_c * &p)[(0, 0)].re.sqrt();
    if norm < 1e-12 {
        return Err(Error::SolverFailure(
            "initial state lies in the constrained-out subspace".to_string(),
        ));
    }
    p /= Complex64::new(norm, 0.0);
    let coeffs = eig.eigenvectors.adjoint() * &b_c * &p;

    let mass_c = linalg::complexify(&mass);
    let mut samples = Vec::with_capacity(TIME_SAMPLES);
    let mut max_entropy = 0.0f64;
    for j in 0..TIME_SAMPLES {
        let t = evolve_time * j as f64 / (TIME_SAMPLES as f64 - 1.0);
        let mut evolved = CVector::zeros(free);
        for (k, c) in coeffs.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
            evolved += eig.eigenvectors.column(k) * (*c * phase);
        }
        let full = &z * evolved;
        // spin reduced density in the mass metric
        let x0 = CVector::from_fn(n_nodes, |i, _| full[2 * i]);
        let x1 = CVector::from_fn(n_nodes, |i, _| full[2 * i + 1]);
        let cols = [&x0, &x1];
        let mut rho = CMatrix::zeros(2, 2);
        for s in 0..2 {
            for u in 0..2 {
                rho[(s, u)] = (cols[s].adjoint() * &mass_c * cols[u])[(0, 0)];
            }
        }
        let (vals, _) = linalg::hermitian_eigen(&rho);
        let weights: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let entropy = entropy_nats(&weights);
        max_entropy = max_entropy.max(entropy);
        samples.push((t, entropy));
    }

    Ok(SeparabilityReport {
        separable: max_entropy <= SEPARABLE_TOL,
        max_entropy,
        samples,
    })
}
