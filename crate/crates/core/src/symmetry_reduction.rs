//! Symmetry reduction: G-invariance of boundary unitaries and their
//! quadratic forms, admissible rotation-invariant boundary conditions in
//! Fourier modes, per-mode radial spectra of the disk, and the corner
//! singular function.
//!
//! A U(1) action on truncated boundary data acts diagonally on Fourier
//! modes, `V(alpha) = diag(e^{i n alpha})`. A boundary condition is
//! compatible with the symmetry exactly when its unitary commutes with
//! every `V(g)`; admissible unitaries are block diagonal,
//! `u (x) e^{i beta_n}` per mode. The induced quadratic form is invariant
//! iff both its boundary term (the Cayley transform) and its domain
//! constraint (the `W` projector) commute with the action.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::boundary_param::BoundaryUnitary;
use crate::linalg::{self, CMatrix};
use crate::spectral::SpectralResult;
use crate::{Error, Result};

/// Default Fourier truncation: modes `-16 ..= 16`.
pub const DEFAULT_MODE_TRUNCATION: usize = 16;
/// Commutant and invariance tolerance.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Truncated U(1) representation on boundary Fourier modes, optionally
/// tensored with a radial factor of dimension `radial_dim`.
#[derive(Debug, Clone)]
pub struct GroupRep {
    sample_elements: Vec<f64>,
    matrices: Vec<CMatrix>,
    n_max: usize,
    radial_dim: usize,
}

impl GroupRep {
    /// `V(alpha) = diag_n(e^{i n alpha} I_m)` over modes `-n_max ..= n_max`.
    pub fn u1(n_max: usize, radial_dim: usize, sample_elements: Vec<f64>) -> Result<Self> {
        if radial_dim == 0 {
            return Err(Error::InvalidInput(
                "radial dimension must be >= 1".to_string(),
            ));
        }
        if sample_elements.is_empty() {
            return Err(Error::InvalidInput(
                "need at least one group sample".to_string(),
            ));
        }
        if sample_elements.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput(
                "group samples must be finite".to_string(),
            ));
        }
        let matrices = sample_elements
            .iter()
            .map(|&g| Self::u1_matrix(n_max, radial_dim, g))
            .collect();
        Ok(GroupRep {
            sample_elements,
            matrices,
            n_max,
            radial_dim,
        })
    }

    fn u1_matrix(n_max: usize, radial_dim: usize, alpha: f64) -> CMatrix {
        let modes = 2 * n_max + 1;
        let dim = modes * radial_dim;
        let mut v = CMatrix::zeros(dim, dim);
        for mode in 0..modes {
            let n = mode as i64 - n_max as i64;
            let phase = Complex64::from_polar(1.0, n as f64 * alpha);
            for r in 0..radial_dim {
                let idx = mode * radial_dim + r;
                v[(idx, idx)] = phase;
            }
        }
        v
    }

    pub fn dim(&self) -> usize {
        (2 * self.n_max + 1) * self.radial_dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn radial_dim(&self) -> usize {
        self.radial_dim
    }

    pub fn sample_elements(&self) -> &[f64] {
        &self.sample_elements
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// Representation matrix of an arbitrary element.
    pub fn matrix_of(&self, alpha: f64) -> CMatrix {
        Self::u1_matrix(self.n_max, self.radial_dim, alpha)
    }

    /// Largest Frobenius defect of `V(g1) V(g2) = V(g1 + g2)` over the
    /// sampled pairs, and of `V(0) = I`.
    pub fn composition_defect(&self) -> f64 {
        let mut worst = (self.matrix_of(0.0) - CMatrix::identity(self.dim(), self.dim())).norm();
        for (i, &g1) in self.sample_elements.iter().enumerate() {
            for &g2 in &self.sample_elements {
                let product = &self.matrices[i] * self.matrix_of(g2);
                worst = worst.max((product - self.matrix_of(g1 + g2)).norm());
            }
        }
        worst
    }
}

/// A rotation-invariant boundary unitary `U = diag_n(e^{i beta_n} u)`.
#[derive(Debug, Clone)]
pub struct AdmissibleUnitary {
    radial_factor: CMatrix,
    phases: Vec<f64>,
    assembled: BoundaryUnitary,
}

impl AdmissibleUnitary {
    pub fn radial_factor(&self) -> &CMatrix {
        &self.radial_factor
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn assembled(&self) -> &BoundaryUnitary {
        &self.assembled
    }
}

/// Assembles the block-diagonal unitary `u (x) e^{i beta_n}` over modes
/// `-N ..= N` (phases listed in mode order, length `2N + 1`) and computes
/// its spectral data; the gap flag of the result reports whether any
/// block touches -1.
pub fn build_admissible(radial_factor: &CMatrix, phases: &[f64]) -> Result<AdmissibleUnitary> {
    if phases.is_empty() || phases.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(
            "phase list must have odd length 2N + 1".to_string(),
        ));
    }
    if phases.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidInput("phases must be finite".to_string()));
    }
    let m = radial_factor.nrows();
    if m != radial_factor.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: radial_factor.ncols(),
        });
    }
    let dev = linalg::unitary_deviation(radial_factor);
    if !(dev <= 1e-10) {
        return Err(Error::NonUnitary(dev));
    }
    let modes = phases.len();
    let dim = modes * m;
    let mut assembled = CMatrix::zeros(dim, dim);
    for (mode, &beta) in phases.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, beta);
        for a in 0..m {
            for b in 0..m {
                assembled[(mode * m + a, mode * m + b)] = radial_factor[(a, b)] * phase;
            }
        }
    }
    Ok(AdmissibleUnitary {
        radial_factor: radial_factor.clone(),
        phases: phases.to_vec(),
        assembled: BoundaryUnitary::from_matrix(assembled)?,
    })
}

/// The cyclic mode shift `n -> n + 1` (blocks permuted, radial factor
/// untouched): the canonical non-commuting control.
pub fn mode_shift(n_max: usize, radial_dim: usize) -> CMatrix {
    let modes = 2 * n_max + 1;
    let dim = modes * radial_dim;
    let mut s = CMatrix::zeros(dim, dim);
    for mode in 0..modes {
        let target = (mode + 1) % modes;
        for r in 0..radial_dim {
            s[(target * radial_dim + r, mode * radial_dim + r)] = linalg::C_ONE;
        }
    }
    s
}

/// Outcome of a commutant test.
#[derive(Debug, Clone, Copy)]
pub struct CommutantReport {
    pub max_norm: f64,
    pub pass: bool,
}

/// Largest Frobenius norm of `[U, V(g)]` over the sampled elements.
pub fn commutant_check(u_matrix: &CMatrix, rep: &GroupRep) -> Result<CommutantReport> {
    if u_matrix.nrows() != rep.dim() || u_matrix.ncols() != rep.dim() {
        return Err(Error::DimensionMismatch {
            expected: rep.dim(),
            got: u_matrix.nrows(),
        });
    }
    let mut max_norm = 0.0f64;
    for v in rep.matrices() {
        max_norm = max_norm.max((u_matrix * v - v * u_matrix).norm());
    }
    Ok(CommutantReport {
        max_norm,
        pass: max_norm <= INVARIANCE_TOL,
    })
}

/// Largest relative invariance defect of the boundary form of `bu` under
/// the action: checks both the form values `-<phi, A_U psi>` and the
/// domain constraint (the action must map `W_perp` into itself).
pub fn form_invariance_defect<R: Rng>(
    bu: &BoundaryUnitary,
    rep: &GroupRep,
    n_random: usize,
    rng: &mut R,
) -> Result<f64> {
    if bu.dim() != rep.dim() {
        return Err(Error::DimensionMismatch {
            expected: rep.dim(),
            got: bu.dim(),
        });
    }
    let a = bu.cayley();
    let p_w = bu.w_projector();
    let mut worst = 0.0f64;
    for v in rep.matrices() {
        for _ in 0..n_random {
            let phi = linalg::random_cvector(bu.dim(), rng);
            let psi = linalg::random_cvector(bu.dim(), rng);
            let scale = phi.norm() * psi.norm();
            let q = -(phi.adjoint() * a * &psi)[(0, 0)];
            let q_rot = -((v * &phi).adjoint() * a * (v * &psi))[(0, 0)];
            worst = worst.max((q_rot - q).norm() / scale);
            // domain invariance: V(g) must not push domain vectors into W
            let in_domain = &phi - &p_w * &phi;
            let leak = (&p_w * (v * &in_domain)).norm() / phi.norm();
            worst = worst.max(leak);
        }
    }
    Ok(worst)
}

/// Report of [`invariance_of_form_check`].
#[derive(Debug, Clone, Copy)]
pub struct InvarianceReport {
    pub max_relative_defect: f64,
    pub pass: bool,
    /// Violation magnitude of the built-in non-commuting control
    /// (cyclic mode shift) on the same battery.
    pub negative_control: f64,
}

/// Verifies that the quadratic form induced by an admissible unitary is
/// invariant under the sampled action, and reports the violation of the
/// mode-shift control alongside.
pub fn invariance_of_form_check<R: Rng>(
    admissible: &AdmissibleUnitary,
    rep: &GroupRep,
    n_random: usize,
    rng: &mut R,
) -> Result<InvarianceReport> {
    let defect = form_invariance_defect(admissible.assembled(), rep, n_random, rng)?;
    let shift = mode_shift(rep.n_max(), rep.radial_dim());
    let control_bu = BoundaryUnitary::from_matrix(shift)?;
    let negative_control = form_invariance_defect(&control_bu, rep, n_random, rng)?;
    Ok(InvarianceReport {
        max_relative_defect: defect,
        pass: defect <= INVARIANCE_TOL,
        negative_control,
    })
}

// ---------------------------------------------------------------------------
// disk modes
// ---------------------------------------------------------------------------

/// Edge condition of the radial disk problem at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiskEdge {
    Dirichlet,
    /// Boundary term `-c |f(1)|^2` in the radial form.
    Robin {
        coupling: f64,
    },
}

/// Eigenvalues of the `m`-th angular sector of the disk Laplacian:
/// weighted P1 elements for the radial form
/// `Q_m(f) = int_0^1 (|f'|^2 + m^2 |f|^2 / r^2) r dr - c |f(1)|^2`,
/// with the essential condition `f(0) = 0` for `m != 0` (natural at the
/// origin for `m = 0`).
pub fn disk_mode_spectrum(
    m: i32,
    edge: DiskEdge,
    n_elements: usize,
    n_eigs: usize,
) -> Result<SpectralResult> {
    if m.unsigned_abs() as usize > DEFAULT_MODE_TRUNCATION {
        return Err(Error::InvalidInput(format!(
            "mode |m| must stay within the truncation {DEFAULT_MODE_TRUNCATION}"
        )));
    }
    if n_elements < 8 {
        return Err(Error::InvalidInput("need at least 8 elements".to_string()));
    }
    if let DiskEdge::Robin { coupling } = edge {
        if !coupling.is_finite() {
            return Err(Error::InvalidInput(
                "robin coupling must be finite".to_string(),
            ));
        }
    }
    let n = n_elements;
    let h = 1.0 / n as f64;
    let nodes = n + 1;
    let mut stiff = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
    let mut mass = nalgebra::DMatrix::<f64>::zeros(nodes, nodes);
    let msq = (m as f64) * (m as f64);
    for e in 0..n {
        let a = e as f64 * h;
        let b = a + h;
        // exact weighted integrals of the two hats on [a, b]
        let k = (b * b - a * a) / (2.0 * h * h);
        stiff[(e, e)] += k;
        stiff[(e + 1, e + 1)] += k;
        stiff[(e, e + 1)] -= k;
        stiff[(e + 1, e)] -= k;
        let m_aa = a * h / 3.0 + h * h / 12.0;
        let m_bb = a * h / 3.0 + h * h / 4.0;
        let m_ab = a * h / 6.0 + h * h / 12.0;
        mass[(e, e)] += m_aa;
        mass[(e + 1, e + 1)] += m_bb;
        mass[(e, e + 1)] += m_ab;
        mass[(e + 1, e)] += m_ab;
        if m != 0 {
            // 1/r-weighted integrals; the first element only needs the
            // (b, b) entry because node 0 is constrained out
            if a == 0.0 {
                stiff[(e + 1, e + 1)] += msq * 0.5;
            } else {
                let log = (b / a).ln();
                let j_aa = (b * b * log - 2.0 * b * h + (b * b - a * a) / 2.0) / (h * h);
                let j_bb = ((b * b - a * a) / 2.0 - 2.0 * a * h + a * a * log) / (h * h);
                let j_ab = (-(b * b - a * a) / 2.0 + (a + b) * h - a * b * log) / (h * h);
                stiff[(e, e)] += msq * j_aa;
                stiff[(e + 1, e + 1)] += msq * j_bb;
                stiff[(e, e + 1)] += msq * j_ab;
                stiff[(e + 1, e)] += msq * j_ab;
            }
        }
    }
    if let DiskEdge::Robin { coupling } = edge {
        stiff[(n, n)] -= coupling;
    }

    let lo = if m != 0 { 1 } else { 0 };
    let hi = match edge {
        DiskEdge::Dirichlet => nodes - 1,
        DiskEdge::Robin { .. } => nodes,
    };
    if hi <= lo {
        return Err(Error::InvalidInput(
            "no free degrees of freedom".to_string(),
        ));
    }
    let free = hi - lo;
    if n_eigs == 0 || n_eigs > free {
        return Err(Error::InvalidInput(format!("n_eigs must be in 1..={free}")));
    }
    let a_c = stiff.view((lo, lo), (free, free)).clone_owned();
    let b_c = mass.view((lo, lo), (free, free)).clone_owned();
    let (values, vectors) = linalg::generalized_symmetric_eigen(&a_c, &b_c)?;

    let mut eigenvalues = Vec::with_capacity(n_eigs);
    let mut residuals = Vec::with_capacity(n_eigs);
    let mut eigenvectors = CMatrix::zeros(nodes, n_eigs);
    for k in 0..n_eigs {
        let e = values[k];
        let v = vectors.column(k).clone_owned();
        let defect = (&a_c * &v - (&b_c * &v) * e).norm();
        let scale = (&b_c * &v).norm();
        let residual = if scale > 0.0 { defect / scale } else { defect };
        eigenvalues.push(e);
        residuals.push(residual);
        for i in 0..free {
            eigenvectors[(lo + i, k)] = Complex64::new(v[i], 0.0);
        }
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals,
        mesh_n: n_elements,
    })
}

// ---------------------------------------------------------------------------
// corner singular function
// ---------------------------------------------------------------------------

/// Square-integrability class of the second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum H2Class {
    Finite { value: f64 },
    Divergent { rate: f64 },
}

/// Report of [`corner_singularity`].
#[derive(Debug, Clone)]
pub struct CornerReport {
    /// Exponent `pi / Theta` of the harmonic singular function.
    pub exponent: f64,
    /// Largest relative pointwise Laplacian residual on the sample grid
    /// (analytically zero; scaled by the `r^{a-2}` envelope of the
    /// individual terms).
    pub harmonic_residual: f64,
    /// Largest Dirichlet trace magnitude along the two straight edges.
    pub edge_trace_max: f64,
    /// `(epsilon, integral)` samples of the H2 seminorm over
    /// `epsilon < r < 1`.
    pub h2_integrals: Vec<(f64, f64)>,
    pub h2_class: H2Class,
}

/// The harmonic singular function `Phi = r^{pi/Theta} sin(pi theta/Theta)`
/// on the sector of opening `Theta`: verifies harmonicity pointwise,
/// reports the Dirichlet traces on the edges, and classifies the H2
/// seminorm by the log-log slope of truncated integrals at
/// `epsilon, epsilon/10, epsilon/100`.
pub fn corner_singularity(theta_opening: f64, epsilon: f64, n_quad: usize) -> Result<CornerReport> {
    if !(theta_opening > 0.0 && theta_opening < 2.0 * PI) {
        return Err(Error::InvalidInput(
            "opening angle must lie in (0, 2 pi)".to_string(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(Error::InvalidInput(
            "epsilon must lie in (0, 0.1)".to_string(),
        ));
    }
    if n_quad < 1000 {
        return Err(Error::InvalidInput(
            "need at least 1000 quadrature points".to_string(),
        ));
    }
    let a = PI / theta_opening;

    // pointwise Laplacian residual, relative to the envelope of its terms
    let n_r = 256usize;
    let n_t = 33usize;
    let mut harmonic_residual = 0.0f64;
    let mut edge_trace_max = 0.0f64;
    let envelope = (a * (a - 1.0)).abs() + a + a * a;
    for i in 0..n_r {
        let log_r = epsilon.ln() * (1.0 - i as f64 / (n_r - 1) as f64);
        let r = log_r.exp();
        let radial = r.powf(a - 2.0);
        for j in 0..n_t {
            let theta = theta_opening * j as f64 / (n_t - 1) as f64;
            let s = (a * theta).sin();
            let t1 = a * (a - 1.0) * radial * s;
            let t2 = a * radial * s;
            let t3 = a * a * radial * s;
            let residual = (t1 + t2 - t3).abs() / (envelope * radial);
            harmonic_residual = harmonic_residual.max(residual);
        }
        let value = r.powf(a);
        edge_trace_max = edge_trace_max.max(value * (a * 0.0f64).sin().abs());
        edge_trace_max = edge_trace_max.max(value * (a * theta_opening).sin().abs());
    }

    // H2 seminorm: |D^2 Phi|^2 = 2 a^2 (a-1)^2 r^{2a-4}, theta-independent
    let coefficient = 2.0 * a * a * (a - 1.0) * (a - 1.0) * theta_opening;
    let truncated_integral = |eps: f64| -> f64 {
        // integral of r^{2a-3} over (eps, 1) by trapezoid in u = ln r
        let power = 2.0 * a - 2.0;
        let du = -eps.ln() / (n_quad - 1) as f64;
        let mut acc = 0.0;
        for k in 0..n_quad {
            let u = eps.ln() + du * k as f64;
            let g = (power * u).exp();
            let w = if k == 0 || k == n_quad - 1 { 0.5 } else { 1.0 };
            acc += w * g * du;
        }
        coefficient * acc
    };
    let eps_list = [epsilon, epsilon / 10.0, epsilon / 100.0];
    let h2_integrals: Vec<(f64, f64)> = eps_list
        .iter()
        .map(|&e| (e, truncated_integral(e)))
        .collect();

    let h2_class = if (a - 1.0).abs() < 1e-12 {
        // the coefficient vanishes: the function is linear
        H2Class::Finite { value: 0.0 }
    } else {
        // least-squares slope of ln I against ln eps
        let xs: Vec<f64> = h2_integrals.iter().map(|(e, _)| e.ln()).collect();
        let ys: Vec<f64> = h2_integrals.iter().map(|(_, v)| v.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let slope = num / den;
        if slope.abs() < 0.05 {
            H2Class::Finite {
                value: h2_integrals.last().unwrap().1,
            }
        } else {
            H2Class::Divergent { rate: -slope }
        }
    };

    Ok(CornerReport {
        exponent: a,
        harmonic_residual,
        edge_trace_max,
        h2_integrals,
        h2_class,
    })
}
