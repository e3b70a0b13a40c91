//! Independent oracles shared by the integration suites: elementary
//! scalar root finders, Bessel zeros from the power series, a
//! transcendental secular function for Robin problems, and a dense
//! Galerkin diagonalization oracle for the interval Dirac operator.
//! Everything here is deliberately written against closed-form
//! definitions, not the library's own solution paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Bisection roots of a scalar function over `[lo, hi]` found by sign
/// scanning at the given resolution.
pub fn scan_bisect(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cells: usize, tol: f64) -> Vec<f64> {
    let step = (hi - lo) / cells as f64;
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for k in 1..=cells {
        let x = lo + step * k as f64;
        let fx = f(x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev * fx < 0.0 {
            let (mut a, mut b, mut fa) = (x_prev, x, f_prev);
            for _ in 0..200 {
                if (b - a).abs() <= tol {
                    break;
                }
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

// ---------------------------------------------------------------------------
// Bessel functions from the power series
// ---------------------------------------------------------------------------

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0f64, |acc, k| acc * k as f64)
}

/// `J_m(x)` by the alternating power series; accurate for `x <= 16`,
/// which covers the first few zeros of the low modes.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(m as i32) / factorial(m);
    let mut sum = term;
    for k in 1..80 {
        term *= -(half * half) / (k as f64 * (k as f64 + m as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// `I_m(x)` by the power series (no sign alternation).
pub fn bessel_i(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(m as i32) / factorial(m);
    let mut sum = term;
    for k in 1..80 {
        term *= (half * half) / (k as f64 * (k as f64 + m as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// The `k`-th positive zero of `J_m` (1-indexed), by scanning the series.
pub fn bessel_zero(m: u32, k: usize) -> f64 {
    let f = |x: f64| bessel_j(m, x);
    let roots = scan_bisect(&f, 0.05, 16.0, 4000, 1e-12);
    assert!(
        roots.len() >= k,
        "only {} zeros of J_{m} found below 16",
        roots.len()
    );
    roots[k - 1]
}

// ---------------------------------------------------------------------------
// Robin-Dirichlet transcendental oracle
// ---------------------------------------------------------------------------

/// `sin(sqrt(E) L)/sqrt(E)` continued analytically through `E = 0`.
pub fn s_fn(e: f64, l: f64) -> f64 {
    if e > 1e-10 {
        let k = e.sqrt();
        (k * l).sin() / k
    } else if e < -1e-10 {
        let k = (-e).sqrt();
        (k * l).sinh() / k
    } else {
        // series around zero: L + E L^3/6 + ...
        l * (1.0 + e * l * l / 6.0)
    }
}

/// `cos(sqrt(E) L)` continued analytically through `E = 0`.
pub fn c_fn(e: f64, l: f64) -> f64 {
    if e > 1e-10 {
        (e.sqrt() * l).cos()
    } else if e < -1e-10 {
        ((-e).sqrt() * l).cosh()
    } else {
        1.0 + e * l * l / 2.0
    }
}

/// Secular function of the problem `-u'' = E u` on `[0, L]` with
/// `u(L) = 0` and the Robin condition `phidot(0) = c phi(0)` (outward
/// normal at 0): the solution is `u = sin(sqrt(E)(L - x))/sqrt(E)`, so
/// `phi(0) = S(E)`, `phidot(0) = C(E)` and the eigenvalues solve
/// `C(E) - c S(E) = 0`.
pub fn robin_dirichlet_secular(e: f64, c: f64, l: f64) -> f64 {
    c_fn(e, l) - c * s_fn(e, l)
}

/// Lowest eigenvalues of the Robin(0)-Dirichlet(L) problem from the
/// transcendental secular equation.
pub fn robin_dirichlet_eigenvalues(c: f64, l: f64, count: usize) -> Vec<f64> {
    let f = move |e: f64| robin_dirichlet_secular(e, c, l);
    let lo = -2.0 * (1.0 + c * c);
    let hi = ((count as f64 + 2.0) * std::f64::consts::PI / l).powi(2);
    let roots = scan_bisect(&f, lo, hi, 200_000, 1e-12);
    assert!(
        roots.len() >= count,
        "oracle found only {} roots",
        roots.len()
    );
    roots[..count].to_vec()
}

// ---------------------------------------------------------------------------
// dense Galerkin oracle for the interval Dirac operator
// ---------------------------------------------------------------------------

/// Eigenvalues of `D = i sigma_1 d/dx` on `[0, L]` with the boundary
/// condition `phi_- = U phi_+`, by a dense P1 Galerkin diagonalization
/// with the boundary pair constrained to the graph of `U`, doubler
/// (grid-oscillation) modes filtered by their smoothness indicator.
/// Returns the kept eigenvalues sorted ascending.
pub fn dirac_interval_galerkin_oracle(length: f64, u_map: &CMatrix, n_elements: usize) -> Vec<f64> {
    let n_nodes = n_elements + 1;
    let h = length / n_elements as f64;
    let dim = 2 * n_nodes;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;

    // first-derivative and mass P1 matrices
    let mut c = DMatrix::<f64>::zeros(n_nodes, n_nodes);
    let mut mass = DMatrix::<f64>::zeros(n_nodes, n_nodes);
    for e in 0..n_elements {
        // per element: int L R' = 1/2, int R L' = -1/2, int L L' = -1/2,
        // int R R' = 1/2; interior diagonals cancel across elements
        c[(e, e + 1)] += 0.5;
        c[(e + 1, e)] -= 0.5;
        c[(e, e)] -= 0.5;
        c[(e + 1, e + 1)] += 0.5;
        mass[(e, e)] += h / 3.0;
        mass[(e + 1, e + 1)] += h / 3.0;
        mass[(e, e + 1)] += h / 6.0;
        mass[(e + 1, e)] += h / 6.0;
    }

    // A[2i+a, 2j+b] = i sigma1[a][b] C[i][j]
    let s1 = [[0.0, 1.0], [1.0, 0.0]];
    let mut a = CMatrix::zeros(dim, dim);
    let mut b = CMatrix::zeros(dim, dim);
    for i in 0..n_nodes {
        for j in 0..n_nodes {
            if c[(i, j)] != 0.0 {
                for p in 0..2 {
                    for q in 0..2 {
                        if s1[p][q] != 0.0 {
                            a[(2 * i + p, 2 * j + q)] += Complex64::new(0.0, s1[p][q] * c[(i, j)]);
                        }
                    }
                }
            }
            if mass[(i, j)] != 0.0 {
                for p in 0..2 {
                    b[(2 * i + p, 2 * j + p)] = Complex64::new(mass[(i, j)], 0.0);
                }
            }
        }
    }

    // boundary pair constrained to graph(U): columns supported on the
    // endpoint spinors; interior nodes free
    let e_plus = [
        Complex64::new(sqrt_half, 0.0),
        Complex64::new(sqrt_half, 0.0),
    ];
    let e_minus = [
        Complex64::new(sqrt_half, 0.0),
        Complex64::new(-sqrt_half, 0.0),
    ];
    let free = 2 + 2 * (n_nodes - 2);
    let mut z = CMatrix::zeros(dim, free);
    for k in 0..2 {
        // phi_+ = e_k: endpoint-0 spinor h0_plus = e_minus slot, endpoint-L
        // slot h_l_plus = e_plus; phi_- = U e_k distributes over h0_minus =
        // e_plus and h_l_minus = e_minus
        let mut col = CVector::zeros(dim);
        let u0 = u_map[(0, k)];
        let u1 = u_map[(1, k)];
        let plus_component: [Complex64; 2] = if k == 0 {
            e_minus
        } else {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        };
        let plus_component_l: [Complex64; 2] = if k == 1 {
            e_plus
        } else {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        };
        for p in 0..2 {
            col[p] = plus_component[p] + e_plus[p] * u0;
            col[2 * (n_nodes - 1) + p] = plus_component_l[p] + e_minus[p] * u1;
        }
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
        z.set_column(k, &col);
    }
    for i in 1..n_nodes - 1 {
        for p in 0..2 {
            let mut col = CVector::zeros(dim);
            col[2 * i + p] = Complex64::new(1.0, 0.0);
            z.set_column(2 + 2 * (i - 1) + p, &col);
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

    let chol = nalgebra::Cholesky::new(b_c.clone()).expect("mass must be positive definite");
    let l = chol.l();
    let y = l.solve_lower_triangular(&a_c).unwrap();
    let reduced = l.solve_lower_triangular(&y.adjoint()).unwrap().adjoint();
    let sym = (&reduced + reduced.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    // back-transform eigenvectors for the smoothness filter
    let vectors = l
        .adjoint()
        .solve_upper_triangular(&eig.eigenvectors)
        .unwrap();

    let mut kept = Vec::new();
    for k in 0..eig.eigenvalues.len() {
        let full = &z * vectors.column(k).clone_owned();
        // smoothness: |v_{j+1} + v_j|^2 / (4 |v|^2) per spin component,
        // ~1 for resolved modes, ~0 for grid-oscillating doublers
        let mut num = 0.0;
        let mut den = 0.0;
        for p in 0..2 {
            for j in 0..n_nodes - 1 {
                let v0 = full[2 * j + p];
                let v1 = full[2 * (j + 1) + p];
                num += (v0 + v1).norm_sqr();
                den += 4.0 * v0.norm_sqr();
            }
        }
        if den > 0.0 && num / den > 0.5 {
            kept.push(eig.eigenvalues[k]);
        }
    }
    kept.sort_by(|x, y| x.partial_cmp(y).unwrap());
    kept
}

/// Fourth-order finite-difference residual of
/// `(-d^2/dx^2 + shift - sign*i) f = 0` over the interior of a uniform
/// grid, relative to the interior norm.
pub fn ode_residual_fd(f: &[Complex64], h: f64, shift: f64, sign: f64) -> f64 {
    let n = f.len();
    let scale = 1.0 / (12.0 * h * h);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 2..n - 2 {
        let d2 = (-f[i - 2] + f[i - 1] * 16.0 - f[i] * 30.0 + f[i + 1] * 16.0 - f[i + 2]) * scale;
        let r = -d2 + f[i] * Complex64::new(shift, -sign);
        num += r.norm_sqr();
        den += f[i].norm_sqr();
    }
    (num / den).sqrt()
}
