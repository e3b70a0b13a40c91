//! Dispatch of parsed configs to the library and deterministic rendering
//! of the results. Floats are printed with the shortest round-trip
//! representation, so identical configs reproduce byte-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use selfadj::bipartite::{self, AdiabaticPoint, BipartiteSystem, HalfLineMesh};
use selfadj::boundary_param::BoundaryUnitary;
use selfadj::deficiency;
use selfadj::dirac1d::{self, DiracBoundarySetup, SectorSplit};
use selfadj::linalg;
use selfadj::quadform1d;
use selfadj::symmetry_reduction::{self, DiskEdge, GroupRep, H2Class};
use selfadj::SpectralResult;

use crate::config::*;

#[derive(Debug)]
pub enum RunError {
    /// Rejected input: exit code 2.
    Validation(String),
    /// Numerical failure during computation: exit code 3.
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            RunError::Validation(m) => format!("validation: {m}"),
            RunError::Numerical(m) => format!("numerical: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Validation(e.msg().to_string())
    }
}

fn map_lib(e: selfadj::Error) -> RunError {
    use selfadj::Error::*;
    match &e {
        SolverFailure(_) | BracketTooCoarse(_) => RunError::Numerical(e.to_string()),
        _ => RunError::Validation(e.to_string()),
    }
}

/// Shortest round-trip decimal representation.
fn fmt(x: f64) -> String {
    format!("{x}")
}

fn spectral_csv(result: &SpectralResult) -> String {
    let mut out = String::from("index,eigenvalue,residual\n");
    for k in 0..result.len() {
        out.push_str(&format!(
            "{k},{},{}\n",
            fmt(result.eigenvalues[k]),
            fmt(result.residuals[k])
        ));
    }
    out
}

fn spectral_json(result: &SpectralResult) -> Value {
    json!({
        "eigenvalues": result.eigenvalues,
        "residuals": result.residuals,
        "mesh_n": result.mesh_n,
    })
}

fn json_doc(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json rendering");
    s.push('\n');
    s
}

fn csv_only_json_unsupported(cmd: &str) -> RunError {
    RunError::Validation(format!("command {cmd:?} does not support csv output"))
}

/// Runs one command and renders the artifact in the requested format.
pub fn run(command: &Command, format: OutputFormat, seed: u64) -> Result<String, RunError> {
    match command {
        Command::Spectrum(p) => {
            let bu = p.boundary.build(2)?;
            let asm = quadform1d::assemble(p.l, p.n_elements, &bu, p.potential.as_deref())
                .map_err(map_lib)?;
            let result = quadform1d::solve(&asm, p.n_eigs).map_err(map_lib)?;
            Ok(match format {
                OutputFormat::Csv => spectral_csv(&result),
                OutputFormat::Json => json_doc(spectral_json(&result)),
            })
        }
        Command::Deficiency(p) => {
            if format == OutputFormat::Csv {
                return Err(csv_only_json_unsupported("deficiency"));
            }
            let pair = match p.kind.as_str() {
                "half-line" => deficiency::half_line_laplacian_deficiency(p.extent, p.grid_n)
                    .map_err(map_lib)?,
                "interval" => deficiency::interval_laplacian_deficiency(p.extent, p.grid_n)
                    .map_err(map_lib)?,
                other => {
                    return Err(RunError::Validation(format!(
                        "unknown deficiency kind {other:?} (half-line|interval)"
                    )))
                }
            };
            let pair = match &p.h_b_eigenvalues {
                Some(lambdas) => {
                    deficiency::bipartite_deficiency(&pair, lambdas).map_err(map_lib)?
                }
                None => pair,
            };
            Ok(json_doc(pair.to_json()))
        }
        Command::BipartiteCurve(p) => {
            let samples = p.alpha1.resolve()?;
            let curve = bipartite::compatibility_curve(p.sigma, &samples).map_err(map_lib)?;
            match format {
                OutputFormat::Csv => {
                    let mut out = String::from("alpha1,alpha2\n");
                    for (a1, a2) in &curve.points {
                        out.push_str(&format!("{},{}\n", fmt(*a1), fmt(*a2)));
                    }
                    Ok(out)
                }
                OutputFormat::Json => Ok(json_doc(json!({
                    "sigma": p.sigma,
                    "points": curve.points,
                    "skipped": curve.skipped.iter().map(|(a, _)| *a).collect::<Vec<_>>(),
                }))),
            }
        }
        Command::BipartiteBound(p) => {
            let sys = BipartiteSystem::new(p.lambda1, p.lambda2).map_err(map_lib)?;
            let state = bipartite::bound_state(&sys, p.alpha1).map_err(map_lib)?;
            match format {
                OutputFormat::Csv => {
                    let mut out = String::from(BOUND_HEADER);
                    out.push_str(&bound_row(p.alpha1 / 2.0, &state));
                    Ok(out)
                }
                OutputFormat::Json => Ok(json_doc(bound_json(&state))),
            }
        }
        Command::Adiabatic(p) => {
            let sys = BipartiteSystem::new(p.lambda1, p.lambda2).map_err(map_lib)?;
            let samples = p.s.resolve()?;
            let path = bipartite::adiabatic_path(&sys, &samples).map_err(map_lib)?;
            match format {
                OutputFormat::Csv => {
                    let mut out = String::from(BOUND_HEADER);
                    for sample in &path {
                        match &sample.point {
                            AdiabaticPoint::Bound(state) => {
                                out.push_str(&bound_row(sample.s, state));
                            }
                            _ => {
                                out.push_str(&format!(
                                    "{},{},NaN,NaN,NaN,NaN,NaN,NaN,NaN,{}\n",
                                    fmt(sample.s),
                                    fmt(2.0 * sample.s),
                                    sample.flag()
                                ));
                            }
                        }
                    }
                    Ok(out)
                }
                OutputFormat::Json => {
                    let rows: Vec<Value> = path
                        .iter()
                        .map(|sample| match &sample.point {
                            AdiabaticPoint::Bound(state) => {
                                let mut v = bound_json(state);
                                v["s"] = json!(sample.s);
                                v["flag"] = json!(sample.flag());
                                v
                            }
                            _ => json!({ "s": sample.s, "flag": sample.flag() }),
                        })
                        .collect();
                    Ok(json_doc(Value::Array(rows)))
                }
            }
        }
        Command::Separability(p) => {
            let sys = BipartiteSystem::new(p.lambda1, p.lambda2).map_err(map_lib)?;
            let bu = p.boundary.build(2)?;
            let mesh = HalfLineMesh::new(p.radius, p.n_elements).map_err(map_lib)?;
            let report =
                bipartite::separability_test(&sys, &bu, p.evolve_time, &mesh).map_err(map_lib)?;
            match format {
                OutputFormat::Csv => {
                    let mut out = String::from("time,entropy\n");
                    for (t, s) in &report.samples {
                        out.push_str(&format!("{},{}\n", fmt(*t), fmt(*s)));
                    }
                    Ok(out)
                }
                OutputFormat::Json => Ok(json_doc(json!({
                    "separable": report.separable,
                    "max_entropy": report.max_entropy,
                    "samples": report.samples,
                }))),
            }
        }
        Command::DiracCircle(p) => {
            let result = dirac1d::circle_dirac_spectrum(p.n_modes);
            Ok(match format {
                OutputFormat::Csv => spectral_csv(&result),
                OutputFormat::Json => json_doc(spectral_json(&result)),
            })
        }
        Command::DiracInterval(p) => {
            let u = parse_cmatrix(&p.u_map)?;
            let setup = DiracBoundarySetup::interval(u).map_err(map_lib)?;
            let result = dirac1d::interval_dirac_spectrum(
                p.l,
                &setup,
                p.n_eigs,
                (p.bracket[0], p.bracket[1]),
            )
            .map_err(map_lib)?;
            Ok(match format {
                OutputFormat::Csv => spectral_csv(&result),
                OutputFormat::Json => json_doc(spectral_json(&result)),
            })
        }
        Command::Poa(p) => {
            if format == OutputFormat::Csv {
                return Err(csv_only_json_unsupported("poa"));
            }
            let split = match p.kind.as_str() {
                "position" => {
                    let grid = p
                        .grid
                        .as_ref()
                        .ok_or_else(|| RunError::Validation("position needs a grid".into()))?;
                    SectorSplit::position(grid).map_err(map_lib)?
                }
                "momentum" => {
                    let n = p
                        .n_fourier
                        .ok_or_else(|| RunError::Validation("momentum needs n_fourier".into()))?;
                    SectorSplit::momentum(n).map_err(map_lib)?
                }
                other => {
                    return Err(RunError::Validation(format!(
                        "unknown poa kind {other:?} (position|momentum)"
                    )))
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let additivity = max_additivity_defect(&split, 100, &mut rng);
            let reconstruction = split.verify_reconstruction(50, &mut rng);
            let (plus, minus) = split.sector_spectra();
            let (dp, dm) = split.sector_dims();
            Ok(json_doc(json!({
                "kind": p.kind,
                "sector_dims": [dp, dm],
                "sector_spectrum_plus": plus,
                "sector_spectrum_minus": minus,
                "plus_lower_bound": split.plus_lower_bound,
                "minus_upper_bound": split.minus_upper_bound,
                "additivity_defect": additivity,
                "reconstruction_defect": reconstruction,
            })))
        }
        Command::SymmetryCommutant(p) => {
            if format == OutputFormat::Csv {
                return Err(csv_only_json_unsupported("symmetry-commutant"));
            }
            let rep = GroupRep::u1(p.n_max, p.radial_dim, p.angles.clone()).map_err(map_lib)?;
            let bu = match &p.unitary {
                SymmetryUnitary::Admissible {
                    radial_factor,
                    phases,
                } => {
                    let u = parse_cmatrix(radial_factor)?;
                    symmetry_reduction::build_admissible(&u, phases)
                        .map_err(map_lib)?
                        .assembled()
                        .clone()
                }
                SymmetryUnitary::Matrix { matrix } => {
                    let m = parse_cmatrix(matrix)?;
                    BoundaryUnitary::from_matrix(m).map_err(map_lib)?
                }
            };
            let commutant =
                symmetry_reduction::commutant_check(bu.matrix(), &rep).map_err(map_lib)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let form_defect =
                symmetry_reduction::form_invariance_defect(&bu, &rep, p.n_random, &mut rng)
                    .map_err(map_lib)?;
            Ok(json_doc(json!({
                "dim": rep.dim(),
                "max_norm": commutant.max_norm,
                "pass": commutant.pass,
                "form_invariance_defect": form_defect,
            })))
        }
        Command::DiskModes(p) => {
            let edge = match &p.edge {
                DiskEdgeSpec::Named(name) if name == "dirichlet" => DiskEdge::Dirichlet,
                DiskEdgeSpec::Named(other) => {
                    return Err(RunError::Validation(format!(
                        "unknown edge {other:?} (dirichlet or {{\"robin\": c}})"
                    )))
                }
                DiskEdgeSpec::Robin { robin } => DiskEdge::Robin { coupling: *robin },
            };
            let mut results = Vec::new();
            for &m in &p.modes {
                let r = symmetry_reduction::disk_mode_spectrum(m, edge, p.n_elements, p.n_eigs)
                    .map_err(map_lib)?;
                results.push((m, r));
            }
            match format {
                OutputFormat::Csv => {
                    let mut out = String::from("m,index,eigenvalue,residual\n");
                    for (m, r) in &results {
                        for k in 0..r.len() {
                            out.push_str(&format!(
                                "{m},{k},{},{}\n",
                                fmt(r.eigenvalues[k]),
                                fmt(r.residuals[k])
                            ));
                        }
                    }
                    Ok(out)
                }
                OutputFormat::Json => {
                    let rows: Vec<Value> = results
                        .iter()
                        .map(|(m, r)| {
                            json!({
                                "m": m,
                                "eigenvalues": r.eigenvalues,
                                "residuals": r.residuals,
                            })
                        })
                        .collect();
                    Ok(json_doc(Value::Array(rows)))
                }
            }
        }
        Command::Corner(p) => {
            if format == OutputFormat::Csv {
                return Err(csv_only_json_unsupported("corner"));
            }
            let report =
                symmetry_reduction::corner_singularity(p.theta_opening, p.epsilon, p.n_quad)
                    .map_err(map_lib)?;
            let class = match report.h2_class {
                H2Class::Finite { value } => json!({ "finite": value }),
                H2Class::Divergent { rate } => json!({ "divergent": rate }),
            };
            Ok(json_doc(json!({
                "exponent": report.exponent,
                "harmonic_residual": report.harmonic_residual,
                "edge_trace_max": report.edge_trace_max,
                "h2_integrals": report.h2_integrals,
                "h2_class": class,
            })))
        }
        Command::CheckGap(p) => {
            if format == OutputFormat::Csv {
                return Err(csv_only_json_unsupported("check-gap"));
            }
            let bu = p.boundary.build(2)?;
            Ok(json_doc(json!({
                "gap_delta": bu.gap_delta(),
                "w_dim": bu.w_dim(),
                "no_gap": bu.no_gap(),
                "cayley_norm": bu.cayley_norm(),
            })))
        }
    }
}

const BOUND_HEADER: &str = "s,alpha1,alpha2,energy,kappa1,kappa2,schmidt1,schmidt2,entropy,flag\n";

fn bound_row(s: f64, state: &bipartite::BipartiteBoundState) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},ok\n",
        fmt(s),
        fmt(state.alpha1),
        fmt(state.alpha2),
        fmt(state.energy),
        fmt(state.kappa1),
        fmt(state.kappa2),
        fmt(state.schmidt[0]),
        fmt(state.schmidt[1]),
        fmt(state.entropy)
    )
}

fn bound_json(state: &bipartite::BipartiteBoundState) -> Value {
    json!({
        "alpha1": state.alpha1,
        "alpha2": state.alpha2,
        "energy": state.energy,
        "kappa1": state.kappa1,
        "kappa2": state.kappa2,
        "schmidt": state.schmidt,
        "entropy": state.entropy,
    })
}

fn max_additivity_defect(split: &SectorSplit, pairs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let a = split.p_plus() * linalg::random_cvector(split.dim(), rng);
        let b = split.p_minus() * linalg::random_cvector(split.dim(), rng);
        let sum = &a + &b;
        let q_sum = split.form(&sum, &sum).re;
        let q_parts = split.form(&a, &a).re + split.form(&b, &b).re;
        worst = worst.max((q_sum - q_parts).abs() / (1.0 + q_sum.abs()));
    }
    worst
}
