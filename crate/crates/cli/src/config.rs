//! Strict config parsing: unknown fields are rejected, the schema tag is
//! mandatory, and every numeric parameter is validated against the
//! target operation's preconditions before dispatch.

use serde::Deserialize;
use serde_json::Value;

use selfadj::boundary_param::{named_condition, BoundaryUnitary, NamedCondition};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug)]
pub enum ConfigError {
    Validation(String),
}

impl ConfigError {
    pub fn msg(&self) -> &str {
        match self {
            ConfigError::Validation(m) => m,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(invalid(format!("unknown format {other:?} (csv|json)"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u64,
    command: String,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: String,
    #[serde(default)]
    path: Option<String>,
}

/// Where and how to emit the artifact.
#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            format: OutputFormat::Csv,
            path: None,
        }
    }
}

/// Uniform or explicit sample lists in configs.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Samples {
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            Samples::List(v) => {
                if v.is_empty() {
                    return Err(invalid("sample list must be nonempty"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("samples must be finite"));
                }
                Ok(v.clone())
            }
            Samples::Range { start, stop, count } => {
                if *count < 2 {
                    return Err(invalid("sample range needs count >= 2"));
                }
                if !start.is_finite() || !stop.is_finite() || stop <= start {
                    return Err(invalid("sample range needs finite start < stop"));
                }
                Ok((0..*count)
                    .map(|k| start + (stop - start) * k as f64 / (*count as f64 - 1.0))
                    .collect())
            }
        }
    }
}

/// Boundary condition specification: named or an explicit matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Named {
        kind: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        tau: Option<f64>,
    },
    Matrix {
        matrix: Vec<[f64; 2]>,
        convention: String,
    },
}

impl BoundarySpec {
    pub fn build(&self, default_n: usize) -> Result<BoundaryUnitary, ConfigError> {
        match self {
            BoundarySpec::Named { kind, n, c, tau } => {
                let n = n.unwrap_or(default_n);
                let cond = match kind.as_str() {
                    "dirichlet" => NamedCondition::Dirichlet,
                    "neumann" => NamedCondition::Neumann,
                    "robin" => NamedCondition::Robin {
                        coupling: c.ok_or_else(|| invalid("robin needs a coupling \"c\""))?,
                    },
                    "quasi-periodic" => NamedCondition::QuasiPeriodic {
                        tau: tau.ok_or_else(|| invalid("quasi-periodic needs \"tau\""))?,
                    },
                    other => return Err(invalid(format!("unknown boundary kind {other:?}"))),
                };
                named_condition(cond, n).map_err(|e| invalid(e.to_string()))
            }
            BoundarySpec::Matrix { .. } => {
                let value = serde_json::to_value(self.clone_for_json())
                    .map_err(|e| invalid(e.to_string()))?;
                BoundaryUnitary::from_json(&value).map_err(|e| invalid(e.to_string()))
            }
        }
    }

    fn clone_for_json(&self) -> Value {
        match self {
            BoundarySpec::Matrix { matrix, convention } => serde_json::json!({
                "matrix": matrix,
                "convention": convention,
            }),
            BoundarySpec::Named { .. } => Value::Null,
        }
    }
}

/// A complex matrix given as row-major `[re, im]` pairs.
pub fn parse_cmatrix(flat: &[[f64; 2]]) -> Result<selfadj::linalg::CMatrix, ConfigError> {
    let len = flat.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n == 0 {
        return Err(invalid(format!(
            "matrix entry count {len} is not a positive perfect square"
        )));
    }
    Ok(selfadj::linalg::CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = flat[i * n + j];
        num_complex::Complex64::new(re, im)
    }))
}

// per-command parameter records

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    #[serde(rename = "L")]
    pub l: f64,
    pub n_elements: usize,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub potential: Option<Vec<f64>>,
    pub n_eigs: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeficiencyParams {
    pub kind: String,
    pub extent: f64,
    pub grid_n: usize,
    #[serde(default)]
    pub h_b_eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteCurveParams {
    pub sigma: f64,
    pub alpha1: Samples,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteBoundParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub s: Samples,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparabilityParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub boundary: BoundarySpec,
    pub evolve_time: f64,
    pub radius: f64,
    pub n_elements: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracCircleParams {
    pub n_modes: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracIntervalParams {
    #[serde(rename = "L")]
    pub l: f64,
    pub u_map: Vec<[f64; 2]>,
    pub n_eigs: usize,
    pub bracket: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoaParams {
    pub kind: String,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub n_fourier: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryCommutantParams {
    pub n_max: usize,
    #[serde(default = "default_radial_dim")]
    pub radial_dim: usize,
    pub angles: Vec<f64>,
    pub unitary: SymmetryUnitary,
    #[serde(default = "default_n_random")]
    pub n_random: usize,
}

fn default_radial_dim() -> usize {
    1
}

fn default_n_random() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SymmetryUnitary {
    Admissible {
        radial_factor: Vec<[f64; 2]>,
        phases: Vec<f64>,
    },
    Matrix {
        matrix: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskModesParams {
    pub modes: Vec<i32>,
    pub edge: DiskEdgeSpec,
    pub n_elements: usize,
    pub n_eigs: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DiskEdgeSpec {
    Named(String),
    Robin { robin: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerParams {
    pub theta_opening: f64,
    pub epsilon: f64,
    pub n_quad: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGapParams {
    pub boundary: BoundarySpec,
}

/// A parsed, validated problem definition.
#[derive(Debug)]
pub struct ProblemConfig {
    pub command: Command,
    pub output: OutputSpec,
}

#[derive(Debug)]
pub enum Command {
    Spectrum(SpectrumParams),
    Deficiency(DeficiencyParams),
    BipartiteCurve(BipartiteCurveParams),
    BipartiteBound(BipartiteBoundParams),
    Adiabatic(AdiabaticParams),
    Separability(SeparabilityParams),
    DiracCircle(DiracCircleParams),
    DiracInterval(DiracIntervalParams),
    Poa(PoaParams),
    SymmetryCommutant(SymmetryCommutantParams),
    DiskModes(DiskModesParams),
    Corner(CornerParams),
    CheckGap(CheckGapParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Deficiency(_) => "deficiency",
            Command::BipartiteCurve(_) => "bipartite-curve",
            Command::BipartiteBound(_) => "bipartite-bound",
            Command::Adiabatic(_) => "adiabatic",
            Command::Separability(_) => "separability",
            Command::DiracCircle(_) => "dirac-circle",
            Command::DiracInterval(_) => "dirac-interval",
            Command::Poa(_) => "poa",
            Command::SymmetryCommutant(_) => "symmetry-commutant",
            Command::DiskModes(_) => "disk-modes",
            Command::Corner(_) => "corner",
            Command::CheckGap(_) => "check-gap",
        }
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(
    command: &str,
    params: Value,
) -> Result<T, ConfigError> {
    serde_json::from_value(params).map_err(|e| invalid(format!("params for {command:?}: {e}")))
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
    if raw.schema != SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema {} (expected {SCHEMA_VERSION})",
            raw.schema
        )));
    }
    let command = match raw.command.as_str() {
        "spectrum" => Command::Spectrum(parse_params(&raw.command, raw.params)?),
        "deficiency" => Command::Deficiency(parse_params(&raw.command, raw.params)?),
        "bipartite-curve" => Command::BipartiteCurve(parse_params(&raw.command, raw.params)?),
        "bipartite-bound" => Command::BipartiteBound(parse_params(&raw.command, raw.params)?),
        "adiabatic" => Command::Adiabatic(parse_params(&raw.command, raw.params)?),
        "separability" => Command::Separability(parse_params(&raw.command, raw.params)?),
        "dirac-circle" => Command::DiracCircle(parse_params(&raw.command, raw.params)?),
        "dirac-interval" => Command::DiracInterval(parse_params(&raw.command, raw.params)?),
        "poa" => Command::Poa(parse_params(&raw.command, raw.params)?),
        "symmetry-commutant" => Command::SymmetryCommutant(parse_params(&raw.command, raw.params)?),
        "disk-modes" => Command::DiskModes(parse_params(&raw.command, raw.params)?),
        "corner" => Command::Corner(parse_params(&raw.command, raw.params)?),
        "check-gap" => Command::CheckGap(parse_params(&raw.command, raw.params)?),
        other => return Err(invalid(format!("unknown command {other:?}"))),
    };
    let output = match raw.output {
        None => OutputSpec::default(),
        Some(raw_out) => OutputSpec {
            format: OutputFormat::parse(&raw_out.format)?,
            path: raw_out.path,
        },
    };
    Ok(ProblemConfig { command, output })
}
