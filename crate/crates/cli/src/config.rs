//! Experiment configuration: JSON parsing, defaults and validation.

use std::path::PathBuf;

use qthermo_core::algebra::{c, CMatrix};
use qthermo_core::engine::{GibbsMapSpec, KernelRegularization};
use qthermo_core::{states, Bipartite, Density, Hermitian, ThermalContext};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_N: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Identities,
    FeedbackBudget,
    DiscordStroke,
    IsothermalSweep,
    ErgotropyCompare,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::FeedbackBudget => "feedback_budget",
            Experiment::DiscordStroke => "discord_stroke",
            Experiment::IsothermalSweep => "isothermal_sweep",
            Experiment::ErgotropyCompare => "ergotropy_compare",
        }
    }
}

/// Complex matrix as rows of `[re, im]` pairs, or a real diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diag { diag: Vec<f64> },
    Full { matrix: Vec<Vec<[f64; 2]>> },
}

impl MatrixSpec {
    fn to_matrix(&self, field: &str) -> Result<CMatrix, ConfigError> {
        match self {
            MatrixSpec::Diag { diag } => {
                if diag.is_empty() {
                    return Err(invalid(field, "empty diagonal"));
                }
                let mut m = CMatrix::zeros(diag.len(), diag.len());
                for (i, d) in diag.iter().enumerate() {
                    m[(i, i)] = c(*d, 0.0);
                }
                Ok(m)
            }
            MatrixSpec::Full { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(invalid(field, "empty matrix"));
                }
                if let Some(row) = matrix.iter().find(|r| r.len() != n) {
                    return Err(invalid(
                        field,
                        format!("row of length {} in a {n}x{n} matrix", row.len()),
                    ));
                }
                Ok(CMatrix::from_fn(n, n, |i, j| c(matrix[i][j][0], matrix[i][j][1])))
            }
        }
    }

    pub fn to_density(&self, field: &str) -> Result<Density, ConfigError> {
        Density::validate(self.to_matrix(field)?).map_err(|e| invalid(field, e))
    }

    pub fn to_hermitian(&self, field: &str) -> Result<Hermitian, ConfigError> {
        Hermitian::new(self.to_matrix(field)?).map_err(|e| invalid(field, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatePreset {
    Bell,
    ClassicalMixture,
    Werner {
        p: f64,
    },
    Product {
        s: MatrixSpec,
        a: MatrixSpec,
    },
    /// Seed defaults to the run seed.
    RandomTwoQubit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diag: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<[f64; 2]>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_s: Option<usize>,
        #[serde(default = "one")]
        d_a: usize,
    },
}

fn one() -> usize {
    1
}

pub struct PresetInfo {
    pub name: &'static str,
    pub parameters: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "bell",
        parameters: "",
        description: "(|00> + |11>)/sqrt2 on two qubits",
    },
    PresetInfo {
        name: "classical_mixture",
        parameters: "",
        description: "(|00><00| + |11><11|)/2",
    },
    PresetInfo {
        name: "werner",
        parameters: "p in [0, 1]",
        description: "p |Phi+><Phi+| + (1 - p) I/4",
    },
    PresetInfo {
        name: "product",
        parameters: "s, a: {\"diag\": [..]} or {\"matrix\": [[[re, im], ..], ..]}",
        description: "rho_S ⊗ rho_A",
    },
    PresetInfo {
        name: "random_two_qubit",
        parameters: "seed (defaults to the run seed)",
        description: "Hilbert-Schmidt random full-rank two-qubit state",
    },
    PresetInfo {
        name: "explicit",
        parameters: "diag or matrix, d_s (default: whole dimension / d_a), d_a (default 1)",
        description: "any density matrix, S-major ordering",
    },
];

impl StatePreset {
    pub fn build(&self, run_seed: u64) -> Result<Bipartite, ConfigError> {
        match self {
            StatePreset::Bell => Ok(states::bell()),
            StatePreset::ClassicalMixture => Ok(states::classical_mixture()),
            StatePreset::Werner { p } => states::werner(*p).map_err(|e| invalid("state.p", e)),
            StatePreset::Product { s, a } => {
                Ok(Bipartite::product(&s.to_density("state.s")?, &a.to_density("state.a")?))
            }
            StatePreset::RandomTwoQubit { seed } => Ok(states::random_two_qubit(seed.unwrap_or(run_seed))),
            StatePreset::Explicit { diag, matrix, d_s, d_a } => {
                let spec = match (diag, matrix) {
                    (Some(diag), None) => MatrixSpec::Diag { diag: diag.clone() },
                    (None, Some(matrix)) => MatrixSpec::Full { matrix: matrix.clone() },
                    _ => return Err(invalid("state.matrix", "give exactly one of `diag` and `matrix`")),
                };
                let rho = spec.to_density("state.matrix")?;
                if *d_a == 0 || rho.dim() % d_a != 0 {
                    return Err(invalid(
                        "state.d_a",
                        format!("{d_a} does not divide dimension {}", rho.dim()),
                    ));
                }
                let d_s = d_s.unwrap_or(rho.dim() / d_a);
                Bipartite::new(rho, d_s, *d_a).map_err(|e| invalid("state.d_s", e))
            }
        }
    }
}

/// A single value or a sweep list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Thermalization {
    Full,
    Partial { lambda: f64 },
}

impl From<Thermalization> for GibbsMapSpec {
    fn from(t: Thermalization) -> Self {
        match t {
            Thermalization::Full => GibbsMapSpec::Full,
            Thermalization::Partial { lambda } => GibbsMapSpec::Partial { lambda },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    state: StatePreset,
    beta: OneOrMany<f64>,
    #[serde(rename = "N")]
    n: Option<OneOrMany<usize>>,
    seed: Option<u64>,
    k_b: Option<f64>,
    alpha: Option<f64>,
    output_dir: Option<PathBuf>,
    h_s: Option<MatrixSpec>,
    h_a: Option<MatrixSpec>,
    thermalization: Option<Thermalization>,
}

/// Validated configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub state: StatePreset,
    pub beta: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub seed: u64,
    pub k_b: f64,
    pub alpha: f64,
    pub output_dir: PathBuf,
    pub h_s: Option<MatrixSpec>,
    pub h_a: Option<MatrixSpec>,
    pub thermalization: Thermalization,
}

/// Hamiltonian `diag(0, 1, ..., d - 1)`.
pub fn ladder(d: usize) -> Hermitian {
    Hermitian::from_diagonal(&(0..d).map(|k| k as f64).collect::<Vec<_>>())
}

/// Everything an experiment needs, built from a validated config.
#[derive(Clone, Debug)]
pub struct Setup {
    pub rho: Bipartite,
    pub h_s: Hermitian,
    pub h_a: Hermitian,
    pub map: GibbsMapSpec,
    pub reg: KernelRegularization,
}

impl ExperimentConfig {
    pub fn context(&self, beta: f64) -> Result<ThermalContext, ConfigError> {
        ThermalContext::with_boltzmann(beta, self.k_b).map_err(|e| invalid("beta", e))
    }

    pub fn setup(&self) -> Result<Setup, ConfigError> {
        let rho = self.state.build(self.seed)?;
        let hamiltonian = |spec: &Option<MatrixSpec>, field: &str, dim: usize| match spec {
            Some(m) => {
                let h = m.to_hermitian(field)?;
                if h.dim() != dim {
                    return Err(invalid(
                        field,
                        format!("dimension {} but the subsystem has {dim}", h.dim()),
                    ));
                }
                Ok(h)
            }
            None => Ok(ladder(dim)),
        };
        Ok(Setup {
            h_s: hamiltonian(&self.h_s, "h_s", rho.d_s())?,
            h_a: hamiltonian(&self.h_a, "h_a", rho.d_a())?,
            rho,
            map: self.thermalization.into(),
            reg: KernelRegularization::new(self.alpha).map_err(|e| invalid("alpha", e))?,
        })
    }
}

pub fn load_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let beta = raw.beta.into_vec();
    if beta.is_empty() {
        return Err(invalid("beta", "empty sweep"));
    }
    if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(invalid("beta", format!("{b} is not a positive finite number")));
    }
    let n = raw.n.map(OneOrMany::into_vec).unwrap_or_else(|| vec![DEFAULT_N]);
    if n.is_empty() {
        return Err(invalid("N", "empty sweep"));
    }
    if n.contains(&0) {
        return Err(invalid("N", "step counts must be positive"));
    }
    let k_b = raw.k_b.unwrap_or(1.0);
    if !(k_b.is_finite() && k_b > 0.0) {
        return Err(invalid("k_b", format!("{k_b} is not a positive finite number")));
    }
    let alpha = raw.alpha.unwrap_or(KernelRegularization::DEFAULT_ALPHA);
    KernelRegularization::new(alpha).map_err(|e| invalid("alpha", e))?;
    let thermalization = raw.thermalization.unwrap_or(Thermalization::Full);
    GibbsMapSpec::from(thermalization)
        .validate()
        .map_err(|e| invalid("thermalization.lambda", e))?;

    let cfg = ExperimentConfig {
        experiment: raw.experiment,
        state: raw.state,
        beta,
        n,
        seed: raw.seed.unwrap_or(0),
        k_b,
        alpha,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("qthermo-out")),
        h_s: raw.h_s,
        h_a: raw.h_a,
        thermalization,
    };
    // surfaces state and Hamiltonian errors at load time
    cfg.setup()?;
    Ok(cfg)
}
