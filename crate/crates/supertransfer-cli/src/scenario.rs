//! Scenario files: the on-disk description of a run.
//!
//! A scenario is a versioned TOML document. `[system]` selects the model
//! (site network, one-bus circuit, or two-bus circuit), `[initial_state]`
//! and `[run]` describe the propagation, `[noise]` holds the reorganization
//! energy → dephasing mapping, and the optional `[sweep]`, `[scaling]` and
//! `[calibration]` tables carry the per-command grids. Files are diffable,
//! self-describing, and round-trip through serialization unchanged.

use serde::{Deserialize, Serialize};
use std::path::Path;
use supertransfer::{
    Circuit1Spec, Circuit2Spec, Coupling, CrossCoupling, Method, NoiseMapping, StatePrep,
    SystemSpec, C64, DEFAULT_GAMMA_PHI_PER_LAMBDA, DEFAULT_OU_CUTOFF,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("scenario field {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub system: SystemSection,
    #[serde(default)]
    pub initial_state: InitialStateSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let scenario: Scenario = toml::from_str(&text).map_err(|source| ScenarioError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.name.is_empty() {
            return Err(invalid("name", "must be non-empty"));
        }
        self.system.validate()?;
        if let SystemSection::Sites(sites) = &self.system {
            self.initial_state.to_prep(sites.donor_energies.len())?;
        }
        self.run.validate()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// [system]

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSection {
    Sites(SitesSection),
    Circuit1(Circuit1Section),
    Circuit2(Circuit2Section),
}

impl SystemSection {
    fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            SystemSection::Sites(s) => s.to_spec().map(|_| ()),
            SystemSection::Circuit1(c) => c.to_spec().map(|_| ()),
            SystemSection::Circuit2(c) => c.to_spec().map(|_| ()),
        }
    }
}

/// Either one number applied uniformly or an explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec::Uniform(0.0)
    }
}

impl CouplingSpec {
    fn to_coupling(&self, n: usize, field: &str) -> Result<Coupling, ScenarioError> {
        match self {
            CouplingSpec::Uniform(v) => Ok(Coupling::Uniform(*v)),
            CouplingSpec::Matrix(rows) => {
                let m = to_matrix(rows, n, n, field)?;
                Ok(Coupling::Matrix(m))
            }
        }
    }

    fn to_cross(&self, nd: usize, na: usize, field: &str) -> Result<CrossCoupling, ScenarioError> {
        match self {
            CouplingSpec::Uniform(v) => Ok(CrossCoupling::Uniform(*v)),
            CouplingSpec::Matrix(rows) => {
                let m = to_matrix(rows, nd, na, field)?;
                Ok(CrossCoupling::Matrix(m))
            }
        }
    }
}

fn to_matrix(
    rows: &[Vec<f64>],
    nr: usize,
    nc: usize,
    field: &str,
) -> Result<nalgebra::DMatrix<f64>, ScenarioError> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(invalid(field, format!("matrix must be {nr}×{nc}")));
    }
    Ok(nalgebra::DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SitesSection {
    pub donor_energies: Vec<f64>,
    pub acceptor_energies: Vec<f64>,
    #[serde(default)]
    pub donor_coupling: CouplingSpec,
    #[serde(default)]
    pub acceptor_coupling: CouplingSpec,
    #[serde(default)]
    pub cross_coupling: CouplingSpec,
    #[serde(default)]
    pub donor_disorder: f64,
    #[serde(default)]
    pub acceptor_disorder: f64,
    pub donor_reorg: Vec<f64>,
    pub acceptor_reorg: Vec<f64>,
}

impl SitesSection {
    pub fn to_spec(&self) -> Result<SystemSpec, ScenarioError> {
        let nd = self.donor_energies.len();
        let na = self.acceptor_energies.len();
        let spec = SystemSpec {
            donor_energies: self.donor_energies.clone(),
            acceptor_energies: self.acceptor_energies.clone(),
            donor_coupling: self.donor_coupling.to_coupling(nd, "system.donor_coupling")?,
            acceptor_coupling: self
                .acceptor_coupling
                .to_coupling(na, "system.acceptor_coupling")?,
            cross_coupling: self
                .cross_coupling
                .to_cross(nd, na, "system.cross_coupling")?,
            donor_disorder: self.donor_disorder,
            acceptor_disorder: self.acceptor_disorder,
            donor_reorg: self.donor_reorg.clone(),
            acceptor_reorg: self.acceptor_reorg.clone(),
        };
        spec.validate()
            .map_err(|e| invalid("system", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit1Section {
    pub donor_energies: Vec<f64>,
    pub acceptor_energy: f64,
    pub qubit_coupling: f64,
    pub cross_coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tunable_window: Option<(f64, f64)>,
    /// Reorganization energy per qubit site, donors first then the acceptor.
    pub reorg: Vec<f64>,
}

impl Circuit1Section {
    pub fn to_spec(&self) -> Result<Circuit1Spec, ScenarioError> {
        let n_sites = self.donor_energies.len() + 1;
        if self.reorg.len() != n_sites {
            return Err(invalid(
                "system.reorg",
                format!("expected {n_sites} entries (donors then acceptor)"),
            ));
        }
        Ok(Circuit1Spec {
            donor_energies: self.donor_energies.clone(),
            acceptor_energy: self.acceptor_energy,
            qubit_coupling: self.qubit_coupling,
            cross_coupling: self.cross_coupling,
            tunable_window: self.tunable_window,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit2Section {
    pub donor_energies: Vec<f64>,
    pub acceptor_energy: f64,
    pub donor_bus_freq: f64,
    pub acceptor_bus_freq: f64,
    pub donor_bus_couplings: Vec<f64>,
    pub acceptor_bus_coupling: f64,
    pub bus_bus_coupling: f64,
}

impl Circuit2Section {
    pub fn to_spec(&self) -> Result<Circuit2Spec, ScenarioError> {
        if self.donor_bus_couplings.len() != self.donor_energies.len() {
            return Err(invalid(
                "system.donor_bus_couplings",
                "one coupling per donor qubit required",
            ));
        }
        Ok(Circuit2Spec {
            donor_energies: self.donor_energies.clone(),
            acceptor_energy: self.acceptor_energy,
            donor_bus_freq: self.donor_bus_freq,
            acceptor_bus_freq: self.acceptor_bus_freq,
            donor_bus_couplings: self.donor_bus_couplings.clone(),
            acceptor_bus_coupling: self.acceptor_bus_coupling,
            bus_bus_coupling: self.bus_bus_coupling,
        })
    }
}

// ---------------------------------------------------------------------------
// [initial_state]

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSection {
    /// Excitation on one donor site (1-based index).
    Localized { site: usize },
    /// Classical mixture over donor sites; omitted weights mean uniform.
    Mixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// Coherent superposition over donor sites with real amplitudes
    /// (normalized on load).
    Delocalized { amplitudes: Vec<f64> },
    LowestDonorEigenstate,
}

impl Default for InitialStateSection {
    fn default() -> Self {
        InitialStateSection::Mixture { weights: None }
    }
}

impl InitialStateSection {
    pub fn to_prep(&self, n_donors: usize) -> Result<StatePrep, ScenarioError> {
        match self {
            InitialStateSection::Localized { site } => {
                if *site == 0 || *site > n_donors {
                    return Err(invalid(
                        "initial_state.site",
                        format!("must be in 1..={n_donors}"),
                    ));
                }
                Ok(StatePrep::Localized(*site))
            }
            InitialStateSection::Mixture { weights } => {
                let w = match weights {
                    Some(w) => {
                        if w.len() != n_donors {
                            return Err(invalid(
                                "initial_state.weights",
                                format!("expected {n_donors} entries"),
                            ));
                        }
                        w.clone()
                    }
                    None => vec![1.0 / n_donors as f64; n_donors],
                };
                Ok(StatePrep::Mixture(w))
            }
            InitialStateSection::Delocalized { amplitudes } => {
                if amplitudes.len() != n_donors {
                    return Err(invalid(
                        "initial_state.amplitudes",
                        format!("expected {n_donors} entries"),
                    ));
                }
                let norm: f64 = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(invalid("initial_state.amplitudes", "must not be all zero"));
                }
                Ok(StatePrep::Delocalized(
                    amplitudes.iter().map(|&a| C64::new(a / norm, 0.0)).collect(),
                ))
            }
            InitialStateSection::LowestDonorEigenstate => Ok(StatePrep::LowestDonorEigenstate),
        }
    }
}

// ---------------------------------------------------------------------------
// [run]

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Lindblad,
    Stochastic,
}

impl MethodSpec {
    pub fn to_method(self, n_trajectories: usize) -> Method {
        match self {
            MethodSpec::Lindblad => Method::Lindblad,
            MethodSpec::Stochastic => Method::Stochastic {
                n_traj: n_trajectories,
            },
        }
    }
}

/// Either a fixed horizon in μs or the string "auto", which asks the runner
/// to pick one from a golden-rule estimate of the relaxation rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonSpec {
    Fixed(f64),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_method")]
    pub method: MethodSpec,
    #[serde(default = "default_horizon")]
    pub horizon: HorizonSpec,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_trajectories")]
    pub n_trajectories: usize,
    #[serde(default = "default_disorder_ensemble")]
    pub disorder_ensemble: usize,
}

fn default_method() -> MethodSpec {
    MethodSpec::Lindblad
}
fn default_horizon() -> HorizonSpec {
    HorizonSpec::Auto(AutoKeyword::Auto)
}
fn default_n_steps() -> usize {
    600
}
fn default_n_trajectories() -> usize {
    10_000
}
fn default_disorder_ensemble() -> usize {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            method: default_method(),
            horizon: default_horizon(),
            n_steps: default_n_steps(),
            seed: 0,
            n_trajectories: default_n_trajectories(),
            disorder_ensemble: default_disorder_ensemble(),
        }
    }
}

impl RunSection {
    fn validate(&self) -> Result<(), ScenarioError> {
        if let HorizonSpec::Fixed(t) = self.horizon {
            if !(t > 0.0) {
                return Err(invalid("run.horizon", "must be positive or \"auto\""));
            }
        }
        if self.n_steps < 50 {
            return Err(invalid("run.n_steps", "needs at least 50 output points"));
        }
        if self.n_trajectories == 0 {
            return Err(invalid("run.n_trajectories", "must be positive"));
        }
        if self.disorder_ensemble == 0 {
            return Err(invalid("run.disorder_ensemble", "must be positive"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// [noise]

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_gamma_phi_per_lambda")]
    pub gamma_phi_per_lambda: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_gamma_phi_per_lambda() -> f64 {
    DEFAULT_GAMMA_PHI_PER_LAMBDA
}
fn default_cutoff() -> f64 {
    DEFAULT_OU_CUTOFF
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            gamma_phi_per_lambda: default_gamma_phi_per_lambda(),
            cutoff: default_cutoff(),
        }
    }
}

impl NoiseSection {
    pub fn mapping(&self) -> NoiseMapping {
        NoiseMapping {
            gamma_phi_per_lambda: self.gamma_phi_per_lambda,
            cutoff: self.cutoff,
        }
    }
}

// ---------------------------------------------------------------------------
// [sweep], [scaling], [calibration]

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: AxisScale,
}

impl AxisSection {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, ScenarioError> {
        if self.points < 2 {
            return Err(invalid(field, "axis needs at least 2 points"));
        }
        if !(self.max > self.min) {
            return Err(invalid(field, "axis max must exceed min"));
        }
        if self.scale == AxisScale::Log && self.min <= 0.0 {
            return Err(invalid(field, "log axis needs a positive min"));
        }
        let n = self.points;
        Ok((0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.scale {
                    AxisScale::Linear => self.min + f * (self.max - self.min),
                    AxisScale::Log => {
                        (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                    }
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Donor reorganization energy axis (λ^D, MHz).
    pub lambda_axis: AxisSection,
    /// Donor site-detuning axis (δ, MHz): donor j is offset by j·δ.
    pub delta_axis: AxisSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub n_donors: Vec<usize>,
    pub n_acceptors: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Noise amplitude, directly…
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// …or implied by a reorganization energy through the adopted mapping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default = "default_spectrum_ensemble")]
    pub spectrum_ensemble: usize,
    #[serde(default = "default_spectrum_duration")]
    pub spectrum_duration: f64,
    #[serde(default = "default_autocorr_ensemble")]
    pub autocorr_ensemble: usize,
    #[serde(default = "default_autocorr_duration")]
    pub autocorr_duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_spectrum_ensemble() -> usize {
    400
}
fn default_spectrum_duration() -> f64 {
    0.4
}
fn default_autocorr_ensemble() -> usize {
    10_000
}
fn default_autocorr_duration() -> f64 {
    0.1
}
fn default_dt() -> f64 {
    1e-4
}
