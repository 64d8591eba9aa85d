//! Run configuration: a single JSON document, validated before any state is
//! built.

use std::fmt;
use std::path::{Path, PathBuf};

use randnls::sphere::MAX_DEGREE;
use randnls::{GridSpec, Sign};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    EquilibriumCheck,
    Perturbed,
    Blowup,
    SphereLemma,
    OperatorCompare,
    ScatteringProbe,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Experiment::Simulate => "simulate",
            Experiment::EquilibriumCheck => "equilibrium-check",
            Experiment::Perturbed => "perturbed",
            Experiment::Blowup => "blowup",
            Experiment::SphereLemma => "sphere-lemma",
            Experiment::OperatorCompare => "operator-compare",
            Experiment::ScatteringProbe => "scattering-probe",
        };
        f.write_str(name)
    }
}

/// Initial data for the trajectory experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Translation-invariant equilibrium `Σ a_k g_k e^{ik·x}`.
    Equilibrium {
        lattice: Vec<Vec<i64>>,
        coefficients: Vec<[f64; 2]>,
    },
    /// Explicit mode list with weights.
    Modes { modes: Vec<ModeSpec> },
    /// Deterministic Gaussian bump (a single mode of weight 1).
    Bump {
        amplitude: f64,
        width: f64,
        /// Defaults to the box center.
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        momentum: Option<Vec<f64>>,
    },
    /// Mode ensemble in the snapshot JSON format.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    PlaneWave {
        weight: f64,
        lattice: Vec<i64>,
        #[serde(default = "unit_amplitude")]
        amplitude: [f64; 2],
    },
    Bump {
        weight: f64,
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        momentum: Option<Vec<f64>>,
    },
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSettings {
    pub sign: Sign,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dt_min: Option<f64>,
    /// Absolute ceiling on the ensemble `H¹` norm.
    #[serde(default)]
    pub h1_ceiling: Option<f64>,
    /// Ceiling as a multiple of the initial `H¹` norm; ignored if
    /// `h1_ceiling` is set.
    #[serde(default)]
    pub h1_ceiling_factor: Option<f64>,
    #[serde(default)]
    pub drift_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    #[default]
    Modes,
    MonteCarlo { realizations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSettings {
    /// Independent noise coordinates added to the equilibrium's own.
    #[serde(default = "default_extra")]
    pub extra: usize,
    /// `L²` norm of each random perturbation field.
    #[serde(default = "default_perturbation_amplitude")]
    pub amplitude: f64,
    /// Largest lattice component carried by a perturbation field.
    #[serde(default = "default_perturbation_k_max")]
    pub k_max: i64,
    /// Also perturb the shared coordinates with this `L²` norm.
    #[serde(default)]
    pub shared_amplitude: f64,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        Self {
            extra: default_extra(),
            amplitude: default_perturbation_amplitude(),
            k_max: default_perturbation_k_max(),
            shared_amplitude: 0.0,
        }
    }
}

fn default_extra() -> usize {
    2
}

fn default_perturbation_amplitude() -> f64 {
    1e-2
}

fn default_perturbation_k_max() -> i64 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSettings {
    #[serde(default = "default_nmax")]
    pub n_max: usize,
    #[serde(default = "default_sample_points")]
    pub sample_points: usize,
}

impl Default for SphereSettings {
    fn default() -> Self {
        Self {
            n_max: default_nmax(),
            sample_points: default_sample_points(),
        }
    }
}

fn default_nmax() -> usize {
    8
}

fn default_sample_points() -> usize {
    600
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSettings {
    pub k_cut: usize,
    /// RK4 step of the operator path.
    pub operator_dt: f64,
    /// Operator steps between comparisons.
    pub steps_per_record: usize,
    pub records: usize,
    /// Sobolev weight of the Bures distance.
    #[serde(default)]
    pub bures_s: f64,
    /// Largest Frobenius distance accepted by the invariant bundle.
    #[serde(default = "default_compare_tol")]
    pub tolerance: f64,
}

fn default_compare_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringSettings {
    /// Times `t` at which `scatter_cauchy(t, 2t)` is evaluated.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumCheckSettings {
    /// Number of step sizes `dt, dt/2, …` used for the phase-error fit.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

impl Default for EquilibriumCheckSettings {
    fn default() -> Self {
        Self { levels: default_levels() }
    }
}

fn default_levels() -> usize {
    3
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub evolution: Option<EvolutionSettings>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub virial_center: Option<Vec<f64>>,
    #[serde(default)]
    pub perturbation: Option<PerturbationSettings>,
    #[serde(default)]
    pub sphere: Option<SphereSettings>,
    #[serde(default)]
    pub compare: Option<CompareSettings>,
    #[serde(default)]
    pub scattering: Option<ScatteringSettings>,
    #[serde(default)]
    pub equilibrium_check: Option<EquilibriumCheckSettings>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            grid: None,
            initial: None,
            evolution: None,
            method: Method::Modes,
            seed: 0,
            stream_id: 0,
            output: None,
            record_every: 1,
            snapshots: false,
            virial_center: None,
            perturbation: None,
            sphere: None,
            compare: None,
            scattering: None,
            equilibrium_check: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Largest full-grid basis the operator path integrates.
pub const MAX_OPERATOR_BASIS: usize = 256;
/// Largest `k_cut` accepted by the two-path comparison.
pub const MAX_COMPARE_K_CUT: usize = 8;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        self.experiment.ok_or_else(|| bad("no experiment given"))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        self.grid.ok_or_else(|| bad("grid is required for this experiment"))
    }

    pub fn initial(&self) -> Result<&InitialData, CliError> {
        self.initial.as_ref().ok_or_else(|| bad("initial data is required for this experiment"))
    }

    pub fn evolution(&self) -> Result<&EvolutionSettings, CliError> {
        self.evolution.as_ref().ok_or_else(|| bad("evolution settings are required for this experiment"))
    }

    /// Schema-level checks; nothing is allocated beyond the config itself.
    pub fn validate(&self) -> Result<(), CliError> {
        let experiment = self.experiment()?;
        if self.record_every == 0 {
            return Err(bad("record_every must be >= 1"));
        }
        if experiment == Experiment::SphereLemma {
            let s = self.sphere.clone().unwrap_or_default();
            if s.n_max > MAX_DEGREE {
                return Err(bad(format!("n_max {} exceeds {MAX_DEGREE}", s.n_max)));
            }
            if s.sample_points == 0 {
                return Err(bad("sample_points must be >= 1"));
            }
            return Ok(());
        }

        let grid = self.grid()?;
        if !(1..=3).contains(&grid.dim) {
            return Err(bad(format!("grid dim must be 1, 2 or 3, got {}", grid.dim)));
        }
        if grid.points_per_dim < 4 || grid.points_per_dim % 2 != 0 {
            return Err(bad(format!(
                "points_per_dim must be even and >= 4, got {}",
                grid.points_per_dim
            )));
        }
        positive("grid period", grid.period)?;
        self.validate_initial(grid)?;
        self.validate_evolution()?;
        if let Method::MonteCarlo { realizations } = self.method {
            if realizations == 0 {
                return Err(bad("monte-carlo needs at least one realization"));
            }
        }
        if let Some(c) = &self.virial_center {
            if c.len() != grid.dim {
                return Err(bad(format!("virial_center has {} entries for a {}-d grid", c.len(), grid.dim)));
            }
        }

        let ev = self.evolution()?;
        match experiment {
            Experiment::EquilibriumCheck | Experiment::Perturbed => {
                if !matches!(self.initial()?, InitialData::Equilibrium { .. }) {
                    return Err(bad(format!("{experiment} needs equilibrium initial data")));
                }
                if ev.sign != Sign::Defocusing {
                    return Err(bad(format!("{experiment} is defocusing only")));
                }
                if self.method != Method::Modes {
                    return Err(bad(format!("{experiment} runs on the mode representation")));
                }
                if experiment == Experiment::EquilibriumCheck {
                    let levels = self.equilibrium_check.clone().unwrap_or_default().levels;
                    if levels < 2 {
                        return Err(bad("equilibrium_check.levels must be >= 2"));
                    }
                }
                if let Some(p) = &self.perturbation {
                    positive("perturbation amplitude", p.amplitude)?;
                    if p.k_max < 0 || p.shared_amplitude < 0.0 || !p.shared_amplitude.is_finite() {
                        return Err(bad("perturbation k_max and shared_amplitude must be >= 0"));
                    }
                }
            }
            Experiment::Blowup => {
                if ev.sign != Sign::Focusing {
                    return Err(bad("blowup is a focusing experiment"));
                }
            }
            Experiment::OperatorCompare => {
                let c = self
                    .compare
                    .as_ref()
                    .ok_or_else(|| bad("operator-compare needs a compare section"))?;
                if c.k_cut > MAX_COMPARE_K_CUT {
                    return Err(bad(format!("k_cut {} exceeds {MAX_COMPARE_K_CUT}", c.k_cut)));
                }
                if 2 * c.k_cut >= grid.points_per_dim {
                    return Err(bad("k_cut must be below N/2"));
                }
                let basis = grid.points_per_dim.pow(grid.dim as u32);
                if basis > MAX_OPERATOR_BASIS {
                    return Err(bad(format!(
                        "operator path needs a grid of at most {MAX_OPERATOR_BASIS} points, got {basis}"
                    )));
                }
                positive("operator_dt", c.operator_dt)?;
                positive("tolerance", c.tolerance)?;
                if c.steps_per_record == 0 || c.records == 0 {
                    return Err(bad("steps_per_record and records must be >= 1"));
                }
                if self.method != Method::Modes {
                    return Err(bad("operator-compare runs on the mode representation"));
                }
                let chunk = c.operator_dt * c.steps_per_record as f64;
                if !is_multiple(chunk, ev.dt) {
                    return Err(bad(format!(
                        "operator_dt * steps_per_record = {chunk} must be a multiple of evolution dt {}",
                        ev.dt
                    )));
                }
            }
            Experiment::ScatteringProbe => {
                let s = self
                    .scattering
                    .as_ref()
                    .ok_or_else(|| bad("scattering-probe needs a scattering section"))?;
                if s.times.is_empty() {
                    return Err(bad("scattering.times is empty"));
                }
                let cadence = ev.dt * self.record_every as f64;
                for &t in &s.times {
                    positive("scattering time", t)?;
                    if 2.0 * t > ev.t_end * (1.0 + 1e-12) {
                        return Err(bad(format!("scattering time {t}: 2t exceeds t_end {}", ev.t_end)));
                    }
                    if !is_multiple(t, cadence) {
                        return Err(bad(format!(
                            "scattering time {t} is not a multiple of the record cadence {cadence}"
                        )));
                    }
                }
                if ev.drift_tol.is_some() {
                    return Err(bad("scattering-probe needs a fixed step (drop drift_tol)"));
                }
            }
            Experiment::Simulate | Experiment::SphereLemma => {}
        }
        Ok(())
    }

    fn validate_initial(&self, grid: GridSpec) -> Result<(), CliError> {
        let dim_ok = |v: &Option<Vec<f64>>, what: &str| match v {
            Some(v) if v.len() != grid.dim => Err(bad(format!("{what} has {} entries for a {}-d grid", v.len(), grid.dim))),
            _ => Ok(()),
        };
        match self.initial()? {
            InitialData::Equilibrium { lattice, coefficients } => {
                if lattice.is_empty() || lattice.len() != coefficients.len() {
                    return Err(bad("equilibrium needs matching, non-empty lattice and coefficients"));
                }
                if lattice.iter().any(|k| k.len() != grid.dim) {
                    return Err(bad("equilibrium lattice points must match the grid dimension"));
                }
            }
            InitialData::Modes { modes } => {
                if modes.is_empty() {
                    return Err(bad("mode list is empty"));
                }
                for m in modes {
                    match m {
                        ModeSpec::PlaneWave { weight, lattice, .. } => {
                            positive("mode weight", *weight)?;
                            if lattice.len() != grid.dim {
                                return Err(bad("plane-wave lattice must match the grid dimension"));
                            }
                        }
                        ModeSpec::Bump {
                            weight,
                            width,
                            center,
                            momentum,
                            ..
                        } => {
                            positive("mode weight", *weight)?;
                            positive("bump width", *width)?;
                            dim_ok(center, "bump center")?;
                            dim_ok(momentum, "bump momentum")?;
                        }
                    }
                }
            }
            InitialData::Bump {
                width, center, momentum, ..
            } => {
                positive("bump width", *width)?;
                dim_ok(center, "bump center")?;
                dim_ok(momentum, "bump momentum")?;
            }
            InitialData::File { path } => {
                if !path.is_file() {
                    return Err(bad(format!("initial data file {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }

    fn validate_evolution(&self) -> Result<(), CliError> {
        let ev = self.evolution()?;
        positive("dt", ev.dt)?;
        if !(ev.t_end.is_finite() && ev.t_end >= 0.0) {
            return Err(bad(format!("t_end must be >= 0, got {}", ev.t_end)));
        }
        if let Some(v) = ev.dt_min {
            positive("dt_min", v)?;
        }
        if let Some(v) = ev.h1_ceiling {
            positive("h1_ceiling", v)?;
        }
        if let Some(v) = ev.h1_ceiling_factor {
            if !(v > 1.0 && v.is_finite()) {
                return Err(bad(format!("h1_ceiling_factor must exceed 1, got {v}")));
            }
        }
        if let Some(v) = ev.drift_tol {
            positive("drift_tol", v)?;
        }
        Ok(())
    }
}

fn is_multiple(x: f64, step: f64) -> bool {
    let q = x / step;
    q >= 1.0 - 1e-9 && (q - q.round()).abs() <= 1e-9 * q.max(1.0)
}
