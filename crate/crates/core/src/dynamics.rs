//! Strang-split integration of `i ∂t X = −ΔX ± E(|X|²) X`.
//!
//! Each step is `e^{−i s ρ dt/2} · S(dt) · e^{−i s ρ dt/2}` with `s = ±1`.
//! The potential substep multiplies every member by the same real phase, so
//! the density is unchanged along it and the substep is exact. The density is
//! 2/3-rule filtered before the phase multiply.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, ModifiedEnergy};
use crate::ensemble::{Ensemble, ModeEnsemble};
use crate::equilibria::EquilibriumSpec;
use crate::error::{invalid, structural, Error, Result};
use crate::field::{Field, ScalarField};
use crate::C64;

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `+E(|X|²)X`
    Defocusing,
    /// `−E(|X|²)X`
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Sign::Defocusing),
            -1 => Ok(Sign::Focusing),
            _ => Err(invalid(format!("sign must be +1 or -1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub sign: Sign,
    pub dt: f64,
    pub t_end: f64,
    pub dt_min: f64,
    /// Blow-up threshold on the ensemble `H¹` norm `(Σ w ‖m‖²_{H¹})^{1/2}`.
    pub h1_ceiling: f64,
    pub record_every: usize,
    /// Per-step relative energy change that triggers dt halving; `None`
    /// disables the adaptive path.
    #[serde(default)]
    pub drift_tol: Option<f64>,
}

impl EvolutionConfig {
    pub fn new(sign: Sign, dt: f64, t_end: f64) -> Self {
        Self {
            sign,
            dt,
            t_end,
            dt_min: dt * 1e-6,
            h1_ceiling: f64::INFINITY,
            record_every: 1,
            drift_tol: None,
        }
    }

    /// Rejects inconsistent settings; `initial_h1` is the ensemble `H¹` norm.
    pub fn validate(&self, initial_h1: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt) {
            return Err(invalid(format!(
                "need 0 < dt_min < dt, got dt_min = {} and dt = {}",
                self.dt_min, self.dt
            )));
        }
        if !(self.h1_ceiling > initial_h1) {
            return Err(invalid(format!(
                "h1_ceiling {} must exceed the initial H1 norm {initial_h1}",
                self.h1_ceiling
            )));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be >= 1"));
        }
        if let Some(tol) = self.drift_tol {
            if !(tol > 0.0) {
                return Err(invalid("drift_tol must be positive"));
            }
        }
        Ok(())
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowUp { t: f64 },
    DtUnderflow { t: f64 },
}

/// What to record besides the always-on diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Probe {
    pub virial_center: Option<Vec<f64>>,
    pub keep_snapshots: bool,
}

impl Probe {
    pub fn snapshots() -> Self {
        Self {
            virial_center: None,
            keep_snapshots: true,
        }
    }

    pub fn with_virial(mut self, center: Vec<f64>) -> Self {
        self.virial_center = Some(center);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    /// Empty unless the probe asked for snapshots.
    pub snapshots: Vec<S>,
    pub termination: Termination,
    pub final_state: S,
    pub steps: usize,
    /// Step size in use when the run ended.
    pub final_dt: f64,
}

impl<S> Trajectory<S> {
    /// Snapshot recorded at time `t` (to within `1e−9` relative).
    pub fn snapshot_at(&self, t: f64) -> Option<&S> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .and_then(|i| self.snapshots.get(i))
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

fn phase_multiply<S: Ensemble>(state: &mut S, potential: &ScalarField, angle: f64) {
    let phases: Vec<C64> = potential
        .values()
        .iter()
        .map(|&v| C64::from_polar(1.0, -angle * v))
        .collect();
    state.for_each_member(|m| {
        m.to_physical_in_place();
        m.data_mut().iter_mut().zip(&phases).for_each(|(v, p)| *v *= p);
    });
}

fn check_finite<S: Ensemble>(state: &S, t: f64) -> Result<()> {
    if state.is_finite() {
        Ok(())
    } else {
        Err(Error::Integration {
            t,
            reason: "non-finite values in state".into(),
        })
    }
}

/// One step given the filtered density at its start; returns the filtered
/// density at its end.
fn step_with_potential<S: Ensemble>(state: &mut S, dt: f64, sign: Sign, start: &ScalarField) -> ScalarField {
    let half = 0.5 * dt * sign.value();
    phase_multiply(state, start, half);
    state.for_each_member(|m| {
        m.apply_semigroup_in_place(dt, 0.0);
    });
    let end = diagnostics::potential_density(state);
    phase_multiply(state, &end, half);
    end
}

/// One Strang step of size `dt`; members are left in physical representation.
pub fn strang_step<S: Ensemble>(state: &mut S, dt: f64, sign: Sign) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    check_finite(state, 0.0)?;
    let start = diagnostics::potential_density(state);
    step_with_potential(state, dt, sign, &start);
    check_finite(state, 0.0)
}

/// Integrates to `cfg.t_end`, stopping early on blow-up or dt underflow.
pub fn evolve<S: Ensemble>(state: S, cfg: &EvolutionConfig, probe: &Probe) -> Result<Trajectory<S>> {
    evolve_observed(state, cfg, probe, &mut |_| {})
}

/// [`evolve`] that also hands every record to `observer` as it is taken, so
/// callers keep the records of a run that later fails.
pub fn evolve_observed<S: Ensemble>(
    state: S,
    cfg: &EvolutionConfig,
    probe: &Probe,
    observer: &mut dyn FnMut(&DiagnosticsRecord),
) -> Result<Trajectory<S>> {
    let initial_h1 = state.h1_sq().sqrt();
    cfg.validate(initial_h1)?;
    check_finite(&state, 0.0)?;
    let center = probe.virial_center.as_deref();
    let mut state = state;
    state.for_each_member(Field::to_physical_in_place);

    let mut traj = Trajectory {
        times: Vec::new(),
        records: Vec::new(),
        snapshots: Vec::new(),
        termination: Termination::Completed,
        final_state: state.clone(),
        steps: 0,
        final_dt: cfg.dt,
    };
    let mut push = |traj: &mut Trajectory<S>, state: &S, t: f64| {
        let rec = diagnostics::record(state, t, cfg.sign, center);
        observer(&rec);
        traj.times.push(t);
        traj.records.push(rec);
        if probe.keep_snapshots {
            traj.snapshots.push(state.clone());
        }
    };
    push(&mut traj, &state, 0.0);

    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut potential = diagnostics::potential_density(&state);
    let mut energy = diagnostics::energy(&state, cfg.sign);
    let mut since_record = 0usize;
    let tiny = 1e-12 * cfg.t_end.max(1.0);

    while cfg.t_end - t > tiny {
        let h = dt.min(cfg.t_end - t);
        let mut trial = state.clone();
        let end_potential = step_with_potential(&mut trial, h, cfg.sign, &potential);
        check_finite(&trial, t + h)?;
        if let Some(tol) = cfg.drift_tol {
            let trial_energy = diagnostics::energy(&trial, cfg.sign);
            let drift = (trial_energy - energy).abs() / energy.abs().max(f64::MIN_POSITIVE);
            if drift > tol {
                dt *= 0.5;
                if dt < cfg.dt_min {
                    traj.termination = Termination::DtUnderflow { t };
                    break;
                }
                continue;
            }
            energy = trial_energy;
        }
        state = trial;
        potential = end_potential;
        t += h;
        traj.steps += 1;
        since_record += 1;

        let h1 = state.h1_sq().sqrt();
        if h1 >= cfg.h1_ceiling {
            push(&mut traj, &state, t);
            traj.termination = Termination::BlowUp { t };
            break;
        }
        if since_record >= cfg.record_every || cfg.t_end - t <= tiny {
            push(&mut traj, &state, t);
            since_record = 0;
        }
    }
    if !matches!(traj.termination, Termination::BlowUp { .. })
        && traj.times.last().is_some_and(|&last| last < t)
    {
        push(&mut traj, &state, t);
    }
    traj.final_dt = dt;
    traj.final_state = state;
    Ok(traj)
}

/// Perturbation `Z₀` in noise coordinates: `shared[i]` multiplies the same
/// Gaussian as the equilibrium's `i`-th lattice entry, `extra` are independent.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub shared: Vec<Field>,
    pub extra: Vec<Field>,
}

impl Perturbation {
    pub fn zero(equilibrium: &EquilibriumSpec, extra: usize) -> Self {
        let g = equilibrium.grid();
        Self {
            shared: vec![Field::zeros(g); equilibrium.len()],
            extra: vec![Field::zeros(g); extra],
        }
    }

    pub fn coordinates(&self) -> usize {
        self.shared.len() + self.extra.len()
    }
}

/// Result of [`evolve_perturbed`]: the full noise-linear system and `Z = X − Y`.
#[derive(Debug, Clone)]
pub struct PerturbedTrajectory {
    pub combined: Trajectory<ModeEnsemble>,
    /// `Z(t)` at every recorded time, unit weights over the noise coordinates.
    pub z: Vec<ModeEnsemble>,
    pub modified: Vec<ModifiedEnergy>,
}

impl PerturbedTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.combined.times
    }
}

/// Evolves `X = Y + Z` with `Y` the equilibrium, through the noise-linear mode
/// system `c_n(t)`, and returns `Z(t) = c_n(t) − y_n(t)` with `y_n` closed-form.
pub fn evolve_perturbed(
    perturbation: &Perturbation,
    equilibrium: &EquilibriumSpec,
    cfg: &EvolutionConfig,
) -> Result<PerturbedTrajectory> {
    if perturbation.shared.len() != equilibrium.len() {
        return Err(structural(format!(
            "perturbation has {} shared coordinates but the equilibrium has {}",
            perturbation.shared.len(),
            equilibrium.len()
        )));
    }
    if cfg.sign != Sign::Defocusing {
        return Err(invalid("the perturbed equilibrium system is defocusing"));
    }
    let grid = equilibrium.grid();
    let y0 = equilibrium.coordinate_fields(0.0)?;
    let mut modes = Vec::with_capacity(perturbation.coordinates());
    for (y, z) in y0.iter().zip(&perturbation.shared) {
        modes.push(y.add(z)?.to_physical());
    }
    for z in &perturbation.extra {
        if z.grid() != grid {
            return Err(structural("perturbation lives on a different grid"));
        }
        modes.push(z.to_physical());
    }
    let weights = vec![1.0; modes.len()];
    let x0 = ModeEnsemble::new(grid, weights, modes)?;
    let combined = evolve(x0, cfg, &Probe::snapshots())?;

    let mut z = Vec::with_capacity(combined.snapshots.len());
    let mut modified = Vec::with_capacity(combined.snapshots.len());
    for (t, snap) in combined.times.iter().zip(&combined.snapshots) {
        let y = equilibrium.coordinate_fields(*t)?;
        let fields = snap
            .modes()
            .iter()
            .enumerate()
            .map(|(n, c)| match y.get(n) {
                Some(yn) => c.sub(yn),
                None => Ok(c.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let me = diagnostics::modified_energy(&fields, equilibrium, *t)?;
        modified.push(me);
        z.push(ModeEnsemble::from_parts(grid.clone(), vec![1.0; fields.len()], fields));
    }
    let mut combined = combined;
    for (rec, me) in combined.records.iter_mut().zip(&modified) {
        rec.modified = Some(*me);
    }
    Ok(PerturbedTrajectory {
        combined,
        z,
        modified,
    })
}
