//! One function per experiment. Each writes its artifacts into the output
//! directory and fills the summary; records taken before a failure are kept.

use std::path::Path;

use nalgebra::DMatrix;
use randnls::covariance::{covariance_from_modes, covariance_on_basis};
use randnls::diagnostics::{self, morawetz_accumulator, scatter_cauchy, virial_blowup_time};
use randnls::dynamics::{evolve, evolve_observed, evolve_perturbed, Perturbation};
use randnls::ensemble::{gaussian_draws, ModeEnsembleDoc};
use randnls::numerics::log_log_slope;
use randnls::operator::{bures_wasserstein, evolve_operator};
use randnls::sphere::lemma_report;
use randnls::{
    Basis, CovarianceMatrix, DiagnosticsRecord, Ensemble, EquilibriumSpec, EvolutionConfig, Field, ModeEnsemble,
    OperatorState, Probe, Sign, Termination, TorusGrid, Trajectory, C64,
};
use serde::Serialize;

use crate::config::{Experiment, InitialData, Method, ModeSpec, RunConfig};
use crate::output::{relative_drift, write_diagnostics, write_json, write_snapshots, DiagnosticsWriter, Snapshot, Summary};
use crate::CliError;

/// Relative mass drift accepted by the invariant bundles.
pub const MASS_TOL: f64 = 1e-10;
/// Relative energy drift accepted by the invariant bundles.
pub const ENERGY_TOL: f64 = 1e-6;
/// Density deviation accepted for an equilibrium.
pub const DENSITY_TOL: f64 = 1e-6;
/// Phase errors below this are at roundoff level and carry no order information.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;
pub const SPHERE_TOL: f64 = 1e-9;
pub const GRAM_TOL: f64 = 1e-8;
const DEFAULT_CEILING_FACTOR: f64 = 10.0;
const DEFAULT_BLOWUP_DRIFT_TOL: f64 = 1e-5;

pub fn run(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    match cfg.experiment()? {
        Experiment::Simulate => simulate(cfg, dir, summary),
        Experiment::EquilibriumCheck => equilibrium_check(cfg, dir, summary),
        Experiment::Perturbed => perturbed(cfg, dir, summary),
        Experiment::Blowup => blowup(cfg, dir, summary),
        Experiment::SphereLemma => sphere_lemma(cfg, dir, summary),
        Experiment::OperatorCompare => {
            let result = compare(cfg, dir);
            let report = match &result {
                Ok(r) => r,
                Err((_, partial)) => partial,
            };
            write_json(&dir.join(COMPARE_FILE), report)?;
            summary.detail("compare", report);
            summary.drift("max_frobenius", report.max_frobenius);
            let tol = cfg.compare.as_ref().map_or(1e-5, |c| c.tolerance);
            summary.invariant("paths_agree", report.max_frobenius < tol);
            result.map(|_| ()).map_err(|(e, _)| e)
        }
        Experiment::ScatteringProbe => scattering_probe(cfg, dir, summary),
    }
}

fn grid_of(cfg: &RunConfig) -> Result<TorusGrid, CliError> {
    cfg.grid()?.build().map_err(CliError::config)
}

fn box_center(grid: &TorusGrid) -> Vec<f64> {
    vec![grid.period() / 2.0; grid.dim()]
}

fn bump(grid: &TorusGrid, amplitude: f64, width: f64, center: &Option<Vec<f64>>, momentum: &Option<Vec<f64>>) -> Field {
    let c = center.clone().unwrap_or_else(|| box_center(grid));
    let p = momentum.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
    Field::gaussian_bump(grid, amplitude, width, &c, &p)
}

fn equilibrium_spec(cfg: &RunConfig, grid: &TorusGrid) -> Result<EquilibriumSpec, CliError> {
    match cfg.initial()? {
        InitialData::Equilibrium { lattice, coefficients } => {
            let coefficients = coefficients.iter().map(|p| C64::new(p[0], p[1])).collect();
            EquilibriumSpec::new(grid, lattice.clone(), coefficients).map_err(CliError::config)
        }
        _ => Err(CliError::Config("equilibrium initial data required".into())),
    }
}

/// Reads a mode ensemble, either bare or wrapped as a snapshot `{t, ensemble}`.
fn read_ensemble(path: &Path, grid: &TorusGrid) -> Result<ModeEnsemble, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("ensemble") {
        value = inner.take();
    }
    let doc: ModeEnsembleDoc =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let e = doc.into_ensemble().map_err(CliError::config)?;
    if e.grid() != grid {
        return Err(CliError::Config(format!(
            "grid of {} ({:?}) does not match the configured grid ({:?})",
            path.display(),
            e.grid().spec(),
            grid.spec()
        )));
    }
    Ok(e)
}

pub fn initial_ensemble(cfg: &RunConfig, grid: &TorusGrid) -> Result<ModeEnsemble, CliError> {
    match cfg.initial()? {
        InitialData::Equilibrium { .. } => equilibrium_spec(cfg, grid)?
            .build_equilibrium()
            .map_err(CliError::config),
        InitialData::Modes { modes } => {
            let mut weights = Vec::with_capacity(modes.len());
            let mut fields = Vec::with_capacity(modes.len());
            for m in modes {
                match m {
                    ModeSpec::PlaneWave {
                        weight,
                        lattice,
                        amplitude,
                    } => {
                        weights.push(*weight);
                        fields.push(
                            Field::plane_wave(grid, lattice, C64::new(amplitude[0], amplitude[1]))
                                .map_err(CliError::config)?,
                        );
                    }
                    ModeSpec::Bump {
                        weight,
                        amplitude,
                        width,
                        center,
                        momentum,
                    } => {
                        weights.push(*weight);
                        fields.push(bump(grid, *amplitude, *width, center, momentum));
                    }
                }
            }
            ModeEnsemble::new(grid, weights, fields).map_err(CliError::config)
        }
        InitialData::Bump {
            amplitude,
            width,
            center,
            momentum,
        } => ModeEnsemble::single(grid, 1.0, bump(grid, *amplitude, *width, center, momentum))
            .map_err(CliError::config),
        InitialData::File { path } => read_ensemble(path, grid),
    }
}

fn evolution_config(cfg: &RunConfig, initial_h1: f64) -> Result<EvolutionConfig, CliError> {
    let ev = cfg.evolution()?;
    let mut out = EvolutionConfig::new(ev.sign, ev.dt, ev.t_end);
    if let Some(v) = ev.dt_min {
        out.dt_min = v;
    }
    out.h1_ceiling = match (ev.h1_ceiling, ev.h1_ceiling_factor) {
        (Some(c), _) => c,
        (None, Some(f)) => f * initial_h1,
        (None, None) => f64::INFINITY,
    };
    out.drift_tol = ev.drift_tol;
    out.record_every = cfg.record_every;
    out.validate(initial_h1).map_err(CliError::config)?;
    Ok(out)
}

/// Runs `evolve`, streaming every record to `diagnostics.csv` as it is taken.
fn streamed<S: Ensemble>(
    state: S,
    ecfg: &EvolutionConfig,
    probe: &Probe,
    dir: &Path,
) -> Result<Trajectory<S>, CliError> {
    let mut writer = DiagnosticsWriter::create(dir)?;
    let result = evolve_observed(state, ecfg, probe, &mut |r| writer.push(r));
    writer.finish()?;
    result.map_err(CliError::from)
}

/// Runs `evolve`, keeping the records taken before any failure.
fn collected<S: Ensemble>(
    state: S,
    ecfg: &EvolutionConfig,
    probe: &Probe,
) -> (Vec<DiagnosticsRecord>, Result<Trajectory<S>, CliError>) {
    let mut records = Vec::new();
    let result = evolve_observed(state, ecfg, probe, &mut |r| records.push(r.clone()));
    (records, result.map_err(CliError::from))
}

fn trajectory_summary<S>(summary: &mut Summary, traj: &Trajectory<S>) {
    summary.termination = Some(traj.termination);
    summary.steps = Some(traj.steps);
    summary.final_time = Some(traj.final_time());
    let mass = relative_drift(&traj.records, |r| r.mass);
    let energy = relative_drift(&traj.records, |r| r.energy);
    summary.drift("mass", mass);
    summary.drift("energy", energy);
    summary.detail("final_dt", traj.final_dt);
}

fn simulate(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = grid_of(cfg)?;
    let init = initial_ensemble(cfg, &grid)?;
    match cfg.method {
        Method::Modes => simulate_with(init, cfg, dir, summary),
        Method::MonteCarlo { realizations } => {
            let mc = init
                .sample_gaussian(realizations, cfg.seed, cfg.stream_id)
                .map_err(CliError::config)?;
            summary.detail("realizations", realizations);
            simulate_with(mc, cfg, dir, summary)
        }
    }
}

fn simulate_with<S: Ensemble + Snapshot>(
    state: S,
    cfg: &RunConfig,
    dir: &Path,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let ecfg = evolution_config(cfg, state.h1_sq().sqrt())?;
    let probe = Probe {
        virial_center: cfg.virial_center.clone(),
        keep_snapshots: cfg.snapshots,
    };
    let traj = streamed(state, &ecfg, &probe, dir)?;
    trajectory_summary(summary, &traj);
    summary.invariant("mass_conserved", summary.drifts["mass"] < MASS_TOL);
    if traj.termination == Termination::Completed {
        summary.invariant("energy_conserved", summary.drifts["energy"] < ENERGY_TOL);
    }
    if cfg.snapshots {
        let paths = write_snapshots(dir, &traj.times, &traj.snapshots)?;
        summary.detail("snapshots", paths.len());
    }
    Ok(())
}

fn equilibrium_check(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = grid_of(cfg)?;
    let spec = equilibrium_spec(cfg, &grid)?;
    let levels = cfg.equilibrium_check.clone().unwrap_or_default().levels;
    let base = cfg.evolution()?.dt;
    let m = spec.m();
    let dts: Vec<f64> = (0..levels).map(|i| base / 2f64.powi(i as i32)).collect();
    let mut per_mode: Vec<Vec<f64>> = vec![Vec::with_capacity(levels); spec.len()];
    let mut density_drift: f64 = 0.0;
    for (level, &dt) in dts.iter().enumerate() {
        let e = spec.build_equilibrium().map_err(CliError::config)?;
        let initial: Vec<Field> = e.modes().iter().map(Field::to_spectral).collect();
        let mut ecfg = evolution_config(cfg, e.h1_sq().sqrt())?;
        ecfg.dt = dt;
        ecfg.dt_min = ecfg.dt_min.min(dt * 1e-6);
        ecfg.record_every = cfg.record_every << level;
        let probe = Probe::snapshots();
        let traj = if level == 0 {
            streamed(e, &ecfg, &probe, dir)?
        } else {
            evolve(e, &ecfg, &probe)?
        };
        if level == 0 {
            trajectory_summary(summary, &traj);
        }
        for snap in &traj.snapshots {
            let dev = snap.density().values().iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
            density_drift = density_drift.max(dev / m);
        }
        // modes were built in lattice order, skipping zero coefficients
        let t = traj.final_time();
        let phases = spec.equilibrium_phases(t);
        let mut mode = 0;
        for (i, a) in spec.coefficients().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                per_mode[i].push(0.0);
                continue;
            }
            let k = grid.lattice_index(&spec.lattice()[i]).ok_or_else(|| {
                CliError::Config(format!("lattice point {:?} is off the grid", spec.lattice()[i]))
            })?;
            let ratio = traj.final_state.modes()[mode].to_spectral().data()[k] / initial[mode].data()[k];
            per_mode[i].push((ratio - phases[i]).norm());
            mode += 1;
        }
    }
    let worst: Vec<f64> = (0..levels)
        .map(|l| per_mode.iter().map(|e| e[l]).fold(0.0, f64::max))
        .collect();
    let slope = log_log_slope(&dts, &worst).unwrap_or(f64::NAN);
    let mode_slopes: Vec<Option<f64>> = per_mode.iter().map(|e| log_log_slope(&dts, e)).collect();
    let at_roundoff = worst.iter().all(|&e| e < ROUNDOFF_FLOOR);
    summary.drift("density", density_drift);
    summary.slope("phase_error", slope);
    summary.detail("dts", &dts);
    summary.detail("phase_errors", &worst);
    summary.detail("phase_errors_per_mode", &per_mode);
    summary.detail("phase_error_slopes_per_mode", &mode_slopes);
    summary.detail("phase_errors_at_roundoff", at_roundoff);
    summary.detail("m", m);
    summary.invariant("density_stationary", density_drift < DENSITY_TOL);
    summary.invariant("phase_second_order", at_roundoff || (slope - 2.0).abs() <= 0.1);
    Ok(())
}

/// Random field with spectral coefficients `g_k/(1+|k|²)` for `max|k_i| ≤ k_max`,
/// scaled to `L²` norm `amplitude`.
fn random_field(grid: &TorusGrid, k_max: i64, amplitude: f64, draws: &[C64]) -> Result<Field, CliError> {
    let mut coefficients = vec![C64::new(0.0, 0.0); grid.len()];
    let mut used = 0;
    for (flat, c) in coefficients.iter_mut().enumerate() {
        let k = grid.lattice(flat);
        if k[..grid.dim()].iter().all(|v| v.abs() <= k_max) && !grid.is_nyquist(flat) {
            *c = draws[used % draws.len()] / (1.0 + grid.k_sq(flat));
            used += 1;
        }
    }
    let f = Field::spectral(grid, coefficients).map_err(CliError::config)?;
    let norm = f.l2_norm_sq().sqrt();
    if norm == 0.0 {
        return Ok(f);
    }
    Ok(f.scale(C64::new(amplitude / norm, 0.0)))
}

fn perturbed(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = grid_of(cfg)?;
    let spec = equilibrium_spec(cfg, &grid)?;
    let ps = cfg.perturbation.clone().unwrap_or_default();
    let per_field = (2 * ps.k_max as usize + 1).pow(grid.dim() as u32);
    let fields = spec.len() + ps.extra;
    let draws = gaussian_draws(per_field, fields, cfg.seed, cfg.stream_id);
    let mut pert = Perturbation::zero(&spec, ps.extra);
    if ps.shared_amplitude > 0.0 {
        for (z, d) in pert.shared.iter_mut().zip(&draws) {
            *z = random_field(&grid, ps.k_max, ps.shared_amplitude, d)?;
        }
    }
    for (z, d) in pert.extra.iter_mut().zip(&draws[spec.len()..]) {
        *z = random_field(&grid, ps.k_max, ps.amplitude, d)?;
    }
    let h1 = spec.build_equilibrium().map_err(CliError::config)?.h1_sq().sqrt();
    let ecfg = evolution_config(cfg, h1)?;
    write_diagnostics(dir, &[])?;
    let traj = evolve_perturbed(&pert, &spec, &ecfg)?;
    write_diagnostics(dir, &traj.combined.records)?;
    trajectory_summary(summary, &traj.combined);

    let m = spec.m();
    let cross = traj.modified.iter().all(|me| me.cross_bound_holds(m));
    let coercive = traj.modified.iter().all(|me| me.coercivity_holds());
    let ratio = traj
        .modified
        .iter()
        .map(|me| {
            let rhs = m.sqrt() * me.b.sqrt() * me.e.sqrt();
            if rhs > 0.0 {
                me.d.abs() / rhs
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    summary.drift("modified_energy", relative_drift(&traj.combined.records, |r| r.modified.map_or(0.0, |me| me.total)));
    summary.detail("m", m);
    summary.detail("max_cross_ratio", ratio);
    summary.detail("coordinates", pert.coordinates());
    summary.invariant("mass_conserved", summary.drifts["mass"] < MASS_TOL);
    summary.invariant("cross_bound", cross);
    summary.invariant("coercivity", coercive);
    Ok(())
}

fn blowup(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = grid_of(cfg)?;
    let init = initial_ensemble(cfg, &grid)?;
    let center = cfg.virial_center.clone().unwrap_or_else(|| box_center(&grid));
    let e0 = diagnostics::energy(&init, Sign::Focusing);
    let v0 = diagnostics::virial(&init, &center);
    let rate0 = diagnostics::virial_rate(&init, &center);
    let t_star = virial_blowup_time(v0.value, rate0, e0);
    let h1 = init.h1_sq().sqrt();

    let ev = cfg.evolution()?;
    let mut ecfg = EvolutionConfig::new(Sign::Focusing, ev.dt, ev.t_end);
    ecfg.dt_min = ev.dt_min.unwrap_or(1e-9_f64.min(ev.dt * 1e-6));
    ecfg.h1_ceiling = ev
        .h1_ceiling
        .unwrap_or(ev.h1_ceiling_factor.unwrap_or(DEFAULT_CEILING_FACTOR) * h1);
    ecfg.drift_tol = Some(ev.drift_tol.unwrap_or(DEFAULT_BLOWUP_DRIFT_TOL));
    ecfg.record_every = cfg.record_every;
    ecfg.validate(h1).map_err(CliError::config)?;

    summary.detail("energy0", e0);
    summary.detail("virial0", v0.value);
    summary.detail("virial_rate0", rate0);
    summary.detail("virial_support_ok", v0.support_ok);
    summary.detail("virial_time", t_star);
    summary.detail("criterion_applies", t_star.is_some());
    summary.detail("h1_ceiling", ecfg.h1_ceiling);

    let probe = Probe::default().with_virial(center);
    let traj = streamed(init, &ecfg, &probe, dir)?;
    trajectory_summary(summary, &traj);
    let blowup_time = match traj.termination {
        Termination::BlowUp { t } => Some(t),
        _ => None,
    };
    summary.detail("blowup_time", blowup_time);
    // a run that reaches the virial time without blowing up contradicts the criterion
    let consistent = match (t_star, traj.termination) {
        (Some(ts), Termination::Completed) => traj.final_time() < ts * (1.0 - 1e-12),
        (Some(ts), Termination::BlowUp { t }) => t < ts,
        _ => true,
    };
    summary.invariant("virial_criterion_consistent", consistent);
    summary.invariant("mass_conserved", summary.drifts["mass"] < MASS_TOL);
    Ok(())
}

fn sphere_lemma(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let s = cfg.sphere.clone().unwrap_or_default();
    write_diagnostics(dir, &[])?;
    let report = lemma_report(s.n_max, s.sample_points).map_err(CliError::config)?;
    write_json(&dir.join(SPHERE_FILE), &report)?;
    let spread = report.degrees.iter().map(|d| d.relative_spread).fold(0.0, f64::max);
    let mean = report.degrees.iter().map(|d| d.mean_relative_error).fold(0.0, f64::max);
    summary.drift("max_relative_spread", spread);
    summary.drift("max_mean_relative_error", mean);
    summary.drift("gram_defect", report.gram_defect);
    summary.invariant("kernel_constant", spread < SPHERE_TOL);
    summary.invariant("kernel_mean", mean < SPHERE_TOL);
    summary.invariant("gram_orthonormal", report.gram_defect < GRAM_TOL);
    summary.detail("sphere", &report);
    Ok(())
}

pub const COMPARE_FILE: &str = "compare.json";
pub const SPHERE_FILE: &str = "sphere_report.json";

/// Two-path comparison: density-matrix propagation against the ensemble's
/// covariance on the `k_cut` block, over time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompareReport {
    pub k_cut: usize,
    pub block_size: usize,
    pub times: Vec<f64>,
    pub frobenius: Vec<f64>,
    pub bures: Vec<f64>,
    pub max_frobenius: f64,
}

/// Runs the comparison; on failure the report holds the times compared so far.
pub fn compare(cfg: &RunConfig, dir: &Path) -> Result<CompareReport, (CliError, CompareReport)> {
    let mut report = CompareReport::default();
    let mut records = Vec::new();
    let result = compare_into(cfg, &mut report, &mut records);
    if let Err(e) = write_diagnostics(dir, &records) {
        return Err((e, report));
    }
    match result {
        Ok(()) => Ok(report),
        Err(e) => Err((e, report)),
    }
}

fn block_of(op: &OperatorState, basis: &Basis) -> Result<CovarianceMatrix, CliError> {
    let block = DMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        op.cov.entries()[(basis.indices()[i], basis.indices()[j])]
    });
    Ok(CovarianceMatrix::new(basis.clone(), block)?)
}

fn compare_into(
    cfg: &RunConfig,
    report: &mut CompareReport,
    records: &mut Vec<DiagnosticsRecord>,
) -> Result<(), CliError> {
    let c = cfg
        .compare
        .clone()
        .ok_or_else(|| CliError::Config("compare section missing".into()))?;
    let grid = grid_of(cfg)?;
    let mut ens = initial_ensemble(cfg, &grid)?;
    let sign = cfg.evolution()?.sign;
    let dt = cfg.evolution()?.dt;
    report.k_cut = c.k_cut;
    let gamma0 = covariance_on_basis(&ens, &Basis::full(&grid)).map_err(CliError::config)?;
    let mut op = OperatorState::new(gamma0).map_err(CliError::config)?;
    let chunk = c.operator_dt * c.steps_per_record as f64;

    let mut t = 0.0;
    for step in 0..=c.records {
        if step > 0 {
            op = evolve_operator(&op, c.operator_dt, c.steps_per_record, sign)?;
            let ecfg = EvolutionConfig::new(sign, dt, chunk);
            ens = evolve(ens, &ecfg, &Probe::default())?.final_state;
            t = step as f64 * chunk;
        }
        let ens_cov = covariance_from_modes(&ens, c.k_cut)?;
        let op_cov = block_of(&op, ens_cov.basis())?;
        report.block_size = ens_cov.dim();
        let frob = op_cov.frobenius_distance(&ens_cov)?;
        report.times.push(t);
        report.frobenius.push(frob);
        report.bures.push(bures_wasserstein(&op_cov, &ens_cov, c.bures_s)?);
        report.max_frobenius = report.max_frobenius.max(frob);
        records.push(diagnostics::record(&ens, t, sign, None));
    }
    Ok(())
}

fn scattering_probe(cfg: &RunConfig, dir: &Path, summary: &mut Summary) -> Result<(), CliError> {
    let grid = grid_of(cfg)?;
    let init = initial_ensemble(cfg, &grid)?;
    let ecfg = evolution_config(cfg, init.h1_sq().sqrt())?;
    let probe = Probe {
        virial_center: cfg.virial_center.clone(),
        keep_snapshots: true,
    };
    let (partial, result) = collected(init, &ecfg, &probe);
    let mut traj = match result {
        Ok(t) => t,
        Err(e) => {
            write_diagnostics(dir, &partial)?;
            return Err(e);
        }
    };
    let times = cfg.scattering.as_ref().map(|s| s.times.clone()).unwrap_or_default();
    let mut diffs = Vec::with_capacity(times.len());
    for &t in &times {
        let d = scatter_cauchy(&traj, t, 2.0 * t)?;
        let tol = 1e-9 * t.max(1.0);
        if let Some(rec) = traj.records.iter_mut().find(|r| (r.t - t).abs() <= tol) {
            rec.scatter_cauchy = Some(d);
        }
        diffs.push(d);
    }
    write_diagnostics(dir, &traj.records)?;
    trajectory_summary(summary, &traj);
    let acc = morawetz_accumulator(&traj.records);
    summary.detail("scatter_times", &times);
    summary.detail("scatter_cauchy", &diffs);
    summary.detail("morawetz_final", acc.last().copied().unwrap_or(0.0));
    summary.invariant("mass_conserved", summary.drifts["mass"] < MASS_TOL);
    summary.invariant("scatter_cauchy_decreasing", diffs.windows(2).all(|w| w[1] < w[0]));
    if cfg.snapshots {
        write_snapshots(dir, &traj.times, &traj.snapshots)?;
    }
    Ok(())
}
