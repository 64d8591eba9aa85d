//! Monitored quantities of ensemble trajectories.
//!
//! All functions are pure reductions over a state snapshot. Integrals over the
//! probability space become weighted sums over ensemble members.

use std::fmt::Write as _;

use crate::dynamics::{Sign, Trajectory};
use crate::ensemble::{Ensemble, ModeEnsemble};
use crate::equilibria::EquilibriumSpec;
use crate::error::{invalid, structural, Result};
use crate::field::{Field, ScalarField};
use crate::numerics::{cumulative_trapezoid, pairwise_sum};
use crate::C64;

/// One row of monitored quantities at time `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1_sq: f64,
    /// `∫ ρ(t,x)² dx`.
    pub density_l4: f64,
    pub virial: Option<f64>,
    pub virial_rate: Option<f64>,
    pub modified: Option<ModifiedEnergy>,
    pub scatter_cauchy: Option<f64>,
    /// Set when the virial support precondition failed for this snapshot.
    pub virial_support_violation: bool,
}

pub const CSV_HEADER: &str =
    "t,mass,energy,h1_sq,density_L4,virial,virial_rate,A,B,D,E,modE,scatter_cauchy";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl DiagnosticsRecord {
    /// CSV row matching [`CSV_HEADER`]; numbers use the shortest round-trip form.
    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        let m = self.modified;
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.mass,
            self.energy,
            self.h1_sq,
            self.density_l4,
            opt(self.virial),
            opt(self.virial_rate),
            opt(m.map(|m| m.a)),
            opt(m.map(|m| m.b)),
            opt(m.map(|m| m.d)),
            opt(m.map(|m| m.e)),
            opt(m.map(|m| m.total)),
            opt(self.scatter_cauchy),
        );
        row
    }

    /// `∫ X̄(−Δ)X`, the kinetic part without the mass term.
    pub fn kinetic(&self) -> f64 {
        self.h1_sq - self.mass
    }
}

/// Density entering the potential: the 2/3-rule filtered `ρ`.
pub fn potential_density<S: Ensemble>(state: &S) -> ScalarField {
    state.density().dealiased()
}

/// `¼ ∫ ρ (Pρ)` with `P` the dealiasing projection; equals `¼ ∫ ρ²` for
/// band-limited densities and is the invariant of the filtered flow.
pub fn potential_energy<S: Ensemble>(state: &S) -> f64 {
    0.25 * potential_density(state).integral_sq()
}

/// `ℰ = ½ Σ w ‖m‖²_{H¹} ± ¼ ∫ ρ²`.
pub fn energy<S: Ensemble>(state: &S, sign: Sign) -> f64 {
    0.5 * state.h1_sq() + sign.value() * potential_energy(state)
}

/// `∫ ρ² dx` of the unfiltered density.
pub fn density_l4<S: Ensemble>(state: &S) -> f64 {
    state.density().integral_sq()
}

/// The piecewise cutoff: `|y|²` on the unit ball, `e^{1−1/(|y|−2)²}` on
/// `1 ≤ |y| ≤ 2`, zero outside.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        r * r
    } else if r < 2.0 {
        (1.0 - 1.0 / (r - 2.0).powi(2)).exp()
    } else {
        0.0
    }
}

/// Radial derivative of [`cutoff`].
pub fn cutoff_derivative(r: f64) -> f64 {
    if r <= 1.0 {
        2.0 * r
    } else if r < 2.0 {
        cutoff(r) * 2.0 / (r - 2.0).powi(3)
    } else {
        0.0
    }
}

/// Virial radius used on a torus: a quarter of the period.
pub fn virial_radius(period: f64) -> f64 {
    period / 4.0
}

/// Virial value with its support precondition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Virial {
    pub value: f64,
    /// Fraction of the mass inside the ball of diameter half a period
    /// (`|x − c| ≤ R`), where the cutoff equals `|x − c|²`.
    pub inner_mass_fraction: f64,
    pub support_ok: bool,
}

const SUPPORT_FRACTION: f64 = 0.999;

/// `V = ∫ φ_R(x−c) ρ(x) dx` with `φ_R(x) = R² φ(x/R)`, `R = L/4`.
pub fn virial<S: Ensemble>(state: &S, center: &[f64]) -> Virial {
    let grid = state.grid();
    let rho = state.density();
    let r_cut = virial_radius(grid.period());
    let mut weighted = Vec::with_capacity(grid.len());
    let mut inside = Vec::with_capacity(grid.len());
    for (i, &p) in rho.values().iter().enumerate() {
        let d = grid.displacement(i, center);
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        weighted.push(r_cut * r_cut * cutoff(r / r_cut) * p);
        inside.push(if r <= r_cut { p } else { 0.0 });
    }
    let h = grid.cell_volume();
    let total = rho.integral();
    let frac = if total > 0.0 {
        pairwise_sum(&inside) * h / total
    } else {
        1.0
    };
    Virial {
        value: pairwise_sum(&weighted) * h,
        inner_mass_fraction: frac,
        support_ok: frac >= SUPPORT_FRACTION,
    }
}

/// `∂t V = 2 Im Σ w ∫ ∇φ_R · ū ∇u`.
pub fn virial_rate<S: Ensemble>(state: &S, center: &[f64]) -> f64 {
    let grid = state.grid();
    let dim = grid.dim();
    let r_cut = virial_radius(grid.period());
    // ∇φ_R(x) = R φ'(|x|/R) x/|x|
    let grad_phi: Vec<[f64; 3]> = (0..grid.len())
        .map(|i| {
            let d = grid.displacement(i, center);
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut g = [0.0; 3];
            if r > 0.0 {
                let radial = r_cut * cutoff_derivative(r / r_cut) / r;
                for a in 0..dim {
                    g[a] = radial * d[a];
                }
            }
            g
        })
        .collect();
    let h = grid.cell_volume();
    let terms: Vec<f64> = state
        .members()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let values = m.values();
            let mut acc = vec![0.0; grid.len()];
            for axis in 0..dim {
                let grad = m.gradient(axis);
                for (p, a) in acc.iter_mut().enumerate() {
                    *a += grad_phi[p][axis] * (values[p].conj() * grad.data()[p]).im;
                }
            }
            state.member_weight(i) * pairwise_sum(&acc) * h
        })
        .collect();
    2.0 * pairwise_sum(&terms)
}

/// Closed form `8 ∫ X̄(−Δ)X − 2d ∫ ρ²` for the focusing equation.
pub fn virial_acceleration(record: &DiagnosticsRecord, dim: usize) -> f64 {
    8.0 * record.kinetic() - 2.0 * dim as f64 * record.density_l4
}

/// Outcome of comparing finite-difference `V''` with its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct VirialCheck {
    pub times: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub max_relative_residual: f64,
    /// Largest `V'' − 16 ℰ(X₀)` over interior times.
    pub max_excess_over_bound: f64,
    pub bound: f64,
    pub bound_respected: bool,
}

/// Central-difference check of the focusing virial identity along `records`.
///
/// `bound_tol` is the absolute slack on `V'' ≤ 16 ℰ(X₀)`.
pub fn virial_second_derivative_check(
    records: &[DiagnosticsRecord],
    dim: usize,
    initial_energy: f64,
    bound_tol: f64,
) -> Result<VirialCheck> {
    if records.len() < 5 {
        return Err(invalid(format!(
            "virial check needs at least 5 recorded times, got {}",
            records.len()
        )));
    }
    if records.iter().any(|r| r.virial_support_violation) {
        return Err(invalid("virial support precondition violated (state not localized)"));
    }
    let v: Vec<f64> = records
        .iter()
        .map(|r| r.virial.ok_or_else(|| invalid("virial not recorded")))
        .collect::<Result<_>>()?;
    let bound = 16.0 * initial_energy;
    let mut times = Vec::new();
    let mut fd = Vec::new();
    let mut closed = Vec::new();
    let mut max_res: f64 = 0.0;
    let mut max_excess = f64::NEG_INFINITY;
    for i in 1..records.len() - 1 {
        let (t0, t1, t2) = (records[i - 1].t, records[i].t, records[i + 1].t);
        let (h0, h1) = (t1 - t0, t2 - t1);
        let d2 = 2.0 * (h0 * v[i + 1] - (h0 + h1) * v[i] + h1 * v[i - 1]) / (h0 * h1 * (h0 + h1));
        let cf = virial_acceleration(&records[i], dim);
        max_res = max_res.max((d2 - cf).abs() / cf.abs().max(f64::MIN_POSITIVE));
        max_excess = max_excess.max(d2 - bound);
        times.push(t1);
        fd.push(d2);
        closed.push(cf);
    }
    Ok(VirialCheck {
        times,
        finite_difference: fd,
        closed_form: closed,
        max_relative_residual: max_res,
        max_excess_over_bound: max_excess,
        bound,
        bound_respected: max_excess <= bound_tol,
    })
}

/// Earliest `T > 0` with `V(0) + V'(0) T + 8 ℰ T² = 0`, the time by which a
/// nonnegative virial must have broken down when `ℰ < 0`.
pub fn virial_blowup_time(v0: f64, rate0: f64, energy0: f64) -> Option<f64> {
    if energy0 >= 0.0 {
        return None;
    }
    let a = 8.0 * energy0;
    let disc = rate0 * rate0 - 4.0 * a * v0;
    if disc < 0.0 {
        return None;
    }
    // a < 0, so the positive root is (−b − √disc) / 2a.
    let t = (-rate0 - disc.sqrt()) / (2.0 * a);
    (t > 0.0).then_some(t)
}

/// Running `∫ dt ∫ dx ρ²` over the recorded times.
pub fn morawetz_accumulator(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.density_l4).collect();
    cumulative_trapezoid(&ts, &ys)
}

/// Free-flow pullback `S(−t) X(t)` applied to every member.
pub fn scattering_profile<S: Ensemble>(state: &S, t: f64) -> S {
    let mut out = state.clone();
    out.for_each_member(|m| m.apply_semigroup_in_place(-t, 0.0));
    out
}

/// Ensemble `H¹` distance `(Σ w ‖a_i − b_i‖²_{H¹})^{1/2}` between two states
/// carried by the same members.
pub fn ensemble_h1_distance<S: Ensemble>(a: &S, b: &S) -> Result<f64> {
    if a.len() != b.len() || a.grid() != b.grid() {
        return Err(structural("states do not share members"));
    }
    let terms: Vec<f64> = a
        .members()
        .iter()
        .zip(b.members())
        .enumerate()
        .map(|(i, (x, y))| Ok(a.member_weight(i) * x.sub(y)?.sobolev_norm_sq(1.0)))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms).sqrt())
}

/// `‖P(t1) − P(t2)‖` between scattering profiles of two snapshots.
pub fn scatter_cauchy_states<S: Ensemble>(a: &S, t1: f64, b: &S, t2: f64) -> Result<f64> {
    ensemble_h1_distance(&scattering_profile(a, t1), &scattering_profile(b, t2))
}

/// Cauchy difference of scattering profiles at two recorded snapshot times.
pub fn scatter_cauchy<S: Ensemble>(traj: &Trajectory<S>, t1: f64, t2: f64) -> Result<f64> {
    let a = traj
        .snapshot_at(t1)
        .ok_or_else(|| invalid(format!("no snapshot recorded at t = {t1}")))?;
    let b = traj
        .snapshot_at(t2)
        .ok_or_else(|| invalid(format!("no snapshot recorded at t = {t2}")))?;
    scatter_cauchy_states(a, t1, b, t2)
}

/// The modified energy terms of the perturbed equilibrium equation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModifiedEnergy {
    /// `½ ∫ Z̄ (m−Δ) Z`.
    pub a: f64,
    /// `¼ ∫ E(|Z|²)²`.
    pub b: f64,
    /// `∫ E(|Z|²) Re E(Z̄ Y)`.
    pub d: f64,
    /// `½ ∫ |Z|²`.
    pub e: f64,
    /// `A + B + D + 2mE`.
    pub total: f64,
}

impl ModifiedEnergy {
    /// `|D| ≤ √m B^{1/2} E^{1/2}` as literally stated.
    pub fn cross_bound_holds(&self, m: f64) -> bool {
        self.d.abs() <= m.sqrt() * self.b.sqrt() * self.e.sqrt()
    }

    /// `𝓔 ≥ A + ½B`.
    pub fn coercivity_holds(&self) -> bool {
        self.total >= self.a + 0.5 * self.b
    }
}

/// Modified energy of `Z` against the equilibrium `Y` at time `t`.
///
/// `z` holds one field per noise coordinate: the first `equilibrium.len()`
/// coordinates are shared with `Y`, any further ones are independent of it.
pub fn modified_energy(z: &[Field], equilibrium: &EquilibriumSpec, t: f64) -> Result<ModifiedEnergy> {
    if z.len() < equilibrium.len() {
        return Err(structural(format!(
            "{} perturbation coordinates for {} equilibrium coordinates",
            z.len(),
            equilibrium.len()
        )));
    }
    let grid = equilibrium.grid();
    if z.iter().any(|f| f.grid() != grid) {
        return Err(structural("perturbation lives on a different grid"));
    }
    let m = equilibrium.m();
    let y = equilibrium.coordinate_fields(t)?;
    let y_values: Vec<_> = y.iter().map(|f| f.values().into_owned()).collect();
    let z_values: Vec<_> = z.iter().map(|f| f.values().into_owned()).collect();

    let mut rho_z = vec![0.0; grid.len()];
    let mut cross = vec![C64::new(0.0, 0.0); grid.len()];
    for (n, zv) in z_values.iter().enumerate() {
        for (p, v) in zv.iter().enumerate() {
            rho_z[p] += v.norm_sqr();
            if let Some(yv) = y_values.get(n) {
                cross[p] += v.conj() * yv[p];
            }
        }
    }
    let h = grid.cell_volume();
    let a = 0.5 * pairwise_sum(&z.iter().map(|f| f.weighted_norm_sq(|k2| m + k2)).collect::<Vec<_>>());
    let b = 0.25 * pairwise_sum(&rho_z.iter().map(|r| r * r).collect::<Vec<_>>()) * h;
    let d = pairwise_sum(&rho_z.iter().zip(&cross).map(|(r, c)| r * c.re).collect::<Vec<_>>()) * h;
    let e = 0.5 * pairwise_sum(&rho_z) * h;
    Ok(ModifiedEnergy {
        a,
        b,
        d,
        e,
        total: a + b + d + 2.0 * m * e,
    })
}

/// Monitored quantities of one snapshot.
pub fn record<S: Ensemble>(state: &S, t: f64, sign: Sign, virial_center: Option<&[f64]>) -> DiagnosticsRecord {
    let rho = state.density();
    let h1_sq = state.h1_sq();
    let potential = 0.25 * rho.dealiased().integral_sq();
    let mut rec = DiagnosticsRecord {
        t,
        mass: state.mass(),
        energy: 0.5 * h1_sq + sign.value() * potential,
        h1_sq,
        density_l4: rho.integral_sq(),
        ..Default::default()
    };
    if let Some(c) = virial_center {
        let v = virial(state, c);
        rec.virial = Some(v.value);
        rec.virial_rate = Some(virial_rate(state, c));
        rec.virial_support_violation = !v.support_ok;
    }
    rec
}

/// Convenience: modified energy of a mode-represented `Z`.
pub fn modified_energy_of(z: &ModeEnsemble, equilibrium: &EquilibriumSpec, t: f64) -> Result<ModifiedEnergy> {
    if z.weights().iter().any(|w| *w != 1.0) {
        return Err(structural("perturbation modes must carry unit weights"));
    }
    modified_energy(z.modes(), equilibrium, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn energy_of_zero_state() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let e = ModeEnsemble::single(&g, 1.0, Field::zeros(&g)).unwrap();
        assert_eq!(energy(&e, Sign::Defocusing), 0.0);
        assert_eq!(energy(&ModeEnsemble::empty(&g), Sign::Focusing), 0.0);
    }

    #[test]
    fn energy_of_plane_wave() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let e = ModeEnsemble::single(&g, 1.0, Field::plane_wave(&g, &[1], C64::new(1.0, 0.0)).unwrap())
            .unwrap();
        assert_relative_eq!(energy(&e, Sign::Defocusing), 2.0 * PI + PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(energy(&e, Sign::Focusing), 2.0 * PI - PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn cutoff_properties() {
        assert_eq!(cutoff(0.5), 0.25);
        assert!((cutoff(1.0) - 1.0).abs() < 1e-15);
        assert!((cutoff(1.0 + 1e-12) - 1.0).abs() < 1e-10);
        assert_eq!(cutoff(2.0), 0.0);
        assert_eq!(cutoff(3.0), 0.0);
        // |φ'|² ≤ C φ with a finite C on a dense radial grid
        let mut c: f64 = 0.0;
        for i in 1..20_000 {
            let r = i as f64 * 1e-4;
            let phi = cutoff(r);
            if phi > 0.0 {
                c = c.max(cutoff_derivative(r).powi(2) / phi);
            }
        }
        assert!(c.is_finite() && c < 50.0, "C = {c}");
    }

    #[test]
    fn virial_of_gaussian_bump() {
        let g = TorusGrid::new(1, 256, 32.0).unwrap();
        let bump = Field::gaussian_bump(&g, 1.0, 1.0, &[16.0], &[0.0]);
        let e = ModeEnsemble::single(&g, 1.0, bump).unwrap();
        let v = virial(&e, &[16.0]);
        assert!((v.value - PI.sqrt() / 2.0).abs() < 1e-8, "{}", v.value);
        assert!(v.support_ok);
        assert!(virial_rate(&e, &[16.0]).abs() < 1e-14);
    }

    #[test]
    fn virial_translation_invariance() {
        let g = TorusGrid::new(2, 64, 16.0).unwrap();
        let a = Field::gaussian_bump(&g, 1.0, 0.8, &[8.0, 8.0], &[0.5, -0.3]);
        let b = Field::gaussian_bump(&g, 1.0, 0.8, &[3.0, 12.0], &[0.5, -0.3]);
        let ea = ModeEnsemble::single(&g, 1.0, a).unwrap();
        let eb = ModeEnsemble::single(&g, 1.0, b).unwrap();
        let va = virial(&ea, &[8.0, 8.0]).value;
        let vb = virial(&eb, &[3.0, 12.0]).value;
        assert_relative_eq!(va, vb, max_relative = 1e-12);
        let ra = virial_rate(&ea, &[8.0, 8.0]);
        let rb = virial_rate(&eb, &[3.0, 12.0]);
        assert!((ra - rb).abs() < 1e-12);
    }

    #[test]
    fn virial_rate_of_moving_bump() {
        // u = b(x−17) e^{ip(x−17)}: Im(ū u') = p b², so V' = 4p ∫ (x−16) b² = 4p · mass.
        let g = TorusGrid::new(1, 256, 32.0).unwrap();
        let p = 0.7;
        let bump = Field::gaussian_bump(&g, 1.0, 1.0, &[17.0], &[p]);
        let e = ModeEnsemble::single(&g, 1.0, bump.clone()).unwrap();
        let mass = bump.l2_norm_sq();
        let rate = virial_rate(&e, &[16.0]);
        assert_relative_eq!(rate, 4.0 * p * 1.0 * mass, max_relative = 1e-9);
    }

    #[test]
    fn blowup_time_root() {
        assert_eq!(virial_blowup_time(1.0, 0.0, 1.0), None);
        let t = virial_blowup_time(16.0 * PI, 0.0, -16.0 * PI).unwrap();
        assert_relative_eq!(t, (1.0f64 / 8.0).sqrt(), max_relative = 1e-14);
        let t = virial_blowup_time(2.0, -1.0, -0.5).unwrap();
        // 2 − t − 4t² = 0
        assert!((2.0 - t - 4.0 * t * t).abs() < 1e-12 && t > 0.0);
    }

    #[test]
    fn modified_energy_zero_and_orthogonal() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let eq = EquilibriumSpec::new(&g, vec![vec![1], vec![-2]], vec![C64::new(0.5, 0.0), C64::new(0.3, 0.2)])
            .unwrap();
        let zero = vec![Field::zeros(&g), Field::zeros(&g)];
        let me = modified_energy(&zero, &eq, 0.3).unwrap();
        assert_eq!(me, ModifiedEnergy::default());

        let extra = Field::gaussian_bump(&g, 0.1, 0.5, &[1.0], &[0.0]);
        let z = vec![Field::zeros(&g), Field::zeros(&g), extra];
        let me = modified_energy(&z, &eq, 0.3).unwrap();
        assert_eq!(me.d, 0.0);
        assert!(me.a > 0.0 && me.b > 0.0 && me.e > 0.0);
        assert!(me.coercivity_holds());
        assert!(me.cross_bound_holds(eq.m()));
        assert!(modified_energy(&z[..1], &eq, 0.0).is_err());
    }

    #[test]
    fn cross_term_constant_is_tight_only_up_to_two_root_two() {
        // Z aligned with Y in noise coordinates: |D| = 2√2 · √m B^½ E^½.
        let g = TorusGrid::standard(1, 32).unwrap();
        let eq = EquilibriumSpec::new(&g, vec![vec![1]], vec![C64::new(0.8, 0.0)]).unwrap();
        let eps = 0.01;
        let z = eq.coordinate_fields(0.0).unwrap().iter().map(|f| f.scale(C64::new(eps, 0.0))).collect::<Vec<_>>();
        let me = modified_energy(&z, &eq, 0.0).unwrap();
        let rhs = eq.m().sqrt() * me.b.sqrt() * me.e.sqrt();
        assert_relative_eq!(me.d.abs() / rhs, 2.0 * 2f64.sqrt(), max_relative = 1e-10);
        assert!(!me.cross_bound_holds(eq.m()));
        assert!(me.d.abs() <= 2.0 * 2f64.sqrt() * rhs * (1.0 + 1e-12));
    }

    #[test]
    fn csv_row_layout() {
        let rec = DiagnosticsRecord {
            t: 0.5,
            mass: 1.0,
            energy: 2.5,
            h1_sq: 3.0,
            density_l4: 0.1,
            virial: Some(1.25),
            ..Default::default()
        };
        assert_eq!(rec.to_csv_row(), "0.5,1,2.5,3,0.1,1.25,,,,,,,");
        assert_eq!(CSV_HEADER.split(',').count(), rec.to_csv_row().split(',').count());
    }

    #[test]
    fn virial_check_needs_samples() {
        let recs = vec![DiagnosticsRecord::default(); 4];
        assert!(virial_second_derivative_check(&recs, 2, -1.0, 1e-3).is_err());
    }
}
