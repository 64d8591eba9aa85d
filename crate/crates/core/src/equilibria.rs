//! Torus equilibria `Y(t) = Σ_k a_k e^{−it(|k|²+m)} g_k e^{ik·x}`.
//!
//! Every plane wave has unit modulus, so the density of `Y` is the constant
//! `m = Σ|a_k|²` and each mode only picks up the dressed phase.

use serde::{Deserialize, Serialize};

use crate::ensemble::ModeEnsemble;
use crate::error::{invalid, structural, Result};
use crate::field::Field;
use crate::grid::{GridSpec, TorusGrid};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSpec {
    grid: TorusGrid,
    lattice: Vec<Vec<i64>>,
    coefficients: Vec<C64>,
    m: f64,
    m2: f64,
}

impl EquilibriumSpec {
    /// Coefficients `a_k` on the listed lattice vectors; `m` and `m2` are derived.
    pub fn new(grid: &TorusGrid, lattice: Vec<Vec<i64>>, coefficients: Vec<C64>) -> Result<Self> {
        if lattice.len() != coefficients.len() {
            return Err(structural("one coefficient per lattice vector is required"));
        }
        let cut = grid.nyquist() / 3;
        for (l, a) in lattice.iter().zip(&coefficients) {
            if l.len() != grid.dim() {
                return Err(structural(format!("lattice vector {l:?} has wrong dimension")));
            }
            if l.iter().any(|k| k.abs() > cut) {
                return Err(invalid(format!(
                    "lattice vector {l:?} lies beyond Nyquist/3 = {cut} (aliasing guard)"
                )));
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(invalid("equilibrium coefficients must be finite"));
            }
        }
        for i in 0..lattice.len() {
            if lattice[..i].contains(&lattice[i]) {
                return Err(invalid(format!("lattice vector {:?} listed twice", lattice[i])));
            }
        }
        let (m, m2) = moments(grid, &lattice, &coefficients);
        Ok(Self {
            grid: grid.clone(),
            lattice,
            coefficients,
            m,
            m2,
        })
    }

    /// Spec without any coefficients (`Y = 0`).
    pub fn empty(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            lattice: Vec::new(),
            coefficients: Vec::new(),
            m: 0.0,
            m2: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &[Vec<i64>] {
        &self.lattice
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Mass shift `m = Σ_k |a_k|²`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `m2 = Σ_k |k|² |a_k|²`.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// `Σ_k (1+|k|²)|a_k|²`.
    pub fn h1_weight(&self) -> f64 {
        self.m + self.m2
    }

    /// `|k|²` of entry `i` in physical units.
    pub fn k_sq(&self, i: usize) -> f64 {
        let unit = self.grid.wavenumber_unit();
        self.lattice[i].iter().map(|&k| (k as f64 * unit).powi(2)).sum()
    }

    /// Recomputes `m` and `m2` and compares them to the stored values.
    pub fn check_moments(&self) -> Result<()> {
        let (m, m2) = moments(&self.grid, &self.lattice, &self.coefficients);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if close(m, self.m) && close(m2, self.m2) {
            Ok(())
        } else {
            Err(invalid(format!(
                "stored moments (m = {}, m2 = {}) disagree with coefficients (m = {m}, m2 = {m2})",
                self.m, self.m2
            )))
        }
    }

    /// One mode per nonzero `a_k`: weight `|a_k|²`, mode `e^{iθ_k} e^{ik·x}`.
    pub fn build_equilibrium(&self) -> Result<ModeEnsemble> {
        let mut weights = Vec::new();
        let mut modes = Vec::new();
        for (l, a) in self.lattice.iter().zip(&self.coefficients) {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let phase = a / a.norm();
            weights.push(w);
            modes.push(Field::plane_wave(&self.grid, l, phase)?);
        }
        ModeEnsemble::new(&self.grid, weights, modes)
    }

    /// `e^{−it(|k|²+m)}` for every listed lattice vector.
    pub fn equilibrium_phases(&self, t: f64) -> Vec<C64> {
        (0..self.len())
            .map(|i| C64::from_polar(1.0, -t * (self.k_sq(i) + self.m)))
            .collect()
    }

    /// Noise-linear coordinate fields `y_k(t) = a_k e^{ik·x} e^{−it(|k|²+m)}`.
    pub fn coordinate_fields(&self, t: f64) -> Result<Vec<Field>> {
        let phases = self.equilibrium_phases(t);
        self.lattice
            .iter()
            .zip(&self.coefficients)
            .zip(phases)
            .map(|((l, a), p)| Field::plane_wave(&self.grid, l, a * p))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&EquilibriumDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EquilibriumDoc = serde_json::from_str(text)?;
        doc.into_spec()
    }
}

fn moments(grid: &TorusGrid, lattice: &[Vec<i64>], coefficients: &[C64]) -> (f64, f64) {
    let unit = grid.wavenumber_unit();
    let mut m = 0.0;
    let mut m2 = 0.0;
    for (l, a) in lattice.iter().zip(coefficients) {
        let k2: f64 = l.iter().map(|&k| (k as f64 * unit).powi(2)).sum();
        m += a.norm_sqr();
        m2 += k2 * a.norm_sqr();
    }
    (m, m2)
}

/// JSON form: lattice points with `[re, im]` coefficient pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumDoc {
    pub grid: GridSpec,
    pub lattice: Vec<Vec<i64>>,
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
}

impl From<&EquilibriumSpec> for EquilibriumDoc {
    fn from(s: &EquilibriumSpec) -> Self {
        Self {
            grid: s.grid.spec(),
            lattice: s.lattice.clone(),
            coefficients: s.coefficients.iter().map(|c| [c.re, c.im]).collect(),
            m: Some(s.m),
            m2: Some(s.m2),
        }
    }
}

impl EquilibriumDoc {
    pub fn into_spec(self) -> Result<EquilibriumSpec> {
        let grid = self.grid.build()?;
        let coefficients = self.coefficients.iter().map(|p| C64::new(p[0], p[1])).collect();
        let mut spec = EquilibriumSpec::new(&grid, self.lattice, coefficients)?;
        if let Some(m) = self.m {
            spec.m = m;
        }
        if let Some(m2) = self.m2 {
            spec.m2 = m2;
        }
        spec.check_moments()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Ensemble;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_density() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let spec = EquilibriumSpec::new(&g, vec![vec![1]], vec![C64::new(1.0, 0.0)]).unwrap();
        assert_eq!(spec.m(), 1.0);
        let e = spec.build_equilibrium().unwrap();
        assert!(e.exact_density().values().iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn decaying_coefficients_density() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let ks: Vec<i64> = (-4..=4).collect();
        let coeffs: Vec<C64> = ks
            .iter()
            .map(|&k| C64::new(1.0 / (1.0 + (k * k) as f64), 0.0))
            .collect();
        let spec = EquilibriumSpec::new(&g, ks.iter().map(|&k| vec![k]).collect(), coeffs).unwrap();
        // direct sum of 1/(1+k²)² for |k| ≤ 4
        let mut m = 0.0;
        for k in -4i32..=4 {
            m += 1.0 / (1.0 + (k * k) as f64).powi(2);
        }
        assert!((spec.m() - m).abs() < 1e-15);
        let rho = spec.build_equilibrium().unwrap().exact_density();
        assert!(rho.values().iter().all(|v| (v - m).abs() < 1e-13));
    }

    #[test]
    fn empty_support() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let spec = EquilibriumSpec::new(&g, vec![], vec![]).unwrap();
        assert_eq!(spec.m(), 0.0);
        let e = spec.build_equilibrium().unwrap();
        assert!(e.is_empty());
        assert!(e.exact_density().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn aliasing_guard() {
        let g = TorusGrid::standard(1, 32).unwrap();
        assert!(EquilibriumSpec::new(&g, vec![vec![5]], vec![C64::new(1.0, 0.0)]).is_ok());
        assert!(EquilibriumSpec::new(&g, vec![vec![6]], vec![C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn phases() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let spec = EquilibriumSpec::new(&g, vec![vec![1], vec![-2]], vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)])
            .unwrap();
        assert!(spec.equilibrium_phases(0.0).iter().all(|p| *p == C64::new(1.0, 0.0)));
        for t in [0.3, 1.7, -4.0] {
            assert!(spec.equilibrium_phases(t).iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));
        }
        let one = EquilibriumSpec::new(&g, vec![vec![1]], vec![C64::new(1.0, 0.0)]).unwrap();
        assert!((one.equilibrium_phases(PI)[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_moment_check() {
        let g = TorusGrid::standard(2, 16).unwrap();
        let spec = EquilibriumSpec::new(
            &g,
            vec![vec![1, 0], vec![-1, 2]],
            vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5)],
        )
        .unwrap();
        let back = EquilibriumSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
        let mut doc = EquilibriumDoc::from(&spec);
        doc.m = Some(spec.m() * 1.01);
        assert!(doc.into_spec().is_err());
    }
}
