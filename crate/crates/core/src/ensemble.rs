//! Mode and Monte Carlo representations of a Gaussian random field.
//!
//! A [`ModeEnsemble`] stands for `X = Σ_n √λ_n g_n u_n` with independent
//! standard complex Gaussians `g_n`; expectations are exact sums over modes.
//! A [`MonteCarloEnsemble`] stores `J` realizations drawn from such a law and
//! replaces expectations by sample means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, structural, Result};
use crate::field::{Field, Repr, ScalarField};
use crate::grid::{GridSpec, TorusGrid};
use crate::numerics::{pairwise_sum, tree_reduce};
use crate::C64;

/// A weighted family of fields whose weighted intensities sum to the density.
///
/// For mode ensembles the weights are `λ_n`, for Monte Carlo ensembles `1/J`.
pub trait Ensemble: Clone + Send + Sync {
    fn grid(&self) -> &TorusGrid;
    fn members(&self) -> &[Field];
    fn members_mut(&mut self) -> &mut [Field];
    fn member_weight(&self, i: usize) -> f64;

    fn len(&self) -> usize {
        self.members().len()
    }

    fn is_empty(&self) -> bool {
        self.members().is_empty()
    }

    /// `Σ_i w_i |m_i(x)|²`, reduced in a fixed tree order.
    fn density(&self) -> ScalarField {
        let grid = self.grid();
        let members = self.members();
        let values: Vec<std::borrow::Cow<'_, [C64]>> =
            members.par_iter().map(|m| m.values()).collect();
        let leaf = |i: usize, acc: &mut [f64]| {
            let w = self.member_weight(i);
            for (a, v) in acc.iter_mut().zip(values[i].iter()) {
                *a += w * v.norm_sqr();
            }
        };
        let rho = tree_reduce(members.len(), grid.len(), &leaf);
        ScalarField::new(grid, rho).expect("density has grid length")
    }

    /// `Σ_i w_i ‖m_i‖²_{H^s}`.
    fn sobolev_sq(&self, s: f64) -> f64 {
        let terms: Vec<f64> = self
            .members()
            .par_iter()
            .enumerate()
            .map(|(i, m)| self.member_weight(i) * m.sobolev_norm_sq(s))
            .collect();
        pairwise_sum(&terms)
    }

    /// Ensemble mass `E ‖X‖²_{L²} = ∫ ρ`.
    fn mass(&self) -> f64 {
        self.sobolev_sq(0.0)
    }

    fn h1_sq(&self) -> f64 {
        self.sobolev_sq(1.0)
    }

    fn is_finite(&self) -> bool {
        self.members().iter().all(Field::is_finite)
    }

    /// Applies `f` to every member in parallel.
    fn for_each_member<F>(&mut self, f: F)
    where
        F: Fn(&mut Field) + Sync + Send,
    {
        self.members_mut().par_iter_mut().for_each(f);
    }
}

/// Exact finite-rank representation `X = Σ_n √λ_n g_n u_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnsemble {
    grid: TorusGrid,
    weights: Vec<f64>,
    modes: Vec<Field>,
}

impl ModeEnsemble {
    /// Builds an ensemble; Nyquist content of the modes is projected out.
    pub fn new(grid: &TorusGrid, weights: Vec<f64>, modes: Vec<Field>) -> Result<Self> {
        Self::checked(grid, weights, modes, true)
    }

    /// Validation shared by [`new`](Self::new) and deserialization, which
    /// keeps the stored data bit for bit.
    fn checked(grid: &TorusGrid, weights: Vec<f64>, modes: Vec<Field>, project: bool) -> Result<Self> {
        if weights.len() != modes.len() {
            return Err(structural(format!(
                "{} weights for {} modes",
                weights.len(),
                modes.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid(format!("mode weights must be finite and >= 0, got {w}")));
        }
        let mut modes = modes;
        for m in &mut modes {
            if m.grid() != grid {
                return Err(structural("mode lives on a different grid"));
            }
            if !m.is_finite() {
                return Err(invalid("mode contains non-finite values"));
            }
            if project && m.nyquist_energy() > 0.0 {
                m.zero_nyquist();
            }
        }
        Ok(Self {
            grid: grid.clone(),
            weights,
            modes,
        })
    }

    /// Internal constructor that skips validation (states produced by the
    /// integrator are admissible by construction).
    pub(crate) fn from_parts(grid: TorusGrid, weights: Vec<f64>, modes: Vec<Field>) -> Self {
        Self {
            grid,
            weights,
            modes,
        }
    }

    pub fn single(grid: &TorusGrid, weight: f64, mode: Field) -> Result<Self> {
        Self::new(grid, vec![weight], vec![mode])
    }

    pub fn empty(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            weights: Vec::new(),
            modes: Vec::new(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn modes(&self) -> &[Field] {
        &self.modes
    }

    /// `Σ_n λ_n |u_n(x)|²`.
    pub fn exact_density(&self) -> ScalarField {
        self.density()
    }

    /// `Tr((1−Δ)γ) = Σ_n λ_n ‖u_n‖²_{H¹}`.
    pub fn h1_trace(&self) -> f64 {
        self.h1_sq()
    }

    /// Draws `J` realizations `X_j = Σ_n √λ_n g_{n,j} u_n`.
    pub fn sample_gaussian(
        &self,
        realizations: usize,
        seed: u64,
        stream_id: u64,
    ) -> Result<MonteCarloEnsemble> {
        sample_gaussian(self, realizations, seed, stream_id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModeEnsembleDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModeEnsembleDoc = serde_json::from_str(text)?;
        doc.into_ensemble()
    }
}

impl Ensemble for ModeEnsemble {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn members(&self) -> &[Field] {
        &self.modes
    }

    fn members_mut(&mut self) -> &mut [Field] {
        &mut self.modes
    }

    fn member_weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// `J` sampled realizations with their recorded Gaussian draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEnsemble {
    grid: TorusGrid,
    realizations: Vec<Field>,
    draws: Vec<Vec<C64>>,
    seed: u64,
    stream_id: u64,
}

impl MonteCarloEnsemble {
    /// Wraps given realizations; no draws are recorded.
    pub fn from_realizations(grid: &TorusGrid, realizations: Vec<Field>) -> Result<Self> {
        if realizations.is_empty() {
            return Err(invalid("a Monte Carlo ensemble needs at least one realization"));
        }
        if realizations.iter().any(|r| r.grid() != grid) {
            return Err(structural("realization lives on a different grid"));
        }
        Ok(Self {
            grid: grid.clone(),
            realizations,
            draws: Vec::new(),
            seed: 0,
            stream_id: 0,
        })
    }

    pub fn realizations(&self) -> &[Field] {
        &self.realizations
    }

    /// `draws()[j][n]` is the Gaussian `g_{n,j}` used for realization `j`.
    pub fn draws(&self) -> &[Vec<C64>] {
        &self.draws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// `(1/J) Σ_j |X_j(x)|²`.
    pub fn empirical_density(&self) -> ScalarField {
        self.density()
    }
}

impl Ensemble for MonteCarloEnsemble {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn members(&self) -> &[Field] {
        &self.realizations
    }

    fn members_mut(&mut self) -> &mut [Field] {
        &mut self.realizations
    }

    fn member_weight(&self, _i: usize) -> f64 {
        1.0 / self.realizations.len() as f64
    }
}

/// Standard complex Gaussian `(ξ₁ + iξ₂)/√2` by Box–Muller, so `E|g|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * theta.cos(), r * theta.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random stream for realization `index` of `(seed, stream_id)`.
pub fn realization_rng(seed: u64, stream_id: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng.set_word_pos((index as u128) << 32);
    rng
}

/// Gaussian draws `g_{n,j}` for `n_modes` coordinates and `J` realizations.
pub fn gaussian_draws(n_modes: usize, realizations: usize, seed: u64, stream_id: u64) -> Vec<Vec<C64>> {
    (0..realizations as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = realization_rng(seed, stream_id, j);
            (0..n_modes).map(|_| complex_gaussian(&mut rng)).collect()
        })
        .collect()
}

pub fn sample_gaussian(
    modes: &ModeEnsemble,
    realizations: usize,
    seed: u64,
    stream_id: u64,
) -> Result<MonteCarloEnsemble> {
    if modes.modes.is_empty() {
        return Err(structural("cannot sample from an empty mode list"));
    }
    if realizations == 0 {
        return Err(invalid("need at least one realization"));
    }
    let draws = gaussian_draws(modes.modes.len(), realizations, seed, stream_id);
    realize(modes, draws, seed, stream_id)
}

/// Builds realizations from externally supplied draws (shared-noise coupling).
pub fn realize(
    modes: &ModeEnsemble,
    draws: Vec<Vec<C64>>,
    seed: u64,
    stream_id: u64,
) -> Result<MonteCarloEnsemble> {
    if draws.is_empty() {
        return Err(invalid("need at least one realization"));
    }
    if draws.iter().any(|d| d.len() != modes.modes.len()) {
        return Err(structural("draw vectors must have one entry per mode"));
    }
    let grid = &modes.grid;
    let values: Vec<std::borrow::Cow<'_, [C64]>> = modes.modes.iter().map(|m| m.values()).collect();
    let amps: Vec<f64> = modes.weights.iter().map(|w| w.sqrt()).collect();
    let realizations = draws
        .par_iter()
        .map(|g| {
            let mut data = vec![C64::new(0.0, 0.0); grid.len()];
            for ((u, a), gn) in values.iter().zip(&amps).zip(g) {
                let c = gn * *a;
                for (d, v) in data.iter_mut().zip(u.iter()) {
                    *d += c * v;
                }
            }
            Field::new(grid, data, Repr::Physical).expect("grid length")
        })
        .collect();
    Ok(MonteCarloEnsemble {
        grid: grid.clone(),
        realizations,
        draws,
        seed,
        stream_id,
    })
}

/// JSON document for a mode ensemble; complex arrays are interleaved re/im.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeEnsembleDoc {
    pub grid: GridSpec,
    pub weights: Vec<f64>,
    pub modes: Vec<FieldDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDoc {
    pub representation: Repr,
    pub data: Vec<f64>,
}

impl FieldDoc {
    pub fn from_field(f: &Field) -> Self {
        Self {
            representation: f.repr(),
            data: interleave(f.data()),
        }
    }

    pub fn into_field(self, grid: &TorusGrid) -> Result<Field> {
        Field::new(grid, deinterleave(&self.data)?, self.representation)
    }
}

pub fn interleave(values: &[C64]) -> Vec<f64> {
    values.iter().flat_map(|v| [v.re, v.im]).collect()
}

pub fn deinterleave(values: &[f64]) -> Result<Vec<C64>> {
    if values.len() % 2 != 0 {
        return Err(structural("interleaved complex array has odd length"));
    }
    Ok(values.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
}

impl From<&ModeEnsemble> for ModeEnsembleDoc {
    fn from(e: &ModeEnsemble) -> Self {
        Self {
            grid: e.grid.spec(),
            weights: e.weights.clone(),
            modes: e.modes.iter().map(FieldDoc::from_field).collect(),
        }
    }
}

impl ModeEnsembleDoc {
    pub fn into_ensemble(self) -> Result<ModeEnsemble> {
        let grid = self.grid.build()?;
        let modes = self
            .modes
            .into_iter()
            .map(|m| m.into_field(&grid))
            .collect::<Result<Vec<_>>>()?;
        ModeEnsemble::checked(&grid, self.weights, modes, false)
    }
}
