//! Periodic grids on the torus `[0, L)^d` and their Fourier lattices.
//!
//! Coefficients follow the unitary convention
//!
//! ```text
//! f̂_k = cellVolume · Σ_x f(x) e^{−ik·x} / √volume,    f(x) = Σ_k f̂_k e^{ik·x} / √volume
//! ```
//!
//! so that `Σ_x |f(x)|² cellVolume = Σ_k |f̂_k|²` with unit weights.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::C64;

/// Plain description of a grid, used for (de)serialization and configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_dim: usize,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    2.0 * PI
}

impl GridSpec {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.points_per_dim, self.period)
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k_sq: Vec<f64>,
    dealias: Vec<bool>,
}

/// Discretized torus `T^d` with `n` points per axis and period `L`.
///
/// Cloning is cheap; the transform plans are shared.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    period: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_dim: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(structural(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(structural(format!(
                "points per dimension must be a power of two >= 8, got {points_per_dim}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(structural(format!("period must be positive, got {period}")));
        }
        let mut planner = FftPlanner::new();
        let mut grid = Self {
            dim,
            n: points_per_dim,
            period,
            plans: Arc::new(Plans {
                forward: planner.plan_fft_forward(points_per_dim),
                inverse: planner.plan_fft_inverse(points_per_dim),
                k_sq: Vec::new(),
                dealias: Vec::new(),
            }),
        };
        let k_sq = (0..grid.len())
            .map(|i| grid.wavenumber(i).iter().map(|k| k * k).sum())
            .collect();
        let cut = (points_per_dim / 3) as i64;
        let dealias = (0..grid.len())
            .map(|i| grid.lattice(i)[..dim].iter().all(|k| k.abs() <= cut))
            .collect();
        let plans = Arc::get_mut(&mut grid.plans).expect("fresh grid is uniquely owned");
        plans.k_sq = k_sq;
        plans.dealias = dealias;
        Ok(grid)
    }

    /// `T^d` with the default period `2π`.
    pub fn standard(dim: usize, points_per_dim: usize) -> Result<Self> {
        Self::new(dim, points_per_dim, 2.0 * PI)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            points_per_dim: self.n,
            period: self.period,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Lattice-to-wavenumber scale `2π / L`.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest representable lattice index magnitude, `n / 2`.
    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Per-axis array indices of a flat index (last axis fastest).
    pub fn axis_indices(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    fn signed(&self, i: usize) -> i64 {
        let half = self.n / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Integer lattice vector of a flat spectral index, in FFT order.
    pub fn lattice(&self, flat: usize) -> [i64; 3] {
        let idx = self.axis_indices(flat);
        let mut out = [0i64; 3];
        for axis in 0..self.dim {
            out[axis] = self.signed(idx[axis]);
        }
        out
    }

    /// Flat index of a lattice vector, or `None` if it is not representable
    /// (any component outside `[−n/2, n/2)`).
    pub fn lattice_index(&self, lattice: &[i64]) -> Option<usize> {
        if lattice.len() != self.dim {
            return None;
        }
        let half = self.nyquist();
        let mut flat = 0usize;
        for &k in lattice {
            if k < -half || k >= half {
                return None;
            }
            let i = if k < 0 { k + self.n as i64 } else { k } as usize;
            flat = flat * self.n + i;
        }
        Some(flat)
    }

    /// Flat index of a lattice vector after periodic wrapping.
    pub fn wrapped_index(&self, lattice: &[i64]) -> usize {
        let n = self.n as i64;
        lattice
            .iter()
            .take(self.dim)
            .fold(0usize, |acc, &k| acc * self.n + k.rem_euclid(n) as usize)
    }

    /// Physical wavenumber vector of a flat spectral index.
    pub fn wavenumber(&self, flat: usize) -> [f64; 3] {
        let unit = self.wavenumber_unit();
        let l = self.lattice(flat);
        [l[0] as f64 * unit, l[1] as f64 * unit, l[2] as f64 * unit]
    }

    /// `|k|²` of a flat spectral index.
    pub fn k_sq(&self, flat: usize) -> f64 {
        self.plans.k_sq[flat]
    }

    /// `|k|²` for every spectral index, in storage order.
    pub fn k_sq_table(&self) -> &[f64] {
        &self.plans.k_sq
    }

    /// True when any axis sits on the Nyquist row `−n/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let l = self.lattice(flat);
        l[..self.dim].iter().any(|&k| k == -self.nyquist())
    }

    /// Coordinates of a grid point, `x_j = j · spacing`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.axis_indices(flat);
        let h = self.spacing();
        let mut out = [0.0; 3];
        for axis in 0..self.dim {
            out[axis] = idx[axis] as f64 * h;
        }
        out
    }

    /// Minimal-image displacement `x − center`, each component in `[−L/2, L/2)`.
    pub fn displacement(&self, flat: usize, center: &[f64]) -> [f64; 3] {
        let x = self.position(flat);
        let mut out = [0.0; 3];
        for axis in 0..self.dim {
            let c = center.get(axis).copied().unwrap_or(0.0);
            let d = x[axis] - c;
            out[axis] = d - self.period * (d / self.period + 0.5).floor();
        }
        out
    }

    /// Unnormalized in-place DFT over all axes (`sign = −1` forward).
    fn dft(&self, data: &mut [C64], inverse: bool) {
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        let n = self.n;
        let total = data.len();
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Physical values to unitary coefficients, in place.
    pub fn forward_in_place(&self, data: &mut [C64]) {
        self.dft(data, false);
        let scale = self.volume().sqrt() / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Unitary coefficients to physical values, in place.
    pub fn backward_in_place(&self, data: &mut [C64]) {
        self.dft(data, true);
        let scale = 1.0 / self.volume().sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Keep only spectral indices with every `|k_axis| ≤ n/3` (2/3 rule).
    pub fn dealias_mask(&self) -> &[bool] {
        &self.plans.dealias
    }
}
