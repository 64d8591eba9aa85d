//! Complex fields on a [`TorusGrid`], in physical or spectral representation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, structural, Result};
use crate::grid::TorusGrid;
use crate::numerics::pairwise_sum;
use crate::C64;

/// Which representation a [`Field`] currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Physical,
    Spectral,
}

/// Complex-valued function on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    data: Vec<C64>,
    repr: Repr,
}

impl Field {
    pub fn new(grid: &TorusGrid, data: Vec<C64>, repr: Repr) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(structural(format!(
                "field has {} values but grid has {} points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            data,
            repr,
        })
    }

    pub fn physical(grid: &TorusGrid, values: Vec<C64>) -> Result<Self> {
        Self::new(grid, values, Repr::Physical)
    }

    pub fn spectral(grid: &TorusGrid, coefficients: Vec<C64>) -> Result<Self> {
        Self::new(grid, coefficients, Repr::Spectral)
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![C64::new(0.0, 0.0); grid.len()],
            repr: Repr::Physical,
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 3]) -> C64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self {
            grid: grid.clone(),
            data,
            repr: Repr::Physical,
        }
    }

    /// `amplitude · e^{ik·x}` for an integer lattice vector `k`.
    pub fn plane_wave(grid: &TorusGrid, lattice: &[i64], amplitude: C64) -> Result<Self> {
        let flat = grid
            .lattice_index(lattice)
            .ok_or_else(|| structural(format!("lattice vector {lattice:?} not on grid")))?;
        if grid.is_nyquist(flat) {
            return Err(invalid("plane waves on the Nyquist row are not admissible"));
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); grid.len()];
        coeffs[flat] = amplitude * grid.volume().sqrt();
        Ok(Self {
            grid: grid.clone(),
            data: coeffs,
            repr: Repr::Spectral,
        })
    }

    /// Gaussian bump `A e^{−|x−c|²/(2w²)} e^{i p·(x−c)}` with minimal-image distance.
    pub fn gaussian_bump(
        grid: &TorusGrid,
        amplitude: f64,
        width: f64,
        center: &[f64],
        momentum: &[f64],
    ) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let d = grid.displacement(i, center);
                let r2: f64 = d.iter().map(|v| v * v).sum();
                let phase: f64 = d
                    .iter()
                    .zip(momentum.iter().chain(std::iter::repeat(&0.0)))
                    .map(|(x, p)| x * p)
                    .sum();
                C64::from_polar(amplitude * (-r2 / (2.0 * width * width)).exp(), phase)
            })
            .collect();
        Self {
            grid: grid.clone(),
            data,
            repr: Repr::Physical,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    /// Raw storage in the current representation.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Forward transform. The field must be in physical representation.
    pub fn transform_forward(&self) -> Result<Field> {
        if self.repr != Repr::Physical {
            return Err(structural("forward transform requires a physical field"));
        }
        let mut out = self.clone();
        out.to_spectral_in_place();
        Ok(out)
    }

    /// Backward transform. The field must be in spectral representation.
    pub fn transform_backward(&self) -> Result<Field> {
        if self.repr != Repr::Spectral {
            return Err(structural("backward transform requires a spectral field"));
        }
        let mut out = self.clone();
        out.to_physical_in_place();
        Ok(out)
    }

    pub fn to_spectral_in_place(&mut self) {
        if self.repr == Repr::Physical {
            self.grid.forward_in_place(&mut self.data);
            self.repr = Repr::Spectral;
        }
    }

    pub fn to_physical_in_place(&mut self) {
        if self.repr == Repr::Spectral {
            self.grid.backward_in_place(&mut self.data);
            self.repr = Repr::Physical;
        }
    }

    /// Copy in spectral representation.
    pub fn to_spectral(&self) -> Field {
        let mut out = self.clone();
        out.to_spectral_in_place();
        out
    }

    /// Copy in physical representation.
    pub fn to_physical(&self) -> Field {
        let mut out = self.clone();
        out.to_physical_in_place();
        out
    }

    /// Spectral coefficients (transforming a copy if needed).
    pub fn coefficients(&self) -> std::borrow::Cow<'_, [C64]> {
        match self.repr {
            Repr::Spectral => std::borrow::Cow::Borrowed(&self.data),
            Repr::Physical => std::borrow::Cow::Owned(self.to_spectral().data),
        }
    }

    /// Physical values (transforming a copy if needed).
    pub fn values(&self) -> std::borrow::Cow<'_, [C64]> {
        match self.repr {
            Repr::Physical => std::borrow::Cow::Borrowed(&self.data),
            Repr::Spectral => std::borrow::Cow::Owned(self.to_physical().data),
        }
    }

    /// Sum of `|f̂_k|²` over the Nyquist rows.
    pub fn nyquist_energy(&self) -> f64 {
        let c = self.coefficients();
        (0..self.grid.len())
            .filter(|&i| self.grid.is_nyquist(i))
            .map(|i| c[i].norm_sqr())
            .sum()
    }

    /// Zeroes the Nyquist rows, making the field admissible.
    pub fn zero_nyquist(&mut self) {
        let back = self.repr == Repr::Physical;
        self.to_spectral_in_place();
        for i in 0..self.grid.len() {
            if self.grid.is_nyquist(i) {
                self.data[i] = C64::new(0.0, 0.0);
            }
        }
        if back {
            self.to_physical_in_place();
        }
    }

    /// `Σ_k (1+|k|²)^s |f̂_k|²`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|k2| (1.0 + k2).powf(s))
    }

    /// `Σ_k w(|k|²) |f̂_k|²`.
    pub fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let c = self.coefficients();
        let terms: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(i, v)| weight(self.grid.k_sq(i)) * v.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }

    /// Squared `L²` norm via the physical values and the cell volume.
    pub fn l2_norm_sq(&self) -> f64 {
        match self.repr {
            Repr::Physical => {
                let terms: Vec<f64> = self.data.iter().map(|v| v.norm_sqr()).collect();
                pairwise_sum(&terms) * self.grid.cell_volume()
            }
            Repr::Spectral => {
                let terms: Vec<f64> = self.data.iter().map(|v| v.norm_sqr()).collect();
                pairwise_sum(&terms)
            }
        }
    }

    /// `⟨self, other⟩ = ∫ conj(self) other`, computed on coefficients.
    pub fn inner(&self, other: &Field) -> C64 {
        let a = self.coefficients();
        let b = other.coefficients();
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    /// Multiplies coefficient `k` by `e^{−it(|k|² + mass_shift)}`.
    pub fn apply_semigroup(&self, t: f64, mass_shift: f64) -> Field {
        let mut out = self.clone();
        out.apply_semigroup_in_place(t, mass_shift);
        out
    }

    /// In-place free flow; the field is left in its original representation.
    pub fn apply_semigroup_in_place(&mut self, t: f64, mass_shift: f64) {
        if t == 0.0 {
            return;
        }
        let back = self.repr == Repr::Physical;
        self.to_spectral_in_place();
        let k_sq = self.grid.k_sq_table();
        for (v, k2) in self.data.iter_mut().zip(k_sq) {
            *v *= C64::from_polar(1.0, -t * (k2 + mass_shift));
        }
        if back {
            self.to_physical_in_place();
        }
    }

    /// `self − other`, in the representation of `self`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(other, |a, b| a - b)
    }

    /// `self + other`, in the representation of `self`.
    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(other, |a, b| a + b)
    }

    fn combine(&self, other: &Field, op: impl Fn(C64, C64) -> C64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(structural("fields live on different grids"));
        }
        let rhs = match self.repr {
            Repr::Physical => other.values(),
            Repr::Spectral => other.coefficients(),
        };
        let data = self.data.iter().zip(rhs.iter()).map(|(a, b)| op(*a, *b)).collect();
        Ok(Field {
            grid: self.grid.clone(),
            data,
            repr: self.repr,
        })
    }

    pub fn scale(&self, factor: C64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Spectral gradient component `∂_axis f`, physical representation.
    pub fn gradient(&self, axis: usize) -> Field {
        let mut out = self.to_spectral();
        for (i, v) in out.data.iter_mut().enumerate() {
            let k = self.grid.wavenumber(i)[axis];
            let k = if self.grid.lattice(i)[axis] == -self.grid.nyquist() {
                0.0
            } else {
                k
            };
            *v *= C64::new(0.0, k);
        }
        out.to_physical_in_place();
        out
    }
}

/// Real-valued function on a grid, always in physical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(structural(format!(
                "scalar field has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ f dx` by the rectangle rule (spectrally exact for band-limited data).
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// `∫ f² dx`.
    pub fn integral_sq(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        pairwise_sum(&sq) * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Applies the 2/3-rule filter; exact for fields already band-limited.
    pub fn dealiased(&self) -> ScalarField {
        let mut data: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.grid.forward_in_place(&mut data);
        for (v, keep) in data.iter_mut().zip(self.grid.dealias_mask()) {
            if !*keep {
                *v = C64::new(0.0, 0.0);
            }
        }
        self.grid.backward_in_place(&mut data);
        ScalarField {
            grid: self.grid.clone(),
            values: data.into_iter().map(|v| v.re).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn t1() -> TorusGrid {
        TorusGrid::standard(1, 16).unwrap()
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = t1();
        let f = Field::from_fn(&g, |_| C64::new(1.0, 0.0));
        let c = f.transform_forward().unwrap();
        assert_relative_eq!(c.data()[0].re, (2.0 * PI).sqrt(), epsilon = 1e-13);
        for v in &c.data()[1..] {
            assert!(v.norm() < 1e-13);
        }
    }

    #[test]
    fn pure_mode_maps_to_single_coefficient() {
        let g = t1();
        let f = Field::from_fn(&g, |x| C64::from_polar(1.0, x[0]));
        let c = f.transform_forward().unwrap();
        let k1 = g.lattice_index(&[1]).unwrap();
        assert_relative_eq!(c.data()[k1].norm(), (2.0 * PI).sqrt(), epsilon = 1e-13);
        let rest: f64 = c
            .data()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k1)
            .map(|(_, v)| v.norm())
            .sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn transform_requires_matching_representation() {
        let g = t1();
        let f = Field::zeros(&g);
        let s = f.transform_forward().unwrap();
        assert!(s.transform_forward().is_err());
        assert!(f.transform_backward().is_err());
        assert!(Field::physical(&g, vec![C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let g = t1();
        let one = Field::from_fn(&g, |_| C64::new(1.0, 0.0));
        assert_relative_eq!(one.sobolev_norm_sq(1.0), 2.0 * PI, max_relative = 1e-13);
        let wave = Field::from_fn(&g, |x| C64::from_polar(1.0, x[0]));
        assert_relative_eq!(wave.sobolev_norm_sq(1.0), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(wave.sobolev_norm_sq(0.0), wave.l2_norm_sq(), max_relative = 1e-13);
    }

    #[test]
    fn semigroup_examples() {
        let g = t1();
        let wave = Field::from_fn(&g, |x| C64::from_polar(1.0, x[0]));
        let out = wave.apply_semigroup(PI, 0.0);
        for (a, b) in out.data().iter().zip(wave.data()) {
            assert!((a + b).norm() < 1e-12);
        }
        assert_eq!(wave.apply_semigroup(0.0, 3.0), wave);

        let m = 0.7;
        let out = wave.apply_semigroup(1.0, m).to_spectral();
        let k1 = g.lattice_index(&[1]).unwrap();
        let phase = out.data()[k1] / (2.0 * PI).sqrt();
        let expected = C64::from_polar(1.0, -(1.0 + m));
        assert!((phase - expected).norm() < 1e-13);
    }

    #[test]
    fn nyquist_plane_wave_rejected() {
        let g = t1();
        assert!(Field::plane_wave(&g, &[-8], C64::new(1.0, 0.0)).is_err());
        let mut f = Field::from_fn(&g, |x| C64::new((8.0 * x[0]).cos(), 0.0));
        assert!(f.nyquist_energy() > 1.0);
        f.zero_nyquist();
        assert!(f.nyquist_energy() < 1e-20);
    }

    #[test]
    fn gradient_of_plane_wave() {
        let g = TorusGrid::new(2, 16, 4.0).unwrap();
        let f = Field::plane_wave(&g, &[1, 2], C64::new(1.0, 0.0)).unwrap();
        let gx = f.gradient(1);
        let expected = f.to_physical().scale(C64::new(0.0, 2.0 * 2.0 * PI / 4.0));
        for (a, b) in gx.data().iter().zip(expected.data()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dealias_keeps_band_limited() {
        let g = t1();
        let s = ScalarField::new(
            &g,
            (0..16).map(|i| 1.0 + (i as f64 * 2.0 * PI / 16.0 * 5.0).cos()).collect(),
        )
        .unwrap();
        assert!(s.dealiased().sup_distance(&s) < 1e-13);
        let s6 = ScalarField::new(
            &g,
            (0..16).map(|i| (i as f64 * 2.0 * PI / 16.0 * 6.0).cos()).collect(),
        )
        .unwrap();
        assert!(s6.dealiased().values().iter().all(|v| v.abs() < 1e-13));
    }
}
