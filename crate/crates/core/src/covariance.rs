//! Covariance operators `γ` in a truncated Fourier basis.
//!
//! With unitary coefficients, `γ_{k,k'} = E( X̂(k) conj(X̂(k')) )`, the trace
//! of `γ` equals `∫ ρ_γ` and its diagonal carries the Fourier-multiplier part.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{interleave, deinterleave, Ensemble, ModeEnsemble, MonteCarloEnsemble};
use crate::error::{structural, Error, Result};
use crate::grid::{GridSpec, TorusGrid};
use crate::C64;

/// An ordered list of lattice vectors together with their grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    grid: TorusGrid,
    lattice: Vec<[i64; 3]>,
    flat: Vec<usize>,
}

impl Basis {
    /// All lattice vectors with `max_axis |k| ≤ k_cut`.
    pub fn truncated(grid: &TorusGrid, k_cut: usize) -> Result<Self> {
        let k_cut = k_cut as i64;
        if k_cut >= grid.nyquist() {
            return Err(structural(format!(
                "k_cut = {k_cut} reaches the grid Nyquist index {}",
                grid.nyquist()
            )));
        }
        let flat: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.lattice(i)[..grid.dim()].iter().all(|k| k.abs() <= k_cut))
            .collect();
        Ok(Self::from_flat(grid, flat))
    }

    /// Default truncation: one third of the Nyquist index.
    pub fn default_for(grid: &TorusGrid) -> Result<Self> {
        Self::truncated(grid, (grid.nyquist() / 3) as usize)
    }

    /// Every wavenumber of the grid, Nyquist rows included.
    pub fn full(grid: &TorusGrid) -> Self {
        Self::from_flat(grid, (0..grid.len()).collect())
    }

    /// Basis from explicit lattice vectors.
    pub fn from_lattice(grid: &TorusGrid, lattice: &[Vec<i64>]) -> Result<Self> {
        let flat = lattice
            .iter()
            .map(|l| {
                grid.lattice_index(l)
                    .ok_or_else(|| structural(format!("lattice vector {l:?} not on grid")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_flat(grid, flat))
    }

    fn from_flat(grid: &TorusGrid, flat: Vec<usize>) -> Self {
        let lattice = flat.iter().map(|&i| grid.lattice(i)).collect();
        Self {
            grid: grid.clone(),
            lattice,
            flat,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn lattice(&self) -> &[[i64; 3]] {
        &self.lattice
    }

    /// Grid spectral indices of the basis vectors.
    pub fn indices(&self) -> &[usize] {
        &self.flat
    }

    pub fn k_sq(&self, i: usize) -> f64 {
        self.grid.k_sq(self.flat[i])
    }

    pub fn position_of(&self, lattice: &[i64]) -> Option<usize> {
        let flat = self.grid.lattice_index(lattice)?;
        self.flat.iter().position(|&f| f == flat)
    }
}

/// Hermitian positive-semidefinite matrix `γ_{k,k'}` on a [`Basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    basis: Basis,
    entries: DMatrix<C64>,
}

impl CovarianceMatrix {
    pub fn new(basis: Basis, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != basis.len() || entries.ncols() != basis.len() {
            return Err(structural(format!(
                "{}x{} entries for a basis of size {}",
                entries.nrows(),
                entries.ncols(),
                basis.len()
            )));
        }
        Ok(Self { basis, entries })
    }

    pub fn zeros(basis: Basis) -> Self {
        let n = basis.len();
        Self {
            basis,
            entries: DMatrix::zeros(n, n),
        }
    }

    /// Fourier multiplier: diagonal entries in basis order.
    pub fn diagonal(basis: Basis, diag: &[f64]) -> Result<Self> {
        if diag.len() != basis.len() {
            return Err(structural("diagonal length differs from basis size"));
        }
        let d = nalgebra::DVector::from_iterator(diag.len(), diag.iter().map(|&v| C64::new(v, 0.0)));
        Ok(Self {
            basis,
            entries: DMatrix::from_diagonal(&d),
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn grid(&self) -> &TorusGrid {
        self.basis.grid()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|v| v.re).sum()
    }

    /// `Σ_k (1+|k|²)^s γ_{kk}`, i.e. `Tr((1−Δ)^s γ)` on the basis.
    pub fn sobolev_trace(&self, s: f64) -> f64 {
        (0..self.dim())
            .map(|i| (1.0 + self.basis.k_sq(i)).powf(s) * self.entries[(i, i)].re)
            .sum()
    }

    pub fn frobenius_distance(&self, other: &CovarianceMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(structural("covariances live on different bases"));
        }
        Ok((&self.entries - &other.entries).norm())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Largest `|γ − γ*|` entry relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let diff = &self.entries - self.entries.adjoint();
        diff.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
    }

    /// Hermitian part `(γ + γ*)/2`.
    pub fn symmetrized(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = self.symmetrized().entries;
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Checks Hermiticity to `1e−10` and `λ_min ≥ −1e−10 λ_max`.
    pub fn check_psd(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::LinearAlgebra(format!(
                "covariance is not Hermitian (relative defect {defect:e})"
            )));
        }
        let ev = self.eigenvalues();
        if let (Some(&lo), Some(&hi)) = (ev.first(), ev.last()) {
            if lo < -1e-10 * hi.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::LinearAlgebra(format!(
                    "covariance has negative eigenvalue {lo:e} (largest {hi:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CovarianceDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CovarianceDoc = serde_json::from_str(text)?;
        doc.into_covariance()
    }
}

/// Outer-product accumulation `Σ_i w_i ĉ_i(k) conj(ĉ_i(k'))` on a basis.
fn accumulate<E: Ensemble>(ensemble: &E, basis: &Basis) -> Result<DMatrix<C64>> {
    if ensemble.grid() != basis.grid() {
        return Err(structural("ensemble and basis live on different grids"));
    }
    let n = basis.len();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (i, m) in ensemble.members().iter().enumerate() {
        let w = ensemble.member_weight(i);
        let c = m.coefficients();
        let v = nalgebra::DVector::from_iterator(n, basis.indices().iter().map(|&f| c[f]));
        out += (&v * v.adjoint()) * C64::new(w, 0.0);
    }
    Ok(out)
}

/// `γ_{k,k'} = Σ_n λ_n û_n(k) conj(û_n(k'))` for `max |k| ≤ k_cut`.
pub fn covariance_from_modes(modes: &ModeEnsemble, k_cut: usize) -> Result<CovarianceMatrix> {
    let basis = Basis::truncated(modes.grid(), k_cut)?;
    covariance_on_basis(modes, &basis)
}

/// Covariance of any ensemble restricted to `basis`.
pub fn covariance_on_basis<E: Ensemble>(ensemble: &E, basis: &Basis) -> Result<CovarianceMatrix> {
    let entries = accumulate(ensemble, basis)?;
    CovarianceMatrix::new(basis.clone(), entries)
}

/// `(1/J) Σ_j X̂_j(k) conj(X̂_j(k'))`.
pub fn empirical_covariance(mc: &MonteCarloEnsemble, k_cut: usize) -> Result<CovarianceMatrix> {
    let basis = Basis::truncated(mc.grid(), k_cut)?;
    covariance_on_basis(mc, &basis)
}

/// Cross-covariance `(1/J) Σ_j X̂_j(k) conj(Ŷ_j(k'))` of two coupled ensembles.
pub fn empirical_cross_covariance(
    a: &MonteCarloEnsemble,
    b: &MonteCarloEnsemble,
    basis: &Basis,
) -> Result<DMatrix<C64>> {
    if a.len() != b.len() {
        return Err(structural("coupled ensembles need the same number of realizations"));
    }
    if a.grid() != basis.grid() || b.grid() != basis.grid() {
        return Err(structural("ensembles and basis live on different grids"));
    }
    let n = basis.len();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (x, y) in a.realizations().iter().zip(b.realizations()) {
        let cx = x.coefficients();
        let cy = y.coefficients();
        let vx = nalgebra::DVector::from_iterator(n, basis.indices().iter().map(|&f| cx[f]));
        let vy = nalgebra::DVector::from_iterator(n, basis.indices().iter().map(|&f| cy[f]));
        out += &vx * vy.adjoint();
    }
    Ok(out / C64::new(a.len() as f64, 0.0))
}

/// JSON document: grid, basis lattice vectors, rows as interleaved re/im.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceDoc {
    pub grid: GridSpec,
    pub basis: Vec<Vec<i64>>,
    pub entries: Vec<Vec<f64>>,
}

impl From<&CovarianceMatrix> for CovarianceDoc {
    fn from(c: &CovarianceMatrix) -> Self {
        let dim = c.grid().dim();
        Self {
            grid: c.grid().spec(),
            basis: c.basis.lattice.iter().map(|l| l[..dim].to_vec()).collect(),
            entries: (0..c.dim())
                .map(|i| interleave(&c.entries.row(i).iter().copied().collect::<Vec<_>>()))
                .collect(),
        }
    }
}

impl CovarianceDoc {
    pub fn into_covariance(self) -> Result<CovarianceMatrix> {
        let grid = self.grid.build()?;
        let basis = Basis::from_lattice(&grid, &self.basis)?;
        let n = basis.len();
        if self.entries.len() != n {
            return Err(structural("covariance rows differ from basis size"));
        }
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (i, row) in self.entries.iter().enumerate() {
            let row = deinterleave(row)?;
            if row.len() != n {
                return Err(structural("covariance row has wrong length"));
            }
            for (j, v) in row.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        CovarianceMatrix::new(basis, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rank_one_plane_wave() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let u = Field::plane_wave(&g, &[1], C64::new(1.0 / (2.0 * PI).sqrt(), 0.0)).unwrap();
        let e = ModeEnsemble::single(&g, 2.0, u).unwrap();
        let cov = covariance_from_modes(&e, 3).unwrap();
        let i1 = cov.basis().position_of(&[1]).unwrap();
        for i in 0..cov.dim() {
            for j in 0..cov.dim() {
                let expected = if i == i1 && j == i1 { 2.0 } else { 0.0 };
                assert!((cov.entries()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn k_cut_guard() {
        let g = TorusGrid::standard(1, 16).unwrap();
        assert!(Basis::truncated(&g, 8).is_err());
        assert!(Basis::truncated(&g, 7).is_ok());
        assert_eq!(Basis::default_for(&g).unwrap().len(), 5);
    }

    #[test]
    fn zero_weights_give_zero_matrix() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let u = Field::gaussian_bump(&g, 1.0, 0.5, &[3.0], &[0.0]);
        let e = ModeEnsemble::single(&g, 0.0, u).unwrap();
        assert_eq!(covariance_from_modes(&e, 4).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn trace_equals_integrated_density_when_band_limited() {
        let g = TorusGrid::standard(2, 16).unwrap();
        let a = Field::plane_wave(&g, &[1, -2], C64::new(0.4, 0.2)).unwrap();
        let b = Field::plane_wave(&g, &[0, 3], C64::new(-0.1, 0.7))
            .unwrap()
            .add(&Field::plane_wave(&g, &[2, 2], C64::new(0.5, 0.0)).unwrap())
            .unwrap();
        let e = ModeEnsemble::new(&g, vec![1.5, 0.25], vec![a, b]).unwrap();
        let cov = covariance_from_modes(&e, 4).unwrap();
        assert_relative_eq!(cov.trace(), e.exact_density().integral(), max_relative = 1e-12);
        cov.check_psd().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let g = TorusGrid::standard(1, 16).unwrap();
        let u = Field::gaussian_bump(&g, 1.0, 0.7, &[2.0], &[1.0]);
        let e = ModeEnsemble::single(&g, 0.3, u).unwrap();
        let cov = covariance_from_modes(&e, 2).unwrap();
        let text = cov.to_json().unwrap();
        let back = CovarianceMatrix::from_json(&text).unwrap();
        assert_eq!(back, cov);
    }
}
