//! Density-operator propagation `i ∂t γ = [−Δ ± ρ_γ, γ]` and the
//! Bures–Wasserstein distance between centered Gaussian laws.
//!
//! The multiplication operator by `ρ_γ` is assembled from the grid transform
//! of the filtered density, so on the full grid basis the operator path is the
//! same semi-discrete system the ensembles integrate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::covariance::{Basis, CovarianceMatrix};
use crate::dynamics::Sign;
use crate::error::{invalid, structural, Error, Result};
use crate::field::{Field, ScalarField};
use crate::C64;

/// Snapshot of the operator flow.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorState {
    pub cov: CovarianceMatrix,
    pub t: f64,
}

impl OperatorState {
    pub fn new(cov: CovarianceMatrix) -> Result<Self> {
        cov.check_psd()?;
        Ok(Self { cov, t: 0.0 })
    }

    pub fn basis(&self) -> &Basis {
        self.cov.basis()
    }

    pub fn density(&self) -> Result<ScalarField> {
        rho_from_cov(&self.cov)
    }
}

/// `ρ(x) = Σ_{k,k'} γ_{k,k'} e^{i(k−k')·x} / vol` on the grid points.
pub fn rho_from_cov(cov: &CovarianceMatrix) -> Result<ScalarField> {
    let defect = cov.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::LinearAlgebra(format!(
            "covariance is not Hermitian (relative defect {defect:e})"
        )));
    }
    let basis = cov.basis();
    let grid = basis.grid();
    let g = cov.entries();
    let mut acc = vec![C64::new(0.0, 0.0); grid.len()];
    let mut column = vec![C64::new(0.0, 0.0); grid.len()];
    for (j, &fj) in basis.indices().iter().enumerate() {
        column.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (i, &fi) in basis.indices().iter().enumerate() {
            column[fi] = g[(i, j)];
        }
        // Σ_k γ_{k,k'} e^{ik·x} / √vol
        grid.backward_in_place(&mut column);
        let mut conj_wave = vec![C64::new(0.0, 0.0); grid.len()];
        conj_wave[fj] = C64::new(1.0, 0.0);
        grid.backward_in_place(&mut conj_wave);
        for ((a, c), w) in acc.iter_mut().zip(&column).zip(&conj_wave) {
            *a += c * w.conj();
        }
    }
    let scale = acc.iter().map(|v| v.re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let imag = acc.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > 1e-10 * scale.max(1.0) {
        return Err(Error::LinearAlgebra(format!(
            "density has imaginary part {imag:e}"
        )));
    }
    ScalarField::new(grid, acc.into_iter().map(|v| v.re).collect())
}

/// `H = diag(|k|²) + s · M(Pρ)` with `M_{k,k'} = (Pρ)^(k−k') / √vol`.
fn hamiltonian(basis: &Basis, rho: &ScalarField, sign: Sign) -> DMatrix<C64> {
    let grid = basis.grid();
    let dim = grid.dim();
    let mut rho_hat: Vec<C64> = rho.dealiased().values().iter().map(|&v| C64::new(v, 0.0)).collect();
    grid.forward_in_place(&mut rho_hat);
    let scale = sign.value() / grid.volume().sqrt();
    let lattice = basis.lattice();
    let n = basis.len();
    DMatrix::from_fn(n, n, |i, j| {
        let diff: Vec<i64> = (0..dim).map(|a| lattice[i][a] - lattice[j][a]).collect();
        let mut h = rho_hat[grid.wrapped_index(&diff)] * scale;
        if i == j {
            h += basis.k_sq(i);
        }
        h
    })
}

fn rhs(basis: &Basis, gamma: &DMatrix<C64>, sign: Sign) -> Result<DMatrix<C64>> {
    let cov = CovarianceMatrix::new(basis.clone(), gamma.clone())?.symmetrized();
    let rho = rho_from_cov(&cov)?;
    let h = hamiltonian(basis, &rho, sign);
    let commutator = &h * gamma - gamma * &h;
    Ok(commutator * C64::new(0.0, -1.0))
}

/// Classical RK4 on `γ̇ = −i[H(γ), γ]`, re-symmetrized after every step.
pub fn evolve_operator(state: &OperatorState, dt: f64, n_steps: usize, sign: Sign) -> Result<OperatorState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    state.cov.check_psd()?;
    let basis = state.basis().clone();
    let trace0 = state.cov.trace();
    let mut gamma = state.cov.entries().clone();
    let mut t = state.t;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    for _ in 0..n_steps {
        let k1 = rhs(&basis, &gamma, sign)?;
        let k2 = rhs(&basis, &(&gamma + &k1 * half), sign)?;
        let k3 = rhs(&basis, &(&gamma + &k2 * half), sign)?;
        let k4 = rhs(&basis, &(&gamma + &k3 * full), sign)?;
        gamma += (k1 + k2 * two + k3 * two + k4) * sixth;
        gamma = (&gamma + gamma.adjoint()) * C64::new(0.5, 0.0);
        t += dt;
        let trace: f64 = gamma.diagonal().iter().map(|v| v.re).sum();
        let drift = (trace - trace0).abs() / trace0.abs().max(f64::MIN_POSITIVE);
        if !trace.is_finite() || (trace0 != 0.0 && drift > 1e-6) {
            return Err(Error::Integration {
                t,
                reason: format!("trace drift {drift:e}; retry with dt below {}", dt / 2.0),
            });
        }
    }
    Ok(OperatorState {
        cov: CovarianceMatrix::new(basis, gamma)?,
        t,
    })
}

/// Eigenvalues below `n ε λ_max` are treated as zero.
fn clip_tolerance(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(0.0, f64::max);
    values.len() as f64 * f64::EPSILON * top
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(m.clone());
    let tol = clip_tolerance(eig.eigenvalues.as_slice());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| {
        C64::new(if v > tol { v.sqrt() } else { 0.0 }, 0.0)
    }));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn orthonormalize(mut w: DVector<C64>, basis: &[DVector<C64>]) -> (f64, DVector<C64>) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let norm = w.norm();
    (norm, w / C64::new(norm.max(f64::MIN_POSITIVE), 0.0))
}

/// Extends an orthonormal family to a basis of `C^n`, each time adding the
/// standard vector with the largest residual.
fn complete(mut family: Vec<DVector<C64>>, n: usize) -> Vec<DVector<C64>> {
    while family.len() < n {
        let best = (0..n)
            .map(|e| orthonormalize(DVector::from_fn(n, |i, _| C64::new(f64::from(i == e), 0.0)), &family))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, w)| w);
        match best {
            Some(w) => family.push(w),
            None => break,
        }
    }
    family
}

/// Unitary polar factor `U` of `M = U |M|`.
///
/// Singular pairs come from the Hermitian dilation `[[0, M], [M*, 0]]`, whose
/// eigenvalues are `±σ`; gaps in `σ` rather than `σ²` keep small singular
/// vectors accurate. The null space is completed by Gram–Schmidt.
fn polar_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let mut dilation = DMatrix::<C64>::zeros(2 * n, 2 * n);
    dilation.view_mut((0, n), (n, n)).copy_from(m);
    dilation.view_mut((n, 0), (n, n)).copy_from(&m.adjoint());
    let eig = SymmetricEigen::new(dilation);
    let tol = clip_tolerance(eig.eigenvalues.as_slice());
    let mut order: Vec<usize> = (0..2 * n).filter(|&j| eig.eigenvalues[j] > tol).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for &j in order.iter().take(n) {
        let col = eig.eigenvectors.column(j);
        let (_, w) = orthonormalize(col.rows(0, n).into_owned(), &left);
        let (_, v) = orthonormalize(col.rows(n, n).into_owned(), &right);
        left.push(w);
        right.push(v);
    }
    let left = complete(left, n);
    let right = complete(right, n);
    let mut u = DMatrix::<C64>::zeros(n, n);
    for (w, v) in left.iter().zip(&right) {
        u += w * v.adjoint();
    }
    u
}

fn weighted(cov: &CovarianceMatrix, s: f64) -> DMatrix<C64> {
    let basis = cov.basis();
    let w: Vec<f64> = (0..basis.len()).map(|i| (1.0 + basis.k_sq(i)).powf(0.5 * s)).collect();
    DMatrix::from_fn(cov.dim(), cov.dim(), |i, j| cov.entries()[(i, j)] * (w[i] * w[j]))
}

/// `sqrt(tr A₁ + tr A₂ − 2 tr (A₁^{½} A₂ A₁^{½})^{½})` with
/// `A_i = W^{½} γ_i W^{½}` and `W = diag((1+|k|²)^s)`.
///
/// Evaluated as `‖A₁^{½} − A₂^{½} U‖_F` with `U` the unitary polar factor of
/// `A₂^{½} A₁^{½}`, which attains the minimum over unitaries and avoids the
/// cancellation of the trace form when the laws are close.
pub fn bures_wasserstein(a: &CovarianceMatrix, b: &CovarianceMatrix, s: f64) -> Result<f64> {
    if a.basis() != b.basis() {
        return Err(structural("covariances live on different bases"));
    }
    a.check_psd()?;
    b.check_psd()?;
    let ra = hermitian_sqrt(&weighted(&a.symmetrized(), s));
    let rb = hermitian_sqrt(&weighted(&b.symmetrized(), s));
    let u = polar_unitary(&(&rb * &ra));
    Ok((ra - rb * u).norm())
}

/// Rank-one covariance `|u⟩⟨u|` of a single field on a basis.
pub fn rank_one(basis: &Basis, field: &Field) -> Result<CovarianceMatrix> {
    if field.grid() != basis.grid() {
        return Err(structural("field and basis live on different grids"));
    }
    let c = field.coefficients();
    let v = DVector::from_iterator(basis.len(), basis.indices().iter().map(|&f| c[f]));
    CovarianceMatrix::new(basis.clone(), &v * v.adjoint())
}
