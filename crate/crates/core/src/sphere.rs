//! Spherical harmonics on S² and the constancy of `K_n(x) = Σ_k |e_{n,k}(x)|²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Highest degree the Legendre recurrences are trusted for.
pub const MAX_DEGREE: usize = 32;

/// Points on S² with positive quadrature weights summing to `4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSample {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereSample {
    pub fn new(points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(invalid("need one positive weight per point and at least one point"));
        }
        for p in &points {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if (r - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("point {p:?} is not on the unit sphere")));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("quadrature weights must be positive"));
        }
        Ok(Self { points, weights })
    }

    /// Fibonacci lattice with equal weights.
    pub fn fibonacci(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("need at least one point"));
        }
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        Self::new(points, vec![4.0 * PI / n as f64; n])
    }

    /// Gauss–Legendre in `cos θ` times the uniform rule in `φ`; exact for
    /// polynomials of degree `≤ min(2 n_theta − 1, n_phi − 1)`.
    pub fn gauss_product(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid("quadrature sizes must be positive"));
        }
        let (nodes, gw) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (z, w) in nodes.iter().zip(&gw) {
            let r = (1.0 - z * z).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                points.push([r * phi.cos(), r * phi.sin(), *z]);
                weights.push(w * 2.0 * PI / n_phi as f64);
            }
        }
        Self::new(points, weights)
    }

    /// Product rule integrating every product of two degree-`n_max` harmonics.
    pub fn for_degree(n_max: usize) -> Result<Self> {
        Self::gauss_product(n_max + 1, 2 * n_max + 2)
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// `N_n = C(n+d, d) − C(n+d−2, d)`, the number of degree-`n` harmonics on `S^d`.
pub fn harmonic_dimension(n: i64, d: i64) -> Result<u64> {
    if n < 0 || d < 0 {
        return Err(invalid(format!("harmonic_dimension needs n, d >= 0, got n = {n}, d = {d}")));
    }
    if d < 2 {
        return Err(invalid(format!("sphere dimension must be >= 2, got {d}")));
    }
    if n == 0 {
        return Ok(1);
    }
    Ok(binomial(n + d, d) - binomial(n + d - 2, d))
}

/// `n(n+d−1)`, the eigenvalue of `−Δ_{S^d}` on degree-`n` harmonics.
pub fn laplace_eigenvalue(n: i64, d: i64) -> Result<i64> {
    if n < 0 || d < 0 {
        return Err(invalid(format!("laplace_eigenvalue needs n, d >= 0, got n = {n}, d = {d}")));
    }
    Ok(n * (n + d - 1))
}

/// Fully normalized `P̄_n^m(cos θ)` for `0 ≤ m ≤ n`, so that
/// `P̄_n^m(cos θ) e^{imφ}` is orthonormal on S².
fn normalized_legendre(n: usize, z: f64) -> Vec<f64> {
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut out = vec![0.0; n + 1];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=n {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        if m == n {
            out[m] = pmm;
            break;
        }
        let mut p_prev = pmm;
        let mut p = (2.0 * m as f64 + 3.0).sqrt() * z * pmm;
        for l in (m + 2)..=n {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let next = a * (z * p - b * p_prev);
            p_prev = p;
            p = next;
        }
        out[m] = p;
    }
    out
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE {
        return Err(invalid(format!("degree {n} exceeds the supported maximum {MAX_DEGREE}")));
    }
    Ok(())
}

/// Real orthonormal degree-`n` harmonics at every point: `2n+1` rows.
pub fn real_harmonics(n: usize, sample: &SphereSample) -> Result<Vec<Vec<f64>>> {
    check_degree(n)?;
    let mut rows = vec![Vec::with_capacity(sample.len()); 2 * n + 1];
    for p in sample.points() {
        let phi = p[1].atan2(p[0]);
        let leg = normalized_legendre(n, p[2].clamp(-1.0, 1.0));
        rows[0].push(leg[0]);
        for m in 1..=n {
            let c = 2f64.sqrt() * leg[m];
            rows[2 * m - 1].push(c * (m as f64 * phi).cos());
            rows[2 * m].push(c * (m as f64 * phi).sin());
        }
    }
    Ok(rows)
}

/// `K_n(x) = Σ_k |e_{n,k}(x)|²` at every sample point; only `d = 2` is supported.
pub fn kernel_sum(n: usize, sample: &SphereSample, d: usize) -> Result<Vec<f64>> {
    if d != 2 {
        return Err(Error::Unsupported(format!("explicit harmonics only on S², got d = {d}")));
    }
    let rows = real_harmonics(n, sample)?;
    Ok((0..sample.len()).map(|j| rows.iter().map(|r| r[j] * r[j]).sum()).collect())
}

/// `(max − min) / mean` of a sample.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        hi - lo
    } else {
        (hi - lo) / mean.abs()
    }
}

/// `E|Y(x)|² = Σ_n |a_n|² K_n(x)` for coefficients indexed by degree; checks
/// constancy to `1e−9` relative and returns the constant `m`.
pub fn sphere_equilibrium_density(coefficients: &[C64], sample: &SphereSample) -> Result<f64> {
    let mut rho = vec![0.0; sample.len()];
    for (n, a) in coefficients.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let k = kernel_sum(n, sample, 2)?;
        rho.iter_mut().zip(&k).for_each(|(r, v)| *r += w * v);
    }
    let spread = relative_spread(&rho);
    if spread > 1e-9 {
        return Err(Error::LinearAlgebra(format!(
            "equilibrium density is not constant (relative spread {spread:e})"
        )));
    }
    Ok(rho.iter().sum::<f64>() / rho.len() as f64)
}

/// Largest entry of `G − I` with `G_{ij} = Σ_x w(x) e_i(x) e_j(x)` over all
/// harmonics of degree `≤ n_max`.
pub fn gram_defect(n_max: usize, sample: &SphereSample) -> Result<f64> {
    let mut rows = Vec::new();
    for n in 0..=n_max {
        rows.extend(real_harmonics(n, sample)?);
    }
    let w = sample.weights();
    let mut worst: f64 = 0.0;
    for i in 0..rows.len() {
        for j in 0..=i {
            let g: f64 = rows[i].iter().zip(&rows[j]).zip(w).map(|((a, b), w)| a * b * w).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    Ok(worst)
}

/// Per-degree line of the constancy report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub n: usize,
    pub dimension: u64,
    pub laplace_eigenvalue: i64,
    pub mean: f64,
    pub expected: f64,
    pub relative_spread: f64,
    pub mean_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereReport {
    pub n_max: usize,
    pub sample_points: usize,
    pub gram_defect: f64,
    pub degrees: Vec<DegreeReport>,
}

impl SphereReport {
    pub fn passes(&self, tol: f64, gram_tol: f64) -> bool {
        self.gram_defect <= gram_tol
            && self
                .degrees
                .iter()
                .all(|d| d.relative_spread < tol && d.mean_relative_error < tol)
    }
}

/// Constancy spreads over a Fibonacci sample and `N_n/(4π)` comparisons for `n ≤ n_max`.
pub fn lemma_report(n_max: usize, sample_points: usize) -> Result<SphereReport> {
    check_degree(n_max)?;
    let sample = SphereSample::fibonacci(sample_points)?;
    let gram = gram_defect(n_max, &SphereSample::for_degree(n_max)?)?;
    let degrees = (0..=n_max)
        .map(|n| {
            let k = kernel_sum(n, &sample, 2)?;
            let mean = k.iter().sum::<f64>() / k.len() as f64;
            let dimension = harmonic_dimension(n as i64, 2)?;
            let expected = dimension as f64 / (4.0 * PI);
            Ok(DegreeReport {
                n,
                dimension,
                laplace_eigenvalue: laplace_eigenvalue(n as i64, 2)?,
                mean,
                expected,
                relative_spread: relative_spread(&k),
                mean_relative_error: (mean - expected).abs() / expected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SphereReport {
        n_max,
        sample_points,
        gram_defect: gram,
        degrees,
    })
}
