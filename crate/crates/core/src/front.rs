//! Front deformation δ(x̃, t) under `δ_t + α̃·∇δ = div(β̃∇δ)` on a periodic
//! transverse box, its mollification, decay fits, and the leading convected
//! heat kernels of the low-frequency Green function.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::enskog::ViscosityBlocks;
use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec, C64, I};
use crate::profile::linear_fit;

/// Periodic grid on `[0, W₁) × … `, one or two transverse dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseGrid {
    pub n: Vec<usize>,
    pub width: Vec<f64>,
}

impl TransverseGrid {
    pub fn new(n: Vec<usize>, width: Vec<f64>) -> Result<Self> {
        if n.is_empty() || n.len() > 2 || n.len() != width.len() {
            return Err(Error::InvalidInput("transverse grid must have one or two dimensions".into()));
        }
        if n.iter().any(|&k| k < 2) || width.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidInput("transverse grid needs ≥ 2 points and positive widths".into()));
        }
        Ok(Self { n, width })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.n.iter().zip(&self.width).map(|(n, w)| w / *n as f64).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Row-major multi-index of flat index `i`.
    fn index(&self, i: usize) -> Vec<usize> {
        if self.dim() == 1 {
            vec![i]
        } else {
            vec![i / self.n[1], i % self.n[1]]
        }
    }

    /// Physical coordinates of node `i`.
    pub fn coords(&self, i: usize) -> Vec<f64> {
        let h = self.spacing();
        self.index(i).iter().zip(&h).map(|(k, h)| *k as f64 * h).collect()
    }

    /// Angular wavenumbers of flat spectral index `i` (FFT ordering).
    pub fn wavenumbers(&self, i: usize) -> Vec<f64> {
        self.index(i)
            .iter()
            .zip(self.n.iter().zip(&self.width))
            .map(|(&k, (&n, &w))| {
                let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * PI * signed / w
            })
            .collect()
    }

    /// Smallest periodic displacement of node `i` from the origin.
    fn periodic_offset(&self, i: usize) -> Vec<f64> {
        self.coords(i)
            .iter()
            .zip(&self.width)
            .map(|(x, w)| if *x > 0.5 * w { x - w } else { *x })
            .collect()
    }

    /// Minimum width `40·sqrt(β_max·T)` that keeps wrap-around negligible.
    pub fn required_width(beta_max: f64, t_final: f64) -> f64 {
        40.0 * (beta_max * t_final).sqrt()
    }
}

fn fft_nd(data: &mut [C64], n: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    if n.len() == 1 {
        let fft = if inverse { planner.plan_fft_inverse(n[0]) } else { planner.plan_fft_forward(n[0]) };
        fft.process(data);
        return;
    }
    let (rows, cols) = (n[0], n[1]);
    let row_fft = if inverse { planner.plan_fft_inverse(cols) } else { planner.plan_fft_forward(cols) };
    for r in 0..rows {
        row_fft.process(&mut data[r * cols..(r + 1) * cols]);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(rows) } else { planner.plan_fft_forward(rows) };
    let mut column = vec![C64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
}

impl FrontCoefficients {
    pub fn beta_matrix(&self) -> RMat {
        let m = self.alpha.len();
        RMat::from_fn(m, m, |i, j| self.beta[i][j])
    }

    fn quad(&self, k: &[f64]) -> f64 {
        let mut q = 0.0;
        for (i, ki) in k.iter().enumerate() {
            for (j, kj) in k.iter().enumerate() {
                q += ki * self.beta[i][j] * kj;
            }
        }
        q
    }

    pub fn beta_positive(&self) -> bool {
        let b = self.beta_matrix();
        let sym = (&b + b.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().all(|&e| e > 0.0)
    }
}

/// Front deformation samples with their discrete Fourier coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct FrontField {
    pub grid: TransverseGrid,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub spectral: Vec<C64>,
    pub t: f64,
    pub coeffs: FrontCoefficients,
}

impl FrontField {
    pub fn from_values(grid: TransverseGrid, values: Vec<f64>, coeffs: FrontCoefficients) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("{} values on a grid of {}", values.len(), grid.len())));
        }
        if coeffs.alpha.len() != grid.dim() || coeffs.beta.len() != grid.dim() || coeffs.beta.iter().any(|r| r.len() != grid.dim()) {
            return Err(Error::InvalidInput("front coefficients do not match the grid dimension".into()));
        }
        let mut spectral: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft_nd(&mut spectral, &grid.n, false);
        Ok(Self { grid, values, spectral, t: 0.0, coeffs })
    }

    /// Samples a function of the transverse coordinates.
    pub fn from_fn(grid: TransverseGrid, coeffs: FrontCoefficients, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::from_values(grid, values, coeffs)
    }

    fn refresh_values(&mut self) {
        let mut buf = self.spectral.clone();
        fft_nd(&mut buf, &self.grid.n, true);
        let inv = 1.0 / self.grid.len() as f64;
        self.values = buf.iter().map(|z| z.re * inv).collect();
    }

    /// Physical values recomputed from the spectral representation.
    pub fn round_trip(&self) -> Vec<f64> {
        let mut c = self.clone();
        c.refresh_values();
        c.values
    }

    /// `Σ δ·ΔV`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.derivative_norm(&vec![0; self.grid.dim()])
    }

    /// Spectral `‖∂^α δ‖_{L²}` for the multi-index `alpha`.
    pub fn derivative_norm(&self, alpha: &[usize]) -> f64 {
        let vol = self.grid.cell_volume();
        let total = self.grid.len() as f64;
        let sum: f64 = self
            .spectral
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let k = self.grid.wavenumbers(i);
                let factor: f64 = k.iter().zip(alpha).map(|(kj, &a)| kj.abs().powi(a as i32)).product();
                (z.norm() * factor).powi(2)
            })
            .sum();
        (sum * vol / total).sqrt()
    }

    /// `‖∇δ‖_{L²}`.
    pub fn gradient_norm(&self) -> f64 {
        (0..self.grid.dim())
            .map(|j| {
                let mut a = vec![0; self.grid.dim()];
                a[j] = 1;
                self.derivative_norm(&a).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Value-weighted mean position along transverse axis `j` (first moment
    /// over mass), unwrapped about the domain centre.
    pub fn centroid(&self, j: usize) -> f64 {
        let m: f64 = self.values.iter().sum();
        let s: f64 = self.values.iter().enumerate().map(|(i, v)| v * self.grid.coords(i)[j]).sum();
        s / m
    }

    pub fn difference(&self, other: &FrontField) -> Result<FrontField> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("front fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        let spectral = self.spectral.iter().zip(&other.spectral).map(|(a, b)| a - b).collect();
        Ok(FrontField { grid: self.grid.clone(), values, spectral, t: self.t, coeffs: self.coeffs.clone() })
    }

    /// Interpolated value at an arbitrary transverse point (periodic linear).
    pub fn value_at(&self, y: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let n = &self.grid.n;
        let locate = |x: f64, j: usize| {
            let w = self.grid.width[j];
            let r = x.rem_euclid(w) / h[j];
            let i0 = r.floor() as usize % n[j];
            (i0, (i0 + 1) % n[j], r - r.floor())
        };
        if self.grid.dim() == 1 {
            let (a, b, f) = locate(y[0], 0);
            self.values[a] * (1.0 - f) + self.values[b] * f
        } else {
            let (a0, a1, fa) = locate(y[0], 0);
            let (b0, b1, fb) = locate(y[1], 1);
            let v = |i: usize, j: usize| self.values[i * n[1] + j];
            (1.0 - fa) * ((1.0 - fb) * v(a0, b0) + fb * v(a0, b1)) + fa * ((1.0 - fb) * v(a1, b0) + fb * v(a1, b1))
        }
    }
}

/// `δ₀ = −[u]⁻¹∫U₀,u dx₁` from the u-component of a perturbation sampled on
/// `n1` normal cells (spacing `dx1`) times the transverse grid, normal index
/// outermost.
pub fn delta_initial(
    u_perturbation: &[f64],
    n1: usize,
    dx1: f64,
    grid: &TransverseGrid,
    u_jump: f64,
    coeffs: FrontCoefficients,
) -> Result<FrontField> {
    if u_jump == 0.0 {
        return Err(Error::InvalidInput("zero jump [u]".into()));
    }
    let m = grid.len();
    if u_perturbation.len() != n1 * m {
        return Err(Error::InvalidInput(format!("perturbation has {} samples, expected {}", u_perturbation.len(), n1 * m)));
    }
    let mut values = vec![0.0; m];
    for i in 0..n1 {
        let w = if i == 0 || i + 1 == n1 { 0.5 } else { 1.0 };
        for (j, v) in values.iter_mut().enumerate() {
            *v += w * u_perturbation[i * m + j];
        }
    }
    for v in values.iter_mut() {
        *v *= -dx1 / u_jump;
    }
    FrontField::from_values(grid.clone(), values, coeffs)
}

/// Exact spectral propagation to `t_target`.
pub fn evolve_delta(field: &FrontField, t_target: f64) -> Result<FrontField> {
    if t_target < field.t {
        return Err(Error::InvalidInput(format!("t_target {t_target} precedes field time {}", field.t)));
    }
    if !field.coeffs.beta_positive() {
        return Err(Error::InvalidInput("β̃ is not positive definite".into()));
    }
    let dt = t_target - field.t;
    let mut out = field.clone();
    for (i, z) in out.spectral.iter_mut().enumerate() {
        let k = field.grid.wavenumbers(i);
        let adv: f64 = field.coeffs.alpha.iter().zip(&k).map(|(a, kj)| a * kj).sum();
        let rate = -I * adv - field.coeffs.quad(&k);
        *z *= (rate * dt).exp();
    }
    out.t = t_target;
    out.refresh_values();
    Ok(out)
}

/// Unit-mass mollifier `∝ (1 − |z/ε|²)⁴(1 + z₁/ε)` supported in `B(0, ε)`,
/// sampled on the periodic grid. The tilt gives it a nonzero first moment, so
/// `η^ε * δ − δ` is first order in ε.
pub fn mollifier_samples(grid: &TransverseGrid, epsilon: f64) -> Vec<f64> {
    let mut eta: Vec<f64> = (0..grid.len())
        .map(|i| {
            let z = grid.periodic_offset(i);
            let r2: f64 = z.iter().map(|x| (x / epsilon).powi(2)).sum();
            if r2 < 1.0 {
                (1.0 - r2).powi(4) * (1.0 + z[0] / epsilon)
            } else {
                0.0
            }
        })
        .collect();
    let mass: f64 = eta.iter().sum::<f64>() * grid.cell_volume();
    eta.iter_mut().for_each(|v| *v /= mass);
    eta
}

/// `δ^ε = η^ε * δ` by spectral multiplication with the sampled mollifier.
pub fn mollify(field: &FrontField, epsilon: f64) -> Result<FrontField> {
    let h = field.grid.spacing();
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    if !(epsilon >= 2.0 * hmax) {
        return Err(Error::InvalidInput(format!("ε = {epsilon} is below two grid cells ({hmax})")));
    }
    let eta = mollifier_samples(&field.grid, epsilon);
    let vol = field.grid.cell_volume();
    let mut eta_hat: Vec<C64> = eta.iter().map(|&v| C64::new(v * vol, 0.0)).collect();
    fft_nd(&mut eta_hat, &field.grid.n, false);
    let mut out = field.clone();
    for (z, e) in out.spectral.iter_mut().zip(&eta_hat) {
        *z *= e;
    }
    out.refresh_values();
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    pub intercept: f64,
    /// Max deviation of log-norms from the fitted power law.
    pub max_residual: f64,
    /// False when an exponential law `e^{−rt}` fits the series better.
    pub algebraic: bool,
    pub excluded: usize,
}

/// Log-log power-law fit of a positive series; samples below
/// `1e2·ε_machine·max` are excluded.
pub fn power_law_fit(times: &[f64], norms: &[f64]) -> Result<DecayFit> {
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, n)| **t > 0.0 && **n > 1e2 * f64::EPSILON * max)
        .map(|(t, n)| (*t, *n))
        .collect();
    if keep.len() < 3 {
        return Err(Error::InvalidInput("fewer than three usable decay samples".into()));
    }
    let lt: Vec<f64> = keep.iter().map(|(t, _)| t.ln()).collect();
    let ln: Vec<f64> = keep.iter().map(|(_, n)| n.ln()).collect();
    let ts: Vec<f64> = keep.iter().map(|(t, _)| *t).collect();
    let (p, c) = linear_fit(&lt, &ln);
    let resid_pow = lt.iter().zip(&ln).map(|(x, y)| (y - p * x - c).abs()).fold(0.0, f64::max);
    let (r, c2) = linear_fit(&ts, &ln);
    let resid_exp = ts.iter().zip(&ln).map(|(x, y)| (y - r * x - c2).abs()).fold(0.0, f64::max);
    Ok(DecayFit {
        times: times.to_vec(),
        norms: norms.to_vec(),
        exponent: p,
        intercept: c,
        max_residual: resid_pow,
        algebraic: resid_pow <= resid_exp,
        excluded: times.len() - keep.len(),
    })
}

fn check_span(times: &[f64]) -> Result<()> {
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0 && hi >= 10.0 * lo) {
        return Err(Error::InvalidInput("decay times must be positive and span at least a decade".into()));
    }
    Ok(())
}

/// Fitted decay of `‖∂^α δ(·, t)‖_{L²}` for the field evolved to each time.
pub fn decay_report(field: &FrontField, alpha: &[usize], times: &[f64]) -> Result<DecayFit> {
    check_span(times)?;
    let norms = times
        .iter()
        .map(|&t| evolve_delta(field, field.t + t).map(|f| f.derivative_norm(alpha)))
        .collect::<Result<Vec<_>>>()?;
    power_law_fit(times, &norms)
}

/// Fitted decay of `‖δ^ε(·, t) − δ(·, t)‖_{L²}`.
pub fn mollification_gap_report(field: &FrontField, epsilon: f64, times: &[f64]) -> Result<DecayFit> {
    check_span(times)?;
    let smooth = mollify(field, epsilon)?;
    let norms = times
        .iter()
        .map(|&t| {
            let a = evolve_delta(&smooth, field.t + t)?;
            let b = evolve_delta(field, field.t + t)?;
            Ok(a.difference(&b)?.l2_norm())
        })
        .collect::<Result<Vec<_>>>()?;
    power_law_fit(times, &norms)
}

/// Inputs of the leading kernels. `a_plus = (a₁⁺, ã⁺)` is the equilibrium
/// characteristic at `u₊` in the frame of the shock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenKernelParams {
    pub a_plus: Vec<f64>,
    pub a_bar_tilde: Vec<f64>,
    pub beta_tilde: Vec<Vec<f64>>,
    pub blocks: ViscosityBlocks,
    /// Full viscosity tensor at `u₊` (covariance of K⁺).
    pub b_star: Vec<Vec<f64>>,
    pub y1: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolatedCoefficients {
    pub weight: f64,
    pub alpha_plus: Vec<f64>,
    pub beta_bar: Vec<Vec<f64>>,
}

/// Drift and covariance of `ḡ⁺`, interpolated with weight
/// `min(|y₁|/|a₁⁺t|, 1)`.
pub fn interpolated_coefficients(p: &GreenKernelParams) -> Result<InterpolatedCoefficients> {
    let m = p.a_bar_tilde.len();
    if p.a_plus.len() != m + 1 {
        return Err(Error::InvalidInput("a_plus must have d entries".into()));
    }
    if !(p.t > 0.0) {
        return Err(Error::InvalidInput("kernel time must be positive".into()));
    }
    let a1 = p.a_plus[0];
    let a_t = &p.a_plus[1..];
    let w = if a1 == 0.0 { 1.0 } else { (p.y1.abs() / (a1 * p.t).abs()).clamp(0.0, 1.0) };
    let alpha_plus: Vec<f64> = (0..m).map(|j| (1.0 - w) * p.a_bar_tilde[j] + w * a_t[j]).collect();
    let b11 = p.blocks.b11;
    let bbar = p.blocks.bbar_matrix();
    let b = p.blocks.b_vector();
    let g = RVec::from_iterator(m, (0..m).map(|j| a_t[j] - p.a_bar_tilde[j] - a1 * b[j]));
    let endpoint = bbar * b11 + (&g * g.transpose()) * (b11 / (a1 * a1));
    let beta_bar: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| (1.0 - w) * p.beta_tilde[i][j] + w * endpoint[(i, j)]).collect()).collect();
    Ok(InterpolatedCoefficients { weight: w, alpha_plus, beta_bar })
}

/// Heat kernel with drift `c`, covariance `B` and unit integral:
/// `(4πt)^{−m/2} det(B)^{−1/2} exp(−zᵗB⁻¹z/4t)`, `z = x − ct`.
fn convected_heat_kernel(z: &[f64], b: &RMat, t: f64, what: &str) -> Result<f64> {
    let m = z.len();
    let sym = (b + b.transpose()) * 0.5;
    let chol = sym
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput(format!("{what} covariance is not positive definite")))?;
    let zv = RVec::from_column_slice(z);
    let sol = chol.solve(&zv);
    let quad = zv.dot(&sol);
    let det = chol.determinant();
    Ok((4.0 * PI * t).powf(-(m as f64) / 2.0) / det.sqrt() * (-quad / (4.0 * t)).exp())
}

/// `(ḡ⁺(x̃, t; y), K⁺(x, t; y))` for `x ∈ ℝᵈ` and source `y = (y₁, ỹ)`.
pub fn leading_green_kernels(p: &GreenKernelParams, x: &[f64], y_tilde: &[f64]) -> Result<(f64, f64)> {
    let m = p.a_bar_tilde.len();
    if x.len() != m + 1 || y_tilde.len() != m {
        return Err(Error::InvalidInput("kernel point dimensions do not match".into()));
    }
    let ic = interpolated_coefficients(p)?;
    let bb = RMat::from_fn(m, m, |i, j| ic.beta_bar[i][j]);
    let z: Vec<f64> = (0..m).map(|j| x[j + 1] - y_tilde[j] - ic.alpha_plus[j] * p.t).collect();
    let g = convected_heat_kernel(&z, &bb, p.t, &format!("β̄₊ at interpolation weight {:.6}", ic.weight))?;
    let d = m + 1;
    let bs = RMat::from_fn(d, d, |i, j| p.b_star[i][j]);
    let y_full: Vec<f64> = std::iter::once(p.y1).chain(y_tilde.iter().cloned()).collect();
    let zk: Vec<f64> = (0..d).map(|j| x[j] - y_full[j] - p.a_plus[j] * p.t).collect();
    let k = convected_heat_kernel(&zk, &bs, p.t, "B*₊")?;
    Ok((g, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enskog::viscosity_blocks;

    fn coeffs(a: f64, b: f64) -> FrontCoefficients {
        FrontCoefficients { alpha: vec![a], beta: vec![vec![b]] }
    }

    fn gaussian_field(n: usize, w: f64, sigma: f64, a: f64, b: f64) -> FrontField {
        let grid = TransverseGrid::new(vec![n], vec![w]).unwrap();
        FrontField::from_fn(grid, coeffs(a, b), |y| (-(y[0] - 0.5 * w).powi(2) / (2.0 * sigma * sigma)).exp()).unwrap()
    }

    #[test]
    fn single_mode_is_a_damped_travelling_wave() {
        let w = 2.0 * PI * 5.0;
        let k = 3.0 * 2.0 * PI / w;
        let grid = TransverseGrid::new(vec![128], vec![w]).unwrap();
        let f = FrontField::from_fn(grid, coeffs(0.4, 0.7), |y| (k * y[0]).cos()).unwrap();
        let t = 2.5;
        let g = evolve_delta(&f, t).unwrap();
        for (i, v) in g.values.iter().enumerate() {
            let y = g.grid.coords(i)[0];
            let exact = (-0.7 * k * k * t).exp() * (k * (y - 0.4 * t)).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_mass_and_semigroup() {
        let f = gaussian_field(256, 80.0, 3.0, 0.3, 0.9);
        let rt = f.round_trip();
        assert!(f.values.iter().zip(&rt).all(|(a, b)| (a - b).abs() < 1e-12));
        let m0 = f.mass();
        let g = evolve_delta(&f, 7.0).unwrap();
        assert!((g.mass() - m0).abs() <= 1e-12 * m0.abs());
        let h = evolve_delta(&evolve_delta(&f, 3.0).unwrap(), 7.0).unwrap();
        assert!(g.values.iter().zip(&h.values).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(g.l2_norm() < f.l2_norm());
    }

    #[test]
    fn convection_is_an_isometry() {
        let f = gaussian_field(256, 80.0, 3.0, 0.0, 0.9);
        let mut g = f.clone();
        g.coeffs.alpha = vec![2.7];
        let a = evolve_delta(&f, 5.0).unwrap().l2_norm();
        let b = evolve_delta(&g, 5.0).unwrap().l2_norm();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn gaussian_norm_matches_closed_form() {
        // ‖δ(t)‖ = σ π^{1/4} (σ² + 2βt)^{−1/4} for δ₀ = exp(−y²/2σ²)
        let (sigma, beta) = (2.0, 0.9);
        let f = gaussian_field(4096, 1024.0, sigma, 0.3, beta);
        for t in [0.0, 10.0, 100.0] {
            let n = evolve_delta(&f, t).unwrap().l2_norm();
            let exact = sigma * PI.powf(0.25) * (sigma * sigma + 2.0 * beta * t).powf(-0.25);
            assert!((n - exact).abs() < 1e-8 * exact, "t = {t}: {n} vs {exact}");
        }
    }

    #[test]
    fn gaussian_decay_exponents() {
        let f = gaussian_field(8192, 2048.0, 1.0, 0.3, 0.9);
        let times: Vec<f64> = (0..=20).map(|k| 10.0 * 10f64.powf(2.0 * k as f64 / 20.0)).collect();
        let r0 = decay_report(&f, &[0], &times).unwrap();
        assert!((r0.exponent + 0.25).abs() < 0.02, "{}", r0.exponent);
        assert!(r0.algebraic);
        let r1 = decay_report(&f, &[1], &times).unwrap();
        assert!((r1.exponent + 0.75).abs() < 0.03, "{}", r1.exponent);
    }

    #[test]
    fn isolated_mode_is_flagged_non_algebraic() {
        let w = 20.0;
        let grid = TransverseGrid::new(vec![64], vec![w]).unwrap();
        let f = FrontField::from_fn(grid, coeffs(0.0, 1.0), |y| (2.0 * PI * y[0] / w).sin()).unwrap();
        let times: Vec<f64> = (1..=10).map(|k| k as f64 * 2.0).collect();
        let r = decay_report(&f, &[0], &times).unwrap();
        assert!(!r.algebraic);
    }

    #[test]
    fn mollifier_preserves_mass_and_is_first_order() {
        let f = gaussian_field(8192, 2048.0, 1.0, 0.3, 0.9);
        let m = mollify(&f, 1.0).unwrap();
        assert!((m.mass() - f.mass()).abs() <= 1e-12 * f.mass());
        assert!(mollify(&f, 0.3).is_err());
        let times: Vec<f64> = (0..=20).map(|k| 10.0 * 10f64.powf(2.0 * k as f64 / 20.0)).collect();
        let gap = mollification_gap_report(&f, 1.0, &times).unwrap();
        assert!((gap.exponent + 0.75).abs() < 0.05, "{}", gap.exponent);
        let t = 100.0;
        let diff = |eps: f64| {
            let a = evolve_delta(&mollify(&f, eps).unwrap(), t).unwrap();
            a.difference(&evolve_delta(&f, t).unwrap()).unwrap().l2_norm()
        };
        let ratio = diff(1.0) / diff(0.5);
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn delta_initial_from_separable_and_zero_mass_data() {
        let grid = TransverseGrid::new(vec![32], vec![16.0]).unwrap();
        let (n1, dx1) = (401, 0.05);
        let x1 = |i: usize| -10.0 + i as f64 * dx1;
        let psi = |j: usize| (2.0 * PI * j as f64 / 32.0).cos() + 2.0;
        let gauss: Vec<f64> = (0..n1 * 32).map(|k| (-x1(k / 32).powi(2)).exp() * psi(k % 32)).collect();
        let f = delta_initial(&gauss, n1, dx1, &grid, -0.6, coeffs(0.0, 1.0)).unwrap();
        let mass = PI.sqrt();
        for (j, v) in f.values.iter().enumerate() {
            assert!((v - mass * psi(j) / 0.6).abs() < 1e-8);
        }
        let odd: Vec<f64> = (0..n1 * 32).map(|k| x1(k / 32) * (-x1(k / 32).powi(2)).exp()).collect();
        let z = delta_initial(&odd, n1, dx1, &grid, -0.6, coeffs(0.0, 1.0)).unwrap();
        assert!(z.values.iter().all(|v| v.abs() < 1e-14));
        assert!(delta_initial(&odd, n1, dx1, &grid, 0.0, coeffs(0.0, 1.0)).is_err());
    }

    fn kernel_params(y1: f64, t: f64) -> GreenKernelParams {
        let b = RMat::from_row_slice(2, 2, &[0.99, 0.03, 0.03, 0.91]);
        GreenKernelParams {
            a_plus: vec![-0.3, 0.3],
            a_bar_tilde: vec![-0.3],
            beta_tilde: vec![vec![0.91]],
            blocks: viscosity_blocks(&b).unwrap(),
            b_star: vec![vec![0.99, 0.03], vec![0.03, 0.91]],
            y1,
            t,
        }
    }

    #[test]
    fn interpolation_endpoints() {
        let p = kernel_params(0.0, 4.0);
        let ic = interpolated_coefficients(&p).unwrap();
        assert_eq!(ic.weight, 0.0);
        assert_eq!(ic.alpha_plus, p.a_bar_tilde);
        assert_eq!(ic.beta_bar, p.beta_tilde);
        let p = kernel_params(1.2, 4.0);
        let ic = interpolated_coefficients(&p).unwrap();
        assert_eq!(ic.weight, 1.0);
        assert!((ic.alpha_plus[0] - 0.3).abs() < 1e-15);
        let p = kernel_params(50.0, 4.0);
        assert_eq!(interpolated_coefficients(&p).unwrap().weight, 1.0);
    }

    #[test]
    fn kernels_have_unit_integral() {
        let p = kernel_params(0.5, 3.0);
        let h = 0.05;
        let span = 30.0;
        let steps = (2.0 * span / h) as i64;
        let mut g_sum = 0.0;
        for i in 0..=steps {
            let y = -span + i as f64 * h;
            g_sum += leading_green_kernels(&p, &[0.0, y], &[0.0]).unwrap().0 * h;
        }
        assert!((g_sum - 1.0).abs() < 1e-8);
        let mut k_sum = 0.0;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = [-span + i as f64 * h, -span + j as f64 * h];
                k_sum += leading_green_kernels(&p, &x, &[0.0]).unwrap().1 * h * h;
            }
        }
        assert!((k_sum - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kernels_reduce_to_one_family_when_coefficients_coincide() {
        let mut p = kernel_params(0.0, 2.0);
        p.a_bar_tilde = vec![0.3];
        let endpoint = interpolated_coefficients(&GreenKernelParams { y1: 100.0, ..p.clone() }).unwrap().beta_bar;
        p.beta_tilde = endpoint;
        let base = leading_green_kernels(&p, &[0.0, 0.4], &[0.1]).unwrap().0;
        for y1 in [0.1, 0.3, 0.6, 5.0] {
            let q = GreenKernelParams { y1, ..p.clone() };
            let v = leading_green_kernels(&q, &[0.0, 0.4], &[0.1]).unwrap().0;
            assert!((v - base).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_covariance_is_reported() {
        let mut p = kernel_params(0.0, 1.0);
        p.beta_tilde = vec![vec![-1.0]];
        let err = leading_green_kernels(&p, &[0.0, 0.0], &[0.0]).unwrap_err();
        assert!(err.to_string().contains("weight"));
    }
}
