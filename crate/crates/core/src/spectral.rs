//! Structural hypotheses on the linearized symbol and the constant-coefficient
//! mode structure at the endpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::enskog::{equilibrium_flux_derivative, DispersionFit};
use crate::error::{Error, Result};
use crate::linalg::{eigenpairs, eigenvalues, eigenvalues_real, inverse, to_complex, CMat, RMat, RVec, C64, I};
use crate::model::RelaxationSystem;
use crate::profile::WaveProfile;

/// Values of θ at or below this are treated as zero (failed strict positivity).
pub const THETA_ZERO: f64 = 1e-6;

/// Unit directions used for sampling `ξ ∈ ℝᵈ`.
pub fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // deterministic quasi-uniform points from a seeded generator
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// `count` log-spaced radii on `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1).max(1) as f64;
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

/// Default `ξ` samples: 32 directions (±1 in one dimension) × 40 radii in `[1e−3, 1e3]`.
pub fn default_xi_samples(d: usize) -> Vec<Vec<f64>> {
    xi_samples(d, 32, 40)
}

pub fn xi_samples(d: usize, directions: usize, radii: usize) -> Vec<Vec<f64>> {
    let rs = log_radii(1e-3, 1e3, radii);
    sphere_directions(d, directions)
        .into_iter()
        .flat_map(|dir| rs.iter().map(move |r| dir.iter().map(|c| c * r).collect::<Vec<f64>>()).collect::<Vec<_>>())
        .collect()
}

fn spectral_abscissa(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// `θ = min −abscissa(dQ − iΣξ_jA^j)·(1 + |ξ|²)/|ξ|²` over the samples.
pub fn check_h3(system: &RelaxationSystem, u_eq: &RVec, xi_samples: &[Vec<f64>]) -> Result<f64> {
    let vals: Vec<f64> = xi_samples
        .par_iter()
        .map(|xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            if r2 == 0.0 {
                return Ok(f64::INFINITY);
            }
            let a = spectral_abscissa(&system.symbol(u_eq, xi))?;
            Ok(-a * (1.0 + r2) / r2)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Orthonormal basis (columns) of the numerical null space of `m`.
fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut cols = Vec::new();
    // rows of v_t beyond the number of singular values span the null space too
    for i in 0..v_t.nrows() {
        let sv = if i < svd.singular_values.len() { svd.singular_values[i] } else { 0.0 };
        if sv <= tol * smax {
            cols.push(v_t.row(i).transpose().map(|z| z.conj()));
        }
    }
    if m.nrows() < n {
        // thin SVD only returns min(m, n) rows; complete with the full SVD of a padded matrix
        let mut padded = CMat::zeros(n, n);
        padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        return null_space(&padded, tol);
    }
    let mut out = CMat::zeros(n, cols.len());
    for (k, c) in cols.iter().enumerate() {
        out.set_column(k, c);
    }
    out
}

/// Smallest principal angle (radians) between the column spans of `a` and `b`
/// (both with orthonormal columns).
fn min_principal_angle(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let m = a.adjoint() * b;
    let smax = m.svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max);
    smax.min(1.0).acos()
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingCheck {
    pub pass: bool,
    /// Smallest angle between an eigenspace of `Σξ_jA^j` and `ker dQ`.
    pub min_angle: f64,
    pub worst_direction: Vec<f64>,
    /// Eigenvector-matrix condition numbers above 1e8 mark a defective symbol.
    pub defective: bool,
}

pub fn check_genuine_coupling(system: &RelaxationSystem, u_eq: &RVec, directions: &[Vec<f64>]) -> Result<CouplingCheck> {
    let dq = to_complex(&system.jac_relaxation(u_eq));
    let kernel = null_space(&dq, 1e-10);
    let mut out = CouplingCheck { pass: true, min_angle: std::f64::consts::FRAC_PI_2, worst_direction: vec![], defective: false };
    for dir in directions {
        let a = to_complex(&system.directional_jac(u_eq, dir));
        let (vals, vecs) = eigenpairs(&a)?;
        if crate::linalg::condition_number(&vecs) > 1e8 {
            out.defective = true;
        }
        // group numerically equal eigenvalues and compare whole eigenspaces
        let n = a.nrows();
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let group: Vec<usize> = (i..n).filter(|&j| (vals[j] - vals[i]).norm() < 1e-8 * (1.0 + vals[i].norm())).collect();
            for &j in &group {
                seen[j] = true;
            }
            let shifted = &a - CMat::identity(n, n) * vals[i];
            let space = null_space(&shifted, 1e-8);
            let space = if space.ncols() == 0 { vecs.columns(i, 1).clone_owned() } else { space };
            let angle = min_principal_angle(&space, &kernel);
            if angle < out.min_angle {
                out.min_angle = angle;
                out.worst_direction = dir.clone();
            }
        }
    }
    out.pass = out.min_angle >= 1e-6 && !out.defective;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompensatorResult {
    pub direction: Vec<f64>,
    /// Row-major skew-symmetric compensator.
    pub k_bar: Vec<Vec<f64>>,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KawashimaResult {
    pub pass: bool,
    pub theta: f64,
    pub used_identity_symmetrizer: bool,
    /// Smallest eigenvalue of `A₀` and of `−sym(A₀dQ)`; the compensator
    /// bound is meaningless when this is negative.
    pub structure_margin: f64,
    pub per_direction: Vec<CompensatorResult>,
}

fn skew_from_params(n: usize, p: &[f64]) -> RMat {
    let mut k = RMat::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            k[(i, j)] = p[idx];
            k[(j, i)] = -p[idx];
            idx += 1;
        }
    }
    k
}

/// `θ(K̄) = −max Re σ(|ξ|²A⁰dQ − Σ_j ξ_j K̄A^j)`.
pub fn kawashima_theta(a0_dq: &RMat, a_xi: &RMat, k_bar: &RMat, xi_norm2: f64) -> Result<f64> {
    let m = a0_dq * xi_norm2 - k_bar * a_xi;
    Ok(-eigenvalues_real(&m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Nelder–Mead minimization of `f` from `x0` with initial simplex size `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(x0));
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= 1e-13 * (1.0 + vals[0].abs()) {
            let spread = simplex.iter().flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
            if spread < 1e-10 {
                break;
            }
        }
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap()).unwrap();
    (simplex[best].clone(), vals[best])
}

/// Searches skew-symmetric compensators `K̄` (entries confined to `[−bound, bound]`)
/// maximizing `θ(K̄)` for each unit direction, from zero plus `restarts` seeded starts.
pub fn kawashima_compensator_search(
    system: &RelaxationSystem,
    u_eq: &RVec,
    directions: &[Vec<f64>],
    restarts: usize,
    seed: u64,
) -> Result<KawashimaResult> {
    let n = system.n();
    let (a0, identity) = match system.symmetrizer(u_eq) {
        Some(a0) => (a0, false),
        None => (RMat::identity(n, n), true),
    };
    let a0_dq = &a0 * system.jac_relaxation(u_eq);
    let dof = n * (n - 1) / 2;
    let bound = 10.0;
    let per_direction: Vec<CompensatorResult> = directions
        .par_iter()
        .enumerate()
        .map(|(idx, dir)| {
            let a_xi = system.directional_jac(u_eq, dir);
            let xi2: f64 = dir.iter().map(|x| x * x).sum();
            let objective = |p: &[f64]| -> f64 {
                if p.iter().any(|x| x.abs() > bound) {
                    return 1e6;
                }
                let k = skew_from_params(n, p);
                kawashima_theta(&a0_dq, &a_xi, &k, xi2).map(|t| -t).unwrap_or(1e6)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let mut best = nelder_mead(&objective, &vec![0.0; dof], 0.5, 2000);
            for _ in 0..restarts {
                let x0: Vec<f64> = (0..dof).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let cand = nelder_mead(&objective, &x0, 0.5, 2000);
                if cand.1 < best.1 {
                    best = cand;
                }
            }
            let k = skew_from_params(n, &best.0);
            CompensatorResult {
                direction: dir.clone(),
                k_bar: crate::enskog::rows(&k),
                theta: -best.1,
            }
        })
        .collect();
    let min_eig = |m: &RMat| m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let margin = min_eig(&((&a0 + a0.transpose()) * 0.5)).min(min_eig(&((&a0_dq + a0_dq.transpose()) * -0.5)));
    let scale = a0.amax().max(a0_dq.amax()).max(1.0);
    let mut theta = per_direction.iter().map(|c| c.theta).fold(f64::INFINITY, f64::min);
    if margin < -1e-12 * scale {
        theta = theta.min(margin);
    }
    Ok(KawashimaResult {
        pass: theta > THETA_ZERO,
        theta,
        used_identity_symmetrizer: identity,
        structure_margin: margin,
        per_direction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Splitting {
    pub stable: usize,
    pub unstable: usize,
    pub min_abs_real: f64,
    /// Set when some rate lies within 1e−10 of the imaginary axis.
    pub on_axis: bool,
}

/// Limiting coefficient `(A¹ − sI)⁻¹(dQ − iΣ_{j≥2}ξ_jA^j − λ)` at a state.
pub fn limiting_coefficient(system: &RelaxationSystem, u_eq: &RVec, s: f64, lambda: C64, xi_tilde: &[f64]) -> Result<CMat> {
    let n = system.n();
    let m = to_complex(&(system.jac_flux(0, u_eq) - RMat::identity(n, n) * s));
    let minv = inverse(&m).map_err(|_| Error::Singular("A1 - sI".into()))?;
    let mut rhs = to_complex(&system.jac_relaxation(u_eq)) - CMat::identity(n, n) * lambda;
    for (j, x) in xi_tilde.iter().enumerate() {
        rhs -= to_complex(&system.jac_flux(j + 1, u_eq)) * (I * *x);
    }
    Ok(minv * rhs)
}

pub fn consistent_splitting(system: &RelaxationSystem, u_eq: &RVec, s: f64, lambda: C64, xi_tilde: &[f64]) -> Result<Splitting> {
    let ev = eigenvalues(&limiting_coefficient(system, u_eq, s, lambda, xi_tilde)?)?;
    let stable = ev.iter().filter(|z| z.re < 0.0).count();
    let min_abs_real = ev.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(Splitting { stable, unstable: ev.len() - stable, min_abs_real, on_axis: min_abs_real < 1e-10 })
}

/// Coefficients of the slow-mode expansion at one endpoint, taken from the
/// dispersion fit there.
#[derive(Debug, Clone, Serialize)]
pub struct SlowModeCoefficients {
    /// `a₁ = a_fit,1 − s`.
    pub a1: f64,
    pub a_tilde: Vec<f64>,
    pub b11: f64,
    /// Mixed entries `B_{1j}`, j ≥ 2.
    pub b_mixed: Vec<f64>,
    pub b_transverse: Vec<Vec<f64>>,
}

impl SlowModeCoefficients {
    pub fn from_fit(fit: &DispersionFit, s: f64) -> Self {
        let d = fit.a_fit.len();
        Self {
            a1: fit.a_fit[0] - s,
            a_tilde: fit.a_fit[1..].to_vec(),
            b11: fit.b_fit[0][0],
            b_mixed: (1..d).map(|j| fit.b_fit[0][j]).collect(),
            b_transverse: (1..d).map(|i| (1..d).map(|j| fit.b_fit[i][j]).collect()).collect(),
        }
    }

    fn pieces(&self, lambda: C64, xi: &[f64]) -> (C64, f64, f64) {
        let big = lambda + I * self.a_tilde.iter().zip(xi).map(|(a, x)| a * x).sum::<f64>();
        let mut quad = 0.0;
        for (i, xi_i) in xi.iter().enumerate() {
            for (j, xi_j) in xi.iter().enumerate() {
                quad += xi_i * self.b_transverse[i][j] * xi_j;
            }
        }
        let mixed: f64 = self.b_mixed.iter().zip(xi).map(|(b, x)| b * x).sum();
        (big, quad, mixed)
    }

    /// Second-order expansion of the slow rate, including the mixed term
    /// `−2i(b·ξ̃)(λ + iã·ξ̃)/a₁²` generated by off-diagonal viscosity.
    pub fn expansion(&self, lambda: C64, xi: &[f64]) -> C64 {
        let (big, quad, mixed) = self.pieces(lambda, xi);
        let a1 = self.a1;
        -big / a1 + big * big * (self.b11 / a1.powi(3)) - quad / a1 - I * big * (2.0 * mixed / (a1 * a1))
    }

    /// The expansion without the mixed viscosity term.
    pub fn expansion_without_mixed(&self, lambda: C64, xi: &[f64]) -> C64 {
        let (big, quad, _) = self.pieces(lambda, xi);
        let a1 = self.a1;
        -big / a1 + big * big * (self.b11 / a1.powi(3)) - quad / a1
    }
}

/// Slow rate: the eigenvalue of the limiting coefficient closest to zero,
/// rejected when the runner-up is within a factor 3.
pub fn slow_rate(system: &RelaxationSystem, u_eq: &RVec, s: f64, lambda: C64, xi_tilde: &[f64]) -> Result<C64> {
    let mut ev = eigenvalues(&limiting_coefficient(system, u_eq, s, lambda, xi_tilde)?)?;
    ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    if ev.len() > 1 && ev[1].norm() < 3.0 * ev[0].norm() {
        return Err(Error::BranchAmbiguous(format!("slow rate {} vs {}", ev[0], ev[1])));
    }
    Ok(ev[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct SlowModeCheck {
    pub max_deviation: f64,
    /// Same with the mixed viscosity term dropped.
    pub max_deviation_without_mixed: f64,
    pub samples: Vec<(f64, f64, Vec<f64>, f64)>,
}

/// Compares numeric slow rates with the expansion on `(λ, ξ̃)` samples.
pub fn slow_mode_expansion_check(
    system: &RelaxationSystem,
    u_eq: &RVec,
    s: f64,
    coeffs: &SlowModeCoefficients,
    samples: &[(C64, Vec<f64>)],
) -> Result<SlowModeCheck> {
    let mut out = SlowModeCheck { max_deviation: 0.0, max_deviation_without_mixed: 0.0, samples: vec![] };
    for (lambda, xi) in samples {
        let mu = slow_rate(system, u_eq, s, *lambda, xi)?;
        let dev = (mu - coeffs.expansion(*lambda, xi)).norm();
        let dev2 = (mu - coeffs.expansion_without_mixed(*lambda, xi)).norm();
        out.max_deviation = out.max_deviation.max(dev);
        out.max_deviation_without_mixed = out.max_deviation_without_mixed.max(dev2);
        out.samples.push((lambda.re, lambda.im, xi.clone(), dev));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointModes {
    pub side: i8,
    /// Fast rates (nonzero at the origin) as (re, im).
    pub fast_mu: Vec<(f64, f64)>,
    pub slow_mu: (f64, f64),
    pub stable: usize,
    pub unstable: usize,
}

pub fn endpoint_modes(system: &RelaxationSystem, u_eq: &RVec, s: f64, lambda: C64, xi_tilde: &[f64], side: i8) -> Result<EndpointModes> {
    let mut ev = eigenvalues(&limiting_coefficient(system, u_eq, s, lambda, xi_tilde)?)?;
    ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let split = consistent_splitting(system, u_eq, s, lambda, xi_tilde)?;
    Ok(EndpointModes {
        side,
        fast_mu: ev[1..].iter().map(|z| (z.re, z.im)).collect(),
        slow_mu: (ev[0].re, ev[0].im),
        stable: split.stable,
        unstable: split.unstable,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub h1_real_semisimple: bool,
    pub h1_worst_imag: f64,
    pub h1_worst_condition: f64,
    /// `min |σ(A¹(Ū(z))) − s|` along the profile (endpoints only without one).
    pub h1_s_separation: f64,
    /// `min_± |f*₁'(u±) − s|`; distinctness is automatic for a scalar equilibrium law.
    pub h2_distinctness: f64,
    pub h3_theta: f64,
    pub genuine_coupling: bool,
    pub genuine_coupling_min_angle: f64,
    pub kawashima_theta: Option<f64>,
    pub kawashima_identity_symmetrizer: bool,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct HypothesisOptions {
    pub xi_directions: usize,
    pub xi_radii: usize,
    pub coupling_directions: usize,
    pub kawashima_restarts: usize,
    pub seed: u64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { xi_directions: 32, xi_radii: 40, coupling_directions: 16, kawashima_restarts: 20, seed: 0 }
    }
}

fn half_circle_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => sphere_directions(d, count),
    }
}

/// Evaluates (H1)–(H3), genuine coupling and the Kawashima search at both
/// endpoints, and (H1) along the profile when one is supplied.
pub fn check_hypotheses(
    system: &RelaxationSystem,
    u_minus: f64,
    u_plus: f64,
    s: f64,
    profile: Option<&WaveProfile>,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    let ends = [system.equilibrium_state(u_minus), system.equilibrium_state(u_plus)];
    let mut states: Vec<RVec> = ends.to_vec();
    if let Some(p) = profile {
        let stride = (p.len() / 200).max(1);
        states.extend((0..p.len()).step_by(stride).map(|i| p.node(i)));
    }
    let dirs = sphere_directions(system.d, opts.xi_directions.max(2));
    let mut worst_imag: f64 = 0.0;
    let mut worst_cond: f64 = 1.0;
    let mut separation = f64::INFINITY;
    for st in &states {
        for dir in &dirs {
            let a = to_complex(&system.directional_jac(st, dir));
            let (vals, vecs) = eigenpairs(&a)?;
            worst_imag = worst_imag.max(vals.iter().map(|z| z.im.abs()).fold(0.0, f64::max));
            worst_cond = worst_cond.max(crate::linalg::condition_number(&vecs));
        }
        let ev = eigenvalues_real(&system.jac_flux(0, st))?;
        separation = separation.min(ev.iter().map(|z| (z - s).norm()).fold(f64::INFINITY, f64::min));
    }
    let h2 = [u_minus, u_plus]
        .iter()
        .map(|u| (equilibrium_flux_derivative(system, *u, 0) - s).abs())
        .fold(f64::INFINITY, f64::min);

    let samples = xi_samples(system.d, opts.xi_directions, opts.xi_radii);
    let mut h3: f64 = f64::INFINITY;
    let mut coupling = true;
    let mut angle = std::f64::consts::FRAC_PI_2;
    let mut kaw: f64 = f64::INFINITY;
    let mut identity = false;
    let cdirs = half_circle_directions(system.d, opts.coupling_directions);
    for st in &ends {
        h3 = h3.min(check_h3(system, st, &samples)?);
        let c = check_genuine_coupling(system, st, &cdirs)?;
        coupling &= c.pass;
        angle = angle.min(c.min_angle);
        let k = kawashima_compensator_search(system, st, &cdirs, opts.kawashima_restarts, opts.seed)?;
        identity |= k.used_identity_symmetrizer;
        kaw = kaw.min(k.theta);
    }
    let h1 = worst_imag < 1e-8 && worst_cond < 1e8;
    let pass = h1 && separation > 1e-8 && h2 > 1e-8 && h3 > THETA_ZERO && coupling && kaw > THETA_ZERO;
    Ok(HypothesisReport {
        h1_real_semisimple: h1,
        h1_worst_imag: worst_imag,
        h1_worst_condition: worst_cond,
        h1_s_separation: separation,
        h2_distinctness: h2,
        h3_theta: h3,
        genuine_coupling: coupling,
        genuine_coupling_min_angle: angle,
        kawashima_theta: Some(kaw),
        kawashima_identity_symmetrizer: identity,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enskog::{default_directions, default_radii, dispersion_fit};
    use crate::model::{builtin_jin_xin_1d, builtin_jin_xin_2d, ScalarMap, StatePoint};

    fn jx1_linear(c: f64) -> RelaxationSystem {
        builtin_jin_xin_1d(1.0, ScalarMap::linear(c), 1.0).unwrap()
    }

    fn jx2() -> RelaxationSystem {
        builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(0.3), 1.0).unwrap()
    }

    #[test]
    fn h3_positive_inside_and_zero_on_boundary() {
        let sys = jx1_linear(0.1);
        let theta = check_h3(&sys, &sys.equilibrium_state(0.2), &default_xi_samples(1)).unwrap();
        assert!(theta > 0.1, "{theta}");
        let sys = jx1_linear(1.0);
        let theta = check_h3(&sys, &sys.equilibrium_state(0.2), &default_xi_samples(1)).unwrap();
        assert!(theta.abs() < THETA_ZERO, "{theta}");
        let sys = jx1_linear(1.2);
        let theta = check_h3(&sys, &sys.equilibrium_state(0.2), &default_xi_samples(1)).unwrap();
        assert!(theta < -THETA_ZERO);
    }

    #[test]
    fn h3_sampling_is_adequate() {
        let sys = jx2();
        let st = sys.equilibrium_state(-0.1);
        let coarse = check_h3(&sys, &st, &xi_samples(2, 32, 40)).unwrap();
        let fine = check_h3(&sys, &st, &xi_samples(2, 64, 79)).unwrap();
        assert!(((coarse - fine) / fine).abs() < 0.05, "{coarse} {fine}");
    }

    #[test]
    fn genuine_coupling_examples() {
        let sys = jx1_linear(0.5);
        assert!(check_genuine_coupling(&sys, &sys.equilibrium_state(0.0), &[vec![1.0]]).unwrap().pass);
        let sys = jx1_linear(1.0);
        let c = check_genuine_coupling(&sys, &sys.equilibrium_state(0.0), &[vec![1.0]]).unwrap();
        assert!(!c.pass && c.min_angle < 1e-6);
        let sys = jx1_linear(0.5).with_source(
            |_| RVec::from_vec(vec![0.0]),
            |_| RMat::zeros(1, 2),
        );
        assert!(!check_genuine_coupling(&sys, &sys.equilibrium_state(0.0), &[vec![1.0], vec![-1.0]]).unwrap().pass);
    }

    #[test]
    fn kawashima_examples() {
        let sys = builtin_jin_xin_1d(1.0, ScalarMap::burgers(), 1.0).unwrap();
        let st = sys.equilibrium_state(0.0);
        let a0_dq = sys.symmetrizer(&st).unwrap() * sys.jac_relaxation(&st);
        let zero = kawashima_theta(&a0_dq, &sys.jac_flux(0, &st), &RMat::zeros(2, 2), 1.0).unwrap();
        assert!(zero.abs() < 1e-15);
        let r = kawashima_compensator_search(&sys, &st, &[vec![1.0]], 20, 1).unwrap();
        assert!(r.pass && r.theta > 0.0);
        let bad = jx1_linear(1.0);
        let r = kawashima_compensator_search(&bad, &bad.equilibrium_state(0.0), &[vec![1.0]], 20, 1).unwrap();
        assert!(!r.pass, "{:?}", r.theta);
    }

    #[test]
    fn kawashima_homogeneity() {
        let sys = jx2();
        let st = sys.equilibrium_state(0.2);
        let a0_dq = sys.symmetrizer(&st).unwrap() * sys.jac_relaxation(&st);
        let xi = [0.6, 0.8];
        let k = skew_from_params(3, &[0.3, -0.2, 0.7]);
        let t1 = kawashima_theta(&a0_dq, &sys.directional_jac(&st, &xi), &k, 1.0).unwrap();
        let xi2 = [1.2, 1.6];
        let t2 = kawashima_theta(&a0_dq, &sys.directional_jac(&st, &xi2), &(k * 2.0), 4.0).unwrap();
        assert!((t2 - 4.0 * t1).abs() < 1e-12 * (1.0 + t1.abs()));
    }

    #[test]
    fn splitting_counts() {
        let sys = builtin_jin_xin_1d(1.0, ScalarMap::burgers(), 1.0).unwrap();
        let st = sys.equilibrium_state(0.1);
        let sp = consistent_splitting(&sys, &st, 0.2, C64::new(1.0, 0.0), &[]).unwrap();
        assert_eq!((sp.stable, sp.unstable), (1, 1));
        for lam in [10.0, 100.0, 1e4] {
            let sp = consistent_splitting(&sys, &st, 0.2, C64::new(lam, 0.0), &[]).unwrap();
            assert_eq!((sp.stable, sp.unstable), (1, 1));
        }
        let sp = consistent_splitting(&sys, &st, 0.2, C64::new(0.0, 0.0), &[]).unwrap();
        assert!(sp.on_axis);
    }

    #[test]
    fn counts_constant_on_arcs() {
        let sys = jx2();
        for u in [0.5, -0.1] {
            let st = sys.equilibrium_state(u);
            let base = consistent_splitting(&sys, &st, 0.2, C64::new(5.0, 0.0), &[0.05]).unwrap();
            for k in 0..50 {
                let t = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / 49.0;
                let lam = C64::from_polar(2.0, t) + 0.01;
                let sp = consistent_splitting(&sys, &st, 0.2, lam, &[0.05]).unwrap();
                assert_eq!((sp.stable, sp.unstable), (base.stable, base.unstable));
            }
        }
    }

    #[test]
    fn slow_mode_expansion_is_third_order() {
        let sys = jx2();
        let s = 0.2;
        let st = sys.equilibrium_state(-0.1);
        let fit = dispersion_fit(&sys, &StatePoint::from_vector(&st), &default_directions(2), &default_radii()).unwrap();
        let coeffs = SlowModeCoefficients::from_fit(&fit, s);
        let sample = |h: f64| vec![(C64::new(h, 0.3 * h), vec![h]), (C64::new(0.0, 0.0), vec![h]), (C64::new(h, 0.0), vec![0.0])];
        let d1 = slow_mode_expansion_check(&sys, &st, s, &coeffs, &sample(1e-3)).unwrap();
        let d2 = slow_mode_expansion_check(&sys, &st, s, &coeffs, &sample(5e-4)).unwrap();
        let ratio = d1.max_deviation / d2.max_deviation;
        assert!(ratio > 6.0 && ratio < 10.0, "ratio {ratio}");
        // dropping the mixed term leaves a second-order error
        let p1 = slow_mode_expansion_check(&sys, &st, s, &coeffs, &sample(1e-5)).unwrap();
        let p2 = slow_mode_expansion_check(&sys, &st, s, &coeffs, &sample(5e-6)).unwrap();
        let ratio = p1.max_deviation_without_mixed / p2.max_deviation_without_mixed;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        let zero = slow_rate(&sys, &st, s, C64::new(0.0, 0.0), &[0.0]);
        assert!(zero.is_err() || zero.unwrap().norm() < 1e-14);
    }

    #[test]
    fn hypotheses_on_builtins() {
        let sys = jx2();
        let r = check_hypotheses(&sys, 0.5, -0.1, 0.2, None, &HypothesisOptions { kawashima_restarts: 4, ..Default::default() }).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn compensator_search_rejects_indefinite_symmetrizer() {
        // |f'| > a: the entropy symmetrizer loses definiteness.
        let sys = jx1_linear(1.2);
        let k = kawashima_compensator_search(&sys, &sys.equilibrium_state(0.0), &[vec![1.0]], 4, 0).unwrap();
        assert!(!k.pass && k.structure_margin < 0.0, "{k:?}");
        let sys = jx1_linear(0.5);
        let k = kawashima_compensator_search(&sys, &sys.equilibrium_state(0.0), &[vec![1.0]], 4, 0).unwrap();
        assert!(k.pass && k.structure_margin >= 0.0, "{k:?}");
    }
}
