//! Chapman–Enskog coefficients: the closed-form expressions and an independent
//! fit of the slow dispersion branch, which is authoritative downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, inverse_real, lstsq, CVec, RMat, RVec, C64};
use crate::model::{RelaxationSystem, StatePoint};

/// `f*_j(u) = f^j(u, v*(u))`, the first component of `F^j` at equilibrium.
pub fn equilibrium_flux(system: &RelaxationSystem, u: f64, j: usize) -> f64 {
    system.flux(j, &system.equilibrium_state(u))[0]
}

/// Derivative of `f*_j` by central differences of the equilibrium flux.
pub fn equilibrium_flux_derivative(system: &RelaxationSystem, u: f64, j: usize) -> f64 {
    let h = 1e-5 * (1.0 + u.abs());
    let fp = equilibrium_flux(system, u + h, j);
    let fm = equilibrium_flux(system, u - h, j);
    let f2p = equilibrium_flux(system, u + 2.0 * h, j);
    let f2m = equilibrium_flux(system, u - 2.0 * h, j);
    (8.0 * (fp - fm) - (f2p - f2m)) / (12.0 * h)
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionFit {
    pub a_fit: Vec<f64>,
    pub b_fit: Vec<Vec<f64>>,
    /// Largest deviation of the sampled branch from `−i a·ξ − ξᵗBξ`.
    pub residual: f64,
    /// Smallest ratio (distance to the runner-up eigenvalue)/(distance to the
    /// matched one) met while following the branch.
    pub branch_tolerance: f64,
    /// Largest `|λ(−ξ) − conj λ(ξ)|` over the sampled directions.
    pub conjugation_defect: f64,
}

impl DispersionFit {
    pub fn b_matrix(&self) -> RMat {
        let d = self.a_fit.len();
        RMat::from_fn(d, d, |i, j| self.b_fit[i][j])
    }
}

/// Closed-form expansion data; `b_star_formula` is the literal printed
/// expression, `b_star_fit` the dispersion-fit value used downstream.
#[derive(Debug, Clone, Serialize)]
pub struct EnskogCoefficients {
    pub evaluation_point: f64,
    pub a_star: Vec<f64>,
    pub b_star_formula: Vec<Vec<f64>>,
    pub b_star_fit: Vec<Vec<f64>>,
    pub a_fit: Vec<f64>,
    pub fit_residual: f64,
    pub v0: Vec<f64>,
    /// `V¹_j`, stored as (re, im) pairs per component.
    pub v1: Vec<Vec<(f64, f64)>>,
    pub discrepancy_flag: bool,
    pub max_discrepancy: f64,
}

struct Blocks {
    f_u: f64,
    f_v: RVec,
    g_u: RVec,
    g_v: RMat,
}

fn flux_blocks(system: &RelaxationSystem, x: &RVec, j: usize) -> Blocks {
    let a = system.jac_flux(j, x);
    let r = system.r;
    Blocks {
        f_u: a[(0, 0)],
        f_v: RVec::from_iterator(r, (0..r).map(|k| a[(0, k + 1)])),
        g_u: RVec::from_iterator(r, (0..r).map(|k| a[(k + 1, 0)])),
        g_v: a.view((1, 1), (r, r)).clone_owned(),
    }
}

/// Literal evaluation of the closed-form expansion coefficients at `(u, v*(u))`,
/// together with the dispersion fit at the same point.
pub fn enskog_closed_form(system: &RelaxationSystem, u: f64) -> Result<EnskogCoefficients> {
    let x = system.equilibrium_state(u);
    let dq = system.jac_source(&x);
    let r = system.r;
    let q_u = RVec::from_iterator(r, (0..r).map(|k| dq[(k, 0)]));
    let q_v = dq.view((0, 1), (r, r)).clone_owned();
    let q_v_inv = inverse_real(&q_v).map_err(|_| Error::Singular(format!("q_v at u = {u}")))?;
    let qq = &q_v_inv * &q_u; // q_v⁻¹ q_u
    let d = system.d;
    let blocks: Vec<Blocks> = (0..d).map(|j| flux_blocks(system, &x, j)).collect();

    let a_star: Vec<f64> = blocks.iter().map(|b| b.f_u - b.f_v.dot(&qq)).collect();

    let mut b = RMat::zeros(d, d);
    for j in 0..d {
        let bj = &blocks[j];
        let inner = &bj.g_u - &bj.g_v * &qq - &qq * a_star[j];
        b[(j, j)] = -(bj.f_v.transpose() * &q_v_inv * inner)[(0, 0)];
    }
    for j in 0..d {
        for k in 0..d {
            if j == k {
                continue;
            }
            let (bj, bk) = (&blocks[j], &blocks[k]);
            let inner_j = &bj.g_u - &bj.g_v * &qq + &qq * a_star[k];
            let inner_k = &bk.g_u - &bk.g_v * &qq + &qq * a_star[j];
            let tj = (bj.f_v.transpose() * &q_v_inv * inner_j)[(0, 0)];
            let tk = (bk.f_v.transpose() * &q_v_inv * inner_k)[(0, 0)];
            b[(j, k)] = -0.5 * (tj + tk);
        }
    }
    let b = (&b + b.transpose()) * 0.5;

    let mut v0 = vec![1.0];
    v0.extend((-&qq).iter());
    let v1 = (0..d)
        .map(|j| {
            let bj = &blocks[j];
            let im = &q_v_inv * (&bj.g_u - &bj.g_v * &qq + &qq * a_star[j]);
            let mut out = vec![(1.0, 0.0)];
            out.extend((0..r).map(|k| (-qq[k], im[k])));
            out
        })
        .collect();

    let fit = dispersion_fit(
        system,
        &StatePoint::from_vector(&x),
        &default_directions(d),
        &default_radii(),
    )?;
    let b_fit = fit.b_matrix();
    let max_discrepancy = (&b - &b_fit).amax();
    // the fitted quadratic coefficients are accurate far below residual / ρ²
    let tol = (10.0 * fit.residual / default_radii()[0].powi(2)).max(1e-6);
    Ok(EnskogCoefficients {
        evaluation_point: u,
        a_star,
        b_star_formula: rows(&b),
        b_star_fit: fit.b_fit.clone(),
        a_fit: fit.a_fit.clone(),
        fit_residual: fit.residual,
        v0,
        v1,
        discrepancy_flag: max_discrepancy > tol,
        max_discrepancy,
    })
}

pub fn rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Radii `1e−2 · 0.5^k` down to about `1e−4`.
pub fn default_radii() -> Vec<f64> {
    (0..7).map(|k| 1e-2 * 0.5f64.powi(k)).collect()
}

/// Unit directions: `±1` in one dimension, 16 equally spaced angles in two,
/// coordinate and diagonal directions beyond.
pub fn default_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..16)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for i in 0..d {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[i] = sign;
                    out.push(e);
                }
                for j in i + 1..d {
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut e = vec![0.0; d];
                        e[i] = si / 2f64.sqrt();
                        e[j] = sj / 2f64.sqrt();
                        out.push(e);
                    }
                }
            }
            out
        }
    }
}

/// Follows the slow eigenvalue of `dQ − iΣξ_jA^j` along one ray
/// `ξ = ρ·dir` for the given radii (any order). Returns the branch values
/// in the order of `radii` and the worst separation ratio.
pub fn slow_branch(system: &RelaxationSystem, x: &RVec, dir: &[f64], radii: &[f64]) -> Result<(Vec<C64>, f64)> {
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].partial_cmp(&radii[b]).unwrap());
    let mut values = vec![C64::new(0.0, 0.0); radii.len()];
    let mut worst_ratio = f64::INFINITY;
    let mut prev: Option<(f64, C64)> = None;
    let mut prev2: Option<(f64, C64)> = None;
    for &idx in &order {
        let rho = radii[idx];
        let xi: Vec<f64> = dir.iter().map(|c| c * rho).collect();
        let eig = eigenvalues(&system.symbol(x, &xi))?;
        // prediction: λ(0) = 0, then linear extrapolation in ρ
        let target = match (prev, prev2) {
            (Some((r1, l1)), Some((r0, l0))) => l1 + (l1 - l0) * ((rho - r1) / (r1 - r0)),
            (Some((r1, l1)), None) => l1 * (rho / r1),
            _ => C64::new(0.0, 0.0),
        };
        let mut dist: Vec<(f64, C64)> = eig.iter().map(|z| ((z - target).norm(), *z)).collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let ratio = if dist.len() > 1 { dist[1].0 / dist[0].0.max(1e-300) } else { f64::INFINITY };
        if ratio < 10.0 {
            return Err(Error::BranchAmbiguous(format!(
                "direction {:?}, radius {rho:e}: nearest eigenvalues {} and {} to prediction {}",
                dir, dist[0].1, dist[1].1, target
            )));
        }
        worst_ratio = worst_ratio.min(ratio);
        values[idx] = dist[0].1;
        prev2 = prev;
        prev = Some((rho, dist[0].1));
    }
    Ok((values, worst_ratio))
}

/// Homogeneous monomials of degree `deg` in `d` variables (exponent vectors).
pub(crate) fn monomials(d: usize, deg: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![deg]];
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in monomials(d - 1, deg - first) {
            let mut m = vec![first];
            m.append(&mut rest);
            out.push(m);
        }
    }
    out
}

fn eval_monomial(exps: &[usize], xi: &[f64]) -> f64 {
    exps.iter().zip(xi).map(|(e, x)| x.powi(*e as i32)).product()
}

/// Least squares with column normalization; returns coefficients.
pub(crate) fn scaled_lstsq(design: &RMat, rhs: &RVec) -> Result<RVec> {
    let mut scaled = design.clone();
    let mut scales = vec![1.0; design.ncols()];
    for j in 0..design.ncols() {
        let n = design.column(j).norm();
        if n > 0.0 {
            scales[j] = n;
            scaled.column_mut(j).scale_mut(1.0 / n);
        }
    }
    let sol = lstsq(&scaled, rhs)?;
    Ok(RVec::from_iterator(sol.len(), sol.iter().zip(&scales).map(|(c, s)| c / s)))
}

/// Fits `λ(ξ) ≈ −i a·ξ − ξᵗBξ` to the slow branch of the linearized symbol.
///
/// The imaginary part is odd in ξ and the real part even, so they are fitted
/// separately; third/fifth and fourth/sixth degree terms are carried as
/// nuisance parameters so that the leading coefficients are not biased by the
/// truncation of the expansion.
pub fn dispersion_fit(
    system: &RelaxationSystem,
    state: &StatePoint,
    directions: &[Vec<f64>],
    radii: &[f64],
) -> Result<DispersionFit> {
    let d = system.d;
    let x = state.to_vector();
    if x.len() != system.n() {
        return Err(Error::InvalidInput("state dimension mismatch".into()));
    }
    if directions.iter().any(|dir| dir.len() != d) {
        return Err(Error::InvalidInput("direction dimension mismatch".into()));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput("radii must be positive".into()));
    }
    // separation of the slow branch from the fast spectrum
    let fast = eigenvalues(&system.symbol(&x, &vec![0.0; d]))?;
    let gap = fast.iter().map(|z| z.norm()).filter(|m| *m > 1e-10).fold(f64::INFINITY, f64::min);
    let rho_max = radii.iter().cloned().fold(0.0, f64::max);
    for dir in directions {
        let norm = crate::linalg::singular_values(&crate::linalg::to_complex(&system.directional_jac(&x, dir)))
            .into_iter()
            .fold(0.0, f64::max);
        if gap < 10.0 * rho_max * norm {
            return Err(Error::InvalidInput(format!(
                "radius {rho_max:e} too large: fast gap {gap:e} < 10 x radius x |A(dir)| = {:e}",
                10.0 * rho_max * norm
            )));
        }
    }

    let mut samples: Vec<(Vec<f64>, C64)> = Vec::new();
    let mut branch_tolerance = f64::INFINITY;
    for dir in directions {
        let (vals, ratio) = slow_branch(system, &x, dir, radii)?;
        branch_tolerance = branch_tolerance.min(ratio);
        for (rho, val) in radii.iter().zip(vals) {
            samples.push((dir.iter().map(|c| c * rho).collect(), val));
        }
    }

    let odd: Vec<Vec<usize>> = [1, 3, 5].iter().flat_map(|&k| monomials(d, k)).collect();
    let even: Vec<Vec<usize>> = [2, 4, 6].iter().flat_map(|&k| monomials(d, k)).collect();
    let m = samples.len();
    let design_odd = RMat::from_fn(m, odd.len(), |i, j| eval_monomial(&odd[j], &samples[i].0));
    let design_even = RMat::from_fn(m, even.len(), |i, j| eval_monomial(&even[j], &samples[i].0));
    let im = RVec::from_iterator(m, samples.iter().map(|s| s.1.im));
    let re = RVec::from_iterator(m, samples.iter().map(|s| s.1.re));
    let c_odd = scaled_lstsq(&design_odd, &im)?;
    let c_even = scaled_lstsq(&design_even, &re)?;

    // Im λ = −a·ξ + ...; Re λ = −ξᵗBξ + ...
    let mut a_fit = vec![0.0; d];
    for (j, exps) in odd.iter().enumerate().take(d) {
        let axis = exps.iter().position(|e| *e == 1).expect("linear monomial");
        a_fit[axis] = -c_odd[j];
    }
    let mut b = RMat::zeros(d, d);
    for (j, exps) in even.iter().enumerate().take(d * (d + 1) / 2) {
        let axes: Vec<usize> = exps.iter().enumerate().flat_map(|(k, e)| std::iter::repeat(k).take(*e)).collect();
        let (p, q) = (axes[0], axes[1]);
        if p == q {
            b[(p, p)] = -c_even[j];
        } else {
            b[(p, q)] = -0.5 * c_even[j];
            b[(q, p)] = -0.5 * c_even[j];
        }
    }

    let residual = samples
        .iter()
        .map(|(xi, val)| {
            let xv = RVec::from_column_slice(xi);
            let lin: f64 = a_fit.iter().zip(xi).map(|(a, x)| a * x).sum();
            let quad = (xv.transpose() * &b * &xv)[(0, 0)];
            (val - C64::new(-quad, -lin)).norm()
        })
        .fold(0.0, f64::max);

    // conjugation symmetry on one direction per sample set
    let mut conjugation_defect: f64 = 0.0;
    for dir in directions.iter().take(4) {
        let neg: Vec<f64> = dir.iter().map(|c| -c).collect();
        let (p, _) = slow_branch(system, &x, dir, radii)?;
        let (n, _) = slow_branch(system, &x, &neg, radii)?;
        for (a, b) in p.iter().zip(&n) {
            conjugation_defect = conjugation_defect.max((a.conj() - b).norm());
        }
    }

    Ok(DispersionFit { a_fit, b_fit: rows(&b), residual, branch_tolerance, conjugation_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityBlocks {
    pub b11: f64,
    pub b_vec: Vec<f64>,
    pub b_sub: Vec<Vec<f64>>,
    pub bbar: Vec<Vec<f64>>,
    /// Max-norm mismatch of `b11·[[1, −bᵗ],[b, B*]]` against the input.
    pub reconstruction_error: f64,
}

impl ViscosityBlocks {
    pub fn reconstruct(&self) -> RMat {
        let d = 1 + self.b_vec.len();
        let mut m = RMat::zeros(d, d);
        m[(0, 0)] = 1.0;
        for i in 0..d - 1 {
            m[(0, i + 1)] = -self.b_vec[i];
            m[(i + 1, 0)] = self.b_vec[i];
            for j in 0..d - 1 {
                m[(i + 1, j + 1)] = self.b_sub[i][j];
            }
        }
        m * self.b11
    }

    pub fn bbar_matrix(&self) -> RMat {
        let n = self.b_vec.len();
        RMat::from_fn(n, n, |i, j| self.bbar[i][j])
    }

    pub fn b_vector(&self) -> RVec {
        RVec::from_column_slice(&self.b_vec)
    }
}

/// Splits a viscosity tensor into `b11`, `b` (from the first column), `B*` and
/// `B̄* = B* − bbᵗ`. The first row of the input is not used; its mismatch with
/// the block form is reported in `reconstruction_error`.
pub fn viscosity_blocks(b: &RMat) -> Result<ViscosityBlocks> {
    if b.nrows() != b.ncols() || b.nrows() == 0 {
        return Err(Error::InvalidInput("viscosity tensor must be square".into()));
    }
    let b11 = b[(0, 0)];
    if b11 == 0.0 {
        return Err(Error::InvalidInput("b11 = 0".into()));
    }
    let n = b.nrows() - 1;
    let b_vec: Vec<f64> = (0..n).map(|i| b[(i + 1, 0)] / b11).collect();
    let b_sub = RMat::from_fn(n, n, |i, j| b[(i + 1, j + 1)] / b11);
    let bv = RVec::from_column_slice(&b_vec);
    let bbar = &b_sub - &bv * bv.transpose();
    let mut out = ViscosityBlocks { b11, b_vec, b_sub: rows(&b_sub), bbar: rows(&bbar), reconstruction_error: 0.0 };
    out.reconstruction_error = (out.reconstruct() - b).amax();
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Definiteness {
    pub is_positive_definite: bool,
    pub min_eigenvalue: f64,
}

pub fn definiteness_check(b: &RMat) -> Result<Definiteness> {
    if b.nrows() != b.ncols() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if (b - b.transpose()).amax() > 1e-12 {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    let min = b.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Definiteness { is_positive_definite: min > 0.0, min_eigenvalue: min })
}

/// Complex vector helper for reports.
pub fn complex_pairs(v: &CVec) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_jin_xin_1d, builtin_jin_xin_2d, ScalarMap};

    fn jx1(a: f64, f: ScalarMap) -> RelaxationSystem {
        builtin_jin_xin_1d(a, f, 1.0).unwrap()
    }

    /// Small root of λ² + λ + iξf' + a²ξ² = 0 (τ = 1), the exact 2×2 dispersion relation.
    fn exact_small_root(a: f64, fp: f64, xi: f64) -> C64 {
        let c = C64::new(a * a * xi * xi, xi * fp);
        let disc = (C64::new(1.0, 0.0) - c * 4.0).sqrt();
        (C64::new(-1.0, 0.0) + disc) * 0.5
    }

    #[test]
    fn slow_branch_matches_quadratic_formula() {
        let sys = jx1(1.0, ScalarMap::burgers());
        let x = sys.equilibrium_state(0.5);
        let radii = default_radii();
        let (vals, _) = slow_branch(&sys, &x, &[1.0], &radii).unwrap();
        for (rho, v) in radii.iter().zip(vals) {
            assert!((v - exact_small_root(1.0, 0.5, *rho)).norm() < 1e-14);
        }
    }

    #[test]
    fn fit_on_burgers_jin_xin() {
        let sys = jx1(1.0, ScalarMap::burgers());
        let st = StatePoint::from_vector(&sys.equilibrium_state(0.5));
        let fit = dispersion_fit(&sys, &st, &default_directions(1), &default_radii()).unwrap();
        assert!((fit.a_fit[0] - 0.5).abs() < 1e-6, "{:?}", fit);
        assert!((fit.b_fit[0][0] - 0.75).abs() < 1e-4, "{:?}", fit);
        assert!(fit.conjugation_defect < 1e-14);
    }

    #[test]
    fn fit_on_linear_flux() {
        let sys = jx1(1.0, ScalarMap::linear(0.3));
        for u in [-0.5, 0.2] {
            let st = StatePoint::from_vector(&sys.equilibrium_state(u));
            let fit = dispersion_fit(&sys, &st, &default_directions(1), &default_radii()).unwrap();
            assert!((fit.a_fit[0] - 0.3).abs() < 1e-9);
            assert!((fit.b_fit[0][0] - 0.91).abs() < 1e-7);
        }
    }

    #[test]
    fn residual_is_third_order() {
        let sys = jx1(1.0, ScalarMap::burgers());
        let st = StatePoint::from_vector(&sys.equilibrium_state(0.5));
        let radii = default_radii();
        let half: Vec<f64> = radii.iter().map(|r| r * 0.5).collect();
        let r1 = dispersion_fit(&sys, &st, &default_directions(1), &radii).unwrap().residual;
        let r2 = dispersion_fit(&sys, &st, &default_directions(1), &half).unwrap().residual;
        let ratio = r1 / r2;
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn closed_form_literal_values_and_flag() {
        let sys = jx1(1.0, ScalarMap::burgers());
        let c = enskog_closed_form(&sys, 0.5).unwrap();
        assert!((c.a_star[0] - 0.5).abs() < 1e-15);
        assert!((c.b_star_formula[0][0] - 1.25).abs() < 1e-14);
        assert!((c.b_star_fit[0][0] - 0.75).abs() < 1e-4);
        assert!(c.discrepancy_flag);
        assert_eq!(c.v0, vec![1.0, 0.5]);
    }

    #[test]
    fn transverse_fit_on_2d_model() {
        let sys = builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(0.3), 1.0).unwrap();
        let u = -0.1;
        let st = StatePoint::from_vector(&sys.equilibrium_state(u));
        let fit = dispersion_fit(&sys, &st, &default_directions(2), &default_radii()).unwrap();
        assert!((fit.a_fit[0] - u).abs() < 1e-8);
        assert!((fit.a_fit[1] - 0.3).abs() < 1e-8);
        // Chapman–Enskog viscosity of the 3×3 model
        let b = fit.b_matrix();
        let expected = [[1.0 - u * u, -u * 0.3], [-u * 0.3, 1.0 - 0.09]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[(i, j)] - expected[i][j]).abs() < 1e-4, "{b}");
            }
        }
        for (j, a) in fit.a_fit.iter().enumerate() {
            assert!((a - equilibrium_flux_derivative(&sys, u, j)).abs() < 1e-8);
        }
    }

    #[test]
    fn viscosity_block_examples() {
        let id = viscosity_blocks(&RMat::identity(2, 2)).unwrap();
        assert_eq!((id.b11, id.b_vec.clone(), id.b_sub.clone(), id.bbar.clone()), (1.0, vec![0.0], vec![vec![1.0]], vec![vec![1.0]]));
        let m = RMat::from_row_slice(2, 2, &[2.0, -2.0, 2.0, 6.0]);
        let vb = viscosity_blocks(&m).unwrap();
        assert_eq!(vb.b11, 2.0);
        assert_eq!(vb.b_vec, vec![1.0]);
        assert_eq!(vb.b_sub, vec![vec![3.0]]);
        assert_eq!(vb.bbar, vec![vec![2.0]]);
        assert!(vb.reconstruction_error <= 1e-12);
        assert!(viscosity_blocks(&RMat::zeros(2, 2)).is_err());
    }

    #[test]
    fn definiteness_examples() {
        let sys = jx1(1.0, ScalarMap::burgers());
        let st = StatePoint::from_vector(&sys.equilibrium_state(0.5));
        let fit = dispersion_fit(&sys, &st, &default_directions(1), &default_radii()).unwrap();
        let d = definiteness_check(&fit.b_matrix()).unwrap();
        assert!(d.is_positive_definite && (d.min_eigenvalue - 0.75).abs() < 1e-4);
        assert!(!definiteness_check(&RMat::zeros(2, 2)).unwrap().is_positive_definite);
        assert!(definiteness_check(&RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
        let mut last = f64::INFINITY;
        for fp in [0.9, 0.99, 0.999] {
            let sys = jx1(1.0, ScalarMap::linear(fp));
            let st = StatePoint::from_vector(&sys.equilibrium_state(0.0));
            let fit = dispersion_fit(&sys, &st, &default_directions(1), &default_radii()).unwrap();
            let m = definiteness_check(&fit.b_matrix()).unwrap().min_eigenvalue;
            assert!(m < last && m > 0.0);
            last = m;
        }
        assert!(last < 3e-3);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(2, 3).len(), 4);
        assert_eq!(monomials(3, 2).len(), 6);
        assert_eq!(monomials(1, 5), vec![vec![5]]);
    }
}
