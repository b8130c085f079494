//! Evans function of the linearized eigenvalue ODE about a relaxation shock
//! profile: `W' = 𝔸(x; λ, ξ̃)W` with
//! `𝔸 = −(A¹−s)⁻¹((A¹−s)' + iΣ_{j≥2}ξ_jA^j − dQ + λ)`.
//!
//! Bases at ±L are spanned by spectral projectors of the limiting matrix,
//! continued from λ = 0 by a fixed-length product of projectors (so they are
//! analytic in λ), then propagated to x = 0 with a fourth-order Magnus scheme
//! and per-step orthonormalization with determinant bookkeeping.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enskog::{monomials, scaled_lstsq};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, expm, inverse, inverse_real, projector_right_of, sorted_by_real, to_complex, CMat, RMat, RVec, C64, I};
use crate::model::RelaxationSystem;
use crate::profile::{linear_fit, WaveProfile};
use crate::spectral::THETA_ZERO;

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

/// Separation of the two base points in the M-constancy check. Over longer
/// distances the fundamental matrix at |λ| ~ 5 becomes too ill-conditioned to
/// invert to 1e−8.
const BASE_POINT_SEPARATION: f64 = 0.25;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvansOptions {
    /// Magnus step.
    pub step: f64,
    /// Truncation half-width; derived from the profile decay rate when unset.
    pub truncation: Option<f64>,
    /// Target for the profile tail deviation `e^{−rate·L}`.
    pub tail_tolerance: f64,
    /// Number of projector steps along each continuation ray.
    pub transport_steps: usize,
}

impl Default for EvansOptions {
    fn default() -> Self {
        Self { step: 0.05, truncation: None, tail_tolerance: 1e-10, transport_steps: 32 }
    }
}

/// Coefficient pieces with `𝔸 = c0 + λ·cl + Σ ξ_j·cx[j]`.
#[derive(Clone)]
struct Pieces {
    c0: CMat,
    cl: CMat,
    cx: Vec<CMat>,
}

impl Pieces {
    fn assemble(&self, lambda: C64, xi: &[f64]) -> CMat {
        let mut m = &self.c0 + &self.cl * lambda;
        for (c, x) in self.cx.iter().zip(xi) {
            m += c * C64::new(*x, 0.0);
        }
        m
    }
}

fn shifted_flux_jacobian(system: &RelaxationSystem, s: f64, state: &RVec) -> RMat {
    let n = system.n();
    system.jac_flux(0, state) - RMat::identity(n, n) * s
}

fn pieces_at(system: &RelaxationSystem, s: f64, state: &RVec, dstate: &RVec) -> Result<Pieces> {
    let n = system.n();
    let a = shifted_flux_jacobian(system, s, state);
    let minv = inverse_real(&a).map_err(|_| Error::Singular(format!("A1 - sI at {:?}", state.as_slice())))?;
    let dnorm = dstate.norm();
    let da = if dnorm > 0.0 {
        let eps = 1e-5 * (1.0 + state.norm()) / dnorm;
        (system.jac_flux(0, &(state + dstate * eps)) - system.jac_flux(0, &(state - dstate * eps))) / (2.0 * eps)
    } else {
        RMat::zeros(n, n)
    };
    let c0 = to_complex(&(&minv * (system.jac_relaxation(state) - da)));
    let cl = to_complex(&(-&minv));
    let cx = (1..system.d).map(|j| to_complex(&(&minv * system.jac_flux(j, state))) * (-I)).collect();
    Ok(Pieces { c0, cl, cx })
}

/// Truncated eigenvalue-ODE machinery on a uniform grid `x_i = −L + ih`.
#[derive(Clone)]
pub struct EvansSetup {
    pub system: RelaxationSystem,
    pub profile: WaveProfile,
    pub s: f64,
    /// Truncation half-width L.
    pub half_width: f64,
    pub step: f64,
    /// Steps on each half line.
    pub steps_per_side: usize,
    /// Dimension of the stable space at +∞.
    pub stable_dim: usize,
    pub transport_steps: usize,
    /// `e^{−rate·L}` with the slower fitted profile decay rate.
    pub tail_deviation: f64,
    gauss: Vec<[Pieces; 2]>,
    lim_minus: Pieces,
    lim_plus: Pieces,
    base_minus: CMat,
    base_plus: CMat,
}

impl EvansSetup {
    pub fn new(system: &RelaxationSystem, profile: &WaveProfile, opts: &EvansOptions) -> Result<Self> {
        let n = system.n();
        if n != profile.n_comp {
            return Err(Error::InvalidInput("profile and system dimensions differ".into()));
        }
        if !(opts.step > 0.0) || opts.transport_steps == 0 {
            return Err(Error::InvalidInput("Evans step and transport_steps must be positive".into()));
        }
        let s = profile.s;
        let rate = profile.decay_rate_minus.min(profile.decay_rate_plus);
        let wanted = match opts.truncation {
            Some(l) => l,
            None if rate.is_finite() && rate > 0.0 => -opts.tail_tolerance.ln() / rate,
            None => profile.half_width(),
        };
        let half_width_raw = wanted.min(profile.half_width());
        let steps_per_side = (half_width_raw / opts.step).ceil().max(1.0) as usize;
        let step = half_width_raw / steps_per_side as f64;
        let half_width = step * steps_per_side as f64;
        let tail_deviation = if rate.is_finite() && rate > 0.0 { (-rate * half_width).exp() } else { f64::NAN };

        let mut gauss = Vec::with_capacity(2 * steps_per_side);
        for i in 0..2 * steps_per_side {
            let x0 = -half_width + i as f64 * step;
            let mut pair = Vec::with_capacity(2);
            for c in [0.5 - GAUSS_OFFSET, 0.5 + GAUSS_OFFSET] {
                let x = x0 + c * step;
                pair.push(pieces_at(system, s, &profile.eval(x), &profile.eval_derivative(x))?);
            }
            let p1 = pair.pop().unwrap();
            let p0 = pair.pop().unwrap();
            gauss.push([p0, p1]);
        }
        let zero = RVec::zeros(n);
        let lim_minus = pieces_at(system, s, &profile.endpoint_minus(), &zero)?;
        let lim_plus = pieces_at(system, s, &profile.endpoint_plus(), &zero)?;

        // large real λ: rates ≈ −λ/(σ_i − s), stable iff σ_i(A¹(U₊)) > s
        let sig_plus = eigenvalues(&to_complex(&shifted_flux_jacobian(system, s, &profile.endpoint_plus())))?;
        let sig_minus = eigenvalues(&to_complex(&shifted_flux_jacobian(system, s, &profile.endpoint_minus())))?;
        let stable_dim = sig_plus.iter().filter(|z| z.re > 0.0).count();
        let unstable_minus = sig_minus.iter().filter(|z| z.re < 0.0).count();
        if stable_dim + unstable_minus != n {
            return Err(Error::InvalidInput(format!(
                "no consistent splitting: {stable_dim} stable at + and {unstable_minus} unstable at − for N = {n}"
            )));
        }
        if stable_dim == 0 || stable_dim == n {
            return Err(Error::InvalidInput("degenerate splitting (k = 0 or N)".into()));
        }

        let mut setup = Self {
            system: system.clone(),
            profile: profile.clone(),
            s,
            half_width,
            step,
            steps_per_side,
            stable_dim,
            transport_steps: opts.transport_steps,
            tail_deviation,
            gauss,
            lim_minus,
            lim_plus,
            base_minus: CMat::zeros(0, 0),
            base_plus: CMat::zeros(0, 0),
        };
        let zero_xi = vec![0.0; system.d - 1];
        let (p_plus, _) = setup.group_projector(1, C64::new(0.0, 0.0), &zero_xi)?;
        let (p_minus, _) = setup.group_projector(-1, C64::new(0.0, 0.0), &zero_xi)?;
        setup.base_plus = pivoted_columns(&p_plus, stable_dim);
        setup.base_minus = pivoted_columns(&p_minus, n - stable_dim);
        Ok(setup)
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn transverse_dim(&self) -> usize {
        self.system.d - 1
    }

    /// Grid node `x_i = −L + ih`, `i ∈ 0..=2·steps_per_side`.
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    /// Nearest grid node index to `x`.
    pub fn node_index(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.step).round();
        i.clamp(0.0, (2 * self.steps_per_side) as f64) as usize
    }

    /// Coefficient matrix from the precomputed pieces at Gauss node `which`
    /// of step `i`.
    pub fn coefficient_at_gauss(&self, i: usize, which: usize, lambda: C64, xi: &[f64]) -> CMat {
        self.gauss[i][which].assemble(lambda, xi)
    }

    /// Position of Gauss node `which` of step `i`.
    pub fn gauss_point(&self, i: usize, which: usize) -> f64 {
        let c = if which == 0 { 0.5 - GAUSS_OFFSET } else { 0.5 + GAUSS_OFFSET };
        self.node(i) + c * self.step
    }

    /// Coefficient matrix computed directly from the profile at `x`.
    pub fn coefficient(&self, x: f64, lambda: C64, xi: &[f64]) -> Result<CMat> {
        let n = self.n();
        let state = self.profile.eval(x);
        let dstate = self.profile.eval_derivative(x);
        let a = shifted_flux_jacobian(&self.system, self.s, &state);
        let dnorm = dstate.norm();
        let da = if dnorm > 0.0 {
            let eps = 1e-5 * (1.0 + state.norm()) / dnorm;
            (self.system.jac_flux(0, &(&state + &dstate * eps)) - self.system.jac_flux(0, &(&state - &dstate * eps)))
                / (2.0 * eps)
        } else {
            RMat::zeros(n, n)
        };
        let mut inner = to_complex(&(da - self.system.jac_relaxation(&state))) + CMat::identity(n, n) * lambda;
        for (j, x) in xi.iter().enumerate() {
            inner += to_complex(&self.system.jac_flux(j + 1, &state)) * (I * *x);
        }
        let minv = inverse(&to_complex(&a))?;
        Ok(-(minv * inner))
    }

    /// Limiting coefficient matrix at the `side` endpoint.
    pub fn limiting(&self, side: i8, lambda: C64, xi: &[f64]) -> CMat {
        if side > 0 {
            self.lim_plus.assemble(lambda, xi)
        } else {
            self.lim_minus.assemble(lambda, xi)
        }
    }

    fn group_dim(&self, side: i8) -> usize {
        if side > 0 {
            self.stable_dim
        } else {
            self.n() - self.stable_dim
        }
    }

    /// Projector onto the `k` smallest-real-part rates (side +) or the `N − k`
    /// largest (side −), with the sorted rates and the separating gap.
    fn group_projector(&self, side: i8, lambda: C64, xi: &[f64]) -> Result<(CMat, (Vec<C64>, f64))> {
        let n = self.n();
        let k = self.stable_dim;
        let lim = self.limiting(side, lambda, xi);
        let ev = sorted_by_real(eigenvalues(&lim)?);
        let gap = ev[k].re - ev[k - 1].re;
        if gap < 1e-10 {
            return Err(Error::BranchAmbiguous(format!(
                "rate groups collide at side {side}, λ = {lambda}, ξ̃ = {xi:?} (gap {gap:.3e})"
            )));
        }
        let shift = 0.5 * (ev[k].re + ev[k - 1].re);
        let right = projector_right_of(&lim, shift)?;
        let p = if side > 0 { CMat::identity(n, n) - right } else { right };
        Ok((p, (ev, gap)))
    }

    /// Analytic spanning set of the decaying space at the `side` endpoint:
    /// projector continuation from (0, 0) to (0, ξ̃), then along the ray to λ.
    pub fn side_basis(&self, side: i8, lambda: C64, xi: &[f64]) -> Result<SideBasis> {
        let m = self.transport_steps;
        let mut x = if side > 0 { self.base_plus.clone() } else { self.base_minus.clone() };
        let zero = C64::new(0.0, 0.0);
        if xi.iter().any(|v| *v != 0.0) {
            for j in 1..=m {
                let t = j as f64 / m as f64;
                let xt: Vec<f64> = xi.iter().map(|v| v * t).collect();
                x = self.group_projector(side, zero, &xt)?.0 * x;
            }
        }
        let mut last = None;
        if lambda != zero {
            for j in 1..=m {
                let t = j as f64 / m as f64;
                let (p, info) = self.group_projector(side, lambda * t, xi)?;
                x = p * x;
                last = Some(info);
            }
        }
        let (ev, gap) = match last {
            Some(info) => info,
            None => self.group_projector(side, lambda, xi)?.1,
        };
        let dim = self.group_dim(side);
        let group: Vec<C64> = if side > 0 { ev[..dim].to_vec() } else { ev[ev.len() - dim..].to_vec() };
        // trace of the restriction, computed from the analytic basis
        let lim = self.limiting(side, lambda, xi);
        let coords = x
            .clone()
            .svd(true, true)
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::Singular(format!("side basis: {e}")))?;
        let restricted = &coords * &lim * &x;
        let shift = restricted.trace() / C64::new(dim as f64, 0.0);
        let boundary = ev.iter().any(|z| z.re.abs() < 1e-10);
        Ok(SideBasis { side, basis: x, rates: group, all_rates: ev, gap, shift, boundary })
    }

    fn magnus_omega(&self, i: usize, lambda: C64, xi: &[f64]) -> CMat {
        let a1 = self.gauss[i][0].assemble(lambda, xi);
        let a2 = self.gauss[i][1].assemble(lambda, xi);
        let h = self.step;
        let comm = &a1 * &a2 - &a2 * &a1;
        (&a1 + &a2) * C64::new(0.5 * h, 0.0) - comm * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0)
    }

    /// Exponential of the shifted Magnus generator for step `i`, forward
    /// (`x_i → x_{i+1}`) or backward.
    fn step_propagator(&self, i: usize, lambda: C64, xi: &[f64], shift: C64, forward: bool) -> CMat {
        let n = self.n();
        let omega = self.magnus_omega(i, lambda, xi) - CMat::identity(n, n) * (shift * self.step);
        if forward {
            expm(&omega)
        } else {
            expm(&(-omega))
        }
    }

    /// Propagates the side basis to node `stop`, recording orthonormal factors
    /// along the way when `record` is set.
    fn sweep(&self, side: i8, lambda: C64, xi: &[f64], stop: usize, record: bool) -> Result<Sweep> {
        let basis = self.side_basis(side, lambda, xi)?;
        let total = 2 * self.steps_per_side;
        let mut y = basis.basis.clone();
        let mut log_scale = 0.0;
        let mut phase = C64::new(1.0, 0.0);
        let mut qs = Vec::new();
        let mut rs = Vec::new();
        let (q0, r0) = qr(&y);
        accumulate(&r0, &mut log_scale, &mut phase);
        y = q0;
        if record {
            qs.push(y.clone());
        }
        let indices: Vec<usize> = if side > 0 { (stop..total).rev().collect() } else { (0..stop).collect() };
        for i in indices {
            let e = self.step_propagator(i, lambda, xi, basis.shift, side < 0);
            let z = e * &y;
            let (q, r) = qr(&z);
            if !r.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(format!("basis propagation at x = {}", self.node(i))));
            }
            accumulate(&r, &mut log_scale, &mut phase);
            y = q;
            if record {
                qs.push(y.clone());
                rs.push(r);
            }
        }
        Ok(Sweep { basis, q: y, log_scale, phase, qs, rs })
    }
}

struct Sweep {
    basis: SideBasis,
    q: CMat,
    log_scale: f64,
    phase: C64,
    /// Orthonormal factors in sweep order (starting at the far end).
    qs: Vec<CMat>,
    rs: Vec<CMat>,
}

fn qr(y: &CMat) -> (CMat, CMat) {
    let f = y.clone().qr();
    (f.q(), f.r())
}

fn accumulate(r: &CMat, log_scale: &mut f64, phase: &mut C64) {
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        let m = d.norm();
        *log_scale += m.ln();
        *phase *= d / m;
    }
    *phase /= phase.norm();
}

/// `k` columns of a rank-`k` projector chosen by greedy norm pivoting.
fn pivoted_columns(p: &CMat, k: usize) -> CMat {
    let n = p.ncols();
    let mut residual = p.clone();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = 0;
        let mut best_norm: f64 = -1.0;
        for j in 0..n {
            if chosen.contains(&j) {
                continue;
            }
            let nn = residual.column(j).norm();
            if nn > best_norm + 1e-12 * best_norm.abs() {
                best = j;
                best_norm = nn;
            }
        }
        chosen.push(best);
        let q = residual.column(best).clone_owned() / C64::new(best_norm, 0.0);
        for j in 0..n {
            let c = q.dotc(&residual.column(j));
            let upd = &q * c;
            let mut col = residual.column_mut(j);
            col -= upd;
        }
    }
    CMat::from_columns(&chosen.iter().map(|&j| p.column(j).clone_owned()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Serialize)]
pub struct SideBasis {
    pub side: i8,
    #[serde(skip)]
    pub basis: CMat,
    /// Rates of the decaying group, sorted by real part.
    pub rates: Vec<C64>,
    pub all_rates: Vec<C64>,
    /// Real-part gap separating the group from the rest.
    pub gap: f64,
    /// Mean rate of the group, `tr(P𝔸)/dim`, factored out during propagation.
    pub shift: C64,
    /// Set when some rate sits on the imaginary axis, e.g. the slow rate at
    /// (λ, ξ̃) = (0, 0); the dimension count is then not a splitting count.
    pub boundary: bool,
}

/// Basis of the decaying space at the `side` endpoint (+: stable, −: unstable).
pub fn stable_unstable_bases(setup: &EvansSetup, lambda: C64, xi: &[f64], side: i8) -> Result<SideBasis> {
    setup.side_basis(side, lambda, xi)
}

/// `D = mantissa · e^{log_scale}`; `relative` is `|det|` of the
/// orthonormalized blocks, i.e. `|D|` over the product of block volumes.
#[derive(Debug, Clone, Serialize)]
pub struct EvansValue {
    pub lambda: C64,
    pub xi: Vec<f64>,
    pub mantissa: C64,
    pub log_scale: f64,
    pub relative: f64,
    /// Columns of the orthonormalized bases `(φ⁺…, φ⁻…)` at x₁ = 0.
    pub bases_at_zero: Vec<Vec<C64>>,
}

impl EvansValue {
    pub fn value(&self) -> C64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Value rescaled by `e^{−reference}`.
    pub fn scaled(&self, reference: f64) -> C64 {
        self.mantissa * (self.log_scale - reference).exp()
    }
}

pub fn evans_eval(setup: &EvansSetup, lambda: C64, xi: &[f64]) -> Result<EvansValue> {
    if xi.len() != setup.transverse_dim() {
        return Err(Error::InvalidInput(format!("ξ̃ has {} entries, expected {}", xi.len(), setup.transverse_dim())));
    }
    let mid = setup.steps_per_side;
    let plus = setup.sweep(1, lambda, xi, mid, false)?;
    let minus = setup.sweep(-1, lambda, xi, mid, false)?;
    let n = setup.n();
    let mut m = CMat::zeros(n, n);
    m.columns_mut(0, setup.stable_dim).copy_from(&plus.q);
    m.columns_mut(setup.stable_dim, n - setup.stable_dim).copy_from(&minus.q);
    let det = m.determinant();
    let mantissa = det * plus.phase * minus.phase;
    Ok(EvansValue {
        lambda,
        xi: xi.to_vec(),
        mantissa,
        log_scale: plus.log_scale + minus.log_scale,
        relative: det.norm(),
        bases_at_zero: (0..n).map(|j| m.column(j).iter().copied().collect()).collect(),
    })
}

// ---------------------------------------------------------------------------
// contours and winding numbers

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Arc { center: C64, radius: f64, from: f64, to: f64 },
    Line { from: C64, to: C64 },
    /// Vertical line `Re λ = re`, geometrically spaced in `|Im λ|` between
    /// `from_im` and `to_im` (same sign).
    LogLine { re: f64, from_im: f64, to_im: f64 },
}

impl Segment {
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Segment::Arc { center, radius, from, to } => {
                let th = from + (to - from) * t;
                center + C64::from_polar(radius, th)
            }
            Segment::Line { from, to } => from + (to - from) * t,
            Segment::LogLine { re, from_im, to_im } => {
                let sign = from_im.signum();
                let im = sign * from_im.abs().powf(1.0 - t) * to_im.abs().powf(t);
                C64::new(re, im)
            }
        }
    }
}

/// Closed polyline-like contour made of consecutive segments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Contour {
    pub segments: Vec<Segment>,
    /// Initial samples per segment.
    pub samples: Vec<usize>,
}

impl Contour {
    /// Boundary (counter-clockwise) of `{Re λ ≥ −η, r_min ≤ |λ| ≤ r_max}`.
    pub fn half_annulus(r_min: f64, r_max: f64, eta: f64) -> Result<Self> {
        if !(r_min > eta && r_max > r_min && eta >= 0.0) {
            return Err(Error::InvalidInput(format!("half annulus needs 0 ≤ η < r_min < r_max (got {eta}, {r_min}, {r_max})")));
        }
        let top_out = (r_max * r_max - eta * eta).sqrt();
        let top_in = (r_min * r_min - eta * eta).sqrt();
        let th_out = top_out.atan2(-eta);
        let th_in = top_in.atan2(-eta);
        let origin = C64::new(0.0, 0.0);
        Ok(Self {
            segments: vec![
                Segment::Arc { center: origin, radius: r_max, from: -th_out, to: th_out },
                Segment::LogLine { re: -eta, from_im: top_out, to_im: top_in },
                Segment::Arc { center: origin, radius: r_min, from: th_in, to: -th_in },
                Segment::LogLine { re: -eta, from_im: -top_in, to_im: -top_out },
            ],
            samples: vec![96, 48, 24, 48],
        })
    }

    pub fn circle(center: C64, radius: f64, samples: usize) -> Self {
        Self { segments: vec![Segment::Arc { center, radius, from: 0.0, to: 2.0 * PI }], samples: vec![samples.max(4)] }
    }

    /// Point at parameter `p ∈ [0, segments)`.
    pub fn point(&self, p: f64) -> C64 {
        let n = self.segments.len();
        let i = (p.floor() as usize).min(n - 1);
        self.segments[i].point(p - i as f64)
    }

    fn initial_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, &m) in self.samples.iter().enumerate() {
            for j in 0..m {
                out.push(i as f64 + j as f64 / m as f64);
            }
        }
        out
    }

    /// Same contour with every point scaled about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| match *s {
                Segment::Arc { center, radius, from, to } => Segment::Arc { center: center * factor, radius: radius * factor, from, to },
                Segment::Line { from, to } => Segment::Line { from: from * factor, to: to * factor },
                Segment::LogLine { re, from_im, to_im } => Segment::LogLine { re: re * factor, from_im: from_im * factor, to_im: to_im * factor },
            })
            .collect();
        Self { segments, samples: self.samples.clone() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingOptions {
    /// Refine until every phase increment is below this (must be < π/2).
    pub max_phase_step: f64,
    pub max_rounds: usize,
    pub max_samples: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self { max_phase_step: PI / 4.0, max_rounds: 16, max_samples: 20_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourSample {
    pub lambda: C64,
    pub value: C64,
    pub log_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindingStatus {
    Conclusive,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingResult {
    /// `None` when inconclusive.
    pub winding: Option<i64>,
    pub status: WindingStatus,
    pub max_phase_step: f64,
    /// Smallest `|value|` seen on the contour.
    pub min_abs: f64,
    pub rounds: usize,
    pub note: String,
    pub samples: Vec<ContourSample>,
}

/// Argument-principle count for a function given as `(phase-carrying value,
/// log scale)` on a closed contour, with adaptive bisection of large phase
/// increments.
pub fn winding_of<F>(f: F, contour: &Contour, opts: &WindingOptions) -> Result<WindingResult>
where
    F: Fn(C64) -> Result<(C64, f64)> + Sync,
{
    if !(opts.max_phase_step > 0.0 && opts.max_phase_step < PI / 2.0) {
        return Err(Error::InvalidInput("max_phase_step must lie in (0, π/2)".into()));
    }
    let end = contour.segments.len() as f64;
    let eval = |ps: &[f64]| -> Result<Vec<(f64, C64, C64, f64)>> {
        ps.par_iter()
            .map(|&p| {
                let lambda = contour.point(p);
                let (v, ls) = f(lambda)?;
                Ok((p, lambda, v, ls))
            })
            .collect()
    };
    let mut pts = eval(&contour.initial_params())?;
    let step_of = |a: &C64, b: &C64| (b * a.conj()).arg();
    let bad = |v: &C64| !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0;
    let mut rounds = 0;
    let mut note = String::new();
    loop {
        if pts.iter().any(|p| bad(&p.2)) {
            note = "zero or non-finite value on the contour".into();
            break;
        }
        let len = pts.len();
        let mut mids = Vec::new();
        for i in 0..len {
            let j = (i + 1) % len;
            if step_of(&pts[i].2, &pts[j].2).abs() >= opts.max_phase_step {
                let hi = if j == 0 { end } else { pts[j].0 };
                mids.push(0.5 * (pts[i].0 + hi));
            }
        }
        if mids.is_empty() {
            break;
        }
        if rounds >= opts.max_rounds || len + mids.len() > opts.max_samples {
            note = format!("{} phase increments unresolved after {rounds} refinements", mids.len());
            break;
        }
        rounds += 1;
        let mut added = eval(&mids)?;
        pts.append(&mut added);
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    let len = pts.len();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for i in 0..len {
        let st = step_of(&pts[i].2, &pts[(i + 1) % len].2);
        total += st;
        max_step = max_step.max(st.abs());
    }
    let min_abs = pts.iter().map(|p| p.2.norm()).fold(f64::INFINITY, f64::min);
    let conclusive = note.is_empty() && max_step < opts.max_phase_step;
    let samples = pts.into_iter().map(|(_, lambda, value, log_scale)| ContourSample { lambda, value, log_scale }).collect();
    Ok(WindingResult {
        winding: if conclusive { Some((total / (2.0 * PI)).round() as i64) } else { None },
        status: if conclusive { WindingStatus::Conclusive } else { WindingStatus::Inconclusive },
        max_phase_step: max_step,
        min_abs,
        rounds,
        note,
        samples,
    })
}

/// Number of zeros of `D(·, ξ̃)` enclosed by the contour.
pub fn winding_number(setup: &EvansSetup, contour: &Contour, xi: &[f64], opts: &WindingOptions) -> Result<WindingResult> {
    winding_of(
        |lambda| {
            let v = evans_eval(setup, lambda, xi)?;
            Ok((v.mantissa, v.log_scale))
        },
        contour,
        opts,
    )
}

// ---------------------------------------------------------------------------
// derivative at the origin

/// `(1/2πi)∮ f(λ)/λ² dλ` on the circle `|λ − c| = r`, trapezoid rule: the
/// derivative `f'(c)` for analytic `f`.
pub fn cauchy_derivative<F>(f: F, center: C64, radius: f64, nodes: usize) -> Result<C64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let vals: Vec<C64> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            f(center + w * radius).map(|v| v / (w * radius))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<C64>() / nodes as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct OriginDerivative {
    pub radius: f64,
    pub nodes: usize,
    pub derivative: C64,
    /// Same with the radius doubled.
    pub derivative_double: C64,
    /// `|D'(0,0)|` over the block-volume scale of `D(0,0)`.
    pub relative: f64,
    /// Relative change under radius doubling.
    pub sensitivity: f64,
    pub d_at_origin: EvansValue,
}

/// Derivative `dD/dλ(0, 0)` by Cauchy integrals at radii `r` and `2r`.
pub fn d_lambda_at_origin(setup: &EvansSetup, radius: f64, nodes: usize) -> Result<OriginDerivative> {
    let xi = vec![0.0; setup.transverse_dim()];
    let origin = evans_eval(setup, C64::new(0.0, 0.0), &xi)?;
    let reference = origin.log_scale;
    let f = |lambda: C64| evans_eval(setup, lambda, &xi).map(|v| v.scaled(reference));
    let d1 = cauchy_derivative(f, C64::new(0.0, 0.0), radius, nodes)?;
    let d2 = cauchy_derivative(f, C64::new(0.0, 0.0), 2.0 * radius, nodes)?;
    Ok(OriginDerivative {
        radius,
        nodes,
        derivative: d1 * reference.exp(),
        derivative_double: d2 * reference.exp(),
        relative: d1.norm(),
        sensitivity: (d1 - d2).norm() / d1.norm(),
        d_at_origin: origin,
    })
}

// ---------------------------------------------------------------------------
// critical root λ*(ξ̃)

#[derive(Debug, Clone, Serialize)]
pub struct LambdaStarSample {
    pub xi: Vec<f64>,
    pub lambda: C64,
    pub newton_iterations: usize,
    pub last_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowFreqExpansion {
    pub alpha_tilde: Vec<f64>,
    pub beta_tilde: Vec<Vec<f64>>,
    /// `inf −Re λ*/|ξ̃|²` over the samples.
    pub theta: f64,
    /// Max deviation of the samples from `−iα̃·ξ̃ − ξ̃ᵗβ̃ξ̃`.
    pub fit_residual: f64,
    /// Same for a refit on samples with `|ξ̃|` at most half the maximum.
    pub fit_residual_half: f64,
    pub residual_ratio: f64,
    pub beta_positive: bool,
    pub pass: bool,
    pub samples: Vec<LambdaStarSample>,
}

/// Default continuation radii `0.1·k/16`, k = 1..16.
pub fn default_xi_path() -> Vec<f64> {
    (1..=16).map(|k| 0.1 * k as f64 / 16.0).collect()
}

/// Newton root of `D(·, ξ̃)` from `guess`, derivative by central differences.
pub fn newton_root(setup: &EvansSetup, xi: &[f64], guess: C64) -> Result<(C64, usize, f64)> {
    let mut lambda = guess;
    let mut last = f64::INFINITY;
    for it in 1..=30 {
        let h = 1e-5 * (1.0 + lambda.norm());
        let d0 = evans_eval(setup, lambda, xi)?;
        let ref_scale = d0.log_scale;
        let dp = evans_eval(setup, lambda + h, xi)?.scaled(ref_scale);
        let dm = evans_eval(setup, lambda - h, xi)?.scaled(ref_scale);
        let deriv = (dp - dm) / (2.0 * h);
        if deriv.norm() == 0.0 {
            return Err(Error::Singular(format!("dD/dλ vanished at λ = {lambda}")));
        }
        let delta = d0.mantissa / deriv;
        lambda -= delta;
        last = delta.norm();
        if last < 1e-11 {
            return Ok((lambda, it, last));
        }
    }
    Err(Error::NoConvergence(format!("Newton for λ* at ξ̃ = {xi:?}: last step {last:.3e}")))
}

/// Continues the root from `λ*(0) = 0` along each direction over `radii`,
/// then fits the second-order expansion.
pub fn track_lambda_star(setup: &EvansSetup, directions: &[Vec<f64>], radii: &[f64]) -> Result<LowFreqExpansion> {
    let m = setup.transverse_dim();
    if m == 0 {
        return Err(Error::InvalidInput("critical surface needs transverse directions (d ≥ 2)".into()));
    }
    let per_dir: Vec<Result<Vec<LambdaStarSample>>> = directions
        .par_iter()
        .map(|dir| {
            let mut hist: Vec<(f64, C64)> = vec![(0.0, C64::new(0.0, 0.0))];
            let mut out = Vec::new();
            for &r in radii {
                let guess = match hist.len() {
                    1 => hist[0].1,
                    n => {
                        let (r1, l1) = hist[n - 1];
                        let (r0, l0) = hist[n - 2];
                        l1 + (l1 - l0) * ((r - r1) / (r1 - r0))
                    }
                };
                let xi: Vec<f64> = dir.iter().map(|v| v * r).collect();
                let (lambda, iters, last) = newton_root(setup, &xi, guess).map_err(|e| {
                    let good = out.last().map(|s: &LambdaStarSample| format!("{:?} → {}", s.xi, s.lambda)).unwrap_or_default();
                    Error::NoConvergence(format!("lost λ* at |ξ̃| = {r} (last good sample {good}): {e}"))
                })?;
                let jump = (lambda - guess).norm();
                if jump > 0.5 * r + 1e-3 {
                    return Err(Error::NoConvergence(format!("λ* jumped by {jump:.3e} at |ξ̃| = {r}")));
                }
                hist.push((r, lambda));
                out.push(LambdaStarSample { xi, lambda, newton_iterations: iters, last_step: last });
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::new();
    for r in per_dir {
        samples.extend(r?);
    }
    fit_low_freq(&samples, m)
}

/// Least-squares fit of `λ*(ξ̃)`: the imaginary part on odd monomials of
/// degree 1, 3, 5 and the real part on even ones of degree 2, 4, 6; the
/// higher degrees absorb truncation bias and are dropped from the result.
pub fn fit_low_freq(samples: &[LambdaStarSample], m: usize) -> Result<LowFreqExpansion> {
    let fit = |subset: &[&LambdaStarSample]| -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
        let odd: Vec<Vec<usize>> = [1, 3, 5].iter().flat_map(|&d| monomials(m, d)).collect();
        let even: Vec<Vec<usize>> = [2, 4, 6].iter().flat_map(|&d| monomials(m, d)).collect();
        let eval_mono = |mono: &[usize], xi: &[f64]| mono.iter().zip(xi).map(|(p, x)| x.powi(*p as i32)).product::<f64>();
        let design = |monos: &[Vec<usize>]| {
            RMat::from_fn(subset.len(), monos.len(), |i, j| eval_mono(&monos[j], &subset[i].xi))
        };
        let im = RVec::from_iterator(subset.len(), subset.iter().map(|s| s.lambda.im));
        let re = RVec::from_iterator(subset.len(), subset.iter().map(|s| s.lambda.re));
        let c_im = scaled_lstsq(&design(&odd), &im)?;
        let c_re = scaled_lstsq(&design(&even), &re)?;
        let mut alpha = vec![0.0; m];
        for (j, mono) in odd.iter().enumerate().take(m) {
            let idx = mono.iter().position(|&p| p == 1).unwrap();
            alpha[idx] = -c_im[j];
        }
        let quad = monomials(m, 2);
        let mut beta = vec![vec![0.0; m]; m];
        for (j, mono) in quad.iter().enumerate() {
            let idx: Vec<usize> = mono.iter().enumerate().flat_map(|(i, &p)| std::iter::repeat(i).take(p)).collect();
            let (a, b) = (idx[0], idx[1]);
            if a == b {
                beta[a][a] = -c_re[j];
            } else {
                beta[a][b] = -0.5 * c_re[j];
                beta[b][a] = -0.5 * c_re[j];
            }
        }
        let mut resid: f64 = 0.0;
        for s in subset {
            let lin: f64 = alpha.iter().zip(&s.xi).map(|(a, x)| a * x).sum();
            let mut q = 0.0;
            for i in 0..m {
                for j in 0..m {
                    q += s.xi[i] * beta[i][j] * s.xi[j];
                }
            }
            let model = C64::new(-q, -lin);
            resid = resid.max((s.lambda - model).norm());
        }
        Ok((alpha, beta, resid))
    };
    let norm = |s: &LambdaStarSample| s.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let all: Vec<&LambdaStarSample> = samples.iter().collect();
    let max_norm = samples.iter().map(norm).fold(0.0, f64::max);
    let half: Vec<&LambdaStarSample> = samples.iter().filter(|s| norm(s) <= 0.5 * max_norm * (1.0 + 1e-9)).collect();
    let (alpha, beta, resid) = fit(&all)?;
    let resid_half = if half.len() >= 4 { fit(&half)?.2 } else { f64::NAN };
    let theta = samples
        .iter()
        .map(|s| -s.lambda.re / norm(s).powi(2))
        .fold(f64::INFINITY, f64::min);
    let bmat = RMat::from_fn(m, m, |i, j| beta[i][j]);
    let beta_positive = bmat.symmetric_eigenvalues().iter().all(|&e| e > 0.0);
    Ok(LowFreqExpansion {
        alpha_tilde: alpha,
        beta_tilde: beta,
        theta,
        fit_residual: resid,
        fit_residual_half: resid_half,
        residual_ratio: resid / resid_half,
        beta_positive,
        pass: beta_positive && theta > THETA_ZERO,
        samples: samples.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// resolvent kernel

/// Orthonormal basis trajectories over the whole grid.
pub struct KernelTrajectories {
    pub lambda: C64,
    pub xi: Vec<f64>,
    /// `q_plus[i]`, `q_minus[i]` at node i.
    q_plus: Vec<CMat>,
    q_minus: Vec<CMat>,
    /// `r_plus[i]` is the factor produced by the backward step `i+1 → i`,
    /// `r_minus[i]` by the forward step `i → i+1`.
    r_plus: Vec<CMat>,
    r_minus: Vec<CMat>,
    shift_plus: C64,
    shift_minus: C64,
}

pub fn kernel_trajectories(setup: &EvansSetup, lambda: C64, xi: &[f64]) -> Result<KernelTrajectories> {
    let total = 2 * setup.steps_per_side;
    let plus = setup.sweep(1, lambda, xi, 0, true)?;
    let minus = setup.sweep(-1, lambda, xi, total, true)?;
    // plus was recorded from node `total` down to 0
    let mut q_plus = plus.qs;
    q_plus.reverse();
    let mut r_plus = plus.rs;
    r_plus.reverse();
    Ok(KernelTrajectories {
        lambda,
        xi: xi.to_vec(),
        q_plus,
        q_minus: minus.qs,
        r_plus,
        r_minus: minus.rs,
        shift_plus: plus.basis.shift,
        shift_minus: minus.basis.shift,
    })
}

fn solve_upper(r: &CMat, b: &CMat) -> Result<CMat> {
    r.solve_upper_triangular(b).ok_or_else(|| Error::Singular("triangular factor".into()))
}

impl KernelTrajectories {
    /// `[(Φ⁺ Φ⁻)⁻¹](y)` with orthonormal blocks at node `j`.
    fn block_inverse(&self, setup: &EvansSetup, j: usize) -> Result<(CMat, f64)> {
        let n = setup.n();
        let k = setup.stable_dim;
        let mut m = CMat::zeros(n, n);
        m.columns_mut(0, k).copy_from(&self.q_plus[j]);
        m.columns_mut(k, n - k).copy_from(&self.q_minus[j]);
        let cond = crate::linalg::condition_number(&m);
        Ok((inverse(&m)?, cond))
    }

    /// Kernel `G(x_i, y_j)` at grid nodes; `x_i = y_j` returns the `x > y` limit.
    pub fn kernel(&self, setup: &EvansSetup, i: usize, j: usize) -> Result<CMat> {
        let n = setup.n();
        let k = setup.stable_dim;
        let (inv, _) = self.block_inverse(setup, j)?;
        let ainv = to_complex(&inverse_real(&shifted_flux_jacobian(&setup.system, setup.s, &setup.profile.eval(setup.node(j))))?);
        let h = setup.step;
        if i >= j {
            // Φ⁺(x_i) = e^{(i−j)hσ₊} Q_i R_{i−1}⁻¹ ··· R_j⁻¹ relative to Φ⁺(y) = Q_j
            let mut c = inv.rows(0, k).clone_owned();
            for l in j..i {
                c = solve_upper(&self.r_plus[l], &c)?;
            }
            let scale = (self.shift_plus * ((i - j) as f64 * h)).exp();
            Ok(-(&self.q_plus[i] * c * scale) * ainv)
        } else {
            let mut c = inv.rows(k, n - k).clone_owned();
            for l in (i..j).rev() {
                c = solve_upper(&self.r_minus[l], &c)?;
            }
            let scale = (-self.shift_minus * ((j - i) as f64 * h)).exp();
            Ok((&self.q_minus[i] * c * scale) * ainv)
        }
    }

    /// Left limit `G(y⁻, y)` at node `j`.
    pub fn kernel_left_limit(&self, setup: &EvansSetup, j: usize) -> Result<CMat> {
        let n = setup.n();
        let k = setup.stable_dim;
        let (inv, _) = self.block_inverse(setup, j)?;
        let ainv = to_complex(&inverse_real(&shifted_flux_jacobian(&setup.system, setup.s, &setup.profile.eval(setup.node(j))))?);
        Ok(&self.q_minus[j] * inv.rows(k, n - k) * ainv)
    }
}

/// Resolvent kernel `G_{λ,ξ̃}(x₁, y₁)`, both coordinates snapped to grid nodes.
pub fn resolvent_kernel(setup: &EvansSetup, lambda: C64, xi: &[f64], x1: f64, y1: f64) -> Result<CMat> {
    let traj = kernel_trajectories(setup, lambda, xi)?;
    traj.kernel(setup, setup.node_index(x1), setup.node_index(y1))
}

/// Adjoint coefficient `−((A¹−s)ᵀ)⁻¹(dQ − λ − iΣξA^j)*`.
fn adjoint_coefficient(setup: &EvansSetup, x: f64, lambda: C64, xi: &[f64]) -> Result<CMat> {
    let n = setup.n();
    let state = setup.profile.eval(x);
    let a = shifted_flux_jacobian(&setup.system, setup.s, &state);
    let mut b = to_complex(&setup.system.jac_relaxation(&state)) - CMat::identity(n, n) * lambda;
    for (j, v) in xi.iter().enumerate() {
        b -= to_complex(&setup.system.jac_flux(j + 1, &state)) * (I * *v);
    }
    let at_inv = to_complex(&inverse_real(&a.transpose())?);
    Ok(-(at_inv * b.adjoint()))
}

/// Magnus-4 propagation of `Y' = C(x)Y` from `x0` to `x1` with `steps` steps.
fn magnus_propagate<F>(coeff: F, x0: f64, x1: f64, steps: usize, mut y: CMat) -> Result<CMat>
where
    F: Fn(f64) -> Result<CMat>,
{
    let h = (x1 - x0) / steps as f64;
    for i in 0..steps {
        let xa = x0 + i as f64 * h;
        let a1 = coeff(xa + (0.5 - GAUSS_OFFSET) * h)?;
        let a2 = coeff(xa + (0.5 + GAUSS_OFFSET) * h)?;
        let comm = &a1 * &a2 - &a2 * &a1;
        let omega = (&a1 + &a2) * C64::new(0.5 * h, 0.0) - comm * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
        y = expm(&omega) * y;
    }
    Ok(y)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventReport {
    pub lambda: C64,
    pub xi: Vec<f64>,
    pub y1: f64,
    /// `‖(A¹−s)(y)·(G(y⁺,y) − G(y⁻,y)) + I‖`.
    pub jump_residual: f64,
    /// `max ‖M(z₂) − M(z₁)‖/‖M(z₁)‖` over base points `z₂ = z₁ ± 0.25`.
    pub m_independence: f64,
    /// Fitted exponential decay rates of `|G(x, y)|` in `|x − y|` for x > y and x < y.
    pub decay_rate_plus: f64,
    pub decay_rate_minus: f64,
    pub condition: f64,
}

/// Structural checks of the resolvent kernel at one `(λ, ξ̃, y₁)`.
pub fn resolvent_diagnostics(setup: &EvansSetup, lambda: C64, xi: &[f64], y1: f64) -> Result<ResolventReport> {
    let n = setup.n();
    let traj = kernel_trajectories(setup, lambda, xi)?;
    let j = setup.node_index(y1);
    let y = setup.node(j);
    let g_right = traj.kernel(setup, j, j)?;
    let g_left = traj.kernel_left_limit(setup, j)?;
    let a_y = to_complex(&shifted_flux_jacobian(&setup.system, setup.s, &setup.profile.eval(y)));
    let jump = &a_y * (g_right - g_left) + CMat::identity(n, n);
    let jump_residual = jump.norm();
    let (_, condition) = traj.block_inverse(setup, j)?;

    // M = Φ⁻¹(A¹−s)⁻¹Ψ̃^{−*} with Ψ̃ dual to Φ at z₁, both carried to z₂
    let k = setup.stable_dim;
    let mut phi = CMat::zeros(n, n);
    phi.columns_mut(0, k).copy_from(&traj.q_plus[j]);
    phi.columns_mut(k, n - k).copy_from(&traj.q_minus[j]);
    let psi = inverse(&(&a_y * &phi))?.adjoint();
    let m_at = |phi: &CMat, psi: &CMat, z: f64| -> Result<CMat> {
        let a = to_complex(&shifted_flux_jacobian(&setup.system, setup.s, &setup.profile.eval(z)));
        Ok(inverse(phi)? * inverse(&a)? * inverse(psi)?.adjoint())
    };
    let m1 = m_at(&phi, &psi, y)?;
    let mut m_independence: f64 = 0.0;
    for dz in [BASE_POINT_SEPARATION, -BASE_POINT_SEPARATION] {
        let z2 = y + dz;
        let steps = 200;
        let phi2 = magnus_propagate(|x| setup.coefficient(x, lambda, xi), y, z2, steps, phi.clone())?;
        let psi2 = magnus_propagate(|x| adjoint_coefficient(setup, x, lambda, xi), y, z2, steps, psi.clone())?;
        let m2 = m_at(&phi2, &psi2, z2)?;
        m_independence = m_independence.max((&m2 - &m1).norm() / m1.norm());
    }

    // decay of |G(x, y)| in |x − y| on [2, 20]
    let total = 2 * setup.steps_per_side;
    let stride = ((0.5 / setup.step).round() as usize).max(1);
    let lo = (2.0 / setup.step).round() as usize;
    let hi = (20.0 / setup.step).round() as usize;
    let fit_side = |plus: bool| -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut off = lo;
        while off <= hi {
            let i = if plus { j + off } else { j.wrapping_sub(off) };
            if i > total {
                break;
            }
            let g = traj.kernel(setup, i, j)?;
            let norm = g.norm();
            if norm > 0.0 {
                xs.push(off as f64 * setup.step);
                ys.push(norm.ln());
            }
            off += stride;
        }
        if xs.len() < 3 {
            return Ok(f64::NAN);
        }
        Ok(-linear_fit(&xs, &ys).0)
    };
    let decay_rate_plus = fit_side(true)?;
    let decay_rate_minus = fit_side(false)?;
    Ok(ResolventReport { lambda, xi: xi.to_vec(), y1: y, jump_residual, m_independence, decay_rate_plus, decay_rate_minus, condition })
}

/// Ten resolvent-set sample points in `{Re λ > 0}` for structural checks.
pub fn default_resolvent_points(transverse: usize) -> Vec<(C64, Vec<f64>)> {
    let lams = [
        C64::new(1.0, 0.0),
        C64::new(0.5, 0.5),
        C64::new(2.0, 0.0),
        C64::new(0.2, 1.0),
        C64::new(1.0, -2.0),
        C64::new(0.1, 0.3),
        C64::new(3.0, 3.0),
        C64::new(0.5, -1.0),
        C64::new(0.3, 0.0),
        C64::new(1.5, 4.0),
    ];
    lams.iter()
        .enumerate()
        .map(|(i, l)| {
            let xi = if transverse == 0 { vec![] } else { vec![0.05 * (i % 3) as f64; transverse] };
            (*l, xi)
        })
        .collect()
}
