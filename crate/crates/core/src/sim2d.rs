//! Finite-volume simulation of the 2-D Jin–Xin system around a planar shock,
//! in the frame moving with the shock.
//!
//! MUSCL (minmod) reconstruction with a Lax–Friedrichs flux, SSP-RK2 for the
//! transport part and the exact relaxation solve in a Strang splitting.
//! Periodic in x̃, zero-gradient ghost cells at x₁ = ±L.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::front::{delta_initial, evolve_delta, mollify, FrontCoefficients, FrontField, TransverseGrid};
use crate::model::{builtin_jin_xin_2d, RelaxationSystem, ScalarMap};
use crate::profile::{linear_fit, WaveProfile};

const NC: usize = 3;

/// 2-D Jin–Xin coefficients: `u_t + v_x + w_y = 0`,
/// `v_t + a²u_x = (f1(u) − v)/τ`, `w_t + b²u_y = (f2(u) − w)/τ`.
#[derive(Clone)]
pub struct SimModel {
    pub a: f64,
    pub b: f64,
    pub f1: ScalarMap,
    pub f2: ScalarMap,
    pub tau: f64,
}

impl SimModel {
    pub fn system(&self) -> Result<RelaxationSystem> {
        builtin_jin_xin_2d(self.a, self.b, self.f1.clone(), self.f2.clone(), self.tau)
    }

    /// Largest normal characteristic speed in the frame moving with `s`.
    pub fn normal_speed(&self, s: f64) -> f64 {
        self.a + s.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimGrid {
    /// Normal half-width L: cells cover `[−L, L]`.
    pub half_width: f64,
    /// Transverse period W.
    pub width: f64,
    pub nx: usize,
    pub ny: usize,
}

impl SimGrid {
    pub fn new(half_width: f64, width: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(half_width > 0.0 && width > 0.0) || nx < 4 || ny < 1 {
            return Err(Error::InvalidInput("sim grid needs positive extents, nx ≥ 4 and ny ≥ 1".into()));
        }
        Ok(Self { half_width, width, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.width / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy()
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn transverse(&self) -> Result<TransverseGrid> {
        TransverseGrid::new(vec![self.ny], vec![self.width])
    }

    /// Single-column grid with the same normal discretization.
    pub fn column(&self) -> SimGrid {
        SimGrid { ny: 1, ..*self }
    }

    /// Same extents with both spacings halved.
    pub fn refined(&self) -> SimGrid {
        SimGrid { nx: 2 * self.nx, ny: 2 * self.ny, ..*self }
    }

    /// Checks the shock layer resolution (cells per `|[u]|/max|u'|`) and that
    /// the fastest frozen signal from the origin stays inside until `t_final`.
    pub fn validate(&self, model: &SimModel, profile: &WaveProfile, t_final: f64) -> Result<GridChecks> {
        let max_slope = (0..profile.len())
            .map(|i| profile.derivative[i * profile.n_comp].abs())
            .fold(0.0, f64::max);
        let thickness = profile.jump_u().abs() / max_slope;
        let cells_across = thickness / self.dx();
        let reach = model.normal_speed(profile.s) * t_final;
        let checks = GridChecks { layer_thickness: thickness, cells_across_layer: cells_across, signal_reach: reach };
        if cells_across < 20.0 {
            return Err(Error::InvalidInput(format!(
                "shock layer of thickness {thickness:.3} has only {cells_across:.1} cells (need 20)"
            )));
        }
        if reach > self.half_width {
            return Err(Error::InvalidInput(format!(
                "signals travel {reach:.1} by t_final but the half-width is {}",
                self.half_width
            )));
        }
        Ok(checks)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridChecks {
    pub layer_thickness: f64,
    pub cells_across_layer: f64,
    pub signal_reach: f64,
}

/// Conserved cell averages, index `((i·ny + j)·3 + c)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub cells: Vec<f64>,
    pub frame_speed: f64,
    /// Net u-mass that has left through x₁ = ±L (times ΔV).
    pub boundary_outflow: f64,
    pub steps: u64,
}

impl SimState {
    /// `Σ u·ΔV`.
    pub fn mass(&self, grid: &SimGrid) -> f64 {
        self.cells.iter().step_by(NC).sum::<f64>() * grid.dx() * grid.dy()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.cells.iter().skip(c).step_by(NC).cloned().collect()
    }
}

/// Samples a (column) profile at the cell centres, constant in x̃.
pub fn sample_profile(grid: &SimGrid, profile: &WaveProfile) -> Result<SimState> {
    if profile.n_comp != NC {
        return Err(Error::InvalidInput(format!("profile has {} components, expected 3", profile.n_comp)));
    }
    let mut cells = vec![0.0; grid.cells() * NC];
    let mut v = [0.0; NC];
    let mut d = [0.0; NC];
    for i in 0..grid.nx {
        profile.eval_with_derivative(grid.x(i), &mut v, &mut d);
        for j in 0..grid.ny {
            cells[(i * grid.ny + j) * NC..][..NC].copy_from_slice(&v);
        }
    }
    Ok(SimState { t: 0.0, cells, frame_speed: profile.s, boundary_outflow: 0.0, steps: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `ζ₀ exp(−|x₁−c₁|²/2σ₁² − |ỹ−c₂|²/2σ₂²)`.
    Gaussian,
    /// Gaussian times `(x₁ − c₁)/σ₁`; zero x₁-integral.
    AntisymmetricGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub kind: PerturbationKind,
    pub center: [f64; 2],
    pub sigma: [f64; 2],
    /// Support radius in units of σ, per axis.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_cutoff() -> f64 {
    9.0
}

impl Perturbation {
    fn value(&self, x1: f64, dy: f64) -> f64 {
        let z1 = (x1 - self.center[0]) / self.sigma[0];
        let z2 = dy / self.sigma[1];
        if z1.abs() > self.cutoff || z2.abs() > self.cutoff {
            return 0.0;
        }
        let g = self.amplitude * (-0.5 * (z1 * z1 + z2 * z2)).exp();
        match self.kind {
            PerturbationKind::Gaussian => g,
            PerturbationKind::AntisymmetricGaussian => g * z1,
        }
    }
}

/// Norms of the initial perturbation (u-component only).
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationNorms {
    pub l1: f64,
    pub l2: f64,
    /// Discrete Sobolev surrogate: square root of the summed squared L² norms
    /// of the forward differences of orders 0–3 along each axis.
    pub h3_surrogate: f64,
    /// `Σ |x₁|·|U₀|·ΔV`.
    pub x1_weighted_l1: f64,
}

fn perturbation_norms(grid: &SimGrid, p: &[f64]) -> PerturbationNorms {
    let (nx, ny) = (grid.nx, grid.ny);
    let vol = grid.dx() * grid.dy();
    let l1 = p.iter().map(|v| v.abs()).sum::<f64>() * vol;
    let l2 = (p.iter().map(|v| v * v).sum::<f64>() * vol).sqrt();
    let x1w = (0..nx * ny).map(|k| grid.x(k / ny).abs() * p[k].abs()).sum::<f64>() * vol;
    let mut h = l2 * l2;
    let mut dxk = p.to_vec();
    let mut dyk = p.to_vec();
    for _ in 0..3 {
        let mut nxk = vec![0.0; nx * ny];
        let mut nyk = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                if i + 1 < nx {
                    nxk[i * ny + j] = (dxk[(i + 1) * ny + j] - dxk[i * ny + j]) / grid.dx();
                }
                nyk[i * ny + j] = (dyk[i * ny + (j + 1) % ny] - dyk[i * ny + j]) / grid.dy();
            }
        }
        h += (nxk.iter().map(|v| v * v).sum::<f64>() + nyk.iter().map(|v| v * v).sum::<f64>()) * vol;
        dxk = nxk;
        dyk = nyk;
    }
    PerturbationNorms { l1, l2, h3_surrogate: h.sqrt(), x1_weighted_l1: x1w }
}

/// Profile plus a u-perturbation; returns the state, the perturbation's
/// u-samples and its norms.
pub fn init_perturbed_shock(
    grid: &SimGrid,
    profile: &WaveProfile,
    pert: &Perturbation,
) -> Result<(SimState, Vec<f64>, PerturbationNorms)> {
    let reach = pert.cutoff * pert.sigma[0];
    if pert.center[0] - reach <= -grid.half_width || pert.center[0] + reach >= grid.half_width {
        return Err(Error::InvalidInput("perturbation support touches the normal boundary".into()));
    }
    if 2.0 * pert.cutoff * pert.sigma[1] >= grid.width {
        return Err(Error::InvalidInput("perturbation support wraps around the transverse period".into()));
    }
    let mut state = sample_profile(grid, profile)?;
    let w = grid.width;
    let mut p = vec![0.0; grid.cells()];
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let mut dy = (grid.y(j) - pert.center[1]).rem_euclid(w);
            if dy > 0.5 * w {
                dy -= w;
            }
            let v = pert.value(grid.x(i), dy);
            p[i * grid.ny + j] = v;
            state.cells[(i * grid.ny + j) * NC] += v;
        }
    }
    let norms = perturbation_norms(grid, &p);
    Ok((state, p, norms))
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Scratch buffers and the discretization constants of one grid.
pub struct Solver {
    pub model: SimModel,
    pub grid: SimGrid,
    pub s: f64,
    pub cfl: f64,
    fx: Vec<f64>,
    rhs: Vec<f64>,
    stage: Vec<f64>,
}

impl Solver {
    pub fn new(model: SimModel, grid: SimGrid, s: f64, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(Error::InvalidInput(format!("CFL number {cfl} outside (0, 0.5]")));
        }
        let n = grid.cells() * NC;
        Ok(Self {
            model,
            grid,
            s,
            cfl,
            fx: vec![0.0; (grid.nx + 1) * grid.ny * NC],
            rhs: vec![0.0; n],
            stage: vec![0.0; n],
        })
    }

    /// `CFL / (α₁/Δx₁ + α₂/Δx̃)`; the x̃ term is dropped on a single column.
    pub fn stable_dt(&self) -> f64 {
        let mut rate = self.model.normal_speed(self.s) / self.grid.dx();
        if self.grid.ny > 1 {
            rate += self.model.b / self.grid.dy();
        }
        self.cfl / rate
    }

    /// Transport right-hand side; returns the net u outflow rate through
    /// the normal boundaries.
    fn transport_rhs(&mut self, u: &[f64]) -> f64 {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (s, a2, b2) = (self.s, self.model.a * self.model.a, self.model.b * self.model.b);
        let ax = self.model.normal_speed(s);
        let ay = self.model.b;
        let row = ny * NC;
        let cell = |i: isize, j: usize, c: usize| u[((i.clamp(0, nx as isize - 1) as usize) * ny + j) * NC + c];

        self.fx.par_chunks_mut(row).enumerate().for_each(|(f, out)| {
            let (l, r) = (f as isize - 1, f as isize);
            for j in 0..ny {
                let mut ul = [0.0; NC];
                let mut ur = [0.0; NC];
                for c in 0..NC {
                    let (lm, l0, lp) = (cell(l - 1, j, c), cell(l, j, c), cell(l + 1, j, c));
                    ul[c] = l0 + 0.5 * minmod(l0 - lm, lp - l0);
                    let (rm, r0, rp) = (cell(r - 1, j, c), cell(r, j, c), cell(r + 1, j, c));
                    ur[c] = r0 - 0.5 * minmod(r0 - rm, rp - r0);
                }
                let fl = [ul[1] - s * ul[0], a2 * ul[0] - s * ul[1], -s * ul[2]];
                let fr = [ur[1] - s * ur[0], a2 * ur[0] - s * ur[1], -s * ur[2]];
                for c in 0..NC {
                    out[j * NC + c] = 0.5 * (fl[c] + fr[c]) - 0.5 * ax * (ur[c] - ul[c]);
                }
            }
        });

        let fx = &self.fx;
        let (dx, dy) = (g.dx(), g.dy());
        self.rhs.par_chunks_mut(row).enumerate().for_each(|(i, out)| {
            let base = &u[i * row..(i + 1) * row];
            let at = |j: usize, c: usize| base[(j % ny) * NC + c];
            let mut fy = vec![0.0; row];
            if ny > 1 {
                for j in 0..ny {
                    let (jm, j1, j2) = ((j + ny - 1) % ny, j + 1, j + 2);
                    let mut ul = [0.0; NC];
                    let mut ur = [0.0; NC];
                    for c in 0..NC {
                        let (m, z, p, q) = (at(jm, c), at(j, c), at(j1, c), at(j2, c));
                        ul[c] = z + 0.5 * minmod(z - m, p - z);
                        ur[c] = p - 0.5 * minmod(p - z, q - p);
                    }
                    let fl = [ul[2], 0.0, b2 * ul[0]];
                    let fr = [ur[2], 0.0, b2 * ur[0]];
                    for c in 0..NC {
                        fy[j * NC + c] = 0.5 * (fl[c] + fr[c]) - 0.5 * ay * (ur[c] - ul[c]);
                    }
                }
            }
            for j in 0..ny {
                let jm = (j + ny - 1) % ny;
                for c in 0..NC {
                    let k = j * NC + c;
                    let dfx = fx[(i + 1) * row + k] - fx[i * row + k];
                    let dfy = if ny > 1 { fy[k] - fy[jm * NC + c] } else { 0.0 };
                    out[k] = -dfx / dx - dfy / dy;
                }
            }
        });

        (0..ny).map(|j| fx[nx * row + j * NC] - fx[j * NC]).sum::<f64>() * dy
    }

    /// Exact relaxation over `h`: u is frozen, v and w relax to f(u).
    fn relax(&self, cells: &mut [f64], h: f64) {
        let e = (-h / self.model.tau).exp();
        let (f1, f2) = (&self.model.f1, &self.model.f2);
        cells.par_chunks_mut(NC * self.grid.ny.max(1)).for_each(|row| {
            for c in row.chunks_mut(NC) {
                let (e1, e2) = (f1.eval(c[0]), f2.eval(c[0]));
                c[1] = e1 + (c[1] - e1) * e;
                c[2] = e2 + (c[2] - e2) * e;
            }
        });
    }

    /// One Strang step `R(dt/2) T(dt) R(dt/2)` with SSP-RK2 transport.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<()> {
        self.relax(&mut state.cells, 0.5 * dt);
        let out1 = self.transport_rhs(&state.cells);
        let mut stage = std::mem::take(&mut self.stage);
        stage.par_iter_mut().zip(state.cells.par_iter()).zip(self.rhs.par_iter()).for_each(|((s, u), r)| {
            *s = u + dt * r
        });
        let out2 = self.transport_rhs(&stage);
        state.cells.par_iter_mut().zip(stage.par_iter()).zip(self.rhs.par_iter()).for_each(|((u, s), r)| {
            *u = 0.5 * *u + 0.5 * (s + dt * r)
        });
        self.stage = stage;
        self.relax(&mut state.cells, 0.5 * dt);
        state.boundary_outflow += 0.5 * dt * (out1 + out2);
        state.t += dt;
        state.steps += 1;
        if let Some(k) = state.cells.iter().position(|v| !v.is_finite()) {
            let cell = k / NC;
            return Err(Error::NonFinite(format!(
                "cell (i = {}, j = {}), component {} at t = {}",
                cell / self.grid.ny,
                cell % self.grid.ny,
                k % NC,
                state.t
            )));
        }
        Ok(())
    }

    /// Steps with the stable dt, shortening the last step to land on `t_target`.
    pub fn advance_to(&mut self, state: &mut SimState, t_target: f64) -> Result<()> {
        let dt = self.stable_dt();
        while state.t < t_target - 1e-12 * t_target.max(1.0) {
            let h = dt.min(t_target - state.t);
            self.step(state, h)?;
        }
        Ok(())
    }
}

/// WaveProfile interpolating a discrete column (cell centres), with
/// fourth-order finite-difference slopes for the Hermite interpolant.
pub fn column_profile(grid: &SimGrid, column: &[f64], like: &WaveProfile) -> WaveProfile {
    let nx = grid.nx;
    let h = grid.dx();
    let at = |i: isize, c: usize| column[(i.clamp(0, nx as isize - 1) as usize) * NC + c];
    let mut derivative = vec![0.0; nx * NC];
    for i in 0..nx as isize {
        for c in 0..NC {
            derivative[i as usize * NC + c] =
                (at(i - 2, c) - 8.0 * at(i - 1, c) + 8.0 * at(i + 1, c) - at(i + 2, c)) / (12.0 * h);
        }
    }
    WaveProfile {
        s: like.s,
        n_comp: NC,
        z_grid: (0..nx).map(|i| grid.x(i)).collect(),
        values: column.to_vec(),
        derivative,
        u_minus: column[..NC].to_vec(),
        u_plus: column[(nx - 1) * NC..].to_vec(),
        amplitude: like.amplitude,
        decay_rate: like.decay_rate,
        decay_rate_minus: like.decay_rate_minus,
        decay_rate_plus: like.decay_rate_plus,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxedProfile {
    #[serde(skip)]
    pub profile: WaveProfile,
    pub time: f64,
    /// Final `max|ΔU|/Δt`.
    pub rate: f64,
    pub converged: bool,
}

/// Marches the sampled profile on a single column until the update rate
/// drops below `tolerance`, giving the scheme's own stationary shock. The
/// split scheme's fixed point depends on the step, so `dt` must be the one
/// used afterwards on the full grid.
pub fn relax_profile(
    model: &SimModel,
    grid: &SimGrid,
    profile: &WaveProfile,
    dt: f64,
    tolerance: f64,
    t_max: f64,
) -> Result<RelaxedProfile> {
    let col = grid.column();
    let mut solver = Solver::new(model.clone(), col, profile.s, 0.5)?;
    if dt > solver.stable_dt() {
        return Err(Error::InvalidInput(format!("relaxation step {dt} exceeds the stable step")));
    }
    let mut state = sample_profile(&col, profile)?;
    let mut rate = f64::INFINITY;
    while state.t < t_max {
        let before = state.cells.clone();
        solver.step(&mut state, dt)?;
        rate = state.cells.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / dt;
        if rate < tolerance {
            break;
        }
    }
    Ok(RelaxedProfile {
        profile: column_profile(&col, &state.cells, profile),
        time: state.t,
        rate,
        converged: rate < tolerance,
    })
}

/// `‖Ũ(·, t) − Ū(x₁ − δ(x̃, t))‖_{L²}` over all components and cells.
pub fn perturbation_norm(state: &SimState, grid: &SimGrid, reference: &WaveProfile, delta: &FrontField) -> Result<f64> {
    if delta.grid.n != [grid.ny] || (delta.grid.width[0] - grid.width).abs() > 1e-12 * grid.width {
        return Err(Error::InvalidInput("front field grid does not match the transverse grid".into()));
    }
    if (delta.t - state.t).abs() > 1e-9 * state.t.max(1.0) {
        return Err(Error::InvalidInput(format!("front field at t = {} but state at t = {}", delta.t, state.t)));
    }
    let dmax = delta.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if dmax > 0.25 * grid.half_width {
        return Err(Error::InvalidInput(format!("front shift {dmax} exceeds the interpolation range")));
    }
    let ny = grid.ny;
    let sum: f64 = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut v = [0.0; NC];
            let mut d = [0.0; NC];
            let mut acc = 0.0;
            for j in 0..ny {
                reference.eval_with_derivative(grid.x(i) - delta.values[j], &mut v, &mut d);
                let k = (i * ny + j) * NC;
                for c in 0..NC {
                    acc += (state.cells[k + c] - v[c]).powi(2);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok((sum * grid.dx() * grid.dy()).sqrt())
}

/// Front displacement read off the state by u-mass:
/// `−[u]⁻¹ ∫ (u − ū) dx₁` per transverse cell.
pub fn measured_front(state: &SimState, grid: &SimGrid, reference: &WaveProfile, coeffs: FrontCoefficients) -> Result<FrontField> {
    let ny = grid.ny;
    let mut pert = vec![0.0; grid.cells()];
    let mut v = [0.0; NC];
    let mut d = [0.0; NC];
    for i in 0..grid.nx {
        reference.eval_with_derivative(grid.x(i), &mut v, &mut d);
        for j in 0..ny {
            pert[i * ny + j] = state.cells[(i * ny + j) * NC] - v[0];
        }
    }
    let mut f = delta_initial(&pert, grid.nx, grid.dx(), &grid.transverse()?, reference.jump_u(), coeffs)?;
    f.t = state.t;
    Ok(f)
}

/// Transverse position from the phase of the first Fourier mode, in `[0, W)`.
pub fn front_phase_position(field: &FrontField) -> f64 {
    let w = field.grid.width[0];
    let k = 2.0 * PI / w;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in field.values.iter().enumerate() {
        let y = field.grid.coords(i)[0];
        re += v * (k * y).cos();
        im -= v * (k * y).sin();
    }
    (-im.atan2(re) / k).rem_euclid(w)
}

/// Unwraps a sequence of periodic positions into a continuous path.
pub fn unwrap_positions(pos: &[f64], period: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pos.len());
    let mut offset = 0.0;
    for (k, p) in pos.iter().enumerate() {
        if k > 0 {
            let prev = pos[k - 1];
            let jump = p - prev;
            if jump > 0.5 * period {
                offset -= period;
            } else if jump < -0.5 * period {
                offset += period;
            }
        }
        out.push(p + offset);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub t_min: f64,
    pub samples_used: usize,
    /// Slope of `ln‖·‖` against `ln(1 + t)`.
    pub exponent: f64,
    pub intercept: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    /// `−(d − 1)/4 − 1/2` for d = 2, without the σ allowance.
    pub theoretical_exponent: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub const DECAY_THRESHOLD: f64 = -0.55;

/// Log-log fit over samples with `t ≥ t_min`; needs ≥ 8 samples whose
/// `1 + t` spans a decade.
pub fn decay_fit(times: &[f64], norms: &[f64], t_min: f64) -> Result<DecayReport> {
    if times.len() != norms.len() {
        return Err(Error::InvalidInput("times and norms differ in length".into()));
    }
    let used: Vec<(f64, f64)> =
        times.iter().zip(norms).filter(|(t, _)| **t >= t_min).map(|(t, n)| ((1.0 + t).ln(), n.ln())).collect();
    if used.len() < 8 {
        return Err(Error::InvalidInput(format!("{} samples beyond t_min, need 8", used.len())));
    }
    let lo = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 10f64.ln() - 1e-12 {
        return Err(Error::InvalidInput("samples beyond t_min span less than a decade".into()));
    }
    if used.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::NonFinite("non-positive norm in decay series".into()));
    }
    let x: Vec<f64> = used.iter().map(|p| p.0).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let se = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(DecayReport {
        times: times.to_vec(),
        norms: norms.to_vec(),
        t_min,
        samples_used: used.len(),
        exponent: slope,
        intercept,
        half_width: 2.0 * se,
        theoretical_exponent: -0.75,
        threshold: DECAY_THRESHOLD,
        pass: slope <= DECAY_THRESHOLD,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: SimGrid,
    pub perturbation: Perturbation,
    pub t_final: f64,
    pub t_min: f64,
    /// Geometric sample times in `[1, t_final]` (t = 0 is always sampled).
    pub samples: usize,
    pub cfl: f64,
    /// Mollification radius for the front model.
    pub epsilon: f64,
    pub relax_tolerance: f64,
    pub relax_time_max: f64,
}

impl ExperimentConfig {
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        let mut t = vec![0.0];
        t.extend((0..n).map(|k| self.t_final.powf(k as f64 / (n - 1) as f64)));
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    /// Residual against the profile shifted by the evolved front model.
    pub residual: f64,
    /// Residual against the unshifted profile (δ ≡ 0).
    pub residual_untracked: f64,
    pub mass: f64,
    pub boundary_outflow: f64,
    /// Unwrapped transverse position of the measured front.
    pub centroid: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub grid: SimGrid,
    pub grid_checks: GridChecks,
    pub dt: f64,
    pub steps: u64,
    pub relaxed: RelaxedProfile,
    pub perturbation: PerturbationNorms,
    pub initial_residual: f64,
    pub front_mass: f64,
    pub series: Vec<SeriesRow>,
    pub tracked: DecayReport,
    pub untracked: DecayReport,
    /// `untracked.exponent − tracked.exponent`.
    pub exponent_gap: f64,
    pub drift_speed: f64,
    pub alpha_tilde: f64,
    pub drift_sign_matches: bool,
    pub drift_relative_error: f64,
    /// Relative change of the total u-mass after accounting for boundary flux.
    pub mass_defect: f64,
}

/// Reference nonlinear experiment: relax the discrete shock, perturb it,
/// run to `t_final`, and compare against the evolved front model.
/// `on_sample` sees the state at every sample time.
pub fn run_experiment(
    model: &SimModel,
    profile: &WaveProfile,
    front: &FrontCoefficients,
    cfg: &ExperimentConfig,
    mut on_sample: impl FnMut(&SimState) -> Result<()>,
) -> Result<ExperimentReport> {
    let grid = cfg.grid;
    let grid_checks = grid.validate(model, profile, cfg.t_final)?;
    if front.alpha.len() != 1 {
        return Err(Error::InvalidInput("sim2d needs one transverse dimension in the front model".into()));
    }
    let mut solver = Solver::new(model.clone(), grid, profile.s, cfg.cfl)?;
    let relaxed = relax_profile(model, &grid, profile, solver.stable_dt(), cfg.relax_tolerance, cfg.relax_time_max)?;
    let reference = &relaxed.profile;
    let (mut state, pert, norms) = init_perturbed_shock(&grid, reference, &cfg.perturbation)?;
    let tgrid = grid.transverse()?;
    let delta0 = delta_initial(&pert, grid.nx, grid.dx(), &tgrid, reference.jump_u(), front.clone())?;
    let smooth0 = mollify(&delta0, cfg.epsilon)?;
    let zero = FrontField::from_values(tgrid.clone(), vec![0.0; grid.ny], front.clone())?;
    let mass0 = state.mass(&grid);

    let mut series = Vec::new();
    let mut positions = Vec::new();
    for &t in &cfg.sample_times() {
        solver.advance_to(&mut state, t)?;
        state.t = t;
        let delta = evolve_delta(&smooth0, t)?;
        let mut z = zero.clone();
        z.t = t;
        let residual = perturbation_norm(&state, &grid, reference, &delta)?;
        let residual_untracked = perturbation_norm(&state, &grid, reference, &z)?;
        let measured = measured_front(&state, &grid, reference, front.clone())?;
        positions.push(front_phase_position(&measured));
        series.push(SeriesRow {
            t,
            residual,
            residual_untracked,
            mass: state.mass(&grid),
            boundary_outflow: state.boundary_outflow,
            centroid: 0.0,
        });
        on_sample(&state)?;
    }
    let unwrapped = unwrap_positions(&positions, grid.width);
    for (row, c) in series.iter_mut().zip(&unwrapped) {
        row.centroid = c - unwrapped[0];
    }
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    let tracked = decay_fit(&times, &series.iter().map(|r| r.residual).collect::<Vec<_>>(), cfg.t_min)?;
    let untracked = decay_fit(&times, &series.iter().map(|r| r.residual_untracked).collect::<Vec<_>>(), cfg.t_min)?;
    let (ts, cs): (Vec<f64>, Vec<f64>) =
        series.iter().filter(|r| r.t >= cfg.t_min).map(|r| (r.t, r.centroid)).unzip();
    let (drift_speed, _) = linear_fit(&ts, &cs);
    let alpha_tilde = front.alpha[0];
    let last = series.last().expect("at least one sample");
    let mass_defect = (last.mass + last.boundary_outflow - mass0).abs() / mass0.abs().max(1e-300);
    Ok(ExperimentReport {
        grid,
        grid_checks,
        dt: solver.stable_dt(),
        steps: state.steps,
        perturbation: norms,
        initial_residual: series[0].residual,
        front_mass: delta0.mass(),
        exponent_gap: untracked.exponent - tracked.exponent,
        drift_sign_matches: drift_speed.signum() == alpha_tilde.signum(),
        drift_relative_error: (drift_speed - alpha_tilde).abs() / alpha_tilde.abs(),
        drift_speed,
        alpha_tilde,
        series,
        tracked,
        untracked,
        relaxed,
        mass_defect,
    })
}
