//! Traveling-wave profiles `Ū(x₁ − st)` solving `(A¹(Ū) − sI)Ū' = Q(Ū)/τ`.

use serde::Serialize;

use crate::enskog::{default_directions, default_radii, dispersion_fit, equilibrium_flux, equilibrium_flux_derivative};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_real, projector_right_of, row_space_basis, singular_values, to_complex, BandMatrix, RMat, RVec};
use crate::model::{RelaxationSystem, StatePoint};

#[derive(Debug, Clone, Serialize)]
pub struct ShockSpeed {
    pub s: f64,
    pub char_speed_minus: f64,
    pub char_speed_plus: f64,
    /// `f*₁'(u₊) < s < f*₁'(u₋)`.
    pub lax: bool,
}

pub fn rankine_hugoniot_speed(system: &RelaxationSystem, u_minus: f64, u_plus: f64) -> Result<ShockSpeed> {
    if u_minus == u_plus {
        return Err(Error::InvalidInput("endpoints u_minus and u_plus must differ".into()));
    }
    let s = (equilibrium_flux(system, u_plus, 0) - equilibrium_flux(system, u_minus, 0)) / (u_plus - u_minus);
    let cm = equilibrium_flux_derivative(system, u_minus, 0);
    let cp = equilibrium_flux_derivative(system, u_plus, 0);
    Ok(ShockSpeed { s, char_speed_minus: cm, char_speed_plus: cp, lax: cp < s && s < cm })
}

/// Uniform grid on `[−half_width, half_width]` with `intervals` cells.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileGrid {
    pub half_width: f64,
    pub intervals: usize,
}

impl ProfileGrid {
    pub fn new(half_width: f64, intervals: usize) -> Self {
        Self { half_width, intervals }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..=self.intervals).map(|i| -self.half_width + h * i as f64).collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileOptions {
    /// Amplitude guard `|u₊ − u₋| ≤ factor · dist(s, σ(A¹(U±)))`; `None` disables it.
    pub amplitude_guard: Option<f64>,
    /// Node location of the phase condition `u(z₀) = (u₋ + u₊)/2`.
    pub phase_point: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Largest accepted `|Ū(±L) − U±|`.
    pub endpoint_tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { amplitude_guard: Some(0.3), phase_point: 0.0, newton_tol: 1e-12, max_newton: 40, endpoint_tol: 1e-6 }
    }
}

/// Sampled profile with cubic Hermite interpolation between nodes and
/// constant extension beyond `[−L, L]`.
#[derive(Debug, Clone, Serialize)]
pub struct WaveProfile {
    pub s: f64,
    pub n_comp: usize,
    pub z_grid: Vec<f64>,
    /// Node-major values, `n_comp` per node.
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub amplitude: f64,
    /// Slowest fitted exponential approach rate to the endpoints.
    pub decay_rate: f64,
    pub decay_rate_minus: f64,
    pub decay_rate_plus: f64,
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.z_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_grid.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.z_grid[self.len() - 1].max(-self.z_grid[0])
    }

    pub fn node(&self, i: usize) -> RVec {
        RVec::from_column_slice(&self.values[i * self.n_comp..(i + 1) * self.n_comp])
    }

    pub fn node_derivative(&self, i: usize) -> RVec {
        RVec::from_column_slice(&self.derivative[i * self.n_comp..(i + 1) * self.n_comp])
    }

    pub fn endpoint_minus(&self) -> RVec {
        RVec::from_column_slice(&self.u_minus)
    }

    pub fn endpoint_plus(&self) -> RVec {
        RVec::from_column_slice(&self.u_plus)
    }

    pub fn jump_u(&self) -> f64 {
        self.u_plus[0] - self.u_minus[0]
    }

    fn locate(&self, z: f64) -> usize {
        let n = self.len();
        match self.z_grid.binary_search_by(|p| p.partial_cmp(&z).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Interpolated value and derivative at `z`.
    pub fn eval_with_derivative(&self, z: f64, out: &mut [f64], dout: &mut [f64]) {
        let n = self.len();
        let nc = self.n_comp;
        if z <= self.z_grid[0] {
            out.copy_from_slice(&self.u_minus);
            dout.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        if z >= self.z_grid[n - 1] {
            out.copy_from_slice(&self.u_plus);
            dout.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let i = self.locate(z);
        let (z0, z1) = (self.z_grid[i], self.z_grid[i + 1]);
        let h = z1 - z0;
        let t = (z - z0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        for k in 0..nc {
            let (y0, y1) = (self.values[i * nc + k], self.values[(i + 1) * nc + k]);
            let (m0, m1) = (self.derivative[i * nc + k], self.derivative[(i + 1) * nc + k]);
            out[k] = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
            dout[k] = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
        }
    }

    pub fn eval(&self, z: f64) -> RVec {
        let mut v = vec![0.0; self.n_comp];
        let mut d = vec![0.0; self.n_comp];
        self.eval_with_derivative(z, &mut v, &mut d);
        RVec::from_vec(v)
    }

    pub fn eval_derivative(&self, z: f64) -> RVec {
        let mut v = vec![0.0; self.n_comp];
        let mut d = vec![0.0; self.n_comp];
        self.eval_with_derivative(z, &mut v, &mut d);
        RVec::from_vec(d)
    }

    /// Location where the interpolated u-component crosses the midpoint value.
    pub fn center(&self) -> f64 {
        let mid = 0.5 * (self.u_minus[0] + self.u_plus[0]);
        let sign = (self.u_plus[0] - self.u_minus[0]).signum();
        let n = self.len();
        let g = |z: f64| (self.eval(z)[0] - mid) * sign;
        let mut lo = self.z_grid[0];
        let mut hi = self.z_grid[n - 1];
        for i in 0..n - 1 {
            let a = self.values[i * self.n_comp] - mid;
            let b = self.values[(i + 1) * self.n_comp] - mid;
            if a * b <= 0.0 {
                lo = self.z_grid[i];
                hi = self.z_grid[i + 1];
                break;
            }
        }
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    /// Copy of the profile resampled on `z ↦ z + shift`, so that the returned
    /// profile's node `z` carries the value at `z + shift` of this one.
    pub fn shifted(&self, shift: f64) -> WaveProfile {
        let mut out = self.clone();
        let nc = self.n_comp;
        let mut v = vec![0.0; nc];
        let mut d = vec![0.0; nc];
        for (i, z) in self.z_grid.iter().enumerate() {
            self.eval_with_derivative(z + shift, &mut v, &mut d);
            out.values[i * nc..(i + 1) * nc].copy_from_slice(&v);
            out.derivative[i * nc..(i + 1) * nc].copy_from_slice(&d);
        }
        out
    }
}

/// `(A¹(U) − sI)⁻¹ Q(U)/τ`.
pub fn profile_rhs(system: &RelaxationSystem, s: f64, y: &RVec) -> Result<RVec> {
    let n = system.n();
    let m = system.jac_flux(0, y) - RMat::identity(n, n) * s;
    let q = system.relaxation(y);
    m.lu()
        .solve(&q)
        .ok_or_else(|| Error::Singular(format!("A1 - sI at state {:?}", y.as_slice())))
}

fn rhs_jacobian(system: &RelaxationSystem, s: f64, y: &RVec) -> Result<RMat> {
    let n = y.len();
    let mut jac = RMat::zeros(n, n);
    for k in 0..n {
        let h = 1e-7 * (1.0 + y[k].abs());
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[k] += h;
        ym[k] -= h;
        let col = (profile_rhs(system, s, &yp)? - profile_rhs(system, s, &ym)?) / (2.0 * h);
        jac.set_column(k, &col);
    }
    Ok(jac)
}

/// Linearization of the profile ODE at an endpoint, `(A¹ − sI)⁻¹ dQ/τ`.
pub fn endpoint_jacobian(system: &RelaxationSystem, s: f64, state: &RVec) -> Result<RMat> {
    let n = system.n();
    let m = system.jac_flux(0, state) - RMat::identity(n, n) * s;
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Singular("A1 - sI at an endpoint".into()))?;
    Ok(inv * system.jac_relaxation(state))
}

/// Projector (real) onto the invariant subspace with positive real part.
fn unstable_projector(j: &RMat) -> Result<(RMat, usize, f64)> {
    let ev = eigenvalues_real(j)?;
    let scale = ev.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let pos: Vec<f64> = ev.iter().map(|z| z.re).filter(|re| *re > 1e-9 * scale).collect();
    let n = j.nrows();
    if pos.is_empty() {
        return Ok((RMat::zeros(n, n), 0, 0.0));
    }
    let min_pos = pos.iter().cloned().fold(f64::INFINITY, f64::min);
    let p = projector_right_of(&to_complex(j), 0.5 * min_pos)?;
    Ok((p.map(|z| z.re), pos.len(), min_pos))
}

/// Slow (smallest nonzero modulus) eigenvalue of the endpoint linearization.
pub fn slow_endpoint_rate(system: &RelaxationSystem, s: f64, state: &RVec) -> Result<f64> {
    let j = endpoint_jacobian(system, s, state)?;
    let ev = eigenvalues_real(&j)?;
    let scale = ev.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    ev.iter()
        .filter(|z| z.norm() > 1e-9 * scale)
        .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .map(|z| z.re)
        .ok_or_else(|| Error::InvalidInput("endpoint linearization has no nonzero eigenvalue".into()))
}

fn min_distance_to_frozen_speeds(system: &RelaxationSystem, s: f64, state: &RVec) -> Result<f64> {
    let ev = eigenvalues_real(&system.jac_flux(0, state))?;
    Ok(ev.iter().map(|z| (z - s).norm()).fold(f64::INFINITY, f64::min))
}

/// Solves the profile boundary-value problem by fourth-order Hermite–Simpson
/// collocation and Newton's method.
pub fn solve_profile(
    system: &RelaxationSystem,
    u_minus: f64,
    u_plus: f64,
    grid: ProfileGrid,
    opts: &ProfileOptions,
) -> Result<WaveProfile> {
    let speed = rankine_hugoniot_speed(system, u_minus, u_plus)?;
    if !speed.lax {
        return Err(Error::InvalidInput(format!(
            "endpoints ({u_minus}, {u_plus}) violate the Lax condition: f'(u+) = {}, s = {}, f'(u-) = {}",
            speed.char_speed_plus, speed.s, speed.char_speed_minus
        )));
    }
    if grid.intervals < 4 || grid.intervals % 2 != 0 || !(grid.half_width > 0.0) {
        return Err(Error::InvalidInput("profile grid needs an even number (>= 4) of intervals and L > 0".into()));
    }
    let s = speed.s;
    let n = system.n();
    let um = system.equilibrium_state(u_minus);
    let up = system.equilibrium_state(u_plus);
    let amplitude = (&up - &um).norm();

    let dist = min_distance_to_frozen_speeds(system, s, &um)?.min(min_distance_to_frozen_speeds(system, s, &up)?);
    if let Some(factor) = opts.amplitude_guard {
        if (u_plus - u_minus).abs() > factor * dist {
            return Err(Error::InvalidInput(format!(
                "amplitude {} exceeds guard {factor} x dist(s, spectrum of A1) = {}",
                (u_plus - u_minus).abs(),
                factor * dist
            )));
        }
    }
    // invertibility of A1 - sI along the straight segment between endpoints
    for k in 0..=50 {
        let t = k as f64 / 50.0;
        let st = &um * (1.0 - t) + &up * t;
        let m = system.jac_flux(0, &st) - RMat::identity(n, n) * s;
        let smin = singular_values(&to_complex(&m)).into_iter().fold(f64::INFINITY, f64::min);
        if smin < 1e-8 {
            return Err(Error::Singular(format!("A1 - sI nearly singular along the endpoint segment (t = {t})")));
        }
    }

    let jm = endpoint_jacobian(system, s, &um)?;
    let jp = endpoint_jacobian(system, s, &up)?;
    let (pm, nu_minus, _) = unstable_projector(&jm)?;
    let (pp, nu_plus, _) = unstable_projector(&jp)?;
    let left = row_space_basis(&(RMat::identity(n, n) - pm), 1e-8);
    let right = row_space_basis(&pp, 1e-8);
    if left.nrows() + right.nrows() + 1 != n {
        return Err(Error::InvalidInput(format!(
            "boundary conditions do not close: {} at -L, {} at +L, 1 phase, {} unknowns per node (unstable dims {nu_minus}, {nu_plus})",
            left.nrows(),
            right.nrows(),
            n
        )));
    }

    let z = grid.nodes();
    let h = grid.spacing();
    let nodes = z.len();
    let phase_node = ((opts.phase_point + grid.half_width) / h).round() as usize;
    if phase_node == 0 || phase_node >= nodes - 1 {
        return Err(Error::InvalidInput("phase point outside the grid interior".into()));
    }
    let mid = 0.5 * (u_minus + u_plus);

    let mut y = initial_guess(system, s, u_minus, u_plus, &z, z[phase_node])?;

    let ml = left.nrows();
    let mr = right.nrows();
    let unknowns = nodes * n;
    let kl = n + ml + 1;
    let ku = 2 * n;

    let assemble = |y: &[RVec], with_jac: bool| -> Result<(Vec<f64>, Option<BandMatrix>)> {
        let mut res = vec![0.0; unknowns];
        let mut band = if with_jac { Some(BandMatrix::zeros(unknowns, kl, ku)) } else { None };
        let f: Vec<RVec> = y.iter().map(|yi| profile_rhs(system, s, yi)).collect::<Result<_>>()?;
        let jf: Vec<RMat> = if with_jac {
            y.iter().map(|yi| rhs_jacobian(system, s, yi)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let mut row = 0;
        // left boundary
        let dl = &left * (&y[0] - &um);
        for k in 0..ml {
            res[row + k] = dl[k];
            if let Some(b) = band.as_mut() {
                for c in 0..n {
                    b.add(row + k, c, left[(k, c)]);
                }
            }
        }
        row += ml;
        let id = RMat::identity(n, n);
        for i in 0..nodes - 1 {
            let ym = (&y[i] + &y[i + 1]) * 0.5 + (&f[i] - &f[i + 1]) * (h / 8.0);
            let fm = profile_rhs(system, s, &ym)?;
            let r = &y[i + 1] - &y[i] - (&f[i] + &fm * 4.0 + &f[i + 1]) * (h / 6.0);
            for k in 0..n {
                res[row + k] = r[k];
            }
            if let Some(b) = band.as_mut() {
                let jm = rhs_jacobian(system, s, &ym)?;
                let d_left = -&id - (&jf[i] + &jm * (&id * 0.5 + &jf[i] * (h / 8.0)) * 4.0) * (h / 6.0);
                let d_right = &id - (&jm * (&id * 0.5 - &jf[i + 1] * (h / 8.0)) * 4.0 + &jf[i + 1]) * (h / 6.0);
                for k in 0..n {
                    for c in 0..n {
                        b.add(row + k, i * n + c, d_left[(k, c)]);
                        b.add(row + k, (i + 1) * n + c, d_right[(k, c)]);
                    }
                }
            }
            row += n;
            if i + 1 == phase_node {
                res[row] = y[phase_node][0] - mid;
                if let Some(b) = band.as_mut() {
                    b.add(row, phase_node * n, 1.0);
                }
                row += 1;
            }
        }
        let dr = &right * (&y[nodes - 1] - &up);
        for k in 0..mr {
            res[row + k] = dr[k];
            if let Some(b) = band.as_mut() {
                for c in 0..n {
                    b.add(row + k, (nodes - 1) * n + c, right[(k, c)]);
                }
            }
        }
        row += mr;
        debug_assert_eq!(row, unknowns);
        Ok((res, band))
    };

    let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut converged = false;
    let mut last_norm = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let (res, band) = assemble(&y, true)?;
        let rn = norm(&res);
        last_norm = rn;
        if !rn.is_finite() {
            return Err(Error::NonFinite("profile Newton residual".into()));
        }
        if rn <= opts.newton_tol {
            converged = true;
            break;
        }
        let mut band = band.expect("jacobian requested");
        band.factor()?;
        let mut delta = res.clone();
        band.solve(&mut delta);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<RVec> = y
                .iter()
                .enumerate()
                .map(|(i, yi)| yi - RVec::from_column_slice(&delta[i * n..(i + 1) * n]) * step)
                .collect();
            let tn = assemble(&trial, false).map(|(r, _)| norm(&r)).unwrap_or(f64::INFINITY);
            if tn < rn || tn <= opts.newton_tol {
                y = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("profile Newton iteration stalled at residual {last_norm:e}")));
    }

    let mut values = Vec::with_capacity(unknowns);
    let mut derivative = Vec::with_capacity(unknowns);
    for yi in &y {
        values.extend(yi.iter());
        derivative.extend(profile_rhs(system, s, yi)?.iter());
    }
    let mismatch = (&y[0] - &um).amax().max((&y[nodes - 1] - &up).amax());
    if mismatch > opts.endpoint_tol {
        return Err(Error::InvalidInput(format!(
            "truncation too small: endpoint mismatch {mismatch:e} at +-L = {}",
            grid.half_width
        )));
    }
    let mut profile = WaveProfile {
        s,
        n_comp: n,
        z_grid: z,
        values,
        derivative,
        u_minus: um.iter().copied().collect(),
        u_plus: up.iter().copied().collect(),
        amplitude,
        decay_rate: 0.0,
        decay_rate_minus: 0.0,
        decay_rate_plus: 0.0,
    };
    let (dm, dp) = fitted_decay_rates(&profile);
    profile.decay_rate_minus = dm;
    profile.decay_rate_plus = dp;
    profile.decay_rate = dm.min(dp);
    Ok(profile)
}

/// Integrates the scalar viscous reduction `b u' = f*₁(u) − su − c` from the
/// phase point in both directions; relaxation variables start at equilibrium.
fn initial_guess(system: &RelaxationSystem, s: f64, u_minus: f64, u_plus: f64, z: &[f64], z0: f64) -> Result<Vec<RVec>> {
    let mid = 0.5 * (u_minus + u_plus);
    let fit = dispersion_fit(
        system,
        &StatePoint::from_vector(&system.equilibrium_state(mid)),
        &default_directions(system.d),
        &default_radii(),
    )?;
    let b = fit.b_fit[0][0].max(1e-3);
    let c = equilibrium_flux(system, u_minus, 0) - s * u_minus;
    let (lo, hi) = (u_minus.min(u_plus), u_minus.max(u_plus));
    let g = |u: f64| (equilibrium_flux(system, u, 0) - s * u - c) / b;
    let rk4 = |u: f64, dz: f64| {
        let k1 = g(u);
        let k2 = g(u + 0.5 * dz * k1);
        let k3 = g(u + 0.5 * dz * k2);
        let k4 = g(u + dz * k3);
        (u + dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(lo, hi)
    };
    let i0 = z.iter().position(|x| *x >= z0 - 1e-12).unwrap_or(0);
    let mut u = vec![mid; z.len()];
    for i in i0 + 1..z.len() {
        u[i] = rk4(u[i - 1], z[i] - z[i - 1]);
    }
    for i in (0..i0).rev() {
        u[i] = rk4(u[i + 1], z[i] - z[i + 1]);
    }
    Ok(u.into_iter().map(|ui| system.equilibrium_state(ui)).collect())
}

/// Exponential approach rates to `U₋` (as z → −∞) and `U₊` (z → +∞) fitted on
/// the tails where the deviation lies between 1e−10 and 1e−3 of the amplitude.
pub fn fitted_decay_rates(profile: &WaveProfile) -> (f64, f64) {
    let nc = profile.n_comp;
    let amp = profile.amplitude.max(1e-300);
    let fit = |plus: bool| -> f64 {
        let target = if plus { &profile.u_plus } else { &profile.u_minus };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, z) in profile.z_grid.iter().enumerate() {
            if (plus && *z <= 0.0) || (!plus && *z >= 0.0) {
                continue;
            }
            let dev = (0..nc).map(|k| (profile.values[i * nc + k] - target[k]).abs()).fold(0.0, f64::max);
            if dev < 1e-3 * amp && dev > 1e-10 * amp {
                xs.push(z.abs());
                ys.push(dev.ln());
            }
        }
        if xs.len() < 3 {
            return f64::NAN;
        }
        let (slope, _) = linear_fit(&xs, &ys);
        -slope
    };
    (fit(false), fit(true))
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Closed-form 2×2 Jin–Xin profile (τ = 1, `f = u²/2`, `u± = u_center ∓ ε`):
/// `u(z) = u_center − ε tanh(εz / (2(a² − s²)))`, `v = su + c`, `s = u_center`.
pub fn jin_xin_exact_profile(a: f64, epsilon: f64, u_center: f64, grid: ProfileGrid) -> Result<WaveProfile> {
    let s = u_center;
    let visc = a * a - s * s;
    if visc.abs() < 1e-14 {
        return Err(Error::Singular("characteristic speed collision a^2 = s^2".into()));
    }
    if (u_center.abs() + epsilon.abs()) >= a {
        return Err(Error::InvalidInput("subcharacteristic condition fails on the profile range".into()));
    }
    let um = u_center + epsilon;
    let up = u_center - epsilon;
    let c = 0.5 * um * um - s * um;
    let k = epsilon / (2.0 * visc);
    let z = grid.nodes();
    let mut values = Vec::with_capacity(2 * z.len());
    let mut derivative = Vec::with_capacity(2 * z.len());
    for zi in &z {
        let th = (k * zi).tanh();
        let u = u_center - epsilon * th;
        let du = -epsilon * k * (1.0 - th * th);
        values.extend([u, s * u + c]);
        derivative.extend([du, s * du]);
    }
    let rate = if epsilon == 0.0 { 0.0 } else { 2.0 * k.abs() };
    Ok(WaveProfile {
        s,
        n_comp: 2,
        z_grid: z,
        values,
        derivative,
        u_minus: vec![um, 0.5 * um * um],
        u_plus: vec![up, 0.5 * up * up],
        amplitude: ((up - um).powi(2) + (0.5 * (up * up - um * um)).powi(2)).sqrt(),
        decay_rate: rate,
        decay_rate_minus: rate,
        decay_rate_plus: rate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileResidual {
    /// `sup |(A¹(Ū) − sI)Ū' − Q(Ū)/τ|` with the stored derivative.
    pub residual: f64,
    pub worst_node: usize,
    /// Same residual with Ū' recomputed by fourth-order differences of the values.
    pub fd_residual: f64,
    /// `sup |Ū'_stored − Ū'_fd|`.
    pub derivative_mismatch: f64,
}

pub fn profile_residual(profile: &WaveProfile, system: &RelaxationSystem) -> Result<ProfileResidual> {
    if profile.is_empty() {
        return Err(Error::InvalidInput("empty profile".into()));
    }
    let n = profile.n_comp;
    let ident = RMat::identity(n, n);
    let nodes = profile.len();
    let mut out = ProfileResidual { residual: 0.0, worst_node: 0, fd_residual: 0.0, derivative_mismatch: 0.0 };
    for i in 0..nodes {
        let y = profile.node(i);
        let m = system.jac_flux(0, &y) - &ident * profile.s;
        let q = system.relaxation(&y);
        let r = (&m * profile.node_derivative(i) - &q).amax();
        if r > out.residual {
            out.residual = r;
            out.worst_node = i;
        }
        if let Some(fd) = fd_derivative(profile, i) {
            out.fd_residual = out.fd_residual.max((&m * &fd - &q).amax());
            out.derivative_mismatch = out.derivative_mismatch.max((fd - profile.node_derivative(i)).amax());
        }
    }
    Ok(out)
}

/// Fourth-order central difference on a uniform grid (interior nodes only).
fn fd_derivative(profile: &WaveProfile, i: usize) -> Option<RVec> {
    let nodes = profile.len();
    if i < 2 || i + 2 >= nodes {
        return None;
    }
    let h = profile.z_grid[i + 1] - profile.z_grid[i];
    Some((profile.node(i - 2) - profile.node(i - 1) * 8.0 + profile.node(i + 1) * 8.0 - profile.node(i + 2)) / (12.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_jin_xin_1d, builtin_jin_xin_2d, ScalarMap};

    fn jx1() -> RelaxationSystem {
        builtin_jin_xin_1d(1.0, ScalarMap::burgers(), 1.0).unwrap()
    }

    #[test]
    fn rankine_hugoniot_examples() {
        let sys = jx1();
        let sp = rankine_hugoniot_speed(&sys, 0.3, 0.1).unwrap();
        assert!((sp.s - 0.2).abs() < 1e-14 && sp.lax);
        let sp = rankine_hugoniot_speed(&sys, 0.1, -0.1).unwrap();
        assert!(sp.s.abs() < 1e-15);
        assert!(!rankine_hugoniot_speed(&sys, 0.1, 0.3).unwrap().lax);
        assert!(rankine_hugoniot_speed(&sys, 0.1, 0.1).is_err());
    }

    #[test]
    fn solver_matches_closed_form() {
        let sys = jx1();
        let grid = ProfileGrid::new(200.0, 2000);
        let p = solve_profile(&sys, 0.1, -0.1, grid, &ProfileOptions::default()).unwrap();
        let exact = jin_xin_exact_profile(1.0, 0.1, 0.0, grid).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..p.len() {
            err = err.max((p.node(i) - exact.node(i)).amax());
        }
        assert!(err < 1e-8, "sup error {err:e}");
        let res = profile_residual(&p, &sys).unwrap();
        assert!(res.residual < 1e-9 && res.fd_residual < 1e-8, "{res:?}");
        // exponential approach rate
        let mu = slow_endpoint_rate(&sys, p.s, &p.endpoint_plus()).unwrap();
        assert!((p.decay_rate_plus / mu.abs() - 1.0).abs() < 0.05);
    }

    #[test]
    fn exact_profile_satisfies_ode() {
        let sys = jx1();
        let p = jin_xin_exact_profile(1.0, 0.1, 0.2, ProfileGrid::new(200.0, 2000)).unwrap();
        let r = profile_residual(&p, &sys).unwrap();
        assert!(r.residual < 1e-10, "{r:?}");
        assert!((p.eval(0.0)[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn corrupted_node_gives_localized_spike() {
        let sys = jx1();
        let mut p = jin_xin_exact_profile(1.0, 0.1, 0.0, ProfileGrid::new(100.0, 1000)).unwrap();
        p.values[2 * 400 + 1] += 1e-3;
        let r = profile_residual(&p, &sys).unwrap();
        assert!(r.residual >= 1e-5);
        assert_eq!(r.worst_node, 400);
    }

    #[test]
    fn translation_gauge() {
        let sys = jx1();
        let grid = ProfileGrid::new(200.0, 2000);
        let mut opts = ProfileOptions::default();
        let p0 = solve_profile(&sys, 0.1, -0.1, grid, &opts).unwrap();
        opts.phase_point = 3.0;
        let p1 = solve_profile(&sys, 0.1, -0.1, grid, &opts).unwrap();
        let aligned = p1.shifted(3.0);
        let mut err: f64 = 0.0;
        for i in 0..p0.len() {
            if p0.z_grid[i].abs() < 150.0 {
                err = err.max((aligned.node(i) - p0.node(i)).amax());
            }
        }
        assert!(err < 1e-8, "{err:e}");
    }

    #[test]
    fn two_dimensional_profile_w_equation() {
        let sys = builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(0.3), 1.0).unwrap();
        let opts = ProfileOptions { amplitude_guard: None, ..Default::default() };
        let p = solve_profile(&sys, 0.25, 0.15, ProfileGrid::new(400.0, 4000), &opts).unwrap();
        assert!((p.s - 0.2).abs() < 1e-14);
        // −s w' = f2(u) − w along the profile
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            let (y, dy) = (p.node(i), p.node_derivative(i));
            worst = worst.max((-p.s * dy[2] - (0.3 * y[0] - y[2])).abs());
        }
        assert!(worst < 1e-12);
        let res = profile_residual(&p, &sys).unwrap();
        assert!(res.residual < 1e-9);
    }
}
