use serde::Serialize;
use wasm_bindgen::prelude::*;

use shockfront::evans::{winding_number, Contour, EvansOptions, EvansSetup, WindingOptions, WindingStatus};
use shockfront::front::{decay_report, evolve_delta, FrontCoefficients, FrontField, TransverseGrid};
use shockfront::linalg::C64;
use shockfront::model::{builtin_jin_xin_1d, builtin_jin_xin_2d, RelaxationSystem, ScalarMap};
use shockfront::profile::{profile_residual, solve_profile, ProfileGrid, ProfileOptions, WaveProfile};

/// Plotted curves are thinned to at most this many points.
const MAX_POINTS: usize = 600;

#[derive(Debug, Clone, Serialize)]
pub struct ProfileCurve {
    pub s: f64,
    pub z: Vec<f64>,
    /// One series per component, `u` first.
    pub components: Vec<Vec<f64>>,
    pub residual: f64,
    pub decay_rate_minus: f64,
    pub decay_rate_plus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvansCurve {
    pub xi: f64,
    pub winding: Option<i64>,
    pub conclusive: bool,
    pub min_abs: f64,
    pub lambda_re: Vec<f64>,
    pub lambda_im: Vec<f64>,
    /// `D/|D|` along the contour.
    pub phase_re: Vec<f64>,
    pub phase_im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontDecay {
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub gradient: Vec<f64>,
    pub l2_exponent: f64,
    pub gradient_exponent: f64,
    pub y: Vec<f64>,
    /// `(t, δ(·, t))` on the thinned transverse grid.
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

fn stride(n: usize) -> usize {
    n.div_ceil(MAX_POINTS).max(1)
}

fn err(e: shockfront::Error) -> String {
    e.to_string()
}

/// Jin–Xin with Burgers flux `u²/2`, characteristic speed `a`.
pub fn profile_curve(u_minus: f64, u_plus: f64, a: f64, tau: f64, half_length: f64, intervals: usize) -> Result<ProfileCurve, String> {
    let sys = builtin_jin_xin_1d(a, ScalarMap::burgers(), tau).map_err(err)?;
    curve_of(&sys, u_minus, u_plus, half_length, intervals)
}

fn curve_of(sys: &RelaxationSystem, u_minus: f64, u_plus: f64, half_length: f64, intervals: usize) -> Result<ProfileCurve, String> {
    let opts = ProfileOptions { amplitude_guard: None, ..Default::default() };
    let p = solve_profile(sys, u_minus, u_plus, ProfileGrid::new(half_length, intervals), &opts).map_err(err)?;
    let res = profile_residual(&p, sys).map_err(err)?;
    let step = stride(p.len());
    let z: Vec<f64> = p.z_grid.iter().step_by(step).cloned().collect();
    let components = (0..p.n_comp)
        .map(|c| (0..p.len()).step_by(step).map(|i| p.node(i)[c]).collect())
        .collect();
    Ok(ProfileCurve {
        s: p.s,
        z,
        components,
        residual: res.residual,
        decay_rate_minus: p.decay_rate_minus,
        decay_rate_plus: p.decay_rate_plus,
    })
}

/// Evans function setup for the 2-D Jin–Xin shock `0.5 → −0.1` with normal
/// flux `u²/2` and transverse flux `c·u`.
pub struct EvansSession {
    setup: EvansSetup,
    profile: WaveProfile,
}

impl EvansSession {
    pub fn build(transverse_speed: f64) -> Result<Self, String> {
        let sys = builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(transverse_speed), 1.0).map_err(err)?;
        let opts = ProfileOptions { amplitude_guard: None, ..Default::default() };
        let profile = solve_profile(&sys, 0.5, -0.1, ProfileGrid::new(90.0, 1800), &opts).map_err(err)?;
        let setup = EvansSetup::new(&sys, &profile, &EvansOptions::default()).map_err(err)?;
        Ok(Self { setup, profile })
    }

    pub fn speed(&self) -> f64 {
        self.profile.s
    }

    /// Winding of `D(·, ξ̃)` around the half annulus `r_min ≤ |λ| ≤ r_max`, `Re λ ≥ −η`.
    pub fn contour(&self, xi: f64, r_min: f64, r_max: f64) -> Result<EvansCurve, String> {
        let contour = Contour::half_annulus(r_min, r_max, 1e-4).map_err(err)?;
        let w = winding_number(&self.setup, &contour, &[xi], &WindingOptions::default()).map_err(err)?;
        let step = stride(w.samples.len());
        let picked: Vec<_> = w.samples.iter().step_by(step).collect();
        let unit = |v: C64| if v.norm() > 0.0 { v / v.norm() } else { v };
        Ok(EvansCurve {
            xi,
            winding: w.winding,
            conclusive: w.status == WindingStatus::Conclusive,
            min_abs: w.min_abs,
            lambda_re: picked.iter().map(|s| s.lambda.re).collect(),
            lambda_im: picked.iter().map(|s| s.lambda.im).collect(),
            phase_re: picked.iter().map(|s| unit(s.value).re).collect(),
            phase_im: picked.iter().map(|s| unit(s.value).im).collect(),
        })
    }
}

/// Front model `δ_t + α̃δ_y = β̃δ_yy` from a Gaussian bump of width `sigma`.
pub fn front_decay(alpha: f64, beta: f64, sigma: f64, t_max: f64, samples: usize) -> Result<FrontDecay, String> {
    if !(beta > 0.0 && sigma > 0.0 && t_max >= 100.0 && samples >= 3) {
        return Err("need β̃ > 0, σ > 0, t_max ≥ 100 and at least 3 samples".into());
    }
    let width = TransverseGrid::required_width(beta, t_max).max(40.0 * sigma) + alpha.abs() * t_max;
    let n = ((width / (sigma / 4.0).min(0.5)) as usize).next_power_of_two().min(1 << 16);
    let grid = TransverseGrid::new(vec![n], vec![width]).map_err(err)?;
    let coeffs = FrontCoefficients { alpha: vec![alpha], beta: vec![vec![beta]] };
    let center = width / 2.0;
    let field = FrontField::from_fn(grid.clone(), coeffs, |y| (-(y[0] - center).powi(2) / (2.0 * sigma * sigma)).exp())
        .map_err(err)?;
    let t0 = t_max / 100.0;
    let times: Vec<f64> =
        (0..samples).map(|k| t0 * (t_max / t0).powf(k as f64 / (samples - 1) as f64)).collect();
    let l2 = decay_report(&field, &[0], &times).map_err(err)?;
    let grad = decay_report(&field, &[1], &times).map_err(err)?;
    let step = stride(n);
    let y: Vec<f64> = (0..n).step_by(step).map(|i| grid.coords(i)[0] - center).collect();
    let snapshots = [0.0, t0, t_max / 10.0, t_max]
        .iter()
        .map(|&t| evolve_delta(&field, t).map(|f| (t, f.values.iter().step_by(step).cloned().collect())))
        .collect::<shockfront::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(FrontDecay {
        times,
        l2: l2.norms,
        gradient: grad.norms,
        l2_exponent: l2.exponent,
        gradient_exponent: grad.exponent,
        y,
        snapshots,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = solveProfile)]
pub fn solve_profile_js(u_minus: f64, u_plus: f64, a: f64, tau: f64, half_length: f64, intervals: usize) -> Result<String, JsError> {
    to_js(profile_curve(u_minus, u_plus, a, tau, half_length, intervals))
}

#[wasm_bindgen(js_name = frontDecay)]
pub fn front_decay_js(alpha: f64, beta: f64, sigma: f64, t_max: f64, samples: usize) -> Result<String, JsError> {
    to_js(front_decay(alpha, beta, sigma, t_max, samples))
}

#[wasm_bindgen]
pub struct Evans {
    inner: EvansSession,
}

#[wasm_bindgen]
impl Evans {
    #[wasm_bindgen(constructor)]
    pub fn new(transverse_speed: f64) -> Result<Evans, JsError> {
        EvansSession::build(transverse_speed).map(|inner| Evans { inner }).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn speed(&self) -> f64 {
        self.inner.speed()
    }

    pub fn contour(&self, xi: f64, r_min: f64, r_max: f64) -> Result<String, JsError> {
        to_js(self.inner.contour(xi, r_min, r_max))
    }
}
