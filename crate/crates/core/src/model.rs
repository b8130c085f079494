//! Relaxation systems `U_t + Σ_j F^j(U)_{x_j} = Q(U)/τ` with `U = (u, v)`,
//! `Q = (0, q)`, a scalar conserved variable `u` and `r` relaxation variables.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{to_complex, CMat, RMat, RVec, C64};

pub type VecField = Arc<dyn Fn(&RVec) -> RVec + Send + Sync>;
pub type MatField = Arc<dyn Fn(&RVec) -> RMat + Send + Sync>;
pub type EquilibriumMap = Arc<dyn Fn(f64) -> RVec + Send + Sync>;

/// Scalar function with its derivative.
#[derive(Clone)]
pub struct ScalarMap {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ScalarMap {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), f: Arc::new(f), df: Arc::new(df) }
    }

    /// Polynomial `Σ c_k u^k` with coefficients in increasing degree.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let dc: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect();
        let label = format!("poly{:?}", coeffs);
        Self::new(label, move |u| horner(&c, u), move |u| horner(&dc, u))
    }

    pub fn linear(c: f64) -> Self {
        Self::polynomial(&[0.0, c])
    }

    pub fn burgers() -> Self {
        Self::polynomial(&[0.0, 0.0, 0.5])
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarMap({})", self.label)
    }
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

/// A state `U = (u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatePoint {
    pub u: f64,
    pub v: Vec<f64>,
}

impl StatePoint {
    pub fn new(u: f64, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    pub fn to_vector(&self) -> RVec {
        let mut out = RVec::zeros(1 + self.v.len());
        out[0] = self.u;
        for (k, x) in self.v.iter().enumerate() {
            out[k + 1] = *x;
        }
        out
    }

    pub fn from_vector(x: &RVec) -> Self {
        Self { u: x[0], v: x.iter().skip(1).copied().collect() }
    }
}

/// Evaluatable relaxation system. Cheap to clone; all callbacks are shared.
#[derive(Clone)]
pub struct RelaxationSystem {
    pub name: String,
    pub d: usize,
    pub r: usize,
    pub tau: f64,
    /// Admissible interval for the conserved variable.
    pub working_range: (f64, f64),
    /// True when some Jacobian is a finite-difference substitute.
    pub fd_jacobians: bool,
    flux: Vec<VecField>,
    jac_flux: Vec<MatField>,
    source: VecField,
    jac_source: MatField,
    equilibrium: EquilibriumMap,
    symmetrizer: Option<MatField>,
}

impl fmt::Debug for RelaxationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelaxationSystem")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("r", &self.r)
            .field("tau", &self.tau)
            .field("working_range", &self.working_range)
            .field("fd_jacobians", &self.fd_jacobians)
            .finish()
    }
}

/// Callbacks describing a user-defined system. Jacobians are optional.
pub struct SystemCallbacks {
    pub name: String,
    pub d: usize,
    pub r: usize,
    pub tau: f64,
    pub working_range: (f64, f64),
    pub flux: Vec<VecField>,
    pub source: VecField,
    pub equilibrium: EquilibriumMap,
    pub jac_flux: Option<Vec<MatField>>,
    pub jac_source: Option<MatField>,
    pub symmetrizer: Option<MatField>,
}

fn fd_step(x: &RVec) -> f64 {
    1e-6 * (1.0 + x.amax())
}

fn fd_jacobian(f: &VecField, x: &RVec) -> RMat {
    let h = fd_step(x);
    let f0 = f(x);
    let mut jac = RMat::zeros(f0.len(), x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(k, &col);
    }
    jac
}

impl RelaxationSystem {
    pub fn from_callbacks(cb: SystemCallbacks) -> Result<Self> {
        if cb.d == 0 || cb.r == 0 {
            return Err(Error::InvalidInput("d and r must be at least 1".into()));
        }
        if cb.flux.len() != cb.d {
            return Err(Error::InvalidInput(format!("expected {} flux maps, got {}", cb.d, cb.flux.len())));
        }
        if !(cb.tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        let mut fd = false;
        let jac_flux = match cb.jac_flux {
            Some(j) if j.len() == cb.d => j,
            Some(j) => {
                return Err(Error::InvalidInput(format!("expected {} flux Jacobians, got {}", cb.d, j.len())))
            }
            None => {
                fd = true;
                cb.flux
                    .iter()
                    .map(|f| {
                        let f = f.clone();
                        Arc::new(move |x: &RVec| fd_jacobian(&f, x)) as MatField
                    })
                    .collect()
            }
        };
        let jac_source = match cb.jac_source {
            Some(j) => j,
            None => {
                fd = true;
                let f = cb.source.clone();
                Arc::new(move |x: &RVec| fd_jacobian(&f, x)) as MatField
            }
        };
        Ok(Self {
            name: cb.name,
            d: cb.d,
            r: cb.r,
            tau: cb.tau,
            working_range: cb.working_range,
            fd_jacobians: fd,
            flux: cb.flux,
            jac_flux,
            source: cb.source,
            jac_source,
            equilibrium: cb.equilibrium,
            symmetrizer: cb.symmetrizer,
        })
    }

    pub fn n(&self) -> usize {
        1 + self.r
    }

    /// `F^j(U)` for axis `j` in `0..d`.
    pub fn flux(&self, j: usize, u: &RVec) -> RVec {
        (self.flux[j])(u)
    }

    /// `A^j(U) = dF^j(U)`.
    pub fn jac_flux(&self, j: usize, u: &RVec) -> RMat {
        (self.jac_flux[j])(u)
    }

    /// `q(U)`, length `r`.
    pub fn source(&self, u: &RVec) -> RVec {
        (self.source)(u)
    }

    /// `dq(U)`, shape `r × N`.
    pub fn jac_source(&self, u: &RVec) -> RMat {
        (self.jac_source)(u)
    }

    /// `v*(u)`.
    pub fn equilibrium(&self, u: f64) -> RVec {
        (self.equilibrium)(u)
    }

    /// Full equilibrium state `(u, v*(u))`.
    pub fn equilibrium_state(&self, u: f64) -> RVec {
        let v = self.equilibrium(u);
        let mut out = RVec::zeros(self.n());
        out[0] = u;
        out.rows_mut(1, self.r).copy_from(&v);
        out
    }

    /// `Q(U)/τ = (0, q(U)/τ)`.
    pub fn relaxation(&self, u: &RVec) -> RVec {
        let q = self.source(u);
        let mut out = RVec::zeros(self.n());
        out.rows_mut(1, self.r).copy_from(&(q / self.tau));
        out
    }

    /// `dQ(U)/τ`, shape `N × N` with a zero first row.
    pub fn jac_relaxation(&self, u: &RVec) -> RMat {
        let dq = self.jac_source(u);
        let mut out = RMat::zeros(self.n(), self.n());
        out.rows_mut(1, self.r).copy_from(&(dq / self.tau));
        out
    }

    /// `Σ_j ξ_j A^j(U)`.
    pub fn directional_jac(&self, u: &RVec, xi: &[f64]) -> RMat {
        let mut out = RMat::zeros(self.n(), self.n());
        for (j, x) in xi.iter().enumerate() {
            if *x != 0.0 {
                out += self.jac_flux(j, u) * *x;
            }
        }
        out
    }

    /// Linearized Fourier symbol `dQ − iΣ_j ξ_j A^j` at `U`.
    pub fn symbol(&self, u: &RVec, xi: &[f64]) -> CMat {
        let dq = to_complex(&self.jac_relaxation(u));
        let a = to_complex(&self.directional_jac(u, xi));
        dq - a * C64::new(0.0, 1.0)
    }

    pub fn symmetrizer(&self, u: &RVec) -> Option<RMat> {
        self.symmetrizer.as_ref().map(|s| s(u))
    }

    pub fn has_symmetrizer(&self) -> bool {
        self.symmetrizer.is_some()
    }

    pub fn in_working_range(&self, u: f64) -> bool {
        u >= self.working_range.0 && u <= self.working_range.1
    }

    /// Replaces the equilibrium map (used to inject faults in checks).
    pub fn with_equilibrium(mut self, eq: impl Fn(f64) -> RVec + Send + Sync + 'static) -> Self {
        self.equilibrium = Arc::new(eq);
        self
    }

    /// Replaces the Jacobian of flux `j`.
    pub fn with_jac_flux(mut self, j: usize, jac: impl Fn(&RVec) -> RMat + Send + Sync + 'static) -> Self {
        self.jac_flux[j] = Arc::new(jac);
        self
    }

    /// Replaces the source and its Jacobian.
    pub fn with_source(
        mut self,
        source: impl Fn(&RVec) -> RVec + Send + Sync + 'static,
        jac: impl Fn(&RVec) -> RMat + Send + Sync + 'static,
    ) -> Self {
        self.source = Arc::new(source);
        self.jac_source = Arc::new(jac);
        self
    }
}

/// Returns `q(u, v*(u))`.
pub fn equilibrium_residual(system: &RelaxationSystem, u: f64) -> RVec {
    system.source(&system.equilibrium_state(u))
}

/// Largest discrepancy between analytic and central-difference Jacobians.
#[derive(Debug, Clone, Serialize)]
pub struct JacobianDiscrepancy {
    /// One entry per flux direction.
    pub flux: Vec<f64>,
    pub source: f64,
}

impl JacobianDiscrepancy {
    pub fn max(&self) -> f64 {
        self.flux.iter().cloned().fold(self.source, f64::max)
    }
}

pub fn jacobian_check(system: &RelaxationSystem, state: &StatePoint, h: f64) -> Result<JacobianDiscrepancy> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let x = state.to_vector();
    if x.len() != system.n() {
        return Err(Error::InvalidInput(format!("state has {} components, system needs {}", x.len(), system.n())));
    }
    let central = |f: &dyn Fn(&RVec) -> RVec| -> RMat {
        let f0 = f(&x);
        let mut jac = RMat::zeros(f0.len(), x.len());
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            jac.set_column(k, &((f(&xp) - f(&xm)) / (2.0 * h)));
        }
        jac
    };
    let check = |analytic: RMat, fd: RMat, what: &str| -> Result<f64> {
        let diff = (analytic - fd).amax();
        if diff.is_finite() {
            Ok(diff)
        } else {
            Err(Error::NonFinite(format!("{what} Jacobian")))
        }
    };
    let mut flux = Vec::with_capacity(system.d);
    for j in 0..system.d {
        let fd = central(&|y: &RVec| system.flux(j, y));
        flux.push(check(system.jac_flux(j, &x), fd, &format!("flux {}", j + 1))?);
    }
    let fd = central(&|y: &RVec| system.source(y));
    let source = check(system.jac_source(&x), fd, "source")?;
    Ok(JacobianDiscrepancy { flux, source })
}

/// Admissible interval for the Jin–Xin models: the largest symmetric interval
/// around zero on which the coefficient maps are sampled.
fn jin_xin_range(a: f64) -> (f64, f64) {
    (-a, a)
}

/// Classical 2×2 Jin–Xin system `u_t + v_x = 0`, `v_t + a²u_x = (f(u) − v)/τ`.
pub fn builtin_jin_xin_1d(a: f64, flux_f: ScalarMap, tau: f64) -> Result<RelaxationSystem> {
    if !(a > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidInput("jin_xin_1d requires a > 0 and tau > 0".into()));
    }
    let a2 = a * a;
    let f = flux_f.clone();
    let fs = flux_f.clone();
    let fe = flux_f.clone();
    let fsym = flux_f.clone();
    let flux: VecField = Arc::new(move |x: &RVec| RVec::from_vec(vec![x[1], a2 * x[0]]));
    let jac: MatField = Arc::new(move |_: &RVec| RMat::from_row_slice(2, 2, &[0.0, 1.0, a2, 0.0]));
    let source: VecField = Arc::new(move |x: &RVec| RVec::from_vec(vec![f.eval(x[0]) - x[1]]));
    let jac_source: MatField = Arc::new(move |x: &RVec| RMat::from_row_slice(1, 2, &[fs.deriv(x[0]), -1.0]));
    let equilibrium: EquilibriumMap = Arc::new(move |u| RVec::from_vec(vec![fe.eval(u)]));
    let symmetrizer: MatField = Arc::new(move |x: &RVec| {
        let c = fsym.deriv(x[0]) / a2;
        RMat::from_row_slice(2, 2, &[1.0, -c, -c, 1.0 / a2])
    });
    RelaxationSystem::from_callbacks(SystemCallbacks {
        name: "jin_xin_1d".into(),
        d: 1,
        r: 1,
        tau,
        working_range: jin_xin_range(a),
        flux: vec![flux],
        source,
        equilibrium,
        jac_flux: Some(vec![jac]),
        jac_source: Some(jac_source),
        symmetrizer: Some(symmetrizer),
    })
}

/// 3×3 Jin–Xin system in two space dimensions:
/// `u_t + v_x + w_y = 0`, `v_t + a²u_x = (f1(u) − v)/τ`, `w_t + b²u_y = (f2(u) − w)/τ`.
pub fn builtin_jin_xin_2d(a: f64, b: f64, f1: ScalarMap, f2: ScalarMap, tau: f64) -> Result<RelaxationSystem> {
    if !(a > 0.0) || !(b > 0.0) || !(tau > 0.0) {
        return Err(Error::InvalidInput("jin_xin_2d requires a, b, tau > 0".into()));
    }
    let (a2, b2) = (a * a, b * b);
    let flux1: VecField = Arc::new(move |x: &RVec| RVec::from_vec(vec![x[1], a2 * x[0], 0.0]));
    let flux2: VecField = Arc::new(move |x: &RVec| RVec::from_vec(vec![x[2], 0.0, b2 * x[0]]));
    let jac1: MatField =
        Arc::new(move |_: &RVec| RMat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, a2, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let jac2: MatField =
        Arc::new(move |_: &RVec| RMat::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, b2, 0.0, 0.0]));
    let (g1, g2) = (f1.clone(), f2.clone());
    let source: VecField =
        Arc::new(move |x: &RVec| RVec::from_vec(vec![g1.eval(x[0]) - x[1], g2.eval(x[0]) - x[2]]));
    let (h1, h2) = (f1.clone(), f2.clone());
    let jac_source: MatField = Arc::new(move |x: &RVec| {
        RMat::from_row_slice(2, 3, &[h1.deriv(x[0]), -1.0, 0.0, h2.deriv(x[0]), 0.0, -1.0])
    });
    let (e1, e2) = (f1.clone(), f2.clone());
    let equilibrium: EquilibriumMap = Arc::new(move |u| RVec::from_vec(vec![e1.eval(u), e2.eval(u)]));
    let (s1, s2) = (f1, f2);
    let symmetrizer: MatField = Arc::new(move |x: &RVec| {
        let c1 = s1.deriv(x[0]) / a2;
        let c2 = s2.deriv(x[0]) / b2;
        RMat::from_row_slice(3, 3, &[1.0, -c1, -c2, -c1, 1.0 / a2, 0.0, -c2, 0.0, 1.0 / b2])
    });
    RelaxationSystem::from_callbacks(SystemCallbacks {
        name: "jin_xin_2d".into(),
        d: 2,
        r: 2,
        tau,
        working_range: jin_xin_range(a.min(b)),
        flux: vec![flux1, flux2],
        source,
        equilibrium,
        jac_flux: Some(vec![jac1, jac2]),
        jac_source: Some(jac_source),
        symmetrizer: Some(symmetrizer),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues_real;

    fn jx1() -> RelaxationSystem {
        builtin_jin_xin_1d(1.0, ScalarMap::burgers(), 1.0).unwrap()
    }

    fn jx2() -> RelaxationSystem {
        builtin_jin_xin_2d(1.0, 1.0, ScalarMap::burgers(), ScalarMap::linear(0.3), 1.0).unwrap()
    }

    #[test]
    fn equilibrium_residual_vanishes_on_builtins() {
        assert_eq!(equilibrium_residual(&jx1(), 0.5)[0], 0.0);
        let r = equilibrium_residual(&jx2(), 0.2);
        assert_eq!((r[0], r[1]), (0.0, 0.0));
    }

    #[test]
    fn corrupted_equilibrium_is_visible() {
        let f = ScalarMap::burgers();
        let sys = jx1().with_equilibrium(move |u| RVec::from_vec(vec![f.eval(u) + 0.01]));
        let r = equilibrium_residual(&sys, 0.5);
        assert!((r[0] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn jacobian_check_on_quadratic_flux() {
        let d = jacobian_check(&jx1(), &StatePoint::new(0.5, vec![0.125]), 1e-5).unwrap();
        assert!(d.max() < 1e-8, "{:?}", d);
    }

    #[test]
    fn jacobian_check_on_linear_flux_is_roundoff() {
        let sys = builtin_jin_xin_1d(1.0, ScalarMap::linear(0.4), 1.0).unwrap();
        let d = jacobian_check(&sys, &StatePoint::new(-0.3, vec![0.7]), 1e-5).unwrap();
        assert!(d.max() < 1e-10, "{:?}", d);
    }

    #[test]
    fn corrupted_jacobian_is_detected() {
        let sys = jx1().with_jac_flux(0, |_| RMat::from_row_slice(2, 2, &[0.0, 1.1, 1.0, 0.0]));
        let d = jacobian_check(&sys, &StatePoint::new(0.5, vec![0.125]), 1e-5).unwrap();
        assert!((d.max() - 0.1).abs() < 1e-8);
    }

    #[test]
    fn frozen_speeds_of_builtins() {
        let sys = jx1();
        let mut ev: Vec<f64> =
            eigenvalues_real(&sys.jac_flux(0, &sys.equilibrium_state(0.3))).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);

        let sys = jx2();
        let a1 = sys.jac_flux(0, &sys.equilibrium_state(0.2));
        let mut ev: Vec<f64> = eigenvalues_real(&a1).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14 && (ev[2] - 1.0).abs() < 1e-14);
        let shifted = a1 - RMat::identity(3, 3) * 0.2;
        assert!(shifted.determinant().abs() > 1e-3);
    }

    #[test]
    fn relaxation_block_is_minus_identity() {
        let sys = jx2();
        let dq = sys.jac_source(&sys.equilibrium_state(0.1));
        assert_eq!(dq.columns(1, 2).clone_owned(), -RMat::identity(2, 2));
    }

    #[test]
    fn symmetrizer_makes_relaxation_symmetric_nonpositive() {
        let sys = jx2();
        let u = sys.equilibrium_state(0.35);
        let a0 = sys.symmetrizer(&u).unwrap();
        let m = &a0 * sys.jac_relaxation(&u);
        assert!((&m - m.transpose()).amax() < 1e-15);
        let ev = m.symmetric_eigenvalues();
        assert!(ev.iter().all(|x| *x <= 1e-14));
        assert!(a0.symmetric_eigenvalues().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn polynomial_map_derivative() {
        let p = ScalarMap::polynomial(&[1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.deriv(2.0), -2.0 + 12.0);
    }
}
