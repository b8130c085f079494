//! Small dense linear algebra helpers and a banded LU solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.abs()))
}

/// Eigenvalues of a complex square matrix via the Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    if n == 2 {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let half_tr = (a + d) * 0.5;
        let disc = ((a - d) * 0.5).powi(2) + b * c;
        let root = disc.sqrt();
        let l1 = half_tr + root;
        let l2 = half_tr - root;
        // recompute the smaller root from the determinant to avoid cancellation
        let det = a * d - b * c;
        let (big, small) = if l1.norm() >= l2.norm() { (l1, l2) } else { (l2, l1) };
        let small = if big.norm() > 0.0 { det / big } else { small };
        return Ok(vec![big, small]);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix passed to eigenvalue solver".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::NoConvergence("complex Schur iteration".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

pub fn eigenvalues_real(m: &RMat) -> Result<Vec<C64>> {
    eigenvalues(&to_complex(m))
}

/// Unit-norm right null vector approximation of `m` (right singular vector of the
/// smallest singular value) together with that singular value.
pub fn null_vector(m: &CMat) -> (CVec, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut k = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] < svd.singular_values[k] {
            k = i;
        }
    }
    let v = CVec::from_iterator(n, (0..n).map(|j| v_t[(k, j)].conj()));
    (v, svd.singular_values[k])
}

/// Eigenvalues and unit eigenvectors (columns).
pub fn eigenpairs(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let vals = eigenvalues(m)?;
    let n = m.nrows();
    let mut vecs = CMat::zeros(n, n);
    for (k, lam) in vals.iter().enumerate() {
        let shifted = m - CMat::identity(n, n) * *lam;
        let (v, _) = null_vector(&shifted);
        vecs.set_column(k, &v);
    }
    Ok((vals, vecs))
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{}x{} complex matrix", m.nrows(), m.ncols())))
}

pub fn inverse_real(m: &RMat) -> Result<RMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{}x{} real matrix", m.nrows(), m.ncols())))
}

/// Matrix sign function by the scaled Newton iteration. Fails if `m` has an
/// eigenvalue on (or numerically at) the imaginary axis.
pub fn matrix_sign(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let mut x = m.clone();
    for _ in 0..100 {
        let lu = x.clone().lu();
        let d = lu.determinant();
        let xinv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("matrix sign iteration hit the imaginary axis".into()))?;
        let mu = if d.norm() > 0.0 { d.norm().powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&x * C64::new(mu, 0.0) + &xinv * C64::new(1.0 / mu, 0.0)) * C64::new(0.5, 0.0);
        let diff = max_abs(&(&next - &x));
        x = next;
        if diff <= 1e-14 * max_abs(&x).max(1.0) {
            // a couple of unscaled polishing steps
            for _ in 0..2 {
                let xinv = inverse(&x)?;
                x = (&x + &xinv) * C64::new(0.5, 0.0);
            }
            return Ok(x);
        }
    }
    Err(Error::NoConvergence("matrix sign iteration".into()))
}

/// Spectral projector onto the invariant subspace of eigenvalues with real part
/// greater than `shift`.
pub fn projector_right_of(m: &CMat, shift: f64) -> Result<CMat> {
    let n = m.nrows();
    let shifted = m - CMat::identity(n, n) * C64::new(shift, 0.0);
    let sign = matrix_sign(&shifted)?;
    Ok((CMat::identity(n, n) + sign) * C64::new(0.5, 0.0))
}

/// Eigenvalues sorted by increasing real part.
pub fn sorted_by_real(mut vals: Vec<C64>) -> Vec<C64> {
    vals.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    vals
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * C64::new(scale, 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=14 {
        term = &term * &a * C64::new(1.0 / k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Real linear least squares via SVD.
pub fn lstsq(a: &RMat, b: &RVec) -> Result<RVec> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-14)
        .map_err(|e| Error::Singular(format!("least squares: {e}")))
}

/// Orthonormal basis (rows) of the row space of `m`, keeping singular values
/// above `tol` relative to the largest.
pub fn row_space_basis(m: &RMat, tol: f64) -> RMat {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax.max(f64::MIN_POSITIVE))
        .collect();
    let mut out = RMat::zeros(keep.len(), m.ncols());
    for (r, &i) in keep.iter().enumerate() {
        out.set_row(r, &v_t.row(i));
    }
    out
}

/// Banded matrix with LU factorization by partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku` so that pivoting fill-in fits.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: Vec::new(),
            factored: false,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map(|k| self.data[k]).unwrap_or(0.0)
    }

    /// Adds `value` at (i, j). Panics if the entry lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.index(i, j).expect("inside band");
        self.data[k] += value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j).expect("inside band");
        self.data[k] = value;
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        self.pivots = vec![0; n];
        for col in 0..n {
            let last_row = (col + self.kl).min(n - 1);
            let mut p = col;
            let mut best = self.get(col, col).abs();
            for r in col + 1..=last_row {
                let v = self.get(r, col).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(format!("banded LU pivot at column {col}")));
            }
            self.pivots[col] = p;
            let last_col = (col + self.kl + self.ku).min(n - 1);
            if p != col {
                for j in col..=last_col {
                    let a = self.index(col, j).expect("band");
                    let b = self.index(p, j).expect("band");
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(col, col);
            for r in col + 1..=last_row {
                let factor = self.get(r, col) / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.set(r, col, factor);
                for j in col + 1..=last_col {
                    let u = self.get(col, j);
                    if u != 0.0 {
                        let k = self.index(r, j).expect("band");
                        self.data[k] -= factor * u;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        assert!(self.factored, "factor() must be called before solve()");
        let n = self.n;
        for col in 0..n {
            let p = self.pivots[col];
            if p != col {
                rhs.swap(p, col);
            }
            let last_row = (col + self.kl).min(n - 1);
            for r in col + 1..=last_row {
                rhs[r] -= self.get(r, col) * rhs[col];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + self.kl + self.ku).min(n - 1);
            let mut acc = rhs[i];
            for j in i + 1..=last_col {
                acc -= self.get(i, j) * rhs[j];
            }
            rhs[i] = acc / self.get(i, i);
        }
    }
}
