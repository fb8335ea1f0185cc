//! Shared numerical kernels: bracketed root finding, companion-matrix polynomial
//! roots, the dense complex eigensolver, cosine-series convolution and seeded
//! sampling.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed shared by every randomized check in the crate.
pub const SAMPLING_SEED: u64 = 0x6d6f_6477_6176_6531;

/// Deterministic generator seeded with [`SAMPLING_SEED`].
pub fn seeded_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SAMPLING_SEED)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Row-major `[re, im]` pairs, for debugging dumps.
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| [self[(i, j)].re, self[(i, j)].im])
                    .collect()
            })
            .collect();
        serde_json::to_string(&rows).expect("matrix serializes")
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// All eigenvalues of a dense complex square matrix.
pub fn eig_dense(matrix: &CMatrix) -> Result<Vec<Complex64>> {
    if !matrix.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !matrix.is_finite() {
        return Err(Error::EigenFailure {
            dim: n,
            dump: matrix.to_json(),
        });
    }
    let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| matrix[(i, j)]);
    m.eigenvalues().map_err(|_| Error::EigenFailure {
        dim: n,
        dump: matrix.to_json(),
    })
}

/// Solves the dense real system `a x = b` (row-major `a`) by fully pivoted LU.
/// Returns `None` when the solution is not finite.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    use faer::prelude::Solve;
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let x = m.full_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Solves `a x = b` for square complex `a`. Returns `None` when the solution
/// is not finite.
pub fn solve_complex(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    use faer::prelude::Solve;
    let n = a.nrows();
    let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| a[(i, j)]);
    let rhs = faer::Mat::<faer::c64>::from_fn(n, b.ncols(), |i, j| b[(i, j)]);
    let x = m.full_piv_lu().solve(&rhs);
    let out = CMatrix::from_fn(n, b.ncols(), |i, j| x[(i, j)]);
    out.is_finite().then_some(out)
}

/// A sign-changing interval of a scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends; fails unless the values have opposite signs
    /// (an exact zero at either end also counts).
    pub fn new(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let f_lo = f(lo);
        let f_hi = f(hi);
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo * f_hi > 0.0 {
            return Err(Error::NoBracket { lo, hi });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }
}

/// Bisection/regula-falsi hybrid (Illinois variant). Stops once `|f| <= tol`
/// or the bracket is narrower than `tol * max(1, |x|)`. The returned point
/// always lies inside the bracket.
pub fn find_root(f: impl Fn(f64) -> f64, bracket: Bracket, tol: f64) -> f64 {
    let Bracket {
        mut lo,
        mut hi,
        mut f_lo,
        mut f_hi,
    } = bracket;
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    // -1: last update moved `lo`, +1: moved `hi`
    let mut side = 0i8;
    for iter in 0..400 {
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        if width <= tol * mid.abs().max(1.0) {
            return mid;
        }
        let x = if iter % 3 == 2 {
            mid
        } else {
            let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if secant > lo && secant < hi {
                secant
            } else {
                mid
            }
        };
        let fx = f(x);
        if fx == 0.0 || fx.abs() <= tol {
            return x;
        }
        if !fx.is_finite() {
            // fall back to plain bisection around a singular interior point
            let fm = f(mid);
            if fm.signum() == f_lo.signum() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
            continue;
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// Scans `f` on `samples + 1` equispaced points of `[lo, hi]` and refines
/// every sign change. Exact zeros on the grid are reported as roots.
pub fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, tol: f64) -> Vec<f64> {
    let samples = samples.max(1);
    let h = (hi - lo) / samples as f64;
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    if f_prev == 0.0 {
        roots.push(lo);
    }
    for i in 1..=samples {
        let x = if i == samples { hi } else { lo + h * i as f64 };
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0
            && f_prev.is_finite()
            && fx.is_finite()
            && f_prev.signum() != fx.signum()
        {
            let bracket = Bracket {
                lo: x_prev,
                hi: x,
                f_lo: f_prev,
                f_hi: fx,
            };
            roots.push(find_root(&f, bracket, tol));
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

/// Evaluates a polynomial given highest-degree coefficient first.
pub fn poly_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Roots of a real polynomial (highest-degree coefficient first) as the
/// eigenvalues of its companion matrix, each polished by two Newton steps.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs.first().ok_or(Error::LeadingZero)?;
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::LeadingZero);
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let companion = CMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            Complex64::new(-coeffs[j + 1] / lead, 0.0)
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut roots = eig_dense(&companion)?;
    let derivative: Vec<f64> = coeffs[..degree]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (degree - i) as f64)
        .collect();
    for r in &mut roots {
        for _ in 0..2 {
            let p = poly_eval(coeffs, *r);
            let dp = poly_eval(&derivative, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let candidate = *r - step;
            if poly_eval(coeffs, candidate).norm() < p.norm() {
                *r = candidate;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Groups roots closer than `tol` and reports each cluster's centroid with its
/// multiplicity.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &r in roots {
        match clusters.iter_mut().find(|(c, _)| (*c - r).norm() <= tol) {
            Some((c, count)) => {
                *c = (*c * *count as f64 + r) / (*count as f64 + 1.0);
                *count += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    clusters
}

/// Full Fourier coefficients of an even real function given by its cosine
/// series `u(z) = c_0 + sum_{j>=1} c_j cos(jz)`, together with the products
/// that the traveling-wave Jacobians and Hill matrices need.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    cos: Vec<f64>,
}

impl CosineSeries {
    pub fn new(cos: Vec<f64>) -> Self {
        Self { cos }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            cos: vec![0.0; n + 1],
        }
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    /// Highest cosine index carried.
    pub fn window(&self) -> usize {
        self.cos.len().saturating_sub(1)
    }

    /// Complex coefficient of `e^{ijz}`; zero outside the window.
    pub fn fourier(&self, j: i64) -> f64 {
        let idx = j.unsigned_abs() as usize;
        match idx {
            0 => self.cos.first().copied().unwrap_or(0.0),
            _ if idx < self.cos.len() => 0.5 * self.cos[idx],
            _ => 0.0,
        }
    }

    /// Matrix of `v -> u v` acting on cosine coefficients `0..=n`, with
    /// products outside the window dropped.
    pub fn product_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let mut t = vec![vec![0.0; n + 1]; n + 1];
        for (row, t_row) in t.iter_mut().enumerate() {
            for (col, entry) in t_row.iter_mut().enumerate() {
                let (r, c) = (row as i64, col as i64);
                let full = if col == 0 {
                    self.fourier(r)
                } else {
                    0.5 * (self.fourier(r - c) + self.fourier(r + c))
                };
                *entry = if row == 0 { full } else { 2.0 * full };
            }
        }
        t
    }

    /// Cosine coefficients `0..=n` of `u * v`.
    pub fn product(&self, other: &CosineSeries, n: usize) -> CosineSeries {
        let t = self.product_matrix(n);
        let v: Vec<f64> = (0..=n)
            .map(|j| other.cos.get(j).copied().unwrap_or(0.0))
            .collect();
        CosineSeries::new(
            t.iter()
                .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// Toeplitz table `T[p][q] = u_hat(n_p - n_q)` on the symmetric mode
    /// window `-n..=n`, used for multiplication in the exponential basis.
    pub fn toeplitz(&self, n: usize) -> Vec<Vec<f64>> {
        let size = 2 * n + 1;
        (0..size)
            .map(|p| {
                (0..size)
                    .map(|q| self.fourier(p as i64 - q as i64))
                    .collect()
            })
            .collect()
    }

    /// Pointwise value at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        self.cos
            .iter()
            .enumerate()
            .map(|(j, c)| c * (j as f64 * z).cos())
            .sum()
    }

    pub fn l2_distance(&self, other: &CosineSeries) -> f64 {
        let n = self.cos.len().max(other.cos.len());
        (0..n)
            .map(|j| {
                let a = self.cos.get(j).copied().unwrap_or(0.0);
                let b = other.cos.get(j).copied().unwrap_or(0.0);
                (a - b).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Convolution table of a cosine series over a window; thin constructor kept
/// for call sites that think in terms of Toeplitz products.
pub fn convolve_sym(u_cos: &[f64], window: usize) -> Vec<Vec<f64>> {
    CosineSeries::new(u_cos.to_vec()).toeplitz(window)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    Some(sxy / sxx)
}

/// All permutations of `0..n` (n is at most 4 wherever this is used).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
