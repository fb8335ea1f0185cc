//! Small-amplitude periodic traveling waves.
//!
//! Closed-form Stokes expansions to second order in the amplitude, and a
//! Newton-Galerkin solver of the exact profile equations in the even cosine
//! basis that serves as an independent check on them.
//!
//! Profile equations, with `z = k(x - ct)` and `M_k e^{inz} = m(kn) e^{inz}`:
//!
//! ```text
//! KdV          M_k u + u^2 - c u = 0
//! BBM          M_k (u + u^2) - c u = (c - 1)^2 b
//! Boussinesq   c u + M_k^2 q = 0,   c q + u + u^2 = 0      (b1 = b2 = 0)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionSymbol;
use crate::error::{Error, Result};
use crate::numerics::{ls_slope, solve_real, CosineSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    Kdv,
    Bbm,
    Boussinesq,
}

impl EquationKind {
    pub const ALL: [EquationKind; 3] = [
        EquationKind::Kdv,
        EquationKind::Bbm,
        EquationKind::Boussinesq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kdv => "kdv",
            Self::Bbm => "bbm",
            Self::Boussinesq => "boussinesq",
        }
    }
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kdv" => Ok(Self::Kdv),
            "bbm" => Ok(Self::Bbm),
            "boussinesq" | "bnesq" => Ok(Self::Boussinesq),
            other => Err(Error::InvalidInput(format!(
                "unknown equation '{other}' (expected kdv, bbm or boussinesq)"
            ))),
        }
    }
}

const RESONANCE_TOL: f64 = 1e-10;

/// Expansion coefficients of the wave and its speed:
///
/// ```text
/// u = mean_b b + a cos1 cos z + a^2 (u2_mean + u2_cos2 cos 2z)
/// q = q0 + a q1 cos z + a^2 (q2_mean + q2_cos2 cos 2z)          (Boussinesq)
/// c = c0 + c_b b + a^2 c2
/// ```
///
/// For Boussinesq `b = b1 - b2` and `q0` is the O(b) constant of the q channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StokesExpansion {
    pub kind: EquationKind,
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub mean0: f64,
    pub mean_b: f64,
    pub cos1: f64,
    pub u2_mean: f64,
    pub u2_cos2: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2_mean: f64,
    pub q2_cos2: f64,
    pub c0: f64,
    pub c_b: f64,
    pub c2: f64,
}

impl StokesExpansion {
    pub fn speed(&self) -> f64 {
        self.c0 + self.c_b * self.b + self.a * self.a * self.c2
    }

    /// Cosine coefficients 0..=n of u.
    pub fn u_cos(&self, n: usize) -> Vec<f64> {
        let a = self.a;
        let mut v = vec![0.0; n.max(2) + 1];
        v[0] = self.mean0 + self.mean_b * self.b + a * a * self.u2_mean;
        v[1] = a * self.cos1;
        v[2] = a * a * self.u2_cos2;
        v.truncate(n + 1);
        v
    }

    /// Cosine coefficients 0..=n of q (zero outside Boussinesq).
    pub fn q_cos(&self, n: usize) -> Vec<f64> {
        let a = self.a;
        let mut v = vec![0.0; n.max(2) + 1];
        v[0] = self.q0 + a * a * self.q2_mean;
        v[1] = a * self.q1;
        v[2] = a * a * self.q2_cos2;
        v.truncate(n + 1);
        v
    }

    pub fn eval_u(&self, z: f64) -> f64 {
        CosineSeries::new(self.u_cos(2)).eval(z)
    }

    pub fn eval_q(&self, z: f64) -> f64 {
        CosineSeries::new(self.q_cos(2)).eval(z)
    }
}

fn nonresonant(d: f64, k: f64, detail: &str) -> Result<f64> {
    if d.abs() > RESONANCE_TOL {
        Ok(d)
    } else {
        Err(Error::DegenerateResonance {
            k,
            detail: detail.to_string(),
        })
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "wave number must be positive, got {k}"
        )))
    }
}

fn blank(kind: EquationKind, k: f64, a: f64, b: f64, m: f64) -> StokesExpansion {
    StokesExpansion {
        kind,
        k,
        a,
        b,
        mean0: 0.0,
        mean_b: 0.0,
        cos1: 1.0,
        u2_mean: 0.0,
        u2_cos2: 0.0,
        q0: 0.0,
        q1: 0.0,
        q2_mean: 0.0,
        q2_cos2: 0.0,
        c0: m,
        c_b: 0.0,
        c2: 0.0,
    }
}

pub fn bbm_expansion(sym: &DispersionSymbol, k: f64, a: f64, b: f64) -> Result<StokesExpansion> {
    check_k(k)?;
    let m = sym.eval(k)?;
    let m2 = sym.eval(2.0 * k)?;
    let d0 = nonresonant(m - 1.0, k, "m(k) = 1")?;
    let d2 = nonresonant(m - m2, k, "second-harmonic resonance m(k) = m(2k)")?;
    let mut e = blank(EquationKind::Bbm, k, a, b, m);
    e.mean_b = m - 1.0;
    e.u2_mean = 0.5 / d0;
    e.u2_cos2 = 0.5 * m2 / d2;
    e.c_b = 2.0 * m * (m - 1.0);
    e.c2 = m * (1.0 / d0 + 0.5 * m2 / d2);
    Ok(e)
}

/// Stokes expansion of `M_k u + u^2 - c u = 0`; the O(b) family is not
/// carried for KdV.
pub fn kdv_expansion(sym: &DispersionSymbol, k: f64, a: f64) -> Result<StokesExpansion> {
    check_k(k)?;
    let m = sym.eval(k)?;
    let m2 = sym.eval(2.0 * k)?;
    let d0 = nonresonant(m - 1.0, k, "m(k) = 1")?;
    let d2 = nonresonant(m - m2, k, "second-harmonic resonance m(k) = m(2k)")?;
    let mut e = blank(EquationKind::Kdv, k, a, 0.0, m);
    e.u2_mean = 0.5 / d0;
    e.u2_cos2 = 0.5 / d2;
    e.c2 = 1.0 / d0 + 0.5 / d2;
    Ok(e)
}

pub fn bnesq_expansion(
    sym: &DispersionSymbol,
    k: f64,
    a: f64,
    b1: f64,
    b2: f64,
) -> Result<StokesExpansion> {
    check_k(k)?;
    let m = sym.eval(k)?;
    let m2 = sym.eval(2.0 * k)?;
    let (msq, m2sq) = (m * m, m2 * m2);
    let d0 = nonresonant(msq - 1.0, k, "m(k)^2 = 1")?;
    let d2 = nonresonant(msq - m2sq, k, "second-harmonic resonance m(k)^2 = m(2k)^2")?;
    let u0 = 0.5 * msq / d0;
    let u2 = 0.5 * msq * m2sq / d2;
    let b = b1 - b2;
    let mut e = blank(EquationKind::Boussinesq, k, a, b, m);
    e.mean_b = msq - 1.0;
    e.cos1 = m + b * m * (msq - 1.0);
    e.u2_mean = u0;
    e.u2_cos2 = u2;
    e.q0 = (-b1 / m + b2 * m) * (msq - 1.0);
    e.q1 = -1.0 - 2.0 * b * (msq - 1.0);
    e.q2_mean = -m * u0;
    e.q2_cos2 = -m * u2 / m2sq;
    e.c_b = m * (msq - 1.0);
    e.c2 = m * (u0 + 0.5 * u2);
    Ok(e)
}

/// Expansion at b = 0 for any equation kind.
pub fn expansion(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a: f64,
) -> Result<StokesExpansion> {
    match kind {
        EquationKind::Kdv => kdv_expansion(sym, k, a),
        EquationKind::Bbm => bbm_expansion(sym, k, a, 0.0),
        EquationKind::Boussinesq => bnesq_expansion(sym, k, a, 0.0, 0.0),
    }
}

/// Galerkin solution in the even cosine basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveSolution {
    pub kind: EquationKind,
    pub k: f64,
    pub a: f64,
    pub n: usize,
    pub u_hat: Vec<f64>,
    pub q_hat: Option<Vec<f64>>,
    pub c: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl WaveSolution {
    pub fn u_series(&self) -> CosineSeries {
        CosineSeries::new(self.u_hat.clone())
    }

    /// The constant state u = 0, c = m(k).
    pub fn trivial(kind: EquationKind, sym: &DispersionSymbol, k: f64, n: usize) -> Result<Self> {
        Ok(Self {
            kind,
            k,
            a: 0.0,
            n,
            u_hat: vec![0.0; n + 1],
            q_hat: (kind == EquationKind::Boussinesq).then(|| vec![0.0; n + 1]),
            c: sym.eval(k)?,
            residual: 0.0,
            iterations: 0,
        })
    }
}

pub const DEFAULT_TRUNCATION: usize = 32;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 50;

struct Galerkin {
    kind: EquationKind,
    n: usize,
    a: f64,
    /// m(kj), j = 0..=n
    mult: Vec<f64>,
    pin: f64,
}

impl Galerkin {
    fn dim(&self) -> usize {
        match self.kind {
            EquationKind::Boussinesq => 2 * self.n + 2,
            _ => self.n + 1,
        }
    }

    /// Unpacks (u, q, c); u_1 is pinned.
    fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.n;
        let mut u = Vec::with_capacity(n + 1);
        u.push(x[0]);
        u.push(self.pin);
        u.extend_from_slice(&x[1..n]);
        let q = match self.kind {
            EquationKind::Boussinesq => x[n..2 * n + 1].to_vec(),
            _ => Vec::new(),
        };
        (u, q, x[x.len() - 1])
    }

    fn pack(&self, u: &[f64], q: &[f64], c: f64) -> Vec<f64> {
        let mut x = vec![u[0]];
        x.extend_from_slice(&u[2..=self.n]);
        if self.kind == EquationKind::Boussinesq {
            x.extend_from_slice(q);
        }
        x.push(c);
        x
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (u, q, c) = self.unpack(x);
        let us = CosineSeries::new(u.clone());
        let sq = us.product(&us, self.n);
        let sq = sq.cos_coeffs();
        let mut f = Vec::with_capacity(self.dim());
        match self.kind {
            EquationKind::Kdv => {
                for j in 0..=self.n {
                    f.push(self.mult[j] * u[j] + sq[j] - c * u[j]);
                }
            }
            EquationKind::Bbm => {
                for j in 0..=self.n {
                    f.push(self.mult[j] * (u[j] + sq[j]) - c * u[j]);
                }
            }
            EquationKind::Boussinesq => {
                for j in 0..=self.n {
                    f.push(c * u[j] + self.mult[j].powi(2) * q[j]);
                }
                for j in 0..=self.n {
                    f.push(c * q[j] + u[j] + sq[j]);
                }
            }
        }
        f
    }

    /// Row-major Jacobian of the residual with respect to the unknowns.
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let n = self.n;
        let (u, q, c) = self.unpack(x);
        let t = CosineSeries::new(u.clone()).product_matrix(n);
        // unknown u-index for each u column
        let u_cols: Vec<(usize, usize)> = std::iter::once((0, 0))
            .chain((2..=n).map(|j| (j, j - 1)))
            .collect();
        let mut jac = vec![0.0; dim * dim];
        let c_col = dim - 1;
        match self.kind {
            EquationKind::Kdv | EquationKind::Bbm => {
                for row in 0..=n {
                    // KdV: m u + u^2 - c u;  BBM: m (u + u^2) - c u
                    let nonlinear = match self.kind {
                        EquationKind::Bbm => self.mult[row],
                        _ => 1.0,
                    };
                    for &(j, col) in &u_cols {
                        let diag = if row == j { 1.0 } else { 0.0 };
                        jac[row * dim + col] =
                            (self.mult[row] - c) * diag + nonlinear * 2.0 * t[row][j];
                    }
                    jac[row * dim + c_col] = -u[row];
                }
            }
            EquationKind::Boussinesq => {
                let q_off = n;
                for row in 0..=n {
                    // u equation: c u + m^2 q
                    if let Some(&(_, col)) = u_cols.iter().find(|(j, _)| *j == row) {
                        jac[row * dim + col] = c;
                    }
                    jac[row * dim + q_off + row] = self.mult[row].powi(2);
                    jac[row * dim + c_col] = u[row];
                    // q equation: c q + u + u^2
                    let r = n + 1 + row;
                    for &(j, col) in &u_cols {
                        let diag = if row == j { 1.0 } else { 0.0 };
                        jac[r * dim + col] = diag + 2.0 * t[row][j];
                    }
                    jac[r * dim + q_off + row] = c;
                    jac[r * dim + c_col] = q[row];
                }
            }
        }
        jac
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the truncated profile equation with the first cosine coefficient of
/// u pinned to its Stokes value (`a` for KdV/BBM, `a m(k)` for Boussinesq) and
/// the speed as an unknown, by Newton's method from the Stokes guess.
pub fn newton_wave(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a: f64,
    n: usize,
    tol: f64,
) -> Result<WaveSolution> {
    check_k(k)?;
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "truncation N must be at least 8, got {n}"
        )));
    }
    let mult = (0..=n)
        .map(|j| sym.eval(k * j as f64))
        .collect::<Result<Vec<_>>>()?;
    let c0 = mult[1];
    for (j, &mj) in mult.iter().enumerate() {
        if j == 1 {
            continue;
        }
        let d = match kind {
            EquationKind::Boussinesq => c0 * c0 - mj * mj,
            _ => mj - c0,
        };
        if d.abs() <= RESONANCE_TOL * c0.abs().max(1.0).powi(2) {
            return Err(Error::DegenerateResonance {
                k,
                detail: format!(
                    "mode {j} resonates with the fundamental: linearization is singular"
                ),
            });
        }
    }
    if a == 0.0 {
        return WaveSolution::trivial(kind, sym, k, n);
    }

    let stokes = expansion(kind, sym, k, a)?;
    let problem = Galerkin {
        kind,
        n,
        a,
        pin: a * stokes.cos1,
        mult,
    };
    let mut x = problem.pack(&stokes.u_cos(n), &stokes.q_cos(n), stokes.speed());
    let mut f = problem.residual(&x);
    let mut res = norm(&f);
    let mut iterations = 0;
    while res > tol {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
        let jac = problem.jacobian(&x);
        let Some(dx) = solve_real(&jac, &f) else {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        };
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
        iterations += 1;
        f = problem.residual(&x);
        let next = norm(&f);
        if !next.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: next,
            });
        }
        // rounding floor: stop once Newton no longer makes progress
        if next >= res && next <= 1e3 * f64::EPSILON * problem.a.abs().max(1.0) {
            res = next;
            break;
        }
        res = next;
    }
    let (u, q, c) = problem.unpack(&x);
    Ok(WaveSolution {
        kind,
        k,
        a,
        n,
        u_hat: u,
        q_hat: (kind == EquationKind::Boussinesq).then_some(q),
        c,
        residual: res,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionErrorRow {
    pub a: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionErrorTable {
    pub rows: Vec<ExpansionErrorRow>,
    /// Least-squares slope of log error against log a over rows with a != 0.
    pub slope: Option<f64>,
}

/// l2 distance between Newton and Stokes cosine coefficients of u.
pub fn expansion_error(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a_list: &[f64],
    n: usize,
) -> Result<ExpansionErrorTable> {
    let mut rows = Vec::with_capacity(a_list.len());
    for &a in a_list {
        let wave = newton_wave(kind, sym, k, a, n, DEFAULT_NEWTON_TOL)?;
        let stokes = CosineSeries::new(expansion(kind, sym, k, a)?.u_cos(n));
        rows.push(ExpansionErrorRow {
            a,
            error: wave.u_series().l2_distance(&stokes),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.a != 0.0 && r.error > 0.0)
        .map(|r| (r.a.abs().ln(), r.error.ln()))
        .unzip();
    Ok(ExpansionErrorTable {
        slope: ls_slope(&xs, &ys),
        rows,
    })
}
