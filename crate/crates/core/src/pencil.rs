//! Reduced spectral pencils near the origin.
//!
//! For small Floquet exponent `xi` and amplitude `a` the eigenvalues of the
//! linearized operator closest to zero are the roots of
//! `det(B - lambda I) = 0`, where `B` and `I` are 3x3 (BBM) or 4x4
//! (Boussinesq). The entries below are exact finite formulas in `(xi, a)`;
//! higher-order remainders are dropped by definition.
//!
//! Substituting `lambda = -i xi L` and removing the common power of `xi`
//! leaves a real polynomial in `L`, written as
//!
//! ```text
//! cubic     i xi^3 (d3 L^3 - d2 L^2 - d1 L + d0)
//! quartic     xi^4 (d4 L^4 - d3 L^3 - d2 L^2 + d1 L + d0)
//! ```
//!
//! A pair of complex roots `L` means an eigenvalue off the imaginary axis.

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::DispersionSymbol;
use crate::error::{Error, Result};
use crate::indices::Verdict;
use crate::numerics::{eig_dense, permutations, poly_roots, solve_complex, CMatrix};
use crate::stokes::EquationKind;

const RESONANCE_TOL: f64 = 1e-10;

/// Imaginary parts of the rescaled coefficients below this fraction of their
/// norm are rounding and get zeroed.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Relative degeneracy threshold for discriminants, scaled by the coefficient
/// magnitude to the discriminant's homogeneous degree.
pub const DISC_TOL: f64 = 1e-12;

pub const DEFAULT_XI: f64 = 1e-2;
pub const DEFAULT_AMPLITUDE: f64 = 1e-2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedPencil {
    pub kind: EquationKind,
    pub k: f64,
    pub xi: f64,
    pub a: f64,
    #[serde(serialize_with = "ser_matrix")]
    pub b: CMatrix,
    #[serde(serialize_with = "ser_matrix")]
    pub i: CMatrix,
}

fn ser_matrix<S: serde::Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols())
            .map(|c| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl ReducedPencil {
    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Eigenvalues of `I^-1 B`, i.e. the pencil roots `lambda` themselves.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let m = solve_complex(&self.i, &self.b).ok_or_else(|| Error::EigenFailure {
            dim: self.dim(),
            dump: self.to_json(),
        })?;
        eig_dense(&m)
    }

    /// `{"b": [[[re, im], ...], ...], "i": ...}` with rows in order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pencil serializes")
    }
}

struct Local {
    m: f64,
    m2: f64,
    mp: f64,
    mpp: f64,
}

fn local(sym: &DispersionSymbol, k: f64) -> Result<Local> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "wave number must be positive, got {k}"
        )));
    }
    Ok(Local {
        m: sym.eval(k)?,
        m2: sym.eval(2.0 * k)?,
        mp: sym.d1(k)?,
        mpp: sym.d2(k)?,
    })
}

fn nonresonant(value: f64, k: f64, what: &str) -> Result<f64> {
    if value.abs() <= RESONANCE_TOL {
        return Err(Error::DegenerateResonance {
            k,
            detail: what.to_string(),
        });
    }
    Ok(value)
}

pub fn build_bbm_pencil(sym: &DispersionSymbol, k: f64, xi: f64, a: f64) -> Result<ReducedPencil> {
    let Local { m, m2, mp, mpp } = local(sym, k)?;
    let d2 = nonresonant(m - m2, k, "second-harmonic resonance m(k) = m(2k)")?;
    nonresonant(m - 1.0, k, "m(k) = 1")?;
    let s = k * mp + 0.5 * k * k * mpp;
    let r = m2 * (m - 1.0) / d2;
    let ix = I * xi;

    let mut b = CMatrix::zeros(3, 3);
    b[(2, 1)] += a * m;
    b[(0, 0)] += ix * (-k * mp);
    b[(1, 1)] += ix * (-k * mp);
    b[(2, 2)] += ix * (m - 1.0);
    b[(0, 2)] -= ix * a * (2.0 + r);
    b[(2, 0)] -= ix * a * (m + k * mp + 0.5 * r);
    b[(0, 1)] += xi * xi * s;
    b[(1, 0)] -= xi * xi * s;

    let mut id = CMatrix::identity(3);
    let c = a * m2 / (2.0 * d2);
    id[(0, 2)] -= 2.0 * c;
    id[(2, 0)] -= c;

    Ok(ReducedPencil {
        kind: EquationKind::Bbm,
        k,
        xi,
        a,
        b,
        i: id,
    })
}

pub fn build_bnesq_pencil(
    sym: &DispersionSymbol,
    k: f64,
    xi: f64,
    a: f64,
) -> Result<ReducedPencil> {
    let Local { m, m2, mp, mpp } = local(sym, k)?;
    let (msq, m2sq) = (m * m, m2 * m2);
    let d2 = nonresonant(msq - m2sq, k, "second-harmonic resonance m(k)^2 = m(2k)^2")?;
    nonresonant(msq - 1.0, k, "m(k)^2 = 1")?;
    let u2 = 0.5 * msq * m2sq / d2;
    let s = k * mp + 0.5 * k * k * mpp;
    let w = msq + 1.0;
    let ix = I * xi;

    let mut b = CMatrix::zeros(4, 4);
    b[(3, 1)] += -0.5 * a * m * w;
    b[(0, 0)] += ix * (-k * mp);
    b[(1, 1)] += ix * (-k * mp);
    b[(2, 2)] += ix * m;
    b[(2, 3)] += ix;
    b[(3, 2)] += ix;
    b[(3, 3)] += ix * m;
    b[(0, 2)] += 2.0 * ix * a / w * (u2 - msq);
    b[(0, 3)] += 2.0 * ix * a / w * (2.0 * m * u2 + 0.5 * k * mp * (msq + 2.0));
    b[(2, 0)] += ix * a * u2;
    b[(3, 0)] += ix * a * m * (0.5 * (msq + 3.0) + 2.0 * u2 + 2.0 * k * m * mp);
    b[(0, 1)] += xi * xi * s;
    b[(1, 0)] -= xi * xi * s;

    let mut id = CMatrix::identity(4);
    let c1 = 0.5 * a * (2.0 * u2 - msq - 2.0) / w;
    id[(0, 3)] += 2.0 * c1;
    id[(3, 0)] += c1 * w;
    let c2 = -ix * a * 0.5 * k * m * mp / (w * w);
    id[(1, 3)] += 2.0 * c2;
    id[(3, 1)] += c2 * w;

    Ok(ReducedPencil {
        kind: EquationKind::Boussinesq,
        k,
        xi,
        a,
        b,
        i: id,
    })
}

/// The reduced pencil for `kind`. No reduced pencil is derived for KdV.
pub fn build_pencil(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    xi: f64,
    a: f64,
) -> Result<ReducedPencil> {
    match kind {
        EquationKind::Bbm => build_bbm_pencil(sym, k, xi, a),
        EquationKind::Boussinesq => build_bnesq_pencil(sym, k, xi, a),
        EquationKind::Kdv => Err(Error::Unsupported(
            "no reduced pencil is available for KdV".into(),
        )),
    }
}

/// The real polynomial left after rescaling, in the `d_j` convention of the
/// module docs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledCharPoly {
    pub degree: usize,
    /// `d_0..=d_degree`.
    pub d: Vec<f64>,
    /// Largest imaginary part removed from the rescaled coefficients.
    pub imag_residue: f64,
}

impl RescaledCharPoly {
    /// Sign applied to `d_j` to obtain the coefficient of `L^j`.
    fn sign(&self, j: usize) -> f64 {
        match (self.degree, j) {
            (3, 1) | (3, 2) | (4, 2) | (4, 3) => -1.0,
            _ => 1.0,
        }
    }

    /// Coefficients of the polynomial in `L`, highest degree first.
    pub fn coefficients(&self) -> Vec<f64> {
        (0..=self.degree)
            .rev()
            .map(|j| self.sign(j) * self.d[j])
            .collect()
    }

    /// Roots `L`; the pencil eigenvalues are `-i xi L`.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        poly_roots(&self.coefficients())
    }
}

type CPoly = Vec<Complex64>;

fn cpoly_mul(p: &[Complex64], q: &[Complex64]) -> CPoly {
    let mut out = vec![ZERO; p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients (lowest first) of `det(B + lambda I)` in `lambda` by the
/// Leibniz expansion; exact for the tiny sizes used here.
fn det_linear(b: &CMatrix, i: &CMatrix) -> CPoly {
    let n = b.nrows();
    let mut total = vec![ZERO; n + 1];
    for perm in permutations(n) {
        let mut inversions = 0;
        for x in 0..n {
            for y in x + 1..n {
                if perm[x] > perm[y] {
                    inversions += 1;
                }
            }
        }
        let mut term: CPoly = vec![Complex64::new(
            if inversions % 2 == 0 { 1.0 } else { -1.0 },
            0.0,
        )];
        for (row, &col) in perm.iter().enumerate() {
            term = cpoly_mul(&term, &[b[(row, col)], i[(row, col)]]);
        }
        for (t, v) in total.iter_mut().zip(term) {
            *t += v;
        }
    }
    total
}

pub fn rescaled_charpoly(p: &ReducedPencil) -> Result<RescaledCharPoly> {
    if p.xi == 0.0 {
        return Err(Error::NotRescalable);
    }
    let n = p.dim();
    // det(B - (-i xi L) I) = det(B + L (i xi I))
    let scaled_i = CMatrix::from_fn(n, n, |r, c| I * p.xi * p.i[(r, c)]);
    let raw = det_linear(&p.b, &scaled_i);
    let divisor = match n {
        3 => I * p.xi.powi(3),
        4 => Complex64::new(p.xi.powi(4), 0.0),
        _ => {
            return Err(Error::DegreeMismatch {
                expected: 4,
                actual: n,
            })
        }
    };
    let q: Vec<Complex64> = raw.iter().map(|z| z / divisor).collect();
    let norm = q.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let imag_residue = q.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let limit = IMAG_RESIDUE_TOL * norm.max(f64::MIN_POSITIVE);
    if imag_residue > limit {
        return Err(Error::ComplexResidue {
            residue: imag_residue,
            limit,
        });
    }
    let mut poly = RescaledCharPoly {
        degree: n,
        d: vec![0.0; n + 1],
        imag_residue,
    };
    poly.d = q
        .iter()
        .enumerate()
        .map(|(j, z)| poly.sign(j) * z.re)
        .collect();
    Ok(poly)
}

fn expect_degree(d: &RescaledCharPoly, expected: usize) -> Result<()> {
    if d.degree != expected {
        return Err(Error::DegreeMismatch {
            expected,
            actual: d.degree,
        });
    }
    Ok(())
}

/// `18 d3 d2 d1 d0 + d2^2 d1^2 + 4 d2^3 d0 + 4 d3 d1^3 - 27 d3^2 d0^2`, which is
/// the ordinary discriminant of the cubic in `L`.
pub fn disc_cubic(d: &RescaledCharPoly) -> Result<f64> {
    expect_degree(d, 3)?;
    let [d0, d1, d2, d3] = [d.d[0], d.d[1], d.d[2], d.d[3]];
    Ok(
        18.0 * d3 * d2 * d1 * d0
            + d2 * d2 * d1 * d1
            + 4.0 * d2.powi(3) * d0
            + 4.0 * d3 * d1.powi(3)
            - 27.0 * d3 * d3 * d0 * d0,
    )
}

/// `[p4, p3, p2, p1, p0]` of a quartic `RescaledCharPoly`.
fn quartic_p(d: &RescaledCharPoly) -> Result<[f64; 4 + 1]> {
    expect_degree(d, 4)?;
    let c = d.coefficients();
    Ok([c[0], c[1], c[2], c[3], c[4]])
}

pub fn disc_quartic(d: &RescaledCharPoly) -> Result<f64> {
    Ok(quartic_discriminants(&quartic_p(d)?).0)
}

pub fn disc1(d: &RescaledCharPoly) -> Result<f64> {
    Ok(quartic_discriminants(&quartic_p(d)?).1)
}

pub fn disc2(d: &RescaledCharPoly) -> Result<f64> {
    Ok(quartic_discriminants(&quartic_p(d)?).2)
}

/// `(disc, disc1, disc2)` of `p4 x^4 + p3 x^3 + p2 x^2 + p1 x + p0`.
pub fn quartic_discriminants(p: &[f64; 5]) -> (f64, f64, f64) {
    let [p4, p3, p2, p1, p0] = *p;
    let disc = 256.0 * p4.powi(3) * p0.powi(3)
        - 192.0 * p4 * p4 * p3 * p1 * p0 * p0
        - 128.0 * p4 * p4 * p2 * p2 * p0 * p0
        + 144.0 * p4 * p4 * p2 * p1 * p1 * p0
        - 27.0 * p4 * p4 * p1.powi(4)
        + 144.0 * p4 * p3 * p3 * p2 * p0 * p0
        - 6.0 * p4 * p3 * p3 * p1 * p1 * p0
        - 80.0 * p4 * p3 * p2 * p2 * p1 * p0
        + 18.0 * p4 * p3 * p2 * p1.powi(3)
        + 16.0 * p4 * p2.powi(4) * p0
        - 4.0 * p4 * p2.powi(3) * p1 * p1
        - 27.0 * p3.powi(4) * p0 * p0
        + 18.0 * p3.powi(3) * p2 * p1 * p0
        - 4.0 * p3.powi(3) * p1.powi(3)
        - 4.0 * p3 * p3 * p2.powi(3) * p0
        + p3 * p3 * p2 * p2 * p1 * p1;
    let disc1 = 8.0 * p4 * p2 - 3.0 * p3 * p3;
    let disc2 = 64.0 * p4.powi(3) * p0 - 16.0 * p4 * p4 * p2 * p2 + 16.0 * p4 * p3 * p3 * p2
        - 16.0 * p4 * p4 * p3 * p1
        - 3.0 * p3.powi(4);
    (disc, disc1, disc2)
}

/// Degeneracy threshold for the discriminant of a degree-`deg` polynomial.
pub fn disc_tolerance(coeffs: &[f64]) -> f64 {
    let deg = coeffs.len().saturating_sub(1) as i32;
    let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    DISC_TOL * scale.powi(2 * deg - 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuarticCase {
    TwoRealOnePair,
    FourReal,
    TwoPairs,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarticClass {
    pub case: QuarticCase,
    pub disc: f64,
    pub disc1: f64,
    pub disc2: f64,
}

/// Root structure of `p4 x^4 + ... + p0` from the signs of its discriminants.
pub fn classify_quartic(p: &[f64; 5], tol: f64) -> Result<QuarticClass> {
    if p[0] == 0.0 || !p[0].is_finite() {
        return Err(Error::LeadingZero);
    }
    let (disc, disc1, disc2) = quartic_discriminants(p);
    let case = if disc < -tol {
        QuarticCase::TwoRealOnePair
    } else if disc <= tol {
        QuarticCase::Degenerate
    } else if disc1 < 0.0 && disc2 < 0.0 {
        QuarticCase::FourReal
    } else if disc1 > 0.0 || disc2 > 0.0 {
        QuarticCase::TwoPairs
    } else {
        QuarticCase::Degenerate
    };
    Ok(QuarticClass {
        case,
        disc,
        disc1,
        disc2,
    })
}

/// Root-count oracle for `classify_quartic`: real roots counted among the
/// companion-matrix eigenvalues, `|Im| <= 1e-7` relative to the largest root.
pub fn root_case(p: &[f64; 5]) -> Result<QuarticCase> {
    let roots = poly_roots(p)?;
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let real = roots.iter().filter(|r| r.im.abs() <= 1e-7 * scale).count();
    Ok(match real {
        4 => QuarticCase::FourReal,
        2 => QuarticCase::TwoRealOnePair,
        0 => QuarticCase::TwoPairs,
        _ => QuarticCase::Degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilVerdict {
    pub kind: EquationKind,
    pub k: f64,
    pub xi: f64,
    pub a: f64,
    pub verdict: Verdict,
    pub disc: f64,
    /// Discriminant of the same pencil at a = 0.
    pub disc_zero: f64,
    pub class: Option<QuarticClass>,
}

/// Stability near the origin read off the pencil at one `(xi, a)`.
pub fn pencil_verdict(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    xi: f64,
    a: f64,
) -> Result<PencilVerdict> {
    let poly = rescaled_charpoly(&build_pencil(kind, sym, k, xi, a)?)?;
    let zero = rescaled_charpoly(&build_pencil(kind, sym, k, xi, 0.0)?)?;
    let (disc, disc_zero, class) = match kind {
        EquationKind::Boussinesq => {
            let p = quartic_p(&poly)?;
            let class = classify_quartic(&p, disc_tolerance(&p))?;
            (class.disc, disc_quartic(&zero)?, Some(class))
        }
        _ => (disc_cubic(&poly)?, disc_cubic(&zero)?, None),
    };
    // the a = 0 discriminant and the index coefficient of a^2 both vanish
    // together with ind, so the sign at small (xi, a) is then not decided
    let index_degenerate = crate::indices::ind(kind, sym, k)?.verdict == Verdict::Degenerate;
    let verdict = if index_degenerate || disc.abs() <= disc_tolerance(&poly.coefficients()) {
        Verdict::Degenerate
    } else {
        match class.map(|c| c.case) {
            None if disc < 0.0 => Verdict::ModulationallyUnstable,
            None => Verdict::ModulationallyStableNearOrigin,
            Some(QuarticCase::FourReal) => Verdict::ModulationallyStable,
            Some(QuarticCase::TwoRealOnePair | QuarticCase::TwoPairs) => {
                Verdict::ModulationallyUnstable
            }
            Some(QuarticCase::Degenerate) => Verdict::Degenerate,
        }
    };
    Ok(PencilVerdict {
        kind,
        k,
        xi,
        a,
        verdict,
        disc,
        disc_zero,
        class,
    })
}

/// Leading-order value of `disc(xi = a = t)` as `t -> 0`, by Richardson
/// extrapolation in `t^2` over `t`, `t/2`, `t/4`.
pub fn leading_discriminants(sym: &DispersionSymbol, k: f64, t: f64) -> Result<(f64, f64, f64)> {
    let mut rows = Vec::with_capacity(3);
    for s in [t, 0.5 * t, 0.25 * t] {
        let p = quartic_p(&rescaled_charpoly(&build_bnesq_pencil(sym, k, s, s)?)?)?;
        rows.push(quartic_discriminants(&p));
    }
    let extrapolate = |f: [f64; 3]| {
        let r1 = (4.0 * f[1] - f[0]) / 3.0;
        let r2 = (4.0 * f[2] - f[1]) / 3.0;
        (16.0 * r2 - r1) / 15.0
    };
    Ok((
        extrapolate([rows[0].0, rows[1].0, rows[2].0]),
        extrapolate([rows[0].1, rows[1].1, rows[2].1]),
        extrapolate([rows[0].2, rows[1].2, rows[2].2]),
    ))
}

/// `(1/16) xi^2 (k i1 (k i1 xi - c i2-)(k i1 xi + c i2-))^2` with `c = 4`, the
/// reference closed form of the BBM cubic discriminant at `a = 0`.
pub fn bbm_disc_reference(sym: &DispersionSymbol, k: f64, xi: f64) -> Result<f64> {
    bbm_disc_form(sym, k, xi, 4.0)
}

/// The same expression with `c = 2`. At `a = 0` the cubic factors as
/// `(L - (1 - m))(xi^2 s^2 - (L - k m')^2)` with `s = k i1 / 2`, and this is
/// its discriminant.
pub fn bbm_disc_exact(sym: &DispersionSymbol, k: f64, xi: f64) -> Result<f64> {
    bbm_disc_form(sym, k, xi, 2.0)
}

fn bbm_disc_form(sym: &DispersionSymbol, k: f64, xi: f64, c: f64) -> Result<f64> {
    let b = crate::indices::base_indices(sym, k)?;
    let ki1 = k * b.i1;
    let inner = ki1 * (ki1 * xi - c * b.i2m) * (ki1 * xi + c * b.i2m);
    Ok(xi * xi * inner * inner / 16.0)
}
