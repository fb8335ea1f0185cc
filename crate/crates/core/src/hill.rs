//! Truncated Floquet-Bloch operators (Hill's method).
//!
//! Perturbations `e^{i xi z} sum_n v_n e^{inz}` on the mode window `-N..=N`.
//! With `D_n = i(n + xi)` and `u_j` the complex Fourier coefficients of the wave:
//!
//! ```text
//! KdV          A[n,m] = D_n [(m(k(n+xi)) - c) d_nm + 2 u_{n-m}]
//! BBM          A[n,m] = D_n [c d_nm - m(k(n+xi)) (d_nm + 2 u_{n-m})]
//! Boussinesq   [u; q] rows:  D_n [c d_nm | m(k(n+xi))^2 d_nm]
//!                            D_n [d_nm + 2 u_{n-m} | c d_nm]
//! ```
//!
//! Products outside the window are dropped (no aliasing).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::DispersionSymbol;
use crate::error::{Error, Result};
use crate::numerics::{eig_dense, find_root, permutations, scan_roots, Bracket, CMatrix};
use crate::pencil::build_pencil;
use crate::stokes::{newton_wave, EquationKind, WaveSolution, DEFAULT_NEWTON_TOL};

/// Eigenvalues smaller than this in modulus count as zero.
pub const ZERO_SNAP: f64 = 1e-12;

/// Change of `max_re` under doubling `N` above which a slice is flagged.
pub const REFINEMENT_TOL: f64 = 1e-6;

const ROOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct BlochOperator {
    pub kind: EquationKind,
    pub k: f64,
    pub xi: f64,
    pub a: f64,
    pub n: usize,
    pub matrix: CMatrix,
    pub wave: WaveSolution,
}

impl BlochOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_wave(kind: EquationKind, wave: &WaveSolution, n: usize) -> Result<()> {
    if wave.kind != kind {
        return Err(Error::KindMismatch {
            wave: wave.kind.as_str(),
            operator: kind.as_str(),
        });
    }
    if n < wave.n {
        return Err(Error::TruncationTooSmall {
            requested: n,
            wave: wave.n,
        });
    }
    Ok(())
}

fn modes(n: usize) -> impl Iterator<Item = (usize, i64)> + Clone {
    (0..=2 * n).map(move |p| (p, p as i64 - n as i64))
}

pub fn assemble_scalar(
    kind: EquationKind,
    sym: &DispersionSymbol,
    wave: &WaveSolution,
    xi: f64,
    n: usize,
) -> Result<BlochOperator> {
    if kind == EquationKind::Boussinesq {
        return Err(Error::KindMismatch {
            wave: wave.kind.as_str(),
            operator: "scalar",
        });
    }
    check_wave(kind, wave, n)?;
    let u = wave.u_series();
    let size = 2 * n + 1;
    let mut a = CMatrix::zeros(size, size);
    for (p, np) in modes(n) {
        let shift = np as f64 + xi;
        let d = Complex64::new(0.0, shift);
        let mult = sym.eval(wave.k * shift)?;
        for (q, nq) in modes(n) {
            let delta = if p == q { 1.0 } else { 0.0 };
            let conv = 2.0 * u.fourier(np - nq);
            let entry = match kind {
                EquationKind::Kdv => (mult - wave.c) * delta + conv,
                _ => wave.c * delta - mult * (delta + conv),
            };
            if entry != 0.0 {
                a[(p, q)] = d * entry;
            }
        }
    }
    Ok(BlochOperator {
        kind,
        k: wave.k,
        xi,
        a: wave.a,
        n,
        matrix: a,
        wave: wave.clone(),
    })
}

pub fn assemble_bnesq(
    sym: &DispersionSymbol,
    wave: &WaveSolution,
    xi: f64,
    n: usize,
) -> Result<BlochOperator> {
    check_wave(EquationKind::Boussinesq, wave, n)?;
    let u = wave.u_series();
    let size = 2 * n + 1;
    let mut a = CMatrix::zeros(2 * size, 2 * size);
    for (p, np) in modes(n) {
        let shift = np as f64 + xi;
        let d = Complex64::new(0.0, shift);
        let mult = sym.eval(wave.k * shift)?;
        a[(p, p)] = d * wave.c;
        a[(p, size + p)] = d * mult * mult;
        a[(size + p, size + p)] = d * wave.c;
        for (q, nq) in modes(n) {
            let delta = if p == q { 1.0 } else { 0.0 };
            let entry = delta + 2.0 * u.fourier(np - nq);
            if entry != 0.0 {
                a[(size + p, q)] = d * entry;
            }
        }
    }
    Ok(BlochOperator {
        kind: EquationKind::Boussinesq,
        k: wave.k,
        xi,
        a: wave.a,
        n,
        matrix: a,
        wave: wave.clone(),
    })
}

pub fn assemble(
    kind: EquationKind,
    sym: &DispersionSymbol,
    wave: &WaveSolution,
    xi: f64,
    n: usize,
) -> Result<BlochOperator> {
    match kind {
        EquationKind::Boussinesq => assemble_bnesq(sym, wave, xi, n),
        _ => assemble_scalar(kind, sym, wave, xi, n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub xi: f64,
    /// Sorted by (Re, Im).
    #[serde(serialize_with = "ser_complex")]
    pub eigenvalues: Vec<Complex64>,
    pub max_re: f64,
    pub radius: f64,
    #[serde(serialize_with = "ser_complex")]
    pub near_origin: Vec<Complex64>,
}

fn ser_complex<S: serde::Serializer>(
    v: &[Complex64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl SpectrumSlice {
    /// Number of eigenvalues within `tol` of the origin.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| z.norm() <= tol.max(ZERO_SNAP))
            .count()
    }
}

/// Radius of the disk around the origin used for pencil matching:
/// `10 xi (1 + max(|(km)'(0)|, |(km)'(k)|))`, floored at 1e-8.
pub fn near_origin_radius(sym: &DispersionSymbol, k: f64, xi: f64) -> f64 {
    let g0 = sym.group_speed(0.0).unwrap_or(1.0).abs();
    let gk = sym.group_speed(k).unwrap_or(0.0).abs();
    (10.0 * xi.abs() * (1.0 + g0.max(gk))).max(1e-8)
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// `S A S^-1` with `S = diag(1, |m(k(n+xi))|)` on the (u, q) channels. The
/// zero-amplitude blocks `[[c, m^2], [1, c]]` become `[[c, m], [m, c]]`, which
/// keeps the eigensolver accurate when `m` grows at high modes.
fn balanced(op: &BlochOperator, sym: &DispersionSymbol) -> Result<CMatrix> {
    let size = 2 * op.n + 1;
    let mut scale = vec![1.0; 2 * size];
    for (p, np) in modes(op.n) {
        let m = sym.eval(op.k * (np as f64 + op.xi))?.abs();
        if m.is_normal() {
            scale[size + p] = m;
        }
    }
    let a = &op.matrix;
    Ok(CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] * (scale[i] / scale[j])
    }))
}

pub fn spectrum(op: &BlochOperator, sym: &DispersionSymbol) -> Result<SpectrumSlice> {
    let mut eigenvalues = match op.kind {
        EquationKind::Boussinesq => eig_dense(&balanced(op, sym)?)?,
        _ => eig_dense(&op.matrix)?,
    };
    for z in &mut eigenvalues {
        if z.norm() < ZERO_SNAP {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    sort_complex(&mut eigenvalues);
    let max_re = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let radius = near_origin_radius(sym, op.k, op.xi);
    let near_origin = eigenvalues
        .iter()
        .copied()
        .filter(|z| z.norm() <= radius)
        .collect();
    Ok(SpectrumSlice {
        xi: op.xi,
        eigenvalues,
        max_re,
        radius,
        near_origin,
    })
}

/// Spectrum of the operator of the wave with amplitude `a`, computed by
/// Newton with the same truncation.
pub fn wave_spectrum(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a: f64,
    xi: f64,
    n: usize,
) -> Result<SpectrumSlice> {
    let wave = newton_wave(kind, sym, k, a, n, DEFAULT_NEWTON_TOL)?;
    spectrum(&assemble(kind, sym, &wave, xi, n)?, sym)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilMatch {
    pub xi: f64,
    pub a: f64,
    /// Largest distance between matched Hill and pencil eigenvalues.
    pub mismatch: f64,
    pub ratio: f64,
    pub hill_max_re: f64,
    pub pencil_max_re: f64,
    /// Distance from the origin to the nearest unmatched Hill eigenvalue.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilValidation {
    pub kind: EquationKind,
    pub k: f64,
    pub rows: Vec<PencilMatch>,
    /// Fitted exponent of `mismatch` against `xi`.
    pub slope: Option<f64>,
}

/// Matches each pencil eigenvalue to one of the `dim` Hill eigenvalues
/// nearest the origin by the assignment that minimizes the largest distance.
fn match_one(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    xi: f64,
    a: f64,
    n: usize,
) -> Result<PencilMatch> {
    let pencil = build_pencil(kind, sym, k, xi, a)?;
    let pencil_ev = pencil.eigenvalues()?;
    let dim = pencil_ev.len();
    let slice = wave_spectrum(kind, sym, k, a, xi, n)?;
    let mut by_modulus = slice.eigenvalues.clone();
    by_modulus.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let near = &by_modulus[..dim];
    let gap = by_modulus.get(dim).map_or(f64::INFINITY, |z| z.norm());
    let mismatch = permutations(dim)
        .into_iter()
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| (near[i] - pencil_ev[j]).norm())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let limit = 0.5 * gap;
    if mismatch > limit {
        return Err(Error::MatchFailure {
            residual: mismatch,
            limit,
        });
    }
    Ok(PencilMatch {
        xi,
        a,
        mismatch,
        ratio: mismatch / xi,
        hill_max_re: slice.max_re,
        pencil_max_re: pencil_ev
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
        gap,
    })
}

/// Cross-checks pencil roots against near-origin Hill eigenvalues for each
/// `(xi, a)` pair of the two lists, zipped.
pub fn validate_pencil(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a_list: &[f64],
    xi_list: &[f64],
    n: usize,
) -> Result<PencilValidation> {
    if a_list.len() != xi_list.len() || a_list.is_empty() {
        return Err(Error::InvalidInput(format!(
            "amplitude and Floquet lists must be nonempty and of equal length, got {} and {}",
            a_list.len(),
            xi_list.len()
        )));
    }
    let rows = xi_list
        .iter()
        .zip(a_list)
        .map(|(&xi, &a)| match_one(kind, sym, k, xi, a, n))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mismatch > 0.0)
        .map(|r| (r.xi.ln(), r.mismatch.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(PencilValidation {
        kind,
        k,
        rows,
        slope: crate::numerics::ls_slope(&xs, &ys),
    })
}

/// Branch of the zero-amplitude dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Scalar,
    Plus,
    Minus,
}

/// Zero-amplitude eigenvalue `i omega` of mode `n` on `branch`:
/// BBM `(xi+n)(m(k) - m(k(xi+n)))`, Boussinesq `(xi+n)(m(k) +- m(k(xi+n)))`.
pub fn omega(sym: &DispersionSymbol, k: f64, n: i64, branch: Branch, xi: f64) -> f64 {
    let s = xi + n as f64;
    let m = sym.eval(k).unwrap_or(f64::NAN);
    let ms = sym.eval(k * s).unwrap_or(f64::NAN);
    match branch {
        Branch::Scalar | Branch::Minus => s * (m - ms),
        Branch::Plus => s * (m + ms),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collision {
    pub xi: f64,
    pub n1: i64,
    pub branch1: Branch,
    pub n2: i64,
    pub branch2: Branch,
    pub omega: f64,
}

fn branches(kind: EquationKind) -> &'static [Branch] {
    match kind {
        EquationKind::Boussinesq => &[Branch::Plus, Branch::Minus],
        _ => &[Branch::Scalar],
    }
}

/// Smallest Floquet exponent scanned; collisions at the origin (xi = 0) are
/// not reported.
const XI_MIN: f64 = 1e-9;

/// Pairs that meet at the origin separate only at second order in xi, so
/// their difference is rounding noise just above it.
const XI_ORIGIN: f64 = 1e-6;

/// All `xi` in `(0, 1/2]` where two zero-amplitude eigenvalues coincide.
pub fn collision_scan(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    n_range: (i64, i64),
    xi_steps: usize,
) -> Result<Vec<Collision>> {
    if kind == EquationKind::Kdv {
        return Err(Error::Unsupported(
            "collision scan covers BBM and Boussinesq".into(),
        ));
    }
    let labels: Vec<(i64, Branch)> = (n_range.0..=n_range.1)
        .flat_map(|n| branches(kind).iter().map(move |&b| (n, b)))
        .collect();
    let mut out = Vec::new();
    for (i, &(n1, b1)) in labels.iter().enumerate() {
        for &(n2, b2) in &labels[i + 1..] {
            let f = |xi: f64| omega(sym, k, n1, b1, xi) - omega(sym, k, n2, b2, xi);
            let scale = 1.0 + omega(sym, k, n1, b1, 0.5).abs() + omega(sym, k, n2, b2, 0.5).abs();
            let mut roots = scan_roots(f, XI_MIN, 0.5, xi_steps.max(1), ROOT_TOL);
            if roots.last() != Some(&0.5) && f(0.5).abs() <= 1e-12 * scale {
                roots.push(0.5);
            }
            for xi in roots.into_iter().filter(|&xi| xi > XI_ORIGIN) {
                out.push(Collision {
                    xi,
                    n1,
                    branch1: b1,
                    n2,
                    branch2: b2,
                    omega: omega(sym, k, n1, b1, xi),
                });
            }
        }
    }
    out.sort_by(|x, y| {
        x.xi.total_cmp(&y.xi)
            .then(x.n1.cmp(&y.n1))
            .then(x.n2.cmp(&y.n2))
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionFloor {
    pub k: f64,
    pub xi: f64,
    pub n: i64,
}

/// Smallest wave number in `k_range` at which `omega_0` meets `omega_n` (scalar
/// branch) for some `n` in `partners` and `xi` in `(0, 1/2]`.
pub fn collision_floor(
    sym: &DispersionSymbol,
    partners: &[i64],
    k_range: (f64, f64),
    xi_steps: usize,
) -> Result<Option<CollisionFloor>> {
    let (k_lo, k_hi) = k_range;
    if !(k_lo > 0.0 && k_hi > k_lo) {
        return Err(Error::InvalidInput(format!(
            "bad wave-number range [{k_lo}, {k_hi}]"
        )));
    }
    let k_samples = 2000;
    // smallest k solving omega_0 = omega_n at fixed xi
    let k_at = |n: i64, xi: f64| -> Option<f64> {
        let f =
            |k: f64| omega(sym, k, 0, Branch::Scalar, xi) - omega(sym, k, n, Branch::Scalar, xi);
        scan_roots(f, k_lo, k_hi, k_samples, ROOT_TOL)
            .into_iter()
            .next()
    };
    let steps = xi_steps.max(2);
    let grid: Vec<f64> = (1..=steps).map(|j| 0.5 * j as f64 / steps as f64).collect();
    let mut best: Option<(CollisionFloor, usize)> = None;
    for &n in partners {
        for (j, &xi) in grid.iter().enumerate() {
            if let Some(k) = k_at(n, xi) {
                if best.is_none_or(|(b, _)| k < b.k) {
                    best = Some((CollisionFloor { k, xi, n }, j));
                }
            }
        }
    }
    let Some((mut floor, j)) = best else {
        return Ok(None);
    };
    // golden-section refinement of the minimum over the neighbouring cells
    let lo = if j == 0 { XI_MIN } else { grid[j - 1] };
    let hi = grid.get(j + 1).copied().unwrap_or(0.5);
    let partner = floor.n;
    let eval = |xi: f64| k_at(partner, xi).unwrap_or(f64::INFINITY);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    for xi in [lo, hi, 0.5 * (a + b)] {
        let k = eval(xi);
        if k < floor.k {
            floor = CollisionFloor { k, xi, n: partner };
        }
    }
    Ok(Some(floor))
}

/// BBM `omega_{-1}` meets `omega_1` at `k = sqrt(3 / (1 - xi^2))`; returns
/// that `xi` for the bbm symbol, if any.
pub fn bbm_sideband_collision(k: f64) -> Option<f64> {
    let x2 = 1.0 - 3.0 / (k * k);
    (x2 > 0.0 && x2 <= 0.25).then(|| x2.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub xi: f64,
    pub max_re: f64,
    pub max_re_refined: f64,
    /// `|max_re(2N) - max_re(N)| > REFINEMENT_TOL`.
    pub unresolved: bool,
}

/// Largest real part of the spectrum along `xi_grid`, one wave shared by all
/// slices, each slice also recomputed with `2N` modes.
pub fn growth_curve(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    a: f64,
    xi_grid: &[f64],
    n: usize,
) -> Result<Vec<GrowthPoint>> {
    let wave = newton_wave(kind, sym, k, a, n, DEFAULT_NEWTON_TOL)?;
    xi_grid
        .par_iter()
        .map(|&xi| {
            let coarse = spectrum(&assemble(kind, sym, &wave, xi, n)?, sym)?.max_re;
            let fine = spectrum(&assemble(kind, sym, &wave, xi, 2 * n)?, sym)?.max_re;
            Ok(GrowthPoint {
                xi,
                max_re: coarse,
                max_re_refined: fine,
                unresolved: (fine - coarse).abs() > REFINEMENT_TOL,
            })
        })
        .collect()
}

/// Refines a collision `xi` with a bracket, for callers holding a coarse guess.
pub fn refine_collision(
    sym: &DispersionSymbol,
    k: f64,
    pair: ((i64, Branch), (i64, Branch)),
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let ((n1, b1), (n2, b2)) = pair;
    let f = |xi: f64| omega(sym, k, n1, b1, xi) - omega(sym, k, n2, b2, xi);
    Ok(find_root(f, Bracket::new(f, lo, hi)?, ROOT_TOL))
}

/// Full coefficient table of the zero-amplitude wave, for callers that build
/// operators without Newton.
pub fn zero_wave(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k: f64,
    n: usize,
) -> Result<WaveSolution> {
    WaveSolution::trivial(kind, sym, k, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{ind, Verdict};

    fn builtins() -> Vec<DispersionSymbol> {
        vec![
            DispersionSymbol::bbm(),
            DispersionSymbol::boussinesq(),
            DispersionSymbol::whitham(),
            DispersionSymbol::fractional(3.0),
        ]
    }

    #[test]
    fn zero_amplitude_diagonal_entries() {
        let sym = DispersionSymbol::bbm();
        let (k, xi, n) = (1.3, 0.2, 6);
        let wave = zero_wave(EquationKind::Bbm, &sym, k, n).unwrap();
        let op = assemble(EquationKind::Bbm, &sym, &wave, xi, n).unwrap();
        for (p, np) in modes(n) {
            let w = omega(&sym, k, np, Branch::Scalar, xi);
            assert!((op.matrix[(p, p)] - Complex64::new(0.0, w)).norm() < 1e-14);
            for q in 0..op.dim() {
                if q != p {
                    assert_eq!(op.matrix[(p, q)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_amplitude_bnesq_blocks() {
        let sym = DispersionSymbol::boussinesq();
        let (k, xi, n) = (0.8, 0.3, 5);
        let wave = zero_wave(EquationKind::Boussinesq, &sym, k, n).unwrap();
        let slice = spectrum(&assemble_bnesq(&sym, &wave, xi, n).unwrap(), &sym).unwrap();
        assert_eq!(slice.eigenvalues.len(), 2 * (2 * n + 1));
        for np in -(n as i64)..=n as i64 {
            for b in [Branch::Plus, Branch::Minus] {
                let w = Complex64::new(0.0, omega(&sym, k, np, b, xi));
                let best = slice
                    .eigenvalues
                    .iter()
                    .map(|z| (z - w).norm())
                    .fold(f64::MAX, f64::min);
                assert!(best < 1e-12, "{np} {b:?}");
            }
        }
    }

    #[test]
    fn zero_amplitude_spectra_are_imaginary() {
        for sym in builtins() {
            for kind in [
                EquationKind::Kdv,
                EquationKind::Bbm,
                EquationKind::Boussinesq,
            ] {
                for xi in [0.0, 0.1, 0.25, 0.5] {
                    let wave = zero_wave(kind, &sym, 1.0, 32).unwrap();
                    let slice =
                        spectrum(&assemble(kind, &sym, &wave, xi, 32).unwrap(), &sym).unwrap();
                    let worst = slice
                        .eigenvalues
                        .iter()
                        .map(|z| z.re.abs())
                        .fold(0.0, f64::max);
                    assert!(worst <= 1e-10, "{} {kind} {xi}: {worst}", sym.name());
                }
            }
        }
    }

    #[test]
    fn origin_multiplicities() {
        let expected = [
            (EquationKind::Kdv, 3),
            (EquationKind::Bbm, 3),
            (EquationKind::Boussinesq, 4),
        ];
        for sym in builtins() {
            for (kind, mult) in expected {
                let wave = zero_wave(kind, &sym, 1.0, 32).unwrap();
                let slice = spectrum(&assemble(kind, &sym, &wave, 0.0, 32).unwrap(), &sym).unwrap();
                assert_eq!(slice.zero_multiplicity(1e-8), mult, "{} {kind}", sym.name());
            }
        }
    }

    #[test]
    fn kind_and_truncation_checks() {
        let sym = DispersionSymbol::bbm();
        let wave = zero_wave(EquationKind::Bbm, &sym, 1.0, 16).unwrap();
        assert_eq!(
            assemble(EquationKind::Bbm, &sym, &wave, 0.1, 8).unwrap_err(),
            Error::TruncationTooSmall {
                requested: 8,
                wave: 16
            }
        );
        assert!(matches!(
            assemble(EquationKind::Kdv, &sym, &wave, 0.1, 16),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            assemble(EquationKind::Boussinesq, &sym, &wave, 0.1, 16),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn spectrum_examples() {
        let bbm = DispersionSymbol::bbm();
        let s = wave_spectrum(EquationKind::Bbm, &bbm, 1.0, 0.01, 0.01, 32).unwrap();
        assert!(s.max_re <= 1e-8, "{}", s.max_re);
        let s = wave_spectrum(EquationKind::Bbm, &bbm, 2.0, 0.01, 0.005, 32).unwrap();
        assert!(s.max_re > 1e-8, "{}", s.max_re);
        let bq = DispersionSymbol::boussinesq();
        let s = wave_spectrum(EquationKind::Boussinesq, &bq, 1.0, 0.01, 0.01, 32).unwrap();
        assert!(s.max_re <= 1e-8, "{}", s.max_re);
        assert_eq!(s.eigenvalues.len(), 2 * 65);
    }

    #[test]
    fn conjugation_symmetry() {
        for (kind, sym) in [
            (EquationKind::Bbm, DispersionSymbol::bbm()),
            (EquationKind::Boussinesq, DispersionSymbol::boussinesq()),
            (EquationKind::Kdv, DispersionSymbol::whitham()),
        ] {
            let wave = newton_wave(kind, &sym, 2.0, 0.02, 16, DEFAULT_NEWTON_TOL).unwrap();
            let plus = spectrum(&assemble(kind, &sym, &wave, 0.13, 16).unwrap(), &sym).unwrap();
            let minus = spectrum(&assemble(kind, &sym, &wave, -0.13, 16).unwrap(), &sym).unwrap();
            let mut conj: Vec<Complex64> = minus.eigenvalues.iter().map(|z| z.conj()).collect();
            sort_complex(&mut conj);
            for z in &plus.eigenvalues {
                let best = conj.iter().map(|w| (z - w).norm()).fold(f64::MAX, f64::min);
                assert!(best < 1e-8, "{kind}: {z}");
            }
        }
    }

    #[test]
    fn truncation_robustness() {
        for (kind, sym, k, xi) in [
            (EquationKind::Bbm, DispersionSymbol::bbm(), 1.0, 0.01),
            (EquationKind::Bbm, DispersionSymbol::bbm(), 2.0, 0.005),
            (
                EquationKind::Boussinesq,
                DispersionSymbol::boussinesq(),
                1.0,
                0.01,
            ),
        ] {
            let wave = newton_wave(kind, &sym, k, 0.01, 32, DEFAULT_NEWTON_TOL).unwrap();
            let a = spectrum(&assemble(kind, &sym, &wave, xi, 32).unwrap(), &sym).unwrap();
            let b = spectrum(&assemble(kind, &sym, &wave, xi, 48).unwrap(), &sym).unwrap();
            assert!((a.max_re - b.max_re).abs() <= 1e-7, "{kind} {k}");
        }
    }

    #[test]
    fn pencil_matches_hill() {
        let ts = [4e-2, 2e-2, 1e-2];
        for (kind, sym, k) in [
            (EquationKind::Bbm, DispersionSymbol::bbm(), 1.0),
            (EquationKind::Bbm, DispersionSymbol::bbm(), 2.0),
            (
                EquationKind::Boussinesq,
                DispersionSymbol::boussinesq(),
                1.0,
            ),
        ] {
            let v = validate_pencil(kind, &sym, k, &ts, &ts, 32).unwrap();
            for w in v.rows.windows(2) {
                assert!(w[0].ratio >= 3.0 * w[1].ratio, "{kind} {k}: {:?}", v.rows);
            }
            let verdict = ind(kind, &sym, k).unwrap().verdict;
            let unstable = v.rows.last().unwrap().hill_max_re > 1e-8;
            assert_eq!(
                unstable,
                verdict == Verdict::ModulationallyUnstable,
                "{kind} {k}"
            );
        }
    }

    #[test]
    fn zero_amplitude_pencil_is_exact_to_order() {
        let sym = DispersionSymbol::bbm();
        let v = validate_pencil(EquationKind::Bbm, &sym, 1.5, &[0.0], &[1e-2], 16).unwrap();
        assert!(v.rows[0].mismatch <= 1e-10 + 1e-5, "{:?}", v.rows);
    }

    #[test]
    fn bbm_sideband_collision_curve() {
        let sym = DispersionSymbol::bbm();
        let k = 1.8;
        let xi = bbm_sideband_collision(k).unwrap();
        let hits = collision_scan(EquationKind::Bbm, &sym, k, (-1, 1), 2000).unwrap();
        assert!(
            hits.iter()
                .any(|c| c.n1 == -1 && c.n2 == 1 && (c.xi - xi).abs() < 1e-10),
            "{hits:?}"
        );
        assert!(bbm_sideband_collision(1.7).is_none());
    }

    #[test]
    fn bbm_low_wave_number_has_no_collisions() {
        let sym = DispersionSymbol::bbm();
        let hits = collision_scan(EquationKind::Bbm, &sym, 1.0, (-8, 8), 4000).unwrap();
        assert!(hits.is_empty(), "{hits:?}");
    }

    #[test]
    fn collision_floor_is_at_half_period() {
        // omega_0 = omega_{-2} first happens at xi = 1/2, k = 2
        let floor = collision_floor(
            &DispersionSymbol::bbm(),
            &[-2, -3, -4, -5, -6, -7, -8],
            (0.5, 4.0),
            200,
        )
        .unwrap()
        .unwrap();
        assert_eq!(floor.n, -2);
        assert!((floor.k - 2.0).abs() < 1e-9, "{floor:?}");
        assert!((floor.xi - 0.5).abs() < 1e-6, "{floor:?}");
    }

    #[test]
    fn growth_curve_examples() {
        let bbm = DispersionSymbol::bbm();
        let grid = [0.0025, 0.005, 0.01, 0.05, 0.2];
        let g = growth_curve(EquationKind::Bbm, &bbm, 2.0, 0.01, &grid, 16).unwrap();
        assert!(g[1].max_re > 1e-8);
        assert!(g[4].max_re <= 1e-8);
        assert!(g.iter().all(|p| !p.unresolved));
        let g = growth_curve(EquationKind::Bbm, &bbm, 1.0, 0.01, &grid, 16).unwrap();
        assert!(g.iter().all(|p| p.max_re <= 1e-8));
        let g = growth_curve(EquationKind::Bbm, &bbm, 2.0, 0.0, &grid, 16).unwrap();
        assert!(g.iter().all(|p| p.max_re <= 1e-10));
    }
}
