//! Resonance indices and modulational instability indices.
//!
//! ```text
//! i1   = (k m)''          = 2 m' + k m''
//! i2-+ = (k m)' -+ 1      = m + k m' -+ 1
//! i3-+ = m(k) -+ m(2k)
//!
//! i_KdV   = 2 i3- + i2-
//! i_BBM   = 2 i3- + m(2k) i2-
//! i_Bnesq = 2 i3- i3+ + m(2k)^2 i2- i2+
//!
//! ind_KdV, ind_BBM = i1 i2- i_eq / i3-
//! ind_Bnesq        = i1 i2- i2+ i_eq / (i3- i3+)
//! ```

use std::fmt;

use serde::Serialize;

use crate::dispersion::DispersionSymbol;
use crate::error::Result;
use crate::numerics::{find_root, Bracket};
use crate::stokes::EquationKind;

/// Threshold on |ind| and on the denominators below which the verdict is
/// `Degenerate`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Resonance flags are raised when an index is within this tolerance of zero.
pub const RESONANCE_FLAG_TOL: f64 = 1e-10;

const SCAN_SAMPLES: usize = 4000;
const ROOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseIndices {
    pub i1: f64,
    pub i2m: f64,
    pub i2p: f64,
    pub i3m: f64,
    pub i3p: f64,
}

pub fn base_indices(sym: &DispersionSymbol, k: f64) -> Result<BaseIndices> {
    let m = sym.eval(k)?;
    let m2 = sym.eval(2.0 * k)?;
    let d1 = sym.d1(k)?;
    let d2 = sym.d2(k)?;
    let group = m + k * d1;
    Ok(BaseIndices {
        i1: 2.0 * d1 + k * d2,
        i2m: group - 1.0,
        i2p: group + 1.0,
        i3m: m - m2,
        i3p: m + m2,
    })
}

pub fn i_kdv(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    let b = base_indices(sym, k)?;
    Ok(2.0 * b.i3m + b.i2m)
}

pub fn i_bbm(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    let b = base_indices(sym, k)?;
    Ok(2.0 * b.i3m + sym.eval(2.0 * k)? * b.i2m)
}

pub fn i_bnesq(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    let b = base_indices(sym, k)?;
    Ok(2.0 * b.i3m * b.i3p + sym.eval(2.0 * k)?.powi(2) * b.i2m * b.i2p)
}

pub fn i_eq(kind: EquationKind, sym: &DispersionSymbol, k: f64) -> Result<f64> {
    match kind {
        EquationKind::Kdv => i_kdv(sym, k),
        EquationKind::Bbm => i_bbm(sym, k),
        EquationKind::Boussinesq => i_bnesq(sym, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ResonanceKind {
    /// (k m)'' = 0: the group speed has an extremum.
    R1,
    /// (k m)' = 1 (or -1 for Boussinesq): group speed meets the long-wave speed.
    R2,
    /// m(k) = m(2k) (or -m(2k)): second-harmonic resonance.
    R3,
    /// The equation-specific index vanishes.
    R4,
}

impl fmt::Display for ResonanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    ModulationallyUnstable,
    /// ind > 0 for KdV or BBM: no spectrum off the imaginary axis near the origin.
    ModulationallyStableNearOrigin,
    /// ind > 0 for Boussinesq; the quartic pencil classification decides.
    Inconclusive,
    /// Boussinesq with ind > 0 after the pencil classified four real roots.
    ModulationallyStable,
    Degenerate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ModulationallyUnstable => "ModulationallyUnstable",
            Self::ModulationallyStableNearOrigin => "ModulationallyStableNearOrigin",
            Self::Inconclusive => "Inconclusive",
            Self::ModulationallyStable => "ModulationallyStable",
            Self::Degenerate => "Degenerate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub kind: EquationKind,
    pub k: f64,
    pub i1: f64,
    pub i2m: f64,
    pub i2p: f64,
    pub i3m: f64,
    pub i3p: f64,
    pub i_eq: f64,
    /// NaN when a denominator vanishes.
    pub ind: f64,
    pub verdict: Verdict,
    pub resonance_flags: Vec<ResonanceKind>,
    pub warnings: Vec<String>,
}

impl IndexReport {
    /// Sign of the numerator-times-denominator product, which equals the
    /// sign of `ind` whenever the denominators are nonzero.
    pub fn product_sign(&self) -> f64 {
        let p = match self.kind {
            EquationKind::Boussinesq => {
                self.i1 * self.i2m * self.i2p * self.i_eq * self.i3m * self.i3p
            }
            _ => self.i1 * self.i2m * self.i_eq * self.i3m,
        };
        p.signum()
    }
}

/// The index functions whose zeros are the resonances of `kind`.
fn resonance_functions(kind: EquationKind) -> Vec<(ResonanceKind, &'static str)> {
    let mut v = vec![
        (ResonanceKind::R1, "i1"),
        (ResonanceKind::R2, "i2m"),
        (ResonanceKind::R3, "i3m"),
        (ResonanceKind::R4, "i_eq"),
    ];
    if kind == EquationKind::Boussinesq {
        v.insert(2, (ResonanceKind::R2, "i2p"));
        v.insert(4, (ResonanceKind::R3, "i3p"));
    }
    v
}

fn component(r: &IndexReport, name: &str) -> f64 {
    match name {
        "i1" => r.i1,
        "i2m" => r.i2m,
        "i2p" => r.i2p,
        "i3m" => r.i3m,
        "i3p" => r.i3p,
        "i_eq" => r.i_eq,
        "ind" => r.ind,
        _ => unreachable!("unknown index component {name}"),
    }
}

/// Scale of rounding in the index combinations at k.
fn noise_scale(sym: &DispersionSymbol, k: f64) -> f64 {
    let m = sym.eval(k).unwrap_or(1.0).abs();
    let m2 = sym.eval(2.0 * k).unwrap_or(1.0).abs();
    let g = (k * sym.d1(k).unwrap_or(0.0)).abs();
    1.0 + m + m2 + g
}

pub fn ind(kind: EquationKind, sym: &DispersionSymbol, k: f64) -> Result<IndexReport> {
    let b = base_indices(sym, k)?;
    let i_eq = i_eq(kind, sym, k)?;
    let (num, den) = match kind {
        EquationKind::Boussinesq => (b.i1 * b.i2m * b.i2p * i_eq, b.i3m * b.i3p),
        _ => (b.i1 * b.i2m * i_eq, b.i3m),
    };
    let den_degenerate = match kind {
        EquationKind::Boussinesq => b.i3m.abs() <= DEGENERACY_TOL || b.i3p.abs() <= DEGENERACY_TOL,
        _ => b.i3m.abs() <= DEGENERACY_TOL,
    };
    let ind = if den_degenerate { f64::NAN } else { num / den };

    let mut report = IndexReport {
        kind,
        k,
        i1: b.i1,
        i2m: b.i2m,
        i2p: b.i2p,
        i3m: b.i3m,
        i3p: b.i3p,
        i_eq,
        ind,
        verdict: Verdict::Degenerate,
        resonance_flags: Vec::new(),
        warnings: Vec::new(),
    };
    let flag_tol = RESONANCE_FLAG_TOL * noise_scale(sym, k);
    for (res, name) in resonance_functions(kind) {
        if component(&report, name).abs() <= flag_tol && !report.resonance_flags.contains(&res) {
            report.resonance_flags.push(res);
        }
    }
    report.verdict = if den_degenerate || ind.abs() <= DEGENERACY_TOL {
        Verdict::Degenerate
    } else if ind < 0.0 {
        Verdict::ModulationallyUnstable
    } else if kind == EquationKind::Boussinesq {
        Verdict::Inconclusive
    } else {
        Verdict::ModulationallyStableNearOrigin
    };
    if sym.d2(0.0).is_err() {
        report.warnings.push(
            "m is not twice differentiable at k = 0; indices evaluated for k > 0 only".into(),
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ResonanceLocation {
    At(f64),
    /// The index vanishes identically on the scanned range.
    Everywhere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub kind: ResonanceKind,
    /// Which index vanishes: i1, i2m, i2p, i3m, i3p or i_eq.
    pub index: &'static str,
    pub location: ResonanceLocation,
}

fn sample_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..=SCAN_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN_SAMPLES as f64)
        .collect()
}

/// Sign changes of `f` between samples whose magnitude exceeds the noise
/// floor, refined by bisection. `skip` vetoes brackets (poles).
fn refined_sign_changes(
    grid: &[f64],
    f: &dyn Fn(f64) -> Option<f64>,
    floor: &dyn Fn(f64) -> f64,
    skip: &dyn Fn(f64, f64) -> bool,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &k in grid {
        let Some(v) = f(k).filter(|v| v.is_finite()) else {
            prev = None;
            continue;
        };
        if v.abs() <= floor(k) {
            continue;
        }
        if let Some((kp, vp)) = prev {
            if vp.signum() != v.signum() && !skip(kp, k) {
                let g = |x: f64| f(x).unwrap_or(f64::NAN);
                if let Ok(b) = Bracket::new(g, kp, k) {
                    roots.push(find_root(g, b, ROOT_TOL));
                }
            }
        }
        prev = Some((k, v));
    }
    roots
}

/// Zeros of i1 (R1), i2-+ (R2), i3-+ (R3) and i_eq (R4) in `k_range`.
pub fn find_resonances(
    sym: &DispersionSymbol,
    kind: EquationKind,
    k_range: (f64, f64),
) -> Vec<Resonance> {
    let (lo, hi) = k_range;
    let grid = sample_grid(lo, hi);
    let reports: Vec<Option<IndexReport>> = grid.iter().map(|&k| ind(kind, sym, k).ok()).collect();
    let mut out = Vec::new();
    for (res, name) in resonance_functions(kind) {
        let flat = reports.iter().zip(&grid).all(|(r, &k)| {
            r.as_ref().is_some_and(|r| {
                component(r, name).abs() <= RESONANCE_FLAG_TOL * noise_scale(sym, k)
            })
        });
        if flat {
            out.push(Resonance {
                kind: res,
                index: name,
                location: ResonanceLocation::Everywhere,
            });
            continue;
        }
        let f = |k: f64| ind(kind, sym, k).ok().map(|r| component(&r, name));
        let floor = |k: f64| DEGENERACY_TOL * noise_scale(sym, k);
        for k in refined_sign_changes(&grid, &f, &floor, &|_, _| false) {
            out.push(Resonance {
                kind: res,
                index: name,
                location: ResonanceLocation::At(k),
            });
        }
    }
    out.sort_by(|a, b| match (a.location, b.location) {
        (ResonanceLocation::At(x), ResonanceLocation::At(y)) => x.total_cmp(&y),
        (ResonanceLocation::Everywhere, ResonanceLocation::At(_)) => std::cmp::Ordering::Less,
        (ResonanceLocation::At(_), ResonanceLocation::Everywhere) => std::cmp::Ordering::Greater,
        _ => a.kind.cmp(&b.kind),
    });
    out
}

/// Smallest sign change of ind in `k_range`. Sign changes caused by a
/// vanishing denominator are poles, not thresholds, and are skipped.
pub fn critical_wavenumber(
    kind: EquationKind,
    sym: &DispersionSymbol,
    k_range: (f64, f64),
) -> Option<f64> {
    let (lo, hi) = k_range;
    let grid = sample_grid(lo, hi);
    let f = |k: f64| ind(kind, sym, k).ok().map(|r| r.ind);
    let floor = |_: f64| DEGENERACY_TOL;
    let den = |k: f64| {
        base_indices(sym, k)
            .map(|b| (b.i3m, b.i3p))
            .unwrap_or((f64::NAN, f64::NAN))
    };
    let pole = |a: f64, b: f64| {
        let (ma, pa) = den(a);
        let (mb, pb) = den(b);
        ma.signum() != mb.signum()
            || (kind == EquationKind::Boussinesq && pa.signum() != pb.signum())
    };
    refined_sign_changes(&grid, &f, &floor, &pole)
        .into_iter()
        .next()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn bbm_closed_forms() {
        let s = DispersionSymbol::bbm();
        for i in 0..200 {
            let k = 0.05 + 10.0 * i as f64 / 200.0;
            let k2 = k * k;
            let b = base_indices(&s, k).unwrap();
            let s1 = 1.0 + k2;
            if (k2 - 3.0).abs() > 1e-3 {
                assert!(rel(b.i1, 2.0 * k * (k2 - 3.0) / s1.powi(3)) < 1e-10, "{k}");
            }
            assert!(rel(b.i2m, -k2 * (3.0 + k2) / (s1 * s1)) < 1e-10);
            assert!(rel(b.i3m, 3.0 * k2 / (1.0 + 5.0 * k2 + 4.0 * k2 * k2)) < 1e-10);
            let ib = i_bbm(&s, k).unwrap();
            assert!(rel(ib, k2 * (3.0 + 5.0 * k2) / (s1 * s1 * (1.0 + 4.0 * k2))) < 1e-10);
        }
    }

    #[test]
    fn boussinesq_closed_forms() {
        let s = DispersionSymbol::boussinesq();
        for k in [0.1, 0.5, 1.0, 2.0, 7.0] {
            let k2: f64 = k * k;
            let b = base_indices(&s, k).unwrap();
            assert!(rel(b.i1, -3.0 * k / (1.0 + k2).powf(2.5)) < 1e-12);
            assert!(
                rel(
                    b.i2m * b.i2p,
                    (1.0 - (1.0 + k2).powi(3)) / (1.0 + k2).powi(3)
                ) < 1e-12
            );
            assert!(rel(b.i3m * b.i3p, 1.0 / (1.0 + k2) - 1.0 / (1.0 + 4.0 * k2)) < 1e-12);
            // direct substitution gives 5k^6 + 14k^4 + 12k^2 + 3 over (1+k^2)^4 (1+4k^2)
            let poly = 5.0 * k2.powi(3) + 14.0 * k2 * k2 + 12.0 * k2 + 3.0;
            let expected = k2 * poly / ((1.0 + k2).powi(4) * (1.0 + 4.0 * k2));
            let ib = i_bnesq(&s, k).unwrap();
            assert!(rel(ib, expected) < 1e-12);
            assert!(ib > 0.0);
        }
    }

    #[test]
    fn fractional_kdv_index() {
        for alpha in [1.5, 2.0, 3.0, 4.5] {
            let s = DispersionSymbol::fractional(alpha);
            for k in [0.3f64, 1.0, 2.2] {
                let expected = (3.0 - 2f64.powf(1.0 + alpha) + alpha) * k.powf(alpha);
                assert!(rel(i_kdv(&s, k).unwrap(), expected) < 1e-12);
            }
        }
        let s = DispersionSymbol::fractional(1.0);
        assert!(i_kdv(&s, 1.7).unwrap().abs() < 1e-14);
    }

    #[test]
    fn fractional_bbm_index() {
        // k^alpha (3 - 2^(1+alpha) + alpha + 2^alpha (1+alpha) k^alpha)
        for alpha in [2.0, 3.0, 4.5] {
            let s = DispersionSymbol::fractional(alpha);
            for k in [0.3f64, 0.68, 1.0, 2.2] {
                let ka = k.powf(alpha);
                let expected = ka
                    * (3.0 - 2f64.powf(1.0 + alpha)
                        + alpha
                        + 2f64.powf(alpha) * (1.0 + alpha) * ka);
                assert!(rel(i_bbm(&s, k).unwrap(), expected) < 1e-10, "{alpha} {k}");
            }
        }
    }

    #[test]
    fn i2m_vanishes_at_long_waves() {
        for s in [
            DispersionSymbol::bbm(),
            DispersionSymbol::whitham(),
            DispersionSymbol::fractional(3.0),
        ] {
            assert!(base_indices(&s, 1e-6).unwrap().i2m.abs() < 1e-10);
        }
    }

    #[test]
    fn bbm_verdicts() {
        let s = DispersionSymbol::bbm();
        let r = ind(EquationKind::Bbm, &s, 2.0).unwrap();
        assert!(r.ind < 0.0);
        assert_eq!(r.verdict, Verdict::ModulationallyUnstable);
        let r = ind(EquationKind::Bbm, &s, 1.0).unwrap();
        assert!(r.ind > 0.0);
        assert_eq!(r.verdict, Verdict::ModulationallyStableNearOrigin);
        let r = ind(EquationKind::Bbm, &s, 3f64.sqrt()).unwrap();
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert_eq!(r.resonance_flags, vec![ResonanceKind::R1]);
    }

    #[test]
    fn boussinesq_inconclusive() {
        let s = DispersionSymbol::boussinesq();
        for k in [0.1, 0.5, 1.0, 3.0, 9.0] {
            let r = ind(EquationKind::Boussinesq, &s, k).unwrap();
            assert!(r.ind > 0.0);
            assert_eq!(r.verdict, Verdict::Inconclusive);
        }
    }

    #[test]
    fn fractional_warning_below_two() {
        let r = ind(EquationKind::Kdv, &DispersionSymbol::fractional(1.5), 1.0).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let r = ind(EquationKind::Kdv, &DispersionSymbol::fractional(2.0), 1.0).unwrap();
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn resonances_bbm() {
        let found = find_resonances(&DispersionSymbol::bbm(), EquationKind::Bbm, (0.1, 10.0));
        assert_eq!(found.len(), 1, "{found:?}");
        assert_eq!(found[0].kind, ResonanceKind::R1);
        let ResonanceLocation::At(k) = found[0].location else {
            panic!()
        };
        assert!((k - 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn resonances_boussinesq_none() {
        let found = find_resonances(
            &DispersionSymbol::boussinesq(),
            EquationKind::Boussinesq,
            (0.1, 10.0),
        );
        assert!(found.is_empty(), "{found:?}");
    }

    #[test]
    fn resonances_fractional_kdv_everywhere() {
        let found = find_resonances(
            &DispersionSymbol::fractional(1.0),
            EquationKind::Kdv,
            (0.2, 4.0),
        );
        assert!(found
            .iter()
            .any(|r| r.kind == ResonanceKind::R4 && r.location == ResonanceLocation::Everywhere));
        for k in [0.3, 1.0, 3.0] {
            assert_eq!(
                ind(EquationKind::Kdv, &DispersionSymbol::fractional(1.0), k)
                    .unwrap()
                    .verdict,
                Verdict::Degenerate
            );
        }
    }

    #[test]
    fn critical_wavenumbers() {
        let k =
            critical_wavenumber(EquationKind::Bbm, &DispersionSymbol::bbm(), (0.5, 5.0)).unwrap();
        assert!((k - 3f64.sqrt()).abs() < 1e-9);
        let s = DispersionSymbol::fractional(3.0);
        let kb = critical_wavenumber(EquationKind::Bbm, &s, (0.1, 5.0)).unwrap();
        let kq = critical_wavenumber(EquationKind::Boussinesq, &s, (0.1, 5.0)).unwrap();
        assert!(kb > kq, "{kb} vs {kq}");
        assert_eq!(
            critical_wavenumber(
                EquationKind::Boussinesq,
                &DispersionSymbol::boussinesq(),
                (0.1, 10.0)
            ),
            None
        );
    }

    #[test]
    fn sign_identity_random() {
        let syms = [
            DispersionSymbol::bbm(),
            DispersionSymbol::boussinesq(),
            DispersionSymbol::whitham(),
            DispersionSymbol::fractional(2.0),
            DispersionSymbol::fractional(3.5),
        ];
        let mut rng = crate::numerics::seeded_rng();
        for _ in 0..1000 {
            let s = &syms[rng.random_range(0..syms.len())];
            let kind = EquationKind::ALL[rng.random_range(0..3)];
            let k = rng.random_range(0.1..10.0);
            let r = ind(kind, s, k).unwrap();
            if r.verdict != Verdict::Degenerate {
                assert_eq!(r.ind.signum(), r.product_sign(), "{kind} {} {k}", s.name());
            }
        }
    }

    #[test]
    fn finite_difference_conditioning() {
        let mut rng = crate::numerics::seeded_rng();
        for s in [
            DispersionSymbol::bbm(),
            DispersionSymbol::boussinesq(),
            DispersionSymbol::whitham(),
        ] {
            let fd = s.clone().with_finite_differences();
            for kind in EquationKind::ALL {
                for _ in 0..50 {
                    let k = rng.random_range(0.2..6.0);
                    let a = ind(kind, &s, k).unwrap().ind;
                    let b = ind(kind, &fd, k).unwrap().ind;
                    if a.abs() > 1e-6 {
                        assert!(rel(b, a) < 1e-5, "{kind} {} {k}: {a} vs {b}", s.name());
                    }
                }
            }
        }
    }
}
