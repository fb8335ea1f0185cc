use serde::Serialize;

use super::DispersionSymbol;
use crate::error::{Error, Result};
use crate::numerics::{find_root, ls_slope, Bracket};

/// Tail fit m(k) ~ C k^alpha over the top decade of the grid. C1 and C2 are
/// the extreme ratios m(k)/k^alpha there; they feed nothing downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct M3Fit {
    pub c1: f64,
    pub c2: f64,
    pub alpha_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub m1_ok: bool,
    pub m2_ok: bool,
    pub m3_ok: bool,
    pub m4_ok: bool,
    pub m3_bounds: Option<M3Fit>,
    /// (k, n) with m(k) = m(nk) within tolerance.
    pub m4_violations: Vec<(f64, usize)>,
    pub grid: Vec<f64>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.m1_ok && self.m2_ok && self.m3_ok && self.m4_ok
    }
}

/// 400 log-spaced points on [0.01, 100].
pub fn default_grid() -> Vec<f64> {
    let n = 400;
    (0..n)
        .map(|i| 0.01 * 1e4f64.powf(i as f64 / (n - 1) as f64))
        .collect()
}

const M4_TOL: f64 = 1e-10;

/// Smallest admissible tail exponent. The BBM symbol, whose tail decays like
/// k^-2, is meant to satisfy the growth condition, so the floor sits at -2.
pub const M3_ALPHA_FLOOR: f64 = -2.0;

pub fn check_assumptions(
    sym: &DispersionSymbol,
    k_grid: &[f64],
    n_max: usize,
) -> Result<AssumptionReport> {
    if k_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n_max = n_max.max(2);

    // (M1): C^2 including the origin; first derivative consistent with m
    let mut m1_ok = sym.d1(0.0).is_ok() && sym.d2(0.0).is_ok();
    for &k in k_grid {
        let (Ok(m1), Ok(_)) = (sym.d1(k), sym.d2(k)) else {
            m1_ok = false;
            break;
        };
        let h = 1e-5 * k.abs().max(1.0);
        let fd = (sym.eval_raw((k + h).abs()) - sym.eval_raw((k - h).abs())) / (2.0 * h);
        let scale = m1.abs().max(1e-6 * sym.eval_raw(k).abs()).max(1e-12);
        if !fd.is_finite() || (fd - m1).abs() > 1e-4 * scale {
            m1_ok = false;
            break;
        }
    }

    // (M2): normalization and evenness of the raw expression
    let mut m2_ok = (sym.eval_raw(0.0) - 1.0).abs() <= 1e-12;
    for &k in k_grid {
        let (p, m) = (sym.eval_raw(k), sym.eval_raw(-k));
        if !(p.is_finite() && m.is_finite()) || (p - m).abs() > 1e-12 * p.abs().max(1.0) {
            m2_ok = false;
            break;
        }
    }

    // (M3): log-log regression over the top decade
    let k_top = k_grid.iter().copied().fold(f64::MIN, f64::max);
    let tail: Vec<(f64, f64)> = k_grid
        .iter()
        .copied()
        .filter(|&k| k > 0.0 && k >= 0.1 * k_top)
        .filter_map(|k| sym.eval(k).ok().map(|m| (k, m)))
        .collect();
    let m3_bounds = if tail.len() >= 2 && tail.iter().all(|&(_, m)| m > 0.0) {
        let xs: Vec<f64> = tail.iter().map(|(k, _)| k.ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|(_, m)| m.ln()).collect();
        ls_slope(&xs, &ys).map(|alpha_hat| {
            let ratios = tail.iter().map(|&(k, m)| m / k.powf(alpha_hat));
            let (c1, c2) = ratios.fold((f64::MAX, f64::MIN), |(lo, hi), r| (lo.min(r), hi.max(r)));
            M3Fit { c1, c2, alpha_hat }
        })
    } else {
        None
    };
    let m3_ok = m3_bounds.is_some_and(|f| f.alpha_hat >= M3_ALPHA_FLOOR - 0.05 && f.c1 > 0.0);

    // (M4): roots of m(k) - m(nk)
    let mut m4_violations = Vec::new();
    for n in 2..=n_max {
        let g =
            |k: f64| sym.eval(k).unwrap_or(f64::NAN) - sym.eval(n as f64 * k).unwrap_or(f64::NAN);
        let mut prev: Option<(f64, f64)> = None;
        for &k in k_grid.iter().filter(|&&k| k > 0.0) {
            let gk = g(k);
            let scale = sym.eval(k).map(f64::abs).unwrap_or(1.0).max(1e-300);
            if gk.abs() <= M4_TOL * scale {
                m4_violations.push((k, n));
            } else if let Some((kp, gp)) = prev {
                if gp.abs() > M4_TOL * scale
                    && gp.signum() != gk.signum()
                    && gp.is_finite()
                    && gk.is_finite()
                {
                    if let Ok(b) = Bracket::new(g, kp, k) {
                        m4_violations.push((find_root(g, b, 1e-12), n));
                    }
                }
            }
            prev = Some((k, gk));
        }
    }
    m4_violations.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    m4_violations.dedup();

    Ok(AssumptionReport {
        m1_ok,
        m2_ok,
        m3_ok,
        m4_ok: m4_violations.is_empty(),
        m3_bounds,
        m4_violations,
        grid: k_grid.to_vec(),
    })
}
