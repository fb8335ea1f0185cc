//! Acceptance suite: each check recomputes a closed-form or derived quantity
//! and compares it against its target at a fixed tolerance.

use std::fmt;
use std::time::Instant;

use rand::RngExt;
use serde::Serialize;

use crate::diagram::{kdv_fractional_threshold, stability_diagram, DiagramSpec};
use crate::dispersion::DispersionSymbol;
use crate::error::Result;
use crate::hill::{assemble, collision_floor, spectrum, validate_pencil, zero_wave};
use crate::indices::{critical_wavenumber, ind, Verdict};
use crate::numerics::seeded_rng;
use crate::pencil::{
    bbm_disc_exact, bbm_disc_reference, build_bbm_pencil, classify_quartic, disc_cubic,
    disc_tolerance, leading_discriminants, pencil_verdict, rescaled_charpoly, root_case,
    QuarticCase,
};
use crate::stokes::{
    expansion_error, newton_wave, EquationKind, DEFAULT_NEWTON_TOL, DEFAULT_TRUNCATION,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub slug: &'static str,
    pub title: &'static str,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] #{} {}: measured {:e}, target {:e}, tol {:e}; {} ({:.2}s of {}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.slug,
            self.measured,
            self.target,
            self.tolerance,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, slug: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.slug == slug)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    /// Hill and Newton truncation.
    pub n: usize,
    /// Slugs or numbers to run; empty runs everything.
    pub only: Vec<String>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            n: DEFAULT_TRUNCATION,
            only: Vec::new(),
        }
    }
}

struct Outcome {
    measured: f64,
    target: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
}

type CheckFn = fn(usize) -> Result<Outcome>;

/// (id, slug, title, runtime budget in seconds)
pub const CHECKS: [(u32, &str, &str, f64); 10] = [
    (
        1,
        "bbm-threshold",
        "BBM critical wave number is sqrt(3)",
        1.0,
    ),
    (
        2,
        "collision-floor",
        "BBM collision floor is 2 sqrt(3/5)",
        5.0,
    ),
    (
        3,
        "boussinesq-stability",
        "Boussinesq waves are modulationally stable",
        1.0,
    ),
    (
        4,
        "fractional-threshold",
        "fractional KdV threshold and BBM/Boussinesq ordering",
        10.0,
    ),
    (
        5,
        "closed-form-disc",
        "BBM cubic discriminant at a = 0 matches the closed form",
        1.0,
    ),
    (
        6,
        "hill-pencil",
        "pencil roots match near-origin Hill eigenvalues",
        60.0,
    ),
    (
        7,
        "stokes-newton",
        "Stokes expansion error is third order",
        10.0,
    ),
    (
        8,
        "quartic",
        "quartic classifier agrees with the root oracle",
        5.0,
    ),
    (
        9,
        "zero-state",
        "zero-amplitude spectra and origin multiplicities",
        5.0,
    ),
    (
        10,
        "truncation",
        "max Re is stable under truncation refinement",
        30.0,
    ),
];

fn check_fn(id: u32) -> CheckFn {
    match id {
        1 => bbm_threshold,
        2 => bbm_collision_floor,
        3 => boussinesq_stability,
        4 => fractional_threshold,
        5 => closed_form_disc,
        6 => hill_pencil,
        7 => stokes_newton,
        8 => quartic,
        9 => zero_state,
        _ => truncation,
    }
}

pub fn selected(only: &[String], id: u32, slug: &str) -> bool {
    only.is_empty()
        || only
            .iter()
            .any(|s| s == slug || s.parse::<u32>().ok() == Some(id))
}

/// Runs the selected checks in order. Errors inside a check become failed
/// report lines.
pub fn run(opts: &ValidateOptions) -> ValidationReport {
    let checks = CHECKS
        .iter()
        .filter(|(id, slug, _, _)| selected(&opts.only, *id, slug))
        .map(|&(id, slug, title, budget)| {
            let start = Instant::now();
            let outcome = check_fn(id)(opts.n).unwrap_or_else(|e| Outcome {
                measured: f64::NAN,
                target: f64::NAN,
                tolerance: f64::NAN,
                passed: false,
                detail: format!("error: {e}"),
            });
            CheckResult {
                id,
                slug,
                title,
                measured: outcome.measured,
                target: outcome.target,
                tolerance: outcome.tolerance,
                passed: outcome.passed,
                detail: outcome.detail,
                seconds: start.elapsed().as_secs_f64(),
                budget_seconds: budget,
            }
        })
        .collect();
    ValidationReport { n: opts.n, checks }
}

fn bbm_threshold(_: usize) -> Result<Outcome> {
    let sym = DispersionSymbol::bbm();
    let target = 3f64.sqrt();
    let kc = critical_wavenumber(EquationKind::Bbm, &sym, (1.0, 3.0)).unwrap_or(f64::NAN);
    let below = ind(EquationKind::Bbm, &sym, 1.7)?.ind;
    let above = ind(EquationKind::Bbm, &sym, 1.8)?.ind;
    Ok(Outcome {
        measured: kc,
        target,
        tolerance: 1e-9,
        passed: (kc - target).abs() <= 1e-9 && below > 0.0 && above < 0.0,
        detail: format!("ind(1.7) = {below:.6e}, ind(1.8) = {above:.6e}"),
    })
}

fn bbm_collision_floor(_: usize) -> Result<Outcome> {
    let target = 2.0 * (3.0f64 / 5.0).sqrt();
    let partners: Vec<i64> = (-8..=-2).collect();
    let floor = collision_floor(&DispersionSymbol::bbm(), &partners, (0.5, 4.0), 400)?;
    let (measured, detail) = match floor {
        Some(f) => (
            f.k,
            format!("omega_0 meets omega_{} at xi = {:.6}", f.n, f.xi),
        ),
        None => (f64::NAN, "no collision in k in [0.5, 4]".into()),
    };
    Ok(Outcome {
        measured,
        target,
        tolerance: 1e-6,
        passed: (measured - target).abs() <= 1e-6,
        detail,
    })
}

fn boussinesq_stability(_: usize) -> Result<Outcome> {
    let sym = DispersionSymbol::boussinesq();
    let t = 1e-3;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let g = sym.eval(k)? + k * sym.d1(k)?;
        let (_, d1, d2) = leading_discriminants(&sym, k, t)?;
        let e1 = -4.0 * (2.0 + g * g);
        let e2 = -16.0 * (1.0 + 2.0 * g * g);
        worst = worst.max((d1 - e1).abs()).max((d2 - e2).abs());
        let index = ind(EquationKind::Boussinesq, &sym, k)?.ind;
        let case = pencil_verdict(EquationKind::Boussinesq, &sym, k, t, t)?
            .class
            .map(|c| c.case);
        if !(index > 0.0 && d1 < 0.0 && d2 < 0.0 && case == Some(QuarticCase::FourReal)) {
            failures.push(format!(
                "k={k}: ind={index:e} disc1={d1:e} disc2={d2:e} {case:?}"
            ));
        }
    }
    Ok(Outcome {
        measured: worst,
        target: 0.0,
        tolerance: 1e-10,
        passed: worst <= 1e-10 && failures.is_empty(),
        detail: if failures.is_empty() {
            "ind > 0, disc1 < 0, disc2 < 0 and FourReal at all six k".into()
        } else {
            failures.join("; ")
        },
    })
}

fn fractional_threshold(_: usize) -> Result<Outcome> {
    let alpha = kdv_fractional_threshold()?;
    let spec = DiagramSpec {
        alpha_range: (3.0, 3.0),
        alpha_steps: 1,
        ..DiagramSpec::default()
    };
    let d = stability_diagram(&spec)?;
    let kb = d.critical(EquationKind::Bbm, 3.0).unwrap_or(f64::NAN);
    let kq = d
        .critical(EquationKind::Boussinesq, 3.0)
        .unwrap_or(f64::NAN);
    Ok(Outcome {
        measured: alpha,
        target: 1.0,
        tolerance: 1e-10,
        passed: (alpha - 1.0).abs() <= 1e-10 && kb > kq,
        detail: format!("alpha = 3: k*_BBM = {kb:.10}, k*_Bnesq = {kq:.10}"),
    })
}

fn closed_form_disc(_: usize) -> Result<Outcome> {
    let sym = DispersionSymbol::bbm();
    let mut worst: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for k in [0.5, 1.0, 2.0, 4.0] {
        for xi in [1e-3, 1e-2] {
            let disc = disc_cubic(&rescaled_charpoly(&build_bbm_pencil(&sym, k, xi, 0.0)?)?)?;
            let reference = bbm_disc_reference(&sym, k, xi)?;
            let exact = bbm_disc_exact(&sym, k, xi)?;
            worst = worst.max(((disc - reference) / reference).abs());
            worst_exact = worst_exact.max(((disc - exact) / exact).abs());
        }
    }
    Ok(Outcome {
        measured: worst,
        target: 0.0,
        tolerance: 1e-8,
        passed: worst <= 1e-8,
        detail: format!(
            "relative error against the form with 2 i2- in place of 4 i2-: {worst_exact:.3e}"
        ),
    })
}

fn hill_pencil(n: usize) -> Result<Outcome> {
    let ts = [4e-2, 2e-2, 1e-2];
    let mut worst_factor = f64::INFINITY;
    let mut notes = Vec::new();
    let mut signs_agree = true;
    for (kind, sym, k) in [
        (EquationKind::Bbm, DispersionSymbol::bbm(), 1.0),
        (EquationKind::Bbm, DispersionSymbol::bbm(), 2.0),
        (
            EquationKind::Boussinesq,
            DispersionSymbol::boussinesq(),
            1.0,
        ),
    ] {
        let v = validate_pencil(kind, &sym, k, &ts, &ts, n)?;
        let factor = v
            .rows
            .windows(2)
            .map(|w| w[0].ratio / w[1].ratio)
            .fold(f64::INFINITY, f64::min);
        worst_factor = worst_factor.min(factor);
        let unstable = v.rows.last().is_some_and(|r| r.hill_max_re > 1e-8);
        let predicted = ind(kind, &sym, k)?.verdict == Verdict::ModulationallyUnstable;
        signs_agree &= unstable == predicted;
        notes.push(format!(
            "{kind} k={k}: factor {factor:.2}, unstable {unstable}"
        ));
    }
    Ok(Outcome {
        measured: worst_factor,
        target: 3.0,
        tolerance: 0.0,
        passed: worst_factor >= 3.0 && signs_agree,
        detail: notes.join("; "),
    })
}

fn stokes_newton(n: usize) -> Result<Outcome> {
    let amps = [0.02, 0.01, 0.005];
    let mut slopes = Vec::new();
    for (kind, sym) in [
        (EquationKind::Bbm, DispersionSymbol::bbm()),
        (EquationKind::Boussinesq, DispersionSymbol::boussinesq()),
    ] {
        slopes.push(
            expansion_error(kind, &sym, 1.0, &amps, n)?
                .slope
                .unwrap_or(f64::NAN),
        );
    }
    let k: f64 = 1.0;
    let a = 0.01;
    let wave = newton_wave(
        EquationKind::Bbm,
        &DispersionSymbol::bbm(),
        k,
        a,
        n,
        DEFAULT_NEWTON_TOL,
    )?;
    let expected = (1.0 + k * k) / (6.0 * k * k);
    let rel = (wave.u_hat[2] / (a * a) - expected).abs() / expected;
    let worst_slope = slopes.iter().map(|s| (s - 3.0).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        measured: worst_slope,
        target: 0.0,
        tolerance: 0.5,
        passed: worst_slope <= 0.5 && rel <= 2e-3,
        detail: format!(
            "slopes BBM {:.4}, Boussinesq {:.4}; u_hat[2]/a^2 relative error {rel:.2e} (tol 2e-3)",
            slopes[0], slopes[1]
        ),
    })
}

fn quartic(_: usize) -> Result<Outcome> {
    let mut rng = seeded_rng();
    let (mut checked, mut skipped, mut disagreements) = (0usize, 0usize, 0usize);
    for _ in 0..10_000 {
        let mut p = [0.0f64; 5];
        for c in &mut p {
            *c = rng.random_range(-3.0..3.0);
        }
        if p[0].abs() < 1e-3 {
            skipped += 1;
            continue;
        }
        let class = classify_quartic(&p, disc_tolerance(&p))?;
        let scale = p.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if class.disc.abs() <= 1e-8 * scale.powi(6) {
            skipped += 1;
            continue;
        }
        checked += 1;
        if class.case != root_case(&p)? {
            disagreements += 1;
        }
    }
    Ok(Outcome {
        measured: disagreements as f64,
        target: 0.0,
        tolerance: 0.0,
        passed: disagreements == 0,
        detail: format!("{checked} compared, {skipped} skipped near the discriminant zero set"),
    })
}

fn zero_state(n: usize) -> Result<Outcome> {
    let syms = [
        DispersionSymbol::bbm(),
        DispersionSymbol::boussinesq(),
        DispersionSymbol::whitham(),
        DispersionSymbol::fractional(3.0),
    ];
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for sym in &syms {
        for (kind, mult) in [(EquationKind::Bbm, 3), (EquationKind::Boussinesq, 4)] {
            let wave = zero_wave(kind, sym, 1.0, n)?;
            for xi in [0.0, 0.1, 0.25, 0.5] {
                let slice = spectrum(&assemble(kind, sym, &wave, xi, n)?, sym)?;
                worst = worst.max(
                    slice
                        .eigenvalues
                        .iter()
                        .map(|z| z.re.abs())
                        .fold(0.0, f64::max),
                );
                if xi == 0.0 && slice.zero_multiplicity(1e-8) != mult {
                    bad.push(format!(
                        "{} {kind}: multiplicity {}",
                        sym.name(),
                        slice.zero_multiplicity(1e-8)
                    ));
                }
            }
        }
    }
    Ok(Outcome {
        measured: worst,
        target: 0.0,
        tolerance: 1e-10,
        passed: worst <= 1e-10 && bad.is_empty(),
        detail: if bad.is_empty() {
            "origin multiplicity 3 (BBM) and 4 (Boussinesq) for all symbols".into()
        } else {
            bad.join("; ")
        },
    })
}

/// Compares max Re at truncation `n` with `3n/2` for the cross-validation
/// scenarios, each truncation with its own Newton wave.
fn truncation(n: usize) -> Result<Outcome> {
    let fine = n + n / 2;
    let mut worst: f64 = 0.0;
    for (kind, sym, k) in [
        (EquationKind::Bbm, DispersionSymbol::bbm(), 1.0),
        (EquationKind::Bbm, DispersionSymbol::bbm(), 2.0),
        (
            EquationKind::Boussinesq,
            DispersionSymbol::boussinesq(),
            1.0,
        ),
    ] {
        for t in [4e-2, 2e-2, 1e-2] {
            let mut max_re = [0.0; 2];
            for (slot, size) in max_re.iter_mut().zip([n, fine]) {
                let wave = newton_wave(kind, &sym, k, t, size, DEFAULT_NEWTON_TOL)?;
                *slot = spectrum(&assemble(kind, &sym, &wave, t, size)?, &sym)?.max_re;
            }
            worst = worst.max((max_re[0] - max_re[1]).abs());
        }
    }
    Ok(Outcome {
        measured: worst,
        target: 0.0,
        tolerance: 1e-7,
        passed: worst <= 1e-7,
        detail: format!("N = {n} against N = {fine}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_filter() {
        let only = vec!["quartic".to_string(), "1".to_string()];
        assert!(selected(&only, 8, "quartic"));
        assert!(selected(&only, 1, "bbm-threshold"));
        assert!(!selected(&only, 2, "collision-floor"));
        assert!(selected(&[], 2, "collision-floor"));
    }

    #[test]
    fn quartic_subset_runs_alone() {
        let report = run(&ValidateOptions {
            only: vec!["quartic".into()],
            ..ValidateOptions::default()
        });
        assert_eq!(report.checks.len(), 1);
        assert!(report.all_passed(), "{report}");
        assert_eq!(report.checks[0].measured, 0.0);
    }

    #[test]
    fn errors_become_failed_lines() {
        let report = run(&ValidateOptions {
            n: 4,
            only: vec!["truncation".into()],
        });
        assert!(!report.all_passed());
        assert!(report.checks[0].detail.starts_with("error:"));
    }

    #[test]
    fn report_lines() {
        let report = run(&ValidateOptions {
            only: vec!["1".into(), "5".into()],
            ..ValidateOptions::default()
        });
        let text = report.to_string();
        assert!(text.contains("[PASS] #1 bbm-threshold"), "{text}");
        assert!(text.contains("#5 closed-form-disc"), "{text}");
        assert!(text.ends_with("checks passed\n"));
    }
}
