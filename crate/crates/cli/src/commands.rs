use std::collections::BTreeMap;
use std::fmt;

use modwave::diagram::{kdv_fractional_threshold, stability_diagram, DiagramSpec};
use modwave::hill::{assemble, collision_scan, spectrum};
use modwave::indices::{critical_wavenumber, find_resonances, ind, ResonanceLocation, Verdict};
use modwave::pencil::{pencil_verdict, DEFAULT_AMPLITUDE, DEFAULT_XI};
use modwave::stokes::{expansion, newton_wave, EquationKind};
use modwave::validate::{self, ValidateOptions};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig, DEFAULT_N_MAX};
use crate::output::{num, Csv};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(modwave::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<modwave::Error> for CliError {
    fn from(e: modwave::Error) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

/// What a command produces; `main` decides where each part goes.
#[derive(Debug, Default)]
pub struct Outcome {
    pub csv: Option<String>,
    pub summary: Value,
    pub svg: Option<String>,
    /// Human-readable report printed to stdout.
    pub report: Option<String>,
    pub success: bool,
    pub warnings: Vec<String>,
}

fn symbol_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg.symbol_spec()).unwrap_or(Value::Null)
}

/// Index sweep over k. Boussinesq verdicts left open by the index are
/// settled by the quartic pencil at the default `xi = a`.
pub fn index(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sym, warnings) = cfg.resolve_symbol()?;
    let kind = cfg.equation();
    let ks = cfg.k_grid();
    let reports = ks
        .par_iter()
        .map(|&k| {
            let r = ind(kind, &sym, k)?;
            let verdict = if r.verdict == Verdict::Inconclusive {
                pencil_verdict(kind, &sym, k, DEFAULT_XI, DEFAULT_AMPLITUDE)
                    .map_or(r.verdict, |p| p.verdict)
            } else {
                r.verdict
            };
            Ok((r, verdict))
        })
        .collect::<modwave::Result<Vec<_>>>()?;

    let mut csv = Csv::new(&[
        "k",
        "i1",
        "i2m",
        "i2p",
        "i3m",
        "i3p",
        "i_eq",
        "ind",
        "verdict",
        "resonances",
    ]);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut flips = Vec::new();
    for (i, (r, verdict)) in reports.iter().enumerate() {
        let flags: Vec<String> = r.resonance_flags.iter().map(|f| f.to_string()).collect();
        csv.row(&[
            num(r.k),
            num(r.i1),
            num(r.i2m),
            num(r.i2p),
            num(r.i3m),
            num(r.i3p),
            num(r.i_eq),
            num(r.ind),
            verdict.to_string(),
            flags.join(";"),
        ]);
        *counts.entry(verdict.as_str()).or_default() += 1;
        if i > 0 && reports[i - 1].1 != *verdict {
            flips.push(json!({
                "from": reports[i - 1].1.as_str(),
                "to": verdict.as_str(),
                "k_lo": reports[i - 1].0.k,
                "k_hi": r.k,
            }));
        }
    }
    let span = (ks[0], ks[ks.len() - 1]);
    let critical = (span.1 > span.0)
        .then(|| critical_wavenumber(kind, &sym, span))
        .flatten();
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: json!({
            "command": "index",
            "equation": kind.as_str(),
            "symbol": symbol_json(cfg),
            "points": ks.len(),
            "verdicts": counts,
            "flips": flips,
            "critical_wavenumber": critical,
        }),
        success: true,
        warnings,
        ..Outcome::default()
    })
}

pub fn diagram(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let defaults = DiagramSpec::default();
    let spec = DiagramSpec {
        alpha_range: cfg.alpha_range.unwrap_or(defaults.alpha_range),
        alpha_steps: cfg.alpha_steps.unwrap_or(defaults.alpha_steps),
        k_range: cfg.k_range.unwrap_or(defaults.k_range),
        k_steps: cfg.k_steps.unwrap_or(defaults.k_steps),
        kinds: cfg.diagram_equations.clone().unwrap_or(defaults.kinds),
    };
    let d = stability_diagram(&spec)?;
    let mut csv = Csv::new(&["alpha", "equation", "k", "ind", "sign"]);
    for c in &d.cells {
        csv.row(&[
            num(c.alpha),
            c.kind.to_string(),
            num(c.k),
            num(c.ind),
            c.sign.to_string(),
        ]);
    }
    let curves: Vec<Value> = d
        .curves
        .iter()
        .map(|c| {
            json!({
                "equation": c.kind.as_str(),
                "points": c.points.iter().map(|p| json!({"alpha": p.alpha, "k": p.k})).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: json!({
            "command": "diagram",
            "alpha_range": [spec.alpha_range.0, spec.alpha_range.1],
            "alpha_steps": spec.alpha_steps,
            "k_range": [spec.k_range.0, spec.k_range.1],
            "k_steps": spec.k_steps,
            "curves": curves,
            "kdv_threshold_alpha": kdv_fractional_threshold().ok(),
        }),
        svg: Some(d.to_svg()),
        success: true,
        ..Outcome::default()
    })
}

pub fn spectrum_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sym, warnings) = cfg.resolve_symbol()?;
    let kind = cfg.equation();
    let (k, a, n) = (cfg.wavenumber(), cfg.amplitude(), cfg.truncation());
    let wave = newton_wave(kind, &sym, k, a, n, cfg.newton_tol())?;
    let slices = cfg
        .xi_grid()
        .par_iter()
        .map(|&xi| spectrum(&assemble(kind, &sym, &wave, xi, n)?, &sym))
        .collect::<modwave::Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["xi", "index", "re", "im"]);
    for s in &slices {
        for (i, z) in s.eigenvalues.iter().enumerate() {
            csv.row(&[num(s.xi), i.to_string(), num(z.re), num(z.im)]);
        }
    }
    let max_re = slices
        .iter()
        .map(|s| s.max_re)
        .fold(f64::NEG_INFINITY, f64::max);
    let rows: Vec<Value> = slices
        .iter()
        .map(|s| {
            json!({
                "xi": s.xi,
                "max_re": s.max_re,
                "radius": s.radius,
                "near_origin": s.near_origin.len(),
            })
        })
        .collect();
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: json!({
            "command": "spectrum",
            "equation": kind.as_str(),
            "symbol": symbol_json(cfg),
            "k": k,
            "a": a,
            "n": n,
            "speed": wave.c,
            "newton_residual": wave.residual,
            "max_re": max_re,
            "slices": rows,
        }),
        success: true,
        warnings,
        ..Outcome::default()
    })
}

pub fn wave(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sym, warnings) = cfg.resolve_symbol()?;
    let kind = cfg.equation();
    let (k, a, n) = (cfg.wavenumber(), cfg.amplitude(), cfg.truncation());
    let w = newton_wave(kind, &sym, k, a, n, cfg.newton_tol())?;
    let stokes = expansion(kind, &sym, k, a)?;
    let (su, sq) = (stokes.u_cos(n), stokes.q_cos(n));
    let two = kind == EquationKind::Boussinesq;
    let mut csv = if two {
        Csv::new(&["j", "u_hat", "u_stokes", "q_hat", "q_stokes"])
    } else {
        Csv::new(&["j", "u_hat", "u_stokes"])
    };
    for j in 0..=n {
        let mut row = vec![j.to_string(), num(w.u_hat[j]), num(su[j])];
        if let Some(q) = &w.q_hat {
            row.push(num(q[j]));
            row.push(num(sq[j]));
        }
        csv.row(&row);
    }
    let err = w
        .u_series()
        .l2_distance(&modwave::numerics::CosineSeries::new(su));
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: json!({
            "command": "wave",
            "equation": kind.as_str(),
            "symbol": symbol_json(cfg),
            "k": k,
            "a": a,
            "n": n,
            "speed": w.c,
            "stokes_speed": stokes.speed(),
            "residual": w.residual,
            "iterations": w.iterations,
            "expansion_error": err,
        }),
        success: true,
        warnings,
        ..Outcome::default()
    })
}

pub fn resonances(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sym, warnings) = cfg.resolve_symbol()?;
    let kind = cfg.equation();
    let span = cfg.k_span();
    let found = find_resonances(&sym, kind, span);
    let mut csv = Csv::new(&["resonance", "index", "location", "k"]);
    for r in &found {
        let (loc, k) = match r.location {
            ResonanceLocation::At(k) => ("at", num(k)),
            ResonanceLocation::Everywhere => ("everywhere", String::new()),
        };
        csv.row(&[r.kind.to_string(), r.index.to_string(), loc.to_string(), k]);
    }
    // zero-amplitude eigenvalue collisions at the single wave number `k`
    let collisions = match kind {
        EquationKind::Kdv => Value::Null,
        _ => {
            let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);
            let hits = collision_scan(kind, &sym, cfg.wavenumber(), (-n_max, n_max), 2000)?;
            serde_json::to_value(hits).unwrap_or(Value::Null)
        }
    };
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: json!({
            "command": "resonances",
            "equation": kind.as_str(),
            "symbol": symbol_json(cfg),
            "k_range": [span.0, span.1],
            "count": found.len(),
            "collision_k": cfg.wavenumber(),
            "collisions": collisions,
        }),
        success: true,
        warnings,
        ..Outcome::default()
    })
}

pub fn validate_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = validate::run(&ValidateOptions {
        n: cfg.truncation(),
        only: cfg.only.clone().unwrap_or_default(),
    });
    let mut csv = Csv::new(&[
        "id",
        "slug",
        "passed",
        "measured",
        "target",
        "tolerance",
        "seconds",
    ]);
    for c in &report.checks {
        csv.row(&[
            c.id.to_string(),
            c.slug.to_string(),
            c.passed.to_string(),
            num(c.measured),
            num(c.target),
            num(c.tolerance),
            num(c.seconds),
        ]);
    }
    Ok(Outcome {
        csv: Some(csv.into_string()),
        summary: serde_json::to_value(&report).unwrap_or(Value::Null),
        report: Some(report.to_string()),
        success: report.all_passed(),
        ..Outcome::default()
    })
}
