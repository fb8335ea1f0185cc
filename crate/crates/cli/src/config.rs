use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use modwave::dispersion::{DispersionSymbol, SymbolSpec};
use modwave::stokes::EquationKind;
use serde::{Deserialize, Serialize};

/// Amplitude and Floquet exponent above which the small-amplitude theory is
/// not expected to hold; runs proceed with a warning.
pub const AMPLITUDE_CAP: f64 = 0.05;
pub const XI_CAP: f64 = 0.1;

pub const DEFAULT_K_RANGE: (f64, f64) = (0.5, 3.0);
pub const DEFAULT_K_STEPS: usize = 251;
pub const DEFAULT_XI: f64 = 0.01;
pub const DEFAULT_XI_STEPS: usize = 51;
pub const DEFAULT_A: f64 = 0.01;
pub const DEFAULT_K: f64 = 1.0;
pub const DEFAULT_N_MAX: i64 = 8;

/// Everything a run needs. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equation: Option<EquationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_steps: Option<usize>,
    /// Fourier truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_steps: Option<usize>,
    /// Equations drawn in the diagram.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagram_equations: Option<Vec<EquationKind>>,
    /// Mode window `-n_max..=n_max` of the collision scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<i64>,
    /// Validation checks to run, by slug or number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.starts_with('<') {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

macro_rules! merge_fields {
    ($base:ident, $over:ident; $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl RunConfig {
    /// Parses a JSON config. Syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("<json>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("<file>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text).map_err(|mut e| {
            e.message = format!("{}: {}", path.display(), e.message);
            e
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(mut self, over: RunConfig) -> Self {
        merge_fields!(self, over; equation, symbol, k, k_range, k_steps, a, xi, xi_range, xi_steps,
            n, newton_tol, alpha_range, alpha_steps, diagram_equations, n_max, only, output, summary, svg);
        self
    }

    pub fn equation(&self) -> EquationKind {
        self.equation.unwrap_or(EquationKind::Bbm)
    }

    /// The configured symbol, or the one that goes with the equation.
    pub fn symbol_spec(&self) -> SymbolSpec {
        self.symbol.clone().unwrap_or_else(|| {
            SymbolSpec::builtin(match self.equation() {
                EquationKind::Kdv => "whitham",
                EquationKind::Bbm => "bbm",
                EquationKind::Boussinesq => "boussinesq",
            })
        })
    }

    /// Resolves the symbol; parser warnings are returned as text.
    pub fn resolve_symbol(&self) -> Result<(DispersionSymbol, Vec<String>), ConfigError> {
        let parsed = self
            .symbol_spec()
            .resolve()
            .map_err(|e| ConfigError::new("symbol", e.to_string()))?;
        let warnings = parsed.warnings.iter().map(|w| w.to_string()).collect();
        Ok((parsed.symbol, warnings))
    }

    pub fn truncation(&self) -> usize {
        self.n.unwrap_or(modwave::stokes::DEFAULT_TRUNCATION)
    }

    pub fn newton_tol(&self) -> f64 {
        self.newton_tol
            .unwrap_or(modwave::stokes::DEFAULT_NEWTON_TOL)
    }

    pub fn amplitude(&self) -> f64 {
        self.a.unwrap_or(DEFAULT_A)
    }

    pub fn wavenumber(&self) -> f64 {
        self.k.unwrap_or(DEFAULT_K)
    }

    /// Sweep grid: `k_range` with `k_steps` points, else the single `k`,
    /// else the default range.
    pub fn k_grid(&self) -> Vec<f64> {
        match (self.k_range, self.k) {
            (Some((lo, hi)), _) => linspace(lo, hi, self.k_steps.unwrap_or(DEFAULT_K_STEPS)),
            (None, Some(k)) => vec![k],
            (None, None) => linspace(
                DEFAULT_K_RANGE.0,
                DEFAULT_K_RANGE.1,
                self.k_steps.unwrap_or(DEFAULT_K_STEPS),
            ),
        }
    }

    pub fn k_span(&self) -> (f64, f64) {
        self.k_range.unwrap_or(DEFAULT_K_RANGE)
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        match self.xi_range {
            Some((lo, hi)) => linspace(lo, hi, self.xi_steps.unwrap_or(DEFAULT_XI_STEPS)),
            None => vec![self.xi.unwrap_or(DEFAULT_XI)],
        }
    }

    /// Field checks shared by all commands. Returns warnings for values past
    /// the asymptotic caps.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        check_range("k_range", self.k_range, true)?;
        check_range("xi_range", self.xi_range, false)?;
        check_range("alpha_range", self.alpha_range, false)?;
        for (field, steps) in [
            ("k_steps", self.k_steps),
            ("xi_steps", self.xi_steps),
            ("alpha_steps", self.alpha_steps),
        ] {
            if steps == Some(0) {
                return Err(ConfigError::new(field, "must be at least 1"));
            }
        }
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(ConfigError::new("k", format!("must be positive, got {k}")));
            }
        }
        if let Some((_, hi)) = self.xi_range {
            if hi > 0.5 {
                return Err(ConfigError::new(
                    "xi_range",
                    "Floquet exponents lie in [-1/2, 1/2]",
                ));
            }
        }
        if let Some(xi) = self.xi {
            if xi.is_nan() || xi.abs() > 0.5 {
                return Err(ConfigError::new(
                    "xi",
                    format!("must lie in [-1/2, 1/2], got {xi}"),
                ));
            }
        }
        if let Some(a) = self.a {
            if !a.is_finite() {
                return Err(ConfigError::new("a", "must be finite"));
            }
            if a.abs() > AMPLITUDE_CAP {
                warnings.push(format!(
                    "a = {a} exceeds the small-amplitude cap {AMPLITUDE_CAP}"
                ));
            }
        }
        let xi_max = self
            .xi_range
            .map(|(lo, hi)| lo.abs().max(hi.abs()))
            .or(self.xi.map(f64::abs));
        if let Some(x) = xi_max.filter(|&x| x > XI_CAP) {
            warnings.push(format!("xi = {x} exceeds the modulational cap {XI_CAP}"));
        }
        if let Some(n) = self.n {
            if n < 8 {
                return Err(ConfigError::new(
                    "n",
                    format!("truncation must be at least 8, got {n}"),
                ));
            }
        }
        if let Some(tol) = self.newton_tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(ConfigError::new("newton_tol", "must be positive"));
            }
        }
        if let Some(n_max) = self.n_max {
            if n_max < 1 {
                return Err(ConfigError::new("n_max", "must be at least 1"));
            }
        }
        if self.diagram_equations.as_ref().is_some_and(Vec::is_empty) {
            return Err(ConfigError::new(
                "diagram_equations",
                "must name at least one equation",
            ));
        }
        Ok(warnings)
    }
}

fn check_range(
    field: &str,
    range: Option<(f64, f64)>,
    nonnegative: bool,
) -> Result<(), ConfigError> {
    let Some((lo, hi)) = range else {
        return Ok(());
    };
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(ConfigError::new(
            field,
            format!("range [{lo}, {hi}] is empty"),
        ));
    }
    if nonnegative && lo < 0.0 {
        return Err(ConfigError::new(
            field,
            format!("must be nonnegative, got [{lo}, {hi}]"),
        ));
    }
    Ok(())
}

/// `steps` points from `lo` to `hi`, endpoints included.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || lo == hi {
        return vec![lo];
    }
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / last)
        .collect()
}

/// Symbol given on the command line.
pub fn symbol_from_flags(
    base: Option<&SymbolSpec>,
    name: Option<&str>,
    alpha: Option<f64>,
    expr: Option<&str>,
    params: &[(String, f64)],
) -> Option<SymbolSpec> {
    let params: BTreeMap<String, f64> = params.iter().cloned().collect();
    if let Some(expr) = expr {
        return Some(SymbolSpec::Expr {
            name: expr.into(),
            expr: expr.into(),
            params,
        });
    }
    if let Some(name) = name {
        let mut params = params;
        if let Some(alpha) = alpha {
            params.insert("alpha".into(), alpha);
        }
        return Some(SymbolSpec::Builtin {
            name: name.into(),
            builtin: name.into(),
            params,
        });
    }
    let alpha = alpha?;
    match base {
        Some(SymbolSpec::Builtin {
            name,
            builtin,
            params,
        }) if builtin == "fractional" => {
            let mut params = params.clone();
            params.insert("alpha".into(), alpha);
            Some(SymbolSpec::Builtin {
                name: name.clone(),
                builtin: builtin.clone(),
                params,
            })
        }
        _ => Some(SymbolSpec::fractional(alpha)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> RunConfig {
        RunConfig {
            equation: Some(EquationKind::Boussinesq),
            symbol: Some(SymbolSpec::Expr {
                name: "custom".into(),
                expr: "1/(1+c*k^2)".into(),
                params: BTreeMap::from([("c".into(), 0.1 + 0.2)]),
            }),
            k: Some(1.0 / 3.0),
            k_range: Some((0.1, 10.0)),
            k_steps: Some(7),
            a: Some(1e-2),
            xi: Some(0.015625),
            xi_range: Some((-0.5, 0.5)),
            xi_steps: Some(3),
            n: Some(48),
            newton_tol: Some(1e-13),
            alpha_range: Some((2.0, 6.0)),
            alpha_steps: Some(5),
            diagram_equations: Some(vec![EquationKind::Kdv, EquationKind::Bbm]),
            n_max: Some(4),
            only: Some(vec!["quartic".into()]),
            output: Some("out.csv".into()),
            summary: Some("summary.json".into()),
            svg: Some("fig.svg".into()),
        }
    }

    #[test]
    fn round_trip() {
        for cfg in [RunConfig::default(), full()] {
            assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn flags_win() {
        let base = full();
        let over = RunConfig {
            k: Some(2.0),
            equation: Some(EquationKind::Bbm),
            ..RunConfig::default()
        };
        let merged = base.clone().merge(over);
        assert_eq!(merged.k, Some(2.0));
        assert_eq!(merged.equation(), EquationKind::Bbm);
        assert_eq!(merged.k_range, base.k_range);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_json("{\n  \"k_steps\": 0\n}")
            .unwrap()
            .validate()
            .unwrap_err();
        assert_eq!(e.field, "k_steps");
        let e = RunConfig::from_json("{\"xi_range\": [0.2, 0.1]}")
            .unwrap()
            .validate()
            .unwrap_err();
        assert_eq!(e.field, "xi_range");
        let e = RunConfig::from_json("{\n  \"k\": 1.0,\n  \"bogus\": 2\n}").unwrap_err();
        assert!(e.message.contains("line 3"), "{e}");
        let e = RunConfig::from_json("{\"k\": \"one\"}").unwrap_err();
        assert!(e.message.contains("line 1"), "{e}");
    }

    #[test]
    fn caps_warn() {
        let cfg = RunConfig {
            a: Some(0.08),
            xi: Some(0.2),
            ..RunConfig::default()
        };
        assert_eq!(cfg.validate().unwrap().len(), 2);
    }

    #[test]
    fn grids() {
        assert_eq!(linspace(0.5, 3.0, 251).len(), 251);
        assert_eq!(linspace(0.5, 3.0, 251)[250], 3.0);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        let cfg = RunConfig {
            k: Some(1.5),
            ..RunConfig::default()
        };
        assert_eq!(cfg.k_grid(), vec![1.5]);
    }

    #[test]
    fn default_symbols() {
        for (eq, name) in [
            (EquationKind::Kdv, "whitham"),
            (EquationKind::Bbm, "bbm"),
            (EquationKind::Boussinesq, "boussinesq"),
        ] {
            let cfg = RunConfig {
                equation: Some(eq),
                ..RunConfig::default()
            };
            assert_eq!(cfg.resolve_symbol().unwrap().0.name(), name);
        }
    }

    #[test]
    fn alpha_flag() {
        let spec = symbol_from_flags(None, None, Some(3.0), None, &[]).unwrap();
        assert_eq!(spec, SymbolSpec::fractional(3.0));
        let spec = symbol_from_flags(
            Some(&SymbolSpec::fractional(2.0)),
            None,
            Some(4.0),
            None,
            &[],
        )
        .unwrap();
        assert_eq!(spec, SymbolSpec::fractional(4.0));
        assert!(symbol_from_flags(None, None, None, None, &[]).is_none());
    }

    fn finite() -> impl proptest::strategy::Strategy<Value = f64> {
        proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config {
            rng_seed: proptest::test_runner::RngSeed::Fixed(modwave::numerics::SAMPLING_SEED),
            failure_persistence: None,
            ..proptest::test_runner::Config::default()
        })]

        #[test]
        fn random_configs_round_trip(k in finite(), lo in finite(), hi in finite(), a in finite(),
                                     steps in 1usize..10_000, n in proptest::option::of(8usize..512),
                                     c in finite(), eq in 0usize..3) {
            let cfg = RunConfig {
                equation: Some(EquationKind::ALL[eq]),
                symbol: Some(SymbolSpec::Expr {
                    name: "s".into(),
                    expr: "1/(1+c*k^2)".into(),
                    params: BTreeMap::from([("c".into(), c)]),
                }),
                k: Some(k),
                k_range: Some((lo, hi)),
                k_steps: Some(steps),
                a: Some(a),
                n,
                ..RunConfig::default()
            };
            proptest::prop_assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }
}
