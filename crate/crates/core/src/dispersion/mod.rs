//! Fourier-multiplier dispersion symbols `m(k)`.
//!
//! A symbol is the phase speed of the plane wave with wave number `k`. The
//! built-in families carry analytic first and second derivatives; symbols
//! parsed from text fall back to central differences.

mod assumptions;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assumptions::{check_assumptions, default_grid, AssumptionReport, M3Fit, M3_ALPHA_FLOOR};
pub use parser::{parse_expr, Expr};

/// Below this |k| the Whitham symbol is evaluated by its Taylor series.
const WHITHAM_SERIES_CUTOFF: f64 = 0.1;

/// Taylor coefficients of sqrt(tanh k / k) in powers of k^2.
const WHITHAM_SERIES: [f64; 7] = [
    1.0,
    -1.0 / 6.0,
    19.0 / 360.0,
    -55.0 / 3024.0,
    11813.0 / 1_814_400.0,
    -2117.0 / 887_040.0,
    64_604_977.0 / 72_648_576_000.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "family")]
pub enum Builtin {
    Bbm,
    Boussinesq,
    Fractional { alpha: f64 },
    Whitham,
}

impl Builtin {
    /// Looks up a built-in by name; `fractional` requires `alpha`.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        match (name.to_ascii_lowercase().as_str(), alpha) {
            ("bbm", _) => Ok(Self::Bbm),
            ("boussinesq", _) => Ok(Self::Boussinesq),
            ("whitham", _) => Ok(Self::Whitham),
            ("fractional", Some(alpha)) => Ok(Self::Fractional { alpha }),
            ("fractional", None) => Err(Error::InvalidInput(
                "the fractional symbol needs the parameter alpha".into(),
            )),
            (other, _) => Err(Error::InvalidInput(format!(
                "unknown built-in symbol '{other}'"
            ))),
        }
    }

    /// Text form accepted by [`parse_symbol`] that reproduces this built-in.
    pub fn as_expr(&self) -> String {
        match self {
            Self::Bbm => "1/(1+k^2)".into(),
            Self::Boussinesq => "(1+k^2)^(-1/2)".into(),
            Self::Fractional { alpha } => format!("1+abs(k)^{alpha}"),
            Self::Whitham => "sqrt(tanh(abs(k))/abs(k))".into(),
        }
    }

    fn growth(&self) -> f64 {
        match self {
            Self::Bbm => -2.0,
            Self::Boussinesq => -1.0,
            Self::Fractional { alpha } => *alpha,
            Self::Whitham => -0.5,
        }
    }

    /// m, m', m'' at k >= 0.
    fn eval3(&self, k: f64) -> (f64, f64, f64) {
        match *self {
            Self::Bbm => {
                let s = 1.0 + k * k;
                (
                    1.0 / s,
                    -2.0 * k / (s * s),
                    (6.0 * k * k - 2.0) / (s * s * s),
                )
            }
            Self::Boussinesq => {
                let s = 1.0 + k * k;
                let r = s.sqrt();
                (1.0 / r, -k / (s * r), (2.0 * k * k - 1.0) / (s * s * r))
            }
            Self::Fractional { alpha } => {
                if k == 0.0 {
                    let d1 = if alpha > 1.0 {
                        0.0
                    } else if alpha == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    };
                    let d2 = if alpha > 2.0 || alpha == 1.0 {
                        0.0
                    } else if alpha == 2.0 {
                        2.0
                    } else {
                        f64::INFINITY
                    };
                    return (1.0, d1, d2);
                }
                (
                    1.0 + k.powf(alpha),
                    alpha * k.powf(alpha - 1.0),
                    alpha * (alpha - 1.0) * k.powf(alpha - 2.0),
                )
            }
            Self::Whitham => whitham3(k),
        }
    }
}

fn whitham3(k: f64) -> (f64, f64, f64) {
    if k < WHITHAM_SERIES_CUTOFF {
        let x = k * k;
        let (mut m, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (j, c) in WHITHAM_SERIES.iter().enumerate().rev() {
            let p = 2 * j;
            m = m * x + c;
            if p >= 1 {
                d1 += c * p as f64 * k.powi(p as i32 - 1);
            }
            if p >= 2 {
                d2 += c * (p * (p - 1)) as f64 * k.powi(p as i32 - 2);
            }
        }
        return (m, d1, d2);
    }
    let t = k.tanh();
    let sech2 = 1.0 - t * t;
    let g = t / k;
    let g1 = sech2 / k - t / (k * k);
    let g2 = -2.0 * sech2 * t / k - 2.0 * sech2 / (k * k) + 2.0 * t / (k * k * k);
    let m = g.sqrt();
    (m, g1 / (2.0 * m), g2 / (2.0 * m) - g1 * g1 / (4.0 * g * m))
}

#[derive(Clone)]
enum Source {
    Builtin(Builtin),
    Expr(Arc<Expr>),
}

/// An evaluable, even dispersion symbol.
#[derive(Clone)]
pub struct DispersionSymbol {
    name: String,
    source: Source,
    alpha: f64,
    params: BTreeMap<String, f64>,
    analytic: bool,
}

impl fmt::Debug for DispersionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionSymbol")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("params", &self.params)
            .field("analytic", &self.has_analytic_derivatives())
            .finish()
    }
}

impl DispersionSymbol {
    pub fn builtin(b: Builtin) -> Self {
        let (name, params) = match b {
            Builtin::Bbm => ("bbm", BTreeMap::new()),
            Builtin::Boussinesq => ("boussinesq", BTreeMap::new()),
            Builtin::Whitham => ("whitham", BTreeMap::new()),
            Builtin::Fractional { alpha } => {
                ("fractional", BTreeMap::from([("alpha".to_string(), alpha)]))
            }
        };
        Self {
            name: name.into(),
            source: Source::Builtin(b),
            alpha: b.growth(),
            params,
            analytic: true,
        }
    }

    pub fn bbm() -> Self {
        Self::builtin(Builtin::Bbm)
    }

    pub fn boussinesq() -> Self {
        Self::builtin(Builtin::Boussinesq)
    }

    pub fn whitham() -> Self {
        Self::builtin(Builtin::Whitham)
    }

    pub fn fractional(alpha: f64) -> Self {
        Self::builtin(Builtin::Fractional { alpha })
    }

    /// Same symbol with analytic derivatives disabled.
    pub fn with_finite_differences(mut self) -> Self {
        self.analytic = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Growth exponent of the large-|k| tail.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn as_builtin(&self) -> Option<Builtin> {
        match self.source {
            Source::Builtin(b) => Some(b),
            Source::Expr(_) => None,
        }
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.analytic && matches!(self.source, Source::Builtin(_))
    }

    /// Raw value at `k` without folding to |k|; removable singularities are
    /// resolved by a Richardson limit.
    pub(crate) fn eval_raw(&self, k: f64) -> f64 {
        match &self.source {
            Source::Builtin(b) => b.eval3(k.abs()).0,
            Source::Expr(e) => {
                let v = e.eval(k);
                if v.is_finite() {
                    return v;
                }
                let h = 1e-3 * k.abs().max(1.0);
                let (f1, f2) = (e.eval(k + h), e.eval(k + 0.5 * h));
                let (g1, g2) = (e.eval(k - h), e.eval(k - 0.5 * h));
                let right = (4.0 * f2 - f1) / 3.0;
                let left = (4.0 * g2 - g1) / 3.0;
                0.5 * (right + left)
            }
        }
    }

    /// m(k), evaluated at |k|.
    pub fn eval(&self, k: f64) -> Result<f64> {
        let v = self.eval_raw(k.abs());
        finite(v, "m", k)
    }

    /// m'(k). Odd in k.
    pub fn d1(&self, k: f64) -> Result<f64> {
        let v = match (&self.source, self.analytic) {
            (Source::Builtin(b), true) => k.signum() * b.eval3(k.abs()).1 * f64::from(k != 0.0),
            _ => {
                let h = 1e-5 * k.abs().max(1.0);
                (self.eval_raw((k + h).abs()) - self.eval_raw((k - h).abs())) / (2.0 * h)
            }
        };
        finite(v, "m'", k)
    }

    /// m''(k). Even in k.
    pub fn d2(&self, k: f64) -> Result<f64> {
        let v = match (&self.source, self.analytic) {
            (Source::Builtin(b), true) => b.eval3(k.abs()).2,
            _ => {
                let h = 1e-4 * k.abs().max(1.0);
                let f = |x: f64| self.eval_raw(x.abs());
                (f(k + h) - 2.0 * f(k) + f(k - h)) / (h * h)
            }
        };
        finite(v, "m''", k)
    }

    pub fn phase_speed(&self, k: f64) -> Result<f64> {
        self.eval(k)
    }

    /// (k m(k))' = m(k) + k m'(k).
    pub fn group_speed(&self, k: f64) -> Result<f64> {
        Ok(self.eval(k)? + k * self.d1(k)?)
    }
}

fn finite(v: f64, what: &'static str, k: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, k })
    }
}

pub fn eval_m(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    sym.eval(k)
}

pub fn phase_speed(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    sym.phase_speed(k)
}

pub fn group_speed(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    sym.group_speed(k)
}

pub fn d1_m(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    sym.d1(k)
}

pub fn d2_m(sym: &DispersionSymbol, k: f64) -> Result<f64> {
    sym.d2(k)
}

/// Problems detected on the probe grid after parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolWarning {
    /// m(0) differs from 1.
    Normalization { value: f64 },
    /// m(-k) differs from m(k).
    NotEven { k: f64, plus: f64, minus: f64 },
}

impl fmt::Display for SymbolWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normalization { value } => write!(f, "m(0) = {value}, expected 1"),
            Self::NotEven { k, plus, minus } => {
                write!(
                    f,
                    "evenness violated: m({k}) = {plus} but m(-{k}) = {minus}"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedSymbol {
    pub symbol: DispersionSymbol,
    pub warnings: Vec<SymbolWarning>,
}

const PROBE: [f64; 8] = [0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0];

/// Parses a user-defined symbol and probes it for normalization and evenness.
/// The symbol is returned even when warnings are raised; evaluation always
/// folds to |k|.
pub fn parse_symbol(expr: &str, params: &BTreeMap<String, f64>) -> Result<ParsedSymbol> {
    let tree = parse_expr(expr, params)?;
    let mut symbol = DispersionSymbol {
        name: expr.to_string(),
        source: Source::Expr(Arc::new(tree)),
        alpha: f64::NAN,
        params: params.clone(),
        analytic: false,
    };
    let mut warnings = Vec::new();
    let m0 = symbol.eval_raw(0.0);
    if !m0.is_finite() {
        return Err(Error::NonFinite { what: "m", k: 0.0 });
    }
    if (m0 - 1.0).abs() > 1e-12 {
        warnings.push(SymbolWarning::Normalization { value: m0 });
    }
    for &k in &PROBE {
        let (plus, minus) = (symbol.eval_raw(k), symbol.eval_raw(-k));
        if !plus.is_finite() {
            return Err(Error::NonFinite { what: "m", k });
        }
        if !minus.is_finite() {
            return Err(Error::NonFinite { what: "m", k: -k });
        }
        if (plus - minus).abs() > 1e-12 * plus.abs().max(1.0) {
            warnings.push(SymbolWarning::NotEven { k, plus, minus });
            break;
        }
    }
    symbol.alpha = tail_slope(&symbol, 10.0, 100.0).unwrap_or(f64::NAN);
    Ok(ParsedSymbol { symbol, warnings })
}

/// Log-log slope of m over [lo, hi].
pub(crate) fn tail_slope(sym: &DispersionSymbol, lo: f64, hi: f64) -> Option<f64> {
    let n = 16;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..n {
        let k = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let m = sym.eval(k).ok()?;
        if m <= 0.0 {
            return None;
        }
        xs.push(k.ln());
        ys.push(m.ln());
    }
    crate::numerics::ls_slope(&xs, &ys)
}

/// Symbol declaration as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Builtin {
        name: String,
        builtin: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    Expr {
        name: String,
        expr: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
}

impl SymbolSpec {
    pub fn builtin(name: &str) -> Self {
        Self::Builtin {
            name: name.into(),
            builtin: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn fractional(alpha: f64) -> Self {
        Self::Builtin {
            name: "fractional".into(),
            builtin: "fractional".into(),
            params: BTreeMap::from([("alpha".to_string(), alpha)]),
        }
    }

    /// Builds the symbol; warnings from parsed expressions are returned alongside.
    pub fn resolve(&self) -> Result<ParsedSymbol> {
        match self {
            Self::Builtin {
                name,
                builtin,
                params,
            } => {
                let b = Builtin::from_name(builtin, params.get("alpha").copied())?;
                Ok(ParsedSymbol {
                    symbol: DispersionSymbol::builtin(b).with_name(name.clone()),
                    warnings: Vec::new(),
                })
            }
            Self::Expr { name, expr, params } => {
                let mut parsed = parse_symbol(expr, params)?;
                parsed.symbol = parsed.symbol.with_name(name.clone());
                Ok(parsed)
            }
        }
    }
}
