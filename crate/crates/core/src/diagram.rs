//! Stability diagram of the fractional family `m(k) = 1 + |k|^alpha` in the
//! (k, alpha) plane: the sign of ind on a grid and the curves ind = 0.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionSymbol;
use crate::error::{Error, Result};
use crate::indices::{critical_wavenumber, i_kdv, ind};
use crate::numerics::{find_root, Bracket};
use crate::stokes::EquationKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSpec {
    pub alpha_range: (f64, f64),
    /// Number of alpha rows, endpoints included.
    pub alpha_steps: usize,
    /// Open at the left end: `k_steps` points `k_lo + (k_hi - k_lo) j / k_steps`,
    /// `j = 1..=k_steps`.
    pub k_range: (f64, f64),
    pub k_steps: usize,
    pub kinds: Vec<EquationKind>,
}

impl Default for DiagramSpec {
    fn default() -> Self {
        Self {
            alpha_range: (2.0, 6.0),
            alpha_steps: 41,
            k_range: (0.0, 3.0),
            k_steps: 300,
            kinds: vec![EquationKind::Bbm, EquationKind::Boussinesq],
        }
    }
}

impl DiagramSpec {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.alpha_range;
        let (k0, k1) = self.k_range;
        if !(a0.is_finite() && a1.is_finite() && a1 >= a0) {
            return Err(Error::InvalidInput(format!(
                "alpha range [{a0}, {a1}] is empty"
            )));
        }
        if !(k0 >= 0.0 && k1 > k0 && k1.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "k range ({k0}, {k1}] is empty"
            )));
        }
        if self.alpha_steps == 0 || self.k_steps == 0 {
            return Err(Error::InvalidInput(
                "diagram steps must be at least 1".into(),
            ));
        }
        if self.kinds.is_empty() {
            return Err(Error::InvalidInput(
                "no equation selected for the diagram".into(),
            ));
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        let (a0, a1) = self.alpha_range;
        if self.alpha_steps == 1 || a0 == a1 {
            return vec![a0];
        }
        let last = (self.alpha_steps - 1) as f64;
        (0..self.alpha_steps)
            .map(|i| a0 + (a1 - a0) * i as f64 / last)
            .collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        let (k0, k1) = self.k_range;
        (1..=self.k_steps)
            .map(|j| k0 + (k1 - k0) * j as f64 / self.k_steps as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramCell {
    pub alpha: f64,
    pub kind: EquationKind,
    pub k: f64,
    pub ind: f64,
    /// -1 unstable, 1 stable, 0 degenerate.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelPoint {
    pub alpha: f64,
    /// Smallest k with ind = 0 in the range, if any.
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCurve {
    pub kind: EquationKind,
    pub points: Vec<LevelPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityDiagram {
    pub spec: DiagramSpec,
    pub cells: Vec<DiagramCell>,
    pub curves: Vec<LevelCurve>,
}

fn sign_of(v: f64) -> i8 {
    if v.is_nan() || v.abs() <= crate::indices::DEGENERACY_TOL {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Cells and level points of one alpha row.
type Row = (Vec<DiagramCell>, Vec<(EquationKind, LevelPoint)>);

pub fn stability_diagram(spec: &DiagramSpec) -> Result<StabilityDiagram> {
    spec.validate()?;
    let alphas = spec.alphas();
    let ks = spec.ks();
    let k_lo = ks[0];
    let k_hi = spec.k_range.1;
    let rows: Vec<Row> = alphas
        .par_iter()
        .map(|&alpha| {
            let sym = DispersionSymbol::fractional(alpha);
            let mut cells = Vec::with_capacity(spec.kinds.len() * ks.len());
            let mut level = Vec::with_capacity(spec.kinds.len());
            for &kind in &spec.kinds {
                for &k in &ks {
                    let v = ind(kind, &sym, k)?.ind;
                    cells.push(DiagramCell {
                        alpha,
                        kind,
                        k,
                        ind: v,
                        sign: sign_of(v),
                    });
                }
                level.push((
                    kind,
                    LevelPoint {
                        alpha,
                        k: critical_wavenumber(kind, &sym, (k_lo, k_hi)),
                    },
                ));
            }
            Ok((cells, level))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut curves: Vec<LevelCurve> = spec
        .kinds
        .iter()
        .map(|&kind| LevelCurve {
            kind,
            points: Vec::new(),
        })
        .collect();
    for (row_cells, row_level) in rows {
        cells.extend(row_cells);
        for (kind, point) in row_level {
            if let Some(c) = curves.iter_mut().find(|c| c.kind == kind) {
                c.points.push(point);
            }
        }
    }
    Ok(StabilityDiagram {
        spec: spec.clone(),
        cells,
        curves,
    })
}

impl StabilityDiagram {
    pub fn curve(&self, kind: EquationKind) -> Option<&LevelCurve> {
        self.curves.iter().find(|c| c.kind == kind)
    }

    /// Critical wave number of `kind` on the grid row nearest `alpha`.
    pub fn critical(&self, kind: EquationKind, alpha: f64) -> Option<f64> {
        self.curve(kind)?
            .points
            .iter()
            .min_by(|a, b| (a.alpha - alpha).abs().total_cmp(&(b.alpha - alpha).abs()))
            .and_then(|p| p.k)
    }

    /// Level curves as an SVG document, k horizontal and alpha vertical.
    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (640.0, 480.0, 50.0);
        let (k0, k1) = self.spec.k_range;
        let (a0, a1) = self.spec.alpha_range;
        let a_span = if a1 > a0 { a1 - a0 } else { 1.0 };
        let x = |k: f64| pad + (k - k0) / (k1 - k0) * (w - 2.0 * pad);
        let y = |a: f64| h - pad - (a - a0) / a_span * (h - 2.0 * pad);
        let colors = |kind: EquationKind| match kind {
            EquationKind::Bbm => "#1f77b4",
            EquationKind::Boussinesq => "#d62728",
            EquationKind::Kdv => "#2ca02c",
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        for i in 0..=5 {
            let k = k0 + (k1 - k0) * i as f64 / 5.0;
            let a = a0 + a_span * i as f64 / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
                x(k),
                h - pad + 18.0,
                trim(k)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{}</text>"#,
                pad - 6.0,
                y(a) + 4.0,
                trim(a)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">k</text>"#,
            w / 2.0,
            h - 10.0
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" font-size="14" text-anchor="middle">alpha</text>"#,
            h / 2.0
        );
        for (i, curve) in self.curves.iter().enumerate() {
            let pts: Vec<String> = curve
                .points
                .iter()
                .filter_map(|p| p.k.map(|k| format!("{:.2},{:.2}", x(k), y(p.alpha))))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                    colors(curve.kind),
                    pts.join(" ")
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{}">ind_{} = 0</text>"#,
                w - pad - 110.0,
                pad + 18.0 + 16.0 * i as f64,
                colors(curve.kind),
                curve.kind
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn trim(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

/// The exponent at which the fractional KdV index `3 - 2^(1+alpha) + alpha`
/// changes sign, found on the pipeline's own index.
pub fn kdv_fractional_threshold() -> Result<f64> {
    let f = |alpha: f64| i_kdv(&DispersionSymbol::fractional(alpha), 1.0).unwrap_or(f64::NAN);
    Ok(find_root(f, Bracket::new(f, 0.5, 1.5)?, 1e-15))
}
