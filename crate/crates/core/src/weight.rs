//! Submultiplicative and moderate weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

const TABLE_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `(1 + |x|)^exponent`.
    Polynomial { exponent: f64 },
    /// Values tabulated at fixed offsets.
    Table { offsets: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum WeightRole {
    /// The algebra weight `w`. `grs` records whether the Gelfand-Raikov-Shilov
    /// condition holds, which makes the weight admissible together with `w(0) = 1`.
    Submultiplicative { grs: bool },
    /// A `w`-moderate weight `v` with moderation constant `C_v`.
    Moderate { c_v: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub role: WeightRole,
}

impl WeightSpec {
    /// Polynomial submultiplicative weight `(1+|x|)^t`, `t ≥ 0`.
    pub fn polynomial(exponent: f64) -> Result<Self> {
        if !(exponent >= 0.0) || !exponent.is_finite() {
            return Err(GaborError::InvalidWeight(format!(
                "submultiplicative polynomial weight needs exponent >= 0, got {exponent}"
            )));
        }
        Ok(Self {
            kind: WeightKind::Polynomial { exponent },
            // polynomial weights grow subexponentially
            role: WeightRole::Submultiplicative { grs: true },
        })
    }

    /// The constant weight `w ≡ 1`.
    pub fn unit() -> Self {
        Self::polynomial(0.0).expect("zero exponent is valid")
    }

    /// Polynomial moderate weight `(1+|x|)^t` with any real `t`.
    pub fn moderate_polynomial(exponent: f64, c_v: f64) -> Result<Self> {
        if !exponent.is_finite() || !(c_v > 0.0) {
            return Err(GaborError::InvalidWeight(format!(
                "moderate weight needs finite exponent and C_v > 0, got {exponent}, {c_v}"
            )));
        }
        Ok(Self {
            kind: WeightKind::Polynomial { exponent },
            role: WeightRole::Moderate { c_v },
        })
    }

    pub fn table(offsets: Vec<f64>, values: Vec<f64>, role: WeightRole) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != values.len() {
            return Err(GaborError::InvalidWeight(
                "table needs matching, nonempty offset and value lists".into(),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(GaborError::InvalidWeight("table values must be positive".into()));
        }
        Ok(Self {
            kind: WeightKind::Table { offsets, values },
            role,
        })
    }

    /// Reinterprets the weight as a `w`-moderate weight with constant `c_v`.
    pub fn as_moderate(&self, c_v: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            role: WeightRole::Moderate { c_v },
        }
    }

    /// `1/v`, moderate with the same constant.
    pub fn reciprocal(&self) -> Self {
        let kind = match &self.kind {
            WeightKind::Polynomial { exponent } => WeightKind::Polynomial { exponent: -exponent },
            WeightKind::Table { offsets, values } => WeightKind::Table {
                offsets: offsets.clone(),
                values: values.iter().map(|v| 1.0 / v).collect(),
            },
        };
        let c_v = match self.role {
            WeightRole::Moderate { c_v } => c_v,
            WeightRole::Submultiplicative { .. } => 1.0,
        };
        Self {
            kind,
            role: WeightRole::Moderate { c_v },
        }
    }

    /// Moderation constant `C_v`; 1 for submultiplicative weights.
    pub fn moderation_constant(&self) -> f64 {
        match self.role {
            WeightRole::Moderate { c_v } => c_v,
            WeightRole::Submultiplicative { .. } => 1.0,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.kind, WeightKind::Polynomial { exponent } if exponent == 0.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.kind {
            WeightKind::Polynomial { exponent } => Ok((1.0 + x.abs()).powf(*exponent)),
            WeightKind::Table { offsets, values } => offsets
                .iter()
                .position(|o| (o - x).abs() <= TABLE_MATCH_TOL * x.abs().max(1.0))
                .map(|i| values[i])
                .ok_or(GaborError::OutOfTable(x)),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::Polynomial { exponent } => write!(f, "poly:{exponent}"),
            WeightKind::Table { offsets, .. } => write!(f, "table[{}]", offsets.len()),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = GaborError;

    /// Parses `poly:t`; negative `t` yields a moderate weight with `C_v = 1`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s.split_once(':').unwrap_or((s, "0"));
        match name.trim() {
            "poly" | "polynomial" => {
                let t: f64 = param
                    .trim()
                    .parse()
                    .map_err(|_| GaborError::Parse(format!("bad weight exponent in {s:?}")))?;
                if t >= 0.0 {
                    Self::polynomial(t)
                } else {
                    Self::moderate_polynomial(t, 1.0)
                }
            }
            "unit" | "one" => Ok(Self::unit()),
            other => Err(GaborError::Parse(format!("unknown weight {other:?}"))),
        }
    }
}

/// Outcome of an exhaustive pairwise submultiplicativity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmultiplicativityReport {
    /// Largest `w(x+y) / (w(x)w(y))` over checked pairs.
    pub worst_ratio: f64,
    pub worst_pair: (f64, f64),
    pub pairs_checked: usize,
    /// Pairs whose sum is not tabulated.
    pub pairs_skipped: usize,
    pub violations: Vec<(f64, f64, f64)>,
}

impl SubmultiplicativityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `w(x+y) ≤ w(x)w(y)` on every ordered pair of `offsets`.
pub fn check_submultiplicative(w: &WeightSpec, offsets: &[f64]) -> Result<SubmultiplicativityReport> {
    if offsets.is_empty() {
        return Err(GaborError::InvalidWeight("no offsets to check".into()));
    }
    let mut report = SubmultiplicativityReport {
        worst_ratio: f64::NEG_INFINITY,
        worst_pair: (0.0, 0.0),
        pairs_checked: 0,
        pairs_skipped: 0,
        violations: Vec::new(),
    };
    for &x in offsets {
        for &y in offsets {
            let Ok(sum) = w.eval(x + y) else {
                report.pairs_skipped += 1;
                continue;
            };
            let ratio = sum / (w.eval(x)? * w.eval(y)?);
            report.pairs_checked += 1;
            if ratio > report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_pair = (x, y);
            }
            if ratio > 1.0 + 1e-12 {
                report.violations.push((x, y, ratio));
            }
        }
    }
    Ok(report)
}

/// Smallest empirical `C_v` with `v(x+y) ≤ C_v·w(x)·v(y)` over all pairs of `offsets`.
pub fn estimate_moderation_constant(v: &WeightSpec, w: &WeightSpec, offsets: &[f64]) -> Result<f64> {
    if offsets.is_empty() {
        return Err(GaborError::InvalidWeight("no offsets to check".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for &x in offsets {
        for &y in offsets {
            let Ok(sum) = v.eval(x + y) else { continue };
            best = best.max(sum / (w.eval(x)? * v.eval(y)?));
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(GaborError::InvalidWeight("no pair had a tabulated sum".into()))
    }
}
