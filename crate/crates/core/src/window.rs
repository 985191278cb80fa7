//! Named analytic windows, evaluated on the periodic representative in `[-L/2, L/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::grid::{GridSpec, SampledFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Window {
    /// Indicator of `[0, width)`.
    Box { width: f64 },
    /// Triangle of height 1 supported on `[-width/2, width/2]`.
    Hat { width: f64 },
    /// `exp(-π x²/σ²)`.
    Gauss { sigma: f64 },
    /// `(1 + cos(2πx/width))/2` on `[-width/2, width/2]`.
    RaisedCosine { width: f64 },
}

impl Window {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Window::Box { width } => {
                if (0.0..width).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Window::Hat { width } => (1.0 - x.abs() / (width / 2.0)).max(0.0),
            Window::Gauss { sigma } => (-PI * x * x / (sigma * sigma)).exp(),
            Window::RaisedCosine { width } => {
                if x.abs() <= width / 2.0 {
                    0.5 * (1.0 + (2.0 * PI * x / width).cos())
                } else {
                    0.0
                }
            }
        }
    }

    fn parameter(&self) -> f64 {
        match *self {
            Window::Box { width } | Window::Hat { width } | Window::RaisedCosine { width } => width,
            Window::Gauss { sigma } => sigma,
        }
    }

    /// Samples the window on `grid`; rejects non-positive parameters and windows
    /// that vanish on every sample.
    pub fn sample(&self, grid: GridSpec) -> Result<SampledFunction> {
        let p = self.parameter();
        if !(p > 0.0) || !p.is_finite() {
            return Err(GaborError::Parse(format!("window parameter must be positive: {self}")));
        }
        let values = (0..grid.len())
            .map(|l| self.eval(grid.centered_position(l)).into())
            .collect();
        let f = SampledFunction::new(grid, values)?;
        if f.is_zero() {
            return Err(GaborError::ZeroWindow);
        }
        Ok(f)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Box { width } => write!(f, "box:{width}"),
            Window::Hat { width } => write!(f, "hat:{width}"),
            Window::Gauss { sigma } => write!(f, "gauss:{sigma}"),
            Window::RaisedCosine { width } => write!(f, "raised-cosine:{width}"),
        }
    }
}

impl FromStr for Window {
    type Err = GaborError;

    /// Parses `NAME:PARAM`, e.g. `gauss:0.6` or `hat:2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once(':')
            .ok_or_else(|| GaborError::Parse(format!("expected NAME:PARAM, got {s:?}")))?;
        let p: f64 = param
            .trim()
            .parse()
            .map_err(|_| GaborError::Parse(format!("bad window parameter in {s:?}")))?;
        match name.trim() {
            "box" => Ok(Window::Box { width: p }),
            "hat" => Ok(Window::Hat { width: p }),
            "gauss" | "gaussian" => Ok(Window::Gauss { sigma: p }),
            "raised-cosine" | "raised_cosine" | "hann" => Ok(Window::RaisedCosine { width: p }),
            other => Err(GaborError::Parse(format!("unknown window {other:?}"))),
        }
    }
}
