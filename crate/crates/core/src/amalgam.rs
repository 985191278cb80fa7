//! Wiener amalgam norms `W(L^p, L^q_v)` and the coefficient spaces `S^{p,q}_v`.
//!
//! Local norms use the same Riemann quadrature as [`inner_product`](crate::grid::inner_product):
//! `‖f‖_{L^p([k,k+1))} = (Δ Σ |f|^p)^{1/p}` over the `s` samples of the unit cell,
//! and the max for `p = ∞`. Cells and time nodes are weighted by `v` at their
//! canonical periodic position in `(-L/2, L/2]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::grid::{pairwise_sum, signed_index, SampledFunction};
use crate::lattice::TFLattice;
use crate::weight::WeightSpec;

/// An exponent in `[1, ∞]`; `∞` is kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(GaborError::UnsupportedExponent(p))
        }
    }

    /// Hölder conjugate `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(&self) -> Exponent {
        match *self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `(Σ x^p)^{1/p}` or `max x` for a list of nonnegative magnitudes.
    pub(crate) fn combine(&self, magnitudes: &[f64]) -> f64 {
        match *self {
            Exponent::Infinity => magnitudes.iter().copied().fold(0.0, f64::max),
            Exponent::Finite(1.0) => pairwise_sum(magnitudes),
            Exponent::Finite(p) => {
                let pw: Vec<f64> = magnitudes.iter().map(|m| m.powf(p)).collect();
                pairwise_sum(&pw).powf(1.0 / p)
            }
        }
    }

    /// Discrete `L^p` norm of samples with quadrature weight `step`.
    pub(crate) fn local_norm(&self, samples: &[Complex64], step: f64) -> f64 {
        match *self {
            Exponent::Infinity => samples.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Exponent::Finite(p) => {
                let pw: Vec<f64> = samples.iter().map(|v| v.norm().powf(p)).collect();
                (step * pairwise_sum(&pw)).powf(1.0 / p)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = GaborError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| GaborError::Parse(format!("bad exponent {s:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::new(p).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Exponents and weights of an amalgam space `W(L^p, L^q_v)` with algebra weight `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmalgamParams {
    pub p: Exponent,
    pub q: Exponent,
    pub v: WeightSpec,
    pub w: WeightSpec,
}

impl AmalgamParams {
    pub fn new(p: Exponent, q: Exponent, v: WeightSpec, w: WeightSpec) -> Self {
        Self { p, q, v, w }
    }

    /// Unweighted `W(L^p, L^q)`.
    pub fn unweighted(p: Exponent, q: Exponent) -> Self {
        Self::new(p, q, WeightSpec::unit().as_moderate(1.0), WeightSpec::unit())
    }

    /// Köthe dual space `W(L^{p'}, L^{q'}_{1/v})`.
    pub fn dual(&self) -> Self {
        Self {
            p: self.p.conjugate(),
            q: self.q.conjugate(),
            v: self.v.reciprocal(),
            w: self.w.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellNorm {
    /// Left endpoint of the unit cell (canonical periodic position).
    pub k: i64,
    pub local_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub norm: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub weight: String,
    pub cells: Vec<CellNorm>,
}

/// `‖f‖_{W(L^p, L^q_v)}` with the per-cell breakdown.
pub fn amalgam_report(f: &SampledFunction, params: &AmalgamParams) -> Result<NormReport> {
    let grid = f.grid();
    let s = grid.samples_per_unit();
    let step = grid.step();
    let mut cells = Vec::with_capacity(grid.period());
    let mut weighted = Vec::with_capacity(grid.period());
    for (c, chunk) in f.values().chunks(s).enumerate() {
        let k = signed_index(c, grid.period());
        let local = params.p.local_norm(chunk, step);
        weighted.push(local * params.v.eval(k as f64)?);
        cells.push(CellNorm { k, local_norm: local });
    }
    Ok(NormReport {
        norm: params.q.combine(&weighted),
        p: params.p,
        q: params.q,
        weight: params.v.to_string(),
        cells,
    })
}

/// `‖f‖_{W(L^p, L^q_v)}`.
pub fn amalgam_norm(f: &SampledFunction, params: &AmalgamParams) -> Result<f64> {
    amalgam_report(f, params).map(|r| r.norm)
}

/// Pairing `⟨f, g⟩` together with the Hölder-type bound against the Köthe dual norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KothePairing {
    pub pairing: Complex64,
    pub f_norm: f64,
    pub g_dual_norm: f64,
    /// `|⟨f,g⟩| / (‖f‖·‖g‖')`, 0 when either side vanishes.
    pub constant: f64,
}

impl KothePairing {
    pub fn holds(&self, slack: f64) -> bool {
        self.pairing.norm() <= (1.0 + slack) * self.f_norm * self.g_dual_norm
    }
}

pub fn kothe_pairing(f: &SampledFunction, g: &SampledFunction, params: &AmalgamParams) -> Result<KothePairing> {
    let pairing = crate::grid::inner_product(f, g)?;
    let f_norm = amalgam_norm(f, params)?;
    let g_dual_norm = amalgam_norm(g, &params.dual())?;
    let denom = f_norm * g_dual_norm;
    let constant = if denom > 0.0 { pairing.norm() / denom } else { 0.0 };
    Ok(KothePairing {
        pairing,
        f_norm,
        g_dual_norm,
        constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / (norm of the untransformed input)`; 1 when both vanish.
    pub ratio: f64,
    pub holds: bool,
}

/// Checks `‖T_x f‖ ≤ C_v·w(x)·‖f‖`.
///
/// For non-integer `x` each unit cell of `T_x f` straddles two cells of `f`, so the
/// bound becomes `C_v (w(⌊x⌋) + w(⌈x⌉)) ‖f‖`.
pub fn translation_norm_bound_check(f: &SampledFunction, x: f64, params: &AmalgamParams) -> Result<BoundReport> {
    let shifted = crate::grid::translate(f, x)?;
    let lhs = amalgam_norm(&shifted, params)?;
    let norm = amalgam_norm(f, params)?;
    let c_v = params.v.moderation_constant();
    let factor = if x.fract() == 0.0 {
        params.w.eval(x)?
    } else {
        params.w.eval(x.floor())? + params.w.eval(x.ceil())?
    };
    let rhs = c_v * factor * norm;
    let ratio = if norm > 0.0 { lhs / norm } else { 1.0 };
    Ok(BoundReport {
        lhs,
        rhs,
        ratio,
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}

/// Checks `‖m f‖ ≤ ‖m‖_∞ ‖f‖`.
pub fn solidity_check(f: &SampledFunction, m: &SampledFunction, params: &AmalgamParams) -> Result<BoundReport> {
    let lhs = amalgam_norm(&m.mul(f)?, params)?;
    let norm = amalgam_norm(f, params)?;
    let rhs = m.sup_norm() * norm;
    Ok(BoundReport {
        lhs,
        rhs,
        ratio: if norm > 0.0 { lhs / norm } else { 1.0 },
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}

/// Gabor coefficients `c_{k,j}` on a lattice: `time_nodes × freq_nodes`, row-major in `k`.
///
/// Node `k` sits at time `kα`, node `q` at frequency `qβ`; both are periodic and
/// exposed through canonical signed indices by [`TFLattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaborCoefficients {
    lattice: TFLattice,
    entries: Vec<Complex64>,
}

impl GaborCoefficients {
    pub fn new(lattice: TFLattice, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != lattice.size() {
            return Err(GaborError::LatticeMismatch);
        }
        if let Some(bad) = entries.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(GaborError::NonFinite(bad));
        }
        Ok(Self { lattice, entries })
    }

    pub fn zeros(lattice: TFLattice) -> Self {
        Self {
            lattice,
            entries: vec![Complex64::default(); lattice.size()],
        }
    }

    pub fn lattice(&self) -> &TFLattice {
        &self.lattice
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, k: usize, q: usize) -> Complex64 {
        self.entries[k * self.lattice.freq_nodes() + q]
    }

    pub fn set(&mut self, k: usize, q: usize, value: Complex64) {
        let b = self.lattice.freq_nodes();
        self.entries[k * b + q] = value;
    }

    /// Row of frequency coefficients at time node `k`.
    pub fn row(&self, k: usize) -> &[Complex64] {
        let b = self.lattice.freq_nodes();
        &self.entries[k * b..(k + 1) * b]
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, Complex64> {
        let b = self.lattice.freq_nodes();
        self.entries.chunks_mut(b)
    }

    /// `Σ |c_λ|²`.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.entries.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&sq)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            lattice: self.lattice,
            entries: self.entries.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(GaborError::LatticeMismatch);
        }
        Ok(Self {
            lattice: self.lattice,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    /// Trigonometric polynomials `m_k(x) = Σ_j c_{k,j} e^{2πijx}` sampled on `Q_β`
    /// at grid resolution (`1/(βΔ)` points per row).
    pub fn trig_polynomials(&self) -> Vec<Vec<Complex64>> {
        let b = self.lattice.freq_nodes();
        let fft = FftPlanner::new().plan_fft_inverse(b);
        let mut rows: Vec<Vec<Complex64>> = self.entries.chunks(b).map(|r| r.to_vec()).collect();
        for row in rows.iter_mut() {
            fft.process(row);
        }
        rows
    }
}

/// `‖c‖_{S^{p,q}_v}`: the `L^p(Q_β)` norm of each `m_k`, combined over `k` in `ℓ^q_v`.
///
/// Exact for `1 < p < ∞`. For `p ∈ {1, ∞}` this is the quadrature value of the
/// trigonometric polynomial, which is the natural finite surrogate.
pub fn sequence_norm(c: &GaborCoefficients, params: &AmalgamParams) -> Result<f64> {
    let lattice = c.lattice();
    let step = lattice.grid().step();
    let polys = c.trig_polynomials();
    let weighted = polys
        .iter()
        .enumerate()
        .map(|(k, m)| Ok(params.p.local_norm(m, step) * params.v.eval(lattice.time_position(k))?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(params.q.combine(&weighted))
}
