//! Multi-window Gabor frames: frame operator, bounds, inversion, dual atoms,
//! reconstruction and the refinement diagnostic for dual windows.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::amalgam::{amalgam_norm, AmalgamParams, GaborCoefficients};
use crate::error::{GaborError, Result};
use crate::gabor::{analysis, regularize, restrict, synthesis, walnut_operator, GaborSystem};
use crate::grid::{inner_product_raw, pairwise_sum, GridSpec, SampledFunction};
use crate::lattice::{LatticeParams, TFLattice};
use crate::shift::{
    hermitian_extremes, modulus_of_continuity, neumann_inverse, NeumannOptions, NeumannReport, ShiftOperator,
    CONTINUITY_RATIO_THRESHOLD,
};
use crate::window::Window;

/// Relative `‖S − S*‖` above which the frame operator is rejected.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;
/// `A ≤ FRAME_GATE·B` counts as "not a frame".
pub const FRAME_GATE: f64 = 1e-10;
/// Largest accepted residual of `S^{-1}S − I` and `SS^{-1} − I`.
pub const IDENTITY_TOL: f64 = 1e-8;

/// A finite union of Gabor systems sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWindowSystem {
    systems: Vec<GaborSystem>,
}

impl MultiWindowSystem {
    pub fn new(systems: Vec<GaborSystem>) -> Result<Self> {
        let Some(first) = systems.first() else {
            return Err(GaborError::InvalidLattice(
                "a multi-window system needs at least one window".into(),
            ));
        };
        if systems.iter().any(|s| s.grid() != first.grid()) {
            return Err(GaborError::GridMismatch);
        }
        Ok(Self { systems })
    }

    pub fn single(system: GaborSystem) -> Self {
        Self { systems: vec![system] }
    }

    /// Samples each window on `grid` and pairs it with the matching lattice.
    pub fn from_windows(grid: GridSpec, windows: &[Window], lattices: &[LatticeParams]) -> Result<Self> {
        if windows.len() != lattices.len() {
            return Err(GaborError::IndexMismatch(format!(
                "{} windows but {} lattices",
                windows.len(),
                lattices.len()
            )));
        }
        let systems = windows
            .iter()
            .zip(lattices)
            .map(|(w, p)| GaborSystem::new(w.sample(grid)?, TFLattice::new(grid, p.alpha, p.beta)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(systems)
    }

    pub fn systems(&self) -> &[GaborSystem] {
        &self.systems
    }

    pub fn grid(&self) -> &GridSpec {
        self.systems[0].grid()
    }

    pub fn lattices(&self) -> Vec<TFLattice> {
        self.systems.iter().map(|s| *s.lattice()).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.systems.iter().map(|s| s.lattice().size()).sum()
    }
}

/// `S = Σ_i S_{g^i, Λ^i}` in Walnut form.
pub fn multi_frame_operator(sys: &MultiWindowSystem) -> Result<ShiftOperator> {
    let mut total = ShiftOperator::zero(*sys.grid());
    for s in sys.systems() {
        total = total.add(&walnut_operator(s.window(), s.window(), s.lattice())?)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub condition_number: f64,
}

/// Extreme eigenvalues of a self-adjoint frame operator.
pub fn frame_bounds(s: &ShiftOperator) -> Result<FrameBounds> {
    let defect = s.self_adjoint_defect();
    if defect > SELF_ADJOINT_TOL {
        return Err(GaborError::NotSelfAdjoint(defect));
    }
    let (lower, upper) = hermitian_extremes(s)?;
    if !(lower > FRAME_GATE * upper) {
        return Err(GaborError::NotAFrame { lower, upper });
    }
    Ok(FrameBounds {
        lower,
        upper,
        condition_number: upper / lower,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameInverse {
    pub inverse: ShiftOperator,
    pub bounds: FrameBounds,
    pub report: NeumannReport,
}

/// `S^{-1}` by the Neumann series for `(S²)^{-1}S`, with a two-sided identity check.
pub fn invert_frame_operator(s: &ShiftOperator, opts: &NeumannOptions) -> Result<FrameInverse> {
    let bounds = frame_bounds(s)?;
    let out = neumann_inverse(s, bounds.lower * bounds.lower, bounds.upper * bounds.upper, opts)?;
    let residual = out.report.residual();
    if !(residual <= IDENTITY_TOL) {
        return Err(GaborError::IdentityCheckFailed {
            residual,
            tol: IDENTITY_TOL,
        });
    }
    Ok(FrameInverse {
        inverse: out.inverse,
        bounds,
        report: out.report,
    })
}

/// Dual atoms `S^{-1}π(λ)g^i`, stored per system in row-major `[k][q]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAtomSet {
    lattices: Vec<TFLattice>,
    atoms: Vec<Vec<SampledFunction>>,
}

impl DualAtomSet {
    pub fn new(lattices: Vec<TFLattice>, atoms: Vec<Vec<SampledFunction>>) -> Result<Self> {
        if lattices.len() != atoms.len() {
            return Err(GaborError::IndexMismatch(format!(
                "{} lattices but {} atom groups",
                lattices.len(),
                atoms.len()
            )));
        }
        for (i, (lat, group)) in lattices.iter().zip(&atoms).enumerate() {
            if group.len() != lat.size() {
                return Err(GaborError::IndexMismatch(format!(
                    "system {i}: expected {} atoms, got {}",
                    lat.size(),
                    group.len()
                )));
            }
            if group.iter().any(|a| a.grid() != lat.grid()) {
                return Err(GaborError::GridMismatch);
            }
        }
        Ok(Self { lattices, atoms })
    }

    pub fn lattices(&self) -> &[TFLattice] {
        &self.lattices
    }

    pub fn system_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self, i: usize) -> &[SampledFunction] {
        &self.atoms[i]
    }

    pub fn get(&self, i: usize, k: usize, q: usize) -> &SampledFunction {
        &self.atoms[i][k * self.lattices[i].freq_nodes() + q]
    }

    pub fn len(&self) -> usize {
        self.atoms.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, sys: &MultiWindowSystem) -> Result<()> {
        if self.lattices != sys.lattices() {
            return Err(GaborError::IndexMismatch(
                "dual atoms do not match the system's lattices".into(),
            ));
        }
        Ok(())
    }
}

pub fn dual_atoms(sys: &MultiWindowSystem, s_inv: &ShiftOperator) -> Result<DualAtomSet> {
    if s_inv.grid() != sys.grid() {
        return Err(GaborError::GridMismatch);
    }
    let atoms = sys
        .systems()
        .iter()
        .map(|s| {
            let lat = s.lattice();
            (0..lat.size())
                .into_par_iter()
                .map(|idx| s_inv.apply(&s.atom(idx / lat.freq_nodes(), idx % lat.freq_nodes())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DualAtomSet::new(sys.lattices(), atoms)
}

/// Per-system `max_λ ‖g̃_λ − π(λ)g̃_0‖_∞ / ‖g̃_0‖_∞`.
///
/// Zero up to round-off for a single window; for several windows this only reports
/// how far each sub-system is from commuting with the joint inverse.
pub fn commutation_defects(sys: &MultiWindowSystem, duals: &DualAtomSet) -> Result<Vec<f64>> {
    duals.check(sys)?;
    Ok(sys
        .systems()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let lat = s.lattice();
            let base = duals.get(i, 0, 0);
            let scale = base.sup_norm();
            let worst = (0..lat.size())
                .into_par_iter()
                .map(|idx| {
                    let p = lat.point(idx / lat.freq_nodes(), idx % lat.freq_nodes());
                    let shifted = base
                        .translate_samples(p.shift_samples())
                        .modulate_index(p.frequency_index());
                    let atom = &duals.atoms(i)[idx];
                    atom.values()
                        .iter()
                        .zip(shifted.values())
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            if scale > 0.0 {
                worst / scale
            } else {
                worst
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationMode {
    Raw,
    Fejer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
    pub amalgam: f64,
    /// `l2 / ‖f‖₂`, or the absolute error when `f = 0`.
    pub relative_l2: f64,
}

impl ErrorNorms {
    fn measure(f: &SampledFunction, approx: &SampledFunction, params: &AmalgamParams) -> Result<Self> {
        let diff = f.sub(approx)?;
        let l2 = diff.l2_norm();
        let norm = f.l2_norm();
        Ok(Self {
            l2,
            linf: diff.sup_norm(),
            amalgam: amalgam_norm(&diff, params)?,
            relative_l2: if norm > 0.0 { l2 / norm } else { l2 },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `Σ ⟨f, g̃_λ⟩ g_λ`.
    pub primal: SampledFunction,
    /// `Σ ⟨f, g_λ⟩ g̃_λ`.
    pub mirrored: SampledFunction,
    pub primal_error: ErrorNorms,
    pub mirrored_error: ErrorNorms,
}

/// Coefficients `⟨f, a⟩` against each atom, in atom order.
fn coefficients_against(
    f: &SampledFunction,
    atoms: &[SampledFunction],
    lattice: TFLattice,
) -> Result<GaborCoefficients> {
    let step = f.grid().step();
    let entries = atoms
        .par_iter()
        .map(|a| inner_product_raw(f.values(), a.values()) * step)
        .collect();
    GaborCoefficients::new(lattice, entries)
}

fn truncated(c: &GaborCoefficients, n_max: usize, m_max: usize, mode: SummationMode) -> Result<GaborCoefficients> {
    match mode {
        SummationMode::Raw => restrict(c, n_max, m_max),
        SummationMode::Fejer => regularize(c, n_max, m_max),
    }
}

/// `Σ_λ c_λ a_λ` with rows summed in parallel and combined in index order.
fn expand(c: &GaborCoefficients, atoms: &[SampledFunction], grid: GridSpec) -> SampledFunction {
    let q_count = c.lattice().freq_nodes();
    let n = grid.len();
    let rows: Vec<Vec<Complex64>> = (0..c.lattice().time_nodes())
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![Complex64::default(); n];
            for (q, coef) in c.row(k).iter().enumerate() {
                if coef.re == 0.0 && coef.im == 0.0 {
                    continue;
                }
                for (a, v) in acc.iter_mut().zip(atoms[k * q_count + q].values()) {
                    *a += coef * v;
                }
            }
            acc
        })
        .collect();
    let values = (0..n)
        .map(|l| pairwise_sum(&rows.iter().map(|r| r[l]).collect::<Vec<_>>()))
        .collect();
    SampledFunction::from_raw(grid, values)
}

/// Both dual expansions of `f` restricted to `|k| ≤ N`, `|j| ≤ M` per system.
pub fn reconstruct(
    sys: &MultiWindowSystem,
    duals: &DualAtomSet,
    f: &SampledFunction,
    n_max: usize,
    m_max: usize,
    mode: SummationMode,
    params: &AmalgamParams,
) -> Result<Reconstruction> {
    duals.check(sys)?;
    if f.grid() != sys.grid() {
        return Err(GaborError::GridMismatch);
    }
    let grid = *sys.grid();
    let mut primal = SampledFunction::zeros(grid);
    let mut mirrored = SampledFunction::zeros(grid);
    for (i, s) in sys.systems().iter().enumerate() {
        let lat = *s.lattice();
        let c_dual = coefficients_against(f, duals.atoms(i), lat)?;
        primal = primal.add(&synthesis(s, &truncated(&c_dual, n_max, m_max, mode)?)?)?;
        let c = analysis(s, f)?;
        mirrored = mirrored.add(&expand(&truncated(&c, n_max, m_max, mode)?, duals.atoms(i), grid))?;
    }
    Ok(Reconstruction {
        primal_error: ErrorNorms::measure(f, &primal, params)?,
        mirrored_error: ErrorNorms::measure(f, &mirrored, params)?,
        primal,
        mirrored,
    })
}

/// `(N, M)` covering every lattice node of every system.
pub fn full_range(sys: &MultiWindowSystem) -> (usize, usize) {
    sys.systems().iter().fold((0, 0), |(n, m), s| {
        let lat = s.lattice();
        (n.max(lat.time_nodes() / 2), m.max(lat.freq_nodes() / 2))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualContinuityRow {
    pub window: usize,
    /// `ω(h)` of `g̃^i_0` at each level, coarsest first.
    pub moduli: Vec<f64>,
    /// `ω(h/2) / ω(h)` between consecutive levels.
    pub ratios: Vec<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualContinuityTable {
    pub samples_per_unit: Vec<usize>,
    pub step_sizes: Vec<f64>,
    pub rows: Vec<DualContinuityRow>,
}

/// Recomputes the dual windows `S^{-1}g^i` on each refined grid and tabulates their
/// discrete modulus of continuity.
pub fn continuity_diagnostic(
    period: usize,
    windows: &[Window],
    lattices: &[LatticeParams],
    levels: &[usize],
    opts: &NeumannOptions,
) -> Result<DualContinuityTable> {
    let mut moduli = vec![Vec::with_capacity(levels.len()); windows.len()];
    for &s in levels {
        let grid = GridSpec::new(period, s)?;
        let sys = MultiWindowSystem::from_windows(grid, windows, lattices)?;
        let inv = invert_frame_operator(&multi_frame_operator(&sys)?, opts)?;
        for (i, sub) in sys.systems().iter().enumerate() {
            moduli[i].push(modulus_of_continuity(inv.inverse.apply(sub.window())?.values()));
        }
    }
    let rows = moduli
        .into_iter()
        .enumerate()
        .map(|(window, moduli)| {
            let ratios: Vec<f64> = moduli
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .collect();
            let flagged = ratios.iter().any(|&r| r > CONTINUITY_RATIO_THRESHOLD);
            DualContinuityRow {
                window,
                moduli,
                ratios,
                flagged,
            }
        })
        .collect();
    Ok(DualContinuityTable {
        samples_per_unit: levels.to_vec(),
        step_sizes: levels.iter().map(|&s| 1.0 / s as f64).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameInequalityRow {
    pub norm_sq: f64,
    /// `Σ_i Σ_λ |⟨f, g^i_λ⟩|²`.
    pub energy: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameInequalityReport {
    pub bounds: FrameBounds,
    pub rows: Vec<FrameInequalityRow>,
    pub violations: usize,
}

/// Checks `A‖f‖² ≤ Σ|⟨f, g_λ⟩|² ≤ B‖f‖²` with slack `10⁻¹⁰·B‖f‖²`.
pub fn frame_inequality_check(
    sys: &MultiWindowSystem,
    bounds: &FrameBounds,
    batch: &[SampledFunction],
) -> Result<FrameInequalityReport> {
    let rows = batch
        .par_iter()
        .map(|f| {
            let mut energy = 0.0;
            for s in sys.systems() {
                energy += analysis(s, f)?.energy();
            }
            let norm_sq = f.l2_norm().powi(2);
            let lower = bounds.lower * norm_sq;
            let upper = bounds.upper * norm_sq;
            let slack = 1e-10 * upper;
            Ok(FrameInequalityRow {
                norm_sq,
                energy,
                lower,
                upper,
                holds: lower - slack <= energy && energy <= upper + slack,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(FrameInequalityReport {
        bounds: *bounds,
        rows,
        violations,
    })
}
