//! Single-window Gabor analysis and synthesis on a separable lattice, partial and
//! Fejér-regularized sums, and the Walnut representation of `R_h C_g`.
//!
//! Analysis folds `f·conj(T_{kα} g)` modulo `1/β` and takes a length-`1/(βΔ)` FFT per
//! time node; synthesis is the inverse. Both agree with the direct inner-product
//! definition `c_λ = ⟨f, π(λ)g⟩` to round-off.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::amalgam::{amalgam_norm, AmalgamParams, Exponent, GaborCoefficients};
use crate::error::{GaborError, Result};
use crate::grid::{GridSpec, SampledFunction};
use crate::lattice::TFLattice;
use crate::shift::ShiftOperator;
use crate::weight::WeightSpec;

/// Walnut terms with `‖G_j‖_∞` below this fraction of the largest are dropped.
pub const WALNUT_PRUNE: f64 = 1e-14;

/// A window together with the lattice indexing its time-frequency shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborSystem {
    window: SampledFunction,
    lattice: TFLattice,
}

impl GaborSystem {
    pub fn new(window: SampledFunction, lattice: TFLattice) -> Result<Self> {
        if window.grid() != lattice.grid() {
            return Err(GaborError::GridMismatch);
        }
        if window.is_zero() {
            return Err(GaborError::ZeroWindow);
        }
        Ok(Self { window, lattice })
    }

    pub fn window(&self) -> &SampledFunction {
        &self.window
    }

    pub fn lattice(&self) -> &TFLattice {
        &self.lattice
    }

    pub fn grid(&self) -> &GridSpec {
        self.window.grid()
    }

    /// `π(λ)g` for lattice node `(k, q)`.
    pub fn atom(&self, k: usize, q: usize) -> SampledFunction {
        let p = self.lattice.point(k, q);
        self.window
            .translate_samples(p.shift_samples())
            .modulate_index(p.frequency_index())
    }
}

/// `c_λ = ⟨f, π(λ)g⟩` for every lattice point in one period.
pub fn analysis(sys: &GaborSystem, f: &SampledFunction) -> Result<GaborCoefficients> {
    if f.grid() != sys.grid() {
        return Err(GaborError::GridMismatch);
    }
    let lattice = *sys.lattice();
    let n = lattice.grid().len();
    let a = lattice.time_step_samples();
    let b = lattice.freq_period_samples();
    let step = lattice.grid().step();
    let fft = FftPlanner::new().plan_fft_forward(b);
    let g = sys.window().values();
    let fv = f.values();

    let rows: Vec<Vec<Complex64>> = (0..lattice.time_nodes())
        .into_par_iter()
        .map(|k| {
            let offset = k * a;
            let mut folded = vec![Complex64::default(); b];
            for (l, fl) in fv.iter().enumerate() {
                folded[l % b] += fl * g[(l + n - offset) % n].conj();
            }
            fft.process(&mut folded);
            folded.iter_mut().for_each(|c| *c *= step);
            folded
        })
        .collect();
    GaborCoefficients::new(lattice, rows.concat())
}

/// `Σ_k m_k · T_{kα} g` with `m_k` the trigonometric polynomial of row `k`.
pub fn synthesis(sys: &GaborSystem, c: &GaborCoefficients) -> Result<SampledFunction> {
    if c.lattice() != sys.lattice() {
        return Err(GaborError::LatticeMismatch);
    }
    let lattice = sys.lattice();
    let n = lattice.grid().len();
    let a = lattice.time_step_samples();
    let b = lattice.freq_period_samples();
    let g = sys.window().values();
    let polys = c.trig_polynomials();
    let mut out = vec![Complex64::default(); n];
    for (k, m) in polys.iter().enumerate() {
        if m.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
            continue;
        }
        let offset = k * a;
        for (l, o) in out.iter_mut().enumerate() {
            *o += m[l % b] * g[(l + n - offset) % n];
        }
    }
    Ok(SampledFunction::from_raw(*lattice.grid(), out))
}

/// Fejér weight `r_{j,M} = 1 − |j| / (β(M+1))` for a frequency `j ∈ βZ`.
pub fn fejer_weight(j: f64, m: usize, beta: f64) -> Result<f64> {
    let limit = beta * (m as f64 + 1.0);
    if !(j.abs() <= limit) {
        return Err(GaborError::OutOfRange { value: j, limit });
    }
    Ok(1.0 - j.abs() / limit)
}

/// Keeps `|k| ≤ N`, `|j| ≤ M` (node indices, max norm) and scales by `weight(q)`.
fn truncate(
    c: &GaborCoefficients,
    n_max: usize,
    m_max: usize,
    weight: impl Fn(usize) -> Result<f64>,
) -> Result<GaborCoefficients> {
    let lattice = *c.lattice();
    let mut out = c.clone();
    for (k, row) in out.rows_mut().enumerate() {
        let keep_k = lattice.signed_time_node(k).unsigned_abs() as usize <= n_max;
        for (q, v) in row.iter_mut().enumerate() {
            if keep_k && lattice.signed_freq_node(q).unsigned_abs() as usize <= m_max {
                *v *= weight(q)?;
            } else {
                *v = Complex64::default();
            }
        }
    }
    Ok(out)
}

/// Coefficients with every node outside `|k| ≤ N`, `|j| ≤ M` set to zero.
pub fn restrict(c: &GaborCoefficients, n_max: usize, m_max: usize) -> Result<GaborCoefficients> {
    truncate(c, n_max, m_max, |_| Ok(1.0))
}

/// `R_{N,M}(c)`: synthesis restricted to `|k| ≤ αN`, `|j| ≤ βM`.
pub fn partial_sum(sys: &GaborSystem, c: &GaborCoefficients, n_max: usize, m_max: usize) -> Result<SampledFunction> {
    synthesis(sys, &restrict(c, n_max, m_max)?)
}

/// Coefficients of `σ_{N,M}`: truncated and tapered by the Fejér weights.
pub fn regularize(c: &GaborCoefficients, n_max: usize, m_max: usize) -> Result<GaborCoefficients> {
    let lattice = *c.lattice();
    truncate(c, n_max, m_max, |q| {
        fejer_weight(lattice.frequency(q), m_max, lattice.beta())
    })
}

/// `σ_{N,M}(c)`: the partial sum with each frequency scaled by `r_{j,M}`.
pub fn regularized_sum(
    sys: &GaborSystem,
    c: &GaborCoefficients,
    n_max: usize,
    m_max: usize,
) -> Result<SampledFunction> {
    synthesis(sys, &regularize(c, n_max, m_max)?)
}

fn check_walnut_inputs(g: &SampledFunction, h: &SampledFunction, lattice: &TFLattice) -> Result<()> {
    if g.grid() != h.grid() || g.grid() != lattice.grid() {
        return Err(GaborError::GridMismatch);
    }
    Ok(())
}

/// `G_j(x) = Σ_k conj(g(x − j/β − αk)) h(x − αk)`, summed over one period of `k`.
pub fn walnut_correlation(
    g: &SampledFunction,
    h: &SampledFunction,
    lattice: &TFLattice,
    j: i64,
) -> Result<SampledFunction> {
    check_walnut_inputs(g, h, lattice)?;
    Ok(SampledFunction::from_raw(
        *lattice.grid(),
        correlation(g, h, lattice, j),
    ))
}

fn correlation(g: &SampledFunction, h: &SampledFunction, lattice: &TFLattice, j: i64) -> Vec<Complex64> {
    let n = lattice.grid().len();
    let a = lattice.time_step_samples();
    let shift = (j * lattice.freq_period_samples() as i64).rem_euclid(n as i64) as usize;
    let (gv, hv) = (g.values(), h.values());
    let mut out = vec![Complex64::default(); n];
    for k in 0..lattice.time_nodes() {
        let offset = k * a;
        for (l, o) in out.iter_mut().enumerate() {
            let hk = hv[(l + n - offset) % n];
            if hk.re != 0.0 || hk.im != 0.0 {
                *o += gv[(l + 2 * n - offset - shift) % n].conj() * hk;
            }
        }
    }
    out
}

/// Walnut form of `R_h C_g` with pruning bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct WalnutAssembly {
    pub operator: ShiftOperator,
    /// Number of `G_j` dropped by the relative prune threshold.
    pub pruned_terms: usize,
    /// `β^{-1} Σ ‖G_j‖_∞` over the dropped terms.
    pub pruned_mass: f64,
}

/// Assembles `β^{-1} Σ_j G_j T_{j/β}`, dropping `G_j` below [`WALNUT_PRUNE`] relative size.
pub fn assemble_walnut(g: &SampledFunction, h: &SampledFunction, lattice: &TFLattice) -> Result<WalnutAssembly> {
    check_walnut_inputs(g, h, lattice)?;
    let b = lattice.freq_period_samples();
    let scale = 1.0 / lattice.beta();
    let parts: Vec<(usize, Vec<Complex64>, f64)> = (0..lattice.walnut_shifts())
        .into_par_iter()
        .map(|j| {
            let gj = correlation(g, h, lattice, j as i64);
            let sup = gj.iter().map(|v| v.norm()).fold(0.0, f64::max);
            (j * b, gj, sup)
        })
        .collect();
    let largest = parts.iter().map(|p| p.2).fold(0.0, f64::max);
    let mut pruned_terms = 0;
    let mut pruned_mass = 0.0;
    let mut kept = Vec::new();
    for (shift, gj, sup) in parts {
        if sup == 0.0 || sup < WALNUT_PRUNE * largest {
            if sup > 0.0 {
                pruned_terms += 1;
                pruned_mass += scale * sup;
            }
            continue;
        }
        kept.push((shift, gj.into_iter().map(|v| v * scale).collect()));
    }
    Ok(WalnutAssembly {
        operator: ShiftOperator::from_sample_terms(*lattice.grid(), kept)?,
        pruned_terms,
        pruned_mass,
    })
}

/// The Walnut representation of `R_{h,Λ} C_{g,Λ}` as a shift operator.
pub fn walnut_operator(g: &SampledFunction, h: &SampledFunction, lattice: &TFLattice) -> Result<ShiftOperator> {
    assemble_walnut(g, h, lattice).map(|w| w.operator)
}

/// Weighted summability of the Walnut correlations against the window norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalnutBound {
    /// `Σ_j ‖G_j‖_∞ w(j/β)`.
    pub series: f64,
    /// `‖g‖_{W(L^∞, L¹_w)}`.
    pub g_norm: f64,
    pub h_norm: f64,
    /// `series / (g_norm · h_norm)`.
    pub constant: f64,
}

pub fn walnut_summability(
    g: &SampledFunction,
    h: &SampledFunction,
    lattice: &TFLattice,
    w: &WeightSpec,
) -> Result<WalnutBound> {
    check_walnut_inputs(g, h, lattice)?;
    let grid = lattice.grid();
    let terms = (0..lattice.walnut_shifts())
        .map(|j| {
            let gj = correlation(g, h, lattice, j as i64);
            let sup = gj.iter().map(|v| v.norm()).fold(0.0, f64::max);
            Ok(sup * w.eval(grid.samples_to_shift(j * lattice.freq_period_samples()))?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let series: f64 = terms.iter().sum();
    let params = AmalgamParams::new(Exponent::Infinity, Exponent::Finite(1.0), w.as_moderate(1.0), w.clone());
    let g_norm = amalgam_norm(g, &params)?;
    let h_norm = amalgam_norm(h, &params)?;
    let denom = g_norm * h_norm;
    Ok(WalnutBound {
        series,
        g_norm,
        h_norm,
        constant: if denom > 0.0 { series / denom } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;
    use crate::shift::to_dense;
    use crate::window::Window;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: GridSpec, rng: &mut ChaCha8Rng) -> SampledFunction {
        let v = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SampledFunction::new(grid, v).unwrap()
    }

    fn box_system(grid: GridSpec) -> GaborSystem {
        let g = Window::Box { width: 1.0 }.sample(grid).unwrap();
        GaborSystem::new(g, TFLattice::new(grid, 1.0, 1.0).unwrap()).unwrap()
    }

    /// Direct `⟨f, π(λ)g⟩` over all lattice points.
    fn direct_analysis(sys: &GaborSystem, f: &SampledFunction) -> Vec<Complex64> {
        let lat = sys.lattice();
        let mut out = Vec::new();
        for k in 0..lat.time_nodes() {
            for q in 0..lat.freq_nodes() {
                out.push(inner_product(f, &sys.atom(k, q)).unwrap());
            }
        }
        out
    }

    #[test]
    fn analysis_matches_direct_definition() {
        let grid = GridSpec::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (alpha, beta) in [(1.0, 1.0), (0.5, 0.5), (2.0, 0.25), (0.25, 2.0)] {
            let lat = TFLattice::new(grid, alpha, beta).unwrap();
            let sys = GaborSystem::new(random(grid, &mut rng), lat).unwrap();
            let f = random(grid, &mut rng);
            let fast = analysis(&sys, &f).unwrap();
            let direct = direct_analysis(&sys, &f);
            for (a, b) in fast.entries().iter().zip(&direct) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn box_analysis_is_kronecker() {
        let grid = GridSpec::new(4, 16).unwrap();
        let sys = box_system(grid);
        let c = analysis(&sys, sys.window()).unwrap();
        for k in 0..4 {
            for q in 0..16 {
                let expected = if k == 0 && q == 0 { 1.0 } else { 0.0 };
                assert!((c.get(k, q) - Complex64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
        let zero = analysis(&sys, &SampledFunction::zeros(grid)).unwrap();
        assert!(zero.entries().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn synthesis_single_entry_and_box_reconstruction() {
        let grid = GridSpec::new(4, 16).unwrap();
        let sys = box_system(grid);
        let mut c = GaborCoefficients::zeros(*sys.lattice());
        c.set(0, 0, Complex64::new(1.0, 0.0));
        assert!(synthesis(&sys, &c).unwrap().sub(sys.window()).unwrap().sup_norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random(grid, &mut rng);
        let back = synthesis(&sys, &analysis(&sys, &f).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn synthesis_is_adjoint_of_analysis() {
        let grid = GridSpec::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lat = TFLattice::new(grid, 0.5, 0.5).unwrap();
        let sys = GaborSystem::new(random(grid, &mut rng), lat).unwrap();
        let f = random(grid, &mut rng);
        let entries = (0..lat.size())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let c = GaborCoefficients::new(lat, entries).unwrap();
        let lhs = inner_product(&synthesis(&sys, &c).unwrap(), &f).unwrap();
        let cf = analysis(&sys, &f).unwrap();
        let rhs: Complex64 = c.entries().iter().zip(cf.entries()).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn partial_sums() {
        let grid = GridSpec::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = box_system(grid);
        let f = random(grid, &mut rng);
        let c = analysis(&sys, &f).unwrap();
        let r00 = partial_sum(&sys, &c, 0, 0).unwrap();
        let expected = sys.window().scale(c.get(0, 0));
        assert!(r00.sub(&expected).unwrap().sup_norm() < 1e-14);
        let full = synthesis(&sys, &c).unwrap();
        assert!(partial_sum(&sys, &c, 2, 4).unwrap().sub(&full).unwrap().sup_norm() < 1e-14);

        // error is nonincreasing as the boxes grow
        let mut last = f64::INFINITY;
        for nm in 0..=4 {
            let err = partial_sum(&sys, &c, nm.min(2), nm)
                .unwrap()
                .sub(&full)
                .unwrap()
                .l2_norm();
            assert!(err <= last + 1e-14);
            last = err;
        }
    }

    #[test]
    fn fejer_weights() {
        assert_eq!(fejer_weight(0.0, 3, 1.0).unwrap(), 1.0);
        assert_eq!(fejer_weight(1.0, 1, 1.0).unwrap(), 0.5);
        assert_eq!(fejer_weight(2.0, 0, 2.0).unwrap(), 0.0);
        assert!(matches!(fejer_weight(3.0, 1, 1.0), Err(GaborError::OutOfRange { .. })));
        let mut last = 1.0;
        for q in 1..=5 {
            let w = fejer_weight(q as f64 * 0.5, 4, 0.5).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn regularized_sum_basics() {
        let grid = GridSpec::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = box_system(grid);
        let c = analysis(&sys, &random(grid, &mut rng)).unwrap();
        let s00 = regularized_sum(&sys, &c, 0, 0).unwrap();
        assert!(s00.sub(&sys.window().scale(c.get(0, 0))).unwrap().sup_norm() < 1e-14);

        // linear in c
        let c2 = analysis(&sys, &random(grid, &mut rng)).unwrap();
        let z = Complex64::new(0.3, -1.2);
        let lhs = regularized_sum(&sys, &c.add(&c2.scale(z)).unwrap(), 1, 2).unwrap();
        let rhs = regularized_sum(&sys, &c, 1, 2)
            .unwrap()
            .add(&regularized_sum(&sys, &c2, 1, 2).unwrap().scale(z))
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn fejer_means_converge_for_smooth_input() {
        let grid = GridSpec::new(8, 16).unwrap();
        let lat = TFLattice::new(grid, 1.0, 0.5).unwrap();
        let sys = GaborSystem::new(Window::Gauss { sigma: 1.0 }.sample(grid).unwrap(), lat).unwrap();
        let f = SampledFunction::from_real_fn(grid, |x| (-(x - 0.5) * (x - 0.5)).exp()).unwrap();
        let c = analysis(&sys, &f).unwrap();
        let full = synthesis(&sys, &c).unwrap();
        let errors: Vec<f64> = [2, 8, 64, 1024, 8192]
            .iter()
            .map(|&m| regularized_sum(&sys, &c, 4, m).unwrap().sub(&full).unwrap().sup_norm())
            .collect();
        assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
        assert!(errors[errors.len() - 1] < 1e-3, "{errors:?}");
    }

    #[test]
    fn fejer_means_converge_against_test_functions() {
        // Bounded but rough coefficients; only pairings with a fixed battery are checked.
        let grid = GridSpec::new(8, 16).unwrap();
        let lat = TFLattice::new(grid, 1.0, 0.5).unwrap();
        let sys = GaborSystem::new(Window::Gauss { sigma: 1.0 }.sample(grid).unwrap(), lat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let entries = (0..lat.size())
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let c = GaborCoefficients::new(lat, entries).unwrap();
        let full = synthesis(&sys, &c).unwrap();
        let battery: Vec<SampledFunction> = [0.0, 1.5, -2.25]
            .iter()
            .map(|&x0| SampledFunction::from_real_fn(grid, |x| (-(x - x0) * (x - x0)).exp()).unwrap())
            .collect();
        let worst = |m: usize| {
            let diff = regularized_sum(&sys, &c, 4, m).unwrap().sub(&full).unwrap();
            battery
                .iter()
                .map(|phi| inner_product(&diff, phi).unwrap().norm())
                .fold(0.0, f64::max)
        };
        let errors: Vec<f64> = [4, 64, 1024, 16384].iter().map(|&m| worst(m)).collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
        assert!(errors[3] < 1e-2 * errors[0], "{errors:?}");
    }

    #[test]
    fn box_walnut_is_identity() {
        let grid = GridSpec::new(4, 16).unwrap();
        let sys = box_system(grid);
        let g = sys.window();
        let g0 = walnut_correlation(g, g, sys.lattice(), 0).unwrap();
        assert!(g0
            .values()
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        for j in 1..4 {
            assert!(walnut_correlation(g, g, sys.lattice(), j).unwrap().is_zero());
        }
        let op = walnut_operator(g, g, sys.lattice()).unwrap();
        assert_eq!(op, ShiftOperator::identity(grid));
        let zero = walnut_operator(g, &SampledFunction::zeros(grid), sys.lattice()).unwrap();
        assert!(zero.is_empty());
    }

    #[test]
    fn walnut_matches_dense_synthesis_analysis() {
        let grid = GridSpec::new(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (alpha, beta) in [(1.0, 0.5), (0.5, 1.0), (0.25, 0.5)] {
            let lat = TFLattice::new(grid, alpha, beta).unwrap();
            let g = random(grid, &mut rng);
            let h = random(grid, &mut rng);
            let op = walnut_operator(&g, &h, &lat).unwrap();
            let dense = to_dense(&op).unwrap();
            let sys_g = GaborSystem::new(g.clone(), lat).unwrap();
            let sys_h = GaborSystem::new(h.clone(), lat).unwrap();
            for l in 0..grid.len() {
                let e = SampledFunction::impulse(grid, l);
                let col = synthesis(&sys_h, &analysis(&sys_g, &e).unwrap()).unwrap();
                for (r, v) in col.values().iter().enumerate() {
                    assert!((dense[(r, l)] - v).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn frame_operator_is_self_adjoint() {
        let grid = GridSpec::new(8, 8).unwrap();
        let lat = TFLattice::new(grid, 1.0, 0.5).unwrap();
        let g = Window::Gauss { sigma: 1.0 }.sample(grid).unwrap();
        let op = walnut_operator(&g, &g, &lat).unwrap();
        assert!(op.self_adjoint_defect() < 1e-12);
    }

    #[test]
    fn walnut_bound_is_finite() {
        let grid = GridSpec::new(8, 16).unwrap();
        let lat = TFLattice::new(grid, 1.0, 0.5).unwrap();
        let g = Window::Gauss { sigma: 1.0 }.sample(grid).unwrap();
        let w = WeightSpec::polynomial(1.0).unwrap();
        let bound = walnut_summability(&g, &g, &lat, &w).unwrap();
        assert!(bound.series.is_finite() && bound.constant.is_finite());
        assert!(bound.series > 0.0);
    }
}
