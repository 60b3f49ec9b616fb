use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use super::{generator_at, graph_subspace, standard_j, w_of_r, BoundaryPath, BvpFamily, Generator, SecondOrderFamily};
use crate::error::{Error, Result};
use crate::flow::{self, CrossingReport, FlowOptions, SpectralFamily};
use crate::linalg::{c, direct_sum, singular_values, CMat};
use crate::maslov::{maslov_index_with, PairPath, PairSample, SplittingChoice};
use crate::symplectic::{make_space, Subspace};

/// Numerical parameters shared by the boundary-value pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// RK4 steps on `[0, T]`.
    pub steps: usize,
    /// Half-width `R` of the eigenvalue search window `(-R, R)`.
    pub lambda_window: f64,
    /// Number of grid points across the search window.
    pub lambda_grid: usize,
    /// Start of the `t`-path for the long index.
    pub t0: f64,
    pub flow: FlowOptions,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions { steps: 2048, lambda_window: 2.0, lambda_grid: 65, t0: 0.0, flow: FlowOptions::default() }
    }
}

/// Accepts a detector minimum as a root.
const TAU_DETECT: f64 = 1e-6;
/// Minimum detector value tolerated at the window endpoints.
const TAU_EDGE: f64 = 1e-5;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// One-`s` shooting problem: transported graphs against `W_s`.
struct Shooter {
    gen: Generator,
    w: Subspace,
    w_perp: CMat,
}

impl Shooter {
    fn new(fam: &BvpFamily, s: f64, w: &Subspace, steps: usize) -> Result<Shooter> {
        let n = fam.state_dim();
        if w.ambient_dim() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: w.ambient_dim() });
        }
        let gen = Generator::build(fam, s, fam.t_len(), steps)?;
        Ok(Shooter { gen, w: w.clone(), w_perp: w.orthogonal().frame().clone() })
    }

    fn graph(&self, lambda: f64) -> Subspace {
        graph_subspace(&self.gen.solve(lambda))
    }

    fn detector(&self, lambda: f64) -> f64 {
        let g = self.graph(lambda);
        let m = self.w_perp.adjoint() * g.frame();
        singular_values(&m).last().copied().unwrap_or(0.0)
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn count_in_window(sh: &Shooter, window: (f64, f64), grid: usize) -> Result<Vec<(f64, usize)>> {
    let (lo, hi) = window;
    let n = grid.max(3);
    let lam: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let d: Vec<f64> = lam.par_iter().map(|&l| sh.detector(l)).collect();
    if d[0] <= TAU_EDGE {
        return Err(Error::WindowBoundaryEigenvalue { lambda: lo });
    }
    if d[n - 1] <= TAU_EDGE {
        return Err(Error::WindowBoundaryEigenvalue { lambda: hi });
    }
    let mut brackets = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || d[i] < d[i - 1];
        let right_ok = i == n - 1 || d[i] <= d[i + 1];
        if left_ok && right_ok {
            brackets.push((lam[i.saturating_sub(1)], lam[(i + 1).min(n - 1)]));
        }
    }
    let tol = 1e-13 * (hi - lo);
    let refined: Vec<(f64, f64)> =
        brackets.par_iter().map(|&(a, b)| golden_min(|l| sh.detector(l), a, b, tol)).collect();
    let mut roots: Vec<f64> = refined.into_iter().filter(|&(_, v)| v <= TAU_DETECT).map(|(x, _)| x).collect();
    roots.sort_by(f64::total_cmp);
    let tau_root = 1e-9 * (hi - lo);
    if let Some(w) = roots.windows(2).find(|w| w[1] - w[0] <= 10.0 * tau_root) {
        return Err(Error::RootCluster { lambda: w[0] });
    }
    Ok(roots.into_iter().map(|r| (r, sh.graph(r).intersection_dim(&sh.w).max(1))).collect())
}

/// Eigenvalues of the boundary-value problem at `s` inside `window`, with multiplicities.
pub fn eigen_count(
    fam: &BvpFamily,
    s: f64,
    w: &Subspace,
    window: (f64, f64),
    opts: &BvpOptions,
) -> Result<Vec<(f64, usize)>> {
    let sh = Shooter::new(fam, s, w, opts.steps)?;
    count_in_window(&sh, window, opts.lambda_grid)
}

struct BvpSpectrum<'a> {
    fam: &'a BvpFamily,
    w: &'a BoundaryPath,
    opts: &'a BvpOptions,
}

impl SpectralFamily for BvpSpectrum<'_> {
    fn sample(&self, s: f64) -> Result<Vec<f64>> {
        let sh = Shooter::new(self.fam, s, &self.w.at(s), self.opts.steps)?;
        let mut r = self.opts.lambda_window;
        // Contents near the window edges never reach δ_max, so the edge may move.
        let roots = loop {
            match count_in_window(&sh, (-r, r), self.opts.lambda_grid) {
                Err(Error::WindowBoundaryEigenvalue { .. }) if r < 1.1 * self.opts.lambda_window => r *= 1.01,
                other => break other?,
            }
        };
        Ok(roots.into_iter().flat_map(|(l, k)| std::iter::repeat_n(l, k)).collect())
    }

    fn scale(&self) -> Option<f64> {
        Some(self.opts.lambda_window)
    }
}

/// Spectral flow of `s ↦ A_{s,W_s}` (or `L_{s,W_s}`) through 0 on `[0, 1]`.
pub fn sf_bvp(fam: &BvpFamily, w: &BoundaryPath, opts: &BvpOptions) -> Result<(i64, CrossingReport)> {
    let spec = BvpSpectrum { fam, w, opts };
    flow::spectral_flow_family(&spec, (0.0, 1.0), &opts.flow)
}

/// Residuals collected along a boundary-value Maslov computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BvpDiagnostics {
    pub transport_residual: f64,
    pub lagrangian_residual: f64,
    pub unitary_defect: f64,
}

/// `Mas{𝔊(Γ_s(T)), W_s}` on `[0, 1]` with residual diagnostics.
pub fn mas_bvp_with_diagnostics(
    fam: &BvpFamily,
    w: &BoundaryPath,
    opts: &BvpOptions,
) -> Result<(i64, CrossingReport, BvpDiagnostics)> {
    let transport = Arc::new(Mutex::new(0.0_f64));
    let (f, wp, steps, tr) = (fam.clone(), w.clone(), opts.steps, transport.clone());
    let path = PairPath::new(
        move |s| {
            let g = f.transfer(s, 0.0, steps)?;
            let res = f.transport_residual(s, &g);
            let mut t = tr.lock().unwrap();
            *t = t.max(res);
            Ok(PairSample { space: f.boundary_space(s)?, lambda: graph_subspace(&g), mu: wp.at(s) })
        },
        (0.0, 1.0),
    );
    let (k, rep, d) = maslov_index_with(&path, &SplittingChoice::Canonical, &opts.flow)?;
    let diag = BvpDiagnostics {
        transport_residual: *transport.lock().unwrap(),
        lagrangian_residual: d.lagrangian_defect,
        unitary_defect: d.unit_defect,
    };
    Ok((k, rep, diag))
}

/// `Mas{𝔊(Γ_s(T)), W_s}` on `[0, 1]`.
pub fn mas_bvp(fam: &BvpFamily, w: &BoundaryPath, opts: &BvpOptions) -> Result<(i64, CrossingReport)> {
    mas_bvp_with_diagnostics(fam, w, opts).map(|(k, r, _)| (k, r))
}

/// `Γ(t)` on `[0, t_final]` at fixed `s`: grid values plus one partial RK4 step.
struct TransferPath {
    fam: BvpFamily,
    s: f64,
    steps: usize,
    h: f64,
    grid: Vec<CMat>,
}

impl TransferPath {
    fn new(fam: &BvpFamily, s: f64, t_final: f64, steps: usize) -> Result<TransferPath> {
        let gen = Generator::build(fam, s, t_final, steps)?;
        Ok(TransferPath { fam: fam.clone(), s, steps, h: t_final / steps as f64, grid: gen.solve_path(0.0) })
    }

    fn at(&self, t: f64) -> Result<CMat> {
        let x = t / self.h;
        let k = x.round();
        if (x - k).abs() < 1e-9 {
            return Ok(self.grid[(k as usize).min(self.steps)].clone());
        }
        let k = (x.floor() as usize).min(self.steps - 1);
        let t0 = k as f64 * self.h;
        let tau = t - t0;
        let f = |t: f64| -> Result<CMat> {
            let (a, _) = generator_at(&self.fam, self.s, t, self.steps)?;
            Ok(a)
        };
        let g = &self.grid[k];
        let fm = f(t0 + tau / 2.0)?;
        let k1 = f(t0)? * g;
        let k2 = &fm * (g + &k1 * c(tau / 2.0, 0.0));
        let k3 = &fm * (g + &k2 * c(tau / 2.0, 0.0));
        let k4 = f(t)? * (g + &k3 * c(tau, 0.0));
        Ok(g + (k1 + (k2 + k3) * c(2.0, 0.0) + k4) * c(tau / 6.0, 0.0))
    }
}

/// Maslov–Long index `i_W` of `t ↦ 𝔊(Γ_s(t))` against `W` on `[t0, t_final]`.
pub fn maslov_long(
    fam: &SecondOrderFamily,
    s: f64,
    w: &Subspace,
    t_final: f64,
    opts: &BvpOptions,
) -> Result<(i64, CrossingReport)> {
    let m = fam.m;
    if w.ambient_dim() != 4 * m {
        return Err(Error::DimensionMismatch { expected: 4 * m, found: w.ambient_dim() });
    }
    let fam = BvpFamily::Second(fam.clone());
    let tp = TransferPath::new(&fam, s, t_final, opts.steps)?;
    let j = standard_j(m);
    let space = make_space(direct_sum(&(-&j), &j))?;
    let w = w.clone();
    let path = PairPath::new(
        move |t| Ok(PairSample { space: space.clone(), lambda: graph_subspace(&tp.at(t)?), mu: w.clone() }),
        (opts.t0, t_final),
    );
    crate::maslov::maslov_index(&path, &opts.flow)
}

/// Both sides of `SF{L_{s,W(R)}} = i_{W(R)}(Γ₁) - i_{W(R)}(Γ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongIndexReport {
    pub sf: i64,
    pub long_at_one: i64,
    pub long_at_zero: i64,
}

impl LongIndexReport {
    pub fn holds(&self) -> bool {
        self.sf == self.long_at_one - self.long_at_zero
    }
}

/// Evaluates the spectral flow and the two long indices for the boundary data `W(R)`.
pub fn long_index_identity(fam: &SecondOrderFamily, r: &Subspace, opts: &BvpOptions) -> Result<LongIndexReport> {
    let w = w_of_r(r);
    let path = BoundaryPath::constant(w.clone());
    let (sf, _) = sf_bvp(&BvpFamily::Second(fam.clone()), &path, opts)?;
    let (long_at_one, _) = maslov_long(fam, 1.0, &w, fam.t_len, opts)?;
    let (long_at_zero, _) = maslov_long(fam, 0.0, &w, fam.t_len, opts)?;
    Ok(LongIndexReport { sf, long_at_one, long_at_zero })
}
