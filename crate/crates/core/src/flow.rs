//! Windowed spectral flow through a co-oriented curve.
//!
//! A family is sampled as sorted window coordinates: eigenvalues for
//! Hermitian families, eigenphases in `(-pi, pi]` for unitary ones. The
//! interval is partitioned adaptively; on each segment a half-width `δ` is
//! chosen so that the in-window count is the same at both ends and at the
//! midpoint, and the segment contributes `n⁻(left) - n⁻(right)`.
//! Coordinates within `τ_zero` of 0 sit on the curve and are never negative.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, eigh, hermitian_defect, identity, max_abs, schur, CMat, C64};

/// Curve crossed by the spectrum, with its co-orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoorientedLine {
    /// Hermitian spectrum crossing 0 from negative to positive.
    RealAxisAtZero,
    /// Unitary spectrum crossing 1 with increasing phase.
    UnitCircleAtOne,
    /// Unitary spectrum crossing -1 with decreasing phase.
    UnitCircleAtMinusOneDownward,
}

/// Window coordinates of one sample, ascending with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSample {
    pub s: f64,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCount {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
}

impl WindowCount {
    pub fn total(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

/// Edge margin `η` and zero band `τ_zero`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowTolerances {
    pub eta: f64,
    pub zero: f64,
}

impl WindowTolerances {
    pub fn for_scale(scale: f64) -> Self {
        WindowTolerances { eta: 1e-6 * scale, zero: 1e-9 * scale }
    }
}

pub fn window_count(sample: &SpectrumSample, delta: f64, tol: WindowTolerances) -> Result<WindowCount> {
    let mut out = WindowCount { n_minus: 0, n_zero: 0, n_plus: 0 };
    for &x in &sample.coords {
        if (x.abs() - delta).abs() <= tol.eta {
            return Err(Error::CoordOnWindowBoundary { coord: x, delta });
        }
        if x.abs() <= tol.zero {
            out.n_zero += 1;
        } else if x < 0.0 && x > -delta {
            out.n_minus += 1;
        } else if x > 0.0 && x < delta {
            out.n_plus += 1;
        }
    }
    Ok(out)
}

/// A one-parameter family seen through its window coordinates.
pub trait SpectralFamily: Sync {
    fn sample(&self, s: f64) -> Result<Vec<f64>>;

    /// Natural coordinate scale; `None` means the largest sampled `|coord|`.
    fn scale(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub initial_segments: usize,
    pub delta_max_factor: f64,
    pub max_depth: usize,
    pub tau_unit: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { initial_segments: 16, delta_max_factor: 0.25, max_depth: 12, tau_unit: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentRecord {
    pub s_left: f64,
    pub s_right: f64,
    pub delta: f64,
    pub n_minus_left: usize,
    pub n_minus_right: usize,
    pub contribution: i64,
}

/// Audit trail of a spectral-flow computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub partition: Vec<f64>,
    pub segments: Vec<SegmentRecord>,
    pub total: i64,
    pub scale: f64,
    #[serde(skip)]
    pub samples: Vec<SpectrumSample>,
}

struct Engine<'a> {
    family: &'a dyn SpectralFamily,
    cache: Mutex<HashMap<u64, Vec<f64>>>,
}

impl Engine<'_> {
    fn get(&self, s: f64) -> Result<Vec<f64>> {
        if let Some(v) = self.cache.lock().unwrap().get(&s.to_bits()) {
            return Ok(v.clone());
        }
        let mut v = self.family.sample(s)?;
        v.sort_by(f64::total_cmp);
        self.cache.lock().unwrap().insert(s.to_bits(), v.clone());
        Ok(v)
    }
}

fn choose_window(samples: [&[f64]; 3], dmax: f64, tol: WindowTolerances) -> Option<f64> {
    let mut vals: Vec<f64> = samples
        .iter()
        .flat_map(|v| v.iter().map(|x| x.abs()))
        .filter(|&a| a <= dmax + tol.eta)
        .collect();
    vals.push(0.0);
    vals.sort_by(f64::total_cmp);
    let mut candidates = vec![dmax];
    for w in vals.windows(2).rev() {
        if w[1] - w[0] > 2.0 * tol.eta {
            candidates.push(0.5 * (w[0] + w[1]));
        }
    }
    let count = |v: &[f64], d: f64| v.iter().filter(|x| x.abs() < d).count();
    // An empty window cannot witness a crossing: a coordinate nearest 0 that
    // comes within δ_max must keep its sign across the segment.
    let nearest = |v: &[f64]| v.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs()));
    let near: Vec<Option<f64>> = samples.iter().map(|v| nearest(v)).collect();
    let far = near.iter().flatten().all(|x| x.abs() >= dmax);
    let steady = far || near.windows(2).all(|w| w[0].map(|x| x > 0.0) == w[1].map(|x| x > 0.0));
    candidates.into_iter().find(|&d| {
        let k = count(samples[0], d);
        d > tol.zero + tol.eta
            && samples.iter().all(|v| v.iter().all(|x| (x.abs() - d).abs() > tol.eta))
            && k == count(samples[1], d)
            && k == count(samples[2], d)
            && (k > 0 || steady)
            && samples.windows(2).all(|p| tracks(p[0], p[1], d, dmax) && tracks(p[1], p[0], d, dmax))
    })
}

/// Every coordinate of `a` within `dmax` of 0 has a partner in `b` at most
/// `dmax / 2` away in the same region relative to the window `(-d, d)`.
/// Fails when the samples cannot exclude a coordinate passing through `±d`.
fn tracks(a: &[f64], b: &[f64], d: f64, dmax: f64) -> bool {
    let region = |x: f64| if x <= -d { -1 } else if x >= d { 1 } else { 0 };
    a.iter()
        .filter(|x| x.abs() < dmax)
        .all(|&x| b.iter().any(|&y| (x - y).abs() <= 0.5 * dmax && region(x) == region(y)))
}

fn n_minus(v: &[f64], delta: f64, tol: WindowTolerances) -> usize {
    v.iter().filter(|&&x| x < -tol.zero && x > -delta).count()
}

/// Spectral flow of a sampled family over `[a, b]`.
pub fn spectral_flow_family(
    family: &dyn SpectralFamily,
    interval: (f64, f64),
    opts: &FlowOptions,
) -> Result<(i64, CrossingReport)> {
    let (a, b) = interval;
    let n = opts.initial_segments.max(1);
    let engine = Engine { family, cache: Mutex::new(HashMap::new()) };
    let grid: Vec<f64> = (0..=2 * n).map(|k| a + (b - a) * k as f64 / (2 * n) as f64).collect();
    let first: Vec<Result<Vec<f64>>> = grid.par_iter().map(|&s| engine.get(s)).collect();
    let mut seen = 0.0_f64;
    for r in first {
        for x in r? {
            seen = seen.max(x.abs());
        }
    }
    let scale = family.scale().unwrap_or(if seen > 0.0 { seen } else { 1.0 });
    let tol = WindowTolerances::for_scale(scale);
    let dmax = opts.delta_max_factor * scale;
    let mut segments = Vec::new();
    for k in 0..n {
        let l = grid[2 * k];
        let r = grid[2 * k + 2];
        resolve(&engine, l, r, 0, dmax, tol, opts, &mut segments)?;
    }
    let total = segments.iter().map(|s| s.contribution).sum();
    let mut partition: Vec<f64> = segments.iter().map(|s| s.s_left).collect();
    partition.push(b);
    let cache = engine.cache.into_inner().unwrap();
    let mut samples: Vec<SpectrumSample> =
        cache.into_iter().map(|(k, coords)| SpectrumSample { s: f64::from_bits(k), coords }).collect();
    samples.sort_by(|x, y| x.s.total_cmp(&y.s));
    Ok((total, CrossingReport { partition, segments, total, scale, samples }))
}

#[allow(clippy::too_many_arguments)]
fn resolve(
    engine: &Engine,
    l: f64,
    r: f64,
    depth: usize,
    dmax: f64,
    tol: WindowTolerances,
    opts: &FlowOptions,
    out: &mut Vec<SegmentRecord>,
) -> Result<()> {
    let m = 0.5 * (l + r);
    let (vl, vm, vr) = (engine.get(l)?, engine.get(m)?, engine.get(r)?);
    if let Some(delta) = choose_window([&vl, &vm, &vr], dmax, tol) {
        let nl = n_minus(&vl, delta, tol);
        let nr = n_minus(&vr, delta, tol);
        out.push(SegmentRecord {
            s_left: l,
            s_right: r,
            delta,
            n_minus_left: nl,
            n_minus_right: nr,
            contribution: nl as i64 - nr as i64,
        });
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(Error::UnresolvedFamily { s_left: l, s_right: r });
    }
    // Quarter points are independent; sample them together.
    let quarters = [0.5 * (l + m), 0.5 * (m + r)];
    quarters.par_iter().map(|&s| engine.get(s).map(|_| ())).collect::<Result<Vec<()>>>()?;
    resolve(engine, l, m, depth + 1, dmax, tol, opts, out)?;
    resolve(engine, m, r, depth + 1, dmax, tol, opts, out)
}

/// Window coordinates of a single matrix for the given curve.
pub fn matrix_coords(a: &CMat, line: CoorientedLine, s: f64, tau_unit: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    match line {
        CoorientedLine::RealAxisAtZero => {
            let defect = hermitian_defect(a);
            if defect > linalg::TAU_SYM * max_abs(a).max(1.0) {
                return Err(Error::NotHermitian { s, defect });
            }
            Ok(eigh(a).values)
        }
        CoorientedLine::UnitCircleAtOne | CoorientedLine::UnitCircleAtMinusOneDownward => {
            let phases = unit_phases(a, s, tau_unit)?;
            let mut out: Vec<f64> = if line == CoorientedLine::UnitCircleAtOne {
                phases
            } else {
                phases.into_iter().map(|t| -linalg::wrap(t - std::f64::consts::PI)).collect()
            };
            out.sort_by(f64::total_cmp);
            Ok(out)
        }
    }
}

/// Eigenphases of a unitary matrix, checking unitarity at `tau_unit`.
pub fn unit_phases(a: &CMat, s: f64, tau_unit: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let defect = max_abs(&(a.adjoint() * a - identity(n)));
    if defect > tau_unit {
        return Err(Error::NotUnitary { s, defect });
    }
    let ev = linalg::eigenvalues(a);
    let off = ev.iter().fold(0.0_f64, |m, z| m.max((z.norm() - 1.0).abs()));
    if off > tau_unit {
        return Err(Error::NotUnitary { s, defect: off });
    }
    let mut ph: Vec<f64> = ev.into_iter().map(linalg::phase).collect();
    ph.sort_by(f64::total_cmp);
    Ok(ph)
}

struct MatrixFamily<'a, F> {
    f: &'a F,
    line: CoorientedLine,
    tau_unit: f64,
}

impl<F: Fn(f64) -> CMat + Sync> SpectralFamily for MatrixFamily<'_, F> {
    fn sample(&self, s: f64) -> Result<Vec<f64>> {
        matrix_coords(&(self.f)(s), self.line, s, self.tau_unit)
    }

    fn scale(&self) -> Option<f64> {
        match self.line {
            CoorientedLine::RealAxisAtZero => None,
            _ => Some(std::f64::consts::PI),
        }
    }
}

/// Spectral flow of a matrix family through the given curve.
pub fn spectral_flow<F>(
    family: F,
    line: CoorientedLine,
    interval: (f64, f64),
    opts: &FlowOptions,
) -> Result<(i64, CrossingReport)>
where
    F: Fn(f64) -> CMat + Sync,
{
    let fam = MatrixFamily { f: &family, line, tau_unit: opts.tau_unit };
    spectral_flow_family(&fam, interval, opts)
}

/// Sum of the spectral projections for eigenvalues inside a disk.
pub fn spectral_projection(a: &CMat, center: C64, radius: f64) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    let (mut q, mut t) = schur(a);
    let scale = (0..n).fold(1.0_f64, |m, i| m.max(t[(i, i)].norm()));
    let inside = |z: C64| (z - center).norm() < radius;
    for i in 0..n {
        let z = t[(i, i)];
        let d = ((z - center).norm() - radius).abs();
        if d <= linalg::TAU_RANK * scale {
            return Err(Error::SpectrumOnBoundary { eigenvalue: z.norm() });
        }
    }
    // Bubble inside eigenvalues to the leading block.
    let mut k = 0;
    for i in 0..n {
        if inside(t[(i, i)]) {
            let mut j = i;
            while j > k {
                swap_schur(&mut t, &mut q, j - 1);
                j -= 1;
            }
            k += 1;
        }
    }
    if k == 0 {
        return Ok(CMat::zeros(n, n));
    }
    if k == n {
        return Ok(identity(n));
    }
    let t11 = t.view((0, 0), (k, k)).into_owned();
    let t12 = t.view((0, k), (k, n - k)).into_owned();
    let t22 = t.view((k, k), (n - k, n - k)).into_owned();
    let z = solve_sylvester_upper(&t11, &t22, &t12);
    let mut pt = CMat::zeros(n, n);
    pt.view_mut((0, 0), (k, k)).copy_from(&identity(k));
    pt.view_mut((0, k), (k, n - k)).copy_from(&z);
    Ok(&q * pt * q.adjoint())
}

/// Swaps diagonal entries `k` and `k + 1` of an upper-triangular Schur factor.
fn swap_schur(t: &mut CMat, q: &mut CMat, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let d = t[(k + 1, k + 1)];
    let b = t[(k, k + 1)];
    let (mut v1, mut v2) = (b, d - a);
    let nv = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nv == 0.0 {
        return;
    }
    v1 /= nv;
    v2 /= nv;
    // Columns of G: (v1, v2) and (-conj v2, conj v1).
    let g = [[v1, -v2.conj()], [v2, v1.conj()]];
    for col in 0..n {
        let x = t[(k, col)];
        let y = t[(k + 1, col)];
        t[(k, col)] = g[0][0].conj() * x + g[1][0].conj() * y;
        t[(k + 1, col)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
    for row in 0..n {
        let x = t[(row, k)];
        let y = t[(row, k + 1)];
        t[(row, k)] = x * g[0][0] + y * g[1][0];
        t[(row, k + 1)] = x * g[0][1] + y * g[1][1];
        let x = q[(row, k)];
        let y = q[(row, k + 1)];
        q[(row, k)] = x * g[0][0] + y * g[1][0];
        q[(row, k + 1)] = x * g[0][1] + y * g[1][1];
    }
    t[(k + 1, k)] = c(0.0, 0.0);
}

/// Solves `T11 Z - Z T22 = C` for upper-triangular `T11`, `T22`.
fn solve_sylvester_upper(t11: &CMat, t22: &CMat, rhs: &CMat) -> CMat {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut z = CMat::zeros(k, m);
    for j in 0..m {
        let mut col = rhs.column(j).into_owned();
        for l in 0..j {
            col += z.column(l) * t22[(l, j)];
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = col[i];
            for p in i + 1..k {
                acc -= t11[(i, p)] * z[(p, j)];
            }
            z[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    z
}

/// Writes `s,coord_1,...,coord_n` rows with 17 significant digits.
pub fn write_trace_csv<W: Write>(samples: &[SpectrumSample], mut w: W) -> std::io::Result<()> {
    let width = samples.iter().map(|s| s.coords.len()).max().unwrap_or(0);
    let mut header = String::from("s");
    for i in 1..=width {
        header.push_str(&format!(",coord_{i}"));
    }
    writeln!(w, "{header}")?;
    for smp in samples {
        let mut line = format!("{:.16e}", smp.s);
        for i in 0..width {
            line.push(',');
            if let Some(x) = smp.coords.get(i) {
                line.push_str(&format!("{x:.16e}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
