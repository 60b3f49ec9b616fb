//! Maslov index of Lagrangian pair paths under varying forms.
//!
//! At each parameter the canonical splitting of `J_s` turns both
//! Lagrangians into unitary graph matrices `U_s`, `V_s`; the index is the
//! spectral flow of `U_s V_s⁻¹` through 1 with increasing phase.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flow::{self, matrix_coords, CoorientedLine, CrossingReport, FlowOptions, SpectralFamily};
use crate::linalg::{self, c, direct_sum, identity, inverse, max_abs, polar_unitary, to_complex, vstack, CMat};
use crate::symplectic::{
    graph_rep, make_space, make_splitting, make_splitting_with_metric, Splitting, Subspace, SymplecticSpace,
};

/// Data of a path at one parameter value.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub space: SymplecticSpace,
    pub lambda: Subspace,
    pub mu: Subspace,
}

pub type PairSampler = Arc<dyn Fn(f64) -> Result<PairSample> + Send + Sync>;
pub type MetricPath = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// A continuous path `s ↦ (J_s, λ_s, μ_s)` on `[a, b]`.
#[derive(Clone)]
pub struct PairPath {
    sampler: PairSampler,
    pub interval: (f64, f64),
}

impl std::fmt::Debug for PairPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairPath").field("interval", &self.interval).finish()
    }
}

impl PairPath {
    pub fn new<F>(sampler: F, interval: (f64, f64)) -> PairPath
    where
        F: Fn(f64) -> Result<PairSample> + Send + Sync + 'static,
    {
        PairPath { sampler: Arc::new(sampler), interval }
    }

    pub fn sample(&self, s: f64) -> Result<PairSample> {
        (self.sampler)(s)
    }

    fn map<F>(&self, f: F) -> PairPath
    where
        F: Fn(PairSample) -> Result<PairSample> + Send + Sync + 'static,
    {
        let inner = self.sampler.clone();
        PairPath { sampler: Arc::new(move |s| f(inner(s)?)), interval: self.interval }
    }

    /// Same path on a sub-interval.
    pub fn restricted(&self, a: f64, b: f64) -> PairPath {
        PairPath { sampler: self.sampler.clone(), interval: (a, b) }
    }

    /// `(μ_s, λ_s)` in the same space.
    pub fn swapped(&self) -> PairPath {
        self.map(|p| Ok(PairSample { space: p.space, lambda: p.mu, mu: p.lambda }))
    }

    /// `(μ_s, λ_s)` in `(H, -ω_s)`.
    pub fn swapped_negated(&self) -> PairPath {
        self.map(|p| Ok(PairSample { space: p.space.negated(), lambda: p.mu, mu: p.lambda }))
    }

    /// `(λ_s ⊞ μ_s, Δ)` in `(H, ω_s) ⊕ (H, -ω_s)`.
    pub fn boxplus_diagonal(&self) -> PairPath {
        self.map(|p| {
            let space = boxplus(&p.space, &p.space)?;
            let (lm, d) = boxplus_pair(&p.lambda, &p.mu)?;
            Ok(PairSample { space, lambda: lm, mu: d })
        })
    }

    /// `(Δ, λ_s ⊞ μ_s)` in `(H, -ω_s) ⊕ (H, ω_s)`.
    pub fn diagonal_boxplus(&self) -> PairPath {
        self.map(|p| {
            let space = boxplus(&p.space.negated(), &p.space.negated())?;
            let (lm, d) = boxplus_pair(&p.lambda, &p.mu)?;
            Ok(PairSample { space, lambda: d, mu: lm })
        })
    }

    /// Push-forward by an invertible `L`: form `L^{-†} J L⁻¹`, subspaces `Lλ`, `Lμ`.
    pub fn pushed_forward(&self, l: CMat) -> Result<PairPath> {
        let linv = inverse(&l).ok_or(Error::Degenerate { ratio: 0.0 })?;
        Ok(self.map(move |p| {
            let j = linv.adjoint() * p.space.form() * &linv;
            Ok(PairSample { space: make_space(j)?, lambda: p.lambda.image(&l), mu: p.mu.image(&l) })
        }))
    }
}

/// How the splitting is chosen at each parameter.
#[derive(Clone, Default)]
pub enum SplittingChoice {
    #[default]
    Canonical,
    /// Splitting induced by a positive definite Gram matrix `G_s`.
    Metric(MetricPath),
}

impl SplittingChoice {
    fn build(&self, space: &SymplecticSpace, s: f64) -> Result<Splitting> {
        match self {
            SplittingChoice::Canonical => make_splitting(space),
            SplittingChoice::Metric(g) => make_splitting_with_metric(space, &g(s)),
        }
    }
}

/// Worst deviation from the unit circle among all sampled spectra.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathDiagnostics {
    pub unit_defect: f64,
    pub lagrangian_defect: f64,
}

struct UnitaryPath<'a> {
    path: &'a PairPath,
    choice: &'a SplittingChoice,
    block: bool,
    tau_unit: f64,
    diag: Mutex<PathDiagnostics>,
}

impl UnitaryPath<'_> {
    fn matrix(&self, s: f64) -> Result<CMat> {
        let p = self.path.sample(s)?;
        let split = self.choice.build(&p.space, s)?;
        let u = graph_rep(&p.space, &split, &p.lambda)?.u_matrix;
        let v = graph_rep(&p.space, &split, &p.mu)?.u_matrix;
        let vinv = inverse(&v).ok_or(Error::NotLagrangian)?;
        let lag = max_abs(&p.space.gram(p.lambda.frame())).max(max_abs(&p.space.gram(p.mu.frame())));
        let w = if self.block {
            let k = u.nrows();
            let mut m = CMat::zeros(2 * k, 2 * k);
            m.view_mut((0, k), (k, k)).copy_from(&u);
            m.view_mut((k, 0), (k, k)).copy_from(&vinv);
            m
        } else {
            u * vinv
        };
        let off = linalg::eigenvalues(&w).iter().fold(0.0_f64, |m, z| m.max((z.norm() - 1.0).abs()));
        let mut d = self.diag.lock().unwrap();
        d.unit_defect = d.unit_defect.max(off);
        d.lagrangian_defect = d.lagrangian_defect.max(lag);
        Ok(w)
    }
}

impl SpectralFamily for UnitaryPath<'_> {
    fn sample(&self, s: f64) -> Result<Vec<f64>> {
        matrix_coords(&self.matrix(s)?, CoorientedLine::UnitCircleAtOne, s, self.tau_unit)
    }

    fn scale(&self) -> Option<f64> {
        Some(std::f64::consts::PI)
    }
}

fn run(
    path: &PairPath,
    choice: &SplittingChoice,
    block: bool,
    opts: &FlowOptions,
) -> Result<(i64, CrossingReport, PathDiagnostics)> {
    let fam = UnitaryPath { path, choice, block, tau_unit: opts.tau_unit, diag: Mutex::new(PathDiagnostics::default()) };
    let (k, rep) = flow::spectral_flow_family(&fam, path.interval, opts)?;
    let d = *fam.diag.lock().unwrap();
    Ok((k, rep, d))
}

/// `Mas{λ_s, μ_s; P_s}` with the canonical splittings.
pub fn maslov_index(path: &PairPath, opts: &FlowOptions) -> Result<(i64, CrossingReport)> {
    run(path, &SplittingChoice::Canonical, false, opts).map(|(k, r, _)| (k, r))
}

/// Maslov index with an explicit splitting choice, plus spectrum diagnostics.
pub fn maslov_index_with(
    path: &PairPath,
    choice: &SplittingChoice,
    opts: &FlowOptions,
) -> Result<(i64, CrossingReport, PathDiagnostics)> {
    run(path, choice, false, opts)
}

/// Spectral flow of the block family `[[0, U_s], [V_s⁻¹, 0]]` through 1.
pub fn maslov_index_block(path: &PairPath, opts: &FlowOptions) -> Result<i64> {
    run(path, &SplittingChoice::Canonical, true, opts).map(|(k, _, _)| k)
}

/// `(H₁, ω₁) ⊕ (H₂, -ω₂)`.
pub fn boxplus(space1: &SymplecticSpace, space2: &SymplecticSpace) -> Result<SymplecticSpace> {
    make_space(direct_sum(space1.form(), &(-space2.form())))
}

/// `λ ⊞ μ` and the diagonal `Δ` of `H ⊕ H`.
pub fn boxplus_pair(lambda: &Subspace, mu: &Subspace) -> Result<(Subspace, Subspace)> {
    let n = lambda.ambient_dim();
    if mu.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: mu.ambient_dim() });
    }
    let lm = Subspace::span(&direct_sum(lambda.frame(), mu.frame()));
    let d = Subspace::span(&(vstack(&identity(n), &identity(n)) * c(FRAC_1_SQRT_2, 0.0)));
    Ok((lm, d))
}

/// The four equal Maslov indices of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductIdentities {
    /// `Mas{λ, μ; P}`.
    pub pair: i64,
    /// `Mas{λ ⊞ μ, Δ; 𝒫}`.
    pub boxplus: i64,
    /// `Mas{μ, λ; I - P}` in `(H, -ω)`.
    pub swapped: i64,
    /// `Mas{Δ, λ ⊞ μ; I - 𝒫}` in the flipped product.
    pub flipped: i64,
}

impl ProductIdentities {
    pub fn all_equal(&self) -> bool {
        self.pair == self.boxplus && self.pair == self.swapped && self.pair == self.flipped
    }
}

pub fn maslov_product_identities(path: &PairPath, opts: &FlowOptions) -> Result<ProductIdentities> {
    Ok(ProductIdentities {
        pair: maslov_index(path, opts)?.0,
        boxplus: maslov_index(&path.boxplus_diagonal(), opts)?.0,
        swapped: maslov_index(&path.swapped_negated(), opts)?.0,
        flipped: maslov_index(&path.diagonal_boxplus(), opts)?.0,
    })
}

/// Maslov index with the canonical splitting and with the one induced by `metric2`.
pub fn splitting_independence_check(path: &PairPath, metric2: MetricPath, opts: &FlowOptions) -> Result<(i64, i64)> {
    let a = maslov_index(path, opts)?.0;
    let b = run(path, &SplittingChoice::Metric(metric2), false, opts)?.0;
    Ok((a, b))
}

pub type RealFramePath = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A real symplectic space with complex structure `J`, a fixed Lagrangian and a moving one.
#[derive(Clone)]
pub struct RealSymplecticData {
    pub j: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub mu_path: RealFramePath,
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealComparison {
    pub mas: i64,
    pub mas_bf: i64,
    pub residual: f64,
}

fn real_orthonormal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.ncols();
    m.clone().qr().q().columns(0, k).into_owned()
}

fn check_real_lagrangian(j: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<()> {
    let m = f.nrows() / 2;
    if f.ncols() != m || max_abs(&to_complex(&(f.transpose() * j * f))) > 1e-8 {
        return Err(Error::NotLagrangianReal);
    }
    Ok(())
}

/// Unitary generator `φ_*(Ṽ)` taking `Jλ` to `μ`, and `S_λ(Ṽ) = φ_*(Ṽ) φ_*(Ṽ)ᵗ`.
fn generator(j: &DMatrix<f64>, l: &DMatrix<f64>, mu: &DMatrix<f64>) -> Result<(CMat, CMat)> {
    let m = real_orthonormal(mu);
    check_real_lagrangian(j, &m)?;
    let a = l.transpose() * &m;
    let b = (j * l).transpose() * &m;
    let cmat = to_complex(&b) - to_complex(&a) * c(0.0, 1.0);
    let k = cmat.ncols();
    let defect = max_abs(&(cmat.adjoint() * &cmat - identity(k)));
    if defect > 1e-6 {
        return Err(Error::NonUnitaryGenerator { defect });
    }
    let cmat = polar_unitary(&cmat);
    let s = &cmat * cmat.transpose();
    Ok((cmat, s))
}

/// Compares the complex Maslov index with the real-category index through `-1`.
pub fn complexify_and_compare(data: &RealSymplecticData, opts: &FlowOptions) -> Result<RealComparison> {
    let j = &data.j;
    let n = j.nrows();
    if !n.is_multiple_of(2) || j.ncols() != n {
        return Err(Error::InvalidComplexStructure);
    }
    let sq = j * j + DMatrix::<f64>::identity(n, n);
    let skew = j + j.transpose();
    if sq.abs().max() > 1e-10 || skew.abs().max() > 1e-10 {
        return Err(Error::InvalidComplexStructure);
    }
    let l = real_orthonormal(&data.lambda);
    check_real_lagrangian(j, &l)?;
    let jc = to_complex(j);
    let space = make_space(jc.clone())?;
    let lc = Subspace::span(&to_complex(&l));

    let mu_path = data.mu_path.clone();
    let sp = space.clone();
    let lam = lc.clone();
    let path = PairPath::new(
        move |s| Ok(PairSample { space: sp.clone(), lambda: lam.clone(), mu: Subspace::span(&to_complex(&mu_path(s))) }),
        data.interval,
    );
    let (mas, rep) = maslov_index(&path, opts)?;

    let (jr, lr, mp) = (j.clone(), l.clone(), data.mu_path.clone());
    let s_of = move |s: f64| generator(&jr, &lr, &mp(s)).map(|(_, sm)| sm);
    let fam = SFamily { f: &s_of, tau_unit: opts.tau_unit };
    let (mas_bf, rep_bf) = flow::spectral_flow_family(&fam, data.interval, opts)?;

    // H⁻ basis f_k = (I + iJ) L e_k / √2, orthonormal.
    let ff = (identity(n) + &jc * c(0.0, 1.0)) * to_complex(&l) * c(FRAC_1_SQRT_2, 0.0);
    let split = make_splitting(&space)?;
    let u = graph_rep(&space, &split, &lc)?.u_matrix;
    let uinv = inverse(&u).ok_or(Error::NotLagrangian)?;
    let q = ff.adjoint() * split.minus_frame();
    let mut points: Vec<f64> = (0..=32)
        .map(|k| data.interval.0 + (data.interval.1 - data.interval.0) * k as f64 / 32.0)
        .collect();
    points.extend(rep.partition.iter().chain(rep_bf.partition.iter()));
    let mut residual = 0.0_f64;
    for s in points {
        let mu = Subspace::span(&to_complex(&(data.mu_path)(s)));
        let v = graph_rep(&space, &split, &mu)?.u_matrix;
        let (_, sm) = generator(j, &l, &(data.mu_path)(s))?;
        let vu = &q * (v * &uinv) * q.adjoint();
        residual = residual.max((vu + sm.map(|z| z.conj())).norm());
    }
    Ok(RealComparison { mas, mas_bf, residual })
}

struct SFamily<'a, F> {
    f: &'a F,
    tau_unit: f64,
}

impl<F: Fn(f64) -> Result<CMat> + Sync> SpectralFamily for SFamily<'_, F> {
    fn sample(&self, s: f64) -> Result<Vec<f64>> {
        matrix_coords(&(self.f)(s)?, CoorientedLine::UnitCircleAtMinusOneDownward, s, self.tau_unit)
    }

    fn scale(&self) -> Option<f64> {
        Some(std::f64::consts::PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CVec, C64};
    use std::f64::consts::PI;

    fn rotation_path(turns: f64) -> PairPath {
        let j = CMat::from_diagonal(&CVec::from_row_slice(&[c(0., -1.), c(0., 1.)]));
        let space = make_space(j).unwrap();
        let delta = Subspace::span(&CMat::from_column_slice(2, 1, &[c(1., 0.), c(1., 0.)]));
        PairPath::new(
            move |s| {
                let mu = Subspace::span(&CMat::from_column_slice(
                    2,
                    1,
                    &[c(1., 0.), C64::from_polar(1.0, 2.0 * PI * turns * s)],
                ));
                Ok(PairSample { space: space.clone(), lambda: delta.clone(), mu })
            },
            (0.0, 1.0),
        )
    }

    fn opts() -> FlowOptions {
        FlowOptions::default()
    }

    #[test]
    fn rotation_pair_is_plus_one() {
        let p = rotation_path(1.0);
        assert_eq!(maslov_index(&p, &opts()).unwrap().0, 1);
        assert_eq!(maslov_index_block(&p, &opts()).unwrap(), 1);
        let ids = maslov_product_identities(&p, &opts()).unwrap();
        assert_eq!(ids, ProductIdentities { pair: 1, boxplus: 1, swapped: 1, flipped: 1 });
    }

    #[test]
    fn constant_pair_is_zero() {
        let p = rotation_path(0.0);
        assert_eq!(maslov_index(&p, &opts()).unwrap().0, 0);
        assert_eq!(maslov_index_block(&p, &opts()).unwrap(), 0);
        let ids = maslov_product_identities(&p, &opts()).unwrap();
        assert_eq!(ids, ProductIdentities { pair: 0, boxplus: 0, swapped: 0, flipped: 0 });
    }

    #[test]
    fn deformed_metric_rotation() {
        let p = rotation_path(1.0);
        let g: MetricPath = Arc::new(|_| CMat::from_diagonal(&CVec::from_row_slice(&[c(2., 0.), c(3., 0.)])));
        assert_eq!(splitting_independence_check(&p, g, &opts()).unwrap(), (1, 1));
        let id: MetricPath = Arc::new(|_| identity(2));
        assert_eq!(splitting_independence_check(&p, id, &opts()).unwrap(), (1, 1));
    }

    #[test]
    fn boxplus_examples() {
        let e1 = Subspace::span(&CMat::from_column_slice(2, 1, &[c(1., 0.), c(0., 0.)]));
        let e2 = Subspace::span(&CMat::from_column_slice(2, 1, &[c(0., 0.), c(1., 0.)]));
        let std = make_space(CMat::from_row_slice(2, 2, &[c(0., 0.), c(-1., 0.), c(1., 0.), c(0., 0.)])).unwrap();
        let big = boxplus(&std, &std).unwrap();
        let (lm, d) = boxplus_pair(&e1, &e1).unwrap();
        assert_eq!(crate::symplectic::pair_index(&big, &lm, &d).unwrap().dim_intersection, 1);
        let (lm, d) = boxplus_pair(&e1, &e2).unwrap();
        let pi = crate::symplectic::pair_index(&big, &lm, &d).unwrap();
        assert_eq!((pi.dim_intersection, pi.codim_sum, pi.index), (0, 0, 0));
        assert!(boxplus_pair(&e1, &Subspace::zero(3)).is_err());
    }

    fn real_rotation(rate: f64) -> RealSymplecticData {
        let j = DMatrix::from_row_slice(2, 2, &[0., -1., 1., 0.]);
        let lambda = DMatrix::from_column_slice(2, 1, &[1., 0.]);
        RealSymplecticData {
            j,
            lambda,
            mu_path: Arc::new(move |s| DMatrix::from_column_slice(2, 1, &[(PI * rate * s).cos(), (PI * rate * s).sin()])),
            interval: (0.0, 1.0),
        }
    }

    #[test]
    fn real_rotation_comparison() {
        let r = complexify_and_compare(&real_rotation(1.0), &opts()).unwrap();
        assert!(r.residual <= 1e-9, "residual {}", r.residual);
        assert_eq!(r.mas, -r.mas_bf);
        assert_eq!((r.mas, r.mas_bf), (1, -1));
        let r = complexify_and_compare(&real_rotation(0.0), &opts()).unwrap();
        assert_eq!((r.mas, r.mas_bf), (0, 0));
        assert!(r.residual <= 1e-9);
    }

    #[test]
    fn real_rejects_bad_structure() {
        let mut d = real_rotation(1.0);
        d.j = DMatrix::from_row_slice(2, 2, &[0., -2., 0.5, 0.]);
        assert!(matches!(complexify_and_compare(&d, &opts()), Err(Error::InvalidComplexStructure)));
        let mut d = real_rotation(1.0);
        d.lambda = DMatrix::from_column_slice(2, 2, &[1., 0., 0., 1.]);
        assert!(matches!(complexify_and_compare(&d, &opts()), Err(Error::NotLagrangianReal)));
    }
}
