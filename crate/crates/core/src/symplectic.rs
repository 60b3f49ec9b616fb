//! Finite-dimensional complex symplectic linear algebra.
//!
//! The form is `ω(x, y) = y† J x` for a skew-Hermitian invertible `J`.
//! Splittings come from the eigenspaces of the Hermitian matrix `K = -iJ`,
//! and Lagrangian subspaces are represented as graphs of unitary maps
//! between the two halves.

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, eigh, hermitian_sqrt, hstack, identity, inverse, max_abs, orthogonal_complement,
    orthonormal_basis, principal_cosines, singular_values, CMat, CVec, C64, TAU_RANK, TAU_SYM,
};

/// A complex vector space with a nondegenerate skew-Hermitian form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    form: CMat,
}

impl SymplecticSpace {
    pub fn dim(&self) -> usize {
        self.form.nrows()
    }

    pub fn form(&self) -> &CMat {
        &self.form
    }

    /// `ω(x, y) = y† J x`.
    pub fn omega(&self, x: &CVec, y: &CVec) -> C64 {
        (y.adjoint() * &self.form * x)[(0, 0)]
    }

    /// The same space with `-ω`.
    pub fn negated(&self) -> SymplecticSpace {
        SymplecticSpace { form: -&self.form }
    }

    /// Gram matrix `F† J F` of the form on a frame.
    pub fn gram(&self, frame: &CMat) -> CMat {
        frame.adjoint() * &self.form * frame
    }
}

/// Validates `J` and wraps it as a symplectic space.
pub fn make_space(j: CMat) -> Result<SymplecticSpace> {
    let (r, k) = j.shape();
    if r != k || r == 0 {
        return Err(Error::NotSquare { rows: r, cols: k });
    }
    let scale = max_abs(&j);
    let defect = max_abs(&(j.adjoint() + &j));
    if defect > TAU_SYM * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSkewHermitian { defect });
    }
    let s = singular_values(&j);
    let ratio = s.last().unwrap() / s[0];
    if s[0] == 0.0 || ratio <= TAU_RANK {
        return Err(Error::Degenerate { ratio: if s[0] == 0.0 { 0.0 } else { ratio } });
    }
    Ok(SymplecticSpace { form: j })
}

/// A linear subspace held as an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: CMat,
}

impl Subspace {
    /// Span of the columns, re-orthonormalized.
    pub fn span(vectors: &CMat) -> Subspace {
        Subspace { frame: orthonormal_basis(vectors) }
    }

    pub fn zero(n: usize) -> Subspace {
        Subspace { frame: CMat::zeros(n, 0) }
    }

    pub fn full(n: usize) -> Subspace {
        Subspace { frame: identity(n) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    /// Euclidean orthogonal complement.
    pub fn orthogonal(&self) -> Subspace {
        Subspace { frame: orthogonal_complement(&self.frame, self.ambient_dim()) }
    }

    /// Image under a linear map.
    pub fn image(&self, map: &CMat) -> Subspace {
        Subspace::span(&(map * &self.frame))
    }

    /// Dimension of the intersection, counted by principal angles.
    pub fn intersection_dim(&self, other: &Subspace) -> usize {
        principal_cosines(&self.frame, &other.frame)
            .into_iter()
            .filter(|&s| s >= 1.0 - TAU_RANK)
            .count()
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        self.intersection_dim(other) == other.dim()
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.contains(other)
    }

    fn check_ambient(&self, n: usize) -> Result<()> {
        if self.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.ambient_dim() });
        }
        Ok(())
    }
}

/// The ω-annihilator `{y : ω(x, y) = 0 for all x in λ}`.
pub fn annihilator(space: &SymplecticSpace, lambda: &Subspace) -> Result<Subspace> {
    lambda.check_ambient(space.dim())?;
    // y ⊥ Jλ in the Euclidean sense.
    let jl = Subspace::span(&(space.form() * lambda.frame()));
    Ok(jl.orthogonal())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Isotropic,
    Coisotropic,
    Lagrangian,
    General,
}

pub fn classify(space: &SymplecticSpace, lambda: &Subspace) -> Result<Class> {
    let ann = annihilator(space, lambda)?;
    let iso = ann.contains(lambda);
    let coiso = lambda.contains(&ann);
    Ok(match (iso, coiso) {
        (true, true) => Class::Lagrangian,
        (true, false) => Class::Isotropic,
        (false, true) => Class::Coisotropic,
        (false, false) => Class::General,
    })
}

/// Intersection dimension, codimension of the sum, and Fredholm index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub dim_intersection: usize,
    pub codim_sum: usize,
    pub index: i64,
}

pub fn pair_index(space: &SymplecticSpace, lambda: &Subspace, mu: &Subspace) -> Result<PairIndex> {
    let n = space.dim();
    lambda.check_ambient(n)?;
    mu.check_ambient(n)?;
    let dim_intersection = lambda.intersection_dim(mu);
    // For stacked orthonormal frames σ² = 1 - cos θ, so σ ≤ √τ matches the angle test.
    let stacked = hstack(lambda.frame(), mu.frame());
    let sum = singular_values(&stacked).into_iter().filter(|&s| s > TAU_RANK.sqrt()).count();
    let codim_sum = n - sum;
    Ok(PairIndex { dim_intersection, codim_sum, index: dim_intersection as i64 - codim_sum as i64 })
}

/// An ω-orthogonal decomposition `H = H⁺ ⊕ H⁻` with `∓iω` positive on `H^±`.
#[derive(Debug, Clone)]
pub struct Splitting {
    plus: Subspace,
    minus: Subspace,
    plus_h: CMat,
    minus_h: CMat,
    coords: CMat,
    projection: CMat,
    metric_plus: CMat,
    metric_minus: CMat,
}

impl Splitting {
    pub fn plus(&self) -> &Subspace {
        &self.plus
    }

    pub fn minus(&self) -> &Subspace {
        &self.minus
    }

    /// Projection onto `H⁺` along `H⁻`.
    pub fn projection(&self) -> &CMat {
        &self.projection
    }

    /// Gram matrix of `h₊ = -iω` on the orthonormal frame of `H⁺`.
    pub fn metric_plus(&self) -> &CMat {
        &self.metric_plus
    }

    /// Gram matrix of `h₋ = iω` on the orthonormal frame of `H⁻`.
    pub fn metric_minus(&self) -> &CMat {
        &self.metric_minus
    }

    /// `h₊`-orthonormal frame of `H⁺`.
    pub fn plus_frame(&self) -> &CMat {
        &self.plus_h
    }

    /// `h₋`-orthonormal frame of `H⁻`.
    pub fn minus_frame(&self) -> &CMat {
        &self.minus_h
    }

    pub fn is_balanced(&self) -> bool {
        self.plus.dim() == self.minus.dim()
    }

    /// Coordinates `(a, b)` of `x = F⁺a + F⁻b` in the h-orthonormal frames.
    pub fn coordinates(&self, x: &CMat) -> (CMat, CMat) {
        let p = self.plus.dim();
        let all = &self.coords * x;
        let q = all.nrows() - p;
        (all.rows(0, p).into_owned(), all.rows(p, q).into_owned())
    }

    fn from_bases(space: &SymplecticSpace, plus: &CMat, minus: &CMat) -> Result<Splitting> {
        let k = space.form() * c(0.0, -1.0);
        let plus = Subspace::span(plus);
        let minus = Subspace::span(minus);
        let metric_plus = plus.frame().adjoint() * &k * plus.frame();
        let metric_minus = -(minus.frame().adjoint() * &k * minus.frame());
        let plus_h = h_orthonormal(plus.frame(), &metric_plus)?;
        let minus_h = h_orthonormal(minus.frame(), &metric_minus)?;
        let cross = max_abs(&(minus.frame().adjoint() * space.form() * plus.frame()));
        if cross > 1e2 * TAU_SYM * max_abs(space.form()) {
            return Err(Error::BadMetric);
        }
        let basis = hstack(&plus_h, &minus_h);
        let coords = inverse(&basis).ok_or(Error::Degenerate { ratio: 0.0 })?;
        let pdim = plus.dim();
        let projection = &plus_h * coords.rows(0, pdim);
        Ok(Splitting { plus, minus, plus_h, minus_h, coords, projection, metric_plus, metric_minus })
    }
}

fn h_orthonormal(frame: &CMat, gram: &CMat) -> Result<CMat> {
    if frame.ncols() == 0 {
        return Ok(frame.clone());
    }
    let herm = (gram + gram.adjoint()) * c(0.5, 0.0);
    let e = eigh(&herm);
    if e.values[0] <= TAU_RANK * e.values.last().unwrap().abs() {
        return Err(Error::Degenerate { ratio: e.values[0] });
    }
    let chol = herm.cholesky().ok_or(Error::Degenerate { ratio: 0.0 })?;
    let l = chol.unpack();
    let linv_adj = inverse(&l.adjoint()).ok_or(Error::Degenerate { ratio: 0.0 })?;
    Ok(frame * linv_adj)
}

fn sign_split(vectors: &CMat, values: &[f64]) -> (CMat, CMat) {
    let n = vectors.nrows();
    // Descending order of eigenvalues for the positive part.
    let pos: Vec<usize> = (0..values.len()).rev().filter(|&i| values[i] > 0.0).collect();
    let neg: Vec<usize> = (0..values.len()).rev().filter(|&i| values[i] < 0.0).collect();
    let pick = |idx: &[usize]| {
        let mut m = CMat::zeros(n, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            m.set_column(j, &vectors.column(i));
        }
        m
    };
    (pick(&pos), pick(&neg))
}

/// Canonical splitting from the eigenspaces of `K = -iJ`.
pub fn make_splitting(space: &SymplecticSpace) -> Result<Splitting> {
    let k = space.form() * c(0.0, -1.0);
    let e = eigh(&k);
    let top = e.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if e.values.iter().any(|v| v.abs() <= TAU_RANK * top) {
        return Err(Error::Degenerate { ratio: 0.0 });
    }
    let (p, m) = sign_split(&e.vectors, &e.values);
    Splitting::from_bases(space, &p, &m)
}

/// Splitting induced by the inner product with Gram matrix `G`:
/// eigenspaces of the `G`-self-adjoint operator `-iG⁻¹J`.
pub fn make_splitting_with_metric(space: &SymplecticSpace, g: &CMat) -> Result<Splitting> {
    let n = space.dim();
    if g.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, found: g.nrows() });
    }
    if linalg::hermitian_defect(g) > TAU_SYM * max_abs(g).max(1.0) {
        return Err(Error::BadMetric);
    }
    let (_, gis) = hermitian_sqrt(g).ok_or(Error::BadMetric)?;
    let k = space.form() * c(0.0, -1.0);
    let e = eigh(&(&gis * k * &gis));
    let (p, m) = sign_split(&e.vectors, &e.values);
    Splitting::from_bases(space, &(&gis * p), &(&gis * m))
}

/// A Lagrangian subspace as the graph of `U: H⁺ → H⁻` in h-orthonormal frames.
#[derive(Debug, Clone)]
pub struct GraphRep {
    pub u_matrix: CMat,
    pub splitting: Splitting,
}

impl GraphRep {
    /// Rebuilds the subspace `{F⁺x + F⁻Ux}`.
    pub fn reconstruct(&self) -> Subspace {
        Subspace::span(&(self.splitting.plus_frame() + self.splitting.minus_frame() * &self.u_matrix))
    }

    /// `max|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let k = self.u_matrix.ncols();
        max_abs(&(self.u_matrix.adjoint() * &self.u_matrix - identity(k)))
    }
}

pub fn graph_rep(space: &SymplecticSpace, splitting: &Splitting, lambda: &Subspace) -> Result<GraphRep> {
    if !splitting.is_balanced() {
        return Err(Error::UnbalancedSplitting { plus: splitting.plus.dim(), minus: splitting.minus.dim() });
    }
    if classify(space, lambda)? != Class::Lagrangian {
        return Err(Error::NotLagrangian);
    }
    graph_matrix(splitting, lambda).map(|u| GraphRep { u_matrix: u, splitting: splitting.clone() })
}

/// `U = B A⁻¹` where `(A, B)` are the coordinates of a frame of λ.
pub(crate) fn graph_matrix(splitting: &Splitting, lambda: &Subspace) -> Result<CMat> {
    let (a, b) = splitting.coordinates(lambda.frame());
    if a.nrows() != a.ncols() {
        return Err(Error::NotLagrangian);
    }
    let ainv = inverse(&a).ok_or(Error::NotLagrangian)?;
    Ok(b * ainv)
}

/// `W = U V⁻¹` for the graph representations of λ and μ.
pub fn pair_unitary(space: &SymplecticSpace, splitting: &Splitting, lambda: &Subspace, mu: &Subspace) -> Result<CMat> {
    let u = graph_rep(space, splitting, lambda)?.u_matrix;
    let v = graph_rep(space, splitting, mu)?.u_matrix;
    let vinv = inverse(&v).ok_or(Error::NotLagrangian)?;
    Ok(u * vinv)
}

/// Number of eigenvalues of a unitary matrix within `TAU_PHASE` of 1.
pub fn unit_multiplicity(w: &CMat) -> usize {
    linalg::eigenvalues(w)
        .into_iter()
        .filter(|z| (z - c(1.0, 0.0)).norm() <= crate::linalg::TAU_PHASE)
        .count()
}

/// Inner product `G = (J†J)^{1/2}` and `J' = G⁻¹J`, with `J'² = -I` and the same ω.
pub fn normalize_metric(space: &SymplecticSpace) -> Result<(CMat, CMat)> {
    let j = space.form();
    let (g, gi) = hermitian_sqrt(&(j.adjoint() * j)).ok_or(Error::Degenerate { ratio: 0.0 })?;
    let jp = gi * j;
    Ok((g, jp))
}
