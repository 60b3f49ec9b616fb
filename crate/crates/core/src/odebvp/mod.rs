//! Linear Hamiltonian and Sturm–Liouville boundary-value families on `[0, T]`.
//!
//! First-order operators `-j x' - b x - ½ j' x` and second-order operators
//! `-(p x' + q x)' + q* x' + r x` are reduced to a linear system
//! `Γ' = (F₀(t) + λ F₁(t)) Γ` whose fundamental solution is transported by
//! fixed-step RK4. Boundary conditions are Lagrangian subspaces of the
//! boundary form on `ℂ^{2m}` (first order) or `ℂ^{4m}` (second order).

mod shooting;

use std::sync::Arc;

pub use shooting::{
    eigen_count, long_index_identity, mas_bvp, mas_bvp_with_diagnostics, maslov_long, sf_bvp, BvpDiagnostics,
    BvpOptions, LongIndexReport,
};

use crate::error::{Error, Result};
use crate::linalg::{c, direct_sum, hermitian_defect, hstack, identity, inverse, max_abs, vstack, CMat, TAU_RANK};
use crate::symplectic::{make_space, Subspace, SymplecticSpace};

/// Matrix-valued coefficient `(s, t) ↦ M`.
pub type Coefficient = Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>;

/// `A_s x = -j x' - b x - ½ j' x` on `[0, T]`.
#[derive(Clone)]
pub struct FirstOrderFamily {
    pub m: usize,
    pub t_len: f64,
    pub j: Coefficient,
    /// Analytic `∂j/∂t`; finite differences when absent.
    pub jdot: Option<Coefficient>,
    pub b: Coefficient,
}

/// `L_s x = -(p x' + q x)' + q* x' + r x` on `[0, T]`.
#[derive(Clone)]
pub struct SecondOrderFamily {
    pub m: usize,
    pub t_len: f64,
    pub p: Coefficient,
    pub q: Coefficient,
    pub r: Coefficient,
}

#[derive(Clone)]
pub enum BvpFamily {
    First(FirstOrderFamily),
    Second(SecondOrderFamily),
}

impl From<FirstOrderFamily> for BvpFamily {
    fn from(f: FirstOrderFamily) -> Self {
        BvpFamily::First(f)
    }
}

impl From<SecondOrderFamily> for BvpFamily {
    fn from(f: SecondOrderFamily) -> Self {
        BvpFamily::Second(f)
    }
}

/// A path of boundary conditions `s ↦ W_s`.
#[derive(Clone)]
pub struct BoundaryPath {
    w: Arc<dyn Fn(f64) -> Subspace + Send + Sync>,
}

impl BoundaryPath {
    pub fn new<F: Fn(f64) -> Subspace + Send + Sync + 'static>(f: F) -> Self {
        BoundaryPath { w: Arc::new(f) }
    }

    pub fn constant(w: Subspace) -> Self {
        BoundaryPath::new(move |_| w.clone())
    }

    pub fn at(&self, s: f64) -> Subspace {
        (self.w)(s)
    }
}

/// `J = [[0, -I], [I, 0]]` of size `2m`.
pub fn standard_j(m: usize) -> CMat {
    let mut j = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = c(-1.0, 0.0);
        j[(m + i, i)] = c(1.0, 0.0);
    }
    j
}

fn checked_inverse(a: &CMat) -> Option<CMat> {
    let s = crate::linalg::singular_values(a);
    if s.is_empty() || s[0] == 0.0 || *s.last().unwrap() <= TAU_RANK * s[0] {
        return None;
    }
    inverse(a)
}

impl FirstOrderFamily {
    /// Boundary form `diag(-j(s,0), j(s,T))`.
    pub fn boundary_space(&self, s: f64) -> Result<SymplecticSpace> {
        make_space(direct_sum(&(-(self.j)(s, 0.0)), &(self.j)(s, self.t_len)))
    }

    fn jdot_at(&self, s: f64, t: f64, eps: f64) -> CMat {
        if let Some(d) = &self.jdot {
            return d(s, t);
        }
        // Fourth-order stencils; one-sided within 2ε of either end.
        let j = &self.j;
        let at = |k: f64| j(s, t + k * eps);
        let inv = c(1.0 / (12.0 * eps), 0.0);
        let one_sided = |dir: f64| {
            (at(0.0) * c(-25.0, 0.0) + at(dir) * c(48.0, 0.0) - at(2.0 * dir) * c(36.0, 0.0)
                + at(3.0 * dir) * c(16.0, 0.0)
                - at(4.0 * dir) * c(3.0, 0.0))
                * c(dir, 0.0)
        };
        let d = if t - 2.0 * eps < 0.0 {
            one_sided(1.0)
        } else if t + 2.0 * eps > self.t_len {
            one_sided(-1.0)
        } else {
            (at(1.0) - at(-1.0)) * c(8.0, 0.0) - at(2.0) + at(-2.0)
        };
        d * inv
    }

    /// `(F₀, F₁)` with `x' = (F₀ + λF₁) x`, `F₀ = -j⁻¹(b + ½j')`, `F₁ = -j⁻¹`.
    fn generator(&self, s: f64, t: f64, eps: f64) -> Result<(CMat, CMat)> {
        let j = (self.j)(s, t);
        let jinv = checked_inverse(&j).ok_or(Error::SingularJ { t })?;
        let jd = self.jdot_at(s, t, eps);
        let f0 = -(&jinv * ((self.b)(s, t) + jd * c(0.5, 0.0)));
        Ok((f0, -jinv))
    }
}

/// Hamiltonian coefficient `b_{s,λ}(t)` of the reduced first-order system.
pub fn reduce_second_order(fam: &SecondOrderFamily, s: f64, lambda: f64, t: f64) -> Result<CMat> {
    let p = (fam.p)(s, t);
    let q = (fam.q)(s, t);
    let r = (fam.r)(s, t);
    let pinv = checked_inverse(&p).ok_or(Error::SingularP { t })?;
    let m = fam.m;
    let mut b = CMat::zeros(2 * m, 2 * m);
    let pq = &pinv * &q;
    b.view_mut((0, 0), (m, m)).copy_from(&pinv);
    b.view_mut((0, m), (m, m)).copy_from(&(-&pq));
    b.view_mut((m, 0), (m, m)).copy_from(&(-(q.adjoint() * &pinv)));
    let lr = q.adjoint() * &pq - r + identity(m) * c(lambda, 0.0);
    b.view_mut((m, m), (m, m)).copy_from(&lr);
    Ok(b)
}

impl SecondOrderFamily {
    /// Boundary form `(-J) ⊕ J` on `ℂ^{4m}`.
    pub fn boundary_space(&self) -> SymplecticSpace {
        let j = standard_j(self.m);
        make_space(direct_sum(&(-&j), &j)).expect("standard form is valid")
    }

    fn generator(&self, s: f64, t: f64) -> Result<(CMat, CMat)> {
        let j = standard_j(self.m);
        let b = reduce_second_order(self, s, 0.0, t)?;
        let mut e = CMat::zeros(2 * self.m, 2 * self.m);
        e.view_mut((self.m, self.m), (self.m, self.m)).copy_from(&identity(self.m));
        Ok((&j * b, j * e))
    }
}

/// Boundary vector `(p x' + q x, x)` at `t = 0` and `t = T`.
pub fn trace_map_second(
    fam: &SecondOrderFamily,
    s: f64,
    x0: &CMat,
    dx0: &CMat,
    xt: &CMat,
    dxt: &CMat,
) -> CMat {
    let t = fam.t_len;
    let u10 = (fam.p)(s, 0.0) * dx0 + (fam.q)(s, 0.0) * x0;
    let u1t = (fam.p)(s, t) * dxt + (fam.q)(s, t) * xt;
    vstack(&vstack(&u10, x0), &vstack(&u1t, xt))
}

/// Graph `{(z, Γz)}`.
pub fn graph_subspace(gamma: &CMat) -> Subspace {
    Subspace::span(&vstack(&identity(gamma.ncols()), gamma))
}

/// `W(R) = {(x, y, z, u) : (x, -z) ∈ R^⊥, (y, u) ∈ R}` for `R ⊆ ℂ^{2m}`.
pub fn w_of_r(r: &Subspace) -> Subspace {
    let m = r.ambient_dim() / 2;
    let fr = r.frame();
    let perp = r.orthogonal();
    let fp = perp.frame();
    let z = |rows: usize, cols: usize| CMat::zeros(rows, cols);
    let from_r = vstack(
        &vstack(&z(m, fr.ncols()), &fr.rows(0, m).into_owned()),
        &vstack(&z(m, fr.ncols()), &fr.rows(m, m).into_owned()),
    );
    let from_perp = vstack(
        &vstack(&fp.rows(0, m).into_owned(), &z(m, fp.ncols())),
        &vstack(&(-fp.rows(m, m).into_owned()), &z(m, fp.ncols())),
    );
    Subspace::span(&hstack(&from_r, &from_perp))
}

/// Coefficients of `Γ' = (F₀ + λF₁)Γ` sampled at the RK4 half steps for one `s`.
pub(crate) struct Generator {
    n: usize,
    steps: usize,
    h: f64,
    f0: Vec<CMat>,
    f1: Vec<CMat>,
}

impl Generator {
    pub(crate) fn build(fam: &BvpFamily, s: f64, t_end: f64, steps: usize) -> Result<Generator> {
        let h = t_end / steps as f64;
        let mut f0 = Vec::with_capacity(2 * steps + 1);
        let mut f1 = Vec::with_capacity(2 * steps + 1);
        for k in 0..=2 * steps {
            let t = if k == 2 * steps { t_end } else { k as f64 * h / 2.0 };
            let (a, b) = generator_at(fam, s, t, steps)?;
            f0.push(a);
            f1.push(b);
        }
        let n = f0[0].nrows();
        Ok(Generator { n, steps, h, f0, f1 })
    }

    fn rk4_step(&self, g: &mut [C64x], idx: usize, lambda: f64, ws: &mut Workspace) {
        let n = self.n;
        let h = self.h;
        let fill = |out: &mut Vec<C64x>, i: usize| {
            for (k, v) in out.iter_mut().enumerate() {
                let (r, cidx) = (k / n, k % n);
                *v = self.f0[i][(r, cidx)] + self.f1[i][(r, cidx)] * lambda;
            }
        };
        fill(&mut ws.fa, 2 * idx);
        fill(&mut ws.fb, 2 * idx + 1);
        fill(&mut ws.fc, 2 * idx + 2);
        matmul(n, &ws.fa, g, &mut ws.k1);
        axpy_into(g, &ws.k1, h / 2.0, &mut ws.tmp);
        matmul(n, &ws.fb, &ws.tmp, &mut ws.k2);
        axpy_into(g, &ws.k2, h / 2.0, &mut ws.tmp);
        matmul(n, &ws.fb, &ws.tmp, &mut ws.k3);
        axpy_into(g, &ws.k3, h, &mut ws.tmp);
        matmul(n, &ws.fc, &ws.tmp, &mut ws.k4);
        for (i, gi) in g.iter_mut().enumerate().take(n * n) {
            *gi += (ws.k1[i] + (ws.k2[i] + ws.k3[i]) * 2.0 + ws.k4[i]) * (h / 6.0);
        }
    }

    /// `Γ(T)` for the shift `λ`.
    pub(crate) fn solve(&self, lambda: f64) -> CMat {
        let n = self.n;
        let mut ws = Workspace::new(n);
        let mut g = eye_flat(n);
        for k in 0..self.steps {
            self.rk4_step(&mut g, k, lambda, &mut ws);
        }
        CMat::from_row_slice(n, n, &g)
    }

    /// `Γ` at every grid point `k h`.
    pub(crate) fn solve_path(&self, lambda: f64) -> Vec<CMat> {
        let n = self.n;
        let mut ws = Workspace::new(n);
        let mut g = eye_flat(n);
        let mut out = vec![CMat::from_row_slice(n, n, &g)];
        for k in 0..self.steps {
            self.rk4_step(&mut g, k, lambda, &mut ws);
            out.push(CMat::from_row_slice(n, n, &g));
        }
        out
    }
}

type C64x = crate::linalg::C64;

fn generator_at(fam: &BvpFamily, s: f64, t: f64, steps: usize) -> Result<(CMat, CMat)> {
    match fam {
        BvpFamily::First(f) => f.generator(s, t, f.t_len / (8.0 * steps as f64)),
        BvpFamily::Second(f) => f.generator(s, t),
    }
}

struct Workspace {
    fa: Vec<C64x>,
    fb: Vec<C64x>,
    fc: Vec<C64x>,
    k1: Vec<C64x>,
    k2: Vec<C64x>,
    k3: Vec<C64x>,
    k4: Vec<C64x>,
    tmp: Vec<C64x>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = vec![c(0.0, 0.0); n * n];
        Workspace {
            fa: z.clone(),
            fb: z.clone(),
            fc: z.clone(),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn eye_flat(n: usize) -> Vec<C64x> {
    let mut g = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        g[i * n + i] = c(1.0, 0.0);
    }
    g
}

fn matmul(n: usize, a: &[C64x], b: &[C64x], out: &mut [C64x]) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] = acc;
        }
    }
}

fn axpy_into(x: &[C64x], y: &[C64x], a: f64, out: &mut [C64x]) {
    for i in 0..x.len() {
        out[i] = x[i] + y[i] * a;
    }
}

impl BvpFamily {
    pub fn m(&self) -> usize {
        match self {
            BvpFamily::First(f) => f.m,
            BvpFamily::Second(f) => f.m,
        }
    }

    /// Dimension of the transported state: `m` or `2m`.
    pub fn state_dim(&self) -> usize {
        match self {
            BvpFamily::First(f) => f.m,
            BvpFamily::Second(f) => 2 * f.m,
        }
    }

    pub fn t_len(&self) -> f64 {
        match self {
            BvpFamily::First(f) => f.t_len,
            BvpFamily::Second(f) => f.t_len,
        }
    }

    /// Boundary symplectic space at `s`.
    pub fn boundary_space(&self, s: f64) -> Result<SymplecticSpace> {
        match self {
            BvpFamily::First(f) => f.boundary_space(s),
            BvpFamily::Second(f) => Ok(f.boundary_space()),
        }
    }

    /// Fundamental solution at `T` of the `λ`-shifted system.
    pub fn transfer(&self, s: f64, lambda: f64, steps: usize) -> Result<CMat> {
        Ok(Generator::build(self, s, self.t_len(), steps)?.solve(lambda))
    }

    /// Transport residual `‖Γ†j(T)Γ - j(0)‖` or `‖Γ†JΓ - J‖`.
    pub fn transport_residual(&self, s: f64, gamma: &CMat) -> f64 {
        match self {
            BvpFamily::First(f) => {
                (gamma.adjoint() * (f.j)(s, f.t_len) * gamma - (f.j)(s, 0.0)).norm()
            }
            BvpFamily::Second(f) => {
                let j = standard_j(f.m);
                (gamma.adjoint() * &j * gamma - j).norm()
            }
        }
    }

    /// Checks Hermitian/skew-Hermitian structure of the coefficients on a grid.
    pub fn validate(&self, s: f64, points: usize) -> Result<()> {
        let t_len = self.t_len();
        for k in 0..=points {
            let t = t_len * k as f64 / points as f64;
            match self {
                BvpFamily::First(f) => {
                    let j = (f.j)(s, t);
                    let b = (f.b)(s, t);
                    let scale = max_abs(&j).max(1.0);
                    if max_abs(&(j.adjoint() + &j)) > 1e-10 * scale {
                        return Err(Error::NotSkewHermitian { defect: max_abs(&(j.adjoint() + &j)) });
                    }
                    if hermitian_defect(&b) > 1e-10 * max_abs(&b).max(1.0) {
                        return Err(Error::NotHermitian { s, defect: hermitian_defect(&b) });
                    }
                    checked_inverse(&j).ok_or(Error::SingularJ { t })?;
                }
                BvpFamily::Second(f) => {
                    let p = (f.p)(s, t);
                    let r = (f.r)(s, t);
                    if hermitian_defect(&p) > 1e-10 * max_abs(&p).max(1.0) {
                        return Err(Error::NotHermitian { s, defect: hermitian_defect(&p) });
                    }
                    if hermitian_defect(&r) > 1e-10 * max_abs(&r).max(1.0) {
                        return Err(Error::NotHermitian { s, defect: hermitian_defect(&r) });
                    }
                    checked_inverse(&p).ok_or(Error::SingularP { t })?;
                }
            }
        }
        Ok(())
    }
}

/// Fundamental solution `Γ_{s,λ}(T)` of a first-order family.
pub fn transfer_matrix(fam: &FirstOrderFamily, s: f64, lambda: f64, steps: usize) -> Result<CMat> {
    BvpFamily::First(fam.clone()).transfer(s, lambda, steps)
}

/// Boundary form of a first-order family at `s`.
pub fn boundary_space_first(fam: &FirstOrderFamily, s: f64) -> Result<SymplecticSpace> {
    fam.boundary_space(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::symplectic::{classify, Class};

    pub(crate) fn scalar(z: C64) -> CMat {
        CMat::from_element(1, 1, z)
    }

    fn free_first() -> FirstOrderFamily {
        FirstOrderFamily {
            m: 1,
            t_len: 1.0,
            j: Arc::new(|_, _| scalar(c(0.0, 1.0))),
            jdot: None,
            b: Arc::new(|_, _| scalar(c(0.0, 0.0))),
        }
    }

    #[test]
    fn transfer_closed_forms() {
        let f = free_first();
        let g = transfer_matrix(&f, 0.0, 0.0, 64).unwrap();
        assert!((g[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let g = transfer_matrix(&f, 0.0, 0.7, 2048).unwrap();
        assert!((g[(0, 0)] - C64::from_polar(1.0, 0.7)).norm() < 1e-12);
    }

    #[test]
    fn singular_j_is_reported() {
        let mut f = free_first();
        f.j = Arc::new(|_, t| scalar(c(0.0, t - 0.5)));
        assert!(matches!(transfer_matrix(&f, 0.0, 0.0, 64), Err(Error::SingularJ { .. })));
    }

    #[test]
    fn graph_examples() {
        let f = free_first();
        let sp = f.boundary_space(0.0).unwrap();
        let d = graph_subspace(&scalar(c(1.0, 0.0)));
        assert_eq!(classify(&sp, &d).unwrap(), Class::Lagrangian);
        let w = graph_subspace(&scalar(C64::from_polar(1.0, 1.3)));
        assert_eq!(classify(&sp, &w).unwrap(), Class::Lagrangian);
    }

    fn const_second(r: f64) -> SecondOrderFamily {
        SecondOrderFamily {
            m: 1,
            t_len: std::f64::consts::PI,
            p: Arc::new(|_, _| scalar(c(1.0, 0.0))),
            q: Arc::new(|_, _| scalar(c(0.0, 0.0))),
            r: Arc::new(move |_, _| scalar(c(r, 0.0))),
        }
    }

    #[test]
    fn reduction_examples() {
        let b = reduce_second_order(&const_second(0.0), 0.0, 0.0, 0.3).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert!(max_abs(&(&b - &expect)) < 1e-15);
        let jb = standard_j(1) * &b;
        let flow = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]);
        assert!(max_abs(&(jb - flow)) < 1e-15);
        let b = reduce_second_order(&const_second(2.5), 0.0, 0.0, 0.3).unwrap();
        assert!((b[(1, 1)] - c(-2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reduction_reproduces_kernel() {
        // -x'' - k x = 0 with x = sin(√k t), u = (x', x).
        let k = 1.7_f64;
        let fam = const_second(-k);
        for &t in &[0.1, 0.9, 2.3] {
            let b = reduce_second_order(&fam, 0.0, 0.0, t).unwrap();
            let w = k.sqrt();
            let u = CMat::from_column_slice(2, 1, &[c(w * (w * t).cos(), 0.0), c((w * t).sin(), 0.0)]);
            let du = CMat::from_column_slice(2, 1, &[c(-k * (w * t).sin(), 0.0), c(w * (w * t).cos(), 0.0)]);
            assert!(max_abs(&(standard_j(1) * b * u - du)) < 1e-14);
        }
    }

    #[test]
    fn trace_examples() {
        let fam = const_second(0.0);
        let pi = std::f64::consts::PI;
        let x0 = scalar(c(0.0, 0.0));
        let dx0 = scalar(c(1.0, 0.0));
        let xt = scalar(c(pi.sin(), 0.0));
        let dxt = scalar(c(pi.cos(), 0.0));
        let v = trace_map_second(&fam, 0.0, &x0, &dx0, &xt, &dxt);
        let expect = [1.0, 0.0, -1.0, 0.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((v[(i, 0)] - c(*e, 0.0)).norm() < 1e-15);
        }
        let zero = scalar(c(0.0, 0.0));
        let v = trace_map_second(&fam, 0.0, &zero, &zero, &zero, &zero);
        assert_eq!(max_abs(&v), 0.0);
        let dirichlet = w_of_r(&Subspace::zero(2));
        let v = trace_map_second(&fam, 0.0, &x0, &dx0, &scalar(c(0., 0.)), &scalar(c(-1.0, 0.0)));
        assert!(dirichlet.contains(&Subspace::span(&v)));
    }

    #[test]
    fn w_of_r_examples() {
        let sp = const_second(0.0).boundary_space();
        let e = |i: usize| {
            let mut v = CMat::zeros(4, 1);
            v[(i, 0)] = c(1.0, 0.0);
            v
        };
        let d = w_of_r(&Subspace::zero(2));
        assert!(d.same_as(&Subspace::span(&hstack(&e(0), &e(2)))));
        let n = w_of_r(&Subspace::full(2));
        assert!(n.same_as(&Subspace::span(&hstack(&e(1), &e(3)))));
        let per = w_of_r(&Subspace::span(&CMat::from_column_slice(2, 1, &[c(1., 0.), c(1., 0.)])));
        assert_eq!(per.dim(), 2);
        for w in [d, n, per] {
            assert_eq!(classify(&sp, &w).unwrap(), Class::Lagrangian);
        }
    }

    #[test]
    fn second_order_transport() {
        let fam = BvpFamily::Second(const_second(-1.5));
        let g = fam.transfer(0.0, 0.3, 2048).unwrap();
        assert!(fam.transport_residual(0.0, &g) < 1e-10);
        // x'' = -1.8 x from (x'(0), x(0)) = (1, 0)
        let w = 1.8_f64.sqrt();
        let pi = std::f64::consts::PI;
        assert!((g[(1, 0)] - c((w * pi).sin() / w, 0.0)).norm() < 1e-10);
    }
}
