//! Seeded generators for symplectic data.
//!
//! Each `(seed, suite, trial)` triple owns an independent ChaCha8 stream, so a
//! trial's draws do not depend on which other trials ran or in what order.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, eigh, identity, inverse, vstack, CMat, CVec, C64};
use crate::maslov::{PairPath, PairSample, RealSymplecticData};
use crate::odebvp::{standard_j, FirstOrderFamily, SecondOrderFamily};
use crate::symplectic::{make_space, Subspace, SymplecticSpace};

/// Generator for one trial of one suite.
pub fn trial_rng(seed: u64, suite: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((suite as u64) << 32) | trial as u64);
    rng
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(uniform(rng), uniform(rng)))
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = complex_matrix(rng, n, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// `I + 0.8 A / ‖A‖_F`, condition number at most 9.
pub fn near_identity(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = complex_matrix(rng, n, n);
    identity(n) + &a * c(0.8 / a.norm(), 0.0)
}

/// `exp(iH)` for Hermitian `H`.
pub fn unitary_exp(h: &CMat) -> CMat {
    let e = eigh(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(e.values.len(), e.values.iter().map(|&x| C64::from_polar(1.0, x))));
    &e.vectors * d * e.vectors.adjoint()
}

pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    unitary_exp(&(hermitian(rng, n) * c(std::f64::consts::PI, 0.0)))
}

/// `i diag(I_k, -I_k)`.
pub fn model_form(k: usize) -> CMat {
    let mut j = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, i)] = c(0.0, 1.0);
        j[(k + i, k + i)] = c(0.0, -1.0);
    }
    j
}

/// `span[I; U]`, Lagrangian for the model form.
pub fn model_lagrangian(u: &CMat) -> Subspace {
    Subspace::span(&vstack(&identity(u.nrows()), u))
}

/// `(C^{-†} J₀ C^{-1}, C)` for a random well-conditioned `C`.
pub fn random_space(rng: &mut ChaCha8Rng, k: usize) -> (SymplecticSpace, CMat) {
    let cm = near_identity(rng, 2 * k);
    let ci = inverse(&cm).expect("well-conditioned");
    let space = make_space(ci.adjoint() * model_form(k) * &ci).expect("transported form");
    (space, cm)
}

/// A path `s ↦ (C_s^{-†}J₀C_s^{-1}, C_s span[I; e^{iH_λ(s)}], C_s span[I; e^{iH_μ(s)}])`
/// with affine `C_s` and `H(s)`.
pub fn random_pair_path(rng: &mut ChaCha8Rng, k: usize) -> PairPath {
    let n = 2 * k;
    let a0 = complex_matrix(rng, n, n);
    let a1 = complex_matrix(rng, n, n);
    let (a0, a1) = (&a0 * c(0.8 / a0.norm(), 0.0), &a1 * c(0.8 / a1.norm(), 0.0));
    let pi = std::f64::consts::PI;
    let hl0 = hermitian(rng, k) * c(pi, 0.0);
    let hl1 = hermitian(rng, k) * c(2.0, 0.0);
    let hm0 = hermitian(rng, k) * c(pi, 0.0);
    let hm1 = hermitian(rng, k) * c(2.0, 0.0);
    PairPath::new(
        move |s| {
            let cm = identity(n) + &a0 * c(1.0 - s, 0.0) + &a1 * c(s, 0.0);
            let ci = inverse(&cm).ok_or(crate::Error::Degenerate { ratio: 0.0 })?;
            let space = make_space(ci.adjoint() * model_form(k) * &ci)?;
            let u = unitary_exp(&(&hl0 + &hl1 * c(s, 0.0)));
            let v = unitary_exp(&(&hm0 + &hm1 * c(s, 0.0)));
            Ok(PairSample {
                space,
                lambda: model_lagrangian(&u).image(&cm),
                mu: model_lagrangian(&v).image(&cm),
            })
        },
        (0.0, 1.0),
    )
}

/// Lagrangians `λ, μ` in a random space with `dim λ∩μ = d` exactly.
pub fn pair_with_intersection(rng: &mut ChaCha8Rng, k: usize, d: usize) -> (SymplecticSpace, Subspace, Subspace) {
    let (space, cm) = random_space(rng, k);
    let u = unitary(rng, k);
    let q = unitary(rng, k);
    let phases = CVec::from_iterator(
        k,
        (0..k).map(|i| {
            if i < d {
                c(1.0, 0.0)
            } else {
                C64::from_polar(1.0, rng.gen_range(0.5..2.0 * std::f64::consts::PI - 0.5))
            }
        }),
    );
    let v = &u * &q * CMat::from_diagonal(&phases) * q.adjoint();
    (space, model_lagrangian(&u).image(&cm), model_lagrangian(&v).image(&cm))
}

/// Smooth positive definite Gram path `A_s†A_s`.
pub fn random_metric_path(rng: &mut ChaCha8Rng, n: usize) -> Arc<dyn Fn(f64) -> CMat + Send + Sync> {
    let b0 = near_identity(rng, n);
    let b1 = near_identity(rng, n);
    Arc::new(move |s| {
        let a = &b0 * c(1.0 - s, 0.0) + &b1 * c(s, 0.0);
        a.adjoint() * a
    })
}

/// `j = i(H₀ + 0.3 s sin(πt) H₁)` with `H₀` well away from singular, smooth Hermitian `b`.
pub fn random_first_order(rng: &mut ChaCha8Rng, m: usize) -> FirstOrderFamily {
    let signs: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let h0 = CMat::from_diagonal(&CVec::from_iterator(m, signs.iter().map(|&x| c(x, 0.0)))) + hermitian(rng, m) * c(0.2 / m as f64, 0.0);
    let h1 = hermitian(rng, m) * c(1.0 / m as f64, 0.0);
    let b0 = hermitian(rng, m);
    let b1 = hermitian(rng, m);
    FirstOrderFamily {
        m,
        t_len: 1.0,
        j: Arc::new(move |s, t| (&h0 + &h1 * c(0.3 * s * (std::f64::consts::PI * t).sin(), 0.0)) * c(0.0, 1.0)),
        jdot: None,
        b: Arc::new(move |s, t| &b0 * c(1.0 + s, 0.0) + &b1 * c((2.0 * t).cos(), 0.0)),
    }
}

/// `p = I + 0.3 sin(t) P`, constant `q`, `r = R₀ - s(3I + R₁)` on `[0, π]`.
pub fn random_second_order(rng: &mut ChaCha8Rng, m: usize) -> SecondOrderFamily {
    let p1 = hermitian(rng, m) * c(0.3 / m as f64, 0.0);
    let q = complex_matrix(rng, m, m) * c(0.2, 0.0);
    let r0 = hermitian(rng, m) * c(0.5, 0.0);
    let r1 = identity(m) * c(3.0, 0.0) + hermitian(rng, m) * c(0.5, 0.0);
    SecondOrderFamily {
        m,
        t_len: std::f64::consts::PI,
        p: Arc::new(move |_, t| identity(m) + &p1 * c(t.sin(), 0.0)),
        q: Arc::new(move |_, _| q.clone()),
        r: Arc::new(move |s, _| &r0 - &r1 * c(s, 0.0)),
    }
}

/// Random subspace of `ℂ^n` of dimension `d`.
pub fn random_subspace(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Subspace {
    Subspace::span(&complex_matrix(rng, n, d))
}

fn real_frame(u: &CMat) -> DMatrix<f64> {
    let k = u.nrows();
    DMatrix::from_fn(2 * k, k, |i, j| if i < k { u[(i, j)].re } else { u[(i - k, j)].im })
}

/// Standard real structure on `ℝ^{2k}`, a fixed real Lagrangian and a moving one `[Re W_s; Im W_s]`.
pub fn random_real_data(rng: &mut ChaCha8Rng, k: usize) -> RealSymplecticData {
    let j = standard_j(k).map(|z| z.re);
    let lambda = real_frame(&unitary(rng, k));
    let h0 = hermitian(rng, k) * c(std::f64::consts::PI, 0.0);
    let h1 = hermitian(rng, k) * c(3.0, 0.0);
    RealSymplecticData {
        j,
        lambda,
        mu_path: Arc::new(move |s| real_frame(&unitary_exp(&(&h0 + &h1 * c(s, 0.0))))),
        interval: (0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::symplectic::{classify, Class};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = uniform(&mut trial_rng(42, 1, 7));
        let b = uniform(&mut trial_rng(42, 1, 7));
        let d = uniform(&mut trial_rng(42, 1, 8));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a.to_bits(), d.to_bits());
    }

    #[test]
    fn generated_data_is_lagrangian() {
        let mut rng = trial_rng(1, 0, 0);
        let p = random_pair_path(&mut rng, 3);
        let smp = p.sample(0.4).unwrap();
        assert_eq!(classify(&smp.space, &smp.lambda).unwrap(), Class::Lagrangian);
        assert_eq!(classify(&smp.space, &smp.mu).unwrap(), Class::Lagrangian);
        let (space, l, m) = pair_with_intersection(&mut rng, 3, 2);
        assert_eq!(classify(&space, &l).unwrap(), Class::Lagrangian);
        assert_eq!(l.intersection_dim(&m), 2);
        let u = unitary(&mut rng, 4);
        assert!(max_abs(&(u.adjoint() * &u - identity(4))) < 1e-12);
    }
}
