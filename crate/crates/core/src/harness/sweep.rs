use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::random::*;
use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::maslov::{
    boxplus, boxplus_pair, complexify_and_compare, maslov_index, maslov_product_identities,
    splitting_independence_check,
};
use crate::odebvp::BvpFamily;
use crate::symplectic::{classify, make_splitting, pair_index, pair_unitary, unit_multiplicity, Class};

/// Outcome of one property suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_residual: f64,
    /// First few failing trials with a reason.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

struct Outcome {
    pass: bool,
    residual: f64,
    note: String,
}

fn ok(pass: bool, residual: f64, note: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, residual, note: note.into() })
}

type Trial = fn(&mut rand_chacha::ChaCha8Rng, usize) -> Result<Outcome>;

/// `k` cycles through 1..=4, so ambient dimensions cover 2, 4, 6, 8.
fn half_dim(trial: usize) -> usize {
    1 + trial % 4
}

fn fredholm_index(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let path = random_pair_path(rng, half_dim(trial));
    let smp = path.sample(rng.gen_range(0.0..1.0))?;
    let lag = classify(&smp.space, &smp.lambda)? == Class::Lagrangian && classify(&smp.space, &smp.mu)? == Class::Lagrangian;
    let idx = pair_index(&smp.space, &smp.lambda, &smp.mu)?;
    let defect = crate::linalg::max_abs(&smp.space.gram(smp.lambda.frame()));
    ok(lag && idx.index == 0, defect, format!("index {}", idx.index))
}

fn kernel_multiplicity(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let k = half_dim(trial);
    let d = rng.gen_range(0..=k);
    let (space, l, m) = pair_with_intersection(rng, k, d);
    let split = make_splitting(&space)?;
    let w = pair_unitary(&space, &split, &l, &m)?;
    let mult = unit_multiplicity(&w);
    let dim = pair_index(&space, &l, &m)?.dim_intersection;
    ok(mult == d && dim == d, 0.0, format!("d={d} multiplicity={mult} intersection={dim}"))
}

fn boxplus_index(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let k = half_dim(trial);
    let d = rng.gen_range(0..=k);
    let (space, l, m) = pair_with_intersection(rng, k, d);
    let big = boxplus(&space, &space)?;
    let (lm, delta) = boxplus_pair(&l, &m)?;
    let a = pair_index(&space, &l, &m)?;
    let b = pair_index(&big, &lm, &delta)?;
    ok(a == b && classify(&big, &lm)? == Class::Lagrangian, 0.0, format!("{a:?} vs {b:?}"))
}

fn product_identities(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let path = random_pair_path(rng, half_dim(trial));
    let ids = maslov_product_identities(&path, &FlowOptions::default())?;
    ok(ids.all_equal(), 0.0, format!("{ids:?}"))
}

fn flipping(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let path = random_pair_path(rng, half_dim(trial));
    let opts = FlowOptions::default();
    let a = maslov_index(&path, &opts)?.0;
    let b = maslov_index(&path.swapped(), &opts)?.0;
    let end = |s: f64| -> Result<i64> {
        let p = path.sample(s)?;
        Ok(p.lambda.intersection_dim(&p.mu) as i64)
    };
    let rhs = end(0.0)? - end(1.0)?;
    ok(a + b == rhs, 0.0, format!("{a} + {b} vs {rhs}"))
}

fn catenation(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let path = random_pair_path(rng, half_dim(trial));
    let cut = rng.gen_range(0.3..0.7);
    let opts = FlowOptions::default();
    let whole = maslov_index(&path, &opts)?.0;
    let left = maslov_index(&path.restricted(0.0, cut), &opts)?.0;
    let right = maslov_index(&path.restricted(cut, 1.0), &opts)?.0;
    ok(whole == left + right, 0.0, format!("{whole} vs {left} + {right}"))
}

fn naturality(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let k = half_dim(trial);
    let path = random_pair_path(rng, k);
    let l = near_identity(rng, 2 * k);
    let opts = FlowOptions::default();
    let a = maslov_index(&path, &opts)?.0;
    let b = maslov_index(&path.pushed_forward(l)?, &opts)?.0;
    ok(a == b, 0.0, format!("{a} vs {b}"))
}

fn splitting_independence(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let k = half_dim(trial);
    let path = random_pair_path(rng, k);
    let metric = random_metric_path(rng, 2 * k);
    let (a, b) = splitting_independence_check(&path, metric, &FlowOptions::default())?;
    ok(a == b, 0.0, format!("{a} vs {b}"))
}

/// Symplectic transport at 2048 RK4 steps; second-order families on odd trials.
fn transport(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let m = half_dim(trial);
    let fam: BvpFamily = if trial.is_multiple_of(2) {
        random_first_order(rng, m).into()
    } else {
        random_second_order(rng, m).into()
    };
    let s = rng.gen_range(0.0..1.0);
    let lambda = 2.0 * uniform(rng);
    let g = fam.transfer(s, lambda, 2048)?;
    let res = fam.transport_residual(s, &g);
    ok(res <= 1e-8, res, format!("residual {res:e}"))
}

fn real_comparison(rng: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Result<Outcome> {
    let data = random_real_data(rng, half_dim(trial));
    let r = complexify_and_compare(&data, &FlowOptions::default())?;
    ok(r.residual <= 1e-9 && r.mas == -r.mas_bf, r.residual, format!("mas {} mas_bf {} residual {:e}", r.mas, r.mas_bf, r.residual))
}

const SUITES: [(&str, Trial); 10] = [
    ("fredholm_index", fredholm_index),
    ("kernel_multiplicity", kernel_multiplicity),
    ("boxplus_index", boxplus_index),
    ("product_identities", product_identities),
    ("flipping", flipping),
    ("catenation", catenation),
    ("naturality", naturality),
    ("splitting_independence", splitting_independence),
    ("transport", transport),
    ("real_comparison", real_comparison),
];

fn run_suite(seed: u64, index: usize, name: &str, f: Trial, trials: usize) -> SuiteResult {
    let outcomes: Vec<Result<Outcome>> = (0..trials)
        .into_par_iter()
        .map(|t| f(&mut trial_rng(seed, index as u32, t as u32), t))
        .collect();
    let mut res = SuiteResult { name: name.to_string(), trials, passed: 0, failed: 0, worst_residual: 0.0, failures: vec![] };
    for (t, o) in outcomes.into_iter().enumerate() {
        let (pass, note) = match o {
            Ok(o) => {
                res.worst_residual = res.worst_residual.max(o.residual);
                (o.pass, o.note)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if pass {
            res.passed += 1;
        } else {
            res.failed += 1;
            if res.failures.len() < 5 {
                res.failures.push(format!("trial {t}: {note}"));
            }
        }
    }
    res
}

fn sweep(seed: u64, trials: usize, which: &[usize]) -> Result<SweepSummary> {
    if trials == 0 {
        return Err(Error::InvalidTrials);
    }
    let suites: Vec<SuiteResult> =
        which.iter().map(|&i| run_suite(seed, i, SUITES[i].0, SUITES[i].1, trials)).collect();
    let all_pass = suites.iter().all(|s| s.failed == 0);
    Ok(SweepSummary { seed, trials, suites, all_pass })
}

/// Runs every property suite with `trials` seeded trials each.
pub fn property_sweep(seed: u64, trials: usize) -> Result<SweepSummary> {
    sweep(seed, trials, &(0..SUITES.len()).collect::<Vec<_>>())
}

/// Runs only the real-category comparison suite.
pub fn real_category_sweep(seed: u64, trials: usize) -> Result<SweepSummary> {
    sweep(seed, trials, &[SUITES.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(property_sweep(1, 0), Err(Error::InvalidTrials));
    }

    #[test]
    fn small_sweep_passes_and_repeats() {
        let a = property_sweep(7, 4).unwrap();
        assert!(a.all_pass, "{a:#?}");
        let b = property_sweep(7, 4).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
