//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use maslovflow::flow::spectral_projection;
use maslovflow::harness::random::{complex_matrix, random_second_order, random_subspace, trial_rng};
use maslovflow::harness::{builtin, property_sweep, real_category_sweep, run_scenario, Scenario, VerificationReport};
use maslovflow::linalg::{c, inverse, max_abs, CMat, CVec, C64};
use maslovflow::odebvp::{long_index_identity, BvpOptions};
use maslovflow::symplectic::Subspace;

/// Composite Simpson rule on `[0, 1]`.
fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Spectral flow of continuous branches from their endpoint values: each branch
/// contributes `[λ(0) < 0] - [λ(1) < 0]`, which telescopes over any partition.
fn branch_flow(branch: impl Fn(i64, f64) -> f64) -> i64 {
    (-20..=20).map(|k| (branch(k, 0.0) < 0.0) as i64 - (branch(k, 1.0) < 0.0) as i64).sum()
}

fn s1_oracle() -> i64 {
    branch_flow(|k, s| 2.0 * PI * (s + k as f64))
}

fn s2_oracle() -> i64 {
    // Dirichlet spectrum of -x'' - 1.5 s x on [0, π]: n² - 1.5 s.
    branch_flow(|k, s| if k >= 1 { (k * k) as f64 - 1.5 * s } else { 1.0 })
}

/// Scalar `j = iα`: `Γ = sqrt(α(0)/α(T)) exp(i∫(b+λ)/α)`, so `W = graph(e^{iφ})` gives
/// `λ_k = (φ + 2πk - ∫b/α) / ∫1/α`.
fn scalar_branches(alpha: impl Fn(f64, f64) -> f64, b: impl Fn(f64, f64) -> f64, phi: impl Fn(f64) -> f64) -> i64 {
    branch_flow(|k, s| {
        let ia = simpson(|t| 1.0 / alpha(s, t), 4000);
        let ib = simpson(|t| b(s, t) / alpha(s, t), 4000);
        (phi(s) + 2.0 * PI * k as f64 - ib) / ia
    })
}

fn s3_oracle() -> i64 {
    scalar_branches(|s, t| 1.0 + 0.5 * s * (PI * t).sin(), |s, t| s * t.cos(), |s| 2.0 * PI * s)
}

fn s5_oracle() -> i64 {
    scalar_branches(
        |s, t| 1.0 + 0.3 * s * (2.0 * PI * t).sin(),
        |s, t| PI * (3.0 * s + 0.5) + 0.5 * (2.0 * PI * t).cos(),
        |_| 0.0,
    )
}

struct Run {
    report: VerificationReport,
    elapsed: Duration,
}

fn timed(sc: &Scenario) -> Run {
    let start = Instant::now();
    let report = run_scenario(sc);
    Run { report, elapsed: start.elapsed() }
}

fn describe(r: &Run) -> String {
    format!("sf={:?} mas={:?} {:.2} s", r.report.sf, r.report.mas, r.elapsed.as_secs_f64())
}

/// Closed-form match plus dual-pipeline agreement within a time budget.
fn closed_form(name: &str, oracle: i64, budget: f64) -> (bool, String, Run) {
    let run = timed(&builtin(name).unwrap());
    let r = &run.report;
    let pass = r.error.is_none()
        && r.sf == Some(oracle)
        && r.mas == Some(oracle)
        && r.passed()
        && run.elapsed.as_secs_f64() < budget;
    (pass, format!("{name} oracle={oracle} {} (budget {budget} s)", describe(&run)), run)
}

/// Agreement, oracle match and invariance under grid doubling.
fn grid_stable(name: &str, oracle: i64, budget: Option<f64>) -> (bool, String, Run) {
    let sc = builtin(name).unwrap();
    let run = timed(&sc);
    let fine = timed(&sc.refined());
    let (a, b) = (&run.report, &fine.report);
    let pass = a.passed()
        && b.passed()
        && a.sf == Some(oracle)
        && a.sf == b.sf
        && a.mas == b.mas
        && budget.is_none_or(|t| run.elapsed.as_secs_f64() < t);
    let msg = format!("{name} oracle={oracle} base[{}] doubled[{}]", describe(&run), describe(&fine));
    (pass, msg, run)
}

fn long_index() -> (bool, String) {
    let opts = BvpOptions::default();
    let s2 = long_index_identity(&s2_family(), &Subspace::zero(2), &opts);
    let mut rng = trial_rng(42, 100, 0);
    let fam = random_second_order(&mut rng, 2);
    let r = random_subspace(&mut rng, 4, 2);
    let rand = long_index_identity(&fam, &r, &opts);
    match (s2, rand) {
        (Ok(a), Ok(b)) => (
            a.holds() && b.holds() && a.sf == -1,
            format!(
                "S2 sf={} long(1)={} long(0)={}; random m=2 sf={} long(1)={} long(0)={}",
                a.sf, a.long_at_one, a.long_at_zero, b.sf, b.long_at_one, b.long_at_zero
            ),
        ),
        (a, b) => (false, format!("error: {:?} / {:?}", a.err(), b.err())),
    }
}

fn s2_family() -> maslovflow::odebvp::SecondOrderFamily {
    match builtin("S2").unwrap().problem {
        maslovflow::harness::ScenarioProblem::Bvp { family: maslovflow::odebvp::BvpFamily::Second(f), .. } => f,
        _ => unreachable!("S2 is second order"),
    }
}

/// `(1/2πi)∮(z - A)⁻¹ dz` by the 16-point trapezoid rule on `|z - c| = r`.
fn contour_projection(a: &CMat, center: C64, radius: f64) -> CMat {
    let n = a.nrows();
    let mut p = CMat::zeros(n, n);
    for j in 0..16 {
        let w = C64::from_polar(radius, 2.0 * PI * j as f64 / 16.0);
        let res = inverse(&(CMat::identity(n, n) * (center + w) - a)).unwrap();
        p += res * (w / 16.0);
    }
    p
}

fn projections() -> (bool, String) {
    let mut worst = 0.0_f64;
    for trial in 0..20 {
        let mut rng = trial_rng(42, 200, trial);
        let n = 3 + trial as usize % 4;
        let inside = 1 + trial as usize % (n - 1);
        // Eigenvalues within 0.2 of 0 or beyond 5 from it; the contour has radius 1.
        let eig: Vec<C64> = (0..n)
            .map(|i| {
                let z = complex_matrix(&mut rng, 1, 1)[(0, 0)];
                if i < inside { z * 0.14 } else { C64::from_polar(5.5 + z.norm(), z.arg()) }
            })
            .collect();
        let x = CMat::identity(n, n) + complex_matrix(&mut rng, n, n) * c(0.2, 0.0);
        let a = &x * CMat::from_diagonal(&CVec::from_vec(eig)) * inverse(&x).unwrap();
        let p = spectral_projection(&a, c(0.0, 0.0), 1.0).unwrap();
        worst = worst.max(max_abs(&(p - contour_projection(&a, c(0.0, 0.0), 1.0))));
    }
    (worst <= 1e-8, format!("20 matrices, worst deviation {worst:.3e}"))
}

fn main() {
    let mut results: Vec<(usize, bool, String)> = Vec::new();

    let (p1, m1, r1) = closed_form("S1", s1_oracle(), 10.0);
    results.push((1, p1, m1));
    let (p2, m2, r2) = closed_form("S2", s2_oracle(), 30.0);
    results.push((2, p2, m2));
    let (p3, m3, r3) = grid_stable("S3", s3_oracle(), Some(60.0));
    results.push((3, p3, m3));
    let (p4, m4, r5) = grid_stable("S5", s5_oracle(), None);
    results.push((4, p4, m4));

    let (p5, m5) = long_index();
    results.push((5, p5, m5));

    let sweep = property_sweep(42, 50).expect("trials > 0");
    let failing: Vec<String> =
        sweep.suites.iter().filter(|s| s.failed > 0).map(|s| format!("{} {:?}", s.name, s.failures)).collect();
    let m6 = format!(
        "{} suites x {} trials, {}",
        sweep.suites.len(),
        sweep.trials,
        if failing.is_empty() { "all pass".to_string() } else { failing.join("; ") }
    );
    results.push((6, sweep.all_pass, m6));

    let real = real_category_sweep(42, 100).expect("trials > 0");
    let suite = &real.suites[0];
    let m7 = format!(
        "{} real paths, worst residual {:.3e}, {} failures {:?}",
        suite.trials, suite.worst_residual, suite.failed, suite.failures
    );
    results.push((7, real.all_pass, m7));

    let r4 = timed(&builtin("S4").unwrap());
    let runs = [&r1, &r2, &r3, &r4, &r5];
    let transport = runs.iter().map(|r| r.report.residuals.transport.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let unitary = runs.iter().map(|r| r.report.residuals.unitary).fold(0.0, f64::max);
    let s4_ok = r4.report.passed() && r4.report.sf == Some(0);
    let (pp, mp) = projections();
    let p8 = transport <= 1e-8 && unitary <= 1e-8 && pp && s4_ok;
    let m8 = format!(
        "transport {transport:.3e}, unit-circle defect {unitary:.3e}, projections: {mp}, S4 {}",
        describe(&r4)
    );
    results.push((8, p8, m8));

    let mut all = true;
    for (k, pass, msg) in &results {
        all &= *pass;
        println!("criterion {k}: {} | {msg}", if *pass { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
