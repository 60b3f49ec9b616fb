use maslovflow::expr::parse_expression;
use maslovflow::flow::{spectral_flow, CoorientedLine, FlowOptions};
use maslovflow::harness::random::{
    model_form, model_lagrangian, pair_with_intersection, random_first_order, random_pair_path, random_second_order,
    trial_rng,
};
use maslovflow::linalg::{c, CMat, CVec, C64};
use maslovflow::maslov::{maslov_index, PairPath, PairSample};
use maslovflow::odebvp::BvpFamily;
use maslovflow::symplectic::{classify, make_space, make_splitting, pair_index, pair_unitary, unit_multiplicity, Class};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (-50.0..50.0f64).prop_map(|x| format!("{x:?}")),
        (0.0..5.0f64).prop_map(|y| format!("{y:?}i")),
        Just("pi".to_string()),
        Just("s".to_string()),
        Just("t".to_string()),
    ]
}

fn source() -> impl Strategy<Value = String> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (prop::sample::select(vec!["sin", "cos", "exp", "sqrt"]), inner).prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

fn same(a: C64, b: C64) -> bool {
    let close = |x: f64, y: f64| x.to_bits() == y.to_bits() || (x - y).abs() <= 1e-15 * x.abs().max(y.abs());
    close(a.re, b.re) && close(a.im, b.im)
}

fn diag(v: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
}

proptest! {
    #[test]
    fn expression_round_trip(src in source()) {
        let first = parse_expression(&src).unwrap();
        let second = parse_expression(&first.to_string()).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let (s, t) = (i as f64 / 9.0, j as f64 / 9.0);
                prop_assert!(same(first.eval(s, t), second.eval(s, t)), "{src} at ({s}, {t})");
            }
        }
    }

    #[test]
    fn diagonal_flow_counts_sign_changes(ends in prop::collection::vec((0.05..1.0f64, any::<bool>(), 0.05..1.0f64, any::<bool>()), 1..6)) {
        let pairs: Vec<(f64, f64)> = ends
            .iter()
            .map(|&(a, sa, b, sb)| (if sa { a } else { -a }, if sb { b } else { -b }))
            .collect();
        let oracle: i64 = pairs.iter().map(|&(a, b)| (a < 0.0) as i64 - (b < 0.0) as i64).sum();
        let family = |s: f64| diag(&pairs.iter().map(|&(a, b)| a + (b - a) * s).collect::<Vec<_>>());
        let (k, _) = spectral_flow(family, CoorientedLine::RealAxisAtZero, (0.0, 1.0), &FlowOptions::default()).unwrap();
        prop_assert_eq!(k, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_pairs_are_lagrangian(seed in any::<u64>(), k in 1usize..=3, s in 0.0..1.0f64) {
        let path = random_pair_path(&mut trial_rng(seed, 0, 0), k);
        let p = path.sample(s).unwrap();
        prop_assert_eq!(classify(&p.space, &p.lambda).unwrap(), Class::Lagrangian);
        prop_assert_eq!(classify(&p.space, &p.mu).unwrap(), Class::Lagrangian);
        prop_assert_eq!(pair_index(&p.space, &p.lambda, &p.mu).unwrap().index, 0);
    }

    #[test]
    fn unit_multiplicity_is_intersection(seed in any::<u64>(), k in 1usize..=4, d in 0usize..=4) {
        let d = d.min(k);
        let (space, l, m) = pair_with_intersection(&mut trial_rng(seed, 1, 0), k, d);
        let w = pair_unitary(&space, &make_splitting(&space).unwrap(), &l, &m).unwrap();
        prop_assert_eq!(unit_multiplicity(&w), d);
        prop_assert_eq!(l.intersection_dim(&m), d);
    }

    #[test]
    fn catenation_is_additive(seed in any::<u64>(), k in 1usize..=3, cut in 0.2..0.8f64) {
        let path = random_pair_path(&mut trial_rng(seed, 5, 0), k);
        let opts = FlowOptions::default();
        let whole = maslov_index(&path, &opts).unwrap().0;
        let left = maslov_index(&path.restricted(0.0, cut), &opts).unwrap().0;
        let right = maslov_index(&path.restricted(cut, 1.0), &opts).unwrap().0;
        prop_assert_eq!(whole, left + right);
    }

    #[test]
    fn transport_is_symplectic(seed in any::<u64>(), m in 1usize..=3, second in any::<bool>(), s in 0.0..1.0f64, lambda in -2.0..2.0f64) {
        let mut rng = trial_rng(seed, 8, 0);
        let fam: BvpFamily = if second { random_second_order(&mut rng, m).into() } else { random_first_order(&mut rng, m).into() };
        let g = fam.transfer(s, lambda, 2048).unwrap();
        prop_assert!(fam.transport_residual(s, &g) <= 1e-8);
    }
}

/// `λ_s = span(1, e^{iθ(s)})` against `μ = span(1, 1)` for the form `i diag(1, -1)`.
fn phase_path(theta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> PairPath {
    let space = make_space(model_form(1)).unwrap();
    PairPath::new(
        move |s| {
            Ok(PairSample {
                space: space.clone(),
                lambda: model_lagrangian(&CMat::from_element(1, 1, C64::from_polar(1.0, theta(s)))),
                mu: model_lagrangian(&CMat::from_element(1, 1, c(1.0, 0.0))),
            })
        },
        (0.0, 1.0),
    )
}

#[test]
fn flipping_with_endpoint_intersections() {
    let opts = FlowOptions::default();
    let flip = |path: &PairPath| maslov_index(path, &opts).unwrap().0 + maslov_index(&path.swapped(), &opts).unwrap().0;
    let dims = |path: &PairPath| {
        let d = |s: f64| {
            let p = path.sample(s).unwrap();
            p.lambda.intersection_dim(&p.mu) as i64
        };
        (d(0.0), d(1.0))
    };
    // Departing from, arriving at, and both; with the endpoint convention of the
    // spectral-flow partition formula the sum is dim λ₁∩μ₁ - dim λ₀∩μ₀.
    for path in [
        phase_path(|s| std::f64::consts::PI * s),
        phase_path(|s| std::f64::consts::PI * (s - 1.0)),
        phase_path(|s| 2.0 * std::f64::consts::PI * s),
        phase_path(|s| 0.5 + s),
    ] {
        let (d0, d1) = dims(&path);
        assert_eq!(flip(&path), d1 - d0, "d0={d0} d1={d1}");
    }
    assert_eq!(dims(&phase_path(|s| std::f64::consts::PI * s)), (1, 0));
}
