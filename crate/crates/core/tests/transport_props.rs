use proptest::prelude::*;
use pushmap::measures::SampleSet;
use pushmap::rng::rng_from_seed;
use pushmap::transport::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn cloud(points: Vec<f64>, dim: usize) -> SampleSet {
    SampleSet::new(points, dim, "prop", 0).unwrap()
}

fn exact(a: &SampleSet, b: &SampleSet) -> f64 {
    w2_point_clouds(a, b, W2Method::ExactLp, W2Options::default()).unwrap().value
}

fn clouds(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1..=max_n, 1usize..=2).prop_flat_map(|(n, d)| {
        let pts = prop::collection::vec(-5.0..5.0f64, n * d);
        (Just(n), Just(d), pts.clone(), pts.clone(), pts)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric((_, d, a, b, _) in clouds(24)) {
        let (x, y) = (cloud(a, d), cloud(b, d));
        let (l, r) = (exact(&x, &y), exact(&y, &x));
        prop_assert!((l - r).abs() <= 1e-12 * l.max(1.0));
    }

    #[test]
    fn triangle_inequality((_, d, a, b, c) in clouds(64)) {
        let (x, y, z) = (cloud(a, d), cloud(b, d), cloud(c, d));
        prop_assert!(exact(&x, &z) <= exact(&x, &y) + exact(&y, &z) + 1e-12);
    }

    #[test]
    fn translation_moves_distance_by_at_most_shift((_, d, a, b, _) in clouds(32), v in prop::collection::vec(-2.0..2.0f64, 2)) {
        let (x, y) = (cloud(a, d), cloud(b.clone(), d));
        let shifted: Vec<f64> = b.chunks(d).flat_map(|p| p.iter().zip(&v).map(|(q, s)| q + s).collect::<Vec<_>>()).collect();
        let ys = cloud(shifted, d);
        let norm = v[..d].iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!((exact(&x, &ys) - exact(&x, &y)).abs() <= norm + 1e-12);
    }

    #[test]
    fn one_dimensional_consistency(a in prop::collection::vec(-3.0..3.0f64, 1..60), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let b: Vec<f64> = (0..a.len()).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let (x, y) = (cloud(a, 1), cloud(b, 1));
        let lp = exact(&x, &y);
        let sorted = w2_1d(&x, &y).unwrap().value;
        prop_assert!((lp - sorted).abs() <= 1e-9 * sorted.max(1e-300));
    }

    #[test]
    fn assignment_invariants((n, d, a, b, _) in clouds(40)) {
        let (x, y) = (cloud(a, d), cloud(b, d));
        let c = CostMatrix::squared_euclidean(&x, &y).unwrap();
        let asg = assignment_exact(&c).unwrap();
        prop_assert!(asg.is_bijection());
        prop_assert_eq!(asg.len(), n);
        let recomputed = asg.cost_under(&c);
        prop_assert!((asg.total_sq_cost - recomputed).abs() <= 1e-9 * recomputed.max(1e-300));
        let r = w2_point_clouds(&x, &y, W2Method::ExactLp, W2Options::default()).unwrap();
        prop_assert!((r.value - (asg.total_sq_cost / n as f64).sqrt()).abs() <= 1e-15 * r.value.max(1.0));
    }

    #[test]
    fn minibatch_costs_never_increase((n, d, a, b, _) in clouds(48), batch in 2usize..16, seed in any::<u64>()) {
        prop_assume!(n >= 2);
        let (x, y) = (cloud(a, d), cloud(b, d));
        let (asg, trace) = minibatch_refine_traced(&x, &y, batch.min(n), 30, seed).unwrap();
        prop_assert!(asg.is_bijection());
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }
}

#[test]
fn exact_matches_brute_force_on_8x8() {
    let mut rng = rng_from_seed(77);
    for _ in 0..20 {
        let c = CostMatrix::from_fn(8, |_, _| rng.random::<f64>() * 10.0);
        assert_eq!(assignment_exact(&c).unwrap().total_sq_cost, brute_force_assignment(&c).unwrap().total_sq_cost);
    }
}

#[test]
fn full_batch_refinement_is_exact() {
    let mut rng = rng_from_seed(3);
    let x = cloud((0..60).map(|_| rng.random::<f64>()).collect(), 2);
    let y = cloud((0..60).map(|_| rng.random::<f64>()).collect(), 2);
    let refined = assignment_minibatch_refine(&x, &y, 30, 1, 9).unwrap();
    let c = CostMatrix::squared_euclidean(&x, &y).unwrap();
    assert_eq!(refined.total_sq_cost, assignment_exact(&c).unwrap().total_sq_cost);
    let r = w2_point_clouds(&x, &y, W2Method::MinibatchRefine { batch: 30, rounds: 1, seed: 9 }, W2Options::default()).unwrap();
    assert!(r.exact);
    let r = w2_point_clouds(&x, &y, W2Method::MinibatchRefine { batch: 10, rounds: 1, seed: 9 }, W2Options::default()).unwrap();
    assert!(!r.exact);
}

#[test]
fn zero_rounds_keep_initial_permutation() {
    let x = cloud((0..20).map(|i| i as f64).collect(), 1);
    let (a, trace) = minibatch_refine_traced(&x, &x, 5, 0, 4).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(a.total_sq_cost, trace[0]);
    let again = assignment_minibatch_refine(&x, &x, 5, 0, 4).unwrap();
    assert_eq!(a.sigma, again.sigma);
    assert!(assignment_minibatch_refine(&x, &x, 1, 1, 0).is_err());
    assert!(assignment_minibatch_refine(&x, &x, 21, 1, 0).is_err());
}

#[test]
fn minibatch_refinement_gets_within_five_percent() {
    let mut ratios = Vec::new();
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let mut gauss = |shift: f64| -> Vec<f64> {
            (0..128).map(|_| shift + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()
        };
        let x = cloud(gauss(0.0), 2);
        let y = cloud(gauss(1.0), 2);
        let refined = assignment_minibatch_refine(&x, &y, 16, 500, seed).unwrap();
        let best = assignment_exact(&CostMatrix::squared_euclidean(&x, &y).unwrap()).unwrap();
        ratios.push(refined.total_sq_cost / best.total_sq_cost);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean <= 1.05, "mean cost ratio {mean}, ratios {ratios:?}");
}
