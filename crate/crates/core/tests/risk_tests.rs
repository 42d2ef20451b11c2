use std::sync::Arc;

use proptest::prelude::*;
use pushmap::measures::*;
use pushmap::neural::init_net;
use pushmap::risk::*;
use pushmap::rng::SeedStream;
use pushmap::trainer::{train, TrainConfig};
use pushmap::transport::{W2Method, W2Options};
use pushmap::{Example, IdentityMap, PushforwardMap};

fn inputs<'a>(
    map: &'a dyn PushforwardMap,
    exact: Option<&'a dyn PushforwardMap>,
    sets: &'a [SampleSet; 4],
) -> RiskInputs<'a> {
    RiskInputs {
        map,
        exact,
        train_xs: &sets[0],
        train_ys: &sets[1],
        val_xs: &sets[2],
        val_ys: &sets[3],
        method: W2Method::ExactLp,
        opts: W2Options::default(),
        grid: None,
        stat_term: None,
        approx_budget: None,
    }
}

fn clouds(n: usize, val: usize, seed: u64) -> [SampleSet; 4] {
    let ex = Example::OneD;
    let s = SeedStream::new(seed);
    [
        ex.sample_source(n, s.child("x").seed()).unwrap(),
        ex.sample_target(n, s.child("y").seed()).unwrap(),
        ex.sample_source(val, s.child("vx").seed()).unwrap(),
        ex.sample_target(val, s.child("vy").seed()).unwrap(),
    ]
}

#[test]
fn exact_map_as_trained_map() {
    let sets = clouds(1000, 100_000, 1);
    let r = decompose_excess_risk(&inputs(&ExactMap1d, Some(&ExactMap1d), &sets)).unwrap();
    assert_eq!(r.eps_app, Some(0.0));
    assert!(r.eps_opt.unwrap().abs() <= 1e-12);
    let disc = r.eps_disc.unwrap();
    assert!(disc > 0.0);
    assert_eq!(disc, r.empirical_risk);
    // eps_gen = R(T; mu, nu) - R(T; mu_N, nu_N), the first of which is zero
    // up to validation noise
    let noise = 3.0 * 2.0 * j2_empirical_bound(j2_closed_form_1d(), 100_000);
    assert!((r.eps_gen + disc).abs() <= noise, "eps_gen {} disc {disc}", r.eps_gen);
}

#[test]
fn terms_sum_to_total_for_a_trained_net() {
    let sets = clouds(200, 20_000, 2);
    let cfg = TrainConfig { max_iters: 500, patience: 500, seed: 1, ..TrainConfig::default() };
    let (net, _) = train(&sets[0], &sets[1], init_net(&[1, 16, 16, 1], 3).unwrap(), &cfg).unwrap();
    let grid = SampleSet::new((0..=200).map(|i| i as f64 / 200.0).collect(), 1, "grid", 0).unwrap();
    let mut inp = inputs(&net, Some(&ExactMap1d), &sets);
    inp.grid = Some(&grid);
    let r = decompose_excess_risk(&inp).unwrap();
    assert!((r.sum_of_terms().unwrap() - r.total()).abs() <= 1e-12);
    assert!(r.eps_app_sup.unwrap() >= 0.0);
    assert!(r.population_risk_se > 0.0);
}

#[test]
fn eps_gen_vanishes_when_validation_equals_training() {
    let ex = Example::OneD;
    let xs = ex.sample_source(500, 4).unwrap();
    let ys = ex.sample_target(500, 5).unwrap();
    let net = init_net(&[1, 8, 1], 6).unwrap();
    let sets = [xs.clone(), ys.clone(), xs, ys];
    let r = decompose_excess_risk(&inputs(&net, None, &sets)).unwrap();
    assert_eq!(r.eps_gen, 0.0);
    assert!(r.eps_disc.is_none() && r.eps_app.is_none() && r.eps_opt.is_none());
}

#[test]
fn eps_disc_decreases_in_n() {
    let means: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            (0..10)
                .map(|s| {
                    let sets = clouds(n, 10, 100 + s);
                    decompose_excess_risk(&inputs(&ExactMap1d, Some(&ExactMap1d), &sets)).unwrap().eps_disc.unwrap()
                })
                .sum::<f64>()
                / 10.0
        })
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn stat_term_means_decrease_over_geometric_grid() {
    let ex = Example::OneD;
    for law in [ex.source(), ex.target()] {
        let est: Vec<MeanEstimate> = [10usize, 40, 160, 640]
            .iter()
            .map(|&n| stat_term_mc(&law, n, 200, 7).unwrap())
            .collect();
        for w in est.windows(2) {
            let tol = 3.0 * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
            assert!(w[1].mean <= w[0].mean + tol, "{est:?}");
        }
    }
}

#[test]
fn stat_term_of_point_mass_is_zero() {
    let law = Law::PointMass(vec![0.25]);
    assert_eq!(stat_term_mc(&law, 1, 2, 0).unwrap().mean, 0.0);
}

#[test]
fn j2_is_invariant_under_reflection() {
    let n = 10_001;
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let f = |x: f64| 0.5 + x + 0.3 * (x * x);
    let d = TabulatedDensity::from_line(DomainSpec::interval(0.0, 1.0).unwrap(), nodes.clone(), nodes.iter().map(|&x| f(x)).collect()).unwrap();
    let r = TabulatedDensity::from_line(DomainSpec::interval(0.0, 1.0).unwrap(), nodes.clone(), nodes.iter().map(|&x| f(1.0 - x)).collect()).unwrap();
    assert!((j2_functional(&d).unwrap() - j2_functional(&r).unwrap()).abs() <= 1e-9);
}

#[test]
fn doubling_uniform_interval_is_exactly_two() {
    let res = doubling_probe(&uniform_density_1d(0.0, 1.0, 1001).unwrap(), 2000, 1).unwrap();
    assert!(res.ratios.iter().all(|r| (r - 2.0).abs() <= 1e-9), "max {}", res.max_ratio);
}

#[test]
fn doubling_bounds_for_affine_and_disk_densities() {
    let affine = doubling_probe(&closed_form_1d(), 2000, 2).unwrap();
    assert!(affine.max_ratio >= 2.0 - 1e-9 && affine.max_ratio <= 6.0, "{}", affine.max_ratio);
    let disk = doubling_probe(&closed_form_2d(), 500, 3).unwrap();
    assert!(disk.max_ratio >= 3.9 && disk.max_ratio <= 16.0, "{}", disk.max_ratio);
    assert_eq!(disk.trials, 500);
}

#[test]
fn holder_probe_on_exact_1d_map() {
    let est = holder_probe(
        &HolderSource::Map { map: &ExactMap1d, domain: DomainSpec::interval(0.0, 1.0).unwrap() },
        10_000,
        4,
    )
    .unwrap();
    assert!((0.95..=1.0).contains(&est.beta), "beta {}", est.beta);
    assert!(est.constant <= 2.2, "constant {}", est.constant);
}

#[test]
fn holder_probe_on_identity() {
    let est = holder_probe(&HolderSource::Map { map: &IdentityMap(2), domain: DomainSpec::UnitDisk }, 2000, 5).unwrap();
    assert!((est.beta - 1.0).abs() <= 1e-9 && (est.constant - 1.0).abs() <= 1e-9);
}

#[test]
fn holder_probe_on_discrete_2d_map() {
    let points = sunflower_disk(1024).unwrap();
    let targets = Example::TwoD.sample_target(1024, 6).unwrap();
    let images = discrete_ot_images(&points, &targets).unwrap();
    let est = holder_probe(&HolderSource::Discrete { points: &points, images: &images }, 20_000, 7).unwrap();
    assert!(est.beta > 0.0 && est.beta_lower() > 0.0, "{est:?}");
}

fn ood_configurations() -> Vec<(&'static str, Law)> {
    let shifted = solve_elliptic_1d(&EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.6, 1.4), 2001).unwrap();
    vec![
        ("same law", Example::OneD.target()),
        ("elliptic shift", Law::InverseCdf(Arc::new(shifted))),
        ("point mass", Law::PointMass(vec![0.5])),
    ]
}

#[test]
fn shifted_elliptic_target_is_the_affine_density() {
    let d = solve_elliptic_1d(&EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.6, 1.4), 2001).unwrap();
    for (x, v) in d.nodes().unwrap().iter().zip(d.values()) {
        assert!((v - (0.8 * x + 0.6)).abs() <= 1e-10);
    }
}

#[test]
fn ood_inequality_holds_on_every_configuration() {
    let ex = Example::OneD;
    let xs = ex.sample_source(500, 8).unwrap();
    let ys = ex.sample_target(500, 9).unwrap();
    let cfg = TrainConfig { max_iters: 1000, patience: 1000, seed: 10, ..TrainConfig::default() };
    let (net, _) = train(&xs, &ys, init_net(&[1, 16, 16, 1], 11).unwrap(), &cfg).unwrap();
    let maps: [&dyn PushforwardMap; 2] = [&ExactMap1d, &net];
    let n = 20_000;
    for (k, map) in maps.iter().enumerate() {
        for (name, law) in ood_configurations() {
            let s = SeedStream::new(k as u64).child(name);
            let mu = ex.sample_source(n, s.child("mu").seed()).unwrap();
            let nu = ex.sample_target(n, s.child("nu").seed()).unwrap();
            let nu1 = law.sample(n, s.child("nu1").seed()).unwrap();
            let r = ood_check(*map, &mu, &nu, &nu1, W2Method::ExactLp, W2Options::default()).unwrap();
            assert!(r.holds(3.0), "{name}: {r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_exact_power_laws(c in 0.01..10.0f64, p in -1.5..-0.05f64) {
        let ns = log_spaced(100, 10_000, 8).unwrap();
        let means: Vec<f64> = ns.iter().map(|&n| c * (n as f64).powf(p)).collect();
        let (slope, intercept, res) = fit_loglog(&ns, &means).unwrap();
        prop_assert!((slope - p).abs() <= 1e-12);
        prop_assert!((intercept - c.log10()).abs() <= 1e-12);
        prop_assert!(res.iter().all(|r| r.abs() <= 1e-12));
    }
}
