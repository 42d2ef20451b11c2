#![allow(dead_code)]

use pushmap::measures::SampleSet;
use pushmap::neural::{init_net, loss_and_grad, TransportNet};
use pushmap::rng::rng_from_seed;
use rand::Rng;

/// Central differences of the loss in every coordinate.
pub fn finite_difference(net: &TransportNet, xs: &SampleSet, ys: &SampleSet, h: f64) -> Vec<f64> {
    let base = net.flatten();
    let mut probe = net.clone();
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] = base[k] + h;
            probe.set_flat(&p).unwrap();
            let up = loss_and_grad(&probe, xs, ys).unwrap().0;
            p[k] = base[k] - h;
            probe.set_flat(&p).unwrap();
            let down = loss_and_grad(&probe, xs, ys).unwrap().0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Random instance with biases pushed away from zero so that no
/// pre-activation sits within the difference step of a ReLU kink.
pub fn instance(seed: u64) -> (TransportNet, SampleSet, SampleSet) {
    let mut rng = rng_from_seed(seed);
    let d_in = rng.random_range(1..=2);
    let d_out = rng.random_range(1..=2);
    let depth = rng.random_range(1..=2);
    let mut dims = vec![d_in];
    for _ in 0..depth {
        dims.push(rng.random_range(2..=16));
    }
    dims.push(d_out);
    let mut net = init_net(&dims, seed).unwrap();
    for b in net.biases.iter_mut() {
        b.mapv_inplace(|_| rng.random::<f64>() - 0.5);
    }
    let n = rng.random_range(1..=6);
    let xs = SampleSet::new((0..n * d_in).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(), d_in, "x", 0).unwrap();
    let ys = SampleSet::new((0..n * d_out).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(), d_out, "y", 0).unwrap();
    (net, xs, ys)
}

pub fn min_abs_preactivation(net: &TransportNet, xs: &SampleSet) -> f64 {
    let mut a: Vec<Vec<f64>> = xs.iter().map(|p| p.to_vec()).collect();
    let mut closest = f64::INFINITY;
    for l in 0..net.weights.len() - 1 {
        a = a
            .iter()
            .map(|x| {
                let z = net.weights[l].dot(&ndarray::Array1::from(x.clone())) + &net.biases[l];
                closest = z.iter().fold(closest, |m, v| m.min(v.abs()));
                z.iter().map(|v| v.max(0.0)).collect()
            })
            .collect();
    }
    closest
}

/// Checks analytic gradients against central differences on `count`
/// random instances whose pre-activations stay clear of the ReLU kinks.
/// Returns the number of coordinates compared.
pub fn check_gradients(count: usize) -> Result<usize, String> {
    let h = 1e-5;
    let (mut checked, mut coords, mut seed) = (0, 0, 0u64);
    while checked < count {
        seed += 1;
        let (net, xs, ys) = instance(seed);
        if min_abs_preactivation(&net, &xs) < 1e-3 {
            continue;
        }
        let g = loss_and_grad(&net, &xs, &ys).map_err(|e| e.to_string())?.1.flatten();
        let fd = finite_difference(&net, &xs, &ys, h);
        for (k, (a, b)) in g.iter().zip(&fd).enumerate() {
            let tol = (1e-5 * a.abs().max(b.abs())).max(1e-8);
            if (a - b).abs() > tol {
                return Err(format!("seed {seed} coord {k}: analytic {a}, numeric {b}"));
            }
        }
        coords += g.len();
        checked += 1;
    }
    Ok(coords)
}

/// Largest `|T(x) - T(y)| / |x - y|` over `pairs` random pairs in `[-1, 1]^d`.
pub fn sampled_lipschitz(net: &TransportNet, pairs: usize, seed: u64) -> f64 {
    let d = net.d_in();
    let mut rng = rng_from_seed(seed);
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (tx, ty) = (net.forward(&x).unwrap(), net.forward(&y).unwrap());
        let num = tx.iter().zip(&ty).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    best
}
