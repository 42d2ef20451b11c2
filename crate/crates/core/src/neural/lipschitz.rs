use ndarray::{Array1, Array2};

use super::net::TransportNet;

const POWER_ITERS: usize = 200;
const STAGNATION: f64 = 1e-10;
const MAX_SQUARINGS: usize = 64;
/// Covers rounding in the certified bound.
const ROUNDING_MARGIN: f64 = 1e-9;

/// Lower and upper bounds on the spectral norm of `w`.
///
/// The lower bound is the power-iteration estimate. The upper bound uses
/// `sigma_max(W)^2 = lambda_max(G) <= ||G^k||_F^(1/k)` for the smaller Gram
/// matrix `G`, with `k = 2^j` built by repeated normalized squaring, capped
/// by the Frobenius norm of `w`.
pub fn spectral_norm_bounds(w: &Array2<f64>) -> (f64, f64) {
    let gram = if w.nrows() <= w.ncols() { w.dot(&w.t()) } else { w.t().dot(w) };
    let frob = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return (0.0, 0.0);
    }
    let lower = power_iteration(&gram).sqrt();

    // log ||G^(2^j)||_F / 2^j decreases monotonically to log lambda_max
    let norm = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n0 = norm(&gram);
    let mut b = gram / n0;
    let mut log_scale = n0.ln();
    let mut power = 1.0f64;
    let mut best = log_scale;
    for _ in 0..MAX_SQUARINGS {
        let sq = b.dot(&b);
        let nb = norm(&sq);
        if nb == 0.0 {
            // nilpotent cannot occur for a nonzero Gram matrix; bail out safely
            break;
        }
        log_scale = 2.0 * log_scale + nb.ln();
        power *= 2.0;
        b = sq / nb;
        let bound = log_scale / power;
        let improved = best - bound;
        best = best.min(bound);
        if improved.abs() <= STAGNATION * best.abs().max(1.0) {
            break;
        }
    }
    let upper = (best.exp().sqrt() * (1.0 + ROUNDING_MARGIN)).min(frob * (1.0 + ROUNDING_MARGIN));
    (lower, upper.max(lower))
}

fn power_iteration(g: &Array2<f64>) -> f64 {
    let n = g.nrows();
    // fixed, dense start vector keeps the result deterministic
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.1 * ((i * 7919) % 97) as f64 / 97.0);
    v /= v.dot(&v).sqrt();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let w = g.dot(&v);
        let next = v.dot(&w);
        let nw = w.dot(&w).sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        let done = (next - lambda).abs() <= STAGNATION * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda.max(0.0)
}

/// Product of certified per-layer spectral-norm upper bounds. ReLU is
/// 1-Lipschitz, so this bounds the Lipschitz constant of the network.
pub fn lipschitz_upper_bound(net: &TransportNet) -> f64 {
    net.weights.iter().map(|w| spectral_norm_bounds(w).1).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_net;
    use ndarray::array;

    #[test]
    fn scalar_and_diagonal_layers() {
        let net = TransportNet::from_parts(vec![array![[3.0]]], vec![array![0.0]], 0).unwrap();
        assert!((lipschitz_upper_bound(&net) - 3.0).abs() < 1e-8);
        let net = TransportNet::from_parts(
            vec![array![[2.0, 0.0], [0.0, 2.0]], array![[5.0, 0.0], [0.0, 5.0]]],
            vec![array![0.0, 0.0], array![0.0, 0.0]],
            0,
        )
        .unwrap();
        let l = lipschitz_upper_bound(&net);
        assert!((10.0..10.0 * (1.0 + 1e-6)).contains(&l), "{l}");
    }

    #[test]
    fn bounds_bracket_known_norm() {
        // singular values 4 and 1
        let w = array![[4.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let (lo, hi) = spectral_norm_bounds(&w);
        assert!(lo <= 4.0 + 1e-12 && hi >= 4.0 && hi - lo < 1e-6, "{lo} {hi}");
    }

    #[test]
    fn random_layers_are_tight() {
        let net = init_net(&[3, 40, 30, 2], 4).unwrap();
        for w in &net.weights {
            let (lo, hi) = spectral_norm_bounds(w);
            assert!(lo <= hi && (hi - lo) / hi < 1e-4, "{lo} {hi}");
        }
    }
}
