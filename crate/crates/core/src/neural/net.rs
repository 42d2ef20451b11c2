use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::map::PushforwardMap;
use crate::measures::SampleSet;
use crate::rng::rng_from_seed;

/// Fully connected network with ReLU hidden layers and a linear output.
/// `weights[l]` has shape `(layer_dims[l + 1], layer_dims[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportNet {
    layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    seed: u64,
}

/// Parameter-shaped container used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &TransportNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    /// Coordinates in layer order: weights row-major, then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Pre-activations and activations of one batch forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least the input")
    }
}

pub fn init_net(layer_dims: &[usize], seed: u64) -> Result<TransportNet> {
    if layer_dims.len() < 2 {
        return Err(Error::invalid("a network needs at least input and output layers"));
    }
    if layer_dims.contains(&0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut weights = Vec::with_capacity(layer_dims.len() - 1);
    let mut biases = Vec::with_capacity(layer_dims.len() - 1);
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng)));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(TransportNet {
        layer_dims: layer_dims.to_vec(),
        weights,
        biases,
        seed,
    })
}

impl TransportNet {
    /// Builds a network from explicit parameters.
    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>, seed: u64) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::SizeMismatch { left: weights.len(), right: biases.len() });
        }
        let mut dims = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            let last = *dims.last().expect("nonempty");
            if w.ncols() != last {
                return Err(Error::SizeMismatch { left: last, right: w.ncols() });
            }
            if b.len() != w.nrows() {
                return Err(Error::SizeMismatch { left: w.nrows(), right: b.len() });
            }
            dims.push(w.nrows());
        }
        let net = Self {
            layer_dims: dims,
            weights,
            biases,
            seed,
        };
        if !net.is_finite() {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(net)
    }

    /// `relu(x) - relu(-x)` per coordinate: an exact identity of width `2d`.
    pub fn relu_identity(d: usize) -> Self {
        let mut w1 = Array2::zeros((2 * d, d));
        let mut w2 = Array2::zeros((d, 2 * d));
        for k in 0..d {
            w1[[2 * k, k]] = 1.0;
            w1[[2 * k + 1, k]] = -1.0;
            w2[[k, 2 * k]] = 1.0;
            w2[[k, 2 * k + 1]] = -1.0;
        }
        Self::from_parts(vec![w1, w2], vec![Array1::zeros(2 * d), Array1::zeros(d)], 0).expect("consistent shapes")
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn d_in(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn d_out(&self) -> usize {
        *self.layer_dims.last().expect("nonempty")
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Same coordinate order as [`Gradients::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::SizeMismatch { left: self.param_count(), right: params.len() });
        }
        let mut it = params.iter();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = *it.next().expect("length checked"));
        }
        Ok(())
    }

    /// Evaluates one point.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in() {
            return Err(Error::SizeMismatch { left: self.d_in(), right: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        let input = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let out = self.forward_batch(input);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(out.into_raw_vec_and_offset().0)
    }

    /// Evaluates a batch given as rows.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(relu);
            }
            a = z;
        }
        a
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let last = self.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(x.to_owned());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Mean squared loss `(1/n) sum_i |out_i - y_i|^2` against row targets,
    /// and its gradient, from a cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, targets: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        let out = cache.output();
        if out.dim() != targets.dim() {
            return Err(Error::SizeMismatch { left: out.len(), right: targets.len() });
        }
        let n = out.nrows() as f64;
        let mut delta = out - &targets;
        let loss = delta.iter().map(|v| v * v).sum::<f64>() / n;
        delta *= 2.0 / n;

        let layers = self.weights.len();
        let mut gw = Vec::with_capacity(layers);
        let mut gb = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            let a_prev = &cache.activations[l];
            gw.push(delta.t().dot(a_prev));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut next = delta.dot(&self.weights[l]);
                // ReLU subgradient at 0 is 0; a_prev is the post-activation
                ndarray::Zip::from(&mut next).and(a_prev).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = next;
            }
        }
        gw.reverse();
        gb.reverse();
        Ok((loss, Gradients { weights: gw, biases: gb }))
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Loss `(1/N) sum_i |T(x_i) - y_i|^2` with targets already matched, and
/// its exact gradient.
pub fn loss_and_grad(net: &TransportNet, xs: &SampleSet, ys_matched: &SampleSet) -> Result<(f64, Gradients)> {
    if xs.len() != ys_matched.len() {
        return Err(Error::SizeMismatch { left: xs.len(), right: ys_matched.len() });
    }
    if xs.dim() != net.d_in() {
        return Err(Error::SizeMismatch { left: net.d_in(), right: xs.dim() });
    }
    if ys_matched.dim() != net.d_out() {
        return Err(Error::SizeMismatch { left: net.d_out(), right: ys_matched.dim() });
    }
    let x = ArrayView2::from_shape((xs.len(), xs.dim()), xs.points()).expect("row-major samples");
    let y = ArrayView2::from_shape((ys_matched.len(), ys_matched.dim()), ys_matched.points()).expect("row-major samples");
    let cache = net.forward_cached(x);
    net.backward(&cache, y)
}

impl PushforwardMap for TransportNet {
    fn dim_in(&self) -> usize {
        self.d_in()
    }

    fn dim_out(&self) -> usize {
        self.d_out()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let input = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let y = self.forward_batch(input);
        out.copy_from_slice(y.as_slice().expect("standard layout"));
    }

    fn push_forward(&self, xs: &SampleSet) -> Result<SampleSet> {
        if xs.dim() != self.d_in() {
            return Err(Error::SizeMismatch { left: self.d_in(), right: xs.dim() });
        }
        let mut out: Vec<f64> = Vec::with_capacity(xs.len() * self.d_out());
        const CHUNK: usize = 8192;
        for chunk in xs.points().chunks(CHUNK * xs.dim()) {
            let x = ArrayView2::from_shape((chunk.len() / xs.dim(), xs.dim()), chunk).expect("row-major samples");
            let y = self.forward_batch(x);
            out.extend(y.iter());
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        SampleSet::new(out, self.d_out(), format!("push({})", xs.measure_id()), xs.seed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_shapes_and_determinism() {
        let net = init_net(&[1, 1], 3).unwrap();
        assert_eq!(net.weights[0].dim(), (1, 1));
        assert_eq!(net.biases[0][0], 0.0);
        assert_eq!(net, init_net(&[1, 1], 3).unwrap());
        assert_ne!(net, init_net(&[1, 1], 4).unwrap());
        assert_eq!(init_net(&[1, 256, 256, 1], 0).unwrap().param_count(), 66_561);
        assert!(init_net(&[3], 0).is_err());
    }

    #[test]
    fn zero_net_outputs_zero() {
        let mut net = init_net(&[2, 5, 3], 1).unwrap();
        net.set_flat(&vec![0.0; net.param_count()]).unwrap();
        assert_eq!(net.forward(&[0.3, -2.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn relu_identity_is_exact() {
        let net = TransportNet::relu_identity(1);
        for x in [-3.5, -1e-300, 0.0, 0.25, 1e300] {
            assert_eq!(net.forward(&[x]).unwrap(), vec![x]);
        }
        let net = TransportNet::relu_identity(2);
        assert_eq!(net.forward(&[0.5, -0.75]).unwrap(), vec![0.5, -0.75]);
    }

    #[test]
    fn bias_free_nets_are_homogeneous() {
        let net = init_net(&[2, 8, 8, 2], 9).unwrap();
        let x = [0.3, -0.7];
        let y = net.forward(&x).unwrap();
        let y3 = net.forward(&[0.9, -2.1]).unwrap();
        for k in 0..2 {
            assert!((y3[k] - 3.0 * y[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_layer_gradient_closed_form() {
        let net = TransportNet::from_parts(vec![array![[1.5, -0.5]]], vec![array![0.25]], 0).unwrap();
        let xs = SampleSet::new(vec![2.0, 1.0], 2, "x", 0).unwrap();
        let ys = SampleSet::new(vec![1.0], 1, "y", 0).unwrap();
        let (loss, g) = loss_and_grad(&net, &xs, &ys).unwrap();
        let r = 1.5 * 2.0 - 0.5 * 1.0 + 0.25 - 1.0;
        assert_eq!(loss, r * r);
        assert_eq!(g.weights[0], array![[2.0 * r * 2.0, 2.0 * r * 1.0]]);
        assert_eq!(g.biases[0], array![2.0 * r]);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let net = init_net(&[1, 4, 1], 2).unwrap();
        let xs = SampleSet::new(vec![0.1, 0.5, 0.9], 1, "x", 0).unwrap();
        let ys = net.push_forward(&xs).unwrap();
        let (loss, g) = loss_and_grad(&net, &xs, &ys).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_round_trip() {
        let mut net = init_net(&[2, 3, 1], 5).unwrap();
        let p: Vec<f64> = (0..net.param_count()).map(|i| i as f64).collect();
        net.set_flat(&p).unwrap();
        assert_eq!(net.flatten(), p);
        assert_eq!(net.weights[0][[1, 0]], 2.0);
        assert_eq!(net.biases[0][0], 6.0);
    }
}
