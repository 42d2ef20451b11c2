//! Maps that push a point cloud forward.

use crate::error::{Error, Result};
use crate::measures::SampleSet;

/// A map `R^{dim_in} -> R^{dim_out}` that can push samples forward.
pub trait PushforwardMap: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn push_forward(&self, xs: &SampleSet) -> Result<SampleSet> {
        if xs.dim() != self.dim_in() {
            return Err(Error::SizeMismatch { left: xs.dim(), right: self.dim_in() });
        }
        let d = self.dim_out();
        let mut out = vec![0.0; xs.len() * d];
        for (p, o) in xs.iter().zip(out.chunks_exact_mut(d)) {
            self.apply(p, o);
        }
        SampleSet::new(out, d, format!("push({})", xs.measure_id()), xs.seed())
    }
}

/// The identity on `R^d`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl PushforwardMap for IdentityMap {
    fn dim_in(&self) -> usize {
        self.0
    }
    fn dim_out(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Adapter for a plain function of one variable.
pub struct ScalarMap<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> PushforwardMap for ScalarMap<F> {
    fn dim_in(&self) -> usize {
        1
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (self.0)(x[0]);
    }
}
