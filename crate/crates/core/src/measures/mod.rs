//! PDE-induced target measures: finite-difference solvers, closed-form
//! model problems, tabulated densities, and seeded samplers.

mod closed_form;
mod density;
mod domain;
mod elliptic;
mod parabolic;
mod sampling;
mod torus;
mod tridiag;

use std::sync::Arc;

pub use closed_form::{
    closed_form_1d, closed_form_2d, exact_map_1d, uniform_density_1d, uniform_disk_density,
    ExactMap1d,
};
pub use density::{ClosedForm, Grid, TabulatedDensity};
pub use domain::DomainSpec;
pub use elliptic::{solve_elliptic_1d, EllipticCoeffs1D, NEGATIVE_TOLERANCE};
pub use parabolic::{solve_parabolic_1d, ParabolicCoeffs1D};
pub use sampling::{rejection_disk_with_stats, sample_inverse_cdf, sample_rejection_disk, Law, SampleSet};
pub use torus::{kpp_tilted_drift, solve_fp_invariant_1d, TorusCoeffs1D};
pub use tridiag::{solve_tridiagonal, Tridiagonal};

/// A real coefficient function of one variable, shareable across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Constant coefficient.
pub fn constant(value: f64) -> ScalarFn {
    Arc::new(move |_| value)
}

/// Wrap a closure as a coefficient.
pub fn scalar_fn<F>(f: F) -> ScalarFn
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Trapezoid rule on a (possibly nonuniform) grid.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

pub(crate) fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + h * i as f64 })
        .collect()
}
