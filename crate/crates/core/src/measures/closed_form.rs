use std::f64::consts::PI;

use super::density::{ClosedForm, TabulatedDensity};
use super::domain::DomainSpec;
use super::uniform_grid;
use crate::error::{Error, Result};
use crate::map::PushforwardMap;

/// Grid size used for the bundled 1D tabulations.
const LINE_NODES: usize = 10_001;

/// The density `x + 1/2` on `[0, 1]`: the normalized solution of
/// `u'' = 0`, `u(0) = 1/2`, `u(1) = 3/2`. Its cdf is `(y^2 + y) / 2`, which
/// the trapezoid rule reproduces exactly at the nodes.
pub fn closed_form_1d() -> TabulatedDensity {
    let nodes = uniform_grid(0.0, 1.0, LINE_NODES);
    let raw = nodes.iter().map(|x| x + 0.5).collect();
    TabulatedDensity::from_line(DomainSpec::Interval { lo: 0.0, hi: 1.0 }, nodes, raw)
        .expect("positive affine density")
        .with_closed_form(ClosedForm::Affine { slope: 1.0, intercept: 0.5 })
}

/// The density `(2/pi)(1 - |x|^2)` on the unit disk: the normalized
/// solution of `-Laplace u = 1` with zero boundary data.
pub fn closed_form_2d() -> TabulatedDensity {
    TabulatedDensity::from_polar(129, 128, |r, _| 1.0 - r * r)
        .expect("nonnegative paraboloid")
        .with_closed_form(ClosedForm::DiskParaboloid)
}

/// Uniform density on `[lo, hi]` tabulated on `n` nodes.
pub fn uniform_density_1d(lo: f64, hi: f64, n: usize) -> Result<TabulatedDensity> {
    let domain = DomainSpec::interval(lo, hi)?;
    if n < 2 {
        return Err(Error::invalid("need at least two nodes"));
    }
    let nodes = uniform_grid(lo, hi, n);
    let raw = vec![1.0; n];
    Ok(TabulatedDensity::from_line(domain, nodes, raw)?
        .with_closed_form(ClosedForm::Uniform { value: 1.0 / (hi - lo) }))
}

/// Uniform density `1/pi` on the unit disk.
pub fn uniform_disk_density() -> TabulatedDensity {
    TabulatedDensity::from_polar(17, 32, |_, _| 1.0)
        .expect("constant density")
        .with_closed_form(ClosedForm::Uniform { value: 1.0 / PI })
}

/// Quadratic-cost optimal map from the uniform law on `[0, 1]` to the
/// density `x + 1/2`, `T(x) = (-1 + sqrt(1 + 8x)) / 2`. Its derivative
/// `2 / sqrt(1 + 8x)` is bounded by 2.
pub fn exact_map_1d(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainViolation {
            value: x,
            domain: "[0,1]".into(),
        });
    }
    Ok(0.5 * (-1.0 + (1.0 + 8.0 * x).sqrt()))
}

/// [`exact_map_1d`] as a pushforward map. Inputs are clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMap1d;

impl PushforwardMap for ExactMap1d {
    fn dim_in(&self) -> usize {
        1
    }
    fn dim_out(&self) -> usize {
        1
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.5 * (-1.0 + (1.0 + 8.0 * x[0].clamp(0.0, 1.0)).sqrt());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_model() {
        let d = closed_form_1d();
        assert_eq!(d.eval(&[0.0]), 0.5);
        assert_eq!(d.eval(&[1.0]), 1.5);
        assert!((d.mass() - 1.0).abs() < 1e-12);
        for y in [0.1, 0.25, 0.5, 0.9] {
            let f = d.cdf_at(y).unwrap();
            assert!((f - 0.5 * (y * y + y)).abs() < 1e-8);
        }
    }

    #[test]
    fn two_dimensional_model() {
        let d = closed_form_2d();
        assert!((d.eval(&[0.0, 0.0]) - 2.0 / PI).abs() < 1e-15);
        assert_eq!(d.eval(&[1.0, 0.0]), 0.0);
        assert_eq!(d.eval(&[0.6, 0.8]), 0.0);
        assert!((d.mass() - 1.0).abs() < 1e-12);
        assert!((d.norm_constant() - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn exact_map_values() {
        assert_eq!(exact_map_1d(0.0).unwrap(), 0.0);
        assert_eq!(exact_map_1d(1.0).unwrap(), 1.0);
        assert!((exact_map_1d(0.5).unwrap() - 0.618_033_988_749_894_8).abs() < 1e-15);
        assert!(exact_map_1d(-0.1).is_err());
        assert!(exact_map_1d(1.5).is_err());
    }

    #[test]
    fn exact_map_pushes_uniform_to_target() {
        // F_nu(T(x)) = x
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let t = exact_map_1d(x).unwrap();
            assert!((0.5 * (t * t + t) - x).abs() < 1e-12);
        }
    }
}
