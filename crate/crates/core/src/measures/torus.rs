use std::sync::Arc;

use super::density::TabulatedDensity;
use super::domain::DomainSpec;
use super::tridiag::{solve_tridiagonal, Tridiagonal};
use super::ScalarFn;
use crate::error::{Error, Result};

const PERIODIC_TOL: f64 = 1e-8;

/// Drift and diffusion of the diffusion `dX = b dt + sqrt(2 kappa) dW` on the
/// circle of circumference `length`.
#[derive(Clone)]
pub struct TorusCoeffs1D {
    pub length: f64,
    pub b: ScalarFn,
    pub kappa: ScalarFn,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
}

impl std::fmt::Debug for TorusCoeffs1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusCoeffs1D")
            .field("length", &self.length)
            .field("kappa_minus", &self.kappa_minus)
            .field("kappa_plus", &self.kappa_plus)
            .finish_non_exhaustive()
    }
}

impl TorusCoeffs1D {
    fn check(&self, nodes: &[f64]) -> Result<()> {
        DomainSpec::periodic_cell(self.length, 1)?;
        if !(self.kappa_minus > 0.0 && self.kappa_minus <= self.kappa_plus) {
            return Err(Error::invalid(format!(
                "need 0 < kappa_- <= kappa_+, got {} and {}",
                self.kappa_minus, self.kappa_plus
            )));
        }
        for &x in nodes {
            let (b, k) = ((self.b)(x), (self.kappa)(x));
            if !(b.is_finite() && k.is_finite()) {
                return Err(Error::NonFinite(format!("torus coefficient at x = {x}")));
            }
            if k < self.kappa_minus || k > self.kappa_plus {
                return Err(Error::invalid(format!(
                    "kappa({x}) = {k} outside [{}, {}]",
                    self.kappa_minus, self.kappa_plus
                )));
            }
        }
        let l = self.length;
        if ((self.b)(0.0) - (self.b)(l)).abs() > PERIODIC_TOL
            || ((self.kappa)(0.0) - (self.kappa)(l)).abs() > PERIODIC_TOL
        {
            return Err(Error::invalid("coefficients are not periodic on the cell"));
        }
        Ok(())
    }
}

/// Invariant density of the periodic Fokker-Planck operator
/// `(kappa m)'' - (b m)'` on `n_grid` cells.
///
/// The central-difference matrix has zero column sums, so its null space is
/// extracted by pinning `m_0 = 1` and dropping the redundant first row, which
/// leaves an ordinary tridiagonal system. The dropped row is then checked.
/// The returned tabulation carries `n_grid + 1` nodes, the last repeating the
/// first (`m(L) = m(0)`).
pub fn solve_fp_invariant_1d(coeffs: &TorusCoeffs1D, n_grid: usize) -> Result<TabulatedDensity> {
    if n_grid < 3 {
        return Err(Error::invalid(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let l = coeffs.length;
    let h = l / n_grid as f64;
    let nodes: Vec<f64> = (0..=n_grid)
        .map(|i| if i == n_grid { l } else { h * i as f64 })
        .collect();
    coeffs.check(&nodes[..n_grid])?;

    let kappa: Vec<f64> = nodes[..n_grid].iter().map(|&x| (coeffs.kappa)(x)).collect();
    let drift: Vec<f64> = nodes[..n_grid].iter().map(|&x| (coeffs.b)(x)).collect();
    // coefficient of m_j in row i, for j = i - 1, i, i + 1 (indices mod n)
    let from_left = |j: usize| kappa[j] / (h * h) + drift[j] / (2.0 * h);
    let center = |j: usize| -2.0 * kappa[j] / (h * h);
    let from_right = |j: usize| kappa[j] / (h * h) - drift[j] / (2.0 * h);

    let n = n_grid;
    let m = n - 1;
    let mut mat = Tridiagonal::zeros(m);
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let i = k + 1;
        mat.lower[k] = from_left(i - 1);
        mat.diag[k] = center(i);
        mat.upper[k] = from_right((i + 1) % n);
    }
    // pinned m_0 = 1 enters row 1 from the left and row n-1 from the right
    rhs[0] -= mat.lower[0];
    rhs[m - 1] -= mat.upper[m - 1];
    mat.lower[0] = 0.0;
    mat.upper[m - 1] = 0.0;

    let rest = solve_tridiagonal(&mat, &rhs).map_err(|e| match e {
        Error::SingularSystem { condition, .. } => {
            Error::NullSpace(format!("reduced system singular (condition estimate {condition:.3e})"))
        }
        other => other,
    })?;
    let mut density = Vec::with_capacity(n + 1);
    density.push(1.0);
    density.extend(rest);

    let residual = from_left(n - 1) * density[n - 1] + center(0) * density[0] + from_right(1) * density[1];
    let scale = 4.0 * kappa.iter().fold(0.0f64, |a, v| a.max(*v)) / (h * h)
        * density.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if residual.abs() > 1e-8 * scale {
        return Err(Error::NullSpace(format!("dropped row residual {residual:.3e}")));
    }
    if let Some((index, &value)) = density.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveDensity { index, value });
    }
    density.push(density[0]);
    TabulatedDensity::from_line(DomainSpec::periodic_cell(l, 1)?, nodes, density)
}

/// Tilted drift `x -> 2 alpha e + v(x)` of the auxiliary diffusion used for
/// KPP front speeds. In one dimension the direction `e` is `+1` or `-1`.
pub fn kpp_tilted_drift(v: ScalarFn, alpha: f64, e: f64) -> Result<ScalarFn> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if (e.abs() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("direction must be a unit vector, got {e}")));
    }
    let shift = 2.0 * alpha * e;
    Ok(Arc::new(move |x| shift + v(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{constant, scalar_fn};
    use std::f64::consts::PI;

    fn coeffs(b: ScalarFn) -> TorusCoeffs1D {
        TorusCoeffs1D {
            length: 1.0,
            b,
            kappa: constant(1.0),
            kappa_minus: 1.0,
            kappa_plus: 1.0,
        }
    }

    #[test]
    fn zero_drift_is_uniform() {
        let d = solve_fp_invariant_1d(&coeffs(constant(0.0)), 64).unwrap();
        for v in d.values() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_drift_is_uniform() {
        let d = solve_fp_invariant_1d(&coeffs(constant(2.0)), 64).unwrap();
        for v in d.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kpp_drift_formula() {
        let b = kpp_tilted_drift(constant(0.0), 1.0, 1.0).unwrap();
        assert_eq!(b(0.3), 2.0);
        let b = kpp_tilted_drift(scalar_fn(|x| (2.0 * PI * x).sin()), 0.5, 1.0).unwrap();
        for x in [0.0, 0.1, 0.37, 0.9] {
            assert!((b(x) - (1.0 + (2.0 * PI * x).sin())).abs() < 1e-15);
        }
        let n = 1000;
        let mean = (0..n).map(|i| b(i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(kpp_tilted_drift(constant(0.0), 0.0, 1.0).is_err());
        assert!(kpp_tilted_drift(constant(0.0), 1.0, 0.5).is_err());
    }

    #[test]
    fn rejects_bad_coefficients() {
        let mut c = coeffs(scalar_fn(|x| x));
        assert!(solve_fp_invariant_1d(&c, 32).is_err());
        c.b = constant(0.0);
        c.kappa_minus = 0.0;
        assert!(solve_fp_invariant_1d(&c, 32).is_err());
        let c = TorusCoeffs1D {
            kappa: constant(3.0),
            ..coeffs(constant(0.0))
        };
        assert!(solve_fp_invariant_1d(&c, 32).is_err());
    }

    fn gibbs_error(n: usize) -> f64 {
        // b = -V' with V = cos(2 pi x) gives m = exp(-V) / Z
        let c = coeffs(scalar_fn(|x| 2.0 * PI * (2.0 * PI * x).sin()));
        let d = solve_fp_invariant_1d(&c, n).unwrap();
        let fine = 100_000;
        let z = (0..fine).map(|i| (-(2.0 * PI * i as f64 / fine as f64).cos()).exp()).sum::<f64>() / fine as f64;
        d.nodes()
            .unwrap()
            .iter()
            .zip(d.values())
            .map(|(x, v)| (v - (-(2.0 * PI * x).cos()).exp() / z).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gibbs_density_recovered() {
        let e = gibbs_error(2048);
        assert!(e <= 1e-4, "max error {e}");
        let order = (gibbs_error(256) / gibbs_error(512)).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn kpp_tilted_invariant_density_is_positive() {
        let b = kpp_tilted_drift(scalar_fn(|x| (2.0 * PI * x).sin()), 0.5, 1.0).unwrap();
        let c = TorusCoeffs1D {
            kappa: scalar_fn(|x| 1.0 + 0.5 * (2.0 * PI * x).cos()),
            kappa_minus: 0.5,
            kappa_plus: 1.5,
            ..coeffs(b)
        };
        let d = solve_fp_invariant_1d(&c, 512).unwrap();
        assert!(d.min_value() > 0.0);
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }
}
