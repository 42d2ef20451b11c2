use super::density::TabulatedDensity;
use super::domain::DomainSpec;
use super::tridiag::{solve_tridiagonal, Tridiagonal};
use super::{constant, uniform_grid, ScalarFn};
use crate::error::{Error, Result};

/// Negative values down to `-NEGATIVE_TOLERANCE` are treated as roundoff and
/// clamped to zero; anything below is a scheme failure.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Data for `-a u'' + b u' + c u = g` on `(lo, hi)` with `u(lo) = h0`,
/// `u(hi) = h1`.
#[derive(Clone)]
pub struct EllipticCoeffs1D {
    pub lo: f64,
    pub hi: f64,
    pub a: ScalarFn,
    pub b: ScalarFn,
    pub c: ScalarFn,
    pub g: ScalarFn,
    pub h0: f64,
    pub h1: f64,
}

impl std::fmt::Debug for EllipticCoeffs1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticCoeffs1D")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("h0", &self.h0)
            .field("h1", &self.h1)
            .finish_non_exhaustive()
    }
}

impl EllipticCoeffs1D {
    /// Constant coefficients on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, a: f64, b: f64, c: f64, g: f64, h0: f64, h1: f64) -> Self {
        Self {
            lo,
            hi,
            a: constant(a),
            b: constant(b),
            c: constant(c),
            g: constant(g),
            h0,
            h1,
        }
    }

    /// Check the structural assumptions on the grid nodes, including that
    /// forcing and boundary data are not both identically zero.
    pub fn check(&self, nodes: &[f64]) -> Result<()> {
        let g_zero = self.check_coefficients(nodes)?;
        if g_zero && self.h0 == 0.0 && self.h1 == 0.0 {
            return Err(Error::TrivialData);
        }
        Ok(())
    }

    /// Sign and finiteness checks only. Returns whether `g` vanishes on the grid.
    pub(crate) fn check_coefficients(&self, nodes: &[f64]) -> Result<bool> {
        DomainSpec::interval(self.lo, self.hi)?;
        if !(self.h0 >= 0.0 && self.h1 >= 0.0) {
            return Err(Error::invalid(format!(
                "boundary values must be nonnegative, got h0 = {}, h1 = {}",
                self.h0, self.h1
            )));
        }
        let mut g_zero = true;
        for &x in nodes {
            let (a, b, c, g) = ((self.a)(x), (self.b)(x), (self.c)(x), (self.g)(x));
            if !(a.is_finite() && b.is_finite() && c.is_finite() && g.is_finite()) {
                return Err(Error::NonFinite(format!("coefficient at x = {x}")));
            }
            if a <= 0.0 {
                return Err(Error::invalid(format!("diffusion a({x}) = {a} is not positive")));
            }
            if c < 0.0 {
                return Err(Error::invalid(format!("potential c({x}) = {c} is negative")));
            }
            if g < 0.0 {
                return Err(Error::invalid(format!("forcing g({x}) = {g} is negative")));
            }
            g_zero &= g == 0.0;
        }
        Ok(g_zero)
    }

    /// Row `(lower, diag, upper)` of the central-difference operator
    /// `-a D2 + b D1 + c` at node `x` with spacing `h`.
    pub(crate) fn stencil(&self, x: f64, h: f64) -> (f64, f64, f64) {
        let (a, b, c) = ((self.a)(x), (self.b)(x), (self.c)(x));
        let lower = -a / (h * h) - b / (2.0 * h);
        let diag = 2.0 * a / (h * h) + c;
        let upper = -a / (h * h) + b / (2.0 * h);
        (lower, diag, upper)
    }
}

/// Clamp roundoff-level negatives and reject genuine ones.
pub(crate) fn clamp_nonnegative(u: &mut [f64]) -> Result<()> {
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_TOLERANCE {
        return Err(Error::NegativeSolution { min });
    }
    for v in u.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Second-order central finite differences for the 1D Dirichlet problem,
/// normalized to a probability density.
pub fn solve_elliptic_1d(coeffs: &EllipticCoeffs1D, n_grid: usize) -> Result<TabulatedDensity> {
    if n_grid < 3 {
        return Err(Error::invalid(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let nodes = uniform_grid(coeffs.lo, coeffs.hi, n_grid);
    coeffs.check(&nodes)?;
    let h = (coeffs.hi - coeffs.lo) / (n_grid - 1) as f64;

    let m = n_grid - 2;
    let mut mat = Tridiagonal::zeros(m);
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let x = nodes[k + 1];
        let (l, d, u) = coeffs.stencil(x, h);
        mat.lower[k] = l;
        mat.diag[k] = d;
        mat.upper[k] = u;
        rhs[k] = (coeffs.g)(x);
        if k == 0 {
            rhs[k] -= l * coeffs.h0;
        }
        if k + 1 == m {
            rhs[k] -= u * coeffs.h1;
        }
    }
    let interior = solve_tridiagonal(&mat, &rhs)?;

    let mut u = Vec::with_capacity(n_grid);
    u.push(coeffs.h0);
    u.extend(interior);
    u.push(coeffs.h1);
    clamp_nonnegative(&mut u)?;
    TabulatedDensity::from_line(DomainSpec::interval(coeffs.lo, coeffs.hi)?, nodes, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::scalar_fn;

    #[test]
    fn affine_solution_is_exact() {
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.5, 1.5);
        let d = solve_elliptic_1d(&c, 101).unwrap();
        let nodes = d.nodes().unwrap();
        for (x, v) in nodes.iter().zip(d.values()) {
            assert!((v - (x + 0.5)).abs() < 1e-12);
        }
        for (x, f) in nodes.iter().zip(d.cdf().unwrap()) {
            assert!((f - 0.5 * (x * x + x)).abs() < 1e-12);
        }
        assert!((d.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_solution_is_exact() {
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let d = solve_elliptic_1d(&c, 101).unwrap();
        let nodes = d.nodes().unwrap();
        for (x, u) in nodes.iter().zip(d.raw_values()) {
            assert!((u - 0.5 * x * (1.0 - x)).abs() < 1e-13);
        }
        // normalized density approaches 6x(1-x) up to the trapezoid error of the mass
        for (x, v) in nodes.iter().zip(d.values()) {
            assert!((v - 6.0 * x * (1.0 - x)).abs() < 1e-3);
        }
    }

    #[test]
    fn trivial_data_rejected() {
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(solve_elliptic_1d(&c, 11), Err(Error::TrivialData)));
    }

    #[test]
    fn invalid_coefficients_rejected() {
        let mut c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(solve_elliptic_1d(&c, 2).is_err());
        c.a = scalar_fn(|x| x - 0.5);
        assert!(solve_elliptic_1d(&c, 11).is_err());
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, -1.0, 1.0, 0.0, 0.0);
        assert!(solve_elliptic_1d(&c, 11).is_err());
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 1.0, -0.1, 0.0);
        assert!(solve_elliptic_1d(&c, 11).is_err());
    }

    #[test]
    fn coarse_grid_with_strong_drift_breaks_maximum_principle() {
        // cell Peclet number |b| h / a = 20: central differences oscillate
        let c = EllipticCoeffs1D::constant(0.0, 1.0, 0.01, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            solve_elliptic_1d(&c, 6),
            Err(Error::NegativeSolution { .. })
        ));
    }

    #[test]
    fn variable_coefficients_converge() {
        // u = sin(pi x) + 1 solves -a u'' + b u' + c u = g with
        // a = 1 + x, b = -x, c = 1 and g assembled from u.
        let u = |x: f64| (std::f64::consts::PI * x).sin() + 1.0;
        let pi = std::f64::consts::PI;
        let g = move |x: f64| {
            let up = pi * (pi * x).cos();
            let upp = -pi * pi * (pi * x).sin();
            -(1.0 + x) * upp - x * up + u(x)
        };
        let coeffs = EllipticCoeffs1D {
            lo: 0.0,
            hi: 1.0,
            a: scalar_fn(|x| 1.0 + x),
            b: scalar_fn(|x| -x),
            c: constant(1.0),
            g: scalar_fn(g),
            h0: 1.0,
            h1: 1.0,
        };
        let err = |n: usize| {
            let d = solve_elliptic_1d(&coeffs, n).unwrap();
            d.nodes()
                .unwrap()
                .iter()
                .zip(d.raw_values())
                .map(|(x, v)| (v - u(*x)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(51), err(101));
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "order {order}");
    }
}
