use super::density::TabulatedDensity;
use super::domain::DomainSpec;
use super::elliptic::{clamp_nonnegative, EllipticCoeffs1D};
use super::tridiag::{solve_tridiagonal, Tridiagonal};
use super::{uniform_grid, ScalarFn};
use crate::error::{Error, Result};

/// Corner compatibility tolerance between the initial profile and the
/// boundary data.
const COMPAT_TOL: f64 = 1e-8;

/// `u_t + L u = g` on `(lo, hi) x (0, t_end]` with the Dirichlet data of
/// `elliptic` held constant in time and `u(., 0) = rho_init`.
#[derive(Clone)]
pub struct ParabolicCoeffs1D {
    pub elliptic: EllipticCoeffs1D,
    pub rho_init: ScalarFn,
    pub t_end: f64,
    pub time_steps: usize,
}

impl std::fmt::Debug for ParabolicCoeffs1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParabolicCoeffs1D")
            .field("elliptic", &self.elliptic)
            .field("t_end", &self.t_end)
            .field("time_steps", &self.time_steps)
            .finish_non_exhaustive()
    }
}

impl ParabolicCoeffs1D {
    fn check(&self, nodes: &[f64]) -> Result<()> {
        let e = &self.elliptic;
        DomainSpec::interval(e.lo, e.hi)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!("terminal time must be positive, got {}", self.t_end)));
        }
        if self.time_steps == 0 {
            return Err(Error::invalid("need at least one time step"));
        }
        if !(e.h0 >= 0.0 && e.h1 >= 0.0) {
            return Err(Error::invalid("boundary values must be nonnegative"));
        }
        e.check_coefficients(nodes)?;
        for &x in nodes {
            let r = (self.rho_init)(x);
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid(format!("initial value rho({x}) = {r} must be nonnegative")));
            }
        }
        let (r0, r1) = ((self.rho_init)(e.lo), (self.rho_init)(e.hi));
        if (r0 - e.h0).abs() > COMPAT_TOL || (r1 - e.h1).abs() > COMPAT_TOL {
            return Err(Error::invalid(format!(
                "incompatible corner data: rho(lo) = {r0} vs h0 = {}, rho(hi) = {r1} vs h1 = {}",
                e.h0, e.h1
            )));
        }
        Ok(())
    }
}

/// Crank-Nicolson march to `t_end`; returns the normalized terminal profile.
pub fn solve_parabolic_1d(coeffs: &ParabolicCoeffs1D, n_grid: usize) -> Result<TabulatedDensity> {
    if n_grid < 3 {
        return Err(Error::invalid(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let e = &coeffs.elliptic;
    let nodes = uniform_grid(e.lo, e.hi, n_grid);
    coeffs.check(&nodes)?;
    let h = (e.hi - e.lo) / (n_grid - 1) as f64;
    let dt = coeffs.t_end / coeffs.time_steps as f64;

    let m = n_grid - 2;
    let mut implicit = Tridiagonal::zeros(m);
    let mut explicit = Tridiagonal::zeros(m);
    let mut forcing = vec![0.0; m];
    for k in 0..m {
        let x = nodes[k + 1];
        let (l, d, u) = e.stencil(x, h);
        implicit.lower[k] = 0.5 * dt * l;
        implicit.diag[k] = 1.0 + 0.5 * dt * d;
        implicit.upper[k] = 0.5 * dt * u;
        explicit.lower[k] = -0.5 * dt * l;
        explicit.diag[k] = 1.0 - 0.5 * dt * d;
        explicit.upper[k] = -0.5 * dt * u;
        // boundary contributions from both time levels
        forcing[k] = dt * (e.g)(x);
        if k == 0 {
            forcing[k] -= dt * l * e.h0;
        }
        if k + 1 == m {
            forcing[k] -= dt * u * e.h1;
        }
    }

    let mut state: Vec<f64> = nodes[1..n_grid - 1].iter().map(|&x| (coeffs.rho_init)(x)).collect();
    for _ in 0..coeffs.time_steps {
        let mut rhs = explicit.apply(&state);
        for (r, f) in rhs.iter_mut().zip(&forcing) {
            *r += f;
        }
        state = solve_tridiagonal(&implicit, &rhs)?;
    }

    let mut u = Vec::with_capacity(n_grid);
    u.push(e.h0);
    u.extend(state);
    u.push(e.h1);
    clamp_nonnegative(&mut u)?;
    let mass = super::trapezoid(&nodes, &u);
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    TabulatedDensity::from_line(DomainSpec::interval(e.lo, e.hi)?, nodes, u)
}
