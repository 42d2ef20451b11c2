use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]`
/// are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.diag)
            .chain(&self.upper)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Thomas elimination without pivoting. Stable for diagonally dominant
/// matrices (by rows or by columns), which covers every operator assembled
/// in this crate. A pivot that falls below `1e-13` times the matrix scale is
/// reported as a singular system, with the ratio of extreme pivots as a
/// condition estimate.
pub fn solve_tridiagonal(a: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::SizeMismatch { left: n, right: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = a.scale();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularSystem { pivot: 0.0, condition: f64::INFINITY });
    }
    let floor = 1e-13 * scale;

    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut pivot_min = f64::INFINITY;
    let mut pivot_max = 0.0f64;

    let mut pivot = a.diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = a.diag[i] - a.lower[i] * c_prime[i - 1];
        }
        pivot_min = pivot_min.min(pivot.abs());
        pivot_max = pivot_max.max(pivot.abs());
        if pivot.abs() <= floor || !pivot.is_finite() {
            return Err(Error::SingularSystem {
                pivot,
                condition: pivot_max / pivot.abs().max(f64::MIN_POSITIVE),
            });
        }
        c_prime[i] = if i + 1 < n { a.upper[i] / pivot } else { 0.0 };
        let prev = if i > 0 { a.lower[i] * d_prime[i - 1] } else { 0.0 };
        d_prime[i] = (rhs[i] - prev) / pivot;
    }

    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem {
            pivot: pivot_min,
            condition: pivot_max / pivot_min,
        });
    }
    Ok(x)
}
