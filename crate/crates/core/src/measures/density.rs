use std::f64::consts::PI;
use std::io::Write;

use super::domain::DomainSpec;
use super::trapezoid;
use crate::error::{Error, Result};

/// Analytic expression attached to a tabulated density. When present it is
/// used for pointwise evaluation, so consumers such as the rejection sampler
/// see no interpolation bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// Constant density on the domain.
    Uniform { value: f64 },
    /// `slope * x + intercept` on an interval.
    Affine { slope: f64, intercept: f64 },
    /// `(2/pi) (1 - |x|^2)` on the unit disk.
    DiskParaboloid,
}

impl ClosedForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            ClosedForm::Uniform { value } => value,
            ClosedForm::Affine { slope, intercept } => slope * x[0] + intercept,
            ClosedForm::DiskParaboloid => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                (2.0 / PI) * (1.0 - r2).max(0.0)
            }
        }
    }
}

/// Tabulation grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Strictly increasing nodes with the cumulative distribution at each node.
    Line { nodes: Vec<f64>, cdf: Vec<f64> },
    /// Polar grid on the unit disk. Values are stored radius-major:
    /// `values[ir * angles.len() + it]`.
    Polar { radii: Vec<f64>, angles: Vec<f64> },
}

/// A normalized density on an interval, the unit disk, or a periodic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    domain: DomainSpec,
    grid: Grid,
    values: Vec<f64>,
    norm_constant: f64,
    closed_form: Option<ClosedForm>,
}

impl TabulatedDensity {
    /// Normalize nonnegative raw values on a 1D grid by their trapezoid mass
    /// and build the cumulative distribution.
    pub fn from_line(domain: DomainSpec, nodes: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        let (lo, hi) = domain
            .bounds_1d()
            .ok_or_else(|| Error::invalid("line tabulation needs a one-dimensional domain"))?;
        if nodes.len() < 2 || nodes.len() != raw.len() {
            return Err(Error::SizeMismatch { left: nodes.len(), right: raw.len() });
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid nodes must be strictly increasing"));
        }
        if nodes[0] < lo - 1e-12 || nodes[nodes.len() - 1] > hi + 1e-12 {
            return Err(Error::invalid("grid nodes leave the domain"));
        }
        if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("density value {v}")));
        }
        if let Some(v) = raw.iter().find(|v| **v < 0.0) {
            return Err(Error::invalid(format!("negative density value {v}")));
        }
        let mass = trapezoid(&nodes, &raw);
        if !(mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        let values: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        let mut cdf = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for (x, v) in nodes.windows(2).zip(values.windows(2)) {
            acc += 0.5 * (x[1] - x[0]) * (v[0] + v[1]);
            cdf.push(acc);
        }
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let last = cdf.len() - 1;
        cdf[last] = 1.0;
        Ok(Self {
            domain,
            grid: Grid::Line { nodes, cdf },
            values,
            norm_constant: mass,
            closed_form: None,
        })
    }

    /// Tabulate `f(r, theta)` on an `n_r x n_theta` polar grid of the unit
    /// disk and normalize by the polar trapezoid mass.
    pub fn from_polar<F>(n_r: usize, n_theta: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        if n_r < 2 || n_theta < 3 {
            return Err(Error::invalid("polar grid needs n_r >= 2 and n_theta >= 3"));
        }
        let radii = super::uniform_grid(0.0, 1.0, n_r);
        let angles: Vec<f64> = (0..n_theta)
            .map(|k| 2.0 * PI * k as f64 / n_theta as f64)
            .collect();
        let mut raw = Vec::with_capacity(n_r * n_theta);
        for &r in &radii {
            for &t in &angles {
                let v = f(r, t);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("invalid density value {v} at r={r}")));
                }
                raw.push(v);
            }
        }
        let mass = polar_mass(&radii, n_theta, &raw);
        if !(mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        Ok(Self {
            domain: DomainSpec::UnitDisk,
            grid: Grid::Polar { radii, angles },
            values: raw.iter().map(|v| v / mass).collect(),
            norm_constant: mass,
            closed_form: None,
        })
    }

    pub fn with_closed_form(mut self, cf: ClosedForm) -> Self {
        self.closed_form = Some(cf);
        self
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The integral of the unnormalized input that was divided out.
    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn nodes(&self) -> Option<&[f64]> {
        match &self.grid {
            Grid::Line { nodes, .. } => Some(nodes),
            Grid::Polar { .. } => None,
        }
    }

    pub fn cdf(&self) -> Option<&[f64]> {
        match &self.grid {
            Grid::Line { cdf, .. } => Some(cdf),
            Grid::Polar { .. } => None,
        }
    }

    /// Unnormalized values as produced by the solver.
    pub fn raw_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.norm_constant).collect()
    }

    /// Trapezoid mass of the stored values on their own grid.
    pub fn mass(&self) -> f64 {
        match &self.grid {
            Grid::Line { nodes, .. } => trapezoid(nodes, &self.values),
            Grid::Polar { radii, angles } => polar_mass(radii, angles.len(), &self.values),
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    /// Pointwise density. Uses the closed form when attached, otherwise
    /// linear (1D) or bilinear polar interpolation. Zero outside the domain.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        if let Some(cf) = self.closed_form {
            return cf.eval(x);
        }
        match &self.grid {
            Grid::Line { nodes, .. } => interp(nodes, &self.values, x[0]),
            Grid::Polar { radii, angles } => {
                let r = x[0].hypot(x[1]).min(1.0);
                let mut t = x[1].atan2(x[0]);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                let nt = angles.len();
                let dt = 2.0 * PI / nt as f64;
                let dr = 1.0 / (radii.len() - 1) as f64;
                let ir = ((r / dr).floor() as usize).min(radii.len() - 2);
                let fr = (r - radii[ir]) / dr;
                let it = ((t / dt).floor() as usize).min(nt - 1);
                let ft = (t - angles[it]) / dt;
                let it1 = (it + 1) % nt;
                let v = |i: usize, j: usize| self.values[i * nt + j];
                let lo = v(ir, it) * (1.0 - ft) + v(ir, it1) * ft;
                let hi = v(ir + 1, it) * (1.0 - ft) + v(ir + 1, it1) * ft;
                lo * (1.0 - fr) + hi * fr
            }
        }
    }

    /// Tabulated cumulative distribution at `x` (1D only), linearly
    /// interpolated between nodes.
    pub fn cdf_at(&self, x: f64) -> Option<f64> {
        match &self.grid {
            Grid::Line { nodes, cdf } => {
                if x <= nodes[0] {
                    Some(0.0)
                } else if x >= nodes[nodes.len() - 1] {
                    Some(1.0)
                } else {
                    Some(interp(nodes, cdf, x))
                }
            }
            Grid::Polar { .. } => None,
        }
    }

    /// Monotone piecewise-linear inverse of the tabulated cdf (1D only).
    pub fn quantile(&self, u: f64) -> Option<f64> {
        let Grid::Line { nodes, cdf } = &self.grid else {
            return None;
        };
        let last = nodes.len() - 1;
        if u <= 0.0 {
            // first node carrying mass
            let k = cdf.partition_point(|c| *c <= 0.0);
            return Some(nodes[k.saturating_sub(1)]);
        }
        if u >= 1.0 {
            return Some(nodes[last]);
        }
        let k1 = cdf.partition_point(|c| *c <= u).min(last);
        let k = k1 - 1;
        let t = (u - cdf[k]) / (cdf[k1] - cdf[k]);
        Some(nodes[k] + t * (nodes[k1] - nodes[k]))
    }

    /// CSV export: `x,value,cdf` for 1D grids, `x1,x2,value` for the disk.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.grid {
            Grid::Line { nodes, cdf } => {
                writeln!(w, "x,value,cdf")?;
                for ((x, v), c) in nodes.iter().zip(&self.values).zip(cdf) {
                    writeln!(w, "{x},{v},{c}")?;
                }
            }
            Grid::Polar { radii, angles } => {
                writeln!(w, "x1,x2,value")?;
                let nt = angles.len();
                for (i, r) in radii.iter().enumerate() {
                    for (j, t) in angles.iter().enumerate() {
                        let v = self.values[i * nt + j];
                        writeln!(w, "{},{},{}", r * t.cos(), r * t.sin(), v)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn polar_mass(radii: &[f64], n_theta: usize, values: &[f64]) -> f64 {
    let dt = 2.0 * PI / n_theta as f64;
    let ring: Vec<f64> = radii
        .iter()
        .enumerate()
        .map(|(i, r)| r * values[i * n_theta..(i + 1) * n_theta].iter().sum::<f64>() * dt)
        .collect();
    trapezoid(radii, &ring)
}

/// Linear interpolation on increasing nodes, clamped at the ends.
pub(crate) fn interp(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0];
    }
    if x >= nodes[n - 1] {
        return values[n - 1];
    }
    let k1 = nodes.partition_point(|v| *v <= x).min(n - 1);
    let k = k1 - 1;
    let t = (x - nodes[k]) / (nodes[k1] - nodes[k]);
    values[k] + t * (values[k1] - values[k])
}
