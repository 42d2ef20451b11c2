use crate::error::{Error, Result};

/// Where a measure lives.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Closed unit disk in the plane.
    UnitDisk,
    /// Periodic cell `[0, length)^dim`, identified with the torus.
    PeriodicCell { length: f64, dim: usize },
}

const CONTAIN_TOL: f64 = 1e-12;

impl DomainSpec {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let d = DomainSpec::Interval { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn periodic_cell(length: f64, dim: usize) -> Result<Self> {
        let d = DomainSpec::PeriodicCell { length, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::invalid(format!("interval requires lo < hi, got [{lo}, {hi}]")));
                }
            }
            DomainSpec::UnitDisk => {}
            DomainSpec::PeriodicCell { length, dim } => {
                if !(length.is_finite() && length > 0.0) || dim == 0 {
                    return Err(Error::invalid(format!(
                        "periodic cell requires L > 0 and dim >= 1, got L = {length}, dim = {dim}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match *self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::UnitDisk => 2,
            DomainSpec::PeriodicCell { dim, .. } => dim,
        }
    }

    /// Closed-domain membership with a roundoff allowance of 1e-12.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match *self {
            DomainSpec::Interval { lo, hi } => p[0] >= lo - CONTAIN_TOL && p[0] <= hi + CONTAIN_TOL,
            DomainSpec::UnitDisk => p[0].hypot(p[1]) <= 1.0 + CONTAIN_TOL,
            DomainSpec::PeriodicCell { length, .. } => {
                p.iter().all(|&v| v >= -CONTAIN_TOL && v <= length + CONTAIN_TOL)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Interval { lo, hi } => hi - lo,
            DomainSpec::UnitDisk => 2.0,
            DomainSpec::PeriodicCell { length, dim } => length * (dim as f64).sqrt(),
        }
    }

    /// Bounds of the 1D extent (interval or periodic cell with dim 1).
    pub fn bounds_1d(&self) -> Option<(f64, f64)> {
        match *self {
            DomainSpec::Interval { lo, hi } => Some((lo, hi)),
            DomainSpec::PeriodicCell { length, dim: 1 } => Some((0.0, length)),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            DomainSpec::Interval { lo, hi } => format!("interval[{lo},{hi}]"),
            DomainSpec::UnitDisk => "unit_disk".to_string(),
            DomainSpec::PeriodicCell { length, dim } => format!("periodic_cell(L={length},d={dim})"),
        }
    }
}
