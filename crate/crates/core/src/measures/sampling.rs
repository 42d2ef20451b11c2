use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;

use super::density::TabulatedDensity;
use super::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, StreamRng};

/// An ordered point cloud of `N` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    dim: usize,
    measure_id: String,
    seed: u64,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, dim: usize, measure_id: impl Into<String>, seed: u64) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "sample set needs N >= 1 points of dimension {dim}, got {} coordinates",
                points.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample coordinates".into()));
        }
        Ok(Self {
            points,
            dim,
            measure_id: measure_id.into(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn measure_id(&self) -> &str {
        &self.measure_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut pts = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("index {i} out of range")));
            }
            pts.extend_from_slice(self.point(i));
        }
        Self::new(pts, self.dim, self.measure_id.clone(), self.seed)
    }

    pub fn with_measure_id(mut self, id: impl Into<String>) -> Self {
        self.measure_id = id.into();
        self
    }

    /// Every point must lie in the closed domain.
    pub fn check_domain(&self, domain: &DomainSpec) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(Error::SizeMismatch { left: self.dim, right: domain.dim() });
        }
        for p in self.iter() {
            if !domain.contains(p) {
                return Err(Error::DomainViolation {
                    value: p[0],
                    domain: domain.describe(),
                });
            }
        }
        Ok(())
    }

    /// `# measure_id=..,seed=..,N=..`, a header `x1[,x2,...]`, one point per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# measure_id={},seed={},N={}", self.measure_id, self.seed, self.len())?;
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut measure_id = String::new();
        let mut seed = 0;
        let mut dim = 0;
        let mut points = Vec::new();
        let mut declared_n = None;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                // measure ids may contain commas, so peel `N` and `seed` off the right
                let meta = meta.trim();
                if let Some(rest) = meta.strip_prefix("measure_id=") {
                    let mut parts = rest.rsplitn(3, ',');
                    let n_part = parts.next().unwrap_or_default();
                    let seed_part = parts.next().unwrap_or_default();
                    measure_id = parts.next().unwrap_or_default().to_string();
                    let n_val = n_part
                        .strip_prefix("N=")
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("bad sample header `{line}`")))?;
                    seed = seed_part
                        .strip_prefix("seed=")
                        .and_then(|v| v.parse::<u64>().ok())
                        .ok_or_else(|| Error::Parse(format!("bad sample header `{line}`")))?;
                    declared_n = Some(n_val);
                }
                continue;
            }
            if dim == 0 {
                dim = line.split(',').count();
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Parse(format!("{e} in `{line}`")))?;
            if row.len() != dim {
                return Err(Error::Parse(format!("expected {dim} columns in `{line}`")));
            }
            points.extend(row);
        }
        let set = Self::new(points, dim.max(1), measure_id, seed)?;
        if let Some(n) = declared_n {
            if n != set.len() {
                return Err(Error::SizeMismatch { left: n, right: set.len() });
            }
        }
        Ok(set)
    }
}

/// Piecewise-linear inverse-transform sampling from a tabulated 1D cdf.
pub fn sample_inverse_cdf(density: &TabulatedDensity, n: usize, seed: u64) -> Result<SampleSet> {
    if density.cdf().is_none() {
        return Err(Error::invalid("inverse-cdf sampling needs a 1D tabulation"));
    }
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let pts = draw_inverse_cdf(density, n, &mut rng);
    SampleSet::new(pts, 1, format!("tabulated:{}", density.domain().describe()), seed)
}

fn draw_inverse_cdf(density: &TabulatedDensity, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n)
        .map(|_| density.quantile(rng.random::<f64>()).expect("line grid"))
        .collect()
}

fn uniform_disk_point(rng: &mut StreamRng) -> [f64; 2] {
    let r = rng.random::<f64>().sqrt();
    let t = 2.0 * PI * rng.random::<f64>();
    [r * t.cos(), r * t.sin()]
}

/// Rejection sampling with the uniform-disk proposal. A proposal `x` is
/// accepted with probability `density(x) / envelope`, so the expected
/// acceptance rate is `1 / (pi * envelope)`.
pub fn sample_rejection_disk(density: &TabulatedDensity, envelope: f64, n: usize, seed: u64) -> Result<SampleSet> {
    rejection_disk_with_stats(density, envelope, n, seed).map(|(s, _)| s)
}

/// Like [`sample_rejection_disk`], also returning the number of proposals.
pub fn rejection_disk_with_stats(
    density: &TabulatedDensity,
    envelope: f64,
    n: usize,
    seed: u64,
) -> Result<(SampleSet, usize)> {
    if *density.domain() != DomainSpec::UnitDisk {
        return Err(Error::invalid("rejection sampler needs a disk density"));
    }
    if !(envelope > 0.0 && envelope.is_finite()) || n == 0 {
        return Err(Error::invalid("need a positive envelope and N >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let (pts, proposals) = draw_rejection(density, envelope, n, &mut rng)?;
    Ok((SampleSet::new(pts, 2, "rejection:unit_disk", seed)?, proposals))
}

fn draw_rejection(
    density: &TabulatedDensity,
    envelope: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, usize)> {
    let mut pts = Vec::with_capacity(2 * n);
    let mut proposals = 0;
    while pts.len() < 2 * n {
        let p = uniform_disk_point(rng);
        proposals += 1;
        let f = density.eval(&p);
        if f > envelope * (1.0 + 1e-12) {
            return Err(Error::EnvelopeViolated { value: f, envelope });
        }
        if rng.random::<f64>() * envelope < f {
            pts.extend_from_slice(&p);
        }
    }
    Ok((pts, proposals))
}

/// A probability law that can be sampled with a seed.
#[derive(Debug, Clone)]
pub enum Law {
    UniformInterval { lo: f64, hi: f64 },
    UniformDisk,
    InverseCdf(Arc<TabulatedDensity>),
    RejectionDisk { density: Arc<TabulatedDensity>, envelope: f64 },
    PointMass(Vec<f64>),
}

impl Law {
    pub fn dim(&self) -> usize {
        match self {
            Law::UniformInterval { .. } | Law::InverseCdf(_) => 1,
            Law::UniformDisk | Law::RejectionDisk { .. } => 2,
            Law::PointMass(p) => p.len(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Law::UniformInterval { lo, hi } => format!("uniform[{lo},{hi}]"),
            Law::UniformDisk => "uniform_disk".into(),
            Law::InverseCdf(d) => format!("tabulated:{}", d.domain().describe()),
            Law::RejectionDisk { .. } => "rejection:unit_disk".into(),
            Law::PointMass(p) => format!("point_mass({p:?})"),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let pts = match self {
            Law::UniformInterval { lo, hi } => (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect(),
            Law::UniformDisk => (0..n).flat_map(|_| uniform_disk_point(&mut rng)).collect(),
            Law::InverseCdf(d) => draw_inverse_cdf(d, n, &mut rng),
            Law::RejectionDisk { density, envelope } => draw_rejection(density, *envelope, n, &mut rng)?.0,
            Law::PointMass(p) => p.iter().copied().cycle().take(n * p.len()).collect(),
        };
        SampleSet::new(pts, self.dim(), self.id(), seed)
    }

    /// Quantile function of a 1D law.
    pub fn quantile(&self, u: f64) -> Option<f64> {
        match self {
            Law::UniformInterval { lo, hi } => Some(lo + (hi - lo) * u.clamp(0.0, 1.0)),
            Law::InverseCdf(d) => d.quantile(u),
            Law::PointMass(p) if p.len() == 1 => Some(p[0]),
            _ => None,
        }
    }
}
