use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::map::PushforwardMap;
use crate::measures::{DomainSpec, SampleSet};
use crate::rng::rng_from_seed;
use crate::transport::{assignment_exact, CostMatrix};

/// Pairs are restricted to separations below this fraction of the diameter.
pub const R_MAX_FRACTION: f64 = 0.2;
/// Decades of separation covered by sampled pairs.
const DECADES: f64 = 6.0;

pub enum HolderSource<'a> {
    /// A map evaluated at freshly sampled pairs of the domain.
    Map { map: &'a dyn PushforwardMap, domain: DomainSpec },
    /// A discrete map `points[i] -> images[i]`.
    Discrete { points: &'a SampleSet, images: &'a SampleSet },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    /// Fitted exponent clamped to `(0, 1]`.
    pub beta: f64,
    /// Largest `|T(x) - T(x')| / |x - x'|^beta` over the pairs.
    pub constant: f64,
    pub pairs: usize,
    /// Unclamped regression slope and its standard error.
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub r_max: f64,
}

impl HolderEstimate {
    /// Lower end of an approximate 95% interval for the slope.
    pub fn beta_lower(&self) -> f64 {
        self.slope - 1.96 * self.slope_se
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn random_point<R: Rng>(domain: &DomainSpec, rng: &mut R) -> Vec<f64> {
    match domain {
        DomainSpec::UnitDisk => {
            let r = rng.random::<f64>().sqrt();
            let t = 2.0 * PI * rng.random::<f64>();
            vec![r * t.cos(), r * t.sin()]
        }
        other => {
            let (lo, hi) = other.bounds_1d().expect("one-dimensional domain");
            vec![lo + (hi - lo) * rng.random::<f64>()]
        }
    }
}

fn random_direction<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    if d == 1 {
        vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
    } else {
        let t = 2.0 * PI * rng.random::<f64>();
        vec![t.cos(), t.sin()]
    }
}

/// Regresses `log |T(x) - T(x')|` on `log |x - x'|` over sampled pairs with
/// `0 < |x - x'| <= 0.2 diam`.
pub fn holder_probe(source: &HolderSource<'_>, pairs: usize, seed: u64) -> Result<HolderEstimate> {
    if pairs < 3 {
        return Err(Error::invalid("need at least 3 pairs"));
    }
    let mut rng = rng_from_seed(seed);
    let mut logs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(pairs);
    let r_max;
    let budget = 200 * pairs;
    let mut tries = 0;
    match source {
        HolderSource::Map { map, domain } => {
            r_max = R_MAX_FRACTION * domain.diameter();
            let mut tx = vec![0.0; map.dim_out()];
            let mut ty = vec![0.0; map.dim_out()];
            while logs.len() < pairs && tries < budget {
                tries += 1;
                let x = random_point(domain, &mut rng);
                let r = r_max * 10f64.powf(-DECADES * rng.random::<f64>());
                let u = random_direction(x.len(), &mut rng);
                let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + r * b).collect();
                if !domain.contains(&y) {
                    continue;
                }
                let dx = dist(&x, &y);
                if dx == 0.0 {
                    continue;
                }
                map.apply(&x, &mut tx);
                map.apply(&y, &mut ty);
                let dt = dist(&tx, &ty);
                if dt > 0.0 {
                    logs.push((dx.ln(), dt.ln(), dx, dt));
                }
            }
        }
        HolderSource::Discrete { points, images } => {
            if points.len() != images.len() {
                return Err(Error::SizeMismatch { left: points.len(), right: images.len() });
            }
            let n = points.len();
            let (lo, hi) = bounding_diameter(points);
            r_max = R_MAX_FRACTION * (hi - lo).max(0.0);
            while logs.len() < pairs && tries < budget && n > 1 {
                tries += 1;
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j {
                    continue;
                }
                let dx = dist(points.point(i), points.point(j));
                if dx == 0.0 || dx > r_max {
                    continue;
                }
                let dt = dist(images.point(i), images.point(j));
                if dt > 0.0 {
                    logs.push((dx.ln(), dt.ln(), dx, dt));
                }
            }
        }
    }
    if logs.len() < 3 {
        return Err(Error::CoincidentPairs);
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::CoincidentPairs);
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_se = (rss / (k - 2.0) / sxx).sqrt();
    let beta = slope.clamp(1e-6, 1.0);
    let constant = logs.iter().map(|p| p.3 / p.2.powf(beta)).fold(0.0f64, f64::max);
    Ok(HolderEstimate {
        beta,
        constant,
        pairs: logs.len(),
        slope,
        slope_se,
        intercept,
        r_max,
    })
}

/// Diameter proxy: `(0, max pairwise distance)` estimated from the bounding box.
fn bounding_diameter(points: &SampleSet) -> (f64, f64) {
    let d = points.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points.iter() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (0.0, dist(&lo, &hi))
}

/// `n` near-uniform points in the unit disk on a sunflower spiral.
pub fn sunflower_disk(n: usize) -> Result<SampleSet> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let pts = (0..n)
        .flat_map(|k| {
            let r = ((k as f64 + 0.5) / n as f64).sqrt();
            let t = golden * k as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    SampleSet::new(pts, 2, "sunflower_disk", 0)
}

/// Images of the discrete optimal map from `points` onto `targets`.
pub fn discrete_ot_images(points: &SampleSet, targets: &SampleSet) -> Result<SampleSet> {
    let cost = CostMatrix::squared_euclidean(points, targets)?;
    let a = assignment_exact(&cost)?;
    targets.select(&a.sigma)
}
