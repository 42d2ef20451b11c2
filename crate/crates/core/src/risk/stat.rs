use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{Grid, Law, TabulatedDensity};
use crate::rng::SeedStream;
use crate::transport::{w2_point_clouds, W2Method, W2Options};

/// Mean of a Monte Carlo quantity with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub repeats: usize,
    /// True when individual values are themselves approximations.
    pub approximate: bool,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64], approximate: bool) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n).sqrt(),
            repeats: values.len(),
            approximate,
        }
    }
}

/// Reference atoms per sample point.
const REFERENCE_FACTOR: usize = 10;

/// Exact W2 between the empirical measure of `sample` (1D) and the uniform
/// measure on `M = 10 N` quantile atoms `F^-1((j + 1/2)/M)`.
pub(crate) fn w2_to_quantile_atoms(law: &Law, sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = REFERENCE_FACTOR * n;
    let mut total = 0.0;
    for j in 0..m {
        let q = law
            .quantile((j as f64 + 0.5) / m as f64)
            .ok_or_else(|| Error::invalid(format!("law {} has no quantile function", law.id())))?;
        // each sample point carries exactly REFERENCE_FACTOR atoms
        total += (xs[j / REFERENCE_FACTOR] - q).powi(2);
    }
    Ok((total / m as f64).sqrt())
}

/// Monte Carlo estimate of `E W2(nu, nu_N)`.
///
/// One-dimensional laws with a quantile function are compared exactly
/// against `10 N` quantile atoms. Otherwise each repeat averages exact W2 on
/// subsamples of size `min(N, 1024)` against a fresh `10 N` reference cloud,
/// and the result is flagged approximate.
pub fn stat_term_mc(law: &Law, n: usize, repeats: usize, seed: u64) -> Result<MeanEstimate> {
    if repeats < 2 {
        return Err(Error::invalid(format!("need at least 2 repeats, got {repeats}")));
    }
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let stream = SeedStream::new(seed).child("stat_term");
    let exact_1d = law.dim() == 1 && law.quantile(0.5).is_some();
    let values: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let s = stream.index(r as u64);
            let sample = law.sample(n, s.child("sample").seed())?;
            if exact_1d {
                w2_to_quantile_atoms(law, sample.points())
            } else {
                let reference = law.sample(REFERENCE_FACTOR * n, s.child("reference").seed())?;
                let m = n.min(1024);
                let method = W2Method::SubsampleAvg {
                    k: 10,
                    m,
                    seed: s.child("subsample").seed(),
                };
                w2_point_clouds(&sample, &reference, method, W2Options::default()).map(|r| r.value)
            }
        })
        .collect::<Result<_>>()?;
    Ok(MeanEstimate::from_values(&values, !exact_1d))
}

/// `1 / sqrt(3 (N + 1))`, the bound on `E W2` for the uniform law on `[0, 1]`.
pub fn uniform_empirical_bound(n: usize) -> f64 {
    1.0 / (3.0 * (n as f64 + 1.0)).sqrt()
}

/// `sqrt(2 J2 / (N + 1))`, the one-dimensional bound on `E W2`.
pub fn j2_empirical_bound(j2: f64, n: usize) -> f64 {
    (2.0 * j2 / (n as f64 + 1.0)).sqrt()
}

/// `J2 = (20 - 9 ln 3) / 64` for the density `x + 1/2` on `[0, 1]`.
pub fn j2_closed_form_1d() -> f64 {
    (20.0 - 9.0 * 3f64.ln()) / 64.0
}

/// `Stat_N = L_H E W2(mu, mu_N) + 3 E W2(nu, nu_N)`.
pub fn stat_term(lipschitz: f64, ew_source: f64, ew_target: f64) -> f64 {
    lipschitz * ew_source + 3.0 * ew_target
}

/// `J2 = int F (1 - F) / f` by the trapezoid rule on the density's own grid.
///
/// Where `f` vanishes at an endpoint the integrand's limit is used, which is
/// 0 because `F (1 - F)` vanishes to higher order there. Vanishing in the
/// interior is an error.
pub fn j2_functional(density: &TabulatedDensity) -> Result<f64> {
    let Grid::Line { nodes, cdf } = density.grid() else {
        return Err(Error::invalid("J2 is defined for one-dimensional densities"));
    };
    let f = density.values();
    let last = nodes.len() - 1;
    let mut integrand = Vec::with_capacity(nodes.len());
    for (k, ((&x, &fk), &fx)) in nodes.iter().zip(f).zip(cdf).enumerate() {
        let tail = fx * (1.0 - fx);
        if fk > 0.0 {
            integrand.push(tail / fk);
        } else if k == 0 || k == last {
            integrand.push(0.0);
        } else {
            return Err(Error::VanishingDensity { x });
        }
    }
    Ok(crate::measures::trapezoid(nodes, &integrand))
}
