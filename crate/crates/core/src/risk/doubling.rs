use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{DomainSpec, TabulatedDensity};
use crate::rng::SeedStream;

/// Ellipsoids must stay this far inside the domain.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Largest axis ratio of sampled ellipses.
pub const MAX_CONDITION: f64 = 100.0;
/// Half-ellipsoid masses below this fraction of `area * max density` are
/// rejected as unresolved.
const RELATIVE_FLOOR: f64 = 1e-13;

/// `{center + matrix u : |u| <= 1}`, with `matrix` row-major `d x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub matrix: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingProbeResult {
    pub max_ratio: f64,
    pub trials: usize,
    pub worst: Ellipsoid,
    pub ratios: Vec<f64>,
}

/// Samples ellipsoids inside the domain and reports the largest ratio
/// `eta(E) / eta(E/2)` of density masses over concentric halvings.
pub fn doubling_probe(density: &TabulatedDensity, trials: usize, seed: u64) -> Result<DoublingProbeResult> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let stream = SeedStream::new(seed).child("doubling");
    let outcomes: Vec<(f64, Ellipsoid)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream.index(t as u64).rng();
            match density.domain() {
                DomainSpec::UnitDisk => disk_trial(density, &mut rng),
                other => {
                    let (lo, hi) = other
                        .bounds_1d()
                        .ok_or_else(|| Error::invalid("doubling probe supports intervals and the unit disk"))?;
                    interval_trial(density, lo, hi, &mut rng)
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut worst = 0;
    for (k, (r, _)) in outcomes.iter().enumerate() {
        if *r > outcomes[worst].0 {
            worst = k;
        }
    }
    Ok(DoublingProbeResult {
        max_ratio: outcomes[worst].0,
        trials,
        worst: outcomes[worst].1.clone(),
        ratios: outcomes.into_iter().map(|(r, _)| r).collect(),
    })
}

fn interval_trial<R: Rng>(density: &TabulatedDensity, lo: f64, hi: f64, rng: &mut R) -> Result<(f64, Ellipsoid)> {
    let cdf = |x: f64| density.cdf_at(x).expect("line grid");
    loop {
        let c = lo + (hi - lo) * rng.random::<f64>();
        let r_max = (c - lo).min(hi - c) - BOUNDARY_MARGIN;
        if r_max <= 0.0 {
            continue;
        }
        let r = r_max * (1.0 - rng.random::<f64>());
        let full = cdf(c + r) - cdf(c - r);
        let half = cdf(c + 0.5 * r) - cdf(c - 0.5 * r);
        if !(half > RELATIVE_FLOOR * r * density.max_value()) {
            return Err(Error::QuadratureFloor { mass: half });
        }
        return Ok((
            full / half,
            Ellipsoid {
                center: vec![c],
                matrix: vec![r],
            },
        ));
    }
}

/// Largest `|c + A u(theta)|^2` over the boundary of the ellipse.
fn max_radius_sq(c: [f64; 2], a: &[f64; 4]) -> f64 {
    let g = |t: f64| {
        let (s, co) = t.sin_cos();
        let x = c[0] + a[0] * co + a[1] * s;
        let y = c[1] + a[2] * co + a[3] * s;
        x * x + y * y
    };
    const SAMPLES: usize = 256;
    let step = 2.0 * PI / SAMPLES as f64;
    let (mut best_t, mut best) = (0.0, g(0.0));
    for k in 1..SAMPLES {
        let t = k as f64 * step;
        let v = g(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement around the best sample
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        }
    }
    best.max(f1).max(f2)
}

fn disk_trial<R: Rng>(density: &TabulatedDensity, rng: &mut R) -> Result<(f64, Ellipsoid)> {
    let limit = (1.0 - BOUNDARY_MARGIN).powi(2);
    let c = loop {
        let p = [2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0];
        if p[0] * p[0] + p[1] * p[1] < limit {
            break p;
        }
    };
    let kappa = MAX_CONDITION.powf(rng.random::<f64>());
    let phi = 2.0 * PI * rng.random::<f64>();
    let (sp, cp) = phi.sin_cos();
    // A = R(phi) diag(1, 1/kappa)
    let shape = [cp, -sp / kappa, sp, cp / kappa];
    let scaled = |s: f64| [s * shape[0], s * shape[1], s * shape[2], s * shape[3]];
    let fits = |s: f64| max_radius_sq(c, &scaled(s)) <= limit;
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = lo * (1.0 - rng.random::<f64>());
    let a = scaled(s);
    debug_assert!(fits(s));
    let half = [0.5 * a[0], 0.5 * a[1], 0.5 * a[2], 0.5 * a[3]];
    let m_full = ellipse_mass(density, c, &a);
    let m_half = ellipse_mass(density, c, &half);
    let area = PI * (half[0] * half[3] - half[1] * half[2]).abs();
    if !(m_half > RELATIVE_FLOOR * area * density.max_value()) {
        return Err(Error::QuadratureFloor { mass: m_half });
    }
    Ok((
        m_full / m_half,
        Ellipsoid {
            center: c.to_vec(),
            matrix: a.to_vec(),
        },
    ))
}

/// Density mass of `{c + A u : |u| <= 1}` in polar coordinates of `u`:
/// Gauss-Legendre in the radius, trapezoid in the angle, doubled until two
/// successive levels agree to 1e-10 relative.
fn ellipse_mass(density: &TabulatedDensity, c: [f64; 2], a: &[f64; 4]) -> f64 {
    let det = (a[0] * a[3] - a[1] * a[2]).abs();
    let level = |n_r: usize, n_t: usize| {
        let (nodes, weights) = gauss_legendre(n_r);
        let mut total = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let rho = 0.5 * (x + 1.0);
            let mut ring = 0.0;
            for k in 0..n_t {
                let (s, co) = (2.0 * PI * k as f64 / n_t as f64).sin_cos();
                let p = [c[0] + rho * (a[0] * co + a[1] * s), c[1] + rho * (a[2] * co + a[3] * s)];
                ring += density.eval(&p);
            }
            total += 0.5 * w * rho * ring * 2.0 * PI / n_t as f64;
        }
        det * total
    };
    let (mut n_r, mut n_t) = (8, 32);
    let mut prev = level(n_r, n_t);
    while n_r < 256 {
        n_r *= 2;
        n_t *= 2;
        let next = level(n_r, n_t);
        if (next - prev).abs() <= 1e-10 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
