use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::Example;
use crate::neural::init_net;
use crate::rng::SeedStream;
use crate::trainer::{train, validate, TrainConfig, TrainHistory};
use crate::transport::{W2Method, W2Options};

/// Ordinary least-squares fit of `log10(mean W2)` on `log10(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub ns: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub repeats: usize,
}

/// Fits `log10(mean) = slope log10(N) + intercept`.
pub fn fit_loglog(ns: &[usize], means: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    if ns.len() != means.len() {
        return Err(Error::SizeMismatch { left: ns.len(), right: means.len() });
    }
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("need at least two strictly increasing sample sizes"));
    }
    if means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite means"));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).log10()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.log10()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(&y).map(|(a, b)| b - (slope * a + intercept)).collect();
    Ok((slope, intercept, residuals))
}

/// `count` sizes log-spaced on `[lo, hi]`, rounded, with duplicates removed.
pub fn log_spaced(lo: usize, hi: usize, count: usize) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || count == 0 {
        return Err(Error::invalid(format!("bad log-spaced range [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let mut out: Vec<usize> = (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub example: Example,
    pub ns: Vec<usize>,
    pub repeats: usize,
    pub layers: Vec<usize>,
    pub train: TrainConfig,
    pub val_size: usize,
    pub method: W2Method,
    pub opts: W2Options,
    pub seed: u64,
    pub workers: usize,
}

/// Outcome of one (N, repeat) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub n: usize,
    pub repeat: usize,
    /// `None` when training diverged.
    pub val_w2: Option<f64>,
    pub history: Option<TrainHistory>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub runs: Vec<RunRecord>,
    pub fit: RateFit,
    pub diverged: usize,
}

/// Seed stream of one (N, repeat) run.
pub fn run_stream(master: u64, n: usize, repeat: usize) -> SeedStream {
    SeedStream::new(master).child("sweep").child(&format!("N={n}")).index(repeat as u64)
}

/// For each N and repeat: fresh samples, fresh network, train, validate.
/// Runs execute on a pool of `workers` threads; results do not depend on
/// the pool size.
pub fn rate_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.ns.len() < 3 || spec.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rate sweep needs at least 3 strictly increasing sample sizes"));
    }
    if spec.repeats == 0 || spec.workers == 0 {
        return Err(Error::invalid("repeats and workers must be positive"));
    }
    let ex = spec.example;
    let root = SeedStream::new(spec.seed).child("validation");
    let val_xs = ex.sample_source(spec.val_size, root.child("source").seed())?;
    let val_ys = ex.sample_target(spec.val_size, root.child("target").seed())?;

    let jobs: Vec<(usize, usize)> = spec.ns.iter().flat_map(|&n| (0..spec.repeats).map(move |r| (n, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, repeat)| -> Result<RunRecord> {
                let s = run_stream(spec.seed, n, repeat);
                let xs = ex.sample_source(n, s.child("source").seed())?;
                let ys = ex.sample_target(n, s.child("target").seed())?;
                let net = init_net(&spec.layers, s.child("init").seed())?;
                let cfg = TrainConfig {
                    seed: s.child("train").seed(),
                    ..spec.train.clone()
                };
                match train(&xs, &ys, net, &cfg) {
                    Ok((net, history)) => {
                        let v = validate(&net, &val_xs, &val_ys, spec.method, spec.opts)?;
                        Ok(RunRecord {
                            n,
                            repeat,
                            val_w2: Some(v.value),
                            history: Some(history),
                            failure: None,
                        })
                    }
                    Err(e @ Error::Diverged { .. }) => Ok(RunRecord {
                        n,
                        repeat,
                        val_w2: None,
                        history: None,
                        failure: Some(e.to_string()),
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let diverged = runs.iter().filter(|r| r.val_w2.is_none()).count();
    let mut ns = Vec::new();
    let mut means = Vec::new();
    let mut std_errs = Vec::new();
    for &n in &spec.ns {
        let vals: Vec<f64> = runs.iter().filter(|r| r.n == n).filter_map(|r| r.val_w2).collect();
        if vals.is_empty() {
            continue;
        }
        let est = super::stat::MeanEstimate::from_values(&vals, false);
        ns.push(n);
        means.push(est.mean);
        std_errs.push(est.std_err);
    }
    let (slope, intercept, residuals) = fit_loglog(&ns, &means)?;
    Ok(SweepResult {
        runs,
        fit: RateFit {
            slope,
            intercept,
            ns,
            means,
            std_errs,
            residuals,
            repeats: spec.repeats,
        },
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let ns = [100, 300, 1000, 5000];
        let means: Vec<f64> = ns.iter().map(|&n| 0.7 * (n as f64).powf(-0.5)).collect();
        let (s, i, r) = fit_loglog(&ns, &means).unwrap();
        assert!((s + 0.5).abs() < 1e-12);
        assert!((i - 0.7f64.log10()).abs() < 1e-12);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn log_spacing() {
        assert_eq!(log_spaced(100, 10_000, 3).unwrap(), vec![100, 1000, 10_000]);
        let v = log_spaced(100, 3000, 6).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!((v[0], v[5]), (100, 3000));
        assert!(fit_loglog(&[10, 10], &[1.0, 1.0]).is_err());
    }
}
