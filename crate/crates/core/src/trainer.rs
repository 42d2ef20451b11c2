//! Alternating assignment refresh and Adam descent on the assignment-fixed
//! quadratic loss, with early stopping on the training loss.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::map::PushforwardMap;
use crate::measures::SampleSet;
use crate::neural::{adam_step, OptimState, TransportNet};
use crate::rng::{SeedStream, StreamRng};
use crate::transport::{assignment_exact, w2_1d, w2_point_clouds, CostMatrix, W2Method, W2Options, W2Result};

/// Where the coupling used by the loss is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentScope {
    /// Solve on each freshly drawn mini-batch. Between refreshes the same
    /// batch and coupling are reused.
    Batch,
    /// Solve on all `N` pairs; mini-batches are drawn from the global coupling.
    Global,
}

impl AssignmentScope {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssignmentScope::Batch => "batch",
            AssignmentScope::Global => "global",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "batch" => Some(AssignmentScope::Batch),
            "global" => Some(AssignmentScope::Global),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// `None` means `floor(N/2)` (at least 1).
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub step_size: u64,
    pub gamma: f64,
    pub patience: usize,
    pub assignment_refresh_every: usize,
    pub scope: AssignmentScope,
    pub divergence_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            batch_size: None,
            lr: 1e-2,
            step_size: 500,
            gamma: 0.9,
            patience: 5000,
            assignment_refresh_every: 1,
            scope: AssignmentScope::Batch,
            divergence_threshold: 1e6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn batch_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or((n / 2).max(1))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let b = self.batch_for(n);
        if b == 0 || b > n {
            return Err(Error::BatchOutOfRange { batch: b, n });
        }
        if self.max_iters == 0 || self.patience == 0 || self.patience > self.max_iters {
            return Err(Error::invalid(format!(
                "need 1 <= patience <= max_iters, got patience = {}, max_iters = {}",
                self.patience, self.max_iters
            )));
        }
        if self.assignment_refresh_every == 0 {
            return Err(Error::invalid("assignment_refresh_every must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || self.step_size == 0 || !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("need lr > 0, step_size >= 1 and gamma in (0, 1]"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::invalid("divergence threshold must be positive"));
        }
        Ok(())
    }

    /// `(key, value)` pairs for manifests.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("max_iters", self.max_iters.to_string()),
            ("batch_size", self.batch_size.map_or("half".into(), |b| b.to_string())),
            ("lr", format!("{:e}", self.lr)),
            ("step_size", self.step_size.to_string()),
            ("gamma", self.gamma.to_string()),
            ("patience", self.patience.to_string()),
            ("assignment_refresh_every", self.assignment_refresh_every.to_string()),
            ("scope", self.scope.as_str().into()),
            ("divergence_threshold", format!("{:e}", self.divergence_threshold)),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub assignment: Duration,
    pub gradient: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Batch loss at the parameters before each step.
    pub losses: Vec<f64>,
    pub lrs: Vec<f64>,
    /// Iterations where a new best loss was recorded.
    pub is_best: Vec<bool>,
    pub best_loss: f64,
    pub best_iter: usize,
    /// Source indices and matched target indices of the best batch.
    pub best_batch: (Vec<usize>, Vec<usize>),
    pub stopped_early: bool,
    pub timings: PhaseTimings,
}

impl TrainHistory {
    pub fn iterations(&self) -> usize {
        self.losses.len()
    }

    /// Writes `iter,loss,lr,is_best`. Wall-clock timings are left out so
    /// reruns produce identical files.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "iter,loss,lr,is_best")?;
        for (i, ((l, r), b)) in self.losses.iter().zip(&self.lrs).zip(&self.is_best).enumerate() {
            writeln!(w, "{i},{l:e},{r:e},{}", u8::from(*b))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws batches without replacement, reshuffling once an epoch runs out.
struct EpochSampler {
    order: Vec<usize>,
    pos: usize,
}

impl EpochSampler {
    fn new(n: usize, rng: &mut StreamRng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, pos: 0 }
    }

    fn next(&mut self, b: usize, rng: &mut StreamRng) -> Vec<usize> {
        if self.pos + b > self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let out = self.order[self.pos..self.pos + b].to_vec();
        self.pos += b;
        out
    }
}

fn rows(points: &SampleSet, idx: &[usize]) -> Array2<f64> {
    let d = points.dim();
    let mut out = Array2::zeros((idx.len(), d));
    for (mut row, &i) in out.rows_mut().into_iter().zip(idx) {
        row.as_slice_mut().expect("contiguous row").copy_from_slice(points.point(i));
    }
    out
}

/// Optimal coupling between the rows of `out` and `targets[pool]`: returns
/// the pool entry matched to each row. Sorting is exact for squared cost in
/// one dimension.
fn couple(out: ArrayView2<f64>, targets: &SampleSet, pool: &[usize]) -> Result<Vec<usize>> {
    let d = targets.dim();
    if d == 1 {
        let mut by_out: Vec<usize> = (0..pool.len()).collect();
        by_out.sort_by(|&a, &b| out[[a, 0]].total_cmp(&out[[b, 0]]).then(a.cmp(&b)));
        let mut by_tgt = pool.to_vec();
        by_tgt.sort_by(|&a, &b| targets.point(a)[0].total_cmp(&targets.point(b)[0]).then(a.cmp(&b)));
        let mut matched = vec![0; pool.len()];
        for (&r, &t) in by_out.iter().zip(&by_tgt) {
            matched[r] = t;
        }
        return Ok(matched);
    }
    let ys: Vec<f64> = pool.iter().flat_map(|&j| targets.point(j).iter().copied()).collect();
    let xs = out.as_standard_layout();
    let cost = CostMatrix::squared_euclidean_raw(xs.as_slice().expect("standard layout"), &ys, d);
    let a = assignment_exact(&cost)?;
    Ok(a.sigma.iter().map(|&k| pool[k]).collect())
}

/// Assignment-fixed quadratic loss of `net` on the given matched batch.
pub fn batch_loss(net: &TransportNet, xs: &SampleSet, ys: &SampleSet, src: &[usize], tgt: &[usize]) -> Result<f64> {
    if src.len() != tgt.len() {
        return Err(Error::SizeMismatch { left: src.len(), right: tgt.len() });
    }
    let x = rows(xs, src);
    let y = rows(ys, tgt);
    let cache = net.forward_cached(x.view());
    Ok(net.backward(&cache, y.view())?.0)
}

/// Trains `net` to push `xs` onto `ys`. Returns the iterate with the
/// smallest training loss.
pub fn train(xs: &SampleSet, ys: &SampleSet, net: TransportNet, cfg: &TrainConfig) -> Result<(TransportNet, TrainHistory)> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::SizeMismatch { left: n, right: ys.len() });
    }
    if xs.dim() != net.d_in() || ys.dim() != net.d_out() {
        return Err(Error::SizeMismatch { left: net.d_in(), right: xs.dim() });
    }
    cfg.validate(n)?;
    let b = cfg.batch_for(n);
    let started = Instant::now();
    let mut timings = PhaseTimings::default();

    let stream = SeedStream::new(cfg.seed).child("train");
    let mut rng = stream.rng();
    let mut src_sampler = EpochSampler::new(n, &mut rng);
    let mut tgt_sampler = EpochSampler::new(n, &mut rng);
    let mut net = net;
    let mut opt = OptimState::new(&net, cfg.lr, cfg.step_size, cfg.gamma)?;

    let all: Vec<usize> = (0..n).collect();
    let mut global: Vec<usize> = Vec::new();
    let mut src: Vec<usize> = Vec::new();
    let mut tgt: Vec<usize> = Vec::new();
    let mut y_batch = Array2::zeros((0, ys.dim()));

    let mut history = TrainHistory {
        losses: Vec::new(),
        lrs: Vec::new(),
        is_best: Vec::new(),
        best_loss: f64::INFINITY,
        best_iter: 0,
        best_batch: (Vec::new(), Vec::new()),
        stopped_early: false,
        timings,
    };
    let mut best_net = net.clone();
    let mut since_best = 0usize;

    for t in 0..cfg.max_iters {
        let refresh = t % cfg.assignment_refresh_every == 0;
        let x_batch;
        let cache;
        match cfg.scope {
            AssignmentScope::Batch => {
                if refresh {
                    src = src_sampler.next(b, &mut rng);
                    let pool = tgt_sampler.next(b, &mut rng);
                    x_batch = rows(xs, &src);
                    cache = net.forward_cached(x_batch.view());
                    let clock = Instant::now();
                    tgt = couple(cache.output().view(), ys, &pool)?;
                    timings.assignment += clock.elapsed();
                    y_batch = rows(ys, &tgt);
                } else {
                    x_batch = rows(xs, &src);
                    cache = net.forward_cached(x_batch.view());
                }
            }
            AssignmentScope::Global => {
                if refresh {
                    let clock = Instant::now();
                    let pushed = net.forward_batch(ArrayView2::from_shape((n, xs.dim()), xs.points()).expect("row-major"));
                    global = couple(pushed.view(), ys, &all)?;
                    timings.assignment += clock.elapsed();
                }
                src = src_sampler.next(b, &mut rng);
                tgt = src.iter().map(|&i| global[i]).collect();
                x_batch = rows(xs, &src);
                cache = net.forward_cached(x_batch.view());
                y_batch = rows(ys, &tgt);
            }
        }

        let clock = Instant::now();
        let (loss, grads) = net.backward(&cache, y_batch.view())?;
        if !loss.is_finite() || loss > cfg.divergence_threshold {
            return Err(Error::Diverged {
                iter: t,
                loss,
                checkpoint: Box::new(best_net),
            });
        }
        let improved = loss < history.best_loss;
        history.losses.push(loss);
        history.lrs.push(opt.lr());
        history.is_best.push(improved);
        if improved {
            history.best_loss = loss;
            history.best_iter = t;
            history.best_batch = (src.clone(), tgt.clone());
            best_net.clone_from(&net);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                timings.gradient += clock.elapsed();
                break;
            }
        }
        adam_step(&mut net, &grads, &mut opt)?;
        timings.gradient += clock.elapsed();
    }
    timings.total = started.elapsed();
    history.timings = timings;
    Ok((best_net, history))
}

/// Validation W2 between the pushforward of `val_xs` and `val_ys`. One
/// dimensional clouds of equal size use the exact sorted coupling.
pub fn validate(map: &dyn PushforwardMap, val_xs: &SampleSet, val_ys: &SampleSet, method: W2Method, opts: W2Options) -> Result<W2Result> {
    let pushed = map.push_forward(val_xs)?;
    if pushed.dim() == 1 && method == W2Method::ExactLp {
        w2_1d(&pushed, val_ys)
    } else {
        w2_point_clouds(&pushed, val_ys, method, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_net;

    fn cloud(v: Vec<f64>, d: usize) -> SampleSet {
        SampleSet::new(v, d, "t", 0).unwrap()
    }

    #[test]
    fn two_point_problem() {
        let xs = cloud(vec![0.0, 1.0], 1);
        let ys = cloud(vec![1.0, 0.0], 1);
        let cfg = TrainConfig {
            max_iters: 3000,
            patience: 3000,
            batch_size: Some(2),
            seed: 1,
            ..TrainConfig::default()
        };
        let (net, h) = train(&xs, &ys, init_net(&[1, 16, 16, 1], 1).unwrap(), &cfg).unwrap();
        assert!((net.forward(&[0.0]).unwrap()[0]).abs() < 1e-3, "{:?}", net.forward(&[0.0]));
        assert!((net.forward(&[1.0]).unwrap()[0] - 1.0).abs() < 1e-3);
        assert!(h.best_loss < 1e-6);
    }

    #[test]
    fn flat_loss_stops_early() {
        let net = init_net(&[1, 4, 1], 0).unwrap();
        let xs = cloud(vec![0.2, 0.4, 0.6, 0.8], 1);
        let ys = net.push_forward(&xs).unwrap();
        let cfg = TrainConfig {
            max_iters: 1000,
            patience: 50,
            ..TrainConfig::default()
        };
        let (out, h) = train(&xs, &ys, net.clone(), &cfg).unwrap();
        assert!(h.stopped_early);
        assert_eq!(h.iterations(), 51);
        assert_eq!(h.best_iter, 0);
        assert_eq!(out, net);
    }

    #[test]
    fn best_checkpoint_reproduces_its_loss() {
        let xs = cloud((0..40).map(|i| i as f64 / 40.0).collect(), 1);
        let ys = cloud((0..40).map(|i| (i as f64 / 40.0).powi(2)).collect(), 1);
        let cfg = TrainConfig {
            max_iters: 300,
            patience: 300,
            seed: 3,
            ..TrainConfig::default()
        };
        let (net, h) = train(&xs, &ys, init_net(&[1, 8, 1], 2).unwrap(), &cfg).unwrap();
        let (s, t) = &h.best_batch;
        let l = batch_loss(&net, &xs, &ys, s, t).unwrap();
        assert!((l - h.best_loss).abs() <= 1e-9 * h.best_loss.max(1.0));
        assert_eq!(h.best_loss, h.losses.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn identical_seeds_identical_runs() {
        let xs = cloud((0..30).map(|i| (i as f64 * 0.37).sin()).collect(), 2);
        let ys = cloud((0..30).map(|i| (i as f64 * 0.11).cos()).collect(), 2);
        for scope in [AssignmentScope::Batch, AssignmentScope::Global] {
            let cfg = TrainConfig {
                max_iters: 60,
                patience: 60,
                assignment_refresh_every: 3,
                scope,
                seed: 8,
                ..TrainConfig::default()
            };
            let a = train(&xs, &ys, init_net(&[2, 8, 2], 4).unwrap(), &cfg).unwrap();
            let b = train(&xs, &ys, init_net(&[2, 8, 2], 4).unwrap(), &cfg).unwrap();
            assert_eq!(a.0, b.0);
            assert_eq!(a.1.losses, b.1.losses);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let xs = cloud(vec![0.0, 1.0], 1);
        let net = init_net(&[1, 2, 1], 0).unwrap();
        let bad = TrainConfig {
            batch_size: Some(3),
            ..TrainConfig::default()
        };
        assert!(matches!(train(&xs, &xs, net.clone(), &bad), Err(Error::BatchOutOfRange { .. })));
        let bad = TrainConfig {
            patience: 10,
            max_iters: 5,
            ..TrainConfig::default()
        };
        assert!(train(&xs, &xs, net, &bad).is_err());
    }

    #[test]
    fn divergence_returns_checkpoint() {
        let xs = cloud(vec![0.0, 1.0], 1);
        let ys = cloud(vec![1e4, -1e4], 1);
        let cfg = TrainConfig {
            max_iters: 10,
            patience: 10,
            ..TrainConfig::default()
        };
        match train(&xs, &ys, init_net(&[1, 2, 1], 0).unwrap(), &cfg) {
            Err(Error::Diverged { iter: 0, checkpoint, .. }) => assert!(checkpoint.is_finite()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
