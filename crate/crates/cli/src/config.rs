//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[experiment]`, `[train]`,
//! `[transport]`, `[probe]` and `[output]`. Every key is optional and has a
//! default; unknown keys and sections are rejected.

use std::path::PathBuf;

use pushmap::risk::{log_spaced, SweepSpec};
use pushmap::rng::SeedStream;
use pushmap::trainer::{AssignmentScope, TrainConfig};
use pushmap::transport::{W2Method, W2Options};
use pushmap::Example;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub train: TrainSection,
    pub transport: TransportSection,
    pub probe: ProbeSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// `1d` or `2d`.
    pub example: String,
    /// Sample size for single-run commands.
    pub n: usize,
    /// Explicit sweep sizes. When empty, `n_count` log-spaced sizes in
    /// `[n_min, n_max]` are used.
    pub ns: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_count: usize,
    pub repeats: usize,
    pub val_size: usize,
    /// Layer widths including input and output. Empty means `[d, 256, 256, d]`.
    pub layers: Vec<usize>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            example: "1d".into(),
            n: 1000,
            ns: Vec::new(),
            n_min: 100,
            n_max: 10_000,
            n_count: 8,
            repeats: 5,
            val_size: 100_000,
            layers: Vec::new(),
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub max_iters: usize,
    /// Omitted means `floor(N/2)`.
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub step_size: u64,
    pub gamma: f64,
    pub patience: usize,
    pub assignment_refresh_every: usize,
    /// `batch` or `global`.
    pub scope: String,
    pub divergence_threshold: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            max_iters: t.max_iters,
            batch_size: t.batch_size,
            lr: t.lr,
            step_size: t.step_size,
            gamma: t.gamma,
            patience: t.patience,
            assignment_refresh_every: t.assignment_refresh_every,
            scope: t.scope.as_str().into(),
            divergence_threshold: t.divergence_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    /// `exact`, `minibatch` or `subsample`.
    pub method: String,
    pub exact_cap: usize,
    pub subsample_k: usize,
    pub subsample_m: usize,
    pub minibatch_batch: usize,
    pub minibatch_rounds: usize,
}

impl Default for TransportSection {
    fn default() -> Self {
        Self {
            method: "exact".into(),
            exact_cap: W2Options::default().exact_cap,
            subsample_k: 10,
            subsample_m: 1024,
            minibatch_batch: 64,
            minibatch_rounds: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    /// `target`, `uniform_1d`, `closed_form_1d`, `closed_form_2d` or `uniform_disk`.
    pub density: String,
    pub trials: usize,
    pub pairs: usize,
    /// Grid size of the discrete 2D map probed for Hölder regularity.
    pub holder_n: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            density: "target".into(),
            trials: 10_000,
            pairs: 10_000,
            holder_n: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub method: Option<String>,
    pub n: Option<usize>,
    pub example: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(w) = o.workers {
            self.experiment.workers = w;
        }
        if let Some(m) = &o.method {
            self.transport.method = m.clone();
        }
        if let Some(n) = o.n {
            self.experiment.n = n;
        }
        if let Some(e) = &o.example {
            self.experiment.example = e.clone();
        }
    }

    pub fn example(&self) -> Result<Example, String> {
        Example::parse(&self.experiment.example)
            .ok_or_else(|| format!("unknown example `{}` (expected 1d or 2d)", self.experiment.example))
    }

    pub fn layers(&self) -> Result<Vec<usize>, String> {
        let ex = self.example()?;
        if self.experiment.layers.is_empty() {
            return Ok(ex.reference_layers());
        }
        let l = &self.experiment.layers;
        if l.len() < 2 || l[0] != ex.dim() || l[l.len() - 1] != ex.dim() || l.contains(&0) {
            return Err(format!("layers {l:?} must start and end with d = {} and be positive", ex.dim()));
        }
        Ok(l.clone())
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, String> {
        let t = &self.train;
        let scope = AssignmentScope::parse(&t.scope)
            .ok_or_else(|| format!("unknown assignment scope `{}` (expected batch or global)", t.scope))?;
        Ok(TrainConfig {
            max_iters: t.max_iters,
            batch_size: t.batch_size,
            lr: t.lr,
            step_size: t.step_size,
            gamma: t.gamma,
            patience: t.patience,
            assignment_refresh_every: t.assignment_refresh_every,
            scope,
            divergence_threshold: t.divergence_threshold,
            seed,
        })
    }

    pub fn w2_method(&self) -> Result<W2Method, String> {
        let t = &self.transport;
        let seed = SeedStream::new(self.experiment.seed).child("w2").seed();
        match t.method.as_str() {
            "exact" => Ok(W2Method::ExactLp),
            "subsample" => Ok(W2Method::SubsampleAvg { k: t.subsample_k, m: t.subsample_m, seed }),
            "minibatch" => Ok(W2Method::MinibatchRefine {
                batch: t.minibatch_batch,
                rounds: t.minibatch_rounds,
                seed,
            }),
            other => Err(format!("unknown method `{other}` (expected exact, minibatch or subsample)")),
        }
    }

    pub fn w2_options(&self) -> W2Options {
        W2Options { exact_cap: self.transport.exact_cap }
    }

    pub fn sweep_ns(&self) -> Result<Vec<usize>, String> {
        let e = &self.experiment;
        let ns = if e.ns.is_empty() {
            log_spaced(e.n_min, e.n_max, e.n_count).map_err(|err| err.to_string())?
        } else {
            e.ns.clone()
        };
        if ns.len() < 3 || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
            return Err(format!("sweep sizes {ns:?} must be at least 3 strictly increasing positive values"));
        }
        Ok(ns)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, String> {
        let e = &self.experiment;
        if e.repeats == 0 || e.workers == 0 || e.val_size == 0 {
            return Err("repeats, workers and val_size must be positive".into());
        }
        Ok(SweepSpec {
            example: self.example()?,
            ns: self.sweep_ns()?,
            repeats: e.repeats,
            layers: self.layers()?,
            train: self.train_config(0)?,
            val_size: e.val_size,
            method: self.w2_method()?,
            opts: self.w2_options(),
            seed: e.seed,
            workers: e.workers,
        })
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<(), String> {
        self.example()?;
        self.layers()?;
        self.w2_method()?;
        let cfg = self.train_config(0)?;
        if cfg.max_iters == 0 || cfg.assignment_refresh_every == 0 || cfg.patience > cfg.max_iters {
            return Err("train: need max_iters >= 1, assignment_refresh_every >= 1, patience <= max_iters".into());
        }
        if !(cfg.lr > 0.0 && cfg.gamma > 0.0 && cfg.divergence_threshold > 0.0) {
            return Err("train: lr, gamma and divergence_threshold must be positive".into());
        }
        if self.experiment.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        Ok(())
    }
}
