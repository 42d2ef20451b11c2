use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pushmap::measures::{
    closed_form_1d, closed_form_2d, solve_elliptic_1d, uniform_density_1d, uniform_disk_density, DomainSpec,
    EllipticCoeffs1D, ExactMap1d, Law, SampleSet, TabulatedDensity,
};
use pushmap::neural::{init_net, lipschitz_upper_bound, save_checkpoint, TransportNet};
use pushmap::risk::{
    decompose_excess_risk, discrete_ot_images, doubling_probe, fit_loglog, holder_probe, j2_closed_form_1d,
    j2_empirical_bound, ood_check, rate_sweep, stat_term, sunflower_disk, uniform_empirical_bound, HolderSource,
    RiskInputs,
};
use pushmap::rng::SeedStream;
use pushmap::trainer::{train, TrainHistory};
use pushmap::transport::{
    assignment_exact, assignment_minibatch_refine, w2_1d, write_assignment_csv, CostMatrix, W2Method,
};
use pushmap::{Error, Example, PushforwardMap};

use crate::config::ExperimentConfig;
use crate::manifest::Manifest;
use crate::plot::RatePlot;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs. Exit code 1.
    Usage(String),
    /// A numerical failure during a run. Exit code 2.
    Numerical { message: String, manifest: Option<PathBuf> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical { message, manifest } => {
                write!(f, "numerical failure: {message}")?;
                if let Some(p) = manifest {
                    write!(f, "\nmanifest: {}", p.display())?;
                }
                Ok(())
            }
        }
    }
}

fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularSystem { .. }
            | Error::NegativeSolution { .. }
            | Error::NonPositiveMass(_)
            | Error::NullSpace(_)
            | Error::NonPositiveDensity { .. }
            | Error::EnvelopeViolated { .. }
            | Error::NonFinite(_)
            | Error::Diverged { .. }
            | Error::QuadratureFloor { .. }
            | Error::VanishingDensity { .. }
            | Error::CoincidentPairs
    )
}

/// Shared state of one command invocation.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn start(cfg: ExperimentConfig, command: &str, config_bytes: Option<&[u8]>) -> Result<Self, CliError> {
        cfg.validate().map_err(CliError::Usage)?;
        let dir = cfg.output.dir.clone();
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        let mut manifest = Manifest::new(&dir, command, cfg.to_text());
        if let Some(b) = config_bytes {
            manifest.input("config_file", b);
        }
        manifest.entry("master_seed", cfg.experiment.seed);
        manifest.entry("example", &cfg.experiment.example);
        Ok(Self { cfg, dir, manifest })
    }

    /// Converts a library error, recording numerical failures in the manifest.
    fn check<T>(&mut self, r: pushmap::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| self.fail(e))
    }

    fn fail(&mut self, e: Error) -> CliError {
        if is_numerical(&e) {
            let message = e.to_string();
            let manifest = self.manifest.write(&format!("failed: {message}")).ok();
            CliError::Numerical { message, manifest }
        } else {
            CliError::Usage(e.to_string())
        }
    }

    fn io<T>(&self, r: std::io::Result<T>, what: &Path) -> Result<T, CliError> {
        r.map_err(|e| CliError::Usage(format!("cannot write {}: {e}", what.display())))
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            self.io(std::fs::create_dir_all(parent), parent)?;
        }
        self.io(std::fs::write(&path, contents), &path)?;
        self.manifest.output(path.clone());
        Ok(path)
    }

    fn record(&mut self, path: PathBuf) {
        self.manifest.output(path);
    }

    fn entry(&mut self, key: &str, value: impl ToString) {
        self.manifest.entry(key, value);
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.manifest.path();
        self.io(self.manifest.write("ok"), &path)
    }

    fn example(&self) -> Result<Example, CliError> {
        self.cfg.example().map_err(CliError::Usage)
    }

    fn sample_size(&self) -> Result<usize, CliError> {
        match self.cfg.experiment.n {
            0 => Err(CliError::Usage("sample size N must be at least 1 (got N = 0)".into())),
            n => Ok(n),
        }
    }

    fn stream(&self, label: &str) -> SeedStream {
        SeedStream::new(self.cfg.experiment.seed).child(label)
    }
}

fn sample_csv(s: &SampleSet) -> Vec<u8> {
    let mut buf = Vec::new();
    s.write_csv(&mut buf).expect("writing to memory");
    buf
}

fn target_density(ex: Example) -> TabulatedDensity {
    match ex {
        Example::OneD => closed_form_1d(),
        Example::TwoD => closed_form_2d(),
    }
}

pub fn sample(run: &mut Run) -> Result<String, CliError> {
    let ex = run.example()?;
    let n = run.sample_size()?;
    let s = run.stream("sample");
    let r = ex.sample_source(n, s.child("source").seed());
    let xs = run.check(r)?;
    let r = ex.sample_target(n, s.child("target").seed());
    let ys = run.check(r)?;
    run.write("source.csv", &sample_csv(&xs))?;
    run.write("target.csv", &sample_csv(&ys))?;
    let mut dens = Vec::new();
    target_density(ex).write_csv(&mut dens).expect("writing to memory");
    run.write("density.csv", &dens)?;
    run.entry("source_measure", xs.measure_id());
    run.entry("target_measure", ys.measure_id());
    run.entry("source_seed", xs.seed());
    run.entry("target_seed", ys.seed());
    Ok(format!("wrote {n} source and target samples"))
}

pub fn solve(run: &mut Run) -> Result<String, CliError> {
    let ex = run.example()?;
    let n = run.sample_size()?;
    let s = run.stream("solve");
    let r = ex.sample_source(n, s.child("source").seed());
    let xs = run.check(r)?;
    let r = ex.sample_target(n, s.child("target").seed());
    let ys = run.check(r)?;
    let method = run.cfg.w2_method().map_err(CliError::Usage)?;
    let assignment = match method {
        W2Method::ExactLp if ex.dim() == 1 => {
            let r = w2_1d(&xs, &ys);
            run.check(r)?.assignment.expect("1D coupling")
        }
        W2Method::ExactLp => {
            let cap = run.cfg.transport.exact_cap;
            if n > cap {
                return Err(CliError::Usage(format!("N = {n} exceeds exact_cap = {cap}")));
            }
            let r = CostMatrix::squared_euclidean(&xs, &ys).and_then(|c| assignment_exact(&c));
            run.check(r)?
        }
        W2Method::MinibatchRefine { batch, rounds, seed } => {
            let r = assignment_minibatch_refine(&xs, &ys, batch.min(n), rounds, seed);
            run.check(r)?
        }
        W2Method::SubsampleAvg { .. } => {
            return Err(CliError::Usage("solve needs an explicit coupling: use --method exact or minibatch".into()))
        }
    };
    let path = run.dir.join("assignment.csv");
    let r = write_assignment_csv(&path, &assignment, &xs, &ys);
    run.check(r)?;
    run.record(path);
    let w2 = (assignment.total_sq_cost / n as f64).sqrt();
    let body = format!("N,method,total_sq_cost,w2\n{n},{},{:e},{w2:e}\n", assignment.method.as_str(), assignment.total_sq_cost);
    run.write("w2.csv", body.as_bytes())?;
    Ok(format!("W2 = {w2:.6} ({})", assignment.method.as_str()))
}

struct Trained {
    net: TransportNet,
    history: TrainHistory,
    xs: SampleSet,
    ys: SampleSet,
}

fn train_one(run: &mut Run, label: &str) -> Result<Trained, CliError> {
    let ex = run.example()?;
    let n = run.sample_size()?;
    let s = run.stream(label);
    let r = ex.sample_source(n, s.child("source").seed());
    let xs = run.check(r)?;
    let r = ex.sample_target(n, s.child("target").seed());
    let ys = run.check(r)?;
    let layers = run.cfg.layers().map_err(CliError::Usage)?;
    let cfg = run.cfg.train_config(s.child("train").seed()).map_err(CliError::Usage)?;
    for (k, v) in cfg.describe() {
        run.entry(&format!("train.{k}"), v);
    }
    run.entry("layers", format!("{layers:?}"));
    run.entry("train_source", format!("{} seed={}", xs.measure_id(), xs.seed()));
    run.entry("train_target", format!("{} seed={}", ys.measure_id(), ys.seed()));
    let r = init_net(&layers, s.child("init").seed());
    let net = run.check(r)?;
    match train(&xs, &ys, net, &cfg) {
        Ok((net, history)) => Ok(Trained { net, history, xs, ys }),
        Err(Error::Diverged { iter, loss, checkpoint }) => {
            let path = run.dir.join("checkpoint.csv");
            if save_checkpoint(&path, &checkpoint, iter as u64).is_ok() {
                run.record(path);
            }
            Err(run.fail(Error::Diverged { iter, loss, checkpoint }))
        }
        Err(e) => Err(run.fail(e)),
    }
}

fn validation_clouds(run: &mut Run, label: &str) -> Result<(SampleSet, SampleSet), CliError> {
    let ex = run.example()?;
    let v = run.cfg.experiment.val_size;
    if v == 0 {
        return Err(CliError::Usage("val_size must be at least 1".into()));
    }
    let s = run.stream(label);
    let r = ex.sample_source(v, s.child("source").seed());
    let vx = run.check(r)?;
    let r = ex.sample_target(v, s.child("target").seed());
    let vy = run.check(r)?;
    Ok((vx, vy))
}

pub fn train_cmd(run: &mut Run) -> Result<String, CliError> {
    let ex = run.example()?;
    let t = train_one(run, "train")?;
    let hist_path = run.dir.join("history.csv");
    let r = t.history.write_csv(&hist_path);
    run.check(r)?;
    run.record(hist_path);
    let ck = run.dir.join("checkpoint.csv");
    let r = save_checkpoint(&ck, &t.net, t.history.iterations() as u64);
    run.check(r)?;
    run.record(ck);

    let (vx, vy) = validation_clouds(run, "validation")?;
    let exact = ex.exact_map();
    let grid = match ex {
        Example::OneD => SampleSet::new((0..=1000).map(|i| i as f64 / 1000.0).collect(), 1, "grid[0,1]", 0),
        Example::TwoD => sunflower_disk(1024),
    };
    let grid = run.check(grid)?;
    let n = t.xs.len();
    let stat = match ex {
        Example::OneD => Some(stat_term(
            lipschitz_upper_bound(&t.net),
            uniform_empirical_bound(n),
            j2_empirical_bound(j2_closed_form_1d(), n),
        )),
        Example::TwoD => None,
    };
    let method = run.cfg.w2_method().map_err(CliError::Usage)?;
    let inputs = RiskInputs {
        map: &t.net,
        exact: exact.as_deref(),
        train_xs: &t.xs,
        train_ys: &t.ys,
        val_xs: &vx,
        val_ys: &vy,
        method,
        opts: run.cfg.w2_options(),
        grid: Some(&grid),
        stat_term: stat,
        approx_budget: None,
    };
    let r = decompose_excess_risk(&inputs);
    let report = run.check(r)?;
    let mut body = String::from("term,value\n");
    for (k, v) in report.rows() {
        let _ = writeln!(body, "{k},{v}");
    }
    for note in &report.notes {
        let _ = writeln!(body, "# {note}");
    }
    run.write("risk.csv", body.as_bytes())?;
    run.entry("best_loss", format!("{:e}", t.history.best_loss));
    run.entry("best_iter", t.history.best_iter);
    run.entry("iterations", t.history.iterations());
    run.entry("val_w2", format!("{:e}", report.population_risk_estimate));
    let tm = t.history.timings;
    run.entry("wall_assignment_s", tm.assignment.as_secs_f64());
    run.entry("wall_gradient_s", tm.gradient.as_secs_f64());
    run.entry("wall_total_s", tm.total.as_secs_f64());
    Ok(format!(
        "trained {} iterations, best loss {:.3e}, validation W2 {:.5}",
        t.history.iterations(),
        t.history.best_loss,
        report.population_risk_estimate
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:e}"))
}

pub fn sweep(run: &mut Run) -> Result<String, CliError> {
    let spec = run.cfg.sweep_spec().map_err(CliError::Usage)?;
    for (k, v) in spec.train.describe() {
        if k != "seed" {
            run.entry(&format!("train.{k}"), v);
        }
    }
    run.entry("layers", format!("{:?}", spec.layers));
    run.entry("ns", format!("{:?}", spec.ns));
    run.entry("workers", spec.workers);
    let r = rate_sweep(&spec);
    let res = run.check(r)?;
    let mut body = String::from("N,repeat,val_w2\n");
    for r in &res.runs {
        let _ = writeln!(body, "{},{},{}", r.n, r.repeat, fmt_opt(r.val_w2));
    }
    let fit = &res.fit;
    let _ = writeln!(
        body,
        "# summary slope={:e},intercept={:e},diverged={},repeats={}",
        fit.slope, fit.intercept, res.diverged, fit.repeats
    );
    run.write("sweep.csv", body.as_bytes())?;
    let mut rate = String::from("N,mean,std_err,residual\n");
    for i in 0..fit.ns.len() {
        let _ = writeln!(rate, "{},{:e},{:e},{:e}", fit.ns[i], fit.means[i], fit.std_errs[i], fit.residuals[i]);
    }
    run.write("rate.csv", rate.as_bytes())?;
    for r in &res.runs {
        let path = run.dir.join("runs").join(format!("history_N{}_r{}.csv", r.n, r.repeat));
        match &r.history {
            Some(h) => {
                run.io(std::fs::create_dir_all(path.parent().expect("runs dir")), &path)?;
                let w = h.write_csv(&path);
                run.check(w)?;
                run.record(path);
            }
            None => run.entry(&format!("failure.N{}.r{}", r.n, r.repeat), r.failure.clone().unwrap_or_default()),
        }
    }
    run.entry("slope", format!("{:e}", fit.slope));
    run.entry("intercept", format!("{:e}", fit.intercept));
    run.entry("diverged", res.diverged);
    Ok(format!("slope {:.4}, intercept {:.4}, {} diverged", fit.slope, fit.intercept, res.diverged))
}

fn probe_density(run: &Run) -> Result<TabulatedDensity, CliError> {
    Ok(match run.cfg.probe.density.as_str() {
        "target" => target_density(run.example()?),
        "uniform_1d" => uniform_density_1d(0.0, 1.0, 1001).map_err(|e| CliError::Usage(e.to_string()))?,
        "closed_form_1d" => closed_form_1d(),
        "closed_form_2d" => closed_form_2d(),
        "uniform_disk" => uniform_disk_density(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown probe density `{other}` (expected target, uniform_1d, closed_form_1d, closed_form_2d or uniform_disk)"
            )))
        }
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

pub fn probe_doubling(run: &mut Run) -> Result<String, CliError> {
    let density = probe_density(run)?;
    let trials = run.cfg.probe.trials;
    let seed = run.stream("doubling").seed();
    let r = doubling_probe(&density, trials, seed);
    let res = run.check(r)?;
    let mut body = String::from("trial,ratio\n");
    for (i, r) in res.ratios.iter().enumerate() {
        let _ = writeln!(body, "{i},{r:e}");
    }
    let _ = writeln!(body, "# summary max_ratio={:e},trials={}", res.max_ratio, res.trials);
    run.write("doubling.csv", body.as_bytes())?;
    let worst = format!(
        "max_ratio,center,matrix\n{:e},{},{}\n",
        res.max_ratio,
        join(&res.worst.center),
        join(&res.worst.matrix)
    );
    run.write("worst_ellipsoid.csv", worst.as_bytes())?;
    run.entry("density", run.cfg.probe.density.clone());
    run.entry("max_ratio", format!("{:e}", res.max_ratio));
    Ok(format!("max doubling ratio {:.6} over {} trials", res.max_ratio, res.trials))
}

pub fn probe_holder(run: &mut Run) -> Result<String, CliError> {
    let ex = run.example()?;
    let pairs = run.cfg.probe.pairs;
    let seed = run.stream("holder").seed();
    let est = match ex {
        Example::OneD => {
            let domain = DomainSpec::interval(0.0, 1.0).expect("unit interval");
            let r = holder_probe(&HolderSource::Map { map: &ExactMap1d, domain }, pairs, seed);
            run.entry("holder_source", "exact_map_1d");
            run.check(r)?
        }
        Example::TwoD => {
            let n = run.cfg.probe.holder_n;
            let cap = run.cfg.transport.exact_cap;
            if n == 0 || n > cap {
                return Err(CliError::Usage(format!("holder_n = {n} must lie in [1, exact_cap = {cap}]")));
            }
            let r = sunflower_disk(n);
            let points = run.check(r)?;
            let r = ex.sample_target(n, run.stream("holder_target").seed());
            let targets = run.check(r)?;
            let r = discrete_ot_images(&points, &targets);
            let images = run.check(r)?;
            run.entry("holder_source", format!("discrete OT sunflower_disk({n}) -> {}", targets.measure_id()));
            let r = holder_probe(&HolderSource::Discrete { points: &points, images: &images }, pairs, seed);
            run.check(r)?
        }
    };
    let body = format!(
        "beta,constant,pairs,slope,slope_se,beta_lower,intercept,r_max\n{:e},{:e},{},{:e},{:e},{:e},{:e},{:e}\n",
        est.beta,
        est.constant,
        est.pairs,
        est.slope,
        est.slope_se,
        est.beta_lower(),
        est.intercept,
        est.r_max
    );
    run.write("holder.csv", body.as_bytes())?;
    Ok(format!("beta {:.4}, constant {:.4}", est.beta, est.constant))
}

pub fn ood(run: &mut Run) -> Result<String, CliError> {
    let ex = run.example()?;
    if ex != Example::OneD {
        return Err(CliError::Usage("ood configurations are defined for the 1d example".into()));
    }
    let t = train_one(run, "ood_train")?;
    let r = solve_elliptic_1d(&EllipticCoeffs1D::constant(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.6, 1.4), 2001);
    let shifted = run.check(r)?;
    let configs = [
        ("same_law", ex.target()),
        ("elliptic_shift", Law::InverseCdf(Arc::new(shifted))),
        ("point_mass", Law::PointMass(vec![0.5])),
    ];
    let v = run.cfg.experiment.val_size;
    if v < 4 {
        return Err(CliError::Usage("ood needs val_size >= 4".into()));
    }
    let method = run.cfg.w2_method().map_err(CliError::Usage)?;
    let opts = run.cfg.w2_options();
    let mut body = String::from("config,lhs,rhs,slack,std_err,risk_nu,shift_w2,holds\n");
    let mut held = 0;
    for (name, law) in &configs {
        let s = run.stream("ood").child(name);
        let r = ex.sample_source(v, s.child("mu").seed());
        let mu = run.check(r)?;
        let r = ex.sample_target(v, s.child("nu").seed());
        let nu = run.check(r)?;
        let r = law.sample(v, s.child("nu1").seed());
        let nu1 = run.check(r)?;
        let r = ood_check(&t.net as &dyn PushforwardMap, &mu, &nu, &nu1, method, opts);
        let res = run.check(r)?;
        let holds = res.holds(3.0);
        held += usize::from(holds);
        let _ = writeln!(
            body,
            "{name},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            res.lhs,
            res.rhs,
            res.slack,
            res.std_err,
            res.risk_nu,
            res.shift_w2,
            u8::from(holds)
        );
    }
    run.write("ood.csv", body.as_bytes())?;
    Ok(format!("inequality held within 3 s.e. on {held}/{} configurations", configs.len()))
}

/// Rows `(N, repeat, val_w2)` of a sweep CSV; diverged runs are skipped.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<(usize, usize, f64)>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == "N,repeat,val_w2" => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut out = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(format!("expected 3 fields in `{line}`"));
        }
        if f[2] == "NA" {
            continue;
        }
        let n = f[0].parse().map_err(|e| format!("{e} in `{line}`"))?;
        let r = f[1].parse().map_err(|e| format!("{e} in `{line}`"))?;
        let v = f[2].parse().map_err(|e| format!("{e} in `{line}`"))?;
        out.push((n, r, v));
    }
    Ok(out)
}

fn find_sweeps(dir: &Path, found: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else { return };
    let mut entries: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_sweeps(&p, found);
        } else if p.file_name().is_some_and(|n| n == "sweep.csv") {
            found.push(p);
        }
    }
}

/// Aggregates every `sweep.csv` under `dir` into `report.csv` and one SVG
/// plot per sweep.
pub fn report(dir: &Path, config_text: String) -> Result<String, CliError> {
    let mut files = Vec::new();
    find_sweeps(dir, &mut files);
    if files.is_empty() {
        return Err(CliError::Usage(format!("no sweep artifacts found in {}", dir.display())));
    }
    let mut manifest = Manifest::new(dir, "report", config_text);
    let mut table = String::from("sweep,N,runs,mean,std_err,slope,intercept\n");
    let mut lines = Vec::new();
    for file in &files {
        let text = std::fs::read_to_string(file).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
        manifest.input(file.strip_prefix(dir).unwrap_or(file).display().to_string(), text.as_bytes());
        let rows = parse_sweep_csv(&text).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
        let mut ns: Vec<usize> = rows.iter().map(|r| r.0).collect();
        ns.sort_unstable();
        ns.dedup();
        let mut means = Vec::new();
        let mut ses = Vec::new();
        let mut counts = Vec::new();
        for &n in &ns {
            let v: Vec<f64> = rows.iter().filter(|r| r.0 == n).map(|r| r.2).collect();
            let k = v.len() as f64;
            let m = v.iter().sum::<f64>() / k;
            let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
            means.push(m);
            ses.push((var / k).sqrt());
            counts.push(v.len());
        }
        let (slope, intercept, _) = fit_loglog(&ns, &means).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
        let rel = file.parent().and_then(|p| p.strip_prefix(dir).ok()).map(|p| p.display().to_string()).unwrap_or_default();
        let label = if rel.is_empty() { ".".to_string() } else { rel.clone() };
        for i in 0..ns.len() {
            let _ = writeln!(table, "{label},{},{},{:e},{:e},{slope:e},{intercept:e}", ns[i], counts[i], means[i], ses[i]);
        }
        let runs: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.2)).collect();
        let mean_pts: Vec<(f64, f64)> = ns.iter().zip(&means).map(|(&n, &m)| (n as f64, m)).collect();
        let svg = RatePlot { title: &format!("rate sweep {label}"), runs: &runs, means: &mean_pts, slope, intercept }.to_svg();
        let svg_name = if rel.is_empty() { "rate.svg".to_string() } else { format!("rate_{}.svg", rel.replace(['/', '\\'], "_")) };
        let svg_path = dir.join(svg_name);
        std::fs::write(&svg_path, svg).map_err(|e| CliError::Usage(format!("{}: {e}", svg_path.display())))?;
        manifest.output(svg_path);
        lines.push(format!("{label}: slope {slope:.4}, intercept {intercept:.4}"));
    }
    let path = dir.join("report.csv");
    std::fs::write(&path, table).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    manifest.output(path);
    manifest.write("ok").map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(lines.join("\n"))
}
