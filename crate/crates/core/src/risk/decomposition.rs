use crate::error::{Error, Result};
use crate::map::PushforwardMap;
use crate::measures::SampleSet;
use crate::neural::ApproxBudget;
use crate::transport::{w2_1d, w2_point_clouds, W2Method, W2Options};

/// Inputs for [`decompose_excess_risk`].
pub struct RiskInputs<'a> {
    pub map: &'a dyn PushforwardMap,
    /// The optimal map, when known. Its population risk is zero.
    pub exact: Option<&'a dyn PushforwardMap>,
    pub train_xs: &'a SampleSet,
    pub train_ys: &'a SampleSet,
    pub val_xs: &'a SampleSet,
    pub val_ys: &'a SampleSet,
    /// Method for validation-size W2 (training-size W2 is always exact).
    pub method: W2Method,
    pub opts: W2Options,
    /// Source domain points on which the sup-norm distance to the exact map
    /// is measured.
    pub grid: Option<&'a SampleSet>,
    pub stat_term: Option<f64>,
    pub approx_budget: Option<ApproxBudget>,
}

/// Excess-risk decomposition of a trained map. Terms that need the exact
/// map are `None` when it is unavailable.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    /// `R(T_theta; mu, nu)` estimated on the validation clouds.
    pub population_risk_estimate: f64,
    /// Batch-means standard error of the population estimate.
    pub population_risk_se: f64,
    /// `R(T_theta; mu_N, nu_N)`.
    pub empirical_risk: f64,
    pub eps_gen: f64,
    /// Residual of the telescoping identity.
    pub eps_opt: Option<f64>,
    /// Upper bound `||T_theta - T||` in `L2(mu_N)`.
    pub eps_app: Option<f64>,
    /// Sup-norm distance between `T_theta` and `T` on the supplied grid.
    pub eps_app_sup: Option<f64>,
    /// `R(T; mu_N, nu_N) - R(T; mu, nu) = W2(T # mu_N, nu_N)`.
    pub eps_disc: Option<f64>,
    pub stat_term: Option<f64>,
    pub approx_budget: Option<ApproxBudget>,
    pub notes: Vec<String>,
}

impl RiskReport {
    /// Excess risk `R(T_theta; mu, nu) - R(T; mu, nu)`.
    pub fn total(&self) -> f64 {
        self.population_risk_estimate
    }

    pub fn sum_of_terms(&self) -> Option<f64> {
        Some(self.eps_gen + self.eps_opt? + self.eps_app? + self.eps_disc?)
    }

    /// `(term, value)` rows for CSV export; unavailable terms are `NA`.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:e}"));
        vec![
            ("population_risk", format!("{:e}", self.population_risk_estimate)),
            ("population_risk_se", format!("{:e}", self.population_risk_se)),
            ("empirical_risk", format!("{:e}", self.empirical_risk)),
            ("eps_gen", format!("{:e}", self.eps_gen)),
            ("eps_opt", opt(self.eps_opt)),
            ("eps_app", opt(self.eps_app)),
            ("eps_app_sup", opt(self.eps_app_sup)),
            ("eps_disc", opt(self.eps_disc)),
            ("stat_term", opt(self.stat_term)),
            ("approx_bound", opt(self.approx_budget.map(|b| b.bound))),
        ]
    }
}

fn exact_w2(a: &SampleSet, b: &SampleSet, opts: W2Options) -> Result<f64> {
    if a.dim() == 1 {
        Ok(w2_1d(a, b)?.value)
    } else {
        Ok(w2_point_clouds(a, b, W2Method::ExactLp, opts)?.value)
    }
}

fn val_w2(a: &SampleSet, b: &SampleSet, method: W2Method, opts: W2Options) -> Result<f64> {
    if a.dim() == 1 && method == W2Method::ExactLp {
        Ok(w2_1d(a, b)?.value)
    } else {
        Ok(w2_point_clouds(a, b, method, opts)?.value)
    }
}

const BLOCKS: usize = 10;

/// Standard error of a W2 estimate by batch means over disjoint blocks.
pub(crate) fn batch_means_se(a: &SampleSet, b: &SampleSet, method: W2Method, opts: W2Options) -> Result<f64> {
    let n = a.len().min(b.len());
    let size = n / BLOCKS;
    if size < 2 {
        return Ok(f64::NAN);
    }
    let mut values = Vec::with_capacity(BLOCKS);
    for k in 0..BLOCKS {
        let idx: Vec<usize> = (k * size..(k + 1) * size).collect();
        let (sa, sb) = (a.select(&idx)?, b.select(&idx)?);
        let m = match method {
            W2Method::SubsampleAvg { k: reps, m, seed } => W2Method::SubsampleAvg {
                k: reps,
                m: m.min(size),
                seed,
            },
            other => other,
        };
        values.push(val_w2(&sa, &sb, m, opts)?);
    }
    let mean = values.iter().sum::<f64>() / BLOCKS as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BLOCKS as f64 - 1.0);
    Ok((var / BLOCKS as f64).sqrt())
}

/// Splits the excess risk of `map` into generalization, optimization,
/// approximation and discretization terms.
///
/// `eps_opt` is the residual of the telescoping identity, so the four terms
/// sum to the total exactly whenever the exact map is available.
pub fn decompose_excess_risk(inputs: &RiskInputs<'_>) -> Result<RiskReport> {
    let (xs, ys) = (inputs.train_xs, inputs.train_ys);
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch { left: xs.len(), right: ys.len() });
    }
    let mut notes = Vec::new();
    let pushed_train = inputs.map.push_forward(xs)?;
    let empirical_risk = exact_w2(&pushed_train, ys, inputs.opts)?;
    let pushed_val = inputs.map.push_forward(inputs.val_xs)?;
    let population = val_w2(&pushed_val, inputs.val_ys, inputs.method, inputs.opts)?;
    let population_se = batch_means_se(&pushed_val, inputs.val_ys, inputs.method, inputs.opts)?;
    let eps_gen = population - empirical_risk;
    notes.push("population risk estimated on the validation clouds".into());

    let (eps_opt, eps_app, eps_app_sup, eps_disc) = match inputs.exact {
        Some(t) => {
            let exact_train = t.push_forward(xs)?;
            let eps_disc = exact_w2(&exact_train, ys, inputs.opts)?;
            let sq: f64 = pushed_train
                .iter()
                .zip(exact_train.iter())
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>())
                .sum();
            let eps_app = (sq / xs.len() as f64).sqrt();
            let sup = match inputs.grid {
                Some(g) => {
                    let a = inputs.map.push_forward(g)?;
                    let b = t.push_forward(g)?;
                    let d = a
                        .iter()
                        .zip(b.iter())
                        .map(|(p, q)| p.iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt())
                        .fold(0.0f64, f64::max);
                    Some(d)
                }
                None => None,
            };
            let eps_opt = population - eps_gen - eps_app - eps_disc;
            notes.push("eps_app is the upper bound ||T_theta - T||_{L2(mu_N)}".into());
            notes.push("eps_opt is the residual of the telescoping identity".into());
            (Some(eps_opt), Some(eps_app), sup, Some(eps_disc))
        }
        None => {
            notes.push("exact map unavailable: eps_opt, eps_app and eps_disc not reported".into());
            (None, None, None, None)
        }
    };
    Ok(RiskReport {
        population_risk_estimate: population,
        population_risk_se: population_se,
        empirical_risk,
        eps_gen,
        eps_opt,
        eps_app,
        eps_app_sup,
        eps_disc,
        stat_term: inputs.stat_term,
        approx_budget: inputs.approx_budget,
        notes,
    })
}
