use crate::error::{Error, Result};
use crate::map::PushforwardMap;
use crate::measures::SampleSet;
use crate::transport::{w2_1d, w2_point_clouds, W2Method, W2Options};

use super::decomposition::batch_means_se;

/// Both sides of `R(T; mu, nu1) <= R(T; mu, nu) + W2(nu, nu1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OodResult {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// Combined standard error of the three estimated terms.
    pub std_err: f64,
    pub risk_nu: f64,
    pub shift_w2: f64,
}

impl OodResult {
    /// Whether the slack clears `-k` standard errors.
    pub fn holds(&self, k: f64) -> bool {
        self.slack >= -k * self.std_err
    }
}

fn halves(s: &SampleSet) -> Result<(SampleSet, SampleSet)> {
    let n = s.len() / 2;
    let a: Vec<usize> = (0..n).collect();
    let b: Vec<usize> = (n..2 * n).collect();
    Ok((s.select(&a)?, s.select(&b)?))
}

fn w2(a: &SampleSet, b: &SampleSet, method: W2Method, opts: W2Options) -> Result<f64> {
    if a.dim() == 1 && method == W2Method::ExactLp {
        Ok(w2_1d(a, b)?.value)
    } else {
        Ok(w2_point_clouds(a, b, method, opts)?.value)
    }
}

/// Evaluates the target-shift inequality on validation clouds. Each cloud
/// is split in halves so that the three W2 terms use independent samples;
/// the check is therefore statistical, with a batch-means tolerance.
pub fn ood_check(
    map: &dyn PushforwardMap,
    mu_val: &SampleSet,
    nu_val: &SampleSet,
    nu1_val: &SampleSet,
    method: W2Method,
    opts: W2Options,
) -> Result<OodResult> {
    let n = mu_val.len();
    if nu_val.len() != n || nu1_val.len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: if nu_val.len() != n { nu_val.len() } else { nu1_val.len() },
        });
    }
    if n < 4 {
        return Err(Error::invalid("ood check needs at least 4 points per cloud"));
    }
    let pushed = map.push_forward(mu_val)?;
    let (push_a, push_b) = halves(&pushed)?;
    let (nu_a, nu_b) = halves(nu_val)?;
    let (nu1_a, _) = halves(nu1_val)?;
    let (_, nu1_b) = halves(nu1_val)?;

    let lhs = w2(&push_a, &nu1_a, method, opts)?;
    let risk_nu = w2(&push_b, &nu_b, method, opts)?;
    let shift_w2 = w2(&nu_a, &nu1_b, method, opts)?;
    let se = [
        batch_means_se(&push_a, &nu1_a, method, opts)?,
        batch_means_se(&push_b, &nu_b, method, opts)?,
        batch_means_se(&nu_a, &nu1_b, method, opts)?,
    ];
    let std_err = se.iter().map(|s| s * s).sum::<f64>().sqrt();
    let rhs = risk_nu + shift_w2;
    Ok(OodResult {
        lhs,
        rhs,
        slack: rhs - lhs,
        std_err,
        risk_nu,
        shift_w2,
    })
}
