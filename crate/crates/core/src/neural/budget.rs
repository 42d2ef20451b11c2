use crate::error::{Error, Result};

/// Explicit sup-norm approximation bound for Hölder maps by ReLU networks,
/// with the architecture that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBudget {
    pub width: f64,
    pub depth: f64,
    pub alpha: f64,
    pub lambda_h: f64,
    pub half_width: f64,
    pub dim: usize,
    /// `19 sqrt(d) lambda (2B)^alpha W^(-2 alpha/d) L^(-2 alpha/d)`.
    pub bound: f64,
    pub prescribed_width: u64,
    pub prescribed_depth: u64,
}

pub fn approx_budget(width: f64, depth: f64, alpha: f64, lambda_h: f64, half_width: f64, dim: usize) -> Result<ApproxBudget> {
    let all_positive = [width, depth, alpha, lambda_h, half_width].iter().all(|v| *v > 0.0 && v.is_finite());
    if !all_positive || dim == 0 || alpha > 1.0 {
        return Err(Error::invalid(format!(
            "approximation budget needs positive finite W, L, lambda, B, d and alpha in (0,1]; got W={width}, L={depth}, alpha={alpha}, lambda={lambda_h}, B={half_width}, d={dim}"
        )));
    }
    let d = dim as f64;
    let rate = -2.0 * alpha / d;
    let bound = 19.0 * d.sqrt() * lambda_h * (2.0 * half_width).powf(alpha) * width.powf(rate) * depth.powf(rate);
    let root = width.powf(1.0 / d).floor();
    let prescribed_width = 3u64.pow(dim as u32 + 3) * ((d * root) as u64).max(width as u64 + 1);
    let prescribed_depth = 12 * depth as u64 + 14 + 2 * dim as u64;
    Ok(ApproxBudget {
        width,
        depth,
        alpha,
        lambda_h,
        half_width,
        dim,
        bound,
        prescribed_width,
        prescribed_depth,
    })
}
