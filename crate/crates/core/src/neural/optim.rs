use ndarray::Zip;

use super::net::{Gradients, TransportNet};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments plus a StepLR schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
    pub base_lr: f64,
    pub step_size: u64,
    pub gamma: f64,
}

impl OptimState {
    pub fn new(net: &TransportNet, base_lr: f64, step_size: u64, gamma: f64) -> Result<Self> {
        if !(base_lr > 0.0 && base_lr.is_finite()) || step_size == 0 || !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "optimizer needs lr > 0, step_size >= 1, gamma in (0,1]; got {base_lr}, {step_size}, {gamma}"
            )));
        }
        Ok(Self {
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            step: 0,
            base_lr,
            step_size,
            gamma,
        })
    }

    /// Rate applied by the next step.
    pub fn lr(&self) -> f64 {
        self.base_lr * self.gamma.powi((self.step / self.step_size) as i32)
    }
}

/// One Adam update in place.
pub fn adam_step(net: &mut TransportNet, grads: &Gradients, opt: &mut OptimState) -> Result<()> {
    if grads.weights.len() != net.weights.len()
        || grads.weights.iter().zip(&net.weights).any(|(g, w)| g.dim() != w.dim())
        || grads.biases.iter().zip(&net.biases).any(|(g, b)| g.dim() != b.dim())
        || opt.m.weights.len() != net.weights.len()
    {
        return Err(Error::invalid("gradient or optimizer shapes do not match the network"));
    }
    let lr = opt.lr();
    opt.step += 1;
    let t = opt.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    };
    for l in 0..net.weights.len() {
        Zip::from(&mut net.weights[l])
            .and(&grads.weights[l])
            .and(&mut opt.m.weights[l])
            .and(&mut opt.v.weights[l])
            .for_each(update);
        Zip::from(&mut net.biases[l])
            .and(&grads.biases[l])
            .and(&mut opt.m.biases[l])
            .and(&mut opt.v.biases[l])
            .for_each(update);
    }
    Ok(())
}
