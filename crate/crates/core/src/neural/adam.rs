//! Adam optimizer state and the slow target-network tracker.

use super::{Mlp, ParamGrads};
use ndarray::{Array1, Array2};

/// Bias-corrected first/second moment accumulators shaped like one
/// network's parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Updates skipped because a gradient came in non-finite.
    pub skipped: usize,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let (w, b) = net.params();
        Self {
            m_w: w.iter().map(|m| Array2::zeros(m.dim())).collect(),
            v_w: w.iter().map(|m| Array2::zeros(m.dim())).collect(),
            m_b: b.iter().map(|v| Array1::zeros(v.len())).collect(),
            v_b: b.iter().map(|v| Array1::zeros(v.len())).collect(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            skipped: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One descent step. A non-finite gradient skips the whole update and
    /// bumps the skip counter so training anomalies stay visible.
    pub fn step(&mut self, net: &mut Mlp, grads: &ParamGrads) {
        if !grads.is_finite() {
            self.skipped += 1;
            return;
        }
        self.step += 1;
        let correction1 = 1.0 - self.beta1.powi(self.step as i32);
        let correction2 = 1.0 - self.beta2.powi(self.step as i32);
        let knobs = (self.lr, self.beta1, self.beta2, self.eps);
        let (weights, biases) = net.params_mut();
        for l in 0..weights.len() {
            update_array(
                &mut weights[l],
                &grads.weights[l],
                &mut self.m_w[l],
                &mut self.v_w[l],
                knobs,
                (correction1, correction2),
            );
            update_array(
                &mut biases[l],
                &grads.biases[l],
                &mut self.m_b[l],
                &mut self.v_b[l],
                knobs,
                (correction1, correction2),
            );
        }
    }
}

fn update_array<D: ndarray::Dimension>(
    params: &mut ndarray::Array<f64, D>,
    grads: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    (lr, beta1, beta2, eps): (f64, f64, f64, f64),
    (correction1, correction2): (f64, f64),
) {
    ndarray::Zip::from(params)
        .and(grads)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}

/// Target tracking: `target <- varsigma * online + (1 - varsigma) * target`
/// over every parameter.
pub fn soft_update(target: &mut Mlp, online: &Mlp, varsigma: f64) {
    assert!((0.0..=1.0).contains(&varsigma), "tracking rate out of range");
    assert_eq!(target.sizes(), online.sizes(), "network shapes must match");
    let (ow, ob) = {
        let (w, b) = online.params();
        (w.to_vec(), b.to_vec())
    };
    let (tw, tb) = target.params_mut();
    for (t, o) in tw.iter_mut().zip(&ow) {
        t.zip_mut_with(o, |t, &o| *t = varsigma * o + (1.0 - varsigma) * *t);
    }
    for (t, o) in tb.iter_mut().zip(&ob) {
        t.zip_mut_with(o, |t, &o| *t = varsigma * o + (1.0 - varsigma) * *t);
    }
}
