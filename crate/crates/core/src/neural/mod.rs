//! Dense-network toolkit backing every actor and critic: multilayer
//! perceptrons in 64-bit floats with analytic reverse-mode gradients.
//!
//! A network is a stack of affine layers with rectifier hidden units and
//! per-segment output activations (sigmoid, tanh or identity "heads").
//! `forward` caches activations; `backward` turns the cache plus an output
//! cotangent into exact parameter gradients and the input gradient, which
//! is what chains a critic's action-gradient through an actor.

mod adam;
mod checkpoint;

pub use adam::{soft_update, AdamState};
pub use checkpoint::CheckpointError;

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output where possible.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
        }
    }
}

/// One output segment and its activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadSpec {
    pub len: usize,
    pub activation: Activation,
}

/// Per-parameter gradients, shaped like the network.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl ParamGrads {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn global_norm(&self) -> f64 {
        let mut sum = 0.0;
        for w in &self.weights {
            sum += w.iter().map(|x| x * x).sum::<f64>();
        }
        for b in &self.biases {
            sum += b.iter().map(|x| x * x).sum::<f64>();
        }
        sum.sqrt()
    }

    /// Scale the gradients down to `max_norm` when they exceed it.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        if max_norm <= 0.0 {
            return;
        }
        let norm = self.global_norm();
        if norm > max_norm {
            let scale = max_norm / norm;
            for w in self.weights.iter_mut() {
                w.mapv_inplace(|x| x * scale);
            }
            for b in self.biases.iter_mut() {
                b.mapv_inplace(|x| x * scale);
            }
        }
    }
}

/// Activations cached by one forward pass. `generation` ties the cache to
/// the parameter state that produced it; backpropagating through a cache
/// from older parameters is a contract violation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Array2<f64>>,
    final_pre: Array2<f64>,
    output: Array2<f64>,
    generation: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    hidden: Activation,
    heads: Vec<HeadSpec>,
    generation: u64,
}

impl Mlp {
    /// Uniform fan-in initialization; the final layer is scaled by
    /// `final_scale` (actors use a small value so initial outputs sit near
    /// mid-range).
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        heads: Vec<HeadSpec>,
        final_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        assert!(sizes.iter().all(|&n| n > 0), "zero-width layer");
        let head_total: usize = heads.iter().map(|h| h.len).sum();
        assert_eq!(
            head_total,
            *sizes.last().unwrap(),
            "head segments must cover the output layer"
        );
        let layers = sizes.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let scale = if l == layers - 1 { final_scale } else { 1.0 };
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                scale * (rng.random::<f64>() * 2.0 - 1.0) * bound
            });
            let b = Array1::from_shape_fn(fan_out, |_| {
                scale * (rng.random::<f64>() * 2.0 - 1.0) * bound
            });
            weights.push(w);
            biases.push(b);
        }
        Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            hidden: Activation::Relu,
            heads,
            generation: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn heads(&self) -> &[HeadSpec] {
        &self.heads
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub(crate) fn layers(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn params(&self) -> (&[Array2<f64>], &[Array1<f64>]) {
        (&self.weights, &self.biases)
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Vec<Array2<f64>>, &mut Vec<Array1<f64>>) {
        self.generation += 1;
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub(crate) fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        hidden: Activation,
        heads: Vec<HeadSpec>,
    ) -> Self {
        Self {
            sizes,
            weights,
            biases,
            hidden,
            heads,
            generation: 0,
        }
    }

    fn apply_heads(&self, pre: &Array2<f64>) -> Array2<f64> {
        let mut out = pre.clone();
        let mut start = 0;
        for head in &self.heads {
            let stop = start + head.len;
            out.slice_mut(s![.., start..stop])
                .mapv_inplace(|z| head.activation.apply(z));
            start = stop;
        }
        out
    }

    /// Batched forward pass: rows are samples.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, ForwardCache) {
        assert_eq!(x.ncols(), self.input_dim(), "input dimension mismatch");
        assert!(
            x.iter().all(|v| v.is_finite()),
            "non-finite network input"
        );
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers);
        acts.push(x.clone());
        let mut current = x.clone();
        for l in 0..layers - 1 {
            let mut z = current.dot(&self.weights[l].t());
            z += &self.biases[l];
            z.mapv_inplace(|v| self.hidden.apply(v));
            acts.push(z.clone());
            current = z;
        }
        let mut final_pre = current.dot(&self.weights[layers - 1].t());
        final_pre += &self.biases[layers - 1];
        let output = self.apply_heads(&final_pre);
        let cache = ForwardCache {
            acts,
            final_pre,
            output: output.clone(),
            generation: self.generation,
        };
        (output, cache)
    }

    /// Single-sample convenience wrapper.
    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let arr = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        let (out, _) = self.forward(&arr);
        out.row(0).to_vec()
    }

    /// Reverse-mode pass for the scalar `sum(grad_out * output)`. Returns
    /// parameter gradients and the gradient with respect to the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &Array2<f64>,
    ) -> (ParamGrads, Array2<f64>) {
        assert_eq!(
            cache.generation, self.generation,
            "stale forward cache: parameters changed since the forward pass"
        );
        assert_eq!(grad_out.dim(), cache.output.dim(), "cotangent shape mismatch");
        let layers = self.layers();

        // Head derivatives.
        let mut delta = grad_out.clone();
        let mut start = 0;
        for head in &self.heads {
            let stop = start + head.len;
            let pre = cache.final_pre.slice(s![.., start..stop]);
            let post = cache.output.slice(s![.., start..stop]);
            let mut seg = delta.slice_mut(s![.., start..stop]);
            for ((d, &z), &y) in seg.iter_mut().zip(pre.iter()).zip(post.iter()) {
                *d *= head.activation.derivative(z, y);
            }
            start = stop;
        }

        let mut grads = ParamGrads {
            weights: Vec::with_capacity(layers),
            biases: Vec::with_capacity(layers),
        };
        for l in (0..layers).rev() {
            grads.weights.push(delta.t().dot(&cache.acts[l]));
            grads.biases.push(delta.sum_axis(Axis(0)));
            let mut upstream = delta.dot(&self.weights[l]);
            if l > 0 {
                for (u, &a) in upstream.iter_mut().zip(cache.acts[l].iter()) {
                    *u *= self.hidden.derivative(a, a);
                }
            }
            delta = upstream;
        }
        grads.weights.reverse();
        grads.biases.reverse();
        (grads, delta)
    }
}
