//! Fully connected Q-network with rectifier hidden layers and manual
//! reverse-mode gradients.
//!
//! Batches are row-major (one observation per row) and weights input-major
//! (`weights[i * outputs + o]`), so every layer is a plain matrix product.
//! With the `std` feature nalgebra hands those products to `matrixmultiply`.

use super::Scalar;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrixView, DMatrixViewMut, Dyn};
#[allow(unused_imports)] // inherent float methods shadow it only when std is linked
use num_traits::Float;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `inputs × outputs`, input-major.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            biases: vec![T::zero(); outputs],
        }
    }

    /// `out = b + xW` for each of the `batch` rows of `input`.
    fn forward(&self, input: &[T], out: &mut [T], batch: usize, rectify: bool) {
        for y in out.chunks_exact_mut(self.outputs) {
            y.copy_from_slice(&self.biases);
        }
        // Transposed: yᵀ += Wᵀ·xᵀ, all three stored column-major.
        let (n, o) = (self.inputs, self.outputs);
        cm_mut(out, o, batch).gemm(T::one(), &cm(&self.weights, o, n), &cm(input, n, batch), T::one());
        if rectify {
            for v in out.iter_mut() {
                *v = v.max(T::zero());
            }
        }
    }
}

/// Column-major `r × c` view: a row-major buffer read as its transpose.
fn cm<T: Scalar>(data: &[T], r: usize, c: usize) -> DMatrixView<'_, T, Dyn, Dyn> {
    DMatrixView::from_slice_with_strides(&data[..r * c], r, c, 1, r)
}

/// Row-major `r × c` view; only valid as the right operand of a product.
fn rm<T: Scalar>(data: &[T], r: usize, c: usize) -> DMatrixView<'_, T, Dyn, Dyn> {
    DMatrixView::from_slice_with_strides(&data[..r * c], r, c, c, 1)
}

fn cm_mut<T: Scalar>(data: &mut [T], r: usize, c: usize) -> DMatrixViewMut<'_, T, Dyn, Dyn> {
    DMatrixViewMut::from_slice_with_strides_mut(&mut data[..r * c], r, c, 1, r)
}

#[inline]
fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<T> {
    layers: Vec<Dense<T>>,
}

/// Per-layer gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect()
    }

    fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(T::zero());
            l.biases.fill(T::zero());
        }
    }
}

/// Reusable activation buffers for batched passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace<T> {
    batch: usize,
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub fn new() -> Self {
        Self {
            batch: 0,
            activations: Vec::new(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    pub(crate) fn prepare(&mut self, net: &QNetwork<T>, batch: usize) {
        let sizes = net.sizes();
        if self.batch != batch || self.activations.len() != sizes.len() {
            self.batch = batch;
            self.activations = sizes.iter().map(|&n| vec![T::zero(); n * batch]).collect();
            let widest = sizes.iter().copied().max().unwrap_or(0);
            self.delta = vec![T::zero(); widest * batch];
            self.delta_prev = vec![T::zero(); widest * batch];
        }
    }

    pub fn input_mut(&mut self) -> &mut [T] {
        &mut self.activations[0]
    }

    pub fn output(&self) -> &[T] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl<T: Scalar> QNetwork<T> {
    /// Layer sizes from input to output. Weights are uniform on
    /// ±1/sqrt(fan_in); biases start at zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = T::from_f64(1.0 / (layer.inputs as f64).sqrt());
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig("network needs at least two non-empty layers"));
        }
        Ok(Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    /// Rebuilds a network from its sizes and a flat parameter list in
    /// [`QNetwork::parameters`] order.
    pub fn from_parameters(sizes: &[usize], params: &[T]) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.parameter_count() {
            return Err(Error::ShapeMismatch {
                expected: net.parameter_count(),
                actual: params.len(),
            });
        }
        for (dst, &src) in net.parameters_mut().zip(params) {
            *dst = src;
        }
        Ok(net)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Every parameter, layer by layer: weights then biases.
    pub fn parameters(&self) -> impl Iterator<Item = &T> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(|p| p.is_finite())
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn forward(&self, obs: &[T]) -> Result<Vec<T>> {
        let mut ws = Workspace::new();
        Ok(self.forward_batch(obs, 1, &mut ws)?.to_vec())
    }

    /// Forward pass over `batch` stacked rows of `input`; returns the
    /// `batch × outputs` Q-values held in `ws`.
    pub fn forward_batch<'w>(&self, input: &[T], batch: usize, ws: &'w mut Workspace<T>) -> Result<&'w [T]> {
        if input.len() != batch * self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: batch * self.input_len(),
                actual: input.len(),
            });
        }
        ws.prepare(self, batch);
        ws.activations[0].copy_from_slice(input);
        self.run_forward(ws);
        Ok(ws.output())
    }

    /// Forward pass on the input already placed in `ws.input_mut()`.
    pub(crate) fn forward_in_place<'w>(&self, batch: usize, ws: &'w mut Workspace<T>) -> &'w [T] {
        ws.prepare(self, batch);
        self.run_forward(ws);
        ws.output()
    }

    fn run_forward(&self, ws: &mut Workspace<T>) {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = ws.activations.split_at_mut(l + 1);
            layer.forward(&done[l], &mut rest[0], ws.batch, l != last);
        }
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the network output is `d_output` (`batch × outputs`), using
    /// the activations left in `ws` by the preceding forward pass.
    pub fn backward(&self, ws: &mut Workspace<T>, d_output: &[T], grads: &mut Gradients<T>) {
        let batch = ws.batch;
        ws.delta[..d_output.len()].copy_from_slice(d_output);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let grad = &mut grads.layers[l];
            let (o, n) = (layer.outputs, layer.inputs);
            let input = &ws.activations[l];
            let delta = &ws.delta[..batch * o];
            for d in delta.chunks_exact(o) {
                axpy(&mut grad.biases, T::one(), d);
            }
            // dWᵀ += δᵀ·x
            cm_mut(&mut grad.weights, o, n).gemm(T::one(), &cm(delta, o, batch), &rm(input, batch, n), T::one());
            if l == 0 {
                break;
            }
            // δ_prevᵀ = W·δᵀ, masked by the rectifier of the layer below: its
            // output `input` is positive exactly where the derivative is one.
            let prev = &mut ws.delta_prev[..batch * n];
            // nalgebra's small-matrix fallback needs unit row stride on the
            // left operand, so W goes in as an owned column-major copy.
            let w = cm(&layer.weights, o, n).transpose();
            cm_mut(prev, n, batch).gemm(T::one(), &w, &cm(delta, o, batch), T::zero());
            for (d, &a) in prev.iter_mut().zip(&input[..batch * n]) {
                if a <= T::zero() {
                    *d = T::zero();
                }
            }
            core::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }

    /// Mean squared error between `Q(obs)[action]` and `target` over the
    /// batch, and its gradient with respect to every parameter.
    pub fn gradients(&self, batch: &[(&[T], usize, T)]) -> Result<(T, Gradients<T>)> {
        if batch.is_empty() {
            return Err(Error::ShapeMismatch { expected: 1, actual: 0 });
        }
        let n = self.input_len();
        let mut input = Vec::with_capacity(batch.len() * n);
        for (obs, action, _) in batch {
            if obs.len() != n {
                return Err(Error::ShapeMismatch { expected: n, actual: obs.len() });
            }
            if *action >= self.output_len() {
                return Err(Error::IndexOutOfRange {
                    index: *action,
                    len: self.output_len(),
                });
            }
            input.extend_from_slice(obs);
        }
        let actions: Vec<usize> = batch.iter().map(|b| b.1).collect();
        let targets: Vec<T> = batch.iter().map(|b| b.2).collect();
        let mut ws = Workspace::new();
        ws.prepare(self, batch.len());
        ws.input_mut().copy_from_slice(&input);
        let mut grads = self.zero_gradients();
        let loss = self.mse_gradients(&mut ws, &actions, &targets, &mut grads);
        Ok((loss, grads))
    }

    /// Runs the forward pass on the input in `ws`, then overwrites `grads`.
    pub(crate) fn mse_gradients(&self, ws: &mut Workspace<T>, actions: &[usize], targets: &[T], grads: &mut Gradients<T>) -> T {
        let batch = actions.len();
        let out = self.output_len();
        let q = self.forward_in_place(batch, ws).to_vec();
        let scale = T::from_f64(2.0 / batch as f64);
        let mut d_output = vec![T::zero(); batch * out];
        let mut loss = T::zero();
        for (r, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let err = q[r * out + a] - y;
            loss += err * err;
            d_output[r * out + a] = scale * err;
        }
        grads.clear();
        self.backward(ws, &d_output, grads);
        loss / T::from_f64(batch as f64)
    }

    /// Plain gradient descent: θ ← θ − α·g.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, alpha: T) {
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            axpy(&mut layer.weights, -alpha, &grad.weights);
            axpy(&mut layer.biases, -alpha, &grad.biases);
        }
    }
}
