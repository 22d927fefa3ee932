//! Fully connected tanh networks with batched forward and reverse-mode passes.

use nalgebra::SMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Hidden layer widths shared by the two- and three-body kernels.
pub const HIDDEN_WIDTHS: [usize; 4] = [64, 256, 128, 64];
/// Output width: a 3 x 6 block, row-major.
pub const OUTPUT_WIDTH: usize = 18;
pub const TWO_BODY_INPUT: usize = 3;
pub const THREE_BODY_INPUT: usize = 6;

pub type Block3x6 = SMatrix<f64, 3, 6>;

/// Dense affine layer; `weights` is `inputs x outputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.random_range(-limit..=limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }
}

/// Multilayer perceptron: tanh on hidden layers, identity on the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(Error::Shape(format!("layer {l} buffers do not match {}x{}", layer.inputs, layer.outputs)));
            }
            if l > 0 && layers[l - 1].outputs != layer.inputs {
                return Err(Error::Shape(format!(
                    "layer {l} expects {} inputs but layer {} emits {}",
                    layer.inputs,
                    l - 1,
                    layers[l - 1].outputs
                )));
            }
            if !layer.weights.iter().chain(&layer.bias).all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {l} parameters")));
            }
        }
        Ok(Self { layers })
    }

    fn widths_to_layers(widths: &[usize], mut make: impl FnMut(usize, usize) -> Layer) -> Self {
        Self {
            layers: widths.windows(2).map(|w| make(w[0], w[1])).collect(),
        }
    }

    pub fn zeros(widths: &[usize]) -> Self {
        Self::widths_to_layers(widths, Layer::zeros)
    }

    pub fn glorot<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        Self::widths_to_layers(widths, |i, o| Layer::glorot(i, o, rng))
    }

    /// Layer widths for a kernel with the given input width.
    pub fn kernel_widths(input: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(HIDDEN_WIDTHS);
        w.push(OUTPUT_WIDTH);
        w
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_width()];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in a fixed order: per layer, weights then bias.
    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Human-readable location of flat parameter `index`.
    pub fn parameter_path(&self, mut index: usize) -> String {
        for (l, layer) in self.layers.iter().enumerate() {
            if index < layer.weights.len() {
                return format!("layer{l}.weights[{},{}]", index / layer.outputs, index % layer.outputs);
            }
            index -= layer.weights.len();
            if index < layer.bias.len() {
                return format!("layer{l}.bias[{index}]");
            }
            index -= layer.bias.len();
        }
        format!("out-of-range[{index}]")
    }

    pub fn fill(&mut self, value: f64) {
        self.parameters_mut().for_each(|p| *p = value);
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.widths() == other.widths()
    }

    /// Single evaluation, reshaped into a 3 x 6 block.
    pub fn forward(&self, input: &[f64]) -> Result<Block3x6> {
        if input.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "input has width {}, network expects {}",
                input.len(),
                self.input_width()
            )));
        }
        if self.output_width() != OUTPUT_WIDTH {
            return Err(Error::Shape(format!("network emits {} values, not 18", self.output_width())));
        }
        let mut cache = ForwardCache::default();
        let out = self.forward_batch(input, 1, &mut cache);
        Ok(Block3x6::from_row_slice(out))
    }

    /// Evaluates `rows` inputs stored row-major in `input`; returns the `rows x outputs`
    /// output. Intermediate activations stay in `cache` for a backward pass.
    pub fn forward_batch<'c>(&self, input: &[f64], rows: usize, cache: &'c mut ForwardCache) -> &'c [f64] {
        debug_assert_eq!(input.len(), rows * self.input_width());
        cache.prepare(self, rows);
        cache.acts[0].copy_from_slice(input);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = cache.acts.split_at_mut(l + 1);
            let x = &before[l];
            let z = &mut after[0];
            for row in z.chunks_exact_mut(layer.outputs) {
                row.copy_from_slice(&layer.bias);
            }
            gemm(rows, layer.inputs, layer.outputs, x, Trans::No, &layer.weights, Trans::No, z, 1.0);
            if l != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        &cache.acts[last + 1]
    }

    /// Accumulates parameter gradients into `grads` given the gradient of a scalar
    /// objective with respect to the batched outputs of the last `forward_batch`.
    pub fn backward_batch(&self, cache: &mut ForwardCache, rows: usize, d_out: &[f64], grads: &mut Mlp) {
        debug_assert!(self.same_shape(grads));
        debug_assert_eq!(d_out.len(), rows * self.output_width());
        let ForwardCache { acts, delta, scratch } = cache;
        delta.clear();
        delta.extend_from_slice(d_out);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let x = &acts[l];
            // dW += x^T delta
            gemm(layer.inputs, rows, layer.outputs, x, Trans::Yes, delta, Trans::No, &mut g.weights, 1.0);
            for row in delta.chunks_exact(layer.outputs) {
                for (b, d) in g.bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta W^T) * (1 - x^2), x being the tanh output feeding this layer
            scratch.clear();
            scratch.resize(rows * layer.inputs, 0.0);
            gemm(rows, layer.outputs, layer.inputs, delta, Trans::No, &layer.weights, Trans::Yes, scratch, 0.0);
            for (s, a) in scratch.iter_mut().zip(x.iter()) {
                *s *= 1.0 - a * a;
            }
            std::mem::swap(delta, scratch);
        }
    }
}

/// Reusable activation storage for batched passes.
#[derive(Debug, Default, Clone)]
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    scratch: Vec<f64>,
}

impl ForwardCache {
    fn prepare(&mut self, mlp: &Mlp, rows: usize) {
        let widths = mlp.widths();
        self.acts.resize_with(widths.len(), Vec::new);
        for (a, w) in self.acts.iter_mut().zip(widths) {
            a.resize(rows * w, 0.0);
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Trans {
    No,
    Yes,
}

/// `c = a * b + beta * c` with `a: m x k`, `b: k x n`, `c: m x n`, all row-major
/// in storage; `Trans::Yes` reads the stored matrix as its transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: Trans, b: &[f64], tb: Trans, c: &mut [f64], beta: f64) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = match ta {
        Trans::No => (k as isize, 1),
        Trans::Yes => (1, m as isize),
    };
    let (rsb, csb) = match tb {
        Trans::No => (n as isize, 1),
        Trans::Yes => (1, k as isize),
    };
    // SAFETY: bounds asserted above; strides describe dense row-major storage.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
