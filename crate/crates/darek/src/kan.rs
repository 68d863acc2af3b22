//! Kolmogorov-Arnold networks: layers whose edges are 1-D splines, forward
//! evaluation with intermediate traces, and full-batch gradient training.

use crate::error::Error;
use crate::poly::KnotSet;
use crate::spline::{ExtendedKnotVector, Spline1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One layer: an `n_out x n_in` grid of edge splines. Unit `i` of the output
/// is the sum over `j` of `edge(i, j)` applied to input component `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KanLayer {
    n_in: usize,
    n_out: usize,
    /// Row-major `[out][in]`.
    edge_splines: Vec<Spline1D>,
}

impl KanLayer {
    pub fn new(n_in: usize, n_out: usize, edge_splines: Vec<Spline1D>) -> Result<Self, Error> {
        if edge_splines.len() != n_in * n_out {
            return Err(Error::ShapeMismatch {
                context: "layer edge grid",
                expected: n_in * n_out,
                actual: edge_splines.len(),
            });
        }
        Ok(Self {
            n_in,
            n_out,
            edge_splines,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn edge(&self, out_unit: usize, in_unit: usize) -> &Spline1D {
        &self.edge_splines[out_unit * self.n_in + in_unit]
    }

    pub fn edge_mut(&mut self, out_unit: usize, in_unit: usize) -> &mut Spline1D {
        &mut self.edge_splines[out_unit * self.n_in + in_unit]
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_out];
        for i in 0..self.n_out {
            for (j, &x) in input.iter().enumerate() {
                out[i] += self.edge(i, j).eval(x);
            }
        }
        out
    }
}

/// Intermediate values of a forward pass: `values[0]` is the input, the last
/// entry is the network output.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub values: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("trace always has the input entry")
    }
}

/// Training hyperparameters. The seed and init scale drive coefficient
/// initialization in [`NetworkPlan::build`]; epochs and learning rate drive
/// the gradient loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1.0,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

/// Training data: input vectors with target vectors.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self, Error> {
        if inputs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if inputs.len() != targets.len() {
            return Err(Error::ShapeMismatch {
                context: "dataset rows",
                expected: inputs.len(),
                actual: targets.len(),
            });
        }
        Ok(Self { inputs, targets })
    }

    /// Scalar-input, scalar-output convenience.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self, Error> {
        let inputs = xs.iter().map(|&x| vec![x]).collect();
        let targets = ys.iter().map(|&y| vec![y]).collect();
        Self::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty input
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }
}

/// Architecture plus knot placement; [`build`](Self::build) turns it into an
/// initialized network.
#[derive(Debug, Clone)]
pub struct NetworkPlan {
    /// Unit counts per layer boundary: `[n_0, n_1, ..., n_L]`.
    pub arch: Vec<usize>,
    pub order: usize,
    /// Interior knots for the first layer's edges, one set per input dim.
    pub input_knots: Vec<KnotSet>,
    /// Interior knot count for hidden-layer edges.
    pub hidden_knot_count: usize,
}

impl NetworkPlan {
    /// Builds the network: seeded uniform coefficients in
    /// `[-init_scale, init_scale]`, hidden-layer knot ranges calibrated by
    /// propagating `inputs` through the already-initialized earlier layers
    /// and covering the observed range with a 10% margin.
    pub fn build(&self, inputs: &[Vec<f64>], cfg: &TrainConfig) -> Result<KanNetwork, Error> {
        if self.arch.len() < 2 {
            return Err(Error::ShapeMismatch {
                context: "architecture",
                expected: 2,
                actual: self.arch.len(),
            });
        }
        if self.input_knots.len() != self.arch[0] {
            return Err(Error::ShapeMismatch {
                context: "input knot sets",
                expected: self.arch[0],
                actual: self.input_knots.len(),
            });
        }
        if self.hidden_knot_count < 2 {
            return Err(Error::InsufficientKnots {
                required: 2,
                actual: self.hidden_knot_count,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut layers: Vec<KanLayer> = Vec::with_capacity(self.arch.len() - 1);
        // current images of the training inputs under the layers built so far
        let mut images: Vec<Vec<f64>> = inputs.to_vec();
        for l in 0..self.arch.len() - 1 {
            let (n_in, n_out) = (self.arch[l], self.arch[l + 1]);
            let mut edges = Vec::with_capacity(n_in * n_out);
            for _out in 0..n_out {
                for j in 0..n_in {
                    let kv = if l == 0 {
                        ExtendedKnotVector::clamped(self.input_knots[j].clone(), self.order)
                    } else {
                        let (lo, hi) = observed_range(&images, j);
                        ExtendedKnotVector::clamped(
                            uniform_knots(lo, hi, self.hidden_knot_count),
                            self.order,
                        )
                    };
                    let coeffs: Vec<f64> = (0..kv.basis_len())
                        .map(|_| rng.gen_range(-cfg.init_scale..=cfg.init_scale))
                        .collect();
                    edges.push(Spline1D::new(kv, coeffs)?);
                }
            }
            let layer = KanLayer::new(n_in, n_out, edges)?;
            images = images.iter().map(|x| layer.forward(x)).collect();
            layers.push(layer);
        }
        KanNetwork::new(layers)
    }
}

/// Minimum width of a hidden layer's knot range. Freshly initialized layers
/// emit values in a sliver around zero; knots spread only over that sliver
/// make the next layer's basis derivatives enormous and training unstable.
const MIN_HIDDEN_SPAN: f64 = 2.0;

/// Observed min/max of component `j` widened by a 10% margin and floored at
/// [`MIN_HIDDEN_SPAN`], centered on the observed values.
fn observed_range(images: &[Vec<f64>], j: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in images {
        lo = lo.min(row[j]);
        hi = hi.max(row[j]);
    }
    let span = hi - lo;
    if span < MIN_HIDDEN_SPAN {
        let center = 0.5 * (lo + hi);
        (center - 0.5 * MIN_HIDDEN_SPAN, center + 0.5 * MIN_HIDDEN_SPAN)
    } else {
        (lo - 0.1 * span, hi + 0.1 * span)
    }
}

fn uniform_knots(lo: f64, hi: f64, count: usize) -> KnotSet {
    let knots: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    KnotSet::new(knots).expect("uniform knots over a positive span are valid")
}

/// Seeded draw of `count` knot abscissae from `samples` without replacement,
/// always keeping the two extremes. Input must be sorted ascending.
pub fn select_knots(samples: &[f64], count: usize, seed: u64) -> Vec<f64> {
    assert!(count >= 2, "need at least the two extreme knots");
    assert!(
        count <= samples.len(),
        "cannot select {count} knots from {} samples",
        samples.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interior: Vec<usize> = (1..samples.len() - 1).collect();
    // Fisher-Yates prefix draw
    for i in 0..count.saturating_sub(2).min(interior.len()) {
        let pick = rng.gen_range(i..interior.len());
        interior.swap(i, pick);
    }
    let mut chosen: Vec<f64> = vec![samples[0], samples[samples.len() - 1]];
    chosen.extend(interior.iter().take(count - 2).map(|&i| samples[i]));
    chosen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    chosen
}

/// The network: an ordered stack of spline layers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
}

impl KanNetwork {
    pub fn new(layers: Vec<KanLayer>) -> Result<Self, Error> {
        if layers.is_empty() {
            return Err(Error::EmptyInput);
        }
        for pair in layers.windows(2) {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(Error::ShapeMismatch {
                    context: "consecutive layer widths",
                    expected: pair[0].n_out(),
                    actual: pair[1].n_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_out(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out()
    }

    /// Forward pass recording every intermediate layer value.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardTrace), Error> {
        if x.len() != self.n_in() {
            return Err(Error::ShapeMismatch {
                context: "network input",
                expected: self.n_in(),
                actual: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(values.last().unwrap());
            values.push(next);
        }
        let out = values.last().unwrap().clone();
        Ok((out, ForwardTrace { values }))
    }

    /// Forward pass without keeping the trace.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if x.len() != self.n_in() {
            return Err(Error::ShapeMismatch {
                context: "network input",
                expected: self.n_in(),
                actual: x.len(),
            });
        }
        let mut current = x.to_vec();
        for layer in &self.layers {
            current = layer.forward(&current);
        }
        Ok(current)
    }

    /// Scalar-output convenience.
    pub fn predict_scalar(&self, x: &[f64]) -> Result<f64, Error> {
        let out = self.predict(x)?;
        Ok(out[0])
    }

    /// Total number of spline coefficients.
    pub fn coefficient_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.edge_splines.iter())
            .map(|s| s.coeffs().len())
            .sum()
    }

    /// All coefficients flattened: layer-major, then output-major, then
    /// input-major, then basis index.
    pub fn coefficients(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.edge_splines.iter())
            .flat_map(|s| s.coeffs().iter().copied())
            .collect()
    }

    pub fn set_coefficients(&mut self, flat: &[f64]) -> Result<(), Error> {
        if flat.len() != self.coefficient_count() {
            return Err(Error::ShapeMismatch {
                context: "flattened coefficients",
                expected: self.coefficient_count(),
                actual: flat.len(),
            });
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for spline in &mut layer.edge_splines {
                let n = spline.coeffs().len();
                spline.coeffs_mut().copy_from_slice(&flat[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    /// Mean squared error over the dataset (mean over samples, summed over
    /// output components).
    pub fn mse_loss(&self, data: &Dataset) -> Result<f64, Error> {
        let mut total = 0.0;
        for (x, y) in data.inputs().iter().zip(data.targets()) {
            let out = self.predict(x)?;
            if out.len() != y.len() {
                return Err(Error::ShapeMismatch {
                    context: "target width",
                    expected: out.len(),
                    actual: y.len(),
                });
            }
            total += out
                .iter()
                .zip(y)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>();
        }
        Ok(total / data.len() as f64)
    }

    /// Gradient of the mean squared error with respect to every coefficient,
    /// flattened in [`coefficients`](Self::coefficients) order.
    pub fn mse_gradient(&self, data: &Dataset) -> Result<Vec<f64>, Error> {
        Ok(self.loss_and_gradient(data)?.1)
    }

    fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>), Error> {
        let mut grad = vec![0.0; self.coefficient_count()];
        // flat offset of each layer's coefficient block
        let mut layer_offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            layer_offsets.push(acc);
            acc += layer
                .edge_splines
                .iter()
                .map(|s| s.coeffs().len())
                .sum::<usize>();
        }
        let scale = 2.0 / data.len() as f64;
        let mut loss = 0.0;
        for (x, y) in data.inputs().iter().zip(data.targets()) {
            let (out, trace) = self.forward(x)?;
            if out.len() != y.len() {
                return Err(Error::ShapeMismatch {
                    context: "target width",
                    expected: out.len(),
                    actual: y.len(),
                });
            }
            loss += out
                .iter()
                .zip(y)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>()
                / data.len() as f64;
            // upstream = dLoss/d(layer output), starting at the network output
            let mut upstream: Vec<f64> = out.iter().zip(y).map(|(o, t)| scale * (o - t)).collect();
            for (l, layer) in self.layers.iter().enumerate().rev() {
                let input = &trace.values[l];
                let mut downstream = vec![0.0; layer.n_in()];
                let mut edge_offset = layer_offsets[l];
                for i in 0..layer.n_out() {
                    for (j, &u) in input.iter().enumerate() {
                        let spline = layer.edge(i, j);
                        let kv = spline.knot_vector();
                        let (first, window) = kv.active_basis(u);
                        for (b, &w) in window.iter().enumerate() {
                            grad[edge_offset + first + b] += upstream[i] * w;
                        }
                        downstream[j] += upstream[i] * spline.derivative(u);
                        edge_offset += spline.coeffs().len();
                    }
                }
                upstream = downstream;
            }
        }
        Ok((loss, grad))
    }

    /// Full-batch gradient descent on the mean squared error. Returns the
    /// loss measured at the start of each epoch. The network is untouched
    /// when `epochs` is zero.
    pub fn train(&mut self, data: &Dataset, cfg: &TrainConfig) -> Result<Vec<f64>, Error> {
        let all = vec![true; self.layers.len()];
        self.train_layers(data, cfg, &all)
    }

    /// Gradient descent updating only the layers flagged in `trainable`.
    pub fn train_layers(
        &mut self,
        data: &Dataset,
        cfg: &TrainConfig,
        trainable: &[bool],
    ) -> Result<Vec<f64>, Error> {
        if trainable.len() != self.layers.len() {
            return Err(Error::ShapeMismatch {
                context: "trainable mask",
                expected: self.layers.len(),
                actual: trainable.len(),
            });
        }
        let mut history = Vec::with_capacity(cfg.epochs);
        // flat range of each layer's coefficients, for masking
        let mut ranges = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            let len: usize = layer.edge_splines.iter().map(|s| s.coeffs().len()).sum();
            ranges.push(acc..acc + len);
            acc += len;
        }
        for epoch in 0..cfg.epochs {
            let (loss, grad) = self.loss_and_gradient(data)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            history.push(loss);
            let mut flat = self.coefficients();
            for (range, &on) in ranges.iter().zip(trainable) {
                if on {
                    for idx in range.clone() {
                        flat[idx] -= cfg.learning_rate * grad[idx];
                    }
                }
            }
            self.set_coefficients(&flat)?;
        }
        Ok(history)
    }

    /// JSON document with layer sizes, knot vectors, and coefficients;
    /// round-trips value-exactly.
    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let net: KanNetwork = serde_json::from_str(text)?;
        // revalidate structural invariants after deserialization
        KanNetwork::new(net.layers)
    }
}
