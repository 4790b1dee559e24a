use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

/// Fully connected layer, `out = in . weights + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[inputs, outputs]`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Feed-forward ReLU network with a softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// He-uniform initialization for every layer.
    pub fn init<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights =
                    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit));
                Dense {
                    weights,
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    /// Layer activations; the last entry holds logits.
    pub(crate) fn activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { acts[i - 1].view() };
            let mut z = input.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Class probabilities, one row per input.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut logits = self.activations(x).pop().expect("network has layers");
        softmax_rows(&mut logits);
        logits
    }
}

pub(crate) fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Momentum-SGD state mirroring the network's parameters.
pub(crate) struct Velocity {
    layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Velocity {
    pub(crate) fn zeros(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros(l.weights.raw_dim()),
                        Array1::zeros(l.bias.len()),
                    )
                })
                .collect(),
        }
    }
}

pub(crate) struct StepParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// One gradient step on a mini-batch with (soft) targets and per-example
/// weights. Returns the weighted mean cross-entropy of the batch before the
/// update.
pub(crate) fn train_step(
    net: &mut Mlp,
    velocity: &mut Velocity,
    x: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    example_weights: &Array1<f64>,
    params: &StepParams,
) -> f64 {
    let n = x.nrows() as f64;
    let mut acts = net.activations(x);
    let mut delta = acts.pop().expect("network has layers");
    // log-softmax for the loss, probabilities for the gradient
    let mut loss = 0.0;
    for ((mut row, t), &w) in delta
        .axis_iter_mut(Axis(0))
        .zip(targets.axis_iter(Axis(0)))
        .zip(example_weights)
    {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss -= w * row
            .iter()
            .zip(t)
            .filter(|(_, &tc)| tc > 0.0)
            .map(|(&z, &tc)| tc * (z - lse))
            .sum::<f64>();
        Zip::from(&mut row).and(&t).for_each(|z, &tc| {
            *z = w * ((*z - lse).exp() - tc) / n;
        });
    }

    for i in (0..net.layers.len()).rev() {
        let input = if i == 0 { x } else { acts[i - 1].view() };
        let grad_w = input.t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut back = delta.dot(&net.layers[i].weights.t());
            Zip::from(&mut back).and(&acts[i - 1]).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
        let layer = &mut net.layers[i];
        let (vw, vb) = &mut velocity.layers[i];
        Zip::from(&mut *vw)
            .and(&mut layer.weights)
            .and(&grad_w)
            .for_each(|v, w, &g| {
                *v = params.momentum * *v - params.learning_rate * (g + params.weight_decay * *w);
                *w += *v;
            });
        Zip::from(&mut *vb)
            .and(&mut layer.bias)
            .and(&grad_b)
            .for_each(|v, b, &g| {
                *v = params.momentum * *v - params.learning_rate * g;
                *b += *v;
            });
    }
    loss / n
}
