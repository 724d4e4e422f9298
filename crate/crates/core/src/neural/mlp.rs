use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NeuralError, TrainConfig};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Logistic,
}

const ROUND_MAGIC: f64 = 6755399441055744.0;
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

/// `exp(y)` for `y` in `[0, 41]`: Cody-Waite reduction by `ln 2` and a
/// degree-12 Taylor polynomial, branch-free so batch loops vectorize.
#[inline(always)]
fn exp_nonnegative(y: f64) -> f64 {
    let t = y * std::f64::consts::LOG2_E + ROUND_MAGIC;
    let k = t - ROUND_MAGIC;
    let exponent = t.to_bits() & 0xffff_ffff;
    let r = (y - k * LN2_HI) - k * LN2_LO;
    const INV_FACT: [f64; 13] = [
        1.0,
        1.0,
        1.0 / 2.0,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5040.0,
        1.0 / 40320.0,
        1.0 / 362880.0,
        1.0 / 3628800.0,
        1.0 / 39916800.0,
        1.0 / 479001600.0,
    ];
    let mut p = INV_FACT[12];
    for c in INV_FACT[..12].iter().rev() {
        p = p * r + c;
    }
    p * f64::from_bits((exponent + 1023) << 52)
}

/// Hyperbolic tangent, within 2.3e-16 absolute of `f64::tanh`.
#[inline(always)]
pub(crate) fn tanh(x: f64) -> f64 {
    // tanh saturates to 1.0 in double precision well before |x| = 20.
    let e = exp_nonnegative(2.0 * x.abs().min(20.0));
    (1.0 - 2.0 / (e + 1.0)).copysign(x)
}

impl Activation {
    #[inline(always)]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(z),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "logistic" => Some(Activation::Logistic),
            _ => None,
        }
    }
}

/// Shape of a fully connected network with a linear output layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_layers: Vec<usize>, output_dim: usize) -> Self {
        MlpArchitecture {
            input_dim,
            hidden_layers,
            output_dim,
            hidden_activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers.contains(&0) {
            return Err(NeuralError::InvalidArchitecture(format!("{self:?}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 1);
        let mut prev = self.input_dim;
        for &h in self.hidden_layers.iter().chain(std::iter::once(&self.output_dim)) {
            dims.push((prev, h));
            prev = h;
        }
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Trained (or freshly initialized) network parameters.
///
/// Parameters are stored flat, layer by layer: the row-major
/// `fan_in x fan_out` weight matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: MlpArchitecture,
    params: Vec<f64>,
}

impl Mlp {
    pub fn from_params(arch: MlpArchitecture, params: Vec<f64>) -> Result<Self, NeuralError> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(NeuralError::DimensionMismatch {
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NeuralError::NonFinite);
        }
        Ok(Mlp { arch, params })
    }

    /// Uniform initialization in `[-init_scale, init_scale]` from the
    /// config's seed.
    pub fn init(arch: MlpArchitecture, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
        let s = cfg.init_scale;
        let params = (0..arch.param_count())
            .map(|_| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 })
            .collect();
        Mlp { arch, params }
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if x.len() != self.arch.input_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        let input = ArrayView2::from_shape((1, x.len()), x).expect("row shape");
        Ok(self.forward_batch(input)?.into_raw_vec_and_offset().0)
    }

    /// Evaluates every row of `inputs`.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        if inputs.ncols() != self.arch.input_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.arch.input_dim,
                got: inputs.ncols(),
            });
        }
        Ok(forward_pass(&self.arch, &self.params, inputs).output)
    }
}

struct LayerView<'a> {
    weights: ArrayView2<'a, f64>,
    bias: ArrayView1<'a, f64>,
}

fn layer_views<'a>(arch: &MlpArchitecture, params: &'a [f64]) -> Vec<LayerView<'a>> {
    let mut offset = 0;
    arch.layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let w = &params[offset..offset + fan_in * fan_out];
            offset += fan_in * fan_out;
            let b = &params[offset..offset + fan_out];
            offset += fan_out;
            LayerView {
                weights: ArrayView2::from_shape((fan_in, fan_out), w).expect("layer shape"),
                bias: ArrayView1::from(b),
            }
        })
        .collect()
}

fn layer_views_mut<'a>(
    arch: &MlpArchitecture,
    params: &'a mut [f64],
) -> Vec<(ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>)> {
    let mut out = Vec::new();
    let mut rest = params;
    for (fan_in, fan_out) in arch.layer_dims() {
        let (w, tail) = rest.split_at_mut(fan_in * fan_out);
        let (b, tail) = tail.split_at_mut(fan_out);
        rest = tail;
        out.push((
            ArrayViewMut2::from_shape((fan_in, fan_out), w).expect("layer shape"),
            ArrayViewMut1::from(b),
        ));
    }
    out
}

struct ForwardPass {
    /// Post-activation outputs of each hidden layer.
    hidden: Vec<Array2<f64>>,
    output: Array2<f64>,
}

fn forward_pass(arch: &MlpArchitecture, params: &[f64], inputs: ArrayView2<f64>) -> ForwardPass {
    let layers = layer_views(arch, params);
    let n = inputs.nrows();
    let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(layers.len() - 1);
    let last = layers.len() - 1;
    let mut output = Array2::zeros((0, 0));
    for (l, layer) in layers.iter().enumerate() {
        let prev = if l == 0 { inputs } else { hidden[l - 1].view() };
        let mut z = Array2::zeros((n, layer.bias.len()));
        general_mat_mul(1.0, &prev, &layer.weights, 0.0, &mut z);
        z += &layer.bias;
        if l == last {
            output = z;
        } else {
            match arch.hidden_activation {
                Activation::Tanh => z.iter_mut().for_each(|v| *v = tanh(*v)),
                act => z.mapv_inplace(|v| act.apply(v)),
            }
            hidden.push(z);
        }
    }
    ForwardPass { hidden, output }
}

/// Mean squared error over samples and output components, and its gradient
/// with respect to the flat parameter vector.
pub fn loss_and_gradient(
    arch: &MlpArchitecture,
    params: &[f64],
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    grad: &mut [f64],
) -> f64 {
    let n = inputs.nrows();
    let pass = forward_pass(arch, params, inputs);
    let mut delta = pass.output - &targets;
    let denom = (n * arch.output_dim) as f64;
    let loss = delta.iter().map(|d| d * d).sum::<f64>() / denom;
    delta.mapv_inplace(|d| 2.0 * d / denom);

    let layers = layer_views(arch, params);
    let mut grads = layer_views_mut(arch, grad);
    for l in (0..layers.len()).rev() {
        let prev = if l == 0 { inputs } else { pass.hidden[l - 1].view() };
        let (gw, gb) = &mut grads[l];
        general_mat_mul(1.0, &prev.t(), &delta, 0.0, gw);
        gb.assign(&delta.sum_axis(Axis(0)));
        if l > 0 {
            let mut back = delta.dot(&layers[l].weights.t());
            let act = arch.hidden_activation;
            ndarray::Zip::from(&mut back)
                .and(&pass.hidden[l - 1])
                .for_each(|b, &a| *b *= act.derivative_from_output(a));
            delta = back;
        }
    }
    loss
}

/// Convenience wrapper returning a fresh gradient vector.
pub fn mlp_loss_grad(net: &Mlp, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> (f64, Array1<f64>) {
    let mut grad = vec![0.0; net.params.len()];
    let loss = loss_and_gradient(&net.arch, &net.params, inputs, targets, &mut grad);
    (loss, Array1::from(grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(seed: u64, scale: f64) -> TrainConfig {
        TrainConfig {
            init_seed: seed,
            init_scale: scale,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn fast_tanh_matches_std() {
        let mut worst: f64 = 0.0;
        for i in -300_000..=300_000 {
            let x = i as f64 / 10_000.0;
            worst = worst.max((tanh(x) - x.tanh()).abs());
        }
        assert!(worst <= 2.5e-16, "{worst:e}");
        assert_eq!(tanh(0.0), 0.0);
        assert_eq!(tanh(1e3), 1.0);
        assert_eq!(tanh(-1e3), -1.0);
    }

    #[test]
    fn parameter_count_shape_arithmetic() {
        let arch = MlpArchitecture::new(7, vec![10, 10], 2);
        assert_eq!(arch.param_count(), 7 * 10 + 10 + 10 * 10 + 10 + 10 * 2 + 2);
        assert_eq!(arch.param_count(), 212);
    }

    #[test]
    fn init_is_reproducible_and_bounded() {
        let arch = MlpArchitecture::new(4, vec![5], 2);
        let a = Mlp::init(arch.clone(), &cfg(9, 0.3));
        let b = Mlp::init(arch.clone(), &cfg(9, 0.3));
        assert_eq!(a, b);
        assert!(a.params().iter().all(|p| p.abs() <= 0.3));
        assert_ne!(a, Mlp::init(arch, &cfg(10, 0.3)));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::init(MlpArchitecture::new(3, vec![4, 4], 2), &cfg(1, 0.0));
        assert_eq!(net.forward(&[0.3, -1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let net = Mlp::init(MlpArchitecture::new(3, vec![4], 2), &cfg(1, 0.1));
        assert_eq!(
            net.forward(&[1.0, 2.0]),
            Err(NeuralError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn hand_set_single_hidden_unit() {
        // 2 -> 1 (tanh) -> 2, all weights chosen by hand.
        let arch = MlpArchitecture::new(2, vec![1], 2);
        // W1 = [[1],[2]], b1 = [0.5]; W2 = [[3, -1]], b2 = [0.25, 1]
        let net = Mlp::from_params(arch, vec![1.0, 2.0, 0.5, 3.0, -1.0, 0.25, 1.0]).unwrap();
        let h = (0.2f64 * 1.0 + 0.1 * 2.0 + 0.5).tanh();
        let out = net.forward(&[0.2, 0.1]).unwrap();
        assert_eq!(out, vec![3.0 * h + 0.25, -h + 1.0]);
    }

    #[test]
    fn batched_equals_looped() {
        let net = Mlp::init(MlpArchitecture::new(3, vec![6, 5], 2), &cfg(4, 0.8));
        let x = array![[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.0, 0.0, 0.0], [3.0, -2.0, 1.0]];
        let batched = net.forward_batch(x.view()).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            let single = net.forward(row.as_slice().unwrap()).unwrap();
            for j in 0..2 {
                assert!((single[j] - batched[[i, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn loss_is_zero_at_targets() {
        let net = Mlp::init(MlpArchitecture::new(2, vec![3], 2), &cfg(2, 0.5));
        let x = array![[0.1, 0.2], [0.7, -0.4]];
        let y = net.forward_batch(x.view()).unwrap();
        let (loss, grad) = mlp_loss_grad(&net, x.view(), y.view());
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn doubling_targets_quadruples_loss_of_zero_net() {
        let net = Mlp::init(MlpArchitecture::new(2, vec![3], 2), &cfg(2, 0.0));
        let x = array![[0.1, 0.2], [0.7, -0.4], [1.0, 1.0]];
        let y = array![[1.0, -2.0], [0.5, 0.25], [3.0, 1.0]];
        let (l1, _) = mlp_loss_grad(&net, x.view(), y.view());
        let (l2, _) = mlp_loss_grad(&net, x.view(), (&y * 2.0).view());
        assert!((l2 - 4.0 * l1).abs() < 1e-12);
    }
}
