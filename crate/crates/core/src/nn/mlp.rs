use ndarray::{Array1, Array2, Axis, Zip};

use crate::error::{Error, Result};
use crate::rng::{derive_key, KeyedRng};

/// One affine layer; `w` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// A ReLU multilayer perceptron with a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.w.nrows()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let layers = dims
            .windows(2)
            .map(|p| Layer {
                w: Array2::zeros((p[1], p[0])),
                b: Array1::zeros(p[1]),
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.dims())
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.w.dim() == b.w.dim() && a.b.len() == b.b.len())
    }

    pub fn check_same_shape(&self, other: &MlpParams, context: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: other.n_params(),
                context,
            })
        }
    }

    /// All parameters, layer by layer, weights (row-major) then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut it = flat.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|v| *v = *it.next().unwrap());
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().chain(l.b.iter()).map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w.mapv_inplace(|v| v * s);
            l.b.mapv_inplace(|v| v * s);
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &MlpParams) {
        for (l, o) in self.layers.iter_mut().zip(&other.layers) {
            l.w.scaled_add(a, &o.w);
            l.b.scaled_add(a, &o.b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights from the stream `("init", seed)`, zero biases.
pub fn init_mlp(dims: &[usize], seed: u64) -> Result<MlpParams> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::invalid(format!(
            "need at least two positive layer sizes, got {dims:?}"
        )));
    }
    let mut rng = KeyedRng::new("init", &[seed]);
    let mut p = MlpParams::zeros(dims);
    for l in &mut p.layers {
        let (out, inp) = l.w.dim();
        let a = (6.0 / (inp + out) as f64).sqrt();
        l.w.iter_mut().for_each(|v| *v = rng.uniform_range(-a, a));
    }
    Ok(p)
}

/// Inverted dropout after every hidden ReLU, masks drawn from `("dropout", key, layer)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub p: f64,
    pub key: u64,
}

impl Dropout {
    pub fn new(p: f64, key: u64) -> Self {
        Self { p, key }
    }

    fn mask(&self, layer: usize, shape: (usize, usize)) -> Option<Array2<f64>> {
        if self.p <= 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - self.p);
        let mut rng = KeyedRng::new("dropout", &[self.key, layer as u64]);
        Some(Array2::from_shape_simple_fn(shape, || {
            if rng.uniform() < self.p {
                0.0
            } else {
                keep
            }
        }))
    }
}

/// Mask key for training step `step` of epoch `epoch`.
pub fn train_dropout_key(member_seed: u64, epoch: usize, step: usize) -> u64 {
    derive_key(&[0x7472_6169_6e, member_seed, epoch as u64, step as u64])
}

/// Mask key for inference pass `pass`.
pub fn pass_dropout_key(train_seed: u64, pass: usize) -> u64 {
    derive_key(&[0x7061_7373, train_seed, pass as u64])
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Input of each layer (post-activation, post-dropout).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    pub output: Array2<f64>,
}

fn check_input(p: &MlpParams, x: &Array2<f64>) -> Result<()> {
    if x.ncols() != p.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.input_dim(),
            got: x.ncols(),
            context: "input columns vs network input width",
        });
    }
    Ok(())
}

fn affine(l: &Layer, a: &Array2<f64>) -> Array2<f64> {
    let mut z = a.dot(&l.w.t());
    z += &l.b;
    z
}

/// Network outputs (`n × out`): logits for classification, one column for regression.
pub fn forward(p: &MlpParams, x: &Array2<f64>, dropout: Option<Dropout>) -> Result<Array2<f64>> {
    check_input(p, x)?;
    let mut a = affine(&p.layers[0], x);
    for (i, l) in p.layers.iter().enumerate().skip(1) {
        a.mapv_inplace(|v| v.max(0.0));
        if let Some(mask) = dropout.and_then(|d| d.mask(i - 1, a.dim())) {
            a *= &mask;
        }
        a = affine(l, &a);
    }
    Ok(a)
}

/// Forward pass that records what `backward` needs.
pub fn forward_cached(p: &MlpParams, x: &Array2<f64>, dropout: Option<Dropout>) -> Result<Cache> {
    check_input(p, x)?;
    let n_layers = p.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers - 1);
    let mut masks = Vec::with_capacity(n_layers - 1);
    let mut a = x.clone();
    for (i, l) in p.layers.iter().enumerate() {
        let z = affine(l, &a);
        inputs.push(a);
        if i + 1 == n_layers {
            return Ok(Cache {
                inputs,
                pre,
                masks,
                output: z,
            });
        }
        let mut h = z.mapv(|v| v.max(0.0));
        let mask = dropout.and_then(|d| d.mask(i, h.dim()));
        if let Some(m) = &mask {
            h *= m;
        }
        pre.push(z);
        masks.push(mask);
        a = h;
    }
    unreachable!("networks have at least one layer")
}

/// Parameter gradients given `dout = ∂L/∂output`.
pub fn backward(p: &MlpParams, cache: &Cache, dout: &Array2<f64>) -> Result<MlpParams> {
    if dout.dim() != cache.output.dim() {
        return Err(Error::DimensionMismatch {
            expected: cache.output.len(),
            got: dout.len(),
            context: "output gradient vs network output",
        });
    }
    let mut grads = Vec::with_capacity(p.layers.len());
    let mut dz = dout.clone();
    for i in (0..p.layers.len()).rev() {
        let a = &cache.inputs[i];
        let gw = dz.t().dot(a);
        let gb = dz.sum_axis(Axis(0));
        grads.push(Layer { w: gw, b: gb });
        if i == 0 {
            break;
        }
        let mut da = dz.dot(&p.layers[i].w);
        if let Some(m) = &cache.masks[i - 1] {
            da *= m;
        }
        Zip::from(&mut da)
            .and(&cache.pre[i - 1])
            .for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0
                }
            });
        dz = da;
    }
    grads.reverse();
    Ok(MlpParams { layers: grads })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_determinism() {
        let p = init_mlp(&[4, 3, 2], 1).unwrap();
        assert_eq!(p.layers[0].w.dim(), (3, 4));
        assert_eq!(p.layers[1].w.dim(), (2, 3));
        assert_eq!(p, init_mlp(&[4, 3, 2], 1).unwrap());
        assert_ne!(p, init_mlp(&[4, 3, 2], 2).unwrap());
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(p.layers[0].w.iter().all(|v| v.abs() <= bound));
        assert!(p.layers.iter().all(|l| l.b.iter().all(|&b| b == 0.0)));
        assert!(init_mlp(&[4], 1).is_err());
    }

    #[test]
    fn zero_params_give_zero_logits() {
        let p = MlpParams::zeros(&[3, 5, 2]);
        let x = Array2::from_elem((4, 3), 1.7);
        assert!(forward(&p, &x, None).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_zero_is_identity_and_masks_are_deterministic() {
        let p = init_mlp(&[3, 6, 6, 2], 5).unwrap();
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let plain = forward(&p, &x, None).unwrap();
        assert_eq!(plain, forward(&p, &x, Some(Dropout::new(0.0, 9))).unwrap());
        let a = forward(&p, &x, Some(Dropout::new(0.5, 9))).unwrap();
        assert_eq!(a, forward(&p, &x, Some(Dropout::new(0.5, 9))).unwrap());
        assert_ne!(a, plain);
    }

    #[test]
    fn cached_forward_matches_plain() {
        let p = init_mlp(&[3, 4, 4, 2], 3).unwrap();
        let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64).sin());
        let d = Some(Dropout::new(0.3, 4));
        assert_eq!(forward(&p, &x, d).unwrap(), forward_cached(&p, &x, d).unwrap().output);
    }

    #[test]
    fn wrong_width_is_rejected() {
        let p = init_mlp(&[3, 2], 0).unwrap();
        assert!(matches!(
            forward(&p, &Array2::zeros((1, 4)), None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn flat_round_trip() {
        let p = init_mlp(&[2, 3, 2], 8).unwrap();
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat());
        assert_eq!(p, q);
    }
}
