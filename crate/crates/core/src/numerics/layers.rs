use ndarray::{Array2, Axis, Zip};
use rand::Rng;

use super::params::{Matrix, ParamId, ParamSet};
use crate::error::{Error, Result};

/// Elementwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Derivative expressed through the pre-activation and the output.
    #[inline]
    fn slope(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            // relu'(0) := 0
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
            Activation::Sigmoid => out * (1.0 - out),
        }
    }

    pub fn apply(self, x: &Matrix) -> Matrix {
        x.mapv(|v| self.eval(v))
    }

    /// Multiplies `upstream` in place by the elementwise derivative.
    pub(crate) fn backprop_in_place(self, upstream: &mut Matrix, pre: &Matrix, out: &Matrix) {
        if self == Activation::Identity {
            return;
        }
        Zip::from(upstream)
            .and(pre)
            .and(out)
            .for_each(|g, &p, &o| *g *= self.slope(p, o));
    }
}

/// Gradients produced by [`AffineBackward::apply`].
#[derive(Clone, Debug)]
pub struct AffineGrads {
    pub dx: Matrix,
    pub dw: Matrix,
    pub db: Matrix,
}

/// Backward map of `y = xW + b`.
#[derive(Clone, Debug)]
pub struct AffineBackward {
    input: Matrix,
    weight: Matrix,
}

impl AffineBackward {
    pub fn apply(&self, dy: &Matrix) -> Result<AffineGrads> {
        let expect = [self.input.nrows(), self.weight.ncols()];
        if dy.shape() != expect {
            return Err(Error::dim("affine backward", dy.shape(), &expect));
        }
        Ok(AffineGrads {
            dx: dy.dot(&self.weight.t()),
            dw: self.input.t().dot(dy),
            db: dy.sum_axis(Axis(0)).insert_axis(Axis(0)),
        })
    }
}

/// `y = xW + b` with `b` broadcast over rows.
pub fn affine(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<(Matrix, AffineBackward)> {
    if x.ncols() != w.nrows() {
        return Err(Error::dim("affine", x.shape(), w.shape()));
    }
    if b.nrows() != 1 || b.ncols() != w.ncols() {
        return Err(Error::dim("affine bias", w.shape(), b.shape()));
    }
    let y = x.dot(w) + b;
    Ok((
        y,
        AffineBackward {
            input: x.clone(),
            weight: w.clone(),
        },
    ))
}

/// Backward map of an elementwise activation.
#[derive(Clone, Debug)]
pub struct ActivationBackward {
    kind: Activation,
    pre: Matrix,
    out: Matrix,
}

impl ActivationBackward {
    pub fn apply(&self, upstream: &Matrix) -> Result<Matrix> {
        if upstream.shape() != self.pre.shape() {
            return Err(Error::dim("activation backward", upstream.shape(), self.pre.shape()));
        }
        let mut g = upstream.clone();
        self.kind.backprop_in_place(&mut g, &self.pre, &self.out);
        Ok(g)
    }
}

pub fn activation(x: &Matrix, kind: Activation) -> Result<(Matrix, ActivationBackward)> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("activation input".into()));
    }
    let out = kind.apply(x);
    Ok((
        out.clone(),
        ActivationBackward {
            kind,
            pre: x.clone(),
            out,
        },
    ))
}

/// Which gradients a backward pass should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackwardMode {
    /// Accumulate parameter gradients and return the input gradient.
    Full,
    /// Only return the input gradient; parameter slots are left untouched.
    InputOnly,
}

/// Uniform initialisation in `±1/sqrt(fan_in)`.
pub fn uniform_init<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Matrix {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

/// Fully connected layer whose weights live in a [`ParamSet`].
#[derive(Clone, Copy, Debug)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    pub input: Matrix,
    pub pre: Matrix,
    pub out: Matrix,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let weight = params.add(format!("{name}.w"), uniform_init(fan_in, fan_out, fan_in, rng));
        let bias = params.add(format!("{name}.b"), uniform_init(1, fan_out, fan_in, rng));
        Dense {
            weight,
            bias,
            activation,
        }
    }

    pub fn fan_in(&self, params: &ParamSet) -> usize {
        params.value(self.weight).nrows()
    }

    pub fn fan_out(&self, params: &ParamSet) -> usize {
        params.value(self.weight).ncols()
    }

    pub fn forward(&self, params: &ParamSet, x: Matrix) -> Result<DenseCache> {
        let w = params.value(self.weight);
        if x.ncols() != w.nrows() {
            return Err(Error::dim("dense", x.shape(), w.shape()));
        }
        let pre = x.dot(w) + params.value(self.bias);
        let out = self.activation.apply(&pre);
        Ok(DenseCache { input: x, pre, out })
    }

    /// Accumulates parameter gradients (in `Full` mode) and returns `dL/dx`.
    pub fn backward(
        &self,
        params: &mut ParamSet,
        cache: &DenseCache,
        mut dy: Matrix,
        mode: BackwardMode,
    ) -> Matrix {
        self.activation.backprop_in_place(&mut dy, &cache.pre, &cache.out);
        if mode == BackwardMode::Full {
            let dw = cache.input.t().dot(&dy);
            *params.grad_mut(self.weight) += &dw;
            let db = dy.sum_axis(Axis(0));
            *params.grad_mut(self.bias) += &db.insert_axis(Axis(0));
        }
        dy.dot(&params.value(self.weight).t())
    }
}

/// Stack of dense layers.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Dense>,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    layers: Vec<DenseCache>,
    version: u64,
}

impl MlpCache {
    pub fn output(&self) -> &Matrix {
        &self.layers.last().expect("mlp has at least one layer").out
    }

    pub fn layers(&self) -> &[DenseCache] {
        &self.layers
    }
}

impl Mlp {
    /// Builds `sizes.len() - 1` layers; every layer but the last uses
    /// `hidden`, the last uses `output`.
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an mlp needs input and output sizes");
        let depth = sizes.len() - 1;
        let layers = (0..depth)
            .map(|l| {
                let act = if l + 1 == depth { output } else { hidden };
                Dense::new(params, &format!("{prefix}.l{l}"), sizes[l], sizes[l + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self, params: &ParamSet) -> usize {
        self.layers[0].fan_in(params)
    }

    pub fn output_dim(&self, params: &ParamSet) -> usize {
        self.layers.last().unwrap().fan_out(params)
    }

    pub fn forward(&self, params: &ParamSet, x: Matrix) -> Result<MlpCache> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x;
        for layer in &self.layers {
            let c = layer.forward(params, h)?;
            h = c.out.clone();
            caches.push(c);
        }
        Ok(MlpCache {
            layers: caches,
            version: params.version(),
        })
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, params: &ParamSet, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &self.layers {
            let w = params.value(layer.weight);
            if h.ncols() != w.nrows() {
                return Err(Error::dim("dense", h.shape(), w.shape()));
            }
            let mut pre = h.dot(w);
            pre += params.value(layer.bias);
            h = layer.activation.apply(&pre);
        }
        Ok(h)
    }

    pub fn backward(
        &self,
        params: &mut ParamSet,
        cache: &MlpCache,
        dy: Matrix,
        mode: BackwardMode,
    ) -> Result<Matrix> {
        if cache.version != params.version() {
            return Err(Error::StaleCache {
                cached: cache.version,
                current: params.version(),
            });
        }
        let out = cache.output();
        if dy.shape() != out.shape() {
            return Err(Error::dim("mlp backward", dy.shape(), out.shape()));
        }
        let mut g = dy;
        for (layer, c) in self.layers.iter().zip(&cache.layers).rev() {
            g = layer.backward(params, c, g, mode);
        }
        Ok(g)
    }
}
