use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Axis, Order, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adjacency::Adjacency;
use crate::error::{Error, Result};
use crate::numerics::{uniform_init, Activation, BackwardMode, Matrix, ParamId, ParamSet};

/// Result of one graph convolution on a single graph.
#[derive(Clone, Debug)]
pub struct GcnOutput {
    pub pre: Matrix,
    pub out: Matrix,
}

/// `σ((1/N)·A·h·W_other + h·W_self)` on one graph.
pub fn gcn_layer(
    h: &Matrix,
    adj: &Adjacency,
    w_self: &Matrix,
    w_other: &Matrix,
    activation: Activation,
) -> Result<GcnOutput> {
    let n = h.nrows();
    if adj.n() != n {
        return Err(Error::dim("gcn adjacency", &[n, n], &[adj.n(), adj.n()]));
    }
    if w_self.nrows() != h.ncols() || w_self.shape() != w_other.shape() {
        return Err(Error::dim("gcn weights", h.shape(), w_self.shape()));
    }
    let mixed = adj.matrix().dot(h).dot(w_other) / n as f64;
    let pre = mixed + h.dot(w_self);
    let out = activation.apply(&pre);
    Ok(GcnOutput { pre, out })
}

/// Connectivity for a batch of same-sized graphs.
#[derive(Clone, Debug)]
pub enum Graphs {
    /// Every sample uses the complete graph.
    Full,
    /// One adjacency per sample.
    PerSample(Vec<Adjacency>),
}

impl Graphs {
    fn check(&self, batch: usize, n: usize) -> Result<()> {
        if let Graphs::PerSample(list) = self {
            if list.len() != batch {
                return Err(Error::dim("graph batch", &[list.len()], &[batch]));
            }
            if let Some(bad) = list.iter().find(|a| a.n() != n) {
                return Err(Error::dim("graph batch node count", &[bad.n()], &[n]));
            }
        }
        Ok(())
    }

    /// Row-stacked `(1/N)·A_b·x_b` for every sample `b`; `transpose` uses `A_bᵀ`.
    fn mix(&self, x: &Matrix, n: usize, transpose: bool) -> Matrix {
        let batch = x.nrows() / n;
        let k = x.ncols();
        let scale = 1.0 / n as f64;
        match self {
            Graphs::Full => {
                // A = 1 1ᵀ − I, so A·x = column sums − own row
                let x3 = x.to_shape(((batch, n, k), Order::RowMajor)).expect("batch of n rows");
                let sums = x3.sum_axis(Axis(1)).insert_axis(Axis(1));
                let mixed = (&sums - &x3) * scale;
                mixed
                    .to_shape(((batch * n, k), Order::RowMajor))
                    .expect("same size")
                    .into_owned()
            }
            Graphs::PerSample(list) => {
                let mut out = Matrix::zeros((batch * n, k));
                for (b, adj) in list.iter().enumerate() {
                    let rows = ndarray::s![b * n..(b + 1) * n, ..];
                    let a = adj.matrix();
                    let y = if transpose {
                        a.t().dot(&x.slice(rows))
                    } else {
                        a.dot(&x.slice(rows))
                    };
                    out.slice_mut(rows).assign(&(y * scale));
                }
                out
            }
        }
    }
}

/// Graph convolution with shared weights, applied to `B` stacked graphs of
/// `N` nodes each (`B·N` rows).
#[derive(Clone, Copy, Debug)]
pub struct GcnLayer {
    pub w_self: ParamId,
    pub w_other: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct GcnCache {
    pub input: Matrix,
    pub pre: Matrix,
    pub out: Matrix,
}

impl GcnLayer {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        GcnLayer {
            w_self: params.add(format!("{name}.w_self"), uniform_init(fan_in, fan_out, fan_in, rng)),
            w_other: params.add(format!("{name}.w_other"), uniform_init(fan_in, fan_out, fan_in, rng)),
            bias: params.add(format!("{name}.b"), uniform_init(1, fan_out, fan_in, rng)),
            activation,
        }
    }

    pub fn forward(&self, params: &ParamSet, h: Matrix, n: usize, graphs: &Graphs) -> Result<GcnCache> {
        let w_self = params.value(self.w_self);
        if h.ncols() != w_self.nrows() {
            return Err(Error::dim("gcn layer", h.shape(), w_self.shape()));
        }
        if n == 0 || !h.nrows().is_multiple_of(n) {
            return Err(Error::dim("gcn rows", &[h.nrows()], &[n]));
        }
        graphs.check(h.nrows() / n, n)?;
        let other = h.dot(params.value(self.w_other));
        let mut pre = graphs.mix(&other, n, false);
        pre += &h.dot(w_self);
        pre += params.value(self.bias);
        let out = self.activation.apply(&pre);
        Ok(GcnCache { input: h, pre, out })
    }

    pub fn backward(
        &self,
        params: &mut ParamSet,
        cache: &GcnCache,
        mut dout: Matrix,
        n: usize,
        graphs: &Graphs,
        mode: BackwardMode,
    ) -> Matrix {
        self.activation.backprop_in_place(&mut dout, &cache.pre, &cache.out);
        let d_other = graphs.mix(&dout, n, true);
        if mode == BackwardMode::Full {
            let ht = cache.input.t();
            *params.grad_mut(self.w_self) += &ht.dot(&dout);
            *params.grad_mut(self.w_other) += &ht.dot(&d_other);
            *params.grad_mut(self.bias) += &dout.sum_axis(Axis(0)).insert_axis(Axis(0));
        }
        let mut dh = dout.dot(&params.value(self.w_self).t());
        dh += &d_other.dot(&params.value(self.w_other).t());
        dh
    }
}

/// Symmetric reduction over a graph's nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Max,
    Avg,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Max => "max",
            Pooling::Avg => "avg",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Pooling::Max),
            "avg" => Ok(Pooling::Avg),
            _ => Err(Error::config("pooling", s, "`max` or `avg`")),
        }
    }
}

/// Column-wise max or mean over the rows of one graph.
pub fn pool(h: &Matrix, mode: Pooling) -> Array1<f64> {
    let (pooled, _) = pool_batch(h, h.nrows(), mode);
    pooled.row(0).to_owned()
}

/// Pools each block of `n` rows. For max pooling also returns, per output
/// entry, the winning row (first on ties).
pub(crate) fn pool_batch(h: &Matrix, n: usize, mode: Pooling) -> (Matrix, Option<Vec<usize>>) {
    let batch = h.nrows() / n;
    let k = h.ncols();
    let h3 = h.to_shape(((batch, n, k), Order::RowMajor)).expect("batch of n rows");
    match mode {
        Pooling::Avg => (h3.mean_axis(Axis(1)).expect("n >= 1"), None),
        Pooling::Max => {
            let mut out = Matrix::from_elem((batch, k), f64::NEG_INFINITY);
            let mut arg = vec![0usize; batch * k];
            for b in 0..batch {
                for i in 0..n {
                    let row = h3.index_axis(Axis(0), b);
                    let row = row.row(i);
                    let mut dst = out.row_mut(b);
                    Zip::from(&mut dst)
                        .and(&row)
                        .and(&mut arg[b * k..(b + 1) * k])
                        .for_each(|best, &v, a| {
                            if v > *best {
                                *best = v;
                                *a = b * n + i;
                            }
                        });
                }
            }
            (out, Some(arg))
        }
    }
}

/// Routes pooled gradients back to the node rows.
pub(crate) fn pool_backward(dpooled: &Matrix, n: usize, mode: Pooling, argmax: Option<&[usize]>) -> Matrix {
    let batch = dpooled.nrows();
    let k = dpooled.ncols();
    match mode {
        Pooling::Avg => {
            let per_node = dpooled / n as f64;
            let mut out = Matrix::zeros((batch * n, k));
            for b in 0..batch {
                out.slice_mut(ndarray::s![b * n..(b + 1) * n, ..])
                    .assign(&per_node.row(b).insert_axis(Axis(0)));
            }
            out
        }
        Pooling::Max => {
            let arg = argmax.expect("max pooling keeps argmax");
            let mut out = Matrix::zeros((batch * n, k));
            for b in 0..batch {
                for c in 0..k {
                    out[[arg[b * k + c], c]] += dpooled[[b, c]];
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_evaluated_two_node_layer() {
        let eye = Matrix::eye(2);
        let a = Adjacency::full(2);
        let out = gcn_layer(&eye, &a, &eye, &eye, Activation::Identity).unwrap();
        assert_eq!(out.out, array![[1.0, 0.5], [0.5, 1.0]]);
    }

    #[test]
    fn zero_mixing_decouples_rows() {
        let h = array![[1.0, -2.0], [0.5, 3.0], [2.0, 1.0]];
        let w_self = array![[0.3, -1.0], [2.0, 0.1]];
        let out = gcn_layer(&h, &Adjacency::full(3), &w_self, &Matrix::zeros((2, 2)), Activation::Identity).unwrap();
        assert_eq!(out.out, h.dot(&w_self));
    }

    #[test]
    fn pooling_values() {
        let h = array![[1.0, 3.0], [2.0, 0.0]];
        assert_eq!(pool(&h, Pooling::Max), array![2.0, 3.0]);
        assert_eq!(pool(&h, Pooling::Avg), array![1.5, 1.5]);
    }

    #[test]
    fn batched_full_mix_matches_dense_adjacency() {
        let mut rng = rand::rng();
        let n = 4;
        let x = uniform_init(3 * n, 5, 1, &mut rng);
        let fast = Graphs::Full.mix(&x, n, false);
        let dense = Graphs::PerSample(vec![Adjacency::full(n); 3]).mix(&x, n, false);
        let diff = (&fast - &dense).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn per_sample_graph_count_checked() {
        let mut rng = rand::rng();
        let mut ps = ParamSet::new();
        let layer = GcnLayer::new(&mut ps, "g", 2, 3, Activation::Relu, &mut rng);
        let graphs = Graphs::PerSample(vec![Adjacency::full(2)]);
        assert!(layer.forward(&ps, Matrix::zeros((4, 2)), 2, &graphs).is_err());
    }

    #[test]
    fn max_pool_backward_routes_to_winner() {
        let h = array![[1.0, 3.0], [2.0, 0.0]];
        let (_, arg) = pool_batch(&h, 2, Pooling::Max);
        let g = pool_backward(&array![[10.0, 20.0]], 2, Pooling::Max, arg.as_deref());
        assert_eq!(g, array![[0.0, 20.0], [10.0, 0.0]]);
    }
}
