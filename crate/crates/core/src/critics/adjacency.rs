use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// How critic nodes are connected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphMode {
    /// Complete graph without self loops.
    Full,
    /// Each node links to its `K` spatially nearest nodes (directed).
    Knn(usize),
}

impl fmt::Display for GraphMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphMode::Full => f.write_str("full"),
            GraphMode::Knn(k) => write!(f, "knn:{k}"),
        }
    }
}

impl FromStr for GraphMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("graph", s, "`full` or `knn:K` with K >= 1");
        if s == "full" {
            return Ok(GraphMode::Full);
        }
        match s.strip_prefix("knn:").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(GraphMode::Knn(k)),
            _ => Err(bad()),
        }
    }
}

/// Binary `N × N` adjacency matrix with an empty diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency(Matrix);

impl Adjacency {
    pub fn full(n: usize) -> Self {
        let mut m = Matrix::ones((n, n));
        m.diag_mut().fill(0.0);
        Adjacency(m)
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dim("adjacency", m.shape(), &[m.nrows(), m.nrows()]));
        }
        if m.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Invalid("adjacency entries must be 0 or 1".into()));
        }
        if m.diag().iter().any(|&v| v != 0.0) {
            return Err(Error::Invalid("adjacency diagonal must be zero".into()));
        }
        Ok(Adjacency(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Adjacency after relabelling nodes: new node `k` is old node `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Adjacency {
        let n = self.n();
        Adjacency(Matrix::from_shape_fn((n, n), |(i, j)| self.0[[perm[i], perm[j]]]))
    }
}

/// Builds the critic graph from agent positions (`N × 2`).
pub fn build_adjacency(positions: ArrayView2<'_, f64>, mode: GraphMode) -> Result<Adjacency> {
    let n = positions.nrows();
    if n == 0 {
        return Err(Error::Invalid("adjacency needs at least one node".into()));
    }
    match mode {
        GraphMode::Full => Ok(Adjacency::full(n)),
        GraphMode::Knn(k) => {
            if k >= n {
                return Err(Error::config("graph", mode, format!("K < N = {n}")));
            }
            let mut m = Matrix::zeros((n, n));
            let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n);
            for i in 0..n {
                scored.clear();
                scored.extend((0..n).filter(|&j| j != i).map(|j| {
                    let dx = positions[[j, 0]] - positions[[i, 0]];
                    let dy = positions[[j, 1]] - positions[[i, 1]];
                    (dx * dx + dy * dy, j)
                }));
                scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, j) in &scored[..k] {
                    m[[i, j]] = 1.0;
                }
            }
            Ok(Adjacency(m))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn full_three() {
        let a = build_adjacency(Matrix::zeros((3, 2)).view(), GraphMode::Full).unwrap();
        assert_eq!(a.matrix(), &array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]);
    }

    #[test]
    fn knn_on_a_line() {
        let pos = array![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]];
        let a = build_adjacency(pos.view(), GraphMode::Knn(1)).unwrap();
        assert_eq!(a.matrix(), &array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    }

    #[test]
    fn knn_saturates_to_full() {
        let pos = array![[0.3, 0.1], [1.0, -2.0], [3.0, 0.5], [0.0, 0.0]];
        let a = build_adjacency(pos.view(), GraphMode::Knn(3)).unwrap();
        assert_eq!(a, Adjacency::full(4));
    }

    #[test]
    fn knn_too_large_is_config_error() {
        let err = build_adjacency(Matrix::zeros((3, 2)).view(), GraphMode::Knn(3)).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn graph_mode_parsing() {
        assert_eq!("full".parse::<GraphMode>().unwrap(), GraphMode::Full);
        assert_eq!("knn:6".parse::<GraphMode>().unwrap(), GraphMode::Knn(6));
        assert!("knn:0".parse::<GraphMode>().is_err());
        assert!("ring".parse::<GraphMode>().is_err());
        assert_eq!(GraphMode::Knn(2).to_string(), "knn:2");
    }

    #[test]
    fn from_matrix_validates() {
        assert!(Adjacency::from_matrix(array![[1.0, 0.0], [0.0, 0.0]]).is_err());
        assert!(Adjacency::from_matrix(array![[0.0, 0.5], [0.0, 0.0]]).is_err());
        assert!(Adjacency::from_matrix(array![[0.0, 1.0], [0.0, 0.0]]).is_ok());
    }
}
