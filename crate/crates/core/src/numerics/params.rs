use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Dense row-major matrix of 64-bit floats.
///
/// Bias vectors are stored as `1 × K` matrices so every trainable tensor
/// shares one representation.
pub type Matrix = Array2<f64>;

/// Handle into a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// One named trainable tensor with its gradient slot.
#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

/// Ordered collection of named parameters.
///
/// The set carries a version counter that is bumped by every mutation of
/// parameter values, so forward caches can detect that the weights they
/// were computed with are gone.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    entries: Vec<Param>,
    index: HashMap<String, usize>,
    version: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter. Panics on duplicate names; names are chosen by
    /// network constructors, never by users.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let id = self.entries.len();
        let grad = Matrix::zeros(value.raw_dim());
        self.index.insert(name.clone(), id);
        self.entries.push(Param { name, value, grad });
        ParamId(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.entries[id.0].value
    }

    /// Mutable access to a value. Invalidates outstanding forward caches.
    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        self.version += 1;
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.entries[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.entries[id.0].grad
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.entries.iter()
    }

    /// Mutable iteration over entries. Invalidates outstanding forward caches.
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.version += 1;
        self.entries.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.entries {
            p.grad.fill(0.0);
        }
    }

    /// Whether two sets have the same names and shapes in the same order.
    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape())
    }

    /// Copies values from a set with identical layout.
    pub fn copy_values_from(&mut self, other: &ParamSet) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::Invalid(
                "parameter layouts differ; cannot copy values".into(),
            ));
        }
        for (dst, src) in self.entries.iter_mut().zip(&other.entries) {
            dst.value.assign(&src.value);
        }
        self.version += 1;
        Ok(())
    }

    /// Largest absolute difference between the values of two sets with the
    /// same layout.
    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| a.value.iter().zip(b.value.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Euclidean distance between the values of two sets with the same layout.
    pub fn l2_distance(&self, other: &ParamSet) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| a.value.iter().zip(b.value.iter()).map(|(x, y)| (x - y).powi(2)))
            .sum::<f64>()
            .sqrt()
    }
}
