use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::geometry::InterfaceSet;

/// Real values on the quadrature nodes of an [`InterfaceSet`], concatenated by
/// component. `offsets[j]..offsets[j + 1]` is the slice of component `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl BoundaryField {
    pub fn new(values: Vec<f64>, offsets: Vec<usize>) -> Self {
        debug_assert_eq!(offsets.last().copied(), Some(values.len()));
        Self { values, offsets }
    }

    pub fn zeros(interfaces: &InterfaceSet) -> Self {
        Self::new(vec![0.0; interfaces.total_nodes()], interfaces.offsets())
    }

    /// Evaluate `f(component, local index)` at every node.
    pub fn from_fn(interfaces: &InterfaceSet, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let offsets = interfaces.offsets();
        let mut values = Vec::with_capacity(interfaces.total_nodes());
        for j in 0..interfaces.len() {
            for i in 0..(offsets[j + 1] - offsets[j]) {
                values.push(f(j, i));
            }
        }
        Self::new(values, offsets)
    }

    /// Wrap a flat vector; fails when its length does not match the node count.
    pub fn on(interfaces: &InterfaceSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != interfaces.total_nodes() {
            return Err(MuskatError::Params(format!(
                "field has {} values, interface set has {} nodes",
                values.len(),
                interfaces.total_nodes()
            )));
        }
        Ok(Self::new(values, interfaces.offsets()))
    }

    /// Indicator `e_j` of component `j`.
    pub fn indicator(interfaces: &InterfaceSet, component: usize) -> Self {
        Self::from_fn(interfaces, |j, _| if j == component { 1.0 } else { 0.0 })
    }

    /// Indicator `e` of the whole interface.
    pub fn ones(interfaces: &InterfaceSet) -> Self {
        Self::from_fn(interfaces, |_, _| 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn is_compatible(&self, interfaces: &InterfaceSet) -> bool {
        self.offsets == interfaces.offsets()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(
            self.values.iter().map(|&v| f(v)).collect(),
            self.offsets.clone(),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Arclength-weighted inner product `sum_i w_i a_i b_i`.
    pub fn dot_weighted(&self, other: &Self, weights: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Weighted integral over component `j`.
    pub fn integral(&self, weights: &[f64], j: usize) -> f64 {
        let r = self.offsets[j]..self.offsets[j + 1];
        self.values[r.clone()]
            .iter()
            .zip(&weights[r])
            .map(|(v, w)| v * w)
            .sum()
    }
}
