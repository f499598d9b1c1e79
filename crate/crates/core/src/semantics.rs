//! Semantic vectors, sigmoid bounding and RMSE fitness.

use std::ops::Deref;
use std::sync::Arc;

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::exprtree::ExprTree;

/// A program's outputs on every row of one data split, in row order.
///
/// Entries are finite. The buffer is reference counted so a reproduced
/// individual shares its parent's storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticVector(Arc<[f64]>);

impl SemanticVector {
    /// Fails on the first non-finite entry.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((row, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, value });
        }
        Ok(SemanticVector(values.into()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Whether two vectors share one buffer.
    pub fn shares_storage(&self, other: &SemanticVector) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Deref for SemanticVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Root mean squared error between equal-length, non-empty vectors.
pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: target.len() });
    }
    if pred.is_empty() {
        return Err(Error::Empty("rmse of empty vectors"));
    }
    let sse: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

pub fn semantics_of_tree(t: &ExprTree, inputs: &Matrix) -> Result<SemanticVector> {
    SemanticVector::new(t.eval_rows(inputs)?)
}
