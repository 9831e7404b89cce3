//! Node-indexed score vectors.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// A real value per node. Dense storage; the support is the set of nonzero entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Self {
        ScoreVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        ScoreVector(vec![0.0; n])
    }

    /// The indicator vector of `node`.
    pub fn indicator(n: usize, node: NodeId) -> Result<Self> {
        if node >= n {
            return Err(Error::NodeOutOfRange {
                id: node,
                num_nodes: n,
            });
        }
        let mut v = vec![0.0; n];
        v[node] = 1.0;
        Ok(ScoreVector(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Ids with a nonzero value, ascending.
    pub fn support(&self) -> Vec<NodeId> {
        self.support_above(0.0)
    }

    /// Ids with `|value| > threshold`, ascending.
    pub fn support_above(&self, threshold: f64) -> Vec<NodeId> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > threshold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &ScoreVector) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> ScoreVector {
        ScoreVector(self.0.iter().map(|x| a * x).collect())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        check_len(n, self.len())
    }
}

impl From<Vec<f64>> for ScoreVector {
    fn from(v: Vec<f64>) -> Self {
        ScoreVector(v)
    }
}

impl Index<NodeId> for ScoreVector {
    type Output = f64;
    fn index(&self, i: NodeId) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<NodeId> for ScoreVector {
    fn index_mut(&mut self, i: NodeId) -> &mut f64 {
        &mut self.0[i]
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖a − b‖₂ / ‖b‖₂`
pub fn relative_error(a: &ScoreVector, b: &ScoreVector) -> Result<f64> {
    relative_error_slice(a.as_slice(), b.as_slice())
}

pub(crate) fn relative_error_slice(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(b.len(), a.len())?;
    let denom = norm2(b);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}
