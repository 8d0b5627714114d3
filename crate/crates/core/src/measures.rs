//! Weighted point clouds and ground-cost matrices.
//!
//! A [`DiscreteMeasure`] is `n` strictly positive weights over `n` support
//! points in `R^d`; weights are normalized to total mass one at construction
//! and zero-weight atoms are rejected rather than silently dropped, so any
//! measure that exists downstream is a valid probability measure.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// A discrete probability measure: strictly positive normalized weights over
/// points in `R^d` (rows of `support`).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    weights: Array1<f64>,
    support: Array2<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from raw nonnegative weights, normalizing them to
    /// total mass one.
    ///
    /// Errors on shape mismatch, non-finite support coordinates, and on any
    /// weight that is negative, non-finite, or exactly zero.
    pub fn new(weights: Array1<f64>, support: Array2<f64>) -> Result<Self> {
        if weights.len() != support.nrows() {
            return Err(Error::Shape(format!(
                "{} weights for {} support points",
                weights.len(),
                support.nrows()
            )));
        }
        if weights.is_empty() {
            return Err(Error::Weights("measure needs at least one atom".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::Weights(format!("weight {i} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::Weights(format!("weight {i} is negative ({w})")));
            }
            if w == 0.0 {
                return Err(Error::Weights(format!("weight {i} is a zero atom")));
            }
        }
        if support.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("support coordinates".into()));
        }
        let total: f64 = weights.sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Weights(format!("total mass {total} is unusable")));
        }
        Ok(Self {
            weights: weights / total,
            support,
        })
    }

    /// Uniform measure (weight `1/n` per atom) on the given support points.
    pub fn uniform(support: Array2<f64>) -> Result<Self> {
        let n = support.nrows();
        Self::new(Array1::from_elem(n, 1.0), support)
    }

    /// Uniform measure on scalar support points (column vector in `R^1`).
    pub fn uniform_1d(values: &[f64]) -> Result<Self> {
        let support =
            Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("column shape");
        Self::uniform(support)
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Ambient dimension of the support.
    pub fn dim(&self) -> usize {
        self.support.ncols()
    }

    /// Normalized weights (sum to one, all strictly positive).
    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    /// Support points, one per row.
    pub fn support(&self) -> ArrayView2<'_, f64> {
        self.support.view()
    }
}

/// How a cost matrix was built. `Custom` covers hand-built matrices such as
/// one-dimensional supermodular costs and derived mixture ground costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    SquaredEuclidean,
    Custom,
}

/// A dense, finite ground-cost matrix between two supports.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    values: Array2<f64>,
    kind: CostKind,
}

impl CostMatrix {
    /// Squared Euclidean cost `C[i][j] = sum_k (x[i][k] - y[j][k])^2`.
    ///
    /// Evaluated directly per entry (no `|x|^2 + |y|^2 - 2<x,y>` expansion),
    /// so entries are exactly nonnegative and zero iff the points coincide.
    pub fn squared_euclidean(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::Shape(format!(
                "point dimensions differ: {} vs {}",
                x.ncols(),
                y.ncols()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("support coordinates".into()));
        }
        let (n, m) = (x.nrows(), y.nrows());
        let mut values = Array2::zeros((n, m));
        for (i, xi) in x.rows().into_iter().enumerate() {
            for (j, yj) in y.rows().into_iter().enumerate() {
                values[[i, j]] = xi
                    .iter()
                    .zip(yj.iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
            }
        }
        Ok(Self {
            values,
            kind: CostKind::SquaredEuclidean,
        })
    }

    /// Squared Euclidean cost between the supports of two measures.
    pub fn between(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        Self::squared_euclidean(mu.support(), nu.support())
    }

    /// Wraps an arbitrary finite matrix as a custom cost.
    pub fn custom(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost entries".into()));
        }
        Ok(Self {
            values,
            kind: CostKind::Custom,
        })
    }

    /// Cost between sorted scalar supports under a custom pairwise cost.
    pub fn from_scalar_cost(
        x: &[f64],
        y: &[f64],
        cost: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Array2::zeros((x.len(), y.len()));
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                values[[i, j]] = cost(xi, yj);
            }
        }
        Self::custom(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}
