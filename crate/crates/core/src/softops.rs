//! Soft ranking and sorting through regularized couplings.
//!
//! The entries of `x` are matched against the staircase `1..n` by an
//! entropic transport plan `P`; `n * P * z` blurs the vector of hard ranks
//! and `n * P^T * x` the vector of sorted values, with the blur controlled
//! by `epsilon`. The solve runs on a standardized copy of the data — inputs
//! shifted to zero mean and scaled to unit range, targets scaled to match —
//! so one `epsilon` means the same amount of blur regardless of the scale
//! the caller's numbers arrive in. Rank and value products use the original
//! `z = (1, ..., n)` and the original `x`, so outputs stay in natural units.

use ndarray::Array1;

use crate::init1d::init_1d;
use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::sinkhorn::{
    coupling_from_duals, sinkhorn_solve, InitialPotential, SinkhornConfig, SinkhornInit,
    TransportPlan,
};
use crate::{Error, Result};

/// Starting point for the ranking solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingInit {
    /// Zero potentials.
    Zero,
    /// Exact unregularized duals of the sorted one-dimensional problem.
    DualSort,
}

/// The standardized transport problem behind soft ranks: `mu` uniform on the
/// standardized inputs, `nu` uniform on the matching staircase, and their
/// squared-distance cost. The standardized supports are kept as plain
/// vectors for initializers that want the one-dimensional structure.
#[derive(Debug, Clone)]
pub struct RankingProblem {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: CostMatrix,
    pub x_std: Vec<f64>,
    pub y_std: Vec<f64>,
}

/// Builds the ranking problem for `x`: inputs standardized to zero mean and
/// unit range (constant inputs keep scale one), targets `1..n` scaled to the
/// same range, squared-distance cost between them.
pub fn ranking_problem(x: &[f64]) -> Result<RankingProblem> {
    let n = x.len();
    if n == 0 {
        return Err(Error::Argument("soft ranks need at least one entry".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ranking input".into()));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = if hi > lo { hi - lo } else { 1.0 };
    let x_std: Vec<f64> = x.iter().map(|&v| (v - mean) / scale).collect();
    // (1..n) has mean (n+1)/2 and range n-1; after this map it spans exactly
    // a unit range around zero, matching the standardized inputs.
    let y_std: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (1..=n)
            .map(|j| (j as f64 - (n as f64 + 1.0) / 2.0) / (n as f64 - 1.0))
            .collect()
    };
    let mu = DiscreteMeasure::uniform_1d(&x_std)?;
    let nu = DiscreteMeasure::uniform_1d(&y_std)?;
    let cost = CostMatrix::between(&mu, &nu)?;
    Ok(RankingProblem { mu, nu, cost, x_std, y_std })
}

fn ranking_plan(
    x: &[f64],
    epsilon: f64,
    config: &SinkhornConfig,
    init: RankingInit,
) -> Result<TransportPlan> {
    let problem = ranking_problem(x)?;
    let n = x.len();
    let mut cfg = config.clone();
    cfg.epsilon = epsilon;
    let start = match init {
        RankingInit::Zero => SinkhornInit::Zero,
        RankingInit::DualSort => {
            let w = vec![1.0 / n as f64; n];
            let f = init_1d(&problem.x_std, &problem.y_std, &w, &w, |a, b| {
                (a - b) * (a - b)
            })?;
            SinkhornInit::Warm(InitialPotential::OnSource(f).into_duals(n, n, epsilon)?)
        }
    };
    let (potentials, _) = sinkhorn_solve(&problem.mu, &problem.nu, &problem.cost, &cfg, &start)?;
    coupling_from_duals(&potentials, &problem.cost)
}

/// Soft ranks `n * P * z` with `z = (1, ..., n)`: entry `i` is the blurred
/// rank of `x_i`, approaching the hard rank as `epsilon` shrinks and the
/// average rank `(n+1)/2` as it grows.
pub fn soft_rank(
    x: &[f64],
    epsilon: f64,
    config: &SinkhornConfig,
    init: RankingInit,
) -> Result<Array1<f64>> {
    let n = x.len();
    let plan = ranking_plan(x, epsilon, config, init)?;
    let z = Array1::from_iter((1..=n).map(|j| j as f64));
    Ok(plan.values().dot(&z) * n as f64)
}

/// Soft sort `n * P^T * x`: entry `j` is the blurred `j`-th smallest value
/// of `x`, in the original units of `x`.
pub fn soft_sort(
    x: &[f64],
    epsilon: f64,
    config: &SinkhornConfig,
    init: RankingInit,
) -> Result<Array1<f64>> {
    let n = x.len();
    let plan = ranking_plan(x, epsilon, config, init)?;
    let xv = Array1::from_iter(x.iter().cloned());
    Ok(plan.values().t().dot(&xv) * n as f64)
}
