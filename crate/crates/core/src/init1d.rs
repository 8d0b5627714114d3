//! Exact dual potentials for one-dimensional problems.
//!
//! For univariate supports and a cost whose negative is supermodular
//! (`d^2 c / dx dy < 0`, e.g. squared difference), the unregularized problem
//! is solved by sorting both supports and filling the plan greedily from the
//! north-west corner. This module turns that closed-form primal solution
//! into optimal *dual* potentials, which then warm-start the regularized
//! solver:
//!
//! * [`northwest_corner`] — the greedy plan on sorted weights.
//! * [`forest_from_plan`] — the support of a vertex plan, organized as a
//!   forest over the bipartite source/target node set.
//! * [`recover_duals`] — label-correcting recovery of `(f, g)` from an
//!   optimal plan: tree roots are lowered to their cheapest route through
//!   already-priced targets, then tightness `f_i + g_j = C_ij` is propagated
//!   along tree edges until nothing moves.
//! * [`dualsort`] — the fixed-point iteration
//!   `f_i <- min_j (C_ij - C_jj + f_j)` for the uniform square case, where
//!   the identity matching is optimal and `g = diag(C) - f` is implied.
//! * [`init_1d`] — the full pipeline: sort, recover, un-sort.

use std::collections::VecDeque;

use ndarray::Array1;

use crate::measures::CostMatrix;
use crate::util::argsort;
use crate::{Error, Result};

/// Iteration fixed points and dual recovery both stop once no potential
/// moves by more than this.
const FIXED_POINT_TOL: f64 = 1e-12;

/// Dual feasibility slack allowed before a plan is declared non-optimal.
const FEASIBILITY_TOL: f64 = 1e-9;

/// A sparse transport plan stored as `(i, j, mass)` entries.
#[derive(Debug, Clone)]
pub struct SparsePlan {
    entries: Vec<(usize, usize, f64)>,
    n: usize,
    m: usize,
}

impl SparsePlan {
    /// Wraps entries, validating positivity, index bounds, and uniqueness.
    pub fn new(entries: Vec<(usize, usize, f64)>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Shape("plan must have at least one row and column".into()));
        }
        for &(i, j, w) in &entries {
            if i >= n || j >= m {
                return Err(Error::Shape(format!("entry ({i}, {j}) outside {n}x{m} plan")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Argument(format!("plan mass at ({i}, {j}) must be positive, got {w}")));
            }
        }
        let mut keys: Vec<(usize, usize)> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("duplicate plan entry".into()));
        }
        Ok(Self { entries, n, m })
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `<P, C>` over the sparse support.
    pub fn cost(&self, cost: &CostMatrix) -> Result<f64> {
        if cost.nrows() != self.n || cost.ncols() != self.m {
            return Err(Error::Shape(format!(
                "cost {}x{} vs plan {}x{}",
                cost.nrows(),
                cost.ncols(),
                self.n,
                self.m
            )));
        }
        let c = cost.values();
        Ok(self.entries.iter().map(|&(i, j, w)| w * c[[i, j]]).sum())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(i, _, w) in &self.entries {
            out[i] += w;
        }
        out
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for &(_, j, w) in &self.entries {
            out[j] += w;
        }
        out
    }
}

/// Greedy north-west-corner plan for *sorted* marginals. Each step assigns
/// the smaller of the two remainders and advances the exhausted side; exact
/// simultaneous exhaustion advances both and records a single entry, which
/// keeps the support at `n + m - 1` entries or fewer (a forest).
pub fn northwest_corner(a: &[f64], b: &[f64]) -> Result<SparsePlan> {
    validate_weights(a, "a")?;
    validate_weights(b, "b")?;
    let (n, m) = (a.len(), b.len());
    let mut entries = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    let mut ra = a[0];
    let mut rb = b[0];
    // Remainders that are mathematically equal can land a rounding error
    // apart in floats; treating them as distinct would append a spurious
    // near-zero entry whose tight constraint poisons dual recovery.
    let tie = 1e-12;
    while i < n && j < m {
        let t = ra.min(rb);
        entries.push((i, j, t));
        let adv_a = ra - t <= tie;
        let adv_b = rb - t <= tie;
        if adv_a {
            i += 1;
            if i < n {
                ra = a[i];
            }
        } else {
            ra -= t;
        }
        if adv_b {
            j += 1;
            if j < m {
                rb = b[j];
            }
        } else {
            rb -= t;
        }
    }
    SparsePlan::new(entries, n, m)
}

fn validate_weights(w: &[f64], name: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Weights(format!("{name} is empty")));
    }
    if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Weights(format!("{name} must be strictly positive and finite")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Weights(format!("{name} must sum to 1, got {sum}")));
    }
    Ok(())
}

/// One tree of a [`SupportForest`]. Nodes are indexed over the bipartite set:
/// sources are `0..n`, target `j` is node `n + j`. Edges are listed in
/// breadth-first pre-order as `(parent, child)`, so every parent appears
/// before its descendants.
#[derive(Debug, Clone)]
pub struct Tree {
    pub root_source: usize,
    pub edges: Vec<(usize, usize)>,
}

/// The support of a vertex plan as a forest over sources and targets,
/// components ordered by their smallest source node.
#[derive(Debug, Clone)]
pub struct SupportForest {
    n: usize,
    trees: Vec<Tree>,
}

impl SupportForest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Whether a node id refers to a source (`id < n`) or target (`id >= n`).
    pub fn is_source(&self, node: usize) -> bool {
        node < self.n
    }
}

/// Organizes the support of `plan` into a forest. Errors if the support
/// contains a cycle (the plan is not a vertex of the transport polytope) or
/// if some target carries no mass at all.
pub fn forest_from_plan(plan: &SparsePlan) -> Result<SupportForest> {
    let (n, m) = (plan.n, plan.m);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for &(i, j, _) in plan.entries() {
        adj[i].push(n + j);
        adj[n + j].push(i);
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut visited = vec![false; n + m];
    let mut trees = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut edges = Vec::new();
        let mut nodes = 1usize;
        let mut degree_sum = 0usize;
        while let Some(u) = queue.pop_front() {
            degree_sum += adj[u].len();
            for &v in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    edges.push((u, v));
                    queue.push_back(v);
                    nodes += 1;
                }
            }
        }
        // In a tree the component's edge count is nodes - 1; a vertex plan
        // whose support closes a loop has more.
        if degree_sum / 2 != nodes - 1 {
            return Err(Error::CyclicSupport);
        }
        trees.push(Tree { root_source: root, edges });
    }
    if let Some(t) = (0..m).find(|&t| !visited[n + t]) {
        return Err(Error::Argument(format!("target {t} carries no plan mass")));
    }
    Ok(SupportForest { n, trees })
}

/// Recovers optimal dual potentials from an optimal unregularized plan.
///
/// With `f` anchored to 0 at the first tree's root, each remaining tree root
/// is repeatedly lowered to its cheapest route through any priced target
/// (`f_s <- min_j C[s][j] - C[iota(j)][j] + f[iota(j)]`, where `iota(j)` is
/// the smallest source sharing mass with `j`), and tightness
/// `f_i + g_j = C[i][j]` is pushed along every tree's pre-order edges. The
/// rounds stop when no `f` entry moves by more than 1e-12 (at most `n + m`
/// rounds). The result is checked for dual feasibility
/// `f_i + g_j <= C[i][j] + 1e-9` on all pairs; failure means the plan was
/// not optimal for this cost.
pub fn recover_duals(cost: &CostMatrix, plan: &SparsePlan) -> Result<(Array1<f64>, Array1<f64>)> {
    let (n, m) = (plan.n, plan.m);
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::Shape(format!(
            "cost {}x{} vs plan {}x{}",
            cost.nrows(),
            cost.ncols(),
            n,
            m
        )));
    }
    let c = cost.values();

    // Degenerate shapes are a single star: every constraint is a support
    // edge, so making them all tight is both feasible and optimal.
    if n == 1 {
        let f = Array1::zeros(1);
        let g = Array1::from_shape_fn(m, |j| c[[0, j]]);
        return Ok((f, g));
    }
    if m == 1 {
        let g0 = c[[0, 0]];
        let f = Array1::from_shape_fn(n, |i| c[[i, 0]] - g0);
        return Ok((f, Array1::from(vec![g0])));
    }

    let forest = forest_from_plan(plan)?;
    let mut iota = vec![usize::MAX; m];
    for &(i, j, _) in plan.entries() {
        if i < iota[j] {
            iota[j] = i;
        }
    }

    // Label-correcting initialization: the anchor root is priced at 0 and
    // every other node starts unpriced (+inf), so prices spread outward from
    // the anchor. Starting everything at 0 instead would let each root's
    // minimum bootstrap off its own zero label and converge to potentials
    // that violate the anchor row's constraints on assignment-type plans.
    let mut f = vec![f64::INFINITY; n];
    let mut g = vec![0.0; m];
    f[forest.trees()[0].root_source] = 0.0;
    for _ in 0..(n + m) {
        let f_prev = f.clone();
        for tree in forest.trees().iter().skip(1) {
            let s = tree.root_source;
            let mut best = f64::INFINITY;
            for j in 0..m {
                if f[iota[j]].is_finite() {
                    let v = c[[s, j]] - c[[iota[j], j]] + f[iota[j]];
                    if v < best {
                        best = v;
                    }
                }
            }
            f[s] = best;
        }
        for tree in forest.trees() {
            for &(parent, child) in &tree.edges {
                if parent < n {
                    g[child - n] = c[[parent, child - n]] - f[parent];
                } else {
                    f[child] = c[[child, parent - n]] - g[parent - n];
                }
            }
        }
        let delta = f
            .iter()
            .zip(&f_prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if delta <= FIXED_POINT_TOL {
            break;
        }
    }

    check_feasible(c, &f, &g)?;
    Ok((Array1::from(f), Array1::from(g)))
}

fn check_feasible(c: ndarray::ArrayView2<'_, f64>, f: &[f64], g: &[f64]) -> Result<()> {
    let mut violation = 0.0f64;
    for (i, &fi) in f.iter().enumerate() {
        for (j, &gj) in g.iter().enumerate() {
            violation = violation.max(fi + gj - c[[i, j]]);
        }
    }
    if violation > FEASIBILITY_TOL {
        return Err(Error::NonOptimalPlan { violation });
    }
    Ok(())
}

/// Fixed-point iteration for the uniform sorted square case, where the
/// identity matching is optimal and `g_j = C[j][j] - f_j`:
///
/// ```text
/// f_i <- min_j (C[i][j] - C[j][j] + f_j)
/// ```
///
/// `vectorized` reads all `f_j` from the previous iterate (synchronous
/// update, one full sweep per iteration); otherwise coordinates are updated
/// in place, alternating the scan direction on every sweep. Shortest-path
/// chains on sorted one-dimensional instances run monotonically in the
/// index, so one forward plus one backward in-place sweep already reaches
/// the fixed point there, while the synchronous update propagates a single
/// hop per sweep. Both variants stop early once no entry moves by more than
/// 1e-12, and both converge to the same fixed point (the update is a
/// monotone contraction from zero).
pub fn dualsort(cost: &CostMatrix, iters: usize, vectorized: bool) -> Result<Array1<f64>> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::Shape(format!(
            "square cost required, got {}x{}",
            n,
            cost.ncols()
        )));
    }
    if iters == 0 {
        return Err(Error::Argument("dualsort needs at least one iteration".into()));
    }
    let c = cost.values();
    let diag: Vec<f64> = (0..n).map(|i| c[[i, i]]).collect();
    let mut f = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for sweep in 0..iters {
        let mut delta = 0.0f64;
        if vectorized {
            scratch.copy_from_slice(&f);
        }
        let backward = !vectorized && sweep % 2 == 1;
        for step in 0..n {
            let i = if backward { n - 1 - step } else { step };
            let mut best = f64::INFINITY;
            for j in 0..n {
                // In-place mode intentionally reads entries already updated
                // in this same sweep; vectorized mode reads the snapshot.
                let fj = if vectorized { scratch[j] } else { f[j] };
                let v = c[[i, j]] - diag[j] + fj;
                if v < best {
                    best = v;
                }
            }
            delta = delta.max((best - f[i]).abs());
            f[i] = best;
        }
        if delta <= FIXED_POINT_TOL {
            break;
        }
    }
    Ok(Array1::from(f))
}

/// Full one-dimensional initializer: sort `x` and `y`, recover exact
/// unregularized duals on the sorted problem, and return the source-side
/// potential permuted back to the original order of `x`.
///
/// For `n = m` with uniform weights the sorted plan is the identity matching
/// and the potential comes from 3 in-place [`dualsort`] sweeps (exact on
/// such instances, since the alternating scan needs only two); otherwise the
/// plan is [`northwest_corner`] and the potential comes from
/// [`recover_duals`]. `cost` must make `-cost` supermodular (squared
/// difference qualifies); this is what makes the sorted plan optimal.
pub fn init_1d<F>(x: &[f64], y: &[f64], a: &[f64], b: &[f64], cost: F) -> Result<Array1<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    if x.len() != a.len() || y.len() != b.len() {
        return Err(Error::Shape(format!(
            "supports vs weights: ({}, {}) and ({}, {})",
            x.len(),
            a.len(),
            y.len(),
            b.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("1D supports".into()));
    }
    validate_weights(a, "a")?;
    validate_weights(b, "b")?;
    let (n, m) = (x.len(), y.len());

    let sigma = argsort(x);
    let rho = argsort(y);
    let xs: Vec<f64> = sigma.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = rho.iter().map(|&j| y[j]).collect();
    let cost_sorted = CostMatrix::from_scalar_cost(&xs, &ys, &cost)?;

    let uniform = n == m
        && a.iter().all(|&w| (w - 1.0 / n as f64).abs() <= 1e-12)
        && b.iter().all(|&w| (w - 1.0 / m as f64).abs() <= 1e-12);
    let f_sorted = if uniform {
        dualsort(&cost_sorted, 3, false)?
    } else {
        let a_sorted: Vec<f64> = sigma.iter().map(|&i| a[i]).collect();
        let b_sorted: Vec<f64> = rho.iter().map(|&j| b[j]).collect();
        let plan = northwest_corner(&a_sorted, &b_sorted)?;
        recover_duals(&cost_sorted, &plan)?.0
    };

    let mut f = Array1::zeros(n);
    for (pos, &orig) in sigma.iter().enumerate() {
        f[orig] = f_sorted[pos];
    }
    Ok(f)
}
