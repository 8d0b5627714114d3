//! Log-domain Sinkhorn iteration on dual potentials.
//!
//! The solver maximizes the entropic dual
//!
//! ```text
//! E(f, g) = <f, a> + <g, b> - eps * sum_ij exp((f_i + g_j - C_ij) / eps)
//! ```
//!
//! by relaxed block updates
//!
//! ```text
//! f_i <- (1 - w) f_i + w (eps ln a_i - eps lse_j((g_j - C_ij) / eps))
//! g_j <- (1 - w) g_j + w (eps ln b_j - eps lse_i((f_i - C_ij) / eps))
//! ```
//!
//! where `lse` is a max-shifted log-sum-exp, so the kernel `exp(-C/eps)` is
//! never materialized and the update is overflow-safe at any `eps > 0`. At
//! `w = 1` each half-update is exact block-coordinate ascent: it zeroes the
//! corresponding block of the dual gradient, so the updated side's marginal
//! of `exp((f_i + g_j - C_ij)/eps)` reproduces its weight vector exactly.
//!
//! Iteration counts everywhere in this crate refer to **full sweeps** (both
//! half-updates). Convergence is declared when the summed L1 marginal error
//! `sum_i |P 1 - a|_i + sum_j |P^T 1 - b|_j` of the implied coupling drops
//! below `tau`; the check runs every `check_every` sweeps.
//!
//! A warm start supplies one informative potential (usually `f^0`) with the
//! other side zero; the solver then updates the *other* side first so the
//! supplied information is consumed rather than overwritten by the first
//! exact update.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::util::exp_nonpos;
use crate::{Error, Result};

/// A pair of dual potentials together with the regularization they target.
#[derive(Debug, Clone)]
pub struct DualPotentials {
    f: Array1<f64>,
    g: Array1<f64>,
    epsilon: f64,
}

impl DualPotentials {
    /// Wraps finite potential vectors. Errors on non-finite entries or
    /// non-positive epsilon.
    pub fn new(f: Array1<f64>, g: Array1<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual potentials".into()));
        }
        Ok(Self { f, g, epsilon })
    }

    /// Zero potentials of the given shape.
    pub fn zeros(n: usize, m: usize, epsilon: f64) -> Result<Self> {
        Self::new(Array1::zeros(n), Array1::zeros(m), epsilon)
    }

    pub fn f(&self) -> ArrayView1<'_, f64> {
        self.f.view()
    }

    pub fn g(&self) -> ArrayView1<'_, f64> {
        self.g.view()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn into_parts(self) -> (Array1<f64>, Array1<f64>, f64) {
        (self.f, self.g, self.epsilon)
    }
}

/// Optional acceleration on top of the plain sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Acceleration {
    /// Plain alternating updates with the configured relaxation `omega`.
    None,
    /// Fixed over-relaxation; replaces the configured `omega`.
    Momentum { omega: f64 },
    /// Over-relaxation re-estimated every `adapt_every` sweeps from the
    /// observed contraction of the marginal error:
    /// `omega = 2 / (1 + sqrt(max(0, 1 - rho)))`, clipped to `[1.0, 1.95]`,
    /// where `rho` is the per-sweep error ratio over the last window.
    Adaptive { adapt_every: usize },
    /// Anderson mixing over the stacked `(f, g)` iterate with the given
    /// history length; least squares is Tikhonov-regularized (1e-10), falls
    /// back to the plain step when degenerate, and restarts the history if
    /// mixing produces non-finite values.
    Anderson { memory: usize },
    /// Starts at `start_factor * epsilon` and multiplies the running
    /// regularization by `decay` at every convergence check until it reaches
    /// the target; convergence is only declared at the target epsilon.
    EpsilonDecay { start_factor: f64, decay: f64 },
}

impl Acceleration {
    /// Momentum with the stock over-relaxation 1.05.
    pub fn momentum() -> Self {
        Acceleration::Momentum { omega: 1.05 }
    }

    /// Adaptive momentum re-estimated every 10 sweeps.
    pub fn adaptive() -> Self {
        Acceleration::Adaptive { adapt_every: 10 }
    }

    /// Anderson mixing with 5 stored iterates.
    pub fn anderson() -> Self {
        Acceleration::Anderson { memory: 5 }
    }

    /// Epsilon decay from `5 * epsilon` with factor 0.8 per check.
    pub fn epsilon_decay() -> Self {
        Acceleration::EpsilonDecay { start_factor: 5.0, decay: 0.8 }
    }
}

impl Default for Acceleration {
    fn default() -> Self {
        Acceleration::None
    }
}

/// Solver configuration. `epsilon` is problem-specific; everything else has
/// stock defaults: `tau = 0.01`, `max_iters = 10_000`, `omega = 1.0`,
/// `check_every = 10`, no acceleration.
#[derive(Debug, Clone)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    /// Convergence threshold on the summed L1 marginal error.
    pub tau: f64,
    /// Hard cap on full sweeps; hitting it is a non-converged result, not an
    /// error.
    pub max_iters: usize,
    /// Relaxation for plain updates; must lie in (0, 2).
    pub omega: f64,
    pub acceleration: Acceleration,
    /// Sweeps between convergence checks.
    pub check_every: usize,
    /// Record the dual objective after every sweep (costs one O(nm) pass per
    /// sweep; off by default).
    pub record_dual_objective: bool,
}

impl SinkhornConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tau: 0.01,
            max_iters: 10_000,
            omega: 1.0,
            acceleration: Acceleration::None,
            check_every: 10,
            record_dual_objective: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::Config(format!("omega must lie in (0, 2), got {}", self.omega)));
        }
        if self.check_every == 0 {
            return Err(Error::Config("check_every must be at least 1".into()));
        }
        match self.acceleration {
            Acceleration::None => {}
            Acceleration::Momentum { omega } => {
                if !(omega > 0.0 && omega < 2.0) {
                    return Err(Error::Config(format!(
                        "momentum omega must lie in (0, 2), got {omega}"
                    )));
                }
            }
            Acceleration::Adaptive { adapt_every } => {
                if adapt_every == 0 {
                    return Err(Error::Config("adaptive window must be at least 1".into()));
                }
            }
            Acceleration::Anderson { memory } => {
                if memory == 0 {
                    return Err(Error::Config("anderson memory must be at least 1".into()));
                }
            }
            Acceleration::EpsilonDecay { start_factor, decay } => {
                if !(start_factor >= 1.0) || !start_factor.is_finite() {
                    return Err(Error::Config(format!(
                        "epsilon-decay start factor must be >= 1, got {start_factor}"
                    )));
                }
                if !(decay > 0.0 && decay < 1.0) {
                    return Err(Error::Config(format!(
                        "epsilon-decay factor must lie in (0, 1), got {decay}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Starting point for the iteration.
#[derive(Debug, Clone)]
pub enum SinkhornInit {
    /// Both potentials zero.
    Zero,
    /// Supplied potentials; a side that is identically zero counts as
    /// uninformative and is updated first.
    Warm(DualPotentials),
}

/// A one-sided warm-start vector, tagged with the side it lives on.
///
/// Initializers produce a single potential — on the source side when
/// `n <= m`, on the target side otherwise — and the solver recomputes the
/// opposite side exactly on the first half-sweep.
#[derive(Debug, Clone)]
pub enum InitialPotential {
    OnSource(Array1<f64>),
    OnTarget(Array1<f64>),
}

impl InitialPotential {
    pub fn values(&self) -> &Array1<f64> {
        match self {
            InitialPotential::OnSource(v) | InitialPotential::OnTarget(v) => v,
        }
    }

    /// Pads the uninformative side with zeros and packages the pair for
    /// [`SinkhornInit::Warm`].
    pub fn into_duals(self, n: usize, m: usize, epsilon: f64) -> Result<DualPotentials> {
        match self {
            InitialPotential::OnSource(v) => {
                if v.len() != n {
                    return Err(Error::Shape(format!(
                        "source potential length {} vs n = {n}",
                        v.len()
                    )));
                }
                DualPotentials::new(v, Array1::zeros(m), epsilon)
            }
            InitialPotential::OnTarget(v) => {
                if v.len() != m {
                    return Err(Error::Shape(format!(
                        "target potential length {} vs m = {m}",
                        v.len()
                    )));
                }
                DualPotentials::new(Array1::zeros(n), v, epsilon)
            }
        }
    }
}

/// What happened during a solve. `iterations` counts full sweeps.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Summed L1 marginal error at the reported state.
    pub final_error: f64,
    /// `(sweep, error)` at every convergence check, sweeps strictly
    /// increasing.
    pub error_trace: Vec<(usize, f64)>,
    /// Dual objective after each sweep, when recording was requested.
    pub dual_objective_trace: Option<Vec<f64>>,
    pub wall_time_s: f64,
}

/// A dense transport plan (nonnegative entries).
#[derive(Debug, Clone)]
pub struct TransportPlan {
    values: Array2<f64>,
}

impl TransportPlan {
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.sum()
    }
}

/// Row-wise soft minimum: `softmin(S)_i = -eps * ln sum_j exp(-S_ij / eps)`,
/// evaluated with a max shift so arbitrarily scaled inputs stay finite.
pub fn softmin_rows(s: ArrayView2<'_, f64>, epsilon: f64) -> Array1<f64> {
    let inv_eps = 1.0 / epsilon;
    let mut out = Array1::zeros(s.nrows());
    for (i, row) in s.rows().into_iter().enumerate() {
        let mx = row.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(-v));
        let sum: f64 = row.iter().map(|&v| exp_nonpos((-v - mx) * inv_eps)).sum();
        out[i] = -epsilon * (mx * inv_eps + sum.ln());
    }
    out
}

/// Centers a potential to zero mean (the gauge freedom `(f + s, g - s)`
/// leaves the coupling unchanged, so comparisons are made mean-free).
pub fn center_potential(v: ArrayView1<'_, f64>) -> Array1<f64> {
    let mean = v.sum() / v.len() as f64;
    v.mapv(|x| x - mean)
}

/// The coupling implied by dual potentials:
/// `P_ij = exp((f_i + g_j - C_ij) / eps)`, evaluated in log space per entry.
pub fn coupling_from_duals(potentials: &DualPotentials, cost: &CostMatrix) -> Result<TransportPlan> {
    let (n, m) = (cost.nrows(), cost.ncols());
    if potentials.f.len() != n || potentials.g.len() != m {
        return Err(Error::Shape(format!(
            "potentials ({}, {}) vs cost {}x{}",
            potentials.f.len(),
            potentials.g.len(),
            n,
            m
        )));
    }
    let inv_eps = 1.0 / potentials.epsilon;
    let c = cost.values();
    let mut values = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            values[[i, j]] = ((potentials.f[i] + potentials.g[j] - c[[i, j]]) * inv_eps).exp();
        }
    }
    Ok(TransportPlan { values })
}

/// Entropic dual objective
/// `E(f, g) = <f, a> + <g, b> - eps * sum_ij exp((f_i + g_j - C_ij)/eps)`,
/// with the bilinear term evaluated through a global log-sum-exp.
pub fn dual_objective(
    potentials: &DualPotentials,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
) -> Result<f64> {
    let (n, m) = (cost.nrows(), cost.ncols());
    if mu.len() != n || nu.len() != m || potentials.f.len() != n || potentials.g.len() != m {
        return Err(Error::Shape("dual objective inputs disagree on problem size".into()));
    }
    let eps = potentials.epsilon;
    let f = potentials.f.as_slice().expect("contiguous");
    let g = potentials.g.as_slice().expect("contiguous");
    let c = cost.values();
    let cflat = c.as_standard_layout();
    let cflat = cflat.as_slice().expect("contiguous");
    let linear: f64 = f
        .iter()
        .zip(mu.weights())
        .map(|(&fi, &ai)| fi * ai)
        .chain(g.iter().zip(nu.weights()).map(|(&gj, &bj)| gj * bj))
        .sum();
    Ok(linear - eps * bilinear_mass(cflat, f, g, eps))
}

/// `sum_ij exp((f_i + g_j - C_ij)/eps)` via per-row log-sum-exp stacked into
/// a global one, so intermediate sums cannot overflow.
fn bilinear_mass(cflat: &[f64], f: &[f64], g: &[f64], eps: f64) -> f64 {
    let m = g.len();
    let inv_eps = 1.0 / eps;
    let row_terms: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, &fi)| {
            let row = &cflat[i * m..(i + 1) * m];
            fi * inv_eps + row_lse(row, g, inv_eps)
        })
        .collect();
    crate::util::logsumexp(&row_terms).exp()
}

/// Summed L1 marginal error of a dense plan against its target marginals.
pub fn marginal_error(plan: &TransportPlan, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let p = plan.values();
    if p.nrows() != mu.len() || p.ncols() != nu.len() {
        return Err(Error::Shape(format!(
            "plan {}x{} vs measures {}x{}",
            p.nrows(),
            p.ncols(),
            mu.len(),
            nu.len()
        )));
    }
    let mut err = 0.0;
    for (row, &a) in p.rows().into_iter().zip(mu.weights()) {
        err += (row.sum() - a).abs();
    }
    for (col, &b) in p.columns().into_iter().zip(nu.weights()) {
        err += (col.sum() - b).abs();
    }
    Ok(err)
}

/// Solves the entropic problem between `mu` and `nu` under `cost`.
///
/// Returns the dual potentials at the final state together with a
/// [`SolveReport`]. Hitting `max_iters` yields `converged = false`; only
/// non-finite potentials are an error.
pub fn sinkhorn_solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    config: &SinkhornConfig,
    init: &SinkhornInit,
) -> Result<(DualPotentials, SolveReport)> {
    config.validate()?;
    let (n, m) = (mu.len(), nu.len());
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::Shape(format!(
            "cost {}x{} vs measures {}x{}",
            cost.nrows(),
            cost.ncols(),
            n,
            m
        )));
    }

    let (f0, g0) = match init {
        SinkhornInit::Zero => (vec![0.0; n], vec![0.0; m]),
        SinkhornInit::Warm(dp) => {
            if dp.f.len() != n || dp.g.len() != m {
                return Err(Error::Shape(format!(
                    "warm start ({}, {}) vs problem ({n}, {m})",
                    dp.f.len(),
                    dp.g.len()
                )));
            }
            (dp.f.to_vec(), dp.g.to_vec())
        }
    };

    let a = mu.weights().to_vec();
    let b = nu.weights().to_vec();
    let cflat = flatten(cost.values());
    let ctflat = transpose_flat(cost.values(), n, m);

    // A warm start that only carries f-side information must not have f
    // overwritten by the first exact update, so the sweep starts on the g
    // side. That is the same solve on the transposed problem.
    let f_informative = f0.iter().any(|&v| v != 0.0);
    let g_informative = g0.iter().any(|&v| v != 0.0);
    let start = Instant::now();
    let (f, g, mut report) = if f_informative && !g_informative {
        let (g, f, report) = solve_canonical(&b, &a, &ctflat, &cflat, g0, f0, config)?;
        (f, g, report)
    } else {
        solve_canonical(&a, &b, &cflat, &ctflat, f0, g0, config)?
    };
    report.wall_time_s = start.elapsed().as_secs_f64();

    let potentials = DualPotentials::new(Array1::from(f), Array1::from(g), config.epsilon)?;
    Ok((potentials, report))
}

/// Anderson mixing state over the stacked iterate.
struct AndersonState {
    memory: usize,
    /// Last iterates paired with their sweep images: `(x_k, G(x_k))`.
    hist: VecDeque<(Vec<f64>, Vec<f64>)>,
    input: Vec<f64>,
}

impl AndersonState {
    fn new(memory: usize) -> Self {
        Self { memory, hist: VecDeque::new(), input: Vec::new() }
    }

    fn note_input(&mut self, f: &[f64], g: &[f64]) {
        self.input.clear();
        self.input.extend_from_slice(f);
        self.input.extend_from_slice(g);
    }

    /// Mixes the post-sweep iterate in place. Degenerate least squares keeps
    /// the plain step; non-finite mixes restart the history.
    fn mix(&mut self, f: &mut [f64], g: &mut [f64]) {
        let mut gx = Vec::with_capacity(f.len() + g.len());
        gx.extend_from_slice(f);
        gx.extend_from_slice(g);
        self.hist.push_back((std::mem::take(&mut self.input), gx));
        if self.hist.len() > self.memory + 1 {
            self.hist.pop_front();
        }
        let h = self.hist.len();
        if h < 2 {
            return;
        }
        let w = h - 1;
        let dim = f.len() + g.len();
        let resid = |k: usize| -> Vec<f64> {
            let (x, gx) = &self.hist[k];
            gx.iter().zip(x).map(|(a, b)| a - b).collect()
        };
        let residuals: Vec<Vec<f64>> = (0..h).map(resid).collect();
        let dr: Vec<Vec<f64>> = (0..w)
            .map(|k| {
                residuals[k + 1]
                    .iter()
                    .zip(&residuals[k])
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let r_last = &residuals[h - 1];
        let mut gram = nalgebra::DMatrix::zeros(w, w);
        for p in 0..w {
            for q in p..w {
                let v: f64 = dr[p].iter().zip(&dr[q]).map(|(a, b)| a * b).sum();
                gram[(p, q)] = v;
                gram[(q, p)] = v;
            }
            gram[(p, p)] += 1e-10;
        }
        let rhs = nalgebra::DVector::from_fn(w, |p, _| {
            dr[p].iter().zip(r_last).map(|(a, b)| a * b).sum()
        });
        let gamma = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => match gram.lu().solve(&rhs) {
                Some(sol) => sol,
                None => return, // keep the plain step
            },
        };
        if gamma.iter().any(|v| !v.is_finite()) {
            return;
        }
        // x_next = G(x_last) - sum_k gamma_k (G(x_{k+1}) - G(x_k))
        let mut x_next = self.hist[h - 1].1.clone();
        for (k, &gk) in gamma.iter().enumerate() {
            let (_, gx_hi) = &self.hist[k + 1];
            let (_, gx_lo) = &self.hist[k];
            for i in 0..dim {
                x_next[i] -= gk * (gx_hi[i] - gx_lo[i]);
            }
        }
        if x_next.iter().any(|v| !v.is_finite()) {
            self.hist.clear();
            return;
        }
        let (fn_, gn) = x_next.split_at(f.len());
        f.copy_from_slice(fn_);
        g.copy_from_slice(gn);
    }
}

/// The canonical loop: rows first. `a`/`cflat` describe the side updated
/// first; `ctflat` is the transposed cost for the second side.
fn solve_canonical(
    a: &[f64],
    b: &[f64],
    cflat: &[f64],
    ctflat: &[f64],
    mut f: Vec<f64>,
    mut g: Vec<f64>,
    config: &SinkhornConfig,
) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    let target_eps = config.epsilon;
    let tau = config.tau;
    let check_every = config.check_every;

    let mut eps = match config.acceleration {
        Acceleration::EpsilonDecay { start_factor, .. } => start_factor * target_eps,
        _ => target_eps,
    };
    let mut omega = match config.acceleration {
        Acceleration::Momentum { omega } => omega,
        _ => config.omega,
    };
    // Anderson replaces the iterate after the sweep and epsilon decay moves
    // the regularization under it, so both invalidate the accumulators the
    // fused O(n+m) check reuses; they pay for explicit O(nm) checks instead.
    let fused = !matches!(
        config.acceleration,
        Acceleration::Anderson { .. } | Acceleration::EpsilonDecay { .. }
    );
    let mut anderson = match config.acceleration {
        Acceleration::Anderson { memory } => Some(AndersonState::new(memory)),
        _ => None,
    };

    let mut wa: Vec<f64> = a.iter().map(|&x| eps * x.ln()).collect();
    let mut wb: Vec<f64> = b.iter().map(|&x| eps * x.ln()).collect();

    let mut lse_col = vec![0.0; g.len()];
    let mut pending_col_err = 0.0;
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut dual_trace: Option<Vec<f64>> = config.record_dual_objective.then(Vec::new);
    let mut last_window: Option<(usize, f64)> = None;
    let mut completed = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    let mut final_err = f64::NAN;

    while completed < config.max_iters {
        if let Some(ast) = anderson.as_mut() {
            ast.note_input(&f, &g);
        }

        // --- first half-update; prices the previous state's row error for free
        let measure_prev = fused && completed > 0 && completed % check_every == 0;
        let row_err = potential_pass(cflat, &mut f, &g, a, &wa, eps, omega, None, measure_prev);
        if measure_prev {
            let err = row_err + pending_col_err;
            trace.push((completed, err));
            adapt_omega(&config.acceleration, &mut omega, &mut last_window, completed, err);
            if err < tau {
                converged = true;
                iterations = completed;
                final_err = err;
                break;
            }
        }

        // --- second half-update
        let executing = completed + 1;
        let need_col = fused && executing % check_every == 0;
        potential_pass(
            ctflat,
            &mut g,
            &f,
            b,
            &wb,
            eps,
            omega,
            need_col.then_some(&mut lse_col[..]),
            false,
        );
        if need_col {
            pending_col_err = side_error_from_lse(&g, &lse_col, b, eps);
        }
        if let Some(ast) = anderson.as_mut() {
            ast.mix(&mut f, &mut g);
        }
        completed = executing;

        if f.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Diverged { sweep: completed });
        }

        // --- explicit check path (Anderson / epsilon decay)
        if !fused && completed % check_every == 0 {
            let err = explicit_error(cflat, ctflat, &f, &g, a, b, eps);
            trace.push((completed, err));
            adapt_omega(&config.acceleration, &mut omega, &mut last_window, completed, err);
            let at_target = eps == target_eps;
            if at_target && err < tau {
                converged = true;
                iterations = completed;
                final_err = err;
                break;
            }
            if !at_target {
                if let Acceleration::EpsilonDecay { decay, .. } = config.acceleration {
                    let next = eps * decay;
                    eps = if next <= target_eps { target_eps } else { next };
                    for (w, &x) in wa.iter_mut().zip(a) {
                        *w = eps * x.ln();
                    }
                    for (w, &x) in wb.iter_mut().zip(b) {
                        *w = eps * x.ln();
                    }
                }
            }
        }

        if let Some(tr) = dual_trace.as_mut() {
            tr.push(dual_value(cflat, &f, &g, a, b, eps));
        }
    }

    if !converged {
        // Measure the final state at the target regularization (epsilon decay
        // may still be above it when the budget runs out).
        let err = explicit_error(cflat, ctflat, &f, &g, a, b, target_eps);
        final_err = err;
        iterations = completed;
        converged = err < tau && eps == target_eps;
    }

    Ok((
        f,
        g,
        SolveReport {
            iterations,
            converged,
            final_error: final_err,
            error_trace: trace,
            dual_objective_trace: dual_trace,
            wall_time_s: 0.0,
        },
    ))
}

/// One relaxed block update of `locals` against `others`, in place.
///
/// `cost` is row-major with `others.len()` columns. When `accumulate_err` is
/// set, returns the L1 distance between `weights` and the marginals
/// `exp(locals_i / eps + lse_i)` of the state *entering* the pass (`locals`
/// read before being overwritten). When `lse_out` is given, stores
/// `lse_i = lse_j((others_j - cost_ij) / eps)` for reuse.
#[allow(clippy::too_many_arguments)]
fn potential_pass(
    cost: &[f64],
    locals: &mut [f64],
    others: &[f64],
    weights: &[f64],
    eps_log_w: &[f64],
    eps: f64,
    omega: f64,
    mut lse_out: Option<&mut [f64]>,
    accumulate_err: bool,
) -> f64 {
    let m = others.len();
    let inv_eps = 1.0 / eps;
    let mut err = 0.0;
    for (i, li) in locals.iter_mut().enumerate() {
        let row = &cost[i * m..(i + 1) * m];
        let mx = row_max(row, others);
        let sum = row_expsum(row, others, mx, inv_eps);
        let lse = mx * inv_eps + sum.ln();
        if accumulate_err {
            err += ((*li * inv_eps + lse).exp() - weights[i]).abs();
        }
        if let Some(buf) = lse_out.as_deref_mut() {
            buf[i] = lse;
        }
        let target = eps_log_w[i] - eps * lse;
        *li = if omega == 1.0 { target } else { (1.0 - omega) * *li + omega * target };
    }
    err
}

/// L1 marginal error of one side from its stored log-sum-exp accumulator:
/// the plan's side-`i` marginal is `exp(pot_i / eps + lse_i)`.
fn side_error_from_lse(pot: &[f64], lse: &[f64], weights: &[f64], eps: f64) -> f64 {
    let inv_eps = 1.0 / eps;
    pot.iter()
        .zip(lse)
        .zip(weights)
        .map(|((&p, &l), &w)| ((p * inv_eps + l).exp() - w).abs())
        .sum()
}

/// Full O(nm) marginal error of the state `(f, g)` at regularization `eps`.
fn explicit_error(
    cflat: &[f64],
    ctflat: &[f64],
    f: &[f64],
    g: &[f64],
    a: &[f64],
    b: &[f64],
    eps: f64,
) -> f64 {
    margin_error_pass(cflat, f, g, a, eps) + margin_error_pass(ctflat, g, f, b, eps)
}

/// `sum_i |exp(locals_i/eps + lse_i(others)) - weights_i|` without touching
/// the potentials.
fn margin_error_pass(cost: &[f64], locals: &[f64], others: &[f64], weights: &[f64], eps: f64) -> f64 {
    let m = others.len();
    let inv_eps = 1.0 / eps;
    let mut err = 0.0;
    for (i, &li) in locals.iter().enumerate() {
        let row = &cost[i * m..(i + 1) * m];
        let lse = row_lse(row, others, inv_eps);
        err += ((li * inv_eps + lse).exp() - weights[i]).abs();
    }
    err
}

/// `lse_j((others_j - row_j) * inv_eps)` with max shift.
fn row_lse(row: &[f64], others: &[f64], inv_eps: f64) -> f64 {
    let mx = row_max(row, others);
    let sum = row_expsum(row, others, mx, inv_eps);
    mx * inv_eps + sum.ln()
}

/// Lane width of the solver's row reductions. Eight independent
/// accumulators let the compiler keep the whole pass in vector registers.
const LANES: usize = 8;

/// `max_j (others_j - row_j)`, lane-parallel.
#[inline]
fn row_max(row: &[f64], others: &[f64]) -> f64 {
    let rc = row.chunks_exact(LANES);
    let oc = others.chunks_exact(LANES);
    let (rrem, orem) = (rc.remainder(), oc.remainder());
    let mut acc = [f64::NEG_INFINITY; LANES];
    for (r, o) in rc.zip(oc) {
        for l in 0..LANES {
            let t = o[l] - r[l];
            if t > acc[l] {
                acc[l] = t;
            }
        }
    }
    let mut mx = f64::NEG_INFINITY;
    for &v in &acc {
        if v > mx {
            mx = v;
        }
    }
    for (&c, &o) in rrem.iter().zip(orem) {
        let t = o - c;
        if t > mx {
            mx = t;
        }
    }
    mx
}

/// `sum_j exp((others_j - row_j - mx) * inv_eps)`, lane-parallel. The lane
/// accumulators fix the summation order, so results are identical across
/// targets and reruns.
#[inline]
fn row_expsum(row: &[f64], others: &[f64], mx: f64, inv_eps: f64) -> f64 {
    let rc = row.chunks_exact(LANES);
    let oc = others.chunks_exact(LANES);
    let (rrem, orem) = (rc.remainder(), oc.remainder());
    let mut acc = [0.0f64; LANES];
    for (r, o) in rc.zip(oc) {
        for l in 0..LANES {
            acc[l] += exp_nonpos((o[l] - r[l] - mx) * inv_eps);
        }
    }
    let mut sum: f64 = acc.iter().sum();
    for (&c, &o) in rrem.iter().zip(orem) {
        sum += exp_nonpos((o - c - mx) * inv_eps);
    }
    sum
}

/// Dual objective on raw slices (used for the per-sweep trace).
fn dual_value(cflat: &[f64], f: &[f64], g: &[f64], a: &[f64], b: &[f64], eps: f64) -> f64 {
    let linear: f64 = f
        .iter()
        .zip(a)
        .map(|(&fi, &ai)| fi * ai)
        .chain(g.iter().zip(b).map(|(&gj, &bj)| gj * bj))
        .sum();
    linear - eps * bilinear_mass(cflat, f, g, eps)
}

/// Re-estimates the over-relaxation from the error contraction when the
/// adaptive window elapses.
fn adapt_omega(
    accel: &Acceleration,
    omega: &mut f64,
    last_window: &mut Option<(usize, f64)>,
    sweep: usize,
    err: f64,
) {
    let Acceleration::Adaptive { adapt_every } = *accel else {
        return;
    };
    if sweep % adapt_every != 0 {
        return;
    }
    if let Some((prev_sweep, prev_err)) = *last_window {
        let span = (sweep - prev_sweep) as f64;
        let ratio = err / prev_err;
        *omega = if ratio.is_finite() && ratio < 1.0 && span > 0.0 {
            let rho = ratio.powf(1.0 / span);
            (2.0 / (1.0 + (1.0 - rho).sqrt())).clamp(1.0, 1.95)
        } else {
            1.0
        };
    }
    *last_window = Some((sweep, err));
}

fn flatten(c: ArrayView2<'_, f64>) -> Vec<f64> {
    c.as_standard_layout().as_slice().expect("standard layout").to_vec()
}

fn transpose_flat(c: ArrayView2<'_, f64>, n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[j * n + i] = c[[i, j]];
        }
    }
    out
}
