//! Gaussian-mixture warm starts: seeded weighted k-means++ plus EM fitting,
//! the K x K Bures-cost transport problem between two mixtures, and the
//! interpolated approximate potential
//!
//! ```text
//! f_hat(x) = sum_k f_tilde_k * p_k(x),
//! p_k(x)   = alpha_k rho_k(x) / sum_l alpha_l rho_l(x)
//! ```
//!
//! where `f_tilde` solves the K x K problem between the fitted mixtures and
//! `p(x)` are the posterior responsibilities of the source mixture. With one
//! component this collapses to the Gaussian initializer's idea of a single
//! global potential value; as components shrink onto individual points it
//! approaches the exact potentials.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::gauss::{bures_squared, fit_gaussian, GaussianParams};
use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::sinkhorn::{sinkhorn_solve, InitialPotential, SinkhornConfig, SinkhornInit};
use crate::util::derive_seed;
use crate::{Error, Result};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Maximum Lloyd iterations for the k-means warm start.
const KMEANS_MAX: usize = 100;
/// Maximum EM iterations.
const EM_MAX: usize = 200;
/// EM stops once the weighted log-likelihood improves by less than this.
const EM_LL_TOL: f64 = 1e-6;
/// Relative covariance ridge, matching the single-Gaussian fit.
const COV_RIDGE: f64 = 1e-6;
/// Convergence threshold for the inner K x K solve; the problem is tiny, so
/// anything short of near-exact convergence signals misconfiguration.
const INNER_TAU: f64 = 1e-6;
const INNER_MAX_ITERS: usize = 10_000;

/// Covariance structure fitted by EM. `Diagonal` zeroes all off-diagonal
/// entries in the M-step, trading fidelity for `O(d)` per-pair Bures costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    Full,
    Diagonal,
}

/// A fitted K-component Gaussian mixture.
#[derive(Debug, Clone)]
pub struct GmmParams {
    weights: Array1<f64>,
    components: Vec<GaussianParams>,
}

impl GmmParams {
    /// Wraps mixture weights and components, validating that weights are
    /// positive and sum to one within 1e-9 and that all components share one
    /// dimension.
    pub fn new(weights: Array1<f64>, components: Vec<GaussianParams>) -> Result<Self> {
        if weights.len() != components.len() || components.is_empty() {
            return Err(Error::Shape(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Weights("mixture weights must be positive and finite".into()));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Weights(format!("mixture weights sum to {total}, not 1")));
        }
        let d = components[0].mean().len();
        if components.iter().any(|c| c.mean().len() != d) {
            return Err(Error::Shape("components disagree on dimension".into()));
        }
        Ok(Self { weights, components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean().len()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn components(&self) -> &[GaussianParams] {
        &self.components
    }
}

/// Per-component Cholesky state for log-density evaluation.
struct LogDensity {
    ln_weight: f64,
    mean: Array1<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    ln_norm: f64,
}

impl LogDensity {
    fn prepare(params: &GmmParams) -> Result<Vec<LogDensity>> {
        let d = params.dim();
        params
            .weights
            .iter()
            .zip(&params.components)
            .map(|(&alpha, comp)| {
                let dm = nalgebra::DMatrix::from_row_iterator(d, d, comp.cov().iter().cloned());
                let chol = nalgebra::Cholesky::new(dm).ok_or_else(|| {
                    Error::NotPositiveDefinite(f64::NAN)
                })?;
                let ln_det: f64 = (0..d).map(|k| chol.l_dirty()[(k, k)].ln() * 2.0).sum();
                Ok(LogDensity {
                    ln_weight: alpha.ln(),
                    mean: comp.mean().to_owned(),
                    chol,
                    ln_norm: -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det),
                })
            })
            .collect()
    }

    /// `ln(alpha_k) + ln N(x; m_k, S_k)`.
    fn eval(&self, x: ArrayView1<'_, f64>) -> f64 {
        let d = x.len();
        let diff = nalgebra::DVector::from_iterator(d, x.iter().zip(&self.mean).map(|(a, b)| a - b));
        let solved = self.chol.l_dirty().solve_lower_triangular(&diff).expect("full-rank factor");
        self.ln_weight + self.ln_norm - 0.5 * solved.norm_squared()
    }
}

/// Posterior responsibilities of every point under the mixture: row `i`
/// holds `p_k(x_i)`, computed in log space with a per-point max shift so
/// points far from every component still normalize cleanly.
pub fn responsibilities(params: &GmmParams, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if points.ncols() != params.dim() {
        return Err(Error::Shape(format!(
            "points in R^{} vs mixture in R^{}",
            points.ncols(),
            params.dim()
        )));
    }
    let densities = LogDensity::prepare(params)?;
    let (n, k) = (points.nrows(), params.len());
    let mut out = Array2::<f64>::zeros((n, k));
    let mut row = vec![0.0f64; k];
    for i in 0..n {
        let x = points.row(i);
        let mut mx = f64::NEG_INFINITY;
        for (c, dens) in densities.iter().enumerate() {
            row[c] = dens.eval(x);
            mx = mx.max(row[c]);
        }
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            total += *v;
        }
        for (c, &v) in row.iter().enumerate() {
            out[[i, c]] = v / total;
        }
    }
    Ok(out)
}

/// Weighted log-likelihood `sum_i a_i ln sum_k alpha_k N(x_i; m_k, S_k)` —
/// the quantity whose stagnation stops EM.
pub fn weighted_log_likelihood(params: &GmmParams, measure: &DiscreteMeasure) -> Result<f64> {
    if measure.dim() != params.dim() {
        return Err(Error::Shape(format!(
            "measure in R^{} vs mixture in R^{}",
            measure.dim(),
            params.dim()
        )));
    }
    let densities = LogDensity::prepare(params)?;
    let pts = measure.support();
    let w = measure.weights();
    let mut ll = 0.0;
    for i in 0..pts.nrows() {
        let x = pts.row(i);
        let mut mx = f64::NEG_INFINITY;
        let vals: Vec<f64> = densities.iter().map(|d| d.eval(x)).collect();
        for &v in &vals {
            mx = mx.max(v);
        }
        let lse = mx + vals.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
        ll += w[i] * lse;
    }
    Ok(ll)
}

/// Fits a K-component mixture to a weighted point cloud: seeded weighted
/// k-means++ for the starting centers, at most 100 Lloyd iterations (empty
/// clusters are re-seeded from the farthest point), then weighted EM until
/// the log-likelihood gains less than 1e-6 or 200 iterations elapse.
/// Covariances carry the same relative ridge as the single-Gaussian fit.
pub fn fit_gmm(
    measure: &DiscreteMeasure,
    k: usize,
    seed: u64,
    cov_kind: CovarianceKind,
) -> Result<GmmParams> {
    let n = measure.len();
    if k == 0 {
        return Err(Error::Argument("mixture needs at least one component".into()));
    }
    if k > n {
        return Err(Error::Argument(format!("{k} components for {n} points")));
    }
    if k == 1 {
        // EM's fixed point with a single component is exactly the moment fit.
        return GmmParams::new(Array1::from(vec![1.0]), vec![fit_gaussian(measure)]);
    }

    let pts = measure.support();
    let w = measure.weights();
    let d = measure.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers = kmeans_pp_centers(pts, w.view(), k, &mut rng);
    let mut assignment = vec![0usize; n];
    for _ in 0..KMEANS_MAX {
        let mut changed = false;
        for i in 0..n {
            let x = pts.row(i);
            let mut best = (f64::INFINITY, 0usize);
            for (c, center) in centers.iter().enumerate() {
                let dist = sq_dist(x, center.view());
                if dist < best.0 {
                    best = (dist, c);
                }
            }
            if assignment[i] != best.1 {
                assignment[i] = best.1;
                changed = true;
            }
        }
        // Weighted means per cluster; empty clusters grab the point farthest
        // from its current center, which is deterministic and guarantees
        // progress.
        let mut mass = vec![0.0f64; k];
        let mut sums = vec![Array1::<f64>::zeros(d); k];
        for i in 0..n {
            mass[assignment[i]] += w[i];
            sums[assignment[i]].scaled_add(w[i], &pts.row(i));
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                centers[c] = &sums[c] / mass[c];
            } else {
                let far = (0..n)
                    .max_by(|&i, &j| {
                        let di = sq_dist(pts.row(i), centers[assignment[i]].view());
                        let dj = sq_dist(pts.row(j), centers[assignment[j]].view());
                        di.partial_cmp(&dj).expect("finite distances")
                    })
                    .expect("nonempty cloud");
                centers[c] = pts.row(far).to_owned();
                assignment[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Moment-match each cluster as the EM starting point.
    let mut alphas = vec![0.0f64; k];
    let mut means = centers;
    let mut covs = vec![Array2::<f64>::zeros((d, d)); k];
    {
        let mut resp = Array2::<f64>::zeros((n, k));
        for i in 0..n {
            resp[[i, assignment[i]]] = 1.0;
        }
        m_step(pts, w.view(), resp.view(), cov_kind, &mut alphas, &mut means, &mut covs);
    }

    let mut params = assemble(&alphas, &means, &covs)?;
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX {
        let densities = LogDensity::prepare(&params)?;
        let mut resp = Array2::<f64>::zeros((n, k));
        let mut ll = 0.0;
        for i in 0..n {
            let x = pts.row(i);
            let vals: Vec<f64> = densities.iter().map(|dens| dens.eval(x)).collect();
            let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for &v in &vals {
                total += (v - mx).exp();
            }
            for (c, &v) in vals.iter().enumerate() {
                resp[[i, c]] = (v - mx).exp() / total;
            }
            ll += w[i] * (mx + total.ln());
        }
        m_step(pts, w.view(), resp.view(), cov_kind, &mut alphas, &mut means, &mut covs);
        params = assemble(&alphas, &means, &covs)?;
        if (ll - prev_ll).abs() < EM_LL_TOL {
            break;
        }
        prev_ll = ll;
    }
    Ok(params)
}

/// Weighted k-means++ seeding: the first center is drawn by weight, later
/// ones with probability proportional to `a_i * D^2(x_i)`.
fn kmeans_pp_centers(
    pts: ArrayView2<'_, f64>,
    w: ArrayView1<'_, f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Array1<f64>> {
    let n = pts.nrows();
    let first = sample_categorical(w.iter().cloned(), rng);
    let mut centers = vec![pts.row(first).to_owned()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(pts.row(i), centers[0].view())).collect();
    while centers.len() < k {
        let next = sample_categorical(d2.iter().zip(w.iter()).map(|(&d, &wi)| d * wi), rng);
        centers.push(pts.row(next).to_owned());
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(pts.row(i), centers.last().unwrap().view()));
        }
    }
    centers
}

/// Draws an index proportionally to the given nonnegative scores, falling
/// back to index 0 when all scores vanish (identical points).
fn sample_categorical(scores: impl Iterator<Item = f64> + Clone, rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = scores.clone().sum();
    if !(total > 0.0) {
        return 0;
    }
    let draw = rng.gen_range(0.0..total);
    let mut acc = 0.0;
    let mut last = 0;
    for (i, s) in scores.enumerate() {
        acc += s;
        last = i;
        if draw < acc {
            return i;
        }
    }
    last
}

/// Weighted M-step: component masses, means, and ridged covariances from
/// responsibilities. A component whose mass underflows keeps its previous
/// mean, gets an isotropic ridge covariance, and a floor weight, so the
/// mixture stays valid.
fn m_step(
    pts: ArrayView2<'_, f64>,
    w: ArrayView1<'_, f64>,
    resp: ArrayView2<'_, f64>,
    cov_kind: CovarianceKind,
    alphas: &mut [f64],
    means: &mut [Array1<f64>],
    covs: &mut [Array2<f64>],
) {
    let (n, d) = (pts.nrows(), pts.ncols());
    let k = alphas.len();
    for c in 0..k {
        let mass: f64 = (0..n).map(|i| w[i] * resp[[i, c]]).sum();
        if mass < 1e-12 {
            alphas[c] = 1e-12;
            covs[c] = Array2::eye(d) * COV_RIDGE;
            continue;
        }
        alphas[c] = mass;
        let mut mean = Array1::<f64>::zeros(d);
        for i in 0..n {
            mean.scaled_add(w[i] * resp[[i, c]] / mass, &pts.row(i));
        }
        let mut cov = Array2::<f64>::zeros((d, d));
        for i in 0..n {
            let diff = &pts.row(i) - &mean;
            let scale = w[i] * resp[[i, c]] / mass;
            for r in 0..d {
                let s = scale * diff[r];
                match cov_kind {
                    CovarianceKind::Full => {
                        for col in 0..d {
                            cov[[r, col]] += s * diff[col];
                        }
                    }
                    CovarianceKind::Diagonal => cov[[r, r]] += s * diff[r],
                }
            }
        }
        let trace: f64 = (0..d).map(|r| cov[[r, r]]).sum();
        let ridge = if trace > 0.0 { COV_RIDGE * trace / d as f64 } else { COV_RIDGE };
        for r in 0..d {
            cov[[r, r]] += ridge;
        }
        means[c] = mean;
        covs[c] = cov;
    }
    let total: f64 = alphas.iter().sum();
    for a in alphas.iter_mut() {
        *a /= total;
    }
}

fn assemble(alphas: &[f64], means: &[Array1<f64>], covs: &[Array2<f64>]) -> Result<GmmParams> {
    let components: Result<Vec<GaussianParams>> = means
        .iter()
        .zip(covs)
        .map(|(m, c)| GaussianParams::new(m.clone(), c.clone()))
        .collect();
    GmmParams::new(Array1::from(alphas.to_vec()), components?)
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ground cost between mixture components: squared mean distance plus the
/// squared Bures distance between covariances — the 2-Wasserstein distance
/// between the component Gaussians.
pub fn gmm_cost_matrix(rho: &GmmParams, tau: &GmmParams) -> Result<CostMatrix> {
    if rho.dim() != tau.dim() {
        return Err(Error::Shape(format!(
            "mixtures in R^{} vs R^{}",
            rho.dim(),
            tau.dim()
        )));
    }
    let (k, l) = (rho.len(), tau.len());
    let mut values = Array2::<f64>::zeros((k, l));
    for (i, a) in rho.components.iter().enumerate() {
        for (j, b) in tau.components.iter().enumerate() {
            let mean_term = sq_dist(a.mean(), b.mean());
            values[[i, j]] = mean_term + bures_squared(a.cov(), b.cov())?;
        }
    }
    CostMatrix::custom(values)
}

/// Solves the K x K transport problem between two mixtures at the caller's
/// `epsilon` and returns the centered component potentials `(f_tilde,
/// g_tilde)`. The problem is tiny, so failure to converge within 10000
/// sweeps at threshold 1e-6 is reported as an error rather than a warm
/// start of unknown quality.
pub fn gmm_potentials(
    rho: &GmmParams,
    tau: &GmmParams,
    epsilon: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let cost = gmm_cost_matrix(rho, tau)?;
    let mu = DiscreteMeasure::new(rho.weights.clone(), means_matrix(rho))?;
    let nu = DiscreteMeasure::new(tau.weights.clone(), means_matrix(tau))?;
    let mut config = SinkhornConfig::new(epsilon);
    config.tau = INNER_TAU;
    config.max_iters = INNER_MAX_ITERS;
    let (potentials, report) = sinkhorn_solve(&mu, &nu, &cost, &config, &SinkhornInit::Zero)?;
    if !report.converged {
        return Err(Error::InnerSolve {
            sweeps: report.iterations,
            error: report.final_error,
            tau: INNER_TAU,
        });
    }
    let (f, g, _) = potentials.into_parts();
    Ok((f, g))
}

fn means_matrix(params: &GmmParams) -> Array2<f64> {
    let (k, d) = (params.len(), params.dim());
    Array2::from_shape_fn((k, d), |(c, j)| params.components[c].mean()[j])
}

/// Interpolates component potentials through posterior responsibilities:
/// `out_i = sum_k potentials_k * p_k(points_i)`.
pub fn interpolate_potential(
    params: &GmmParams,
    potentials: &Array1<f64>,
    points: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    if potentials.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} potentials for {} components",
            potentials.len(),
            params.len()
        )));
    }
    let resp = responsibilities(params, points)?;
    Ok(resp.dot(potentials))
}

/// Mixture warm start for the squared-Euclidean cost: fit K-component
/// mixtures to both sides (seeds derived per side), solve the K x K problem
/// at the caller's `epsilon`, and interpolate the component potentials onto
/// the support of the larger-resolution side — the source, unless the
/// target is strictly smaller.
pub fn gmm_init(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<InitialPotential> {
    if mu.dim() != nu.dim() {
        return Err(Error::Shape(format!(
            "support dimensions {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    let rho = fit_gmm(mu, k, derive_seed(seed, 0), CovarianceKind::Full)?;
    let tau = fit_gmm(nu, k, derive_seed(seed, 1), CovarianceKind::Full)?;
    if nu.len() < mu.len() {
        let (_, g_tilde) = gmm_potentials(&rho, &tau, epsilon)?;
        let values = interpolate_potential(&tau, &g_tilde, nu.support())?;
        Ok(InitialPotential::OnTarget(values))
    } else {
        let (f_tilde, _) = gmm_potentials(&rho, &tau, epsilon)?;
        let values = interpolate_potential(&rho, &f_tilde, mu.support())?;
        Ok(InitialPotential::OnSource(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinkhorn::center_potential;
    use ndarray::array;
    use rand_distr::{Distribution, Normal};

    fn cloud_around(
        centers: &[[f64; 2]],
        per_center: usize,
        std: f64,
        seed: u64,
    ) -> DiscreteMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).unwrap();
        let n = centers.len() * per_center;
        let mut flat = Vec::with_capacity(n * 2);
        for c in centers {
            for _ in 0..per_center {
                flat.push(c[0] + normal.sample(&mut rng));
                flat.push(c[1] + normal.sample(&mut rng));
            }
        }
        DiscreteMeasure::uniform(Array2::from_shape_vec((n, 2), flat).unwrap()).unwrap()
    }

    #[test]
    fn fit_single_component_is_the_moment_fit() {
        let m = cloud_around(&[[0.0, 0.0], [4.0, 1.0]], 20, 1.0, 3);
        let gmm = fit_gmm(&m, 1, 9, CovarianceKind::Full).unwrap();
        assert_eq!(gmm.weights()[0], 1.0);
        let single = fit_gaussian(&m);
        assert_eq!(gmm.components()[0].mean(), single.mean());
        assert_eq!(gmm.components()[0].cov(), single.cov());
    }

    #[test]
    fn fit_recovers_two_separated_centers() {
        // 800 points per cluster keep the sample-mean standard error near
        // 0.035 per coordinate, so the 0.2 tolerance sits past five standard
        // errors and holds for every seed.
        let truth = [[-5.0, 0.0], [5.0, 0.0]];
        for seed in 0..20u64 {
            let m = cloud_around(&truth, 800, 1.0, 100 + seed);
            let gmm = fit_gmm(&m, 2, seed, CovarianceKind::Full).unwrap();
            let mut found = [false; 2];
            for comp in gmm.components() {
                for (t, center) in truth.iter().enumerate() {
                    let dist = ((comp.mean()[0] - center[0]).powi(2)
                        + (comp.mean()[1] - center[1]).powi(2))
                    .sqrt();
                    if dist <= 0.2 {
                        found[t] = true;
                    }
                }
            }
            assert!(found[0] && found[1], "seed {seed}: means missed the centers");
        }
    }

    #[test]
    fn fit_is_deterministic_per_seed() {
        let m = cloud_around(&[[0.0, 0.0], [3.0, 3.0]], 30, 0.7, 11);
        let a = fit_gmm(&m, 3, 42, CovarianceKind::Full).unwrap();
        let b = fit_gmm(&m, 3, 42, CovarianceKind::Full).unwrap();
        assert_eq!(a.weights(), b.weights());
        for (ca, cb) in a.components().iter().zip(b.components()) {
            assert_eq!(ca.mean(), cb.mean());
            assert_eq!(ca.cov(), cb.cov());
        }
    }

    #[test]
    fn fit_rejects_bad_component_counts() {
        let m = cloud_around(&[[0.0, 0.0]], 3, 0.5, 1);
        assert!(fit_gmm(&m, 0, 0, CovarianceKind::Full).is_err());
        assert!(fit_gmm(&m, 4, 0, CovarianceKind::Full).is_err());
    }

    #[test]
    fn diagonal_mode_zeroes_off_diagonal_covariance() {
        let m = cloud_around(&[[0.0, 0.0], [4.0, 4.0]], 40, 1.0, 7);
        let gmm = fit_gmm(&m, 2, 5, CovarianceKind::Diagonal).unwrap();
        for comp in gmm.components() {
            assert_eq!(comp.cov()[[0, 1]], 0.0);
            assert_eq!(comp.cov()[[1, 0]], 0.0);
        }
    }

    #[test]
    fn more_components_never_fit_worse() {
        let m = cloud_around(&[[-4.0, 0.0], [4.0, 0.0], [0.0, 5.0]], 50, 0.8, 13);
        let ll1 = weighted_log_likelihood(&fit_gmm(&m, 1, 0, CovarianceKind::Full).unwrap(), &m)
            .unwrap();
        let ll3 = weighted_log_likelihood(&fit_gmm(&m, 3, 0, CovarianceKind::Full).unwrap(), &m)
            .unwrap();
        assert!(ll3 > ll1, "ll3 {ll3} vs ll1 {ll1}");
    }

    #[test]
    fn responsibilities_are_probability_vectors() {
        let m = cloud_around(&[[-3.0, 0.0], [3.0, 0.0]], 25, 1.0, 17);
        let gmm = fit_gmm(&m, 2, 1, CovarianceKind::Full).unwrap();
        // Include a point absurdly far from both components: the max shift
        // must keep the normalization finite.
        let probes =
            array![[0.0, 0.0], [-3.0, 0.5], [1e3, -1e3], [f64::MIN_POSITIVE, 0.0]];
        let resp = responsibilities(&gmm, probes.view()).unwrap();
        for i in 0..probes.nrows() {
            let mut total = 0.0;
            for c in 0..gmm.len() {
                let v = resp[[i, c]];
                assert!(v.is_finite() && v >= 0.0);
                total += v;
            }
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cost_matrix_trivial_values() {
        let m = cloud_around(&[[-2.0, 0.0], [2.0, 0.0]], 30, 0.6, 19);
        let gmm = fit_gmm(&m, 2, 3, CovarianceKind::Full).unwrap();
        let c = gmm_cost_matrix(&gmm, &gmm).unwrap();
        for k in 0..2 {
            assert!(c.values()[[k, k]].abs() <= 1e-8);
        }

        // Unit covariances: the Bures term vanishes and only mean distances
        // remain.
        let eye = Array2::<f64>::eye(2);
        let mk = |m: [f64; 2]| GaussianParams::new(array![m[0], m[1]], eye.clone()).unwrap();
        let rho = GmmParams::new(array![0.5, 0.5], vec![mk([0.0, 0.0]), mk([1.0, 0.0])]).unwrap();
        let tau = GmmParams::new(array![0.3, 0.7], vec![mk([0.0, 2.0]), mk([3.0, 0.0])]).unwrap();
        let c = gmm_cost_matrix(&rho, &tau).unwrap();
        let want = array![[4.0, 9.0], [5.0, 4.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.values()[[i, j]] - want[[i, j]]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn cost_matrix_matches_per_pair_oracle() {
        let a = cloud_around(&[[-3.0, 1.0], [2.0, -1.0], [0.0, 4.0]], 30, 0.9, 23);
        let b = cloud_around(&[[1.0, 1.0], [-2.0, -2.0], [4.0, 0.0]], 30, 1.1, 29);
        let rho = fit_gmm(&a, 3, 1, CovarianceKind::Full).unwrap();
        let tau = fit_gmm(&b, 3, 2, CovarianceKind::Full).unwrap();
        let c = gmm_cost_matrix(&rho, &tau).unwrap();
        for (i, ci) in rho.components().iter().enumerate() {
            for (j, cj) in tau.components().iter().enumerate() {
                let oracle = sq_dist(ci.mean(), cj.mean())
                    + bures_squared(ci.cov(), cj.cov()).unwrap();
                assert!((c.values()[[i, j]] - oracle).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn single_component_init_is_constant() {
        let mu = cloud_around(&[[0.0, 0.0], [2.0, 1.0]], 25, 0.8, 31);
        let nu = cloud_around(&[[1.0, 1.0], [-1.0, 2.0]], 25, 0.8, 37);
        let init = gmm_init(&mu, &nu, 1, 0.1, 5).unwrap();
        let f = init.values();
        let spread = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - f.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-8, "spread {spread}");
        let centered = center_potential(f.view());
        assert!(centered.iter().all(|&v| v.abs() <= 1e-8));
    }

    #[test]
    fn interpolation_is_invariant_to_component_relabeling() {
        let mu = cloud_around(&[[-3.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 20, 0.7, 41);
        let rho = fit_gmm(&mu, 3, 4, CovarianceKind::Full).unwrap();
        let f_tilde = array![0.5, -1.0, 2.0];
        let probes = mu.support().to_owned();
        let base = interpolate_potential(&rho, &f_tilde, probes.view()).unwrap();

        let perm = [2usize, 0, 1];
        let weights = Array1::from_iter(perm.iter().map(|&p| rho.weights()[p]));
        let comps: Vec<GaussianParams> =
            perm.iter().map(|&p| rho.components()[p].clone()).collect();
        let relabeled = GmmParams::new(weights, comps).unwrap();
        let f_perm = Array1::from_iter(perm.iter().map(|&p| f_tilde[p]));
        let again = interpolate_potential(&relabeled, &f_perm, probes.view()).unwrap();
        for (u, v) in base.iter().zip(again.iter()) {
            assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn init_lands_on_the_smaller_side() {
        let mu = cloud_around(&[[0.0, 0.0], [3.0, 0.0]], 30, 0.8, 43);
        let nu = cloud_around(&[[1.0, 1.0]], 20, 0.8, 47);
        match gmm_init(&mu, &nu, 2, 0.1, 7).unwrap() {
            InitialPotential::OnTarget(v) => assert_eq!(v.len(), 20),
            InitialPotential::OnSource(_) => panic!("smaller target expected"),
        }
    }

    #[test]
    fn mixture_structure_improves_the_warm_start_gap() {
        // Clearly clustered data whose cluster pairings have very different
        // transport costs, so the true potential takes distinct levels per
        // cluster. Responsibilities resolve the clusters, and interpolated
        // component potentials capture those levels; the single global
        // constant of K = 1 cannot.
        let centers_a = [[-8.0, 0.0], [0.0, 0.0], [8.0, 0.0]];
        let centers_b = [[-8.0, 0.3], [0.0, 1.5], [8.0, 2.5]];
        let mut gaps = vec![Vec::new(), Vec::new()];
        for seed in 0..5u64 {
            let mu = cloud_around(&centers_a, 40, 0.4, 1000 + seed);
            let nu = cloud_around(&centers_b, 40, 0.4, 2000 + seed);
            let cost = CostMatrix::between(&mu, &nu).unwrap();
            let mut cfg = SinkhornConfig::new(0.5);
            cfg.tau = 1e-8;
            cfg.max_iters = 50_000;
            let (exact, report) =
                sinkhorn_solve(&mu, &nu, &cost, &cfg, &SinkhornInit::Zero).unwrap();
            assert!(report.converged);
            let f_star = center_potential(exact.f());
            for (slot, k) in [(0usize, 1usize), (1, 3)] {
                let init = gmm_init(&mu, &nu, k, 0.5, seed).unwrap();
                let f_hat = center_potential(init.values().view());
                let gap = f_star
                    .iter()
                    .zip(f_hat.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / f_star.len() as f64;
                gaps[slot].push(gap);
            }
        }
        let med = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        let (g1, g3) = (med(&mut gaps[0]), med(&mut gaps[1]));
        assert!(g3 < g1, "K=3 gap {g3} vs K=1 gap {g1}");
    }
}
