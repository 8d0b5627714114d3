//! Gaussian moment machinery for warm starts under the squared-Euclidean
//! cost: weighted moment fitting, inverse-free matrix square roots, the
//! Bures-Wasserstein distance, the Gaussian Monge map, and the quadratic
//! initializer built from it.
//!
//! For Gaussians `N(m1, S1)` and `N(m2, S2)` the optimal transport map is
//! `T(x) = A（x - m1) + m2` with `A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2}
//! S1^{-1/2}`, and the associated dual potential under the cost `|x - y|^2`
//! evaluates to `f(x) = |x|^2 - (x - m1)' A (x - m1) - 2 m2' x`. Fitting
//! moments to both point clouds and evaluating this quadratic on the support
//! yields a warm start whose quality tracks how Gaussian the data looks.

use ndarray::{Array1, Array2, ArrayView1};

use crate::measures::DiscreteMeasure;
use crate::sinkhorn::InitialPotential;
use crate::{Error, Result};

/// Relative covariance ridge; see [`fit_gaussian`].
const COV_RIDGE: f64 = 1e-6;
/// Symmetry tolerance for matrix inputs.
const SYMMETRY_TOL: f64 = 1e-10;
/// Target relative residual for [`sqrtm`].
const SQRT_TOL: f64 = 1e-8;
/// Newton-Schulz sweep budget before falling back to an eigendecomposition.
const NEWTON_SCHULZ_MAX: usize = 30;
/// Residual is polled every this many Newton-Schulz sweeps.
const NEWTON_SCHULZ_CHECK: usize = 5;

/// First and second moments of a weighted point cloud, ridge-regularized so
/// the covariance is always positive-definite.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mean: Array1<f64>,
    cov: Array2<f64>,
}

impl GaussianParams {
    /// Wraps a mean/covariance pair, rejecting non-finite entries and
    /// asymmetry beyond 1e-10.
    pub fn new(mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Shape(format!(
                "covariance {}x{} vs mean length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gaussian parameters".into()));
        }
        check_symmetric(&cov, SYMMETRY_TOL)?;
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn cov(&self) -> &Array2<f64> {
        &self.cov
    }
}

/// The linear part of the Gaussian transport map together with the shifts it
/// acts between: `apply(x) = A (x - m_mu) + m_nu`.
#[derive(Debug, Clone)]
pub struct MongeMap {
    a: Array2<f64>,
    m_mu: Array1<f64>,
    m_nu: Array1<f64>,
}

impl MongeMap {
    /// Builds the map transporting `mu`'s Gaussian fit onto `nu`'s.
    pub fn between(mu: &GaussianParams, nu: &GaussianParams) -> Result<Self> {
        if mu.mean.len() != nu.mean.len() {
            return Err(Error::Shape(format!(
                "dimension mismatch: {} vs {}",
                mu.mean.len(),
                nu.mean.len()
            )));
        }
        let a = monge_matrix(mu.cov(), nu.cov())?;
        Ok(Self { a, m_mu: mu.mean.clone(), m_nu: nu.mean.clone() })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let centered = &x - &self.m_mu;
        self.a.dot(&centered) + &self.m_nu
    }
}

/// Weighted mean and covariance of a measure's support.
///
/// A ridge of `1e-6 * tr / d` (absolute `1e-6` when the raw covariance is
/// zero) is always added to the diagonal: degenerate clouds — a single
/// point, collinear data — otherwise break the inverse square root that the
/// Monge map needs.
pub fn fit_gaussian(measure: &DiscreteMeasure) -> GaussianParams {
    let pts = measure.support();
    let w = measure.weights();
    let (n, d) = (pts.nrows(), pts.ncols());

    let mut mean = Array1::<f64>::zeros(d);
    for i in 0..n {
        mean.scaled_add(w[i], &pts.row(i));
    }

    let mut cov = Array2::<f64>::zeros((d, d));
    for i in 0..n {
        let diff = &pts.row(i) - &mean;
        for r in 0..d {
            let s = w[i] * diff[r];
            for c in 0..d {
                cov[[r, c]] += s * diff[c];
            }
        }
    }

    let trace: f64 = (0..d).map(|k| cov[[k, k]]).sum();
    let ridge = if trace > 0.0 { COV_RIDGE * trace / d as f64 } else { COV_RIDGE };
    for k in 0..d {
        cov[[k, k]] += ridge;
    }

    GaussianParams { mean, cov }
}

/// Square root and inverse square root of a symmetric positive-definite
/// matrix.
///
/// Runs the coupled Newton-Schulz iteration on `M / |M|_F` (whose spectrum
/// lies in `(0, 1]`, guaranteeing convergence), rescales back, and accepts
/// once `|Y Y - M|_F <= 1e-8 |M|_F`. If the residual has not met the target
/// within 30 sweeps — very ill-conditioned input — it falls back to a
/// symmetric eigendecomposition, which also certifies positive-definiteness.
pub fn sqrtm(m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = m.nrows();
    if m.ncols() != d || d == 0 {
        return Err(Error::Shape(format!("square matrix required, got {}x{}", d, m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix square root input".into()));
    }
    check_symmetric(m, SYMMETRY_TOL)?;

    let norm = frobenius(m);
    if norm > 0.0 {
        let eye = Array2::<f64>::eye(d);
        let normalized = m / norm;
        let mut y = normalized.clone();
        let mut z = eye.clone();
        // Quadratic convergence means the first checkpoint past the target
        // is usually near the floating-point floor, so aim well below the
        // documented 1e-8 contract and accept the best state seen. Both
        // residuals matter: a singular input converges in Y while Z drifts.
        let mut best: Option<(f64, Array2<f64>, Array2<f64>)> = None;
        for sweep in 1..=NEWTON_SCHULZ_MAX {
            let t = (&eye * 3.0 - &z.dot(&y)) / 2.0;
            y = y.dot(&t);
            z = t.dot(&z);
            if sweep % NEWTON_SCHULZ_CHECK == 0 || sweep == NEWTON_SCHULZ_MAX {
                let r_sqrt = frobenius(&(&y.dot(&y) - &normalized));
                let r_pair = frobenius(&(&y.dot(&z) - &eye));
                let residual = r_sqrt.max(r_pair);
                if !residual.is_finite() {
                    break;
                }
                if residual <= 1e-13 {
                    let scale = norm.sqrt();
                    return Ok((y * scale, z / scale));
                }
                match &best {
                    Some((prev, _, _)) if *prev <= residual => break, // stalled
                    _ => best = Some((residual, y.clone(), z.clone())),
                }
            }
        }
        if let Some((residual, y, z)) = best {
            if residual <= SQRT_TOL {
                let scale = norm.sqrt();
                return Ok((y * scale, z / scale));
            }
        }
    }

    sqrtm_eigen(m)
}

/// Eigendecomposition square root; the fallback path of [`sqrtm`] and the
/// place where indefinite inputs are rejected.
fn sqrtm_eigen(m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = m.nrows();
    let dm = nalgebra::DMatrix::from_row_iterator(d, d, m.iter().cloned());
    let eig = nalgebra::SymmetricEigen::new(dm);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite(lambda_min));
    }
    let v = &eig.eigenvectors;
    let mut sqrt = Array2::<f64>::zeros((d, d));
    let mut inv = Array2::<f64>::zeros((d, d));
    for r in 0..d {
        for c in 0..d {
            let mut s = 0.0;
            let mut si = 0.0;
            for k in 0..d {
                let root = eig.eigenvalues[k].sqrt();
                let prod = v[(r, k)] * v[(c, k)];
                s += prod * root;
                si += prod / root;
            }
            sqrt[[r, c]] = s;
            inv[[r, c]] = si;
        }
    }
    Ok((sqrt, inv))
}

/// Squared Bures-Wasserstein distance between covariance matrices:
/// `tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})`, clamped at zero.
pub fn bures_squared(s1: &Array2<f64>, s2: &Array2<f64>) -> Result<f64> {
    if s1.nrows() != s2.nrows() || s1.ncols() != s2.ncols() {
        return Err(Error::Shape(format!(
            "covariance shapes {}x{} vs {}x{}",
            s1.nrows(),
            s1.ncols(),
            s2.nrows(),
            s2.ncols()
        )));
    }
    let (root1, _) = sqrtm(s1)?;
    let middle = symmetrize(&root1.dot(s2).dot(&root1));
    let (cross, _) = sqrtm(&middle)?;
    let d = s1.nrows();
    let value: f64 = (0..d).map(|k| s1[[k, k]] + s2[[k, k]] - 2.0 * cross[[k, k]]).sum();
    Ok(value.max(0.0))
}

/// Linear part of the Gaussian Monge map:
/// `A = S_mu^{-1/2} (S_mu^{1/2} S_nu S_mu^{1/2})^{1/2} S_mu^{-1/2}`,
/// symmetrized after assembly.
pub fn monge_matrix(s_mu: &Array2<f64>, s_nu: &Array2<f64>) -> Result<Array2<f64>> {
    if s_mu.nrows() != s_nu.nrows() || s_mu.ncols() != s_nu.ncols() {
        return Err(Error::Shape(format!(
            "covariance shapes {}x{} vs {}x{}",
            s_mu.nrows(),
            s_mu.ncols(),
            s_nu.nrows(),
            s_nu.ncols()
        )));
    }
    let (root, inv_root) = sqrtm(s_mu)?;
    let middle = symmetrize(&root.dot(s_nu).dot(&root));
    let (cross, _) = sqrtm(&middle)?;
    Ok(symmetrize(&inv_root.dot(&cross).dot(&inv_root)))
}

/// Warm start from Gaussian approximations of both measures, for the
/// squared-Euclidean cost.
///
/// Fits moments to each side, builds the Monge matrix, and evaluates the
/// quadratic dual potential `|x|^2 - (x - m_mu)' A (x - m_mu) - 2 m_nu' x`
/// on the support of `mu`. When `nu` is the smaller side the roles are
/// swapped and the potential is evaluated on `nu`'s support instead, so the
/// initializer always produces the shorter vector.
pub fn gaus_init(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<InitialPotential> {
    if mu.dim() != nu.dim() {
        return Err(Error::Shape(format!(
            "support dimensions {} vs {}",
            mu.dim(),
            nu.dim()
        )));
    }
    if nu.len() < mu.len() {
        let values = quadratic_potential(nu, mu)?;
        Ok(InitialPotential::OnTarget(values))
    } else {
        let values = quadratic_potential(mu, nu)?;
        Ok(InitialPotential::OnSource(values))
    }
}

/// Evaluates the Gaussian dual potential of `from` (relative to `onto`) on
/// `from`'s support points.
fn quadratic_potential(from: &DiscreteMeasure, onto: &DiscreteMeasure) -> Result<Array1<f64>> {
    let p_from = fit_gaussian(from);
    let p_onto = fit_gaussian(onto);
    let a = monge_matrix(p_from.cov(), p_onto.cov())?;
    let pts = from.support();
    let mut out = Array1::<f64>::zeros(pts.nrows());
    for (i, x) in pts.rows().into_iter().enumerate() {
        let centered = &x - &p_from.mean();
        let quad = centered.dot(&a.dot(&centered));
        out[i] = x.dot(&x) - quad - 2.0 * p_onto.mean().dot(&x);
    }
    Ok(out)
}

fn check_symmetric(m: &Array2<f64>, tol: f64) -> Result<()> {
    let d = m.nrows();
    let mut dev = 0.0f64;
    for r in 0..d {
        for c in (r + 1)..d {
            dev = dev.max((m[[r, c]] - m[[c, r]]).abs());
        }
    }
    if dev > tol {
        return Err(Error::NotSymmetric(dev));
    }
    Ok(())
}

fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    (m + &m.t()) / 2.0
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinkhorn::center_potential;
    use ndarray::array;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Random orthogonal matrix from the QR of a Gaussian matrix.
    fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let raw = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let qr = raw.qr();
        let q = qr.q();
        Array2::from_shape_fn((d, d), |(r, c)| q[(r, c)])
    }

    /// Random SPD matrix with log-uniform spectrum spanning `cond`.
    fn random_spd(d: usize, cond: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let q = random_orthogonal(d, rng);
        let lambdas: Vec<f64> = (0..d)
            .map(|k| {
                if k == 0 {
                    1.0
                } else if k == 1 && d > 1 {
                    1.0 / cond
                } else {
                    (-rng.gen_range(0.0..cond.ln())).exp()
                }
            })
            .collect();
        let mut scaled = q.clone();
        for (c, &l) in lambdas.iter().enumerate() {
            scaled.column_mut(c).mapv_inplace(|v| v * l);
        }
        symmetrize(&scaled.dot(&q.t()))
    }

    /// Eigendecomposition oracle for the square root.
    fn sqrt_oracle(m: &Array2<f64>) -> Array2<f64> {
        sqrtm_eigen(m).unwrap().0
    }

    fn frob_dist(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        frobenius(&(a - b))
    }

    fn measure_from_rows(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> DiscreteMeasure {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        DiscreteMeasure::new(
            Array1::from(weights),
            Array2::from_shape_vec((n, d), flat).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fit_single_point_gives_ridge_covariance() {
        let m = measure_from_rows(vec![vec![0.0, 0.0]], vec![1.0]);
        let p = fit_gaussian(&m);
        assert_eq!(p.mean()[0], 0.0);
        assert_eq!(p.mean()[1], 0.0);
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { COV_RIDGE } else { 0.0 };
                assert_eq!(p.cov()[[r, c]], want);
            }
        }
    }

    #[test]
    fn fit_two_symmetric_points_matches_analytic_variance() {
        let m = measure_from_rows(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]);
        let p = fit_gaussian(&m);
        assert!(p.mean()[0].abs() <= 1e-15);
        assert!((p.cov()[[0, 0]] - (1.0 + COV_RIDGE)).abs() <= 1e-15);
    }

    #[test]
    fn fit_matches_direct_loop_on_random_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, d) = (40, 3);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();

        let mut mean = vec![0.0; d];
        for i in 0..n {
            for k in 0..d {
                mean[k] += w[i] * rows[i][k];
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for i in 0..n {
            for r in 0..d {
                for c in 0..d {
                    cov[r][c] += w[i] * (rows[i][r] - mean[r]) * (rows[i][c] - mean[c]);
                }
            }
        }
        let trace: f64 = (0..d).map(|k| cov[k][k]).sum();
        for k in 0..d {
            cov[k][k] += COV_RIDGE * trace / d as f64;
        }

        let p = fit_gaussian(&measure_from_rows(rows, w));
        for k in 0..d {
            assert!((p.mean()[k] - mean[k]).abs() <= 1e-12);
        }
        for r in 0..d {
            for c in 0..d {
                assert!((p.cov()[[r, c]] - cov[r][c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sqrtm_identity_is_identity() {
        let eye = Array2::<f64>::eye(3);
        let (s, si) = sqrtm(&eye).unwrap();
        assert!(frob_dist(&s, &eye) <= 1e-12);
        assert!(frob_dist(&si, &eye) <= 1e-12);
    }

    #[test]
    fn sqrtm_diagonal_is_analytic() {
        let m = array![[4.0, 0.0], [0.0, 9.0]];
        let (s, si) = sqrtm(&m).unwrap();
        assert!(frob_dist(&s, &array![[2.0, 0.0], [0.0, 3.0]]) <= 1e-8);
        assert!(frob_dist(&si, &array![[0.5, 0.0], [0.0, 1.0 / 3.0]]) <= 1e-8);
    }

    #[test]
    fn sqrtm_matches_eigen_oracle_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &d in &[2usize, 8, 32, 64] {
            for &cond in &[10.0, 1e3, 1e6] {
                let m = random_spd(d, cond, &mut rng);
                let (s, si) = sqrtm(&m).unwrap();
                let oracle = sqrt_oracle(&m);
                assert!(
                    frob_dist(&s, &oracle) <= 1e-6,
                    "d={d} cond={cond}: {}",
                    frob_dist(&s, &oracle)
                );
                let norm = frobenius(&m);
                assert!(frob_dist(&s.dot(&s), &m) <= SQRT_TOL * norm * 1.01);
                assert!(frob_dist(&s.dot(&si), &Array2::eye(d)) <= 1e-6);
            }
        }
    }

    #[test]
    fn sqrtm_rejects_bad_inputs() {
        let asym = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(sqrtm(&asym), Err(Error::NotSymmetric(_))));
        let indefinite = array![[1.0, 0.0], [0.0, -1.0]];
        assert!(matches!(sqrtm(&indefinite), Err(Error::NotPositiveDefinite(_))));
        let singular = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(matches!(sqrtm(&singular), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn bures_trivial_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_spd(4, 100.0, &mut rng);
        assert!(bures_squared(&s, &s).unwrap() <= 1e-8);
        let four = Array2::<f64>::eye(2) * 4.0;
        let one = Array2::<f64>::eye(2);
        assert!((bures_squared(&four, &one).unwrap() - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn bures_matches_eigen_oracle_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let s1 = random_spd(8, 1e3, &mut rng);
            let s2 = random_spd(8, 1e3, &mut rng);
            let r1 = sqrt_oracle(&s1);
            let cross = sqrt_oracle(&symmetrize(&r1.dot(&s2).dot(&r1)));
            let oracle: f64 =
                (0..8).map(|k| s1[[k, k]] + s2[[k, k]] - 2.0 * cross[[k, k]]).sum();
            let got = bures_squared(&s1, &s2).unwrap();
            assert!((got - oracle.max(0.0)).abs() <= 1e-6);
            let flipped = bures_squared(&s2, &s1).unwrap();
            assert!((got - flipped).abs() <= 1e-8, "{got} vs {flipped}");
        }
    }

    #[test]
    fn monge_matrix_trivial_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = random_spd(3, 100.0, &mut rng);
        let a = monge_matrix(&s, &s).unwrap();
        assert!(frob_dist(&a, &Array2::eye(3)) <= 1e-8);
        let a2 = monge_matrix(&Array2::eye(2), &(Array2::<f64>::eye(2) * 4.0)).unwrap();
        assert!(frob_dist(&a2, &(Array2::eye(2) * 2.0)) <= 1e-9);
    }

    #[test]
    fn monge_matrix_pushes_source_covariance_onto_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let s_mu = random_spd(5, 1e3, &mut rng);
            let s_nu = random_spd(5, 1e3, &mut rng);
            let a = monge_matrix(&s_mu, &s_nu).unwrap();
            assert!(frob_dist(&a, &symmetrize(&a)) <= 1e-8);
            let pushed = a.dot(&s_mu).dot(&a);
            assert!(
                frob_dist(&pushed, &s_nu) <= 1e-6,
                "push-forward residual {}",
                frob_dist(&pushed, &s_nu)
            );
        }
    }

    #[test]
    fn monge_map_sends_source_mean_to_target_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p_mu = GaussianParams::new(array![1.0, -2.0], random_spd(2, 10.0, &mut rng)).unwrap();
        let p_nu = GaussianParams::new(array![0.5, 3.0], random_spd(2, 10.0, &mut rng)).unwrap();
        let map = MongeMap::between(&p_mu, &p_nu).unwrap();
        let image = map.apply(p_mu.mean());
        assert!((image[0] - 0.5).abs() <= 1e-12);
        assert!((image[1] - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn gaus_init_constant_for_identical_moments() {
        // Same cloud listed in a different order: identical fitted moments,
        // so A = I and the potential collapses to the constant -|m|^2.
        let rows = vec![vec![1.0, 0.0], vec![3.0, 1.0], vec![2.0, -1.0], vec![0.0, 2.0]];
        let mut rev = rows.clone();
        rev.reverse();
        let mu = measure_from_rows(rows, vec![0.25; 4]);
        let nu = measure_from_rows(rev, vec![0.25; 4]);
        let init = gaus_init(&mu, &nu).unwrap();
        let f = match init {
            InitialPotential::OnSource(v) => v,
            InitialPotential::OnTarget(_) => panic!("equal sizes stay on the source side"),
        };
        let m = fit_gaussian(&mu).mean().to_owned();
        let want = -m.dot(&m);
        for &v in f.iter() {
            assert!((v - want).abs() <= 1e-6, "{v} vs {want}");
        }
        let centered = center_potential(f.view());
        assert!(centered.iter().all(|&v| v.abs() <= 1e-6));
    }

    #[test]
    fn gaus_init_pure_translation_is_linear() {
        // Supports engineered so both sides have mean exactly (0, t) apart
        // and identical covariance I: then A = I and f(x) = -2 t'x.
        let s = 2.0f64.sqrt();
        let base = vec![vec![s, 0.0], vec![-s, 0.0], vec![0.0, s], vec![0.0, -s]];
        let t = [0.7, -1.3];
        let shifted: Vec<Vec<f64>> =
            base.iter().map(|p| vec![p[0] + t[0], p[1] + t[1]]).collect();
        let mu = measure_from_rows(base, vec![0.25; 4]);
        let nu = measure_from_rows(shifted, vec![0.25; 4]);
        let init = gaus_init(&mu, &nu).unwrap();
        let f = init.values();
        for (i, x) in mu.support().rows().into_iter().enumerate() {
            let want = -2.0 * (t[0] * x[0] + t[1] * x[1]);
            assert!((f[i] - want).abs() <= 1e-8, "{} vs {want}", f[i]);
        }
    }

    #[test]
    fn gaus_init_lands_on_the_smaller_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let big: Vec<Vec<f64>> =
            (0..6).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let small: Vec<Vec<f64>> =
            (0..3).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let mu = measure_from_rows(big, vec![1.0 / 6.0; 6]);
        let nu = measure_from_rows(small, vec![1.0 / 3.0; 3]);
        match gaus_init(&mu, &nu).unwrap() {
            InitialPotential::OnTarget(v) => assert_eq!(v.len(), 3),
            InitialPotential::OnSource(_) => panic!("smaller target side expected"),
        }
        match gaus_init(&nu, &mu).unwrap() {
            InitialPotential::OnSource(v) => assert_eq!(v.len(), 3),
            InitialPotential::OnTarget(_) => panic!("ties and larger targets stay on source"),
        }
    }
}
