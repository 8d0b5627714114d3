//! Subsample warm starts: solve a small transport problem between uniform
//! subsamples of the two measures at the caller's `epsilon`, then extend the
//! small target potential `g_breve` to the full source support through the
//! entropic potential function
//!
//! ```text
//! f0_i = -eps * ln( (1/m_breve) * sum_j exp((g_breve_j - c(x_i, z_j)) / eps) ),
//! ```
//!
//! which is exactly the Sinkhorn f-update against the subsampled target —
//! so if the subsample covers the whole measure, the warm start is the
//! solution itself.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use crate::measures::{CostMatrix, DiscreteMeasure};
use crate::sinkhorn::{sinkhorn_solve, softmin_rows, InitialPotential, SinkhornConfig, SinkhornInit};
use crate::util::derive_seed;
use crate::{Error, Result};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Minimum subsample size picked by [`SubsampleSpec::default_for`].
const MIN_SUBSAMPLE: usize = 16;
/// The inner problem is solved this much tighter than the outer tolerance,
/// so extrapolation quality is not limited by the inner stopping rule.
const INNER_TAU_FACTOR: f64 = 0.1;
const INNER_MAX_ITERS: usize = 100_000;

/// Sizes and seed for the subsampled problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampleSpec {
    /// Number of source atoms kept.
    pub size_mu: usize,
    /// Number of target atoms kept.
    pub size_nu: usize,
    /// Base seed; the two draws use seeds derived per side.
    pub seed: u64,
}

impl SubsampleSpec {
    /// One tenth of each side with a floor of 16, capped at the side's size.
    pub fn default_for(n: usize, m: usize, seed: u64) -> Self {
        let pick = |len: usize| (len / 10).max(MIN_SUBSAMPLE).min(len);
        Self {
            size_mu: pick(n),
            size_nu: pick(m),
            seed,
        }
    }
}

/// Uniformly subsamples `size` atoms without replacement (indices sorted for
/// reproducible ordering) and reweights them uniformly to `1/size`.
/// Duplicate support points stay distinct atoms.
pub fn subsample_measure(
    measure: &DiscreteMeasure,
    size: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    let n = measure.len();
    if size == 0 || size > n {
        return Err(Error::Argument(format!(
            "subsample size {size} out of range for {n} atoms"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, n, size).into_vec();
    indices.sort_unstable();
    let support = measure.support().select(Axis(0), &indices);
    DiscreteMeasure::new(Array1::from_elem(size, 1.0 / size as f64), support)
}

/// Evaluates the entropic potential function of `(g_breve, z)` on every row
/// of `x`, in log space:
/// `out_i = eps*ln(m_breve) + softmin_j (c(x_i, z_j) - g_breve_j)`.
pub fn entropic_extrapolate(
    g_breve: ArrayView1<'_, f64>,
    z: ArrayView2<'_, f64>,
    epsilon: f64,
    x: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    if g_breve.len() != z.nrows() {
        return Err(Error::Shape(format!(
            "{} potentials for {} subsample atoms",
            g_breve.len(),
            z.nrows()
        )));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let cost = CostMatrix::squared_euclidean(x, z)?;
    let mut shifted = cost.values().to_owned();
    for mut row in shifted.rows_mut() {
        row -= &g_breve;
    }
    let m_breve = z.nrows() as f64;
    let mut out = softmin_rows(shifted.view(), epsilon);
    out += epsilon * m_breve.ln();
    Ok(out)
}

/// Subsample warm start: solve the `size_mu x size_nu` problem at the same
/// `epsilon` (to a tolerance ten times tighter than `outer_tau`), then
/// extrapolate its target potential onto the full source support. Inner
/// nonconvergence is an error, since a half-converged small problem gives a
/// warm start of unknown quality.
pub fn subsample_init(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    epsilon: f64,
    spec: &SubsampleSpec,
    outer_tau: f64,
) -> Result<InitialPotential> {
    let mu_breve = subsample_measure(mu, spec.size_mu, derive_seed(spec.seed, 0))?;
    let nu_breve = subsample_measure(nu, spec.size_nu, derive_seed(spec.seed, 1))?;
    let cost_breve = CostMatrix::between(&mu_breve, &nu_breve)?;
    let mut config = SinkhornConfig::new(epsilon);
    config.tau = outer_tau * INNER_TAU_FACTOR;
    config.max_iters = INNER_MAX_ITERS;
    let (potentials, report) =
        sinkhorn_solve(&mu_breve, &nu_breve, &cost_breve, &config, &SinkhornInit::Zero)?;
    if !report.converged {
        return Err(Error::InnerSolve {
            sweeps: report.iterations,
            error: report.final_error,
            tau: config.tau,
        });
    }
    let f0 = entropic_extrapolate(
        potentials.g(),
        nu_breve.support(),
        epsilon,
        mu.support(),
    )?;
    Ok(InitialPotential::OnSource(f0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinkhorn::center_potential;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn random_cloud(n: usize, d: usize, seed: u64) -> DiscreteMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
        DiscreteMeasure::uniform(pts).unwrap()
    }

    #[test]
    fn subsampling_the_whole_measure_keeps_the_support() {
        let m = random_cloud(12, 2, 3);
        let s = subsample_measure(&m, 12, 99).unwrap();
        assert_eq!(s.support(), m.support());
        for &w in s.weights() {
            assert!((w - 1.0 / 12.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn subsampling_to_one_atom_gives_unit_weight() {
        let m = random_cloud(9, 3, 5);
        let s = subsample_measure(&m, 1, 7).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.weights()[0], 1.0);
        // The atom must be one of the original support points.
        let support = s.support();
        let row = support.row(0);
        assert!(m
            .support()
            .rows()
            .into_iter()
            .any(|r| r.iter().zip(row.iter()).all(|(a, b)| a == b)));
    }

    #[test]
    fn subsampling_is_deterministic_per_seed() {
        let m = random_cloud(40, 2, 11);
        let a = subsample_measure(&m, 10, 42).unwrap();
        let b = subsample_measure(&m, 10, 42).unwrap();
        let c = subsample_measure(&m, 10, 43).unwrap();
        assert_eq!(a.support(), b.support());
        assert_ne!(a.support(), c.support());
    }

    #[test]
    fn subsampling_rejects_bad_sizes() {
        let m = random_cloud(5, 2, 1);
        assert!(subsample_measure(&m, 0, 0).is_err());
        assert!(subsample_measure(&m, 6, 0).is_err());
    }

    #[test]
    fn default_spec_takes_a_tenth_with_floor() {
        let s = SubsampleSpec::default_for(2000, 50, 1);
        assert_eq!(s.size_mu, 200);
        assert_eq!(s.size_nu, 16);
        let tiny = SubsampleSpec::default_for(8, 8, 1);
        assert_eq!(tiny.size_mu, 8);
        assert_eq!(tiny.size_nu, 8);
    }

    #[test]
    fn extrapolation_with_one_atom_is_the_shifted_cost() {
        let z = array![[0.5, -0.25]];
        let x = array![[0.0, 0.0], [1.0, 1.0], [-2.0, 0.5]];
        // With g = 0 the -eps*ln(1/1) term vanishes and f0(x) = c(x, z).
        let f = entropic_extrapolate(array![0.0].view(), z.view(), 0.3, x.view()).unwrap();
        for (i, xi) in x.rows().into_iter().enumerate() {
            let c: f64 = xi.iter().zip(z.row(0).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((f[i] - c).abs() <= 1e-12);
        }
        // General single-atom potential: f0(x) = c(x, z) - g1.
        let g1 = -1.75;
        let f = entropic_extrapolate(array![g1].view(), z.view(), 0.3, x.view()).unwrap();
        for (i, xi) in x.rows().into_iter().enumerate() {
            let c: f64 = xi.iter().zip(z.row(0).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((f[i] - (c - g1)).abs() <= 1e-12);
        }
    }

    #[test]
    fn extrapolation_shifts_against_potential_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z = Array2::from_shape_fn((6, 2), |_| rng.gen_range(-1.0..1.0));
        let x = Array2::from_shape_fn((9, 2), |_| rng.gen_range(-1.0..1.0));
        let g = Array1::from_shape_fn(6, |_| rng.gen_range(-0.5..0.5));
        let s = 0.8125;
        let base = entropic_extrapolate(g.view(), z.view(), 0.2, x.view()).unwrap();
        let shifted =
            entropic_extrapolate((&g + s).view(), z.view(), 0.2, x.view()).unwrap();
        for (u, v) in base.iter().zip(shifted.iter()) {
            assert!((v - (u - s)).abs() <= 1e-12);
        }
    }

    #[test]
    fn extrapolation_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let z = Array2::from_shape_fn((8, 3), |_| rng.gen_range(-1.0..1.0));
        let x = Array2::from_shape_fn((11, 3), |_| rng.gen_range(-1.0..1.0));
        let g = Array1::from_shape_fn(8, |_| rng.gen_range(-0.4..0.4));
        let eps = 0.25;
        let f = entropic_extrapolate(g.view(), z.view(), eps, x.view()).unwrap();
        for (i, xi) in x.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for (j, zj) in z.rows().into_iter().enumerate() {
                let c: f64 = xi.iter().zip(zj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                sum += ((g[j] - c) / eps).exp() / z.nrows() as f64;
            }
            let direct = -eps * sum.ln();
            assert!((f[i] - direct).abs() <= 1e-12, "i={i}: {} vs {direct}", f[i]);
        }
    }

    #[test]
    fn extrapolation_rejects_inconsistent_inputs() {
        let z = array![[0.0, 0.0], [1.0, 1.0]];
        let x = array![[0.5, 0.5]];
        assert!(entropic_extrapolate(array![0.0].view(), z.view(), 0.1, x.view()).is_err());
        assert!(
            entropic_extrapolate(array![0.0, 0.0].view(), z.view(), 0.0, x.view()).is_err()
        );
    }

    #[test]
    fn full_cover_subsample_reproduces_the_solution() {
        let mu = random_cloud(24, 2, 31);
        let nu = random_cloud(20, 2, 37);
        let cost = CostMatrix::between(&mu, &nu).unwrap();
        let eps = 0.1;
        let mut config = SinkhornConfig::new(eps);
        config.tau = 1e-9;
        config.max_iters = 100_000;
        let (exact, report) =
            sinkhorn_solve(&mu, &nu, &cost, &config, &SinkhornInit::Zero).unwrap();
        assert!(report.converged);

        let spec = SubsampleSpec { size_mu: 24, size_nu: 20, seed: 5 };
        let init = subsample_init(&mu, &nu, eps, &spec, 1e-8).unwrap();
        let f0 = center_potential(init.values().view());
        let f_star = center_potential(exact.f());
        for (a, b) in f0.iter().zip(f_star.iter()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn extrapolation_is_consistent_at_the_subsampled_points() {
        // At the subsampled source points the extrapolated potential is the
        // inner solver's own f-update, up to the constant eps*ln(n*m) that
        // separates the extrapolation's weight convention from the solver's
        // unweighted-exponential coupling. Constant shifts of a potential
        // are pure gauge, so only the shape has to match — within the inner
        // tolerance.
        let mu = random_cloud(60, 2, 41);
        let nu = random_cloud(60, 2, 43);
        let eps = 0.2;
        let outer_tau = 1e-6;
        let spec = SubsampleSpec { size_mu: 15, size_nu: 15, seed: 9 };
        let mu_breve = subsample_measure(&mu, 15, derive_seed(9, 0)).unwrap();
        let nu_breve = subsample_measure(&nu, 15, derive_seed(9, 1)).unwrap();
        let cost = CostMatrix::between(&mu_breve, &nu_breve).unwrap();
        let mut config = SinkhornConfig::new(eps);
        config.tau = outer_tau * 0.1;
        config.max_iters = 100_000;
        let (inner, report) =
            sinkhorn_solve(&mu_breve, &nu_breve, &cost, &config, &SinkhornInit::Zero).unwrap();
        assert!(report.converged);

        let init = subsample_init(&mu, &nu, eps, &spec, outer_tau).unwrap();
        let f0 = init.values();
        let gauge = eps * (15.0f64 * 15.0).ln();
        // Locate each subsampled atom inside the full support and compare.
        let support = mu.support();
        for (k, zrow) in mu_breve.support().rows().into_iter().enumerate() {
            let i = support
                .rows()
                .into_iter()
                .position(|r| r.iter().zip(zrow.iter()).all(|(a, b)| a == b))
                .expect("subsampled atom comes from the support");
            assert!(
                (f0[i] - gauge - inner.f()[k]).abs() <= outer_tau,
                "atom {k}: {} vs {}",
                f0[i] - gauge,
                inner.f()[k]
            );
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let mu = random_cloud(50, 2, 51);
        let nu = random_cloud(45, 2, 53);
        let spec = SubsampleSpec { size_mu: 10, size_nu: 10, seed: 77 };
        let a = subsample_init(&mu, &nu, 0.1, &spec, 0.01).unwrap();
        let b = subsample_init(&mu, &nu, 0.1, &spec, 0.01).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
