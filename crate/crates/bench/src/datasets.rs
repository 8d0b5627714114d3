//! Seeded synthetic point-cloud generators and the measure pairs each
//! benchmark dataset transports between.

use ndarray::Array2;
use otinit_core::{ranking_problem, DiscreteMeasure, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Splits one base seed into independent per-role streams (sides of a pair,
/// center sets, initializer draws) without correlating them.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = base
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(salt)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `n` draws from a uniform mixture of 5 Gaussians whose centers are
/// uniform in (-10, 10), each with standard deviation 3.
pub fn gen_blobs_1d(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..5).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let normal = Normal::new(0.0, 3.0).unwrap();
    (0..n)
        .map(|_| centers[rng.gen_range(0..centers.len())] + normal.sample(&mut rng))
        .collect()
}

fn moon_points(n: usize, upper: bool, noise: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut pts = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        let t = rng.gen_range(0.0..std::f64::consts::PI);
        let (x, y) = if upper {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        pts[[i, 0]] = x + noise * normal.sample(rng);
        pts[[i, 1]] = y + noise * normal.sample(rng);
    }
    pts
}

/// Two interleaved half-circles of radius 1 with isotropic Gaussian noise:
/// the first half of the rows lie on the upper moon, the rest on the lower.
pub fn gen_two_moons(n: usize, noise: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper = n - n / 2;
    let a = moon_points(upper, true, noise, &mut rng);
    let b = moon_points(n / 2, false, noise, &mut rng);
    let mut pts = Array2::<f64>::zeros((n, 2));
    for (i, row) in a.rows().into_iter().chain(b.rows()).enumerate() {
        pts[[i, 0]] = row[0];
        pts[[i, 1]] = row[1];
    }
    pts
}

/// The 3D S-curve (`(sin t, 2u, sign(t)(cos t - 1))` with
/// `t ~ U(-3pi/2, 3pi/2)`, `u ~ U(0, 1)`) projected onto its first two
/// coordinates.
pub fn gen_s_curve_2d(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 1.5 * std::f64::consts::PI;
    let mut pts = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        let t = rng.gen_range(-half..half);
        pts[[i, 0]] = t.sin();
        pts[[i, 1]] = 2.0 * rng.gen_range(0.0..1.0);
    }
    pts
}

/// Isotropic Gaussian blobs (std 0.25) around `k` centers drawn uniformly
/// in (-1.5, 1.5)^2 and re-drawn until all pairwise center distances reach
/// 1.25, so the clusters stay separable at a squared-cost scale comparable
/// to the other 2D datasets. Returns the points and the centers used.
pub fn gen_blobs2d_with_centers(n: usize, k: usize, seed: u64) -> (Array2<f64>, Vec<[f64; 2]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![[0.0f64; 2]; k];
    for _attempt in 0..1000 {
        for c in centers.iter_mut() {
            c[0] = rng.gen_range(-1.5..1.5);
            c[1] = rng.gen_range(-1.5..1.5);
        }
        let mut min_dist = f64::INFINITY;
        for i in 0..k {
            for j in (i + 1)..k {
                let d = ((centers[i][0] - centers[j][0]).powi(2)
                    + (centers[i][1] - centers[j][1]).powi(2))
                .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        if k < 2 || min_dist >= 1.25 {
            break;
        }
    }
    let normal = Normal::new(0.0, 0.25).unwrap();
    let mut pts = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        let c = centers[i % k];
        pts[[i, 0]] = c[0] + normal.sample(&mut rng);
        pts[[i, 1]] = c[1] + normal.sample(&mut rng);
    }
    (pts, centers)
}

/// See [`gen_blobs2d_with_centers`]; drops the centers.
pub fn gen_blobs2d(n: usize, k: usize, seed: u64) -> Array2<f64> {
    gen_blobs2d_with_centers(n, k, seed).0
}

/// `n` draws from a `d`-dimensional Gaussian with a seeded random mean in
/// (-1.5, 1.5)^d and axis-aligned scales in (0.7, 1.6).
pub fn gen_gauss_cloud(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mean: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let scale: Vec<f64> = (0..d).map(|_| rng.gen_range(0.7..1.6)).collect();
    let mut pts = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            pts[[i, j]] = mean[j] + scale[j] * normal.sample(&mut rng);
        }
    }
    pts
}

/// `n` draws from a uniform mixture of `k` spherical Gaussians (std 0.8)
/// whose centers are standard normal scaled by 2.
pub fn gen_mixture_cloud(n: usize, d: usize, k: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| 2.0 * normal.sample(&mut rng)).collect())
        .collect();
    let mut pts = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        let c = &centers[rng.gen_range(0..k)];
        for j in 0..d {
            pts[[i, j]] = c[j] + 0.8 * normal.sample(&mut rng);
        }
    }
    pts
}

/// The benchmark datasets: each tag names a way to build a measure pair of
/// a given size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// One-dimensional blob values ranked against the uniform staircase
    /// (the soft-sorting problem).
    Blobs1d,
    /// Upper moon transported to the lower moon.
    TwoMoons,
    /// S-curve transported to a two-moons cloud.
    SCurve2d,
    /// Two independent samples of the same 3-blob mixture.
    Blobs2d3,
    /// Two independent Gaussian clouds in the given dimension.
    GaussPair(usize),
    /// Two independent mixture clouds: dimension, component count.
    MixturePair(usize, usize),
}

impl DatasetKind {
    pub fn dim(&self) -> usize {
        match self {
            DatasetKind::Blobs1d => 1,
            DatasetKind::TwoMoons | DatasetKind::SCurve2d | DatasetKind::Blobs2d3 => 2,
            DatasetKind::GaussPair(d) | DatasetKind::MixturePair(d, _) => *d,
        }
    }

    /// Builds the measure pair for this dataset at size `n` per side. All
    /// randomness is derived from `seed`, so pairs are reproducible.
    pub fn generate(&self, n: usize, seed: u64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        const MOON_NOISE: f64 = 0.05;
        match self {
            DatasetKind::Blobs1d => {
                let x = gen_blobs_1d(n, derive_seed(seed, 0));
                let problem = ranking_problem(&x)?;
                Ok((problem.mu, problem.nu))
            }
            DatasetKind::TwoMoons => {
                let mut rng_a = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
                let mut rng_b = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
                let a = moon_points(n, true, MOON_NOISE, &mut rng_a);
                let b = moon_points(n, false, MOON_NOISE, &mut rng_b);
                Ok((DiscreteMeasure::uniform(a)?, DiscreteMeasure::uniform(b)?))
            }
            DatasetKind::SCurve2d => {
                let a = gen_s_curve_2d(n, derive_seed(seed, 0));
                let b = gen_two_moons(n, MOON_NOISE, derive_seed(seed, 1));
                Ok((DiscreteMeasure::uniform(a)?, DiscreteMeasure::uniform(b)?))
            }
            DatasetKind::Blobs2d3 => {
                // Two independently drawn 3-blob mixtures (centers and
                // samples), mirroring the moon-to-moon pairing above.
                let a = gen_blobs2d(n, 3, derive_seed(seed, 0));
                let b = gen_blobs2d(n, 3, derive_seed(seed, 1));
                Ok((DiscreteMeasure::uniform(a)?, DiscreteMeasure::uniform(b)?))
            }
            DatasetKind::GaussPair(d) => Ok((
                DiscreteMeasure::uniform(gen_gauss_cloud(n, *d, derive_seed(seed, 0)))?,
                DiscreteMeasure::uniform(gen_gauss_cloud(n, *d, derive_seed(seed, 1)))?,
            )),
            DatasetKind::MixturePair(d, k) => Ok((
                DiscreteMeasure::uniform(gen_mixture_cloud(n, *d, *k, derive_seed(seed, 0)))?,
                DiscreteMeasure::uniform(gen_mixture_cloud(n, *d, *k, derive_seed(seed, 1)))?,
            )),
        }
    }
}

/// Uniform measure over the rows of a matrix; convenience for tests.
pub fn uniform_cloud(pts: Array2<f64>) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(pts)
}

/// Standard deviation of a 1D sample; helper shared by generator tests.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}
