//! Runs a benchmark plan: builds each measure pair, times the initializer
//! separately from the solve, and writes per-run and summary CSVs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use otinit_core::{
    gaus_init, gmm_init, init_1d, sinkhorn_solve, subsample_init, Acceleration, CostMatrix,
    DiscreteMeasure, InitialPotential, SinkhornConfig, SinkhornInit, SubsampleSpec,
};
use serde::Serialize;

use crate::config::{AccelKind, ExperimentConfig, InitKind};
use crate::datasets::derive_seed;

/// Solver iteration cap for benchmark runs; runs that hit it are recorded
/// as not converged rather than aborting the suite.
pub const MAX_SWEEPS: usize = 50_000;

/// One benchmark run. The column order of the CSV is exactly the field
/// order here and must not change.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub init: String,
    pub accel: String,
    pub seed: u64,
    pub iterations: usize,
    pub init_time_s: f64,
    pub solve_time_s: f64,
    pub converged: bool,
}

/// Per-group iteration statistics over seeds.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SummaryRecord {
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub init: String,
    pub accel: String,
    pub median_iters: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Everything a suite produces, before any files are written.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<SummaryRecord>,
    pub all_converged: bool,
}

/// Quantile with linear interpolation between order statistics
/// (`q = 0.5` is the usual median).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

/// Direction of largest variance of the stacked supports, found by power
/// iteration on the pooled covariance (deterministic start).
pub fn leading_axis(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Array1<f64> {
    let d = x.ncols();
    let total = (x.nrows() + y.nrows()) as f64;
    let mut mean = Array1::<f64>::zeros(d);
    mean += &x.sum_axis(Axis(0));
    mean += &y.sum_axis(Axis(0));
    mean /= total;

    let mut cov = Array2::<f64>::zeros((d, d));
    for row in x.rows().into_iter().chain(y.rows()) {
        let c = &row.to_owned() - &mean;
        for i in 0..d {
            for j in 0..d {
                cov[[i, j]] += c[i] * c[j];
            }
        }
    }
    cov /= total;

    let mut v = Array1::<f64>::from_elem(d, 1.0 / (d as f64).sqrt());
    for _ in 0..200 {
        let w = cov.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm < 1e-30 {
            return v;
        }
        v = w / norm;
    }
    v
}

fn project_onto(points: ArrayView2<'_, f64>, axis: &Array1<f64>) -> Vec<f64> {
    points.rows().into_iter().map(|row| row.dot(axis)).collect()
}

/// Builds the warm start for one run. The sorted-scan initializer works on
/// scalar supports, so in d > 1 both clouds are first projected onto their
/// shared leading principal axis.
pub fn build_init(
    kind: InitKind,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    epsilon: f64,
    tau: f64,
    seed: u64,
) -> Result<SinkhornInit> {
    let (n, m) = (mu.len(), nu.len());
    let potential = match kind {
        InitKind::Zero => return Ok(SinkhornInit::Zero),
        InitKind::DualSort => {
            let (xs, ys) = if mu.dim() == 1 {
                (
                    mu.support().column(0).to_vec(),
                    nu.support().column(0).to_vec(),
                )
            } else {
                let axis = leading_axis(mu.support(), nu.support());
                (
                    project_onto(mu.support(), &axis),
                    project_onto(nu.support(), &axis),
                )
            };
            let a = mu.weights().to_vec();
            let b = nu.weights().to_vec();
            let f = init_1d(&xs, &ys, &a, &b, |s, t| (s - t) * (s - t))?;
            InitialPotential::OnSource(f)
        }
        InitKind::Gaus => gaus_init(mu, nu)?,
        InitKind::Gmm(k) => gmm_init(mu, nu, k, epsilon, derive_seed(seed, 101))?,
        InitKind::Subsample(size) => {
            let spec = match size {
                Some(s) => SubsampleSpec {
                    size_mu: s.min(n),
                    size_nu: s.min(m),
                    seed: derive_seed(seed, 102),
                },
                None => SubsampleSpec::default_for(n, m, derive_seed(seed, 102)),
            };
            subsample_init(mu, nu, epsilon, &spec, tau)?
        }
    };
    Ok(SinkhornInit::Warm(potential.into_duals(n, m, epsilon)?))
}

pub fn acceleration_of(kind: AccelKind) -> Acceleration {
    match kind {
        AccelKind::None => Acceleration::None,
        AccelKind::Momentum => Acceleration::momentum(),
        AccelKind::Adaptive => Acceleration::adaptive(),
        AccelKind::Anderson => Acceleration::anderson(),
        AccelKind::EpsDecay => Acceleration::epsilon_decay(),
    }
}

/// Runs the full cartesian product in the plan. A failed or non-converged
/// run becomes a `converged = false` record and the suite keeps going.
pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteOutcome> {
    let mut records = Vec::new();
    let dataset_tag = config.dataset.to_string();

    for &n in &config.sizes {
        for seed in 0..config.seeds {
            let (mu, nu) = config
                .dataset
                .generate(n, seed)
                .with_context(|| format!("generating {dataset_tag} at n = {n}, seed {seed}"))?;
            let cost = CostMatrix::between(&mu, &nu)?;
            for &epsilon in &config.epsilons {
                for &init_kind in &config.inits {
                    for &accel_kind in &config.accels {
                        records.push(run_one(
                            &dataset_tag,
                            &mu,
                            &nu,
                            &cost,
                            epsilon,
                            config.tau,
                            init_kind,
                            accel_kind,
                            seed,
                        ));
                    }
                }
            }
        }
    }

    let summaries = summarize(&records);
    let all_converged = records.iter().all(|r| r.converged);
    Ok(SuiteOutcome {
        records,
        summaries,
        all_converged,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    dataset_tag: &str,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    epsilon: f64,
    tau: f64,
    init_kind: InitKind,
    accel_kind: AccelKind,
    seed: u64,
) -> RunRecord {
    let mut record = RunRecord {
        dataset: dataset_tag.to_string(),
        n: mu.len(),
        m: nu.len(),
        d: mu.dim(),
        epsilon,
        init: init_kind.to_string(),
        accel: accel_kind.to_string(),
        seed,
        iterations: 0,
        init_time_s: 0.0,
        solve_time_s: 0.0,
        converged: false,
    };

    let started = Instant::now();
    let init = match build_init(init_kind, mu, nu, epsilon, tau, seed) {
        Ok(init) => init,
        Err(err) => {
            eprintln!(
                "run failed ({dataset_tag}, n={}, eps={epsilon}, init={}, accel={}, seed={seed}): {err}",
                record.n, record.init, record.accel,
            );
            return record;
        }
    };
    record.init_time_s = started.elapsed().as_secs_f64();

    let solver_config = SinkhornConfig {
        epsilon,
        tau,
        max_iters: MAX_SWEEPS,
        check_every: 1,
        acceleration: acceleration_of(accel_kind),
        ..SinkhornConfig::new(epsilon)
    };
    match sinkhorn_solve(mu, nu, cost, &solver_config, &init) {
        Ok((_, report)) => {
            record.iterations = report.iterations;
            record.solve_time_s = report.wall_time_s;
            record.converged = report.converged;
            if !report.converged {
                eprintln!(
                    "run did not converge ({dataset_tag}, n={}, eps={epsilon}, init={}, accel={}, seed={seed}): error {:.3e} after {} sweeps",
                    record.n, record.init, record.accel, report.final_error, report.iterations,
                );
            }
        }
        Err(err) => {
            eprintln!(
                "run failed ({dataset_tag}, n={}, eps={epsilon}, init={}, accel={}, seed={seed}): {err}",
                record.n, record.init, record.accel,
            );
        }
    }
    record
}

/// Groups records over seeds and reports median / quartile sweep counts.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRecord> {
    let mut groups: BTreeMap<(String, usize, usize, usize, u64, String, String), Vec<f64>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.dataset.clone(),
                r.n,
                r.m,
                r.d,
                r.epsilon.to_bits(),
                r.init.clone(),
                r.accel.clone(),
            ))
            .or_default()
            .push(r.iterations as f64);
    }
    groups
        .into_iter()
        .map(|((dataset, n, m, d, eps_bits, init, accel), mut iters)| {
            iters.sort_by(f64::total_cmp);
            SummaryRecord {
                dataset,
                n,
                m,
                d,
                epsilon: f64::from_bits(eps_bits),
                init,
                accel,
                median_iters: quantile(&iters, 0.5),
                q25: quantile(&iters, 0.25),
                q75: quantile(&iters, 0.75),
            }
        })
        .collect()
}

/// Sibling path for the summary file: `runs.csv` -> `runs_summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    out.with_file_name(format!("{stem}_summary.csv"))
}

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, summaries: &[SummaryRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    for summary in summaries {
        writer.serialize(summary)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PartialConfig;
    use crate::datasets::DatasetKind;
    use ndarray::array;

    fn tiny_config() -> ExperimentConfig {
        PartialConfig {
            dataset: Some(DatasetKind::Blobs1d),
            sizes: Some(vec![32]),
            epsilons: Some(vec![0.5]),
            tau: Some(0.05),
            inits: Some(vec![InitKind::Zero, InitKind::DualSort]),
            accels: Some(vec![AccelKind::None, AccelKind::Momentum]),
            seeds: Some(2),
            out: None,
        }
        .finalize()
        .unwrap()
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-12);
        assert!((quantile(&v, 0.75) - 3.25).abs() < 1e-12);
        assert!((quantile(&v, 0.0) - 1.0).abs() < 1e-12);
        assert!((quantile(&v, 1.0) - 4.0).abs() < 1e-12);
        assert!((quantile(&[7.0], 0.5) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn leading_axis_finds_the_stretched_direction() {
        use rand_chacha::rand_core::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let direction = [0.6f64, 0.8];
        let mut pts = Array2::<f64>::zeros((200, 2));
        for i in 0..200 {
            let long = 5.0 * normal.sample(&mut rng);
            let short = 0.1 * normal.sample(&mut rng);
            pts[[i, 0]] = long * direction[0] - short * direction[1];
            pts[[i, 1]] = long * direction[1] + short * direction[0];
        }
        let axis = leading_axis(pts.view(), pts.view());
        let alignment = (axis[0] * direction[0] + axis[1] * direction[1]).abs();
        assert!(alignment > 0.99, "alignment {alignment}");
    }

    #[test]
    fn suite_produces_the_full_grid_of_records() {
        let config = tiny_config();
        let outcome = run_suite(&config).unwrap();
        // 1 size x 1 epsilon x 2 inits x 2 accels x 2 seeds
        assert_eq!(outcome.records.len(), 8);
        assert!(outcome.all_converged);
        assert!(outcome.records.iter().all(|r| r.iterations > 0));
        assert!(outcome.records.iter().all(|r| r.n == 32 && r.m == 32));
        // 4 groups (init x accel), each over 2 seeds
        assert_eq!(outcome.summaries.len(), 4);
        for s in &outcome.summaries {
            assert!(s.q25 <= s.median_iters && s.median_iters <= s.q75);
        }
    }

    #[test]
    fn suite_reruns_are_identical_up_to_timing() {
        let config = tiny_config();
        let a = run_suite(&config).unwrap();
        let b = run_suite(&config).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.dataset, y.dataset);
            assert_eq!((x.n, x.m, x.d, x.seed), (y.n, y.m, y.d, y.seed));
            assert_eq!((x.init.clone(), x.accel.clone()), (y.init.clone(), y.accel.clone()));
            assert_eq!(x.iterations, y.iterations);
            assert_eq!(x.converged, y.converged);
        }
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn every_initializer_builds_on_a_small_pair() {
        let (mu, nu) = DatasetKind::GaussPair(3).generate(40, 5).unwrap();
        for kind in [
            InitKind::Zero,
            InitKind::DualSort,
            InitKind::Gaus,
            InitKind::Gmm(2),
            InitKind::Subsample(Some(20)),
            InitKind::Subsample(None),
        ] {
            build_init(kind, &mu, &nu, 0.5, 0.01, 3).unwrap();
        }
    }

    #[test]
    fn csv_files_have_frozen_headers_and_all_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("runs.csv");
        let config = tiny_config();
        let outcome = run_suite(&config).unwrap();
        write_records_csv(&out, &outcome.records).unwrap();
        let summary = summary_path(&out);
        assert_eq!(summary.file_name().unwrap(), "runs_summary.csv");
        write_summary_csv(&summary, &outcome.summaries).unwrap();

        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "dataset,n,m,d,epsilon,init,accel,seed,iterations,init_time_s,solve_time_s,converged"
        );
        assert_eq!(lines.count(), outcome.records.len());

        let summary_text = std::fs::read_to_string(&summary).unwrap();
        assert!(summary_text.starts_with(
            "dataset,n,m,d,epsilon,init,accel,median_iters,q25,q75"
        ));
        assert_eq!(summary_text.lines().count(), outcome.summaries.len() + 1);
    }

    #[test]
    fn projection_handles_degenerate_clouds() {
        let pts = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let axis = leading_axis(pts.view(), pts.view());
        assert!(axis.iter().all(|v| v.is_finite()));
        let norm = axis.dot(&axis).sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }
}
