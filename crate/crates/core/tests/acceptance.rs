//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! Run with `cargo test -p weakcorr --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weakcorr::confusion::{ConfusionMatrix, Orientation};
use weakcorr::density::{
    binomial_pmf, correct_densities, mix_densities, project_to_pmf, sum_kl, DiscretePmf,
    Projection,
};
use weakcorr::exec::Execution;
use weakcorr::experiment::{
    equal_diag_matrix, fit_loglog_slope, pearson_correlation, write_results, Experiment,
    SyntheticConfig,
};
use weakcorr::loss::{correct_loss_binary, correct_loss_multiclass, expected_weak_loss, LossVector};
use weakcorr::personalize::{
    empirical_annotator_confusion, gps_annotator_confusion, PersonalizeConfig, Scenario,
};

const SEED: u64 = 20_190_101;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn random_stochastic(rng: &mut ChaCha8Rng, k: usize, orientation: Orientation) -> ConfusionMatrix {
    loop {
        let mut m = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>());
        match orientation {
            Orientation::Backward => m.column_iter_mut().for_each(|mut c| {
                let s = c.sum();
                c /= s;
            }),
            Orientation::Forward => m.row_iter_mut().for_each(|mut r| {
                let s = r.sum();
                r /= s;
            }),
        }
        if let Ok(cm) = ConfusionMatrix::new(m, orientation) {
            if cm.determinant().abs() > 1e-6 {
                return cm;
            }
        }
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, s: usize) -> DiscretePmf {
    let w: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();
    DiscretePmf::from_weights(&w).unwrap()
}

/// 1. Exact mixtures of the three binomials are recovered.
fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let truths: Vec<DiscretePmf> = [0.52, 0.65, 0.08]
        .iter()
        .map(|&p| binomial_pmf(20, p).unwrap())
        .collect();
    let back = ConfusionMatrix::backward_from_forward(
        &equal_diag_matrix(3, 0.8).unwrap(),
        &DiscretePmf::uniform(3),
    )
    .unwrap();
    let raw: Vec<Vec<f64>> = truths.iter().map(|t| t.masses().to_vec()).collect();
    let weak: Vec<DiscretePmf> = mix_densities(&raw, &back)
        .unwrap()
        .into_iter()
        .map(|v| DiscretePmf::from_weights(&v).unwrap())
        .collect();
    let recovered: Vec<DiscretePmf> = correct_densities(&weak, &back)
        .unwrap()
        .iter()
        .map(|sm| project_to_pmf(sm, Projection::ClipRenormalize).unwrap())
        .collect();
    let kl = sum_kl(&truths, &recovered).unwrap();
    let elapsed = start.elapsed();
    outcome(
        kl < 1e-9 && within(elapsed, Duration::from_secs(1)),
        format!("sum_kl = {kl:.3e} (< 1e-9), {elapsed:.2?} (< 1 s)"),
    )
}

/// 2. Re-mixing corrected densities reproduces the input.
fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let k = [2, 3, 5][trial % 3];
        let back = random_stochastic(&mut rng, k, Orientation::Backward);
        let support = rng.random_range(2..=25);
        let weak: Vec<DiscretePmf> = (0..k).map(|_| random_pmf(&mut rng, support)).collect();
        let corrected = correct_densities(&weak, &back).unwrap();
        let raw: Vec<Vec<f64>> = corrected.iter().map(|s| s.values().to_vec()).collect();
        let remixed = mix_densities(&raw, &back).unwrap();
        for (r, w) in remixed.iter().zip(&weak) {
            for (a, b) in r.iter().zip(w.masses()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-9 && within(elapsed, Duration::from_secs(5)),
        format!("max |remix - input| = {worst:.3e} (< 1e-9), {elapsed:.2?} (< 5 s)"),
    )
}

/// 3. Corrected losses are unbiased, including flipped binary noise.
fn unbiased_loss() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0f64;
    let mut flipped = 0;
    for trial in 0..100 {
        let (fwd, binary) = if trial % 4 == 0 {
            // κ₊ + κ₋ in (1, 2): the flipped regime.
            let kp = rng.random_range(0.3..1.0);
            let km = rng.random_range((1.02 - kp)..1.0);
            flipped += 1;
            (ConfusionMatrix::binary_from_kappas(kp, km).unwrap(), Some((kp, km)))
        } else {
            let k = rng.random_range(2..=6);
            (random_stochastic(&mut rng, k, Orientation::Forward), None)
        };
        let k = fwd.num_classes();
        let clean = LossVector::new((0..k).map(|_| rng.random_range(-10.0..10.0)).collect()).unwrap();
        let corrected = correct_loss_multiclass(&clean, &fwd).unwrap();
        for (i, li) in clean.values().iter().enumerate() {
            let e = expected_weak_loss(&corrected, &fwd, i).unwrap();
            worst = worst.max((e - li).abs());
        }
        if let Some((kp, km)) = binary {
            let (pos, neg) = correct_loss_binary(clean.values()[0], clean.values()[1], kp, km).unwrap();
            let corrected = LossVector::new(vec![pos, neg]).unwrap();
            for (i, li) in clean.values().iter().enumerate() {
                worst = worst.max((expected_weak_loss(&corrected, &fwd, i).unwrap() - li).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-8 && within(elapsed, Duration::from_secs(1)),
        format!(
            "max |E[l~] - l| = {worst:.3e} (< 1e-8) over 100 pairs ({flipped} flipped binary), {elapsed:.2?} (< 1 s)"
        ),
    )
}

/// 4. Corrected divergence decays at roughly n^(-1/2).
fn convergence_rate() -> Outcome {
    let start = Instant::now();
    let cfg = SyntheticConfig {
        sample_sizes: vec![1_000, 3_000, 10_000, 30_000, 100_000],
        noise_levels: vec![0.8],
        runs_per_cell: 200,
        base_seed: SEED,
        ..SyntheticConfig::default()
    };
    let rows = Experiment::new(cfg)
        .unwrap()
        .run_sweep(Execution::ParallelWith(4))
        .unwrap();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n as f64, r.mean_kl_corrected))
        .collect();
    let slope = fit_loglog_slope(&points).unwrap();
    let elapsed = start.elapsed();
    let means: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.mean_kl_corrected)).collect();
    outcome(
        (-0.65..=-0.35).contains(&slope) && within(elapsed, Duration::from_secs(120)),
        format!(
            "slope = {slope:.4} (in [-0.65, -0.35]), means [{}], {elapsed:.2?} (< 120 s, 4 workers)",
            means.join(", ")
        ),
    )
}

fn eigen_sweep() -> (Vec<weakcorr::CellSummary>, Duration) {
    let start = Instant::now();
    let cfg = SyntheticConfig {
        sample_sizes: vec![10_000],
        noise_levels: vec![0.95, 0.9, 0.8, 0.7, 0.6, 0.5],
        runs_per_cell: 200,
        base_seed: SEED,
        ..SyntheticConfig::default()
    };
    let rows = Experiment::new(cfg)
        .unwrap()
        .run_sweep(Execution::ParallelWith(4))
        .unwrap();
    (rows, start.elapsed())
}

/// 5. Divergence grows with the log eigen-ratio, close to linearly.
fn eigen_monotonicity(rows: &[weakcorr::CellSummary], elapsed: Duration) -> Outcome {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.log_eigen_ratio.total_cmp(&b.log_eigen_ratio));
    let increasing = sorted
        .windows(2)
        .all(|w| w[1].mean_kl_corrected > w[0].mean_kl_corrected);
    let xs: Vec<f64> = sorted.iter().map(|r| r.log_eigen_ratio).collect();
    let ys: Vec<f64> = sorted.iter().map(|r| r.mean_kl_corrected).collect();
    let r = pearson_correlation(&xs, &ys).unwrap_or(f64::NAN);
    outcome(
        increasing && r > 0.9 && within(elapsed, Duration::from_secs(120)),
        format!(
            "strictly increasing = {increasing}, pearson = {r:.4} (> 0.9), {elapsed:.2?} (< 120 s)"
        ),
    )
}

/// 6. Correction beats the uncorrected estimate wherever there is noise.
fn corrected_beats_uncorrected(rows: &[weakcorr::CellSummary]) -> Outcome {
    let noisy: Vec<_> = rows.iter().filter(|r| r.d <= 0.9).collect();
    let all = noisy
        .iter()
        .all(|r| r.mean_kl_corrected < r.mean_kl_uncorrected);
    let pairs: Vec<String> = noisy
        .iter()
        .map(|r| format!("d={}: {:.4} < {:.4}", r.d, r.mean_kl_corrected, r.mean_kl_uncorrected))
        .collect();
    outcome(all && !noisy.is_empty(), pairs.join("; "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// 7. Personalization ordering over 20 seeds.
fn personalization_ordering() -> Outcome {
    let start = Instant::now();
    let scenario = Scenario::new(PersonalizeConfig {
        confusion_samples_per_class: 1_000,
        ..PersonalizeConfig::default()
    })
    .unwrap();
    let seeds: Vec<u64> = (0..20).map(|i| SEED + i).collect();
    let reports = scenario.run_many(&seeds, Execution::Parallel).unwrap();
    let base = median(reports.iter().map(|r| r.ber_baseline).collect());
    let gt = median(reports.iter().map(|r| r.ber_ground_truth).collect());
    let weak = median(reports.iter().map(|r| r.ber_weak_corrected).collect());
    let worst_gap = reports
        .iter()
        .map(|r| r.ber_weak_corrected - r.ber_ground_truth)
        .fold(f64::NEG_INFINITY, f64::max);
    let elapsed = start.elapsed();
    outcome(
        base > 0.15 && gt < 0.10 && weak - gt <= 0.03 && within(elapsed, Duration::from_secs(60)),
        format!(
            "median BER baseline {base:.4} (> 0.15), ground truth {gt:.4} (< 0.10), weak-corrected {weak:.4} (gap {:.4} <= 0.03; worst per-seed gap {worst_gap:.4}), {elapsed:.2?} (< 60 s)",
            weak - gt
        ),
    )
}

/// 8. The synthetic annotator reproduces the GPS confusion table.
fn annotator_confusion() -> Outcome {
    let scenario = Scenario::new(PersonalizeConfig::default()).unwrap();
    let measured = empirical_annotator_confusion(scenario.speed_models(), 100_000, SEED);
    let nominal = gps_annotator_confusion();
    let worst = measured
        .iter()
        .flatten()
        .zip(nominal.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let rows: Vec<String> = measured
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")))
        .collect();
    outcome(
        worst <= 0.03,
        format!("max deviation {worst:.4} (<= 0.03), measured {}", rows.join(" ")),
    )
}

/// 9. Sweep CSVs are byte-identical across runs and worker counts.
fn determinism() -> Outcome {
    let cfg = SyntheticConfig {
        sample_sizes: vec![1_000, 5_000],
        noise_levels: vec![0.9, 0.7],
        runs_per_cell: 40,
        base_seed: SEED,
        ..SyntheticConfig::default()
    };
    let exp = Experiment::new(cfg).unwrap();
    let render = |exec: Execution| {
        let mut buf = Vec::new();
        write_results(&exp.run_sweep(exec).unwrap(), &mut buf).unwrap();
        buf
    };
    let reference = render(Execution::Sequential);
    let variants = [
        Execution::Sequential,
        Execution::ParallelWith(2),
        Execution::ParallelWith(4),
        Execution::ParallelWith(7),
        Execution::Parallel,
    ];
    let identical = variants.iter().all(|&e| render(e) == reference);
    outcome(
        identical,
        format!(
            "{} bytes identical across sequential, 2, 4, 7 and default workers = {identical}",
            reference.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 exact recovery", exact_recovery()),
        ("2 round trip", round_trip()),
        ("3 unbiased loss", unbiased_loss()),
        ("4 convergence rate", convergence_rate()),
    ];
    let (rows, elapsed) = eigen_sweep();
    results.push(("5 eigen-ratio monotonicity", eigen_monotonicity(&rows, elapsed)));
    results.push(("6 corrected beats uncorrected", corrected_beats_uncorrected(&rows)));
    results.push(("7 personalization ordering", personalization_ordering()));
    results.push(("8 annotator confusion", annotator_confusion()));
    results.push(("9 sweep determinism", determinism()));

    let mut failed = 0;
    for (name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
