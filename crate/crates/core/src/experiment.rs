//! Seeded Monte-Carlo study of the density correction on binomial classes.
//!
//! Each trial draws `n` samples `y ~ prior`, `x ~ Binomial(m, p_y)`,
//! `ỹ ~ Pr(ỹ | y)`, estimates `q(x | ỹ)`, corrects it with the Bayes-derived
//! backward matrix and scores the projected estimates against the analytic
//! binomial pmfs by summed KL divergence. The uncorrected baseline scores
//! `q(x | ỹ = i)` directly against `p(x | y = i)`.
//!
//! Trial `t` of cell `(n, d)` is seeded with
//! `mix_seed(base_seed, [n, d.to_bits(), t])` (see [`crate::exec::mix_seed`])
//! and uses its own ChaCha8 stream, so a sweep is reproducible at any worker
//! count.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionMatrix, Orientation};
use crate::density::{
    binomial_pmf, correct_densities, empirical_conditionals, project_to_pmf, sum_kl, DiscretePmf,
    Projection, WeakDataset, WeakSample,
};
use crate::error::{Error, Result};
use crate::exec::{mix_seed, Execution};

pub const DEFAULT_BINOMIAL_TRIALS: u32 = 20;
pub const DEFAULT_SUCCESS_PARAMS: [f64; 3] = [0.52, 0.65, 0.08];
pub const DEFAULT_NOISE_LEVELS: [f64; 5] = [0.95, 0.9, 0.8, 0.7, 0.6];
pub const DEFAULT_SAMPLE_SIZES: [usize; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
pub const DEFAULT_RUNS_PER_CELL: usize = 2000;
pub const DEFAULT_BASE_SEED: u64 = 20_190_101;
pub const DEFAULT_SMOOTHING: f64 = 0.5;

pub const RESULTS_HEADER: [&str; 9] = [
    "n",
    "d",
    "log_eigen_ratio",
    "mean_kl_corrected",
    "std_kl_corrected",
    "mean_kl_uncorrected",
    "std_kl_uncorrected",
    "runs",
    "base_seed",
];

/// Configuration of the synthetic convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// Binomial trial count `m`; the feature alphabet has `m + 1` symbols.
    pub binomial_trials: u32,
    /// Per-class binomial success probabilities; their count fixes `K`.
    pub success_params: Vec<f64>,
    /// Class prior `p(y)`; uniform when absent.
    pub class_prior: Option<Vec<f64>>,
    /// Explicit row-stochastic `Pr(ỹ = j | y = i)`. Overrides `noise_levels`.
    pub forward_matrix: Option<Vec<Vec<f64>>>,
    /// Diagonals `d` of the equal-diagonal forward family.
    pub noise_levels: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub runs_per_cell: usize,
    pub base_seed: u64,
    pub smoothing: f64,
    pub projection: Projection,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            binomial_trials: DEFAULT_BINOMIAL_TRIALS,
            success_params: DEFAULT_SUCCESS_PARAMS.to_vec(),
            class_prior: None,
            forward_matrix: None,
            noise_levels: DEFAULT_NOISE_LEVELS.to_vec(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            runs_per_cell: DEFAULT_RUNS_PER_CELL,
            base_seed: DEFAULT_BASE_SEED,
            smoothing: DEFAULT_SMOOTHING,
            projection: Projection::ClipRenormalize,
        }
    }
}

impl SyntheticConfig {
    pub fn num_classes(&self) -> usize {
        self.success_params.len()
    }

    pub fn prior(&self) -> Result<DiscretePmf> {
        match &self.class_prior {
            None => Ok(DiscretePmf::uniform(self.num_classes())),
            Some(p) => {
                if p.len() != self.num_classes() {
                    return Err(Error::DimensionMismatch {
                        expected: self.num_classes(),
                        found: p.len(),
                    });
                }
                DiscretePmf::new(p.clone())
            }
        }
    }

    /// The forward matrices the sweep iterates over, validated.
    pub fn noise_settings(&self) -> Result<Vec<NoiseSetting>> {
        let k = self.num_classes();
        match &self.forward_matrix {
            Some(rows) => {
                let forward = ConfusionMatrix::from_rows(rows, Orientation::Forward)?;
                if forward.num_classes() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        found: forward.num_classes(),
                    });
                }
                let d = (0..k).map(|i| forward.get(i, i)).sum::<f64>() / k as f64;
                Ok(vec![NoiseSetting { d, forward }])
            }
            None => self
                .noise_levels
                .iter()
                .map(|&d| {
                    Ok(NoiseSetting {
                        d,
                        forward: equal_diag_matrix(k, d)?,
                    })
                })
                .collect(),
        }
    }

    /// Checks everything a sweep needs before any trial runs.
    pub fn validate(&self) -> Result<()> {
        if self.num_classes() < 2 {
            return Err(Error::InvalidArgument(
                "success_params needs at least two classes".into(),
            ));
        }
        if self.binomial_trials == 0 {
            return Err(Error::InvalidArgument("binomial_trials must be >= 1".into()));
        }
        if let Some(p) = self
            .success_params
            .iter()
            .find(|p| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InvalidArgument(format!(
                "success parameter {p} is outside [0, 1]"
            )));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::InvalidArgument("runs_per_cell must be >= 1".into()));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing must be finite and >= 0, got {}",
                self.smoothing
            )));
        }
        let prior = self.prior()?;
        for setting in self.noise_settings()? {
            ConfusionMatrix::backward_from_forward(&setting.forward, &prior)?;
        }
        Ok(())
    }
}

/// One forward noise model in a sweep, labelled by its diagonal `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSetting {
    pub d: f64,
    pub forward: ConfusionMatrix,
}

/// Forward matrix with diagonal `d` and off-diagonal `(1 − d)/(K − 1)`.
pub fn equal_diag_matrix(k: usize, d: f64) -> Result<ConfusionMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need K >= 2, got {k}")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidArgument(format!("diagonal {d} is outside [0, 1]")));
    }
    let off = (1.0 - d) / (k - 1) as f64;
    ConfusionMatrix::new(
        DMatrix::from_fn(k, k, |i, j| if i == j { d } else { off }),
        Orientation::Forward,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialResult {
    pub n: usize,
    pub d: f64,
    pub log_eigen_ratio: f64,
    pub sum_kl_corrected: f64,
    pub sum_kl_uncorrected: f64,
    pub seed: u64,
}

/// Mean and sample standard deviation over the trials of one `(n, d)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub d: f64,
    pub log_eigen_ratio: f64,
    pub mean_kl_corrected: f64,
    pub std_kl_corrected: f64,
    pub mean_kl_uncorrected: f64,
    pub std_kl_uncorrected: f64,
    pub runs: usize,
    pub base_seed: u64,
}

pub fn trial_seed(base_seed: u64, n: usize, d: f64, trial: usize) -> u64 {
    mix_seed(base_seed, &[n as u64, d.to_bits(), trial as u64])
}

/// A validated configuration with its sampling distributions prepared.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: SyntheticConfig,
    prior: DiscretePmf,
    truths: Vec<DiscretePmf>,
    class_sampler: WeightedIndex<f64>,
    feature_samplers: Vec<Binomial>,
}

impl Experiment {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let prior = config.prior()?;
        let truths = config
            .success_params
            .iter()
            .map(|&p| binomial_pmf(config.binomial_trials, p))
            .collect::<Result<Vec<_>>>()?;
        let class_sampler = WeightedIndex::new(prior.masses().iter().copied())
            .map_err(|e| Error::InvalidArgument(format!("class prior: {e}")))?;
        let feature_samplers = config
            .success_params
            .iter()
            .map(|&p| {
                Binomial::new(u64::from(config.binomial_trials), p)
                    .map_err(|e| Error::InvalidArgument(format!("binomial({p}): {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            prior,
            truths,
            class_sampler,
            feature_samplers,
        })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    /// Analytic class conditionals `p(x | y = i)`.
    pub fn truths(&self) -> &[DiscretePmf] {
        &self.truths
    }

    pub fn prior(&self) -> &DiscretePmf {
        &self.prior
    }

    pub fn support_size(&self) -> usize {
        self.config.binomial_trials as usize + 1
    }

    /// Draws `n` weakly labelled samples. Deterministic in `seed`.
    pub fn generate_trial(&self, n: usize, forward: &ConfusionMatrix, seed: u64) -> Result<WeakDataset> {
        forward.expect_orientation(Orientation::Forward)?;
        let k = self.config.num_classes();
        if forward.num_classes() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: forward.num_classes(),
            });
        }
        let noise = (0..k)
            .map(|y| {
                WeightedIndex::new((0..k).map(|j| forward.get(y, j)))
                    .map_err(|e| Error::InvalidArgument(format!("forward row {y}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let y = self.class_sampler.sample(&mut rng);
                let x = self.feature_samplers[y].sample(&mut rng) as usize;
                let weak_label = noise[y].sample(&mut rng);
                WeakSample { x, weak_label }
            })
            .collect();
        WeakDataset::new(samples, self.support_size(), k)
    }

    /// Runs trial `t` of the `(n, setting)` cell.
    pub fn run_trial(&self, n: usize, setting: &NoiseSetting, trial: usize) -> Result<TrialResult> {
        let backward = ConfusionMatrix::backward_from_forward(&setting.forward, &self.prior)?;
        let log_eigen_ratio = backward.diagnostics()?.log_eigen_ratio;
        self.run_trial_with(n, setting, &backward, log_eigen_ratio, trial)
    }

    fn run_trial_with(
        &self,
        n: usize,
        setting: &NoiseSetting,
        backward: &ConfusionMatrix,
        log_eigen_ratio: f64,
        trial: usize,
    ) -> Result<TrialResult> {
        let seed = trial_seed(self.config.base_seed, n, setting.d, trial);
        let data = self.generate_trial(n, &setting.forward, seed)?;
        let weak = empirical_conditionals(&data, self.config.smoothing)?;
        let corrected = correct_densities(&weak, backward)?
            .iter()
            .map(|sm| project_to_pmf(sm, self.config.projection))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialResult {
            n,
            d: setting.d,
            log_eigen_ratio,
            sum_kl_corrected: sum_kl(&self.truths, &corrected)?,
            sum_kl_uncorrected: sum_kl(&self.truths, &weak)?,
            seed,
        })
    }

    /// All trials of one cell, in trial order.
    pub fn run_cell_trials(&self, n: usize, setting: &NoiseSetting, exec: Execution) -> Result<Vec<TrialResult>> {
        let backward = ConfusionMatrix::backward_from_forward(&setting.forward, &self.prior)?;
        let ler = backward.diagnostics()?.log_eigen_ratio;
        exec.map_indexed(self.config.runs_per_cell, |t| {
            self.run_trial_with(n, setting, &backward, ler, t)
        })
    }

    pub fn run_cell(&self, n: usize, setting: &NoiseSetting, exec: Execution) -> Result<CellSummary> {
        let trials = self.run_cell_trials(n, setting, exec)?;
        Ok(summarize(n, setting.d, &trials, self.config.base_seed))
    }

    /// Every `(n, d)` cell, `sample_sizes` outer and noise settings inner.
    /// All trials of the sweep share one parallel map.
    pub fn run_sweep(&self, exec: Execution) -> Result<Vec<CellSummary>> {
        let settings = self.config.noise_settings()?;
        let prepared = settings
            .iter()
            .map(|s| {
                let back = ConfusionMatrix::backward_from_forward(&s.forward, &self.prior)?;
                let ler = back.diagnostics()?.log_eigen_ratio;
                Ok((back, ler))
            })
            .collect::<Result<Vec<_>>>()?;
        let cells: Vec<(usize, usize)> = self
            .config
            .sample_sizes
            .iter()
            .flat_map(|&n| (0..settings.len()).map(move |s| (n, s)))
            .collect();
        let runs = self.config.runs_per_cell;
        let results = exec.map_indexed(cells.len() * runs, |idx| {
            let (n, s) = cells[idx / runs];
            let (back, ler) = &prepared[s];
            self.run_trial_with(n, &settings[s], back, *ler, idx % runs)
        })?;
        Ok(cells
            .iter()
            .zip(results.chunks(runs))
            .map(|(&(n, s), trials)| summarize(n, settings[s].d, trials, self.config.base_seed))
            .collect())
    }
}

/// Convenience wrapper: one equal-diagonal trial straight from a config.
pub fn generate_trial(cfg: &SyntheticConfig, n: usize, d: f64, seed: u64) -> Result<WeakDataset> {
    let exp = Experiment::new(cfg.clone())?;
    exp.generate_trial(n, &equal_diag_matrix(cfg.num_classes(), d)?, seed)
}

/// Aggregates one equal-diagonal cell straight from a config.
pub fn run_cell(cfg: &SyntheticConfig, n: usize, d: f64, exec: Execution) -> Result<CellSummary> {
    let exp = Experiment::new(cfg.clone())?;
    let setting = NoiseSetting {
        d,
        forward: equal_diag_matrix(cfg.num_classes(), d)?,
    };
    exp.run_cell(n, &setting, exec)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, var.sqrt())
}

pub fn summarize(n: usize, d: f64, trials: &[TrialResult], base_seed: u64) -> CellSummary {
    let (mean_c, std_c) = mean_std(trials.iter().map(|t| t.sum_kl_corrected));
    let (mean_u, std_u) = mean_std(trials.iter().map(|t| t.sum_kl_uncorrected));
    CellSummary {
        n,
        d,
        log_eigen_ratio: trials.first().map_or(f64::NAN, |t| t.log_eigen_ratio),
        mean_kl_corrected: mean_c,
        std_kl_corrected: std_c,
        mean_kl_uncorrected: mean_u,
        std_kl_uncorrected: std_u,
        runs: trials.len(),
        base_seed,
    }
}

/// Ordinary least-squares slope of `ln(y)` against `ln(n)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit("need at least three points"));
    }
    if points.iter().any(|&(n, y)| n.is_nan() || y.is_nan() || n <= 0.0 || y <= 0.0) {
        return Err(Error::DegenerateFit("all coordinates must be positive"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, y)| (n.ln(), y.ln())).collect();
    let count = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all sample sizes are equal"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Pearson correlation coefficient; `None` when either side is constant.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Formats `v` with nine significant digits in positional notation.
pub fn format_sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn write_results<W: Write>(rows: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_sig9(r.d),
            format_sig9(r.log_eigen_ratio),
            format_sig9(r.mean_kl_corrected),
            format_sig9(r.std_kl_corrected),
            format_sig9(r.mean_kl_uncorrected),
            format_sig9(r.std_kl_uncorrected),
            r.runs.to_string(),
            r.base_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(rows: &[CellSummary], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_results(rows, std::io::BufWriter::new(file))
}
