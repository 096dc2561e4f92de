use std::fs;
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use weakcorr::confusion::Orientation;
use weakcorr::density::{correct_densities, project_to_pmf, DiscretePmf, Projection};
use weakcorr::experiment::{write_results, Experiment, SyntheticConfig};
use weakcorr::io::{read_confusion_csv, read_rows_csv, write_corrected};
use weakcorr::loss::{correct_loss_multiclass, LossVector};
use weakcorr::personalize::{PersonalizeConfig, Scenario};
use weakcorr::{Error, Execution};

const DIAGNOSE_HELP: &str = "\
Input:
  --matrix     headerless CSV, K rows of K comma-separated decimals
               ('#' starts a comment line)

Output (stdout):
  det, eigen_ratio, log_eigen_ratio, is_permutation";

const CORRECT_HELP: &str = "\
Inputs:
  --matrix     backward confusion matrix Pr(y=i | weak=j), columns sum to 1
  --densities  headerless CSV, K rows (one per weak label) of S masses

Output:
  CSV with header class,index,corrected,projected";

const CORRECT_LOSS_HELP: &str = "\
Inputs:
  --matrix     forward confusion matrix Pr(weak=j | y=i) at row i, column j
  --loss       JSON array of K clean losses, one per candidate label

Output:
  JSON object {\"clean\": [...], \"corrected\": [...]}";

const SWEEP_HELP: &str = "\
Config keys (JSON object; every key optional, unknown keys rejected):
  binomial_trials   binomial trial count m, alphabet has m+1 symbols [20]
  success_params    per-class success probabilities, fixes K [[0.52, 0.65, 0.08]]
  class_prior       class prior p(y) [uniform]
  forward_matrix    explicit row-stochastic Pr(weak=j | y=i); overrides noise_levels [none]
  noise_levels      diagonals d of the equal-diagonal noise family [[0.95, 0.9, 0.8, 0.7, 0.6]]
  sample_sizes      samples per trial n [[1000, 3000, 10000, 30000, 100000]]
  runs_per_cell     trials per (n, d) cell [2000]
  base_seed         seed of the whole sweep; --seed overrides it [20190101]
  smoothing         additive pseudo-count for empirical densities [0.5]
  projection        \"clip\" or \"simplex\" [\"clip\"]

Output CSV columns:
  n,d,log_eigen_ratio,mean_kl_corrected,std_kl_corrected,
  mean_kl_uncorrected,std_kl_uncorrected,runs,base_seed";

const PERSONALIZE_HELP: &str = "\
Config keys (JSON object; every key optional, unknown keys rejected):
  seed                               demo seed; --seed overrides it [7]
  alphabet_size                      symbols of the discretized feature [16]
  personalization_samples_per_class  weakly annotated samples per activity [120]
  eval_samples_per_class             held-out samples per activity [600]
  confusion_samples_per_class        draws per activity for the annotator confusion [100000]
  projection                         \"clip\" or \"simplex\" [\"clip\"]
  baseline_strength                  pseudo-count mass per class of the baseline [30]
  baseline_uniform_mix               uniform weight in baseline emissions [0.7]
  user_emission_centers              per-activity emission centers of the user [[2.0, 7.5, 12.5]]
  emission_widths                    per-activity emission widths [[1.3, 1.3, 1.5]]
  population_emission_centers        emission centers behind the baseline [[6.5, 7.5, 12.5]]
  annotator_confusion                nominal forward confusion of the speed annotator
                                     [[[0.76, 0.24, 0], [0.28, 0.72, 0], [0, 0, 1]]]
  speed_models                       per-activity list of {weight, low, high} uniform bands (mph)

Activities are fidget, slow walk and bike, in that order.

Output JSON keys:
  ber_baseline, ber_ground_truth, ber_weak_corrected, annotator_confusion_empirical";

#[derive(Debug, Parser)]
#[command(name = "weakcorr", version, about = "Noise-corrected learning from weakly annotated data")]
struct Cli {
    /// Print resolved configs and progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conditioning diagnostics of a confusion matrix.
    #[command(after_help = DIAGNOSE_HELP)]
    Diagnose {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_parser = ["backward", "forward"])]
        orientation: String,
    },
    /// Correct weak-label conditional densities with a backward matrix.
    #[command(after_help = CORRECT_HELP)]
    Correct {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        densities: PathBuf,
        #[arg(long, value_parser = ["clip", "simplex"], default_value = "clip")]
        projection: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unbiased loss correction with a forward matrix.
    #[command(after_help = CORRECT_LOSS_HELP)]
    CorrectLoss {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        loss: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo convergence sweep over sample sizes and noise levels.
    #[command(after_help = SWEEP_HELP)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads [default: available parallelism].
        #[arg(long)]
        workers: Option<NonZeroUsize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Personalize a baseline activity model from speed-annotated data.
    #[command(after_help = PERSONALIZE_HELP)]
    PersonalizeDemo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug)]
enum Failure {
    Domain(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_domain() {
            Failure::Domain(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out).and_then(|()| out.flush()).map_err(|e| Failure::Usage(e.to_string()))
}

fn echo<T: Serialize>(verbose: u8, label: &str, value: &T) {
    if verbose > 0 {
        let text = serde_json::to_string_pretty(value).unwrap_or_default();
        eprintln!("{label}:\n{text}");
    }
}

fn diagnose(matrix: &Path, orientation: &str) -> CliResult<()> {
    let orientation: Orientation = orientation.parse()?;
    let cm = read_confusion_csv(matrix, orientation)?;
    let d = cm.diagnostics()?;
    println!("det={}", d.determinant);
    println!("eigen_ratio={}", d.eigen_ratio);
    println!("log_eigen_ratio={}", d.log_eigen_ratio);
    println!("is_permutation={}", d.is_permutation);
    Ok(())
}

fn correct(matrix: &Path, densities: &Path, projection: &str, out: &Path) -> CliResult<()> {
    let projection: Projection = projection.parse()?;
    let back = read_confusion_csv(matrix, Orientation::Backward)?;
    let weak = read_rows_csv(densities)?
        .into_iter()
        .map(DiscretePmf::new)
        .collect::<weakcorr::Result<Vec<_>>>()?;
    let raw = correct_densities(&weak, &back)?;
    let projected = raw
        .iter()
        .map(|sm| project_to_pmf(sm, projection))
        .collect::<weakcorr::Result<Vec<_>>>()?;
    let mut w = create(out)?;
    write_corrected(&raw, &projected, &mut w)?;
    Ok(())
}

#[derive(Serialize)]
struct LossReport {
    clean: LossVector,
    corrected: LossVector,
}

fn correct_loss(matrix: &Path, loss: &Path, out: &Path) -> CliResult<()> {
    let fwd = read_confusion_csv(matrix, Orientation::Forward)?;
    let clean = LossVector::new(read_json::<Vec<f64>>(loss)?)?;
    let corrected = correct_loss_multiclass(&clean, &fwd)?;
    write_json(&LossReport { clean, corrected }, out)
}

fn sweep(config: &Path, out: &Path, workers: Option<NonZeroUsize>, seed: Option<u64>, verbose: u8) -> CliResult<()> {
    let mut cfg: SyntheticConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    echo(verbose, "sweep config", &cfg);
    let exp = Experiment::new(cfg)?;
    let rows = exp.run_sweep(Execution::from_workers(workers.map(NonZeroUsize::get)))?;
    let mut w = create(out)?;
    write_results(&rows, &mut w)?;
    if verbose > 0 {
        eprintln!("wrote {} rows to {}", rows.len(), out.display());
    }
    Ok(())
}

fn personalize_demo(config: &Path, out: &Path, seed: Option<u64>, verbose: u8) -> CliResult<()> {
    let mut cfg: PersonalizeConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    echo(verbose, "personalize config", &cfg);
    let seed = cfg.seed;
    let report = Scenario::new(cfg)?.run(seed)?;
    echo(verbose, "report", &report);
    write_json(&report, out)
}

fn run(cli: Cli) -> CliResult<()> {
    let v = cli.verbose;
    match cli.command {
        Command::Diagnose { matrix, orientation } => diagnose(&matrix, &orientation),
        Command::Correct {
            matrix,
            densities,
            projection,
            out,
        } => correct(&matrix, &densities, &projection, &out),
        Command::CorrectLoss { matrix, loss, out } => correct_loss(&matrix, &loss, &out),
        Command::Sweep {
            config,
            out,
            workers,
            seed,
        } => sweep(&config, &out, workers, seed, v),
        Command::PersonalizeDemo { config, out, seed } => personalize_demo(&config, &out, seed, v),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
