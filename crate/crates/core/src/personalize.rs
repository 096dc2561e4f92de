//! Personalizing a Dirichlet–categorical emission model from weak labels.
//!
//! A population baseline model is adapted to one user with a short labelled
//! collection. Labels come either from ground truth or from a GPS-speed
//! threshold annotator; the annotator's labels are noise-corrected through
//! the inverse backward confusion matrix before they touch the model.
//! Models are scored by per-sample MAP classification error.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionMatrix, Orientation};
use crate::density::{correct_densities, project_to_pmf, DiscretePmf, Projection};
use crate::error::{Error, Result};
use crate::exec::{mix_seed, Execution};

/// Output of the speed annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Annotation {
    Label(usize),
    NoReading,
}

pub const CLASS_FIDGET: usize = 0;
pub const CLASS_SLOW_WALK: usize = 1;
pub const CLASS_BIKE: usize = 2;

/// Threshold classifier on GPS speed (mph):
/// `[0, 0.1]` fidget, `(0.1, 1]` slow walk, `(3, 25]` bike, otherwise no reading.
pub fn speed_annotator(speed_mph: f64) -> Annotation {
    if (0.0..=0.1).contains(&speed_mph) {
        Annotation::Label(CLASS_FIDGET)
    } else if speed_mph > 0.1 && speed_mph <= 1.0 {
        Annotation::Label(CLASS_SLOW_WALK)
    } else if speed_mph > 3.0 && speed_mph <= 25.0 {
        Annotation::Label(CLASS_BIKE)
    } else {
        Annotation::NoReading
    }
}

/// The annotator's nominal forward confusion (rows: truth, columns: result).
pub fn gps_annotator_confusion() -> Vec<Vec<f64>> {
    vec![
        vec![0.76, 0.24, 0.0],
        vec![0.28, 0.72, 0.0],
        vec![0.0, 0.0, 1.0],
    ]
}

/// Uniform speed component on `[low, high]` with mixture weight `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedBand {
    pub weight: f64,
    pub low: f64,
    pub high: f64,
}

/// Piecewise-uniform speed distribution of one activity.
#[derive(Debug, Clone)]
pub struct SpeedModel {
    picker: WeightedIndex<f64>,
    bands: Vec<Uniform<f64>>,
}

impl SpeedModel {
    pub fn new(bands: &[SpeedBand]) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidArgument("speed model needs at least one band".into()));
        }
        for b in bands {
            if !(b.low.is_finite() && b.high.is_finite() && b.low >= 0.0 && b.high > b.low) {
                return Err(Error::InvalidArgument(format!(
                    "speed band [{}, {}] must satisfy 0 <= low < high < inf",
                    b.low, b.high
                )));
            }
        }
        let picker = WeightedIndex::new(bands.iter().map(|b| b.weight))
            .map_err(|e| Error::InvalidArgument(format!("speed band weights: {e}")))?;
        let bands = bands
            .iter()
            .map(|b| {
                Uniform::new_inclusive(b.low, b.high)
                    .map_err(|e| Error::InvalidArgument(format!("speed band: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { picker, bands })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.bands[self.picker.sample(rng)].sample(rng)
    }
}

/// Speed models whose induced annotator confusion reproduces
/// [`gps_annotator_confusion`]: fidget ~ U[0, 0.13]; slow walk is 28% on
/// U[0, 0.1] and 72% on U[0.1, 1]; bike ~ U[4, 20].
pub fn default_speed_bands() -> Vec<Vec<SpeedBand>> {
    let band = |weight, low, high| SpeedBand { weight, low, high };
    vec![
        vec![band(1.0, 0.0, 0.13)],
        vec![band(0.28, 0.0, 0.1), band(0.72, 0.1, 1.0)],
        vec![band(1.0, 4.0, 20.0)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnotatedSample {
    pub x: usize,
    pub speed: f64,
    /// Held out for evaluation and the ground-truth update.
    pub true_label: usize,
}

impl AnnotatedSample {
    pub fn annotation(&self) -> Annotation {
        speed_annotator(self.speed)
    }
}

/// A run of `count` consecutive samples of one activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub class: usize,
    pub count: usize,
}

/// Simulates a user trace following `plan`. Deterministic in `seed`.
pub fn gen_user_trace(
    emissions: &[DiscretePmf],
    speed_models: &[SpeedModel],
    plan: &[Segment],
    seed: u64,
) -> Result<Vec<AnnotatedSample>> {
    if emissions.len() != speed_models.len() {
        return Err(Error::DimensionMismatch {
            expected: emissions.len(),
            found: speed_models.len(),
        });
    }
    let pickers = emissions
        .iter()
        .map(|e| {
            WeightedIndex::new(e.masses().iter().copied())
                .map_err(|err| Error::InvalidArgument(format!("emission: {err}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = plan.iter().find(|s| s.class >= emissions.len()) {
        return Err(Error::InvalidArgument(format!(
            "segment class {} out of range",
            s.class
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(plan.iter().map(|s| s.count).sum());
    for seg in plan {
        for _ in 0..seg.count {
            let x = pickers[seg.class].sample(&mut rng);
            let speed = speed_models[seg.class].sample(&mut rng);
            out.push(AnnotatedSample {
                x,
                speed,
                true_label: seg.class,
            });
        }
    }
    Ok(out)
}

/// Row-normalized annotator confusion measured on `samples_per_class` draws
/// of each speed model. No-reading draws are excluded from the rows.
pub fn empirical_annotator_confusion(
    speed_models: &[SpeedModel],
    samples_per_class: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let k = speed_models.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    speed_models
        .iter()
        .map(|model| {
            let mut row = vec![0.0; k];
            let mut labelled = 0usize;
            for _ in 0..samples_per_class {
                if let Annotation::Label(j) = speed_annotator(model.sample(&mut rng)) {
                    if j < k {
                        row[j] += 1.0;
                        labelled += 1;
                    }
                }
            }
            if labelled > 0 {
                row.iter_mut().for_each(|v| *v /= labelled as f64);
            }
            row
        })
        .collect()
}

/// Per-class Dirichlet pseudo-counts over the feature alphabet plus a class prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletCategoricalModel {
    concentrations: Vec<Vec<f64>>,
    class_prior: DiscretePmf,
}

impl DirichletCategoricalModel {
    pub fn new(concentrations: Vec<Vec<f64>>, class_prior: DiscretePmf) -> Result<Self> {
        if concentrations.len() != class_prior.len() {
            return Err(Error::DimensionMismatch {
                expected: class_prior.len(),
                found: concentrations.len(),
            });
        }
        let s = concentrations.first().map_or(0, Vec::len);
        if s == 0 {
            return Err(Error::InvalidArgument("empty feature alphabet".into()));
        }
        for (i, row) in concentrations.iter().enumerate() {
            if row.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "class {i} has a negative or non-finite concentration"
                )));
            }
            if row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "class {i} concentration has zero total"
                )));
            }
        }
        Ok(Self {
            concentrations,
            class_prior,
        })
    }

    /// Concentrations `strength · emission_i`.
    pub fn from_emissions(emissions: &[DiscretePmf], strength: f64, class_prior: DiscretePmf) -> Result<Self> {
        if strength.is_nan() || strength <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "baseline strength must be positive, got {strength}"
            )));
        }
        Self::new(
            emissions
                .iter()
                .map(|e| e.masses().iter().map(|m| m * strength).collect())
                .collect(),
            class_prior,
        )
    }

    pub fn concentrations(&self) -> &[Vec<f64>] {
        &self.concentrations
    }

    pub fn class_prior(&self) -> &DiscretePmf {
        &self.class_prior
    }

    pub fn num_classes(&self) -> usize {
        self.concentrations.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.concentrations[0].len()
    }

    pub fn total_concentration(&self) -> f64 {
        self.concentrations.iter().flatten().sum()
    }

    /// Posterior-predictive emission of class `class`.
    pub fn predictive(&self, class: usize) -> DiscretePmf {
        let row = &self.concentrations[class];
        let total: f64 = row.iter().sum();
        DiscretePmf::new(row.iter().map(|c| c / total).collect())
            .expect("concentrations validated positive")
    }

    fn check_samples(&self, samples: &[(usize, usize)]) -> Result<()> {
        if let Some(&(x, y)) = samples
            .iter()
            .find(|&&(x, y)| x >= self.alphabet_size() || y >= self.num_classes())
        {
            return Err(Error::InvalidArgument(format!(
                "sample (x={x}, label={y}) out of range"
            )));
        }
        Ok(())
    }
}

/// Adds the observed `(x, true_label)` counts to the concentrations.
pub fn update_ground_truth(
    model: &DirichletCategoricalModel,
    samples: &[(usize, usize)],
) -> Result<DirichletCategoricalModel> {
    model.check_samples(samples)?;
    let mut out = model.clone();
    for &(x, y) in samples {
        out.concentrations[y][x] += 1.0;
    }
    Ok(out)
}

/// Pseudo-counts implied by weak-label evidence.
///
/// Corrects the per-weak-label pmfs with `Π⁻¹`, projects each class onto the
/// simplex and scales it by the expected true-class count
/// `ñ_i = Σ_j n_j · Π(i, j)`. Classes with `ñ_i = 0` receive nothing.
pub fn corrected_pseudo_counts(
    weak_pmfs: &[DiscretePmf],
    weak_counts: &[f64],
    backward: &ConfusionMatrix,
    projection: Projection,
) -> Result<Vec<Vec<f64>>> {
    backward.expect_orientation(Orientation::Backward)?;
    let k = backward.num_classes();
    if weak_counts.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: weak_counts.len(),
        });
    }
    let corrected = correct_densities(weak_pmfs, backward)?;
    corrected
        .iter()
        .enumerate()
        .map(|(i, sm)| {
            let expected: f64 = (0..k).map(|j| weak_counts[j] * backward.get(i, j)).sum();
            if expected <= 0.0 {
                return Ok(vec![0.0; sm.len()]);
            }
            let pmf = project_to_pmf(sm, projection)?;
            Ok(pmf.masses().iter().map(|m| m * expected).collect())
        })
        .collect()
}

/// Adds noise-corrected pseudo-counts from `(x, weak_label)` pairs.
///
/// Weak labels without samples enter the correction as a uniform
/// placeholder; they carry zero count mass of their own.
pub fn update_weak_corrected(
    model: &DirichletCategoricalModel,
    samples: &[(usize, usize)],
    backward: &ConfusionMatrix,
    projection: Projection,
) -> Result<DirichletCategoricalModel> {
    model.check_samples(samples)?;
    let k = model.num_classes();
    let s = model.alphabet_size();
    if backward.num_classes() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: backward.num_classes(),
        });
    }
    let mut counts = vec![vec![0.0; s]; k];
    for &(x, j) in samples {
        counts[j][x] += 1.0;
    }
    let weak_counts: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let weak_pmfs = counts
        .iter()
        .zip(&weak_counts)
        .map(|(row, &n)| {
            if n > 0.0 {
                DiscretePmf::from_weights(row)
            } else {
                Ok(DiscretePmf::uniform(s))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let added = corrected_pseudo_counts(&weak_pmfs, &weak_counts, backward, projection)?;
    let mut out = model.clone();
    for (row, add) in out.concentrations.iter_mut().zip(added) {
        for (c, a) in row.iter_mut().zip(add) {
            *c += a;
        }
    }
    Ok(out)
}

/// `argmax_i prior_i · α_i[x] / Σ_a α_i[a]`, ties to the lowest index.
pub fn map_predict(model: &DirichletCategoricalModel, x: usize) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, row) in model.concentrations.iter().enumerate() {
        let score = model.class_prior.masses()[i] * row[x] / row.iter().sum::<f64>();
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Fraction of `(x, true_label)` pairs misclassified by [`map_predict`].
pub fn empirical_ber(model: &DirichletCategoricalModel, eval: &[(usize, usize)]) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    model.check_samples(eval)?;
    let wrong = eval
        .iter()
        .filter(|&&(x, y)| map_predict(model, x) != y)
        .count();
    Ok(wrong as f64 / eval.len() as f64)
}

/// Discretized Gaussian bump over `0..alphabet`.
pub fn discretized_bump(alphabet: usize, center: f64, width: f64) -> Result<DiscretePmf> {
    if alphabet == 0 || width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bump needs a nonempty alphabet and positive width (got {alphabet}, {width})"
        )));
    }
    let weights: Vec<f64> = (0..alphabet)
        .map(|a| (-0.5 * ((a as f64 - center) / width).powi(2)).exp())
        .collect();
    DiscretePmf::from_weights(&weights)
}

/// Configuration of the personalization demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PersonalizeConfig {
    pub seed: u64,
    pub alphabet_size: usize,
    /// Labelled personalization samples collected per activity.
    pub personalization_samples_per_class: usize,
    /// Held-out evaluation samples per activity.
    pub eval_samples_per_class: usize,
    /// Draws per activity used to measure the annotator confusion.
    pub confusion_samples_per_class: usize,
    pub projection: Projection,
    /// Total pseudo-count mass per class in the baseline model.
    pub baseline_strength: f64,
    /// Weight of the uniform component in the baseline emissions.
    pub baseline_uniform_mix: f64,
    pub user_emission_centers: Vec<f64>,
    pub emission_widths: Vec<f64>,
    /// Emission centers of the population the baseline was trained on.
    pub population_emission_centers: Vec<f64>,
    /// Nominal forward confusion of the annotator used for correction.
    pub annotator_confusion: Vec<Vec<f64>>,
    pub speed_models: Vec<Vec<SpeedBand>>,
}

impl Default for PersonalizeConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            alphabet_size: 16,
            personalization_samples_per_class: 120,
            eval_samples_per_class: 600,
            confusion_samples_per_class: 100_000,
            projection: Projection::ClipRenormalize,
            baseline_strength: 30.0,
            baseline_uniform_mix: 0.7,
            user_emission_centers: vec![2.0, 7.5, 12.5],
            emission_widths: vec![1.3, 1.3, 1.5],
            population_emission_centers: vec![6.5, 7.5, 12.5],
            annotator_confusion: gps_annotator_confusion(),
            speed_models: default_speed_bands(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersonalizeReport {
    pub ber_baseline: f64,
    pub ber_ground_truth: f64,
    pub ber_weak_corrected: f64,
    pub annotator_confusion_empirical: Vec<Vec<f64>>,
}

/// Everything the demo needs, built once from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: PersonalizeConfig,
    user_emissions: Vec<DiscretePmf>,
    baseline: DirichletCategoricalModel,
    backward: ConfusionMatrix,
    speed_models: Vec<SpeedModel>,
}

impl Scenario {
    pub fn new(config: PersonalizeConfig) -> Result<Self> {
        let k = config.user_emission_centers.len();
        for (name, len) in [
            ("emission_widths", config.emission_widths.len()),
            ("population_emission_centers", config.population_emission_centers.len()),
            ("speed_models", config.speed_models.len()),
        ] {
            if len != k {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {len} entries, expected {k}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&config.baseline_uniform_mix) {
            return Err(Error::InvalidArgument(
                "baseline_uniform_mix must lie in [0, 1]".into(),
            ));
        }
        if config.eval_samples_per_class == 0 {
            return Err(Error::InvalidArgument(
                "eval_samples_per_class must be positive".into(),
            ));
        }
        let s = config.alphabet_size;
        let user_emissions = config
            .user_emission_centers
            .iter()
            .zip(&config.emission_widths)
            .map(|(&c, &w)| discretized_bump(s, c, w))
            .collect::<Result<Vec<_>>>()?;
        let mix = config.baseline_uniform_mix;
        let baseline_emissions = config
            .population_emission_centers
            .iter()
            .zip(&config.emission_widths)
            .map(|(&c, &w)| {
                let bump = discretized_bump(s, c, w)?;
                DiscretePmf::from_weights(
                    &bump
                        .masses()
                        .iter()
                        .map(|m| (1.0 - mix) * m + mix / s as f64)
                        .collect::<Vec<_>>(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let prior = DiscretePmf::uniform(k);
        let baseline =
            DirichletCategoricalModel::from_emissions(&baseline_emissions, config.baseline_strength, prior.clone())?;
        let forward = ConfusionMatrix::from_rows(&config.annotator_confusion, Orientation::Forward)?;
        if forward.num_classes() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: forward.num_classes(),
            });
        }
        let backward = ConfusionMatrix::backward_from_forward(&forward, &prior)?;
        let speed_models = config
            .speed_models
            .iter()
            .map(|b| SpeedModel::new(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            user_emissions,
            baseline,
            backward,
            speed_models,
        })
    }

    pub fn config(&self) -> &PersonalizeConfig {
        &self.config
    }

    pub fn baseline(&self) -> &DirichletCategoricalModel {
        &self.baseline
    }

    pub fn backward(&self) -> &ConfusionMatrix {
        &self.backward
    }

    pub fn user_emissions(&self) -> &[DiscretePmf] {
        &self.user_emissions
    }

    pub fn speed_models(&self) -> &[SpeedModel] {
        &self.speed_models
    }

    fn plan(&self, per_class: usize) -> Vec<Segment> {
        (0..self.user_emissions.len())
            .map(|class| Segment {
                class,
                count: per_class,
            })
            .collect()
    }

    /// Runs the baseline / ground-truth / weak-corrected comparison for `seed`.
    pub fn run(&self, seed: u64) -> Result<PersonalizeReport> {
        let collection = gen_user_trace(
            &self.user_emissions,
            &self.speed_models,
            &self.plan(self.config.personalization_samples_per_class),
            mix_seed(seed, &[1]),
        )?;
        let eval: Vec<(usize, usize)> = gen_user_trace(
            &self.user_emissions,
            &self.speed_models,
            &self.plan(self.config.eval_samples_per_class),
            mix_seed(seed, &[2]),
        )?
        .iter()
        .map(|s| (s.x, s.true_label))
        .collect();

        let clean: Vec<(usize, usize)> = collection.iter().map(|s| (s.x, s.true_label)).collect();
        let weak: Vec<(usize, usize)> = collection
            .iter()
            .filter_map(|s| match s.annotation() {
                Annotation::Label(j) => Some((s.x, j)),
                Annotation::NoReading => None,
            })
            .collect();

        let ground_truth = update_ground_truth(&self.baseline, &clean)?;
        let weak_corrected = update_weak_corrected(&self.baseline, &weak, &self.backward, self.config.projection)?;

        Ok(PersonalizeReport {
            ber_baseline: empirical_ber(&self.baseline, &eval)?,
            ber_ground_truth: empirical_ber(&ground_truth, &eval)?,
            ber_weak_corrected: empirical_ber(&weak_corrected, &eval)?,
            annotator_confusion_empirical: empirical_annotator_confusion(
                &self.speed_models,
                self.config.confusion_samples_per_class,
                mix_seed(seed, &[3]),
            ),
        })
    }

    /// One report per seed, in seed order.
    pub fn run_many(&self, seeds: &[u64], exec: Execution) -> Result<Vec<PersonalizeReport>> {
        exec.map_indexed(seeds.len(), |i| self.run(seeds[i]))
    }
}

/// Runs the demo with the config's own seed.
pub fn run_demo(config: &PersonalizeConfig) -> Result<PersonalizeReport> {
    Scenario::new(config.clone())?.run(config.seed)
}
