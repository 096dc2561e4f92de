//! Noise-corrected learning from weakly annotated data.
//!
//! Labels produced by an auxiliary, imperfect inference process (a "weak"
//! annotator) are related to the true labels through a confusion matrix.
//! Inverting that matrix recovers class-conditional densities, posteriors and
//! unbiased losses from weakly labelled evidence:
//!
//! * [`confusion`]: validated backward/forward confusion matrices, inversion
//!   and eigen-ratio conditioning diagnostics.
//! * [`density`]: finite-alphabet density estimation, the confusion-inverse
//!   correction, simplex projection and KL metrics.
//! * [`loss`]: unbiased loss correction (binary closed form and multiclass).
//! * [`experiment`]: seeded Monte-Carlo convergence sweeps with CSV output.
//! * [`personalize`]: Dirichlet–categorical model personalization from a
//!   GPS-speed threshold annotator.
//!
//! Trials run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration otherwise; results are identical.

pub mod confusion;
pub mod density;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod io;
pub mod loss;
pub mod personalize;

pub use confusion::{ConfusionDiagnostics, ConfusionMatrix, Orientation};
pub use density::{DiscretePmf, Projection, SignedMeasure, WeakDataset, WeakSample};
pub use error::{Error, Result};
pub use exec::Execution;
pub use experiment::{CellSummary, Experiment, SyntheticConfig, TrialResult};
pub use loss::LossVector;
pub use personalize::{DirichletCategoricalModel, PersonalizeConfig, PersonalizeReport, Scenario};
