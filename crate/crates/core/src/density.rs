//! Finite-support densities and the confusion-inverse correction.
//!
//! Densities over a finite alphabet are plain mass vectors. Correcting the
//! per-weak-label conditionals `q(x | ỹ = j)` with the inverse backward matrix
//! gives per-class [`SignedMeasure`]s that sum to one but may dip below zero;
//! [`project_to_pmf`] maps them back onto the simplex.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionMatrix, Orientation};
use crate::error::{Error, Result};

/// Sum tolerance for [`DiscretePmf`] and [`SignedMeasure`].
pub const MASS_TOL: f64 = 1e-9;

/// Floor applied to the estimate inside the KL logarithm.
pub const KL_FLOOR: f64 = 1e-12;

/// Divergences above this many nats are dominated by [`KL_FLOOR`] terms.
pub const FLOOR_DOMINATED_NATS: f64 = 25.0;

const PROJECTION_INPUT_TOL: f64 = 1e-6;

/// Probability mass function over `0..len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePmf {
    masses: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if let Some((i, v)) = masses
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidPmf(format!("mass {v} at index {i}")));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("masses sum to {sum:.12}")));
        }
        Ok(Self { masses })
    }

    pub fn uniform(support_size: usize) -> Self {
        assert!(support_size > 0, "uniform pmf needs a nonempty support");
        Self {
            masses: vec![1.0 / support_size as f64; support_size],
        }
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some((i, v)) = weights
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidPmf(format!("weight {v} at index {i}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights have zero total".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.masses
    }
}

/// Output of the confusion-inverse correction: sums to one, may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedMeasure {
    values: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPmf("non-finite value".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("values sum to {sum:.12}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total mass sitting on negative coordinates.
    pub fn negative_mass(&self) -> f64 {
        self.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum()
    }
}

impl From<DiscretePmf> for SignedMeasure {
    fn from(pmf: DiscretePmf) -> Self {
        Self { values: pmf.masses }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeakSample {
    pub x: usize,
    pub weak_label: usize,
}

/// Training evidence `{(x_n, ỹ_n)}`: feature symbols paired with weak labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeakDataset {
    samples: Vec<WeakSample>,
    support_size: usize,
    num_classes: usize,
}

impl WeakDataset {
    pub fn new(samples: Vec<WeakSample>, support_size: usize, num_classes: usize) -> Result<Self> {
        if support_size == 0 || num_classes == 0 {
            return Err(Error::InvalidArgument(
                "support size and class count must be positive".into(),
            ));
        }
        if let Some(s) = samples
            .iter()
            .find(|s| s.x >= support_size || s.weak_label >= num_classes)
        {
            return Err(Error::InvalidArgument(format!(
                "sample (x={}, label={}) out of range for support {support_size} and {num_classes} classes",
                s.x, s.weak_label
            )));
        }
        Ok(Self {
            samples,
            support_size,
            num_classes,
        })
    }

    pub fn samples(&self) -> &[WeakSample] {
        &self.samples
    }

    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `counts[label][x]`.
    pub fn counts(&self) -> Vec<Vec<u64>> {
        let mut counts = vec![vec![0u64; self.support_size]; self.num_classes];
        for s in &self.samples {
            counts[s.weak_label][s.x] += 1;
        }
        counts
    }

    pub fn label_counts(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.num_classes];
        for s in &self.samples {
            out[s.weak_label] += 1;
        }
        out
    }
}

/// Additive-smoothing estimate of `q(x | ỹ = j)` for every weak label:
/// `(count(x, j) + smoothing) / (n_j + S·smoothing)`.
pub fn empirical_conditionals(data: &WeakDataset, smoothing: f64) -> Result<Vec<DiscretePmf>> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothing must be finite and >= 0, got {smoothing}"
        )));
    }
    let s = data.support_size() as f64;
    data.counts()
        .into_iter()
        .enumerate()
        .map(|(label, row)| {
            let n: u64 = row.iter().sum();
            if n == 0 && smoothing == 0.0 {
                return Err(Error::EmptyWeakClass { label });
            }
            let denom = n as f64 + s * smoothing;
            DiscretePmf::new(row.iter().map(|&c| (c as f64 + smoothing) / denom).collect())
        })
        .collect()
}

fn check_family<'a, I>(family: I, classes: usize, support: usize) -> Result<()>
where
    I: ExactSizeIterator<Item = usize> + 'a,
{
    if family.len() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            found: family.len(),
        });
    }
    for len in family {
        if len != support {
            return Err(Error::DimensionMismatch {
                expected: support,
                found: len,
            });
        }
    }
    Ok(())
}

/// Noise-corrected class conditionals:
/// `q(x | y = i) = Σ_j q(x | ỹ = j) · Π⁻¹(j, i)`.
pub fn correct_densities(
    weak_pmfs: &[DiscretePmf],
    backward: &ConfusionMatrix,
) -> Result<Vec<SignedMeasure>> {
    backward.expect_orientation(Orientation::Backward)?;
    let k = backward.num_classes();
    let support = weak_pmfs.first().map_or(0, DiscretePmf::len);
    check_family(weak_pmfs.iter().map(DiscretePmf::len), k, support)?;
    let inv = backward.inverse()?;
    (0..k)
        .map(|class| {
            let mut values = vec![0.0; support];
            for (weak, pmf) in weak_pmfs.iter().enumerate() {
                let coef = inv[(weak, class)];
                if coef == 0.0 {
                    continue;
                }
                for (v, m) in values.iter_mut().zip(pmf.masses()) {
                    *v += coef * m;
                }
            }
            SignedMeasure::new(values)
        })
        .collect()
}

/// Mixes per-class densities through a backward matrix:
/// `q(x | ỹ = j) = Σ_i q(x | y = i) · Π(i, j)`. Inverse of [`correct_densities`].
pub fn mix_densities(class_densities: &[Vec<f64>], backward: &ConfusionMatrix) -> Result<Vec<Vec<f64>>> {
    backward.expect_orientation(Orientation::Backward)?;
    let k = backward.num_classes();
    let support = class_densities.first().map_or(0, Vec::len);
    check_family(class_densities.iter().map(Vec::len), k, support)?;
    Ok((0..k)
        .map(|weak| {
            (0..support)
                .map(|a| {
                    class_densities
                        .iter()
                        .enumerate()
                        .map(|(class, d)| d[a] * backward.get(class, weak))
                        .sum()
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Projection {
    /// Zero out negative coordinates, then renormalize.
    #[default]
    #[serde(rename = "clip")]
    ClipRenormalize,
    /// Euclidean (L2) projection onto the probability simplex.
    #[serde(rename = "simplex")]
    EuclideanSimplex,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::ClipRenormalize => f.write_str("clip"),
            Projection::EuclideanSimplex => f.write_str("simplex"),
        }
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clip" => Ok(Projection::ClipRenormalize),
            "simplex" => Ok(Projection::EuclideanSimplex),
            other => Err(Error::InvalidArgument(format!(
                "unknown projection '{other}' (expected clip or simplex)"
            ))),
        }
    }
}

pub fn project_to_pmf(sm: &SignedMeasure, method: Projection) -> Result<DiscretePmf> {
    let values = sm.values();
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > PROJECTION_INPUT_TOL {
        return Err(Error::InvalidPmf(format!(
            "projection input sums to {sum:.12}"
        )));
    }
    let masses = match method {
        Projection::ClipRenormalize => {
            let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            if total <= 0.0 {
                return Err(Error::AllNonPositive { total });
            }
            clipped.into_iter().map(|v| v / total).collect()
        }
        Projection::EuclideanSimplex => project_simplex(values),
    };
    DiscretePmf::new(masses)
}

/// Sort-and-threshold projection onto `{p : p ≥ 0, Σp = 1}`.
fn project_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (idx, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (idx + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    values.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Corrects a weak-label posterior `p(ỹ | x)` into `p(y | x)` via the inverse
/// of the row-stochastic forward matrix (row-vector times `R⁻¹`).
pub fn correct_posterior(
    weak_posterior: &DiscretePmf,
    forward: &ConfusionMatrix,
) -> Result<SignedMeasure> {
    forward.expect_orientation(Orientation::Forward)?;
    let k = forward.num_classes();
    if weak_posterior.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: weak_posterior.len(),
        });
    }
    let inv = forward.inverse()?;
    let values = (0..k)
        .map(|i| {
            weak_posterior
                .masses()
                .iter()
                .enumerate()
                .map(|(j, p)| p * inv[(j, i)])
                .sum()
        })
        .collect();
    SignedMeasure::new(values)
}

/// `Σ_a p_a · ln(p_a / max(q_a, KL_FLOOR))`, skipping `p_a = 0`.
pub fn kl_divergence(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let kl: f64 = p
        .masses()
        .iter()
        .zip(q.masses())
        .filter(|(pa, _)| **pa > 0.0)
        .map(|(pa, qa)| pa * (pa / qa.max(KL_FLOOR)).ln())
        .sum();
    Ok(kl.max(0.0))
}

pub fn is_floor_dominated(divergence: f64) -> bool {
    divergence > FLOOR_DOMINATED_NATS
}

/// Sum of per-class divergences `Σ_i KL(truth_i ‖ estimate_i)`.
pub fn sum_kl(truth: &[DiscretePmf], estimates: &[DiscretePmf]) -> Result<f64> {
    if truth.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: estimates.len(),
        });
    }
    truth
        .iter()
        .zip(estimates)
        .map(|(p, q)| kl_divergence(p, q))
        .sum()
}

/// Binomial(trials, success) masses over `0..=trials`, evaluated in log space.
pub fn binomial_pmf(trials: u32, success: f64) -> Result<DiscretePmf> {
    if trials == 0 {
        return Err(Error::InvalidArgument("binomial needs at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&success) {
        return Err(Error::InvalidArgument(format!(
            "success probability {success} is outside [0, 1]"
        )));
    }
    let m = trials as usize;
    let mut masses = vec![0.0; m + 1];
    if success == 0.0 {
        masses[0] = 1.0;
    } else if success == 1.0 {
        masses[m] = 1.0;
    } else {
        let (lp, lq) = (success.ln(), (1.0 - success).ln());
        let mut log_choose = 0.0;
        for (a, mass) in masses.iter_mut().enumerate() {
            if a > 0 {
                log_choose += ((m - a + 1) as f64).ln() - (a as f64).ln();
            }
            *mass = (log_choose + a as f64 * lp + (m - a) as f64 * lq).exp();
        }
        let total: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|v| *v /= total);
    }
    DiscretePmf::new(masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn pmf(v: &[f64]) -> DiscretePmf {
        DiscretePmf::new(v.to_vec()).unwrap()
    }

    fn sm(v: &[f64]) -> SignedMeasure {
        SignedMeasure::new(v.to_vec()).unwrap()
    }

    fn dataset(pairs: &[(usize, usize)], s: usize, k: usize) -> WeakDataset {
        WeakDataset::new(
            pairs
                .iter()
                .map(|&(x, weak_label)| WeakSample { x, weak_label })
                .collect(),
            s,
            k,
        )
        .unwrap()
    }

    #[test]
    fn pmf_validation() {
        assert!(DiscretePmf::new(vec![]).is_err());
        assert!(DiscretePmf::new(vec![0.5, 0.6]).is_err());
        assert!(DiscretePmf::new(vec![1.2, -0.2]).is_err());
        assert!(SignedMeasure::new(vec![1.2, -0.2]).is_ok());
        assert!(SignedMeasure::new(vec![1.2, 0.2]).is_err());
    }

    #[test]
    fn empirical_counts() {
        let data = dataset(&[(0, 0), (0, 0), (0, 0), (1, 0), (1, 1)], 2, 2);
        let q = empirical_conditionals(&data, 0.0).unwrap();
        assert_eq!(q[0].masses(), &[0.75, 0.25]);
        assert_eq!(q[1].masses(), &[0.0, 1.0]);
    }

    #[test]
    fn empirical_empty_class() {
        let data = dataset(&[(0, 0)], 3, 2);
        let q = empirical_conditionals(&data, 0.5).unwrap();
        for m in q[1].masses() {
            assert_abs_diff_eq!(*m, 1.0 / 3.0, epsilon = 1e-15);
        }
        let err = empirical_conditionals(&data, 0.0).unwrap_err();
        assert!(matches!(err, Error::EmptyWeakClass { label: 1 }));
        assert!(empirical_conditionals(&data, -1.0).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_range() {
        let err = WeakDataset::new(vec![WeakSample { x: 3, weak_label: 0 }], 3, 2).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn correct_with_identity_and_permutation() {
        let weak = vec![pmf(&[0.2, 0.8]), pmf(&[0.6, 0.4]), pmf(&[1.0, 0.0])];
        let id = ConfusionMatrix::new(DMatrix::identity(3, 3), Orientation::Backward).unwrap();
        let out = correct_densities(&weak, &id).unwrap();
        for (o, w) in out.iter().zip(&weak) {
            assert_eq!(o.values(), w.masses());
        }

        let swap = ConfusionMatrix::from_rows(
            &[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0],
            ],
            Orientation::Backward,
        )
        .unwrap();
        let out = correct_densities(&weak, &swap).unwrap();
        assert_eq!(out[0].values(), weak[0].masses());
        assert_eq!(out[1].values(), weak[2].masses());
        assert_eq!(out[2].values(), weak[1].masses());
    }

    #[test]
    fn correct_rejects_forward_and_bad_shapes() {
        let fwd = ConfusionMatrix::new(DMatrix::identity(2, 2), Orientation::Forward).unwrap();
        let weak = vec![pmf(&[0.5, 0.5]), pmf(&[0.5, 0.5])];
        assert!(matches!(
            correct_densities(&weak, &fwd),
            Err(Error::OrientationMismatch { .. })
        ));
        let back = ConfusionMatrix::new(DMatrix::identity(2, 2), Orientation::Backward).unwrap();
        assert!(matches!(
            correct_densities(&weak[..1], &back),
            Err(Error::DimensionMismatch { .. })
        ));
        let ragged = vec![pmf(&[0.5, 0.5]), pmf(&[1.0])];
        assert!(matches!(
            correct_densities(&ragged, &back),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        for method in [Projection::ClipRenormalize, Projection::EuclideanSimplex] {
            let out = project_to_pmf(&sm(&[0.5, 0.5, 0.0]), method).unwrap();
            assert_eq!(out.masses(), &[0.5, 0.5, 0.0]);
        }
        let out = project_to_pmf(&sm(&[1.2, -0.2]), Projection::ClipRenormalize).unwrap();
        assert_eq!(out.masses(), &[1.0, 0.0]);

        let out = project_to_pmf(&sm(&[0.7, 0.5, -0.2]), Projection::EuclideanSimplex).unwrap();
        assert_abs_diff_eq!(out.masses()[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(out.masses()[1], 0.4, epsilon = 1e-12);
        assert_eq!(out.masses()[2], 0.0);
    }

    /// Brute force: for every nonempty support set, solve the equality-
    /// constrained problem, keep feasible candidates, return the closest.
    fn simplex_oracle(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let shift = (active.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / active.len() as f64;
            let mut cand = vec![0.0; n];
            let mut ok = true;
            for &i in &active {
                cand[i] = v[i] - shift;
                ok &= cand[i] >= -1e-15;
            }
            if !ok {
                continue;
            }
            let dist: f64 = cand.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, cand));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn simplex_matches_active_set_oracle() {
        let oracle = simplex_oracle(&[0.7, 0.5, -0.2]);
        assert_abs_diff_eq!(oracle[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 0.4, epsilon = 1e-12);
        for v in [
            vec![0.9, 0.4, -0.3],
            vec![1.5, -0.1, -0.2, -0.2],
            vec![0.3, 0.3, 0.3, 0.1],
            vec![2.0, -0.5, 0.25, -0.75],
        ] {
            let got = project_simplex(&v);
            for (a, b) in got.iter().zip(simplex_oracle(&v)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn clip_all_negative_fails() {
        // A signed measure summing to one always has positive mass, so feed
        // the private path a degenerate one directly.
        let degenerate = SignedMeasure {
            values: vec![-0.5, -0.5],
        };
        assert!(project_to_pmf(&degenerate, Projection::ClipRenormalize).is_err());
    }

    #[test]
    fn posterior_examples() {
        let gps = ConfusionMatrix::from_rows(
            &[
                vec![0.76, 0.24, 0.0],
                vec![0.28, 0.72, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            Orientation::Forward,
        )
        .unwrap();
        let out = correct_posterior(&pmf(&[0.76, 0.24, 0.0]), &gps).unwrap();
        for (a, b) in out.values().iter().zip([1.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }

        let id = ConfusionMatrix::new(DMatrix::identity(3, 3), Orientation::Forward).unwrap();
        let p = pmf(&[0.1, 0.3, 0.6]);
        assert_eq!(correct_posterior(&p, &id).unwrap().values(), p.masses());

        let doubly = ConfusionMatrix::from_rows(
            &[
                vec![0.7, 0.2, 0.1],
                vec![0.2, 0.7, 0.1],
                vec![0.1, 0.1, 0.8],
            ],
            Orientation::Forward,
        )
        .unwrap();
        let out = correct_posterior(&DiscretePmf::uniform(3), &doubly).unwrap();
        for v in out.values() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kl_examples() {
        let half = pmf(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kl_divergence(&pmf(&[1.0, 0.0]), &half).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let p = pmf(&[0.75, 0.25]);
        // Second route: log-difference form.
        let alt = 0.75 * (0.75f64.ln() - 0.5f64.ln()) + 0.25 * (0.25f64.ln() - 0.5f64.ln());
        let got = kl_divergence(&p, &half).unwrap();
        assert_abs_diff_eq!(got, alt, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.130_812, epsilon = 1e-6);
        assert!(kl_divergence(&p, &DiscretePmf::uniform(3)).is_err());
    }

    #[test]
    fn kl_floor_keeps_divergence_finite() {
        let got = kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])).unwrap();
        assert!(got.is_finite());
        assert!(is_floor_dominated(got) == (got > 25.0));
        assert_abs_diff_eq!(got, 0.5 * (0.5f64).ln() + 0.5 * (0.5 / KL_FLOOR).ln(), epsilon = 1e-12);
    }

    #[test]
    fn sum_kl_examples() {
        let truth = vec![pmf(&[0.75, 0.25]), pmf(&[0.1, 0.9]), pmf(&[0.3, 0.7])];
        assert_eq!(sum_kl(&truth, &truth).unwrap(), 0.0);
        let mut est = truth.clone();
        est[0] = pmf(&[0.5, 0.5]);
        assert_abs_diff_eq!(sum_kl(&truth, &est).unwrap(), 0.130_812, epsilon = 1e-6);
        assert!(sum_kl(&truth, &est[..2]).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_pmf(1, 0.5).unwrap().masses(), &[0.5, 0.5]);
        let b = binomial_pmf(2, 0.08).unwrap();
        for (a, want) in b.masses().iter().zip([0.8464, 0.1472, 0.0064]) {
            assert_abs_diff_eq!(*a, want, epsilon = 1e-14);
        }
        let point = binomial_pmf(20, 0.0).unwrap();
        assert_eq!(point.masses()[0], 1.0);
        assert!(point.masses()[1..].iter().all(|&v| v == 0.0));
        assert!(binomial_pmf(0, 0.5).is_err());
        assert!(binomial_pmf(5, 1.5).is_err());
    }

    #[test]
    fn binomial_matches_direct_product_form() {
        for p in [0.52, 0.65, 0.08] {
            let b = binomial_pmf(20, p).unwrap();
            let mut choose = 1.0f64;
            for a in 0..=20usize {
                if a > 0 {
                    choose = choose * (21 - a) as f64 / a as f64;
                }
                let direct = choose * p.powi(a as i32) * (1.0 - p).powi(20 - a as i32);
                assert_abs_diff_eq!(b.masses()[a], direct, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(b.masses().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
