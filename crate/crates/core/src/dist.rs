//! Finite discrete distributions over labeled supports.

use std::collections::HashSet;

use num::{One, Signed, Zero};

use crate::numeric::{compensated_sum, NumericMode, Scalar};
use crate::{Error, Result};

/// A validated probability vector over distinct labels.
///
/// Construction never normalizes silently: a vector that does not sum to 1
/// (exactly in `Exact` mode, within 1e-12 in `Float` mode) is rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<M: NumericMode> {
    labels: Vec<String>,
    probs: Vec<M::Value>,
    mode: M,
}

/// Checks nonnegativity and normalization of a probability vector.
pub(crate) fn validate_probs<M: NumericMode>(mode: &M, probs: &[M::Value]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::ZeroSize);
    }
    for (index, p) in probs.iter().enumerate() {
        if p < &M::Value::zero() {
            return Err(Error::NegativeProbability {
                index,
                value: p.to_string(),
            });
        }
    }
    let sum = stable_sum(mode, probs);
    if !mode.sum_is_one(&sum) {
        let deviation = sum - M::Value::one();
        return Err(Error::NotNormalized {
            deviation: deviation.to_string(),
        });
    }
    Ok(())
}

pub(crate) fn stable_sum<M: NumericMode>(mode: &M, values: &[M::Value]) -> M::Value {
    if mode.is_exact() {
        values
            .iter()
            .fold(M::Value::zero(), |acc, v| acc + v.clone())
    } else {
        M::Value::from_f64(compensated_sum(values.iter().map(|v| v.to_f64())))
    }
}

impl<M: NumericMode> DiscreteDistribution<M> {
    /// Builds and validates a distribution (the spec's `make_distribution`).
    pub fn new(labels: Vec<String>, probs: Vec<M::Value>, mode: M) -> Result<Self> {
        if labels.is_empty() || probs.is_empty() {
            return Err(Error::ZeroSize);
        }
        if labels.len() != probs.len() {
            return Err(Error::LengthMismatch {
                labels: labels.len(),
                probs: probs.len(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        validate_probs(&mode, &probs)?;
        Ok(DiscreteDistribution { labels, probs, mode })
    }

    /// Builds from probabilities alone, labeling the support "1".."k".
    pub fn from_probs(probs: Vec<M::Value>, mode: M) -> Result<Self> {
        let labels = (1..=probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs, mode)
    }

    /// The uniform distribution over `[m]`.
    pub fn uniform(m: usize, mode: M) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroSize);
        }
        let p = M::Value::from_ratio(1, m as u64);
        Self::from_probs(vec![p; m], mode)
    }

    /// Zipf over `[m]`: rank r gets mass r^{-s} / sum_i i^{-s}.
    ///
    /// The normalizer is a direct sum of the rank weights. Weights are
    /// evaluated in double precision and embedded exactly, so `Exact` mode
    /// yields a genuinely normalized rational vector. Exponents outside
    /// (0, 1) are accepted; callers that care warn about them.
    pub fn zipf(m: usize, s: f64, mode: M) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroSize);
        }
        if !(s > 0.0) {
            return Err(Error::NonpositiveExponent(s));
        }
        let weights: Vec<M::Value> = (1..=m)
            .map(|r| M::Value::from_f64((r as f64).powf(-s)))
            .collect();
        let total = stable_sum(&mode, &weights);
        let probs = weights.into_iter().map(|w| w / total.clone()).collect();
        Self::from_probs(probs, mode)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[M::Value] {
        &self.probs
    }

    pub fn mode(&self) -> &M {
        &self.mode
    }

    pub fn prob_of(&self, label: &str) -> Option<&M::Value> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.probs[i])
    }

    /// Probability vector as doubles (sampling tables, reports).
    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64()).collect()
    }
}

/// Aligns two distributions over the union of their supports; labels absent
/// from one side carry probability zero. Order: P's labels first, then Q's
/// remaining labels in their own order.
pub fn union_aligned<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
) -> Vec<(String, M::Value, M::Value)> {
    let mut rows: Vec<(String, M::Value, M::Value)> = Vec::with_capacity(p.len() + q.len());
    let mut q_index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (i, label) in q.labels.iter().enumerate() {
        q_index.insert(label.as_str(), i);
    }
    let mut p_labels: HashSet<&str> = HashSet::with_capacity(p.len());
    for (i, label) in p.labels.iter().enumerate() {
        p_labels.insert(label.as_str());
        let q_val = q_index
            .get(label.as_str())
            .map(|&j| q.probs[j].clone())
            .unwrap_or_else(M::Value::zero);
        rows.push((label.clone(), p.probs[i].clone(), q_val));
    }
    for (j, label) in q.labels.iter().enumerate() {
        if !p_labels.contains(label.as_str()) {
            rows.push((label.clone(), M::Value::zero(), q.probs[j].clone()));
        }
    }
    rows
}

/// Total variation distance: half the L1 distance over the union support.
pub fn total_variation<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
) -> M::Value {
    let two = M::Value::from_u64(2);
    let sum = union_aligned(p, q)
        .into_iter()
        .fold(M::Value::zero(), |acc, (_, pv, qv)| acc + (pv - qv).abs());
    sum / two
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Exact, Float, Scalar};
    use num::rational::BigRational;

    fn r(num: i64, den: u64) -> BigRational {
        BigRational::from_ratio(num, den)
    }

    #[test]
    fn accepts_valid_distribution() {
        let d = DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![r(1, 2), r(1, 2)],
            Exact,
        )
        .unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn rejects_unnormalized() {
        let err = DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![0.6, 0.5],
            Float::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn accepts_point_mass() {
        let d = DiscreteDistribution::new(vec!["a".into()], vec![r(1, 1)], Exact).unwrap();
        assert_eq!(d.probs()[0], r(1, 1));
    }

    #[test]
    fn rejects_negative_and_duplicates_and_mismatch() {
        let err =
            DiscreteDistribution::new(vec!["a".into(), "b".into()], vec![r(3, 2), r(-1, 2)], Exact)
                .unwrap_err();
        assert!(matches!(err, Error::NegativeProbability { index: 1, .. }));
        let err = DiscreteDistribution::new(
            vec!["a".into(), "a".into()],
            vec![r(1, 2), r(1, 2)],
            Exact,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));
        let err = DiscreteDistribution::new(vec!["a".into()], vec![r(1, 2), r(1, 2)], Exact)
            .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn uniform_basics() {
        let d = DiscreteDistribution::<Exact>::uniform(4, Exact).unwrap();
        assert!(d.probs().iter().all(|p| *p == r(1, 4)));
        let one = DiscreteDistribution::<Exact>::uniform(1, Exact).unwrap();
        assert_eq!(one.probs()[0], r(1, 1));
        assert!(matches!(
            DiscreteDistribution::<Exact>::uniform(0, Exact),
            Err(Error::ZeroSize)
        ));
    }

    #[test]
    fn zipf_hand_computed() {
        // m=2, s=1: weights 1, 1/2 -> (2/3, 1/3)
        let d = DiscreteDistribution::<Exact>::zipf(2, 1.0, Exact).unwrap();
        assert_eq!(d.probs()[0], r(2, 3));
        assert_eq!(d.probs()[1], r(1, 3));
    }

    #[test]
    fn zipf_small_exponent_is_near_uniform() {
        let d = DiscreteDistribution::<Float>::zipf(5, 1e-9, Float::default()).unwrap();
        for p in d.probs() {
            assert!((p - 0.2).abs() < 1e-8);
        }
        assert!(matches!(
            DiscreteDistribution::<Float>::zipf(5, 0.0, Float::default()),
            Err(Error::NonpositiveExponent(_))
        ));
    }

    #[test]
    fn zipf_large_support_normalizes() {
        let d = DiscreteDistribution::<Float>::zipf(10_000, 0.7, Float::default()).unwrap();
        let sum = compensated_sum(d.probs().iter().copied());
        assert!((sum - 1.0).abs() <= 1e-12);
        // decreasing in rank
        for w in d.probs().windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn tv_disjoint_identical_and_direct() {
        let p = DiscreteDistribution::new(vec!["a".into(), "b".into()], vec![r(1, 1), r(0, 1)], Exact)
            .unwrap();
        let q = DiscreteDistribution::new(vec!["a".into(), "b".into()], vec![r(0, 1), r(1, 1)], Exact)
            .unwrap();
        assert_eq!(total_variation(&p, &q), r(1, 1));
        let u = DiscreteDistribution::<Exact>::uniform(3, Exact).unwrap();
        assert_eq!(total_variation(&u, &u), r(0, 1));
        let p = DiscreteDistribution::from_probs(vec![r(1, 2), r(1, 2)], Exact).unwrap();
        let q = DiscreteDistribution::from_probs(vec![r(1, 4), r(3, 4)], Exact).unwrap();
        assert_eq!(total_variation(&p, &q), r(1, 4));
    }

    #[test]
    fn tv_aligns_disjoint_label_sets() {
        let p = DiscreteDistribution::new(vec!["x".into()], vec![r(1, 1)], Exact).unwrap();
        let q = DiscreteDistribution::new(vec!["y".into()], vec![r(1, 1)], Exact).unwrap();
        assert_eq!(total_variation(&p, &q), r(1, 1));
    }
}
