//! Sample-weight mathematics for multi-class adaptive boosting.
//!
//! Everything here is generic over the floating-point scalar. The error
//! rate, the SAMME coefficient `alpha = ln((1 - eps) / eps) + ln(c - 1)` and
//! the exponential re-weighting all use natural logarithms.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to the error rate before computing `alpha`.
pub const EPSILON_FLOOR: f64 = 1e-6;
/// Upper clamp applied to the error rate before computing `alpha`.
pub const EPSILON_CEIL: f64 = 1.0 - 1e-6;

/// Scalar bound used throughout the weight math.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + std::fmt::Debug + Send + Sync {}

impl<T> Scalar for T where T: Float + FromPrimitive + ToPrimitive + std::fmt::Debug + Send + Sync {}

fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("scalar must represent f64 literals")
}

/// Tolerance on `sum(weights) == 1`: 1e-9, or coarser for narrow scalars.
pub fn sum_tolerance<T: Scalar>() -> T {
    lit::<T>(1e-9).max(T::epsilon() * lit(1000.0))
}

/// Nonnegative per-sample weights that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize + Clone",
    deserialize = "T: Deserialize<'de> + Scalar"
))]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
pub struct WeightDistribution<T> {
    weights: Vec<T>,
}

impl<T: Scalar> WeightDistribution<T> {
    /// Every weight `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "cannot build a weight distribution over zero samples".into(),
            ));
        }
        let w = T::one() / lit(n as f64);
        Ok(Self {
            weights: vec![w; n],
        })
    }

    /// Accepts weights that already sum to one (within tolerance).
    pub fn new(weights: Vec<T>) -> Result<Self> {
        validate(&weights)?;
        let total = weights.iter().fold(T::zero(), |a, &b| a + b);
        if (total - T::one()).abs() > sum_tolerance::<T>() {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total:?}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales arbitrary nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<T>) -> Result<Self> {
        validate(&weights)?;
        let total = weights.iter().fold(T::zero(), |a, &b| a + b);
        if total <= T::zero() {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn max_weight(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Shannon entropy in nats; `ln n` for the uniform distribution.
    pub fn entropy(&self) -> T {
        self.weights
            .iter()
            .filter(|w| **w > T::zero())
            .fold(T::zero(), |acc, &w| acc - w * w.ln())
    }

    pub fn into_vec(self) -> Vec<T> {
        self.weights
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for WeightDistribution<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T> From<WeightDistribution<T>> for Vec<T> {
    fn from(d: WeightDistribution<T>) -> Self {
        d.weights
    }
}

fn validate<T: Scalar>(weights: &[T]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("empty weight vector".into()));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < T::zero())
    {
        return Err(Error::InvalidWeights(format!("weight {i} is {w:?}")));
    }
    Ok(())
}

/// Statistics of one boosting round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStatistics<T> {
    pub epsilon: T,
    pub alpha: T,
    pub z: T,
}

/// Sum of the weights of misclassified samples.
pub fn weighted_error<T: Scalar>(correct: &[bool], weights: &WeightDistribution<T>) -> Result<T> {
    if correct.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            actual: correct.len(),
        });
    }
    Ok(correct
        .iter()
        .zip(weights.as_slice())
        .filter(|(ok, _)| !**ok)
        .fold(T::zero(), |acc, (_, &w)| acc + w))
}

/// Clamp an error rate into `[EPSILON_FLOOR, EPSILON_CEIL]`.
pub fn clamp_epsilon<T: Scalar>(epsilon: T) -> T {
    epsilon.max(lit(EPSILON_FLOOR)).min(lit(EPSILON_CEIL))
}

/// The error rate a `c`-class random guesser achieves, `(c - 1) / c`.
pub fn random_guess_error<T: Scalar>(c: usize) -> T {
    lit::<T>((c as f64 - 1.0) / c as f64)
}

/// SAMME coefficient `ln((1 - eps) / eps) + ln(c - 1)`, after clamping `eps`.
/// Positive exactly when `eps < (c - 1) / c`.
pub fn alpha<T: Scalar>(epsilon: T, c: usize) -> Result<T> {
    if c < 2 {
        return Err(Error::TooFewClasses { found: c });
    }
    if epsilon.is_nan() {
        return Err(Error::InvalidArgument("error rate is NaN".into()));
    }
    let eps = clamp_epsilon(epsilon);
    Ok(((T::one() - eps) / eps).ln() + lit::<T>(c as f64 - 1.0).ln())
}

/// Multiply misclassified weights by `e^alpha`, correct ones by `e^-alpha`,
/// and renormalize. Returns the new distribution and the normalizer `Z`.
pub fn update_weights<T: Scalar>(
    weights: &WeightDistribution<T>,
    correct: &[bool],
    alpha: T,
) -> Result<(WeightDistribution<T>, T)> {
    if correct.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            actual: correct.len(),
        });
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "alpha must be finite, got {alpha:?}"
        )));
    }
    let up = alpha.exp();
    let down = (-alpha).exp();
    let unnormalized: Vec<T> = weights
        .as_slice()
        .iter()
        .zip(correct)
        .map(|(&w, &ok)| if ok { w * down } else { w * up })
        .collect();
    let z = unnormalized.iter().fold(T::zero(), |a, &b| a + b);
    assert!(
        z > T::zero() && z.is_finite(),
        "weight update produced normalizer {z:?}"
    );
    let next = unnormalized.into_iter().map(|w| w / z).collect();
    Ok((WeightDistribution { weights: next }, z))
}

/// How weights are turned into integer sample counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountPolicy {
    /// Expected total size of the materialized corpus, as a multiple of `n`.
    pub replication: f64,
    /// Maximum copies of one sample, as a multiple of `replication`.
    pub cap_factor: f64,
}

impl Default for CountPolicy {
    fn default() -> Self {
        Self {
            replication: 1.0,
            cap_factor: 10.0,
        }
    }
}

impl CountPolicy {
    pub fn max_count(&self) -> usize {
        (self.cap_factor * self.replication).ceil().max(1.0) as usize
    }
}

/// Realize a weight distribution as per-sample copy counts.
///
/// The target for sample `i` is `w_i * n * replication`; the fractional part
/// is resolved by seeded stochastic rounding. Samples with positive weight
/// always keep at least one copy, and no sample exceeds the policy cap.
pub fn weights_to_counts<T: Scalar>(
    weights: &WeightDistribution<T>,
    policy: &CountPolicy,
    seed: u64,
) -> Result<Vec<usize>> {
    if policy.replication.is_nan() || policy.replication < 1.0 || !policy.replication.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "replication must be >= 1, got {}",
            policy.replication
        )));
    }
    if policy.cap_factor.is_nan() || policy.cap_factor < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "count cap factor must be >= 1, got {}",
            policy.cap_factor
        )));
    }
    let n = weights.len() as f64;
    let cap = policy.max_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(weights
        .as_slice()
        .iter()
        .map(|w| {
            let w = w.to_f64().unwrap_or(0.0);
            let target = w * n * policy.replication;
            let base = target.floor();
            let frac = target - base;
            let draw: f64 = rng.gen();
            let mut count = base as usize + usize::from(draw < frac);
            if w > 0.0 {
                count = count.max(1);
            }
            count.min(cap)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_values() {
        let w = WeightDistribution::<f64>::uniform(4).unwrap();
        assert_eq!(w.as_slice(), &[0.25; 4]);
        let one = WeightDistribution::<f64>::uniform(1).unwrap();
        assert_eq!(one.as_slice(), &[1.0]);
        let third = WeightDistribution::<f64>::uniform(3).unwrap();
        assert_eq!(third.sum(), 1.0);
        assert!(WeightDistribution::<f64>::uniform(0).is_err());
    }

    #[test]
    fn uniform_f32() {
        let w = WeightDistribution::<f32>::uniform(7).unwrap();
        assert!((w.sum() - 1.0).abs() <= sum_tolerance::<f32>());
    }

    #[test]
    fn weighted_error_examples() {
        let w = WeightDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(weighted_error(&[true, false, true], &w).unwrap(), 0.3);
        assert_eq!(weighted_error(&[true, true, true], &w).unwrap(), 0.0);
        let u = WeightDistribution::<f64>::uniform(8).unwrap();
        let mask = [false, true, false, true, true, true, false, true];
        assert_abs_diff_eq!(
            weighted_error(&mask, &u).unwrap(),
            3.0 / 8.0,
            epsilon = 1e-15
        );
        assert!(weighted_error(&[true], &w).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(0.5_f64, 2).unwrap(), 0.0);
        assert_abs_diff_eq!(alpha(0.3_f64, 4).unwrap(), 7f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(alpha(0.75_f64, 4).unwrap(), 0.0, epsilon = 1e-15);
        assert!(alpha(0.3_f64, 1).is_err());
        // Clamped at both ends.
        let top = alpha(0.0_f64, 2).unwrap();
        assert_abs_diff_eq!(top, ((1.0 - 1e-6) / 1e-6_f64).ln(), epsilon = 1e-9);
        assert!(alpha(1.0_f64, 2).unwrap() < 0.0);
    }

    #[test]
    fn three_sample_update() {
        let w = WeightDistribution::<f64>::uniform(3).unwrap();
        let mask = [false, true, true];
        let eps = weighted_error(&mask, &w).unwrap();
        let a = alpha(eps, 2).unwrap();
        assert_abs_diff_eq!(a, 2f64.ln(), epsilon = 1e-15);
        let (next, z) = update_weights(&w, &mask, a).unwrap();
        assert_abs_diff_eq!(z, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next.as_slice()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next.as_slice()[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next.as_slice()[2], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn ten_sample_four_class_update() {
        let w = WeightDistribution::<f64>::uniform(10).unwrap();
        let mut mask = [true; 10];
        mask[..3].fill(false);
        let eps = weighted_error(&mask, &w).unwrap();
        let a = alpha(eps, 4).unwrap();
        let (next, z) = update_weights(&w, &mask, a).unwrap();
        assert_abs_diff_eq!(z, 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(next.as_slice()[0], 0.7 / 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(next.as_slice()[9], 0.1 / 7.0 / 2.2, epsilon = 1e-12);
    }

    #[test]
    fn zero_alpha_is_identity() {
        let w = WeightDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let (next, z) = update_weights(&w, &[true, false, true], 0.0).unwrap();
        assert_eq!(z, 1.0);
        assert_eq!(next, w);
    }

    #[test]
    fn non_finite_alpha_rejected() {
        let w = WeightDistribution::<f64>::uniform(2).unwrap();
        assert!(update_weights(&w, &[true, false], f64::INFINITY).is_err());
    }

    #[test]
    fn counts_uniform_identity() {
        let w = WeightDistribution::<f64>::uniform(9).unwrap();
        let counts = weights_to_counts(&w, &CountPolicy::default(), 3).unwrap();
        assert_eq!(counts, vec![1; 9]);
    }

    #[test]
    fn counts_with_replication_two() {
        let w = WeightDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let policy = CountPolicy {
            replication: 2.0,
            cap_factor: 10.0,
        };
        let counts = weights_to_counts(&w, &policy, 11).unwrap();
        assert_eq!(counts[0], 3);
        for &c in &counts[1..] {
            assert!(c == 1 || c == 2);
        }
        // Fixed seed pins the stochastic remainders.
        assert_eq!(counts, weights_to_counts(&w, &policy, 11).unwrap());
    }

    #[test]
    fn counts_floor_keeps_every_sample() {
        let w = WeightDistribution::new(vec![0.97, 0.01, 0.01, 0.01]).unwrap();
        let counts = weights_to_counts(&w, &CountPolicy::default(), 0).unwrap();
        assert_eq!(counts, vec![4, 1, 1, 1]);
    }

    #[test]
    fn counts_are_capped() {
        let mut raw = vec![0.0; 100];
        raw[0] = 0.9;
        for r in raw.iter_mut().skip(1) {
            *r = 0.1 / 99.0;
        }
        let w = WeightDistribution::new(raw).unwrap();
        let counts = weights_to_counts(&w, &CountPolicy::default(), 5).unwrap();
        assert_eq!(counts[0], 10);
        assert!(counts[1..].iter().all(|&c| c == 1));
    }

    #[test]
    fn counts_reject_low_replication() {
        let w = WeightDistribution::<f64>::uniform(3).unwrap();
        let policy = CountPolicy {
            replication: 0.5,
            cap_factor: 10.0,
        };
        assert!(weights_to_counts(&w, &policy, 0).is_err());
    }

    #[test]
    fn entropy_of_uniform() {
        let w = WeightDistribution::<f64>::uniform(16).unwrap();
        assert_abs_diff_eq!(w.entropy(), 16f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn serde_validates() {
        let json = "[0.5, 0.6]";
        assert!(serde_json::from_str::<WeightDistribution<f64>>(json).is_err());
        let ok: WeightDistribution<f64> = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(ok.len(), 2);
    }
}
