//! Mixing a base agent's action with adapter adjustment logits.
//!
//! A deterministic base action becomes a one-hot vector scaled by `1/τ`; the
//! adapter's logits are added and a masked softmax gives the sampling
//! distribution `p_i ∝ exp(base_i/τ + adj_i)` over legal actions.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::env::ActionMask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixerError {
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("action {action} out of range for {n} actions")]
    ActionOutOfRange { action: usize, n: usize },
    #[error("logit arrays have lengths {base} and {adj}")]
    LengthMismatch { base: usize, adj: usize },
    #[error("every action is masked")]
    AllMasked,
    #[error("non-finite logit at index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixerConfig {
    pub temperature: f64,
    pub action_count: usize,
}

impl MixerConfig {
    pub fn new(temperature: f64, action_count: usize) -> Result<Self, MixerError> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(MixerError::Temperature(temperature));
        }
        if action_count == 0 {
            return Err(MixerError::ActionOutOfRange {
                action: 0,
                n: action_count,
            });
        }
        Ok(MixerConfig {
            temperature,
            action_count,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedDistribution {
    /// Already divided by the temperature.
    pub base_logits: Vec<f64>,
    pub adjustment_logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// `log p_i`; `-inf` on masked entries.
    pub log_probs: Vec<f64>,
}

impl MixedDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| -p * l)
            .sum()
    }
}

/// One-hot at `action` with value `1/τ`.
pub fn onehot_temperature_logits(
    action: usize,
    n: usize,
    tau: f64,
) -> Result<Vec<f64>, MixerError> {
    if !(tau > 0.0) {
        return Err(MixerError::Temperature(tau));
    }
    if action >= n {
        return Err(MixerError::ActionOutOfRange { action, n });
    }
    let mut v = vec![0.0; n];
    v[action] = 1.0 / tau;
    Ok(v)
}

/// Masked softmax of `base + adj`. Masked entries get probability exactly 0
/// and take no part in the normalization. `mask = None` allows everything.
pub fn combine_to_probabilities(
    base_logits: &[f64],
    adj_logits: &[f64],
    mask: Option<ActionMask>,
) -> Result<MixedDistribution, MixerError> {
    if base_logits.len() != adj_logits.len() {
        return Err(MixerError::LengthMismatch {
            base: base_logits.len(),
            adj: adj_logits.len(),
        });
    }
    let n = base_logits.len();
    let legal = |i: usize| mask.is_none_or(|m| m.is_legal(i));
    let mut z = vec![f64::NEG_INFINITY; n];
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        let v = base_logits[i] + adj_logits[i];
        if !v.is_finite() {
            return Err(MixerError::NonFinite(i));
        }
        if legal(i) {
            z[i] = v;
            max = max.max(v);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(MixerError::AllMasked);
    }
    let sum: f64 = z.iter().map(|&v| (v - max).exp()).sum();
    let log_norm = max + sum.ln();
    let log_probs: Vec<f64> = z.iter().map(|&v| v - log_norm).collect();
    let probabilities = log_probs.iter().map(|l| l.exp()).collect();
    Ok(MixedDistribution {
        base_logits: base_logits.to_vec(),
        adjustment_logits: adj_logits.to_vec(),
        probabilities,
        log_probs,
    })
}

/// Inverse-CDF draw in index order. Returns the index and its log-probability.
pub fn sample_categorical(dist: &MixedDistribution, rng: &mut dyn RngCore) -> (usize, f64) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in dist.probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_nonzero = i;
        acc += p;
        if u < acc {
            return (i, dist.log_probs[i]);
        }
    }
    // Rounding left `acc` a hair below 1.
    (last_nonzero, dist.log_probs[last_nonzero])
}

/// Continuous variant: draws `x ~ Normal(a_base, τ)` and returns
/// `x + a_adj_shift` along with the Gaussian log-density of `x`.
pub fn continuous_combine(
    a_base: f64,
    a_adj_shift: f64,
    tau: f64,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64), MixerError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(MixerError::Temperature(tau));
    }
    let normal = Normal::new(a_base, tau).map_err(|_| MixerError::Temperature(tau))?;
    let x = normal.sample(rng);
    let z = (x - a_base) / tau;
    let log_density = -0.5 * z * z - tau.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok((x + a_adj_shift, log_density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn onehot_examples() {
        assert_eq!(
            onehot_temperature_logits(1, 5, 1.0).unwrap(),
            vec![0.0, 1.0, 0.0, 0.0, 0.0]
        );
        let v = onehot_temperature_logits(1, 5, 0.01).unwrap();
        assert!((v[1] - 100.0).abs() < 1e-12);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
        assert_eq!(
            onehot_temperature_logits(0, 1, 3.0).unwrap(),
            vec![1.0 / 3.0]
        );
        assert!(onehot_temperature_logits(5, 5, 1.0).is_err());
        assert!(onehot_temperature_logits(0, 5, 0.0).is_err());
        assert!(onehot_temperature_logits(0, 5, -1.0).is_err());
    }

    #[test]
    fn one_hot_unit_temperature_matches_hand_value() {
        let base = onehot_temperature_logits(1, 5, 1.0).unwrap();
        let d = combine_to_probabilities(&base, &[0.0; 5], None).unwrap();
        let e = std::f64::consts::E;
        let hi = e / (e + 4.0);
        let lo = 1.0 / (e + 4.0);
        assert!((d.probabilities[1] - hi).abs() < 1e-12);
        for i in [0, 2, 3, 4] {
            assert!((d.probabilities[i] - lo).abs() < 1e-12);
        }
        assert!((hi - 0.4046).abs() < 1e-4 && (lo - 0.1488).abs() < 1e-4);
    }

    #[test]
    fn small_temperature_concentrates_on_base() {
        let base = onehot_temperature_logits(3, 29, 1e-3).unwrap();
        let d = combine_to_probabilities(&base, &[0.0; 29], None).unwrap();
        assert!(d.probabilities[3] > 0.999);
    }

    #[test]
    fn masked_entries_get_zero() {
        let mut m = ActionMask::default();
        m.set(0);
        m.set(2);
        let d = combine_to_probabilities(&[0.0; 4], &[5.0, 9.0, 1.0, 9.0], Some(m)).unwrap();
        assert_eq!(d.probabilities[1], 0.0);
        assert_eq!(d.probabilities[3], 0.0);
        assert!((d.probabilities[0] + d.probabilities[2] - 1.0).abs() < 1e-12);
        assert!(matches!(
            combine_to_probabilities(&[0.0; 4], &[0.0; 4], Some(ActionMask::default())),
            Err(MixerError::AllMasked)
        ));
        assert!(matches!(
            combine_to_probabilities(&[0.0; 2], &[f64::NAN, 0.0], None),
            Err(MixerError::NonFinite(0))
        ));
        assert!(combine_to_probabilities(&[0.0; 2], &[0.0; 3], None).is_err());
    }

    #[test]
    fn degenerate_distribution_always_samples_its_mass() {
        let d =
            combine_to_probabilities(&[0.0; 3], &[0.0; 3], Some(ActionMask::NOOP_ONLY)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&d, &mut rng).0, 0);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let d =
            combine_to_probabilities(&[0.0; 6], &[0.3, -1.0, 2.0, 0.0, 0.5, 1.0], None).unwrap();
        let a: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| sample_categorical(&d, &mut r).0).collect()
        };
        let b: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| sample_categorical(&d, &mut r).0).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_frequencies_within_binomial_bound() {
        let d = combine_to_probabilities(&[0.0; 4], &[0.0; 4], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (i, lp) = sample_categorical(&d, &mut rng);
            assert!((lp - 0.25f64.ln()).abs() < 1e-12);
            counts[i] += 1;
        }
        let stderr = (0.25 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!(
                (c as f64 / n as f64 - 0.25).abs() < 4.0 * stderr,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn continuous_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, _) = continuous_combine(0.7, -0.2, 1e-9, &mut rng).unwrap();
        assert!((a - 0.5).abs() < 1e-6);
        assert!(continuous_combine(0.0, 0.0, 0.0, &mut rng).is_err());

        let tau = 0.3;
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += continuous_combine(1.5, 0.0, tau, &mut rng).unwrap().0;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.5).abs() < 4.0 * tau / (n as f64).sqrt());

        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = ChaCha8Rng::seed_from_u64(77);
        assert_eq!(
            continuous_combine(0.1, 0.2, 0.5, &mut r1).unwrap(),
            continuous_combine(0.1, 0.2, 0.5, &mut r2).unwrap()
        );
    }

    #[test]
    fn continuous_log_density_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (a, ld) = continuous_combine(2.0, 1.0, 0.5, &mut rng).unwrap();
        let x = a - 1.0;
        let expect =
            (-(x - 2.0).powi(2) / (2.0 * 0.25)).exp() / (0.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((ld.exp() - expect).abs() < 1e-12);
    }

    fn logits(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, n)
    }

    proptest! {
        #[test]
        fn monotone_in_adjustment(adj in logits(8), i in 0usize..8, delta in 0.01f64..3.0, a in 0usize..8) {
            let base = onehot_temperature_logits(a, 8, 0.5).unwrap();
            let p0 = combine_to_probabilities(&base, &adj, None).unwrap();
            let mut bumped = adj.clone();
            bumped[i] += delta;
            let p1 = combine_to_probabilities(&base, &bumped, None).unwrap();
            prop_assert!(p1.probabilities[i] > p0.probabilities[i]);
        }

        #[test]
        fn probabilities_are_valid_under_any_mask(adj in logits(29), bits in 1u32..(1 << 29), a in 0usize..29, tau in 1e-3f64..1e3) {
            let mut mask = ActionMask::from_bits(bits);
            mask.set(a);
            let base = onehot_temperature_logits(a, 29, tau).unwrap();
            let d = combine_to_probabilities(&base, &adj, Some(mask)).unwrap();
            let total: f64 = d.probabilities.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for (i, p) in d.probabilities.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(p));
                if !mask.is_legal(i) { prop_assert_eq!(*p, 0.0); }
            }
        }
    }
}
