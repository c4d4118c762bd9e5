//! Similarity and distance metrics between an image and its reconstruction,
//! plus classification accuracy.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which metric the mixture uses at inference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Pcc,
    Rmse,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricKind::Pcc => write!(f, "pcc"),
            MetricKind::Rmse => write!(f, "rmse"),
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcc" => Ok(MetricKind::Pcc),
            "rmse" => Ok(MetricKind::Rmse),
            other => Err(Error::Argument(format!(
                "unknown metric {other:?}, expected pcc or rmse"
            ))),
        }
    }
}

/// Pearson correlation coefficient of paired components, in `[-1, 1]`.
///
/// Two-pass computation in f64: means first, then centered products.
/// Zero variance in either argument is a degenerate input.
pub fn pcc(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "pcc input lengths",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Argument(format!(
            "pcc needs at least 2 components, got {}",
            a.len()
        )));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mean_b = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x as f64 - mean_a;
        let dy = y as f64 - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::Degenerate("zero variance in pcc input"));
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// Root mean squared error, `≥ 0`.
pub fn rmse(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "rmse input lengths",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Argument("rmse needs at least 1 component".into()));
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Distance between an image and a reconstruction under `kind`.
///
/// PCC is converted to a distance as `1 − r` (range `[0, 2]`); a degenerate
/// PCC input (e.g. a constant reconstruction from an untrained model) maps to
/// the worst distance 2 instead of an error.
pub fn distance(a: &[f32], b: &[f32], kind: MetricKind) -> Result<f64> {
    match kind {
        MetricKind::Pcc => match pcc(a, b) {
            Ok(r) => Ok(1.0 - r),
            Err(Error::Degenerate(_)) => Ok(2.0),
            Err(e) => Err(e),
        },
        MetricKind::Rmse => rmse(a, b),
    }
}

/// Fraction of positions where `predictions` equals `truths`.
pub fn accuracy(predictions: &[String], truths: &[String]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Argument(format!(
            "accuracy needs equal-length inputs, got {} predictions and {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Argument("accuracy needs at least one pair".into()));
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Prng;
    use proptest::prelude::*;

    #[test]
    fn pcc_of_self_is_one() {
        let x = vec![0.1f32, 0.5, 0.9, 0.2];
        assert!((pcc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pcc_of_reversed_ramp_is_minus_one() {
        let r = pcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pcc_ignores_positive_affine_rescaling() {
        let x = vec![0.3f32, 0.9, 0.1, 0.7, 0.5];
        let y: Vec<f32> = x.iter().map(|&v| 2.0 * v + 5.0).collect();
        assert!((pcc(&x, &y).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pcc_matches_definition_oracle_on_random_vectors() {
        let mut prng = Prng::new(31);
        let a: Vec<f32> = (0..784).map(|_| prng.next_f32()).collect();
        let b: Vec<f32> = (0..784).map(|_| prng.next_f32()).collect();

        // Independent oracle: explicit mean/cov/var definition.
        let n = 784.0f64;
        let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
        let cov = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (x as f64 - ma) * (y as f64 - mb))
            .sum::<f64>()
            / n;
        let sa = (a.iter().map(|&x| (x as f64 - ma).powi(2)).sum::<f64>() / n).sqrt();
        let sb = (b.iter().map(|&y| (y as f64 - mb).powi(2)).sum::<f64>() / n).sqrt();
        let expected = cov / (sa * sb);

        assert!((pcc(&a, &b).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn pcc_rejects_constant_input() {
        let err = pcc(&[0.5, 0.5, 0.5], &[0.1, 0.2, 0.3]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn rmse_basics() {
        let x = vec![0.2f32, 0.4, 0.8];
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        let d = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((d - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_maps_degenerate_pcc_to_worst_case() {
        let x = vec![0.1f32, 0.9, 0.4];
        let constant = vec![0.5f32; 3];
        assert_eq!(distance(&x, &constant, MetricKind::Pcc).unwrap(), 2.0);
        assert!(distance(&x, &x, MetricKind::Pcc).unwrap().abs() < 1e-12);
    }

    #[test]
    fn accuracy_counts_exact_matches() {
        let t: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
        let wrong: Vec<String> = ["x"; 4].iter().map(|s| s.to_string()).collect();
        assert_eq!(accuracy(&wrong, &t).unwrap(), 0.0);
        let half: Vec<String> = ["a", "b", "x", "y"].iter().map(|s| s.to_string()).collect();
        assert_eq!(accuracy(&half, &t).unwrap(), 0.5);
        assert!(accuracy(&t[..3].to_vec(), &t).is_err());
    }

    proptest! {
        /// PCC is invariant under positive-affine transforms of either side,
        /// so the pcc distance is invariant to brightness/contrast rescaling.
        #[test]
        fn pcc_affine_invariance(
            seed in 0u64..1000,
            scale in 0.1f32..4.0,
            offset in -2.0f32..2.0,
        ) {
            let mut prng = Prng::new(seed);
            let a: Vec<f32> = (0..32).map(|_| prng.next_f32()).collect();
            let b: Vec<f32> = (0..32).map(|_| prng.next_f32()).collect();
            if let (Ok(base), Ok(scaled)) = (
                pcc(&a, &b),
                pcc(&a, &b.iter().map(|&v| scale * v + offset).collect::<Vec<_>>()),
            ) {
                prop_assert!((base - scaled).abs() < 1e-6);
            }
        }

        #[test]
        fn rmse_is_symmetric(seed in 0u64..1000) {
            let mut prng = Prng::new(seed);
            let a: Vec<f32> = (0..16).map(|_| prng.next_f32()).collect();
            let b: Vec<f32> = (0..16).map(|_| prng.next_f32()).collect();
            prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        }

        #[test]
        fn pcc_distance_stays_in_range(seed in 0u64..1000) {
            let mut prng = Prng::new(seed);
            let a: Vec<f32> = (0..16).map(|_| prng.next_f32()).collect();
            let b: Vec<f32> = (0..16).map(|_| prng.next_f32()).collect();
            let d = distance(&a, &b, MetricKind::Pcc).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }
}
