//! The mixture-of-VAEs classifier: one VAE per class, argmin-distance
//! inference.

use crate::metrics::{distance, MetricKind};
use crate::numerics::{Prng, RmsPropState, Tensor};
use crate::vae::{train_epochs, VaeConfig, VaeModel};
use crate::{Error, Image, Result};
use rayon::prelude::*;

/// Images per forward pass when reconstructing large sets.
const RECONSTRUCT_BATCH: usize = 256;

/// Ordered set of `(class label, VAE)` pairs sharing one architecture.
///
/// Members are stored in ascending label order, which fixes both the
/// tie-breaking of [`Mixture::predict`] and the class-processing order of the
/// self-training loop.
#[derive(Debug, Clone)]
pub struct Mixture {
    members: Vec<(String, VaeModel)>,
    metric: MetricKind,
    trained: bool,
}

/// Result of classifying one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Label of the member with the smallest distance (lowest member index
    /// on exact ties).
    pub label: String,
    /// Per-member distances in member order.
    pub distances: Vec<f64>,
}

/// Index of the smallest value, lowest index on exact ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

impl Mixture {
    /// One freshly initialized VAE per label, with independent PRNG streams
    /// derived per member. Labels are deduplicated-checked and sorted.
    pub fn build(
        class_labels: &[String],
        config: VaeConfig,
        metric: MetricKind,
        prng: &Prng,
    ) -> Result<Mixture> {
        if class_labels.len() < 2 {
            return Err(Error::Argument(format!(
                "a mixture needs at least 2 classes, got {}",
                class_labels.len()
            )));
        }
        let mut labels = class_labels.to_vec();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("duplicate class labels".into()));
        }
        let members = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let mut member_prng = prng.split(i as u64);
                VaeModel::new(config, &mut member_prng).map(|m| (label, m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mixture {
            members,
            metric,
            trained: false,
        })
    }

    /// Reassemble a mixture from already trained members (checkpoint load).
    pub fn from_trained_members(
        members: Vec<(String, VaeModel)>,
        metric: MetricKind,
    ) -> Result<Mixture> {
        if members.len() < 2 {
            return Err(Error::Argument("a mixture needs at least 2 members".into()));
        }
        if members.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Argument(
                "mixture members must be in strictly ascending label order".into(),
            ));
        }
        let config = *members[0].1.config();
        if members.iter().any(|(_, m)| *m.config() != config) {
            return Err(Error::Consistency(
                "mixture members must share one architecture".into(),
            ));
        }
        Ok(Mixture {
            members,
            metric,
            trained: true,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn members(&self) -> &[(String, VaeModel)] {
        &self.members
    }

    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn config(&self) -> &VaeConfig {
        self.members[0].1.config()
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// Train every member on its class's samples (member `i` gets
    /// `train_sets[i]`), each for `epochs` epochs from its current weights.
    ///
    /// Member training is independent; it runs in parallel with per-member
    /// PRNG streams derived from `prng`, so results do not depend on the
    /// thread schedule.
    pub fn train_members(
        &mut self,
        train_sets: &[Vec<Image>],
        epochs: usize,
        prng: &Prng,
    ) -> Result<Vec<Vec<f64>>> {
        if train_sets.len() != self.members.len() {
            return Err(Error::Dimension {
                context: "train set count",
                expected: self.members.len(),
                got: train_sets.len(),
            });
        }
        let results: Vec<Result<Vec<f64>>> = self
            .members
            .par_iter_mut()
            .zip(train_sets.par_iter())
            .enumerate()
            .map(|(i, ((_, model), data))| {
                let config = VaeConfig {
                    epochs,
                    ..*model.config()
                };
                let mut member_prng = prng.split(i as u64);
                let mut optimizer = RmsPropState::default();
                train_epochs(model, data, &config, &mut optimizer, &mut member_prng)
            })
            .collect();
        let histories = results.into_iter().collect::<Result<Vec<_>>>()?;
        self.trained = true;
        Ok(histories)
    }

    /// Re-draw every member's weights (used by cold-restart retraining).
    pub fn reinitialize(&mut self, prng: &Prng) -> Result<()> {
        let config = *self.config();
        for (i, (_, model)) in self.members.iter_mut().enumerate() {
            let mut member_prng = prng.split(i as u64);
            *model = VaeModel::new(config, &mut member_prng)?;
        }
        self.trained = false;
        Ok(())
    }

    fn require_trained(&self) -> Result<()> {
        if self.members.is_empty() || !self.trained {
            return Err(Error::State("mixture has not been trained"));
        }
        Ok(())
    }

    /// Distance from every image to its reconstruction by every member;
    /// entry `(k, i)` is image `k` through member `i`.
    pub fn distance_matrix<S: AsRef<[f32]> + Sync>(&self, images: &[S]) -> Result<Vec<Vec<f64>>> {
        self.require_trained()?;
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let columns: Vec<Result<Vec<f64>>> = self
            .members
            .par_iter()
            .map(|(_, model)| {
                let mut column = Vec::with_capacity(images.len());
                for chunk in images.chunks(RECONSTRUCT_BATCH) {
                    let rows: Vec<&[f32]> = chunk.iter().map(|s| s.as_ref()).collect();
                    let x = Tensor::from_rows(&rows)?;
                    let xhat = model.reconstruct(&x)?;
                    for (j, row) in rows.iter().enumerate() {
                        column.push(distance(row, xhat.row(j), self.metric)?);
                    }
                }
                Ok(column)
            })
            .collect();
        let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
        let mut matrix = vec![vec![0.0f64; self.members.len()]; images.len()];
        for (i, column) in columns.into_iter().enumerate() {
            for (k, d) in column.into_iter().enumerate() {
                matrix[k][i] = d;
            }
        }
        Ok(matrix)
    }

    /// Classify one image: reconstruct it through every member and take the
    /// argmin distance.
    pub fn predict(&self, image: &[f32]) -> Result<Prediction> {
        let matrix = self.distance_matrix(&[image])?;
        let distances = matrix.into_iter().next().unwrap();
        let best = argmin(&distances);
        Ok(Prediction {
            label: self.members[best].0.clone(),
            distances,
        })
    }

    /// Classify a batch of images (one distance matrix, per-row argmin).
    pub fn predict_batch<S: AsRef<[f32]> + Sync>(&self, images: &[S]) -> Result<Vec<String>> {
        let matrix = self.distance_matrix(images)?;
        Ok(matrix
            .into_iter()
            .map(|row| self.members[argmin(&row)].0.clone())
            .collect())
    }
}
