//! Reference classifiers evaluated on exactly the data the mixture sees.

use crate::datasets::LabeledDataset;
use crate::{Error, Result};

/// k-nearest-neighbor vote on raw pixels under Euclidean distance.
///
/// Neighbors tied on distance are ordered by lower training index. A vote tie
/// resolves to the class of the single nearest neighbor among the tied
/// classes. When the training set holds fewer than `k` samples, all of them
/// vote.
pub fn knn_predict(train: &LabeledDataset, query: &[f32], k: usize) -> Result<String> {
    if train.is_empty() {
        return Err(Error::Argument("knn needs a non-empty training set".into()));
    }
    if k == 0 {
        return Err(Error::Argument("knn needs k >= 1".into()));
    }
    let width = train.image_dims().0 * train.image_dims().1;
    if query.len() != width {
        return Err(Error::Dimension {
            context: "knn query width",
            expected: width,
            got: query.len(),
        });
    }

    let mut scored: Vec<(f64, usize)> = train
        .images()
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let d: f64 = img
                .iter()
                .zip(query)
                .map(|(&a, &b)| {
                    let diff = a as f64 - b as f64;
                    diff * diff
                })
                .sum();
            (d, i)
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let k = k.min(scored.len());
    let neighbors = &scored[..k];

    let mut votes: Vec<(&str, usize)> = Vec::new();
    for &(_, idx) in neighbors {
        let label = train.labels()[idx].as_str();
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, count)) => *count += 1,
            None => votes.push((label, 1)),
        }
    }
    let top = votes.iter().map(|&(_, c)| c).max().unwrap();
    // Vote order follows nearest-first discovery, so the first class at the
    // top count is the tie winner by the nearest-neighbor rule.
    let winner = votes.iter().find(|&&(_, c)| c == top).unwrap().0;
    Ok(winner.to_string())
}

/// Expected accuracy of uniform random guessing over `n_classes`.
pub fn random_guess_accuracy(n_classes: usize) -> f64 {
    assert!(n_classes >= 1, "need at least one class");
    1.0 / n_classes as f64
}
