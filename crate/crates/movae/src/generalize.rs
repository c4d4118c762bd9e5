//! Self-training over an unlabeled pool ("generalization iterations").
//!
//! Each iteration scores every unconsumed pool image against every mixture
//! member, then lets each class claim its quota of best-reconstructed samples
//! subject to an exclusion rule: a sample claimed for class `i` must not rank
//! among the top-ψ reconstructions of any *other* class. Claimed samples join
//! that class's training set permanently and every member is retrained.

use crate::metrics::accuracy;
use crate::mixture::Mixture;
use crate::numerics::Prng;
use crate::{Error, Image, Result};
use serde::{Deserialize, Serialize};

/// Knobs for the self-training loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneralizationConfig {
    /// Unlabeled samples considered per iteration; each class may claim up to
    /// `psi / |C|` of them (integer division).
    pub psi: usize,
    /// Iteration cap; `None` runs until the pool is exhausted or no sample
    /// can be claimed.
    pub max_iterations: Option<usize>,
    /// Epochs per retraining pass.
    pub retrain_epochs: usize,
    /// Re-draw member weights before each retraining pass instead of
    /// continuing from the current weights.
    pub cold_restart: bool,
}

/// Indexed set of unlabeled images; consumed entries are never rescored.
#[derive(Debug, Clone)]
pub struct UnlabeledPool {
    images: Vec<Image>,
    consumed: Vec<bool>,
    remaining: usize,
}

impl UnlabeledPool {
    pub fn new(images: Vec<Image>) -> Self {
        let remaining = images.len();
        let consumed = vec![false; images.len()];
        UnlabeledPool {
            images,
            consumed,
            remaining,
        }
    }

    pub fn total(&self) -> usize {
        self.images.len()
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining == 0
    }

    pub fn image(&self, index: usize) -> &[f32] {
        &self.images[index]
    }

    pub fn is_consumed(&self, index: usize) -> bool {
        self.consumed[index]
    }

    /// Indices of unconsumed images, ascending.
    pub fn unconsumed_indices(&self) -> Vec<usize> {
        (0..self.images.len()).filter(|&i| !self.consumed[i]).collect()
    }

    fn consume(&mut self, index: usize) {
        debug_assert!(!self.consumed[index], "pool sample consumed twice");
        self.consumed[index] = true;
        self.remaining -= 1;
    }
}

/// Outcome of one selection pass.
///
/// `selected[i]` holds the candidate indices claimed for class `i` (row
/// indices of the distance matrix passed to [`select_samples`], pool indices
/// after [`generalization_iteration`] translates them). `skipped[i]` counts
/// exclusion-rule rejections only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionReport {
    pub selected: Vec<Vec<usize>>,
    pub skipped: Vec<usize>,
}

impl SelectionReport {
    pub fn total_selected(&self) -> usize {
        self.selected.iter().map(Vec::len).sum()
    }
}

/// Claim up to `⌊psi / |C|⌋` samples per class from a distance matrix
/// (`dist[k][i]` = distance of candidate `k` under class `i`).
///
/// Classes are processed in `class_order`. Each class walks its own
/// ascending-distance candidate list (ties broken by lower index) and accepts
/// a candidate iff it is not already claimed this pass and not among the
/// top-ψ best-reconstructed candidates of any other class. The per-class
/// top-ψ lists are computed once from `dist` and stay fixed for the pass;
/// claims made by earlier classes are visible to later ones.
pub fn select_samples(dist: &[Vec<f64>], psi: usize, class_order: &[usize]) -> SelectionReport {
    let n_classes = class_order.len();
    let n = dist.len();
    let mut report = SelectionReport {
        selected: vec![Vec::new(); n_classes],
        skipped: vec![0; n_classes],
    };
    let quota = if n_classes == 0 { 0 } else { psi / n_classes };
    if n == 0 || quota == 0 {
        return report;
    }

    // Per-class candidate order and top-ψ membership.
    let mut sorted: Vec<Vec<usize>> = Vec::with_capacity(n_classes);
    let mut top_member: Vec<Vec<bool>> = vec![vec![false; n]; n_classes];
    let mut top_count = vec![0u32; n];
    for class in 0..n_classes {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            dist[a][class]
                .partial_cmp(&dist[b][class])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &row in order.iter().take(psi.min(n)) {
            top_member[class][row] = true;
            top_count[row] += 1;
        }
        sorted.push(order);
    }

    let mut claimed = vec![false; n];
    for &class in class_order {
        for &row in &sorted[class] {
            if report.selected[class].len() == quota {
                break;
            }
            if claimed[row] {
                continue;
            }
            let in_other_top = top_count[row] > u32::from(top_member[class][row]);
            if in_other_top {
                report.skipped[class] += 1;
                continue;
            }
            claimed[row] = true;
            report.selected[class].push(row);
        }
    }
    report
}

/// One pass of the self-training loop: score the unconsumed pool once, claim
/// samples per class, grow the per-class training sets, and retrain every
/// member on its full accumulated set.
///
/// When nothing could be claimed the training sets are unchanged and
/// retraining is skipped; the caller can detect this through the report.
pub fn generalization_iteration(
    mixture: &mut Mixture,
    pool: &mut UnlabeledPool,
    train_sets: &mut [Vec<Image>],
    config: &GeneralizationConfig,
    prng: &Prng,
) -> Result<SelectionReport> {
    let n_classes = mixture.len();
    if train_sets.len() != n_classes {
        return Err(Error::Dimension {
            context: "generalization train set count",
            expected: n_classes,
            got: train_sets.len(),
        });
    }
    if config.psi < n_classes {
        return Err(Error::Argument(format!(
            "psi {} is smaller than the class count {n_classes}",
            config.psi
        )));
    }

    let rows = pool.unconsumed_indices();
    let views: Vec<&[f32]> = rows.iter().map(|&i| pool.image(i)).collect();
    let dist = mixture.distance_matrix(&views)?;
    let class_order: Vec<usize> = (0..n_classes).collect();
    let row_report = select_samples(&dist, config.psi, &class_order);

    // Translate candidate rows to pool indices and consume them.
    let mut report = SelectionReport {
        selected: vec![Vec::new(); n_classes],
        skipped: row_report.skipped,
    };
    for (class, picks) in row_report.selected.iter().enumerate() {
        for &row in picks {
            let pool_idx = rows[row];
            train_sets[class].push(pool.image(pool_idx).to_vec());
            report.selected[class].push(pool_idx);
        }
        for &idx in &report.selected[class] {
            pool.consume(idx);
        }
    }

    if report.total_selected() > 0 {
        if config.cold_restart {
            mixture.reinitialize(&prng.split(1))?;
        }
        mixture.train_members(train_sets, config.retrain_epochs, &prng.split(0))?;
    }
    Ok(report)
}

/// One row of the per-iteration evaluation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub pool_size: usize,
    pub accuracy: f64,
}

/// Run generalization iterations until the cap, pool exhaustion, or a pass
/// that claims nothing (once every candidate sits in some other class's
/// top-ψ, no further progress is possible).
///
/// The trace starts with an iteration-0 entry holding the pre-generalization
/// accuracy on `(eval_images, eval_labels)`.
pub fn run_generalization<S: AsRef<[f32]> + Sync>(
    mixture: &mut Mixture,
    pool: &mut UnlabeledPool,
    train_sets: &mut [Vec<Image>],
    config: &GeneralizationConfig,
    eval_images: &[S],
    eval_labels: &[String],
    prng: &Prng,
) -> Result<Vec<TracePoint>> {
    let evaluate = |mixture: &Mixture| -> Result<f64> {
        let predictions = mixture.predict_batch(eval_images)?;
        accuracy(&predictions, eval_labels)
    };

    let mut trace = vec![TracePoint {
        iteration: 0,
        pool_size: pool.remaining(),
        accuracy: evaluate(mixture)?,
    }];

    let mut iteration = 0usize;
    loop {
        if let Some(cap) = config.max_iterations {
            if iteration >= cap {
                break;
            }
        }
        if pool.is_exhausted() {
            break;
        }
        iteration += 1;
        let report = generalization_iteration(
            mixture,
            pool,
            train_sets,
            config,
            &prng.split(iteration as u64),
        )?;
        if report.total_selected() == 0 {
            break;
        }
        trace.push(TracePoint {
            iteration,
            pool_size: pool.remaining(),
            accuracy: evaluate(mixture)?,
        });
    }
    Ok(trace)
}
