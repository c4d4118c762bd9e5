//! Experiment harness: configuration, the three protocols (supervised,
//! one-shot semi-supervised, pure one-shot episodic), checkpointing, and
//! metrics emission.
//!
//! Every run is a pure function of `(config, seed)`: repeat `r` draws all of
//! its randomness from `Prng::new(seed).split(r)`, and parallel member
//! training uses per-member derived streams, so records are byte-identical
//! across reruns regardless of thread count.

mod checkpoint;
mod config;
mod record;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{AugmentChoice, ExperimentConfig, Protocol, VaeOverrides};
pub use record::{write_outputs, MetricsRecord, RepeatResult, RunOutput};

use crate::augment::augment_pool;
use crate::datasets::{
    downsample, load_idx, load_pgm_file, load_pgm_tree, sample_episode, split_labeled_unlabeled,
    write_pgm, EpisodeSpec, LabeledDataset,
};
use crate::generalize::{run_generalization, GeneralizationConfig};
use crate::metrics::accuracy;
use crate::mixture::Mixture;
use crate::numerics::Prng;
use crate::vae::VaeConfig;
use crate::{Error, Image, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

// Per-repeat PRNG stream labels.
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_AUGMENT: u64 = 4;
const STREAM_GENERALIZE: u64 = 5;
const STREAM_EPISODE: u64 = 6;

struct PhaseTimer {
    timings_ms: BTreeMap<String, u64>,
}

impl PhaseTimer {
    fn new() -> Self {
        PhaseTimer {
            timings_ms: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        *self.timings_ms.entry(phase.to_string()).or_insert(0) +=
            start.elapsed().as_millis() as u64;
        value
    }
}

/// Architecture defaults follow the protocol's image family; explicit
/// overrides win.
fn resolve_vae_config(cfg: &ExperimentConfig) -> VaeConfig {
    let mut vcfg = match cfg.protocol {
        Protocol::Oneshot => VaeConfig::omniglot(),
        _ => VaeConfig::mnist_family(),
    };
    if let Some(h) = cfg.vae.hidden_dim {
        vcfg.hidden_dim = h;
    }
    if let Some(l) = cfg.vae.latent_dim {
        vcfg.latent_dim = l;
    }
    if let Some(e) = cfg.vae.epochs {
        vcfg.epochs = e;
    }
    if let Some(b) = cfg.vae.batch_size {
        vcfg.batch_size = b;
    }
    vcfg
}

fn per_class_sets(dataset: &LabeledDataset, labels: &[String]) -> Vec<Vec<Image>> {
    labels
        .iter()
        .map(|label| {
            dataset
                .class_samples(label)
                .iter()
                .map(|&i| dataset.images()[i].clone())
                .collect()
        })
        .collect()
}

fn evaluate(mixture: &Mixture, test: &LabeledDataset) -> Result<f64> {
    let predictions = mixture.predict_batch(test.images())?;
    accuracy(&predictions, test.labels())
}

fn load_idx_pair(images: &Option<std::path::PathBuf>, labels: &Option<std::path::PathBuf>) -> Result<LabeledDataset> {
    load_idx(images.as_deref().unwrap(), labels.as_deref().unwrap())
}

/// Dispatch on the configured protocol, then write the JSON/CSV outputs and
/// the model checkpoint when paths are configured.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let output = match cfg.protocol {
        Protocol::Supervised => run_supervised(cfg)?,
        Protocol::Semisup => run_semisup(cfg)?,
        Protocol::Oneshot => run_oneshot(cfg)?,
    };
    if let Some(path) = &cfg.out {
        write_outputs(&output, path)?;
    }
    Ok(output)
}

/// Train one VAE per class on all of its labeled samples and evaluate on the
/// test set. No generalization iterations.
pub fn run_supervised(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let vcfg = resolve_vae_config(cfg);
    let mut timer = PhaseTimer::new();

    let (train, test) = timer.time("load", || -> Result<_> {
        Ok((
            load_idx_pair(&cfg.train_images, &cfg.train_labels)?,
            load_idx_pair(&cfg.test_images, &cfg.test_labels)?,
        ))
    })?;
    let labels = train.class_labels();
    let train_sets = per_class_sets(&train, &labels);

    let mut per_repeat = Vec::with_capacity(cfg.repeats);
    let mut last_mixture = None;
    for r in 0..cfg.repeats {
        let prng = Prng::new(seed).split(r as u64);
        let mut mixture = Mixture::build(&labels, vcfg, cfg.metric, &prng.split(STREAM_INIT))?;
        timer.time("train", || {
            mixture.train_members(&train_sets, vcfg.epochs, &prng.split(STREAM_TRAIN))
        })?;
        let acc = timer.time("evaluate", || evaluate(&mixture, &test))?;
        per_repeat.push(RepeatResult {
            repeat: r,
            accuracy: acc,
            knn_accuracy: None,
            trace: None,
        });
        last_mixture = Some(mixture);
    }
    if let Some(path) = &cfg.save_model {
        save_checkpoint(&last_mixture.unwrap(), path)?;
    }

    let record = MetricsRecord::from_repeats(
        cfg.protocol.as_str(),
        &cfg.metric.to_string(),
        seed,
        per_repeat,
    )?;
    Ok(RunOutput {
        record,
        timings_ms: timer.timings_ms,
    })
}

/// Split k labeled samples per class, optionally augment them into larger
/// per-class pools, train the mixture, then run generalization iterations
/// over the remaining (unlabeled) training data, evaluating on the test set
/// after every iteration.
pub fn run_semisup(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let vcfg = resolve_vae_config(cfg);
    let mut timer = PhaseTimer::new();

    let (train, test) = timer.time("load", || -> Result<_> {
        Ok((
            load_idx_pair(&cfg.train_images, &cfg.train_labels)?,
            load_idx_pair(&cfg.test_images, &cfg.test_labels)?,
        ))
    })?;
    let labels = train.class_labels();

    let mut per_repeat = Vec::with_capacity(cfg.repeats);
    let mut last_mixture = None;
    for r in 0..cfg.repeats {
        let prng = Prng::new(seed).split(r as u64);
        let mut split_prng = prng.split(STREAM_SPLIT);
        let (labeled, mut pool) = split_labeled_unlabeled(&train, cfg.k_shot, &mut split_prng)?;
        let mut train_sets = per_class_sets(&labeled, &labels);
        if let Some(policy) = cfg.augment.policy() {
            let aug_prng = prng.split(STREAM_AUGMENT);
            for (i, set) in train_sets.iter_mut().enumerate() {
                let mut class_prng = aug_prng.split(i as u64);
                let target = cfg.pool_size.max(set.len());
                *set = augment_pool(set, &policy, target, &mut class_prng)?;
            }
        }

        let mut mixture = Mixture::build(&labels, vcfg, cfg.metric, &prng.split(STREAM_INIT))?;
        timer.time("train", || {
            mixture.train_members(&train_sets, vcfg.epochs, &prng.split(STREAM_TRAIN))
        })?;

        let gen_cfg = GeneralizationConfig {
            psi: cfg.psi,
            max_iterations: cfg.max_iterations,
            retrain_epochs: vcfg.epochs,
            cold_restart: cfg.cold_restart,
        };
        let trace = timer.time("generalize", || {
            run_generalization(
                &mut mixture,
                &mut pool,
                &mut train_sets,
                &gen_cfg,
                test.images(),
                test.labels(),
                &prng.split(STREAM_GENERALIZE),
            )
        })?;
        per_repeat.push(RepeatResult {
            repeat: r,
            accuracy: trace.last().unwrap().accuracy,
            knn_accuracy: None,
            trace: Some(trace),
        });
        last_mixture = Some(mixture);
    }
    if let Some(path) = &cfg.save_model {
        save_checkpoint(&last_mixture.unwrap(), path)?;
    }

    let record = MetricsRecord::from_repeats(
        cfg.protocol.as_str(),
        &cfg.metric.to_string(),
        seed,
        per_repeat,
    )?;
    Ok(RunOutput {
        record,
        timings_ms: timer.timings_ms,
    })
}

/// Episodic evaluation with no unlabeled data: per repeat, sample an N-way
/// k-shot episode, augment each class's shots into a training pool, train
/// the mixture, and score both it and a 3-NN baseline on the episode's test
/// split (both see exactly the same data).
pub fn run_oneshot(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap();
    let vcfg = resolve_vae_config(cfg);
    let mut timer = PhaseTimer::new();

    let dataset = timer.time("load", || -> Result<LabeledDataset> {
        let raw = load_pgm_tree(cfg.omniglot_dir.as_deref().unwrap())?;
        match raw.image_dims() {
            (28, 28) => Ok(raw),
            (105, 105) => {
                let (images, labels, _) = raw.into_parts();
                let small = images
                    .into_iter()
                    .map(|img| downsample(&img))
                    .collect::<Result<Vec<_>>>()?;
                LabeledDataset::new(small, labels, (28, 28))
            }
            (h, w) => Err(Error::Argument(format!(
                "oneshot needs 28x28 or 105x105 images, tree has {h}x{w}"
            ))),
        }
    })?;

    let spec = EpisodeSpec {
        n_way: cfg.n_way,
        k_shot: cfg.k_shot,
        test_per_class: 20 - cfg.k_shot,
    };

    let mut per_repeat = Vec::with_capacity(cfg.repeats);
    let mut last_mixture = None;
    for r in 0..cfg.repeats {
        let prng = Prng::new(seed).split(r as u64);
        let mut episode_prng = prng.split(STREAM_EPISODE);
        let (shots, test) = sample_episode(&dataset, &spec, &mut episode_prng)?;
        let labels = shots.class_labels();
        let mut train_sets = per_class_sets(&shots, &labels);
        if let Some(policy) = cfg.augment.policy() {
            let aug_prng = prng.split(STREAM_AUGMENT);
            for (i, set) in train_sets.iter_mut().enumerate() {
                let mut class_prng = aug_prng.split(i as u64);
                let target = cfg.pool_size.max(set.len());
                *set = augment_pool(set, &policy, target, &mut class_prng)?;
            }
        }

        let mut mixture = Mixture::build(&labels, vcfg, cfg.metric, &prng.split(STREAM_INIT))?;
        timer.time("train", || {
            mixture.train_members(&train_sets, vcfg.epochs, &prng.split(STREAM_TRAIN))
        })?;

        let (acc, knn_acc) = timer.time("evaluate", || -> Result<(f64, f64)> {
            let acc = evaluate(&mixture, &test)?;

            // The baseline consumes the identical augmented pools.
            let mut knn_images = Vec::new();
            let mut knn_labels = Vec::new();
            for (label, set) in labels.iter().zip(&train_sets) {
                for img in set {
                    knn_images.push(img.clone());
                    knn_labels.push(label.clone());
                }
            }
            let knn_train = LabeledDataset::new(knn_images, knn_labels, (28, 28))?;
            let knn_preds = test
                .images()
                .iter()
                .map(|img| crate::baselines::knn_predict(&knn_train, img, 3))
                .collect::<Result<Vec<_>>>()?;
            let knn_acc = accuracy(&knn_preds, test.labels())?;
            Ok((acc, knn_acc))
        })?;

        per_repeat.push(RepeatResult {
            repeat: r,
            accuracy: acc,
            knn_accuracy: Some(knn_acc),
            trace: None,
        });
        last_mixture = Some(mixture);
    }
    if let Some(path) = &cfg.save_model {
        save_checkpoint(&last_mixture.unwrap(), path)?;
    }

    let record = MetricsRecord::from_repeats(
        cfg.protocol.as_str(),
        &cfg.metric.to_string(),
        seed,
        per_repeat,
    )?;
    Ok(RunOutput {
        record,
        timings_ms: timer.timings_ms,
    })
}

/// Validate a PGM class tree and write a 28×28 copy of it (105×105 inputs
/// are box-filtered down, 28×28 inputs pass through). Returns
/// `(classes, images)` written.
pub fn convert_tree(input: &Path, output: &Path) -> Result<(usize, usize)> {
    let mut class_dirs: Vec<_> = std::fs::read_dir(input)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Argument(format!(
            "{}: no class subdirectories",
            input.display()
        )));
    }

    let mut images_written = 0usize;
    for dir in &class_dirs {
        let class = dir.file_name().unwrap().to_string_lossy().into_owned();
        let out_dir = output.join(&class);
        std::fs::create_dir_all(&out_dir)?;
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Consistency(format!(
                "class directory {} contains no .pgm files",
                dir.display()
            )));
        }
        for file in files {
            let (h, w, img) = load_pgm_file(&file)?;
            let small = match (h, w) {
                (28, 28) => img,
                (105, 105) => downsample(&img)?,
                _ => {
                    return Err(Error::Argument(format!(
                        "{}: expected 28x28 or 105x105, got {h}x{w}",
                        file.display()
                    )))
                }
            };
            let name = file.file_name().unwrap();
            write_pgm(&out_dir.join(name), 28, 28, &small)?;
            images_written += 1;
        }
    }
    Ok((class_dirs.len(), images_written))
}
