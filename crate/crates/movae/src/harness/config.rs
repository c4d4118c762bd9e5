use crate::augment::AugmentPolicy;
use crate::metrics::MetricKind;
use crate::{Error, Result};
use std::path::{Path, PathBuf};

/// Which experiment protocol a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Train on the full labeled training set, no generalization iterations.
    Supervised,
    /// k labeled samples per class, the rest unlabeled; self-training loop.
    Semisup,
    /// N-way k-shot episodes; no unlabeled data at all.
    Oneshot,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Supervised => "supervised",
            Protocol::Semisup => "semisup",
            Protocol::Oneshot => "oneshot",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Protocol::Supervised),
            "semisup" => Ok(Protocol::Semisup),
            "oneshot" => Ok(Protocol::Oneshot),
            other => Err(Error::Argument(format!(
                "unknown protocol {other:?}, expected supervised, semisup, or oneshot"
            ))),
        }
    }
}

/// Named augmentation policy selected from the CLI or a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentChoice {
    None,
    Mnist,
    Fashion,
    Omniglot,
}

impl AugmentChoice {
    pub fn policy(&self) -> Option<AugmentPolicy> {
        match self {
            AugmentChoice::None => None,
            AugmentChoice::Mnist => Some(AugmentPolicy::mnist_digits()),
            AugmentChoice::Fashion => Some(AugmentPolicy::fashion()),
            AugmentChoice::Omniglot => Some(AugmentPolicy::omniglot()),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentChoice::None => "none",
            AugmentChoice::Mnist => "mnist",
            AugmentChoice::Fashion => "fashion",
            AugmentChoice::Omniglot => "omniglot",
        }
    }
}

impl std::str::FromStr for AugmentChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AugmentChoice::None),
            "mnist" => Ok(AugmentChoice::Mnist),
            "fashion" => Ok(AugmentChoice::Fashion),
            "omniglot" => Ok(AugmentChoice::Omniglot),
            other => Err(Error::Argument(format!(
                "unknown augment policy {other:?}, expected none, mnist, fashion, or omniglot"
            ))),
        }
    }
}

/// Optional architecture/training overrides on top of the protocol defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VaeOverrides {
    pub hidden_dim: Option<usize>,
    pub latent_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
}

/// Everything one experiment run needs; validated before any compute.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub omniglot_dir: Option<PathBuf>,
    pub k_shot: usize,
    pub n_way: usize,
    pub psi: usize,
    /// `None` runs generalization until the pool is exhausted.
    pub max_iterations: Option<usize>,
    pub augment: AugmentChoice,
    /// Per-class training pool size after augmentation.
    pub pool_size: usize,
    pub metric: MetricKind,
    /// Mandatory; runs refuse to start without one.
    pub seed: Option<u64>,
    pub repeats: usize,
    pub vae: VaeOverrides,
    /// Re-initialize member weights before each retraining pass instead of
    /// continuing from the current weights.
    pub cold_restart: bool,
    pub out: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Protocol-appropriate defaults with a seed; data paths must still be
    /// supplied.
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        let mut cfg = Self::unseeded(protocol);
        cfg.seed = Some(seed);
        cfg
    }

    /// Defaults without a seed; validation fails until one is set.
    pub fn unseeded(protocol: Protocol) -> Self {
        ExperimentConfig {
            protocol,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            omniglot_dir: None,
            k_shot: 1,
            n_way: 5,
            psi: 3000,
            max_iterations: None,
            augment: match protocol {
                Protocol::Oneshot => AugmentChoice::Omniglot,
                _ => AugmentChoice::None,
            },
            pool_size: match protocol {
                Protocol::Oneshot => 10_000,
                _ => 500,
            },
            metric: MetricKind::Pcc,
            seed: None,
            repeats: 1,
            vae: VaeOverrides::default(),
            cold_restart: false,
            out: None,
            save_model: None,
        }
    }

    /// Apply `key=value` lines from a config file. Keys use the CLI flag
    /// names with either dashes or underscores; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!(
                    "{}:{}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply_key(key.trim(), value.trim()).map_err(|e| {
                Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Argument(format!("expected a non-negative integer, got {v:?}")))
        };
        match key.replace('-', "_").as_str() {
            "protocol" => {
                let p: Protocol = value.parse()?;
                if p != self.protocol {
                    return Err(Error::Consistency(format!(
                        "config file says protocol {value:?} but the run was started as {:?}",
                        self.protocol.as_str()
                    )));
                }
            }
            "train_images" => self.train_images = Some(value.into()),
            "train_labels" => self.train_labels = Some(value.into()),
            "test_images" => self.test_images = Some(value.into()),
            "test_labels" => self.test_labels = Some(value.into()),
            "omniglot_dir" => self.omniglot_dir = Some(value.into()),
            "shots" | "k_shot" => self.k_shot = parse_usize(value)?,
            "ways" | "n_way" => self.n_way = parse_usize(value)?,
            "psi" => self.psi = parse_usize(value)?,
            "iterations" | "max_iterations" => {
                self.max_iterations = if value == "unbounded" {
                    None
                } else {
                    Some(parse_usize(value)?)
                }
            }
            "augment" => self.augment = value.parse()?,
            "pool_size" => self.pool_size = parse_usize(value)?,
            "metric" => self.metric = value.parse()?,
            "seed" => {
                self.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Argument(format!("bad seed {value:?}")))?,
                )
            }
            "repeats" => self.repeats = parse_usize(value)?,
            "epochs" => self.vae.epochs = Some(parse_usize(value)?),
            "hidden_dim" => self.vae.hidden_dim = Some(parse_usize(value)?),
            "latent_dim" => self.vae.latent_dim = Some(parse_usize(value)?),
            "batch_size" => self.vae.batch_size = Some(parse_usize(value)?),
            "cold_restart" => {
                self.cold_restart = value.parse().map_err(|_| {
                    Error::Argument(format!("cold_restart expects true or false, got {value:?}"))
                })?
            }
            "out" => self.out = Some(value.into()),
            "save_model" => self.save_model = Some(value.into()),
            other => {
                return Err(Error::Argument(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::Argument("seed is mandatory".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Argument("repeats must be at least 1".into()));
        }
        match self.protocol {
            Protocol::Supervised | Protocol::Semisup => {
                for (name, path) in [
                    ("train-images", &self.train_images),
                    ("train-labels", &self.train_labels),
                    ("test-images", &self.test_images),
                    ("test-labels", &self.test_labels),
                ] {
                    if path.is_none() {
                        return Err(Error::Argument(format!(
                            "protocol {} requires --{name}",
                            self.protocol.as_str()
                        )));
                    }
                }
                if self.protocol == Protocol::Semisup {
                    if self.k_shot == 0 {
                        return Err(Error::Argument("semisup needs shots >= 1".into()));
                    }
                    if self.psi == 0 {
                        return Err(Error::Argument("semisup needs psi >= 1".into()));
                    }
                    if self.augment != AugmentChoice::None && self.pool_size == 0 {
                        return Err(Error::Argument("pool_size must be >= 1".into()));
                    }
                }
            }
            Protocol::Oneshot => {
                if self.omniglot_dir.is_none() {
                    return Err(Error::Argument(
                        "protocol oneshot requires --omniglot-dir".into(),
                    ));
                }
                if self.n_way < 2 {
                    return Err(Error::Argument("oneshot needs ways >= 2".into()));
                }
                if self.k_shot == 0 || self.k_shot >= 20 {
                    return Err(Error::Argument(
                        "oneshot needs 1 <= shots < 20 (classes hold 20 samples)".into(),
                    ));
                }
                if self.pool_size < self.k_shot {
                    return Err(Error::Argument(
                        "pool_size must be at least the shot count".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
