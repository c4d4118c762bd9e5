use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use movae::harness::{self, AugmentChoice, ExperimentConfig, Protocol, RunOutput};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "movae",
    version,
    about = "Mixture-of-VAEs classifier: supervised, semi-supervised, and one-shot episodic experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one VAE per class on the full labeled training set and evaluate.
    Supervised(RunArgs),
    /// Start from k labeled samples per class and grow by self-training over
    /// the unlabeled remainder.
    Semisup(RunArgs),
    /// N-way k-shot episodes on a PGM class tree, with a 3-NN baseline on
    /// identical data.
    Oneshot(RunArgs),
    /// Validate a PGM class tree and write a 28x28 copy of it.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key=value config file, applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,

    /// IDX training images (supervised/semisup).
    #[arg(long)]
    train_images: Option<PathBuf>,
    /// IDX training labels (supervised/semisup).
    #[arg(long)]
    train_labels: Option<PathBuf>,
    /// IDX test images (supervised/semisup).
    #[arg(long)]
    test_images: Option<PathBuf>,
    /// IDX test labels (supervised/semisup).
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Root of a <class>/<sample>.pgm tree (oneshot).
    #[arg(long)]
    omniglot_dir: Option<PathBuf>,

    /// Labeled samples per class (k-shot).
    #[arg(long)]
    shots: Option<usize>,
    /// Classes per episode (oneshot).
    #[arg(long)]
    ways: Option<usize>,
    /// Unlabeled samples considered per generalization iteration (semisup).
    #[arg(long)]
    psi: Option<usize>,
    /// Generalization iteration cap; omit to run until the pool is exhausted.
    #[arg(long)]
    iterations: Option<usize>,
    /// Augmentation policy: none, mnist, fashion, or omniglot.
    #[arg(long)]
    augment: Option<AugmentChoiceArg>,
    /// Per-class training pool size after augmentation.
    #[arg(long)]
    pool_size: Option<usize>,
    /// Inference metric: pcc or rmse.
    #[arg(long)]
    metric: Option<MetricArg>,
    /// PRNG seed (mandatory here or in the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Independent repeats; aggregates report mean and standard deviation.
    #[arg(long)]
    repeats: Option<usize>,
    /// Training epochs per (re)training pass.
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden layer width override.
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Latent dimension override.
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Mini-batch size override.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Re-draw member weights before each retraining pass.
    #[arg(long)]
    cold_restart: bool,
    /// Write the JSON metrics here (plus <out>.trace.csv for semisup).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save the final mixture checkpoint here.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Root of the input PGM class tree (28x28 or 105x105 images).
    #[arg(long)]
    omniglot_dir: PathBuf,
    /// Output directory for the converted 28x28 tree.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy)]
struct AugmentChoiceArg(AugmentChoice);

impl std::str::FromStr for AugmentChoiceArg {
    type Err = movae::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(AugmentChoiceArg)
    }
}

#[derive(Clone, Copy)]
struct MetricArg(movae::metrics::MetricKind);

impl std::str::FromStr for MetricArg {
    type Err = movae::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(MetricArg)
    }
}

fn build_config(protocol: Protocol, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::unseeded(protocol);
    if let Some(path) = &args.config {
        cfg.apply_file(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
    }
    macro_rules! override_paths {
        ($($field:ident),*) => {
            $(if args.$field.is_some() { cfg.$field = args.$field.clone(); })*
        };
    }
    override_paths!(train_images, train_labels, test_images, test_labels, omniglot_dir, out, save_model);
    if let Some(v) = args.shots {
        cfg.k_shot = v;
    }
    if let Some(v) = args.ways {
        cfg.n_way = v;
    }
    if let Some(v) = args.psi {
        cfg.psi = v;
    }
    if let Some(v) = args.iterations {
        cfg.max_iterations = Some(v);
    }
    if let Some(a) = args.augment {
        cfg.augment = a.0;
    }
    if let Some(v) = args.pool_size {
        cfg.pool_size = v;
    }
    if let Some(m) = args.metric {
        cfg.metric = m.0;
    }
    if let Some(v) = args.seed {
        cfg.seed = Some(v);
    }
    if let Some(v) = args.repeats {
        cfg.repeats = v;
    }
    if args.epochs.is_some() {
        cfg.vae.epochs = args.epochs;
    }
    if args.hidden_dim.is_some() {
        cfg.vae.hidden_dim = args.hidden_dim;
    }
    if args.latent_dim.is_some() {
        cfg.vae.latent_dim = args.latent_dim;
    }
    if args.batch_size.is_some() {
        cfg.vae.batch_size = args.batch_size;
    }
    if args.cold_restart {
        cfg.cold_restart = true;
    }
    Ok(cfg)
}

fn print_summary(output: &RunOutput) {
    let r = &output.record;
    println!(
        "protocol={} metric={} seed={} repeats={}",
        r.protocol, r.metric, r.seed, r.repeats
    );
    println!(
        "accuracy: mean {:.4} stddev {:.4}",
        r.mean_accuracy, r.stddev_accuracy
    );
    if let (Some(m), Some(s)) = (r.knn_mean_accuracy, r.knn_stddev_accuracy) {
        println!("knn-3:    mean {m:.4} stddev {s:.4}");
    }
    for repeat in &r.per_repeat {
        if let Some(trace) = &repeat.trace {
            let path: Vec<String> = trace
                .iter()
                .map(|p| format!("{}:{:.4}", p.iteration, p.accuracy))
                .collect();
            println!("repeat {} trace (iter:acc): {}", repeat.repeat, path.join(" "));
        }
    }
    let timings: Vec<String> = output
        .timings_ms
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    println!("timings_ms: {}", timings.join(" "));
}

fn real_main() -> anyhow::Result<()> {
    if let Ok(threads) = std::env::var("MOVAE_THREADS") {
        let n: usize = threads
            .parse()
            .with_context(|| format!("MOVAE_THREADS must be a positive integer, got {threads:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the thread pool")?;
    }

    let cli = Cli::parse();
    match cli.command {
        Command::Supervised(args) => {
            let cfg = build_config(Protocol::Supervised, &args)?;
            print_summary(&harness::run(&cfg)?);
        }
        Command::Semisup(args) => {
            let cfg = build_config(Protocol::Semisup, &args)?;
            print_summary(&harness::run(&cfg)?);
        }
        Command::Oneshot(args) => {
            let cfg = build_config(Protocol::Oneshot, &args)?;
            print_summary(&harness::run(&cfg)?);
        }
        Command::Convert(args) => {
            let (classes, images) = harness::convert_tree(&args.omniglot_dir, &args.out)?;
            println!(
                "converted {classes} classes / {images} images into {}",
                args.out.display()
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        let code = err
            .downcast_ref::<movae::Error>()
            .map(movae::Error::exit_code)
            .unwrap_or(1);
        std::process::exit(code);
    }
}
