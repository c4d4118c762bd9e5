use movae::harness::{run_semisup, ExperimentConfig, Protocol};
use std::path::PathBuf;

fn main() {
    let root = PathBuf::from("/root/crate/data/mnist");
    let mut cfg = ExperimentConfig::new(Protocol::Semisup, 60);
    cfg.train_images = Some(root.join("train-images-idx3-ubyte"));
    cfg.train_labels = Some(root.join("train-labels-idx1-ubyte"));
    cfg.test_images = Some(root.join("t10k-images-idx3-ubyte"));
    cfg.test_labels = Some(root.join("t10k-labels-idx1-ubyte"));
    cfg.k_shot = 1;
    cfg.psi = 3000;
    cfg.max_iterations = Some(5);
    cfg.repeats = 3;
    let t = std::time::Instant::now();
    let out = run_semisup(&cfg).unwrap();
    for r in &out.record.per_repeat {
        let tr = r.trace.as_ref().unwrap();
        let path: Vec<String> = tr.iter().map(|p| format!("{}:{:.3}", p.iteration, p.accuracy)).collect();
        println!("repeat {}: {}", r.repeat, path.join(" "));
    }
    println!("mean final {:.4}, elapsed {:.0}s, timings {:?}", out.record.mean_accuracy, t.elapsed().as_secs_f64(), out.timings_ms);
}
