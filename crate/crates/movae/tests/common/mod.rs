#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

/// Dataset root: `$MOVAE_DATA_DIR` or `<workspace>/data`.
pub fn data_dir() -> PathBuf {
    match std::env::var("MOVAE_DATA_DIR") {
        Ok(dir) => PathBuf::from(dir),
        Err(_) => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
    }
}

pub struct MnistPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

/// Locate the MNIST IDX files or fail with staging instructions.
pub fn require_mnist() -> MnistPaths {
    let root = data_dir().join("mnist");
    let paths = MnistPaths {
        train_images: root.join("train-images-idx3-ubyte"),
        train_labels: root.join("train-labels-idx1-ubyte"),
        test_images: root.join("t10k-images-idx3-ubyte"),
        test_labels: root.join("t10k-labels-idx1-ubyte"),
    };
    for p in [
        &paths.train_images,
        &paths.train_labels,
        &paths.test_images,
        &paths.test_labels,
    ] {
        assert!(
            p.exists(),
            "MNIST file {} is missing; run scripts/fetch_mnist.sh or set MOVAE_DATA_DIR",
            p.display()
        );
    }
    paths
}

/// Location of the 28x28 handwritten-character PGM tree used by the episodic
/// suites (prepare it with `movae convert`; see the README).
pub fn omniglot_tree() -> PathBuf {
    data_dir().join("omniglot-pgm")
}

/// Byte-level IDX pair writer (big-endian headers, raw u8 pixels).
pub fn write_idx(
    img_path: &Path,
    lbl_path: &Path,
    images: &[Vec<u8>],
    labels: &[u8],
    rows: u32,
    cols: u32,
) {
    assert_eq!(images.len(), labels.len());
    let mut img_bytes = Vec::new();
    img_bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    img_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_bytes.extend_from_slice(&rows.to_be_bytes());
    img_bytes.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        assert_eq!(img.len(), (rows * cols) as usize);
        img_bytes.extend_from_slice(img);
    }
    let mut lbl_bytes = Vec::new();
    lbl_bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    lbl_bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl_bytes.extend_from_slice(labels);
    fs::write(img_path, img_bytes).unwrap();
    fs::write(lbl_path, lbl_bytes).unwrap();
}

/// Parse an IDX image/label pair at the byte level (independent of the
/// library loader) into `(images, labels, rows, cols)`.
pub fn read_idx_raw(img_path: &Path, lbl_path: &Path) -> (Vec<Vec<u8>>, Vec<u8>, u32, u32) {
    let img = fs::read(img_path).unwrap();
    let lbl = fs::read(lbl_path).unwrap();
    let be = |b: &[u8], o: usize| u32::from_be_bytes(b[o..o + 4].try_into().unwrap());
    assert_eq!(be(&img, 0), 0x0000_0803);
    assert_eq!(be(&lbl, 0), 0x0000_0801);
    let count = be(&img, 4) as usize;
    let rows = be(&img, 8);
    let cols = be(&img, 12);
    let px = (rows * cols) as usize;
    let images = (0..count)
        .map(|i| img[16 + i * px..16 + (i + 1) * px].to_vec())
        .collect();
    let labels = lbl[8..8 + count].to_vec();
    (images, labels, rows, cols)
}

/// Write an IDX pair holding the first `per_class` training samples of every
/// MNIST class, cached under the test tmpdir. Returns the pair's paths.
pub fn mnist_subset_idx(per_class: usize) -> (PathBuf, PathBuf) {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("mnist-subset-{per_class}"));
    let img_path = dir.join("images-idx3-ubyte");
    let lbl_path = dir.join("labels-idx1-ubyte");
    if img_path.exists() && lbl_path.exists() {
        return (img_path, lbl_path);
    }
    fs::create_dir_all(&dir).unwrap();

    let mnist = require_mnist();
    let (images, labels, rows, cols) = read_idx_raw(&mnist.train_images, &mnist.train_labels);
    let mut taken = [0usize; 10];
    let mut sub_images = Vec::new();
    let mut sub_labels = Vec::new();
    for (img, &label) in images.iter().zip(&labels) {
        let c = label as usize;
        if taken[c] < per_class {
            taken[c] += 1;
            sub_images.push(img.clone());
            sub_labels.push(label);
        }
    }
    assert!(taken.iter().all(|&t| t == per_class), "class counts {taken:?}");
    write_idx(&img_path, &lbl_path, &sub_images, &sub_labels, rows, cols);
    (img_path, lbl_path)
}
