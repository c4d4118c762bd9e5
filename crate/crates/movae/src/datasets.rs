//! Dataset ingestion: IDX image/label pairs, PGM directory trees, box-filter
//! downsampling, labeled/unlabeled splits, and N-way k-shot episodes.
//!
//! File formats:
//! - IDX: big-endian; image magic `0x00000803`, label magic `0x00000801`,
//!   dimensions as 32-bit big-endian, pixels as unsigned bytes.
//! - PGM: ASCII `P5`, whitespace-separated width/height/maxval (≤ 255), one
//!   whitespace byte, then raw bytes. Tree layout: `<root>/<class>/<file>.pgm`.

use crate::generalize::UnlabeledPool;
use crate::numerics::Prng;
use crate::{Error, Image, Result};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Images with parallel class labels and a label → sample-index map.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    images: Vec<Image>,
    labels: Vec<String>,
    image_dims: (usize, usize),
    class_index: BTreeMap<String, Vec<usize>>,
}

impl LabeledDataset {
    /// Build and validate a dataset. Pixels must lie in `[0, 1]` and every
    /// image must match `image_dims`.
    pub fn new(images: Vec<Image>, labels: Vec<String>, image_dims: (usize, usize)) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let expected = image_dims.0 * image_dims.1;
        for (i, img) in images.iter().enumerate() {
            if img.len() != expected {
                return Err(Error::Dimension {
                    context: "dataset image length",
                    expected,
                    got: img.len(),
                });
            }
            if img.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!("image {i} has pixels outside [0, 1]")));
            }
        }
        let mut class_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            class_index.entry(label.clone()).or_default().push(i);
        }
        Ok(LabeledDataset {
            images,
            labels,
            image_dims,
            class_index,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.image_dims
    }

    /// Class labels in ascending order.
    pub fn class_labels(&self) -> Vec<String> {
        self.class_index.keys().cloned().collect()
    }

    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    /// Sample indices belonging to `label` (ascending).
    pub fn class_samples(&self, label: &str) -> &[usize] {
        self.class_index.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    fn from_indices(&self, indices: &[usize]) -> Result<LabeledDataset> {
        LabeledDataset::new(
            indices.iter().map(|&i| self.images[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i].clone()).collect(),
            self.image_dims,
        )
    }

    /// Decompose into `(images, labels, image_dims)`.
    pub fn into_parts(self) -> (Vec<Image>, Vec<String>, (usize, usize)) {
        (self.images, self.labels, self.image_dims)
    }
}

fn read_be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Io(format!("file truncated while reading {what}")));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Load a big-endian IDX image/label file pair. Pixel bytes are divided by
/// 255 so intensities land in `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let image_bytes = fs::read(images_path)?;
    let label_bytes = fs::read(labels_path)?;

    let magic = read_be_u32(&image_bytes, 0, "image magic")?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
        )));
    }
    let count = read_be_u32(&image_bytes, 4, "image count")? as usize;
    let rows = read_be_u32(&image_bytes, 8, "image rows")? as usize;
    let cols = read_be_u32(&image_bytes, 12, "image cols")? as usize;
    let pixels = rows * cols;
    if image_bytes.len() < 16 + count * pixels {
        return Err(Error::Io(format!(
            "image file truncated: header promises {count} images of {pixels} bytes"
        )));
    }

    let label_magic = read_be_u32(&label_bytes, 0, "label magic")?;
    if label_magic != IDX_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic 0x{label_magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
        )));
    }
    let label_count = read_be_u32(&label_bytes, 4, "label count")? as usize;
    if label_count != count {
        return Err(Error::Consistency(format!(
            "image file has {count} samples but label file has {label_count}"
        )));
    }
    if label_bytes.len() < 8 + count {
        return Err(Error::Io("label file truncated".into()));
    }

    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * pixels;
        images.push(
            image_bytes[start..start + pixels]
                .iter()
                .map(|&b| b as f32 / 255.0)
                .collect(),
        );
    }
    let labels = label_bytes[8..8 + count]
        .iter()
        .map(|b| b.to_string())
        .collect();
    LabeledDataset::new(images, labels, (rows, cols))
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Image)> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!(
                "{}: missing {what} in PGM header",
                path.display()
            )));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token("magic")?;
    if magic != "P5" {
        return Err(Error::Format(format!(
            "{}: not a binary PGM (magic {magic:?}, expected \"P5\")",
            path.display()
        )));
    }
    let width: usize = token("width")?
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad PGM width", path.display())))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad PGM height", path.display())))?;
    let maxval: usize = token("maxval")?
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad PGM maxval", path.display())))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "{}: PGM maxval {maxval} outside 1..=255",
            path.display()
        )));
    }
    // Single whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(Error::Io(format!(
            "{}: truncated PGM raster ({} of {need} bytes)",
            path.display(),
            bytes.len().saturating_sub(pos)
        )));
    }
    let mut img: Image = bytes[pos..pos + need]
        .iter()
        .map(|&b| b as f32 / maxval as f32)
        .collect();

    // Strokes should read as high intensity; invert images whose background
    // (the majority of pixels) is bright.
    let mean: f32 = img.iter().sum::<f32>() / need as f32;
    if mean > 0.5 {
        for v in &mut img {
            *v = 1.0 - *v;
        }
    }
    Ok((height, width, img))
}

/// Load one binary PGM file, returning `(height, width, image)` with the
/// same normalization and ink-inversion rules as [`load_pgm_tree`].
pub fn load_pgm_file(path: &Path) -> Result<(usize, usize, Image)> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes, path)
}

/// Load a `<root>/<class>/<sample>.pgm` tree. One class per subdirectory in
/// sorted name order; all images must share one size.
pub fn load_pgm_tree(root: &Path) -> Result<LabeledDataset> {
    let mut class_dirs: Vec<_> = fs::read_dir(root)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Argument(format!(
            "{}: no class subdirectories",
            root.display()
        )));
    }

    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for dir in &class_dirs {
        let class = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<_> = fs::read_dir(dir)?
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
            let bytes = fs::read(&file)?;
            let (h, w, img) = parse_pgm(&bytes, &file)?;
            match dims {
                None => dims = Some((h, w)),
                Some(d) if d != (h, w) => {
                    return Err(Error::Consistency(format!(
                        "{}: image size {h}x{w} differs from {}x{} used elsewhere",
                        file.display(),
                        d.0,
                        d.1
                    )))
                }
                _ => {}
            }
            images.push(img);
            labels.push(class.clone());
        }
    }
    LabeledDataset::new(images, labels, dims.unwrap())
}

/// Write one grayscale image as binary PGM with maxval 255.
pub fn write_pgm(path: &Path, height: usize, width: usize, image: &[f32]) -> Result<()> {
    if image.len() != height * width {
        return Err(Error::Dimension {
            context: "pgm image length",
            expected: height * width,
            got: image.len(),
        });
    }
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(image.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, bytes)?;
    Ok(())
}

/// Area-average (box filter) resample from `(src_h, src_w)` to `(dst_h, dst_w)`.
fn area_resample(src: &[f32], src_h: usize, src_w: usize, dst_h: usize, dst_w: usize) -> Image {
    let sy = src_h as f64 / dst_h as f64;
    let sx = src_w as f64 / dst_w as f64;
    let mut out = vec![0.0f32; dst_h * dst_w];
    for oy in 0..dst_h {
        let y0 = oy as f64 * sy;
        let y1 = y0 + sy;
        for ox in 0..dst_w {
            let x0 = ox as f64 * sx;
            let x1 = x0 + sx;
            let mut acc = 0.0f64;
            for iy in y0.floor() as usize..(y1.ceil() as usize).min(src_h) {
                let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                for ix in x0.floor() as usize..(x1.ceil() as usize).min(src_w) {
                    let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                    acc += wy * wx * src[iy * src_w + ix] as f64;
                }
            }
            out[oy * dst_w + ox] = (acc / (sx * sy)) as f32;
        }
    }
    out
}

/// Box-filter a 105×105 image down to 28×28.
pub fn downsample(image: &[f32]) -> Result<Image> {
    if image.len() != 105 * 105 {
        return Err(Error::Dimension {
            context: "downsample input",
            expected: 105 * 105,
            got: image.len(),
        });
    }
    Ok(area_resample(image, 105, 105, 28, 28))
}

/// Split off exactly `k_per_class` labeled samples per class (uniformly,
/// without replacement); everything else becomes the unlabeled pool with its
/// labels discarded.
pub fn split_labeled_unlabeled(
    dataset: &LabeledDataset,
    k_per_class: usize,
    prng: &mut Prng,
) -> Result<(LabeledDataset, UnlabeledPool)> {
    if k_per_class == 0 {
        return Err(Error::Argument("k_per_class must be at least 1".into()));
    }
    let mut chosen = vec![false; dataset.len()];
    let mut labeled_indices = Vec::new();
    for label in dataset.class_labels() {
        let members = dataset.class_samples(&label);
        if members.len() < k_per_class {
            return Err(Error::Argument(format!(
                "class {label:?} has only {} samples, need {k_per_class}",
                members.len()
            )));
        }
        let mut picks = prng.sample_indices(members.len(), k_per_class);
        picks.sort_unstable();
        for p in picks {
            chosen[members[p]] = true;
            labeled_indices.push(members[p]);
        }
    }
    let labeled = dataset.from_indices(&labeled_indices)?;
    let pool_images: Vec<Image> = (0..dataset.len())
        .filter(|&i| !chosen[i])
        .map(|i| dataset.images[i].clone())
        .collect();
    Ok((labeled, UnlabeledPool::new(pool_images)))
}

/// Shape of one N-way k-shot evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSpec {
    pub n_way: usize,
    pub k_shot: usize,
    /// Held-out samples per class (19 for 1-shot, 15 for 5-shot when classes
    /// hold 20 samples).
    pub test_per_class: usize,
}

impl EpisodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::Argument("episodes need n_way >= 2".into()));
        }
        if self.k_shot == 0 || self.test_per_class == 0 {
            return Err(Error::Argument(
                "episodes need k_shot >= 1 and test_per_class >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draw one episode: `n_way` classes without replacement, then per class
/// `k_shot` train and `test_per_class` disjoint test samples.
pub fn sample_episode(
    dataset: &LabeledDataset,
    spec: &EpisodeSpec,
    prng: &mut Prng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let classes = dataset.class_labels();
    if classes.len() < spec.n_way {
        return Err(Error::Argument(format!(
            "dataset has {} classes, episode needs {}",
            classes.len(),
            spec.n_way
        )));
    }
    let class_picks = prng.sample_indices(classes.len(), spec.n_way);
    let per_class = spec.k_shot + spec.test_per_class;
    let mut train_indices = Vec::with_capacity(spec.n_way * spec.k_shot);
    let mut test_indices = Vec::with_capacity(spec.n_way * spec.test_per_class);
    for &c in &class_picks {
        let members = dataset.class_samples(&classes[c]);
        if members.len() < per_class {
            return Err(Error::Argument(format!(
                "class {:?} has only {} samples, episode needs {per_class}",
                classes[c],
                members.len()
            )));
        }
        let picks = prng.sample_indices(members.len(), per_class);
        for (j, &p) in picks.iter().enumerate() {
            if j < spec.k_shot {
                train_indices.push(members[p]);
            } else {
                test_indices.push(members[p]);
            }
        }
    }
    Ok((
        dataset.from_indices(&train_indices)?,
        dataset.from_indices(&test_indices)?,
    ))
}
