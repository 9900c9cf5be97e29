//! IDX dataset ingestion, normalisation and seeded balanced subsetting.
//!
//! Expected layout of a dataset directory (uncompressed IDX files):
//!
//! ```text
//! train-images-idx3-ubyte  train-labels-idx1-ubyte
//! t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte
//! ```
//!
//! SHA-256 of the official MNIST files:
//!
//! | file | sha256 |
//! |------|--------|
//! | train-images-idx3-ubyte | `ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db` |
//! | train-labels-idx1-ubyte | `65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5` |
//! | t10k-images-idx3-ubyte  | `0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7` |
//! | t10k-labels-idx1-ubyte  | `ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2` |

mod idx;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conv::Image;
use crate::error::{Error, Result};

pub use idx::{read_idx_images, read_idx_labels, IMAGES_MAGIC, LABELS_MAGIC};

pub const N_CLASSES: usize = 10;

/// Where a split came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub images_sha256: String,
    pub labels_sha256: String,
    pub subset_seed: Option<u64>,
    pub per_class: Option<usize>,
}

/// Labelled grey-scale images. Pixels are kept as raw bytes and normalised
/// to `[0, 1]` by dividing by 255 on access.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
    source_indices: Vec<usize>,
    provenance: Provenance,
}

impl DatasetSplit {
    pub fn from_raw(
        rows: usize,
        cols: usize,
        pixels: Vec<u8>,
        labels: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self> {
        if pixels.len() != labels.len() * rows * cols {
            return Err(Error::Data(format!(
                "{} labels need {} pixels, got {}",
                labels.len(),
                labels.len() * rows * cols,
                pixels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l as usize >= N_CLASSES) {
            return Err(Error::Data(format!("label {l} outside 0..{N_CLASSES}")));
        }
        let source_indices = (0..labels.len()).collect();
        Ok(DatasetSplit {
            rows,
            cols,
            pixels,
            labels,
            source_indices,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn raw_pixels(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Image `i` normalised to `[0, 1]`.
    pub fn image(&self, i: usize) -> Image {
        let values = self.raw_pixels(i).iter().map(|&b| b as f64 / 255.0).collect();
        Image::image(self.rows, self.cols, values).expect("shape fixed at construction")
    }

    /// Indices into the file this split was loaded from.
    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    fn select(&self, indices: &[usize]) -> DatasetSplit {
        let n = self.rows * self.cols;
        let mut pixels = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            pixels.extend_from_slice(self.raw_pixels(i));
        }
        DatasetSplit {
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            source_indices: indices.iter().map(|&i| self.source_indices[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Parses an IDX image file and its label file into a split.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<DatasetSplit> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.count != labels.labels.len() {
        return Err(Error::Ingestion {
            path: labels_path.to_path_buf(),
            offset: 4,
            message: format!(
                "label count {} does not match image count {} in {}",
                labels.labels.len(),
                images.count,
                images_path.display()
            ),
        });
    }
    if let Some(pos) = labels.labels.iter().position(|&l| l as usize >= N_CLASSES) {
        return Err(Error::Ingestion {
            path: labels_path.to_path_buf(),
            offset: 8 + pos as u64,
            message: format!("label {} outside 0..{N_CLASSES}", labels.labels[pos]),
        });
    }
    DatasetSplit::from_raw(
        images.rows,
        images.cols,
        images.pixels,
        labels.labels,
        Provenance {
            images_sha256: images.sha256,
            labels_sha256: labels.sha256,
            subset_seed: None,
            per_class: None,
        },
    )
}

/// Exactly `per_class` samples of every class, chosen by a seeded shuffle of
/// each class's index list (classes shuffled in order 0..9 from one stream).
/// The result keeps the source order.
pub fn balanced_subset(split: &DatasetSplit, per_class: usize, seed: u64) -> Result<DatasetSplit> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); N_CLASSES];
    for (i, &l) in split.labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(per_class * N_CLASSES);
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < per_class {
            return Err(Error::Ingestion {
                path: Default::default(),
                offset: 0,
                message: format!(
                    "class {class} has {} samples, {per_class} requested",
                    idx.len()
                ),
            });
        }
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..per_class]);
    }
    chosen.sort_unstable();
    let mut out = split.select(&chosen);
    out.provenance.subset_seed = Some(seed);
    out.provenance.per_class = Some(per_class);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetId {
    #[serde(rename = "mnist")]
    Mnist,
    #[serde(rename = "fashion-mnist")]
    FashionMnist,
}

impl DatasetId {
    pub fn name(self) -> &'static str {
        match self {
            DatasetId::Mnist => "mnist",
            DatasetId::FashionMnist => "fashion-mnist",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DatasetId::Mnist => "MNIST",
            DatasetId::FashionMnist => "Fashion-MNIST",
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mnist" => Ok(DatasetId::Mnist),
            "fashion-mnist" | "fashion" | "fmnist" => Ok(DatasetId::FashionMnist),
            other => Err(Error::Config(format!(
                "unknown dataset `{other}` (expected mnist or fashion-mnist)"
            ))),
        }
    }
}

/// Loads the train and test splits from a dataset directory.
pub fn load_dir(dir: &Path) -> Result<(DatasetSplit, DatasetSplit)> {
    let train = load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    Ok((train, test))
}
