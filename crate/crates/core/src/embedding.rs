//! Embedding storage: the on-disk format, row normalization and per-class
//! prototype construction.
//!
//! On disk an embedding matrix is two or three files:
//!
//! * a blob of `n * d` little-endian `f32` values in row-major order,
//! * an optional label file with one integer class id per line,
//! * a JSON manifest tying them together:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "blob": "vision.f32",
//!   "n": 1000, "d": 768,
//!   "dtype": "f32le",
//!   "checksum": "sha256:…",
//!   "labels": "vision.labels",
//!   "modality": "vision"
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Similarity
//! matrices reuse the same layout with the extra `kind` / `k` fields.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32LE: &str = "f32le";

const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub blob: PathBuf,
    pub n: usize,
    pub d: usize,
    pub dtype: String,
    pub checksum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub modality: String,
    /// Kernel kind, only present for serialized similarity matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                reason: format!("unsupported format_version {}", manifest.format_version),
            });
        }
        if manifest.dtype != DTYPE_F32LE {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                reason: format!("unsupported dtype {:?}", manifest.dtype),
            });
        }
        Ok(manifest)
    }

    fn resolve(manifest_path: &Path, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(rel)
        }
    }
}

/// `sha256:<hex>` digest of a blob.
pub fn checksum(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Reads a matrix blob described by `manifest`, verifying length, checksum
/// and finiteness.
pub(crate) fn read_blob(manifest_path: &Path, manifest: &Manifest) -> Result<Array2<f32>> {
    let blob_path = Manifest::resolve(manifest_path, &manifest.blob);
    let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let expected = manifest.n * manifest.d * 4;
    if bytes.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "manifest declares {}x{} ({} bytes) but blob has {} bytes",
            manifest.n,
            manifest.d,
            expected,
            bytes.len()
        )));
    }
    let actual = checksum(&bytes);
    if actual != manifest.checksum {
        return Err(Error::Checksum {
            expected: manifest.checksum.clone(),
            actual,
        });
    }
    let mut values = Vec::with_capacity(manifest.n * manifest.d);
    for (index, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        values.push(v);
    }
    Array2::from_shape_vec((manifest.n, manifest.d), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}

pub(crate) fn blob_bytes(data: &Array2<f32>) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Dense `n x d` embedding matrix with optional per-row class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f32>,
    labels: Option<Vec<usize>>,
    modality_tag: String,
    num_classes: usize,
}

impl EmbeddingMatrix {
    pub fn new(
        data: Array2<f32>,
        labels: Option<Vec<usize>>,
        modality_tag: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = data.dim();
        if n == 0 || d == 0 {
            return Err(Error::ShapeMismatch(format!("empty embedding matrix {n}x{d}")));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let num_classes = match &labels {
            None => 0,
            Some(labels) => validate_labels(labels, n)?,
        };
        Ok(Self {
            data,
            labels,
            modality_tag: modality_tag.into(),
            num_classes,
        })
    }

    pub fn data(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn modality_tag(&self) -> &str {
        &self.modality_tag
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Number of distinct classes (0 when unlabeled).
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Row indices belonging to each class, in file order.
    pub fn class_rows(&self) -> Result<Vec<Vec<usize>>> {
        let labels = self.labels.as_ref().ok_or(Error::Unlabeled)?;
        let mut rows = vec![Vec::new(); self.num_classes];
        for (i, &c) in labels.iter().enumerate() {
            rows[c].push(i);
        }
        Ok(rows)
    }

    /// Writes blob, label file and manifest next to `manifest_path`.
    ///
    /// The blob and labels are named after the manifest stem.
    pub fn save(&self, manifest_path: &Path) -> Result<Manifest> {
        let stem = manifest_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "embeddings".into());
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let blob_name = PathBuf::from(format!("{stem}.f32"));
        let bytes = blob_bytes(&self.data);
        write_file(&dir.join(&blob_name), &bytes)?;

        let labels = match &self.labels {
            Some(labels) => {
                let name = PathBuf::from(format!("{stem}.labels"));
                let mut text = String::with_capacity(labels.len() * 3);
                for l in labels {
                    text.push_str(&l.to_string());
                    text.push('\n');
                }
                write_file(&dir.join(&name), text.as_bytes())?;
                Some(name)
            }
            None => None,
        };

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            blob: blob_name,
            n: self.rows(),
            d: self.dim(),
            dtype: DTYPE_F32LE.into(),
            checksum: checksum(&bytes),
            labels,
            modality: self.modality_tag.clone(),
            kind: None,
            k: None,
        };
        write_file(manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(manifest)
    }
}

fn validate_labels(labels: &[usize], n: usize) -> Result<usize> {
    if labels.len() != n {
        return Err(Error::InvalidLabels(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidLabels(format!(
            "class {missing} has no rows; labels must cover 0..{classes} contiguously"
        )));
    }
    Ok(classes)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(line, l)| {
            l.parse::<usize>()
                .map_err(|e| Error::InvalidLabels(format!("line {}: {e}", line + 1)))
        })
        .collect()
}

/// Loads an embedding matrix from its manifest. Rows stay in file order and
/// are not normalized.
pub fn load_embeddings(manifest_path: &Path) -> Result<EmbeddingMatrix> {
    let manifest = Manifest::read(manifest_path)?;
    let data = read_blob(manifest_path, &manifest)?;
    let labels = match &manifest.labels {
        Some(rel) => Some(read_labels(&Manifest::resolve(manifest_path, rel))?),
        None => None,
    };
    EmbeddingMatrix::new(data, labels, manifest.modality)
}

fn row_norm(row: ArrayView1<'_, f32>) -> f64 {
    row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
}

/// Divides each row by its L2 norm.
pub fn normalize_rows(e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = e.data.clone();
    for (i, (row, mut out)) in e.data.rows().into_iter().zip(data.rows_mut()).enumerate() {
        let norm = row_norm(row);
        if norm < ZERO_NORM {
            return Err(Error::ZeroRow { row: i });
        }
        out.iter_mut()
            .zip(row.iter())
            .for_each(|(o, &v)| *o = (f64::from(v) / norm) as f32);
    }
    Ok(EmbeddingMatrix {
        data,
        labels: e.labels.clone(),
        modality_tag: e.modality_tag.clone(),
        num_classes: e.num_classes,
    })
}

/// One unit-norm prototype vector per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototypes {
    pub data: Array2<f64>,
    pub class_ids: Vec<usize>,
    pub subsample_fraction: f64,
    pub seed: u64,
}

impl ClassPrototypes {
    /// Wraps already-aggregated vectors (e.g. cluster centroids), normalizing
    /// each row.
    pub fn from_rows(mut data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::ShapeMismatch("empty prototype matrix".into()));
        }
        for (i, mut row) in data.rows_mut().into_iter().enumerate() {
            let norm = row.dot(&row).sqrt();
            if !(norm >= ZERO_NORM) {
                return Err(Error::ZeroRow { row: i });
            }
            row.mapv_inplace(|v| v / norm);
        }
        let class_ids = (0..data.nrows()).collect();
        Ok(Self {
            data,
            class_ids,
            subsample_fraction: 1.0,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// Prototypes restricted to the given row positions, in that order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let data = self.data.select(ndarray::Axis(0), rows);
        Self {
            data,
            class_ids: rows.iter().map(|&r| self.class_ids[r]).collect(),
            subsample_fraction: self.subsample_fraction,
            seed: self.seed,
        }
    }
}

/// Number of rows kept when subsampling a class of `count` rows.
pub fn subsample_size(count: usize, fraction: f64) -> usize {
    ((fraction * count as f64).floor() as usize).clamp(1, count)
}

/// Per-class prototypes for every class in `e`.
pub fn class_prototypes(e: &EmbeddingMatrix, fraction: f64, seed: u64) -> Result<ClassPrototypes> {
    let classes: Vec<usize> = (0..e.num_classes()).collect();
    class_prototypes_for(e, &classes, fraction, seed)
}

/// Per-class prototypes for the listed classes, in the listed order.
///
/// Each class draws `max(1, floor(fraction * count))` rows uniformly without
/// replacement from its own ChaCha stream (stream id = class id), averages the
/// L2-normalized rows and re-normalizes the mean. The draw for a class depends
/// only on `(seed, class id)`, so selecting a subset of classes does not
/// change any individual prototype.
pub fn class_prototypes_for(
    e: &EmbeddingMatrix,
    classes: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<ClassPrototypes> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::OutOfRange(format!("fraction {fraction} not in (0, 1]")));
    }
    let rows = e.class_rows()?;
    if classes.is_empty() {
        return Err(Error::OutOfRange("no classes requested".into()));
    }
    let d = e.dim();
    let mut data = Array2::<f64>::zeros((classes.len(), d));
    for (slot, &class) in classes.iter().enumerate() {
        let members = rows
            .get(class)
            .ok_or_else(|| Error::OutOfRange(format!("class {class} does not exist")))?;
        let keep = subsample_size(members.len(), fraction);
        let mut picked: Vec<usize> = if keep == members.len() {
            members.clone()
        } else {
            let mut r = rng::substream(seed, class as u64);
            rand::seq::index::sample(&mut r, members.len(), keep)
                .into_iter()
                .map(|i| members[i])
                .collect()
        };
        // summation order must not depend on the draw order
        picked.sort_unstable();
        let mut acc = data.row_mut(slot);
        for &r in &picked {
            let row = e.data.row(r);
            let norm = row_norm(row);
            if norm < ZERO_NORM {
                return Err(Error::ZeroRow { row: r });
            }
            acc.iter_mut()
                .zip(row.iter())
                .for_each(|(a, &v)| *a += f64::from(v) / norm);
        }
        acc.mapv_inplace(|v| v / keep as f64);
        let norm = acc.dot(&acc).sqrt();
        if norm < ZERO_NORM {
            return Err(Error::ZeroRow { row: slot });
        }
        acc.mapv_inplace(|v| v / norm);
    }
    Ok(ClassPrototypes {
        data,
        class_ids: classes.to_vec(),
        subsample_fraction: fraction,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn labelled(data: Array2<f32>, labels: Vec<usize>) -> EmbeddingMatrix {
        EmbeddingMatrix::new(data, Some(labels), "test").unwrap()
    }

    #[test]
    fn normalize_345() {
        let e = EmbeddingMatrix::new(array![[3.0f32, 4.0]], None, "t").unwrap();
        let n = normalize_rows(&e).unwrap();
        assert!((n.data()[[0, 0]] - 0.6).abs() < 1e-7);
        assert!((n.data()[[0, 1]] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn normalize_scaled_basis() {
        let e = EmbeddingMatrix::new(array![[1.0f32, 0.0], [0.0, 2.0]], None, "t").unwrap();
        let n = normalize_rows(&e).unwrap();
        assert_eq!(n.data(), &array![[1.0f32, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn normalize_zero_row_reports_index() {
        let e = EmbeddingMatrix::new(array![[1.0f32, 0.0], [0.0, 0.0]], None, "t").unwrap();
        match normalize_rows(&e) {
            Err(Error::ZeroRow { row }) => assert_eq!(row, 1),
            other => panic!("expected zero-row error, got {other:?}"),
        }
    }

    #[test]
    fn labels_must_be_contiguous() {
        let err = EmbeddingMatrix::new(array![[1.0f32], [1.0]], Some(vec![0, 2]), "t");
        assert!(matches!(err, Err(Error::InvalidLabels(_))));
    }

    #[test]
    fn prototype_single_row() {
        let e = labelled(array![[1.0f32, 0.0]], vec![0]);
        let p = class_prototypes(&e, 1.0, 7).unwrap();
        assert_eq!(p.data, array![[1.0, 0.0]]);
    }

    #[test]
    fn prototype_of_two_basis_rows() {
        let e = labelled(array![[1.0f32, 0.0], [0.0, 1.0]], vec![0, 0]);
        let p = class_prototypes(&e, 1.0, 7).unwrap();
        // mean (0.5, 0.5) has norm 1/sqrt(2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.data[[0, 0]] - h).abs() < 1e-12);
        assert!((p.data[[0, 1]] - h).abs() < 1e-12);
    }

    #[test]
    fn prototypes_deterministic_and_unit_norm() {
        let mut r = rng::seeded(11);
        let data = Array2::from_shape_fn((40, 6), |_| rand::Rng::random_range(&mut r, -1.0f32..1.0));
        let labels = (0..40).map(|i| i % 4).collect();
        let e = labelled(data, labels);
        let a = class_prototypes(&e, 0.5, 3).unwrap();
        let b = class_prototypes(&e, 0.5, 3).unwrap();
        assert_eq!(a, b);
        for row in a.data.rows() {
            assert!((row.dot(&row).sqrt() - 1.0).abs() < 1e-5);
        }
        let full_a = class_prototypes(&e, 1.0, 1).unwrap();
        let full_b = class_prototypes(&e, 1.0, 99).unwrap();
        assert_eq!(full_a.data, full_b.data);
    }

    #[test]
    fn subsample_rounding() {
        assert_eq!(subsample_size(1, 0.5), 1);
        assert_eq!(subsample_size(3, 0.5), 1);
        assert_eq!(subsample_size(10, 0.5), 5);
        assert_eq!(subsample_size(10, 1.0), 10);
        assert_eq!(subsample_size(7, 0.01), 1);
    }

    #[test]
    fn unlabeled_prototypes_rejected() {
        let e = EmbeddingMatrix::new(array![[1.0f32]], None, "t").unwrap();
        assert!(matches!(class_prototypes(&e, 1.0, 0), Err(Error::Unlabeled)));
    }
}
