//! Within-modality similarity kernels, the pairwise distortion between two
//! kernels, and compilation of a distortion into a Koopmans-Beckmann QAP.

use std::fmt;
use std::path::Path;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{self, ClassPrototypes, Manifest, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::perm;
use crate::qap::FactorizedQap;
use crate::rng;

const SYMMETRY_TOL: f64 = 1e-6;
const DEGENERATE_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Euclidean distance between prototypes.
    GwDistance,
    /// Doubly centered, trace-normalized linear Gram matrix.
    Cka,
    /// Scaled top-k neighbour indicator.
    MutualKnn,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::GwDistance => "gw_distance",
            KernelKind::Cka => "cka",
            KernelKind::MutualKnn => "mutual_knn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gw_distance" | "gw" => Ok(KernelKind::GwDistance),
            "cka" => Ok(KernelKind::Cka),
            "mutual_knn" | "knn" => Ok(KernelKind::MutualKnn),
            other => Err(Error::Config(format!("unknown kernel kind {other:?}"))),
        }
    }

    /// The distortion that pairs with this kernel.
    pub fn default_spec(self) -> DistortionSpec {
        match self {
            KernelKind::GwDistance => DistortionSpec::SquaredDiff,
            KernelKind::Cka | KernelKind::MutualKnn => DistortionSpec::NegInner,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pairwise distortion `l(A, B) = f1(A) + f2(B) - h1(A) h2(B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionSpec {
    /// `(A - B)^2` with `f1 = A^2`, `f2 = B^2`, `h1 = 2A`, `h2 = B`.
    SquaredDiff,
    /// `-A B` with `f1 = f2 = 0`, `h1 = A`, `h2 = B`.
    NegInner,
}

impl DistortionSpec {
    pub fn name(self) -> &'static str {
        match self {
            DistortionSpec::SquaredDiff => "squared_diff",
            DistortionSpec::NegInner => "neg_inner",
        }
    }

    #[inline]
    pub fn loss(self, a: f64, b: f64) -> f64 {
        match self {
            DistortionSpec::SquaredDiff => (a - b) * (a - b),
            DistortionSpec::NegInner => -a * b,
        }
    }

    #[inline]
    pub fn f1(self, a: f64) -> f64 {
        match self {
            DistortionSpec::SquaredDiff => a * a,
            DistortionSpec::NegInner => 0.0,
        }
    }

    #[inline]
    pub fn f2(self, b: f64) -> f64 {
        self.f1(b)
    }

    #[inline]
    pub fn h1(self, a: f64) -> f64 {
        match self {
            DistortionSpec::SquaredDiff => 2.0 * a,
            DistortionSpec::NegInner => a,
        }
    }

    #[inline]
    pub fn h2(self, b: f64) -> f64 {
        b
    }

    pub fn accepts(self, kind: KernelKind) -> bool {
        matches!(
            (self, kind),
            (DistortionSpec::SquaredDiff, KernelKind::GwDistance)
                | (DistortionSpec::NegInner, KernelKind::Cka)
                | (DistortionSpec::NegInner, KernelKind::MutualKnn)
        )
    }
}

/// Dense `N x N` within-modality kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
    kind: KernelKind,
    k: Option<usize>,
}

impl SimilarityMatrix {
    pub fn new(values: Array2<f64>, kind: KernelKind, k: Option<usize>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "similarity matrix must be square and non-empty, got {:?}",
                values.dim()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, kind, k })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> f64 {
        max_asymmetry(&self.values)
    }

    /// `P M P^T` for the permutation matrix of `perm`, i.e. entry `(i, j)`
    /// becomes `M[perm[i], perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        perm::validate(perm, self.len())?;
        let values = Array2::from_shape_fn(self.values.dim(), |(i, j)| self.values[[perm[i], perm[j]]]);
        Ok(Self { values, kind: self.kind, k: self.k })
    }

    /// Copy scaled into `[0, 1]` by the largest entry; used for plotting GW
    /// shuffle curves only.
    pub fn standardized(&self) -> Self {
        let max = self.values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        let values = if max > 0.0 { self.values.mapv(|v| v / max) } else { self.values.clone() };
        Self { values, kind: self.kind, k: self.k }
    }

    /// Stores the matrix in the embedding blob format with `kind`/`k` set in
    /// the manifest.
    pub fn save(&self, manifest_path: &Path) -> Result<Manifest> {
        let stem = manifest_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "kernel".into());
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let blob = format!("{stem}.f32");
        let data = self.values.mapv(|v| v as f32);
        let bytes = embedding::blob_bytes(&data);
        embedding::write_file(&dir.join(&blob), &bytes)?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            blob: blob.into(),
            n: self.len(),
            d: self.len(),
            dtype: embedding::DTYPE_F32LE.into(),
            checksum: embedding::checksum(&bytes),
            labels: None,
            modality: String::new(),
            kind: Some(self.kind.name().into()),
            k: self.k,
        };
        embedding::write_file(manifest_path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(manifest)
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let kind = manifest.kind.as_deref().ok_or_else(|| Error::Manifest {
            path: manifest_path.to_path_buf(),
            reason: "similarity manifest lacks `kind`".into(),
        })?;
        let kind = KernelKind::parse(kind)?;
        if manifest.n != manifest.d {
            return Err(Error::ShapeMismatch(format!(
                "similarity matrix must be square, manifest says {}x{}",
                manifest.n, manifest.d
            )));
        }
        let data = embedding::read_blob(manifest_path, &manifest)?;
        Self::new(data.mapv(f64::from), kind, manifest.k)
    }
}

pub(crate) fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

fn require_pairs(p: &ClassPrototypes) -> Result<usize> {
    let n = p.len();
    if n < 2 {
        return Err(Error::OutOfRange(format!("kernel needs at least 2 prototypes, got {n}")));
    }
    Ok(n)
}

/// Pairwise Euclidean distances `||x_i - x_j||`.
pub fn gw_kernel(p: &ClassPrototypes) -> Result<SimilarityMatrix> {
    let n = require_pairs(p)?;
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let xi = p.data.row(i);
            let xj = p.data.row(j);
            let d = xi
                .iter()
                .zip(xj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    SimilarityMatrix::new(values, KernelKind::GwDistance, None)
}

/// Row `i` is `1/sqrt(N k)` on the `k` prototypes with the largest inner
/// product to `x_i` (self excluded, ties broken by ascending index).
pub fn mutual_knn_kernel(p: &ClassPrototypes, k: usize) -> Result<SimilarityMatrix> {
    let n = require_pairs(p)?;
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("k = {k} must lie in 1..={}", n - 1)));
    }
    let gram = p.data.dot(&p.data.t());
    let weight = 1.0 / ((n * k) as f64).sqrt();
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| gram[[i, b]].total_cmp(&gram[[i, a]]).then(a.cmp(&b)));
        for &j in &order[..k] {
            values[[i, j]] = weight;
        }
    }
    SimilarityMatrix::new(values, KernelKind::MutualKnn, Some(k))
}

/// `C K C / sqrt(tr(K C K C))` for the linear Gram `K` and centering `C`.
///
/// The Frobenius inner product of two such matrices is the linear CKA of the
/// underlying Grams, and each has unit Frobenius norm.
pub fn cka_kernel(p: &ClassPrototypes) -> Result<SimilarityMatrix> {
    let n = require_pairs(p)?;
    let gram = p.data.dot(&p.data.t());
    let centered = double_center(&gram);
    // tr(K C K C) = ||C K C||_F^2 since C is idempotent and K symmetric
    let trace: f64 = centered.iter().map(|v| v * v).sum();
    if trace <= DEGENERATE_TRACE {
        return Err(Error::SingularKernel { trace });
    }
    let scale = trace.sqrt();
    let mut values = centered.mapv(|v| v / scale);
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (values[[i, j]] + values[[j, i]]);
            values[[i, j]] = m;
            values[[j, i]] = m;
        }
    }
    SimilarityMatrix::new(values, KernelKind::Cka, None)
}

fn double_center(m: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows() as f64;
    let row_means = m.mean_axis(Axis(1)).expect("non-empty");
    let col_means = m.mean_axis(Axis(0)).expect("non-empty");
    let grand = row_means.sum() / n;
    Array2::from_shape_fn(m.dim(), |(i, j)| m[[i, j]] - row_means[i] - col_means[j] + grand)
}

fn check_pair(x: &SimilarityMatrix, y: &SimilarityMatrix, spec: DistortionSpec) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "kernels have sizes {} and {}",
            x.len(),
            y.len()
        )));
    }
    for m in [x, y] {
        if !spec.accepts(m.kind) {
            return Err(Error::KindMismatch { kernel: m.kind.name(), spec: spec.name() });
        }
    }
    if x.kind != y.kind {
        return Err(Error::KindMismatch { kernel: y.kind.name(), spec: spec.name() });
    }
    Ok(x.len())
}

/// `sum_ij l(X_ij, Y_{perm(i) perm(j)})`.
pub fn distortion(
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
    spec: DistortionSpec,
    perm: &[usize],
) -> Result<f64> {
    let n = check_pair(x, y, spec)?;
    perm::validate(perm, n)?;
    Ok(distortion_unchecked(&x.values, &y.values, spec, perm))
}

pub(crate) fn distortion_unchecked(
    x: &Array2<f64>,
    y: &Array2<f64>,
    spec: DistortionSpec,
    perm: &[usize],
) -> f64 {
    let n = x.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            total += spec.loss(x[[i, j]], y[[pi, perm[j]]]);
        }
    }
    total
}

/// One point of a shuffle curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShufflePoint {
    pub alpha: f64,
    pub mean: f64,
    pub std: f64,
}

/// `count` equidistant levels from 0 to 1 inclusive.
pub fn equidistant_levels(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// Mean and (population) standard deviation of the distortion under partial
/// shuffles: at level `alpha`, `floor(alpha N)` uniformly chosen entries are
/// permuted uniformly among themselves and the rest stay fixed.
///
/// Sample `s` draws from ChaCha stream `(seed + s, 0)` at every level, so its
/// moved sets are nested across levels and the result does not depend on
/// thread scheduling.
pub fn shuffle_curve(
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
    spec: DistortionSpec,
    levels: &[f64],
    n_seeds: usize,
    seed: u64,
) -> Result<Vec<ShufflePoint>> {
    let n = check_pair(x, y, spec)?;
    if n_seeds == 0 {
        return Err(Error::OutOfRange("n_seeds must be at least 1".into()));
    }
    if let Some(bad) = levels.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::OutOfRange(format!("shuffle level {bad} outside [0, 1]")));
    }
    levels
        .iter()
        .map(|&alpha| {
            let moved = (alpha * n as f64).floor() as usize;
            let samples: Vec<f64> = (0..n_seeds)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng::substream(seed.wrapping_add(s as u64), 0);
                    let p = perm::partial_shuffle(n, moved, &mut r);
                    distortion_unchecked(&x.values, &y.values, spec, &p)
                })
                .collect();
            let mean = samples.iter().sum::<f64>() / n_seeds as f64;
            let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_seeds as f64;
            Ok(ShufflePoint { alpha, mean, std: var.sqrt() })
        })
        .collect()
}

/// Compiles `min_perm D_l(X, Y; perm)` into a Koopmans-Beckmann QAP with
/// `C1 = -h1(X)` and `C2 = h2(Y)`, in the balanced square form of
/// [`FactorizedQap::balanced`].
///
/// Mutual k-NN kernels are used as given, asymmetry included; for the other
/// kinds an asymmetry above `1e-6` is an error and the rest is symmetrized.
pub fn to_qap(x: &SimilarityMatrix, y: &SimilarityMatrix, spec: DistortionSpec) -> Result<FactorizedQap> {
    let n = check_pair(x, y, spec)?;
    let (xv, yv) = match x.kind {
        KernelKind::MutualKnn => (x.values.clone(), y.values.clone()),
        _ => {
            let deviation = x.asymmetry().max(y.asymmetry());
            if deviation > SYMMETRY_TOL {
                return Err(Error::Asymmetric { deviation });
            }
            (symmetrize(&x.values), symmetrize(&y.values))
        }
    };
    let mut constant = 0.0;
    for i in 0..n {
        for j in 0..n {
            constant += spec.f1(xv[[i, j]]) + spec.f2(yv[[i, j]]);
        }
    }
    let c1 = xv.mapv(|a| -spec.h1(a));
    let c2 = yv.mapv(|b| spec.h2(b));
    FactorizedQap::balanced(c1, c2, 1.0, constant)
}

fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn(m.dim(), |(i, j)| 0.5 * (m[[i, j]] + m[[j, i]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn protos(rows: Array2<f64>) -> ClassPrototypes {
        ClassPrototypes::from_rows(rows).unwrap()
    }

    fn random_protos(n: usize, d: usize, seed: u64) -> ClassPrototypes {
        let mut r = rng::seeded(seed);
        protos(Array2::from_shape_fn((n, d), |_| r.random_range(-1.0..1.0)))
    }

    #[test]
    fn gw_identical_rows() {
        let k = gw_kernel(&protos(array![[1.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(k.values(), &array![[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn gw_orthogonal_and_antipodal() {
        let k = gw_kernel(&protos(array![[1.0, 0.0], [0.0, 1.0]])).unwrap();
        assert!((k.values()[[0, 1]] - 2f64.sqrt()).abs() < 1e-12);
        let k = gw_kernel(&protos(array![[1.0, 0.0], [-1.0, 0.0]])).unwrap();
        assert!((k.values()[[1, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn knn_picks_nearest() {
        // <x0,x1> = 0.8, <x0,x2> = 0, <x1,x2> = 0.6
        let p = protos(array![[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]]);
        let k = mutual_knn_kernel(&p, 1).unwrap();
        let w = 1.0 / 3f64.sqrt();
        assert_eq!(k.values().row(0).to_vec(), vec![0.0, w, 0.0]);
        assert_eq!(k.values().row(1).to_vec(), vec![w, 0.0, 0.0]);
        assert_eq!(k.values().row(2).to_vec(), vec![0.0, w, 0.0]);
    }

    #[test]
    fn knn_full_neighbourhood() {
        let p = random_protos(5, 3, 2);
        let k = mutual_knn_kernel(&p, 4).unwrap();
        let w = 1.0 / 20f64.sqrt();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 0.0 } else { w };
                assert_eq!(k.values()[[i, j]], expect);
            }
        }
    }

    #[test]
    fn knn_rejects_bad_k() {
        let p = random_protos(4, 3, 2);
        assert!(matches!(mutual_knn_kernel(&p, 0), Err(Error::OutOfRange(_))));
        assert!(matches!(mutual_knn_kernel(&p, 4), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn knn_ties_break_by_index() {
        // rows 1 and 2 are identical, so both tie for row 0
        let p = protos(array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]);
        let k = mutual_knn_kernel(&p, 1).unwrap();
        assert!(k.values()[[0, 1]] > 0.0);
        assert_eq!(k.values()[[0, 2]], 0.0);
    }

    #[test]
    fn cka_self_similarity_is_one() {
        for seed in 0..10 {
            let k = cka_kernel(&random_protos(7, 5, seed)).unwrap();
            let s: f64 = k.values().iter().map(|v| v * v).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cka_degenerate() {
        let p = protos(array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(cka_kernel(&p), Err(Error::SingularKernel { .. })));
    }

    #[test]
    fn cka_matches_trace_formula() {
        for seed in 0..10 {
            let a = random_protos(6, 4, seed);
            let b = random_protos(6, 9, seed + 100);
            let ka = cka_kernel(&a).unwrap();
            let kb = cka_kernel(&b).unwrap();
            let ours: f64 = ka.values().iter().zip(kb.values().iter()).map(|(x, y)| x * y).sum();

            // direct evaluation: tr(K C L C) / sqrt(tr(K C K C) tr(L C L C))
            let n = 6;
            let c = Array2::from_shape_fn((n, n), |(i, j)| {
                if i == j { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 }
            });
            let k = a.data.dot(&a.data.t());
            let l = b.data.dot(&b.data.t());
            let tr = |m: Array2<f64>| m.diag().sum();
            let num = tr(k.dot(&c).dot(&l).dot(&c));
            let den = (tr(k.dot(&c).dot(&k).dot(&c)) * tr(l.dot(&c).dot(&l).dot(&c))).sqrt();
            let direct = num / den;
            assert!((ours - direct).abs() < 1e-9, "{ours} vs {direct}");
            assert!((-1.0..=1.0).contains(&ours));
        }
    }

    #[test]
    fn decomposition_identity() {
        let mut r = rng::seeded(5);
        for spec in [DistortionSpec::SquaredDiff, DistortionSpec::NegInner] {
            for _ in 0..1000 {
                let a: f64 = r.random_range(-3.0..3.0);
                let b: f64 = r.random_range(-3.0..3.0);
                let lhs = spec.loss(a, b);
                let rhs = spec.f1(a) + spec.f2(b) - spec.h1(a) * spec.h2(b);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distortion_identity_is_zero_for_equal_gw() {
        let k = gw_kernel(&random_protos(5, 3, 1)).unwrap();
        let d = distortion(&k, &k, DistortionSpec::SquaredDiff, &perm::identity(5)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn knn_self_distortion() {
        let p = protos(array![[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]]);
        let k = mutual_knn_kernel(&p, 1).unwrap();
        let d = distortion(&k, &k, DistortionSpec::NegInner, &perm::identity(3)).unwrap();
        // three nonzero entries of (1/sqrt 3)^2
        assert!((d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_rejects_mismatches() {
        let g = gw_kernel(&random_protos(4, 3, 1)).unwrap();
        let c = cka_kernel(&random_protos(4, 3, 2)).unwrap();
        let g5 = gw_kernel(&random_protos(5, 3, 1)).unwrap();
        let id = perm::identity(4);
        assert!(matches!(distortion(&g, &g5, DistortionSpec::SquaredDiff, &id), Err(Error::ShapeMismatch(_))));
        assert!(matches!(distortion(&g, &g, DistortionSpec::NegInner, &id), Err(Error::KindMismatch { .. })));
        assert!(matches!(distortion(&g, &c, DistortionSpec::SquaredDiff, &id), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn shuffle_zero_level_has_no_spread() {
        let x = gw_kernel(&random_protos(8, 4, 1)).unwrap();
        let y = gw_kernel(&random_protos(8, 4, 2)).unwrap();
        let base = distortion(&x, &y, DistortionSpec::SquaredDiff, &perm::identity(8)).unwrap();
        // floor(0.1 * 8) = 0 and floor(0.2 * 8) = 1 both leave the identity
        let curve = shuffle_curve(&x, &y, DistortionSpec::SquaredDiff, &[0.0, 0.1, 0.2], 20, 0).unwrap();
        for pt in curve {
            assert_eq!(pt.mean, base);
            assert_eq!(pt.std, 0.0);
        }
    }

    #[test]
    fn shuffle_rejects_bad_levels() {
        let x = gw_kernel(&random_protos(4, 3, 1)).unwrap();
        assert!(shuffle_curve(&x, &x, DistortionSpec::SquaredDiff, &[1.5], 2, 0).is_err());
        assert!(shuffle_curve(&x, &x, DistortionSpec::SquaredDiff, &[0.5], 0, 0).is_err());
    }

    #[test]
    fn equidistant_grid() {
        let l = equidistant_levels(21);
        assert_eq!(l.len(), 21);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[20], 1.0);
        assert!((l[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn to_qap_rejects_asymmetric_gw() {
        let mut v = gw_kernel(&random_protos(4, 3, 1)).unwrap().values().clone();
        v[[0, 1]] += 1e-3;
        let x = SimilarityMatrix::new(v, KernelKind::GwDistance, None).unwrap();
        assert!(matches!(to_qap(&x, &x, DistortionSpec::SquaredDiff), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn similarity_roundtrip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let k = mutual_knn_kernel(&random_protos(6, 3, 4), 2).unwrap();
        let path = dir.path().join("knn.json");
        k.save(&path).unwrap();
        let back = SimilarityMatrix::load(&path).unwrap();
        assert_eq!(back.kind(), KernelKind::MutualKnn);
        assert_eq!(back.k(), Some(2));
        for (a, b) in back.values().iter().zip(k.values().iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }
}
