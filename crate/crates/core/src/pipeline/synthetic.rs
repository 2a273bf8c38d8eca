//! Synthetic paired modalities for desk-scale experiments.
//!
//! Every class has a latent unit vector `z_c`. Each modality sees
//! `normalize(z_c + noise * e)` with independent Gaussian `e`, rotated by a
//! random orthogonal matrix of its own. Rotations leave inner products
//! unchanged, so the two modalities share geometry up to noise while their
//! coordinates are unrelated.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::qap::FactorizedQap;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub samples_per_class: usize,
    pub dim: usize,
    /// Dimension of the shared class latents, embedded into `dim`.
    pub latent_dim: usize,
    /// Expected norm of the offset between a latent and its per-modality
    /// class center.
    pub noise: f64,
    /// Expected norm of a sample's offset from its class center.
    pub spread: f64,
    /// Draw independent latents for the second modality.
    pub unrelated: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            samples_per_class: 20,
            dim: 32,
            latent_dim: 4,
            noise: 0.05,
            spread: 0.3,
            unrelated: false,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.samples_per_class == 0 || self.dim == 0 {
            return Err(Error::Config("synthetic classes, samples_per_class and dim must be positive".into()));
        }
        if self.latent_dim == 0 || self.latent_dim > self.dim {
            return Err(Error::Config(format!("synthetic latent_dim must lie in 1..={}", self.dim)));
        }
        if !(self.noise >= 0.0 && self.spread >= 0.0) {
            return Err(Error::Config("synthetic noise and spread must be nonnegative".into()));
        }
        Ok(())
    }
}

fn gaussian(rows: usize, cols: usize, r: &mut rng::Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(r))
}

fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

/// Unit-norm rows of i.i.d. standard normal entries.
pub fn unit_gaussian(rows: usize, cols: usize, r: &mut rng::Rng) -> Array2<f64> {
    let mut m = gaussian(rows, cols, r);
    normalize_rows(&mut m);
    m
}

/// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation(d: usize, r: &mut rng::Rng) -> Array2<f64> {
    let mut q = gaussian(d, d, r);
    for i in 0..d {
        for j in 0..i {
            let proj = q.row(i).dot(&q.row(j));
            let qj = q.row(j).to_owned();
            q.row_mut(i).scaled_add(-proj, &qj);
        }
        let norm = q.row(i).dot(&q.row(i)).sqrt();
        q.row_mut(i).mapv_inplace(|v| v / norm);
    }
    q
}

fn modality(latent: &Array2<f64>, cfg: &SyntheticConfig, stream: u64, tag: &str) -> Result<EmbeddingMatrix> {
    let mut r = rng::substream(cfg.seed, stream);
    let (l, d) = latent.dim();
    let per_coord = 1.0 / (d as f64).sqrt();
    let mut centers = latent + &(gaussian(l, d, &mut r) * (cfg.noise * per_coord));
    normalize_rows(&mut centers);
    let rotation = random_rotation(d, &mut r);
    let n = l * cfg.samples_per_class;
    let mut data = Array2::<f32>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for c in 0..l {
        for s in 0..cfg.samples_per_class {
            let noise = gaussian(1, d, &mut r);
            let mut v = &centers.row(c) + &(noise.row(0).to_owned() * (cfg.spread * per_coord));
            let norm = v.dot(&v).sqrt();
            v /= norm;
            let rotated = rotation.dot(&v);
            data.row_mut(c * cfg.samples_per_class + s).assign(&rotated.mapv(|x| x as f32));
            labels.push(c);
        }
    }
    EmbeddingMatrix::new(data, Some(labels), tag)
}

/// Two labelled modalities with matching class order.
pub fn generate_pair(cfg: &SyntheticConfig) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    cfg.validate()?;
    let mut r = rng::substream(cfg.seed, 0);
    let latent = |r: &mut rng::Rng| {
        let mut z = Array2::zeros((cfg.classes, cfg.dim));
        z.slice_mut(ndarray::s![.., ..cfg.latent_dim]).assign(&unit_gaussian(cfg.classes, cfg.latent_dim, r));
        z
    };
    let latent_x = latent(&mut r);
    let latent_y = if cfg.unrelated { latent(&mut r) } else { latent_x.clone() };
    Ok((modality(&latent_x, cfg, 1, "x")?, modality(&latent_y, cfg, 2, "y")?))
}

/// Inner-product QAP between two independent sets of `n` unit Gaussian
/// vectors in `d` dimensions: minimize `-sum X_ik Y_{p(i) p(k)}`.
pub fn gaussian_inner_product_qap(n: usize, d: usize, seed: u64) -> Result<FactorizedQap> {
    let mut r = rng::seeded(seed);
    let a = unit_gaussian(n, d, &mut r);
    let b = unit_gaussian(n, d, &mut r);
    let x = a.dot(&a.t());
    let y = b.dot(&b.t());
    FactorizedQap::balanced(-x, y, 1.0, 0.0)
}
