//! Stand-in embeddings for generator truncation sweeps.
//!
//! A file at truncation `psi` holds draws of
//! `c + psi * R diag(j^(-s/2)) z + (1 - psi) * delta` with `z` standard
//! normal. `R`, `c` and `delta` depend only on the rotation seed, so files
//! produced with the same seed share one embedding space. Smaller `psi`
//! means less spread and a larger offset from the reference.

use prdkit_core::density::DensityModel;
use prdkit_core::linalg::{sym_eig, Matrix};
use prdkit_core::{RngStream, SampleSet};

use crate::error::{Context, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub n: usize,
    pub d: usize,
    /// Decay exponent of the per-axis variance `j^(-spectrum)`.
    pub spectrum: f64,
    /// Length of the offset `delta`.
    pub offset: f64,
    pub rotation_seed: u64,
    pub sample_seed: u64,
}

impl SurrogateConfig {
    pub fn new(n: usize, d: usize) -> Self {
        SurrogateConfig { n, d, spectrum: 1.0, offset: 1.0, rotation_seed: 0, sample_seed: 1 }
    }

    fn validate(&self, psi: f64) -> Result<()> {
        if self.n < 2 || self.d == 0 {
            return Err(Error::usage("surrogate needs n >= 2 and d >= 1"));
        }
        if !(psi > 0.0 && psi <= 1.0) {
            return Err(Error::usage(format!("truncation must lie in (0, 1], got {psi}")));
        }
        if !self.spectrum.is_finite() || self.spectrum < 0.0 || !self.offset.is_finite() {
            return Err(Error::usage("spectrum must be non-negative and offset finite"));
        }
        Ok(())
    }
}

/// Orthonormal basis, centre and offset shared by every file of one seed.
#[derive(Debug, Clone)]
pub struct SurrogateSpace {
    pub rotation: Matrix,
    pub centre: Vec<f64>,
    pub delta: Vec<f64>,
    pub variances: Vec<f64>,
}

impl SurrogateSpace {
    pub fn new(cfg: &SurrogateConfig) -> Result<Self> {
        let d = cfg.d;
        let stream = RngStream::new(cfg.rotation_seed, 0x5355_5252);
        let unit = DensityModel::isotropic(vec![0.0; d]).context("surrogate")?;
        let g = unit.sample(d, &stream.child(0)).context("surrogate")?;
        let mut sym = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                sym.set(i, j, g.row(i)[j] + g.row(j)[i]);
            }
        }
        let rotation = sym_eig(&sym).context("surrogate rotation")?.vectors;
        let centre = unit.sample(1, &stream.child(1)).context("surrogate")?.into_vec();
        let mut delta = unit.sample(1, &stream.child(2)).context("surrogate")?.into_vec();
        let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        delta.iter_mut().for_each(|v| *v *= cfg.offset / norm);
        let variances = (1..=d).map(|j| (j as f64).powf(-cfg.spectrum)).collect();
        Ok(SurrogateSpace { rotation, centre, delta, variances })
    }

    /// The exact Gaussian behind truncation `psi`.
    pub fn model(&self, psi: f64) -> Result<DensityModel> {
        let d = self.centre.len();
        let mean = self.centre.iter().zip(&self.delta).map(|(c, e)| c + (1.0 - psi) * e).collect();
        let mut scaled = self.rotation.clone();
        for i in 0..d {
            for j in 0..d {
                scaled.set(i, j, self.rotation.get(i, j) * psi * self.variances[j].sqrt());
            }
        }
        let cov = scaled.matmul(&scaled.transpose()).context("surrogate covariance")?;
        DensityModel::gaussian(mean, symmetrize(cov)).context("surrogate covariance")
    }
}

fn symmetrize(mut m: Matrix) -> Matrix {
    let n = m.rows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// `cfg.n` rows at truncation `psi`.
pub fn generate(cfg: &SurrogateConfig, psi: f64) -> Result<SampleSet> {
    cfg.validate(psi)?;
    let space = SurrogateSpace::new(cfg)?;
    let stream = RngStream::new(cfg.sample_seed, psi.to_bits());
    Ok(space.model(psi)?.sample(cfg.n, &stream).context("surrogate")?.with_label(format!("psi={psi}")))
}
