//! Analytic densities and the Monte-Carlo ground-truth PR curve.
//!
//! The ground truth uses the likelihood-ratio classifier
//! `f*_λ(z) = 1{q(z)/p(z) <= λ}`, whose risk `λ fpr + fnr` is the true `α_λ`.
//! Both rates are estimated on `n_gt` fresh draws from each model.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_jittered, Matrix, SymmetricFactor};
use crate::math;
use crate::model::{CurveMeta, LambdaGrid, PrCurve, PrPoint, RngStream, SampleSet};
use crate::par;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A Gaussian or a Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel {
    /// `N(mean, I)`.
    Isotropic { mean: Vec<f64> },
    /// `N(mean, cov)` with `factor · factorᵀ = cov` (+ jitter).
    Gaussian { mean: Vec<f64>, cov: Matrix, factor: SymmetricFactor },
    /// `Σ w_i component_i`; components are Gaussian.
    Gmm { weights: Vec<f64>, components: Vec<DensityModel> },
}

impl DensityModel {
    pub fn isotropic(mean: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.iter().any(|v| !v.is_finite()) {
            return Err(invalid("a Gaussian mean must be a non-empty finite vector"));
        }
        Ok(DensityModel::Isotropic { mean })
    }

    pub fn gaussian(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        if mean.is_empty() || mean.iter().any(|v| !v.is_finite()) {
            return Err(invalid("a Gaussian mean must be a non-empty finite vector"));
        }
        if cov.rows() != mean.len() || cov.cols() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), found: cov.rows() });
        }
        let factor = cholesky_jittered(&cov)?;
        Ok(DensityModel::Gaussian { mean, cov, factor })
    }

    pub fn gmm(weights: Vec<f64>, components: Vec<DensityModel>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(invalid("a mixture needs one weight per component and at least one component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if math::abs(total - 1.0) > 1e-12 {
            return Err(invalid(alloc::format!("mixture weights sum to {total}, expected 1")));
        }
        let d = components[0].dim();
        for c in &components {
            if matches!(c, DensityModel::Gmm { .. }) {
                return Err(invalid("mixture components must be Gaussian"));
            }
            if c.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: c.dim() });
            }
        }
        Ok(DensityModel::Gmm { weights, components })
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Isotropic { mean } | DensityModel::Gaussian { mean, .. } => mean.len(),
            DensityModel::Gmm { components, .. } => components[0].dim(),
        }
    }

    pub fn log_pdf(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        Ok(self.log_pdf_unchecked(z))
    }

    fn log_pdf_unchecked(&self, z: &[f64]) -> f64 {
        let d = z.len() as f64;
        match self {
            DensityModel::Isotropic { mean } => {
                let q: f64 = z.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                -0.5 * (d * LN_2PI + q)
            }
            DensityModel::Gaussian { mean, factor, .. } => {
                let diff: Vec<f64> = z.iter().zip(mean).map(|(a, b)| a - b).collect();
                let w = factor.solve_lower(&diff);
                let q: f64 = w.iter().map(|v| v * v).sum();
                -0.5 * (d * LN_2PI + factor.log_det() + q)
            }
            DensityModel::Gmm { weights, components } => {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(components)
                    .filter(|(w, _)| **w > 0.0)
                    .map(|(w, c)| math::ln(*w) + c.log_pdf_unchecked(z))
                    .collect();
                math::log_sum_exp(&terms)
            }
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample(&self, n: usize, stream: &RngStream) -> Result<SampleSet> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let mut rng = stream.rng();
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        let mut eps = alloc::vec![0.0; d];
        for _ in 0..n {
            let comp = match self {
                DensityModel::Gmm { weights, components } => &components[pick(weights, rng.random::<f64>())],
                other => other,
            };
            for e in eps.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
            match comp {
                DensityModel::Isotropic { mean } => data.extend(mean.iter().zip(&eps).map(|(m, e)| m + e)),
                DensityModel::Gaussian { mean, factor, .. } => {
                    data.extend(mean.iter().zip(factor.apply(&eps)).map(|(m, e)| m + e))
                }
                DensityModel::Gmm { .. } => unreachable!("nested mixtures are rejected at construction"),
            }
        }
        SampleSet::new(data, d, "sample")
    }
}

/// Component index for a uniform draw `u` in `[0, 1)`; never a zero-weight one.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last = i;
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// Monte-Carlo settings for the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GtConfig {
    pub n_gt: usize,
    pub grid: LambdaGrid,
    pub seed: u64,
}

pub const DEFAULT_N_GT: usize = 100_000;

impl GtConfig {
    pub fn new(grid: LambdaGrid, seed: u64) -> Self {
        GtConfig { n_gt: DEFAULT_N_GT, grid, seed }
    }

    pub fn with_n_gt(self, n_gt: usize) -> Self {
        GtConfig { n_gt, ..self }
    }
}

/// Log-likelihood ratios `ln q - ln p` on draws from both models, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRatios {
    pub on_p: Vec<f64>,
    pub on_q: Vec<f64>,
}

impl LikelihoodRatios {
    pub fn compute(p: &DensityModel, q: &DensityModel, n: usize, stream: &RngStream) -> Result<Self> {
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
        }
        let xs = p.sample(n, &stream.child(1))?;
        let ys = q.sample(n, &stream.child(2))?;
        let llr = |s: &SampleSet| {
            let mut v = par::map_indexed(
                s.len(),
                || (),
                |_, i| {
                    let z = s.row(i);
                    let (lq, lp) = (q.log_pdf_unchecked(z), p.log_pdf_unchecked(z));
                    if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
                        0.0
                    } else {
                        lq - lp
                    }
                },
            );
            v.sort_by(f64::total_cmp);
            v
        };
        Ok(LikelihoodRatios { on_p: llr(&xs), on_q: llr(&ys) })
    }

    /// `(fpr, fnr)` of `1{ℓ <= t}`.
    pub fn rates(&self, t: f64) -> (f64, f64) {
        let p_le = self.on_p.partition_point(|&l| l <= t);
        let q_le = self.on_q.partition_point(|&l| l <= t);
        let fpr = (self.on_p.len() - p_le) as f64 / self.on_p.len() as f64;
        let fnr = q_le as f64 / self.on_q.len() as f64;
        (fpr, fnr)
    }
}

/// Ground-truth curve from `n_gt` draws per model.
pub fn gt_curve(p: &DensityModel, q: &DensityModel, cfg: &GtConfig) -> Result<PrCurve> {
    if cfg.n_gt < 2 {
        return Err(invalid("n_gt must be at least 2"));
    }
    let llr = LikelihoodRatios::compute(p, q, cfg.n_gt, &RngStream::new(cfg.seed, 0))?;
    let n_p = llr.on_p.len() as f64;
    let n_q = llr.on_q.len() as f64;
    let beta_zero = llr.on_p.iter().filter(|l| **l > f64::NEG_INFINITY).count() as f64 / n_p;
    let alpha_inf = llr.on_q.iter().filter(|l| **l < f64::INFINITY).count() as f64 / n_q;
    let points = cfg
        .grid
        .values()
        .iter()
        .map(|&lambda| {
            let alpha = if lambda == 0.0 {
                0.0
            } else if lambda == f64::INFINITY {
                alpha_inf
            } else {
                let (fpr, fnr) = llr.rates(math::ln(lambda));
                (lambda * fpr + fnr).clamp(0.0, lambda.min(1.0))
            };
            PrPoint::from_alpha(lambda, alpha, beta_zero.min(1.0))
        })
        .collect();
    let mut meta = CurveMeta::named("ground-truth");
    meta.seed = Some(cfg.seed);
    Ok(PrCurve::new(points, meta))
}
