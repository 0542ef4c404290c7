//! Toy distribution pairs: shifted isotropic Gaussians and a four-mode GMM.

use alloc::vec;
use alloc::vec::Vec;

use crate::density::DensityModel;
use crate::error::{invalid, Result};

/// Shift magnitudes of the Gaussian shift suite (per coordinate, `d = 64`).
pub const SHIFT_VALUES: [f64; 4] = [0.12, 0.21, 0.29, 0.38];

/// `P = N(0, I_d)`, `Q = N(μ 1_d, I_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftConfig {
    pub d: usize,
    pub mu: f64,
    pub n: usize,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig { d: 64, mu: 0.12, n: 10_000 }
    }
}

impl ShiftConfig {
    pub fn new(d: usize, mu: f64, n: usize) -> Self {
        ShiftConfig { d, mu, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n < 2 || !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid(alloc::format!(
                "shift config needs d >= 1, n >= 2 and finite mu >= 0 (got d={}, n={}, mu={})",
                self.d,
                self.n,
                self.mu
            )));
        }
        Ok(())
    }
}

pub fn shift_pair(cfg: &ShiftConfig) -> Result<(DensityModel, DensityModel)> {
    cfg.validate()?;
    Ok((DensityModel::isotropic(vec![0.0; cfg.d])?, DensityModel::isotropic(vec![cfg.mu; cfg.d])?))
}

/// Mixtures `Σ w_l N(μ_l 1_d, I_d)` over shared centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmConfig {
    pub d: usize,
    pub centers: Vec<f64>,
    pub p_weights: Vec<f64>,
    pub q_weights: Vec<f64>,
    pub n: usize,
}

pub const GMM_CENTERS: [f64; 4] = [0.0, -5.0, 3.0, 5.0];

impl GmmConfig {
    /// Weights `p = (0.2, 0.2, 0.6, 0)`, `q = (0, 0.5, 0.1, 0.4)`.
    pub fn main(d: usize) -> Self {
        GmmConfig {
            d,
            centers: GMM_CENTERS.to_vec(),
            p_weights: vec![0.2, 0.2, 0.6, 0.0],
            q_weights: vec![0.0, 0.5, 0.1, 0.4],
            n: 10_000,
        }
    }

    /// Weights `p = (0.3, 0.2, 0.5, 0)`, `q = (0, 0.5, 0.2, 0.3)`.
    pub fn alternate(d: usize) -> Self {
        GmmConfig { p_weights: vec![0.3, 0.2, 0.5, 0.0], q_weights: vec![0.0, 0.5, 0.2, 0.3], ..GmmConfig::main(d) }
    }

    pub fn preset(name: &str, d: usize) -> Result<Self> {
        match name {
            "main" => Ok(GmmConfig::main(d)),
            "alternate" => Ok(GmmConfig::alternate(d)),
            other => Err(invalid(alloc::format!("unknown GMM preset '{other}' (expected main or alternate)"))),
        }
    }
}

pub fn gmm_pair(cfg: &GmmConfig) -> Result<(DensityModel, DensityModel)> {
    if cfg.d == 0 {
        return Err(invalid("GMM dimension must be at least 1"));
    }
    if cfg.p_weights.len() != cfg.centers.len() || cfg.q_weights.len() != cfg.centers.len() {
        return Err(invalid("GMM weights must have one entry per center"));
    }
    let comps = cfg.centers.iter().map(|c| DensityModel::isotropic(vec![*c; cfg.d])).collect::<Result<Vec<_>>>()?;
    Ok((DensityModel::gmm(cfg.p_weights.clone(), comps.clone())?, DensityModel::gmm(cfg.q_weights.clone(), comps)?))
}
