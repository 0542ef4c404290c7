//! Empirical risk minimization over a scored family.
//!
//! Sorting the test scores once turns every member of the family into a
//! prefix of the sorted order: "predict P for the `i` smallest distinct
//! score values". With `a_i` and `b_i` the fractions of `X'` and `Y'` in
//! that prefix, the risk at `λ` is `λ (1 - a_i) + b_i`, and
//!
//! ```text
//! α̂_λ = min_i  λ (1 - a_i) + b_i          (i = 0 is f ≡ 0, i = m is f ≡ 1)
//! ```
//!
//! The loose (`s <= t`) and strict (`s < t`) classifiers at every distinct
//! score `t` are both prefixes, so the sweep covers either inequality
//! convention, and the two trivial classifiers keep `α̂_λ <= min(1, λ)`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math;
use crate::model::{CurveMeta, LambdaGrid, PrCurve, PrPoint};
use crate::scores::ScoredTestSet;

/// Distinct sorted scores with cumulative counts per origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Distinct score values, increasing.
    pub thresholds: Vec<f64>,
    /// `cum_p[i]` = number of `X'` scores `<= thresholds[i - 1]`; `cum_p[0] = 0`.
    pub cum_p: Vec<usize>,
    /// Same for `Y'`.
    pub cum_q: Vec<usize>,
    pub n_p: usize,
    pub n_q: usize,
}

impl SweepTable {
    pub fn new(scores: &ScoredTestSet) -> Result<Self> {
        let n_p = scores.from_p.len();
        let n_q = scores.from_q.len();
        if n_p == 0 || n_q == 0 {
            return Err(invalid("the test set needs points from both distributions"));
        }
        let mut tagged: Vec<(f64, bool)> =
            scores.from_p.iter().map(|&s| (s, true)).chain(scores.from_q.iter().map(|&s| (s, false))).collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut thresholds = Vec::new();
        let mut cum_p = alloc::vec![0usize];
        let mut cum_q = alloc::vec![0usize];
        let (mut cp, mut cq) = (0usize, 0usize);
        let mut i = 0;
        while i < tagged.len() {
            let t = tagged[i].0;
            while i < tagged.len() && tagged[i].0 == t {
                if tagged[i].1 {
                    cp += 1;
                } else {
                    cq += 1;
                }
                i += 1;
            }
            thresholds.push(t);
            cum_p.push(cp);
            cum_q.push(cq);
        }
        Ok(SweepTable { thresholds, cum_p, cum_q, n_p, n_q })
    }

    /// Number of candidate classifiers (prefixes, including the empty one).
    pub fn candidates(&self) -> usize {
        self.cum_p.len()
    }

    /// `(fpr, fnr)` of prefix `i`.
    pub fn rates(&self, i: usize) -> (f64, f64) {
        let fpr = 1.0 - self.cum_p[i] as f64 / self.n_p as f64;
        let fnr = self.cum_q[i] as f64 / self.n_q as f64;
        (fpr, fnr)
    }

    /// Unclipped `min_i λ fpr_i + fnr_i` for finite `λ >= 0`.
    pub fn min_risk(&self, lambda: f64) -> f64 {
        (0..self.candidates())
            .map(|i| {
                let (fpr, fnr) = self.rates(i);
                lambda * fpr + fnr
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Risk of the threshold classifier `f_γ` (loose for `γ >= 1`, strict
    /// below) at trade-off `λ`.
    pub fn risk_at_gamma(&self, lambda: f64, gamma: f64) -> f64 {
        // index of the prefix realized by f_γ
        let i = if gamma >= 1.0 {
            self.thresholds.partition_point(|&t| t <= gamma)
        } else {
            self.thresholds.partition_point(|&t| t < gamma)
        };
        let (fpr, fnr) = self.rates(i);
        lambda * fpr + fnr
    }

    /// `λ -> +inf` limit: smallest fnr among classifiers with zero fpr.
    pub fn alpha_inf(&self) -> f64 {
        (0..self.candidates()).filter(|&i| self.cum_p[i] == self.n_p).map(|i| self.rates(i).1).fold(1.0, f64::min)
    }

    /// `λ -> 0` limit of `α̂_λ / λ`: smallest fpr among classifiers with zero fnr.
    pub fn beta_zero(&self) -> f64 {
        (0..self.candidates()).filter(|&i| self.cum_q[i] == 0).map(|i| self.rates(i).0).fold(1.0, f64::min)
    }
}

/// `α̂_λ` and `β̂_λ` on every λ of `grid`.
pub fn estimate_curve(scores: &ScoredTestSet, grid: &LambdaGrid) -> Result<PrCurve> {
    let table = SweepTable::new(scores)?;
    Ok(curve_from_table(&table, grid))
}

pub fn curve_from_table(table: &SweepTable, grid: &LambdaGrid) -> PrCurve {
    let beta_zero = table.beta_zero();
    let points = grid
        .values()
        .iter()
        .map(|&lambda| {
            let alpha = if lambda == 0.0 {
                0.0
            } else if lambda == f64::INFINITY {
                table.alpha_inf()
            } else {
                table.min_risk(lambda)
            };
            PrPoint::from_alpha(lambda, alpha.clamp(0.0, 1.0), beta_zero)
        })
        .collect();
    PrCurve::new(points, CurveMeta::default())
}

/// Drops points dominated in `(β, α)` by another point of the curve.
///
/// Survivors keep their λ labels and original order; along increasing λ the
/// result has strictly increasing `α` and strictly decreasing `β`. Exact
/// duplicates keep their first occurrence.
pub fn pareto_clean(curve: &PrCurve) -> PrCurve {
    let pts = &curve.points;
    let keep: Vec<PrPoint> = pts
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            !pts.iter().enumerate().any(|(j, q)| {
                let weakly = q.alpha >= p.alpha && q.beta >= p.beta;
                let strictly = q.alpha > p.alpha || q.beta > p.beta;
                (weakly && strictly) || (j < *i && q.alpha == p.alpha && q.beta == p.beta)
            })
        })
        .map(|(_, p)| *p)
        .collect();
    PrCurve::new(keep, curve.meta.clone())
}

/// Repeated estimates of one curve on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEnsemble {
    pub curves: Vec<PrCurve>,
}

impl CurveEnsemble {
    pub fn new(curves: Vec<PrCurve>) -> Result<Self> {
        let first = curves.first().ok_or_else(|| invalid("an ensemble needs at least one curve"))?;
        for c in &curves[1..] {
            if c.len() != first.len() || c.lambdas().zip(first.lambdas()).any(|(a, b)| a != b) {
                return Err(invalid("ensemble curves must share one λ-grid"));
            }
        }
        Ok(CurveEnsemble { curves })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Mean curve and the `±σ` deviation curves of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: PrCurve,
    pub plus_sigma: PrCurve,
    pub minus_sigma: PrCurve,
    /// Per-λ population standard deviation of `α`.
    pub sigma_alpha: Vec<f64>,
    pub sigma_beta: Vec<f64>,
}

/// Per-λ mean and population (`1/R`) standard deviation.
pub fn aggregate(ensemble: &CurveEnsemble) -> Result<Aggregate> {
    let first = ensemble.curves.first().ok_or_else(|| invalid("empty ensemble"))?;
    let r = ensemble.len() as f64;
    let n = first.len();
    let mut mean_pts = Vec::with_capacity(n);
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    let mut sigma_alpha = Vec::with_capacity(n);
    let mut sigma_beta = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = first.points[i].lambda;
        let ma = ensemble.curves.iter().map(|c| c.points[i].alpha).sum::<f64>() / r;
        let mb = ensemble.curves.iter().map(|c| c.points[i].beta).sum::<f64>() / r;
        let va = ensemble
            .curves
            .iter()
            .map(|c| {
                let e = c.points[i].alpha - ma;
                e * e
            })
            .sum::<f64>()
            / r;
        let vb = ensemble
            .curves
            .iter()
            .map(|c| {
                let e = c.points[i].beta - mb;
                e * e
            })
            .sum::<f64>()
            / r;
        let (sa, sb) = (math::sqrt(va), math::sqrt(vb));
        mean_pts.push(PrPoint { lambda, alpha: ma, beta: mb });
        plus.push(PrPoint { lambda, alpha: (ma + sa).clamp(0.0, 1.0), beta: (mb + sb).clamp(0.0, 1.0) });
        minus.push(PrPoint { lambda, alpha: (ma - sa).clamp(0.0, 1.0), beta: (mb - sb).clamp(0.0, 1.0) });
        sigma_alpha.push(sa);
        sigma_beta.push(sb);
    }
    let meta = first.meta.clone();
    Ok(Aggregate {
        mean: PrCurve::new(mean_pts, meta.clone()),
        plus_sigma: PrCurve::new(plus, meta.clone()),
        minus_sigma: PrCurve::new(minus, meta),
        sigma_alpha,
        sigma_beta,
    })
}
