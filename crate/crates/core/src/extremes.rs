//! The published scalar estimators of extreme precision `α_∞`.
//!
//! Each function reads its balls from training sets and averages an
//! indicator (or, for PPR, a probability) over the test points of `Y`.
//! The plain `x, y` entry points use no split, as in the literature; the
//! `_split` variants take an explicit [`Split`]. Extreme recall `β_0` is the
//! same computation with the roles of the two sets exchanged.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Result};
use crate::model::{SampleSet, Split};
use crate::neighbors::{copy_without, count_within, fill_sq_dists, knn_radii, knn_sq_radii, kth_smallest};
use crate::par;

/// Default PRC threshold `k'`.
pub const DEFAULT_KPRIME: usize = 3;
/// Neighbor rank used for the default PPR radius.
pub const PPR_RADIUS_RANK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtremeMethod {
    Ipr,
    Cov,
    Eas,
    Prc,
    Ppr,
}

impl ExtremeMethod {
    pub const ALL: [ExtremeMethod; 5] =
        [ExtremeMethod::Ipr, ExtremeMethod::Cov, ExtremeMethod::Eas, ExtremeMethod::Prc, ExtremeMethod::Ppr];

    pub fn name(self) -> &'static str {
        match self {
            ExtremeMethod::Ipr => "ipr",
            ExtremeMethod::Cov => "cov",
            ExtremeMethod::Eas => "eas",
            ExtremeMethod::Prc => "prc",
            ExtremeMethod::Ppr => "ppr",
        }
    }
}

impl fmt::Display for ExtremeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtremeMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipr" => Ok(ExtremeMethod::Ipr),
            "cov" | "coverage" => Ok(ExtremeMethod::Cov),
            "eas" => Ok(ExtremeMethod::Eas),
            "prc" => Ok(ExtremeMethod::Prc),
            "ppr" => Ok(ExtremeMethod::Ppr),
            other => {
                Err(invalid(alloc::format!("unknown extreme method '{other}' (expected ipr, cov, eas, prc or ppr)")))
            }
        }
    }
}

/// Hyperparameters of the extreme estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeParams {
    pub k: usize,
    pub kprime: usize,
    /// PPR kernel radius; `None` means the mean 4th-NN distance within `X`.
    pub radius: Option<f64>,
}

impl ExtremeParams {
    pub fn new(k: usize) -> Self {
        ExtremeParams { k, kprime: DEFAULT_KPRIME, radius: None }
    }
}

/// Both extremes of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeReport {
    pub method: ExtremeMethod,
    pub alpha_inf: f64,
    pub beta_0: f64,
    pub k: usize,
    pub kprime: Option<usize>,
    pub radius: Option<f64>,
}

fn fraction(hits: impl Iterator<Item = bool>, n: usize) -> f64 {
    hits.filter(|h| *h).count() as f64 / n as f64
}

fn query_member(split: &Split, j: usize) -> Option<usize> {
    split.aliased.then_some(j)
}

/// `#{y' : ∃ x, y' ∈ B_kNN^X(x)} / |Y'|`.
pub fn ipr_extreme(x: &SampleSet, y: &SampleSet, k: usize) -> Result<f64> {
    ipr_extreme_split(&Split::unsplit(x, y)?, k)
}

pub fn ipr_extreme_split(split: &Split, k: usize) -> Result<f64> {
    let rx = knn_radii(&split.train_x, k)?;
    let rx2 = rx.squared();
    let hits = par::map_indexed(split.test_y.len(), Vec::new, |buf, j| {
        fill_sq_dists(split.test_y.row(j), &split.train_x, buf);
        buf.iter().zip(&rx2).any(|(d, r)| d <= r)
    });
    Ok(fraction(hits.into_iter(), split.test_y.len()))
}

/// Per test point of `Y`, the number of training `x` inside `B_kNN^Y(y')`.
fn x_in_y_balls(split: &Split, k: usize) -> Result<Vec<usize>> {
    let available = split.train_y.len() - usize::from(split.aliased);
    if k == 0 || k > available {
        return Err(invalid(alloc::format!(
            "k = {k} must lie in 1..={available} for the kNN balls of '{}'",
            split.train_y.label()
        )));
    }
    Ok(par::map_indexed(
        split.test_y.len(),
        || (Vec::new(), Vec::new(), Vec::new()),
        |(dy, dx, buf): &mut (Vec<f64>, Vec<f64>, Vec<f64>), j| {
            let z = split.test_y.row(j);
            fill_sq_dists(z, &split.train_y, dy);
            buf.clear();
            copy_without(dy, query_member(split, j), buf);
            let r2 = kth_smallest(buf, k);
            fill_sq_dists(z, &split.train_x, dx);
            count_within(dx, r2)
        },
    ))
}

/// `#{y' : ∃ x ∈ B_kNN^Y(y')} / |Y'|`.
pub fn coverage_extreme(x: &SampleSet, y: &SampleSet, k: usize) -> Result<f64> {
    coverage_extreme_split(&Split::unsplit(x, y)?, k)
}

pub fn coverage_extreme_split(split: &Split, k: usize) -> Result<f64> {
    prc_extreme_split(split, k, 1)
}

/// `min(iPR, Cov)`.
pub fn eas_extreme(x: &SampleSet, y: &SampleSet, k: usize) -> Result<f64> {
    eas_extreme_split(&Split::unsplit(x, y)?, k)
}

pub fn eas_extreme_split(split: &Split, k: usize) -> Result<f64> {
    Ok(ipr_extreme_split(split, k)?.min(coverage_extreme_split(split, k)?))
}

/// `#{y' : #{x ∈ B_kNN^Y(y')} >= k'} / |Y'|`.
pub fn prc_extreme(x: &SampleSet, y: &SampleSet, k: usize, kprime: usize) -> Result<f64> {
    prc_extreme_split(&Split::unsplit(x, y)?, k, kprime)
}

pub fn prc_extreme_split(split: &Split, k: usize, kprime: usize) -> Result<f64> {
    if kprime == 0 {
        return Err(invalid("k' must be at least 1"));
    }
    let counts = x_in_y_balls(split, k)?;
    Ok(fraction(counts.iter().map(|c| *c >= kprime), split.test_y.len()))
}

/// Mean over `y'` of `1 - Π_x (1 - τ(‖y' - x‖))` with the tent kernel
/// `τ(d) = max(0, 1 - d/R)`.
pub fn ppr_extreme(x: &SampleSet, y: &SampleSet, radius: f64) -> Result<f64> {
    ppr_extreme_split(&Split::unsplit(x, y)?, radius)
}

pub fn ppr_extreme_split(split: &Split, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(alloc::format!("PPR radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    let probs = par::map_indexed(split.test_y.len(), Vec::new, |buf, j| {
        fill_sq_dists(split.test_y.row(j), &split.train_x, buf);
        let mut miss = 1.0;
        for &d2 in buf.iter() {
            if d2 < r2 {
                miss *= crate::math::sqrt(d2) / radius;
                if miss == 0.0 {
                    break;
                }
            }
        }
        1.0 - miss
    });
    Ok(probs.iter().sum::<f64>() / split.test_y.len() as f64)
}

/// Mean distance from each point of `x` to its 4th nearest other point.
pub fn default_ppr_radius(x: &SampleSet) -> Result<f64> {
    let k = PPR_RADIUS_RANK.min(x.len().saturating_sub(1));
    if k == 0 {
        return Err(invalid("the default PPR radius needs at least two points"));
    }
    let sq = knn_sq_radii(x, k);
    Ok(sq.iter().map(|r| crate::math::sqrt(*r)).sum::<f64>() / x.len() as f64)
}

/// `α_∞` of one method on `split`.
pub fn alpha_inf(method: ExtremeMethod, split: &Split, params: &ExtremeParams) -> Result<f64> {
    match method {
        ExtremeMethod::Ipr => ipr_extreme_split(split, params.k),
        ExtremeMethod::Cov => coverage_extreme_split(split, params.k),
        ExtremeMethod::Eas => eas_extreme_split(split, params.k),
        ExtremeMethod::Prc => prc_extreme_split(split, params.k, params.kprime),
        ExtremeMethod::Ppr => {
            let r = match params.radius {
                Some(r) => r,
                None => default_ppr_radius(&split.train_x)?,
            };
            ppr_extreme_split(split, r)
        }
    }
}

/// `α_∞` and `β_0` (the latter by exchanging the two sets).
pub fn extreme_report(method: ExtremeMethod, split: &Split, params: &ExtremeParams) -> Result<ExtremeReport> {
    let radius = match (method, params.radius) {
        (ExtremeMethod::Ppr, None) => Some(default_ppr_radius(&split.train_x)?),
        (_, r) => r,
    };
    let params = ExtremeParams { radius, ..*params };
    let alpha_inf = alpha_inf(method, split, &params)?;
    let beta_0 = alpha_inf_swapped(method, split, &params)?;
    Ok(ExtremeReport {
        method,
        alpha_inf,
        beta_0,
        k: params.k,
        kprime: (method == ExtremeMethod::Prc).then_some(params.kprime),
        radius: if method == ExtremeMethod::Ppr { radius } else { None },
    })
}

fn alpha_inf_swapped(method: ExtremeMethod, split: &Split, params: &ExtremeParams) -> Result<f64> {
    alpha_inf(method, &split.swapped(), params)
}

/// Short description such as `prc(k=5,k'=3)`.
pub fn describe(report: &ExtremeReport) -> String {
    match (report.kprime, report.radius) {
        (Some(kp), _) => alloc::format!("{}(k={},k'={kp})", report.method, report.k),
        (_, Some(r)) => alloc::format!("{}(R={r})", report.method),
        _ => alloc::format!("{}(k={})", report.method, report.k),
    }
}
