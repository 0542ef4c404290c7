//! Scalar summaries of PR curves and curve-to-curve comparison.
//!
//! A curve is turned into an [`Envelope`]: its Pareto points in the
//! `(β, α)` plane joined by straight segments, extended horizontally to the
//! `α` axis and vertically down to the `β` axis. Its down-closure is the
//! estimated PRD region; every area below is integrated exactly over the
//! polyline pieces.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::estimator::pareto_clean;
use crate::math;
use crate::model::PrCurve;

pub const DEFAULT_B: f64 = 8.0;
pub const DEFAULT_EPS: f64 = 0.05;

/// Non-increasing piecewise-linear frontier `α(β)` on `[0, β_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    /// `(β, α)` vertices, `β` increasing from 0, `α` non-increasing.
    vertices: Vec<(f64, f64)>,
}

impl Envelope {
    /// The envelope through the given `(β, α)` vertices (after Pareto filtering).
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if points.iter().any(|(b, a)| !(0.0..=1.0).contains(b) || !(0.0..=1.0).contains(a)) {
            return Err(invalid("envelope vertices must lie in the unit square"));
        }
        let mut pts: Vec<(f64, f64)> = points
            .iter()
            .filter(|(b, a)| !points.iter().any(|(b2, a2)| b2 >= b && a2 >= a && (b2 > b || a2 > a)))
            .copied()
            .collect();
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        pts.dedup();
        if pts[0].0 > 0.0 {
            pts.insert(0, (0.0, pts[0].1));
        }
        Ok(Envelope { vertices: pts })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Largest `β` of the region (the recall extreme).
    pub fn beta_max(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.0)
    }

    /// `α` at `β = 0` (the precision extreme).
    pub fn alpha_max(&self) -> f64 {
        self.vertices.first().map_or(0.0, |v| v.1)
    }

    /// Frontier height at `β`; 0 beyond `β_max`.
    pub fn eval(&self, beta: f64) -> f64 {
        let v = &self.vertices;
        if beta < 0.0 || beta > self.beta_max() {
            return 0.0;
        }
        let i = v.partition_point(|p| p.0 < beta);
        if i == 0 {
            return v[0].1;
        }
        if i == v.len() {
            return v[v.len() - 1].1;
        }
        let (b0, a0) = v[i - 1];
        let (b1, a1) = v[i];
        if b1 == b0 {
            return a1.max(a0);
        }
        a0 + (a1 - a0) * (beta - b0) / (b1 - b0)
    }

    /// Right limit `α(β+)`, used at the breakpoints of integration.
    fn right_value(&self, beta: f64) -> f64 {
        if beta >= self.beta_max() {
            0.0
        } else {
            self.eval(beta)
        }
    }

    /// Left limit `α(β-)`.
    fn left_value(&self, beta: f64) -> f64 {
        if beta > self.beta_max() {
            0.0
        } else {
            self.eval(beta)
        }
    }

    pub fn area(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
    }
}

/// Pareto-cleans `curve` and builds its envelope.
pub fn build_envelope(curve: &PrCurve) -> Result<Envelope> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let cleaned = pareto_clean(curve);
    let pts: Vec<(f64, f64)> =
        cleaned.points.iter().map(|p| (p.beta.clamp(0.0, 1.0), p.alpha.clamp(0.0, 1.0))).collect();
    Envelope::from_points(&pts)
}

/// Area of the region under the envelope.
pub fn auc(env: &Envelope) -> f64 {
    env.area()
}

/// `max_λ (b² + 1) / (b²/α_λ + 1/β_λ)`, taking 0 where `α` or `β` is 0.
pub fn f_score(curve: &PrCurve, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(alloc::format!("F-score weight b must be positive, got {b}")));
    }
    let b2 = b * b;
    Ok(curve
        .points
        .iter()
        .map(
            |p| {
                if p.alpha <= 0.0 || p.beta <= 0.0 {
                    0.0
                } else {
                    ((b2 + 1.0) / (b2 / p.alpha + 1.0 / p.beta)).min(1.0)
                }
            },
        )
        .fold(0.0, f64::max))
}

/// Exact `∫ min(f, g)` and `∫ max(f, g)` over `[l, r]` for linear `f`, `g`
/// given by their end values.
fn min_max_integral(l: f64, r: f64, f0: f64, f1: f64, g0: f64, g1: f64) -> (f64, f64) {
    let w = r - l;
    if w <= 0.0 {
        return (0.0, 0.0);
    }
    let d0 = f0 - g0;
    let d1 = f1 - g1;
    let trap_f = w * (f0 + f1) / 2.0;
    let trap_g = w * (g0 + g1) / 2.0;
    if d0 * d1 >= 0.0 {
        if d0 + d1 <= 0.0 {
            (trap_f, trap_g)
        } else {
            (trap_g, trap_f)
        }
    } else {
        let t = d0 / (d0 - d1);
        let xc = l + t * w;
        let yc = f0 + (f1 - f0) * t;
        let min = (xc - l) * (f0.min(g0) + yc) / 2.0 + (r - xc) * (yc + f1.min(g1)) / 2.0;
        let max = (xc - l) * (f0.max(g0) + yc) / 2.0 + (r - xc) * (yc + f1.max(g1)) / 2.0;
        (min, max)
    }
}

/// Area of the region below the envelope and below the ray `α = λ β`.
pub fn area_below_ray(env: &Envelope, lambda: f64) -> f64 {
    if lambda == f64::INFINITY {
        return env.area();
    }
    env.vertices
        .windows(2)
        .map(|w| {
            let (b0, a0) = w[0];
            let (b1, a1) = w[1];
            min_max_integral(b0, b1, a0, a1, lambda * b0, lambda * b1).0
        })
        .sum()
}

/// The frontier point on the ray `α = λ̄ β` that halves the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// PR-median: bisection on `θ = atan λ` until the area below the ray is
/// within `1e-6` of half the region.
pub fn pr_median(env: &Envelope) -> Result<MedianPoint> {
    let total = env.area();
    if !(total > 0.0) {
        return Err(Error::UndefinedMedian);
    }
    let half = total / 2.0;
    let (mut lo, mut hi) = (0.0f64, core::f64::consts::FRAC_PI_2);
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..200 {
        theta = 0.5 * (lo + hi);
        let a = area_below_ray(env, math::tan(theta));
        if math::abs(a - half) <= 1e-6 * 1e-3 || hi - lo < 1e-15 {
            break;
        }
        if a < half {
            lo = theta;
        } else {
            hi = theta;
        }
    }
    let lambda = math::tan(theta);
    let (beta, alpha) = ray_crossing(env, lambda);
    Ok(MedianPoint { lambda, alpha, beta })
}

/// Where the ray `α = λ β` leaves the region.
fn ray_crossing(env: &Envelope, lambda: f64) -> (f64, f64) {
    let v = &env.vertices;
    for w in v.windows(2) {
        let (b0, a0) = w[0];
        let (b1, a1) = w[1];
        let d0 = a0 - lambda * b0;
        let d1 = a1 - lambda * b1;
        if d0 >= 0.0 && d1 <= 0.0 {
            if d0 == d1 {
                return (b0, a0);
            }
            let t = d0 / (d0 - d1);
            let b = b0 + t * (b1 - b0);
            return (b, a0 + t * (a1 - a0));
        }
    }
    // the ray passes through the vertical drop at β_max
    let bm = env.beta_max();
    (bm, (lambda * bm).min(env.eval(bm)))
}

/// `α` at recall `ε` on the envelope.
pub fn pr_at_eps(env: &Envelope, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(alloc::format!("ε must lie in (0, 1), got {eps}")));
    }
    Ok(env.eval(eps))
}

/// `β` at precision `ε`, read from the envelope of the exchanged curve.
pub fn beta_at_eps(curve: &PrCurve, eps: f64) -> Result<f64> {
    pr_at_eps(&build_envelope(&curve.swapped())?, eps)
}

/// Intersection over union of the regions under two envelopes.
pub fn iou(a: &Envelope, b: &Envelope) -> Result<f64> {
    let (inter, union) = intersection_union(a, b);
    if !(union > 0.0) {
        return Err(Error::UndefinedIou);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// `(∫ min(α_a, α_b), ∫ max(α_a, α_b))`.
pub fn intersection_union(a: &Envelope, b: &Envelope) -> (f64, f64) {
    let mut cuts: Vec<f64> = a.vertices.iter().chain(&b.vertices).map(|v| v.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut inter, mut union) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (mn, mx) = min_max_integral(l, r, a.right_value(l), a.left_value(r), b.right_value(l), b.left_value(r));
        inter += mn;
        union += mx;
    }
    (inter, union)
}

/// All scalar digests of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub auc: f64,
    pub f_b: f64,
    pub f_inv_b: f64,
    pub b: f64,
    pub pr_median: Option<MedianPoint>,
    pub alpha_at_eps: f64,
    pub beta_at_eps: f64,
    pub eps: f64,
    pub alpha_inf: f64,
    pub beta_0: f64,
}

pub fn summarize(curve: &PrCurve, b: f64, eps: f64) -> Result<SummaryReport> {
    let env = build_envelope(curve)?;
    let median = match pr_median(&env) {
        Ok(m) => Some(m),
        Err(Error::UndefinedMedian) => None,
        Err(e) => return Err(e),
    };
    Ok(SummaryReport {
        auc: auc(&env),
        f_b: f_score(curve, b)?,
        f_inv_b: f_score(curve, 1.0 / b)?,
        b,
        pr_median: median,
        alpha_at_eps: pr_at_eps(&env, eps)?,
        beta_at_eps: beta_at_eps(curve, eps)?,
        eps,
        alpha_inf: curve.alpha_inf().unwrap_or_else(|| env.alpha_max()),
        beta_0: curve.beta_zero().unwrap_or_else(|| env.beta_max()),
    })
}
