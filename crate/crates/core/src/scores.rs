//! Per-test-point scores for the classifier families.
//!
//! Every family is represented by a score `s(z) ∈ [0, +inf]` such that the
//! family member at threshold `γ` predicts "P" exactly when `s(z) <= γ`.
//! The score is a ratio `c_Y(z) / c_X(z)` of matching counts, with `0/0`
//! mapped to `0` and `c/0` (c > 0) mapped to `+inf`.
//!
//! | family | `c_X(z)` | `c_Y(z)` |
//! |--------|----------|----------|
//! | kNN    | X-points in the kNN ball of `z` within `X ∪ Y` | Y-points in that ball |
//! | KDE    | X-points within `σ` of `z` | Y-points within `σ` of `z` |
//! | iPR    | X-points whose own kNN ball (within X) contains `z` | same with Y |
//! | Cov    | X-points within the kNN radius of `z` computed in Y | Y-points within the kNN radius of `z` computed in X |
//!
//! All four families are evaluated in a single scan over the test points so
//! that a run comparing methods computes each distance once.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::model::{SampleSet, Split};
use crate::neighbors::{
    copy_without, count_within, fill_sq_dists_block, knn_sq_radii, kth_smallest, Member, QUERY_BLOCK,
};
use crate::par;

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Knn,
    Kde,
    Ipr,
    Cov,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ipr, Method::Knn, Method::Kde, Method::Cov];

    pub fn name(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Kde => "kde",
            Method::Ipr => "ipr",
            Method::Cov => "cov",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Method::Knn),
            "kde" => Ok(Method::Kde),
            "ipr" => Ok(Method::Ipr),
            "cov" | "coverage" => Ok(Method::Cov),
            other => Err(invalid(alloc::format!("unknown method '{other}' (expected knn, kde, ipr or cov)"))),
        }
    }
}

/// Neighbor count rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    Fixed(usize),
    /// `ceil(sqrt(n))` with `n` the number of samples per distribution
    /// before any split.
    Sqrt,
}

impl KRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KRule::Fixed(k) => k,
            KRule::Sqrt => math::ceil_sqrt(n).max(1),
        }
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Fixed(k) => write!(f, "{k}"),
            KRule::Sqrt => f.write_str("sqrt"),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sqrt") {
            return Ok(KRule::Sqrt);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(invalid("k must be at least 1")),
            Ok(k) => Ok(KRule::Fixed(k)),
            Err(_) => Err(invalid(alloc::format!("k must be a positive integer or 'sqrt', got '{s}'"))),
        }
    }
}

/// KDE bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule {
    Fixed(f64),
    /// Mean distance from each training point to its `ceil(sqrt(n))`-th
    /// nearest neighbor in the joint training set.
    Auto,
}

impl fmt::Display for SigmaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaRule::Fixed(s) => write!(f, "{s}"),
            SigmaRule::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for SigmaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SigmaRule::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaRule::Fixed(v)),
            _ => Err(invalid(alloc::format!("sigma must be a positive real or 'auto', got '{s}'"))),
        }
    }
}

/// A family together with its hyperparameter rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyConfig {
    pub method: Method,
    pub k: KRule,
    pub sigma: SigmaRule,
}

impl FamilyConfig {
    pub fn new(method: Method) -> Self {
        FamilyConfig { method, k: KRule::Sqrt, sigma: SigmaRule::Auto }
    }

    pub fn with_k(self, k: KRule) -> Self {
        FamilyConfig { k, ..self }
    }

    pub fn with_sigma(self, sigma: SigmaRule) -> Self {
        FamilyConfig { sigma, ..self }
    }
}

/// A family with concrete `k` / `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Knn { k: usize },
    Kde { sigma: f64 },
    Ipr { k: usize },
    Cov { k: usize },
}

impl Family {
    pub fn method(&self) -> Method {
        match self {
            Family::Knn { .. } => Method::Knn,
            Family::Kde { .. } => Method::Kde,
            Family::Ipr { .. } => Method::Ipr,
            Family::Cov { .. } => Method::Cov,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Family::Knn { k } | Family::Ipr { k } | Family::Cov { k } => Some(k),
            Family::Kde { .. } => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            Family::Kde { sigma } => Some(sigma),
            _ => None,
        }
    }
}

/// Resolves `k` and `σ` rules; `n` is the per-distribution sample count
/// before splitting.
pub fn resolve_family(cfg: &FamilyConfig, split: &Split, n: usize) -> Result<Family> {
    let k = cfg.k.resolve(n);
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    Ok(match cfg.method {
        Method::Knn => Family::Knn { k },
        Method::Ipr => Family::Ipr { k },
        Method::Cov => Family::Cov { k },
        Method::Kde => {
            let sigma = match cfg.sigma {
                SigmaRule::Fixed(s) => s,
                SigmaRule::Auto => auto_sigma(&split.train_x, &split.train_y, KRule::Sqrt.resolve(n))?,
            };
            Family::Kde { sigma }
        }
    })
}

/// Scores of the test points, grouped by the distribution they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTestSet {
    /// Scores of the test points drawn from P (`X'`).
    pub from_p: Vec<f64>,
    /// Scores of the test points drawn from Q (`Y'`).
    pub from_q: Vec<f64>,
}

impl ScoredTestSet {
    pub fn new(from_p: Vec<f64>, from_q: Vec<f64>) -> Result<Self> {
        if let Some(s) = from_p.iter().chain(&from_q).find(|s| s.is_nan() || **s < 0.0) {
            return Err(invalid(alloc::format!("scores must be nonnegative, got {s}")));
        }
        Ok(ScoredTestSet { from_p, from_q })
    }

    pub fn len(&self) -> usize {
        self.from_p.len() + self.from_q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Classifier at threshold `γ`: loose inequality for `γ >= 1`, strict
    /// below 1. Returns true for "predict P".
    pub fn classify(score: f64, gamma: f64) -> bool {
        if gamma >= 1.0 {
            score <= gamma
        } else {
            score < gamma
        }
    }
}

/// `c_y / c_x` with the `0/0 -> 0` and `c/0 -> +inf` conventions.
#[inline]
pub fn count_ratio(c_y: usize, c_x: usize) -> f64 {
    if c_y == 0 {
        0.0
    } else if c_x == 0 {
        f64::INFINITY
    } else {
        c_y as f64 / c_x as f64
    }
}

pub fn score_knn(split: &Split, k: usize) -> Result<ScoredTestSet> {
    score_one(split, Family::Knn { k })
}

pub fn score_kde(split: &Split, sigma: f64) -> Result<ScoredTestSet> {
    score_one(split, Family::Kde { sigma })
}

pub fn score_ipr(split: &Split, k: usize) -> Result<ScoredTestSet> {
    score_one(split, Family::Ipr { k })
}

pub fn score_cov(split: &Split, k: usize) -> Result<ScoredTestSet> {
    score_one(split, Family::Cov { k })
}

fn score_one(split: &Split, family: Family) -> Result<ScoredTestSet> {
    let mut out = score_families(split, &[family])?;
    Ok(out.pop().expect("one family in, one score set out"))
}

/// Mean distance from each point of `X ∪ Y` to its k-th nearest other point.
pub fn auto_sigma(x: &SampleSet, y: &SampleSet, k: usize) -> Result<f64> {
    let joint = x.concat(y)?;
    if k == 0 || k >= joint.len() {
        return Err(invalid(alloc::format!(
            "auto bandwidth needs 1 <= k < {} (joint training size), got k = {k}",
            joint.len()
        )));
    }
    let sq = knn_sq_radii(&joint, k);
    let sum: f64 = sq.iter().map(|r| math::sqrt(*r)).sum();
    Ok(sum / joint.len() as f64)
}

enum Prepared {
    Knn { k: usize },
    Kde { sigma2: f64 },
    Ipr { rx2: Vec<f64>, ry2: Vec<f64> },
    Cov { k: usize },
}

fn prepare(split: &Split, family: Family) -> Result<Prepared> {
    let nx = split.train_x.len();
    let ny = split.train_y.len();
    let own = usize::from(split.aliased);
    Ok(match family {
        Family::Knn { k } => {
            check_k(k, nx + ny - own, "the joint training set")?;
            Prepared::Knn { k }
        }
        Family::Kde { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(invalid(alloc::format!("KDE bandwidth must be positive, got {sigma}")));
            }
            Prepared::Kde { sigma2: sigma * sigma }
        }
        Family::Ipr { k } => {
            check_k(k, nx - 1, split.train_x.label())?;
            check_k(k, ny - 1, split.train_y.label())?;
            Prepared::Ipr { rx2: knn_sq_radii(&split.train_x, k), ry2: knn_sq_radii(&split.train_y, k) }
        }
        Family::Cov { k } => {
            check_k(k, nx - own, split.train_x.label())?;
            check_k(k, ny - own, split.train_y.label())?;
            Prepared::Cov { k }
        }
    })
}

fn check_k(k: usize, available: usize, what: &str) -> Result<()> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > available {
        return Err(invalid(alloc::format!("k = {k} exceeds the {available} available neighbors in {what}")));
    }
    Ok(())
}

#[derive(Default)]
struct Scratch {
    dx: Vec<Vec<f64>>,
    dy: Vec<Vec<f64>>,
    buf: Vec<f64>,
}

/// Ball counts `(c_x, c_y)` of every test point under one family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCounts {
    pub from_p: Vec<(usize, usize)>,
    pub from_q: Vec<(usize, usize)>,
}

impl TestCounts {
    pub fn scores(&self) -> ScoredTestSet {
        let ratio = |v: &[(usize, usize)]| v.iter().map(|&(cx, cy)| count_ratio(cy, cx)).collect();
        ScoredTestSet { from_p: ratio(&self.from_p), from_q: ratio(&self.from_q) }
    }

    /// `(fpr, fnr)` of the extreme classifier `f_inf(z) = 1{c_x(z) >= 1}`.
    pub fn extreme_rates(&self) -> (f64, f64) {
        let fpr = self.from_p.iter().filter(|c| c.0 == 0).count() as f64 / self.from_p.len() as f64;
        let fnr = self.from_q.iter().filter(|c| c.0 >= 1).count() as f64 / self.from_q.len() as f64;
        (fpr, fnr)
    }
}

/// Scores every test point of `split` under each family, in one scan.
pub fn score_families(split: &Split, families: &[Family]) -> Result<Vec<ScoredTestSet>> {
    Ok(count_families(split, families)?.iter().map(TestCounts::scores).collect())
}

/// Ball counts of every test point under each family, in one scan.
pub fn count_families(split: &Split, families: &[Family]) -> Result<Vec<TestCounts>> {
    let prepared = families.iter().map(|f| prepare(split, *f)).collect::<Result<Vec<_>>>()?;
    let n_p = split.test_x.len();
    let n_q = split.test_y.len();
    let point = |i: usize| {
        if i < n_p {
            (split.test_x.row(i), split.aliased.then_some(Member::X(i)))
        } else {
            let j = i - n_p;
            (split.test_y.row(j), split.aliased.then_some(Member::Y(j)))
        }
    };
    let rows: Vec<Vec<(usize, usize)>> = par::map_blocks(n_p + n_q, QUERY_BLOCK, Scratch::default, |s, range| {
        let queries: Vec<&[f64]> = range.clone().map(|i| point(i).0).collect();
        fill_sq_dists_block(&queries, &split.train_x, &mut s.dx);
        fill_sq_dists_block(&queries, &split.train_y, &mut s.dy);
        range
            .enumerate()
            .map(|(b, i)| {
                let member = point(i).1;
                let (dx, dy) = (&mut s.dx[b], &mut s.dy[b]);
                // a training point's distance to itself is exactly zero
                match member {
                    Some(Member::X(j)) => dx[j] = 0.0,
                    Some(Member::Y(j)) => dy[j] = 0.0,
                    None => {}
                }
                count_point(dx, dy, member, &prepared, &mut s.buf)
            })
            .collect()
    });
    let mut out: Vec<TestCounts> = families
        .iter()
        .map(|_| TestCounts { from_p: Vec::with_capacity(n_p), from_q: Vec::with_capacity(n_q) })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (set, c) in out.iter_mut().zip(row) {
            if i < n_p {
                set.from_p.push(c);
            } else {
                set.from_q.push(c);
            }
        }
    }
    Ok(out)
}

fn count_point(
    dx: &[f64],
    dy: &[f64],
    member: Option<Member>,
    prepared: &[Prepared],
    buf: &mut Vec<f64>,
) -> Vec<(usize, usize)> {
    let self_x = member.and_then(Member::x_index);
    let self_y = member.and_then(Member::y_index);
    prepared
        .iter()
        .map(|p| match p {
            Prepared::Knn { k } => {
                buf.clear();
                copy_without(dx, self_x, buf);
                copy_without(dy, self_y, buf);
                let r2 = kth_smallest(buf, *k);
                (count_within(dx, r2), count_within(dy, r2))
            }
            Prepared::Kde { sigma2 } => (count_within(dx, *sigma2), count_within(dy, *sigma2)),
            Prepared::Ipr { rx2, ry2 } => {
                let cx = dx.iter().zip(rx2).filter(|(d, r)| d <= r).count();
                let cy = dy.iter().zip(ry2).filter(|(d, r)| d <= r).count();
                (cx, cy)
            }
            Prepared::Cov { k } => {
                buf.clear();
                copy_without(dx, self_x, buf);
                let rx2 = kth_smallest(buf, *k);
                buf.clear();
                copy_without(dy, self_y, buf);
                let ry2 = kth_smallest(buf, *k);
                (count_within(dx, ry2), count_within(dy, rx2))
            }
        })
        .collect()
}

/// Human-readable family label, e.g. `knn(k=100)`.
pub fn family_label(family: &Family) -> String {
    match family {
        Family::Knn { k } => alloc::format!("knn(k={k})"),
        Family::Kde { sigma } => alloc::format!("kde(sigma={sigma})"),
        Family::Ipr { k } => alloc::format!("ipr(k={k})"),
        Family::Cov { k } => alloc::format!("cov(k={k})"),
    }
}
