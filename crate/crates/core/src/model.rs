//! Shared domain types: sample sets, train/test splits, λ-grids, PR curves
//! and deterministic random streams.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::math;

/// An `N x d` matrix of finite feature vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
    label: String,
}

impl SampleSet {
    /// Builds a set from row-major `data` with `d` columns.
    pub fn new(data: Vec<f64>, d: usize, label: impl Into<String>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSamples("dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidSamples("a sample set needs at least one row".into()));
        }
        if data.len() % d != 0 {
            return Err(Error::InvalidSamples(alloc::format!(
                "{} values do not form rows of dimension {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples(alloc::format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let n = data.len() / d;
        Ok(SampleSet { data, n, d, label: label.into() })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], label: impl Into<String>) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::InvalidSamples("a sample set needs at least one row".into()))?;
        let d = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::InvalidSamples(alloc::format!("row {i} has {} values, expected {d}", row.len())));
            }
            data.extend_from_slice(row);
        }
        SampleSet::new(data, d, label)
    }

    /// One-dimensional set from scalar values.
    pub fn from_scalars(values: &[f64], label: impl Into<String>) -> Result<Self> {
        SampleSet::new(values.to_vec(), 1, label)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; kept for API symmetry with slices.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New set made of the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(invalid(alloc::format!("row index {i} out of range (n = {})", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        SampleSet::new(data, self.d, self.label.clone())
    }

    /// Concatenates the rows of two sets of equal dimension.
    pub fn concat(&self, other: &SampleSet) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SampleSet::new(data, self.d, self.label.clone())
    }

    pub(crate) fn check_same_dim(&self, other: &SampleSet) -> Result<()> {
        if self.d != other.d {
            Err(Error::DimensionMismatch { expected: self.d, found: other.d })
        } else {
            Ok(())
        }
    }
}

/// Train/test partition settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Portion of each set assigned to training.
    pub fraction: f64,
    pub enabled: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        SplitSpec { fraction, enabled: true, seed }
    }

    /// No split: the classifiers are fitted and evaluated on the same samples.
    pub fn disabled() -> Self {
        SplitSpec { fraction: 1.0, enabled: false, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SplitSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InvalidSplit(alloc::format!(
                "fraction must lie strictly between 0 and 1, got {}",
                self.fraction
            )));
        }
        Ok(())
    }
}

/// Training and test sets for both distributions.
///
/// When `aliased` is true the test sets are the training sets: test row `i`
/// of `test_x` is training row `i` of `train_x`, and likewise for `y`.
#[derive(Debug, Clone)]
pub struct Split {
    pub train_x: SampleSet,
    pub train_y: SampleSet,
    pub test_x: SampleSet,
    pub test_y: SampleSet,
    pub aliased: bool,
}

impl Split {
    /// Unsplit view over `x` and `y`.
    pub fn unsplit(x: &SampleSet, y: &SampleSet) -> Result<Self> {
        x.check_same_dim(y)?;
        Ok(Split { train_x: x.clone(), train_y: y.clone(), test_x: x.clone(), test_y: y.clone(), aliased: true })
    }

    /// Explicit disjoint train and test sets.
    pub fn explicit(train_x: SampleSet, train_y: SampleSet, test_x: SampleSet, test_y: SampleSet) -> Result<Self> {
        train_x.check_same_dim(&train_y)?;
        train_x.check_same_dim(&test_x)?;
        train_x.check_same_dim(&test_y)?;
        Ok(Split { train_x, train_y, test_x, test_y, aliased: false })
    }

    pub fn dim(&self) -> usize {
        self.train_x.dim()
    }

    /// Same split with the roles of the two distributions exchanged.
    pub fn swapped(&self) -> Split {
        Split {
            train_x: self.train_y.clone(),
            train_y: self.train_x.clone(),
            test_x: self.test_y.clone(),
            test_y: self.test_x.clone(),
            aliased: self.aliased,
        }
    }
}

/// Partitions `x` and `y` into training and test halves.
///
/// Each set is shuffled independently (uniform, without replacement) and
/// its first `floor(fraction * N)` rows become the training part.
pub fn split_samples(x: &SampleSet, y: &SampleSet, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    x.check_same_dim(y)?;
    if !spec.enabled {
        return Split::unsplit(x, y);
    }
    let stream = RngStream::new(spec.seed, 0);
    let (train_x, test_x) = split_one(x, spec.fraction, &mut stream.child(1).rng())?;
    let (train_y, test_y) = split_one(y, spec.fraction, &mut stream.child(2).rng())?;
    Ok(Split { train_x, train_y, test_x, test_y, aliased: false })
}

fn split_one(s: &SampleSet, fraction: f64, rng: &mut ChaCha8Rng) -> Result<(SampleSet, SampleSet)> {
    let n = s.len();
    let n_train = math::floor(fraction * n as f64) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidSplit(alloc::format!(
            "splitting {n} rows of '{}' at fraction {fraction} leaves an empty half",
            s.label()
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let train = s.select(&idx[..n_train])?;
    let test = s.select(&idx[n_train..])?;
    Ok((train, test))
}

/// Strictly increasing λ values from `0` to `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    /// Validates an explicit grid.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("a λ-grid needs at least the two sentinels 0 and +inf"));
        }
        if values[0] != 0.0 || values[values.len() - 1] != f64::INFINITY {
            return Err(invalid("a λ-grid must start at 0 and end at +inf"));
        }
        for w in values.windows(2) {
            if !(w[0] < w[1]) {
                return Err(invalid("λ-grid values must be strictly increasing"));
            }
        }
        Ok(LambdaGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of interior (finite, positive) values.
    pub fn interior_len(&self) -> usize {
        self.values.len() - 2
    }
}

/// Angular grid: `0`, `tan(iπ / (2(m+1)))` for `i = 1..=m`, `+inf`.
///
/// The grid is closed under `λ -> 1/λ` (up to rounding), and contains `1`
/// whenever `m` is odd.
pub fn make_lambda_grid(m: usize) -> Result<LambdaGrid> {
    if m == 0 {
        return Err(invalid("λ-grid needs at least one interior value"));
    }
    let mut values = Vec::with_capacity(m + 2);
    values.push(0.0);
    let step = FRAC_PI_2 / (m + 1) as f64;
    for i in 1..=m {
        // the centre value is pinned to exactly 1 so that odd grids hit it
        if 2 * i == m + 1 {
            values.push(1.0);
        } else {
            values.push(math::tan(step * i as f64));
        }
    }
    values.push(f64::INFINITY);
    LambdaGrid::from_values(values)
}

/// One point `(λ, α, β)` of a PR curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PrPoint {
    /// Builds the point from `α` alone using `β = α/λ` (λ = 0 needs `beta`).
    pub fn from_alpha(lambda: f64, alpha: f64, beta_zero: f64) -> Self {
        if lambda == 0.0 {
            PrPoint { lambda, alpha: 0.0, beta: beta_zero }
        } else if lambda == f64::INFINITY {
            PrPoint { lambda, alpha, beta: 0.0 }
        } else {
            PrPoint { lambda, alpha, beta: alpha / lambda }
        }
    }
}

/// Provenance attached to a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMeta {
    pub method: String,
    pub k: Option<usize>,
    pub sigma: Option<f64>,
    pub split: Option<SplitSpec>,
    pub seed: Option<u64>,
}

impl CurveMeta {
    pub fn named(method: impl Into<String>) -> Self {
        CurveMeta { method: method.into(), k: None, sigma: None, split: None, seed: None }
    }
}

impl Default for CurveMeta {
    fn default() -> Self {
        CurveMeta::named("unknown")
    }
}

/// A PR curve sampled on a λ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub meta: CurveMeta,
}

impl PrCurve {
    pub fn new(points: Vec<PrPoint>, meta: CurveMeta) -> Self {
        PrCurve { points, meta }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.lambda)
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.alpha)
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.beta)
    }

    /// `α` at λ = +inf, if the curve has that point.
    pub fn alpha_inf(&self) -> Option<f64> {
        self.points.iter().find(|p| p.lambda == f64::INFINITY).map(|p| p.alpha)
    }

    /// `β` at λ = 0, if the curve has that point.
    pub fn beta_zero(&self) -> Option<f64> {
        self.points.iter().find(|p| p.lambda == 0.0).map(|p| p.beta)
    }

    /// Exchanges precision and recall: `(λ, α, β) -> (1/λ, β, α)`, reordered
    /// so that λ stays increasing.
    pub fn swapped(&self) -> PrCurve {
        let points = self
            .points
            .iter()
            .rev()
            .map(|p| PrPoint { lambda: reciprocal(p.lambda), alpha: p.beta, beta: p.alpha })
            .collect();
        PrCurve { points, meta: self.meta.clone() }
    }

    /// P = Q reference curve `α = min(1, λ)` on `grid`.
    pub fn identical_distributions(grid: &LambdaGrid) -> PrCurve {
        let points =
            grid.values().iter().map(|&l| PrPoint::from_alpha(l, if l < 1.0 { l } else { 1.0 }, 1.0)).collect();
        PrCurve { points, meta: CurveMeta::named("identity") }
    }
}

pub(crate) fn reciprocal(l: f64) -> f64 {
    if l == 0.0 {
        f64::INFINITY
    } else if l == f64::INFINITY {
        0.0
    } else {
        1.0 / l
    }
}

/// Deterministic random stream keyed by `(master_seed, stream_index)`.
///
/// Substreams are ChaCha8 streams of the same key, so results only depend on
/// the indices handed out, never on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Derived stream for a sub-task; distinct tags give distinct streams.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream { master_seed: self.master_seed, stream_index: splitmix64(self.stream_index ^ splitmix64(tag)) }
    }

    /// Seed suitable for a [`SplitSpec`] derived from this stream.
    pub fn derive_seed(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5851_f42d_4c95_7f2d)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl core::fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.enabled {
            write!(f, "{}", self.fraction)
        } else {
            f.write_str("none")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::RngCore;

    fn line(n: usize) -> SampleSet {
        let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
        SampleSet::from_scalars(&v, "line").unwrap()
    }

    #[test]
    fn sample_set_rejects_non_finite() {
        let err = SampleSet::new(vec![1.0, f64::NAN], 1, "bad").unwrap_err();
        assert!(matches!(err, Error::InvalidSamples(_)));
        assert!(SampleSet::new(vec![], 2, "empty").is_err());
        assert!(SampleSet::new(vec![1.0, 2.0, 3.0], 2, "ragged").is_err());
        assert!(SampleSet::from_rows(&[vec![1.0, 2.0], vec![3.0]], "ragged").is_err());
    }

    #[test]
    fn split_halves_are_disjoint() {
        let x = line(10);
        let y = line(10);
        let s = split_samples(&x, &y, &SplitSpec::new(0.5, 7)).unwrap();
        assert_eq!(s.train_x.len(), 5);
        assert_eq!(s.test_x.len(), 5);
        let mut all: Vec<f64> = s.train_x.as_slice().iter().chain(s.test_x.as_slice()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, x.as_slice().to_vec());
        assert!(!s.aliased);
    }

    #[test]
    fn disabled_split_aliases() {
        let x = line(4);
        let s = split_samples(&x, &x, &SplitSpec::disabled()).unwrap();
        assert_eq!(s.train_x, s.test_x);
        assert!(s.aliased);
    }

    #[test]
    fn split_of_single_row_fails() {
        let x = line(1);
        let err = split_samples(&x, &x, &SplitSpec::new(0.5, 1)).unwrap_err();
        assert!(matches!(err, Error::InvalidSplit(_)));
        assert!(split_samples(&line(4), &line(4), &SplitSpec::new(1.0, 1)).is_err());
    }

    #[test]
    fn split_is_reproducible() {
        let x = line(50);
        let a = split_samples(&x, &x, &SplitSpec::new(0.3, 99)).unwrap();
        let b = split_samples(&x, &x, &SplitSpec::new(0.3, 99)).unwrap();
        assert_eq!(a.train_x, b.train_x);
        assert_eq!(a.test_y, b.test_y);
        let c = split_samples(&x, &x, &SplitSpec::new(0.3, 100)).unwrap();
        assert_ne!(a.train_x, c.train_x);
    }

    #[test]
    fn grid_examples() {
        assert_eq!(make_lambda_grid(1).unwrap().values(), &[0.0, 1.0, f64::INFINITY]);
        let g = make_lambda_grid(3).unwrap();
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert!((v[1] - math::tan(core::f64::consts::PI / 8.0)).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
        assert!((v[3] - 1.0 / v[1]).abs() < 1e-12);
        let g = make_lambda_grid(101).unwrap();
        assert_eq!(g.len(), 103);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert!(g.values().contains(&1.0));
        assert!(make_lambda_grid(0).is_err());
    }

    #[test]
    fn grid_is_reflection_symmetric() {
        for m in [2usize, 5, 10, 101] {
            let g = make_lambda_grid(m).unwrap();
            let v = g.values();
            for i in 1..=m {
                let mirrored = v[m + 1 - i];
                assert!((v[i] * mirrored - 1.0).abs() < 1e-12, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn rng_streams_are_keyed() {
        let a = RngStream::new(5, 3).rng().next_u64();
        let b = RngStream::new(5, 3).rng().next_u64();
        let c = RngStream::new(5, 4).rng().next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(RngStream::new(5, 3).child(1), RngStream::new(5, 3).child(2));
    }

    #[test]
    fn swapped_curve_reverses_roles() {
        let g = make_lambda_grid(3).unwrap();
        let c = PrCurve::identical_distributions(&g);
        let s = c.swapped();
        assert_eq!(s.points.first().unwrap().lambda, 0.0);
        assert_eq!(s.points.last().unwrap().lambda, f64::INFINITY);
        for (p, q) in c.points.iter().zip(s.points.iter().rev()) {
            assert_eq!(p.alpha, q.beta);
            assert_eq!(p.beta, q.alpha);
        }
    }
}
