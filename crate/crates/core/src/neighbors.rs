//! Brute-force Euclidean neighbors.
//!
//! Everything here works on squared distances internally and only takes a
//! square root when a distance is returned, so tie detection at a k-th
//! radius is exact for a given set of inputs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::model::SampleSet;
use crate::par;

/// Squared Euclidean distance.
///
/// With the `std` feature on an AVX2/FMA machine this uses the vector
/// kernel, so it agrees bitwise with the batched scans.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if has_avx2() {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { simd::sq_dist(a, b) };
    }
    sq_dist_portable(a, b)
}

#[inline]
fn sq_dist_portable(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the loop vectorizable
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let rem_a = chunks_a.remainder();
    let rem_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for j in 0..4 {
            let t = ca[j] - cb[j];
            acc[j] += t * t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in rem_a.iter().zip(rem_b) {
        let t = x - y;
        tail += t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(sq_dist(a, b))
}

/// Dense `Q x R` table of distances between queries and references.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn pairwise_distances(queries: &SampleSet, refs: &SampleSet) -> Result<DistanceTable> {
    queries.check_same_dim(refs)?;
    let rows: Vec<Vec<f64>> = par::map_indexed(
        queries.len(),
        || (),
        |_, i| {
            let q = queries.row(i);
            refs.rows().map(|r| distance(q, r)).collect()
        },
    );
    let data = rows.into_iter().flatten().collect();
    Ok(DistanceTable { rows: queries.len(), cols: refs.len(), data })
}

/// k-th smallest value (1-based `k`) of `buf`; reorders `buf`.
#[inline]
pub(crate) fn kth_smallest(buf: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= buf.len());
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Squared distances from `z` to every row of `refs`, written into `out`.
#[inline]
pub(crate) fn fill_sq_dists(z: &[f64], refs: &SampleSet, out: &mut Vec<f64>) {
    out.clear();
    out.extend(refs.rows().map(|r| sq_dist(z, r)));
}

/// Number of query rows sharing one pass over the references.
pub(crate) const QUERY_BLOCK: usize = 16;

/// Squared distances from each query to every row of `refs`; `out[b]`
/// receives the distances of `queries[b]`. Reference rows are visited once
/// per block so they stay in cache across the block.
pub(crate) fn fill_sq_dists_block(queries: &[&[f64]], refs: &SampleSet, out: &mut Vec<Vec<f64>>) {
    out.resize_with(queries.len().max(out.len()), Vec::new);
    for o in out.iter_mut() {
        o.clear();
    }
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if has_avx2() {
        // SAFETY: the required CPU features were detected at runtime.
        unsafe { simd::block_avx2(queries, refs, out) };
        return;
    }
    for r in refs.rows() {
        for (q, o) in queries.iter().zip(out.iter_mut()) {
            o.push(sq_dist_portable(q, r));
        }
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
fn has_avx2() -> bool {
    std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma")
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
mod simd {
    //! Both kernels accumulate a pair in the same order (one 4-lane
    //! accumulator, lanes summed pairwise, then the scalar tail), so a pair
    //! gets bitwise the same distance whichever kernel computes it.

    use alloc::vec::Vec;
    use core::arch::x86_64::*;

    use crate::model::SampleSet;

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn block_avx2(queries: &[&[f64]], refs: &SampleSet, out: &mut [Vec<f64>]) {
        let n = refs.len();
        for o in out.iter_mut().take(queries.len()) {
            o.resize(n, 0.0);
        }
        let quads = queries.len() / 4 * 4;
        for (ri, r) in refs.rows().enumerate() {
            let mut b = 0;
            while b < quads {
                let v = sq_dist4(&queries[b..b + 4], r);
                out[b][ri] = v[0];
                out[b + 1][ri] = v[1];
                out[b + 2][ri] = v[2];
                out[b + 3][ri] = v[3];
                b += 4;
            }
            for (q, o) in queries[quads..].iter().zip(out[quads..].iter_mut()) {
                o[ri] = sq_dist(q, r);
            }
        }
    }

    #[target_feature(enable = "avx2,fma")]
    #[inline]
    unsafe fn finish(acc: __m256d, a: &[f64], b: &[f64], from: usize) -> f64 {
        let mut lanes = [0.0f64; 4];
        _mm256_storeu_pd(lanes.as_mut_ptr(), acc);
        let mut tail = 0.0;
        for i in from..a.len() {
            let t = a[i] - b[i];
            tail += t * t;
        }
        (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
    }

    #[target_feature(enable = "avx2,fma")]
    #[inline]
    pub(super) unsafe fn sq_dist(a: &[f64], r: &[f64]) -> f64 {
        let body = r.len() / 4 * 4;
        let mut acc = _mm256_setzero_pd();
        let mut i = 0;
        while i < body {
            let d = _mm256_sub_pd(_mm256_loadu_pd(a.as_ptr().add(i)), _mm256_loadu_pd(r.as_ptr().add(i)));
            acc = _mm256_fmadd_pd(d, d, acc);
            i += 4;
        }
        finish(acc, a, r, body)
    }

    /// Four queries against one reference row.
    #[target_feature(enable = "avx2,fma")]
    #[inline]
    unsafe fn sq_dist4(q: &[&[f64]], r: &[f64]) -> [f64; 4] {
        let body = r.len() / 4 * 4;
        let pr = r.as_ptr();
        let (q0, q1, q2, q3) = (q[0].as_ptr(), q[1].as_ptr(), q[2].as_ptr(), q[3].as_ptr());
        let mut a0 = _mm256_setzero_pd();
        let mut a1 = _mm256_setzero_pd();
        let mut a2 = _mm256_setzero_pd();
        let mut a3 = _mm256_setzero_pd();
        let mut i = 0;
        while i < body {
            let rv = _mm256_loadu_pd(pr.add(i));
            let d0 = _mm256_sub_pd(_mm256_loadu_pd(q0.add(i)), rv);
            let d1 = _mm256_sub_pd(_mm256_loadu_pd(q1.add(i)), rv);
            let d2 = _mm256_sub_pd(_mm256_loadu_pd(q2.add(i)), rv);
            let d3 = _mm256_sub_pd(_mm256_loadu_pd(q3.add(i)), rv);
            a0 = _mm256_fmadd_pd(d0, d0, a0);
            a1 = _mm256_fmadd_pd(d1, d1, a1);
            a2 = _mm256_fmadd_pd(d2, d2, a2);
            a3 = _mm256_fmadd_pd(d3, d3, a3);
            i += 4;
        }
        [finish(a0, q[0], r, body), finish(a1, q[1], r, body), finish(a2, q[2], r, body), finish(a3, q[3], r, body)]
    }
}

/// Copies `src` into `dst`, skipping position `skip`.
#[inline]
pub(crate) fn copy_without(src: &[f64], skip: Option<usize>, dst: &mut Vec<f64>) {
    match skip {
        Some(s) => {
            dst.extend_from_slice(&src[..s]);
            dst.extend_from_slice(&src[s + 1..]);
        }
        None => dst.extend_from_slice(src),
    }
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

/// Distance from `z` to its k-th nearest row of `refs`.
///
/// `exclude` names the row of `refs` that *is* `z` (if any); it is never
/// counted as a neighbor.
pub fn kth_radius(z: &[f64], refs: &SampleSet, k: usize, exclude: Option<usize>) -> Result<f64> {
    if z.len() != refs.dim() {
        return Err(Error::DimensionMismatch { expected: refs.dim(), found: z.len() });
    }
    let available = refs.len() - usize::from(exclude.is_some());
    check_k(k, available, refs.label())?;
    let mut all = Vec::with_capacity(refs.len());
    fill_sq_dists(z, refs, &mut all);
    let mut buf = Vec::with_capacity(refs.len());
    copy_without(&all, exclude, &mut buf);
    Ok(math::sqrt(kth_smallest(&mut buf, k)))
}

/// k-th nearest neighbor radius of every row of a set, within the set itself.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnRadii {
    pub radii: Vec<f64>,
    pub k: usize,
    pub label: String,
}

impl KnnRadii {
    pub(crate) fn squared(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r * r).collect()
    }
}

/// Radii `r(x)` = distance from `x` to its k-th nearest other row of `set`.
pub fn knn_radii(set: &SampleSet, k: usize) -> Result<KnnRadii> {
    check_k(k, set.len().saturating_sub(1), set.label())?;
    let sq = knn_sq_radii(set, k);
    Ok(KnnRadii { radii: sq.into_iter().map(math::sqrt).collect(), k, label: set.label().into() })
}

pub(crate) fn knn_sq_radii(set: &SampleSet, k: usize) -> Vec<f64> {
    par::map_blocks(
        set.len(),
        QUERY_BLOCK,
        || (Vec::new(), Vec::with_capacity(set.len())),
        |(all, buf): &mut (Vec<Vec<f64>>, Vec<f64>), range| {
            let queries: Vec<&[f64]> = range.clone().map(|i| set.row(i)).collect();
            fill_sq_dists_block(&queries, set, all);
            range
                .zip(all.iter())
                .map(|(i, d)| {
                    buf.clear();
                    copy_without(d, Some(i), buf);
                    kth_smallest(buf, k)
                })
                .collect()
        },
    )
}

/// Which training row a query point is, when it is one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    X(usize),
    Y(usize),
}

impl Member {
    pub(crate) fn x_index(self) -> Option<usize> {
        match self {
            Member::X(i) => Some(i),
            Member::Y(_) => None,
        }
    }

    pub(crate) fn y_index(self) -> Option<usize> {
        match self {
            Member::Y(i) => Some(i),
            Member::X(_) => None,
        }
    }
}

/// Members of each class inside the kNN ball of `z` computed in `X ∪ Y`.
///
/// The radius is the k-th nearest distance with `z`'s own row left out; the
/// ball is closed, so every point at exactly the radius is counted, and `z`
/// itself (distance 0) is counted in its own class.
pub fn ball_counts(
    z: &[f64],
    train_x: &SampleSet,
    train_y: &SampleSet,
    k: usize,
    member: Option<Member>,
) -> Result<(usize, usize)> {
    train_x.check_same_dim(train_y)?;
    if z.len() != train_x.dim() {
        return Err(Error::DimensionMismatch { expected: train_x.dim(), found: z.len() });
    }
    let available = train_x.len() + train_y.len() - usize::from(member.is_some());
    check_k(k, available, "the joint training set")?;
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    fill_sq_dists(z, train_x, &mut dx);
    fill_sq_dists(z, train_y, &mut dy);
    let mut joint = Vec::with_capacity(dx.len() + dy.len());
    copy_without(&dx, member.and_then(Member::x_index), &mut joint);
    copy_without(&dy, member.and_then(Member::y_index), &mut joint);
    let r2 = kth_smallest(&mut joint, k);
    Ok((count_within(&dx, r2), count_within(&dy, r2)))
}

#[inline]
pub(crate) fn count_within(sq: &[f64], r2: f64) -> usize {
    sq.iter().filter(|&&d| d <= r2).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pts(v: &[f64]) -> SampleSet {
        SampleSet::from_scalars(v, "s").unwrap()
    }

    #[test]
    fn pairwise_small_cases() {
        let s = pts(&[0.0, 3.0]);
        let t = pairwise_distances(&s, &s).unwrap();
        assert_eq!(t.row(0), &[0.0, 3.0]);
        assert_eq!(t.row(1), &[3.0, 0.0]);
        let q = SampleSet::from_rows(&[[0.0, 0.0]], "q").unwrap();
        let r = SampleSet::from_rows(&[[3.0, 4.0]], "r").unwrap();
        assert_eq!(pairwise_distances(&q, &r).unwrap().get(0, 0), 5.0);
        assert!(pairwise_distances(&q, &s).is_err());
    }

    #[test]
    fn kth_radius_examples() {
        let refs = pts(&[0.0, 1.0, 3.0]);
        assert_eq!(kth_radius(&[0.0], &refs, 1, Some(0)).unwrap(), 1.0);
        assert_eq!(kth_radius(&[3.0], &refs, 2, Some(2)).unwrap(), 3.0);
        assert_eq!(kth_radius(&[5.0], &pts(&[0.0]), 1, None).unwrap(), 5.0);
        assert!(kth_radius(&[0.0], &refs, 3, Some(0)).is_err());
        assert!(kth_radius(&[0.0], &refs, 0, None).is_err());
    }

    #[test]
    fn ball_count_examples() {
        let x = pts(&[0.0, 1.0]);
        let y = pts(&[10.0, 11.0]);
        assert_eq!(ball_counts(&[0.4], &x, &y, 2, None).unwrap(), (2, 0));
        assert_eq!(ball_counts(&[0.5], &pts(&[0.0]), &pts(&[1.0]), 2, None).unwrap(), (1, 1));
    }

    #[test]
    fn ball_counts_symmetric_for_equal_multisets() {
        let x = pts(&[0.0, 1.0, 2.5, 4.0, 7.0]);
        for k in 1..=9 {
            for z in [-1.0, 0.0, 1.7, 3.3, 7.0] {
                let (cx, cy) = ball_counts(&[z], &x, &x, k, None).unwrap();
                assert_eq!(cx, cy, "k={k} z={z}");
            }
            let (cx, cy) = ball_counts(&[2.5], &x, &x, k, Some(Member::X(2))).unwrap();
            assert_eq!(cx, cy, "member k={k}");
        }
    }

    #[test]
    fn ties_at_radius_are_all_counted() {
        // z = 0 with neighbors at distance 1 on both sides
        let x = pts(&[-1.0, 1.0]);
        let y = pts(&[1.0, 5.0]);
        let (cx, cy) = ball_counts(&[0.0], &x, &y, 1, None).unwrap();
        assert_eq!((cx, cy), (2, 1));
    }

    #[test]
    fn knn_radii_exclude_self() {
        let r = knn_radii(&pts(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(r.radii, vec![1.0, 1.0, 2.0]);
        assert!(knn_radii(&pts(&[0.0]), 1).is_err());
    }
}
