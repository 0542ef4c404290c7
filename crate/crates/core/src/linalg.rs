//! Small dense linear algebra: covariance, Jacobi eigensolver, Cholesky, PCA.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::model::SampleSet;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(alloc::format!("matrix data has {} entries, expected {rows} x {cols}", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != cols {
                return Err(invalid(alloc::format!(
                    "matrix row {i} has {} entries, expected {cols}",
                    r.as_ref().len()
                )));
            }
            data.extend_from_slice(r.as_ref());
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|a_ij - a_ji|` relative to `max(1, max|a|)`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max(math::abs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst / self.max_abs().max(1.0)
    }
}

fn check_symmetric(a: &Matrix, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    if a.asymmetry() > tol {
        return Err(Error::NotSymmetric);
    }
    Ok(())
}

/// Sample mean and unbiased (`N - 1`) covariance, symmetrized.
pub fn fit_gaussian(s: &SampleSet) -> Result<(Vec<f64>, Matrix)> {
    let n = s.len();
    if n < 2 {
        return Err(invalid("fitting a covariance needs at least two samples"));
    }
    let d = s.dim();
    let mut mean = vec![0.0; d];
    for r in s.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Matrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in s.rows() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut cov.data[i * d..i * d + d];
            for j in i..d {
                row[j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok((mean, cov))
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass drops
/// below `1e-12 ‖A‖_F`.
pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    check_symmetric(a, 1e-8)?;
    let n = a.rows();
    let mut m = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = Matrix::identity(n);
    let target = 1e-12 * a.frobenius();
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        let off = off_diagonal(&m);
        if off <= target || off == 0.0 {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                rotate(&mut m, p, q, c, s);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, dst, v.get(k, src));
        }
    }
    Ok(SymEig { values, vectors, sweeps })
}

fn off_diagonal(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j) * m.get(i, j);
            }
        }
    }
    math::sqrt(s)
}

/// `A <- Jᵀ A J` for the rotation in the `(p, q)` plane.
fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    let apq = m.get(p, q);
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m.get(k, p);
        let akq = m.get(k, q);
        let nkp = c * akp - s * akq;
        let nkq = s * akp + c * akq;
        m.set(k, p, nkp);
        m.set(p, k, nkp);
        m.set(k, q, nkq);
        m.set(q, k, nkq);
    }
    m.set(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
    m.set(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
}

/// Lower-triangular `L` with `L Lᵀ = A + jitter · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricFactor {
    pub lower: Matrix,
    /// Diagonal jitter that was needed (0 when none).
    pub jitter: f64,
}

impl SymmetricFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `L v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.lower.row(i)[..=i].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Solves `L w = v` by forward substitution.
    pub fn solve_lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut w = vec![0.0; n];
        for i in 0..n {
            let row = self.lower.row(i);
            let s: f64 = row[..i].iter().zip(&w[..i]).map(|(a, b)| a * b).sum();
            w[i] = (v[i] - s) / row[i];
        }
        w
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| math::ln(self.lower.get(i, i))).sum::<f64>()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.lower.matmul(&self.lower.transpose()).expect("square factor")
    }
}

fn cholesky_plain(a: &Matrix, shift: f64) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j) + shift;
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = math::sqrt(diag);
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Some(l)
}

/// Cholesky factorization, retrying with diagonal jitter `1e-9 · trace/d`
/// (then ×10, up to three retries) when a pivot is not positive.
pub fn cholesky_jittered(a: &Matrix) -> Result<SymmetricFactor> {
    check_symmetric(a, 1e-8)?;
    if let Some(lower) = cholesky_plain(a, 0.0) {
        return Ok(SymmetricFactor { lower, jitter: 0.0 });
    }
    let n = a.rows().max(1);
    let base = math::abs(a.trace()) / n as f64;
    let mut jitter = 1e-9 * if base > 0.0 { base } else { 1.0 };
    for _ in 0..3 {
        if let Some(lower) = cholesky_plain(a, jitter) {
            return Ok(SymmetricFactor { lower, jitter });
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite(alloc::format!(
        "factorization failed even with diagonal jitter {:.3e}",
        jitter / 10.0
    )))
}

/// Principal axes of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `d x r` matrix whose columns are the principal directions.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl PcaBasis {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.components.cols()
    }
}

/// Mean and covariance eigenvectors of `s`, sorted by decreasing variance.
pub fn fit_pca(s: &SampleSet) -> Result<PcaBasis> {
    let (mean, cov) = fit_gaussian(s)?;
    let eig = sym_eig(&cov)?;
    Ok(PcaBasis { mean, components: eig.vectors, eigenvalues: eig.values })
}

/// Coordinates of each row of `s` on the first `d_out` principal axes.
pub fn pca_project(basis: &PcaBasis, s: &SampleSet, d_out: usize) -> Result<SampleSet> {
    if s.dim() != basis.input_dim() {
        return Err(Error::DimensionMismatch { expected: basis.input_dim(), found: s.dim() });
    }
    if d_out == 0 || d_out > basis.rank() {
        return Err(invalid(alloc::format!("projection dimension must lie in 1..={}, got {d_out}", basis.rank())));
    }
    let d = s.dim();
    let mut out = Vec::with_capacity(s.len() * d_out);
    let mut centered = vec![0.0; d];
    for r in s.rows() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&basis.mean) {
            *c = v - m;
        }
        for j in 0..d_out {
            let mut acc = 0.0;
            for (i, c) in centered.iter().enumerate() {
                acc += c * basis.components.get(i, j);
            }
            out.push(acc);
        }
    }
    SampleSet::new(out, d_out, s.label())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fit_gaussian_example() {
        let s = SampleSet::from_rows(&[[0.0, 0.0], [2.0, 0.0]], "s").unwrap();
        let (mean, cov) = fit_gaussian(&s).unwrap();
        assert_eq!(mean, vec![1.0, 0.0]);
        assert_eq!(cov, Matrix::from_rows(&[[2.0, 0.0], [0.0, 0.0]]).unwrap());
        let c = SampleSet::from_rows(&[[1.0, 1.0]; 4], "c").unwrap();
        assert_eq!(fit_gaussian(&c).unwrap().1.max_abs(), 0.0);
        assert!(fit_gaussian(&SampleSet::from_rows(&[[1.0]], "one").unwrap()).is_err());
    }

    #[test]
    fn eig_examples() {
        let e = sym_eig(&Matrix::diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!(close(e.vectors.get(1, 0).abs(), 1.0, 1e-15));
        let e = sym_eig(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert!(close(e.values[0], 3.0, 1e-12) && close(e.values[1], 1.0, 1e-12));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!(close(e.vectors.get(0, 0).abs(), h, 1e-12));
        assert!(close(e.vectors.get(0, 0), e.vectors.get(1, 0), 1e-12));
        assert!(close(e.vectors.get(0, 1), -e.vectors.get(1, 1), 1e-12));
        assert!(sym_eig(&Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let f = cholesky_jittered(&Matrix::identity(3)).unwrap();
        assert_eq!(f.lower, Matrix::identity(3));
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let f = cholesky_jittered(&a).unwrap();
        assert_eq!(f.jitter, 0.0);
        assert!(close(f.lower.get(0, 0), 2.0, 1e-15));
        assert!(close(f.lower.get(1, 0), 1.0, 1e-15));
        assert!(close(f.lower.get(1, 1), 2f64.sqrt(), 1e-15));
        let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let f = cholesky_jittered(&singular).unwrap();
        assert!(f.jitter > 0.0);
        let r = f.reconstruct();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(r.get(i, j), singular.get(i, j), 1e-6));
            }
        }
        let neg = Matrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(cholesky_jittered(&neg), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn collinear_projection_is_isometric() {
        let s = SampleSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [3.0, 6.0], [-1.0, -2.0]], "line").unwrap();
        let basis = fit_pca(&s).unwrap();
        let p = pca_project(&basis, &s, 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d0 = crate::neighbors::distance(s.row(i), s.row(j));
                let d1 = crate::neighbors::distance(p.row(i), p.row(j));
                assert!(close(d0, d1, 1e-12));
            }
        }
        assert!(pca_project(&basis, &s, 3).is_err());
    }
}
