//! Small dense complex matrices.
//!
//! Everything here is sized for a handful of qubits or qutrits, so the
//! routines favour clarity over blocking or SIMD. Hermitian
//! eigendecomposition is delegated to `nalgebra`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{structural, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(structural(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(structural(format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// The rank-one projector `|v><v|` (not normalized).
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        m[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        m
    }

    /// Kronecker product of a non-empty list of factors, left to right.
    pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Self {
        factors.into_iter().fold(Self::identity(1), |acc, f| acc.kron(f))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|r| (0..self.cols).all(|c| r == c || self[(r, c)] == ZERO))
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c {
                    m = m.max(self[(r, c)].norm());
                }
            }
        }
        m
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let top = hermitian_eigenvalues(&gram).last().copied().unwrap_or(0.0);
        top.max(0.0).sqrt()
    }

    /// Partial trace over every subsystem not listed in `keep`.
    ///
    /// `dims` lists the subsystem dimensions in tensor order; `keep` must be
    /// strictly increasing.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if !self.is_square() || self.rows != total {
            return Err(structural(format!(
                "partial trace: matrix is {}x{}, subsystem dims {dims:?} give {total}",
                self.rows, self.cols
            )));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
            return Err(structural(format!(
                "partial trace: kept subsystems {keep:?} invalid for {} subsystems",
                dims.len()
            )));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let out_dim: usize = kept_dims.iter().product();
        let traced_total: usize = traced_dims.iter().product();

        let mut digits = vec![0usize; dims.len()];
        let mut compose = |kept_idx: usize, traced_idx: usize| -> usize {
            scatter(kept_idx, &kept_dims, keep, &mut digits);
            scatter(traced_idx, &traced_dims, &traced, &mut digits);
            gather(&digits, dims)
        };

        let mut out = Self::zeros(out_dim, out_dim);
        for r in 0..out_dim {
            for c in 0..out_dim {
                let mut acc = ZERO;
                for t in 0..traced_total {
                    let i = compose(r, t);
                    let j = compose(c, t);
                    acc += self[(i, j)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }

    /// Reorders tensor factors so that new factor `i` is old factor `order[i]`.
    pub fn permute_subsystems(&self, dims: &[usize], order: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if !self.is_square() || self.rows != total || order.len() != dims.len() {
            return Err(structural("permute_subsystems: dimension mismatch"));
        }
        let mut seen = vec![false; dims.len()];
        for &o in order {
            if o >= dims.len() || std::mem::replace(&mut seen[o], true) {
                return Err(structural(format!("invalid subsystem order {order:?}")));
            }
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
        let mut old_digits = vec![0usize; dims.len()];
        let map_index = |new_idx: usize, old_digits: &mut Vec<usize>| {
            let nd = digits_of(new_idx, &new_dims);
            for (pos, &o) in order.iter().enumerate() {
                old_digits[o] = nd[pos];
            }
            gather(old_digits, dims)
        };
        let old_of: Vec<usize> = (0..total).map(|i| map_index(i, &mut old_digits)).collect();
        let mut out = Self::zeros(total, total);
        for r in 0..total {
            for c in 0..total {
                out[(r, c)] = self[(old_of[r], old_of[c])];
            }
        }
        Ok(out)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

fn digits_of(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

fn scatter(idx: usize, sub_dims: &[usize], positions: &[usize], digits: &mut [usize]) {
    let mut idx = idx;
    for (&pos, &d) in positions.iter().zip(sub_dims).rev() {
        digits[pos] = idx % d;
        idx /= d;
    }
}

fn gather(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Eigenpairs of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[i]` belongs to `values[i]`; unit norm, first significant
    /// component real and positive.
    pub vectors: Vec<Vec<Complex64>>,
}

const TIE_TOL: f64 = 1e-12;

/// Full eigendecomposition with a deterministic ordering: ascending
/// eigenvalues, near-equal eigenvalues ordered by lexicographic comparison of
/// their phase-fixed eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigendecomposition of a non-square matrix");
    let n = m.rows();
    let eig = m.to_nalgebra().symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|i| {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_phase(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[start].0 <= TIE_TOL {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
    let (values, vectors) = pairs.into_iter().unzip();
    HermitianEigen { values, vectors }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    match m.rows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)];
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mid - rad, mid + rad]
        }
        _ if m.is_diagonal() => {
            let mut v: Vec<f64> = (0..m.rows()).map(|i| m[(i, i)].re).collect();
            v.sort_by(f64::total_cmp);
            v
        }
        _ => {
            let mut v: Vec<f64> = m.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        }
    }
}

/// Von Neumann entropy in bits, with `0 log 0 = 0`.
pub fn von_neumann_entropy(m: &ComplexMatrix) -> f64 {
    shannon_entropy(&hermitian_eigenvalues(m))
}

/// Shannon entropy in bits of a weight vector; non-positive weights are
/// treated as zero.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.log2()).sum()
}

fn fix_phase(v: &mut [Complex64]) {
    let norm: f64 = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let pivot = v.iter().copied().find(|z| z.norm() > 1e-12 * norm);
    if let Some(p) = pivot {
        let phase = p.conj() / p.norm() / norm;
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Inner product `<a|b>`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    inner(v, v).re.max(0.0).sqrt()
}

/// Orthogonal projector onto the span of `vectors` (modified Gram-Schmidt;
/// directions with residual norm below `tol` are dropped).
pub fn span_projector(vectors: &[&[Complex64]], dim: usize, tol: f64) -> ComplexMatrix {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut w = v.to_vec();
        for b in &basis {
            let c = inner(b, &w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let n = norm(&w);
        if n > tol {
            basis.push(w.into_iter().map(|z| z / n).collect());
        }
    }
    let mut p = ComplexMatrix::zeros(dim, dim);
    for b in &basis {
        p = &p + &ComplexMatrix::outer(b);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let a = ComplexMatrix::from_rows(&[vec![c(0.7, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.3, 0.0)]]).unwrap();
        let b = ComplexMatrix::diagonal(&[0.2, 0.5, 0.3]);
        let ab = a.kron(&b);
        assert!(ab.partial_trace(&[2, 3], &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(ab.partial_trace(&[2, 3], &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        let full = ab.partial_trace(&[2, 3], &[]).unwrap();
        assert!((full[(0, 0)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn permute_swaps_kron_factors() {
        let a = ComplexMatrix::diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::diagonal(&[3.0, 4.0, 5.0]);
        let ab = a.kron(&b);
        let ba = ab.permute_subsystems(&[2, 3], &[1, 0]).unwrap();
        assert_eq!(ba, b.kron(&a));
    }

    #[test]
    fn eigen_is_ascending_and_reconstructs() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)],
            vec![c(0.0, -1.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.5, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let e = hermitian_eigen(&m);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let mut rebuilt = ComplexMatrix::zeros(3, 3);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            rebuilt = &rebuilt + &ComplexMatrix::outer(vec).scale_real(*val);
        }
        assert!(rebuilt.max_abs_diff(&m) < 1e-12);
        let fast = hermitian_eigenvalues(&m);
        for (a, b) in fast.iter().zip(&e.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_two_by_two_matches_general_route() {
        let m = ComplexMatrix::from_rows(&[vec![c(0.3, 0.0), c(0.2, -0.1)], vec![c(0.2, 0.1), c(0.7, 0.0)]]).unwrap();
        let fast = hermitian_eigenvalues(&m);
        let slow = hermitian_eigen(&m).values;
        assert!((fast[0] - slow[0]).abs() < 1e-14 && (fast[1] - slow[1]).abs() < 1e-14);
    }

    #[test]
    fn degenerate_eigenvectors_are_ordered_deterministically() {
        let e = hermitian_eigen(&ComplexMatrix::identity(3));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        for w in e.vectors.windows(2) {
            assert_ne!(lex_cmp(&w[0], &w[1]), Ordering::Greater);
        }
    }

    #[test]
    fn spectral_norm_of_rotation_generator() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 0.5], vec![-0.5, 0.0]]).unwrap();
        assert!((m.spectral_norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit_is_one_bit() {
        let m = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((von_neumann_entropy(&m) - 1.0).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn span_projector_handles_dependent_vectors() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = [c(1.0, 0.0), c(0.0, 0.0)];
        let v1 = [c(s, 0.0), c(s, 0.0)];
        let v2 = [c(2.0, 0.0), c(0.0, 0.0)];
        let p = span_projector(&[&v0, &v2], 2, 1e-10);
        assert!(p.max_abs_diff(&ComplexMatrix::outer(&v0)) < 1e-15);
        let full = span_projector(&[&v0, &v1], 2, 1e-10);
        assert!(full.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }
}
