//! Dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major flat data into a matrix.
pub fn matrix_from_row_major(rows: usize, cols: usize, data: &[C64]) -> CMatrix {
    debug_assert_eq!(data.len(), rows * cols);
    CMatrix::from_row_slice(rows, cols, data)
}

/// Matrix into row-major flat data.
pub fn row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = CVector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x), 0.0)));
    &vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// Thin SVD `m = u * diag(s) * v_adj`.
pub fn thin_svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    (u, svd.singular_values.iter().copied().collect(), v_t)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise deviation of `v^H v` from the identity.
pub fn isometry_defect(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Householder reflectors for a matrix with orthonormal columns.
///
/// `q` (m x k) factors as `H_0 H_1 .. H_{k-1} [D; 0]` with `D` diagonal unitary.
pub(crate) struct Householder {
    rows: usize,
    vectors: Vec<Vec<C64>>,
    phases: Vec<C64>,
}

impl Householder {
    pub(crate) fn new(q: &CMatrix) -> Self {
        let m = q.nrows();
        let k = q.ncols();
        let mut a = q.clone();
        let mut vectors = Vec::with_capacity(k);
        let mut phases = Vec::with_capacity(k);
        for col in 0..k {
            let x: Vec<C64> = (col..m).map(|r| a[(r, col)]).collect();
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
            let alpha = -phase * norm;
            let mut v = x;
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                v.iter_mut().for_each(|z| *z /= vnorm);
            }
            for j in col..k {
                let dot: C64 = (col..m).map(|r| v[r - col].conj() * a[(r, j)]).sum();
                for r in col..m {
                    a[(r, j)] -= v[r - col] * dot * 2.0;
                }
            }
            phases.push(a[(col, col)]);
            vectors.push(v);
        }
        Self { rows: m, vectors, phases }
    }

    /// Unit-modulus diagonal of the triangular factor.
    pub(crate) fn phases(&self) -> &[C64] {
        &self.phases
    }

    /// Computes `H_0 .. H_{k-1} [top; 0]` for a block `top` with at most `rows` rows.
    pub(crate) fn apply_padded(&self, top: &CMatrix) -> CMatrix {
        let mut y = CMatrix::zeros(self.rows, top.ncols());
        y.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
        for (col, v) in self.vectors.iter().enumerate().rev() {
            for j in 0..y.ncols() {
                let column = &mut y.column_mut(j);
                let slice = &mut column.as_mut_slice()[col..];
                let dot: C64 = v.iter().zip(slice.iter()).map(|(a, b)| a.conj() * b).sum();
                let scale = dot * 2.0;
                for (s, a) in slice.iter_mut().zip(v.iter()) {
                    *s -= a * scale;
                }
            }
        }
        y
    }

    /// Computes `[left, 0] (H_0 .. H_{k-1})^T` for a block `left` with at most `rows`
    /// columns.
    pub(crate) fn apply_transposed_right(&self, left: &CMatrix) -> CMatrix {
        let mut y = CMatrix::zeros(left.nrows(), self.rows);
        y.view_mut((0, 0), (left.nrows(), left.ncols())).copy_from(left);
        // (H_0 .. H_{k-1})^T = H_{k-1}^T .. H_0^T, applied to the right in that order
        for (col, v) in self.vectors.iter().enumerate().rev() {
            for i in 0..y.nrows() {
                let dot: C64 = v.iter().enumerate().map(|(t, a)| y[(i, col + t)] * a.conj()).sum();
                let scale = dot * 2.0;
                for (t, a) in v.iter().enumerate() {
                    y[(i, col + t)] -= scale * a;
                }
            }
        }
        y
    }
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`.
///
/// `q` must have orthonormal columns; returns an `m x (m - k)` matrix.
pub fn orthonormal_complement(q: &CMatrix) -> CMatrix {
    let m = q.nrows();
    let k = q.ncols();
    let h = Householder::new(q);
    let mut top = CMatrix::zeros(m, m - k);
    for j in 0..m - k {
        top[(k + j, j)] = ONE;
    }
    h.apply_padded(&top)
}
