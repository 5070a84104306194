//! Small dense matrices and a cyclic Jacobi eigensolver.
//!
//! Dimensions handled here are desk-scale (a few dozen at most), so everything
//! is stored row-major in a flat `Vec` and multiplied naively.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Permutation matrix with `m[(perm[j], j)] = 1`, i.e. it sends basis vector `j` to `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zeros(n, n);
        for (j, &i) in perm.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any row or column sum from one.
    pub fn stochastic_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            worst = worst.max((self.row(i).iter().sum::<f64>() - 1.0).abs());
        }
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self[(i, j)]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.is_square()
            && self.data.iter().all(|&x| x >= -tol)
            && self.stochastic_defect() <= tol
    }

    /// `max |(UᵀU − 1)_ij|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = &self.transpose() * self;
        g.max_abs_diff(&Matrix::identity(self.cols))
    }

    /// `diag(U · diag(d) · Uᵀ)`.
    pub fn conjugate_diagonal(&self, d: &[f64]) -> Vec<f64> {
        assert_eq!(d.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(d).map(|(u, x)| u * u * x).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_real(m: &Matrix) -> Self {
        assert!(m.is_square());
        Self {
            n: m.rows(),
            data: m.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|m_ij − conj(m_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Extracts the principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let mut m = Self::zeros(indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues and eigenvectors of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` where column `k` of `vectors` belongs to `values[k]`.
/// Sweeps stop once the off-diagonal Frobenius norm drops below `1e-12` relative to the
/// full norm. Order is whatever the rotations leave on the diagonal.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(a.is_square(), "jacobi_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let total: f64 = m.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * total.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diagonal(), v)
}

/// Eigenvalues of a Hermitian matrix, descending.
///
/// Uses the real embedding `[[Re, −Im], [Im, Re]]`, whose spectrum is that of the input
/// with every eigenvalue doubled; every other value of the sorted embedding spectrum is kept.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    let real_only = h.data.iter().all(|z| z.im == 0.0);
    let mut values = if real_only {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = h[(i, j)].re;
            }
        }
        jacobi_eigen(&m).0
    } else {
        let mut m = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = h[(i, j)];
                m[(i, j)] = z.re;
                m[(i + n, j + n)] = z.re;
                m[(i, j + n)] = -z.im;
                m[(i + n, j)] = z.im;
            }
        }
        let mut doubled = jacobi_eigen(&m).0;
        doubled.sort_by(|a, b| b.total_cmp(a));
        doubled.into_iter().step_by(2).collect()
    };
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
