//! Dense real matrices for the small symmetric problems that show up in
//! LMI assembly: Jacobi eigen-decomposition, definiteness tests by
//! eigenvalue margin, Kronecker products and block assembly.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:>12.6e} ", self[(r, c)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::DimensionOverflow(format!("{rows}x{cols}")))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn column(v: &[f64]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).take(self.rows).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(&self, other: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "subtract", |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// `self += s * other`; shapes must agree.
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (d, &o) in self.data.iter_mut().zip(&other.data) {
            *d += s * o;
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().ok_or_else(|| Error::EmptyInput("vstack".into()))?.cols;
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::DimensionMismatch("vstack column counts differ".into()));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Matrix::from_vec(rows, cols, data)
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = parts.first().ok_or_else(|| Error::EmptyInput("hstack".into()))?.rows;
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::DimensionMismatch("hstack row counts differ".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = Lu::factor(self)?;
        lu.solve(b)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = Lu::factor(self)?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            let col = lu.solve(&e)?;
            for r in 0..n {
                inv[(r, c)] = col[r];
            }
        }
        Ok(inv)
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        self.check_finite()?;
        if self.rows == 0 || self.cols == 0 {
            return Ok(Vec::new());
        }
        let mut s: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    /// Spectral condition number; infinite for singular matrices.
    pub fn cond2(&self) -> Result<f64> {
        let s = self.singular_values()?;
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
            (Some(_), Some(_)) => Ok(f64::INFINITY),
            _ => Ok(1.0),
        }
    }

    /// Numerical rank: singular values strictly above `tol`.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.singular_values()?.iter().filter(|&&s| s > tol).count())
    }

    /// Eigenvalues of a general square matrix as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> Result<Vec<(f64, f64)>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
        }
        self.check_finite()?;
        if self.rows == 0 {
            return Ok(Vec::new());
        }
        Ok(self.to_nalgebra().complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().fold(0.0, |m, &(re, im)| m.max(re.hypot(im))))
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidMatrix("non-finite entries".into()))
        }
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

struct Lu {
    n: usize,
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("LU of a non-square matrix".into()));
        }
        a.check_finite()?;
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|r| (r, lu[(r, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pval <= f64::EPSILON * scale * n as f64 || pval == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if piv != k {
                perm.swap(piv, k);
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(piv, c)];
                    lu[(piv, c)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for r in k + 1..n {
                let f = lu[(r, k)] / d;
                lu[(r, k)] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[(r, c)] -= f * lu[(k, c)];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                x[r] -= self.lu[(r, c)] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] -= self.lu[(r, c)] * x[c];
            }
            x[r] /= self.lu[(r, r)];
        }
        Ok(x)
    }
}

/// Square matrix that is exactly symmetric: entries are averaged with
/// their transposes on construction.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct SymMatrix(Matrix);

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.0)
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for Matrix {
    fn from(s: SymMatrix) -> Matrix {
        s.0
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut s = m;
        for r in 0..n {
            for c in r + 1..n {
                let avg = 0.5 * (s[(r, c)] + s[(c, r)]);
                s[(r, c)] = avg;
                s[(c, r)] = avg;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diag(diag))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// `Bᵀ X B` for a symmetric `X`; the result is symmetric by construction.
    pub fn congruence(x: &SymMatrix, b: &Matrix) -> Result<Self> {
        let xb = x.0.matmul(b)?;
        Self::new(b.transpose().matmul(&xb)?)
    }

    /// Unit symmetric matrix with ones at `(r, c)` and `(c, r)`.
    pub fn unit(n: usize, r: usize, c: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        m[(r, c)] = 1.0;
        m[(c, r)] = 1.0;
        SymMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix(self.0.scale(s))
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        Ok(SymMatrix(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        Ok(SymMatrix(self.0.sub(&other.0)?))
    }

    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        self.0.axpy(s, &other.0);
    }

    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let mx = self.0.mat_vec(x)?;
        Ok(mx.iter().zip(x).map(|(a, b)| a * b).sum())
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns ascending eigenvalues and the matching orthonormal eigenvectors
/// as the columns of the second component.
pub fn sym_eigen(m: &SymMatrix) -> Result<(Vec<f64>, Matrix)> {
    const MAX_SWEEPS: usize = 100;
    if !m.0.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entries".into()));
    }
    let n = m.dim();
    let mut a = m.0.clone();
    let mut v = Matrix::identity(n);
    let scale = a.norm_fro();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)] * a[(p, q)])
                .sum();
            if off.sqrt() <= f64::EPSILON * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    sym_eigen(m).map(|(vals, _)| vals)
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.first().copied().unwrap_or(f64::INFINITY))
}

/// `λ_min(m) ≥ margin`. A negative margin tolerates slightly indefinite input.
pub fn is_psd(m: &SymMatrix, margin: f64) -> Result<bool> {
    if !margin.is_finite() {
        return Err(Error::InvalidParameter("margin must be finite".into()));
    }
    Ok(min_eigenvalue(m)? >= margin)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let overflow = || Error::DimensionOverflow(format!("kron of {:?} and {:?}", a.shape(), b.shape()));
    let rows = a.rows.checked_mul(b.rows).ok_or_else(overflow)?;
    let cols = a.cols.checked_mul(b.cols).ok_or_else(overflow)?;
    rows.checked_mul(cols).ok_or_else(overflow)?;
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

pub fn block_diag(blocks: &[Matrix]) -> Result<Matrix> {
    if blocks.is_empty() {
        return Err(Error::EmptyInput("block_diag needs at least one block".into()));
    }
    let rows = blocks.iter().map(Matrix::rows).sum();
    let cols = blocks.iter().map(Matrix::cols).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.set_block(r0, c0, b);
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_laplacian() -> SymMatrix {
        SymMatrix::from_rows(&[
            vec![1.0, -1.0, 0.0, 0.0],
            vec![-1.0, 3.0, -1.0, -1.0],
            vec![0.0, -1.0, 2.0, -1.0],
            vec![0.0, -1.0, -1.0, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn eigenvalues_of_identity_and_diagonal() {
        assert_eq!(sym_eigenvalues(&SymMatrix::identity(3)).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(sym_eigenvalues(&SymMatrix::from_diag(&[5.0, -2.0])).unwrap(), vec![-2.0, 5.0]);
    }

    #[test]
    fn eigenvalues_of_example_laplacian() {
        // characteristic polynomial: λ(λ-1)(λ-3)(λ-4)
        let vals = sym_eigenvalues(&example_laplacian()).unwrap();
        for (got, want) in vals.iter().zip([0.0, 1.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-10 * 4.0, "{vals:?}");
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let m = SymMatrix::from_diag(&[1.0, f64::NAN]);
        assert!(matches!(sym_eigenvalues(&m), Err(Error::InvalidMatrix(_))));
        assert!(is_psd(&m, 0.0).is_err());
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&SymMatrix::zeros(3), 0.0).unwrap());
        assert!(!is_psd(&SymMatrix::from_diag(&[1.0, -1e-3]), 0.0).unwrap());
        assert!(is_psd(&example_laplacian(), -1e-12).unwrap());
        assert!(is_psd(&SymMatrix::identity(2), 1.0).unwrap());
        assert!(!is_psd(&SymMatrix::identity(2), 1.0 + 1e-12).unwrap());
    }

    #[test]
    fn construction_symmetrizes() {
        let s = SymMatrix::new(Matrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
        assert!(SymMatrix::new(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn kron_cases() {
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(3)).unwrap(), Matrix::identity(6));
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(kron(&Matrix::from_rows(&[vec![2.0]]).unwrap(), &b).unwrap(), b.scale(2.0));
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let want = Matrix::from_rows(&[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(kron(&swap, &Matrix::identity(2)).unwrap(), want);
    }

    #[test]
    fn block_diag_cases() {
        assert_eq!(
            block_diag(&[Matrix::identity(1), Matrix::identity(2)]).unwrap(),
            Matrix::identity(3)
        );
        assert_eq!(
            block_diag(&[Matrix::from_diag(&[1.0]), Matrix::from_diag(&[2.0])]).unwrap(),
            Matrix::from_diag(&[1.0, 2.0])
        );
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let m = block_diag(&[Matrix::from_diag(&[7.0]), b]).unwrap();
        let want = Matrix::from_rows(&[
            vec![7.0, 0.0, 0.0],
            vec![0.0, 1.0, 2.0],
            vec![0.0, 3.0, 4.0],
        ])
        .unwrap();
        assert_eq!(m, want);
        assert!(matches!(block_diag(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn solve_and_inverse() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = a.solve(&[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(sing.solve(&[1.0, 1.0]), Err(Error::Singular(_))));
        assert_eq!(sing.rank(1e-9).unwrap(), 1);
        assert!(sing.cond2().unwrap() > 1e12);
    }

    #[test]
    fn general_eigenvalues_of_rotation() {
        let rot = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!((rot.spectral_radius().unwrap() - 1.0).abs() < 1e-12);
        let ev = rot.eigenvalues().unwrap();
        assert!(ev.iter().all(|&(re, im)| re.abs() < 1e-12 && (im.abs() - 1.0).abs() < 1e-12));
    }
}
