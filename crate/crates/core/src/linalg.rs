//! Small dense linear algebra generic over [`Real`]: LU with partial
//! pivoting, Jacobi eigen/singular value decompositions and inverse
//! iteration for the smallest singular value.

use std::ops::{Index, IndexMut};

use crate::{Error, Real, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: other.rows.to_string(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| *a * s).collect(),
        }
    }

    /// `self − λ I`.
    pub fn shift(&self, lambda: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= lambda;
        }
        m
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    pub fn symmetry_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::new(self)
    }

    pub fn det(&self) -> T {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => T::zero(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.lu()?.inverse()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.lu()?.solve(b)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Eigenvalues ascending; eigenvectors are the columns of the returned
    /// matrix.
    pub fn sym_eigen(&self) -> Result<(Vec<T>, Matrix<T>)> {
        if !self.is_square() {
            return Err(Error::invalid("sym_eigen needs a square matrix"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off.sqrt() <= eps * a.frobenius().max(T::min_positive_value()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
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
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok((vals, vecs))
    }

    /// Singular values, descending, by one-sided Jacobi.
    pub fn singular_values(&self) -> Vec<T> {
        let (m, n) = (self.rows, self.cols);
        if m == 0 || n == 0 {
            return Vec::new();
        }
        // Work on the orientation with at least as many rows as columns.
        let mut u = if m >= n { self.clone() } else { self.transpose() };
        let (rows, cols) = (u.rows, u.cols);
        let eps = T::epsilon();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..cols {
                for q in p + 1..cols {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..rows {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        alpha += up * up;
                        beta += uq * uq;
                        gamma += up * uq;
                    }
                    if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let t = if zeta == T::zero() { T::one() } else { t };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..rows {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<T> = (0..cols)
            .map(|j| (0..rows).map(|i| u[(i, j)] * u[(i, j)]).sum::<T>().sqrt())
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        sv
    }

    /// Spectral norm.
    pub fn norm2(&self) -> T {
        self.singular_values().first().copied().unwrap_or(T::zero())
    }

    /// `‖A^{-1}‖₂ = 1/σ_min`, `+∞` when singular.
    pub fn inverse_norm2(&self) -> T {
        let s = self.singular_values().last().copied().unwrap_or(T::zero());
        if s == T::zero() {
            T::infinity()
        } else {
            T::one() / s
        }
    }

    /// Smallest singular value of a square matrix by inverse iteration on
    /// `AᵀA`, using one LU factorization of `A`. Returns `0` when the
    /// factorization is singular.
    pub fn smallest_singular_value(&self, tol: T, max_iter: usize) -> Result<T> {
        if !self.is_square() {
            return Err(Error::invalid("smallest_singular_value needs a square matrix"));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(T::infinity());
        }
        let lu = match self.lu() {
            Ok(lu) => lu,
            Err(Error::Singular { .. }) => return Ok(T::zero()),
            Err(e) => return Err(e),
        };
        // Deterministic start vector with all components excited.
        let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(((i * 7919) % 97) as f64 / 97.0)).collect();
        normalize(&mut x);
        let mut est = T::zero();
        for _ in 0..max_iter {
            let y = lu.solve_transpose(&x)?;
            let mut z = lu.solve(&y)?;
            let nz = norm(&z);
            if !(nz.is_finite()) || nz == T::zero() {
                return Ok(T::zero());
            }
            for v in z.iter_mut() {
                *v /= nz;
            }
            let new_est = T::one() / nz.sqrt();
            let done = (new_est - est).abs() <= tol * new_est;
            est = new_est;
            x = z;
            if done {
                break;
            }
        }
        Ok(est)
    }
}

fn norm<T: Real>(x: &[T]) -> T {
    x.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

fn normalize<T: Real>(x: &mut [T]) {
    let n = norm(x);
    if n > T::zero() {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with unit lower-triangular `L`, stored compactly.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid("LU needs a square matrix"));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = a.max_abs();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if pmax == T::zero() || pmax <= scale * T::epsilon() * T::lit(1e-3) {
                return Err(Error::Singular {
                    context: format!("LU pivot {k} of {n}"),
                });
            }
            if piv != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn det(&self) -> T {
        (0..self.n).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n.to_string(),
                found: b.len().to_string(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.lu[(i, k)] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = x[k];
                x[i] -= self.lu[(i, k)] * v;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = y[k];
                y[i] -= self.lu[(k, i)] * v;
            }
            y[i] /= self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = y[k];
                y[i] -= self.lu[(k, i)] * v;
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Complex matrix stored as real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    pub re: Matrix<T>,
    pub im: Matrix<T>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            re: Matrix::zeros(rows, cols),
            im: Matrix::zeros(rows, cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.re.rows()
    }

    pub fn cols(&self) -> usize {
        self.re.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> crate::Complex<T> {
        crate::Complex::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, v: crate::Complex<T>) {
        self.re[(i, j)] = v.re;
        self.im[(i, j)] = v.im;
    }

    pub fn is_real(&self) -> bool {
        self.im.max_abs() == T::zero()
    }

    /// `max |A_ij − conj A_ji|`.
    pub fn hermitian_defect(&self) -> T {
        let n = self.rows();
        let mut m = T::zero();
        for i in 0..n {
            for j in 0..=i {
                let d = self.get(i, j) - self.get(j, i).conj();
                m = m.max(d.norm());
            }
        }
        m
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self {
            re: self.re.submatrix(rows, cols),
            im: self.im.submatrix(rows, cols),
        }
    }

    /// `[[R, −I], [I, R]]`, whose singular values are those of the complex
    /// matrix, each repeated twice.
    pub fn real_embedding(&self) -> Matrix<T> {
        let (r, c) = (self.rows(), self.cols());
        Matrix::from_fn(2 * r, 2 * c, |i, j| {
            let (bi, ii) = (i / r, i % r);
            let (bj, jj) = (j / c, j % c);
            match (bi, bj) {
                (0, 0) | (1, 1) => self.re[(ii, jj)],
                (0, 1) => -self.im[(ii, jj)],
                _ => self.im[(ii, jj)],
            }
        })
    }

    /// The real matrix when the imaginary part vanishes, the embedding
    /// otherwise. Spectral norms agree in both cases.
    pub fn as_real_operator(&self) -> Matrix<T> {
        if self.is_real() {
            self.re.clone()
        } else {
            self.real_embedding()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lu_solve_det_inverse() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x = a.solve(&[3.0, 2.0, 4.0]).unwrap();
        for (u, v) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!((a.det() - (-5.0)).abs() < 1e-12);
        let prod = a.matmul(&a.inverse().unwrap()).unwrap();
        assert!(prod.sub(&Matrix::identity(3)).max_abs() < 1e-14);
        let xt = a.lu().unwrap().solve_transpose(&[4.0, 3.0, 2.0]).unwrap();
        let back = a.transpose().matvec(&xt);
        assert!((back[0] - 4.0).abs() + (back[1] - 3.0).abs() + (back[2] - 2.0).abs() < 1e-13);
        assert!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).lu().is_err());
    }

    #[test]
    fn symmetric_eigen() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let (vals, vecs) = a.sym_eigen().unwrap();
        let s2 = 2f64.sqrt();
        for (v, w) in vals.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((v - w).abs() < 1e-13);
        }
        let recon = vecs.matmul(&Matrix::diag(&vals)).unwrap().matmul(&vecs.transpose()).unwrap();
        assert!(recon.sub(&a).max_abs() < 1e-13);
    }

    #[test]
    fn singular_values_and_norms() {
        let a = m(&[&[3.0, 0.0], &[4.0, 5.0]]);
        let sv = a.singular_values();
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-12);
        let smin = a.smallest_singular_value(1e-12, 500).unwrap();
        assert!((smin - 5f64.sqrt()).abs() < 1e-9);
        assert!((a.inverse_norm2() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        let rect = m(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]]);
        assert_eq!(rect.singular_values().len(), 2);
    }

    #[test]
    fn complex_embedding() {
        let mut c = CMatrix::<f64>::zeros(2, 2);
        c.set(0, 0, crate::Complex::new(1.0, 1.0));
        c.set(1, 1, crate::Complex::new(0.0, 3.0));
        let e = c.real_embedding();
        let sv = e.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
        assert!((sv[3] - 2f64.sqrt()).abs() < 1e-12);
        assert!(!c.is_real());
        assert!(c.hermitian_defect() > 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let (vals, _) = a.sym_eigen().unwrap();
        assert!((vals[0] + vals[1] - 7.0).abs() < 1e-5);
        assert!((a.det() - 11.0).abs() < 1e-4);
    }
}
