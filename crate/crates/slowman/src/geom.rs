//! Fixed-capacity vectors and matrices for 2- and 3-dimensional phase spaces.
//!
//! Phase-space dimension is a runtime property here (the CLI decides it from
//! the model), so both types carry `dim` alongside a capacity-3 backing array.
//! Everything is `Copy` and allocation-free; grid sweeps evaluate these in
//! tight loops.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

/// A 2- or 3-component vector of `f64`.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    a: [f64; 3],
}

impl Vector {
    pub fn new2(x: f64, y: f64) -> Self {
        Vector { dim: 2, a: [x, y, 0.0] }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Vector { dim: 3, a: [x, y, z] }
    }

    /// Builds from a slice of length 2 or 3; `None` otherwise.
    pub fn from_slice(xs: &[f64]) -> Option<Self> {
        match xs {
            [x, y] => Some(Vector::new2(*x, *y)),
            [x, y, z] => Some(Vector::new3(*x, *y, *z)),
            _ => None,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "vector dim must be 2 or 3, got {dim}");
        Vector { dim, a: [0.0; 3] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a[..self.dim]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.dim);
        self.a[i] = v;
    }

    pub fn dot(&self, o: &Vector) -> f64 {
        debug_assert_eq!(self.dim, o.dim);
        let mut s = self.a[0] * o.a[0] + self.a[1] * o.a[1];
        if self.dim == 3 {
            s += self.a[2] * o.a[2];
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, o: &Vector) -> f64 {
        (*self - *o).norm()
    }

    /// Scalar (z-component) cross product of two 2D vectors.
    pub fn cross2(&self, o: &Vector) -> f64 {
        debug_assert!(self.dim == 2 && o.dim == 2);
        self.a[0] * o.a[1] - self.a[1] * o.a[0]
    }

    /// 3D cross product.
    pub fn cross3(&self, o: &Vector) -> Vector {
        debug_assert!(self.dim == 3 && o.dim == 3);
        Vector::new3(
            self.a[1] * o.a[2] - self.a[2] * o.a[1],
            self.a[2] * o.a[0] - self.a[0] * o.a[2],
            self.a[0] * o.a[1] - self.a[1] * o.a[0],
        )
    }

    /// Squared norm of the wedge product `self ∧ o` in either dimension.
    ///
    /// In 2D the wedge is the scalar `cross2`; in 3D it is the cross product.
    pub fn wedge_norm_sq(&self, o: &Vector) -> f64 {
        if self.dim == 2 {
            let c = self.cross2(o);
            c * c
        } else {
            self.cross3(o).norm_sq()
        }
    }

    pub fn wedge_norm(&self, o: &Vector) -> f64 {
        self.wedge_norm_sq(o).sqrt()
    }

    /// Embeds a 2D vector into 3D with `z = 0`; 3D vectors pass through.
    pub fn lift3(&self) -> Vector {
        Vector { dim: 3, a: self.a }
    }

    pub fn normalize(&self) -> Option<Vector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(self.scale(1.0 / n))
        }
    }

    pub fn scale(&self, f: f64) -> Vector {
        Vector { dim: self.dim, a: [self.a[0] * f, self.a[1] * f, self.a[2] * f] }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        assert!(i < self.dim, "index {i} out of range for dim {}", self.dim);
        &self.a[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        debug_assert_eq!(self.dim, o.dim);
        Vector {
            dim: self.dim,
            a: [self.a[0] + o.a[0], self.a[1] + o.a[1], self.a[2] + o.a[2]],
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        debug_assert_eq!(self.dim, o.dim);
        Vector {
            dim: self.dim,
            a: [self.a[0] - o.a[0], self.a[1] - o.a[1], self.a[2] - o.a[2]],
        }
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, f: f64) -> Vector {
        self.scale(f)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// A square 2x2 or 3x3 matrix of `f64`, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl Matrix {
    pub fn from_rows2(rows: [[f64; 2]; 2]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, r) in rows.iter().enumerate() {
            m[i][0] = r[0];
            m[i][1] = r[1];
        }
        Matrix { dim: 2, m }
    }

    pub fn from_rows3(rows: [[f64; 3]; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, r) in rows.iter().enumerate() {
            m[i] = *r;
        }
        Matrix { dim: 3, m }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "matrix dim must be 2 or 3, got {dim}");
        Matrix { dim, m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Matrix::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim);
        self.m[i][j] = v;
    }

    pub fn row(&self, i: usize) -> Vector {
        assert!(i < self.dim);
        Vector { dim: self.dim, a: self.m[i] }
    }

    pub fn col(&self, j: usize) -> Vector {
        assert!(j < self.dim);
        Vector {
            dim: self.dim,
            a: [self.m[0][j], self.m[1][j], self.m[2][j]],
        }
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.dim, v.dim);
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            out.a[i] = self.row(i).dot(v);
        }
        out
    }

    pub fn mul_mat(&self, o: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, o.dim);
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut s = 0.0;
                for k in 0..self.dim {
                    s += self.m[i][k] * o.m[k][j];
                }
                out.m[i][j] = s;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        let mut s = self.m[0][0] + self.m[1][1];
        if self.dim == 3 {
            s += self.m[2][2];
        }
        s
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        if self.dim == 2 {
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
        } else {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }

    /// Inverse via adjugate; `None` when the determinant is zero.
    pub fn inverse(&self) -> Option<Matrix> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.m;
        let mut out = Matrix::zeros(self.dim);
        if self.dim == 2 {
            out.m[0][0] = m[1][1] / det;
            out.m[0][1] = -m[0][1] / det;
            out.m[1][0] = -m[1][0] / det;
            out.m[1][1] = m[0][0] / det;
        } else {
            for r in 0..3 {
                for c in 0..3 {
                    // Cofactor of (c, r), transposed into (r, c).
                    let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                    let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                    out.m[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
                }
            }
        }
        Some(out)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).is_finite())
    }
}

impl Mul<f64> for Matrix {
    type Output = Matrix;
    fn mul(self, f: f64) -> Matrix {
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] *= f;
            }
        }
        out
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, o: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, o.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] -= o.m[i][j];
            }
        }
        out
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, o: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, o.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] += o.m[i][j];
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for i in 0..self.dim {
            l.entry(&self.row(i));
        }
        l.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dot_and_cross_basics() {
        let u = Vector::new3(1.0, 2.0, 3.0);
        let v = Vector::new3(-4.0, 0.5, 2.0);
        assert_relative_eq!(u.dot(&v), -4.0 + 1.0 + 6.0);
        let c = u.cross3(&v);
        // Orthogonality of the cross product to both factors.
        assert_relative_eq!(c.dot(&u), 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.dot(&v), 0.0, epsilon = 1e-12);
        // Antisymmetry.
        assert_eq!(v.cross3(&u), -c);
    }

    #[test]
    fn lagrange_identity_both_dims() {
        // (u·v)^2 + |u∧v|^2 = |u|^2 |v|^2
        let pairs2 = [
            (Vector::new2(1.0, 2.0), Vector::new2(-0.3, 4.0)),
            (Vector::new2(5.0, -1.0), Vector::new2(0.0, 0.7)),
        ];
        for (u, v) in pairs2 {
            let lhs = u.dot(&v).powi(2) + u.wedge_norm_sq(&v);
            assert_relative_eq!(lhs, u.norm_sq() * v.norm_sq(), max_relative = 1e-14);
        }
        let u = Vector::new3(1.0, -2.0, 0.5);
        let v = Vector::new3(3.0, 0.2, -1.0);
        let lhs = u.dot(&v).powi(2) + u.wedge_norm_sq(&v);
        assert_relative_eq!(lhs, u.norm_sq() * v.norm_sq(), max_relative = 1e-14);
    }

    #[test]
    fn matrix_vector_products() {
        let j = Matrix::from_rows3([[1.0, 2.0, 3.0], [0.0, -1.0, 4.0], [2.0, 0.5, 1.0]]);
        let v = Vector::new3(1.0, 1.0, -1.0);
        let jv = j.mul_vec(&v);
        assert_eq!(jv, Vector::new3(0.0, -5.0, 1.5));
        // (J^T)^T = J and (J J) matches a hand product entry.
        assert_eq!(j.transpose().transpose(), j);
        let jj = j.mul_mat(&j);
        assert_relative_eq!(jj.get(0, 0), 1.0 + 0.0 + 6.0);
    }

    #[test]
    fn determinants() {
        let a = Matrix::from_rows2([[2.0, 1.0], [3.0, 4.0]]);
        assert_relative_eq!(a.det(), 8.0 - 3.0);
        let b = Matrix::from_rows3([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]]);
        assert_relative_eq!(b.det(), -3.0);
        assert_relative_eq!(Matrix::identity(3).det(), 1.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_rows3([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]]);
        let inv = a.inverse().unwrap();
        let id = a.mul_mat(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(id.get(i, j), want, epsilon = 1e-12);
            }
        }
        let b = Matrix::from_rows2([[2.0, 1.0], [4.0, 2.0]]);
        assert!(b.inverse().is_none());
    }

    #[test]
    fn from_slice_validates_length() {
        assert!(Vector::from_slice(&[1.0]).is_none());
        assert!(Vector::from_slice(&[1.0, 2.0]).is_some());
        assert!(Vector::from_slice(&[1.0, 2.0, 3.0, 4.0]).is_none());
    }
}
