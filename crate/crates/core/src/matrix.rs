//! Dense square complex matrices, row-major, sized for desk-scale spectral
//! work (dimensions up to a few hundred).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Sub};
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

pub type C64 = num_complex::Complex<f64>;

/// A `dim x dim` complex matrix with entries stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    // ------------------------------------------------------------------
    // constructors
    // ------------------------------------------------------------------

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a function of (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Row-major entries; `data.len()` must be a perfect square.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data length != dim^2");
        Self { dim, data }
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = Self::zeros(dim);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * dim + i] = C64::new(x, 0.0);
        }
        m
    }

    // ------------------------------------------------------------------
    // access
    // ------------------------------------------------------------------

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.at(i, j)).collect()
    }

    // ------------------------------------------------------------------
    // arithmetic
    // ------------------------------------------------------------------

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Matrix product `self * rhs`.
    pub fn mul_mat(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let lrow = &self.data[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, &lik) in lrow.iter().enumerate() {
                if lik.re == 0.0 && lik.im == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                for (o, &rkj) in orow.iter_mut().zip(rrow.iter()) {
                    *o += lik * rkj;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.at(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    /// `u * self * u†`: the state transforms, `u` acts.
    pub fn conjugated_by(&self, u: &Self) -> Self {
        u.mul_mat(self).mul_mat(&u.adjoint())
    }

    /// `e * self * e` for Hermitian `e` (projector sandwich).
    pub fn sandwiched_by(&self, e: &Self) -> Self {
        e.mul_mat(self).mul_mat(e)
    }

    /// Hermitian part `(self + self†) / 2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| (self.at(i, j) + self.at(j, i).conj()) * 0.5)
    }

    // ------------------------------------------------------------------
    // norms and residuals
    // ------------------------------------------------------------------

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "difference dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `self - self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let r = (self.at(i, j) - self.at(j, i).conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest entry of `self - I`.
    pub fn identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { 1.0 } else { 0.0 };
                let r = (self.at(i, j) - C64::new(target, 0.0)).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest entry of `self† self - I`; zero for unitary matrices.
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().mul_mat(self).identity_residual()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix(dim={})", self.dim)?;
        for i in 0..self.dim {
            write!(f, "  [")?;
            for j in 0..self.dim {
                let v = self.at(i, j);
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.4}{:+.4}i", v.re, v.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.mul_mat(rhs)
    }
}
