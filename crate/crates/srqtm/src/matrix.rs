//! Small dense complex matrices. Everything in this crate is at most
//! 2^10 x 2^10, so a plain row-major `Vec` is all we need.

use num_complex::Complex;

use crate::scalar::{cplx, Real};

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![cplx(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, cplx(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        CMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    pub fn mul(&self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.add_to(i, j, a * rhs.get(k, j));
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMatrix<T> {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn scale(&self, z: Complex<T>) -> CMatrix<T> {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|v| *v * z).collect(),
        }
    }

    pub fn kron(&self, rhs: &CMatrix<T>) -> CMatrix<T> {
        let n = self.n * rhs.n;
        let mut out = Self::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                let a = self.get(i, j);
                for k in 0..rhs.n {
                    for l in 0..rhs.n {
                        out.set(i * rhs.n + k, j * rhs.n + l, a * rhs.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Largest entry magnitude of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &CMatrix<T>) -> T {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let mut worst = T::zero();
        for (a, b) in self.data.iter().zip(rhs.data.iter()) {
            let d = (*a - *b).norm();
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// ||U^dagger U - I||_max.
    pub fn unitarity_error(&self) -> T {
        self.dagger()
            .mul(self)
            .max_abs_diff(&Self::identity(self.n))
    }

    /// Fixed-width text grid of the entries, one row per line.
    pub fn format_grid(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let mut row = Vec::with_capacity(self.n);
            for j in 0..self.n {
                let v = self.get(i, j);
                row.push(format!("{:>24}", format_complex(v)));
            }
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn format_complex<T: Real>(v: Complex<T>) -> String {
    let re = v.re.to_f64().unwrap_or(f64::NAN);
    let im = v.im.to_f64().unwrap_or(f64::NAN);
    if im == 0.0 {
        format!("{:+.9}", re)
    } else {
        format!("{:+.9}{:+.9}i", re, im)
    }
}
