//! Small dense complex linear algebra for the brute-force oracle.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major square or rectangular complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::param("data", format!("expected {} entries, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `self + c·I`.
    fn add_diag(&self, c: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] = out[(i, i)] + Complex::new(c, T::zero());
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product, rows computed in parallel. Each row's reduction order is fixed.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let n = other.cols;
        let mut data = vec![Complex::new(T::zero(), T::zero()); self.rows * n];
        data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(other.row(k)) {
                    *o = *o + a * b;
                }
            }
        });
        Self { rows: self.rows, cols: n, data }
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, a) in sums.iter_mut().zip(self.row(i)) {
                *s = *s + a.norm();
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().partial_cmp(&a[y * n + col].norm()).unwrap())
                .unwrap();
            if a[pivot * n + col].norm() == T::zero() {
                return Err(Error::param("matrix", "singular"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                for j in 0..m {
                    b.swap(col * m + j, pivot * m + j);
                }
            }
            let inv = Complex::new(T::one(), T::zero()) / a[col * n + col];
            let (head, tail) = a.split_at_mut((col + 1) * n);
            let prow = &head[col * n..];
            let (bhead, btail) = b.split_at_mut((col + 1) * m);
            let brow = &bhead[col * m..];
            tail.par_chunks_mut(n).zip(btail.par_chunks_mut(m.max(1))).for_each(|(row, brow_i)| {
                let f = row[col] * inv;
                if f.re == T::zero() && f.im == T::zero() {
                    return;
                }
                for j in col..n {
                    row[j] = row[j] - f * prow[j];
                }
                for j in 0..m {
                    brow_i[j] = brow_i[j] - f * brow[j];
                }
            });
        }
        for col in (0..n).rev() {
            let inv = Complex::new(T::one(), T::zero()) / a[col * n + col];
            for j in 0..m {
                let mut acc = b[col * m + j];
                for k in col + 1..n {
                    acc = acc - a[col * n + k] * b[k * m + j];
                }
                b[col * m + j] = acc * inv;
            }
        }
        Ok(Self { rows: n, cols: m, data: b })
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    assert_eq!(a.rows, a.cols, "expm needs a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(a.clone());
    }
    let theta13 = 5.371920351148152;
    let norm = a.norm1().as_f64();
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(Complex::new(T::lit(0.5f64.powi(s)), T::zero()));
    let b: Vec<T> = PADE13.iter().map(|&x| T::lit(x)).collect();
    let c = |k: usize| Complex::new(b[k], T::zero());
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_inner = a6.scale(c(13)).add(&a4.scale(c(11))).add(&a2.scale(c(9)));
    let u = a.matmul(
        &a6.matmul(&u_inner).add(&a6.scale(c(7))).add(&a4.scale(c(5))).add(&a2.scale(c(3))).add_diag(b[1]),
    );
    let v_inner = a6.scale(c(12)).add(&a4.scale(c(10))).add(&a2.scale(c(8)));
    let v = a6.matmul(&v_inner).add(&a6.scale(c(6))).add(&a4.scale(c(4))).add(&a2.scale(c(2))).add_diag(b[0]);
    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// `exp(-i·H·t)` for Hermitian `H`.
pub fn propagator<T: Real>(h: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    expm(&h.scale(Complex::new(T::zero(), -t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn expm_of_diagonal() {
        let mut a = CMatrix::<f64>::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(0.0, 2.0);
        a[(2, 2)] = c(-30.0, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - c(1f64.exp(), 0.0)).norm() < 1e-12);
        assert!((e[(1, 1)] - c(2f64.cos(), 2f64.sin())).norm() < 1e-12);
        assert!((e[(2, 2)].re - (-30f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn expm_rotation_generator() {
        // exp(θ [[0,-1],[1,0]]) is a rotation by θ.
        let theta = 7.3;
        let a = CMatrix::from_rows(2, 2, vec![c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)]).unwrap();
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-12);
        assert!((e[(0, 1)].re + theta.sin()).abs() < 1e-12);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn propagator_is_unitary() {
        let n = 12;
        let mut h = CMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = c(((i * 7 + j * 3) % 5) as f64 - 2.0, if i == j { 0.0 } else { ((i + 2 * j) % 3) as f64 - 1.0 });
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let u = propagator(&h, 3.7).unwrap();
        let should_be_one = u.adjoint().matmul(&u).sub(&CMatrix::identity(n));
        assert!(should_be_one.frobenius() < 1e-12, "{}", should_be_one.frobenius());
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = CMatrix::from_rows(3, 3, vec![
            c(0.0, 1.0), c(2.0, 0.0), c(1.0, 1.0),
            c(1.0, 0.0), c(0.0, 0.0), c(3.0, -1.0),
            c(4.0, 2.0), c(1.0, 0.0), c(0.0, 0.0),
        ])
        .unwrap();
        let x = CMatrix::from_rows(3, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 2.0), c(-1.0, 0.0), c(0.5, 0.0), c(3.0, 1.0)]).unwrap();
        let b = a.matmul(&x);
        let y = a.solve(&b).unwrap();
        assert!(y.sub(&x).frobenius() < 1e-12);
    }
}
