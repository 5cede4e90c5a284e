//! Dense complex LU factorization with partial pivoting.

use num_complex::Complex;

use crate::scalar::Real;

/// Row-major LU factors `P A = L U` of a square matrix.
#[derive(Clone, Debug)]
pub struct LuFactors<T: Real> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
    min_pivot: T,
    max_pivot: T,
}

impl<T: Real> LuFactors<T> {
    /// Factors `a` (row-major, `n × n`). Returns the smallest pivot modulus on
    /// failure when a pivot falls below `pivot_floor`.
    pub fn factor(mut a: Vec<Complex<T>>, n: usize, pivot_floor: T) -> Result<Self, T> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            min_pivot = min_pivot.min(best);
            max_pivot = max_pivot.max(best);
            if !(best >= pivot_floor) {
                return Err(best);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            let (upper, lower) = a.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..k * n + n];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor.re == T::zero() && factor.im == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    row[j] -= factor * row_k[j];
                }
            }
        }
        if n == 0 {
            min_pivot = T::one();
            max_pivot = T::one();
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            min_pivot,
            max_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + n];
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..i * n + n];
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }

    /// Ratio of the largest to the smallest pivot modulus (a cheap condition proxy).
    pub fn pivot_ratio(&self) -> T {
        self.max_pivot / self.min_pivot
    }

    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }
}
