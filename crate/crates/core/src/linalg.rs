//! Direct solvers for the tridiagonal (1D) and banded (2D) Newton systems.

use crate::error::{Error, Result};

const PIVOT_FLOOR: f64 = 1e-300;

/// Tridiagonal matrix stored by diagonals. `lower[i]` is entry `(i+1, i)`,
/// `upper[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[j]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        check_pivot(pivot, 0)?;
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            check_pivot(pivot, i)?;
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

fn check_pivot(p: f64, row: usize) -> Result<()> {
    if !p.is_finite() || p.abs() < PIVOT_FLOOR {
        return Err(Error::SingularJacobian(format!(
            "zero pivot {p:e} at row {row}"
        )));
    }
    Ok(())
}

/// Square band matrix with `bw` sub- and super-diagonals.
///
/// Row `i` stores columns `i - bw ..= i + bw` at offsets `0 ..= 2 bw`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.bw >= i && j <= i + self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.bw >= i && j <= i + self.bw && i < self.n && j < self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization without pivoting, consuming the matrix.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            check_pivot(pivot, k)?;
            let hi = (k + bw).min(n - 1);
            for i in k + 1..=hi {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                // multipliers are kept in the strictly lower band
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=hi {
                    let v = self.data[self.slot(k, j)];
                    let s = self.slot(i, j);
                    self.data[s] -= l * v;
                }
            }
        }
        Ok(BandLu { lu: self })
    }

    pub fn solve(self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factorize()?.solve(rhs)
    }
}

/// In-place LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = &self.lu;
        let n = m.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut b = rhs.to_vec();
        for k in 0..n {
            let hi = (k + m.bw).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=hi {
                    b[i] -= m.data[m.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let hi = (k + m.bw).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=hi {
                s -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)];
        }
        Ok(b)
    }
}

/// Dense solve with partial pivoting for the small reduced systems.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        check_pivot(a[k][k], k)?;
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn thomas_solves_second_difference() {
        let n = 6;
        let mut t = Tridiagonal::zeros(n);
        t.diag.iter_mut().for_each(|d| *d = 2.0);
        t.lower.iter_mut().for_each(|d| *d = -1.0);
        t.upper.iter_mut().for_each(|d| *d = -1.0);
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b = t.matvec(&x);
        let y = t.solve(&b).unwrap();
        assert!(max_abs_diff(&x, &y) < 1e-13);
    }

    #[test]
    fn thomas_reports_zero_pivot() {
        let t = Tridiagonal {
            lower: vec![1.0],
            diag: vec![0.0, 1.0],
            upper: vec![1.0],
        };
        assert!(matches!(
            t.solve(&[1.0, 1.0]),
            Err(Error::SingularJacobian(_))
        ));
    }

    #[test]
    fn dense_solve_pivots() {
        let a = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        let x = dense_solve(a, vec![4.0, 5.0]).unwrap();
        assert!((x[0] + 3.5).abs() < 1e-15 && (x[1] - 4.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn band_solve_inverts_matvec(
            n in 3usize..40,
            bw in 1usize..5,
            seed in proptest::collection::vec(-1.0f64..1.0, 40 * 11),
            x in proptest::collection::vec(-10.0f64..10.0, 40),
        ) {
            let mut a = BandMatrix::zeros(n, bw);
            let mut k = 0;
            for i in 0..n {
                let lo = i.saturating_sub(bw);
                let hi = (i + bw).min(n - 1);
                for j in lo..=hi {
                    a.set(i, j, seed[k % seed.len()]);
                    k += 1;
                }
                // diagonally dominant
                a.add(i, i, 2.0 * bw as f64 + 1.0);
            }
            let x = &x[..n];
            let b = a.matvec(x);
            let y = a.solve(&b).unwrap();
            prop_assert!(max_abs_diff(x, &y) < 1e-10);
        }

        #[test]
        fn thomas_matches_band_solver(
            d in proptest::collection::vec(3.0f64..5.0, 12),
            o in proptest::collection::vec(-1.0f64..1.0, 22),
            b in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let t = Tridiagonal { lower: o[..11].to_vec(), diag: d.clone(), upper: o[11..].to_vec() };
            let mut m = BandMatrix::zeros(12, 1);
            for i in 0..12usize {
                for j in i.saturating_sub(1)..=(i + 1).min(11) {
                    m.set(i, j, t.get(i, j));
                }
            }
            let x1 = t.solve(&b).unwrap();
            let x2 = m.solve(&b).unwrap();
            prop_assert!(max_abs_diff(&x1, &x2) < 1e-12);
        }
    }
}
