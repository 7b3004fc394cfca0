//! Complex dense and banded LU with partial pivoting.
//!
//! The P1 systems assembled here have small bandwidth under lexicographic
//! node numbering, so a banded factorization keeps the desk-scale solves
//! cheap and deterministic. Storage and elimination follow the classic
//! band-LAPACK layout with kl extra superdiagonals for pivot fill.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// (2 kl + ku + 1) x n, entry (i, j) at data[kl + ku + i - j + j*ldab]
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            data: vec![Complex64::default(); ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        // stored iff i <= j + kl (lower band) and j <= i + ku + kl (upper band
        // plus pivot fill)
        debug_assert!(j + self.kl >= i && i + self.ku + self.kl >= j);
        (self.kl + self.ku + i) - j + j * self.ldab()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl >= i && i + self.ku + self.kl >= j {
            self.data[self.slot(i, j)]
        } else {
            Complex64::default()
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            j + self.kl >= i && i + self.ku >= j,
            "entry ({i},{j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    /// Zero the assembled row and put 1 on the diagonal (Dirichlet row
    /// replacement; must run before factorization).
    pub fn set_unit_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.data[s] = Complex64::default();
        }
        let d = self.slot(i, i);
        self.data[d] = Complex64::new(1.0, 0.0);
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::default(); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// LU with partial pivoting, LAPACK gbtrf style.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let ku_ext = self.ku + self.kl;
        let scale = self.max_abs().max(1e-300);
        let mut ipiv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).norm();
            for i in (j + 1)..=last {
                let a = self.get(i, j).norm();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            ipiv[j] = p;
            if best <= scale * 1e-14 {
                return Err(Error::SingularSystem(format!(
                    "pivot {best:.3e} at column {j} (matrix scale {scale:.3e})"
                )));
            }
            min_pivot = min_pivot.min(best / scale);
            let hi = (j + ku_ext).min(n - 1);
            if p != j {
                for k in j..=hi {
                    let sj = self.slot(j, k);
                    let sp = self.slot(p, k);
                    self.data.swap(sj, sp);
                }
            }
            let diag = self.data[self.slot(j, j)];
            for i in (j + 1)..=last {
                let s_ij = self.slot(i, j);
                let l = self.data[s_ij] / diag;
                self.data[s_ij] = l;
                for k in (j + 1)..=hi {
                    let s_jk = self.slot(j, k);
                    let upper = self.data[s_jk];
                    let s_ik = self.slot(i, k);
                    self.data[s_ik] -= l * upper;
                }
            }
        }
        Ok(BandLu {
            mat: self,
            ipiv,
            min_pivot,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    mat: BandMatrix,
    ipiv: Vec<usize>,
    min_pivot: f64,
}

impl BandLu {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.mat.n;
        let kl = self.mat.kl;
        let ku_ext = self.mat.ku + self.mat.kl;
        let mut x = rhs.to_vec();
        for j in 0..n {
            x.swap(j, self.ipiv[j]);
            let last = (j + kl).min(n - 1);
            let xj = x[j];
            for i in (j + 1)..=last {
                x[i] -= self.mat.data[self.mat.slot(i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            let hi = (j + ku_ext).min(n - 1);
            let mut acc = x[j];
            for k in (j + 1)..=hi {
                acc -= self.mat.data[self.mat.slot(j, k)] * x[k];
            }
            x[j] = acc / self.mat.data[self.mat.slot(j, j)];
        }
        x
    }

    /// Smallest pivot relative to the matrix scale; a crude conditioning hint.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }
}

/// Dense LU with partial pivoting for the small boundary systems.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>, // row major
}

impl DenseMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::default(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n];
        for i in 0..self.n {
            let mut acc = Complex64::default();
            for j in 0..self.n {
                acc += self.data[i * self.n + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn factor(mut self) -> Result<DenseLu> {
        let n = self.n;
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let mut p = j;
            let mut best = self.get(j, j).norm();
            for i in (j + 1)..n {
                let a = self.get(i, j).norm();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            ipiv[j] = p;
            if best <= scale * 1e-14 {
                return Err(Error::SingularSystem(format!(
                    "dense pivot {best:.3e} at column {j}"
                )));
            }
            if p != j {
                for k in 0..n {
                    self.data.swap(j * n + k, p * n + k);
                }
            }
            let diag = self.get(j, j);
            for i in (j + 1)..n {
                let l = self.get(i, j) / diag;
                self.set(i, j, l);
                for k in (j + 1)..n {
                    let v = self.get(i, k) - l * self.get(j, k);
                    self.set(i, k, v);
                }
            }
        }
        Ok(DenseLu { mat: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct DenseLu {
    mat: DenseMatrix,
    ipiv: Vec<usize>,
}

impl DenseLu {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.mat.n;
        let mut x = rhs.to_vec();
        // factor() swaps entire rows, L part included, so permute first
        for j in 0..n {
            x.swap(j, self.ipiv[j]);
        }
        for j in 0..n {
            let xj = x[j];
            for i in (j + 1)..n {
                x[i] -= self.mat.get(i, j) * xj;
            }
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for k in (j + 1)..n {
                acc -= self.mat.get(j, k) * x[k];
            }
            x[j] = acc / self.mat.get(j, j);
        }
        x
    }
}

/// Smallest eigenvalue of the Hermitian part of an m x m complex matrix,
/// via the real symmetric embedding [[Re H, -Im H], [Im H, Re H]] and cyclic
/// Jacobi sweeps. Sizes here are tiny (m <= 3).
pub fn hermitian_min_eigenvalue(mat: &[Complex64], m: usize) -> f64 {
    assert_eq!(mat.len(), m * m);
    let n = 2 * m;
    let mut a = vec![0.0f64; n * n];
    for i in 0..m {
        for j in 0..m {
            let h = 0.5 * (mat[i * m + j] + mat[j * m + i].conj());
            a[i * n + j] = h.re;
            a[(i + m) * n + (j + m)] = h.re;
            a[i * n + (j + m)] = -h.im;
            a[(i + m) * n + j] = h.im;
        }
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cth * akp - sth * akq;
                    a[k * n + q] = sth * akp + cth * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cth * apk - sth * aqk;
                    a[q * n + k] = sth * apk + cth * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
}
