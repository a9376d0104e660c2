//! Symmetric positive-definite banded matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Lower band storage: `band[i * (w + 1) + k]` holds `A[i][i - k]` for
/// `k = 0..=w`.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    w: usize,
    band: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            w: bandwidth,
            band: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    /// Adds `v` to `A[i][j]` (and implicitly `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        assert!(k <= self.w, "entry ({i}, {j}) outside the band");
        self.band[r * (self.w + 1) + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        if k > self.w {
            0.0
        } else {
            self.band[r * (self.w + 1) + k]
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let w = self.w;
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.band[i * (w + 1)..(i + 1) * (w + 1)];
            let mut s = row[0] * x[i];
            for k in 1..=w.min(i) {
                s += row[k] * x[i - k];
            }
            for k in 1..=w.min(self.n - 1 - i) {
                s += self.band[(i + k) * (w + 1) + k] * x[i + k];
            }
            *yi = s;
        }
    }

    /// Cholesky factor of `A - shift * I`.
    pub fn cholesky(&self, shift: f64) -> Result<BandedCholesky> {
        let n = self.n;
        let w = self.w;
        let mut l = self.band.clone();
        for i in 0..n {
            l[i * (w + 1)] -= shift;
        }
        // L[i][j] stored at l[i*(w+1) + (i-j)].
        for j in 0..n {
            let mut d = l[j * (w + 1)];
            for k in j.saturating_sub(w)..j {
                let v = l[j * (w + 1) + (j - k)];
                d -= v * v;
            }
            if d <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "banded matrix minus shift {shift} is not positive definite (pivot {j})"
                )));
            }
            let d = d.sqrt();
            l[j * (w + 1)] = d;
            for i in (j + 1)..(j + w + 1).min(n) {
                let mut s = l[i * (w + 1) + (i - j)];
                let lo = i.saturating_sub(w).max(j.saturating_sub(w));
                for k in lo..j {
                    s -= l[i * (w + 1) + (i - k)] * l[j * (w + 1) + (j - k)];
                }
                l[i * (w + 1) + (i - j)] = s / d;
            }
        }
        Ok(BandedCholesky { n, w, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    w: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.w;
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(w)..i {
                s -= self.l[i * (w + 1) + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * (w + 1)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + w + 1).min(n) {
                s -= self.l[k * (w + 1) + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * (w + 1)];
        }
    }
}
