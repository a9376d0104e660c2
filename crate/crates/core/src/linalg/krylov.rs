//! Restarted block Lanczos with full reorthogonalization.
//!
//! The projected matrix is accumulated from the full Gram-Schmidt
//! coefficients, so the Rayleigh-Ritz step is exact for the current basis
//! even when orthogonality would otherwise drift. A block of `b` start vectors
//! resolves exact degeneracies up to multiplicity `b`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, hermitian_eigen, norm, scale, to_dense, LinearOperator, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct KrylovOptions {
    /// Number of wanted eigenpairs.
    pub nev: usize,
    /// Block size; must be at least `nev`.
    pub block: usize,
    /// Relative residual tolerance, scaled by the largest Ritz value magnitude.
    pub tol: f64,
    /// Maximum number of block steps summed over restarts.
    pub max_iter: usize,
    /// Basis size that triggers a thick restart.
    pub max_basis: usize,
    pub seed: u64,
    pub which: Which,
}

impl KrylovOptions {
    pub fn smallest(nev: usize) -> Self {
        Self {
            nev,
            block: nev + 2,
            tol: 1e-10,
            max_iter: 2000,
            max_basis: 240,
            seed: 0x5eed,
            which: Which::Smallest,
        }
    }

    pub fn largest(nev: usize) -> Self {
        Self {
            which: Which::Largest,
            ..Self::smallest(nev)
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovResult<T> {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
    /// Explicit residual norms `|A v - theta v|`.
    pub residuals: Vec<f64>,
    /// Block steps performed.
    pub iterations: usize,
    /// Largest Ritz value magnitude seen, used as the norm estimate.
    pub norm_estimate: f64,
}

// Small problems are diagonalized densely.
const DENSE_LIMIT: usize = 96;

pub fn block_lanczos<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    opts: &KrylovOptions,
) -> Result<KrylovResult<T>> {
    let n = op.dim();
    if opts.nev == 0 || opts.nev > n {
        return Err(Error::TooManyEigenpairs {
            requested: opts.nev,
            dim: n,
        });
    }
    if n <= DENSE_LIMIT.max(4 * opts.block) {
        return Ok(dense_solve(op, opts));
    }
    let b = opts.block.max(opts.nev);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut start: Vec<Vec<T>> = (0..b).map(|_| (0..n).map(|_| T::sample(&mut rng)).collect()).collect();

    let mut iterations = 0usize;
    let mut norm_est = 0.0f64;
    let mut last_ritz: Option<(Vec<f64>, Vec<Vec<T>>, Vec<f64>)> = None;

    while iterations < opts.max_iter {
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(opts.max_basis + b);
        let _ = orthonormalize_block(&basis, &mut start, &mut rng);
        basis.extend(start.drain(..));

        let cap = opts.max_basis.max(2 * b).min(n);
        let mut t = DMatrix::<T>::zeros(cap + b, cap + b);
        let mut block_start = 0usize;

        loop {
            iterations += 1;
            let m = basis.len();
            let mut w: Vec<Vec<T>> = basis[block_start..m]
                .iter()
                .map(|q| {
                    let mut y = vec![T::zero(); n];
                    op.apply(q, &mut y);
                    y
                })
                .collect();
            let (c, bmat) = orthonormalize_block(&basis, &mut w, &mut rng);
            for j in 0..(m - block_start) {
                for i in 0..m {
                    t[(i, block_start + j)] = c[(i, j)];
                }
                for i in 0..b {
                    t[(m + i, block_start + j)] = bmat[(i, j)];
                }
            }

            let exhausted = m + b > n;
            let full = m + b > cap;
            let steps = m / b;
            if !(exhausted || full || iterations >= opts.max_iter || steps < 8 || steps % 4 == 0) {
                block_start = m;
                basis.extend(w);
                continue;
            }

            // Rayleigh-Ritz on the Hermitian part of the projected matrix.
            let tm = t.view((0, 0), (m, m)).into_owned();
            let herm = (&tm + tm.adjoint()) * T::from_real(0.5);
            let (vals, vecs) = hermitian_eigen(herm);
            norm_est = vals.iter().fold(norm_est, |a, v| a.max(v.abs()));
            let order: Vec<usize> = match opts.which {
                Which::Smallest => (0..m).collect(),
                Which::Largest => (0..m).rev().collect(),
            };
            let keep = b.min(m);
            let mut est = Vec::with_capacity(keep);
            for &k in order.iter().take(keep) {
                // |B y_last| bounds the residual of the Ritz pair.
                let mut r2 = 0.0;
                for i in 0..b {
                    let mut s = T::zero();
                    for j in 0..(m - block_start) {
                        s += bmat[(i, j)] * vecs[(block_start + j, k)];
                    }
                    r2 += s.modulus_squared();
                }
                est.push(r2.sqrt());
            }
            let threshold = opts.tol * norm_est.max(f64::MIN_POSITIVE);
            let converged = est.iter().take(opts.nev).all(|&r| r <= threshold);

            if converged || exhausted || full || iterations >= opts.max_iter {
                let ritz_vals: Vec<f64> = order.iter().take(keep).map(|&k| vals[k]).collect();
                let ritz_vecs: Vec<Vec<T>> = order
                    .iter()
                    .take(keep)
                    .map(|&k| combine(&basis, vecs.column(k).as_slice()))
                    .collect();
                if converged || exhausted {
                    return Ok(finish(op, ritz_vals, ritz_vecs, opts.nev, iterations, norm_est));
                }
                last_ritz = Some((ritz_vals, ritz_vecs.clone(), est));
                start = ritz_vecs;
                break;
            }

            block_start = m;
            basis.extend(w);
        }
    }

    let (vals, vecs, _) = last_ritz.expect("at least one restart cycle ran");
    let res = finish(op, vals, vecs, opts.nev, iterations, norm_est);
    let worst = res.residuals.iter().cloned().fold(0.0, f64::max);
    Err(Error::NotConverged {
        iterations,
        worst_residual: worst,
        residuals: res.residuals,
    })
}

fn finish<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    mut vals: Vec<f64>,
    mut vecs: Vec<Vec<T>>,
    nev: usize,
    iterations: usize,
    norm_estimate: f64,
) -> KrylovResult<T> {
    vals.truncate(nev);
    vecs.truncate(nev);
    let n = op.dim();
    let residuals = vals
        .iter()
        .zip(&vecs)
        .map(|(&theta, v)| {
            let mut y = vec![T::zero(); n];
            op.apply(v, &mut y);
            axpy(T::from_real(-theta), v, &mut y);
            norm(&y)
        })
        .collect();
    KrylovResult {
        values: vals,
        vectors: vecs,
        residuals,
        iterations,
        norm_estimate,
    }
}

fn dense_solve<T: Scalar, A: LinearOperator<T> + ?Sized>(op: &A, opts: &KrylovOptions) -> KrylovResult<T> {
    let m = to_dense(op);
    let n = m.nrows();
    let herm = (&m + m.adjoint()) * T::from_real(0.5);
    let (vals, vecs) = hermitian_eigen(herm);
    let order: Vec<usize> = match opts.which {
        Which::Smallest => (0..n).collect(),
        Which::Largest => (0..n).rev().collect(),
    };
    let norm_est = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let values = order.iter().take(opts.nev).map(|&k| vals[k]).collect();
    let vectors = order
        .iter()
        .take(opts.nev)
        .map(|&k| vecs.column(k).iter().cloned().collect())
        .collect();
    finish(op, values, vectors, opts.nev, 0, norm_est)
}

fn combine<T: Scalar>(basis: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let n = basis[0].len();
    let mut out = vec![T::zero(); n];
    for (q, &c) in basis.iter().zip(coeffs) {
        axpy(c, q, &mut out);
    }
    out
}

/// Orthogonalize `w` against `basis` (two passes) and QR-factor the result in
/// place. Returns the projection coefficients `C = basis^H w` and the
/// triangular factor `B`. Rank-deficient columns are replaced by random
/// directions with a zero column in `B`.
fn orthonormalize_block<T: Scalar, R: rand::Rng>(
    basis: &[Vec<T>],
    w: &mut [Vec<T>],
    rng: &mut R,
) -> (DMatrix<T>, DMatrix<T>) {
    let m = basis.len();
    let b = w.len();
    let mut c = DMatrix::<T>::zeros(m, b);
    let mut bmat = DMatrix::<T>::zeros(b, b);

    // Classical Gram-Schmidt applied twice, with every basis vector read
    // once per pass for the whole block.
    for _pass in 0..2 {
        let mut h = vec![T::zero(); b];
        for (i, q) in basis.iter().enumerate() {
            for (j, col) in w.iter().enumerate() {
                h[j] = dot(q, col);
            }
            for (j, col) in w.iter_mut().enumerate() {
                c[(i, j)] += h[j];
                axpy(-h[j], q, col);
            }
        }
    }

    for j in 0..b {
        let before = norm(&w[j]);
        for _pass in 0..2 {
            for i in 0..j {
                let (head, tail) = w.split_at_mut(j);
                let h = dot(&head[i], &tail[0]);
                bmat[(i, j)] += h;
                axpy(-h, &head[i], &mut tail[0]);
            }
        }
        let nrm = norm(&w[j]);
        if nrm > 1e-10 * before.max(1e-300) && nrm > 1e-300 {
            scale(T::from_real(1.0 / nrm), &mut w[j]);
            bmat[(j, j)] = T::from_real(nrm);
        } else {
            // Deflated direction: continue the Krylov space with fresh noise.
            let n = w[j].len();
            let mut v: Vec<T> = (0..n).map(|_| T::sample(rng)).collect();
            for _pass in 0..2 {
                for q in basis.iter().chain(w[..j].iter()) {
                    let h = dot(q, &v);
                    axpy(-h, q, &mut v);
                }
            }
            let nv = norm(&v);
            scale(T::from_real(1.0 / nv), &mut v);
            w[j] = v;
            bmat[(j, j)] = T::zero();
        }
    }
    (c, bmat)
}
