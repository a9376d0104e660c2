//! Numerical kernels shared by the continuum solver and the spin-chain
//! diagonalizer: a block Krylov eigensolver, a banded Cholesky factorization
//! for shift-invert, and a symmetric tridiagonal solver for radial problems.

pub mod banded;
pub mod krylov;
pub mod tridiag;

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

/// Field type usable by the Krylov solver: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn from_complex(z: Complex64) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>() - 0.5
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// A linear map applied as `y = A x`. Implementations must be Hermitian for
/// use with the Krylov solver.
pub trait LinearOperator<T>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// `<a|b>` with the first argument conjugated.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x.conjugate() * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and eigenvectors permuted to match.
pub fn hermitian_eigen<T: Scalar>(m: DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Materialize an operator as a dense matrix by probing unit vectors.
pub fn to_dense<T: Scalar, A: LinearOperator<T> + ?Sized>(op: &A) -> DMatrix<T> {
    let n = op.dim();
    let mut m = DMatrix::<T>::zeros(n, n);
    let mut e = vec![T::zero(); n];
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = T::zero();
    }
    m
}

/// `cos(pi x)` with exact zeros and signs at multiples of one half.
pub fn cos_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    let (q, f) = quadrant(r);
    match q {
        0 => (std::f64::consts::PI * f).cos(),
        1 => -(std::f64::consts::PI * f).sin(),
        2 => -(std::f64::consts::PI * f).cos(),
        _ => (std::f64::consts::PI * f).sin(),
    }
}

/// `sin(pi x)` with exact zeros and signs at multiples of one half.
pub fn sin_pi(x: f64) -> f64 {
    cos_pi(x - 0.5)
}

// Split r in [0, 2) into quarter-turn index and remainder in [0, 0.5).
fn quadrant(r: f64) -> (u8, f64) {
    let q = (r / 0.5).floor();
    let f = r - 0.5 * q;
    ((q as i64).rem_euclid(4) as u8, f)
}
