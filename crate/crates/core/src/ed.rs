//! Exact diagonalization of spin models in the `s^z` product basis.
//!
//! Basis state `s` is a bit string with bit `j` set when site `j` is up. A
//! Pauli string maps `|s>` to `phase(s) |s ^ flip>`, where `flip` marks the
//! sites carrying `s^x` or `s^y` and the phase is
//! `i^{#y} (-1)^{popcount(!s & (ymask | zmask))}`. Terms are grouped by flip
//! mask and applied in gather form, one output row at a time.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::krylov::{block_lanczos, KrylovOptions};
use crate::linalg::{hermitian_eigen, LinearOperator, Scalar};
use crate::spinmodel::{Axis, SpinModel};

/// Rows stored explicitly up to this many sites; terms are re-evaluated on
/// the fly above it.
pub const STORED_MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    /// Sites whose spin is tested for the sign.
    sign: u32,
    coef: Complex64,
}

#[derive(Debug, Clone)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    /// Real parts of `vals`, kept when every entry is real.
    real_vals: Option<Vec<f64>>,
}

/// Hamiltonian of a [`SpinModel`] on the full `2^N` space.
#[derive(Debug, Clone)]
pub struct SpinOperatorMatrix {
    n: usize,
    dim: usize,
    diag: Vec<f64>,
    /// Off-diagonal terms grouped by flip mask.
    groups: Vec<(u32, Vec<Term>)>,
    csr: Option<Csr>,
    real: bool,
}

fn sign_of(s: usize, mask: u32) -> f64 {
    if (!(s as u32) & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

// (flip, sign mask, i^{#y}) of a Pauli string.
pub(crate) fn pauli_string(ops: &[(usize, Axis)]) -> (u32, u32, Complex64) {
    let (mut flip, mut sign, mut phase) = (0u32, 0u32, Complex64::new(1.0, 0.0));
    for &(site, axis) in ops {
        let bit = 1u32 << site;
        match axis {
            Axis::X => flip ^= bit,
            Axis::Y => {
                flip ^= bit;
                sign ^= bit;
                phase *= Complex64::i();
            }
            Axis::Z => sign ^= bit,
        }
    }
    (flip, sign, phase)
}

impl SpinOperatorMatrix {
    pub fn new(model: &SpinModel) -> Result<Self> {
        Self::with_storage(model, model.n_sites() <= STORED_MAX_SITES)
    }

    pub fn with_storage(model: &SpinModel, stored: bool) -> Result<Self> {
        let n = model.n_sites();
        if n == 0 || n > 24 {
            return Err(Error::DimensionCap { dim: n, cap: 24 });
        }
        let dim = 1usize << n;
        let mut raw: Vec<(u32, u32, Complex64)> = Vec::new();
        for b in &model.bonds {
            for (a, &ax) in Axis::ALL.iter().enumerate() {
                for (c, &bx) in Axis::ALL.iter().enumerate() {
                    let k = b.k[a][c];
                    if k != 0.0 {
                        let (f, s, p) = pauli_string(&[(b.i, ax), (b.j, bx)]);
                        raw.push((f, s, p * k));
                    }
                }
            }
        }
        for (j, h) in model.fields.iter().enumerate() {
            for (a, &ax) in Axis::ALL.iter().enumerate() {
                if h[a] != 0.0 {
                    let (f, s, p) = pauli_string(&[(j, ax)]);
                    raw.push((f, s, p * h[a]));
                }
            }
        }
        let mut diag = vec![model.offset; dim];
        let mut groups: Vec<(u32, Vec<Term>)> = Vec::new();
        for (flip, sign, coef) in raw {
            if flip == 0 {
                // s^z strings are real on the diagonal.
                for (s, d) in diag.iter_mut().enumerate() {
                    *d += coef.re * sign_of(s, sign);
                }
                continue;
            }
            match groups.iter_mut().find(|g| g.0 == flip) {
                Some(g) => g.1.push(Term { sign, coef }),
                None => groups.push((flip, vec![Term { sign, coef }])),
            }
        }
        groups.sort_by_key(|g| g.0);
        let real = groups.iter().all(|g| g.1.iter().all(|t| t.coef.im == 0.0));
        let mut m = Self {
            n,
            dim,
            diag,
            groups,
            csr: None,
            real,
        };
        if stored {
            m.csr = Some(m.build_csr());
        }
        Ok(m)
    }

    fn build_csr(&self) -> Csr {
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for c in 0..self.dim {
            for (flip, terms) in &self.groups {
                let s = c ^ *flip as usize;
                let v: Complex64 = terms.iter().map(|t| t.coef * sign_of(s, t.sign)).sum();
                if v != Complex64::new(0.0, 0.0) {
                    cols.push(s as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let real_vals = self.real.then(|| vals.iter().map(|v| v.re).collect());
        Csr {
            row_ptr,
            cols,
            vals,
            real_vals,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_stored(&self) -> bool {
        self.csr.is_some()
    }

    fn row<T: Scalar>(&self, c: usize, x: &[T]) -> T {
        let mut acc = T::from_complex(Complex64::new(self.diag[c], 0.0)) * x[c];
        match &self.csr {
            Some(csr) => {
                for k in csr.row_ptr[c]..csr.row_ptr[c + 1] {
                    acc += T::from_complex(csr.vals[k]) * x[csr.cols[k] as usize];
                }
            }
            None => {
                for (flip, terms) in &self.groups {
                    let s = c ^ *flip as usize;
                    let v: Complex64 = terms.iter().map(|t| t.coef * sign_of(s, t.sign)).sum();
                    acc += T::from_complex(v) * x[s];
                }
            }
        }
        acc
    }

    fn row_real(&self, c: usize, x: &[f64]) -> f64 {
        let mut acc = self.diag[c] * x[c];
        match self.csr.as_ref().and_then(|m| m.real_vals.as_ref().map(|v| (m, v))) {
            Some((csr, vals)) => {
                for k in csr.row_ptr[c]..csr.row_ptr[c + 1] {
                    acc += vals[k] * x[csr.cols[k] as usize];
                }
            }
            None => {
                for (flip, terms) in &self.groups {
                    let s = c ^ *flip as usize;
                    let v: f64 = terms.iter().map(|t| t.coef.re * sign_of(s, t.sign)).sum();
                    acc += v * x[s];
                }
            }
        }
        acc
    }

    fn apply_generic<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        const CHUNK: usize = 1024;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            for (k, yk) in chunk.iter_mut().enumerate() {
                *yk = self.row(ci * CHUNK + k, x);
            }
        });
    }

    /// Dense complex matrix, for small systems and tests.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        crate::linalg::to_dense::<Complex64, _>(self)
    }
}

impl LinearOperator<f64> for SpinOperatorMatrix {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert!(self.real, "complex Hamiltonian applied to real vectors");
        const CHUNK: usize = 1024;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            for (k, yk) in chunk.iter_mut().enumerate() {
                *yk = self.row_real(ci * CHUNK + k, x);
            }
        });
    }
}

impl LinearOperator<Complex64> for SpinOperatorMatrix {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_generic(x, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdMethod {
    /// Dense below `dense_max_sites`, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdOptions {
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub method: EdMethod,
    pub max_sites: usize,
    pub dense_max_sites: usize,
    /// Eigenvalues closer than this are reported as one cluster.
    pub degeneracy_tol: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            k: 2,
            tol: 1e-10,
            seed: 0x5eed,
            max_iter: 3000,
            method: EdMethod::Auto,
            max_sites: 20,
            dense_max_sites: 8,
            degeneracy_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Lowest `k` eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Matching unit eigenvectors.
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub norm_estimate: f64,
    pub seed: u64,
    pub method: EdMethod,
    /// Every eigenvalue computed, including the extra ones beyond `k`.
    pub computed: Vec<f64>,
    /// Index groups of `computed` closer than the degeneracy tolerance.
    pub clusters: Vec<Vec<usize>>,
}

impl SpectrumResult {
    /// `E1 - E0`.
    pub fn gap(&self) -> f64 {
        self.computed[1] - self.computed[0]
    }

    pub fn ground_state(&self) -> &[Complex64] {
        &self.vectors[0]
    }
}

fn clusters(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (v - values[*c.last().unwrap()]).abs() <= tol => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out.retain(|c| c.len() > 1);
    out
}

/// Lowest `opts.k` eigenpairs of a spin model.
pub fn lowest_eigenpairs(model: &SpinModel, opts: &EdOptions) -> Result<SpectrumResult> {
    let n = model.n_sites();
    if n > opts.max_sites {
        return Err(Error::DimensionCap {
            dim: n,
            cap: opts.max_sites,
        });
    }
    let op = SpinOperatorMatrix::new(model)?;
    lowest_eigenpairs_of(&op, opts)
}

pub fn lowest_eigenpairs_of(op: &SpinOperatorMatrix, opts: &EdOptions) -> Result<SpectrumResult> {
    let dim = op.dim;
    if opts.k == 0 || opts.k >= dim {
        return Err(Error::TooManyEigenpairs { requested: opts.k, dim });
    }
    let want = (opts.k + 2).min(dim);
    let dense = match opts.method {
        EdMethod::Dense => true,
        EdMethod::Krylov => false,
        EdMethod::Auto => op.n <= opts.dense_max_sites,
    };
    let (computed, vectors, iterations, norm_estimate, method) = if dense {
        let (vals, vecs) = hermitian_eigen(op.to_dense());
        let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let vs: Vec<Vec<Complex64>> = (0..want).map(|j| vecs.column(j).iter().copied().collect()).collect();
        (vals[..want].to_vec(), vs, 0, norm, EdMethod::Dense)
    } else {
        let mut ko = KrylovOptions::smallest(want);
        ko.block = want;
        ko.tol = opts.tol;
        ko.seed = opts.seed;
        ko.max_iter = opts.max_iter;
        if op.real {
            let r = block_lanczos::<f64, _>(op, &ko)?;
            let vs = r
                .vectors
                .iter()
                .map(|v| v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect();
            (r.values, vs, r.iterations, r.norm_estimate, EdMethod::Krylov)
        } else {
            let r = block_lanczos::<Complex64, _>(op, &ko)?;
            (r.values, r.vectors, r.iterations, r.norm_estimate, EdMethod::Krylov)
        }
    };
    let residuals = vectors
        .iter()
        .zip(&computed)
        .map(|(v, &e)| {
            let mut hv = vec![Complex64::new(0.0, 0.0); dim];
            LinearOperator::<Complex64>::apply(op, v, &mut hv);
            hv.iter()
                .zip(v)
                .map(|(a, b)| (a - b * e).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect::<Vec<f64>>();
    Ok(SpectrumResult {
        values: computed[..opts.k].to_vec(),
        vectors: vectors[..opts.k].to_vec(),
        residuals: residuals[..opts.k].to_vec(),
        iterations,
        norm_estimate,
        seed: opts.seed,
        method,
        clusters: clusters(&computed, opts.degeneracy_tol),
        computed,
    })
}

/// `<psi| P |psi>` for a Pauli string on distinct sites.
pub fn pauli_expectation(state: &[Complex64], ops: &[(usize, Axis)]) -> Result<Complex64> {
    let dim = state.len();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "state length {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    for (k, &(s, _)) in ops.iter().enumerate() {
        if s >= n {
            return Err(Error::InvalidArgument(format!("site {s} outside a {n}-site state")));
        }
        if ops[..k].iter().any(|&(t, _)| t == s) {
            return Err(Error::InvalidArgument(format!("site {s} repeated in operator string")));
        }
    }
    let (flip, sign, phase) = pauli_string(ops);
    let sum: Complex64 = (0..dim)
        .into_par_iter()
        .with_min_len(4096)
        .map(|s| state[s ^ flip as usize].conj() * state[s] * sign_of(s, sign))
        .sum();
    Ok(sum * phase)
}

/// Single-site `<s^a_j>`.
pub fn expectation(state: &[Complex64], site: usize, axis: Axis) -> Result<f64> {
    Ok(pauli_expectation(state, &[(site, axis)])?.re)
}

/// `<s^a_i s^a_j>`, optionally minus `<s^a_i><s^a_j>`.
pub fn correlator(state: &[Complex64], axis: Axis, i: usize, j: usize, connected: bool) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument("correlator needs two distinct sites".into()));
    }
    let raw = pauli_expectation(state, &[(i, axis), (j, axis)])?.re;
    if connected {
        Ok(raw - expectation(state, i, axis)? * expectation(state, j, axis)?)
    } else {
        Ok(raw)
    }
}

/// Product state with every spin along `+axis` or `-axis` as given per site.
pub fn product_state(dirs: &[(Axis, bool)]) -> Vec<Complex64> {
    let n = dirs.len();
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for (site, &(axis, plus)) in dirs.iter().enumerate() {
        let s = if plus { 1.0 } else { -1.0 };
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // amplitudes (down, up)
        let (dn, up) = match axis {
            Axis::Z => {
                if plus {
                    (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
                } else {
                    (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
                }
            }
            Axis::X => (Complex64::new(s * r, 0.0), Complex64::new(r, 0.0)),
            Axis::Y => (Complex64::new(0.0, s * r), Complex64::new(r, 0.0)),
        };
        let mut next = vec![Complex64::new(0.0, 0.0); psi.len() * 2];
        for (b, &a) in psi.iter().enumerate() {
            next[b] += a * dn;
            next[b | (1 << site)] += a * up;
        }
        psi = next;
    }
    debug_assert_eq!(psi.len(), 1 << n);
    psi
}

/// `<psi|H|psi>` for a normalized state.
pub fn rayleigh_quotient(op: &SpinOperatorMatrix, psi: &[Complex64]) -> f64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); psi.len()];
    LinearOperator::<Complex64>::apply(op, psi, &mut hv);
    psi.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
}
