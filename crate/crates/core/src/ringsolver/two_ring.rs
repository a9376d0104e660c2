//! Two rings side by side in the plane, solved on a finite-difference grid.
//!
//! The rings sit at `(+-xc, 0)` with `xc = R + d/2`. The composite potential
//! is symmetric under `x -> -x` and `y -> -y`, so the problem splits into four
//! parity sectors, each solved on the quarter plane `x, y > 0` with mirror
//! ghost cells. The spacing is adjusted so that a grid node lands exactly on
//! each ring centre, keeping the local stencil symmetric about it.

use rayon::prelude::*;

use super::single::SingleRingSolution;
use crate::error::{Error, Result};
use crate::linalg::banded::{BandedCholesky, BandedSym};
use crate::linalg::krylov::{block_lanczos, KrylovOptions};
use crate::linalg::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneGridSpec {
    /// Target spacing; the actual spacing is adjusted down to fit the ring centre.
    pub spacing: f64,
    /// Distance kept between the outermost ring edge and the Dirichlet wall.
    pub margin: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Eigenpairs computed in each of the four parity sectors.
    pub states_per_sector: usize,
    pub seed: u64,
}

impl Default for PlaneGridSpec {
    fn default() -> Self {
        Self {
            spacing: 0.1,
            margin: 4.0,
            tol: 1e-10,
            max_iter: 2000,
            states_per_sector: 3,
            seed: 0x5eed,
        }
    }
}

/// Quarter-plane grid with cell centres at `((i + 1/2) h, (j + 1/2) h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarterGrid {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// x coordinate of the right ring centre.
    pub xc: f64,
    pub radius: f64,
}

impl QuarterGrid {
    pub fn new(radius: f64, separation: f64, spacing: f64, margin: f64) -> Result<Self> {
        if !(radius > 0.0) || !(separation > 0.0) {
            return Err(Error::Geometry(format!(
                "ring radius and separation must be positive, got R = {radius}, d = {separation}"
            )));
        }
        if !(spacing > 0.0) || margin < 0.0 {
            return Err(Error::InvalidArgument(
                "grid spacing must be positive and margin non-negative".into(),
            ));
        }
        let xc = radius + 0.5 * separation;
        let n = (xc / spacing - 0.5).ceil().max(0.0);
        let h = xc / (n + 0.5);
        let nx = ((xc + radius + margin) / h).ceil() as usize;
        let ny = ((radius + margin) / h).ceil() as usize;
        Ok(Self { h, nx, ny, xc, radius })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, p: usize) -> (f64, f64) {
        let (i, j) = (p / self.ny, p % self.ny);
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// Composite trap: the lower of the two ring potentials.
    pub fn potential(&self, x: f64, y: f64) -> f64 {
        let rr = (x - self.xc).hypot(y);
        let rl = (x + self.xc).hypot(y);
        let vr = 0.5 * (self.radius - rr).powi(2);
        let vl = 0.5 * (self.radius - rl).powi(2);
        vr.min(vl)
    }
}

/// One computed eigenstate with its mirror parities.
#[derive(Debug, Clone)]
pub struct TwoRingState {
    pub energy: f64,
    /// Parity under `x -> -x` (swapping the rings).
    pub px: i8,
    /// Parity under `y -> -y` (reflection about the line through both centres).
    pub py: i8,
    /// Position within its sector, from the bottom.
    pub sector_index: usize,
    /// `|H psi - E psi|` for the quarter-plane vector.
    pub residual: f64,
    /// Quarter-plane samples, normalized over the full plane.
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoRingSpectrum {
    pub radius: f64,
    pub separation: f64,
    pub grid: QuarterGrid,
    /// All computed states, ascending in energy.
    pub states: Vec<TwoRingState>,
    pub tol: f64,
    pub iterations: usize,
}

impl TwoRingSpectrum {
    pub fn sector(&self, px: i8, py: i8) -> Vec<&TwoRingState> {
        let mut v: Vec<&TwoRingState> = self.states.iter().filter(|s| s.px == px && s.py == py).collect();
        v.sort_by_key(|s| s.sector_index);
        v
    }

    /// Half the splitting of the two lowest (nodeless-per-ring) states: the
    /// tunnelling amplitude of the `l = 0` orbital.
    pub fn ground_tunnelling(&self) -> f64 {
        let even = self.sector(1, 1)[0].energy;
        let odd = self.sector(-1, 1)[0].energy;
        0.5 * (odd - even)
    }
}

struct SectorOperator {
    h: BandedSym,
}

struct ShiftInvert<'a> {
    chol: &'a BandedCholesky,
    n: usize,
}

impl LinearOperator<f64> for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.chol.solve_in_place(y);
    }
}

fn sector_operator(grid: &QuarterGrid, px: i8, py: i8) -> SectorOperator {
    let (nx, ny, h) = (grid.nx, grid.ny, grid.h);
    let c = 0.5 / (h * h);
    let mut m = BandedSym::zeros(grid.len(), ny);
    for i in 0..nx {
        for j in 0..ny {
            let p = i * ny + j;
            let (x, y) = grid.point(p);
            let mut d = 4.0 * c + grid.potential(x, y);
            // Mirror ghost cells: psi(-1) = parity * psi(0).
            if i == 0 {
                d -= c * px as f64;
            }
            if j == 0 {
                d -= c * py as f64;
            }
            m.add(p, p, d);
            if j + 1 < ny {
                m.add(p + 1, p, -c);
            }
            if i + 1 < nx {
                m.add(p + ny, p, -c);
            }
        }
    }
    SectorOperator { h: m }
}

fn solve_sector(grid: &QuarterGrid, px: i8, py: i8, spec: &PlaneGridSpec) -> Result<(Vec<TwoRingState>, usize)> {
    let op = sector_operator(grid, px, py);
    let chol = op.h.cholesky(0.0)?;
    let inv = ShiftInvert {
        chol: &chol,
        n: grid.len(),
    };
    let mut opts = KrylovOptions::largest(spec.states_per_sector);
    opts.tol = spec.tol;
    opts.max_iter = spec.max_iter;
    opts.seed = spec.seed;
    let res = block_lanczos(&inv, &opts)?;
    let mut states = Vec::new();
    let area = 4.0 * grid.h * grid.h;
    for (k, (mu, v)) in res.values.iter().zip(res.vectors).enumerate() {
        let energy = 1.0 / mu;
        let mut hv = vec![0.0; v.len()];
        op.h.matvec(&v, &mut hv);
        let residual = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - energy * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let nrm = (v.iter().map(|x| x * x).sum::<f64>() * area).sqrt();
        let psi = v.iter().map(|x| x / nrm).collect();
        states.push(TwoRingState {
            energy,
            px,
            py,
            sector_index: k,
            residual,
            psi,
        });
    }
    Ok((states, res.iterations))
}

pub const SECTORS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

/// Lowest states of `-(1/2) Laplacian + V` for two rings at surface separation `d`.
pub fn solve_two_ring(radius: f64, separation: f64, spec: &PlaneGridSpec) -> Result<TwoRingSpectrum> {
    let grid = QuarterGrid::new(radius, separation, spec.spacing, spec.margin)?;
    if spec.states_per_sector == 0 || spec.states_per_sector >= grid.len() {
        return Err(Error::TooManyEigenpairs {
            requested: spec.states_per_sector,
            dim: grid.len(),
        });
    }
    let results: Vec<Result<(Vec<TwoRingState>, usize)>> = SECTORS
        .par_iter()
        .map(|&(px, py)| solve_sector(&grid, px, py, spec))
        .collect();
    let mut states = Vec::new();
    let mut iterations = 0;
    for r in results {
        let (s, it) = r?;
        states.extend(s);
        iterations = iterations.max(it);
    }
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(TwoRingSpectrum {
        radius,
        separation,
        grid,
        states,
        tol: spec.tol,
        iterations,
    })
}

/// Which ring anchors the trial functions used to recognise the manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceRing {
    #[default]
    Right,
    Left,
}

/// Trial function in sector (px, py) built from the single-ring orbital
/// `psi0(r) cos(l phi)` (py = +1) or `psi0(r) sin(l phi)` (py = -1).
fn trial(grid: &QuarterGrid, sol: &SingleRingSolution, l: u32, px: i8, py: i8, reference: ReferenceRing) -> Vec<f64> {
    let lf = l as f64;
    let orbital = |x: f64, y: f64| {
        let r = x.hypot(y);
        let phi = y.atan2(x);
        let ang = if py > 0 { (lf * phi).cos() } else { (lf * phi).sin() };
        sol.psi_at(r) * ang
    };
    (0..grid.len())
        .map(|p| {
            let (x, y) = grid.point(p);
            let pf = px as f64;
            match reference {
                ReferenceRing::Right => orbital(x - grid.xc, y) + pf * orbital(-x - grid.xc, y),
                // Orbital in the left ring's own polar frame, then symmetrized.
                ReferenceRing::Left => orbital(x + grid.xc, y) + pf * orbital(-x + grid.xc, y),
            }
        })
        .collect()
}

/// The four states of the `l` manifold, one per parity sector, in the order
/// of [`SECTORS`].
pub fn identify_manifold(
    spec: &TwoRingSpectrum,
    sol: &SingleRingSolution,
    l: u32,
    reference: ReferenceRing,
) -> Result<[TwoRingState; 4]> {
    let mut out = Vec::with_capacity(4);
    for &(px, py) in &SECTORS {
        let t = trial(&spec.grid, sol, l, px, py, reference);
        let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tn == 0.0 {
            return Err(Error::Manifold(format!("empty trial function in sector ({px}, {py})")));
        }
        let states = spec.sector(px, py);
        let overlaps: Vec<f64> = states
            .iter()
            .map(|s| {
                let sn = s.psi.iter().map(|x| x * x).sum::<f64>().sqrt();
                let o = s.psi.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() / (sn * tn);
                o * o
            })
            .collect();
        let (best, &w) = overlaps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Manifold("sector without states".into()))?;
        if w < 0.5 {
            return Err(Error::Manifold(format!(
                "no state in sector ({px}, {py}) resembles the l = {l} orbital (best squared overlap {w:.3})"
            )));
        }
        if best + 1 == states.len() {
            return Err(Error::Manifold(format!(
                "l = {l} state in sector ({px}, {py}) is the highest computed one; raise states_per_sector"
            )));
        }
        let e = states[best].energy;
        let scale = e.abs().max(1.0);
        for (k, s) in states.iter().enumerate() {
            if k != best && (s.energy - e).abs() < 10.0 * spec.tol * scale {
                return Err(Error::Manifold(format!(
                    "l = {l} state in sector ({px}, {py}) is degenerate with a neighbour to solver tolerance"
                )));
            }
        }
        out.push(states[best].clone());
    }
    Ok(out.try_into().expect("four sectors"))
}
