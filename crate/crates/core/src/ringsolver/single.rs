//! Radial problem of a single ring trap `V(r) = (R - r)^2 / 2`.
//!
//! The radial operator `-(1/2r) d/dr (r d/dr) + l^2/2r^2 + V` is discretized
//! on a cell-centred grid `r_i = (i + 1/2) h`, which needs no special
//! treatment at the origin, and symmetrized by `sqrt(r_i)`.

use crate::error::{Error, Result};
use crate::linalg::tridiag::lowest_eigenpair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGridSpec {
    /// Grid spacing in units of the trap width.
    pub spacing: f64,
    /// Distance beyond the ring radius where the wavefunction is clamped to zero.
    pub extent: f64,
    /// Largest tolerated change of `E0` between spacing `h` and `h/2`.
    pub richardson_limit: f64,
}

impl Default for RadialGridSpec {
    fn default() -> Self {
        Self {
            spacing: 0.02,
            extent: 8.0,
            richardson_limit: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingleRingSolution {
    pub radius: f64,
    pub spacing: f64,
    /// Cell centres.
    pub r: Vec<f64>,
    /// Radial ground state, normalized so that `2 pi sum psi^2 r h = 1`.
    pub psi: Vec<f64>,
    pub e0: f64,
    /// Centrifugal energy, the coefficient of `l^2` in the mode energies,
    /// taken as `E(1) - E(0)`.
    pub ec: f64,
    /// `(1/2) int |psi/r|^2 d^2r` on the grid. Since `psi(0) > 0` for the
    /// `l = 0` state this grows like `pi psi(0)^2 ln(1/h)` under refinement and
    /// only approximates `ec` when the density at the origin is negligible.
    pub ec_integral: f64,
    /// `int |psi|^4 d^2r`; the on-site interaction is `g` times this.
    pub u_over_g: f64,
    /// `E0(h) - E0(h/2)` from the resolution check.
    pub richardson_difference: f64,
}

impl SingleRingSolution {
    /// Linear interpolation of the radial wavefunction; zero outside the grid.
    pub fn psi_at(&self, r: f64) -> f64 {
        let h = self.spacing;
        let t = r / h - 0.5;
        if t <= 0.0 {
            return self.psi[0];
        }
        let i = t.floor() as usize;
        if i + 1 >= self.psi.len() {
            return 0.0;
        }
        let f = t - i as f64;
        self.psi[i] * (1.0 - f) + self.psi[i + 1] * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEnergy {
    pub l: u32,
    /// Lowest eigenvalue with the centrifugal term included exactly.
    pub exact: f64,
    /// `E0 + Ec l^2`.
    pub approx: f64,
}

struct Radial {
    r: Vec<f64>,
    diag0: Vec<f64>,
    off: Vec<f64>,
}

fn radial_operator(radius: f64, h: f64, extent: f64) -> Result<Radial> {
    if !(radius > 0.0) {
        return Err(Error::Geometry(format!("ring radius must be positive, got {radius}")));
    }
    if !(h > 0.0) || !(extent > 0.0) {
        return Err(Error::InvalidArgument(
            "grid spacing and extent must be positive".into(),
        ));
    }
    let n = ((radius + extent) / h).ceil() as usize;
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "radial grid of {n} points is too small"
        )));
    }
    let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let h2 = h * h;
    let diag0 = r
        .iter()
        .enumerate()
        .map(|(i, &ri)| {
            let outer = ri + 0.5 * h;
            let inner = if i == 0 { 0.0 } else { ri - 0.5 * h };
            (outer + inner) / (2.0 * ri * h2) + 0.5 * (radius - ri) * (radius - ri)
        })
        .collect();
    let off = (0..n - 1)
        .map(|i| {
            let face = r[i] + 0.5 * h;
            -face / (2.0 * h2 * (r[i] * r[i + 1]).sqrt())
        })
        .collect();
    Ok(Radial { r, diag0, off })
}

fn lowest_with_l(op: &Radial, l: u32) -> (f64, Vec<f64>) {
    let l2 = (l as f64) * (l as f64);
    let diag: Vec<f64> = op
        .diag0
        .iter()
        .zip(&op.r)
        .map(|(d, r)| d + l2 / (2.0 * r * r))
        .collect();
    lowest_eigenpair(&diag, &op.off)
}

fn solve_at(radius: f64, h: f64, extent: f64) -> Result<SingleRingSolution> {
    let op = radial_operator(radius, h, extent)?;
    let (e0, u) = lowest_with_l(&op, 0);
    let two_pi = 2.0 * std::f64::consts::PI;
    // u_i = sqrt(r_i) psi_i; unit discrete norm of u is sum psi^2 r = 1.
    let scale = 1.0 / (two_pi * h).sqrt();
    let psi: Vec<f64> = u
        .iter()
        .zip(&op.r)
        .map(|(ui, ri)| (ui / ri.sqrt() * scale).max(0.0))
        .collect();
    let norm: f64 = psi.iter().zip(&op.r).map(|(p, r)| p * p * r).sum::<f64>() * two_pi * h;
    let psi: Vec<f64> = psi.iter().map(|p| p / norm.sqrt()).collect();
    let ec_integral = 0.5 * two_pi * h * psi.iter().zip(&op.r).map(|(p, r)| p * p / r).sum::<f64>();
    let ec = lowest_with_l(&op, 1).0 - e0;
    let u_over_g = two_pi * h * psi.iter().zip(&op.r).map(|(p, r)| p.powi(4) * r).sum::<f64>();
    Ok(SingleRingSolution {
        radius,
        spacing: h,
        r: op.r,
        psi,
        e0,
        ec,
        ec_integral,
        u_over_g,
        richardson_difference: 0.0,
    })
}

/// Radial ground state of one ring, checked against a run at half the spacing.
pub fn solve_single_ring(radius: f64, grid: &RadialGridSpec) -> Result<SingleRingSolution> {
    let mut sol = solve_at(radius, grid.spacing, grid.extent)?;
    let fine = solve_at(radius, 0.5 * grid.spacing, grid.extent)?;
    let diff = sol.e0 - fine.e0;
    if diff.abs() > grid.richardson_limit {
        return Err(Error::GridTooCoarse {
            difference: diff.abs(),
            limit: grid.richardson_limit,
        });
    }
    sol.richardson_difference = diff;
    Ok(sol)
}

/// Exact lowest radial energies for `l = 0..=l_max` alongside `E0 + Ec l^2`.
pub fn single_ring_mode_energies(sol: &SingleRingSolution, l_max: u32) -> Result<Vec<ModeEnergy>> {
    let extent = sol.r.len() as f64 * sol.spacing - sol.radius;
    let op = radial_operator(sol.radius, sol.spacing, extent)?;
    Ok((0..=l_max)
        .map(|l| {
            let exact = if l == 0 { sol.e0 } else { lowest_with_l(&op, l).0 };
            ModeEnergy {
                l,
                exact,
                approx: sol.e0 + sol.ec * (l * l) as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_ring_is_harmonic() {
        let sol = solve_single_ring(10.0, &RadialGridSpec::default()).unwrap();
        assert!((sol.e0 - 0.5).abs() < 0.005, "E0 = {}", sol.e0);
        assert!((sol.ec - 0.005).abs() < 0.05 * 0.005, "Ec = {}", sol.ec);
        // Gaussian of unit width centred on the ring, normalized in 2D.
        let peak = 1.0 / (std::f64::consts::PI.powf(0.25) * (2.0 * std::f64::consts::PI * 10.0).sqrt());
        let p = sol.psi_at(10.0);
        assert!((p - peak).abs() < 0.01 * peak, "{p} vs {peak}");
        assert!(sol.psi.iter().all(|&v| v >= 0.0));
        let norm: f64 =
            sol.psi.iter().zip(&sol.r).map(|(p, r)| p * p * r).sum::<f64>() * 2.0 * std::f64::consts::PI * sol.spacing;
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn smaller_ring_has_larger_centrifugal_energy() {
        let a = solve_single_ring(2.5, &RadialGridSpec::default()).unwrap();
        let b = solve_single_ring(5.0, &RadialGridSpec::default()).unwrap();
        assert!(a.ec > b.ec && b.ec > 0.0);
        assert!(a.u_over_g > b.u_over_g);
    }

    #[test]
    fn mode_energies() {
        let sol = solve_single_ring(5.0, &RadialGridSpec::default()).unwrap();
        let e = single_ring_mode_energies(&sol, 2).unwrap();
        assert_eq!(e[0].exact, sol.e0);
        assert!((e[1].exact - e[1].approx).abs() < 0.1 * sol.ec);
        let second = e[2].exact - 2.0 * e[1].exact + e[0].exact;
        assert!(second.abs() > 1e-6, "second difference {second}");
        assert!(e[1].exact > e[0].exact && e[2].exact > e[1].exact);
    }

    #[test]
    fn centrifugal_integral_diverges_slowly() {
        let coarse = solve_single_ring(2.5, &RadialGridSpec::default()).unwrap();
        let fine = solve_single_ring(
            2.5,
            &RadialGridSpec {
                spacing: 0.01,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fine.ec_integral - coarse.ec_integral > 1e-3);
        assert!((fine.ec - coarse.ec).abs() < 1e-5);
        let big = solve_single_ring(10.0, &RadialGridSpec::default()).unwrap();
        assert!((big.ec - big.ec_integral).abs() < 1e-3 * big.ec);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = RadialGridSpec {
            spacing: 0.3,
            ..Default::default()
        };
        assert!(matches!(
            solve_single_ring(2.5, &grid),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(solve_single_ring(-1.0, &RadialGridSpec::default()).is_err());
    }
}
