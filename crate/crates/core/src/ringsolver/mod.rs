//! Continuum inputs of the lattice model: single-ring energies and the
//! tunnelling amplitudes `J1`, `J2`, `J3` of two neighbouring rings.
//!
//! The amplitudes come from the four states of the `l` manifold of the
//! two-ring problem. In the basis symmetrized under the two mirror
//! reflections each state has energy `E + s1 J1 + s2 J2 + s3 J3`, where the
//! signs are fixed by its parities (see [`sector_signs`]); inverting that
//! 4x4 system gives the couplings.

pub mod single;
pub mod two_ring;

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
pub use single::{single_ring_mode_energies, solve_single_ring, ModeEnergy, RadialGridSpec, SingleRingSolution};
pub use two_ring::{identify_manifold, solve_two_ring, PlaneGridSpec, ReferenceRing, TwoRingSpectrum, TwoRingState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Solved,
    Injected,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Solved => "solved",
            Provenance::Injected => "injected",
        })
    }
}

/// Default bound on `max(|J2|, |J3|) / U` for the strong-coupling regime.
pub const STRONG_COUPLING_THRESHOLD: f64 = 0.1;

/// Microscopic parameters in oscillator units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet {
    /// On-site circulation flip.
    pub j1: f64,
    /// Inter-ring hop keeping the circulation.
    pub j2: f64,
    /// Inter-ring hop exchanging the circulation.
    pub j3: f64,
    pub u: f64,
    pub ec: Option<f64>,
    pub e0: Option<f64>,
    pub l: u32,
    pub provenance: Provenance,
}

impl CouplingSet {
    pub fn injected(j1: f64, j2: f64, j3: f64, u: f64, l: u32) -> Self {
        Self {
            j1,
            j2,
            j3,
            u,
            ec: None,
            e0: None,
            l,
            provenance: Provenance::Injected,
        }
    }

    pub fn check_u(&self) -> Result<()> {
        if self.u > 0.0 && self.u.is_finite() {
            Ok(())
        } else {
            Err(Error::Couplings(format!(
                "interaction U must be positive, got {}",
                self.u
            )))
        }
    }

    pub fn strong_coupling_ratio(&self) -> f64 {
        self.j2.abs().max(self.j3.abs()) / self.u
    }

    pub fn is_strong_coupling(&self, threshold: f64) -> bool {
        self.u > 0.0 && self.strong_coupling_ratio() < threshold
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }
}

/// How the on-site interaction is fixed when couplings are solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UPolicy {
    /// Fixed `U`.
    Absolute(f64),
    /// `U = ratio * max(|J2|, |J3|)` at every point.
    Ratio(f64),
    /// `U = g * int |psi0|^4`.
    Coupling(f64),
}

impl Default for UPolicy {
    fn default() -> Self {
        UPolicy::Ratio(20.0)
    }
}

impl UPolicy {
    pub fn resolve(&self, j2: f64, j3: f64, u_over_g: f64) -> Result<f64> {
        let u = match *self {
            UPolicy::Absolute(u) => u,
            UPolicy::Ratio(r) => {
                if !(r > 0.0) {
                    return Err(Error::Couplings(format!("U ratio must be positive, got {r}")));
                }
                r * j2.abs().max(j3.abs())
            }
            UPolicy::Coupling(g) => g * u_over_g,
        };
        if u > 0.0 && u.is_finite() {
            Ok(u)
        } else {
            Err(Error::Couplings(format!("policy {self:?} gives non-positive U = {u}")))
        }
    }
}

/// Signs of `(J1, J2, J3)` in the energy of the manifold state with
/// mirror parities `(px, py)`.
pub fn sector_signs(px: i8, py: i8, l: u32) -> [f64; 3] {
    let lp: i8 = if l % 2 == 0 { 1 } else { -1 };
    match (py > 0, px == lp) {
        (true, true) => [1.0, 1.0, 1.0],
        (true, false) => [1.0, -1.0, -1.0],
        (false, false) => [-1.0, 1.0, -1.0],
        (false, true) => [-1.0, -1.0, 1.0],
    }
}

/// Mean manifold energy plus the three amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourStateModel {
    pub mean: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

impl FourStateModel {
    /// Energies of the four parity sectors `(px, py, E)`.
    pub fn energies(&self, l: u32) -> [(i8, i8, f64); 4] {
        two_ring::SECTORS.map(|(px, py)| {
            let s = sector_signs(px, py, l);
            (px, py, self.mean + s[0] * self.j1 + s[1] * self.j2 + s[2] * self.j3)
        })
    }

    /// Inverts four `(px, py, E)` levels, one per sector.
    pub fn invert(levels: &[(i8, i8, f64)], l: u32) -> Result<Self> {
        if levels.len() != 4 {
            return Err(Error::Manifold(format!("need 4 manifold levels, got {}", levels.len())));
        }
        let mut seen = [false; 4];
        let (mut mean, mut j) = (0.0, [0.0; 3]);
        for &(px, py, e) in levels {
            let k = two_ring::SECTORS
                .iter()
                .position(|&s| s == (px, py))
                .ok_or_else(|| Error::Manifold(format!("invalid parity pair ({px}, {py})")))?;
            if seen[k] {
                return Err(Error::Manifold(format!(
                    "parity sector ({px}, {py}) appears twice; no bijection onto the sign patterns"
                )));
            }
            seen[k] = true;
            // The sign matrix has orthogonal rows of norm 2.
            let s = sector_signs(px, py, l);
            mean += e / 4.0;
            for a in 0..3 {
                j[a] += s[a] * e / 4.0;
            }
        }
        Ok(Self {
            mean,
            j1: j[0],
            j2: j[1],
            j3: j[2],
        })
    }
}

/// Tunnelling amplitudes of manifold `l` from a two-ring spectrum.
pub fn extract_couplings(
    spectrum: &TwoRingSpectrum,
    sol: &SingleRingSolution,
    l: u32,
    policy: UPolicy,
) -> Result<CouplingSet> {
    extract_couplings_with(spectrum, sol, l, policy, ReferenceRing::Right)
}

pub fn extract_couplings_with(
    spectrum: &TwoRingSpectrum,
    sol: &SingleRingSolution,
    l: u32,
    policy: UPolicy,
    reference: ReferenceRing,
) -> Result<CouplingSet> {
    let states = identify_manifold(spectrum, sol, l, reference)?;
    let levels: Vec<(i8, i8, f64)> = states.iter().map(|s| (s.px, s.py, s.energy)).collect();
    let m = FourStateModel::invert(&levels, l)?;
    let u = policy.resolve(m.j2, m.j3, sol.u_over_g)?;
    Ok(CouplingSet {
        j1: m.j1,
        j2: m.j2,
        j3: m.j3,
        u,
        ec: Some(sol.ec),
        e0: Some(sol.e0),
        l,
        provenance: Provenance::Solved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub radial: RadialGridSpec,
    pub plane: PlaneGridSpec,
    pub u_policy: UPolicy,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            radial: RadialGridSpec::default(),
            plane: PlaneGridSpec::default(),
            u_policy: UPolicy::default(),
        }
    }
}

/// One point of a sweep; failures keep their separation.
#[derive(Debug)]
pub struct SweepRow {
    pub d: f64,
    pub result: Result<CouplingSet>,
}

fn check_d_list(d_list: &[f64]) -> Result<()> {
    if d_list.is_empty() {
        return Err(Error::InvalidArgument("empty list of separations".into()));
    }
    let up = d_list.windows(2).all(|w| w[1] > w[0]);
    let down = d_list.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidArgument("separations must be strictly monotone".into()));
    }
    Ok(())
}

/// Couplings at every separation, each point solved independently.
pub fn sweep_rows(radius: f64, d_list: &[f64], l: u32, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    check_d_list(d_list)?;
    let states_needed = l as usize + 2;
    let plane = PlaneGridSpec {
        states_per_sector: spec.plane.states_per_sector.max(states_needed),
        ..spec.plane
    };
    let sol = solve_single_ring(radius, &spec.radial)?;
    Ok(d_list
        .par_iter()
        .map(|&d| SweepRow {
            d,
            result: solve_two_ring(radius, d, &plane).and_then(|s| extract_couplings(&s, &sol, l, spec.u_policy)),
        })
        .collect())
}

/// Like [`sweep_rows`] but fails on the first bad point, naming its separation.
pub fn coupling_sweep(radius: f64, d_list: &[f64], l: u32, spec: &SweepSpec) -> Result<Vec<(f64, CouplingSet)>> {
    sweep_rows(radius, d_list, l, spec)?
        .into_iter()
        .map(|row| match row.result {
            Ok(c) => Ok((row.d, c)),
            Err(e) => Err(Error::SweepPoint {
                d: row.d,
                source: Box::new(e),
            }),
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "R,d,J1,J2,J3,U,Ec,E0,converged";

pub fn sweep_csv(radius: f64, rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for row in rows {
        let f = |x: Option<f64>| fmt_f64(x.unwrap_or(f64::NAN));
        match &row.result {
            Ok(c) => s.push_str(&format!(
                "{},{},{},{},{},{},{},{},true\n",
                fmt_f64(radius),
                fmt_f64(row.d),
                fmt_f64(c.j1),
                fmt_f64(c.j2),
                fmt_f64(c.j3),
                fmt_f64(c.u),
                f(c.ec),
                f(c.e0)
            )),
            Err(_) => {
                let nan = fmt_f64(f64::NAN);
                s.push_str(&format!(
                    "{},{},{nan},{nan},{nan},{nan},{nan},{nan},false\n",
                    fmt_f64(radius),
                    fmt_f64(row.d)
                ))
            }
        }
    }
    s
}

/// Qualitative shape of a coupling sweep, ordered by increasing separation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrends {
    pub j3_over_j2: Vec<f64>,
    pub j1_over_j3: Vec<f64>,
    /// Effective x field in units of `J3`, with `U` from the sweep.
    pub h_over_j3: Vec<f64>,
    /// `J3/J2 > 1` at the smallest separation and `|J3/J2 - 1|` never increasing.
    pub j3_over_j2_approaches_one: bool,
    /// Interpolated separations where `J1/J3` changes sign.
    pub j1_sign_changes: Vec<f64>,
    /// Interpolated separations where the field changes sign.
    pub h_sign_changes: Vec<f64>,
    /// Separation of the most negative field value.
    pub h_min_at: Option<f64>,
}

fn sign_changes(d: &[f64], v: &[f64]) -> Vec<f64> {
    d.windows(2)
        .zip(v.windows(2))
        .filter(|(_, w)| w[0] * w[1] < 0.0 || (w[0] != 0.0 && w[1] == 0.0))
        .map(|(dd, w)| dd[0] + (dd[1] - dd[0]) * w[0] / (w[0] - w[1]))
        .collect()
}

pub fn sweep_trends(points: &[(f64, CouplingSet)]) -> SweepTrends {
    let mut pts: Vec<&(f64, CouplingSet)> = points.iter().collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let d: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let j3_over_j2: Vec<f64> = pts.iter().map(|p| p.1.j3 / p.1.j2).collect();
    let j1_over_j3: Vec<f64> = pts.iter().map(|p| p.1.j1 / p.1.j3).collect();
    let h_over_j3: Vec<f64> = pts
        .iter()
        .map(|p| (2.0 * p.1.j1 - 6.0 * p.1.j2 * p.1.j3 / p.1.u) / p.1.j3)
        .collect();
    let dev: Vec<f64> = j3_over_j2.iter().map(|r| (r - 1.0).abs()).collect();
    let j3_over_j2_approaches_one =
        j3_over_j2.first().is_some_and(|&r| r > 1.0) && dev.windows(2).all(|w| w[1] <= w[0]);
    let h_min_at = h_over_j3
        .iter()
        .enumerate()
        .filter(|(_, &h)| h < 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| d[i]);
    SweepTrends {
        j1_sign_changes: sign_changes(&d, &j1_over_j3),
        h_sign_changes: sign_changes(&d, &h_over_j3),
        j3_over_j2,
        j1_over_j3,
        h_over_j3,
        j3_over_j2_approaches_one,
        h_min_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_state_model_round_trip() {
        let m = FourStateModel {
            mean: 1.2,
            j1: 0.01,
            j2: 0.03,
            j3: -0.05,
        };
        for l in 1..4 {
            let e = m.energies(l);
            let back = FourStateModel::invert(&e, l).unwrap();
            assert!((back.j1 - 0.01).abs() < 1e-12);
            assert!((back.j2 - 0.03).abs() < 1e-12);
            assert!((back.j3 + 0.05).abs() < 1e-12);
            assert!((back.mean - 1.2).abs() < 1e-12);
        }
        let mut patterns: Vec<[i32; 3]> = two_ring::SECTORS
            .iter()
            .map(|&(px, py)| sector_signs(px, py, 1).map(|s| s as i32))
            .collect();
        patterns.sort();
        assert_eq!(patterns, vec![[-1, -1, 1], [-1, 1, -1], [1, -1, -1], [1, 1, 1]]);
    }

    #[test]
    fn decoupled_manifold_has_no_couplings() {
        let levels: Vec<(i8, i8, f64)> = two_ring::SECTORS.iter().map(|&(px, py)| (px, py, 0.77)).collect();
        let m = FourStateModel::invert(&levels, 1).unwrap();
        assert_eq!((m.j1, m.j2, m.j3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn inconsistent_parities_are_rejected() {
        let levels = [(1, 1, 1.0), (1, 1, 1.1), (1, -1, 1.2), (-1, -1, 1.3)];
        assert!(matches!(FourStateModel::invert(&levels, 1), Err(Error::Manifold(_))));
        assert!(FourStateModel::invert(&levels[..3], 1).is_err());
    }

    #[test]
    fn u_policies() {
        assert_eq!(UPolicy::Ratio(20.0).resolve(0.01, -0.03, 0.5).unwrap(), 20.0 * 0.03);
        assert_eq!(UPolicy::Absolute(2.0).resolve(0.01, 0.03, 0.5).unwrap(), 2.0);
        assert_eq!(UPolicy::Coupling(4.0).resolve(0.01, 0.03, 0.5).unwrap(), 2.0);
        assert!(UPolicy::Ratio(-1.0).resolve(0.01, 0.03, 0.5).is_err());
        assert!(UPolicy::Absolute(0.0).resolve(0.01, 0.03, 0.5).is_err());
        let c = CouplingSet::injected(0.0, 0.01, 0.02, 1.0, 1);
        assert!(c.is_strong_coupling(STRONG_COUPLING_THRESHOLD));
        assert!(!c.with_u(0.1).is_strong_coupling(STRONG_COUPLING_THRESHOLD));
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let spec = SweepSpec::default();
        assert!(sweep_rows(2.5, &[], 1, &spec).is_err());
        assert!(sweep_rows(2.5, &[1.0, 3.0, 2.0], 1, &spec).is_err());
    }

    #[test]
    fn short_distance_couplings() {
        let spec = SweepSpec::default();
        let rows = coupling_sweep(2.5, &[1.0], 1, &spec).unwrap();
        let c = rows[0].1;
        assert!(c.j3.abs() > c.j2.abs(), "{c:?}");
        assert_eq!(c.provenance, Provenance::Solved);
        assert!((c.u - 20.0 * c.j3.abs().max(c.j2.abs())).abs() < 1e-15);
        let csv = sweep_csv(2.5, &sweep_rows(2.5, &[1.0], 1, &spec).unwrap());
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().ends_with(",true"));
    }

    #[test]
    fn exchange_of_rings_leaves_couplings_unchanged() {
        let sol = solve_single_ring(2.5, &RadialGridSpec::default()).unwrap();
        let s = solve_two_ring(2.5, 1.3, &PlaneGridSpec::default()).unwrap();
        let a = extract_couplings_with(&s, &sol, 1, UPolicy::default(), ReferenceRing::Right).unwrap();
        let b = extract_couplings_with(&s, &sol, 1, UPolicy::default(), ReferenceRing::Left).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn halving_the_spacing_moves_couplings_below_one_percent() {
        let sol = solve_single_ring(2.5, &RadialGridSpec::default()).unwrap();
        let coarse = PlaneGridSpec::default();
        let fine = PlaneGridSpec {
            spacing: 0.5 * coarse.spacing,
            ..coarse
        };
        let a = extract_couplings(&solve_two_ring(2.5, 1.5, &coarse).unwrap(), &sol, 1, UPolicy::default()).unwrap();
        let b = extract_couplings(&solve_two_ring(2.5, 1.5, &fine).unwrap(), &sol, 1, UPolicy::default()).unwrap();
        for (x, y) in [(a.j1, b.j1), (a.j2, b.j2), (a.j3, b.j3)] {
            assert!(((x - y) / y).abs() < 0.01, "{x} vs {y}");
        }
    }

    #[test]
    fn l0_tunnelling_decays() {
        let spec = PlaneGridSpec::default();
        let t: Vec<f64> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&d| solve_two_ring(2.5, d, &spec).unwrap().ground_tunnelling())
            .collect();
        assert!(t[0] > t[1] && t[1] > t[2] && t[2] > 0.0, "{t:?}");
    }
}
