//! Ring-trap ladders: sites, bonds and the hopping phase carried by each bond.
//!
//! Sites are numbered consecutively along the chain starting at 0; bond `k`
//! joins site `k` to site `k + 1` (wrapping under periodic boundaries). Bond
//! phases are stored as `chi / pi` in `[0, 2)` so they survive text round
//! trips exactly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Zig-zag ladder with two rings per cell.
    TwoSite,
    /// Right-angle ladder with four rings (A, B, C, D) per cell.
    FourSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Which set of links absorbs the hopping phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseOrigin {
    /// Origin of phases along the in-cell links, so the phase sits on the
    /// cross-cell links.
    #[default]
    InCell,
    /// Origin along the cross-cell links. Equivalent to a uniform rotation
    /// of all circulations, so spectra are unchanged.
    CrossCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondTag {
    InCell,
    CrossCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteRole {
    A,
    B,
    C,
    D,
}

/// Geometric and physical description of a ring lattice. Lengths are in
/// units of the radial trap width.
#[derive(Debug, Clone, PartialEq)]
pub struct RingGeometry {
    pub radius: f64,
    /// Surface-to-surface separation between neighbouring rings.
    pub separation: f64,
    /// Central angle in units of pi. Ignored for the four-site cell, which is
    /// always a right angle.
    pub theta_over_pi: f64,
    pub l: u32,
    pub n_sites: usize,
    pub cell: CellKind,
    pub boundary: Boundary,
    pub origin: PhaseOrigin,
    /// Accept central angles at or below pi/3. Beyond-nearest-neighbour
    /// couplings are neglected everywhere, so such geometries are not
    /// physical; this exists for tests.
    pub allow_small_angle: bool,
}

impl RingGeometry {
    pub fn two_site(
        radius: f64,
        separation: f64,
        theta_over_pi: f64,
        l: u32,
        n_sites: usize,
        boundary: Boundary,
    ) -> Self {
        Self {
            radius,
            separation,
            theta_over_pi,
            l,
            n_sites,
            cell: CellKind::TwoSite,
            boundary,
            origin: PhaseOrigin::InCell,
            allow_small_angle: false,
        }
    }

    pub fn four_site(radius: f64, separation: f64, l: u32, n_sites: usize, boundary: Boundary) -> Self {
        Self {
            theta_over_pi: 0.5,
            cell: CellKind::FourSite,
            ..Self::two_site(radius, separation, 0.5, l, n_sites, boundary)
        }
    }

    /// Central angle in units of pi as actually used by the bond builder.
    pub fn effective_theta_over_pi(&self) -> f64 {
        match self.cell {
            CellKind::TwoSite => self.theta_over_pi,
            CellKind::FourSite => 0.5,
        }
    }

    pub fn theta(&self) -> f64 {
        self.effective_theta_over_pi() * std::f64::consts::PI
    }

    /// `l * Theta / pi`.
    pub fn l_theta_over_pi(&self) -> f64 {
        self.l as f64 * self.effective_theta_over_pi()
    }

    /// Phase `2 l Theta` of the phased links, in units of pi, reduced to `[0, 2)`.
    pub fn link_phase_over_pi(&self) -> f64 {
        wrap_over_pi(2.0 * self.l_theta_over_pi())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::Geometry(format!(
                "ring radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::Geometry(format!(
                "ring separation must be positive, got {}",
                self.separation
            )));
        }
        if self.l == 0 {
            return Err(Error::Geometry("OAM index l must be at least 1".into()));
        }
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return Err(Error::Geometry(format!(
                "number of rings must be even and at least 2, got {}",
                self.n_sites
            )));
        }
        if self.cell == CellKind::TwoSite {
            let t = self.theta_over_pi;
            if !t.is_finite() || t <= 0.0 || t > 1.0 {
                return Err(Error::Geometry(format!("central angle {t}pi outside (0, pi]")));
            }
            if t <= 1.0 / 3.0 && !self.allow_small_angle {
                return Err(Error::Geometry(format!(
                    "central angle {t}pi is not above pi/3; next-nearest-neighbour tunnelling would matter"
                )));
            }
        }
        Ok(())
    }
}

/// Reduce an angle in units of pi to `[0, 2)`.
pub fn wrap_over_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r >= 2.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    /// Phase in units of pi, in `[0, 2)`.
    pub chi_over_pi: f64,
    pub tag: BondTag,
}

impl Bond {
    pub fn chi(&self) -> f64 {
        self.chi_over_pi * std::f64::consts::PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondTable {
    n_sites: usize,
    boundary: Boundary,
    bonds: Vec<Bond>,
    roles: Option<Vec<SiteRole>>,
}

impl BondTable {
    /// Build a table from an explicit bond list. Phases are wrapped into `[0, 2)`.
    pub fn from_bonds(n_sites: usize, boundary: Boundary, bonds: Vec<Bond>) -> Result<Self> {
        for b in &bonds {
            if b.a >= n_sites || b.b >= n_sites || b.a == b.b {
                return Err(Error::Geometry(format!(
                    "bond ({}, {}) invalid for {n_sites} sites",
                    b.a, b.b
                )));
            }
            if !b.chi_over_pi.is_finite() {
                return Err(Error::Geometry("non-finite bond phase".into()));
            }
        }
        let bonds = bonds
            .into_iter()
            .map(|b| Bond {
                chi_over_pi: wrap_over_pi(b.chi_over_pi),
                ..b
            })
            .collect();
        Ok(Self {
            n_sites,
            boundary,
            bonds,
            roles: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn roles(&self) -> Option<&[SiteRole]> {
        self.roles.as_deref()
    }

    /// Bonds touching `site`.
    pub fn bonds_of(&self, site: usize) -> impl Iterator<Item = &Bond> {
        self.bonds.iter().filter(move |b| b.a == site || b.b == site)
    }

    /// Same table with every phase shifted by `delta_over_pi`, the bond-level
    /// image of rotating all circulations by a common angle.
    pub fn rotated(&self, delta_over_pi: f64) -> Self {
        Self {
            bonds: self
                .bonds
                .iter()
                .map(|b| Bond {
                    chi_over_pi: wrap_over_pi(b.chi_over_pi + delta_over_pi),
                    ..*b
                })
                .collect(),
            ..self.clone()
        }
    }

    /// CSV with columns `a,b,chi_over_pi,tag`; sites are 1-based.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("a,b,chi_over_pi,tag\n");
        for b in &self.bonds {
            s.push_str(&format!(
                "{},{},{},{}\n",
                b.a + 1,
                b.b + 1,
                fmt_f64(b.chi_over_pi),
                b.tag
            ));
        }
        s
    }

    pub fn from_csv(text: &str, n_sites: usize, boundary: Boundary) -> Result<Self> {
        let mut bonds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(parse_err("expected 4 columns"));
            }
            let a: usize = f[0].parse().map_err(|_| parse_err("bad site index"))?;
            let b: usize = f[1].parse().map_err(|_| parse_err("bad site index"))?;
            if a == 0 || b == 0 {
                return Err(parse_err("site indices are 1-based"));
            }
            bonds.push(Bond {
                a: a - 1,
                b: b - 1,
                chi_over_pi: parse_f64(f[2]).map_err(|_| parse_err("bad phase"))?,
                tag: f[3].parse().map_err(|m: String| parse_err(&m))?,
            });
        }
        Self::from_bonds(n_sites, boundary, bonds)
    }
}

impl fmt::Display for BondTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BondTag::InCell => "in-cell",
            BondTag::CrossCell => "cross-cell",
        })
    }
}

impl FromStr for BondTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "in-cell" => Ok(BondTag::InCell),
            "cross-cell" => Ok(BondTag::CrossCell),
            _ => Err(format!("unknown bond tag '{s}'")),
        }
    }
}

impl fmt::Display for SiteRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            _ => Err(format!("unknown boundary '{s}'")),
        }
    }
}

fn chain_bond_count(n: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Periodic => n,
        Boundary::Open => n - 1,
    }
}

// Phases of (unphased, phased) links for the chosen origin.
fn link_phases(geom: &RingGeometry) -> (f64, f64) {
    let phase = geom.link_phase_over_pi();
    match geom.origin {
        PhaseOrigin::InCell => (0.0, phase),
        PhaseOrigin::CrossCell => (wrap_over_pi(-phase), 0.0),
    }
}

/// Two-site zig-zag ladder: links alternate in-cell and cross-cell, starting
/// with the in-cell link between sites 0 and 1.
pub fn build_ladder(geom: &RingGeometry) -> Result<BondTable> {
    if geom.cell != CellKind::TwoSite {
        return Err(Error::Geometry("build_ladder needs the two-site cell".into()));
    }
    geom.validate()?;
    let n = geom.n_sites;
    if geom.boundary == Boundary::Periodic && n < 4 {
        return Err(Error::Geometry(format!(
            "periodic ladder needs at least 4 rings, got {n}"
        )));
    }
    let (plain, phased) = link_phases(geom);
    let bonds = (0..chain_bond_count(n, geom.boundary))
        .map(|k| {
            let cross = k % 2 == 1;
            Bond {
                a: k,
                b: (k + 1) % n,
                chi_over_pi: if cross { phased } else { plain },
                tag: if cross { BondTag::CrossCell } else { BondTag::InCell },
            }
        })
        .collect();
    Ok(BondTable {
        n_sites: n,
        boundary: geom.boundary,
        bonds,
        roles: None,
    })
}

/// Right-angle ladder with cells A-B-C-D; the C-D and D-A' links carry the phase.
pub fn build_four_site_ladder(geom: &RingGeometry) -> Result<BondTable> {
    if geom.cell != CellKind::FourSite {
        return Err(Error::Geometry(
            "build_four_site_ladder needs the four-site cell".into(),
        ));
    }
    geom.validate()?;
    let n = geom.n_sites;
    if n % 4 != 0 {
        return Err(Error::Geometry(format!(
            "four-site ladder needs a multiple of 4 rings, got {n}"
        )));
    }
    let (plain, phased) = link_phases(geom);
    let bonds = (0..chain_bond_count(n, geom.boundary))
        .map(|k| {
            let cross = k % 4 >= 2;
            Bond {
                a: k,
                b: (k + 1) % n,
                chi_over_pi: if cross { phased } else { plain },
                tag: if cross { BondTag::CrossCell } else { BondTag::InCell },
            }
        })
        .collect();
    let roles = (0..n)
        .map(|j| [SiteRole::A, SiteRole::B, SiteRole::C, SiteRole::D][j % 4])
        .collect();
    Ok(BondTable {
        n_sites: n,
        boundary: geom.boundary,
        bonds,
        roles: Some(roles),
    })
}

/// Dispatch on the cell kind.
pub fn build_bonds(geom: &RingGeometry) -> Result<BondTable> {
    match geom.cell {
        CellKind::TwoSite => build_ladder(geom),
        CellKind::FourSite => build_four_site_ladder(geom),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phases(t: &BondTable) -> Vec<f64> {
        t.bonds().iter().map(|b| b.chi_over_pi).collect()
    }

    #[test]
    fn right_angle_ladder_alternates_zero_and_pi() {
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 4, Boundary::Periodic);
        let t = build_ladder(&g).unwrap();
        assert_eq!(phases(&t), vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(t.bonds()[3].a, 3);
        assert_eq!(t.bonds()[3].b, 0);
    }

    #[test]
    fn straight_angle_phase_wraps_to_zero() {
        let g = RingGeometry::two_site(2.5, 1.0, 1.0, 1, 4, Boundary::Periodic);
        assert_eq!(phases(&build_ladder(&g).unwrap()), vec![0.0; 4]);
    }

    #[test]
    fn open_ladder_at_0_48() {
        let g = RingGeometry::two_site(2.5, 1.0, 0.48, 1, 6, Boundary::Open);
        let t = build_ladder(&g).unwrap();
        assert_eq!(t.bonds().len(), 5);
        let p = phases(&t);
        for (k, &x) in p.iter().enumerate() {
            let want = if k % 2 == 1 { 0.96 } else { 0.0 };
            assert!((x - want).abs() < 1e-15, "{p:?}");
        }
        assert_eq!(t.bonds()[1].tag, BondTag::CrossCell);
    }

    #[test]
    fn ladder_rejections() {
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 5, Boundary::Open);
        assert!(build_ladder(&g).is_err());
        let g = RingGeometry::two_site(2.5, 1.0, 0.3, 1, 6, Boundary::Open);
        assert!(build_ladder(&g).is_err());
        let g = RingGeometry {
            allow_small_angle: true,
            ..g
        };
        assert!(build_ladder(&g).is_ok());
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 2, Boundary::Periodic);
        assert!(build_ladder(&g).is_err());
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 2, Boundary::Open);
        assert_eq!(build_ladder(&g).unwrap().bonds().len(), 1);
        let g = RingGeometry::two_site(-1.0, 1.0, 0.5, 1, 4, Boundary::Open);
        assert!(build_ladder(&g).is_err());
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 0, 4, Boundary::Open);
        assert!(build_ladder(&g).is_err());
    }

    #[test]
    fn four_site_cell() {
        let g = RingGeometry::four_site(2.5, 1.0, 1, 4, Boundary::Periodic);
        let t = build_four_site_ladder(&g).unwrap();
        assert_eq!(phases(&t), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(
            t.roles().unwrap(),
            &[SiteRole::A, SiteRole::B, SiteRole::C, SiteRole::D]
        );

        let g8 = RingGeometry::four_site(2.5, 1.0, 1, 8, Boundary::Periodic);
        let t8 = build_four_site_ladder(&g8).unwrap();
        assert_eq!(phases(&t8), vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);

        let g6 = RingGeometry::four_site(2.5, 1.0, 1, 6, Boundary::Periodic);
        assert!(build_four_site_ladder(&g6).is_err());
        assert!(build_ladder(&g).is_err());
    }

    #[test]
    fn cross_cell_origin_shifts_every_phase() {
        let mut g = RingGeometry::two_site(2.5, 1.0, 0.48, 1, 6, Boundary::Periodic);
        let a = build_ladder(&g).unwrap();
        g.origin = PhaseOrigin::CrossCell;
        let b = build_ladder(&g).unwrap();
        assert_eq!(b.bonds()[1].chi_over_pi, 0.0);
        assert!((b.bonds()[0].chi_over_pi - 1.04).abs() < 1e-14);
        let c = a.rotated(-0.96);
        for (x, y) in b.bonds().iter().zip(c.bonds()) {
            assert!((x.chi_over_pi - y.chi_over_pi).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = RingGeometry::two_site(2.5, 1.0, 0.4801234567, 3, 8, Boundary::Periodic);
        let t = build_ladder(&g).unwrap();
        let back = BondTable::from_csv(&t.to_csv(), 8, Boundary::Periodic).unwrap();
        assert_eq!(back.bonds(), t.bonds());
        assert!(t.to_csv().starts_with("a,b,chi_over_pi,tag\n1,2,"));
    }

    proptest! {
        #[test]
        fn phase_sum_is_n_l_theta(half in 2usize..12, theta in 0.34f64..1.0, l in 1u32..5) {
            let n = 2 * half;
            let g = RingGeometry::two_site(2.5, 1.0, theta, l, n, Boundary::Periodic);
            let t = build_ladder(&g).unwrap();
            let sum: f64 = phases(&t).iter().sum();
            let want = n as f64 * l as f64 * theta;
            let diff = (sum - want).rem_euclid(2.0);
            prop_assert!(diff < 1e-9 || diff > 2.0 - 1e-9);
        }

        #[test]
        fn periodic_sites_have_two_bonds(half in 2usize..12, theta in 0.34f64..1.0) {
            let g = RingGeometry::two_site(2.5, 1.0, theta, 1, 2 * half, Boundary::Periodic);
            let t = build_ladder(&g).unwrap();
            for j in 0..t.n_sites() {
                prop_assert_eq!(t.bonds_of(j).count(), 2);
            }
        }
    }
}
