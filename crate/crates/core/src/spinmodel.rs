//! Effective spin-1/2 Hamiltonians in coefficient form.
//!
//! A [`SpinModel`] is `sum_b sum_{ab} K_b[a][b] s^a_i s^b_j + sum_j h_j . s_j + c0`
//! with Pauli matrices `s`. The assemblers below turn a bond table and a
//! coupling set into such a model, from the uniform XYZ chain up to the
//! general geometry-dependent model at arbitrary central angle.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{build_bonds, Bond, BondTable, BondTag, Boundary, CellKind, RingGeometry, SiteRole};
use crate::io::{fmt_f64, parse_f64};
use crate::linalg::{cos_pi, sin_pi};
use crate::ringsolver::CouplingSet;

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Self::ALL.get(i).copied()
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::InvalidArgument(format!("unknown axis '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBond {
    pub i: usize,
    pub j: usize,
    /// `k[a][b]` multiplies `s^a_i s^b_j`.
    pub k: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    n_sites: usize,
    boundary: Boundary,
    pub bonds: Vec<SpinBond>,
    pub fields: Vec<[f64; 3]>,
    pub offset: f64,
}

impl SpinModel {
    pub fn new(n_sites: usize, boundary: Boundary) -> Self {
        Self {
            n_sites,
            boundary,
            bonds: Vec::new(),
            fields: vec![[0.0; 3]; n_sites],
            offset: 0.0,
        }
    }

    /// Uniform nearest-neighbour XYZ chain with optional uniform x field.
    pub fn uniform_xyz(n_sites: usize, boundary: Boundary, jxx: f64, jyy: f64, jzz: f64, hx: f64) -> Self {
        let mut m = Self::new(n_sites, boundary);
        let nb = if boundary == Boundary::Periodic {
            n_sites
        } else {
            n_sites - 1
        };
        for b in 0..nb {
            m.add_bond(b, (b + 1) % n_sites, diag3(jxx, jyy, jzz));
        }
        for f in &mut m.fields {
            f[0] = hx;
        }
        m
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn add_bond(&mut self, i: usize, j: usize, k: [[f64; 3]; 3]) {
        assert!(i < self.n_sites && j < self.n_sites && i != j);
        self.bonds.push(SpinBond { i, j, k });
    }

    /// Multiplies every coefficient, fields and offset included, by `s`.
    pub fn scale(&mut self, s: f64) {
        for x in self.bonds.iter_mut().flat_map(|b| b.k.iter_mut().flatten()) {
            *x *= s;
        }
        for x in self.fields.iter_mut().flatten() {
            *x *= s;
        }
        self.offset *= s;
    }

    /// Largest absolute coefficient, a cheap scale for tolerances.
    pub fn max_coefficient(&self) -> f64 {
        let b = self
            .bonds
            .iter()
            .flat_map(|b| b.k.iter().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let f = self.fields.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        b.max(f)
    }

    /// True when no `s^y` appears, so the matrix is real in the `s^z` basis.
    pub fn is_real(&self) -> bool {
        // s^y s^y is real; a single s^y factor is not.
        let bonds_real = self
            .bonds
            .iter()
            .all(|b| (0..3).all(|a| (0..3).all(|c| b.k[a][c] == 0.0 || (a == 1) == (c == 1))));
        bonds_real && self.fields.iter().all(|h| h[1] == 0.0)
    }

    /// Plain-text serialization; values use 17 significant digits so the
    /// round trip is exact. Only symmetric bonds with xx, yy, zz and xy
    /// entries are representable.
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        writeln!(s, "# spin model").unwrap();
        writeln!(s, "N {}", self.n_sites).unwrap();
        writeln!(s, "boundary {}", self.boundary).unwrap();
        for b in &self.bonds {
            let k = &b.k;
            if k[0][2] != 0.0 || k[2][0] != 0.0 || k[1][2] != 0.0 || k[2][1] != 0.0 || k[0][1] != k[1][0] {
                return Err(Error::InvalidArgument(format!(
                    "bond ({}, {}) has entries the model file cannot hold",
                    b.i + 1,
                    b.j + 1
                )));
            }
            writeln!(
                s,
                "bond {} {} {} {} {} {}",
                b.i + 1,
                b.j + 1,
                fmt_f64(k[0][0]),
                fmt_f64(k[1][1]),
                fmt_f64(k[2][2]),
                fmt_f64(k[0][1])
            )
            .unwrap();
        }
        for (j, h) in self.fields.iter().enumerate() {
            writeln!(
                s,
                "site {} {} {} {}",
                j + 1,
                fmt_f64(h[0]),
                fmt_f64(h[1]),
                fmt_f64(h[2])
            )
            .unwrap();
        }
        writeln!(s, "offset {}", fmt_f64(self.offset)).unwrap();
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut boundary = Boundary::Periodic;
        let mut bonds = Vec::new();
        let mut sites = Vec::new();
        let mut offset = 0.0;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: ln + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| -> Result<f64> {
                f.get(i)
                    .ok_or_else(|| err("missing field"))
                    .and_then(|s| parse_f64(s).map_err(|_| err("bad number")))
            };
            let idx = |i: usize| -> Result<usize> {
                let v: usize = f
                    .get(i)
                    .ok_or_else(|| err("missing index"))?
                    .parse()
                    .map_err(|_| err("bad index"))?;
                v.checked_sub(1).ok_or_else(|| err("indices are 1-based"))
            };
            match f[0] {
                "N" => n = Some(f.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad N"))?),
                "boundary" => {
                    boundary = f
                        .get(1)
                        .ok_or_else(|| err("missing boundary"))?
                        .parse()
                        .map_err(|m: String| err(&m))?
                }
                "bond" => {
                    let (i, j) = (idx(1)?, idx(2)?);
                    let (xx, yy, zz, xy) = (num(3)?, num(4)?, num(5)?, num(6)?);
                    bonds.push(SpinBond {
                        i,
                        j,
                        k: [[xx, xy, 0.0], [xy, yy, 0.0], [0.0, 0.0, zz]],
                    });
                }
                "site" => sites.push((idx(1)?, [num(2)?, num(3)?, num(4)?])),
                "offset" => offset = num(1)?,
                other => return Err(err(&format!("unknown record '{other}'"))),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            message: "missing N record".into(),
        })?;
        let mut m = Self::new(n, boundary);
        for b in bonds {
            if b.i >= n || b.j >= n || b.i == b.j {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("bond ({}, {}) out of range", b.i + 1, b.j + 1),
                });
            }
            m.bonds.push(b);
        }
        for (j, h) in sites {
            if j >= n {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("site {} out of range", j + 1),
                });
            }
            m.fields[j] = h;
        }
        m.offset = offset;
        Ok(m)
    }
}

fn diag3(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
}

/// How the symmetric `s^x s^y + s^y s^x` coefficient on phased links is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTermPolicy {
    /// `-cos(2 chi) J3^2 / 2U` on cross-cell links, zero on in-cell links.
    Printed,
    /// `-sin(2 chi) J3^2 / 2U` on every link, as produced by the exact
    /// second-order reduction.
    #[default]
    Oracle,
}

impl std::str::FromStr for CrossTermPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "oracle" => Ok(Self::Oracle),
            _ => Err(Error::InvalidArgument(format!("unknown cross-term policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    pub cross_term: CrossTermPolicy,
    /// Keep the per-bond constant `-5 (J2^2 + J3^2) / 2U` in the offset.
    pub keep_offset: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            cross_term: CrossTermPolicy::Oracle,
            keep_offset: true,
        }
    }
}

/// `(Jxx, Jyy, Jzz)` of the uniform XYZ chain.
pub fn xyz_couplings(c: &CouplingSet) -> Result<(f64, f64, f64)> {
    c.check_u()?;
    let (j2, j3, u) = (c.j2 * c.j2, c.j3 * c.j3, c.u);
    Ok((
        -(j2 + j3) / (2.0 * u),
        -(j2 - j3) / (2.0 * u),
        -3.0 * (j2 - j3) / (2.0 * u),
    ))
}

/// Uniform x field `2 J1 - 6 J2 J3 / U` of the ladder at `l Theta = pi`.
pub fn field_coupling(c: &CouplingSet) -> Result<f64> {
    c.check_u()?;
    Ok(2.0 * c.j1 - 6.0 * c.j2 * c.j3 / c.u)
}

/// Per-bond constant energy from the processes that flip no spin.
pub fn bond_constant(c: &CouplingSet) -> f64 {
    -5.0 * (c.j2 * c.j2 + c.j3 * c.j3) / (2.0 * c.u)
}

/// Coupling matrix of one link with phase `chi`.
pub fn bond_matrix(c: &CouplingSet, bond: &Bond, policy: CrossTermPolicy) -> [[f64; 3]; 3] {
    let (j2, j3, u) = (c.j2 * c.j2, c.j3 * c.j3, c.u);
    let c2 = cos_pi(2.0 * bond.chi_over_pi);
    let s2 = sin_pi(2.0 * bond.chi_over_pi);
    let xy = match policy {
        CrossTermPolicy::Oracle => -s2 * j3 / (2.0 * u),
        CrossTermPolicy::Printed => match bond.tag {
            BondTag::CrossCell => -c2 * j3 / (2.0 * u),
            BondTag::InCell => 0.0,
        },
    };
    [
        [-(j2 + c2 * j3) / (2.0 * u), xy, 0.0],
        [xy, -(j2 - c2 * j3) / (2.0 * u), 0.0],
        [0.0, 0.0, -3.0 * (j2 - j3) / (2.0 * u)],
    ]
}

/// Field on `site`: `(J1 - 3 J2 J3 / U) sum_b (cos chi_b, sin chi_b, 0)`
/// over the links touching the site. Edge sites of open chains simply see
/// fewer links.
pub fn site_field(c: &CouplingSet, table: &BondTable, site: usize) -> [f64; 3] {
    let amp = c.j1 - 3.0 * c.j2 * c.j3 / c.u;
    let (mut x, mut y) = (0.0, 0.0);
    for b in table.bonds_of(site) {
        x += cos_pi(b.chi_over_pi);
        y += sin_pi(b.chi_over_pi);
    }
    [amp * x, amp * y, 0.0]
}

/// General model on an explicit bond table.
pub fn assemble_from_bonds(table: &BondTable, c: &CouplingSet, opts: AssembleOptions) -> Result<SpinModel> {
    c.check_u()?;
    let mut m = SpinModel::new(table.n_sites(), table.boundary());
    for b in table.bonds() {
        m.add_bond(b.a, b.b, bond_matrix(c, b, opts.cross_term));
    }
    for j in 0..table.n_sites() {
        m.fields[j] = site_field(c, table, j);
    }
    if opts.keep_offset {
        m.offset = table.bonds().len() as f64 * bond_constant(c);
    }
    Ok(m)
}

fn check_l(geom: &RingGeometry, c: &CouplingSet) -> Result<()> {
    if geom.l != c.l {
        return Err(Error::Couplings(format!(
            "couplings describe manifold l = {} but the geometry uses l = {}",
            c.l, geom.l
        )));
    }
    Ok(())
}

/// Model at any valid geometry.
pub fn assemble_general(geom: &RingGeometry, c: &CouplingSet, opts: AssembleOptions) -> Result<SpinModel> {
    check_l(geom, c)?;
    let table = build_bonds(geom)?;
    assemble_from_bonds(&table, c, opts)
}

const ANGLE_TOL: f64 = 1e-9;

// Distance in radians from l*Theta to the nearest point of `offset + period * k`.
fn angle_miss(l_theta_over_pi: f64, offset: f64, period: f64) -> f64 {
    let r = (l_theta_over_pi - offset).rem_euclid(period);
    r.min(period - r) * std::f64::consts::PI
}

/// Snap `theta_over_pi` onto the nearest angle with `l Theta` a multiple of
/// `pi/2` when it lies within `tol` radians of one; otherwise return it unchanged.
pub fn snap_theta_over_pi(theta_over_pi: f64, l: u32, tol: f64) -> f64 {
    let lt = l as f64 * theta_over_pi;
    let k = (2.0 * lt).round();
    if (lt - k / 2.0).abs() * std::f64::consts::PI <= tol {
        k / (2.0 * l as f64)
    } else {
        theta_over_pi
    }
}

/// Uniform XYZ chain; needs `l Theta = (2s + 1) pi / 2`.
pub fn assemble_xyz(geom: &RingGeometry, c: &CouplingSet, opts: AssembleOptions) -> Result<SpinModel> {
    check_l(geom, c)?;
    let miss = angle_miss(geom.l_theta_over_pi(), 0.5, 1.0);
    if miss > ANGLE_TOL {
        return Err(Error::AnglePrecondition(format!(
            "l*Theta = {}pi is not an odd multiple of pi/2; use the general assembler",
            geom.l_theta_over_pi()
        )));
    }
    let table = build_bonds(geom)?;
    uniform_on(&table, c, opts, |_| 0.0)
}

/// XYZ chain in a uniform x field; needs `l Theta = (2s + 1) pi`.
pub fn assemble_xyz_field(geom: &RingGeometry, c: &CouplingSet, opts: AssembleOptions) -> Result<SpinModel> {
    check_l(geom, c)?;
    let miss = angle_miss(geom.l_theta_over_pi(), 1.0, 2.0);
    if miss > ANGLE_TOL {
        return Err(Error::AnglePrecondition(format!(
            "l*Theta = {}pi is not an odd multiple of pi",
            geom.l_theta_over_pi()
        )));
    }
    let table = build_bonds(geom)?;
    let h = field_coupling(c)?;
    uniform_on(&table, c, opts, |_| h)
}

/// Four-site ladder at l = 1: fields `+h` on B sites and `-h` on D sites.
pub fn assemble_staggered(geom: &RingGeometry, c: &CouplingSet, opts: AssembleOptions) -> Result<SpinModel> {
    if geom.cell != CellKind::FourSite {
        return Err(Error::Geometry("staggered model needs the four-site cell".into()));
    }
    if geom.l != 1 {
        return Err(Error::Geometry(format!("staggered model needs l = 1, got {}", geom.l)));
    }
    check_l(geom, c)?;
    let table = build_bonds(geom)?;
    let h = field_coupling(c)?;
    let roles: Vec<SiteRole> = table.roles().expect("four-site table has roles").to_vec();
    uniform_on(&table, c, opts, |j| match roles[j] {
        SiteRole::B => h,
        SiteRole::D => -h,
        _ => 0.0,
    })
}

fn uniform_on(
    table: &BondTable,
    c: &CouplingSet,
    opts: AssembleOptions,
    hx: impl Fn(usize) -> f64,
) -> Result<SpinModel> {
    let (jxx, jyy, jzz) = xyz_couplings(c)?;
    let mut m = SpinModel::new(table.n_sites(), table.boundary());
    for b in table.bonds() {
        m.add_bond(b.a, b.b, diag3(jxx, jyy, jzz));
    }
    for j in 0..table.n_sites() {
        m.fields[j][0] = hx(j);
    }
    if opts.keep_offset {
        m.offset = table.bonds().len() as f64 * bond_constant(c);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cs(j1: f64, j2: f64, j3: f64, u: f64) -> CouplingSet {
        CouplingSet::injected(j1, j2, j3, u, 1)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn xyz_coefficients() {
        let (x, y, z) = xyz_couplings(&cs(0.0, 1.0, 1.0, 10.0)).unwrap();
        assert!(close(x, -0.1) && close(y, 0.0) && close(z, 0.0));
        let (x, y, z) = xyz_couplings(&cs(0.0, 1.0, 0.0, 10.0)).unwrap();
        assert!(close(x, -0.05) && close(y, -0.05) && close(z, -0.15));
        let (x, _, z) = xyz_couplings(&cs(0.0, 1.0, 2f64.sqrt(), 10.0)).unwrap();
        assert!(close(z, 0.15) && close(z, -x));
        assert!(xyz_couplings(&cs(0.0, 1.0, 1.0, 0.0)).is_err());
        assert!(xyz_couplings(&cs(0.0, 1.0, 1.0, -1.0)).is_err());
    }

    #[test]
    fn field_coefficient() {
        assert!(close(field_coupling(&cs(0.2, 1.0, 1.0, 20.0)).unwrap(), 0.1));
        assert_eq!(field_coupling(&cs(0.0, 1.0, 0.0, 20.0)).unwrap(), 0.0);
        assert!(field_coupling(&cs(0.2, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn xyz_assembler() {
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 8, Boundary::Periodic);
        let m = assemble_xyz(&g, &cs(0.3, 1.0, 1.2, 20.0), AssembleOptions::default()).unwrap();
        let k = m.bonds[3].k;
        assert!((k[0][0] + 0.061).abs() < 1e-12);
        assert!((k[1][1] - 0.011).abs() < 1e-12);
        assert!((k[2][2] - 0.033).abs() < 1e-12);
        assert!(m.fields.iter().all(|h| *h == [0.0; 3]));
        assert!(close(m.offset, 8.0 * -5.0 * (1.0 + 1.44) / 40.0));

        let g2 = RingGeometry::two_site(2.5, 1.0, 0.25, 2, 8, Boundary::Periodic);
        let g2 = RingGeometry {
            allow_small_angle: true,
            ..g2
        };
        let c2 = CouplingSet::injected(0.0, 1.0, 1.2, 20.0, 2);
        assert!(assemble_xyz(&g2, &c2, AssembleOptions::default()).is_ok());
        let g3 = RingGeometry::two_site(2.5, 1.0, 0.5, 2, 8, Boundary::Periodic);
        assert!(matches!(
            assemble_xyz(&g3, &c2, AssembleOptions::default()),
            Err(Error::AnglePrecondition(_))
        ));
        assert!(assemble_xyz(&g, &c2, AssembleOptions::default()).is_err());
    }

    #[test]
    fn xyz_field_assembler() {
        let g = RingGeometry::two_site(2.5, 1.0, 1.0, 1, 6, Boundary::Periodic);
        let m = assemble_xyz_field(&g, &cs(0.2, 1.0, 1.0, 20.0), AssembleOptions::default()).unwrap();
        for h in &m.fields {
            assert!(close(h[0], 0.1) && h[1] == 0.0 && h[2] == 0.0);
        }
        let m0 = assemble_xyz_field(&g, &cs(3.0 / 20.0, 1.0, 1.0, 20.0), AssembleOptions::default()).unwrap();
        assert!(m0.fields.iter().all(|h| h[0].abs() < 1e-15));
        let gx = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 6, Boundary::Periodic);
        assert!(assemble_xyz_field(&gx, &cs(0.2, 1.0, 1.0, 20.0), AssembleOptions::default()).is_err());
    }

    #[test]
    fn staggered_assembler() {
        let c = cs(0.2, 1.0, 1.3, 20.0);
        let h = field_coupling(&c).unwrap();
        let g = RingGeometry::four_site(2.5, 1.0, 1, 4, Boundary::Periodic);
        let m = assemble_staggered(&g, &c, AssembleOptions::default()).unwrap();
        let hx: Vec<f64> = m.fields.iter().map(|f| f[0]).collect();
        assert_eq!(hx, vec![0.0, h, 0.0, -h]);
        let g8 = RingGeometry::four_site(2.5, 1.0, 1, 8, Boundary::Periodic);
        let m8 = assemble_staggered(&g8, &c, AssembleOptions::default()).unwrap();
        let hx8: Vec<f64> = m8.fields.iter().map(|f| f[0]).collect();
        assert_eq!(hx8, vec![0.0, h, 0.0, -h, 0.0, h, 0.0, -h]);

        let c0 = cs(3.0 * 1.3 / 20.0, 1.0, 1.3, 20.0);
        let ms = assemble_staggered(&g8, &c0, AssembleOptions::default()).unwrap();
        let mx = uniform_on(&build_bonds(&g8).unwrap(), &c0, AssembleOptions::default(), |_| 0.0).unwrap();
        assert_eq!(ms.bonds, mx.bonds);
        assert!(ms.fields.iter().all(|f| f[0].abs() < 1e-15));

        let g2 = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 8, Boundary::Periodic);
        assert!(assemble_staggered(&g2, &c, AssembleOptions::default()).is_err());
        let gl = RingGeometry::four_site(2.5, 1.0, 2, 8, Boundary::Periodic);
        assert!(assemble_staggered(
            &gl,
            &CouplingSet::injected(0.2, 1.0, 1.3, 20.0, 2),
            AssembleOptions::default()
        )
        .is_err());
    }

    #[test]
    fn general_reduces_to_special_assemblers() {
        let c = cs(0.07, 0.9, 1.3, 25.0);
        let opts = AssembleOptions::default();
        for (theta, special) in [(0.5, 0), (1.0, 1)] {
            let g = RingGeometry::two_site(2.5, 1.0, theta, 1, 8, Boundary::Periodic);
            let a = assemble_general(&g, &c, opts).unwrap();
            let b = if special == 0 {
                assemble_xyz(&g, &c, opts).unwrap()
            } else {
                assemble_xyz_field(&g, &c, opts).unwrap()
            };
            for (x, y) in a.bonds.iter().zip(&b.bonds) {
                for r in 0..3 {
                    for s in 0..3 {
                        assert!((x.k[r][s] - y.k[r][s]).abs() < 1e-12);
                    }
                }
            }
            for (x, y) in a.fields.iter().zip(&b.fields) {
                for r in 0..3 {
                    assert!((x[r] - y[r]).abs() < 1e-12);
                }
            }
            assert!((a.offset - b.offset).abs() < 1e-12);
        }
        let g4 = RingGeometry::four_site(2.5, 1.0, 1, 8, Boundary::Periodic);
        let a = assemble_general(&g4, &c, opts).unwrap();
        let b = assemble_staggered(&g4, &c, opts).unwrap();
        for (x, y) in a.fields.iter().zip(&b.fields) {
            assert!((x[0] - y[0]).abs() < 1e-12 && x[1].abs() < 1e-12);
        }
    }

    #[test]
    fn general_at_0_48_has_tilted_fields_and_anisotropic_links() {
        let c = cs(0.02, 0.03, 0.05, 1.0);
        let g = RingGeometry::two_site(2.5, 1.0, 0.48, 1, 8, Boundary::Periodic);
        let m = assemble_general(&g, &c, AssembleOptions::default()).unwrap();
        let amp = 0.02 - 3.0 * 0.03 * 0.05;
        for h in &m.fields {
            assert!((h[0] - amp * (1.0 + cos_pi(0.96))).abs() < 1e-15);
            assert!((h[1] - amp * sin_pi(0.96)).abs() < 1e-15);
            assert!(h[0] != 0.0 && h[1] != 0.0);
        }
        assert_eq!(m.bonds[0].k[0][1], 0.0);
        assert!(m.bonds[1].k[0][1] != 0.0);
        assert!(m.bonds[1].k[0][0] != m.bonds[0].k[0][0]);
        assert!(!m.is_real());
    }

    #[test]
    fn open_edges_see_one_link() {
        let c = cs(0.1, 0.0, 0.0, 1.0);
        let g = RingGeometry::two_site(2.5, 1.0, 1.0, 1, 4, Boundary::Open);
        let m = assemble_general(&g, &c, AssembleOptions::default()).unwrap();
        let hx: Vec<f64> = m.fields.iter().map(|f| f[0]).collect();
        assert_eq!(hx, vec![0.1, 0.2, 0.2, 0.1]);
    }

    #[test]
    fn cross_term_policies_differ_at_right_angle() {
        let c = cs(0.0, 0.0, 0.1, 1.0);
        let g = RingGeometry::two_site(2.5, 1.0, 0.5, 1, 4, Boundary::Periodic);
        let printed = assemble_general(
            &g,
            &c,
            AssembleOptions {
                cross_term: CrossTermPolicy::Printed,
                ..Default::default()
            },
        )
        .unwrap();
        let oracle = assemble_general(&g, &c, AssembleOptions::default()).unwrap();
        assert!((printed.bonds[1].k[0][1] + 0.005).abs() < 1e-15);
        assert_eq!(printed.bonds[0].k[0][1], 0.0);
        assert_eq!(oracle.bonds[1].k[0][1], 0.0);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_theta_over_pi(0.5 + 1e-12, 1, 1e-9), 0.5);
        assert_eq!(snap_theta_over_pi(0.48, 1, 1e-9), 0.48);
        assert_eq!(snap_theta_over_pi(0.25 - 1e-11, 2, 1e-9), 0.25);
        let g = RingGeometry::two_site(2.5, 1.0, 0.5 + 1e-11, 1, 4, Boundary::Periodic);
        assert!(assemble_xyz(&g, &cs(0.0, 1.0, 1.0, 20.0), AssembleOptions::default()).is_ok());
        let g = RingGeometry::two_site(2.5, 1.0, 0.5 + 1e-8, 1, 4, Boundary::Periodic);
        assert!(assemble_xyz(&g, &cs(0.0, 1.0, 1.0, 20.0), AssembleOptions::default()).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let c = cs(0.013, 0.031, 0.057, 1.1);
        let g = RingGeometry::two_site(2.5, 1.0, 0.4812, 1, 6, Boundary::Open);
        let m = assemble_general(&g, &c, AssembleOptions::default()).unwrap();
        let text = m.to_text().unwrap();
        assert_eq!(SpinModel::from_text(&text).unwrap(), m);
        assert!(SpinModel::from_text("N 2\nbond 1 3 0 0 0 0\n").is_err());
        assert!(SpinModel::from_text("N 2\nfoo\n").is_err());
    }

    proptest! {
        #[test]
        fn couplings_scale_linearly(
            j1 in -0.1f64..0.1, j2 in -0.1f64..0.1, j3 in -0.1f64..0.1,
            u in 0.5f64..5.0, lam in 0.1f64..10.0, theta in 0.34f64..1.0,
        ) {
            let g = RingGeometry::two_site(2.5, 1.0, theta, 1, 6, Boundary::Periodic);
            let opts = AssembleOptions::default();
            let a = assemble_general(&g, &cs(j1, j2, j3, u), opts).unwrap();
            let b = assemble_general(&g, &cs(lam * j1, lam * j2, lam * j3, lam * u), opts).unwrap();
            for (x, y) in a.bonds.iter().zip(&b.bonds) {
                for r in 0..3 {
                    for s in 0..3 {
                        prop_assert!((lam * x.k[r][s] - y.k[r][s]).abs() < 1e-13);
                    }
                }
            }
            for (x, y) in a.fields.iter().zip(&b.fields) {
                for r in 0..3 {
                    prop_assert!((lam * x[r] - y[r]).abs() < 1e-13);
                }
            }
        }

        #[test]
        fn bond_matrices_are_symmetric(j2 in -1.0f64..1.0, j3 in -1.0f64..1.0, chi in 0.0f64..2.0) {
            let c = cs(0.0, j2, j3, 3.0);
            for tag in [BondTag::InCell, BondTag::CrossCell] {
                for p in [CrossTermPolicy::Oracle, CrossTermPolicy::Printed] {
                    let k = bond_matrix(&c, &Bond { a: 0, b: 1, chi_over_pi: chi, tag }, p);
                    for r in 0..3 {
                        for s in 0..3 {
                            prop_assert_eq!(k[r][s], k[s][r]);
                        }
                    }
                }
            }
        }
    }
}
