//! Flat `section.key = value` experiment files.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected so a
//! typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use ringmag::{Boundary, CellKind, CrossTermPolicy, EdMethod, RingGeometry};

const KEYS: &[&str] = &[
    "geometry.R",
    "geometry.d",
    "geometry.d_min",
    "geometry.d_max",
    "geometry.d_step",
    "geometry.theta_over_pi",
    "geometry.l",
    "geometry.N",
    "geometry.cell",
    "geometry.boundary",
    "couplings.mode",
    "couplings.J1",
    "couplings.J2",
    "couplings.J3",
    "couplings.u_policy",
    "couplings.U",
    "couplings.U_over_J3",
    "couplings.cross_term",
    "solver.radial_spacing",
    "solver.plane_spacing",
    "solver.plane_margin",
    "solver.plane_tol",
    "solver.ed_tol",
    "solver.ed_method",
    "solver.seed",
    "run.sizes",
    "run.k",
    "run.scale_by_j3",
    "run.max_size",
    "run.out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    Solve,
    Inject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UChoice {
    Absolute(f64),
    /// `U = ratio * |J3|`.
    OverJ3(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Single(f64),
    Range { min: f64, max: f64, step: f64 },
}

impl Separation {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Separation::Single(d) => vec![d],
            Separation::Range { min, max, step } => {
                let n = ((max - min) / step + 1e-9).floor() as usize;
                // rounded so 1.6 + 7 * 0.1 lands on 2.3
                (0..=n)
                    .map(|i| ((min + step * i as f64) * 1e12).round() / 1e12)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryBlock {
    pub radius: f64,
    pub separation: Separation,
    pub theta_over_pi: f64,
    pub l: u32,
    pub n_sites: usize,
    pub cell: CellKind,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingsBlock {
    pub mode: CouplingMode,
    pub injected: Option<(f64, f64, f64)>,
    pub u: UChoice,
    pub cross_term: CrossTermPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverBlock {
    pub radial_spacing: f64,
    pub plane_spacing: f64,
    pub plane_margin: f64,
    pub plane_tol: f64,
    pub ed_tol: f64,
    pub ed_method: EdMethod,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub sizes: Vec<usize>,
    pub k: usize,
    pub scale_by_j3: bool,
    pub max_size: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometryBlock,
    pub couplings: CouplingsBlock,
    pub solver: SolverBlock,
    pub run: RunBlock,
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", no + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            bail!("line {}: unknown key `{k}`", no + 1);
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            bail!("line {}: `{k}` given twice", no + 1);
        }
    }
    Ok(map)
}

struct Reader(BTreeMap<String, String>);

impl Reader {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("`{key}`: cannot parse `{v}`: {e}")))
            .transpose()
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn parse_cell(s: &str) -> Result<CellKind> {
    match s {
        "two-site" => Ok(CellKind::TwoSite),
        "four-site" => Ok(CellKind::FourSite),
        _ => bail!("`geometry.cell`: expected two-site or four-site, got `{s}`"),
    }
}

fn cell_name(c: CellKind) -> &'static str {
    match c {
        CellKind::TwoSite => "two-site",
        CellKind::FourSite => "four-site",
    }
}

fn parse_method(s: &str) -> Result<EdMethod> {
    match s {
        "auto" => Ok(EdMethod::Auto),
        "dense" => Ok(EdMethod::Dense),
        "krylov" => Ok(EdMethod::Krylov),
        _ => bail!("`solver.ed_method`: expected auto, dense or krylov, got `{s}`"),
    }
}

fn method_name(m: EdMethod) -> &'static str {
    match m {
        EdMethod::Auto => "auto",
        EdMethod::Dense => "dense",
        EdMethod::Krylov => "krylov",
    }
}

fn policy_name(p: CrossTermPolicy) -> &'static str {
    match p {
        CrossTermPolicy::Printed => "printed",
        CrossTermPolicy::Oracle => "oracle",
    }
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        bail!("`{key}` must be positive, got {x}")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let r = Reader(parse_pairs(text)?);

        let single = r.get::<f64>("geometry.d")?;
        let range = (
            r.get::<f64>("geometry.d_min")?,
            r.get::<f64>("geometry.d_max")?,
            r.get::<f64>("geometry.d_step")?,
        );
        let separation = match (single, range) {
            (Some(d), (None, None, None)) => Separation::Single(positive("geometry.d", d)?),
            (None, (Some(min), Some(max), Some(step))) => {
                positive("geometry.d_min", min)?;
                positive("geometry.d_step", step)?;
                if max < min {
                    bail!("empty separation range: d_max {max} < d_min {min}");
                }
                Separation::Range { min, max, step }
            }
            (Some(_), _) => bail!("give either `geometry.d` or a d range, not both"),
            (None, (None, None, None)) => bail!("one of `geometry.d` or a d range is required"),
            _ => bail!("a d range needs all of `geometry.d_min`, `geometry.d_max`, `geometry.d_step`"),
        };

        let geometry = GeometryBlock {
            radius: positive("geometry.R", r.or("geometry.R", 2.5)?)?,
            separation,
            theta_over_pi: r.or("geometry.theta_over_pi", 0.5)?,
            l: r.or("geometry.l", 1)?,
            n_sites: r.or("geometry.N", 8)?,
            cell: parse_cell(r.raw("geometry.cell").unwrap_or("two-site"))?,
            boundary: r
                .raw("geometry.boundary")
                .unwrap_or("periodic")
                .parse()
                .map_err(|e: String| anyhow!("`geometry.boundary`: {e}"))?,
        };

        let mode = match r.raw("couplings.mode").unwrap_or("solve") {
            "solve" => CouplingMode::Solve,
            "inject" => CouplingMode::Inject,
            m => bail!("`couplings.mode`: expected solve or inject, got `{m}`"),
        };
        let js = (
            r.get::<f64>("couplings.J1")?,
            r.get::<f64>("couplings.J2")?,
            r.get::<f64>("couplings.J3")?,
        );
        let injected = match (mode, js) {
            (CouplingMode::Inject, (Some(a), Some(b), Some(c))) => Some((a, b, c)),
            (CouplingMode::Inject, _) => bail!("injected mode needs all of couplings.J1, J2 and J3"),
            (CouplingMode::Solve, (None, None, None)) => None,
            (CouplingMode::Solve, _) => bail!("J values are only accepted with couplings.mode = inject"),
        };
        let u = match r.raw("couplings.u_policy").unwrap_or("ratio") {
            "absolute" => UChoice::Absolute(
                r.get("couplings.U")?
                    .ok_or_else(|| anyhow!("absolute U policy needs `couplings.U`"))?,
            ),
            "ratio" => UChoice::OverJ3(positive("couplings.U_over_J3", r.or("couplings.U_over_J3", 20.0)?)?),
            p => bail!("`couplings.u_policy`: expected absolute or ratio, got `{p}`"),
        };
        let couplings = CouplingsBlock {
            mode,
            injected,
            u,
            cross_term: r.or("couplings.cross_term", CrossTermPolicy::Oracle)?,
        };

        let solver = SolverBlock {
            radial_spacing: positive("solver.radial_spacing", r.or("solver.radial_spacing", 0.02)?)?,
            plane_spacing: positive("solver.plane_spacing", r.or("solver.plane_spacing", 0.1)?)?,
            plane_margin: positive("solver.plane_margin", r.or("solver.plane_margin", 4.0)?)?,
            plane_tol: positive("solver.plane_tol", r.or("solver.plane_tol", 1e-10)?)?,
            ed_tol: positive("solver.ed_tol", r.or("solver.ed_tol", 1e-10)?)?,
            ed_method: parse_method(r.raw("solver.ed_method").unwrap_or("auto"))?,
            seed: r.or("solver.seed", 0x5eed)?,
        };

        let sizes = match r.raw("run.sizes") {
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| anyhow!("`run.sizes`: {e}")))
                .collect::<Result<Vec<_>>>()?,
            None => vec![8, 10, 12],
        };
        let run = RunBlock {
            sizes,
            k: r.or("run.k", 4)?,
            scale_by_j3: r.or("run.scale_by_j3", true)?,
            max_size: r.or("run.max_size", 16)?,
            out: PathBuf::from(r.raw("run.out").unwrap_or("out")),
        };
        if run.k == 0 {
            bail!("`run.k` must be at least 1");
        }

        Ok(Self {
            geometry,
            couplings,
            solver,
            run,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Geometry at separation `d` with `n` rings.
    pub fn ring_geometry(&self, d: f64, n: usize) -> RingGeometry {
        let g = &self.geometry;
        match g.cell {
            CellKind::TwoSite => RingGeometry::two_site(g.radius, d, g.theta_over_pi, g.l, n, g.boundary),
            CellKind::FourSite => RingGeometry::four_site(g.radius, d, g.l, n, g.boundary),
        }
    }

    /// Canonical `key = value` listing with every default filled in.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let g = &self.geometry;
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("geometry.R", g.radius.to_string());
        match g.separation {
            Separation::Single(d) => put("geometry.d", d.to_string()),
            Separation::Range { min, max, step } => {
                put("geometry.d_min", min.to_string());
                put("geometry.d_max", max.to_string());
                put("geometry.d_step", step.to_string());
            }
        }
        put("geometry.theta_over_pi", g.theta_over_pi.to_string());
        put("geometry.l", g.l.to_string());
        put("geometry.N", g.n_sites.to_string());
        put("geometry.cell", cell_name(g.cell).into());
        put("geometry.boundary", g.boundary.to_string());
        let c = &self.couplings;
        match c.mode {
            CouplingMode::Solve => put("couplings.mode", "solve".into()),
            CouplingMode::Inject => put("couplings.mode", "inject".into()),
        }
        if let Some((j1, j2, j3)) = c.injected {
            put("couplings.J1", j1.to_string());
            put("couplings.J2", j2.to_string());
            put("couplings.J3", j3.to_string());
        }
        match c.u {
            UChoice::Absolute(u) => {
                put("couplings.u_policy", "absolute".into());
                put("couplings.U", u.to_string());
            }
            UChoice::OverJ3(r) => {
                put("couplings.u_policy", "ratio".into());
                put("couplings.U_over_J3", r.to_string());
            }
        }
        put("couplings.cross_term", policy_name(c.cross_term).into());
        let v = &self.solver;
        put("solver.radial_spacing", v.radial_spacing.to_string());
        put("solver.plane_spacing", v.plane_spacing.to_string());
        put("solver.plane_margin", v.plane_margin.to_string());
        put("solver.plane_tol", v.plane_tol.to_string());
        put("solver.ed_tol", v.ed_tol.to_string());
        put("solver.ed_method", method_name(v.ed_method).into());
        put("solver.seed", v.seed.to_string());
        let r = &self.run;
        put(
            "run.sizes",
            r.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        );
        put("run.k", r.k.to_string());
        put("run.scale_by_j3", r.scale_by_j3.to_string());
        put("run.max_size", r.max_size.to_string());
        put("run.out", r.out.display().to_string());
        s
    }
}

pub fn cross_term_name(p: CrossTermPolicy) -> &'static str {
    policy_name(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse("geometry.d = 2.0\n").unwrap();
        assert_eq!(c.geometry.separation, Separation::Single(2.0));
        assert_eq!(c.geometry.radius, 2.5);
        assert_eq!(c.couplings.u, UChoice::OverJ3(20.0));
        assert_eq!(c.couplings.cross_term, CrossTermPolicy::Oracle);
        assert_eq!(c.run.sizes, vec![8, 10, 12]);
    }

    #[test]
    fn exactly_one_separation() {
        assert!(ExperimentConfig::parse("geometry.R = 2.5\n").is_err());
        let both = "geometry.d = 2\ngeometry.d_min = 1\ngeometry.d_max = 2\ngeometry.d_step = 0.5\n";
        assert!(ExperimentConfig::parse(both).is_err());
        assert!(ExperimentConfig::parse("geometry.d_min = 1\ngeometry.d_max = 2\n").is_err());
        let c = ExperimentConfig::parse("geometry.d_min = 1\ngeometry.d_max = 2\ngeometry.d_step = 0.25\n").unwrap();
        assert_eq!(c.geometry.separation.values(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn empty_range_is_rejected() {
        assert!(ExperimentConfig::parse("geometry.d_min = 3\ngeometry.d_max = 2\ngeometry.d_step = 0.1\n").is_err());
    }

    #[test]
    fn inject_needs_all_three() {
        let base = "geometry.d = 2\ncouplings.mode = inject\n";
        assert!(ExperimentConfig::parse(&format!("{base}couplings.J1 = 0.1\ncouplings.J2 = 0.2\n")).is_err());
        let c = ExperimentConfig::parse(&format!(
            "{base}couplings.J1 = 0.1\ncouplings.J2 = 0.2\ncouplings.J3 = 0.3\n"
        ))
        .unwrap();
        assert_eq!(c.couplings.injected, Some((0.1, 0.2, 0.3)));
        assert!(ExperimentConfig::parse("geometry.d = 2\ncouplings.J1 = 0.1\n").is_err());
    }

    #[test]
    fn ratio_must_be_positive() {
        assert!(ExperimentConfig::parse("geometry.d = 2\ncouplings.U_over_J3 = 0\n").is_err());
        assert!(ExperimentConfig::parse("geometry.d = 2\ncouplings.U_over_J3 = -3\n").is_err());
    }

    #[test]
    fn typos_and_duplicates_fail() {
        assert!(ExperimentConfig::parse("geometry.d = 2\ngeometry.theta = 0.5\n").is_err());
        assert!(ExperimentConfig::parse("geometry.d = 2\ngeometry.d = 3\n").is_err());
        assert!(ExperimentConfig::parse("geometry.d 2\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "# scan\ngeometry.d_min = 1.5\ngeometry.d_max = 2.5 # inclusive\ngeometry.d_step = 0.1\n\
                    couplings.mode = inject\ncouplings.J1 = 0.01\ncouplings.J2 = 0.02\ncouplings.J3 = 0.03\n\
                    couplings.u_policy = absolute\ncouplings.U = 1.5\ncouplings.cross_term = printed\n\
                    run.sizes = 4, 6\nsolver.ed_method = dense\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.echo()).unwrap(), c);
    }
}
