use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use ringmag::io::{fmt_f64, write_atomic};
use ringmag::observables::correlation_crossings;
use ringmag::ringsolver::{
    sweep_csv, sweep_rows, sweep_trends, PlaneGridSpec, RadialGridSpec, SweepRow, STRONG_COUPLING_THRESHOLD,
};
use ringmag::{
    assemble_general, build_bonds, compare_with_spin_model, find_crossing, lowest_eigenpairs, scan_family,
    AssembleOptions, CouplingSet, CrossTermPolicy, CrossingOptions, EdOptions, Error, SweepSpec, UPolicy,
};

use crate::config::{cross_term_name, CouplingMode, ExperimentConfig, Separation, UChoice};

/// Why a command did not finish cleanly; each maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e:#}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn config_err(msg: impl std::fmt::Display) -> Failure {
    Failure::Config(anyhow!("{msg}"))
}

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

/// What a command produced. Files are written as soon as they are ready;
/// `failure` records a problem found after some output already exists.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub failure: Option<Failure>,
}

impl Report {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
        let path = dir.join(name);
        write_atomic(&path, contents).map_err(|e| numerical(anyhow!("writing {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.summary.push_str(s.as_ref());
        self.summary.push('\n');
    }
}

/// Options that come from the command line rather than the config file.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub out: PathBuf,
    pub cross_term: CrossTermPolicy,
    pub seed: u64,
}

fn sweep_spec(cfg: &ExperimentConfig, seed: u64) -> SweepSpec {
    let s = &cfg.solver;
    SweepSpec {
        radial: RadialGridSpec {
            spacing: s.radial_spacing,
            ..RadialGridSpec::default()
        },
        plane: PlaneGridSpec {
            spacing: s.plane_spacing,
            margin: s.plane_margin,
            tol: s.plane_tol,
            seed,
            ..PlaneGridSpec::default()
        },
        u_policy: match cfg.couplings.u {
            UChoice::Absolute(u) => UPolicy::Absolute(u),
            UChoice::OverJ3(r) => UPolicy::Ratio(r),
        },
    }
}

fn apply_u(c: CouplingSet, choice: UChoice) -> CouplingSet {
    match choice {
        UChoice::Absolute(u) => c.with_u(u),
        UChoice::OverJ3(r) => c.with_u(r * c.j3.abs()),
    }
}

/// Couplings at every requested separation, with the configured `U`.
/// Injected couplings do not depend on the separation.
fn coupling_rows(cfg: &ExperimentConfig, ds: &[f64], seed: u64) -> Result<Vec<SweepRow>, Failure> {
    let choice = cfg.couplings.u;
    match cfg.couplings.mode {
        CouplingMode::Inject => {
            let (j1, j2, j3) = cfg.couplings.injected.expect("validated");
            let c = apply_u(CouplingSet::injected(j1, j2, j3, 0.0, cfg.geometry.l), choice);
            Ok(ds.iter().map(|&d| SweepRow { d, result: Ok(c) }).collect())
        }
        CouplingMode::Solve => {
            let spec = sweep_spec(cfg, seed);
            let rows = sweep_rows(cfg.geometry.radius, ds, cfg.geometry.l, &spec).map_err(numerical)?;
            Ok(rows
                .into_iter()
                .map(|r| SweepRow {
                    d: r.d,
                    result: r.result.map(|c| apply_u(c, choice)),
                })
                .collect())
        }
    }
}

fn single_d(cfg: &ExperimentConfig, what: &str) -> Result<f64, Failure> {
    match cfg.geometry.separation {
        Separation::Single(d) => Ok(d),
        Separation::Range { .. } => Err(config_err(format!("{what} needs a single `geometry.d`"))),
    }
}

fn fmt_list(xs: &[f64]) -> String {
    if xs.is_empty() {
        "none".into()
    } else {
        xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
    }
}

// Linear-interpolated zeros of v(d).
fn zeros(d: &[f64], v: &[f64]) -> Vec<f64> {
    d.windows(2)
        .zip(v.windows(2))
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(dd, w)| dd[0] + (dd[1] - dd[0]) * w[0] / (w[0] - w[1]))
        .collect()
}

pub fn cmd_couplings(cfg: &ExperimentConfig, run: &RunSettings) -> Result<Report, Failure> {
    let ds = cfg.geometry.separation.values();
    let rows = coupling_rows(cfg, &ds, run.seed)?;
    let mut rep = Report::default();
    rep.write(&run.out, "couplings.csv", &sweep_csv(cfg.geometry.radius, &rows))?;

    let ok: Vec<(f64, CouplingSet)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|c| (r.d, *c)))
        .collect();
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| r.result.is_err()).collect();
    rep.line(format!(
        "couplings at R = {}: {} point(s), {} failed",
        cfg.geometry.radius,
        rows.len(),
        failed.len()
    ));
    for r in &failed {
        if let Err(e) = &r.result {
            rep.line(format!("  d = {}: {e}", r.d));
        }
    }
    if ok.len() >= 2 {
        let t = sweep_trends(&ok);
        let (first, last) = (ok.first().unwrap(), ok.last().unwrap());
        rep.line(format!(
            "J3/J2: {:.4} at d = {} to {:.4} at d = {}; approaches 1: {}",
            t.j3_over_j2[0],
            first.0,
            t.j3_over_j2[t.j3_over_j2.len() - 1],
            last.0,
            if t.j3_over_j2_approaches_one { "yes" } else { "no" }
        ));
        rep.line(format!("J1/J3 sign changes at d = {}", fmt_list(&t.j1_sign_changes)));
        rep.line(format!(
            "h/J3 = (2 J1 - 6 J2 J3 / U) / J3 sign changes at d = {}; most negative at d = {}",
            fmt_list(&t.h_sign_changes),
            t.h_min_at.map_or("none".into(), |d| format!("{d:.4}"))
        ));
    }
    rep.write(&run.out, "summary.txt", &rep.summary.clone())?;
    if !failed.is_empty() {
        rep.failure = Some(numerical(anyhow!(
            "{} of {} separations failed",
            failed.len(),
            rows.len()
        )));
    }
    Ok(rep)
}

pub const ORACLE_TOL: f64 = 1e-12;

pub fn cmd_oracle_check(cfg: &ExperimentConfig, run: &RunSettings) -> Result<Report, Failure> {
    let n = cfg.geometry.n_sites;
    if n > 4 {
        return Err(config_err(format!("oracle-check needs geometry.N <= 4, got {n}")));
    }
    let d = single_d(cfg, "oracle-check")?;
    let row = coupling_rows(cfg, &[d], run.seed)?.pop().expect("one row");
    let c = row.result.map_err(numerical)?;
    let table = build_bonds(&cfg.ring_geometry(d, n)).map_err(config_err)?;
    let cmp = compare_with_spin_model(&table, &c).map_err(numerical)?;

    let mut rep = Report::default();
    rep.write(&run.out, "bonds.csv", &table.to_csv())?;
    rep.write(&run.out, "oracle.csv", &cmp.to_csv())?;
    if !c.is_strong_coupling(STRONG_COUPLING_THRESHOLD) {
        let msg = format!(
            "warning: max(|J2|, |J3|)/U = {:.3} is outside the strong-coupling regime (< {STRONG_COUPLING_THRESHOLD})",
            c.strong_coupling_ratio()
        );
        eprintln!("{msg}");
        rep.line(msg);
    }
    let worst = cmp.max_diff() / c.u;
    let pass = cmp.passes(ORACLE_TOL);
    rep.line(format!(
        "N = {n}, U = {}: max |analytic - numeric| / U = {worst:.3e} (limit {ORACLE_TOL:.0e}): {}",
        c.u,
        if pass { "PASS" } else { "FAIL" }
    ));
    rep.line("xy cross term per bond (oracle-derived vs as printed):");
    let printed: Vec<_> = cmp.rows.iter().filter(|r| r.informational).collect();
    for p in printed {
        let label = p.label.trim_end_matches("[printed]");
        rep.line(format!(
            "  {label}: oracle {} printed {}",
            fmt_f64(p.numeric),
            fmt_f64(p.analytic)
        ));
    }
    rep.write(&run.out, "summary.txt", &rep.summary.clone())?;
    if !pass {
        rep.failure = Some(Failure::Check(format!(
            "oracle mismatch {worst:.3e} U exceeds {ORACLE_TOL:.0e} U"
        )));
    }
    Ok(rep)
}

pub fn cmd_phase_scan(cfg: &ExperimentConfig, run: &RunSettings, ed: &EdOptions) -> Result<Report, Failure> {
    if cfg.couplings.mode != CouplingMode::Solve {
        return Err(config_err(
            "phase-scan sweeps the separation and needs couplings.mode = solve",
        ));
    }
    let ds = match cfg.geometry.separation {
        Separation::Range { .. } => cfg.geometry.separation.values(),
        Separation::Single(_) => return Err(config_err("phase-scan needs a d range")),
    };
    let sizes = &cfg.run.sizes;
    if let Some(&n) = sizes.iter().find(|&&n| n > cfg.run.max_size) {
        return Err(config_err(format!(
            "size {n} exceeds run.max_size = {}",
            cfg.run.max_size
        )));
    }

    let mut rep = Report::default();
    let rows = coupling_rows(cfg, &ds, run.seed)?;
    rep.write(&run.out, "couplings.csv", &sweep_csv(cfg.geometry.radius, &rows))?;
    let good: Vec<(f64, CouplingSet)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|c| (r.d, *c)))
        .collect();
    let mut problems: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.result
                .as_ref()
                .err()
                .map(|e| format!("couplings at d = {}: {e}", r.d))
        })
        .collect();
    let ds: Vec<f64> = good.iter().map(|p| p.0).collect();

    let opts = AssembleOptions {
        cross_term: run.cross_term,
        keep_offset: true,
    };
    let scale = cfg.run.scale_by_j3;
    let family = |d: f64, n: usize| {
        let c = good.iter().find(|p| p.0 == d).map(|p| p.1).expect("scan point");
        let mut m = assemble_general(&cfg.ring_geometry(d, n), &c, opts)?;
        if scale {
            if c.j3 == 0.0 {
                return Err(Error::Couplings("J3 = 0, cannot scale by it".into()));
            }
            m.scale(1.0 / c.j3.abs());
        }
        Ok(m)
    };
    let out = scan_family(family, sizes, &ds, ed).map_err(config_err)?;
    problems.extend(
        out.failures
            .iter()
            .map(|f| format!("N = {}, d = {}: {}", f.n, f.t, f.error)),
    );

    let curves = out.curves("DeltaN").map_err(numerical)?;
    rep.write(&run.out, "gap.csv", &ringmag::observables::gap_csv(&curves))?;
    let all: Vec<_> = out.points.iter().collect();
    rep.write(
        &run.out,
        "correlations.csv",
        &ringmag::observables::correlation_csv(&all),
    )?;

    rep.line(format!(
        "phase scan: Theta = {} pi, l = {}, sizes {:?}, {} separations in [{:.4}, {:.4}], cross term {}",
        cfg.geometry.theta_over_pi,
        cfg.geometry.l,
        out.sizes(),
        ds.len(),
        ds.first().copied().unwrap_or(f64::NAN),
        ds.last().copied().unwrap_or(f64::NAN),
        cross_term_name(run.cross_term)
    ));
    match find_crossing(&curves, &CrossingOptions::default()) {
        Ok(r) => {
            rep.write(&run.out, "crossings.csv", &r.to_csv())?;
            rep.line(format!("gap crossings ({}):", r.label));
            for c in &r.crossings {
                rep.line(format!(
                    "  d = {:.4} (spread {:.4}, {} pair estimate(s))",
                    c.location,
                    c.spread,
                    c.estimates.len()
                ));
            }
        }
        Err(Error::NoCrossing(why)) => {
            rep.write(&run.out, "crossings.csv", "pair,t_cross,kind\n")?;
            rep.line(format!("gap crossings: absent ({why})"));
        }
        Err(e) => return Err(numerical(e)),
    }
    if let Some(&n) = out.sizes().iter().filter(|&&n| n >= 8).max() {
        let x = correlation_crossings(&out.correlations(n));
        rep.line(format!("staggered C_zz = C_xx at N = {n}: d = {}", fmt_list(&x)));
    }
    let h: Vec<f64> = good.iter().map(|(_, c)| c.j1 - 3.0 * c.j2 * c.j3 / c.u).collect();
    rep.line(format!(
        "field amplitude J1 - 3 J2 J3 / U changes sign at d = {}",
        fmt_list(&zeros(&ds, &h))
    ));
    if !problems.is_empty() {
        rep.line(format!("{} failure(s):", problems.len()));
        for p in &problems {
            rep.line(format!("  {p}"));
        }
        rep.failure = Some(numerical(anyhow!("{} scan point(s) failed", problems.len())));
    }
    rep.write(&run.out, "summary.txt", &rep.summary.clone())?;
    Ok(rep)
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, run: &RunSettings, ed: &EdOptions) -> Result<Report, Failure> {
    let n = cfg.geometry.n_sites;
    let k = cfg.run.k;
    if n < usize::BITS as usize && k > 1usize << n {
        return Err(config_err(format!("run.k = {k} exceeds the 2^{n} states of the chain")));
    }
    let d = single_d(cfg, "spectrum")?;
    let c = coupling_rows(cfg, &[d], run.seed)?
        .pop()
        .expect("one row")
        .result
        .map_err(numerical)?;
    let opts = AssembleOptions {
        cross_term: run.cross_term,
        keep_offset: true,
    };
    let model = assemble_general(&cfg.ring_geometry(d, n), &c, opts).map_err(config_err)?;
    let ed = EdOptions { k, ..*ed };
    let sol = lowest_eigenpairs(&model, &ed).map_err(numerical)?;

    let mut csv = String::from("index,energy,residual\n");
    for (i, (e, r)) in sol.values.iter().zip(&sol.residuals).enumerate() {
        writeln!(csv, "{},{},{}", i + 1, fmt_f64(*e), fmt_f64(*r)).unwrap();
    }
    let mut rep = Report::default();
    rep.write(&run.out, "spectrum.csv", &csv)?;
    rep.write(&run.out, "model.txt", &model.to_text().map_err(numerical)?)?;
    rep.line(format!(
        "N = {n}, d = {d}: {} eigenvalue(s) by {:?} in {} iteration(s); E0 = {}, gap = {}",
        sol.values.len(),
        sol.method,
        sol.iterations,
        fmt_f64(sol.values[0]),
        if sol.computed.len() > 1 {
            fmt_f64(sol.gap())
        } else {
            "n/a".into()
        }
    ));
    rep.write(&run.out, "summary.txt", &rep.summary.clone())?;
    Ok(rep)
}
