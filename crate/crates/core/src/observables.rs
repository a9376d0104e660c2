//! Finite-size diagnostics of the spin chains: scaled gaps `Delta * N`,
//! their crossings, ground-state correlation crossovers and a coarse phase
//! label.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ed::{correlator, lowest_eigenpairs, EdOptions};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::ringsolver::single::SingleRingSolution;
use crate::spinmodel::{Axis, SpinModel};

/// Negative gaps below this are treated as solver noise and clamped.
pub const GAP_NOISE: f64 = 1e-10;

/// `Delta * N` against the family parameter for one system size.
#[derive(Debug, Clone, PartialEq)]
pub struct GapScalingCurve {
    pub n: usize,
    /// `(t, Delta * N)`, sorted by `t`.
    pub points: Vec<(f64, f64)>,
    pub label: String,
}

impl GapScalingCurve {
    pub fn new(n: usize, mut points: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("curve needs a positive size".into()));
        }
        for p in points.iter_mut() {
            if !p.0.is_finite() || !p.1.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite point ({}, {})", p.0, p.1)));
            }
            if p.1 < -GAP_NOISE * n as f64 {
                return Err(Error::InvalidArgument(format!(
                    "negative gap {} at t = {}",
                    p.1 / n as f64,
                    p.0
                )));
            }
            p.1 = p.1.max(0.0);
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            n,
            points,
            label: label.into(),
        })
    }

    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }
}

/// One diagonalized member of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub n: usize,
    pub t: f64,
    pub gap: f64,
    /// `<s^z_i s^z_j>` at the probe pair.
    pub czz: f64,
    pub cxx: f64,
    pub pair: (usize, usize),
}

impl ScanPoint {
    /// `zz` correlation with the antiferromagnetic sign removed.
    pub fn staggered_czz(&self) -> f64 {
        stagger(self.pair) * self.czz
    }
}

fn stagger((i, j): (usize, usize)) -> f64 {
    if i.abs_diff(j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug)]
pub struct ScanFailure {
    pub n: usize,
    pub t: f64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct ScanOutcome {
    /// Sorted by size, then parameter.
    pub points: Vec<ScanPoint>,
    pub failures: Vec<ScanFailure>,
}

impl ScanOutcome {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.points.iter().map(|p| p.n).collect();
        s.dedup();
        s
    }

    pub fn curves(&self, label: &str) -> Result<Vec<GapScalingCurve>> {
        self.sizes()
            .into_iter()
            .map(|n| {
                let pts = self
                    .points
                    .iter()
                    .filter(|p| p.n == n)
                    .map(|p| (p.t, p.gap * n as f64))
                    .collect();
                GapScalingCurve::new(n, pts, label)
            })
            .collect()
    }

    pub fn correlations(&self, n: usize) -> Vec<&ScanPoint> {
        self.points.iter().filter(|p| p.n == n).collect()
    }
}

/// Default probe pair: sites `0` and `N/2`.
pub fn default_pair(n: usize) -> (usize, usize) {
    (0, n / 2)
}

fn check_grid(sizes: &[usize], ts: &[f64]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("a gap scan needs at least two sizes".into()));
    }
    if ts.len() < 8 {
        return Err(Error::InvalidArgument(
            "a gap scan needs at least eight parameter values".into(),
        ));
    }
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("parameter values must be finite".into()));
    }
    Ok(())
}

/// Diagonalize `family(t, N)` for every size and parameter, collecting
/// failures instead of stopping at the first.
pub fn scan_family<F>(family: F, sizes: &[usize], ts: &[f64], opts: &EdOptions) -> Result<ScanOutcome>
where
    F: Fn(f64, usize) -> Result<SpinModel> + Sync,
{
    check_grid(sizes, ts)?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&n) = sizes.iter().find(|&&n| n < 4 || n % 2 == 1) {
        return Err(Error::InvalidArgument(format!(
            "sizes must be even and at least 4, got {n}"
        )));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(f64::total_cmp);
    let jobs: Vec<(usize, f64)> = sizes.iter().flat_map(|&n| ts.iter().map(move |&t| (n, t))).collect();
    let opts = EdOptions {
        k: opts.k.max(2),
        ..opts.clone()
    };
    let results: Vec<(usize, f64, Result<ScanPoint>)> = jobs
        .into_par_iter()
        .map(|(n, t)| {
            let run = || -> Result<ScanPoint> {
                let model = family(t, n)?;
                if model.n_sites() != n {
                    return Err(Error::InvalidArgument(format!(
                        "family returned {} sites for size {n}",
                        model.n_sites()
                    )));
                }
                let spec = lowest_eigenpairs(&model, &opts)?;
                let pair = default_pair(n);
                let gs = spec.ground_state();
                Ok(ScanPoint {
                    n,
                    t,
                    gap: spec.gap(),
                    czz: correlator(gs, Axis::Z, pair.0, pair.1, false)?,
                    cxx: correlator(gs, Axis::X, pair.0, pair.1, false)?,
                    pair,
                })
            };
            (n, t, run())
        })
        .collect();
    let mut out = ScanOutcome::default();
    for (n, t, r) in results {
        match r {
            Ok(p) => out.points.push(p),
            Err(error) => out.failures.push(ScanFailure { n, t, error }),
        }
    }
    Ok(out)
}

/// `Delta * N` curves of a model family; the first failing point aborts.
pub fn gap_scan<F>(
    family: F,
    sizes: &[usize],
    ts: &[f64],
    opts: &EdOptions,
    label: &str,
) -> Result<Vec<GapScalingCurve>>
where
    F: Fn(f64, usize) -> Result<SpinModel> + Sync,
{
    let mut out = scan_family(family, sizes, ts, opts)?;
    if !out.failures.is_empty() {
        let f = out.failures.swap_remove(0);
        return Err(Error::SweepPoint {
            d: f.t,
            source: Box::new(f.error),
        });
    }
    out.curves(label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// The curve difference changes sign between two grid points.
    SignChange,
    /// The curves approach within the touch tolerance without crossing.
    Touch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate {
    pub sizes: (usize, usize),
    pub t: f64,
    pub kind: EstimateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    /// Mean of the pair estimates.
    pub location: f64,
    /// Largest difference between two pair estimates.
    pub spread: f64,
    pub estimates: Vec<PairEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingCount {
    Single,
    Multiple,
}

impl fmt::Display for CrossingCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrossingCount::Single => "single crossing",
            CrossingCount::Multiple => "multiple crossings",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    /// Every pair estimate, including ones that did not gather enough support.
    pub estimates: Vec<PairEstimate>,
    pub label: CrossingCount,
}

impl CrossingReport {
    pub fn locations(&self) -> Vec<f64> {
        self.crossings.iter().map(|c| c.location).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair,t_cross,kind\n");
        for e in &self.estimates {
            let kind = match e.kind {
                EstimateKind::SignChange => "sign-change",
                EstimateKind::Touch => "touch",
            };
            s.push_str(&format!("{}-{},{},{}\n", e.sizes.0, e.sizes.1, fmt_f64(e.t), kind));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingOptions {
    /// Largest relative difference between the peaks of two curves that
    /// count as touching without crossing. Zero disables touch detection.
    pub touch_tol: f64,
    /// Touches are ignored where both curves are below this fraction of the
    /// overall maximum, where `Delta * N` is exponentially small.
    pub touch_floor: f64,
    /// Pair estimates closer than this many grid steps are merged.
    pub cluster_steps: f64,
    /// Fraction of size pairs that must contribute to a crossing.
    pub min_support: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self {
            touch_tol: 0.05,
            touch_floor: 0.1,
            cluster_steps: 2.0,
            min_support: 0.5,
        }
    }
}

impl CrossingOptions {
    /// Plain sign-change detection.
    pub fn strict() -> Self {
        Self {
            touch_tol: 0.0,
            ..Self::default()
        }
    }
}

fn pair_estimates(
    a: &GapScalingCurve,
    b: &GapScalingCurve,
    opts: &CrossingOptions,
    global_max: f64,
) -> Vec<PairEstimate> {
    let t: Vec<f64> = a.params();
    let fa: Vec<f64> = a.points.iter().map(|p| p.1).collect();
    let fb: Vec<f64> = b.points.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = fb.iter().zip(&fa).map(|(x, y)| x - y).collect();
    let sizes = (a.n, b.n);
    let mut out = Vec::new();
    for k in 0..t.len() - 1 {
        let (d0, d1) = (diff[k], diff[k + 1]);
        if d0 == 0.0 {
            if k == 0 || diff[k - 1] != 0.0 {
                out.push(PairEstimate {
                    sizes,
                    t: t[k],
                    kind: EstimateKind::SignChange,
                });
            }
        } else if d0 * d1 < 0.0 {
            let x = t[k] - d0 * (t[k + 1] - t[k]) / (d1 - d0);
            out.push(PairEstimate {
                sizes,
                t: x,
                kind: EstimateKind::SignChange,
            });
        }
    }
    if diff.last() == Some(&0.0) && diff.len() > 1 && diff[diff.len() - 2] != 0.0 {
        out.push(PairEstimate {
            sizes,
            t: t[t.len() - 1],
            kind: EstimateKind::SignChange,
        });
    }
    if opts.touch_tol > 0.0 {
        for pa in local_maxima(&fa) {
            let Some(pb) = local_maxima(&fb).into_iter().find(|&pb| pb.abs_diff(pa) <= 1) else {
                continue;
            };
            let lo = pa.min(pb).saturating_sub(1);
            let hi = (pa.max(pb) + 1).min(t.len() - 1);
            if (lo..hi).any(|k| diff[k] * diff[k + 1] <= 0.0) {
                continue;
            }
            let (ta, ya) = peak_apex(&t, &fa, pa);
            let (tb, yb) = peak_apex(&t, &fb, pb);
            let scale = 0.5 * (ya + yb);
            if scale > 0.0 && scale >= opts.touch_floor * global_max && (ya - yb).abs() <= opts.touch_tol * scale {
                out.push(PairEstimate {
                    sizes,
                    t: 0.5 * (ta + tb),
                    kind: EstimateKind::Touch,
                });
            }
        }
    }
    out
}

/// Locate the points where the `Delta * N` curves of different sizes meet.
pub fn find_crossing(curves: &[GapScalingCurve], opts: &CrossingOptions) -> Result<CrossingReport> {
    if curves.len() < 2 {
        return Err(Error::InvalidArgument(
            "crossing detection needs at least two curves".into(),
        ));
    }
    let grid = curves[0].params();
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("curves need at least three points".into()));
    }
    for c in &curves[1..] {
        let g = c.params();
        if g.len() != grid.len()
            || g.iter()
                .zip(&grid)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
        {
            return Err(Error::InvalidArgument("curves are not on a common grid".into()));
        }
    }
    let mut sorted: Vec<&GapScalingCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.n);
    let global_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1))
        .fold(0.0, f64::max);
    let mut estimates = Vec::new();
    let mut pairs = 0;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            pairs += 1;
            estimates.extend(pair_estimates(sorted[i], sorted[j], opts, global_max));
        }
    }
    estimates.sort_by(|a, b| a.t.total_cmp(&b.t));
    let step = median_step(&grid);
    let need = ((opts.min_support * pairs as f64).ceil() as usize).max(1);
    let mut crossings = Vec::new();
    let mut start = 0;
    while start < estimates.len() {
        let mut end = start + 1;
        while end < estimates.len() && estimates[end].t - estimates[end - 1].t <= opts.cluster_steps * step {
            end += 1;
        }
        let group = &estimates[start..end];
        let mut support: Vec<(usize, usize)> = group.iter().map(|e| e.sizes).collect();
        support.sort_unstable();
        support.dedup();
        if support.len() >= need {
            let location = group.iter().map(|e| e.t).sum::<f64>() / group.len() as f64;
            crossings.push(Crossing {
                location,
                spread: group[group.len() - 1].t - group[0].t,
                estimates: group.to_vec(),
            });
        }
        start = end;
    }
    let label = match crossings.len() {
        0 => {
            return Err(Error::NoCrossing(format!(
                "no crossing of the {} curves in [{}, {}]",
                curves.len(),
                grid[0],
                grid[grid.len() - 1]
            )))
        }
        1 => CrossingCount::Single,
        _ => CrossingCount::Multiple,
    };
    Ok(CrossingReport {
        crossings,
        estimates,
        label,
    })
}

fn local_maxima(f: &[f64]) -> Vec<usize> {
    (1..f.len() - 1)
        .filter(|&k| f[k] >= f[k - 1] && f[k] > f[k + 1])
        .collect()
}

/// Peak of a sampled curve, taken where the lines through the two samples on
/// either side meet. Falls back to the sample itself near the ends of the
/// grid or when the flanks do not bracket a peak.
fn peak_apex(t: &[f64], f: &[f64], k: usize) -> (f64, f64) {
    let q = if f[k - 1] > f[k + 1] { k - 1 } else { k };
    if q < 1 || q + 2 >= t.len() {
        return (t[k], f[k]);
    }
    let sl = (f[q] - f[q - 1]) / (t[q] - t[q - 1]);
    let sr = (f[q + 2] - f[q + 1]) / (t[q + 2] - t[q + 1]);
    if !(sl > 0.0 && sr < 0.0) {
        return (t[k], f[k]);
    }
    // f[q] + sl (x - t[q]) = f[q + 1] + sr (x - t[q + 1])
    let x = (f[q + 1] - f[q] + sl * t[q] - sr * t[q + 1]) / (sl - sr);
    let x = x.clamp(t[q], t[q + 1]);
    (x, f[q] + sl * (x - t[q]))
}

fn median_step(grid: &[f64]) -> f64 {
    let mut steps: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    steps[steps.len() / 2]
}

/// Parameter values where the staggered `zz` correlation equals the `xx`
/// correlation, by linear interpolation of their difference.
pub fn correlation_crossings(points: &[&ScanPoint]) -> Vec<f64> {
    let mut pts: Vec<&ScanPoint> = points.to_vec();
    pts.sort_by(|a, b| a.t.total_cmp(&b.t));
    let diff: Vec<f64> = pts.iter().map(|p| p.staggered_czz() - p.cxx).collect();
    let mut out = Vec::new();
    for k in 0..pts.len().saturating_sub(1) {
        let (d0, d1) = (diff[k], diff[k + 1]);
        if d0 == 0.0 && (k == 0 || diff[k - 1] != 0.0) {
            out.push(pts[k].t);
        } else if d0 * d1 < 0.0 {
            out.push(pts[k].t - d0 * (pts[k + 1].t - pts[k].t) / (d1 - d0));
        }
    }
    if let (Some(&last), true) = (diff.last(), diff.len() > 1) {
        if last == 0.0 && diff[diff.len() - 2] != 0.0 {
            out.push(pts[pts.len() - 1].t);
        }
    }
    out
}

/// First parameter value where `C_zz` (sign-corrected) meets `C_xx`.
pub fn correlation_crossover(points: &[&ScanPoint]) -> Result<f64> {
    if let Some(p) = points.first() {
        if p.n < 8 {
            return Err(Error::InvalidArgument(format!(
                "correlation crossover needs N >= 8, got {}",
                p.n
            )));
        }
    }
    correlation_crossings(points)
        .first()
        .copied()
        .ok_or_else(|| Error::NoCrossing("C_zz - C_xx keeps its sign over the scan".into()))
}

pub fn correlation_csv(points: &[&ScanPoint]) -> String {
    let mut s = String::from("N,t,Czz,Cxx,Czz_staggered\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.n,
            fmt_f64(p.t),
            fmt_f64(p.czz),
            fmt_f64(p.cxx),
            fmt_f64(p.staggered_czz())
        ));
    }
    s
}

pub fn gap_csv(curves: &[GapScalingCurve]) -> String {
    let mut s = String::from("N,t,Delta,DeltaN\n");
    for c in curves {
        for &(t, dn) in &c.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                c.n,
                fmt_f64(t),
                fmt_f64(dn / c.n as f64),
                fmt_f64(dn)
            ));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    ZAntiferromagnet,
    XFerromagnet,
    Undetermined,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::ZAntiferromagnet => "z-AFM",
            PhaseLabel::XFerromagnet => "x-FM",
            PhaseLabel::Undetermined => "undetermined",
        })
    }
}

pub const PHASE_MARGIN: f64 = 0.05;

/// Compare staggered `zz` against uniform `xx` order at the largest
/// separation on the ring.
pub fn classify_phase(state: &[Complex64], n_sites: usize, margin: f64) -> Result<PhaseLabel> {
    if n_sites < 2 || state.len() != 1 << n_sites {
        return Err(Error::InvalidArgument(
            "state does not match the number of sites".into(),
        ));
    }
    let pair = default_pair(n_sites);
    let zz = stagger(pair) * correlator(state, Axis::Z, pair.0, pair.1, false)?;
    let xx = correlator(state, Axis::X, pair.0, pair.1, false)?;
    Ok(if zz > xx + margin {
        PhaseLabel::ZAntiferromagnet
    } else if xx > zz + margin {
        PhaseLabel::XFerromagnet
    } else {
        PhaseLabel::Undetermined
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anharmonicity {
    /// `Ec / U`.
    pub ratio: f64,
    pub u: f64,
    pub ec: f64,
    /// Whether `Ec` exceeds `U` by at least an order of magnitude.
    pub protected: bool,
}

pub fn anharmonicity_ratio(sol: &SingleRingSolution, g: f64) -> Result<Anharmonicity> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interaction strength must be positive, got {g}"
        )));
    }
    let u = g * sol.u_over_g;
    let ratio = sol.ec / u;
    Ok(Anharmonicity {
        ratio,
        u,
        ec: sol.ec,
        protected: ratio >= 10.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::product_state;
    use crate::geometry::Boundary;
    use crate::ringsolver::single::{solve_single_ring, RadialGridSpec};

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn linear_family(ts: &[f64], sizes: &[usize]) -> Vec<GapScalingCurve> {
        sizes
            .iter()
            .map(|&n| {
                GapScalingCurve::new(
                    n,
                    ts.iter().map(|&t| (t, ((t - 0.3) * n as f64 + 1.0).max(0.0))).collect(),
                    "lin",
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn curve_validation() {
        assert!(GapScalingCurve::new(8, vec![(0.1, -1e-3)], "x").is_err());
        let c = GapScalingCurve::new(8, vec![(0.2, 1.0), (0.1, -1e-12)], "x").unwrap();
        assert_eq!(c.points, vec![(0.1, 0.0), (0.2, 1.0)]);
    }

    #[test]
    fn synthetic_linear_crossing_is_exact() {
        let ts = grid(0.25, 0.4, 16);
        let curves = linear_family(&ts, &[8, 10, 12]);
        let rep = find_crossing(&curves, &CrossingOptions::strict()).unwrap();
        assert_eq!(rep.label, CrossingCount::Single);
        assert!((rep.crossings[0].location - 0.3).abs() < 1e-12);
        assert!(rep.crossings[0].spread < 1e-12);
        assert_eq!(rep.crossings[0].estimates.len(), 3);
    }

    #[test]
    fn parallel_curves_do_not_cross() {
        let ts = grid(0.0, 1.0, 10);
        let curves: Vec<_> = [8, 12]
            .iter()
            .map(|&n| GapScalingCurve::new(n, ts.iter().map(|&t| (t, t + n as f64)).collect(), "p").unwrap())
            .collect();
        assert!(matches!(
            find_crossing(&curves, &CrossingOptions::default()),
            Err(Error::NoCrossing(_))
        ));
    }

    #[test]
    fn touching_curves_are_detected() {
        let ts = grid(0.0, 2.0, 21);
        let curves: Vec<_> = [(8usize, 1.0, 3.0), (12, 0.98, 5.0)]
            .iter()
            .map(|&(n, top, slope)| {
                GapScalingCurve::new(
                    n,
                    ts.iter()
                        .map(|&t| (t, top - slope * (t - 1.03f64).abs() + 6.0))
                        .collect(),
                    "cusp",
                )
                .unwrap()
            })
            .collect();
        assert!(find_crossing(&curves, &CrossingOptions::strict()).is_err());
        let rep = find_crossing(&curves, &CrossingOptions::default()).unwrap();
        assert_eq!(rep.crossings.len(), 1);
        assert!((rep.crossings[0].location - 1.03).abs() < 1e-9);
        assert_eq!(rep.crossings[0].estimates[0].kind, EstimateKind::Touch);
        let tight = CrossingOptions {
            touch_tol: 1e-4,
            ..Default::default()
        };
        assert!(find_crossing(&curves, &tight).is_err());
    }

    #[test]
    fn two_separate_crossings() {
        let ts = grid(0.0, 3.0, 31);
        let curves: Vec<_> = [8usize, 10, 12]
            .iter()
            .map(|&n| {
                GapScalingCurve::new(
                    n,
                    ts.iter()
                        .map(|&t| (t, 5.0 + (n as f64 - 10.0) * (t - 1.0) * (t - 2.0)))
                        .collect(),
                    "q",
                )
                .unwrap()
            })
            .collect();
        let rep = find_crossing(&curves, &CrossingOptions::strict()).unwrap();
        assert_eq!(rep.label, CrossingCount::Multiple);
        let loc = rep.locations();
        assert_eq!(loc.len(), 2);
        assert!((loc[0] - 1.0).abs() < 1e-9 && (loc[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GapScalingCurve::new(8, vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)], "a").unwrap();
        let b = GapScalingCurve::new(10, vec![(0.0, 1.0), (1.5, 2.0), (2.0, 3.0)], "b").unwrap();
        assert!(find_crossing(&[a.clone(), b], &CrossingOptions::default()).is_err());
        assert!(find_crossing(&[a], &CrossingOptions::default()).is_err());
    }

    #[test]
    fn ising_point_is_degenerate() {
        let ts = grid(0.5, 1.5, 8);
        let curves = gap_scan(
            |t, n| Ok(SpinModel::uniform_xyz(n, Boundary::Periodic, -t, 0.0, 0.0, 0.0)),
            &[4, 6],
            &ts,
            &EdOptions::default(),
            "ising",
        )
        .unwrap();
        for c in &curves {
            assert!(c.points.iter().all(|p| p.1.abs() < 1e-9));
        }
    }

    #[test]
    fn scan_preconditions() {
        let f = |_: f64, n: usize| Ok(SpinModel::uniform_xyz(n, Boundary::Periodic, 1.0, 1.0, 1.0, 0.0));
        let opts = EdOptions::default();
        assert!(scan_family(f, &[8], &grid(0.0, 1.0, 8), &opts).is_err());
        assert!(scan_family(f, &[8, 10], &grid(0.0, 1.0, 5), &opts).is_err());
        assert!(scan_family(f, &[8, 9], &grid(0.0, 1.0, 8), &opts).is_err());
        let bad = |t: f64, n: usize| {
            if t > 0.5 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(SpinModel::uniform_xyz(n, Boundary::Periodic, 1.0, 1.0, 1.0, 0.0))
            }
        };
        let out = scan_family(bad, &[4, 6], &grid(0.0, 1.0, 8), &opts).unwrap();
        assert_eq!(out.failures.len(), 8);
        assert_eq!(out.points.len(), 8);
        assert!(gap_scan(bad, &[4, 6], &grid(0.0, 1.0, 8), &opts, "x").is_err());
    }

    #[test]
    fn product_state_phases() {
        let n = 8;
        let neel: Vec<(Axis, bool)> = (0..n).map(|j| (Axis::Z, j % 2 == 0)).collect();
        assert_eq!(
            classify_phase(&product_state(&neel), n, PHASE_MARGIN).unwrap(),
            PhaseLabel::ZAntiferromagnet
        );
        let x: Vec<(Axis, bool)> = (0..n).map(|_| (Axis::X, true)).collect();
        assert_eq!(
            classify_phase(&product_state(&x), n, PHASE_MARGIN).unwrap(),
            PhaseLabel::XFerromagnet
        );
        let y: Vec<(Axis, bool)> = (0..n).map(|_| (Axis::Y, true)).collect();
        assert_eq!(
            classify_phase(&product_state(&y), n, PHASE_MARGIN).unwrap(),
            PhaseLabel::Undetermined
        );
        assert!(classify_phase(&product_state(&y), 6, PHASE_MARGIN).is_err());
    }

    #[test]
    fn correlation_crossing_interpolates() {
        let mk = |t: f64, czz: f64, cxx: f64| ScanPoint {
            n: 8,
            t,
            gap: 0.0,
            czz,
            cxx,
            pair: (0, 4),
        };
        let pts = [mk(0.0, 0.1, 0.5), mk(1.0, 0.3, 0.5), mk(2.0, 0.9, 0.5)];
        let refs: Vec<&ScanPoint> = pts.iter().collect();
        assert!((correlation_crossover(&refs).unwrap() - (1.0 + 0.2 / 0.6)).abs() < 1e-12);
        let flat = [mk(0.0, 0.1, 0.5), mk(1.0, 0.1, 0.5)];
        let refs: Vec<&ScanPoint> = flat.iter().collect();
        assert!(correlation_crossover(&refs).is_err());
    }

    #[test]
    fn anharmonicity_by_construction() {
        let sol = solve_single_ring(2.5, &RadialGridSpec::default()).unwrap();
        let g = sol.ec / (20.0 * sol.u_over_g);
        let a = anharmonicity_ratio(&sol, g).unwrap();
        assert!((a.ratio - 20.0).abs() < 1e-9 && a.protected);
        let a = anharmonicity_ratio(&sol, sol.ec / sol.u_over_g).unwrap();
        assert!((a.ratio - 1.0).abs() < 1e-12 && !a.protected);
        assert!(anharmonicity_ratio(&sol, 0.0).is_err());
    }

    #[test]
    fn csv_headers() {
        let ts = grid(0.25, 0.4, 8);
        let curves = linear_family(&ts, &[8, 10]);
        assert!(gap_csv(&curves).starts_with("N,t,Delta,DeltaN\n"));
        assert_eq!(gap_csv(&curves).lines().count(), 17);
        let rep = find_crossing(&curves, &CrossingOptions::strict()).unwrap();
        assert!(rep.to_csv().starts_with("pair,t_cross,kind\n8-10,"));
    }
}
