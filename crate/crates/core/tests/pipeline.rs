//! Checks that cross module boundaries: continuum couplings into spin
//! models, Bose-Hubbard spectra against their spin reduction, and scans
//! into crossing estimates.

use proptest::prelude::*;
use ringmag::bosehubbard::{build_bose_hamiltonian, DEFAULT_DIMENSION_CAP};
use ringmag::ed::{product_state, rayleigh_quotient, SpinOperatorMatrix};
use ringmag::linalg::hermitian_eigen;
use ringmag::observables::{default_pair, GapScalingCurve, PHASE_MARGIN};
use ringmag::ringsolver::PlaneGridSpec;
use ringmag::{
    assemble_general, assemble_xyz, build_bonds, classify_phase, coupling_sweep, find_crossing, lowest_eigenpairs,
    scan_family, AssembleOptions, Axis, Boundary, CouplingSet, CrossingOptions, EdOptions, PhaseLabel, RingGeometry,
    SweepSpec,
};

fn sorted_levels(m: &ringmag::SpinModel) -> Vec<f64> {
    hermitian_eigen(SpinOperatorMatrix::new(m).unwrap().to_dense()).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // The 16 Mott levels of four rings follow the spin model up to a shift,
    // with an error of order J/U relative to the band.
    #[test]
    fn bose_hubbard_band_matches_spin_model(
        j1 in -0.01f64..0.01,
        j2 in 0.01f64..0.03,
        j3 in 0.01f64..0.03,
        theta in 0.36f64..0.64,
    ) {
        let c = CouplingSet::injected(j1, j2, j3, 20.0 * j2.max(j3), 1);
        let geom = RingGeometry::two_site(2.5, 2.0, theta, 1, 4, Boundary::Periodic);
        let table = build_bonds(&geom).unwrap();
        let bose = build_bose_hamiltonian(&table, &c, 4, DEFAULT_DIMENSION_CAP).unwrap().eigenvalues();
        let spin = sorted_levels(&assemble_general(&geom, &c, AssembleOptions::default()).unwrap());
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mb, ms) = (mean(&bose[..16]), mean(&spin));
        let width = spin[15] - spin[0];
        for (a, b) in bose[..16].iter().zip(&spin) {
            prop_assert!(((a - mb) - (b - ms)).abs() <= 0.25 * width);
        }
        // the band is well separated from the doublon states
        prop_assert!(bose[16] - bose[15] > 0.5 * c.u);
    }

    #[test]
    fn ground_energy_is_below_product_states(
        theta in 0.36f64..0.64,
        j1 in -0.02f64..0.02,
        j2 in 0.005f64..0.03,
        j3 in 0.005f64..0.03,
    ) {
        let c = CouplingSet::injected(j1, j2, j3, 20.0 * j2.max(j3), 1);
        let geom = RingGeometry::two_site(2.5, 2.0, theta, 1, 10, Boundary::Periodic);
        let m = assemble_general(&geom, &c, AssembleOptions::default()).unwrap();
        let e0 = lowest_eigenpairs(&m, &EdOptions::default()).unwrap().values[0];
        let op = SpinOperatorMatrix::new(&m).unwrap();
        let neel: Vec<(Axis, bool)> = (0..10).map(|j| (Axis::Z, j % 2 == 0)).collect();
        let x_up = vec![(Axis::X, true); 10];
        let x_down = vec![(Axis::X, false); 10];
        for trial in [neel, x_up, x_down] {
            prop_assert!(e0 <= rayleigh_quotient(&op, &product_state(&trial)) + 1e-12);
        }
    }

    #[test]
    fn linear_families_cross_exactly(
        t0 in 0.2f64..0.8,
        slopes in proptest::collection::vec(0.5f64..3.0, 3),
        offset in 11.0f64..12.0,
    ) {
        let ts: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let curves: Vec<GapScalingCurve> = slopes
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                // distinct slopes so every pair crosses at t0
                let s = s + k as f64;
                let pts = ts.iter().map(|&t| (t, offset + s * (t - t0))).collect();
                GapScalingCurve::new(4 + 2 * k, pts, "linear").unwrap()
            })
            .collect();
        let report = find_crossing(&curves, &CrossingOptions::default()).unwrap();
        prop_assert_eq!(report.crossings.len(), 1);
        prop_assert!((report.crossings[0].location - t0).abs() < 1e-12);
    }
}

#[test]
fn xyz_chain_is_scale_invariant_at_the_critical_ratio() {
    let r = std::f64::consts::SQRT_2;
    let family = |r: f64, n: usize| {
        let geom = RingGeometry::two_site(2.5, 2.0, 0.5, 1, n, Boundary::Periodic);
        assemble_xyz(
            &geom,
            &CouplingSet::injected(0.0, 1.0, r, 20.0 * r, 1),
            AssembleOptions::default(),
        )
    };
    let ts: Vec<f64> = (0..8).map(|i| r - 0.035 + 0.01 * i as f64).collect();
    let scan = scan_family(family, &[8, 10, 12], &ts, &EdOptions::default()).unwrap();
    assert!(scan.failures.is_empty());
    let at = |n: usize| {
        scan.points
            .iter()
            .filter(|p| p.n == n)
            .min_by(|a, b| (a.t - r).abs().total_cmp(&(b.t - r).abs()))
            .map(|p| p.gap * n as f64)
            .unwrap()
    };
    let vals = [at(8), at(10), at(12)];
    let mean = vals.iter().sum::<f64>() / 3.0;
    for v in vals {
        assert!((v - mean).abs() / mean < 0.05, "{vals:?}");
    }
}

#[test]
fn solved_couplings_order_the_chain() {
    let spec = SweepSpec {
        plane: PlaneGridSpec {
            spacing: 0.15,
            ..PlaneGridSpec::default()
        },
        ..SweepSpec::default()
    };
    let pts = coupling_sweep(2.5, &[1.5, 3.0], 1, &spec).unwrap();
    let n = 8;
    let labels: Vec<PhaseLabel> = pts
        .iter()
        .map(|(d, c)| {
            let c = c.with_u(20.0 * c.j3);
            let geom = RingGeometry::two_site(2.5, *d, 0.5, 1, n, Boundary::Periodic);
            let m = assemble_general(&geom, &c, AssembleOptions::default()).unwrap();
            let sol = lowest_eigenpairs(&m, &EdOptions::default()).unwrap();
            classify_phase(sol.ground_state(), n, PHASE_MARGIN).unwrap()
        })
        .collect();
    // Close rings favour the staggered z order; far apart, J3 ~ J2 and x wins.
    assert_eq!(labels, vec![PhaseLabel::ZAntiferromagnet, PhaseLabel::XFerromagnet]);
    assert_eq!(default_pair(n), (0, 4));
}
