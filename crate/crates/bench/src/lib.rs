//! Fixtures shared by the benchmarks.

use ringmag::{assemble_general, Boundary, CouplingSet, RingGeometry, SpinModel};

/// Couplings of two R = 2.5 rings at d = 2, with U = 20 J3.
pub fn reference_couplings() -> CouplingSet {
    CouplingSet::injected(0.0039105, 0.0235783, 0.0326630, 20.0 * 0.0326630, 1)
}

/// Periodic two-site ladder of `n` rings at `Theta = theta_over_pi * pi`.
pub fn ladder(n: usize, theta_over_pi: f64) -> SpinModel {
    let geom = RingGeometry::two_site(2.5, 2.0, theta_over_pi, 1, n, Boundary::Periodic);
    assemble_general(&geom, &reference_couplings(), Default::default()).expect("valid ladder")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let m = ladder(8, 0.48);
        assert_eq!(m.n_sites(), 8);
        assert!(!m.is_real());
        assert!(ladder(8, 0.5).is_real());
    }
}
