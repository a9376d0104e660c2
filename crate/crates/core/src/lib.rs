//! Orbital-angular-momentum bosons in ring-trap ladders: continuum tunnelling
//! amplitudes, the Bose-Hubbard model they define, its spin-1/2 reduction in
//! the Mott regime and exact diagonalization of the resulting chains.

pub mod bosehubbard;
pub mod ed;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod observables;
pub mod ringsolver;
pub mod spinmodel;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use bosehubbard::{
    build_bose_hamiltonian, compare_with_spin_model, effective_hamiltonian_numeric, mott_projector, pauli_decompose,
    BoseHamiltonian, FockSpace, OracleComparison, PauliDecomposition,
};
pub use ed::{lowest_eigenpairs, EdMethod, EdOptions, SpectrumResult, SpinOperatorMatrix};
pub use error::{Error, Result};
pub use geometry::{build_bonds, Bond, BondTable, BondTag, Boundary, CellKind, PhaseOrigin, RingGeometry};
pub use observables::{
    anharmonicity_ratio, classify_phase, correlation_crossover, find_crossing, gap_scan, scan_family, CrossingOptions,
    CrossingReport, GapScalingCurve, PhaseLabel,
};
pub use ringsolver::{coupling_sweep, extract_couplings, CouplingSet, SweepSpec, UPolicy};
pub use spinmodel::{
    assemble_general, assemble_staggered, assemble_xyz, assemble_xyz_field, AssembleOptions, Axis, CrossTermPolicy,
    SpinModel,
};
