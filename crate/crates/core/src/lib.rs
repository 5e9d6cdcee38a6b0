//! Exact and numerical solutions of the bond-dissipative SSH Lindbladian.
//!
//! The chain carries fermions on alternating A/B sites with hoppings `t1`
//! (intra-cell) and `t2` (inter-cell). Each bond is subject to a pair of
//! linear loss/gain jump operators. In the Majorana representation the
//! dynamics reduce to an `n × n` real damping matrix and a source term, from
//! which spectra, steady states and covariance trajectories follow.

pub mod builder;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod steady;
pub mod topology;

pub use builder::{
    build_bloch, build_damping, build_heff, build_hs, build_real_space, sublattice_phases,
    BlochBlocks, DampingBlocks, EffectiveModel, RealSpaceMatrices,
};
pub use dynamics::{
    asymptotic_current, boundary_sensitivity, correlator, correlator_deviation,
    covariance_from_occupations, current, deviation, effective_dynamics, evolve_modesum, evolve_ode, initial_covariance, lifetime,
    lifetime_scan, occupation, polarization, trajectory, AsymptoticCurrent, BoundaryDivergence,
    EffectiveRun, Lifetime, LifetimeFit, Propagation, Trajectory,
};
pub use error::{Error, Result};
pub use exact::{
    mode_set, numeric_modes, obc_eigensystem, pbc_eigensystem, rapidities_closed_form,
    similarity_transform, Band, ModeLabel, ModeSet,
};
pub use linalg::{multiset_distance, numeric_spectrum, NumericSpectrum};
pub use model::{derive_rates, site_count, Boundary, ChainSpec, DerivedRates, InitialState};
pub use num_complex::Complex64;
pub use steady::{
    classify_ness, covariance_solvable, solve_sylvester, steady_covariance, steady_current,
    steady_occupation, Covariance, CurrentOscillation, NessClass, SteadyCurrent,
};
pub use topology::{
    classify_ep, gap_closed_form, skin_parameter, topological_regime, topology_report,
    winding_number, EpHit,
    GapReport, SkinParameters, TopologyReport,
};
