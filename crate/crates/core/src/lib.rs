//! Spectra of one- and two-particle quantum graphs: secular-determinant scans,
//! two-particle Bethe-ansatz solvers, finite-difference oracles on planar
//! configuration domains and grand-canonical condensation analysis.

pub mod bethe;
pub mod error;
pub mod graph;
pub mod one_particle;
pub mod pde;
pub mod roots;
pub mod sparse;
pub mod thermo;

pub use error::{Error, Result};
pub use graph::{
    assemble_conditions, scale_graph, total_length, BoundaryConditions, CMatrix, Edge,
    MetricGraph, VertexConditionSpec,
};
pub use one_particle::{
    negative_spectrum, scan_spectrum, scattering_matrix, secular_value, weyl_fit,
    zero_mode_multiplicity, Eigenvalue, Scattering, SpectrumResult,
};
pub use bethe::{solve_gaudin, solve_graph_pair, solve_lieb_liniger_ring, BetheModel, BetheRoot, GraphZSpec};
pub use pde::{extrapolate, pencil_spectrum, DomainSpec, OracleResult, Profile, Sector};
pub use thermo::{
    fermi_free_energy, ground_state_limit, pair_condensation, solve_mu, surface_model, sweep_thermo,
    SurfaceModelSpec, SweepResult, ThermoState, Verdict,
};
