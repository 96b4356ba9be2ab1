//! Lagrangian mechanics on flat Cliffordian Kähler space.
//!
//! The configuration space is `R^{8n}` carrying three anticommuting
//! orthogonal structures `J1`, `J2`, `J3` with `J^2 = -I`, stored as
//! signed block permutations ([`geometry`]). A Lagrangian scalar field
//! ([`lagrangian`]) supplies exact first and second derivatives through
//! forward hyper-dual evaluation ([`autodiff`]); user-written Lagrangians
//! come in through a small expression language ([`parser`]). From the
//! Hessian, [`dynamics`] assembles the closed Kähler 2-form, solves the
//! dynamics equation for the semispray and derives the block
//! Euler-Lagrange systems; [`mod@integrate`] follows the resulting flow
//! with conservation diagnostics, and [`checks`] packages the whole
//! invariant suite for the command line.

pub mod autodiff;
pub mod checks;
pub mod dim;
pub mod dynamics;
pub mod geometry;
pub mod integrate;
pub mod lagrangian;
pub mod parser;

pub use dim::{BlockIndex, Dimension};
pub use dynamics::{
    el_residual, energy_differential, kahler_form, pairing_table, solve_semispray, ELPairingTable,
    KahlerForm,
};
pub use geometry::{
    fundamental_form, make_structure, metric_compatibility, verify_algebra, AlgebraReport,
    FundamentalForm, Metric, StructureLabel, StructureMatrix,
};
pub use integrate::{
    diagnose, integrate, integrator_by_name, DiagnosticsReport, Integrator, MechanicalSystem,
    Trajectory,
};
pub use lagrangian::{
    energy, liouville, vertical_derivation_form, vertical_differential, DifferentialForm,
    LagrangianField, SemisprayState,
};
