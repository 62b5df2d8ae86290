//! Verification and computation toolkit for Liouville-Hamiltonian structures
//! `(M, η, β)` given by coordinate expressions.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: coefficient functions, parsing and forward-mode jets;
//! * [`calculus`]: charts, forms, fields, `d`, wedge, interior products and
//!   pointwise linear solves;
//! * [`lhs`]: the structure itself, its canonical vector fields, deformation
//!   type, normal changes and the closed-manifold integral scan;
//! * [`suspension`]: the Liouville domain `(M × [-ε, ε], η + sβ)`;
//! * [`dynamics`]: Liouville flow integration, orbit census, Lagrangian
//!   cylinders;
//! * [`builtins`]: torus-bundle, McDuff and contactisation models;
//! * [`obstructions`]: surface admissibility rules;
//! * [`report`]: serialisable verification records.
//!
//! Grid scans run through [`par`], which uses rayon when the `parallel`
//! feature is enabled and falls back to a plain loop otherwise.

pub mod builtins;
pub mod calculus;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod lhs;
pub mod obstructions;
pub mod par;
pub mod report;
pub mod suspension;

pub use error::{Error, Result};
