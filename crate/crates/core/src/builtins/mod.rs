//! Built-in structures: torus bundles of hyperbolic toral automorphisms,
//! the unit cotangent model of the hyperbolic plane, and contactisations.

mod contact;
mod mcduff;
mod reeb;
mod torus;

pub use contact::{contactisation, contactisation_pdq};
pub use mcduff::{mcduff_chart, mcduff_model, Frame, McDuffModel, RELATIONS, RELATION_TOL};
pub use reeb::{reeb_field, ReebField};
pub use torus::{check_hyperbolic, det, torus_bundle, trace, TorusBundle};

use crate::error::{Error, Result};
use crate::lhs::{check_axioms, GridSpec, LHStructure};

/// The golden-mean matrix `[[2, 1], [1, 1]]`.
pub const CAT_MAP: [[i64; 2]; 2] = [[2, 1], [1, 1]];

/// Coarse grid used when constructors verify their own output.
pub(crate) fn verification_grid() -> GridSpec {
    GridSpec::new(6, 64, 0x7e57)
}

/// Run the axiom checks on the coarse grid and turn the first failure into
/// an error.
pub(crate) fn auto_verify(s: &LHStructure) -> Result<()> {
    let report = check_axioms(s, &verification_grid(), 1e-9)?;
    match report.checks.iter().find(|c| !c.pass) {
        None => Ok(()),
        Some(c) => Err(Error::AxiomViolation {
            axiom: match c.id.as_str() {
                "axiom1_rank" => 1,
                "axiom2_kernel_in_ker_eta" => 2,
                "axiom3_transverse" => 3,
                _ => 0,
            },
            point: c.worst_point.clone().unwrap_or_default(),
            detail: format!("{} (worst {:e})", c.id, c.worst_residual),
        }),
    }
}
