//! Charts, differential forms, vector fields and pointwise exterior calculus.

mod chart;
mod derivative;
mod field_eval;
mod form;
mod linalg;

pub use chart::{Chart, CoordKind, MAX_DIM};
pub use derivative::{exterior_derivative, exterior_derivative_at};
pub use field_eval::FieldEval;
pub use form::{basis, mask_indices, Coeff, DifferentialForm, Field, Form, FormValue, VectorField};
pub use linalg::{
    kernel_vector, numerical_rank, pointwise_solve, pullback_along_linear, pullback_value, refined,
    singular_values, LinearMap, PointSolution, MAX_CONDITION, RANK_CUTOFF,
};
