//! Conjugate cousins in S³ of upper-half unduloid patches, their Jacobi
//! fields, transplants and boundary classification.

pub mod boundary;
pub mod fields;
pub mod integrate;
pub mod verify;

pub use boundary::{classify_boundary, BoundaryClassification, BoundaryVerdict, CurveClassification};
pub use fields::{
    closed_form_cousin, cousin_field, even_odd_decompose, fit_left_translation, integrate_cousin_field,
    left_transplant, left_transplant_residual, tangential_cousin, transplant, transplant_residual,
    CousinFieldResult, FieldOnPatch, FieldSide,
};
pub use integrate::{integrate_cousin, CousinPatch, CousinSettings};
pub use verify::{boundary_image, gauge_fitted_distance, verify_cousin, CousinReport};
