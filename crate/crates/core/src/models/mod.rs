//! Polynomial models built from sample sets.

mod basis;
mod fit;
mod quality;

pub use basis::{interpolation_matrix, poisedness_condition, Degree, MonomialBasis, SampleSet};
pub use fit::{
    interpolate, mfn_model, model_from_coefficients, regress, sparse_l1_model, sparse_l1_model_with, Fit,
    INTERPOLATION_RESIDUAL, POISEDNESS_LIMIT, SPARSE_RESIDUAL,
};
pub use quality::{
    cap_hessian, check_fully_linear, check_fully_linear_at, check_fully_quadratic, check_fully_quadratic_at,
    probe_offsets, QualityConstants, DEFAULT_PROBES,
};
