//! Vora-Value evaluation and colorimetric filter design.
//!
//! The Vora-Value measures how close the subspace spanned by a camera's
//! spectral sensitivities is to the subspace spanned by the CIE colour
//! matching functions. Placing a transmissive filter `f` in front of the
//! camera changes its effective sensitivities to `diag(f) Q`; this crate
//! evaluates the filtered value, its analytic gradient and Hessian with
//! respect to `f`, and maximizes it over physically plausible filters with
//! projected gradient ascent or a regularized Newton method.
//!
//! Module map:
//!
//! - [`spectral`]: wavelength grids, CSV ingestion, resampling, sensor sets and filters
//! - [`projector`]: Gram-Schmidt orthonormalization and projector matrices
//! - [`vora`]: the Vora-Value, its filtered variant and the regularized objective
//! - [`calculus`]: analytic gradient/Hessian, smooth bases, finite-difference oracles
//! - [`optimizer`]: filter design loop and Newton steps
//! - [`cli`]: the `vora-filter` command line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod cli;
mod error;
pub mod optimizer;
pub mod projector;
pub mod spectral;
pub mod vora;

pub use calculus::{
    gradient, gradient_in_basis, hessian, hessian_in_basis, make_basis, BasisKind, BasisSet,
    BasisSpec, GradientVector, HessianMatrix,
};
pub use error::{Error, Result};
pub use optimizer::{
    newton_step, newton_step_closed_form, optimize, project_to_box, regularized_newton_step, Init,
    Method, OptimizationReport, OptimizerConfig, Termination,
};
pub use projector::{orthonormalize, projector, OrthonormalBasis, ProjectorMatrix};
pub use spectral::{
    cie1931_observer, gaussian_camera, load_filter, load_sensor_set, reference_camera,
    FilterSpectrum, SensorSet, WavelengthGrid,
};
pub use vora::{filtered_vora_value, regularized_objective, vora_value, VoraValue};
