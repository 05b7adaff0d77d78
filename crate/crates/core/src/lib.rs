//! Transition amplitudes between square roots of coherent states of CCR
//! algebras over finite-dimensional presymplectic spaces.
//!
//! The library is organized in layers. [`forms`] provides the algebra of
//! positive sesquilinear forms (conjugates, kernels, ratio operators, the
//! square-root mean form, determinant factors and inverse forms). [`ccr`]
//! adds presymplectic structure, covariance validation, coherent-state
//! specifications and kernel reduction. [`amplitude`] assembles the closed
//! formula
//!
//! ```text
//! (phi_{S,a}^{1/2} | phi_{T,b}^{1/2})
//!     = sqrt(det(2*sqrt(A*B)/(A+B))) * exp(-(A+B)^{-1}(a-b)/2)
//! ```
//!
//! with complete degenerate-case handling. [`oracle`] verifies the formula
//! independently by Gauss-Hermite quadrature, Monte Carlo integration and the
//! Gaussian Hellinger affinity. [`truncation`] studies convergence of the
//! determinant and exponent along nested finite truncations of larger
//! systems. [`sampling`] generates seeded random instances for tests and
//! experiments.

pub mod amplitude;
pub mod ccr;
pub mod error;
pub mod forms;
mod linalg;
pub mod oracle;
pub mod sampling;
pub mod truncation;

pub use amplitude::{
    quasifree_amplitude, shift_monotonicity_gap, transition_amplitude, AmplitudeResult, CaseTag,
};
pub use ccr::{
    gauge_shift, reduce_pair, validate_covariance, weyl_value, CoherentStateSpec, CovarianceForm,
    PresymplecticSpace, QuotientReduction, ReducedPair, ReductionVerdict,
};
pub use error::{Error, Result};
pub use forms::{
    conjugate_form, det_sqrt_ratio, half_sum_sqrt_form, inverse_form, kernel_basis,
    ratio_operator, DetFactor, InverseFormValue, PositiveForm, RatioOperator, DEFAULT_TOL,
};
pub use oracle::{
    hellinger_affinity, overlap_monte_carlo, overlap_quadrature, GaussHermite, GaussianMeasure,
    MonteCarloEstimate, OverlapIntegrand,
};
pub use truncation::{
    hs_indicator, nested_study, prefix_amplitudes, BlockDescriptor, Classification, ModeBlock,
    ModeSequence, NestedAmbient, NestedReport, TruncationConfig, TruncationReport, TruncationStep,
};
