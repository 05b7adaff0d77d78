//! The transition amplitude between square roots of two coherent states:
//!
//! ```text
//! (phi_{S,a}^{1/2} | phi_{T,b}^{1/2})
//!     = sqrt(det(2*sqrt(A*B)/(A+B))) * exp(-(A+B)^{-1}(a-b)/2)
//! ```
//!
//! with A = (S^{1/2}+S̄^{1/2})²/2 and B the analogue for T. The amplitude
//! depends on the shifts only through λ = α - β. Degenerate inputs are
//! routed through the reduction trichotomy; the disjoint branches yield 0
//! with a case tag naming the cause, and the determinant/exponent fields stay
//! honest diagnostics in every branch.

use crate::ccr::{reduce_pair, CoherentStateSpec, CovarianceForm, ReductionVerdict};
use crate::error::Result;
use crate::forms::{det_sqrt_ratio, half_sum_sqrt_form, inverse_form, PositiveForm};

/// Which branch of the degeneracy analysis produced the result. Checks run
/// in a fixed order — kernel mismatch, shift on kernel, quotient, determinant
/// singularity, exponent divergence — so the tag is deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    Generic,
    DisjointKernelMismatch,
    DisjointShiftOnKernel,
    DetSingular,
    ExponentInfinite,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::Generic => "generic",
            CaseTag::DisjointKernelMismatch => "disjoint_kernel_mismatch",
            CaseTag::DisjointShiftOnKernel => "disjoint_shift_on_kernel",
            CaseTag::DetSingular => "det_singular",
            CaseTag::ExponentInfinite => "exponent_infinite",
        }
    }
}

/// Amplitude value with its log-space breakdown and diagnostics.
#[derive(Clone, Debug)]
pub struct AmplitudeResult {
    /// The amplitude, in [0, 1].
    pub value: f64,
    /// log(value); -∞ when the amplitude vanishes.
    pub log_value: f64,
    /// det(2√(AB)/(A+B)) on the reduced space, in [0, 1].
    pub det_factor: f64,
    /// (A+B)⁻¹(α-β)/2 ≥ 0, possibly +∞.
    pub exponent: f64,
    pub case_tag: CaseTag,
}

fn assemble(log_det: f64, det_value: f64, exponent: f64) -> AmplitudeResult {
    if det_value == 0.0 {
        return AmplitudeResult {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            det_factor: 0.0,
            exponent,
            case_tag: CaseTag::DetSingular,
        };
    }
    if exponent.is_infinite() {
        return AmplitudeResult {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            det_factor: det_value,
            exponent,
            case_tag: CaseTag::ExponentInfinite,
        };
    }
    let log_value = (0.5 * log_det - exponent).min(0.0);
    AmplitudeResult {
        value: log_value.exp(),
        log_value,
        det_factor: det_value,
        exponent,
        case_tag: CaseTag::Generic,
    }
}

/// Determinant factor and exponent computed directly, with no reduction; used
/// for the diagnostics attached to the disjoint branches (the determinant
/// factor vanishes or the exponent diverges there of its own accord).
fn raw_pieces(
    s: &CovarianceForm,
    t: &CovarianceForm,
    lambda: &nalgebra::DVector<f64>,
) -> Result<(f64, f64)> {
    let a = half_sum_sqrt_form(s.form());
    let b = half_sum_sqrt_form(t.form());
    let det = det_sqrt_ratio(&a, &b)?;
    let q = a.add(&b)?;
    let inv = inverse_form(&q, lambda)?;
    Ok((det.value, 0.5 * inv.value))
}

/// The transition amplitude (φ_{S,α}^{1/2} | φ_{T,β}^{1/2}).
pub fn transition_amplitude(
    state_a: &CoherentStateSpec,
    state_b: &CoherentStateSpec,
) -> Result<AmplitudeResult> {
    let lambda = state_a.shift() - state_b.shift();
    let reduction = reduce_pair(state_a.covariance(), state_b.covariance(), &lambda)?;
    match reduction.verdict {
        ReductionVerdict::DisjointKernelMismatch | ReductionVerdict::DisjointShiftOnKernel => {
            let (det_value, exponent) =
                raw_pieces(state_a.covariance(), state_b.covariance(), &lambda)?;
            let case_tag = match reduction.verdict {
                ReductionVerdict::DisjointKernelMismatch => CaseTag::DisjointKernelMismatch,
                _ => CaseTag::DisjointShiftOnKernel,
            };
            Ok(AmplitudeResult {
                value: 0.0,
                log_value: f64::NEG_INFINITY,
                det_factor: det_value,
                exponent,
                case_tag,
            })
        }
        ReductionVerdict::Reducible => {
            let red = reduction
                .reduced
                .expect("reducible verdict carries quotient data");
            let a = half_sum_sqrt_form(red.s.form());
            let b = half_sum_sqrt_form(red.t.form());
            let det = det_sqrt_ratio(&a, &b)?;
            let q: PositiveForm = a.add(&b)?;
            let inv = inverse_form(&q, &red.shift)?;
            Ok(assemble(det.log_value, det.value, 0.5 * inv.value))
        }
    }
}

/// Amplitude between the quasifree states (zero shifts); the exponent is 0.
pub fn quasifree_amplitude(s: &CovarianceForm, t: &CovarianceForm) -> Result<AmplitudeResult> {
    let a = CoherentStateSpec::quasifree(s.clone());
    let b = CoherentStateSpec::quasifree(t.clone());
    transition_amplitude(&a, &b)
}

/// (φ_T^{1/2} | φ_S^{1/2}) - (φ_T^{1/2} | φ_{S,λ}^{1/2}) ≥ 0: shifting one
/// state can only decrease the overlap.
pub fn shift_monotonicity_gap(
    s: &CovarianceForm,
    t: &CovarianceForm,
    lambda: &nalgebra::DVector<f64>,
) -> Result<f64> {
    let unshifted = quasifree_amplitude(s, t)?;
    let shifted = transition_amplitude(
        &CoherentStateSpec::new(s.clone(), lambda.clone())?,
        &CoherentStateSpec::quasifree(t.clone()),
    )?;
    Ok(unshifted.value - shifted.value)
}
