//! Desk-scale study of amplitude behaviour along increasing finite
//! truncations: block sequences modelling infinite direct sums, and nested
//! restrictions of one ambient problem. Tracks the running determinant
//! factor, the running exponent, the Hilbert-Schmidt indicator that governs
//! whether the determinant limit stays positive, and the reference-operator
//! consistency check for the exponent.

use nalgebra::{DMatrix, DVector};

use crate::amplitude::transition_amplitude;
use crate::ccr::{validate_covariance, CoherentStateSpec, CovarianceForm, PresymplecticSpace};
use crate::error::{Error, Result};
use crate::forms::{half_sum_sqrt_form, inverse_form, PositiveForm};
use crate::linalg::{complex_cast, sym_eigen_sorted};
use num_complex::Complex64;

/// Closed-form description of a block, for analytic cross-checks.
#[derive(Clone, Copy, Debug)]
pub enum BlockDescriptor {
    /// One classical degree of freedom (σ = 0) with scalar covariances s, t
    /// and shift difference υ.
    ClassicalScalar { s: f64, t: f64, shift: f64 },
    /// One mode carrying the minimal covariance form on both sides and a
    /// shift difference of squared norm ‖λ‖².
    MinimalShift { shift_norm_sq: f64 },
}

impl BlockDescriptor {
    /// log det(2√(AB)/(A+B)) of the block.
    pub fn log_det_factor(&self) -> f64 {
        match *self {
            BlockDescriptor::ClassicalScalar { s, t, .. } => {
                (2.0 * (s * t).sqrt() / (s + t)).ln()
            }
            BlockDescriptor::MinimalShift { .. } => 0.0,
        }
    }

    /// (A+B)⁻¹(λ)/2 of the block.
    pub fn exponent(&self) -> f64 {
        match *self {
            BlockDescriptor::ClassicalScalar { s, t, shift } => shift * shift / (4.0 * (s + t)),
            BlockDescriptor::MinimalShift { shift_norm_sq } => 0.5 * shift_norm_sq,
        }
    }

    /// log of the block amplitude, (1/2)·log det - exponent.
    pub fn log_amplitude(&self) -> f64 {
        0.5 * self.log_det_factor() - self.exponent()
    }
}

/// One factor of a block-diagonal model: a space, two covariance forms and a
/// shift difference, with an optional closed-form descriptor.
#[derive(Clone, Debug)]
pub struct ModeBlock {
    space: PresymplecticSpace,
    s: CovarianceForm,
    t: CovarianceForm,
    shift: DVector<f64>,
    descriptor: Option<BlockDescriptor>,
}

impl ModeBlock {
    pub fn new(
        s: CovarianceForm,
        t: CovarianceForm,
        shift: DVector<f64>,
        descriptor: Option<BlockDescriptor>,
    ) -> Result<Self> {
        if s.dim() != t.dim() || shift.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: shift.len(),
            });
        }
        Ok(Self {
            space: s.space().clone(),
            s,
            t,
            shift,
            descriptor,
        })
    }

    /// A classical scalar block: σ = 0, covariances (s) and (t), shift υ.
    pub fn classical(s: f64, t: f64, shift: f64) -> Result<Self> {
        let space = PresymplecticSpace::trivial(1);
        let ms = DMatrix::from_element(1, 1, Complex64::new(s, 0.0));
        let mt = DMatrix::from_element(1, 1, Complex64::new(t, 0.0));
        let s_form = validate_covariance(&space, ms, crate::forms::DEFAULT_TOL)?;
        let t_form = validate_covariance(&space, mt, crate::forms::DEFAULT_TOL)?;
        Self::new(
            s_form,
            t_form,
            DVector::from_element(1, shift),
            Some(BlockDescriptor::ClassicalScalar { s, t, shift }),
        )
    }

    /// One mode with the minimal (vacuum) covariance form on both sides and
    /// the given shift difference in R².
    pub fn minimal(shift: DVector<f64>) -> Result<Self> {
        if shift.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: shift.len(),
            });
        }
        let space = PresymplecticSpace::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))?;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.0, -0.5),
                Complex64::new(0.5, 0.0),
            ],
        );
        let s_form = validate_covariance(&space, m.clone(), crate::forms::DEFAULT_TOL)?;
        let t_form = validate_covariance(&space, m, crate::forms::DEFAULT_TOL)?;
        let norm_sq = shift.norm_squared();
        Self::new(
            s_form,
            t_form,
            shift,
            Some(BlockDescriptor::MinimalShift {
                shift_norm_sq: norm_sq,
            }),
        )
    }

    pub fn space(&self) -> &PresymplecticSpace {
        &self.space
    }

    pub fn s(&self) -> &CovarianceForm {
        &self.s
    }

    pub fn t(&self) -> &CovarianceForm {
        &self.t
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn descriptor(&self) -> Option<&BlockDescriptor> {
        self.descriptor.as_ref()
    }
}

/// An ordered list of independent blocks modelling V = ⊕ₖ Vₖ; the amplitude
/// over a prefix is the product of the block amplitudes.
#[derive(Clone, Debug)]
pub struct ModeSequence {
    blocks: Vec<ModeBlock>,
}

impl ModeSequence {
    pub fn new(blocks: Vec<ModeBlock>) -> Self {
        Self { blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[ModeBlock] {
        &self.blocks
    }
}

/// Thresholds for classifying a truncation run.
#[derive(Clone, Copy, Debug)]
pub struct TruncationConfig {
    /// A partial-sum series counts as settled when its variation over the
    /// last quarter of steps stays below this.
    pub cauchy_tol: f64,
    /// Exponent partial sums above this (still trending up) are reported as
    /// an unbounded shift.
    pub exponent_threshold: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            cauchy_tol: 1e-8,
            exponent_threshold: 1e6,
        }
    }
}

/// Verdict over a truncation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// Both the log-determinant and the exponent series settled: the limit
    /// amplitude is positive.
    ConvergedPositive,
    /// The log-determinant series keeps falling: the determinant factor
    /// tends to zero.
    VanishingDet,
    /// The exponent series keeps growing (or exceeded the threshold while
    /// still rising): the shift is unbounded for the limit form.
    DivergingExponent,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ConvergedPositive => "converged_positive",
            Classification::VanishingDet => "vanishing_det",
            Classification::DivergingExponent => "diverging_exponent",
        }
    }
}

/// State of the truncated problem after `step` blocks (or at restriction
/// size `step` for nested studies).
#[derive(Clone, Copy, Debug)]
pub struct TruncationStep {
    pub step: usize,
    /// log det(2√(AₙBₙ)/(Aₙ+Bₙ)) of the truncated problem.
    pub log_det_partial: f64,
    /// (Aₙ+Bₙ)⁻¹(λₙ)/2 of the truncated problem.
    pub exponent_partial: f64,
    /// Amplitude of the truncated problem, in [0, 1].
    pub amplitude: f64,
    /// Hilbert-Schmidt indicator: for sequences, the running sum of
    /// ‖A/R - B/R‖²_HS over blocks; for nested studies, the indicator of the
    /// current restriction.
    pub hs_partial: f64,
}

/// The full record of a truncation run.
#[derive(Clone, Debug)]
pub struct TruncationReport {
    pub steps: Vec<TruncationStep>,
    pub classification: Classification,
    /// Variation of the log-det partial sums over the last quarter of steps.
    pub det_tail_variation: f64,
    /// Variation of the exponent partial sums over the last quarter.
    pub exponent_tail_variation: f64,
    /// True when the final exponent exceeded the configured threshold while
    /// still trending upward.
    pub exponent_exceeded_threshold: bool,
    pub cauchy_tol: f64,
    pub exponent_threshold: f64,
}

impl TruncationReport {
    pub fn final_amplitude(&self) -> f64 {
        self.steps.last().map_or(1.0, |s| s.amplitude)
    }
}

fn classify(
    log_det: &[f64],
    exponent: &[f64],
    config: &TruncationConfig,
) -> (Classification, f64, f64, bool) {
    let len = log_det.len();
    if len == 0 {
        return (Classification::ConvergedPositive, 0.0, 0.0, false);
    }
    let window_start = len - (len / 4).max(1).min(len);
    let span = |series: &[f64]| -> f64 {
        let window = &series[window_start..];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in window {
            if v.is_infinite() || v.is_nan() {
                return f64::INFINITY;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    };
    let det_var = span(log_det);
    let exp_var = span(exponent);
    let exceeded = exponent[len - 1] > config.exponent_threshold
        && exponent[len - 1] >= exponent[window_start];
    let classification = if det_var > config.cauchy_tol {
        Classification::VanishingDet
    } else if exp_var > config.cauchy_tol || exceeded {
        Classification::DivergingExponent
    } else {
        Classification::ConvergedPositive
    };
    (classification, det_var, exp_var, exceeded)
}

/// ‖A/R - B/R‖²_HS in the geometry of the block reference R = S+S̄+T+T̄:
/// the squared Frobenius norm of the whitened difference.
fn hs_block(s: &CovarianceForm, t: &CovarianceForm) -> Result<f64> {
    let tol = s.form().tol().max(t.form().tol());
    let r = PositiveForm::from_real(&s.conjugate_sum() + t.conjugate_sum(), tol)?;
    let a = half_sum_sqrt_form(s.form());
    let b = half_sum_sqrt_form(t.form());
    let diff = a.matrix() - b.matrix();
    // Whitened difference W†(M_A - M_B)W via the ratio machinery's split.
    let (values, vectors) = crate::linalg::herm_eigen_sorted(r.matrix());
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol * largest;
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > threshold)
        .collect();
    let mut w = DMatrix::zeros(r.dim(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let scale = Complex64::new(values[i].sqrt().recip(), 0.0);
        w.set_column(j, &(vectors.column(i) * scale));
    }
    let whitened = w.adjoint() * diff * w;
    Ok(whitened.norm_squared())
}

/// Amplitudes, determinant factors, exponents and HS indicators over the
/// prefixes of a block sequence. The amplitude over the first k blocks is
/// the product of the block amplitudes, accumulated in log space.
pub fn prefix_amplitudes(
    seq: &ModeSequence,
    upto: usize,
    config: &TruncationConfig,
) -> Result<TruncationReport> {
    assert!(
        upto <= seq.len(),
        "prefix length {upto} exceeds sequence length {}",
        seq.len()
    );
    let mut steps = Vec::with_capacity(upto);
    let mut log_det = 0.0f64;
    let mut exponent = 0.0f64;
    let mut hs = 0.0f64;
    for (k, block) in seq.blocks()[..upto].iter().enumerate() {
        let a = CoherentStateSpec::new(block.s.clone(), block.shift.clone())?;
        let b = CoherentStateSpec::quasifree(block.t.clone());
        let result = transition_amplitude(&a, &b)?;
        log_det += result.det_factor.ln();
        exponent += result.exponent;
        hs += hs_block(&block.s, &block.t)?;
        let log_amp = 0.5 * log_det - exponent;
        steps.push(TruncationStep {
            step: k + 1,
            log_det_partial: log_det,
            exponent_partial: exponent,
            amplitude: if log_amp.is_nan() { 0.0 } else { log_amp.min(0.0).exp() },
            hs_partial: hs,
        });
    }
    let log_det_series: Vec<f64> = steps.iter().map(|s| s.log_det_partial).collect();
    let exp_series: Vec<f64> = steps.iter().map(|s| s.exponent_partial).collect();
    let (classification, det_var, exp_var, exceeded) =
        classify(&log_det_series, &exp_series, config);
    Ok(TruncationReport {
        steps,
        classification,
        det_tail_variation: det_var,
        exponent_tail_variation: exp_var,
        exponent_exceeded_threshold: exceeded,
        cauchy_tol: config.cauchy_tol,
        exponent_threshold: config.exponent_threshold,
    })
}

/// Running partial sums of the Hilbert-Schmidt indicator ‖A/R - B/R‖²_HS
/// over the blocks of a sequence. Bounded partial sums witness
/// HS-equivalence of the limiting pair; divergence witnesses its failure and
/// travels with the vanishing of the determinant product.
pub fn hs_indicator(seq: &ModeSequence, upto: usize) -> Result<Vec<f64>> {
    assert!(upto <= seq.len());
    let mut out = Vec::with_capacity(upto);
    let mut acc = 0.0;
    for block in &seq.blocks()[..upto] {
        acc += hs_block(&block.s, &block.t)?;
        out.push(acc);
    }
    Ok(out)
}

/// One ambient problem of dimension N together with the nested family
/// Vₙ = span(e₁, …, eₙ): the data for a restriction study.
#[derive(Clone, Debug)]
pub struct NestedAmbient {
    s: CovarianceForm,
    t: CovarianceForm,
    shift: DVector<f64>,
}

impl NestedAmbient {
    pub fn new(s: CovarianceForm, t: CovarianceForm, shift: DVector<f64>) -> Result<Self> {
        if s.dim() != t.dim() || shift.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: shift.len(),
            });
        }
        Ok(Self { s, t, shift })
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn s(&self) -> &CovarianceForm {
        &self.s
    }

    pub fn t(&self) -> &CovarianceForm {
        &self.t
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }
}

/// Nested-study output: the truncation report plus the reference-operator
/// diagnostics.
#[derive(Clone, Debug)]
pub struct NestedReport {
    pub truncation: TruncationReport,
    /// (min, max) of the spectrum of Cₙ at each step; always inside [1, 2].
    pub c_spectrum_bounds: Vec<(f64, f64)>,
    /// Exponent recovered through the ambient reference geometry:
    /// R(xₙ, Cₙxₙ) with Cₙ = 1 - gₙ + gₙ(2Aₙ/Rₙ)gₙ + gₙ(2Bₙ/Rₙ)gₙ.
    pub reference_exponents: Vec<f64>,
    /// Exponent computed directly as (Aₙ+Bₙ)⁻¹(λₙ)/2 on the restriction.
    pub direct_exponents: Vec<f64>,
    /// Amplitude of the full ambient problem (the n = N target).
    pub ambient_amplitude: f64,
}

/// Restriction study: for each n ≤ N, restricts S, T and λ to Vₙ, recomputes
/// Aₙ, Bₙ from the restrictions, and records determinant factor, exponent
/// and amplitude. The exponent is recovered a second time through the
/// operator Cₙ in the geometry of the ambient reference R = S+S̄+T+T̄ (whose
/// spectrum is confined to [1, 2] and asserted to be), via the solution xₙ of
/// R(xₙ, Cₙx) = λ(x) on Vₙ.
pub fn nested_study(problem: &NestedAmbient, config: &TruncationConfig) -> Result<NestedReport> {
    let n_total = problem.dim();
    let tol = problem.s.form().tol().max(problem.t.form().tol());
    let r_ambient = problem.s.conjugate_sum() + problem.t.conjugate_sum();

    // In-order R-Gram-Schmidt of e₁, …, e_N. Pivoting would reorder the
    // basis and destroy the nesting Vₙ = span(q₁, …, qₙ), so a breakdown is
    // reported as a singular step instead.
    let (r_values, _) = sym_eigen_sorted(&r_ambient);
    let r_largest = r_values.last().copied().unwrap_or(0.0).max(0.0);
    if n_total > 0 && r_largest == 0.0 {
        return Err(Error::SingularStep { step: 0 });
    }
    let mut q = DMatrix::<f64>::zeros(n_total, n_total);
    for j in 0..n_total {
        let mut v = DVector::<f64>::zeros(n_total);
        v[j] = 1.0;
        for i in 0..j {
            let qi = q.column(i);
            let coeff = (qi.transpose() * &r_ambient * &v)[(0, 0)];
            v -= qi * coeff;
        }
        let norm_sq = (v.transpose() * &r_ambient * &v)[(0, 0)];
        if norm_sq <= tol * r_largest * v.norm_squared().max(1.0) {
            return Err(Error::SingularStep { step: j + 1 });
        }
        q.set_column(j, &(v / norm_sq.sqrt()));
    }

    let lambda_tilde_full = q.transpose() * &problem.shift;

    let mut steps = Vec::with_capacity(n_total);
    let mut c_bounds = Vec::with_capacity(n_total);
    let mut reference_exponents = Vec::with_capacity(n_total);
    let mut direct_exponents = Vec::with_capacity(n_total);

    for n in 1..=n_total {
        // Literal restrictions to Vₙ.
        let sigma_n = problem.s.space().sigma().view((0, 0), (n, n)).into_owned();
        let space_n = PresymplecticSpace::new(sigma_n)?;
        let ms_n = problem.s.form().matrix().view((0, 0), (n, n)).into_owned();
        let mt_n = problem.t.form().matrix().view((0, 0), (n, n)).into_owned();
        let s_n = validate_covariance(&space_n, ms_n, problem.s.form().tol())?;
        let t_n = validate_covariance(&space_n, mt_n, problem.t.form().tol())?;
        let lambda_n = problem.shift.rows(0, n).into_owned();

        let a_n = half_sum_sqrt_form(s_n.form());
        let b_n = half_sum_sqrt_form(t_n.form());
        let det = crate::forms::det_sqrt_ratio(&a_n, &b_n)?;
        let q_form = a_n.add(&b_n)?;
        let inv = inverse_form(&q_form, &lambda_n)?;
        let exponent = 0.5 * inv.value;
        direct_exponents.push(exponent);

        // The reference route. In q-coordinates R̃ = I, the R-orthogonal
        // projection gₙ is the coordinate projection, and
        // C̃ₙ = (2Ãₙ+2B̃ₙ) ⊕ I on Vₙ ⊕ Vₙ^⊥. Aₙ here is recomputed from the
        // restriction, expressed over q₁, …, qₙ through the triangular basis
        // change.
        let qn = q.view((0, 0), (n, n)).into_owned();
        let qn_c = complex_cast(&qn);
        let a_tilde = {
            let m = qn_c.adjoint() * a_n.matrix() * &qn_c;
            m.map(|z| z.re)
        };
        let b_tilde = {
            let m = qn_c.adjoint() * b_n.matrix() * &qn_c;
            m.map(|z| z.re)
        };
        let c_block = (&a_tilde + &b_tilde).map(|x| 2.0 * x);
        let (c_values, _) = sym_eigen_sorted(&c_block);
        let mut c_min = c_values.first().copied().unwrap_or(1.0);
        let mut c_max = c_values.last().copied().unwrap_or(1.0);
        if n < n_total {
            c_min = c_min.min(1.0);
            c_max = c_max.max(1.0);
        }
        assert!(
            c_min >= 1.0 - 1e-10 && c_max <= 2.0 + 1e-10,
            "spectrum of C_n must lie in [1, 2], got [{c_min}, {c_max}] at step {n}"
        );
        c_bounds.push((c_min, c_max));

        let lambda_tilde = lambda_tilde_full.rows(0, n).into_owned();
        let x_tilde = c_block
            .clone()
            .cholesky()
            .ok_or(Error::SingularStep { step: n })?
            .solve(&lambda_tilde);
        reference_exponents.push(lambda_tilde.dot(&x_tilde));

        let log_amp = 0.5 * det.log_value - exponent;
        steps.push(TruncationStep {
            step: n,
            log_det_partial: det.log_value,
            exponent_partial: exponent,
            amplitude: if log_amp.is_nan() { 0.0 } else { log_amp.min(0.0).exp() },
            hs_partial: (&a_tilde - &b_tilde).norm_squared(),
        });
    }

    let log_det_series: Vec<f64> = steps.iter().map(|s| s.log_det_partial).collect();
    let exp_series: Vec<f64> = steps.iter().map(|s| s.exponent_partial).collect();
    let (classification, det_var, exp_var, exceeded) =
        classify(&log_det_series, &exp_series, config);

    let ambient_amplitude = transition_amplitude(
        &CoherentStateSpec::new(problem.s.clone(), problem.shift.clone())?,
        &CoherentStateSpec::quasifree(problem.t.clone()),
    )?
    .value;

    Ok(NestedReport {
        truncation: TruncationReport {
            steps,
            classification,
            det_tail_variation: det_var,
            exponent_tail_variation: exp_var,
            exponent_exceeded_threshold: exceeded,
            cauchy_tol: config.cauchy_tol,
            exponent_threshold: config.exponent_threshold,
        },
        c_spectrum_bounds: c_bounds,
        reference_exponents,
        direct_exponents,
        ambient_amplitude,
    })
}
