//! Presymplectic spaces, covariance forms, coherent-state specifications and
//! the kernel-reduction trichotomy that precedes amplitude evaluation.
//!
//! A covariance form S on (V, σ) is a Hermitian PSD form on the
//! complexification with S - S̄ = iσ, equivalently Im(M) = σ/2. The pair
//! (S, λ) of a covariance form and a real shift functional specifies the
//! coherent state with characteristic values e^{iλ(x)}·e^{-S(x,x)/2}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{real_kernel_split, PositiveForm};
use crate::linalg::{complex_cast, max_abs_entry};

/// Threshold on the Frobenius distance of kernel projectors under which two
/// kernels count as the same subspace (principal angles ≈ 0).
const KERNEL_MATCH_TOL: f64 = 1e-8;

/// A real vector space with an alternating bilinear form σ (possibly
/// degenerate). σ is stored exactly antisymmetrized.
#[derive(Clone, Debug)]
pub struct PresymplecticSpace {
    dim: usize,
    sigma: DMatrix<f64>,
}

impl PresymplecticSpace {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sigma.ncols(),
            });
        }
        let scale = max_abs_entry(&sigma).max(1.0);
        let deviation = max_abs_entry(&(&sigma + sigma.transpose()));
        if deviation > 1e-12 * scale {
            return Err(Error::NotAlternating { deviation });
        }
        // (σ - σᵀ)/2 is antisymmetric exactly, entry by entry.
        let sigma = (&sigma - sigma.transpose()).map(|x| 0.5 * x);
        Ok(Self { dim: n, sigma })
    }

    /// The classical (commutative) space: σ = 0.
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            sigma: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// A positive form satisfying the covariance condition for its space.
#[derive(Clone, Debug)]
pub struct CovarianceForm {
    space: PresymplecticSpace,
    form: PositiveForm,
}

/// Validates Hermitian positivity and the covariance condition
/// Im(M) = σ/2 (equivalently M - Mᵀ = iσ).
pub fn validate_covariance(
    space: &PresymplecticSpace,
    matrix: DMatrix<Complex64>,
    tol: f64,
) -> Result<CovarianceForm> {
    if matrix.nrows() != space.dim {
        return Err(Error::DimensionMismatch {
            expected: space.dim,
            got: matrix.nrows(),
        });
    }
    let form = PositiveForm::with_tol(matrix, tol)?;
    let scale = max_abs_entry(&space.sigma)
        .max(crate::linalg::max_abs_entry_c(form.matrix()))
        .max(1.0);
    let imag = form.matrix().map(|z| z.im);
    let deviation = max_abs_entry(&(imag - space.sigma.map(|x| 0.5 * x)));
    if deviation > tol.max(1e-12) * scale {
        return Err(Error::CovarianceMismatch { deviation });
    }
    Ok(CovarianceForm {
        space: space.clone(),
        form,
    })
}

impl CovarianceForm {
    pub fn space(&self) -> &PresymplecticSpace {
        &self.space
    }

    pub fn form(&self) -> &PositiveForm {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// S + S̄, as the real symmetric matrix 2·Re(M).
    pub fn conjugate_sum(&self) -> DMatrix<f64> {
        self.form.matrix().map(|z| 2.0 * z.re)
    }
}

/// A covariance form together with a real shift functional: the data of the
/// coherent state φ_{S,λ}.
#[derive(Clone, Debug)]
pub struct CoherentStateSpec {
    covariance: CovarianceForm,
    shift: DVector<f64>,
}

impl CoherentStateSpec {
    pub fn new(covariance: CovarianceForm, shift: DVector<f64>) -> Result<Self> {
        if shift.len() != covariance.dim() {
            return Err(Error::DimensionMismatch {
                expected: covariance.dim(),
                got: shift.len(),
            });
        }
        Ok(Self { covariance, shift })
    }

    /// The quasifree state: zero shift.
    pub fn quasifree(covariance: CovarianceForm) -> Self {
        let n = covariance.dim();
        Self {
            covariance,
            shift: DVector::zeros(n),
        }
    }

    pub fn covariance(&self) -> &CovarianceForm {
        &self.covariance
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }
}

/// Characteristic value e^{iλ(x)}·e^{-S(x,x)/2} of the state at x ∈ V. The
/// modulus never exceeds 1.
pub fn weyl_value(state: &CoherentStateSpec, x: &DVector<f64>) -> Complex64 {
    let s_xx = state.covariance.form().evaluate_real(x);
    let phase = state.shift.dot(x);
    Complex64::from_polar((-0.5 * s_xx).exp(), phase)
}

/// The gauge automorphism: replaces the shift by shift + μ, leaving the
/// covariance untouched. Composed shifts add.
pub fn gauge_shift(state: &CoherentStateSpec, mu: &DVector<f64>) -> Result<CoherentStateSpec> {
    if mu.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: mu.len(),
        });
    }
    Ok(CoherentStateSpec {
        covariance: state.covariance.clone(),
        shift: &state.shift + mu,
    })
}

/// Outcome classes of [`reduce_pair`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionVerdict {
    /// Kernels agree and the shift vanishes on them; the quotient data is
    /// available.
    Reducible,
    /// ker(S+S̄) ≠ ker(T+T̄): the states are disjoint and the amplitude is 0.
    DisjointKernelMismatch,
    /// Kernels agree but the shift is nonzero on them: point masses at
    /// different locations, amplitude 0.
    DisjointShiftOnKernel,
}

/// Quotient data for a reducible pair.
#[derive(Clone, Debug)]
pub struct ReducedPair {
    /// Matrix of the quotient map V → V′ (rows form an orthonormal basis of
    /// the complement of the common kernel). Identity when nothing is
    /// degenerate.
    pub projector: DMatrix<f64>,
    pub s: CovarianceForm,
    pub t: CovarianceForm,
    pub shift: DVector<f64>,
}

/// Result of the reduction trichotomy.
#[derive(Clone, Debug)]
pub struct QuotientReduction {
    pub verdict: ReductionVerdict,
    /// Present iff the verdict is [`ReductionVerdict::Reducible`].
    pub reduced: Option<ReducedPair>,
}

/// Decides among the three degeneracy branches for a pair of covariance
/// forms and the difference shift λ:
///
/// 1. ker(S+S̄) ≠ ker(T+T̄) → disjoint (kernel mismatch);
/// 2. kernels agree but λ is nonzero on them → disjoint (shifted supports);
/// 3. otherwise → reducible, with S, T, λ pushed to the quotient of V by the
///    common kernel. The quotient basis is the eigenbasis of S+S̄ on the
///    complement of its kernel; when the kernel is trivial the projector is
///    the identity and the forms are returned untouched.
pub fn reduce_pair(
    s: &CovarianceForm,
    t: &CovarianceForm,
    lambda: &DVector<f64>,
) -> Result<QuotientReduction> {
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: t.dim(),
        });
    }
    if lambda.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: lambda.len(),
        });
    }
    let sigma_dev = max_abs_entry(&(s.space.sigma() - t.space.sigma()));
    if sigma_dev > 1e-12 * max_abs_entry(s.space.sigma()).max(1.0) {
        return Err(Error::SpaceMismatch {
            deviation: sigma_dev,
        });
    }
    let tol = s.form.tol().max(t.form.tol());
    let rs = s.conjugate_sum();
    let rt = t.conjugate_sum();
    let (ker_s, compl_s, _) = real_kernel_split(&rs, s.form.tol());
    let (ker_t, _, _) = real_kernel_split(&rt, t.form.tol());

    if ker_s.ncols() != ker_t.ncols() {
        return Ok(QuotientReduction {
            verdict: ReductionVerdict::DisjointKernelMismatch,
            reduced: None,
        });
    }
    if ker_s.ncols() > 0 {
        let proj_s = &ker_s * ker_s.transpose();
        let proj_t = &ker_t * ker_t.transpose();
        if (proj_s - proj_t).norm() > KERNEL_MATCH_TOL {
            return Ok(QuotientReduction {
                verdict: ReductionVerdict::DisjointKernelMismatch,
                reduced: None,
            });
        }
        let on_kernel = (ker_s.transpose() * lambda).norm();
        if on_kernel > tol.max(1e-12) * lambda.norm() {
            return Ok(QuotientReduction {
                verdict: ReductionVerdict::DisjointShiftOnKernel,
                reduced: None,
            });
        }
    }

    if ker_s.ncols() == 0 {
        return Ok(QuotientReduction {
            verdict: ReductionVerdict::Reducible,
            reduced: Some(ReducedPair {
                projector: DMatrix::identity(s.dim(), s.dim()),
                s: s.clone(),
                t: t.clone(),
                shift: lambda.clone(),
            }),
        });
    }

    // Quotient by the common kernel: rows of P are the complement
    // eigenvectors of S+S̄, so P·Pᵀ = I on V′.
    let projector = compl_s.transpose();
    let sigma_red = {
        let pushed = &projector * s.space.sigma() * projector.transpose();
        // Exact antisymmetrization; the product is antisymmetric only up to
        // rounding in the summation order.
        (&pushed - pushed.transpose()).map(|x| 0.5 * x)
    };
    let space_red = PresymplecticSpace::new(sigma_red)?;
    let p_c = complex_cast(&projector);
    let m_s = &p_c * s.form.matrix() * p_c.adjoint();
    let m_t = &p_c * t.form.matrix() * p_c.adjoint();
    // The reduced forms must again be covariance forms for the pushed-forward
    // σ; this re-validates rather than assumes.
    let s_red = validate_covariance(&space_red, m_s, s.form.tol())?;
    let t_red = validate_covariance(&space_red, m_t, t.form.tol())?;
    let shift_red = &projector * lambda;
    Ok(QuotientReduction {
        verdict: ReductionVerdict::Reducible,
        reduced: Some(ReducedPair {
            projector,
            s: s_red,
            t: t_red,
            shift: shift_red,
        }),
    })
}
