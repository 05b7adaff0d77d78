//! Positive sesquilinear forms on the complexification of a real vector
//! space, and the operator calculus built on them: conjugate forms, kernels,
//! ratio operators, the square-root mean form A = (S^{1/2}+S̄^{1/2})²/2,
//! determinant factors det(2√(AB)/(A+B)) and inverse forms Q⁻¹(α).
//!
//! Conventions: forms are conjugate-linear in the first argument. A form F is
//! stored as the Hermitian matrix M with F(x, y) = x†My in the standard
//! basis; complex conjugation on the complexification is entrywise, so the
//! matrix of F̄ is the entrywise conjugate of M (equivalently Mᵀ).
//!
//! Every operation that divides by a reference form works on the quotient by
//! the kernel of that reference and extends by zero, so degenerate inputs
//! never need special-casing by callers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_vector, herm_eigen_sorted, hermitize, max_abs_entry_c, sym_eigen_sorted,
};

/// Default relative tolerance for rank and positivity decisions. Thresholds
/// scale with the largest eigenvalue of the form at hand.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A Hermitian positive-semidefinite sesquilinear form.
///
/// Eigenvalues in `[-tol·λ_max, 0)` are treated as zero; anything below that
/// fails construction.
#[derive(Clone, Debug)]
pub struct PositiveForm {
    dim: usize,
    matrix: DMatrix<Complex64>,
    tol: f64,
}

impl PositiveForm {
    /// Validates and stores a form with the default tolerance.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tol(matrix, DEFAULT_TOL)
    }

    /// Validates Hermitian-ness and positive semidefiniteness, re-Hermitizes,
    /// and stores the form. `tol` is dimensionless and relative.
    pub fn with_tol(matrix: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.ncols(),
            });
        }
        if n == 0 {
            return Ok(Self {
                dim: 0,
                matrix,
                tol,
            });
        }
        let scale = max_abs_entry_c(&matrix).max(1.0);
        let deviation = max_abs_entry_c(&(&matrix - matrix.adjoint()));
        if deviation > tol.max(1e-12) * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = hermitize(&matrix);
        let (values, _) = herm_eigen_sorted(&matrix);
        let largest = values.last().copied().unwrap_or(0.0).max(0.0);
        let threshold = tol * largest;
        if values[0] < -threshold {
            return Err(Error::NotPsd {
                eigenvalue: values[0],
                tol: threshold,
            });
        }
        Ok(Self {
            dim: n,
            matrix,
            tol,
        })
    }

    /// A real symmetric PSD matrix as a form on the complexification.
    pub fn from_real(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        Self::with_tol(crate::linalg::complex_cast(&matrix), tol)
    }

    /// The zero form.
    pub fn zero(dim: usize, tol: f64) -> Self {
        Self {
            dim,
            matrix: DMatrix::zeros(dim, dim),
            tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// F(x, y) = x†My.
    pub fn evaluate(&self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
        (x.adjoint() * &self.matrix * y)[(0, 0)]
    }

    /// F(x, x) for a real vector x; equals xᵀ·Re(M)·x and is always real.
    pub fn evaluate_real(&self, x: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.matrix[(i, j)].re * x[j];
            }
        }
        acc
    }

    /// The restriction to real arguments: Re(M), a real symmetric PSD matrix.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }

    /// Pointwise sum A + B of two forms on the same space.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
            tol: self.tol.max(other.tol),
        })
    }

    /// Scales by a nonnegative constant.
    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0, "scaling a positive form requires c >= 0");
        Self {
            dim: self.dim,
            matrix: self.matrix.map(|z| c * z),
            tol: self.tol,
        }
    }
}

/// F̄(x, y) = conj(F(ȳ, x̄)); the matrix is the entrywise conjugate of M.
pub fn conjugate_form(f: &PositiveForm) -> PositiveForm {
    PositiveForm {
        dim: f.dim,
        matrix: f.matrix.map(|z| z.conj()),
        tol: f.tol,
    }
}

/// Orthonormal basis of the kernel: eigenvectors whose eigenvalue is at most
/// `tol` times the largest eigenvalue. Empty for a nondegenerate form.
pub fn kernel_basis(f: &PositiveForm) -> Vec<DVector<Complex64>> {
    if f.dim == 0 {
        return Vec::new();
    }
    let (values, vectors) = herm_eigen_sorted(&f.matrix);
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = f.tol * largest;
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= threshold)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect()
}

/// Spectral split of a Hermitian PSD matrix into kernel and complement,
/// relative to `tol` times the largest eigenvalue.
struct Splitting {
    /// Orthonormal eigenvectors spanning the complement of the kernel (n×r).
    range: DMatrix<Complex64>,
    /// Their eigenvalues, ascending, all above the threshold.
    values: Vec<f64>,
    /// Orthonormal kernel eigenvectors (n×k).
    kernel: DMatrix<Complex64>,
}

impl Splitting {
    fn rank(&self) -> usize {
        self.values.len()
    }

    /// W = U_r·D_r^{-1/2}: maps quotient coordinates isometrically onto the
    /// complement, turning the reference form into the identity.
    fn whitener(&self) -> DMatrix<Complex64> {
        let mut w = self.range.clone();
        for (j, &d) in self.values.iter().enumerate() {
            let s = Complex64::new(d.sqrt().recip(), 0.0);
            w.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        w
    }
}

fn split_spectrum(m: &DMatrix<Complex64>, tol: f64) -> Splitting {
    let n = m.nrows();
    if n == 0 {
        return Splitting {
            range: DMatrix::zeros(0, 0),
            values: Vec::new(),
            kernel: DMatrix::zeros(0, 0),
        };
    }
    let (values, vectors) = herm_eigen_sorted(m);
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol * largest;
    let split = values.partition_point(|&v| v <= threshold);
    Splitting {
        range: vectors.columns(split, n - split).into_owned(),
        values: values[split..].to_vec(),
        kernel: vectors.columns(0, split).into_owned(),
    }
}

/// The operator X = F/G with F(x, y) = G(x, Xy) on the quotient by ker(G),
/// extended by zero on ker(G).
#[derive(Clone, Debug)]
pub struct RatioOperator {
    matrix: DMatrix<Complex64>,
    dominated: bool,
    reference: PositiveForm,
    spectrum: Vec<f64>,
}

impl RatioOperator {
    /// X as a matrix on the full space (zero on ker(G)).
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// True iff ker(G) ⊆ ker(F), i.e. the ratio exists.
    pub fn dominated(&self) -> bool {
        self.dominated
    }

    /// The denominator form G.
    pub fn reference(&self) -> &PositiveForm {
        &self.reference
    }

    /// Eigenvalues of X on the quotient by ker(G), ascending. X is
    /// self-adjoint in the G-geometry, so the spectrum is real; it is empty
    /// when the ratio does not exist.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }
}

/// Computes F/G. `dominated` is false (not an error) when F is nonzero on
/// ker(G); callers branch on it.
pub fn ratio_operator(f: &PositiveForm, g: &PositiveForm) -> Result<RatioOperator> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            expected: g.dim,
            got: f.dim,
        });
    }
    let n = f.dim;
    let split = split_spectrum(&g.matrix, g.tol);
    // F is PSD, so it vanishes on a subspace iff its matrix annihilates it.
    let f_scale = f.matrix.norm().max(1e-300);
    let mut dominated = true;
    for k in split.kernel.column_iter() {
        if (&f.matrix * k).norm() > f.tol.max(1e-12) * f_scale {
            dominated = false;
            break;
        }
    }
    if !dominated {
        return Ok(RatioOperator {
            matrix: DMatrix::zeros(n, n),
            dominated: false,
            reference: g.clone(),
            spectrum: Vec::new(),
        });
    }
    let w = split.whitener();
    let whitened = hermitize(&(w.adjoint() * &f.matrix * &w));
    let (spectrum, _) = herm_eigen_sorted(&whitened);
    // X = U_r D_r^{-1} U_r† M_F, the pseudoinverse solve restricted to the
    // complement of ker(G).
    let mut pinv_cols = split.range.clone();
    for (j, &d) in split.values.iter().enumerate() {
        let s = Complex64::new(d.recip(), 0.0);
        pinv_cols.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    let x = pinv_cols * split.range.adjoint() * &f.matrix;
    Ok(RatioOperator {
        matrix: x,
        dominated: true,
        reference: g.clone(),
        spectrum,
    })
}

/// A = (S^{1/2} + S̄^{1/2})²/2, the square-root mean form.
///
/// The square roots are taken in the form sense relative to the reference
/// R₀ = S + S̄. With s = S/R₀ and s̄ = S̄/R₀ = 1 - s the pair commutes, so the
/// joint calculus collapses to the scalar map u ↦ 1/2 + √(u(1-u)) applied to
/// the spectrum of s. The result vanishes exactly on ker(S+S̄) and is always
/// a real symmetric matrix.
pub fn half_sum_sqrt_form(s: &PositiveForm) -> PositiveForm {
    let n = s.dim;
    if n == 0 {
        return PositiveForm::zero(0, s.tol);
    }
    // S + S̄ has matrix M + Mᵀ = 2·Re(M): real symmetric.
    let r0 = &s.matrix + s.matrix.transpose();
    let split = split_spectrum(&r0, s.tol);
    if split.rank() == 0 {
        return PositiveForm::zero(n, s.tol);
    }
    let w = split.whitener();
    let sw = hermitize(&(w.adjoint() * &s.matrix * &w));
    let (values, vectors) = herm_eigen_sorted(&sw);
    // f(u) = (√u + √(1-u))²/2 = 1/2 + √(u(1-u)) on the spectrum of s, which
    // lies in [0, 1] because 0 ≤ S ≤ R₀. Within tolerance of an endpoint the
    // direction is exactly pure and f is exactly 1/2; resolving that before
    // the square root matters because its infinite slope at the endpoints
    // would otherwise blow eigenvalue rounding up to √ε-sized artifacts.
    let mapped: Vec<f64> = values
        .iter()
        .map(|&u| {
            let u = u.clamp(0.0, 1.0);
            if u <= s.tol || u >= 1.0 - s.tol {
                0.5
            } else {
                0.5 + (u * (1.0 - u)).sqrt()
            }
        })
        .collect();
    let mut aw = DMatrix::zeros(split.rank(), split.rank());
    for (j, &fv) in mapped.iter().enumerate() {
        let col = vectors.column(j);
        let fv = Complex64::new(fv, 0.0);
        aw += col * col.adjoint() * fv;
    }
    // Pull back through the whitening: M_A = U_r D^{1/2} A_w D^{1/2} U_r†.
    let mut half = split.range.clone();
    for (j, &d) in split.values.iter().enumerate() {
        let s = Complex64::new(d.sqrt(), 0.0);
        half.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    let ma = hermitize(&(&half * aw * half.adjoint()));
    PositiveForm {
        dim: n,
        matrix: ma,
        tol: s.tol,
    }
}

/// det(2√(AB)/(A+B)) together with its logarithm.
#[derive(Clone, Copy, Debug)]
pub struct DetFactor {
    /// The determinant, in [0, 1].
    pub value: f64,
    /// Σ log(2√(tᵢ(1-tᵢ))); -∞ when the determinant vanishes.
    pub log_value: f64,
}

/// det(2√(AB)/(A+B)) on the quotient by ker(A+B), via the spectrum
/// {tᵢ} ⊂ [0, 1] of A/(A+B): the factor is Πᵢ 2√(tᵢ(1-tᵢ)).
///
/// Returns exactly zero as soon as some tᵢ is 0 or 1 within tolerance — the
/// forms are mutually singular in that direction.
pub fn det_sqrt_ratio(a: &PositiveForm, b: &PositiveForm) -> Result<DetFactor> {
    let q = a.add(b)?;
    let ratio = ratio_operator(a, &q)?;
    debug_assert!(ratio.dominated(), "A + B always dominates A");
    let tol = a.tol.max(b.tol);
    let mut log_value = 0.0;
    for &t in ratio.spectrum() {
        let t = t.clamp(0.0, 1.0);
        if t <= tol || t >= 1.0 - tol {
            return Ok(DetFactor {
                value: 0.0,
                log_value: f64::NEG_INFINITY,
            });
        }
        log_value += LN_2 + 0.5 * (t.ln() + (1.0 - t).ln());
    }
    // 2√(t(1-t)) ≤ 1, so the log is nonpositive up to rounding.
    let log_value = log_value.min(0.0);
    Ok(DetFactor {
        value: log_value.exp(),
        log_value,
    })
}

/// Value of the inverse form Q⁻¹(α) = sup_{x≠0} |α(x)|²/Q(x,x).
#[derive(Clone, Debug)]
pub struct InverseFormValue {
    /// Q(a, a) for the representing vector a, or +∞ when none exists.
    pub value: f64,
    /// The representing vector with α(x) = Q(a, x); present iff finite.
    pub witness: Option<DVector<Complex64>>,
}

impl InverseFormValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Q⁻¹(α) for a real linear functional α given by its coefficient vector and
/// extended complex-linearly. Returns +∞ (a value, not an error) when α does
/// not vanish on ker(Q).
pub fn inverse_form(q: &PositiveForm, alpha: &DVector<f64>) -> Result<InverseFormValue> {
    if alpha.len() != q.dim {
        return Err(Error::DimensionMismatch {
            expected: q.dim,
            got: alpha.len(),
        });
    }
    if q.dim == 0 {
        return Ok(InverseFormValue {
            value: 0.0,
            witness: Some(DVector::zeros(0)),
        });
    }
    let (values, vectors) = herm_eigen_sorted(&q.matrix);
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = q.tol * largest;
    let alpha_c = complex_vector(alpha);
    let alpha_norm = alpha.norm();
    let mut value = 0.0;
    let mut witness = DVector::zeros(q.dim);
    for (i, &d) in values.iter().enumerate() {
        let col = vectors.column(i);
        let c = (col.adjoint() * &alpha_c)[(0, 0)];
        if d <= threshold {
            if c.norm() > q.tol.max(1e-12) * alpha_norm {
                return Ok(InverseFormValue {
                    value: f64::INFINITY,
                    witness: None,
                });
            }
        } else {
            value += c.norm_sqr() / d;
            witness += col * (c / Complex64::new(d, 0.0));
        }
    }
    // The value must coincide with α(a), which is real for representable α.
    let at_witness = (complex_vector(alpha).transpose() * &witness)[(0, 0)];
    debug_assert!(
        at_witness.im.abs() <= 1e-10 * (1.0 + value),
        "imaginary residue {} in inverse form",
        at_witness.im
    );
    Ok(InverseFormValue {
        value,
        witness: Some(witness),
    })
}

/// Kernel basis of a real symmetric PSD matrix, as real column vectors, plus
/// the complement eigenvectors; used by the reduction machinery.
pub(crate) fn real_kernel_split(
    m: &DMatrix<f64>,
    tol: f64,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), Vec::new());
    }
    let (values, vectors) = sym_eigen_sorted(m);
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol * largest;
    let split = values.partition_point(|&v| v <= threshold);
    (
        vectors.columns(0, split).into_owned(),
        vectors.columns(split, n - split).into_owned(),
        values[split..].to_vec(),
    )
}
