//! Small dense-linear-algebra helpers shared across modules: sorted Hermitian
//! eigendecompositions, re-symmetrization, casts between real and complex
//! matrices, and compensated summation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// (M + M*)/2 — re-Hermitize before any spectral decomposition.
pub(crate) fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|z| 0.5 * z)
}

/// (M + M^T)/2 for real matrices.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).map(|x| 0.5 * x)
}

pub(crate) fn max_abs_entry_c(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_abs_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub(crate) fn complex_cast(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub(crate) fn complex_vector(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Eigendecomposition of a Hermitian matrix by the cyclic Jacobi method:
/// eigenvalues ascending, eigenvector columns permuted accordingly.
///
/// Everything in this crate happens at a dozen dimensions or fewer, where
/// Jacobi costs nothing and — unlike tridiagonalization-based solvers — keeps
/// the eigenvectors orthonormal to machine precision even across exactly
/// degenerate clusters. The kernel-quotient machinery and the determinant
/// factor both lean on that: a whitener built from slightly-off eigenvectors
/// skews every downstream quantity.
pub(crate) fn herm_eigen_sorted(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let mut a = hermitize(m);
    let mut v: DMatrix<Complex64> = DMatrix::identity(n, n);
    // The Frobenius norm is invariant under the rotations, so it serves as a
    // fixed convergence scale.
    let scale = a.norm();
    if scale > 0.0 {
        for _sweep in 0..64 {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| 2.0 * a[(p, q)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let beta = a[(p, q)];
                    let absb = beta.norm();
                    if absb == 0.0 {
                        continue;
                    }
                    // Unitary 2x2: absorb the phase of the pivot, then the
                    // classical symmetric rotation with the smaller angle.
                    let phase = beta / absb;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * absb);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let upp = Complex64::new(c, 0.0);
                    let upq = Complex64::new(s, 0.0);
                    let uqp = -s * phase.conj();
                    let uqq = c * phase.conj();
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip * upp + aiq * uqp;
                        a[(i, q)] = aip * upq + aiq * uqq;
                    }
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = upp.conj() * apj + uqp.conj() * aqj;
                        a[(q, j)] = upq.conj() * apj + uqq.conj() * aqj;
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip * upp + viq * uqp;
                        v[(i, q)] = vip * upq + viq * uqq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Real symmetric analogue of [`herm_eigen_sorted`]. Runs the same Jacobi
/// iteration through the complex embedding; for a real input every rotation
/// phase is ±1, so the imaginary parts stay exactly zero and dropping them
/// is lossless.
pub(crate) fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let (values, vectors) = herm_eigen_sorted(&complex_cast(&symmetrize(m)));
    (values, vectors.map(|z| z.re))
}

/// Kahan compensated accumulator. Summation order is fixed by the caller, so
/// results are reproducible bit-for-bit.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}
