//! Seeded generators for covariance forms, shifts and degenerate embeddings.
//! Used by the test suite and the batch tooling; every generator is a
//! deterministic function of the RNG it is handed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::ccr::{validate_covariance, CoherentStateSpec, CovarianceForm, PresymplecticSpace};
use crate::forms::DEFAULT_TOL;
use crate::linalg::{complex_cast, herm_eigen_sorted, hermitize};

/// The RNG used everywhere reproducibility matters.
pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn random_complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

fn random_real_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// A strictly positive covariance form together with the presymplectic
/// structure it induces: M = G†G/n + margin·I and σ = 2·Im(M). Any Hermitian
/// PSD matrix is a valid covariance for the σ read off from it.
pub fn random_space(
    rng: &mut impl Rng,
    dim: usize,
    margin: f64,
) -> (PresymplecticSpace, CovarianceForm) {
    let g = random_complex_matrix(rng, dim, dim);
    let mut m = hermitize(&(g.adjoint() * &g / Complex64::new(dim.max(1) as f64, 0.0)));
    for i in 0..dim {
        m[(i, i)] += Complex64::new(margin, 0.0);
    }
    let sigma = m.map(|z| z.im) * 2.0;
    let space = PresymplecticSpace::new(sigma)
        .expect("imaginary part of a Hermitian matrix is antisymmetric");
    let form = validate_covariance(&space, m, DEFAULT_TOL)
        .expect("sigma was read off the same matrix");
    (space, form)
}

/// A second, independent covariance over an existing space: X + iσ/2 with X
/// random real symmetric, lifted so the smallest eigenvalue is at least
/// `margin`. Real diagonal lifts never disturb the imaginary part.
pub fn random_covariance_on(
    rng: &mut impl Rng,
    space: &PresymplecticSpace,
    margin: f64,
) -> CovarianceForm {
    let n = space.dim();
    let f = random_real_matrix(rng, n, n);
    let x = (f.transpose() * &f) / (n.max(1) as f64);
    let mut m = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(x[(i, j)], space.sigma()[(i, j)] / 2.0)
    });
    m = hermitize(&m);
    let lambda_min = herm_eigen_sorted(&m).0.first().copied().unwrap_or(margin);
    if lambda_min < margin {
        let lift = margin - lambda_min;
        for i in 0..n {
            m[(i, i)] += Complex64::new(lift, 0.0);
        }
    }
    validate_covariance(space, m, DEFAULT_TOL).expect("lift preserves validity")
}

pub fn random_shift(rng: &mut impl Rng, dim: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        scale * x
    })
}

/// A generic strictly positive pair of coherent states on a fresh space.
pub fn random_state_pair(
    rng: &mut impl Rng,
    dim: usize,
    margin: f64,
    shift_scale: f64,
) -> (CoherentStateSpec, CoherentStateSpec) {
    let (space, s) = random_space(rng, dim, margin);
    let t = random_covariance_on(rng, &space, margin);
    let alpha = random_shift(rng, dim, shift_scale);
    let beta = random_shift(rng, dim, shift_scale);
    (
        CoherentStateSpec::new(s, alpha).expect("matching dimensions"),
        CoherentStateSpec::new(t, beta).expect("matching dimensions"),
    )
}

/// `modes` copies of the minimal one-mode form: covariance ½(I + iσ) per
/// block with σ the standard symplectic form on R².
pub fn minimal_space(modes: usize) -> (PresymplecticSpace, CovarianceForm) {
    let n = 2 * modes;
    let mut sigma = DMatrix::zeros(n, n);
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for k in 0..modes {
        let (p, q) = (2 * k, 2 * k + 1);
        sigma[(p, q)] = 1.0;
        sigma[(q, p)] = -1.0;
        m[(p, p)] = Complex64::new(0.5, 0.0);
        m[(q, q)] = Complex64::new(0.5, 0.0);
        m[(p, q)] = Complex64::new(0.0, 0.5);
        m[(q, p)] = Complex64::new(0.0, -0.5);
    }
    let space = PresymplecticSpace::new(sigma).expect("antisymmetric by construction");
    let form =
        validate_covariance(&space, m, DEFAULT_TOL).expect("minimal form is a valid covariance");
    (space, form)
}

/// Haar-ish random orthogonal matrix via QR with the sign convention fixed.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = random_real_matrix(rng, n, n);
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = q.column(j) * -1.0;
            q.set_column(j, &col);
        }
    }
    q
}

/// A degenerate instance built by padding a strictly positive pair of rank
/// `rank` with `extra` null directions and rotating everything by a random
/// orthogonal map. The null directions land in the kernel of both conjugate
/// sums, so the pair reduces back to (a rotation of) the core pair.
pub struct EmbeddedPair {
    pub space: PresymplecticSpace,
    pub s: CovarianceForm,
    pub t: CovarianceForm,
    /// Rotation from padded coordinates to ambient ones.
    pub rotation: DMatrix<f64>,
    pub rank: usize,
    pub core_s: CovarianceForm,
    pub core_t: CovarianceForm,
}

pub fn embedded_pair(rng: &mut impl Rng, rank: usize, extra: usize, margin: f64) -> EmbeddedPair {
    let (core_space, core_s) = random_space(rng, rank, margin);
    let core_t = random_covariance_on(rng, &core_space, margin);
    let n = rank + extra;
    let q = random_orthogonal(rng, n);
    let qc = complex_cast(&q);

    let pad_rotate = |m: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        out.view_mut((0, 0), (rank, rank)).copy_from(m);
        &qc * out * qc.adjoint()
    };
    let ms = pad_rotate(core_s.form().matrix());
    let mt = pad_rotate(core_t.form().matrix());

    let mut sigma_pad = DMatrix::zeros(n, n);
    sigma_pad
        .view_mut((0, 0), (rank, rank))
        .copy_from(core_space.sigma());
    let sigma = &q * sigma_pad * q.transpose();
    let space = PresymplecticSpace::new(sigma).expect("rotation preserves antisymmetry");
    let s = validate_covariance(&space, ms, DEFAULT_TOL).expect("rotation preserves validity");
    let t = validate_covariance(&space, mt, DEFAULT_TOL).expect("rotation preserves validity");
    EmbeddedPair {
        space,
        s,
        t,
        rotation: q,
        rank,
        core_s,
        core_t,
    }
}

impl EmbeddedPair {
    /// Rotates a shift given over padded coordinates (core part, then kernel
    /// part) into ambient coordinates.
    pub fn embed_shift(&self, core: &DVector<f64>, kernel: &DVector<f64>) -> DVector<f64> {
        let n = self.rotation.nrows();
        assert_eq!(core.len(), self.rank);
        assert_eq!(kernel.len(), n - self.rank);
        let mut padded = DVector::zeros(n);
        padded.rows_mut(0, self.rank).copy_from(core);
        padded
            .rows_mut(self.rank, n - self.rank)
            .copy_from(kernel);
        &self.rotation * padded
    }
}

/// A pair whose conjugate-sum kernels have equal dimension but different
/// directions: the core pair padded with diag(1, 0) on one side and
/// diag(0, 1) on the other, then rotated. No quotient reconciles the two.
pub fn mismatched_pair(
    rng: &mut impl Rng,
    rank: usize,
    margin: f64,
) -> (CoherentStateSpec, CoherentStateSpec) {
    let (core_space, core_s) = random_space(rng, rank, margin);
    let core_t = random_covariance_on(rng, &core_space, margin);
    let n = rank + 2;
    let q = random_orthogonal(rng, n);
    let qc = complex_cast(&q);

    let pad_rotate = |m: &DMatrix<Complex64>, live: usize| -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        out.view_mut((0, 0), (rank, rank)).copy_from(m);
        out[(live, live)] = Complex64::new(1.0, 0.0);
        &qc * out * qc.adjoint()
    };
    let ms = pad_rotate(core_s.form().matrix(), rank);
    let mt = pad_rotate(core_t.form().matrix(), rank + 1);

    let mut sigma_pad = DMatrix::zeros(n, n);
    sigma_pad
        .view_mut((0, 0), (rank, rank))
        .copy_from(core_space.sigma());
    let sigma = &q * sigma_pad * q.transpose();
    let space = PresymplecticSpace::new(sigma).expect("rotation preserves antisymmetry");
    let s = validate_covariance(&space, ms, DEFAULT_TOL).expect("rotation preserves validity");
    let t = validate_covariance(&space, mt, DEFAULT_TOL).expect("rotation preserves validity");
    let zero = DVector::zeros(n);
    (
        CoherentStateSpec::new(s, zero.clone()).expect("matching dimensions"),
        CoherentStateSpec::new(t, zero).expect("matching dimensions"),
    )
}
