//! Form-layer checks: the conjugation/kernel/ratio plumbing against small
//! hand-computable cases, and the two heavyweight constructions — the
//! half-sum square-root form and the determinant factor — against
//! independent closed-form oracles that never touch the library's own
//! whiten-and-remap pipeline.

use approx::assert_abs_diff_eq;
use ccramp::sampling;
use ccramp::{
    conjugate_form, det_sqrt_ratio, half_sum_sqrt_form, inverse_form, kernel_basis,
    ratio_operator, PositiveForm, DEFAULT_TOL,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real_form(entries: &[f64], n: usize) -> PositiveForm {
    PositiveForm::from_real(DMatrix::from_row_slice(n, n, entries), DEFAULT_TOL).unwrap()
}

fn minimal_matrix() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)],
    )
}

/// Symmetric square root through the real eigendecomposition. Test-local on
/// purpose: the library path goes through the complex Hermitian solver and a
/// different scalar map.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..eig.eigenvalues.len() {
        let v = eig.eigenvectors.column(i);
        out += v * v.transpose() * eig.eigenvalues[i].max(0.0).sqrt();
    }
    out
}

fn sym_inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..eig.eigenvalues.len() {
        let v = eig.eigenvectors.column(i);
        out += v * v.transpose() * eig.eigenvalues[i].sqrt().recip();
    }
    out
}

/// Closed form for the half-sum square-root form of a strictly positive
/// covariance matrix M: with G = 2·Re M and Σ̃ = G^{-1/2}·(2·Im M)·G^{-1/2},
///
///   M_A = ½ · G^{1/2} · [ I + (I + Σ̃²)^{1/2} ] · G^{1/2}.
///
/// Derivation: whitening M by G^{1/2} gives ½(I + iΣ̃), whose spectral
/// projections pair eigenvalues u and 1−u; the map u ↦ ½ + √(u(1−u)) is the
/// even function ½(1 + √(1−μ²)) of the eigenvalues ±μ of iΣ̃, and
/// (I + Σ̃²)^{1/2} realizes √(1−μ²) using only real symmetric square roots.
fn closed_form_half_sum(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let g = m.map(|z| 2.0 * z.re);
    let sigma = m.map(|z| 2.0 * z.im);
    let g_half = sym_sqrt(&g);
    let g_half_inv = sym_inv_sqrt(&g);
    let st = &g_half_inv * &sigma * &g_half_inv;
    let inner = DMatrix::identity(n, n) + &st * &st;
    (&g_half * (DMatrix::identity(n, n) + sym_sqrt(&inner)) * &g_half) * 0.5
}

#[test]
fn conjugation_examples() {
    let real = real_form(&[1.0, 0.25, 0.25, 2.0], 2);
    let conj = conjugate_form(&real);
    assert_eq!(real.matrix(), conj.matrix());

    let minimal = PositiveForm::new(minimal_matrix()).unwrap();
    let conj = conjugate_form(&minimal);
    assert_eq!(conj.matrix()[(0, 1)], c(0.0, -0.5));
    assert_eq!(conj.matrix()[(1, 0)], c(0.0, 0.5));

    let twice = conjugate_form(&conj);
    assert_eq!(twice.matrix(), minimal.matrix());
}

#[test]
fn kernel_basis_examples() {
    let nondegenerate = real_form(&[1.0, 0.0, 0.0, 1.0], 2);
    assert!(kernel_basis(&nondegenerate).is_empty());

    let partial = real_form(&[0.0, 0.0, 0.0, 1.0], 2);
    let basis = kernel_basis(&partial);
    assert_eq!(basis.len(), 1);
    assert_abs_diff_eq!(basis[0][0].norm(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(basis[0][1].norm(), 0.0, epsilon = 1e-12);

    let zero = PositiveForm::zero(2, DEFAULT_TOL);
    let basis = kernel_basis(&zero);
    assert_eq!(basis.len(), 2);
    // orthonormal
    let g01 = basis[0].dotc(&basis[1]).norm();
    assert_abs_diff_eq!(g01, 0.0, epsilon = 1e-12);
}

#[test]
fn ratio_examples() {
    let f = real_form(&[2.0, 0.0, 0.0, 6.0], 2);
    let g = real_form(&[1.0, 0.0, 0.0, 2.0], 2);
    let ratio = ratio_operator(&f, &g).unwrap();
    assert!(ratio.dominated());
    assert_abs_diff_eq!(ratio.matrix()[(0, 0)].re, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ratio.matrix()[(1, 1)].re, 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ratio.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);

    let identity_ratio = ratio_operator(&g, &g).unwrap();
    assert!(identity_ratio.dominated());
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(
                identity_ratio.matrix()[(i, j)].re,
                expected,
                epsilon = 1e-12
            );
        }
    }

    let full = real_form(&[1.0, 0.0, 0.0, 1.0], 2);
    let degenerate = real_form(&[0.0, 0.0, 0.0, 1.0], 2);
    let bad = ratio_operator(&full, &degenerate).unwrap();
    assert!(!bad.dominated());
}

#[test]
fn ratio_defining_identity_and_spectrum() {
    // F(x, y) = G(x, Xy) on random strictly positive pairs, and the spectrum
    // of the G-self-adjoint ratio is real nonnegative.
    for seed in 0..20 {
        let mut rng = sampling::rng(seed);
        let dim = 1 + (seed as usize % 5);
        let (_, sf) = sampling::random_space(&mut rng, dim, 0.2);
        let (_, sg) = sampling::random_space(&mut rng, dim, 0.2);
        let f = sf.form();
        let g = sg.form();
        let ratio = ratio_operator(f, g).unwrap();
        assert!(ratio.dominated());
        let x = ratio.matrix();
        let lhs = f.matrix();
        let rhs = g.matrix() * x;
        let scale = lhs.norm().max(rhs.norm()).max(1.0);
        assert!((lhs - &rhs).norm() <= 1e-9 * scale);
        for &t in ratio.spectrum() {
            assert!(t >= -f.tol().max(g.tol()));
        }
    }
}

#[test]
fn half_sum_real_and_minimal_examples() {
    let real = real_form(&[1.0, 0.3, 0.3, 0.7], 2);
    let a = half_sum_sqrt_form(&real);
    let expected = real.real_matrix() * 2.0;
    assert!((a.real_matrix() - expected).norm() <= 1e-10);

    let minimal = PositiveForm::new(minimal_matrix()).unwrap();
    let a = half_sum_sqrt_form(&minimal);
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(a.matrix()[(i, j)].re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(a.matrix()[(i, j)].im, 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn half_sum_conjugation_symmetry() {
    for seed in 0..20 {
        let mut rng = sampling::rng(100 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.2);
        let a = half_sum_sqrt_form(s.form());
        let a_conj = half_sum_sqrt_form(&conjugate_form(s.form()));
        assert!((a.matrix() - a_conj.matrix()).norm() <= 1e-10 * a.matrix().norm().max(1.0));
    }
}

#[test]
fn half_sum_matches_closed_form_oracle() {
    for seed in 0..40 {
        let mut rng = sampling::rng(200 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.3);
        let a = half_sum_sqrt_form(s.form());
        let oracle = closed_form_half_sum(s.form().matrix());
        let scale = oracle.norm().max(1.0);
        assert!(
            (a.real_matrix() - &oracle).norm() <= 1e-9 * scale,
            "half-sum form deviates from closed form at seed {seed}"
        );
        // A is real symmetric even when M is genuinely complex.
        let imag_norm = a.matrix().map(|z| z.im).norm();
        assert!(imag_norm <= 1e-10 * scale);
    }
}

#[test]
fn half_sum_operator_bounds() {
    // R₀/2 ⪯ A ⪯ R₀ with R₀ = 2·Re M: the scalar map u ↦ ½ + √(u(1−u)) has
    // range [½, 1] on [0, 1].
    for seed in 0..20 {
        let mut rng = sampling::rng(300 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.2);
        let a = half_sum_sqrt_form(s.form());
        let r0 = s.form().real_matrix() * 2.0;
        let upper = (&r0 - a.real_matrix()).symmetric_eigen().eigenvalues;
        let lower = (a.real_matrix() - r0 * 0.5).symmetric_eigen().eigenvalues;
        let scale = s.form().real_matrix().norm().max(1.0);
        assert!(upper.iter().all(|&v| v >= -1e-10 * scale));
        assert!(lower.iter().all(|&v| v >= -1e-10 * scale));
    }
}

#[test]
fn det_examples() {
    let a = real_form(&[1.0, 0.2, 0.2, 2.0], 2);
    let same = det_sqrt_ratio(&a, &a).unwrap();
    assert_abs_diff_eq!(same.value, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(same.log_value, 0.0, epsilon = 1e-12);

    let one = real_form(&[1.0], 1);
    let four = real_form(&[4.0], 1);
    let scalar = det_sqrt_ratio(&one, &four).unwrap();
    assert_abs_diff_eq!(scalar.value, 0.8, epsilon = 1e-12);

    let singular_a = real_form(&[1.0, 0.0, 0.0, 0.0], 2);
    let full_b = real_form(&[1.0, 0.0, 0.0, 1.0], 2);
    let vanished = det_sqrt_ratio(&singular_a, &full_b).unwrap();
    assert_eq!(vanished.value, 0.0);
    assert_eq!(vanished.log_value, f64::NEG_INFINITY);
}

#[test]
fn det_matches_determinant_identity() {
    // On strictly positive pairs, det(2√(AB)/(A+B)) = 2ⁿ·√(det A·det B)/det(A+B).
    // The right side is evaluated with plain LU determinants of the real
    // matrices — no eigensolver, no ratio operator.
    for seed in 0..40 {
        let mut rng = sampling::rng(400 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.3);
        let (_, t) = sampling::random_space(&mut rng, dim, 0.3);
        let a = half_sum_sqrt_form(s.form());
        let b = half_sum_sqrt_form(t.form());
        let det = det_sqrt_ratio(&a, &b).unwrap();
        let ar = a.real_matrix();
        let br = b.real_matrix();
        let oracle = 2f64.powi(dim as i32) * (ar.determinant() * br.determinant()).sqrt()
            / (&ar + &br).determinant();
        assert!(
            (det.value - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "determinant identity fails at seed {seed}: {} vs {oracle}",
            det.value
        );
    }
}

#[test]
fn det_symmetry_range_and_scaling() {
    for seed in 0..30 {
        let mut rng = sampling::rng(500 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.1);
        let (_, t) = sampling::random_space(&mut rng, dim, 0.1);
        let a = half_sum_sqrt_form(s.form());
        let b = half_sum_sqrt_form(t.form());
        let ab = det_sqrt_ratio(&a, &b).unwrap();
        let ba = det_sqrt_ratio(&b, &a).unwrap();
        assert!((0.0..=1.0).contains(&ab.value));
        assert_abs_diff_eq!(ab.value, ba.value, epsilon = 1e-12);
        let scaled = det_sqrt_ratio(&a.scale(3.5), &b.scale(3.5)).unwrap();
        assert_abs_diff_eq!(scaled.value, ab.value, epsilon = 1e-10);
    }
}

#[test]
fn inverse_form_examples() {
    let identity = real_form(&[1.0, 0.0, 0.0, 1.0], 2);
    let e1 = DVector::from_row_slice(&[1.0, 0.0]);
    let got = inverse_form(&identity, &e1).unwrap();
    assert!(got.is_finite());
    assert_abs_diff_eq!(got.value, 1.0, epsilon = 1e-12);

    let two = real_form(&[2.0], 1);
    let alpha = DVector::from_row_slice(&[1.0]);
    let got = inverse_form(&two, &alpha).unwrap();
    assert_abs_diff_eq!(got.value, 0.5, epsilon = 1e-12);
    let witness = got.witness.unwrap();
    assert_abs_diff_eq!(witness[0].re, 0.5, epsilon = 1e-12);

    let degenerate = real_form(&[0.0, 0.0, 0.0, 1.0], 2);
    let infinite = inverse_form(&degenerate, &e1).unwrap();
    assert!(infinite.value.is_infinite());
    assert!(infinite.witness.is_none());
}

#[test]
fn inverse_form_variational_characterization() {
    // The witness attains sup |α(x)|²/Q(x,x) and random directions never
    // exceed it.
    for seed in 0..20 {
        let mut rng = sampling::rng(600 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.3);
        let q = s.form();
        let alpha = sampling::random_shift(&mut rng, dim, 1.0);
        let got = inverse_form(q, &alpha).unwrap();
        assert!(got.is_finite());
        let witness = got.witness.clone().unwrap();
        let qww = q.evaluate(&witness, &witness).re;
        assert!((qww - got.value).abs() <= 1e-8 * got.value.max(1e-12));
        for _ in 0..500 {
            let x = sampling::random_shift(&mut rng, dim, 1.0);
            let xq = x.map(Complex64::from);
            let qxx = q.evaluate(&xq, &xq).re;
            if qxx <= 1e-14 {
                continue;
            }
            let rayleigh = alpha.dot(&x).powi(2) / qxx;
            assert!(rayleigh <= got.value * (1.0 + 1e-8) + 1e-12);
        }
    }
}

#[test]
fn inverse_form_scaling() {
    for seed in 0..20 {
        let mut rng = sampling::rng(700 + seed);
        let dim = 1 + (seed as usize % 6);
        let (_, s) = sampling::random_space(&mut rng, dim, 0.3);
        let alpha = sampling::random_shift(&mut rng, dim, 1.0);
        let base = inverse_form(s.form(), &alpha).unwrap().value;
        let scaled = inverse_form(&s.form().scale(4.0), &alpha).unwrap().value;
        assert!((scaled - base / 4.0).abs() <= 1e-10 * base.max(1.0));
    }
}
