//! Validation, Weyl values, gauge shifts and the reduction trichotomy on the
//! exact cases the layer is specified by.

use approx::assert_abs_diff_eq;
use ccramp::sampling;
use ccramp::{
    gauge_shift, reduce_pair, validate_covariance, weyl_value, CoherentStateSpec, Error,
    PresymplecticSpace, ReductionVerdict, DEFAULT_TOL,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn standard_sigma() -> PresymplecticSpace {
    PresymplecticSpace::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap()
}

fn minimal_matrix() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)],
    )
}

fn classical_form(entries: &[f64], n: usize) -> ccramp::CovarianceForm {
    let space = PresymplecticSpace::trivial(n);
    let m = DMatrix::from_row_slice(n, n, entries).map(|x| c(x, 0.0));
    validate_covariance(&space, m, DEFAULT_TOL).unwrap()
}

#[test]
fn space_rejects_non_alternating() {
    let err = PresymplecticSpace::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    assert!(matches!(err, Err(Error::NotAlternating { .. })));
}

#[test]
fn validate_minimal_form() {
    let space = standard_sigma();
    let form = validate_covariance(&space, minimal_matrix(), DEFAULT_TOL).unwrap();
    assert_eq!(form.dim(), 2);
}

#[test]
fn validate_rejects_non_psd() {
    let space = standard_sigma();
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[c(0.25, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.25, 0.0)],
    );
    let err = validate_covariance(&space, m, DEFAULT_TOL);
    assert!(matches!(err, Err(Error::NotPsd { .. })));
}

#[test]
fn validate_rejects_sigma_mismatch() {
    // Real symmetric M carries Im(M) = 0 ≠ Σ/2 for a genuinely symplectic Σ.
    let space = standard_sigma();
    let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let err = validate_covariance(&space, m, DEFAULT_TOL);
    assert!(matches!(err, Err(Error::CovarianceMismatch { .. })));
}

#[test]
fn validate_classical_case() {
    // Σ = 0 admits any real symmetric PSD matrix.
    let form = classical_form(&[2.0, 0.5, 0.5, 1.0], 2);
    assert_eq!(form.dim(), 2);
}

#[test]
fn weyl_value_examples() {
    let space = standard_sigma();
    let form = validate_covariance(&space, minimal_matrix(), DEFAULT_TOL).unwrap();
    let state = CoherentStateSpec::new(form.clone(), DVector::from_row_slice(&[0.4, -0.3])).unwrap();

    let at_zero = weyl_value(&state, &DVector::zeros(2));
    assert_abs_diff_eq!(at_zero.re, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(at_zero.im, 0.0, epsilon = 1e-14);

    let quasifree = CoherentStateSpec::quasifree(form);
    let x = DVector::from_row_slice(&[0.7, 0.1]);
    let value = weyl_value(&quasifree, &x);
    assert!(value.im.abs() <= 1e-14);
    assert!(value.re > 0.0 && value.re <= 1.0);

    // Zero covariance on a trivial space, λ = e₁*, x = e₁: a pure phase e^i.
    let trivial = PresymplecticSpace::trivial(1);
    let zero_form =
        validate_covariance(&trivial, DMatrix::from_element(1, 1, c(0.0, 0.0)), DEFAULT_TOL)
            .unwrap();
    let phase_state = CoherentStateSpec::new(zero_form, DVector::from_row_slice(&[1.0])).unwrap();
    let phase = weyl_value(&phase_state, &DVector::from_row_slice(&[1.0]));
    assert_abs_diff_eq!(phase.re, 1f64.cos(), epsilon = 1e-14);
    assert_abs_diff_eq!(phase.im, 1f64.sin(), epsilon = 1e-14);
}

#[test]
fn weyl_modulus_bounded() {
    for seed in 0..20 {
        let mut rng = sampling::rng(seed);
        let dim = 1 + (seed as usize % 5);
        let (space, form) = sampling::random_space(&mut rng, dim, 0.2);
        let _ = space;
        let state =
            CoherentStateSpec::new(form, sampling::random_shift(&mut rng, dim, 1.0)).unwrap();
        for _ in 0..20 {
            let x = sampling::random_shift(&mut rng, dim, 1.5);
            assert!(weyl_value(&state, &x).norm() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn gauge_shift_group_action() {
    let space = standard_sigma();
    let form = validate_covariance(&space, minimal_matrix(), DEFAULT_TOL).unwrap();
    let lambda = DVector::from_row_slice(&[0.4, -0.3]);
    let state = CoherentStateSpec::new(form, lambda.clone()).unwrap();

    let same = gauge_shift(&state, &DVector::zeros(2)).unwrap();
    assert_eq!(same.shift(), state.shift());

    let undone = gauge_shift(&state, &(-&lambda)).unwrap();
    assert!(undone.shift().norm() <= 1e-15);

    let mu1 = DVector::from_row_slice(&[0.2, 0.1]);
    let mu2 = DVector::from_row_slice(&[-0.5, 0.3]);
    let composed = gauge_shift(&gauge_shift(&state, &mu1).unwrap(), &mu2).unwrap();
    let direct = gauge_shift(&state, &(&mu1 + &mu2)).unwrap();
    assert!((composed.shift() - direct.shift()).norm() <= 1e-15);

    // weyl_value after gauge_shift(μ) = e^{iμ(x)}·weyl_value before.
    let x = DVector::from_row_slice(&[0.9, -0.2]);
    let before = weyl_value(&state, &x);
    let after = weyl_value(&gauge_shift(&state, &mu1).unwrap(), &x);
    let expected = Complex64::from_polar(1.0, mu1.dot(&x)) * before;
    assert!((after - expected).norm() <= 1e-14);
}

#[test]
fn gauge_shift_dimension_check() {
    let space = standard_sigma();
    let form = validate_covariance(&space, minimal_matrix(), DEFAULT_TOL).unwrap();
    let state = CoherentStateSpec::quasifree(form);
    let err = gauge_shift(&state, &DVector::zeros(3));
    assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn reduce_trichotomy_examples() {
    // Kernel mismatch: S+S̄ = diag(0,2) vs T+T̄ = diag(2,2).
    let s = classical_form(&[0.0, 0.0, 0.0, 1.0], 2);
    let t = classical_form(&[1.0, 0.0, 0.0, 1.0], 2);
    let reduction = reduce_pair(&s, &t, &DVector::zeros(2)).unwrap();
    assert_eq!(reduction.verdict, ReductionVerdict::DisjointKernelMismatch);
    assert!(reduction.reduced.is_none());

    // Shared kernel, shift alive on it.
    let s = classical_form(&[0.0, 0.0, 0.0, 1.0], 2);
    let t = classical_form(&[0.0, 0.0, 0.0, 2.0], 2);
    let e1 = DVector::from_row_slice(&[1.0, 0.0]);
    let reduction = reduce_pair(&s, &t, &e1).unwrap();
    assert_eq!(reduction.verdict, ReductionVerdict::DisjointShiftOnKernel);

    // Nondegenerate: identity projector.
    let s = classical_form(&[1.0, 0.0, 0.0, 1.0], 2);
    let t = classical_form(&[2.0, 0.0, 0.0, 1.0], 2);
    let reduction = reduce_pair(&s, &t, &e1).unwrap();
    assert_eq!(reduction.verdict, ReductionVerdict::Reducible);
    let reduced = reduction.reduced.unwrap();
    assert_eq!(reduced.projector.nrows(), 2);
    assert!((&reduced.projector - DMatrix::<f64>::identity(2, 2)).norm() <= 1e-12);
}

#[test]
fn reduce_quotient_shape_and_idempotence() {
    let mut rng = sampling::rng(77);
    let pair = sampling::embedded_pair(&mut rng, 3, 2, 0.3);
    let lambda = pair.embed_shift(
        &DVector::from_row_slice(&[0.4, -0.1, 0.2]),
        &DVector::zeros(2),
    );
    let reduction = reduce_pair(&pair.s, &pair.t, &lambda).unwrap();
    assert_eq!(reduction.verdict, ReductionVerdict::Reducible);
    let reduced = reduction.reduced.unwrap();
    assert_eq!(reduced.s.dim(), 3);
    assert_eq!(reduced.projector.nrows(), 3);
    assert_eq!(reduced.projector.ncols(), 5);

    // λ factors through the projector: λ′∘P recovers λ on the complement and
    // the kernel component is below tolerance by construction.
    let recovered = reduced.projector.transpose() * &reduced.shift;
    assert!((&recovered - &lambda).norm() <= 1e-9 * lambda.norm().max(1.0));

    // Reducing the already-reduced pair is the identity.
    let again = reduce_pair(&reduced.s, &reduced.t, &reduced.shift).unwrap();
    assert_eq!(again.verdict, ReductionVerdict::Reducible);
    let inner = again.reduced.unwrap();
    assert!((&inner.projector - DMatrix::<f64>::identity(3, 3)).norm() <= 1e-12);
}

#[test]
fn reduce_rejects_space_mismatch() {
    let s = classical_form(&[1.0], 1);
    let space = standard_sigma();
    let t = validate_covariance(&space, minimal_matrix(), DEFAULT_TOL).unwrap();
    let err = reduce_pair(&s, &t, &DVector::zeros(1));
    assert!(err.is_err());
}
