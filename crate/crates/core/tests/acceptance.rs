//! The release gate. One test per shipping criterion; each prints a single
//! PASS line with the measured margins, and the library does not ship unless
//! every line prints.

use std::time::{Duration, Instant};

use ccramp::sampling;
use ccramp::{
    nested_study, overlap_monte_carlo, overlap_quadrature, prefix_amplitudes,
    shift_monotonicity_gap, transition_amplitude, validate_covariance, CaseTag, Classification,
    CoherentStateSpec, ModeBlock, ModeSequence, NestedAmbient, PresymplecticSpace,
    TruncationConfig, DEFAULT_TOL,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[test]
fn criterion_1_formula_matches_quadrature_on_dims_2_and_4() {
    let start = Instant::now();
    let mut instances = 0usize;
    let mut worst_rel: f64 = 0.0;
    for dim in [2usize, 4usize] {
        for i in 0..50u64 {
            let mut rng = sampling::rng(10_000 + 1_000 * dim as u64 + i);
            let (a, b) = sampling::random_state_pair(&mut rng, dim, 0.25, 0.8);
            let formula = transition_amplitude(&a, &b).unwrap().value;
            let lambda = a.shift() - b.shift();
            let quad =
                overlap_quadrature(a.covariance(), b.covariance(), &lambda, 60).unwrap();
            let rel = (formula - quad).abs() / formula;
            worst_rel = worst_rel.max(rel);
            assert!(
                rel <= 1e-6,
                "dim {dim} instance {i}: formula {formula} vs quadrature {quad} (rel {rel:.3e})"
            );
            instances += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(instances >= 100);
    assert!(
        elapsed < Duration::from_secs(60),
        "quadrature agreement run took {elapsed:?}"
    );
    println!(
        "acceptance 1 formula-vs-quadrature dims 2,4: PASS \
         ({instances} instances, worst relative deviation {worst_rel:.2e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_2_formula_matches_monte_carlo_at_dim_6() {
    let start = Instant::now();
    let samples = 1_000_000usize;
    let mut worst_sigma: f64 = 0.0;
    for i in 0..10u64 {
        let mut rng = sampling::rng(20_000 + i);
        let (a, b) = sampling::random_state_pair(&mut rng, 6, 0.25, 0.6);
        let formula = transition_amplitude(&a, &b).unwrap().value;
        let lambda = a.shift() - b.shift();
        let mc = overlap_monte_carlo(a.covariance(), b.covariance(), &lambda, samples, 7_000 + i)
            .unwrap();
        let sigmas = (formula - mc.estimate).abs() / mc.stderr;
        worst_sigma = worst_sigma.max(sigmas);
        assert!(
            sigmas <= 4.0,
            "instance {i}: formula {formula} vs estimate {} ± {} ({sigmas:.2}σ)",
            mc.estimate,
            mc.stderr
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "Monte-Carlo agreement run took {elapsed:?}"
    );
    println!(
        "acceptance 2 formula-vs-monte-carlo dim 6: PASS \
         (10 instances x {samples} samples, worst deviation {worst_sigma:.2}σ, {elapsed:.2?})"
    );
}

#[test]
fn criterion_3_minimal_form_closed_overlap() {
    let (_, form) = sampling::minimal_space(1);
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = sampling::rng(30_000 + i);
        let lambda = sampling::random_shift(&mut rng, 2, 1.0);
        let a = CoherentStateSpec::new(form.clone(), lambda.clone()).unwrap();
        let b = CoherentStateSpec::quasifree(form.clone());
        let value = transition_amplitude(&a, &b).unwrap().value;
        let expected = (-0.5 * lambda.norm_squared()).exp();
        let dev = (value - expected).abs();
        worst = worst.max(dev);
        assert!(dev <= 1e-10, "shift {i}: {value} vs {expected}");
    }
    println!(
        "acceptance 3 minimal-form closed overlap: PASS \
         (100 shifts, worst absolute deviation {worst:.2e})"
    );
}

#[test]
fn criterion_4_degeneracy_trichotomy() {
    let mut quotient_worst: f64 = 0.0;
    for i in 0..10u64 {
        // Branch 1: kernels of the two conjugate sums differ.
        let mut rng = sampling::rng(40_000 + i);
        let (a, b) = sampling::mismatched_pair(&mut rng, 2 + (i as usize % 3), 0.3);
        let result = transition_amplitude(&a, &b).unwrap();
        assert_eq!(result.value, 0.0);
        assert_eq!(result.case_tag, CaseTag::DisjointKernelMismatch);

        // Branch 2: common kernel, shift alive on it.
        let pair = sampling::embedded_pair(&mut rng, 2 + (i as usize % 3), 2, 0.3);
        let kernel_part = DVector::from_fn(2, |r, _| if r == 0 { 0.4 + 0.1 * i as f64 } else { 0.0 });
        let lambda = pair.embed_shift(
            &sampling::random_shift(&mut rng, pair.rank, 0.5),
            &kernel_part,
        );
        let result = transition_amplitude(
            &CoherentStateSpec::new(pair.s.clone(), lambda).unwrap(),
            &CoherentStateSpec::quasifree(pair.t.clone()),
        )
        .unwrap();
        assert_eq!(result.value, 0.0);
        assert_eq!(result.case_tag, CaseTag::DisjointShiftOnKernel);

        // Branch 3: reducible; the quotient path must reproduce the
        // pre-quotiented core problem.
        let core_shift = sampling::random_shift(&mut rng, pair.rank, 0.8);
        let ambient_shift = pair.embed_shift(&core_shift, &DVector::zeros(2));
        let ambient = transition_amplitude(
            &CoherentStateSpec::new(pair.s.clone(), ambient_shift).unwrap(),
            &CoherentStateSpec::quasifree(pair.t.clone()),
        )
        .unwrap();
        let core = transition_amplitude(
            &CoherentStateSpec::new(pair.core_s.clone(), core_shift).unwrap(),
            &CoherentStateSpec::quasifree(pair.core_t.clone()),
        )
        .unwrap();
        assert_eq!(ambient.case_tag, CaseTag::Generic);
        let dev = (ambient.value - core.value).abs();
        quotient_worst = quotient_worst.max(dev);
        assert!(dev <= 1e-10, "instance {i}: {} vs {}", ambient.value, core.value);
    }
    println!(
        "acceptance 4 degeneracy trichotomy: PASS \
         (10 instances per branch, exact zeros on disjoint branches, \
         worst quotient deviation {quotient_worst:.2e})"
    );
}

#[test]
fn criterion_5_property_suite() {
    let mut worst_sym: f64 = 0.0;
    let mut worst_translate: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_basis: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let total = 1000u64;
    for i in 0..total {
        let mut rng = sampling::rng(50_000 + i);
        let dim = 1 + (i as usize % 6);
        let (a, b) = sampling::random_state_pair(&mut rng, dim, 0.2, 0.7);
        let ab = transition_amplitude(&a, &b).unwrap();
        let ba = transition_amplitude(&b, &a).unwrap();

        // Range and symmetry.
        assert!((0.0..=1.0).contains(&ab.value), "instance {i}: {}", ab.value);
        let sym = (ab.value - ba.value).abs();
        worst_sym = worst_sym.max(sym);
        assert!(sym <= 1e-12, "instance {i}: symmetry violated by {sym:.3e}");

        // Dependence on the shift difference only.
        let gamma = sampling::random_shift(&mut rng, dim, 1.5);
        let translated = transition_amplitude(
            &CoherentStateSpec::new(a.covariance().clone(), a.shift() + &gamma).unwrap(),
            &CoherentStateSpec::new(b.covariance().clone(), b.shift() + &gamma).unwrap(),
        )
        .unwrap();
        let trans = (ab.value - translated.value).abs();
        worst_translate = worst_translate.max(trans);
        assert!(trans <= 1e-12, "instance {i}: translation moved value by {trans:.3e}");

        // Shift monotonicity.
        let lambda = a.shift() - b.shift();
        let gap = shift_monotonicity_gap(a.covariance(), b.covariance(), &lambda).unwrap();
        worst_gap = worst_gap.min(gap);
        assert!(gap >= -1e-12, "instance {i}: negative gap {gap:.3e}");

        // Basis invariance under a random invertible transport.
        let o1 = sampling::random_orthogonal(&mut rng, dim);
        let o2 = sampling::random_orthogonal(&mut rng, dim);
        let mut diag = DMatrix::<f64>::zeros(dim, dim);
        for d in 0..dim {
            diag[(d, d)] = 0.5 + 1.5 * ((i as f64 * 0.37 + d as f64 * 0.61).fract());
        }
        let p = o1 * diag * o2.transpose();
        let pc = p.map(|x| Complex64::new(x, 0.0));
        let space_p =
            PresymplecticSpace::new(p.transpose() * a.covariance().space().sigma() * &p).unwrap();
        let s_p = validate_covariance(
            &space_p,
            pc.adjoint() * a.covariance().form().matrix() * &pc,
            DEFAULT_TOL,
        )
        .unwrap();
        let t_p = validate_covariance(
            &space_p,
            pc.adjoint() * b.covariance().form().matrix() * &pc,
            DEFAULT_TOL,
        )
        .unwrap();
        let transported = transition_amplitude(
            &CoherentStateSpec::new(s_p, p.transpose() * a.shift()).unwrap(),
            &CoherentStateSpec::new(t_p, p.transpose() * b.shift()).unwrap(),
        )
        .unwrap();
        let basis_dev = (ab.value - transported.value).abs();
        worst_basis = worst_basis.max(basis_dev);
        assert!(basis_dev <= 1e-9, "instance {i}: transport moved value by {basis_dev:.3e}");

        // Direct-sum factorization against an independent second instance.
        let dim2 = 1 + ((i / 6) as usize % 3);
        let (a2, b2) = sampling::random_state_pair(&mut rng, dim2, 0.2, 0.7);
        let n = dim + dim2;
        let mut sigma = DMatrix::zeros(n, n);
        sigma
            .view_mut((0, 0), (dim, dim))
            .copy_from(a.covariance().space().sigma());
        sigma
            .view_mut((dim, dim), (dim2, dim2))
            .copy_from(a2.covariance().space().sigma());
        let space = PresymplecticSpace::new(sigma).unwrap();
        let block = |m1: &DMatrix<Complex64>, m2: &DMatrix<Complex64>| {
            let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
            m.view_mut((0, 0), (dim, dim)).copy_from(m1);
            m.view_mut((dim, dim), (dim2, dim2)).copy_from(m2);
            m
        };
        let stack = |v1: &DVector<f64>, v2: &DVector<f64>| {
            let mut v = DVector::zeros(n);
            v.rows_mut(0, dim).copy_from(v1);
            v.rows_mut(dim, dim2).copy_from(v2);
            v
        };
        let s_sum = validate_covariance(
            &space,
            block(a.covariance().form().matrix(), a2.covariance().form().matrix()),
            DEFAULT_TOL,
        )
        .unwrap();
        let t_sum = validate_covariance(
            &space,
            block(b.covariance().form().matrix(), b2.covariance().form().matrix()),
            DEFAULT_TOL,
        )
        .unwrap();
        let total_value = transition_amplitude(
            &CoherentStateSpec::new(s_sum, stack(a.shift(), a2.shift())).unwrap(),
            &CoherentStateSpec::new(t_sum, stack(b.shift(), b2.shift())).unwrap(),
        )
        .unwrap()
        .value;
        let product = ab.value * transition_amplitude(&a2, &b2).unwrap().value;
        let sum_rel = (total_value - product).abs() / product.max(f64::MIN_POSITIVE);
        worst_sum = worst_sum.max(sum_rel);
        assert!(
            sum_rel <= 1e-10,
            "instance {i}: direct sum {total_value} vs product {product} (rel {sum_rel:.3e})"
        );
    }
    println!(
        "acceptance 5 property suite: PASS ({total} instances, dims 1-6; \
         worst symmetry {worst_sym:.1e}, translation {worst_translate:.1e}, \
         monotonicity floor {worst_gap:.1e}, basis transport {worst_basis:.1e}, \
         direct-sum rel {worst_sum:.1e})"
    );
}

#[test]
fn criterion_6_truncation_dichotomies() {
    // (a) Settling covariance gaps and summable shifts: the limit amplitude
    // is positive and matched by the scalar infinite product.
    let upto = 200usize;
    let converged: Vec<ModeBlock> = (1..=upto)
        .map(|k| {
            let kk = k as f64;
            ModeBlock::classical(1.0, 1.0 + 1.0 / (kk * kk), 0.5f64.powi(k as i32)).unwrap()
        })
        .collect();
    let report = prefix_amplitudes(
        &ModeSequence::new(converged),
        upto,
        &TruncationConfig::default(),
    )
    .unwrap();
    assert_eq!(report.classification, Classification::ConvergedPositive);
    // Scalar estimate of the infinite product, summed far past the
    // truncation point so its own tail is negligible.
    let mut log_limit = 0.0f64;
    for k in 1..=100_000usize {
        let kk = k as f64;
        let (s, t) = (1.0f64, 1.0 + 1.0 / (kk * kk));
        log_limit += 0.5 * (2.0 * (s * t).sqrt() / (s + t)).ln();
        if k <= upto {
            let v: f64 = 0.5f64.powi(k as i32);
            log_limit -= v * v / (4.0 * (s + t));
        }
    }
    let limit = log_limit.exp();
    let final_amp = report.final_amplitude();
    let dev_a = (final_amp - limit).abs();
    assert!(
        dev_a <= 1e-6,
        "limit estimate {limit} vs final amplitude {final_amp}"
    );

    // (b) A constant covariance gap on every block: the determinant product
    // dies and the amplitude crosses below 1e-12.
    let vanishing: Vec<ModeBlock> = (0..300)
        .map(|_| ModeBlock::classical(1.0, 4.0, 0.0).unwrap())
        .collect();
    let report_b = prefix_amplitudes(
        &ModeSequence::new(vanishing),
        300,
        &TruncationConfig::default(),
    )
    .unwrap();
    assert_eq!(report_b.classification, Classification::VanishingDet);
    assert!(
        report_b.final_amplitude() < 1e-12,
        "amplitude still {}",
        report_b.final_amplitude()
    );

    // (c) Linearly growing shifts on identical minimal blocks: the exponent
    // partial sums blow past the threshold while still rising.
    let diverging: Vec<ModeBlock> = (1..=200)
        .map(|k| ModeBlock::minimal(DVector::from_row_slice(&[k as f64, 0.0])).unwrap())
        .collect();
    let report_c = prefix_amplitudes(
        &ModeSequence::new(diverging),
        200,
        &TruncationConfig::default(),
    )
    .unwrap();
    assert_eq!(report_c.classification, Classification::DivergingExponent);
    let final_exp = report_c.steps.last().unwrap().exponent_partial;
    assert!(final_exp > 1e6, "exponent only reached {final_exp}");
    assert!(report_c.exponent_exceeded_threshold);
    let mid_exp = report_c.steps[150].exponent_partial;
    assert!(final_exp > mid_exp, "exponent trend is not positive");

    println!(
        "acceptance 6 truncation dichotomies: PASS \
         (settled product dev {dev_a:.2e}; vanishing-det amplitude {:.2e}; \
         exponent reached {final_exp:.3e} and rising)",
        report_b.final_amplitude()
    );
}

#[test]
fn criterion_7_nested_study_consistency() {
    let mut worst_exp: f64 = 0.0;
    let mut worst_final: f64 = 0.0;
    let mut spectrum_lo: f64 = f64::INFINITY;
    let mut spectrum_hi: f64 = f64::NEG_INFINITY;
    for i in 0..10u64 {
        let mut rng = sampling::rng(60_000 + i);
        let (space, s) = sampling::random_space(&mut rng, 12, 0.25);
        let t = sampling::random_covariance_on(&mut rng, &space, 0.25);
        let shift = sampling::random_shift(&mut rng, 12, 0.7);
        let ambient = NestedAmbient::new(s.clone(), t.clone(), shift.clone()).unwrap();
        let nested = nested_study(&ambient, &TruncationConfig::default()).unwrap();

        for step in 0..12 {
            let dev = (nested.reference_exponents[step] - nested.direct_exponents[step]).abs();
            worst_exp = worst_exp.max(dev);
            assert!(dev <= 1e-9, "instance {i} step {step}: exponent deviation {dev:.3e}");
            let (lo, hi) = nested.c_spectrum_bounds[step];
            spectrum_lo = spectrum_lo.min(lo);
            spectrum_hi = spectrum_hi.max(hi);
            assert!(lo >= 1.0 - 1e-10 && hi <= 2.0 + 1e-10);
        }

        let direct = transition_amplitude(
            &CoherentStateSpec::new(s, shift).unwrap(),
            &CoherentStateSpec::quasifree(t),
        )
        .unwrap()
        .value;
        let dev = (nested.truncation.steps.last().unwrap().amplitude - direct).abs();
        worst_final = worst_final.max(dev);
        assert!(dev <= 1e-10, "instance {i}: final step vs direct deviation {dev:.3e}");
    }
    println!(
        "acceptance 7 nested-study consistency: PASS \
         (10 ambient problems at size 12; worst exponent deviation {worst_exp:.2e}, \
         reference spectrum within [{spectrum_lo:.12}, {spectrum_hi:.12}], \
         worst final deviation {worst_final:.2e})"
    );
}
