//! Independent numerical verification of the amplitude formula: the Gaussian
//! overlap integral
//!
//! ```text
//! (N_S · N_T)^{-1/2} ∫ exp(-(A(x,x)+B(x,x))/2 + iλ(x)) dx
//! ```
//!
//! evaluated by tensor-product Gauss-Hermite quadrature and by importance-
//! sampled Monte Carlo, plus the closed-form Hellinger affinity of two
//! Gaussian measures. N_S = ∫ e^{-A(x,x)} dx = π^{n/2}/√det(A) is the
//! normalization that makes the self-overlap equal 1.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::ccr::{CoherentStateSpec, CovarianceForm};
use crate::error::{Error, Result};
use crate::forms::half_sum_sqrt_form;
use crate::linalg::{sym_eigen_sorted, Kahan};

/// Hard cap on the number of tensor-product quadrature points. 60 nodes per
/// dimension fit through dimension 4; the minimum 20 nodes fit exactly at
/// dimension 6.
pub const MAX_QUADRATURE_POINTS: u128 = 64_000_000;

/// Largest dimension the quadrature oracle accepts.
pub const MAX_QUADRATURE_DIM: usize = 6;

/// Monte-Carlo samples are drawn in fixed-size blocks, each on its own RNG
/// stream, so the estimate does not depend on how blocks are scheduled.
const MC_BLOCK: usize = 65_536;

/// The real data of the overlap integrand: A and B restricted to real
/// arguments, the shift difference, and the log-normalizations.
#[derive(Clone, Debug)]
pub struct OverlapIntegrand {
    a_real: DMatrix<f64>,
    b_real: DMatrix<f64>,
    lambda: DVector<f64>,
    log_n_s: f64,
    log_n_t: f64,
}

/// log ∫ e^{-F(x,x)} dx = (n/2)·log π - (1/2)·log det F, for F positive
/// definite on real arguments.
fn log_gaussian_norm(f_real: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let n = f_real.nrows();
    let (values, _) = sym_eigen_sorted(f_real);
    let largest = values.last().copied().unwrap_or(0.0).max(0.0);
    if n == 0 || values[0] <= tol * largest || largest == 0.0 {
        return Err(Error::DegenerateOracle);
    }
    let log_det: f64 = values.iter().map(|d| d.ln()).sum();
    Ok(0.5 * (n as f64) * PI.ln() - 0.5 * log_det)
}

impl OverlapIntegrand {
    /// Builds the integrand for a pair of covariance forms and the shift
    /// difference λ = α - β. Fails with [`Error::DegenerateOracle`] when
    /// either A or B is degenerate on real arguments (the normalizations do
    /// not exist; reduce the pair first).
    pub fn new(s: &CovarianceForm, t: &CovarianceForm, lambda: &DVector<f64>) -> Result<Self> {
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
        let tol = s.form().tol().max(t.form().tol());
        let a_real = half_sum_sqrt_form(s.form()).real_matrix();
        let b_real = half_sum_sqrt_form(t.form()).real_matrix();
        let log_n_s = log_gaussian_norm(&a_real, tol)?;
        let log_n_t = log_gaussian_norm(&b_real, tol)?;
        Ok(Self {
            a_real,
            b_real,
            lambda: lambda.clone(),
            log_n_s,
            log_n_t,
        })
    }

    /// Builds the integrand from two coherent states, taking λ = α - β.
    pub fn from_states(a: &CoherentStateSpec, b: &CoherentStateSpec) -> Result<Self> {
        Self::new(a.covariance(), b.covariance(), &(a.shift() - b.shift()))
    }

    pub fn dim(&self) -> usize {
        self.a_real.nrows()
    }

    /// N_S = ∫ e^{-A(x,x)} dx.
    pub fn n_s(&self) -> f64 {
        self.log_n_s.exp()
    }

    /// N_T = ∫ e^{-B(x,x)} dx.
    pub fn n_t(&self) -> f64 {
        self.log_n_t.exp()
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// The integrand value e^{-(A(x,x)+B(x,x))/2}·(cos λ(x), sin λ(x)) at a
    /// real point, before normalization.
    pub fn eval(&self, x: &DVector<f64>) -> num_complex::Complex64 {
        let a = (x.transpose() * &self.a_real * x)[(0, 0)];
        let b = (x.transpose() * &self.b_real * x)[(0, 0)];
        let phase = self.lambda.dot(x);
        num_complex::Complex64::from_polar((-0.5 * (a + b)).exp(), phase)
    }

    /// Whitens (A+B)/2 to the identity: returns (log det of (A+B)/2, the map
    /// W with x = W·u, and the rotated shift c = Wᵀλ).
    fn whiten(&self) -> Result<(f64, DMatrix<f64>, DVector<f64>)> {
        let q2 = (&self.a_real + &self.b_real).map(|x| 0.5 * x);
        let (values, vectors) = sym_eigen_sorted(&q2);
        let largest = values.last().copied().unwrap_or(0.0).max(0.0);
        if values.is_empty() || values[0] <= 1e-12 * largest || largest == 0.0 {
            return Err(Error::DegenerateOracle);
        }
        let log_det: f64 = values.iter().map(|d| d.ln()).sum();
        let mut w = vectors;
        for (j, &d) in values.iter().enumerate() {
            let s = d.sqrt().recip();
            w.column_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        let c = w.transpose() * &self.lambda;
        Ok((log_det, w, c))
    }
}

/// Gauss-Hermite rule for the weight e^{-x²}: nodes and weights computed by
/// the Golub-Welsch eigenvalue method, with the node set symmetrized about 0.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "a quadrature rule needs at least one node");
        // Jacobi matrix of the (physicists') Hermite recurrence: zero
        // diagonal, off-diagonal β_k = √(k/2).
        let mut jacobi = DMatrix::zeros(m, m);
        for k in 1..m {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut nodes: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut weights: Vec<f64> = order
            .iter()
            .map(|&i| {
                let v0 = eig.eigenvectors[(0, i)];
                PI.sqrt() * v0 * v0
            })
            .collect();
        // Enforce the exact ± symmetry of the rule; it is what cancels the
        // sine part of oscillatory integrands.
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ e^{-x²} f(x) dx ≈ Σ wᵢ f(xᵢ).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = Kahan::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(*x));
        }
        acc.value()
    }
}

/// Evaluates the overlap integral by tensor-product Gauss-Hermite quadrature
/// after whitening by (A+B)/2. Requires `nodes ≥ 20`, dimension ≤ 6 and
/// `nodes^dim` within [`MAX_QUADRATURE_POINTS`]. The imaginary part of the
/// integral vanishes by the symmetry of the weight and is asserted to.
pub fn overlap_quadrature(
    s: &CovarianceForm,
    t: &CovarianceForm,
    lambda: &DVector<f64>,
    nodes: usize,
) -> Result<f64> {
    assert!(nodes >= 20, "quadrature needs at least 20 nodes per axis");
    let n = s.dim();
    if n > MAX_QUADRATURE_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_QUADRATURE_DIM,
        });
    }
    let integrand = OverlapIntegrand::new(s, t, lambda)?;
    let points = (nodes as u128).pow(n as u32);
    if points > MAX_QUADRATURE_POINTS {
        return Err(Error::QuadratureTooLarge {
            points,
            cap: MAX_QUADRATURE_POINTS,
        });
    }
    let (log_det_q2, _, c) = integrand.whiten()?;
    let log_prefactor = -0.5 * (integrand.log_n_s + integrand.log_n_t) - 0.5 * log_det_q2;
    let rule = GaussHermite::new(nodes);

    if n == 0 {
        return Ok(log_prefactor.exp());
    }

    // Tensor odometer over n digits. Partial weight products and partial
    // phases per level are updated incrementally, so a full sweep costs
    // O(nodes^n) rather than O(n·nodes^n).
    let xs = rule.nodes();
    let ws = rule.weights();
    let m = rule.len();
    let mut idx = vec![0usize; n];
    let mut pw = vec![1.0f64; n + 1];
    let mut pd = vec![0.0f64; n + 1];
    for k in 0..n {
        pw[k + 1] = pw[k] * ws[0];
        pd[k + 1] = pd[k] + c[k] * xs[0];
    }
    let mut sum_cos = Kahan::new();
    let mut sum_sin = Kahan::new();
    'sweep: loop {
        let weight = pw[n];
        let (sin, cos) = pd[n].sin_cos();
        sum_cos.add(weight * cos);
        sum_sin.add(weight * sin);
        let mut k = n;
        loop {
            if k == 0 {
                break 'sweep;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
        for j in k..n {
            pw[j + 1] = pw[j] * ws[idx[j]];
            pd[j + 1] = pd[j] + c[j] * xs[idx[j]];
        }
    }
    let prefactor = log_prefactor.exp();
    let value = prefactor * sum_cos.value();
    let imag = prefactor * sum_sin.value();
    assert!(
        imag.abs() < 1e-10 * (1.0 + value.abs()),
        "imaginary part {imag:.3e} of the overlap integral should vanish by symmetry"
    );
    Ok(value.max(0.0))
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Evaluates the overlap integral by importance sampling with the Gaussian
/// proposal matched to (A+B)/2. Deterministic for a fixed seed: samples are
/// drawn in blocks of 65536, block b on stream b of a counter-based
/// generator, and block sums are combined in index order with compensated
/// summation — the result is independent of any parallel scheduling of
/// blocks.
pub fn overlap_monte_carlo(
    s: &CovarianceForm,
    t: &CovarianceForm,
    lambda: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    assert!(samples >= 2, "variance estimation needs at least 2 samples");
    let integrand = OverlapIntegrand::new(s, t, lambda)?;
    let n = integrand.dim();
    let (log_det_q2, _, c) = integrand.whiten()?;
    // value = prefactor · E[cos(cᵀu/√2)] under u ~ N(0, I).
    let log_prefactor = -0.5 * (integrand.log_n_s + integrand.log_n_t) - 0.5 * log_det_q2
        + 0.5 * (n as f64) * PI.ln();
    let c_scaled: Vec<f64> = c.iter().map(|x| x / f64::sqrt(2.0)).collect();

    let blocks = samples.div_ceil(MC_BLOCK);
    let mut total = Kahan::new();
    let mut total_sq = Kahan::new();
    for block in 0..blocks {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let count = MC_BLOCK.min(samples - block * MC_BLOCK);
        let mut block_sum = Kahan::new();
        let mut block_sq = Kahan::new();
        for _ in 0..count {
            let mut phase = 0.0;
            for ck in &c_scaled {
                let g: f64 = StandardNormal.sample(&mut rng);
                phase += ck * g;
            }
            let v = phase.cos();
            block_sum.add(v);
            block_sq.add(v * v);
        }
        total.add(block_sum.value());
        total_sq.add(block_sq.value());
    }
    let count = samples as f64;
    let mean = total.value() / count;
    let variance = ((total_sq.value() - count * mean * mean) / (count - 1.0)).max(0.0);
    let prefactor = log_prefactor.exp();
    Ok(MonteCarloEstimate {
        estimate: prefactor * mean,
        stderr: prefactor * (variance / count).sqrt(),
    })
}

/// A Gaussian measure on Rⁿ: positive-semidefinite covariance matrix and
/// mean functional.
#[derive(Clone, Debug)]
pub struct GaussianMeasure {
    covariance: DMatrix<f64>,
    mean: DVector<f64>,
}

impl GaussianMeasure {
    pub fn new(covariance: DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        let n = covariance.nrows();
        if covariance.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: covariance.ncols(),
            });
        }
        if mean.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mean.len(),
            });
        }
        let sym_dev = crate::linalg::max_abs_entry(&(&covariance - covariance.transpose()));
        if sym_dev > 1e-12 * crate::linalg::max_abs_entry(&covariance).max(1.0) {
            return Err(Error::NotHermitian { deviation: sym_dev });
        }
        let covariance = crate::linalg::symmetrize(&covariance);
        if n > 0 {
            let (values, _) = sym_eigen_sorted(&covariance);
            let largest = values.last().copied().unwrap_or(0.0).max(0.0);
            if values[0] < -crate::forms::DEFAULT_TOL * largest {
                return Err(Error::NotPsd {
                    eigenvalue: values[0],
                    tol: crate::forms::DEFAULT_TOL * largest,
                });
            }
        }
        Ok(Self { covariance, mean })
    }

    /// The Gaussian measure attached to a coherent state: covariance A/2 on
    /// real arguments and mean vector equal to the shift coefficients. Under
    /// this convention the Hellinger affinity of the measures of two states
    /// reproduces the transition amplitude, exponent included.
    pub fn from_state(state: &CoherentStateSpec) -> Result<Self> {
        let a_real = half_sum_sqrt_form(state.covariance().form()).real_matrix();
        Self::new(a_real.map(|x| 0.5 * x), state.shift().clone())
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }
}

/// Closed-form Hellinger affinity ∫ √(dμ₁/dx · dμ₂/dx) dx of two
/// nondegenerate Gaussian measures:
///
/// ```text
/// det(C₁)^{1/4} det(C₂)^{1/4} / det((C₁+C₂)/2)^{1/2}
///     · exp(-(m₁-m₂)ᵀ((C₁+C₂)/2)⁻¹(m₁-m₂)/8)
/// ```
pub fn hellinger_affinity(mu1: &GaussianMeasure, mu2: &GaussianMeasure) -> Result<f64> {
    if mu1.dim() != mu2.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu1.dim(),
            got: mu2.dim(),
        });
    }
    let n = mu1.dim();
    if n == 0 {
        return Ok(1.0);
    }
    let log_det = |m: &DMatrix<f64>| -> Result<f64> {
        let (values, _) = sym_eigen_sorted(m);
        let largest = values.last().copied().unwrap_or(0.0).max(0.0);
        if values[0] <= 1e-12 * largest || largest == 0.0 {
            return Err(Error::DegenerateOracle);
        }
        Ok(values.iter().map(|d| d.ln()).sum())
    };
    let mid = (mu1.covariance() + mu2.covariance()).map(|x| 0.5 * x);
    let ld1 = log_det(mu1.covariance())?;
    let ld2 = log_det(mu2.covariance())?;
    let ld_mid = log_det(&mid)?;
    let d = mu1.mean() - mu2.mean();
    let solved = mid
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateOracle)?
        .solve(&d);
    let quad = d.dot(&solved);
    let log_h = 0.25 * (ld1 + ld2) - 0.5 * ld_mid - 0.125 * quad;
    Ok(log_h.min(0.0).exp())
}
