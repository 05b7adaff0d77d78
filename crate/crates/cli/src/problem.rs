//! Problem files: the JSON schema the CLI ingests and its parse-time checks.
//!
//! A file carries one presymplectic space, a named list of states on it, the
//! pairs to evaluate, and optional oracle/truncation settings. Matrices are
//! row-major arrays of rows; complex matrices are split into real and
//! imaginary parts. Structural problems (malformed JSON, shape mismatches,
//! sigma not antisymmetric, `s_im` ≠ sigma/2, duplicate names) are rejected
//! here, before any state is validated, so they map to the I/O-or-parse exit
//! code rather than the validation one.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;

use ccramp::{
    validate_covariance, CoherentStateSpec, CovarianceForm, ModeBlock, PresymplecticSpace,
    TruncationConfig, DEFAULT_TOL,
};

/// The one schema revision this build reads.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub space: SpaceSection,
    pub states: Vec<StateSection>,
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub truncation: Option<TruncationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub dimension: usize,
    /// Row-major; must be antisymmetric.
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub name: String,
    /// Row-major real part of the covariance matrix.
    pub s_re: Vec<Vec<f64>>,
    /// Row-major imaginary part; must equal sigma/2 entrywise.
    pub s_im: Vec<Vec<f64>>,
    pub shift: Vec<f64>,
}

/// Oracle settings; command-line flags override these.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub nodes: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            nodes: 40,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Truncation settings: exactly one of `blocks` (a mode sequence) or
/// `ambient` (a nested restriction study).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default)]
    pub blocks: Option<Vec<BlockSection>>,
    #[serde(default)]
    pub ambient: Option<AmbientSection>,
    #[serde(default)]
    pub cauchy_tol: Option<f64>,
    #[serde(default)]
    pub exponent_threshold: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum BlockSection {
    /// One classical scalar mode: S = [s], T = [t], shift [shift].
    #[serde(rename = "classical")]
    Classical { s: f64, t: f64, shift: f64 },
    /// One minimal quantum mode with a two-component real shift.
    #[serde(rename = "minimal")]
    Minimal { shift: [f64; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSection {
    pub pair: (String, String),
    /// Restriction depth N; defaults to min(dimension, 12).
    #[serde(default)]
    pub steps: Option<usize>,
}

impl TruncationSection {
    pub fn config(&self) -> TruncationConfig {
        let defaults = TruncationConfig::default();
        TruncationConfig {
            cauchy_tol: self.cauchy_tol.unwrap_or(defaults.cauchy_tol),
            exponent_threshold: self
                .exponent_threshold
                .unwrap_or(defaults.exponent_threshold),
        }
    }
}

/// Global PSD tolerance: `CCR_AMPLITUDE_TOL` when set, the library default
/// otherwise. Rejects non-numeric or out-of-range overrides.
pub fn psd_tolerance() -> Result<f64, String> {
    match std::env::var("CCR_AMPLITUDE_TOL") {
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_TOL),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err("CCR_AMPLITUDE_TOL is not valid unicode".to_string())
        }
        Ok(raw) => {
            let tol: f64 = raw
                .trim()
                .parse()
                .map_err(|_| format!("CCR_AMPLITUDE_TOL is not a number: {raw:?}"))?;
            if !tol.is_finite() || tol <= 0.0 || tol >= 1.0 {
                return Err(format!(
                    "CCR_AMPLITUDE_TOL must lie in (0, 1), got {raw:?}"
                ));
            }
            Ok(tol)
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<DMatrix<f64>, String> {
    if rows.len() != dim {
        return Err(format!("{what}: expected {dim} rows, got {}", rows.len()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(format!(
                "{what}: row {i} has {} entries, expected {dim}",
                row.len()
            ));
        }
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

impl ProblemFile {
    /// Reads and structurally checks a problem file. Everything that fails
    /// here is a parse error; state validation happens later, per state.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let file: ProblemFile = serde_json::from_str(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        file.preflight()?;
        Ok(file)
    }

    fn preflight(&self) -> Result<(), String> {
        if self.version != FORMAT_VERSION {
            return Err(format!(
                "unsupported format version {} (this build reads version {FORMAT_VERSION})",
                self.version
            ));
        }
        let dim = self.space.dimension;
        let sigma = matrix_from_rows(&self.space.sigma, dim, "space.sigma")?;
        let scale = max_abs(&sigma).max(1.0);
        let skew = max_abs(&(&sigma + sigma.transpose()));
        if skew > 1e-12 * scale {
            return Err(format!(
                "space.sigma is not antisymmetric: max |sigma + sigma^T| = {skew:e}"
            ));
        }

        let mut seen = std::collections::BTreeSet::new();
        for state in &self.states {
            if !seen.insert(state.name.as_str()) {
                return Err(format!("duplicate state name {:?}", state.name));
            }
            matrix_from_rows(&state.s_re, dim, &format!("state {:?} s_re", state.name))?;
            let s_im =
                matrix_from_rows(&state.s_im, dim, &format!("state {:?} s_im", state.name))?;
            let dev = max_abs(&(&s_im - sigma.map(|x| 0.5 * x)));
            if dev > 1e-12 * scale {
                return Err(format!(
                    "state {:?}: s_im must equal sigma/2 entrywise, max deviation {dev:e}",
                    state.name
                ));
            }
            if state.shift.len() != dim {
                return Err(format!(
                    "state {:?}: shift has {} entries, expected {dim}",
                    state.name,
                    state.shift.len()
                ));
            }
        }

        for (left, right) in &self.pairs {
            if left.is_empty() || right.is_empty() {
                return Err("pair with an empty state name".to_string());
            }
        }

        if let Some(trunc) = &self.truncation {
            match (&trunc.blocks, &trunc.ambient) {
                (Some(_), Some(_)) => {
                    return Err(
                        "truncation: give either blocks or ambient, not both".to_string()
                    )
                }
                (None, None) => {
                    return Err("truncation: needs blocks or an ambient pair".to_string())
                }
                _ => {}
            }
            if let Some(ambient) = &trunc.ambient {
                if let Some(steps) = ambient.steps {
                    if steps == 0 || steps > dim {
                        return Err(format!(
                            "truncation.ambient.steps must lie in 1..={dim}, got {steps}"
                        ));
                    }
                }
            }
            for tol in [trunc.cauchy_tol, trunc.exponent_threshold].into_iter().flatten() {
                if !tol.is_finite() || tol <= 0.0 {
                    return Err("truncation thresholds must be positive and finite".to_string());
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension
    }

    pub fn space(&self) -> ccramp::Result<PresymplecticSpace> {
        let dim = self.space.dimension;
        PresymplecticSpace::new(DMatrix::from_fn(dim, dim, |i, j| self.space.sigma[i][j]))
    }

    /// Builds one state against the shared space. Errors are validation
    /// failures (non-Hermitian, not PSD, covariance condition violated).
    pub fn build_state(
        &self,
        space: &PresymplecticSpace,
        state: &StateSection,
        tol: f64,
    ) -> ccramp::Result<CoherentStateSpec> {
        let dim = self.space.dimension;
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(state.s_re[i][j], state.s_im[i][j])
        });
        let form = validate_covariance(space, matrix, tol)?;
        CoherentStateSpec::new(form, DVector::from_row_slice(&state.shift))
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    /// The pairs a run evaluates: the single `--pair` selection when given,
    /// the file's pair list otherwise, in file order either way.
    pub fn select_pairs(&self, flag: Option<&str>) -> Result<Vec<(String, String)>, String> {
        match flag {
            Some(arg) => {
                let (left, right) = arg
                    .split_once(':')
                    .ok_or_else(|| format!("--pair wants NAME:NAME, got {arg:?}"))?;
                Ok(vec![(left.to_string(), right.to_string())])
            }
            None => Ok(self.pairs.clone()),
        }
    }

    /// Builds the block sequence of the truncation section.
    pub fn build_blocks(&self, sections: &[BlockSection]) -> ccramp::Result<Vec<ModeBlock>> {
        sections
            .iter()
            .map(|b| match b {
                BlockSection::Classical { s, t, shift } => ModeBlock::classical(*s, *t, *shift),
                BlockSection::Minimal { shift } => {
                    ModeBlock::minimal(DVector::from_row_slice(shift))
                }
            })
            .collect()
    }

    /// Restricts a covariance form to the leading `n` coordinates. The
    /// leading block of a PSD matrix is PSD and the imaginary part restricts
    /// along with sigma, so revalidation can only fail on numerically
    /// marginal inputs.
    pub fn restrict_form(
        form: &CovarianceForm,
        n: usize,
        tol: f64,
    ) -> ccramp::Result<CovarianceForm> {
        let sigma_n = form.space().sigma().view((0, 0), (n, n)).into_owned();
        let space_n = PresymplecticSpace::new(sigma_n)?;
        let m_n = form.form().matrix().view((0, 0), (n, n)).into_owned();
        validate_covariance(&space_n, m_n, tol)
    }
}
