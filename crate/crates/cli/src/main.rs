//! `ccramp`: batch front-end for the transition-amplitude library.
//!
//! Reads a JSON problem file (one presymplectic space, named states, pairs,
//! oracle and truncation settings), then validates states, evaluates the
//! closed amplitude formula, checks it against the integration oracles, or
//! runs a truncation study — individually or all at once with `batch`.
//!
//! Exit codes: 0 success / within tolerance, 1 validation failure, 2 oracle
//! mismatch, 3 I/O or parse error. Identical inputs and seeds produce
//! byte-identical output; `--jobs` only spreads independent pairs over
//! threads and never reorders results.

mod problem;
mod report;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use ccramp::{
    nested_study, overlap_monte_carlo, overlap_quadrature, prefix_amplitudes, reduce_pair,
    transition_amplitude, CoherentStateSpec, ModeSequence, ReductionVerdict,
};
use ccramp::{NestedAmbient, TruncationConfig};

use problem::{OracleSection, ProblemFile, TruncationSection};
use report::{
    amplitude_json, oracle_json, render_amplitude_text, render_oracle_text,
    render_truncation_csv, render_validate_text, truncation_json, validate_json, AmplitudeRow,
    OracleRow, Settings, TruncationRecord, ValidateRow,
};

#[derive(Parser)]
#[command(
    name = "ccramp",
    version,
    about = "Transition amplitudes between square roots of coherent states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every state in a problem file against the covariance conditions.
    Validate(ValidateArgs),
    /// Evaluate the amplitude formula for one pair or the file's pair list.
    Amplitude(AmplitudeArgs),
    /// Compare the formula against quadrature and Monte-Carlo oracles.
    OracleCheck(OracleCheckArgs),
    /// Run the truncation study configured in the file and emit CSV.
    TruncationStudy(TruncationArgs),
    /// Validation, amplitudes, oracle checks and truncation in one run.
    Batch(BatchArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Emit a JSON record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AmplitudeArgs {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Evaluate a single pair NAME:NAME instead of the file's pair list.
    #[arg(long)]
    pair: Option<String>,
    /// Print the log-space breakdown only.
    #[arg(long)]
    log: bool,
    /// Emit a JSON record instead of text.
    #[arg(long)]
    json: bool,
    /// Worker threads across pairs; output order stays input order.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Check a single pair NAME:NAME instead of the file's pair list.
    #[arg(long)]
    pair: Option<String>,
    /// Largest acceptable |formula - quadrature| / formula.
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Quadrature nodes per axis (at least 20); overrides the file setting.
    #[arg(long)]
    nodes: Option<usize>,
    /// Monte-Carlo sample count; overrides the file setting.
    #[arg(long)]
    samples: Option<usize>,
    /// Monte-Carlo seed; overrides the file setting.
    #[arg(long)]
    seed: Option<u64>,
    /// Quotient out common kernels first; disjoint pairs then report a zero
    /// formula with no integral to check.
    #[arg(long)]
    reduce: bool,
    /// Emit a JSON record instead of text.
    #[arg(long)]
    json: bool,
    /// Worker threads across pairs; output order stays input order.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct TruncationArgs {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Emit a JSON record instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Largest acceptable |formula - quadrature| / formula.
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Quadrature nodes per axis (at least 20); overrides the file setting.
    #[arg(long)]
    nodes: Option<usize>,
    /// Monte-Carlo sample count; overrides the file setting.
    #[arg(long)]
    samples: Option<usize>,
    /// Monte-Carlo seed; overrides the file setting.
    #[arg(long)]
    seed: Option<u64>,
    /// Quotient out common kernels in the oracle section.
    #[arg(long)]
    reduce: bool,
    /// Log-space amplitude section.
    #[arg(long)]
    log: bool,
    /// Emit one JSON record instead of text sections.
    #[arg(long)]
    json: bool,
    /// Worker threads across pairs; output order stays input order.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    /// Library errors: a degenerate oracle is an oracle failure; everything
    /// else (non-Hermitian, not PSD, covariance violations, infeasible
    /// quadrature requests) counts as validation of the request.
    fn core(context: &str, e: ccramp::Error) -> Self {
        let code = match e {
            ccramp::Error::DegenerateOracle => 2,
            _ => 1,
        };
        Self {
            code,
            message: format!("{context}: {e}"),
        }
    }
}

fn main() {
    // Rust ignores SIGPIPE by default, which turns `ccramp ... | head` into
    // a panic on the first write after the reader is gone. Reports are meant
    // to be piped, so die quietly like any other filter.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Amplitude(args) => cmd_amplitude(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::TruncationStudy(args) => cmd_truncation(args),
        Command::Batch(args) => cmd_batch(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn load(input: &Path) -> Result<(ProblemFile, f64), Failure> {
    let tol = problem::psd_tolerance().map_err(Failure::parse)?;
    let file = ProblemFile::load(input).map_err(Failure::parse)?;
    Ok((file, tol))
}

fn into_object(value: Value) -> serde_json::Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => unreachable!("record roots are objects"),
    }
}

fn print_json(map: serde_json::Map<String, Value>) {
    let rendered =
        serde_json::to_string_pretty(&Value::Object(map)).expect("records are serializable");
    println!("{rendered}");
}

/// Per-state validation outcomes plus pair-name resolution problems.
fn validate_rows(
    file: &ProblemFile,
    tol: f64,
) -> Result<(Vec<ValidateRow>, Vec<String>), Failure> {
    let space = file.space().map_err(|e| Failure::core("space", e))?;
    let rows = file
        .states
        .iter()
        .map(|st| ValidateRow {
            name: st.name.clone(),
            error: file.build_state(&space, st, tol).err().map(|e| e.to_string()),
        })
        .collect();
    let mut pair_errors = Vec::new();
    for (left, right) in &file.pairs {
        for name in [left, right] {
            if file.state_index(name).is_none() {
                pair_errors.push(format!("pair {left}:{right}: unknown state {name:?}"));
            }
        }
    }
    Ok((rows, pair_errors))
}

fn build_all_states(file: &ProblemFile, tol: f64) -> Result<Vec<CoherentStateSpec>, Failure> {
    let space = file.space().map_err(|e| Failure::core("space", e))?;
    file.states
        .iter()
        .map(|st| {
            file.build_state(&space, st, tol)
                .map_err(|e| Failure::validation(format!("state {:?}: {e}", st.name)))
        })
        .collect()
}

struct PairJob {
    label: String,
    a: CoherentStateSpec,
    b: CoherentStateSpec,
    /// Position in the run; offsets the Monte-Carlo seed so pairs draw
    /// independent streams no matter how they are scheduled.
    index: usize,
}

fn pair_jobs(
    file: &ProblemFile,
    states: &[CoherentStateSpec],
    flag: Option<&str>,
) -> Result<Vec<PairJob>, Failure> {
    let pairs = file.select_pairs(flag).map_err(Failure::parse)?;
    pairs
        .into_iter()
        .enumerate()
        .map(|(index, (left, right))| {
            let ia = file
                .state_index(&left)
                .ok_or_else(|| Failure::validation(format!("unknown state {left:?}")))?;
            let ib = file
                .state_index(&right)
                .ok_or_else(|| Failure::validation(format!("unknown state {right:?}")))?;
            Ok(PairJob {
                label: format!("{left}:{right}"),
                a: states[ia].clone(),
                b: states[ib].clone(),
                index,
            })
        })
        .collect()
}

/// Maps pairs to results, optionally on a bounded thread pool. Collection
/// preserves input order, so reports never depend on scheduling.
fn run_jobs<T, F>(jobs: usize, items: &[PairJob], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&PairJob) -> T + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        items.iter().map(&f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.min(items.len()))
            .build()
            .expect("worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            items.par_iter().map(&f).collect()
        })
    }
}

fn amplitude_rows(jobs: usize, pairs: &[PairJob]) -> Result<Vec<AmplitudeRow>, Failure> {
    let results = run_jobs(jobs, pairs, |job| transition_amplitude(&job.a, &job.b));
    pairs
        .iter()
        .zip(results)
        .map(|(job, result)| {
            result
                .map(|r| AmplitudeRow {
                    pair: job.label.clone(),
                    result: r,
                })
                .map_err(|e| Failure::core(&format!("pair {}", job.label), e))
        })
        .collect()
}

fn effective_oracle(
    file: &ProblemFile,
    nodes: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> OracleSection {
    OracleSection {
        nodes: nodes.unwrap_or(file.oracle.nodes),
        samples: samples.unwrap_or(file.oracle.samples),
        seed: seed.unwrap_or(file.oracle.seed),
    }
}

fn oracle_row(
    job: &PairJob,
    oracle: &OracleSection,
    rtol: f64,
    reduce: bool,
) -> Result<OracleRow, Failure> {
    let context = format!("pair {}", job.label);
    let formula =
        transition_amplitude(&job.a, &job.b).map_err(|e| Failure::core(&context, e))?;
    let lambda = job.a.shift() - job.b.shift();
    let (s, t, lam, reduced) = if reduce {
        let reduction = reduce_pair(job.a.covariance(), job.b.covariance(), &lambda)
            .map_err(|e| Failure::core(&context, e))?;
        match reduction.verdict {
            ReductionVerdict::Reducible => {
                let red = reduction.reduced.expect("reducible verdict carries a quotient");
                let shrank = red.s.dim() != job.a.covariance().dim();
                (red.s, red.t, red.shift, shrank)
            }
            ReductionVerdict::DisjointKernelMismatch
            | ReductionVerdict::DisjointShiftOnKernel => {
                return Ok(OracleRow {
                    pair: job.label.clone(),
                    formula,
                    reduced: true,
                    skipped: Some(
                        "disjoint pair: the amplitude is exactly zero and there is no \
                         overlap integral to evaluate"
                            .to_string(),
                    ),
                    quadrature: None,
                    quadrature_rel_dev: None,
                    mc_estimate: None,
                    mc_stderr: None,
                    mc_sigma_dev: None,
                    within_rtol: true,
                });
            }
        }
    } else {
        (
            job.a.covariance().clone(),
            job.b.covariance().clone(),
            lambda,
            false,
        )
    };
    let seed = oracle.seed.wrapping_add(job.index as u64);
    let quadrature =
        overlap_quadrature(&s, &t, &lam, oracle.nodes).map_err(|e| Failure::core(&context, e))?;
    let mc = overlap_monte_carlo(&s, &t, &lam, oracle.samples, seed)
        .map_err(|e| Failure::core(&context, e))?;
    let denom = formula.value.max(f64::MIN_POSITIVE);
    let quad_rel = (formula.value - quadrature).abs() / denom;
    // A zero stderr means the integrand was constant over the samples (a
    // vanishing shift difference); a deviation in sigma units is undefined
    // then, so the field is omitted rather than inflated.
    let sigma_dev = (mc.stderr > 0.0).then(|| (formula.value - mc.estimate).abs() / mc.stderr);
    Ok(OracleRow {
        pair: job.label.clone(),
        formula,
        reduced,
        skipped: None,
        quadrature: Some(quadrature),
        quadrature_rel_dev: Some(quad_rel),
        mc_estimate: Some(mc.estimate),
        mc_stderr: Some(mc.stderr),
        mc_sigma_dev: sigma_dev,
        within_rtol: quad_rel <= rtol,
    })
}

fn oracle_rows(
    jobs: usize,
    pairs: &[PairJob],
    oracle: &OracleSection,
    rtol: f64,
    reduce: bool,
) -> Result<Vec<OracleRow>, Failure> {
    if oracle.nodes < 20 {
        return Err(Failure::parse(format!(
            "quadrature wants at least 20 nodes per axis, got {}",
            oracle.nodes
        )));
    }
    if oracle.samples < 2 {
        return Err(Failure::parse(format!(
            "Monte Carlo wants at least 2 samples, got {}",
            oracle.samples
        )));
    }
    let results = run_jobs(jobs, pairs, |job| oracle_row(job, oracle, rtol, reduce));
    results.into_iter().collect()
}

fn truncation_record(
    file: &ProblemFile,
    states: &[CoherentStateSpec],
    section: &TruncationSection,
    config: &TruncationConfig,
    tol: f64,
) -> Result<TruncationRecord, Failure> {
    if let Some(blocks) = &section.blocks {
        let blocks = file
            .build_blocks(blocks)
            .map_err(|e| Failure::core("truncation blocks", e))?;
        let seq = ModeSequence::new(blocks);
        let report = prefix_amplitudes(&seq, seq.len(), config)
            .map_err(|e| Failure::core("truncation", e))?;
        Ok(TruncationRecord::Blocks(report))
    } else {
        let ambient = section.ambient.as_ref().expect("preflight: blocks xor ambient");
        let (left, right) = &ambient.pair;
        let ia = file.state_index(left).ok_or_else(|| {
            Failure::validation(format!("truncation.ambient: unknown state {left:?}"))
        })?;
        let ib = file.state_index(right).ok_or_else(|| {
            Failure::validation(format!("truncation.ambient: unknown state {right:?}"))
        })?;
        let a = &states[ia];
        let b = &states[ib];
        let dim = file.dimension();
        let steps = ambient.steps.unwrap_or(dim.min(12));
        let lambda = a.shift() - b.shift();
        let (s, t, lam) = if steps < dim {
            (
                ProblemFile::restrict_form(a.covariance(), steps, tol)
                    .map_err(|e| Failure::core("truncation.ambient restriction", e))?,
                ProblemFile::restrict_form(b.covariance(), steps, tol)
                    .map_err(|e| Failure::core("truncation.ambient restriction", e))?,
                lambda.rows(0, steps).into_owned(),
            )
        } else {
            (a.covariance().clone(), b.covariance().clone(), lambda)
        };
        let ambient_problem = NestedAmbient::new(s, t, lam)
            .map_err(|e| Failure::core("truncation.ambient", e))?;
        let nested =
            nested_study(&ambient_problem, config).map_err(|e| Failure::core("nested study", e))?;
        Ok(TruncationRecord::Ambient(nested))
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32, Failure> {
    let (file, tol) = load(&args.input)?;
    let (rows, pair_errors) = validate_rows(&file, tol)?;
    let settings = Settings::bare(tol);
    if args.json {
        let mut map = into_object(validate_json(&rows, &pair_errors));
        map.insert("command".to_string(), json!("validate"));
        map.insert("settings".to_string(), settings.json());
        print_json(map);
    } else {
        print!(
            "{}\n{}",
            settings.comment(),
            render_validate_text(&rows, &pair_errors)
        );
    }
    let ok = rows.iter().all(|r| r.error.is_none()) && pair_errors.is_empty();
    Ok(if ok { 0 } else { 1 })
}

fn cmd_amplitude(args: &AmplitudeArgs) -> Result<i32, Failure> {
    let (file, tol) = load(&args.input)?;
    let states = build_all_states(&file, tol)?;
    let pairs = pair_jobs(&file, &states, args.pair.as_deref())?;
    let rows = amplitude_rows(args.jobs, &pairs)?;
    let settings = Settings::bare(tol);
    if args.json {
        let mut map = serde_json::Map::new();
        map.insert("command".to_string(), json!("amplitude"));
        map.insert("settings".to_string(), settings.json());
        map.insert("results".to_string(), amplitude_json(&rows, args.log));
        print_json(map);
    } else {
        print!(
            "{}\n{}",
            settings.comment(),
            render_amplitude_text(&rows, args.log)
        );
    }
    Ok(0)
}

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<i32, Failure> {
    let (file, tol) = load(&args.input)?;
    let states = build_all_states(&file, tol)?;
    let pairs = pair_jobs(&file, &states, args.pair.as_deref())?;
    let oracle = effective_oracle(&file, args.nodes, args.samples, args.seed);
    let rows = oracle_rows(args.jobs, &pairs, &oracle, args.rtol, args.reduce)?;
    let settings = Settings {
        tol,
        rtol: Some(args.rtol),
        nodes: Some(oracle.nodes),
        samples: Some(oracle.samples),
        seed: Some(oracle.seed),
        ..Settings::default()
    };
    if args.json {
        let mut map = serde_json::Map::new();
        map.insert("command".to_string(), json!("oracle-check"));
        map.insert("settings".to_string(), settings.json());
        map.insert("results".to_string(), oracle_json(&rows));
        map.insert(
            "all_within_rtol".to_string(),
            json!(rows.iter().all(|r| r.within_rtol)),
        );
        print_json(map);
    } else {
        print!("{}\n{}", settings.comment(), render_oracle_text(&rows));
    }
    Ok(if rows.iter().all(|r| r.within_rtol) { 0 } else { 2 })
}

fn cmd_truncation(args: &TruncationArgs) -> Result<i32, Failure> {
    let (file, tol) = load(&args.input)?;
    let section = file.truncation.as_ref().ok_or_else(|| {
        Failure::parse(format!(
            "{}: no truncation section in file",
            args.input.display()
        ))
    })?;
    let states = build_all_states(&file, tol)?;
    let config = section.config();
    let record = truncation_record(&file, &states, section, &config, tol)?;
    let settings = Settings {
        tol,
        cauchy_tol: Some(config.cauchy_tol),
        exponent_threshold: Some(config.exponent_threshold),
        ..Settings::default()
    };
    if args.json {
        let mut map = into_object(truncation_json(&record));
        map.insert("command".to_string(), json!("truncation-study"));
        map.insert("settings".to_string(), settings.json());
        print_json(map);
    } else {
        print!("{}\n{}", settings.comment(), render_truncation_csv(&record));
    }
    Ok(0)
}

fn cmd_batch(args: &BatchArgs) -> Result<i32, Failure> {
    let (file, tol) = load(&args.input)?;
    let oracle = effective_oracle(&file, args.nodes, args.samples, args.seed);
    let config = file.truncation.as_ref().map(|t| t.config());
    let settings = Settings {
        tol,
        rtol: Some(args.rtol),
        nodes: Some(oracle.nodes),
        samples: Some(oracle.samples),
        seed: Some(oracle.seed),
        cauchy_tol: config.as_ref().map(|c| c.cauchy_tol),
        exponent_threshold: config.as_ref().map(|c| c.exponent_threshold),
    };

    let (vrows, pair_errors) = validate_rows(&file, tol)?;
    let valid = vrows.iter().all(|r| r.error.is_none()) && pair_errors.is_empty();
    if !valid {
        if args.json {
            let mut map = serde_json::Map::new();
            map.insert("command".to_string(), json!("batch"));
            map.insert("settings".to_string(), settings.json());
            map.insert(
                "validate".to_string(),
                validate_json(&vrows, &pair_errors),
            );
            map.insert("stopped".to_string(), json!("invalid problem file"));
            print_json(map);
        } else {
            print!(
                "{}\n== validate ==\n{}batch stopped: invalid problem file\n",
                settings.comment(),
                render_validate_text(&vrows, &pair_errors)
            );
        }
        return Ok(1);
    }

    let states = build_all_states(&file, tol)?;
    let pairs = pair_jobs(&file, &states, None)?;
    let arows = amplitude_rows(args.jobs, &pairs)?;
    let orows = oracle_rows(args.jobs, &pairs, &oracle, args.rtol, args.reduce)?;
    let trecord = match (&file.truncation, &config) {
        (Some(section), Some(config)) => {
            Some(truncation_record(&file, &states, section, config, tol)?)
        }
        _ => None,
    };

    if args.json {
        let mut map = serde_json::Map::new();
        map.insert("command".to_string(), json!("batch"));
        map.insert("settings".to_string(), settings.json());
        map.insert("validate".to_string(), validate_json(&vrows, &pair_errors));
        map.insert("amplitudes".to_string(), amplitude_json(&arows, args.log));
        map.insert("oracle_checks".to_string(), oracle_json(&orows));
        map.insert(
            "all_within_rtol".to_string(),
            json!(orows.iter().all(|r| r.within_rtol)),
        );
        if let Some(record) = &trecord {
            map.insert("truncation".to_string(), truncation_json(record));
        }
        print_json(map);
    } else {
        let mut out = String::new();
        out.push_str(&settings.comment());
        out.push('\n');
        out.push_str("== validate ==\n");
        out.push_str(&render_validate_text(&vrows, &pair_errors));
        out.push_str("== amplitude ==\n");
        out.push_str(&render_amplitude_text(&arows, args.log));
        out.push_str("== oracle-check ==\n");
        out.push_str(&render_oracle_text(&orows));
        if let Some(record) = &trecord {
            out.push_str("== truncation-study ==\n");
            out.push_str(&render_truncation_csv(record));
        }
        print!("{out}");
    }
    Ok(if orows.iter().all(|r| r.within_rtol) {
        0
    } else {
        2
    })
}
