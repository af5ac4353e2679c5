//! Experiment configuration, trial execution, and report serialization.
//!
//! A config pins the class, adversary, learner, horizon, trial count, and
//! seed; the seed fully determines every sequence, so running the same
//! config twice produces byte-identical reports and traces. Each trial
//! asserts every inequality the chosen learner certifies and the report
//! records one pass/fail entry per inequality with `1e-9` slack.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use llab_core::adversary::{min_mass_adversary, noisy_adversary, tree_walk_adversary};
use llab_core::agnostic::{aag_run, best_expert_witness, finite_y_run, AagLearner, MixtureTrace};
use llab_core::concept::{
    example1_class, full_binary_class, is_realizable, random_class, ClassRef, ConceptClass,
    LabeledSequence, VersionSpace,
};
use llab_core::dims::{littlestone_dim, sequential_graph_dim};
use llab_core::soa::{soa_run, SoaState};
use llab_core::Caps;

/// Slack allowed on every asserted inequality.
pub const SLACK: f64 = 1e-9;

/// Where the concept class comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSource {
    /// A class file in the standard JSON format.
    File { path: PathBuf },
    /// The separating family over `m` points.
    Example1 { m: usize },
    /// Every binary labeling of `n` points.
    FullBinary { n: usize },
    /// A seeded random table.
    Random { seed: u64, nx: usize, ny: usize, nh: usize },
}

impl ClassSource {
    /// Builds or loads the class.
    pub fn load(&self, caps: &Caps) -> Result<ClassRef> {
        let class = match self {
            ClassSource::File { path } => ConceptClass::from_file(path, caps)
                .with_context(|| format!("loading class {}", path.display()))?,
            ClassSource::Example1 { m } => example1_class(*m, caps)?,
            ClassSource::FullBinary { n } => full_binary_class(*n, caps)?,
            ClassSource::Random { seed, nx, ny, nh } => random_class(*seed, *nx, *ny, *nh, caps)?,
        };
        Ok(class)
    }

    fn describe(&self) -> String {
        match self {
            ClassSource::File { path } => format!("file:{}", path.display()),
            ClassSource::Example1 { m } => format!("example1(m={m})"),
            ClassSource::FullBinary { n } => format!("full_binary(n={n})"),
            ClassSource::Random { seed, nx, ny, nh } => {
                format!("random(seed={seed},nx={nx},ny={ny},nh={nh})")
            }
        }
    }
}

/// How each trial's sequence is produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// A fixed sequence file; every trial replays it.
    Sequence { path: PathBuf },
    /// Labels from the given hypothesis, each corrupted with probability
    /// `rate`; re-seeded per trial.
    Noisy { hypothesis: usize, rate: f64 },
    /// Walks a shattered tree against the learner (point learners only).
    TreeWalk,
    /// Reveals the realized label the learner weights least (distribution
    /// learners only).
    MinMass,
}

/// Which learner plays the trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerSpec {
    /// Subsequence-expert mixture.
    Aag,
    /// `(J, Y)`-expert mixture.
    FiniteY,
    /// Deterministic SOA with full updates.
    Soa,
}

impl LearnerSpec {
    fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Aag => "aag",
            LearnerSpec::FiniteY => "finitey",
            LearnerSpec::Soa => "soa",
        }
    }
}

fn default_trials() -> usize {
    1
}

/// A full experiment description. The seed determines all randomness.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: ClassSource,
    pub adversary: AdversarySpec,
    pub learner: LearnerSpec,
    /// Rounds per trial. Defaults to the sequence length for fixed
    /// sequences and to the class dimension for the tree walker.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// When set, writes `{prefix}.csv` traces and a `{prefix}.json` report.
    #[serde(default)]
    pub out_prefix: Option<PathBuf>,
    /// Test-only hook: zero every asserted bound so violations are certain
    /// to be reported and the process exits nonzero.
    #[serde(default)]
    pub falsify_bounds: bool,
}

/// One asserted inequality `lhs <= rhs + 1e-9`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

fn make_check(name: &str, lhs: f64, rhs: f64, falsify: bool) -> Check {
    let rhs = if falsify { rhs * 0.0 } else { rhs };
    Check { name: name.to_string(), lhs, rhs, pass: lhs <= rhs + SLACK }
}

/// Learner-specific witness data attached to each trial.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Aag {
        h_star: usize,
        j_star: Vec<usize>,
        class_dim: i32,
        witness_mistakes: u64,
        in_family: bool,
    },
    FiniteY {
        h_star: usize,
        j_star: Vec<usize>,
        y_star: Vec<usize>,
        replicates_h_star: bool,
        witness_mistakes: u64,
    },
    Soa {
        mistakes: u64,
        realizable: bool,
        class_dim: i32,
    },
}

/// One CSV trace row.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: usize,
    pub expected_loss: f64,
    pub cum_expected_loss: f64,
    pub opt_so_far: u64,
    pub bound: f64,
}

/// Per-trial summary.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub horizon: usize,
    pub opt: u64,
    pub regret: f64,
    pub bound: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub certificate: Certificate,
}

/// Whole-run summary.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub failures: usize,
    pub max_regret_minus_bound: f64,
}

/// The experiment report: per-trial rows plus the aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub class: String,
    pub learner: &'static str,
    pub seed: u64,
    /// Graph-dimension bound check, omitted when the loss-class product
    /// exceeds the resource cap.
    pub dimension_check: Option<Check>,
    pub trials: Vec<TrialReport>,
    pub aggregate: Aggregate,
    pub pass: bool,
}

/// Report plus the per-trial traces backing the CSV files.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub traces: Vec<Vec<TraceRow>>,
}

struct TrialRun {
    rows: Vec<TraceRow>,
    opt: u64,
    regret: f64,
    bound: f64,
    checks: Vec<Check>,
    certificate: Certificate,
}

fn rows_from_trace(trace: &MixtureTrace) -> Vec<TraceRow> {
    trace
        .rounds
        .iter()
        .map(|r| TraceRow {
            t: r.t,
            expected_loss: r.expected_loss,
            cum_expected_loss: r.cum_expected_loss,
            opt_so_far: r.opt_so_far,
            bound: trace.bound,
        })
        .collect()
}

/// Per-hypothesis running minimum of mistakes over each prefix of `s`.
fn opt_prefix(class: &ClassRef, s: &LabeledSequence) -> Vec<u64> {
    let mut counts = vec![0u64; class.n_hypotheses()];
    let mut out = Vec::with_capacity(s.len());
    for &(x, y) in s.entries() {
        for (h, c) in counts.iter_mut().enumerate() {
            if class.eval(h, x) != y {
                *c += 1;
            }
        }
        out.push(counts.iter().copied().min().unwrap_or(0));
    }
    out
}

fn run_aag_trial(
    class: &ClassRef,
    trace: MixtureTrace,
    s: &LabeledSequence,
    caps: &Caps,
    falsify: bool,
) -> Result<TrialRun> {
    let witness = best_expert_witness(class, s, caps)?;
    if witness.opt != trace.opt {
        bail!("witness OPT {} disagrees with trace OPT {}", witness.opt, trace.opt);
    }
    let checks = vec![
        make_check("subsequence_regret_bound", trace.regret, trace.bound, falsify),
        make_check(
            "witness_size",
            witness.j_star.len() as f64,
            witness.class_dim as f64,
            falsify,
        ),
        make_check(
            "witness_mistakes",
            witness.witness_mistakes as f64,
            (witness.opt + witness.class_dim.max(0) as u64) as f64,
            falsify,
        ),
    ];
    Ok(TrialRun {
        rows: rows_from_trace(&trace),
        opt: trace.opt,
        regret: trace.regret,
        bound: trace.bound,
        checks,
        certificate: Certificate::Aag {
            h_star: witness.h_star,
            j_star: witness.j_star,
            class_dim: witness.class_dim,
            witness_mistakes: witness.witness_mistakes,
            in_family: witness.in_family,
        },
    })
}

fn run_finite_y_trial(
    class: &ClassRef,
    s: &LabeledSequence,
    caps: &Caps,
    falsify: bool,
) -> Result<TrialRun> {
    let run = finite_y_run(class, s, caps)?;
    let cert = run.certificate;
    let checks = vec![
        make_check("expert_advice_regret_bound", run.trace.regret, run.trace.bound, falsify),
        make_check(
            "witness_attains_opt",
            cert.witness_mistakes as f64,
            cert.opt as f64,
            falsify,
        ),
        make_check(
            "witness_replicates",
            if cert.replicates_h_star { 0.0 } else { 1.0 },
            0.0,
            falsify,
        ),
    ];
    Ok(TrialRun {
        rows: rows_from_trace(&run.trace),
        opt: run.trace.opt,
        regret: run.trace.regret,
        bound: run.trace.bound,
        checks,
        certificate: Certificate::FiniteY {
            h_star: cert.h_star,
            j_star: cert.j_star,
            y_star: cert.y_star,
            replicates_h_star: cert.replicates_h_star,
            witness_mistakes: cert.witness_mistakes,
        },
    })
}

fn run_soa_trial(
    class: &ClassRef,
    s: &LabeledSequence,
    class_dim: i32,
    caps: &Caps,
    falsify: bool,
) -> Result<TrialRun> {
    let run = soa_run(class, s, caps)?;
    let realizable = is_realizable(&VersionSpace::full(class), s)?;
    let opt_so_far = opt_prefix(class, s);
    let opt = opt_so_far.last().copied().unwrap_or(0);
    let bound = class_dim.max(0) as f64;
    let mut cum = 0.0;
    let rows: Vec<TraceRow> = s
        .entries()
        .iter()
        .enumerate()
        .map(|(t, &(_, y))| {
            let loss = if run.predictions[t] != y { 1.0 } else { 0.0 };
            cum += loss;
            TraceRow {
                t: t + 1,
                expected_loss: loss,
                cum_expected_loss: cum,
                opt_so_far: opt_so_far[t],
                bound,
            }
        })
        .collect();
    // The mistake budget is a realizable-case guarantee; agnostic streams
    // report it as context without asserting it.
    let checks = if realizable {
        vec![make_check("soa_mistake_bound", run.mistakes as f64, bound, falsify)]
    } else {
        Vec::new()
    };
    Ok(TrialRun {
        rows,
        opt,
        regret: run.mistakes as f64 - opt as f64,
        bound,
        checks,
        certificate: Certificate::Soa { mistakes: run.mistakes as u64, realizable, class_dim },
    })
}

/// Runs every trial of `config`, asserting each applicable inequality, and
/// writes the CSV traces and JSON report when an output prefix is set.
pub fn run_experiment(config: &ExperimentConfig, caps: &Caps) -> Result<ExperimentOutcome> {
    if config.trials == 0 {
        bail!("trial count must be at least one");
    }
    let class = config.class.load(caps)?;
    let class_dim = littlestone_dim(&VersionSpace::full(&class), caps)?;

    let dimension_check = match sequential_graph_dim(&class, caps) {
        Ok(g) => {
            let l = class_dim.max(0) as f64;
            let rhs = 2.0 * l * (std::f64::consts::E * class.n_labels() as f64).log2();
            Some(make_check("graph_dimension_bound", g as f64, rhs, config.falsify_bounds))
        }
        Err(e) if e.is_resource() => None,
        Err(e) => return Err(e.into()),
    };

    let fixed_sequence = match &config.adversary {
        AdversarySpec::Sequence { path } => {
            let s = LabeledSequence::from_file(path)
                .with_context(|| format!("loading sequence {}", path.display()))?;
            s.validate(&class)?;
            Some(s)
        }
        _ => None,
    };

    // Trials are independent given their derived seeds, so they run
    // concurrently; results are reassembled by index, which keeps reports
    // byte-identical across schedules.
    let compute = |k: usize| -> Result<TrialRun> {
        let trial_seed = config.seed.wrapping_add((k as u64).wrapping_mul(0x9E3779B97F4A7C15));
        run_trial(&class, class_dim, config, fixed_sequence.as_ref(), trial_seed, caps)
    };
    let runs: Vec<TrialRun> = if config.trials == 1 {
        vec![compute(0)?]
    } else {
        let workers = std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(config.trials);
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<TrialRun>>>> =
            Mutex::new((0..config.trials).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= config.trials {
                        break;
                    }
                    let out = compute(k);
                    slots.lock().expect("trial slot lock")[k] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("trial slot lock")
            .into_iter()
            .map(|s| s.expect("every trial slot filled"))
            .collect::<Result<Vec<_>>>()?
    };

    let mut trials = Vec::with_capacity(config.trials);
    let mut traces = Vec::with_capacity(config.trials);
    for (k, run) in runs.into_iter().enumerate() {
        let pass = run.checks.iter().all(|c| c.pass);
        let horizon = run.rows.len();
        trials.push(TrialReport {
            trial: k,
            horizon,
            opt: run.opt,
            regret: run.regret,
            bound: run.bound,
            pass,
            checks: run.checks,
            certificate: run.certificate,
        });
        traces.push(run.rows);
    }

    let failures = trials.iter().filter(|t| !t.pass).count();
    let max_gap = trials
        .iter()
        .map(|t| t.regret - t.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = failures == 0 && dimension_check.as_ref().is_none_or(|c| c.pass);
    let report = Report {
        class: config.class.describe(),
        learner: config.learner.name(),
        seed: config.seed,
        dimension_check,
        trials,
        aggregate: Aggregate {
            trials: config.trials,
            failures,
            max_regret_minus_bound: max_gap,
        },
        pass,
    };

    if let Some(prefix) = &config.out_prefix {
        write_outputs(prefix, &report, &traces)?;
    }
    Ok(ExperimentOutcome { report, traces })
}

fn run_trial(
    class: &ClassRef,
    class_dim: i32,
    config: &ExperimentConfig,
    fixed_sequence: Option<&LabeledSequence>,
    trial_seed: u64,
    caps: &Caps,
) -> Result<TrialRun> {
    let falsify = config.falsify_bounds;
    match &config.adversary {
        AdversarySpec::Sequence { .. } => {
            let full = fixed_sequence.expect("sequence loaded above");
            let s = match config.horizon {
                None => full.clone(),
                Some(t) if t <= full.len() => {
                    LabeledSequence::new(full.entries()[..t].to_vec())
                }
                Some(t) => bail!("horizon {t} exceeds sequence length {}", full.len()),
            };
            run_fixed(class, class_dim, &s, config.learner, caps, falsify)
        }
        AdversarySpec::Noisy { hypothesis, rate } => {
            let t = config.horizon.context("the noisy adversary needs --horizon")?;
            let s = noisy_adversary(class, *hypothesis, *rate, t, trial_seed)?;
            run_fixed(class, class_dim, &s, config.learner, caps, falsify)
        }
        AdversarySpec::TreeWalk => {
            if config.learner != LearnerSpec::Soa {
                bail!("the tree-walk adversary plays against point predictions; use the soa learner");
            }
            let mut state = SoaState::new(class, caps);
            let s = tree_walk_adversary(class, &mut state, caps)?;
            run_soa_trial(class, &s, class_dim, caps, falsify)
        }
        AdversarySpec::MinMass => {
            if config.learner != LearnerSpec::Aag {
                bail!("the min-mass adversary plays against distributions; use the aag learner");
            }
            let t = config.horizon.context("the min-mass adversary needs --horizon")?;
            let mut learner = AagLearner::new(class, t, None, caps)?;
            let s = min_mass_adversary(class, &mut learner, t)?;
            let trace = learner.finish()?;
            run_aag_trial(class, trace, &s, caps, falsify)
        }
    }
}

fn run_fixed(
    class: &ClassRef,
    class_dim: i32,
    s: &LabeledSequence,
    learner: LearnerSpec,
    caps: &Caps,
    falsify: bool,
) -> Result<TrialRun> {
    match learner {
        LearnerSpec::Aag => {
            let trace = aag_run(class, s, caps)?;
            run_aag_trial(class, trace, s, caps, falsify)
        }
        LearnerSpec::FiniteY => run_finite_y_trial(class, s, caps, falsify),
        LearnerSpec::Soa => run_soa_trial(class, s, class_dim, caps, falsify),
    }
}

/// Renders one trace as CSV with the normative columns.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("t,expected_loss,cum_expected_loss,opt_so_far,bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.9},{:.9},{},{:.9}\n",
            r.t, r.expected_loss, r.cum_expected_loss, r.opt_so_far, r.bound
        ));
    }
    out
}

/// Renders the report as pretty JSON with a trailing newline.
pub fn report_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).context("serializing report")?;
    s.push('\n');
    Ok(s)
}

/// Appends `suffix` to the prefix verbatim, unlike `Path::with_extension`,
/// which would clobber anything after a dot already in the file name.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_outputs(prefix: &Path, report: &Report, traces: &[Vec<TraceRow>]) -> Result<()> {
    for (k, rows) in traces.iter().enumerate() {
        let path = if traces.len() == 1 {
            with_suffix(prefix, ".csv")
        } else {
            with_suffix(prefix, &format!(".trial{k}.csv"))
        };
        fs::write(&path, trace_csv(rows))
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    let json_path = with_suffix(prefix, ".json");
    fs::write(&json_path, report_json(report)?)
        .with_context(|| format!("writing report {}", json_path.display()))?;
    Ok(())
}
