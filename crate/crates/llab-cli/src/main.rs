//! Command-line surface for the online-learning laboratory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use llab_cli::experiment::{
    run_experiment, AdversarySpec, ClassSource, ExperimentConfig, LearnerSpec,
};
use llab_cli::verify;
use llab_core::concept::{example1_class, ConceptClass, LabeledSequence, VersionSpace};
use llab_core::dims::{littlestone_dim, sequential_graph_dim, shattered_tree};
use llab_core::oracle::sequential_rademacher;
use llab_core::soa::soa_run;
use llab_core::Caps;

#[derive(Parser)]
#[command(name = "llab", about = "Multiclass online learning laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LearnerArg {
    Aag,
    Finitey,
    Soa,
}

impl From<LearnerArg> for LearnerSpec {
    fn from(a: LearnerArg) -> LearnerSpec {
        match a {
            LearnerArg::Aag => LearnerSpec::Aag,
            LearnerArg::Finitey => LearnerSpec::FiniteY,
            LearnerArg::Soa => LearnerSpec::Soa,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimensions of a class as JSON.
    Dims {
        /// Class file.
        #[arg(long)]
        class: PathBuf,
    },
    /// Replay SOA over a labeled sequence and emit a per-round CSV.
    SoaRun {
        /// Class file.
        #[arg(long)]
        class: PathBuf,
        /// Sequence file.
        #[arg(long)]
        sequence: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded experiment and write trace plus report.
    Simulate {
        /// Class file.
        #[arg(long)]
        class: PathBuf,
        /// Fixed sequence file (alternative to --adversary).
        #[arg(long, conflicts_with = "adversary")]
        sequence: Option<PathBuf>,
        /// Adversary: noisy, tree-walk, or min-mass.
        #[arg(long)]
        adversary: Option<String>,
        /// Learner to play.
        #[arg(long, value_enum)]
        learner: LearnerArg,
        /// Rounds per trial.
        #[arg(long)]
        horizon: Option<usize>,
        /// Number of independent trials.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Master seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output prefix for PREFIX.csv and PREFIX.json.
        #[arg(long)]
        out: PathBuf,
        /// Hypothesis index for the noisy adversary.
        #[arg(long, default_value_t = 0)]
        hypothesis: usize,
        /// Corruption rate for the noisy adversary.
        #[arg(long, default_value_t = 0.2)]
        rate: f64,
        /// Test-only hook: zero every bound to prove violations are caught.
        #[arg(long, hide = true)]
        falsify_bounds: bool,
    },
    /// Run the full verification suite.
    Verify {
        /// Suite seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact sequential Rademacher complexity at a horizon.
    Rademacher {
        /// Class file.
        #[arg(long)]
        class: PathBuf,
        /// Tree depth.
        #[arg(long)]
        horizon: usize,
    },
    /// Write the separating class over m points to a file.
    Example1 {
        /// Number of points.
        #[arg(long)]
        m: usize,
        /// Destination class file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_class(path: &Path, caps: &Caps) -> Result<llab_core::concept::ClassRef> {
    ConceptClass::from_file(path, caps).with_context(|| format!("loading class {}", path.display()))
}

fn cmd_dims(class: &Path, caps: &Caps) -> Result<ExitCode> {
    let class = load_class(class, caps)?;
    let v = VersionSpace::full(&class);
    let littlestone = littlestone_dim(&v, caps)?;
    let graph = sequential_graph_dim(&class, caps)?;
    let witness_depth = if littlestone > 0 {
        match shattered_tree(&v, littlestone as usize, caps)? {
            Some(tree) => tree.depth() as i64,
            None => -1,
        }
    } else {
        i64::from(littlestone.max(-1))
    };
    println!(
        "{{\"littlestone\":{littlestone},\"sequential_graph\":{graph},\"witness_depth\":{witness_depth}}}"
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_soa_run(class: &Path, sequence: &Path, out: Option<&Path>, caps: &Caps) -> Result<ExitCode> {
    let class = load_class(class, caps)?;
    let s = LabeledSequence::from_file(sequence)
        .with_context(|| format!("loading sequence {}", sequence.display()))?;
    let run = soa_run(&class, &s, caps)?;
    let mut csv = String::from("t,pred,correct,mistakes\n");
    let mut mistakes = 0usize;
    for (t, (&(_, y), &pred)) in s.entries().iter().zip(&run.predictions).enumerate() {
        let correct = pred == y;
        if !correct {
            mistakes += 1;
        }
        csv.push_str(&format!("{},{},{},{}\n", t + 1, pred, u8::from(correct), mistakes));
    }
    match out {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("writing trace {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    class: PathBuf,
    sequence: Option<PathBuf>,
    adversary: Option<String>,
    learner: LearnerArg,
    horizon: Option<usize>,
    trials: usize,
    seed: u64,
    out: PathBuf,
    hypothesis: usize,
    rate: f64,
    falsify_bounds: bool,
    caps: &Caps,
) -> Result<ExitCode> {
    let adversary = match (sequence, adversary.as_deref()) {
        (Some(path), None) => AdversarySpec::Sequence { path },
        (None, Some("noisy")) => AdversarySpec::Noisy { hypothesis, rate },
        (None, Some("tree-walk")) => AdversarySpec::TreeWalk,
        (None, Some("min-mass")) => AdversarySpec::MinMass,
        (None, Some(other)) => bail!("unknown adversary {other:?}; use noisy, tree-walk, or min-mass"),
        (None, None) => bail!("pass either --sequence or --adversary"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let config = ExperimentConfig {
        class: ClassSource::File { path: class },
        adversary,
        learner: learner.into(),
        horizon,
        trials,
        seed,
        out_prefix: Some(out),
        falsify_bounds,
    };
    let outcome = run_experiment(&config, caps)?;
    let report = &outcome.report;
    println!(
        "learner {} on {}: {} trial(s), {} failure(s)",
        report.learner, report.class, report.aggregate.trials, report.aggregate.failures
    );
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_verify(seed: u64, out: Option<&Path>, caps: &Caps) -> Result<ExitCode> {
    let results = verify::run_all(seed, caps);
    let text = verify::render(seed, &results);
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, &text).with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(if verify::all_pass(&results) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_rademacher(class: &Path, horizon: usize, caps: &Caps) -> Result<ExitCode> {
    let class = load_class(class, caps)?;
    let value = sequential_rademacher(&class, horizon, caps)?;
    println!("{value:.9}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_example1(m: usize, out: &Path, caps: &Caps) -> Result<ExitCode> {
    let class = example1_class(m, caps)?;
    fs::write(out, class.to_json())
        .with_context(|| format!("writing class {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let caps = Caps::from_env()?;
    match cli.command {
        Command::Dims { class } => cmd_dims(&class, &caps),
        Command::SoaRun { class, sequence, out } => {
            cmd_soa_run(&class, &sequence, out.as_deref(), &caps)
        }
        Command::Simulate {
            class,
            sequence,
            adversary,
            learner,
            horizon,
            trials,
            seed,
            out,
            hypothesis,
            rate,
            falsify_bounds,
        } => cmd_simulate(
            class, sequence, adversary, learner, horizon, trials, seed, out, hypothesis, rate,
            falsify_bounds, &caps,
        ),
        Command::Verify { seed, out } => cmd_verify(seed, out.as_deref(), &caps),
        Command::Rademacher { class, horizon } => cmd_rademacher(&class, horizon, &caps),
        Command::Example1 { m, out } => cmd_example1(m, &out, &caps),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
