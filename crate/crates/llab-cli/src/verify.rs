//! The deterministic verification suite behind `llab verify`.
//!
//! Nine criteria, each a pure function of the seed: dimension oracle
//! agreement, the SOA mistake budget, adversarial forcing, the subsequence
//! and finite-label regret certificates with their constructive witnesses,
//! the expert-advice regret bound on raw loss matrices, the
//! dimension-separation family, and the sequential Rademacher anchors.
//! Reports carry no timing, so the same seed renders byte-identical text.

use anyhow::{ensure, Context, Result};
use rand::Rng;

use llab_core::adversary::{min_mass_adversary, noisy_adversary, tree_walk_adversary};
use llab_core::agnostic::{
    aag_run, best_expert_witness, enumerate_expert_losses, enumerate_experts, finite_y_run,
    jy_family_size, theoretical_regret_bound, AagLearner,
};
use llab_core::concept::{
    example1_class, full_binary_class, is_realizable, random_class, seeded_rng, ClassRef,
    LabeledSequence, VersionSpace,
};
use llab_core::dims::{littlestone_dim, littlestone_dim_bruteforce, sequential_graph_dim};
use llab_core::mw::{mw_eta, mw_regret_bound, run_binary_protocol, MwState};
use llab_core::oracle::{opt_mistakes, sequential_rademacher};
use llab_core::soa::{soa_run, SoaState};
use llab_core::Caps;

use crate::experiment::SLACK;

/// Outcome of one verification criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn passed(index: usize, name: &'static str, detail: String) -> CriterionResult {
    CriterionResult { index, name, pass: true, detail }
}

fn failed(index: usize, name: &'static str, detail: String) -> CriterionResult {
    CriterionResult { index, name, pass: false, detail }
}

/// SplitMix-style finalizer deriving independent sub-seeds.
fn derive(seed: u64, tag: u64, i: u64) -> u64 {
    let mut z = seed
        ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ i.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Criterion 1: the fast dimension recursion agrees exactly with the
/// brute-force tree search on 500 seeded random classes.
pub fn criterion1(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "dimension-oracle-equivalence";
    let mut max_dim = -1i32;
    for i in 0..500u64 {
        let nx = 1 + (i % 4) as usize;
        let ny = 1 + ((i / 4) % 3) as usize;
        let nh = 1 + ((i / 12) % 12) as usize;
        let class = random_class(derive(seed, 10, i), nx, ny, nh, caps)?;
        let v = VersionSpace::full(&class);
        let fast = littlestone_dim(&v, caps)?;
        let brute = littlestone_dim_bruteforce(&v, 4, caps)?;
        if fast != brute {
            return Ok(failed(
                1,
                NAME,
                format!("class {i} ({nx}x{ny}, {nh} hypotheses): recursion says {fast}, brute force says {brute}"),
            ));
        }
        max_dim = max_dim.max(fast);
    }
    Ok(passed(1, NAME, format!("500 classes agree exactly, max dimension {max_dim}")))
}

/// Criterion 2: SOA never exceeds the class dimension in mistakes on
/// realizable sequences.
pub fn criterion2(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "soa-mistake-budget";
    let mut max_mistakes = 0usize;
    for i in 0..1000u64 {
        let nx = 1 + (i % 4) as usize;
        let ny = 1 + ((i / 4) % 3) as usize;
        let nh = 1 + ((i / 12) % 12) as usize;
        let class = random_class(derive(seed, 20, i), nx, ny, nh, caps)?;
        let dim = littlestone_dim(&VersionSpace::full(&class), caps)?;
        let h = (derive(seed, 21, i) % class.n_hypotheses() as u64) as usize;
        let t = 1 + (i % 12) as usize;
        let mut rng = seeded_rng(derive(seed, 22, i), 0);
        let entries: Vec<(usize, usize)> = (0..t)
            .map(|_| {
                let x = rng.gen_range(0..nx);
                (x, class.eval(h, x))
            })
            .collect();
        let s = LabeledSequence::new(entries);
        ensure!(is_realizable(&VersionSpace::full(&class), &s)?, "sequence {i} not realizable");
        let run = soa_run(&class, &s, caps)?;
        if run.mistakes as i32 > dim {
            return Ok(failed(
                2,
                NAME,
                format!("sequence {i}: {} mistakes on a class of dimension {dim}", run.mistakes),
            ));
        }
        max_mistakes = max_mistakes.max(run.mistakes);
    }
    Ok(passed(2, NAME, format!("1000 realizable sequences, max mistakes {max_mistakes}")))
}

/// Criterion 3: the tree walker forces exactly `n` mistakes in `n` rounds
/// against SOA on the full binary class, and the sequence is realizable.
pub fn criterion3(_seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "tree-walk-forcing";
    for n in 1..=4usize {
        let class = full_binary_class(n, caps)?;
        let mut state = SoaState::new(&class, caps);
        let s = tree_walk_adversary(&class, &mut state, caps)?;
        let replay = soa_run(&class, &s, caps)?;
        let realizable = is_realizable(&VersionSpace::full(&class), &s)?;
        if s.len() != n || replay.mistakes != n || !realizable {
            return Ok(failed(
                3,
                NAME,
                format!(
                    "n={n}: {} rounds, {} mistakes, realizable {realizable}",
                    s.len(),
                    replay.mistakes
                ),
            ));
        }
    }
    Ok(passed(3, NAME, "forced n mistakes in n rounds for n in 1..=4, all realizable".into()))
}

/// One adversarial sequence together with the class it was played on.
struct Case {
    class_idx: usize,
    s: LabeledSequence,
}

/// Shared workload for criteria 4, 5, and 7: one separating class, 50
/// random classes of dimension at most 2, and 250 sequences over horizons
/// 8, 16, and 32 (200 noisy, 50 driven by the min-mass adversary).
struct Workload {
    classes: Vec<ClassRef>,
    dims: Vec<usize>,
    cases: Vec<Case>,
}

fn regret_workload(seed: u64, caps: &Caps) -> Result<Workload> {
    let mut classes = vec![example1_class(3, caps)?];
    let mut dims = vec![1usize];
    let mut draw = 0u64;
    while classes.len() < 51 {
        ensure!(draw < 10_000, "class rejection loop did not converge");
        let nx = 2 + (draw % 3) as usize;
        let ny = 2 + (draw % 2) as usize;
        let nh = 2 + ((draw / 2) % 11) as usize;
        let class = random_class(derive(seed, 40, draw), nx, ny, nh, caps)?;
        draw += 1;
        let dim = littlestone_dim(&VersionSpace::full(&class), caps)?;
        if (0..=2).contains(&dim) {
            classes.push(class);
            dims.push(dim as usize);
        }
    }

    let horizons = [8usize, 16, 32];
    let combos: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| horizons.iter().map(move |&t| (c, t)))
        .collect();

    let mut cases = Vec::with_capacity(250);
    let rates = [0.0, 0.1, 0.25, 0.5];
    for i in 0..200u64 {
        let (class_idx, t) = combos[(i as usize) % combos.len()];
        let class = &classes[class_idx];
        let h = (derive(seed, 41, i) % class.n_hypotheses() as u64) as usize;
        let rate = rates[(i as usize) % rates.len()];
        let s = noisy_adversary(class, h, rate, t, derive(seed, 42, i))?;
        cases.push(Case { class_idx, s });
    }
    for i in 0..50usize {
        let (class_idx, t) = combos[(i * 7) % combos.len()];
        let class = &classes[class_idx];
        let mut learner = AagLearner::new(class, t, None, caps)?;
        let s = min_mass_adversary(class, &mut learner, t)?;
        cases.push(Case { class_idx, s });
    }
    Ok(Workload { classes, dims, cases })
}

/// Criterion 4: on every workload sequence, the mixture's expected loss
/// minus OPT stays within `L + sqrt((T/2) L ln(eT/L))` up to the slack.
pub fn criterion4(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "subsequence-expert-regret";
    let w = regret_workload(seed, caps)?;
    let mut worst_gap = f64::NEG_INFINITY;
    for (i, case) in w.cases.iter().enumerate() {
        let class = &w.classes[case.class_idx];
        let dim = w.dims[case.class_idx];
        let trace = aag_run(class, &case.s, caps)?;
        let (_, opt) = opt_mistakes(class, &case.s)?;
        ensure!(trace.opt == opt, "case {i}: trace OPT {} vs oracle {opt}", trace.opt);
        let bound = theoretical_regret_bound(case.s.len(), dim);
        if trace.regret > bound + SLACK {
            return Ok(failed(
                4,
                NAME,
                format!("case {i}: regret {:.9} exceeds bound {bound:.9}", trace.regret),
            ));
        }
        worst_gap = worst_gap.max(trace.regret - bound);
    }
    Ok(passed(
        4,
        NAME,
        format!(
            "250 sequences on 51 classes, worst regret minus bound {worst_gap:.6}"
        ),
    ))
}

/// Criterion 5: on every workload sequence with horizon at most 16, the
/// constructive witness lies in the expert family, errs at most `OPT + L`
/// times, and matches the exhaustive enumeration of expert losses.
pub fn criterion5(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "best-expert-witness";
    let w = regret_workload(seed, caps)?;
    let mut checked = 0usize;
    for (i, case) in w.cases.iter().enumerate() {
        let t = case.s.len();
        if t > 16 {
            continue;
        }
        let class = &w.classes[case.class_idx];
        let dim = w.dims[case.class_idx];
        let wit = best_expert_witness(class, &case.s, caps)?;
        let (h_opt, opt) = opt_mistakes(class, &case.s)?;
        let family = enumerate_experts(t, dim, caps.max_experts)?;
        let losses = enumerate_expert_losses(class, &case.s, &family, caps)?;
        let pos = family
            .sets()
            .iter()
            .position(|j| {
                j.len() == wit.j_star.len()
                    && j.iter().zip(&wit.j_star).all(|(&a, &b)| a as usize == b)
            })
            .context("witness set missing from the enumerated family")?;
        let enumerated = losses[pos];
        let min_loss = *losses.iter().min().context("empty family")?;
        let ok = wit.h_star == h_opt
            && wit.opt == opt
            && wit.in_family
            && family.contains(&wit.j_star)
            && wit.j_star.len() <= dim
            && wit.witness_mistakes <= opt + dim as u64
            && enumerated == wit.witness_mistakes
            && min_loss <= wit.witness_mistakes;
        if !ok {
            return Ok(failed(
                5,
                NAME,
                format!(
                    "case {i}: witness |J*|={} mistakes {} vs OPT {opt} + L {dim}, enumerated {enumerated}",
                    wit.j_star.len(),
                    wit.witness_mistakes
                ),
            ));
        }
        checked += 1;
    }
    Ok(passed(5, NAME, format!("{checked} sequences, every witness matches the enumeration")))
}

/// Criterion 6: expert-advice regret on raw 0-1 loss matrices, including
/// streams whose outcomes are chosen adversarially against the weights.
pub fn criterion6(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "multiplicative-weights-regret";
    let _ = caps;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut adversarial = 0usize;
    for i in 0..500u64 {
        let n = 1 + (derive(seed, 60, i) % 64) as usize;
        let t = 1 + (derive(seed, 61, i) % 64) as usize;
        let mut rng = seeded_rng(derive(seed, 62, i), 0);
        let matrix: Vec<Vec<bool>> =
            (0..n).map(|_| (0..t).map(|_| rng.gen::<bool>()).collect()).collect();
        let outcomes: Vec<bool> = if i % 3 == 2 {
            adversarial += 1;
            let mut state = MwState::new(n, mw_eta(t, n))?;
            let mut ys = Vec::with_capacity(t);
            for r in 0..t {
                let losses_true: Vec<bool> = matrix.iter().map(|row| !row[r]).collect();
                let y = state.weighted_loss(&losses_true)? >= 0.5;
                let losses: Vec<bool> = matrix.iter().map(|row| row[r] != y).collect();
                state.update(&losses)?;
                ys.push(y);
            }
            ys
        } else {
            (0..t).map(|_| rng.gen::<bool>()).collect()
        };
        let run = run_binary_protocol(&matrix, &outcomes)?;
        let bound = mw_regret_bound(t, n);
        ensure!((run.bound - bound).abs() <= 1e-12, "matrix {i}: bound mismatch");
        if run.regret > bound + SLACK {
            return Ok(failed(
                6,
                NAME,
                format!("matrix {i} (n={n}, t={t}): regret {:.9} exceeds {bound:.9}", run.regret),
            ));
        }
        worst_gap = worst_gap.max(run.regret - bound);
    }
    Ok(passed(
        6,
        NAME,
        format!(
            "500 matrices ({adversarial} adversarial), worst regret minus bound {worst_gap:.6}"
        ),
    ))
}

/// Criterion 7: the separating family has dimension 1 but graph dimension
/// `m`, and the general dimension inequality holds on the workload classes.
pub fn criterion7(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "graph-dimension-separation";
    for m in 2..=6usize {
        let class = example1_class(m, caps)?;
        let lit = littlestone_dim(&VersionSpace::full(&class), caps)?;
        let graph = sequential_graph_dim(&class, caps)?;
        if lit != 1 || graph != m as i32 {
            return Ok(failed(
                7,
                NAME,
                format!("m={m}: littlestone {lit} (want 1), graph {graph} (want {m})"),
            ));
        }
    }
    let w = regret_workload(seed, caps)?;
    for (class, &dim) in w.classes.iter().zip(&w.dims).skip(1) {
        let graph = sequential_graph_dim(class, caps)?;
        let rhs = 2.0 * dim as f64 * (std::f64::consts::E * class.n_labels() as f64).log2();
        if graph as f64 > rhs + SLACK {
            return Ok(failed(
                7,
                NAME,
                format!("random class: graph {graph} exceeds 2 L log2(e|Y|) = {rhs:.6}"),
            ));
        }
    }
    Ok(passed(
        7,
        NAME,
        "separation exact for m in 2..=6, dimension inequality holds on 50 classes".into(),
    ))
}

/// Criterion 8: sequential Rademacher anchors, range, and monotonicity.
pub fn criterion8(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "rademacher-oracle";
    let mut values = Vec::new();

    let singleton = random_class(derive(seed, 80, 0), 2, 2, 1, caps)?;
    for t in 1..=3usize {
        let r = sequential_rademacher(&singleton, t, caps)?;
        if r != 0.0 {
            return Ok(failed(8, NAME, format!("singleton at T={t} gives {r}, want 0")));
        }
        values.push(r);
    }

    let split = full_binary_class(1, caps)?;
    let r = sequential_rademacher(&split, 1, caps)?;
    if r != 0.5 {
        return Ok(failed(8, NAME, format!("two-hypothesis split at T=1 gives {r}, want 0.5")));
    }
    values.push(r);

    let full2 = full_binary_class(2, caps)?;
    for t in 1..=3usize {
        values.push(sequential_rademacher(&full2, t, caps)?);
    }

    let mut pairs = 0usize;
    let mut draw = 0u64;
    while pairs < 20 {
        ensure!(draw < 10_000, "superclass rejection loop did not converge");
        let nh = 3 + (draw % 4) as usize;
        let superclass = random_class(derive(seed, 81, draw), 2, 2, nh, caps)?;
        draw += 1;
        if superclass.n_hypotheses() < 2 {
            continue;
        }
        let keep = 1 + pairs % (superclass.n_hypotheses() - 1);
        let rows: Vec<usize> = (0..keep).collect();
        let subclass = superclass.subclass(&rows, caps)?;
        for t in 1..=2usize {
            let r_sub = sequential_rademacher(&subclass, t, caps)?;
            let r_super = sequential_rademacher(&superclass, t, caps)?;
            if r_sub > r_super {
                return Ok(failed(
                    8,
                    NAME,
                    format!("pair {pairs} at T={t}: subclass {r_sub:.9} exceeds superclass {r_super:.9}"),
                ));
            }
            values.push(r_sub);
            values.push(r_super);
        }
        pairs += 1;
    }

    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Ok(failed(8, NAME, format!("value {bad} outside [0, 1]")));
    }
    Ok(passed(
        8,
        NAME,
        format!("anchors exact, {} values in range, 20 nested pairs monotone", values.len()),
    ))
}

/// Criterion 9: the finite-label learner's realized regret stays within
/// `sqrt((T/2) ln |family|)` and the constructive witness attains OPT.
pub fn criterion9(seed: u64, caps: &Caps) -> Result<CriterionResult> {
    const NAME: &str = "finite-label-baseline";
    let rates = [0.0, 0.25, 0.5, 1.0];
    let mut worst_gap = f64::NEG_INFINITY;
    let mut checked = 0u64;
    let mut draw = 0u64;
    while checked < 100 {
        ensure!(draw < 10_000, "class rejection loop did not converge");
        let nx = 2 + (draw % 3) as usize;
        let ny = 2 + ((draw / 3) % 3) as usize;
        let nh = 2 + ((draw / 9) % 5) as usize;
        let class = random_class(derive(seed, 90, draw), nx, ny, nh, caps)?;
        draw += 1;
        let dim = littlestone_dim(&VersionSpace::full(&class), caps)?;
        if dim > 1 {
            continue;
        }
        let t = 1 + (checked % 10) as usize;
        let h = (derive(seed, 91, checked) % class.n_hypotheses() as u64) as usize;
        let rate = rates[(checked as usize) % rates.len()];
        let s = noisy_adversary(&class, h, rate, t, derive(seed, 92, checked))?;
        let run = finite_y_run(&class, &s, caps)?;
        let family = jy_family_size(t, dim.max(0) as usize, class.n_labels())
            .context("family size overflow")?;
        ensure!(
            run.trace.n_experts as u64 == family,
            "case {checked}: {} experts, expected {family}",
            run.trace.n_experts
        );
        let bound = mw_regret_bound(t, family as usize);
        let (_, opt) = opt_mistakes(&class, &s)?;
        let cert = &run.certificate;
        let ok = run.trace.regret <= bound + SLACK
            && cert.opt == opt
            && cert.replicates_h_star
            && cert.witness_mistakes == opt;
        if !ok {
            return Ok(failed(
                9,
                NAME,
                format!(
                    "case {checked}: regret {:.9} vs bound {bound:.9}, witness {} vs OPT {opt}",
                    run.trace.regret, cert.witness_mistakes
                ),
            ));
        }
        worst_gap = worst_gap.max(run.trace.regret - bound);
        checked += 1;
    }
    Ok(passed(
        9,
        NAME,
        format!("100 sequences, witnesses attain OPT, worst regret minus bound {worst_gap:.6}"),
    ))
}

type Criterion = fn(u64, &Caps) -> Result<CriterionResult>;

const CRITERIA: [(usize, &str, Criterion); 9] = [
    (1, "dimension-oracle-equivalence", criterion1),
    (2, "soa-mistake-budget", criterion2),
    (3, "tree-walk-forcing", criterion3),
    (4, "subsequence-expert-regret", criterion4),
    (5, "best-expert-witness", criterion5),
    (6, "multiplicative-weights-regret", criterion6),
    (7, "graph-dimension-separation", criterion7),
    (8, "rademacher-oracle", criterion8),
    (9, "finite-label-baseline", criterion9),
];

/// Runs every criterion; an internal error becomes a failing result rather
/// than aborting the suite.
pub fn run_all(seed: u64, caps: &Caps) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(index, name, f)| match f(seed, caps) {
            Ok(r) => r,
            Err(e) => failed(index, name, format!("error: {e:#}")),
        })
        .collect()
}

/// Renders the suite outcome as stable, timing-free text.
pub fn render(seed: u64, results: &[CriterionResult]) -> String {
    let mut out = format!("seed: {seed}\n");
    for r in results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!("criterion {} [{status}] {}: {}\n", r.index, r.name, r.detail));
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let overall = if passed == results.len() { "PASS" } else { "FAIL" };
    out.push_str(&format!("result: {overall} ({passed}/{})\n", results.len()));
    out
}

/// True when every criterion passed.
pub fn all_pass(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.pass)
}
