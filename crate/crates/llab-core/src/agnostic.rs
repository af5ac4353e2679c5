//! Agnostic online learners built from SOA experts under multiplicative
//! weights.
//!
//! The subsequence learner runs one expert per index set `J` of size at
//! most the class dimension `L`; expert `J` at round `t` plays the SOA
//! prediction trained on the revealed examples at indices `J` below `t`.
//! Mixing the experts with multiplicative weights keeps the cumulative
//! expected loss within `L + sqrt((T/2) L ln(eT/L))` of the best single
//! hypothesis: some `J*` (the conservative-SOA mistake rounds on the
//! subsequence where the best hypothesis is correct) produces an expert
//! that errs at most `OPT + L` times, and the mixture tracks the best
//! expert by the expert-advice bound.
//!
//! The finite-alphabet learner replaces index sets with `(J, Y)` pairs: on
//! rounds in `J` the expert plays the assigned label `Y`, elsewhere it
//! plays SOA trained on its own past outputs. Some `(J*, Y*)` expert
//! reproduces the best hypothesis exactly, so that mixture's regret is at
//! most `sqrt((T/2) ln |family|)`.
//!
//! Expert SOA computations inside a learner are shared: states are keyed
//! by the ordered set of absorbed indices, so all experts with the same
//! absorbed prefix reuse one version space and one prediction per round.

use std::collections::HashMap;

use crate::caps::Caps;
use crate::concept::{ClassRef, LabeledSequence, MemberSet, PredictionDistribution};
use crate::dims::DimSolver;
use crate::error::{Error, Result};
use crate::mw::{mw_eta, mw_regret_bound, MwState, REGRET_TOLERANCE};
use crate::oracle::opt_mistakes;
use crate::soa::predict_members;

/// All index sets `J` within `{0..horizon-1}` with `|J| <= budget`, ordered by
/// size and lexicographically within each size.
#[derive(Debug, Clone)]
pub struct ExpertFamily {
    horizon: usize,
    budget: usize,
    sets: Vec<Vec<u32>>,
}

impl ExpertFamily {
    /// Number of experts.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    /// True when the family is empty (never the case after enumeration).
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// The horizon the family was enumerated for.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The size budget `|J| <= budget`.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// The index sets, each sorted ascending.
    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    /// True when `j` (sorted, in range) belongs to the family.
    pub fn contains(&self, j: &[usize]) -> bool {
        j.len() <= self.budget
            && j.windows(2).all(|w| w[0] < w[1])
            && j.iter().all(|&t| t < self.horizon)
    }
}

/// `sum over i = 0..=min(l,t) of C(t, i)`, or `None` on overflow.
pub fn family_size(t: usize, l: usize) -> Option<u64> {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=l.min(t) {
        if i > 0 {
            binom = binom.checked_mul((t - i + 1) as u128)? / i as u128;
        }
        total = total.checked_add(binom)?;
    }
    u64::try_from(total).ok()
}

/// Enumerates the subsequence-expert family for `horizon` rounds and size
/// budget `l`, refusing families larger than `cap`.
pub fn enumerate_experts(horizon: usize, l: usize, cap: u64) -> Result<ExpertFamily> {
    let size = family_size(horizon, l).ok_or_else(|| {
        Error::Resource(format!(
            "expert family for horizon {horizon}, budget {l} overflows a 64-bit count"
        ))
    })?;
    if size > cap {
        return Err(Error::Resource(format!(
            "expert family needs {size} experts, cap is {cap}"
        )));
    }
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(size as usize);
    for k in 0..=l.min(horizon) {
        let mut combo: Vec<u32> = (0..k as u32).collect();
        loop {
            sets.push(combo.clone());
            if k == 0 {
                break;
            }
            // Advance to the next combination in lexicographic order.
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if combo[i] < (horizon - k + i) as u32 {
                    combo[i] += 1;
                    for j in i + 1..k {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    combo.clear();
                    break;
                }
            }
            if combo.is_empty() {
                break;
            }
        }
    }
    debug_assert_eq!(sets.len() as u64, size);
    Ok(ExpertFamily { horizon, budget: l, sets })
}

/// The subsequence expert's prediction `g^J_t`: SOA trained on the examples
/// of `s` at indices `J` below `t`, asked to label `x`.
pub fn expert_predict(
    class: &ClassRef,
    j: &[usize],
    s: &LabeledSequence,
    t: usize,
    x: usize,
    caps: &Caps,
) -> Result<usize> {
    s.validate(class)?;
    class.check_example(x, 0)?;
    let mut members = MemberSet::full(class.n_hypotheses());
    let mut past: Vec<usize> = j.iter().copied().filter(|&idx| idx < t).collect();
    past.sort_unstable();
    past.dedup();
    for idx in past {
        let &(xs, ys) = s.entries().get(idx).ok_or_else(|| {
            Error::InvalidInput(format!("expert index {idx} out of range, sequence has {}", s.len()))
        })?;
        let mut next = MemberSet::empty(class.n_hypotheses());
        for h in members.iter() {
            if class.eval(h, xs) == ys {
                next.insert(h);
            }
        }
        members = next;
    }
    let mut solver = DimSolver::new(class, caps);
    predict_members(&mut solver, &members, x)
}

/// The agnostic regret bound `L + sqrt((T/2) L ln(eT/L))`.
///
/// `l = 0` gives `0`; a zero horizon leaves only the additive term. The
/// bound is the one the subsequence learner certifies for `t >= 2l`.
pub fn theoretical_regret_bound(t: usize, l: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    if t == 0 {
        return l as f64;
    }
    let (tf, lf) = (t as f64, l as f64);
    lf + ((tf / 2.0) * lf * (std::f64::consts::E * tf / lf).ln()).sqrt()
}

/// One round of a mixture learner's trace.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    /// 1-based round number.
    pub t: usize,
    /// The mixture distribution played this round.
    pub p: PredictionDistribution,
    /// Per-expert 0-1 losses against the revealed label.
    pub expert_losses: Vec<bool>,
    /// `1 - p(Y_t)`.
    pub expected_loss: f64,
    /// Running sum of expected losses.
    pub cum_expected_loss: f64,
    /// Exhaustive-minimum hypothesis mistakes over the revealed prefix.
    pub opt_so_far: u64,
}

/// Full trace of a mixture learner run.
#[derive(Debug, Clone)]
pub struct MixtureTrace {
    /// Rounds played.
    pub horizon: usize,
    /// Expert-family size budget (the class dimension unless overridden).
    pub family_budget: usize,
    /// Dimension of the class itself.
    pub class_dim: i32,
    /// Number of experts in the mixture.
    pub n_experts: usize,
    /// Learning rate used.
    pub eta: f64,
    /// Per-round records.
    pub rounds: Vec<RoundRecord>,
    /// Total expected loss.
    pub cum_expected_loss: f64,
    /// Best hypothesis mistakes over the full sequence.
    pub opt: u64,
    /// `cum_expected_loss - opt`.
    pub regret: f64,
    /// The regret bound this run certifies.
    pub bound: f64,
    /// Whether the bound was asserted at run end (it is skipped only for
    /// overridden budgets or horizons shorter than the family budget).
    pub bound_asserted: bool,
    /// Final cumulative mistake count per expert.
    pub expert_cum_losses: Vec<u64>,
}

struct PrefixEntry {
    members: MemberSet,
    pred: usize,
}

struct PendingRound {
    x: usize,
    outputs: Vec<usize>,
    p: PredictionDistribution,
}

/// The subsequence-expert learner.
///
/// Drive it online with [`AagLearner::predict_dist`] followed by
/// [`AagLearner::observe`] for each round, or use [`aag_run`] for a fixed
/// sequence. Expert SOA states are shared across all `J` with the same
/// absorbed prefix.
pub struct AagLearner {
    class: ClassRef,
    solver: DimSolver,
    family: ExpertFamily,
    mw: MwState,
    horizon: usize,
    family_budget: usize,
    class_dim: i32,
    budget_overridden: bool,
    round: usize,
    upto: Vec<usize>,
    prefixes: HashMap<Vec<u32>, PrefixEntry>,
    pending: Option<PendingRound>,
    rounds: Vec<RoundRecord>,
    cum_expected_loss: f64,
    hyp_mistakes: Vec<u64>,
}

impl AagLearner {
    /// New learner for `horizon` rounds. The expert-family size budget is
    /// the class dimension unless `budget_override` is given.
    pub fn new(
        class: &ClassRef,
        horizon: usize,
        budget_override: Option<usize>,
        caps: &Caps,
    ) -> Result<AagLearner> {
        if class.n_hypotheses() == 0 {
            return Err(Error::InvalidInput("class has no hypotheses".into()));
        }
        let mut solver = DimSolver::new(class, caps);
        let class_dim = solver.dim_full()?;
        let family_budget = budget_override.unwrap_or(class_dim as usize);
        let family = enumerate_experts(horizon, family_budget, caps.max_experts)?;
        let n = family.len();
        let eta = if horizon == 0 { 0.0 } else { mw_eta(horizon, n) };
        let mut prefixes = HashMap::new();
        prefixes.insert(
            Vec::new(),
            PrefixEntry { members: MemberSet::full(class.n_hypotheses()), pred: 0 },
        );
        Ok(AagLearner {
            class: ClassRef::clone(class),
            solver,
            upto: vec![0; n],
            mw: MwState::new(n, eta)?,
            horizon,
            family_budget,
            class_dim,
            budget_overridden: budget_override.is_some(),
            round: 0,
            family,
            prefixes,
            pending: None,
            rounds: Vec::new(),
            cum_expected_loss: 0.0,
            hyp_mistakes: vec![0; class.n_hypotheses()],
        })
    }

    /// The expert family in use.
    pub fn family(&self) -> &ExpertFamily {
        &self.family
    }

    /// Rounds absorbed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Mixture distribution for the next round's point `x`.
    pub fn predict_dist(&mut self, x: usize) -> Result<PredictionDistribution> {
        if self.round >= self.horizon {
            return Err(Error::Precondition(format!(
                "horizon of {} rounds is exhausted",
                self.horizon
            )));
        }
        self.class.check_example(x, 0)?;
        for entry in self.prefixes.values_mut() {
            entry.pred = predict_members(&mut self.solver, &entry.members, x)?;
        }
        let outputs: Vec<usize> = (0..self.family.len())
            .map(|i| {
                let prefix = &self.family.sets()[i][..self.upto[i]];
                self.prefixes[prefix].pred
            })
            .collect();
        let p = self.mw.mix(&outputs, self.class.n_labels())?;
        self.pending = Some(PendingRound { x, outputs, p: p.clone() });
        Ok(p)
    }

    /// Absorbs the revealed label for the point last passed to
    /// [`AagLearner::predict_dist`].
    pub fn observe(&mut self, x: usize, y: usize) -> Result<()> {
        self.class.check_example(x, y)?;
        let pending = self.pending.take().ok_or_else(|| {
            Error::Precondition("observe must follow a prediction for the same round".into())
        })?;
        if pending.x != x {
            return Err(Error::Precondition(format!(
                "observed point {x} does not match predicted point {}",
                pending.x
            )));
        }

        let losses: Vec<bool> = pending.outputs.iter().map(|&out| out != y).collect();
        let expected_loss = 1.0 - pending.p.mass(y);
        let direct = self.mw.weighted_loss(&losses)?;
        if (expected_loss - direct).abs() > REGRET_TOLERANCE {
            return Err(Error::Internal(format!(
                "mixture loss {expected_loss} disagrees with weighted expert loss {direct} at round {}",
                self.round
            )));
        }
        self.mw.update(&losses)?;

        for (h, count) in self.hyp_mistakes.iter_mut().enumerate() {
            if self.class.eval(h, x) != y {
                *count += 1;
            }
        }
        let opt_so_far = *self.hyp_mistakes.iter().min().expect("non-empty class");

        self.cum_expected_loss += expected_loss;
        self.rounds.push(RoundRecord {
            t: self.round + 1,
            p: pending.p,
            expert_losses: losses,
            expected_loss,
            cum_expected_loss: self.cum_expected_loss,
            opt_so_far,
        });

        // Extend the shared prefix states with this round's example for
        // every prefix that still has budget to absorb it.
        if self.round + 1 < self.horizon {
            let mut extensions: Vec<(Vec<u32>, MemberSet)> = Vec::new();
            for (key, entry) in self.prefixes.iter() {
                if key.len() < self.family_budget {
                    let mut next_key = key.clone();
                    next_key.push(self.round as u32);
                    let mut next = MemberSet::empty(self.class.n_hypotheses());
                    for h in entry.members.iter() {
                        if self.class.eval(h, x) == y {
                            next.insert(h);
                        }
                    }
                    extensions.push((next_key, next));
                }
            }
            for (key, members) in extensions {
                self.prefixes.insert(key, PrefixEntry { members, pred: 0 });
            }
        }
        for (i, j) in self.family.sets().iter().enumerate() {
            if self.upto[i] < j.len() && j[self.upto[i]] == self.round as u32 {
                self.upto[i] += 1;
            }
        }
        self.round += 1;
        Ok(())
    }

    /// Closes the run and returns its trace. The certified bound is
    /// asserted whenever the family budget is the class dimension and the
    /// horizon is at least that dimension.
    pub fn finish(self) -> Result<MixtureTrace> {
        let opt = if self.round == 0 { 0 } else { self.rounds[self.round - 1].opt_so_far };
        let regret = self.cum_expected_loss - opt as f64;
        let bound = theoretical_regret_bound(self.horizon, self.family_budget);
        let assertable = !self.budget_overridden && self.family_budget <= self.horizon;
        if assertable && regret > bound + REGRET_TOLERANCE {
            return Err(Error::Internal(format!(
                "regret {regret} exceeds certified bound {bound}"
            )));
        }
        Ok(MixtureTrace {
            horizon: self.horizon,
            family_budget: self.family_budget,
            class_dim: self.class_dim,
            n_experts: self.family.len(),
            eta: self.mw.eta(),
            rounds: self.rounds,
            cum_expected_loss: self.cum_expected_loss,
            opt,
            regret,
            bound,
            bound_asserted: assertable,
            expert_cum_losses: self.mw.cumulative_losses().to_vec(),
        })
    }
}

/// Online interface for learners that play a label distribution each
/// round. Adversaries drive implementors one round at a time.
pub trait DistributionLearner {
    /// Mixture distribution for the next round's point `x`.
    fn predict_dist(&mut self, x: usize) -> Result<PredictionDistribution>;
    /// Absorbs the revealed label for the point last predicted.
    fn observe(&mut self, x: usize, y: usize) -> Result<()>;
}

impl DistributionLearner for AagLearner {
    fn predict_dist(&mut self, x: usize) -> Result<PredictionDistribution> {
        AagLearner::predict_dist(self, x)
    }

    fn observe(&mut self, x: usize, y: usize) -> Result<()> {
        AagLearner::observe(self, x, y)
    }
}

/// Runs the subsequence-expert learner over a fixed sequence.
pub fn aag_run(class: &ClassRef, s: &LabeledSequence, caps: &Caps) -> Result<MixtureTrace> {
    s.validate(class)?;
    let mut learner = AagLearner::new(class, s.len(), None, caps)?;
    for &(x, y) in s.entries() {
        learner.predict_dist(x)?;
        learner.observe(x, y)?;
    }
    learner.finish()
}

/// Certificate produced by [`best_expert_witness`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessCertificate {
    /// Lowest-index hypothesis attaining the minimum mistake count.
    pub h_star: usize,
    /// That minimum mistake count.
    pub opt: u64,
    /// Conservative-SOA mistake rounds on the subsequence where `h_star`
    /// is correct, as 0-based indices into the full sequence.
    pub j_star: Vec<usize>,
    /// Class dimension.
    pub class_dim: i32,
    /// Mistakes of the expert `g^{J*}` over the full sequence.
    pub witness_mistakes: u64,
    /// Whether `|J*| <= class_dim`, i.e. the witness is in the family.
    pub in_family: bool,
}

/// Builds the constructive witness behind the subsequence learner's bound:
/// an index set `J*` of size at most the class dimension whose expert errs
/// at most `opt + |J*|` times on `s`.
pub fn best_expert_witness(
    class: &ClassRef,
    s: &LabeledSequence,
    caps: &Caps,
) -> Result<WitnessCertificate> {
    let (h_star, opt) = opt_mistakes(class, s)?;
    let correct_rounds: Vec<usize> = s
        .entries()
        .iter()
        .enumerate()
        .filter(|&(_, &(x, y))| class.eval(h_star, x) == y)
        .map(|(t, _)| t)
        .collect();
    let sub = s.select(&correct_rounds)?;
    let j_sub = crate::soa::conservative_soa(class, &sub, caps)?;
    let j_star: Vec<usize> = j_sub.iter().map(|&p| correct_rounds[p]).collect();

    // Replay the witness expert over the full sequence: absorb exactly the
    // examples at J*, predicting each round from the absorbed prefix.
    let mut solver = DimSolver::new(class, caps);
    let mut members = MemberSet::full(class.n_hypotheses());
    let mut witness_mistakes = 0u64;
    let mut j_iter = j_star.iter().peekable();
    for (t, &(x, y)) in s.entries().iter().enumerate() {
        let pred = predict_members(&mut solver, &members, x)?;
        if pred != y {
            witness_mistakes += 1;
        }
        if j_iter.peek() == Some(&&t) {
            j_iter.next();
            let mut next = MemberSet::empty(class.n_hypotheses());
            for h in members.iter() {
                if class.eval(h, x) == y {
                    next.insert(h);
                }
            }
            members = next;
        }
    }

    let class_dim = DimSolver::new(class, caps).dim_full()?;
    let in_family = j_star.len() as i64 <= class_dim as i64;
    Ok(WitnessCertificate { h_star, opt, j_star, class_dim, witness_mistakes, in_family })
}

/// Total mistakes of every expert in `family` on `s`, by direct replay.
///
/// Independent of any learner run: each expert's predictions are recomputed
/// from its definition. Intended as the exhaustive cross-check for
/// [`best_expert_witness`] and the learner's internal loss accounting.
pub fn enumerate_expert_losses(
    class: &ClassRef,
    s: &LabeledSequence,
    family: &ExpertFamily,
    caps: &Caps,
) -> Result<Vec<u64>> {
    s.validate(class)?;
    let mut solver = DimSolver::new(class, caps);
    let mut out = Vec::with_capacity(family.len());
    for j in family.sets() {
        let mut members = MemberSet::full(class.n_hypotheses());
        let mut mistakes = 0u64;
        let mut pos = 0usize;
        for (t, &(x, y)) in s.entries().iter().enumerate() {
            let pred = predict_members(&mut solver, &members, x)?;
            if pred != y {
                mistakes += 1;
            }
            if pos < j.len() && j[pos] == t as u32 {
                pos += 1;
                let mut next = MemberSet::empty(class.n_hypotheses());
                for h in members.iter() {
                    if class.eval(h, x) == y {
                        next.insert(h);
                    }
                }
                members = next;
            }
        }
        out.push(mistakes);
    }
    Ok(out)
}

/// One `(J, Y)` expert: play `Y` on the rounds in `J`, elsewhere play SOA
/// trained on the expert's own past outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JyExpert {
    /// Sorted round indices on which the assigned labels are played.
    pub j: Vec<u32>,
    /// Assigned labels, aligned with `j`.
    pub y: Vec<u32>,
}

/// The `(J, Y)` expert family: all index sets of size at most the budget,
/// each paired with every label assignment.
#[derive(Debug, Clone)]
pub struct JyFamily {
    horizon: usize,
    budget: usize,
    n_labels: usize,
    experts: Vec<JyExpert>,
}

impl JyFamily {
    /// Number of experts.
    pub fn len(&self) -> usize {
        self.experts.len()
    }

    /// True when no experts exist (never the case after enumeration).
    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    /// The horizon the family was enumerated for.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The size budget on `|J|`.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Label alphabet size the assignments draw from.
    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// The experts, size-major, `J` lexicographic, `Y` odometer order.
    pub fn experts(&self) -> &[JyExpert] {
        &self.experts
    }

    /// Index of the given expert in the family, if present.
    pub fn position(&self, j: &[usize], y: &[usize]) -> Option<usize> {
        self.experts.iter().position(|e| {
            e.j.len() == j.len()
                && e.j.iter().zip(j).all(|(&a, &b)| a as usize == b)
                && e.y.iter().zip(y).all(|(&a, &b)| a as usize == b)
        })
    }
}

/// `sum over i = 0..=min(l,t) of C(t,i) * ny^i`, or `None` on overflow.
pub fn jy_family_size(t: usize, l: usize, ny: usize) -> Option<u64> {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    let mut pow: u128 = 1;
    for i in 0..=l.min(t) {
        if i > 0 {
            binom = binom.checked_mul((t - i + 1) as u128)? / i as u128;
            pow = pow.checked_mul(ny as u128)?;
        }
        total = total.checked_add(binom.checked_mul(pow)?)?;
    }
    u64::try_from(total).ok()
}

/// Enumerates the `(J, Y)` family for `horizon` rounds, size budget `l`,
/// and an alphabet of `ny` labels, refusing families larger than `cap`.
pub fn enumerate_jy_experts(horizon: usize, l: usize, ny: usize, cap: u64) -> Result<JyFamily> {
    if ny == 0 {
        return Err(Error::InvalidInput("label alphabet must be non-empty".into()));
    }
    let size = jy_family_size(horizon, l, ny).ok_or_else(|| {
        Error::Resource(format!(
            "(J,Y) family for horizon {horizon}, budget {l}, {ny} labels overflows a 64-bit count"
        ))
    })?;
    if size > cap {
        return Err(Error::Resource(format!(
            "(J,Y) family needs {size} experts, cap is {cap}"
        )));
    }
    let index_sets = enumerate_experts(horizon, l, cap)?;
    let mut experts = Vec::with_capacity(size as usize);
    for j in index_sets.sets() {
        let k = j.len();
        let mut y = vec![0u32; k];
        loop {
            experts.push(JyExpert { j: j.clone(), y: y.clone() });
            // Advance the label assignment like an odometer, last digit
            // fastest.
            let mut i = k;
            while i > 0 {
                i -= 1;
                if (y[i] as usize) + 1 < ny {
                    y[i] += 1;
                    y[i + 1..].iter_mut().for_each(|d| *d = 0);
                    break;
                }
                if i == 0 {
                    y.clear();
                }
            }
            if k == 0 || y.is_empty() {
                break;
            }
        }
    }
    debug_assert_eq!(experts.len() as u64, size);
    Ok(JyFamily { horizon, budget: l, n_labels: ny, experts })
}

/// Certificate produced by a finite-alphabet learner run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JyCertificate {
    /// Lowest-index hypothesis attaining the minimum mistake count.
    pub h_star: usize,
    /// That minimum mistake count.
    pub opt: u64,
    /// Rounds on which full-update SOA fed `h_star`'s labels mispredicts.
    pub j_star: Vec<usize>,
    /// `h_star`'s labels on the rounds of `j_star`.
    pub y_star: Vec<usize>,
    /// Whether the witness expert's outputs equal `h_star` on every round.
    pub replicates_h_star: bool,
    /// Mistakes of the witness expert on the sequence (equals `opt` when
    /// `replicates_h_star` holds).
    pub witness_mistakes: u64,
}

/// Result of [`finite_y_run`]: the mixture trace plus the witness
/// certificate showing some `(J*, Y*)` expert attains `opt`.
#[derive(Debug, Clone)]
pub struct FiniteYRun {
    /// Mixture trace; `bound` is `sqrt((T/2) ln |family|)`.
    pub trace: MixtureTrace,
    /// Witness certificate.
    pub certificate: JyCertificate,
}

/// Builds the `(J*, Y*)` witness for hypothesis `h` on the points of `s`:
/// run SOA with full updates on the self-labeled stream `(x_t, h(x_t))` and
/// record the mistake rounds with `h`'s labels there.
pub fn finite_y_witness(
    class: &ClassRef,
    s: &LabeledSequence,
    h: usize,
    caps: &Caps,
) -> Result<JyExpert> {
    s.validate(class)?;
    if h >= class.n_hypotheses() {
        return Err(Error::InvalidInput(format!(
            "hypothesis index {h} out of range, class has {}",
            class.n_hypotheses()
        )));
    }
    let mut solver = DimSolver::new(class, caps);
    let mut members = MemberSet::full(class.n_hypotheses());
    let mut j = Vec::new();
    let mut y = Vec::new();
    for (t, &(x, _)) in s.entries().iter().enumerate() {
        let target = class.eval(h, x);
        let pred = predict_members(&mut solver, &members, x)?;
        if pred != target {
            j.push(t as u32);
            y.push(target as u32);
        }
        let mut next = MemberSet::empty(class.n_hypotheses());
        for m in members.iter() {
            if class.eval(m, x) == target {
                next.insert(m);
            }
        }
        members = next;
    }
    Ok(JyExpert { j, y })
}

/// Replays a `(J, Y)` expert over the points of `s`, returning its outputs.
pub fn jy_expert_outputs(
    class: &ClassRef,
    s: &LabeledSequence,
    expert: &JyExpert,
    caps: &Caps,
) -> Result<Vec<usize>> {
    s.validate(class)?;
    let mut solver = DimSolver::new(class, caps);
    let mut members = MemberSet::full(class.n_hypotheses());
    let mut pos = 0usize;
    let mut outputs = Vec::with_capacity(s.len());
    for (t, &(x, _)) in s.entries().iter().enumerate() {
        let out = if pos < expert.j.len() && expert.j[pos] == t as u32 {
            let assigned = expert.y[pos] as usize;
            pos += 1;
            assigned
        } else {
            predict_members(&mut solver, &members, x)?
        };
        outputs.push(out);
        let mut next = MemberSet::empty(class.n_hypotheses());
        for m in members.iter() {
            if class.eval(m, x) == out {
                next.insert(m);
            }
        }
        members = next;
    }
    Ok(outputs)
}

/// Runs the finite-alphabet `(J, Y)` learner over a fixed sequence.
///
/// Asserts at run end that the realized regret stays within
/// `sqrt((T/2) ln |family|)` and reports the witness expert that
/// reproduces the best hypothesis exactly.
pub fn finite_y_run(class: &ClassRef, s: &LabeledSequence, caps: &Caps) -> Result<FiniteYRun> {
    s.validate(class)?;
    if class.n_hypotheses() == 0 {
        return Err(Error::InvalidInput("class has no hypotheses".into()));
    }
    let horizon = s.len();
    let mut solver = DimSolver::new(class, caps);
    let class_dim = solver.dim_full()?;
    let family = enumerate_jy_experts(horizon, class_dim as usize, class.n_labels(), caps.max_experts)?;
    let n = family.len();
    let eta = if horizon == 0 { 0.0 } else { mw_eta(horizon, n) };
    let mut mw = MwState::new(n, eta)?;

    struct JyState {
        members: MemberSet,
        pos: usize,
    }
    let mut states: Vec<JyState> = (0..n)
        .map(|_| JyState { members: MemberSet::full(class.n_hypotheses()), pos: 0 })
        .collect();

    let mut rounds = Vec::with_capacity(horizon);
    let mut cum_expected_loss = 0.0;
    let mut hyp_mistakes = vec![0u64; class.n_hypotheses()];

    for (t, &(x, y)) in s.entries().iter().enumerate() {
        let mut outputs = Vec::with_capacity(n);
        for (expert, state) in family.experts().iter().zip(states.iter_mut()) {
            let out = if state.pos < expert.j.len() && expert.j[state.pos] == t as u32 {
                expert.y[state.pos] as usize
            } else {
                predict_members(&mut solver, &state.members, x)?
            };
            outputs.push(out);
        }
        let p = mw.mix(&outputs, class.n_labels())?;
        let losses: Vec<bool> = outputs.iter().map(|&out| out != y).collect();
        let expected_loss = 1.0 - p.mass(y);
        let direct = mw.weighted_loss(&losses)?;
        if (expected_loss - direct).abs() > REGRET_TOLERANCE {
            return Err(Error::Internal(format!(
                "mixture loss {expected_loss} disagrees with weighted expert loss {direct} at round {t}"
            )));
        }
        mw.update(&losses)?;

        // Each expert absorbs its own output, assigned or predicted.
        for (i, state) in states.iter_mut().enumerate() {
            let expert = &family.experts()[i];
            if state.pos < expert.j.len() && expert.j[state.pos] == t as u32 {
                state.pos += 1;
            }
            let out = outputs[i];
            let mut next = MemberSet::empty(class.n_hypotheses());
            for m in state.members.iter() {
                if class.eval(m, x) == out {
                    next.insert(m);
                }
            }
            state.members = next;
        }

        for (h, count) in hyp_mistakes.iter_mut().enumerate() {
            if class.eval(h, x) != y {
                *count += 1;
            }
        }
        cum_expected_loss += expected_loss;
        rounds.push(RoundRecord {
            t: t + 1,
            p,
            expert_losses: losses,
            expected_loss,
            cum_expected_loss,
            opt_so_far: *hyp_mistakes.iter().min().expect("non-empty class"),
        });
    }

    let (h_star, opt) = if horizon == 0 {
        (0, 0)
    } else {
        opt_mistakes(class, s)?
    };
    let regret = cum_expected_loss - opt as f64;
    let bound = if horizon == 0 { 0.0 } else { mw_regret_bound(horizon, n) };
    if regret > bound + REGRET_TOLERANCE {
        return Err(Error::Internal(format!(
            "regret {regret} exceeds certified bound {bound}"
        )));
    }

    let witness = finite_y_witness(class, s, h_star, caps)?;
    let witness_outputs = jy_expert_outputs(class, s, &witness, caps)?;
    let replicates = s
        .entries()
        .iter()
        .zip(&witness_outputs)
        .all(|(&(x, _), &out)| out == class.eval(h_star, x));
    let witness_mistakes = s
        .entries()
        .iter()
        .zip(&witness_outputs)
        .filter(|(&(_, y), &out)| out != y)
        .count() as u64;

    Ok(FiniteYRun {
        trace: MixtureTrace {
            horizon,
            family_budget: class_dim as usize,
            class_dim,
            n_experts: n,
            eta,
            rounds,
            cum_expected_loss,
            opt,
            regret,
            bound,
            bound_asserted: true,
            expert_cum_losses: mw.cumulative_losses().to_vec(),
        },
        certificate: JyCertificate {
            h_star,
            opt,
            j_star: witness.j.iter().map(|&t| t as usize).collect(),
            y_star: witness.y.iter().map(|&y| y as usize).collect(),
            replicates_h_star: replicates,
            witness_mistakes,
        },
    })
}
