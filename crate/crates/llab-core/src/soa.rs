//! The standard optimal algorithm (SOA) for realizable online prediction.
//!
//! SOA keeps the version space of hypotheses consistent with the absorbed
//! history and predicts, at each point, the label whose restriction has the
//! largest dimension. On any sequence realizable by the class, the
//! dimension strictly decreases on every mistake, so the number of
//! mistakes under full updates is at most the class dimension.
//!
//! Two update disciplines are provided: [`SoaState`] absorbs every example
//! (full updates), while [`conservative_soa`] absorbs only mistakes and
//! returns the ordered set of mistake indices.

use crate::caps::Caps;
use crate::concept::{is_realizable, ClassRef, LabeledSequence, MemberSet, VersionSpace, DEFAULT_LABEL};
use crate::dims::DimSolver;
use crate::error::{Error, Result};

/// An online learner that commits to a single label each round.
pub trait OnlineLearner {
    /// Predicts a label for `x` without absorbing anything.
    fn predict(&mut self, x: usize) -> Result<usize>;
    /// Absorbs the revealed example `(x, y)`.
    fn observe(&mut self, x: usize, y: usize) -> Result<()>;
}

/// Predicts the realized label at `x` whose restriction has the largest
/// dimension, breaking ties toward the lowest label index. An empty member
/// set yields [`DEFAULT_LABEL`].
pub(crate) fn predict_members(solver: &mut DimSolver, members: &MemberSet, x: usize) -> Result<usize> {
    let class = ClassRef::clone(solver.class());
    class.check_example(x, 0)?;
    if members.is_empty() {
        return Ok(DEFAULT_LABEL);
    }
    let ny = class.n_labels();
    let mut seen = vec![false; ny];
    for h in members.iter() {
        seen[class.eval(h, x)] = true;
    }
    let mut best: Option<(i32, usize)> = None;
    for y in (0..ny).filter(|&y| seen[y]) {
        let mut restricted = MemberSet::empty(class.n_hypotheses());
        for h in members.iter() {
            if class.eval(h, x) == y {
                restricted.insert(h);
            }
        }
        let d = solver.dim(&restricted)?;
        if best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, y));
        }
    }
    Ok(best.expect("non-empty member set realizes some label").1)
}

/// SOA with full updates: every observed example is absorbed.
pub struct SoaState {
    solver: DimSolver,
    members: MemberSet,
}

impl SoaState {
    /// Fresh state over the full class.
    pub fn new(class: &ClassRef, caps: &Caps) -> SoaState {
        SoaState {
            solver: DimSolver::new(class, caps),
            members: MemberSet::full(class.n_hypotheses()),
        }
    }

    /// Current version space.
    pub fn version_space(&self) -> VersionSpace {
        VersionSpace::with_members(self.solver.class(), self.members.clone())
    }

    /// Dimension of the current version space.
    pub fn dim(&mut self) -> Result<i32> {
        self.solver.dim(&self.members)
    }
}

impl OnlineLearner for SoaState {
    fn predict(&mut self, x: usize) -> Result<usize> {
        predict_members(&mut self.solver, &self.members, x)
    }

    fn observe(&mut self, x: usize, y: usize) -> Result<()> {
        self.solver.class().check_example(x, y)?;
        let class = ClassRef::clone(self.solver.class());
        let mut next = MemberSet::empty(class.n_hypotheses());
        for h in self.members.iter() {
            if class.eval(h, x) == y {
                next.insert(h);
            }
        }
        self.members = next;
        Ok(())
    }
}

/// One-shot SOA prediction for a version space.
pub fn soa_predict(v: &VersionSpace, x: usize, caps: &Caps) -> Result<usize> {
    let mut solver = DimSolver::new(v.class(), caps);
    predict_members(&mut solver, v.members(), x)
}

/// Outcome of running SOA with full updates over a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoaRun {
    /// Per-round predictions.
    pub predictions: Vec<usize>,
    /// Total number of prediction mistakes.
    pub mistakes: usize,
}

/// Runs SOA with full updates over `s`.
pub fn soa_run(class: &ClassRef, s: &LabeledSequence, caps: &Caps) -> Result<SoaRun> {
    s.validate(class)?;
    let mut state = SoaState::new(class, caps);
    let mut predictions = Vec::with_capacity(s.len());
    let mut mistakes = 0;
    for &(x, y) in s.entries() {
        let pred = state.predict(x)?;
        if pred != y {
            mistakes += 1;
        }
        predictions.push(pred);
        state.observe(x, y)?;
    }
    Ok(SoaRun { predictions, mistakes })
}

/// Runs SOA conservatively over a realizable sequence: only mistaken rounds
/// are absorbed. Returns the ordered 0-based mistake indices; their count
/// never exceeds the class dimension.
pub fn conservative_soa(class: &ClassRef, s: &LabeledSequence, caps: &Caps) -> Result<Vec<usize>> {
    s.validate(class)?;
    let full = VersionSpace::full(class);
    if !is_realizable(&full, s)? {
        return Err(Error::Precondition(
            "conservative SOA requires a realizable sequence".into(),
        ));
    }
    let mut solver = DimSolver::new(class, caps);
    let mut members = MemberSet::full(class.n_hypotheses());
    let mut mistake_indices = Vec::new();
    for (t, &(x, y)) in s.entries().iter().enumerate() {
        let pred = predict_members(&mut solver, &members, x)?;
        if pred != y {
            mistake_indices.push(t);
            let mut next = MemberSet::empty(class.n_hypotheses());
            for h in members.iter() {
                if class.eval(h, x) == y {
                    next.insert(h);
                }
            }
            members = next;
        }
    }
    Ok(mistake_indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::{example1_class, full_binary_class, random_class, ConceptClass};
    use crate::dims::littlestone_dim;
    use rand::Rng;

    fn caps() -> Caps {
        Caps::default()
    }

    fn realizable_sequence(class: &ClassRef, h: usize, t: usize, seed: u64) -> LabeledSequence {
        let mut rng = crate::concept::seeded_rng(seed, 7);
        let entries = (0..t)
            .map(|_| {
                let x = rng.gen_range(0..class.n_points());
                (x, class.eval(h, x))
            })
            .collect();
        LabeledSequence::new(entries)
    }

    #[test]
    fn prediction_breaks_ties_toward_lowest_label() {
        let c = ConceptClass::from_parts(
            vec!["a".into()],
            vec!["0".into(), "1".into(), "2".into()],
            vec![vec![2], vec![1]],
            &caps(),
        )
        .unwrap();
        // Both realized restrictions are singletons of dimension 0.
        let mut state = SoaState::new(&c, &caps());
        assert_eq!(state.predict(0).unwrap(), 1);
    }

    #[test]
    fn empty_version_space_predicts_default_label() {
        let c = full_binary_class(2, &caps()).unwrap();
        let mut state = SoaState::new(&c, &caps());
        state.observe(0, 0).unwrap();
        state.observe(0, 1).unwrap();
        assert!(state.version_space().is_empty());
        assert_eq!(state.predict(0).unwrap(), DEFAULT_LABEL);
        assert_eq!(state.predict(1).unwrap(), DEFAULT_LABEL);
        // Further updates keep the state total.
        state.observe(1, 1).unwrap();
        assert_eq!(state.predict(1).unwrap(), DEFAULT_LABEL);
    }

    #[test]
    fn full_updates_absorb_every_example() {
        let c = full_binary_class(3, &caps()).unwrap();
        let mut state = SoaState::new(&c, &caps());
        state.observe(0, 1).unwrap();
        state.observe(2, 0).unwrap();
        let v = VersionSpace::full(&c).restrict(0, 1).unwrap().restrict(2, 0).unwrap();
        assert_eq!(state.version_space(), v);
    }

    #[test]
    fn realizable_runs_make_at_most_dimension_mistakes() {
        for seed in 0..40 {
            let mut rng = crate::concept::seeded_rng(7000 + seed, 0);
            let nx = rng.gen_range(1..=4);
            let ny = rng.gen_range(2..=3);
            let nh = rng.gen_range(1..=12);
            let c = random_class(seed, nx, ny, nh, &caps()).unwrap();
            let d = littlestone_dim(&VersionSpace::full(&c), &caps()).unwrap();
            let h = rng.gen_range(0..c.n_hypotheses());
            let s = realizable_sequence(&c, h, 12, 7000 + seed);
            let run = soa_run(&c, &s, &caps()).unwrap();
            assert!(
                run.mistakes as i32 <= d,
                "seed {seed}: {} mistakes, dimension {d}",
                run.mistakes
            );
        }
    }

    #[test]
    fn mistakes_strictly_shrink_the_dimension_on_realizable_streams() {
        let c = full_binary_class(4, &caps()).unwrap();
        let mut state = SoaState::new(&c, &caps());
        let h = 11;
        let mut rng = crate::concept::seeded_rng(99, 0);
        for _ in 0..16 {
            let x = rng.gen_range(0..c.n_points());
            let y = c.eval(h, x);
            let before = state.dim().unwrap();
            let pred = state.predict(x).unwrap();
            state.observe(x, y).unwrap();
            if pred != y {
                let after = state.dim().unwrap();
                assert!(after < before, "mistake left dimension at {after}");
            }
        }
    }

    #[test]
    fn separating_family_runs_make_at_most_one_mistake() {
        let c = example1_class(3, &caps()).unwrap();
        for h in 0..c.n_hypotheses() {
            let s = realizable_sequence(&c, h, 10, h as u64);
            let run = soa_run(&c, &s, &caps()).unwrap();
            assert!(run.mistakes <= 1, "hypothesis {h} forced {} mistakes", run.mistakes);
        }
    }

    #[test]
    fn conservative_soa_requires_realizability() {
        let c = full_binary_class(2, &caps()).unwrap();
        let s = LabeledSequence::new(vec![(0, 0), (0, 1)]);
        let err = conservative_soa(&c, &s, &caps()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn conservative_soa_bounds_mistakes_by_dimension() {
        for seed in 0..40 {
            let mut rng = crate::concept::seeded_rng(8000 + seed, 0);
            let nx = rng.gen_range(1..=4);
            let ny = rng.gen_range(2..=3);
            let nh = rng.gen_range(1..=12);
            let c = random_class(100 + seed, nx, ny, nh, &caps()).unwrap();
            let d = littlestone_dim(&VersionSpace::full(&c), &caps()).unwrap();
            let h = rng.gen_range(0..c.n_hypotheses());
            let s = realizable_sequence(&c, h, 12, 8000 + seed);
            let j = conservative_soa(&c, &s, &caps()).unwrap();
            assert!(j.len() as i32 <= d, "seed {seed}: |J| = {}, dimension {d}", j.len());
            assert!(j.windows(2).all(|w| w[0] < w[1]), "indices must be increasing");
        }
    }

    #[test]
    fn conservative_mistake_set_matches_inline_replay() {
        let c = full_binary_class(3, &caps()).unwrap();
        let s = realizable_sequence(&c, 5, 10, 123);
        let j = conservative_soa(&c, &s, &caps()).unwrap();
        // Replay: absorb only indices in j, predicting before each round.
        let mut solver = DimSolver::new(&c, &caps());
        let mut members = MemberSet::full(c.n_hypotheses());
        for (t, &(x, y)) in s.entries().iter().enumerate() {
            let pred = predict_members(&mut solver, &members, x).unwrap();
            if j.contains(&t) {
                assert_ne!(pred, y, "round {t} is in J but was predicted correctly");
                let mut next = MemberSet::empty(c.n_hypotheses());
                for h in members.iter() {
                    if c.eval(h, x) == y {
                        next.insert(h);
                    }
                }
                members = next;
            } else {
                assert_eq!(pred, y, "round {t} is outside J but was predicted wrongly");
            }
        }
    }
}
