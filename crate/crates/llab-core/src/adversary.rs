//! Sequence generators that stress the learners.
//!
//! The tree walker realizes the dimension lower bound: walking a shattered
//! tree of depth `L` against any deterministic learner forces a mistake on
//! every one of its `L` rounds while keeping the sequence realizable. The
//! noisy generator corrupts a chosen hypothesis's labels at a fixed rate,
//! and the minimum-mass generator plays the greedy adversarial label
//! against a distribution-valued learner.

use rand::Rng;

use crate::agnostic::DistributionLearner;
use crate::caps::Caps;
use crate::concept::{seeded_rng, ClassRef, LabeledSequence, VersionSpace};
use crate::dims::{littlestone_dim, shattered_tree};
use crate::error::{Error, Result};
use crate::soa::OnlineLearner;

/// Walks a depth-`L` shattered tree against `learner`, answering each
/// prediction with a label the tree realizes on the other branch. Every
/// round is a forced mistake and the returned sequence is realizable.
/// Classes of dimension zero or less give the empty sequence.
///
/// The forcing argument needs a deterministic opponent, so each query is
/// issued twice; a learner whose answer changes between identical queries
/// is rejected with a precondition error.
pub fn tree_walk_adversary(
    class: &ClassRef,
    learner: &mut dyn OnlineLearner,
    caps: &Caps,
) -> Result<LabeledSequence> {
    let v = VersionSpace::full(class);
    let d = littlestone_dim(&v, caps)?;
    if d <= 0 {
        return Ok(LabeledSequence::new(Vec::new()));
    }
    let d = d as usize;
    let tree = shattered_tree(&v, d, caps)?
        .ok_or_else(|| Error::Internal("no shattered tree at the class dimension".into()))?;
    let mut entries = Vec::with_capacity(d);
    let mut addr = 0usize;
    for level in 0..d {
        let (x, y0, y1) = tree.node(level, addr);
        let pred = learner.predict(x)?;
        if learner.predict(x)? != pred {
            return Err(Error::Precondition(format!(
                "learner answered point {x} inconsistently at round {level}; the tree walk needs a deterministic learner"
            )));
        }
        // Branch away from the prediction; both labels are realized below
        // this node, so the mistake costs the adversary nothing.
        let (bit, y) = if pred == y0 { (1, y1) } else { (0, y0) };
        learner.observe(x, y)?;
        entries.push((x, y));
        addr = addr * 2 + bit;
    }
    Ok(LabeledSequence::new(entries))
}

/// Labels `t` uniformly random points by hypothesis `h`, flipping each
/// label with probability `rate` to a uniformly random different label.
/// Deterministic in `seed`.
pub fn noisy_adversary(
    class: &ClassRef,
    h: usize,
    rate: f64,
    t: usize,
    seed: u64,
) -> Result<LabeledSequence> {
    if h >= class.n_hypotheses() {
        return Err(Error::InvalidInput(format!(
            "hypothesis index {h} out of range, class has {}",
            class.n_hypotheses()
        )));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!("noise rate {rate} is not in [0, 1]")));
    }
    if rate > 0.0 && class.n_labels() < 2 {
        return Err(Error::InvalidInput(
            "noise needs at least two labels to flip between".into(),
        ));
    }
    let mut rng = seeded_rng(seed, 1);
    let entries = (0..t)
        .map(|_| {
            let x = rng.gen_range(0..class.n_points());
            let mut y = class.eval(h, x);
            if rate > 0.0 && rng.gen_bool(rate) {
                let alt = rng.gen_range(0..class.n_labels() - 1);
                y = if alt >= y { alt + 1 } else { alt };
            }
            (x, y)
        })
        .collect();
    Ok(LabeledSequence::new(entries))
}

/// Drives a distribution-valued learner for `t` rounds, cycling through
/// the points and always revealing the realized label the learner puts the
/// least mass on (ties toward the lowest label index).
pub fn min_mass_adversary(
    class: &ClassRef,
    learner: &mut dyn DistributionLearner,
    t: usize,
) -> Result<LabeledSequence> {
    if class.n_hypotheses() == 0 {
        return Err(Error::InvalidInput("class has no hypotheses".into()));
    }
    let full = VersionSpace::full(class);
    let realized: Vec<Vec<usize>> = (0..class.n_points())
        .map(|x| full.realized_labels_at(x))
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(t);
    for round in 0..t {
        let x = round % class.n_points();
        let p = learner.predict_dist(x)?;
        let labels = &realized[x];
        let mut y = labels[0];
        let mut least = p.mass(y);
        for &cand in &labels[1..] {
            let m = p.mass(cand);
            if m < least {
                y = cand;
                least = m;
            }
        }
        learner.observe(x, y)?;
        entries.push((x, y));
    }
    Ok(LabeledSequence::new(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agnostic::AagLearner;
    use crate::concept::{example1_class, full_binary_class, is_realizable, ConceptClass};
    use crate::mw::REGRET_TOLERANCE;
    use crate::soa::SoaState;

    fn caps() -> Caps {
        Caps::default()
    }

    struct Counting<L> {
        inner: L,
        last: Option<usize>,
        mistakes: usize,
        rounds: usize,
    }

    impl<L> Counting<L> {
        fn new(inner: L) -> Counting<L> {
            Counting { inner, last: None, mistakes: 0, rounds: 0 }
        }
    }

    impl<L: OnlineLearner> OnlineLearner for Counting<L> {
        fn predict(&mut self, x: usize) -> Result<usize> {
            let pred = self.inner.predict(x)?;
            self.last = Some(pred);
            Ok(pred)
        }

        fn observe(&mut self, x: usize, y: usize) -> Result<()> {
            if self.last.take().expect("predict before observe") != y {
                self.mistakes += 1;
            }
            self.rounds += 1;
            self.inner.observe(x, y)
        }
    }

    struct Constant(usize);

    impl OnlineLearner for Constant {
        fn predict(&mut self, _x: usize) -> Result<usize> {
            Ok(self.0)
        }

        fn observe(&mut self, _x: usize, _y: usize) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn tree_walk_forces_a_mistake_every_round_against_soa() {
        let c = full_binary_class(3, &caps()).unwrap();
        let mut learner = Counting::new(SoaState::new(&c, &caps()));
        let s = tree_walk_adversary(&c, &mut learner, &caps()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(learner.mistakes, 3);
        assert!(is_realizable(&VersionSpace::full(&c), &s).unwrap());
    }

    #[test]
    fn tree_walk_forces_the_dimension_against_any_learner() {
        let c = example1_class(3, &caps()).unwrap();
        let mut learner = Counting::new(Constant(0));
        let s = tree_walk_adversary(&c, &mut learner, &caps()).unwrap();
        assert_eq!(s.len(), 1, "the class has dimension one");
        assert_eq!(learner.mistakes, 1);
        assert!(is_realizable(&VersionSpace::full(&c), &s).unwrap());
    }

    #[test]
    fn tree_walk_on_a_dimension_zero_class_is_empty() {
        let c = ConceptClass::from_parts(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![vec![0, 1]],
            &caps(),
        )
        .unwrap();
        let mut learner = Counting::new(SoaState::new(&c, &caps()));
        let s = tree_walk_adversary(&c, &mut learner, &caps()).unwrap();
        assert!(s.is_empty());
    }

    struct Flapping(usize);

    impl OnlineLearner for Flapping {
        fn predict(&mut self, _x: usize) -> Result<usize> {
            self.0 += 1;
            Ok(self.0 % 2)
        }

        fn observe(&mut self, _x: usize, _y: usize) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn tree_walk_rejects_learners_with_unstable_predictions() {
        let c = full_binary_class(2, &caps()).unwrap();
        let err = tree_walk_adversary(&c, &mut Flapping(0), &caps()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn noisy_sequences_are_deterministic_in_the_seed() {
        let c = example1_class(3, &caps()).unwrap();
        let a = noisy_adversary(&c, 2, 0.3, 20, 99).unwrap();
        let b = noisy_adversary(&c, 2, 0.3, 20, 99).unwrap();
        let other = noisy_adversary(&c, 2, 0.3, 20, 100).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert_ne!(a.entries(), other.entries());
    }

    #[test]
    fn noise_rate_zero_and_one_are_exact() {
        let c = full_binary_class(3, &caps()).unwrap();
        let clean = noisy_adversary(&c, 5, 0.0, 25, 7).unwrap();
        assert!(clean.entries().iter().all(|&(x, y)| c.eval(5, x) == y));
        let flipped = noisy_adversary(&c, 5, 1.0, 25, 7).unwrap();
        assert!(flipped.entries().iter().all(|&(x, y)| c.eval(5, x) != y));
    }

    #[test]
    fn noisy_adversary_validates_inputs() {
        let c = full_binary_class(2, &caps()).unwrap();
        assert!(matches!(noisy_adversary(&c, 99, 0.1, 5, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(noisy_adversary(&c, 0, 1.5, 5, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(noisy_adversary(&c, 0, -0.1, 5, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(noisy_adversary(&c, 0, f64::NAN, 5, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn min_mass_adversary_cannot_break_the_certified_bound() {
        let c = example1_class(3, &caps()).unwrap();
        let t = 10;
        let mut learner = AagLearner::new(&c, t, None, &caps()).unwrap();
        let s = min_mass_adversary(&c, &mut learner, t).unwrap();
        assert_eq!(s.len(), t);
        s.validate(&c).unwrap();
        let full = VersionSpace::full(&c);
        for &(x, y) in s.entries() {
            assert!(full.realized_labels_at(x).unwrap().contains(&y));
        }
        let trace = learner.finish().unwrap();
        assert!(trace.bound_asserted);
        assert!(trace.regret <= trace.bound + REGRET_TOLERANCE);
    }
}
