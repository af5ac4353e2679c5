//! Randomized invariants across the library, checked with proptest.

use proptest::prelude::*;

use llab_core::agnostic::{
    aag_run, best_expert_witness, enumerate_expert_losses, enumerate_experts, expert_predict,
};
use llab_core::concept::{is_realizable, ClassRef, ConceptClass, LabeledSequence, VersionSpace};
use llab_core::dims::{littlestone_dim, littlestone_dim_bruteforce, sequential_graph_dim, DimSolver};
use llab_core::mw::{run_binary_protocol, MwState, REGRET_TOLERANCE};
use llab_core::oracle::{aulln_error, opt_mistakes, sequential_rademacher};
use llab_core::soa::{conservative_soa, soa_run};
use llab_core::Caps;

fn caps() -> Caps {
    Caps::default()
}

fn class_from_rows(nx: usize, ny: usize, rows: Vec<Vec<usize>>) -> ClassRef {
    let points = (0..nx).map(|i| format!("x{i}")).collect();
    let labels = (0..ny).map(|i| format!("y{i}")).collect();
    ConceptClass::from_parts(points, labels, rows, &caps()).expect("valid table")
}

fn arb_class(max_x: usize, max_y: usize, max_h: usize) -> impl Strategy<Value = ClassRef> {
    (1..=max_x, 2..=max_y)
        .prop_flat_map(move |(nx, ny)| {
            prop::collection::vec(prop::collection::vec(0..ny, nx), 1..=max_h)
                .prop_map(move |rows| class_from_rows(nx, ny, rows))
        })
}

fn arb_class_and_seq(
    max_x: usize,
    max_y: usize,
    max_h: usize,
    max_t: usize,
) -> impl Strategy<Value = (ClassRef, LabeledSequence)> {
    arb_class(max_x, max_y, max_h).prop_flat_map(move |c| {
        let (nx, ny) = (c.n_points(), c.n_labels());
        prop::collection::vec((0..nx, 0..ny), 0..=max_t)
            .prop_map(move |entries| (ClassRef::clone(&c), LabeledSequence::new(entries)))
    })
}

proptest! {
    #[test]
    fn restriction_shrinks_the_version_space(
        (c, s) in arb_class_and_seq(4, 3, 12, 6),
    ) {
        let mut v = VersionSpace::full(&c);
        for &(x, y) in s.entries() {
            let next = v.restrict(x, y)?;
            prop_assert!(next.len() <= v.len());
            let kept: Vec<usize> = next.member_indices();
            let old: Vec<usize> = v.member_indices();
            prop_assert!(kept.iter().all(|h| old.contains(h)));
            prop_assert!(kept.iter().all(|&h| c.eval(h, x) == y));
            v = next;
        }
    }

    #[test]
    fn realizability_is_permutation_invariant(
        ((c, s), seed) in (arb_class_and_seq(4, 3, 10, 8), any::<u64>()),
    ) {
        let mut perm: Vec<usize> = (0..s.len()).collect();
        // Fisher-Yates driven by the seed keeps the case reproducible.
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = LabeledSequence::new(
            perm.iter().map(|&i| s.entries()[i]).collect(),
        );
        let v = VersionSpace::full(&c);
        prop_assert_eq!(
            is_realizable(&v, &s)?,
            is_realizable(&v, &shuffled)?
        );
    }

    #[test]
    fn dimension_respects_the_halving_bound(c in arb_class(4, 3, 16)) {
        let d = littlestone_dim(&VersionSpace::full(&c), &caps())?;
        let log = (c.n_hypotheses() as f64).log2().floor() as i32;
        prop_assert!(d <= log, "dim {d} exceeds log2 of {} hypotheses", c.n_hypotheses());
        prop_assert!(d >= 0);
    }

    #[test]
    fn at_most_one_label_attains_the_dimension(c in arb_class(4, 3, 12)) {
        let v = VersionSpace::full(&c);
        let mut solver = DimSolver::new(&c, &caps());
        let d = solver.dim(v.members())?;
        for x in 0..c.n_points() {
            let mut attaining = 0;
            for y in v.realized_labels_at(x)? {
                if solver.dim(v.restrict(x, y)?.members())? == d {
                    attaining += 1;
                }
            }
            prop_assert!(attaining <= 1, "point {x} has {attaining} labels attaining {d}");
        }
    }

    #[test]
    fn soa_stays_within_the_mistake_budget(
        (c, h_pick, xs) in arb_class(4, 3, 12).prop_flat_map(|c| {
            let (nx, nh) = (c.n_points(), c.n_hypotheses());
            (Just(c), 0..nh, prop::collection::vec(0..nx, 0..=10))
        }),
    ) {
        let s = LabeledSequence::new(
            xs.iter().map(|&x| (x, c.eval(h_pick, x))).collect(),
        );
        let d = littlestone_dim(&VersionSpace::full(&c), &caps())?;
        let run = soa_run(&c, &s, &caps())?;
        prop_assert!(run.mistakes as i32 <= d, "{} mistakes, dimension {d}", run.mistakes);
        let j = conservative_soa(&c, &s, &caps())?;
        prop_assert!(j.len() as i32 <= d);
        prop_assert!(j.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_and_bruteforce_dimensions_agree(c in arb_class(4, 3, 16)) {
        let v = VersionSpace::full(&c);
        let fast = littlestone_dim(&v, &caps())?;
        let slow = littlestone_dim_bruteforce(&v, 5, &caps())?;
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn subclasses_never_increase_the_dimension(
        (c, mask) in arb_class(4, 3, 12).prop_flat_map(|c| {
            let nh = c.n_hypotheses();
            (Just(c), prop::collection::vec(any::<bool>(), nh))
        }),
    ) {
        let members: Vec<usize> =
            (0..c.n_hypotheses()).filter(|&h| mask[h]).collect();
        prop_assume!(!members.is_empty());
        let sub = c.subclass(&members, &caps())?;
        let d_sub = littlestone_dim(&VersionSpace::full(&sub), &caps())?;
        let d = littlestone_dim(&VersionSpace::full(&c), &caps())?;
        prop_assert!(d_sub <= d);
    }

    #[test]
    fn binary_graph_dimension_equals_littlestone(c in arb_class(4, 2, 12)) {
        let d = littlestone_dim(&VersionSpace::full(&c), &caps())?;
        let g = sequential_graph_dim(&c, &caps())?;
        prop_assert_eq!(g, d);
    }

    #[test]
    fn graph_dimension_respects_the_alphabet_bound(c in arb_class(3, 3, 10)) {
        let l = littlestone_dim(&VersionSpace::full(&c), &caps())?;
        let g = sequential_graph_dim(&c, &caps())?;
        let bound = 2.0 * l as f64 * (std::f64::consts::E * c.n_labels() as f64).log2();
        prop_assert!(g as f64 <= bound + 1e-12, "graph dim {g}, bound {bound}");
    }

    #[test]
    fn mixture_protocol_regret_stays_bounded(
        (preds, outcomes) in (1usize..=8, 1usize..=12).prop_flat_map(|(n, t)| (
            prop::collection::vec(prop::collection::vec(any::<bool>(), t), n),
            prop::collection::vec(any::<bool>(), t),
        )),
    ) {
        let run = run_binary_protocol(&preds, &outcomes)?;
        prop_assert!(run.regret <= run.bound + REGRET_TOLERANCE);
    }

    #[test]
    fn mixture_masses_always_sum_to_one(
        losses in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 0..=10),
    ) {
        let mut mw = MwState::new(4, 0.7)?;
        for round in &losses {
            mw.update(round)?;
            for (i, &w) in mw.weights().iter().enumerate() {
                let expected = (-0.7 * mw.cumulative_losses()[i] as f64).exp();
                prop_assert!((w - expected).abs() <= 1e-12 * expected.max(1e-300));
            }
            let p = mw.mix(&[0, 1, 2, 0], 3)?;
            let total: f64 = (0..3).map(|y| p.mass(y)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "masses sum to {total}");
        }
    }

    #[test]
    fn expert_predictions_ignore_examples_outside_their_set(
        ((c, s), j_mask, flip, t_pick) in (
            arb_class_and_seq(4, 3, 10, 8),
            prop::collection::vec(any::<bool>(), 8),
            prop::collection::vec(any::<bool>(), 8),
            0usize..8,
        ),
    ) {
        prop_assume!(!s.is_empty());
        let t = t_pick % s.len();
        let j: Vec<usize> = (0..s.len()).filter(|&i| j_mask[i % j_mask.len()]).collect();
        let x = s.entries()[t].0;
        let reference = expert_predict(&c, &j, &s, t, x, &caps())?;
        let mutated: Vec<(usize, usize)> = s
            .entries()
            .iter()
            .enumerate()
            .map(|(i, &(xi, yi))| {
                let outside = !(j.contains(&i) && i < t);
                if outside && flip[i % flip.len()] {
                    (xi, (yi + 1) % c.n_labels())
                } else {
                    (xi, yi)
                }
            })
            .collect();
        let got = expert_predict(&c, &j, &LabeledSequence::new(mutated), t, x, &caps())?;
        prop_assert_eq!(got, reference);
    }

    #[test]
    fn agnostic_runs_certify_their_bound_and_witness(
        (c, s) in arb_class_and_seq(3, 3, 6, 6),
    ) {
        let trace = aag_run(&c, &s, &caps())?;
        prop_assert!(trace.bound_asserted || trace.horizon < trace.family_budget);
        if trace.bound_asserted {
            prop_assert!(trace.regret <= trace.bound + REGRET_TOLERANCE);
        }
        if !s.is_empty() {
            let (_, opt) = opt_mistakes(&c, &s)?;
            prop_assert_eq!(trace.opt, opt);
            let w = best_expert_witness(&c, &s, &caps())?;
            prop_assert!(w.in_family);
            prop_assert!(w.witness_mistakes <= w.opt + w.j_star.len() as u64);
            let fam = enumerate_experts(s.len(), trace.family_budget, caps().max_experts)?;
            let direct = enumerate_expert_losses(&c, &s, &fam, &caps())?;
            prop_assert_eq!(&trace.expert_cum_losses, &direct);
            let best = *direct.iter().min().unwrap();
            prop_assert!(best <= w.witness_mistakes);
        }
    }

    #[test]
    fn aulln_error_is_permutation_invariant(
        ((c, s), k_raw, seed) in (
            arb_class_and_seq(4, 3, 10, 8),
            prop::collection::vec(0usize..8, 1..=6),
            any::<u64>(),
        ),
    ) {
        prop_assume!(!s.is_empty());
        let k: Vec<usize> = k_raw.iter().map(|&i| i % s.len()).collect();
        let mut perm: Vec<usize> = (0..s.len()).collect();
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let mut inverse = vec![0usize; perm.len()];
        for (j, &i) in perm.iter().enumerate() {
            inverse[i] = j;
        }
        let shuffled = LabeledSequence::new(perm.iter().map(|&i| s.entries()[i]).collect());
        let k_shuffled: Vec<usize> = k.iter().map(|&i| inverse[i]).collect();
        let a = aulln_error(&c, &k, &s)?;
        let b = aulln_error(&c, &k_shuffled, &shuffled)?;
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rademacher_is_monotone_under_class_inclusion(
        (c, mask, t) in arb_class(2, 2, 6).prop_flat_map(|c| {
            let nh = c.n_hypotheses();
            (Just(c), prop::collection::vec(any::<bool>(), nh), 1usize..=2)
        }),
    ) {
        let members: Vec<usize> =
            (0..c.n_hypotheses()).filter(|&h| mask[h]).collect();
        prop_assume!(!members.is_empty());
        let sub = c.subclass(&members, &caps())?;
        let r_sub = sequential_rademacher(&sub, t, &caps())?;
        let r = sequential_rademacher(&c, t, &caps())?;
        prop_assert!(r_sub <= r + 1e-15, "sub {r_sub} > full {r}");
        prop_assert!((-1.0..=1.0).contains(&r));
    }
}
