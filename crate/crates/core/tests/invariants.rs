mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tplan_core::analysis::{mutex, Analysis};
use tplan_core::fixtures::{self, Family};
use tplan_core::model::{ActionId, LinearExpr, NumVar, NumericEffect, Role, SnapId, TemporalNumericProblem};
use tplan_core::pattern::{build_base_pattern, simplify, Ordering, Pattern, PatternConfig};
use tplan_core::plan::{TimedAction, TimedPlan};
use tplan_core::rational;
use tplan_core::validate::res;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn snap_ids(pb: &TemporalNumericProblem) -> Vec<SnapId> {
    pb.action_ids()
        .flat_map(|a| [Role::Start, Role::Lasting, Role::End].map(|r| SnapId::new(a, r)))
        .collect()
}

fn random_pattern(r: &mut impl Rng, pb: &TemporalNumericProblem, max: usize) -> Pattern {
    let len = r.gen_range(0..=max);
    Pattern::new((0..len).map(|_| {
        let a = ActionId(r.gen_range(0..pb.actions.len()));
        SnapId::new(a, if r.gen() { Role::Start } else { Role::End })
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mutex_is_symmetric(seed in any::<u64>()) {
        let pb = common::random_problem(&mut rng(seed));
        let an = Analysis::new(&pb);
        for &a in &snap_ids(&pb) {
            for &b in &snap_ids(&pb) {
                prop_assert_eq!(mutex(pb.snap(a), pb.snap(b)), mutex(pb.snap(b), pb.snap(a)));
                prop_assert_eq!(an.mutex(a, b), an.mutex(b, a));
            }
        }
    }

    #[test]
    fn non_mutex_snaps_commute(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pb = common::random_problem(&mut r);
        let s = common::random_state(&mut r);
        let ids = snap_ids(&pb);
        for &a in &ids {
            for &b in &ids {
                let (x, y) = (pb.snap(a), pb.snap(b));
                if a == b || mutex(x, y) {
                    continue;
                }
                let both = res(&[x, y], &s).expect("non-mutex pair");
                prop_assert_eq!(&both, &res(&[y, x], &s).unwrap());
                prop_assert_eq!(&both, &y.apply(&x.apply(&s)));
                prop_assert_eq!(&both, &x.apply(&y.apply(&s)));
            }
        }
    }

    #[test]
    fn concatenation_repeats_snaps(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let pb = common::random_problem(&mut r);
        let p = random_pattern(&mut r, &pb, 8);
        let c = p.concatenate(n);
        prop_assert_eq!(c.len(), n * p.len());
        let base: Vec<SnapId> = p.snaps().collect();
        for (i, e) in c.entries().iter().enumerate() {
            prop_assert_eq!(e.snap, base[i % base.len()]);
            let before = c.entries()[..i].iter().filter(|f| f.snap == e.snap).count();
            prop_assert_eq!(e.copy, before);
            for &j in c.matching_ends(i) {
                prop_assert!(j > i && c.entries()[j].role() == Role::End);
            }
        }
    }

    #[test]
    fn simplify_reaches_a_fixpoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pb = common::random_problem(&mut r);
        let p = random_pattern(&mut r, &pb, 10);
        let (once, dropped) = simplify(&p);
        let (twice, again) = simplify(&once);
        prop_assert_eq!(&once, &twice);
        prop_assert!(again.is_empty());
        for (i, e) in once.entries().iter().enumerate() {
            match e.role() {
                Role::Start => prop_assert!(!once.matching_ends(i).is_empty()),
                _ => prop_assert!(!once.matching_starts(i).is_empty()),
            }
        }
        for a in dropped {
            prop_assert!(once.snaps().all(|s| s.action != a));
        }
    }

    #[test]
    fn base_pattern_is_deterministic_and_complete(seed in any::<u64>(), family in 0usize..5) {
        let f = fixtures::random_instance(Family::ALL[family], &mut rng(seed));
        let pb = f.problem();
        for ordering in [Ordering::Arpg, Ordering::StartsEnds] {
            let cfg = PatternConfig { ordering, seed: Some(seed) };
            let p = build_base_pattern(&pb, &cfg);
            prop_assert_eq!(&p, &build_base_pattern(&pb, &cfg));
            prop_assert!(p.is_complete(&pb));
            prop_assert_eq!(p.len(), 2 * pb.actions.len());
        }
    }

    #[test]
    fn problem_dump_round_trips(seed in any::<u64>()) {
        let pb = common::random_problem(&mut rng(seed));
        prop_assert_eq!(TemporalNumericProblem::from_dump(&pb.dump()).unwrap(), pb);
    }

    #[test]
    fn increment_flag_follows_own_coefficient(
        c in -3i64..=3,
        own in -2i64..=2,
        other in -2i64..=2,
    ) {
        let mut expr = LinearExpr::constant(rational::int(c));
        expr.add_term(NumVar(0), rational::int(own));
        expr.add_term(NumVar(1), rational::int(other));
        let e = NumericEffect::new(NumVar(0), expr);
        prop_assert_eq!(e.is_linear_increment(), own == 1);
        match e.increment() {
            Some(inc) => prop_assert!(!inc.mentions(NumVar(0))),
            None => prop_assert!(own != 1),
        }
    }

    #[test]
    fn plan_text_round_trips(seed in any::<u64>(), n in 0usize..8) {
        let mut r = rng(seed);
        let pb = common::random_problem(&mut r);
        let actions = (0..n)
            .map(|_| TimedAction {
                start: rational::ratio(r.gen_range(1..100_000), *[1, 3, 8, 1000].get(r.gen_range(0..4)).unwrap()),
                action: ActionId(r.gen_range(0..pb.actions.len())),
                duration: rational::ratio(r.gen_range(1..5_000), 1000),
            })
            .collect();
        let plan = TimedPlan::new(actions);
        let text = plan.display(&pb).to_string();
        prop_assert_eq!(TimedPlan::parse(&text, &pb).unwrap(), plan);
    }
}
