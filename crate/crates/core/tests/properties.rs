//! Algebraic and structural properties, checked on random inputs.
mod common;

use std::collections::BTreeMap;

use horef_bmc::checker::{emit, translate_config, CheckMode, CheckOptions};
use horef_bmc::formula::Q;
use horef_bmc::interp::{eval, NameGen};
use horef_bmc::parser::{load, print_config};
use horef_bmc::pointsto::{initial_pt, pts_union, translate_opt, PtsSet};
use horef_bmc::syntax::{Bound, Config, Meth, Type, Value};
use horef_bmc::translate::{build_initial, reachability_q, translate, with_big_stack, TranslateError, TranslateOptions};
use proptest::prelude::*;

fn program(seed: u64) -> Config {
    common::generated(seed, 1, 4).pop().unwrap().1
}

fn names() -> impl Strategy<Value = PtsSet> {
    prop::collection::btree_set(0u8..6, 0..4).prop_map(|s| {
        s.into_iter().fold(PtsSet::empty(), |acc, i| {
            pts_union(&acc, &PtsSet::single(Meth::new(format!("m{i}"), Type::arrow(Type::Int, Type::Int)))).unwrap()
        })
    })
}

fn pts() -> impl Strategy<Value = PtsSet> {
    prop_oneof![names(), (names(), names()).prop_map(|(a, b)| PtsSet::pair(a, b))]
}

fn q() -> impl Strategy<Value = Q> {
    prop_oneof![Just(Q::Zero), Just(Q::Nil), Just(Q::Fail), Just(Q::Both)]
}

fn small_budget() -> TranslateOptions {
    TranslateOptions { max_clauses: Some(20_000), ..TranslateOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn union_is_a_semilattice(a in pts(), b in pts(), c in pts()) {
        if let (Ok(ab), Ok(ba)) = (pts_union(&a, &b), pts_union(&b, &a)) {
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(pts_union(&ab, &ab).unwrap(), ab.clone());
            if let (Ok(l), Ok(bc)) = (pts_union(&ab, &c), pts_union(&b, &c)) {
                prop_assert_eq!(l, pts_union(&a, &bc).unwrap());
            }
        }
        prop_assert_eq!(pts_union(&a, &PtsSet::empty()).unwrap(), a.clone());
        prop_assert_eq!(pts_union(&PtsSet::empty(), &a).unwrap(), a);
    }

    #[test]
    fn q_join_is_a_semilattice(a in q(), b in q(), c in q()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!(a + a, a);
        prop_assert!(a.le(a + b));
        prop_assert_eq!(a.le(b), a + b == b);
    }

    #[test]
    fn printed_programs_behave_the_same(seed in any::<u64>(), n in -4i64..=4) {
        let c = program(seed).with_bound(3);
        let again = load(&print_config(&c), Bound::k(3)).unwrap();
        let run = |c: &Config| {
            let sigma: BTreeMap<_, _> = [(c.inputs[0].clone(), Value::Int(n))].into();
            let closed = c.close(&sigma);
            with_big_stack(|| eval(&closed, &mut NameGen::new(0))).unwrap().answer.to_string()
        };
        prop_assert_eq!(run(&c), run(&again));
    }

    #[test]
    fn synthesised_q_below_reachability(seed in any::<u64>(), k in 0u32..4) {
        let c = program(seed).with_bound(k);
        let reach = reachability_q(&c.term, &c.repo);
        for opt in [false, true] {
            match translate_config(&c, opt, &small_budget()) {
                Ok(r) => prop_assert!(r.q.le(reach), "{:?} not below {:?}", r.q, reach),
                Err(TranslateError::TooLarge(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn repository_and_preconditions_preserved(seed in any::<u64>(), k in 0u32..4) {
        let c = program(seed).with_bound(k);
        for opt in [false, true] {
            let out = with_big_stack(|| {
                let sc = build_initial(&c)?;
                let t = small_budget();
                let r = if opt { translate_opt(&sc, initial_pt(&sc, &c.store), &t).map(|x| x.0) } else { translate(&sc, &t) };
                r.map(|r| (sc, r))
            });
            let (sc, res) = match out {
                Ok(x) => x,
                Err(TranslateError::TooLarge(_)) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert!(sc.repo.iter().zip(res.repo.iter()).all(|(a, b)| a == b));
            prop_assert!(res.repo.len() >= sc.repo.len());
            prop_assert_eq!(&res.phi[..sc.phi.len()], &sc.phi[..]);
        }
    }

    #[test]
    fn points_to_never_adds_branches(seed in any::<u64>(), k in 0u32..4) {
        let c = program(seed).with_bound(k);
        let opt = translate_config(&c, true, &TranslateOptions::default()).unwrap();
        if let Ok(base) = translate_config(&c, false, &small_budget()) {
            prop_assert!(opt.stats.branches <= base.stats.branches);
            prop_assert!(opt.repo.len() <= base.repo.len());
        }
    }

    #[test]
    fn emission_is_deterministic(seed in any::<u64>(), k in 0u32..4, opt in any::<bool>()) {
        let c = program(seed).with_bound(k);
        let o = CheckOptions { opt, translate: small_budget(), ..CheckOptions::default() };
        match (emit(&c, &CheckMode::FailReach, &o), emit(&c, &CheckMode::FailReach, &o)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "one run failed"),
        }
    }
}

#[test]
fn corpus_emission_is_stable() {
    // Same bytes from separate translations of separately parsed sources.
    for (name, c) in common::corpus(2) {
        let src = std::fs::read_to_string(common::corpus_dir().join(format!("{name}.bmc"))).unwrap();
        let again = load(&src, Bound::k(2)).unwrap();
        let o = CheckOptions::default();
        assert_eq!(emit(&c, &CheckMode::NilReach, &o).unwrap(), emit(&again, &CheckMode::NilReach, &o).unwrap(), "{name}");
    }
}
