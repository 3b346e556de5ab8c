mod common;

use proptest::prelude::*;
use qw_core::algebra::{check_hom, eval_alg, FiniteAlgebra, HomCheck};
use qw_core::encodings::{bag_of, bag_term, height_algebra, parity_algebra, terminal_algebra, Oracle};
use qw_core::engine::{QwConfig, QwState};
use qw_core::equations::{lift, sat_check, sat_check_ordered, EnvOrder, SatVerdict};
use qw_core::terms::{Branches, SNode, Term};

use common::*;

#[test]
fn monad_and_functor_laws_exhaustive() {
    for l in monad_laws().into_iter().chain(functor_laws()).chain([universal_property()]) {
        assert!(l.checked > 0, "{}", l.name);
        assert_eq!(l.failed, 0, "{}", l.name);
    }
}

#[test]
fn identity_is_a_hom_for_builtin_algebras() {
    let b = bag_of(&["a", "b"]);
    for alg in [
        height_algebra(&b.signature, 3, 0).unwrap(),
        parity_algebra(&b.signature).unwrap(),
        terminal_algebra(&b.signature, 0).unwrap(),
    ] {
        assert_eq!(check_hom(|x| x, &alg, &alg, 10_000).unwrap(), HomCheck::Ok);
    }
    let r = ref_algebra();
    assert_eq!(check_hom(|x| x, &r, &r, 10_000).unwrap(), HomCheck::Ok);
}

#[test]
fn constant_family_lift_degenerates_to_eval() {
    let alg = ref_algebra();
    for t in ref_terms(4) {
        let env = |v: &String| usize::from(v == "y") + 1;
        let direct = eval_alg(&t, &mut |v: &String| Some(env(v)), &alg).unwrap();
        let step = |n: &SNode<usize>, _: &Branches<u8>| n.op.len() as u8;
        let fiber = |_: &usize| (0..=255u8).collect::<Vec<_>>();
        let (c, _) = lift(&alg, &fiber, &step, &mut |v: &String| Some((env(v), 1u8)), &t).unwrap();
        assert_eq!(c, direct);
    }
}

fn bag_terms() -> impl Strategy<Value = Term<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b"]), 0..5).prop_map(|xs| bag_term(&xs))
}

fn bag_algebra() -> impl Strategy<Value = FiniteAlgebra> {
    (1usize..4).prop_flat_map(|m| {
        (Just(m), prop::collection::vec(0..m, 1 + 2 * m)).prop_map(|(m, t)| {
            let sig = bag_of(&["a", "b"]).signature;
            FiniteAlgebra::from_fn(&sig, (0..m).map(|i| i.to_string()).collect(), 0, |op, a| match op {
                "nil" => t[0],
                "cons(a)" => t[1 + a[0]],
                _ => t[1 + m + a[0]],
            })
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn oracle_is_a_congruence(t in bag_terms(), u in bag_terms(), v in bag_terms(), x in prop::sample::select(vec!["a", "b"])) {
        let o = Oracle::OperatorMultiset;
        prop_assert!(o.equal(&t, &t));
        prop_assert_eq!(o.equal(&t, &u), o.equal(&u, &t));
        if o.equal(&t, &u) && o.equal(&u, &v) {
            prop_assert!(o.equal(&t, &v));
        }
        if o.equal(&t, &u) {
            let cons = |s: &Term<String>| Term::app(format!("cons({x})"), vec![s.clone()]);
            prop_assert!(o.equal(&cons(&t), &cons(&u)));
        }
    }

    #[test]
    fn sat_verdict_ignores_environment_order(alg in bag_algebra()) {
        let eqs = bag_of(&["a", "b"]).equations;
        let name = |v: SatVerdict| match v {
            SatVerdict::Satisfied => None,
            SatVerdict::Violated { equation, .. } => Some(equation),
        };
        let fwd = sat_check_ordered(&alg, &eqs, 10_000, EnvOrder::Lexicographic).unwrap().verdict;
        let rev = sat_check_ordered(&alg, &eqs, 10_000, EnvOrder::Reversed).unwrap().verdict;
        prop_assert_eq!(name(fwd), name(rev));
    }

    #[test]
    fn engine_agrees_with_oracle_and_is_congruent(t in bag_terms(), u in bag_terms()) {
        let b = bag_of(&["a", "b"]);
        let mut s = QwState::new(b.signature, b.equations, QwConfig::default(), vec![]).unwrap();
        let (ct, cu) = (s.intern_term(&t).unwrap(), s.intern_term(&u).unwrap());
        s.saturate();
        let proved = s.decide_eq(ct, cu).unwrap().is_proved();
        prop_assert_eq!(proved, Oracle::OperatorMultiset.equal(&t, &u));
        if proved {
            let it = s.qw_intro(&SNode::new("cons(a)", Branches::Finite(vec![ct]))).unwrap();
            let iu = s.qw_intro(&SNode::new("cons(a)", Branches::Finite(vec![cu]))).unwrap();
            s.saturate();
            prop_assert!(s.same_class(it, iu));
        }
        prop_assert!(replay_ratio(&s).2);
    }

    #[test]
    fn models_never_separate_proved_terms(alg in bag_algebra(), t in bag_terms(), u in bag_terms()) {
        let eqs = bag_of(&["a", "b"]).equations;
        if sat_check(&alg, &eqs, 10_000).unwrap().is_satisfied() && Oracle::OperatorMultiset.equal(&t, &u) {
            let ev = |s: &Term<String>| qw_core::algebra::eval_closed(s, &alg).unwrap();
            prop_assert_eq!(ev(&t), ev(&u));
        }
    }
}

#[test]
fn stage_monotonicity() {
    let b = bag_of(&["a", "b"]);
    let (t, u) = (bag_term(&["a", "b", "a"]), bag_term(&["b", "a", "a"]));
    let mut first = None;
    for cutoff in 1..8 {
        let mut s = QwState::new(b.signature.clone(), b.equations.clone(), QwConfig::default(), vec![]).unwrap();
        let (x, y) = (s.intern_term(&t).unwrap(), s.intern_term(&u).unwrap());
        s.saturate_with_cutoff(cutoff);
        let proved = s.derivation(x, y).is_some();
        if proved && first.is_none() {
            first = Some(cutoff);
        }
        if let Some(f) = first {
            assert!(proved, "proved at cutoff {f} but not at {cutoff}");
        }
    }
    assert!(first.is_some());
}

mod schema_fuzz {
    use super::common::fuzz::*;
    use proptest::prelude::*;
    use qw_core::schema::{check_positivity, classify, elaborate, parse_decl, ElabOptions, SchemaError};

    proptest! {
        #[test]
        fn conforming_telescopes_pass(shape in shapes()) {
            let d = parse_decl(&render(&shape, "")).unwrap();
            prop_assert!(check_positivity(&d).is_ok());
            prop_assert!(!classify(&d).conditional);
        }

        #[test]
        fn negative_domains_are_rejected((shape, j) in mutated()) {
            let d = parse_decl(&render(&shape, "")).unwrap();
            match check_positivity(&d) {
                Err(SchemaError::Positivity { constructor, binder, .. }) => {
                    prop_assert_eq!(constructor, "c0");
                    prop_assert_eq!(binder, Some(format!("b{j}")));
                }
                other => prop_assert!(false, "{:?}", other),
            }
        }

        #[test]
        fn conditions_are_flagged(shape in shapes()) {
            let d = parse_decl(&render(&shape, CONDITION)).unwrap();
            prop_assert!(classify(&d).conditional);
            prop_assert_eq!(
                elaborate(&d, ElabOptions::default()).unwrap_err(),
                SchemaError::ConditionalUnsupported { constructor: "eqc".into() }
            );
        }
    }
}
