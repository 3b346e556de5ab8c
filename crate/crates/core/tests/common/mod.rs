#![allow(dead_code)]

use qw_core::algebra::{eval_alg, FiniteAlgebra, TermAlgebra};
use qw_core::engine::replay::replay;
use qw_core::engine::QwState;
use qw_core::terms::{map_s, map_t, subst, Arity, Signature, Term, TermEnumerator};

/// A binary `f` and a unary `g`, over variables `x` and `y`.
pub fn ref_sig() -> Signature {
    Signature::from_pairs([("f", Arity::Finite(2)), ("g", Arity::Finite(1))]).unwrap()
}

pub fn ref_vars() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

pub fn ref_terms(n: usize) -> Vec<Term<String>> {
    TermEnumerator::new(&ref_sig(), ref_vars(), 0).up_to(n)
}

/// Every assignment of the two variables to terms of size at most 2.
pub fn ref_substitutions() -> Vec<[Term<String>; 2]> {
    let small = ref_terms(2);
    let mut out = Vec::new();
    for a in &small {
        for b in &small {
            out.push([a.clone(), b.clone()]);
        }
    }
    out
}

fn apply(rho: &[Term<String>; 2], t: &Term<String>) -> Term<String> {
    subst(t, &mut |v: &String| Some(rho[usize::from(v == "y")].clone())).unwrap()
}

/// Per law: (cases checked, failures).
pub struct LawCounts {
    pub name: &'static str,
    pub checked: usize,
    pub failed: usize,
}

fn law(name: &'static str, cases: impl Iterator<Item = bool>) -> LawCounts {
    let (mut checked, mut failed) = (0, 0);
    for ok in cases {
        checked += 1;
        failed += usize::from(!ok);
    }
    LawCounts { name, checked, failed }
}

pub fn monad_laws() -> Vec<LawCounts> {
    let terms = ref_terms(4);
    let rhos = ref_substitutions();
    let vars = ref_vars();
    vec![
        law(
            "left unit",
            rhos.iter().flat_map(|rho| {
                vars.iter().enumerate().map(move |(i, x)| apply(rho, &Term::Var(x.clone())) == rho[i])
            }),
        ),
        law(
            "right unit",
            terms.iter().map(|t| subst(t, &mut |v: &String| Some(Term::Var(v.clone()))).unwrap() == *t),
        ),
        law("associativity", {
            let mut cases = Vec::new();
            for t in &terms {
                for r1 in &rhos {
                    for r2 in &rhos {
                        let composed = [apply(r2, &r1[0]), apply(r2, &r1[1])];
                        cases.push(apply(r2, &apply(r1, t)) == apply(&composed, t));
                    }
                }
            }
            cases.into_iter()
        }),
    ]
}

pub fn functor_laws() -> Vec<LawCounts> {
    let terms = ref_terms(4);
    let swap = |v: &String| if v == "x" { "y".to_string() } else { "x".to_string() };
    let len = |v: &String| v.len() + usize::from(v == "y");
    let nodes: Vec<_> = terms
        .iter()
        .filter_map(|t| match t {
            Term::Node(n) => Some(map_s(|b: &Term<String>| b.to_string(), n)),
            Term::Var(_) => None,
        })
        .collect();
    vec![
        law("mapS identity", nodes.iter().map(|n| map_s(|b: &String| b.clone(), n) == *n)),
        law(
            "mapS composition",
            nodes.iter().map(|n| map_s(|b: &String| len(&swap(b)), n) == map_s(len, &map_s(swap, n))),
        ),
        law("mapT identity", terms.iter().map(|t| map_t(&mut |v: &String| v.clone(), t) == *t)),
        law(
            "mapT composition",
            terms.iter().map(|t| {
                map_t(&mut |v: &String| len(&swap(v)), t) == map_t(&mut { len }, &map_t(&mut { swap }, t))
            }),
        ),
    ]
}

/// A three-element algebra for the reference signature.
pub fn ref_algebra() -> FiniteAlgebra {
    FiniteAlgebra::from_fn(&ref_sig(), vec!["0".into(), "1".into(), "2".into()], 0, |op, a| match op {
        "f" => (a[0] * 2 + a[1]) % 3,
        _ => (a[0] + 1) % 3,
    })
    .unwrap()
}

/// Evaluating through the free algebra and then into `alg` agrees with
/// evaluating directly.
pub fn universal_property() -> LawCounts {
    let alg = ref_algebra();
    let terms = ref_terms(4);
    let rhos = ref_substitutions();
    let mut cases = Vec::new();
    for t in &terms {
        for rho in &rhos {
            for env in 0..3 {
                let value = |v: &String| Some(if v == "x" { env } else { (env + 1) % 3 });
                let free = eval_alg(t, &mut |v: &String| Some(rho[usize::from(v == "y")].clone()), &TermAlgebra::of::<String>()).unwrap();
                let via = eval_alg(&free, &mut { value }, &alg).unwrap();
                let direct = eval_alg(
                    t,
                    &mut |v: &String| Some(eval_alg(&rho[usize::from(v == "y")], &mut { value }, &alg).unwrap()),
                    &alg,
                )
                .unwrap();
                cases.push(via == direct);
            }
        }
    }
    law("free algebra", cases.into_iter())
}

/// Fraction of merges the independent replay validates.
pub fn replay_ratio(state: &QwState) -> (usize, usize, bool) {
    let r = replay(state);
    (r.validated, r.merges, r.is_valid())
}

pub mod fuzz {
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;

    const DOMAINS: [&str; 5] = ["X", "N", "X -> N", "Bool -> N", "Bool"];
    const BAD_DOMAINS: [&str; 3] = ["N -> X", "N -> N", "(X -> N) -> Bool"];

    /// Constructors as lists of binder domains; the first has at least one.
    pub type Shape = Vec<Vec<&'static str>>;

    pub fn shapes() -> impl Strategy<Value = Shape> {
        let binders = |lo| prop::collection::vec(prop::sample::select(DOMAINS.to_vec()), lo..4);
        (binders(1), prop::collection::vec(binders(0), 0..3)).prop_map(|(first, rest)| {
            let mut s = vec![first];
            s.extend(rest);
            s
        })
    }

    pub fn render(shape: &Shape, extra: &str) -> String {
        let mut src = String::from("data N : Set where\n  base : N\n");
        for (i, binders) in shape.iter().enumerate() {
            src.push_str(&format!("  c{i} :"));
            for (j, d) in binders.iter().enumerate() {
                src.push_str(&format!(" (b{j} : {d})"));
            }
            src.push_str(if binders.is_empty() { " N\n" } else { " -> N\n" });
        }
        src.push_str(extra);
        src.push_str("with X = {a, b}\nwith Bool = {t, f}\n");
        src
    }

    /// A conforming shape with one binder domain replaced by a negative one.
    pub fn mutated() -> impl Strategy<Value = (Shape, usize)> {
        (shapes(), any::<prop::sample::Index>(), 0..BAD_DOMAINS.len()).prop_map(|(mut s, at, bad)| {
            let j = at.index(s[0].len());
            s[0][j] = BAD_DOMAINS[bad];
            (s, j)
        })
    }

    pub const CONDITION: &str = "  eqc : (y z : N) (h : y == z) -> base == base\n";

    pub fn sample<S: Strategy>(s: S, n: usize) -> Vec<S::Value> {
        let mut runner = TestRunner::deterministic();
        (0..n).map(|_| s.new_tree(&mut runner).unwrap().current()).collect()
    }
}
