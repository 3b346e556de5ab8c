//! Equation systems over a signature, satisfaction in algebras and the
//! dependent lift of evaluation.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{eval_alg, Algebra, FiniteAlgebra};
use crate::terms::{map_t, Branches, SNode, Signature, Term, TermError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EqError {
    #[error("duplicate equation name `{0}`")]
    DuplicateName(String),
    #[error("equation `{equation}`: {source}")]
    Invalid {
        equation: String,
        #[source]
        source: TermError,
    },
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("{needed} environments exceed the budget of {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("value {value} does not lie in the fiber over {index}")]
    FiberMismatch { index: String, value: String },
}

/// One equation `l e = r e` over the variables `0..vars`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equation {
    pub name: String,
    pub vars: usize,
    pub lhs: Term<usize>,
    pub rhs: Term<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Equation {
    pub fn side(&self, side: Side) -> &Term<usize> {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    /// `T′ρ` applied to one side.
    pub fn instantiate<T: Clone + PartialEq>(&self, side: Side, rho: &[T]) -> Term<T> {
        map_t(&mut |v: &usize| rho[*v].clone(), self.side(side))
    }
}

/// A validated system of equations. `probe` is the truncation depth used
/// for ω-indexed variable sets and ω-ary branch maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSystem {
    pub eqs: Vec<Equation>,
    #[serde(default)]
    pub probe: usize,
}

impl EquationSystem {
    pub fn empty(probe: usize) -> Self {
        EquationSystem {
            eqs: Vec::new(),
            probe,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Equation> {
        self.eqs.iter().find(|e| e.name == name)
    }

    /// Equations in the canonical enumeration order (by name).
    pub fn ordered(&self) -> Vec<&Equation> {
        let mut v: Vec<&Equation> = self.eqs.iter().collect();
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }

    /// Revalidates the system against a signature.
    pub fn validate(&self, sig: &Signature) -> Result<(), EqError> {
        mk_sys_eq(sig, self.eqs.clone(), self.probe).map(|_| ())
    }
}

/// Validates raw equations against `sig`.
pub fn mk_sys_eq(
    sig: &Signature,
    raw: Vec<Equation>,
    probe: usize,
) -> Result<EquationSystem, EqError> {
    let mut names = HashSet::new();
    for e in &raw {
        if !names.insert(e.name.as_str()) {
            return Err(EqError::DuplicateName(e.name.clone()));
        }
        for t in [&e.lhs, &e.rhs] {
            let invalid = |source| EqError::Invalid {
                equation: e.name.clone(),
                source,
            };
            sig.check_term(t).map_err(invalid)?;
            if let Some(v) = t.leaves().into_iter().find(|&&v| v >= e.vars) {
                return Err(invalid(TermError::UnboundVariable(v.to_string())));
            }
        }
    }
    Ok(EquationSystem { eqs: raw, probe })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum SatVerdict<C = usize> {
    Satisfied,
    Violated {
        equation: String,
        env: Vec<C>,
        lhs: C,
        rhs: C,
    },
}

/// The outcome of a satisfaction check. A `Satisfied` report doubles as a
/// certificate for the algebra and system it was computed from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SatReport {
    #[serde(flatten)]
    pub verdict: SatVerdict,
    #[serde(skip)]
    algebra: FiniteAlgebra,
    #[serde(skip)]
    system: EquationSystem,
}

impl SatReport {
    pub fn is_satisfied(&self) -> bool {
        self.verdict == SatVerdict::Satisfied
    }

    /// Whether this report certifies `alg` against `sys`.
    pub fn certifies(&self, alg: &FiniteAlgebra, sys: &EquationSystem) -> bool {
        self.is_satisfied() && &self.algebra == alg && &self.system == sys
    }
}

/// Order in which environments are visited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnvOrder {
    /// Lexicographic, variable 0 most significant, carrier in order.
    #[default]
    Lexicographic,
    /// Last variable most significant, carrier reversed.
    Reversed,
}

/// Default number of environments a satisfaction check may visit.
pub const DEFAULT_ENV_BUDGET: usize = 10_000_000;

pub fn sat_check(
    alg: &FiniteAlgebra,
    sys: &EquationSystem,
    budget: usize,
) -> Result<SatReport, EqError> {
    sat_check_ordered(alg, sys, budget, EnvOrder::Lexicographic)
}

pub fn sat_check_ordered(
    alg: &FiniteAlgebra,
    sys: &EquationSystem,
    budget: usize,
    order: EnvOrder,
) -> Result<SatReport, EqError> {
    let carrier: Vec<usize> = (0..alg.size()).collect();
    let verdict = sat_check_in(alg, &carrier, sys, budget, order)?;
    Ok(SatReport {
        verdict,
        algebra: alg.clone(),
        system: sys.clone(),
    })
}

/// Number of environments a check over a carrier of size `m` visits, or
/// `None` on overflow.
pub fn env_count(sys: &EquationSystem, m: usize) -> Option<usize> {
    sys.eqs.iter().try_fold(0usize, |acc, e| {
        acc.checked_add(m.checked_pow(u32::try_from(e.vars).ok()?)?)
    })
}

/// Satisfaction in any algebra whose relevant carrier is listed explicitly.
pub fn sat_check_in<A: Algebra>(
    alg: &A,
    carrier: &[A::Carrier],
    sys: &EquationSystem,
    budget: usize,
    order: EnvOrder,
) -> Result<SatVerdict<A::Carrier>, EqError> {
    let m = carrier.len();
    match env_count(sys, m) {
        Some(n) if n <= budget => {}
        needed => {
            return Err(EqError::BudgetExceeded {
                needed: needed.unwrap_or(usize::MAX),
                budget,
            })
        }
    }
    for e in sys.ordered() {
        let mut found = None;
        for_each_env(e.vars, m, order, |idx| {
            let env: Vec<A::Carrier> = idx.iter().map(|&i| carrier[i].clone()).collect();
            let l = eval_alg(&e.lhs, &mut |v: &usize| env.get(*v).cloned(), alg);
            let r = eval_alg(&e.rhs, &mut |v: &usize| env.get(*v).cloned(), alg);
            match (l, r) {
                (Ok(l), Ok(r)) if l == r => true,
                (Ok(l), Ok(r)) => {
                    found = Some(Ok(SatVerdict::Violated {
                        equation: e.name.clone(),
                        env,
                        lhs: l,
                        rhs: r,
                    }));
                    false
                }
                (Err(err), _) | (_, Err(err)) => {
                    found = Some(Err(EqError::Term(err)));
                    false
                }
            }
        });
        if let Some(res) = found {
            return res;
        }
    }
    Ok(SatVerdict::Satisfied)
}

/// Calls `visit` on every tuple in `{0..m}^n` until it returns `false`.
pub fn for_each_env(n: usize, m: usize, order: EnvOrder, mut visit: impl FnMut(&[usize]) -> bool) {
    if n > 0 && m == 0 {
        return;
    }
    let mut digits = vec![0usize; n];
    loop {
        let env: Vec<usize> = match order {
            EnvOrder::Lexicographic => digits.clone(),
            EnvOrder::Reversed => digits.iter().rev().map(|&d| m - 1 - d).collect(),
        };
        if !visit(&env) {
            return;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < m {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Dependent evaluation: computes the index `t >>= (fst ∘ f)` together with
/// a value in the fiber over it, using `step` at every node.
///
/// `fiber` lists the admissible values over an index; every value produced
/// (including those supplied by `f`) is checked against it.
pub fn lift<X, A, V>(
    alg: &A,
    fiber: &impl Fn(&A::Carrier) -> Vec<V>,
    step: &impl Fn(&SNode<A::Carrier>, &Branches<V>) -> V,
    f: &mut impl FnMut(&X) -> Option<(A::Carrier, V)>,
    t: &Term<X>,
) -> Result<(A::Carrier, V), EqError>
where
    X: fmt::Debug,
    A: Algebra,
    V: Clone + PartialEq + fmt::Debug,
{
    let (index, value) = match t {
        Term::Var(x) => f(x).ok_or_else(|| TermError::UnboundVariable(format!("{x:?}")))?,
        Term::Node(n) => {
            let pairs = n.branches.try_map(|b| lift(alg, fiber, step, f, b))?;
            let indices = SNode::new(n.op.clone(), pairs.map(|p| p.0.clone()));
            let values = pairs.map(|p| p.1.clone());
            let value = step(&indices, &values);
            (alg.apply(&indices)?, value)
        }
    };
    if !fiber(&index).contains(&value) {
        return Err(EqError::FiberMismatch {
            index: format!("{index:?}"),
            value: format!("{value:?}"),
        });
    }
    Ok((index, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FnAlgebra;
    use crate::terms::Arity;

    fn sig() -> Signature {
        Signature::from_pairs([
            ("nil", Arity::Finite(0)),
            ("cons(a)", Arity::Finite(1)),
            ("cons(b)", Arity::Finite(1)),
        ])
        .unwrap()
    }

    fn swap() -> Equation {
        Equation {
            name: "swap(a,b)".into(),
            vars: 1,
            lhs: Term::app("cons(a)", vec![Term::app("cons(b)", vec![Term::Var(0)])]),
            rhs: Term::app("cons(b)", vec![Term::app("cons(a)", vec![Term::Var(0)])]),
        }
    }

    #[test]
    fn mk_sys_eq_errors() {
        let s = sig();
        assert!(mk_sys_eq(&s, vec![swap()], 0).is_ok());
        let mut bad = swap();
        bad.vars = 0;
        assert!(matches!(
            mk_sys_eq(&s, vec![bad], 0),
            Err(EqError::Invalid {
                source: TermError::UnboundVariable(_),
                ..
            })
        ));
        assert_eq!(
            mk_sys_eq(&s, vec![swap(), swap()], 0),
            Err(EqError::DuplicateName("swap(a,b)".into()))
        );
        let mut unk = swap();
        unk.rhs = Term::constant("zz");
        assert!(matches!(
            mk_sys_eq(&s, vec![unk], 0),
            Err(EqError::Invalid {
                source: TermError::UnknownOperator(_),
                ..
            })
        ));
    }

    #[test]
    fn sat_check_examples() {
        let s = sig();
        let sys = mk_sys_eq(&s, vec![swap()], 0).unwrap();
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let parity =
            FiniteAlgebra::from_fn(&s, labels(2), 0, |op, a| if op == "nil" { 0 } else { 1 - a[0] })
                .unwrap();
        assert!(sat_check(&parity, &sys, 100).unwrap().is_satisfied());
        let len4 = FiniteAlgebra::from_fn(&s, labels(5), 0, |op, a| {
            if op == "nil" {
                0
            } else {
                (a[0] + 1).min(4)
            }
        })
        .unwrap();
        assert!(sat_check(&len4, &sys, 100).unwrap().is_satisfied());
        let reset = FiniteAlgebra::from_fn(&s, labels(3), 0, |op, a| match op {
            "nil" => 0,
            "cons(a)" => (a[0] + 1).min(2),
            _ => 0,
        })
        .unwrap();
        let report = sat_check(&reset, &sys, 100).unwrap();
        assert_eq!(
            report.verdict,
            SatVerdict::Violated {
                equation: "swap(a,b)".into(),
                env: vec![0],
                lhs: 1,
                rhs: 0
            }
        );
        assert!(matches!(
            sat_check(&reset, &sys, 2),
            Err(EqError::BudgetExceeded { needed: 3, .. })
        ));
    }

    #[test]
    fn env_enumeration_orders() {
        let mut seen = Vec::new();
        for_each_env(2, 2, EnvOrder::Lexicographic, |e| {
            seen.push(e.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let mut n = 0;
        for_each_env(0, 3, EnvOrder::Reversed, |_| {
            n += 1;
            true
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn lift_degenerate_families() {
        let length = FnAlgebra::new(|n: &SNode<u64>| {
            Ok(n.branches.values().next().map_or(0, |x| x + 1))
        });
        let t: Term<usize> = Term::app("cons(a)", vec![Term::app("cons(b)", vec![Term::Var(0)])]);
        let single = |_: &u64| vec![()];
        let (i, v) = lift(&length, &single, &|_, _| (), &mut |_| Some((0, ())), &t).unwrap();
        assert_eq!((i, v), (2, ()));
        let nat = |_: &u64| (0..10u64).collect::<Vec<_>>();
        let (_, v) = lift(&length, &nat, &|_, _| 0, &mut |_| Some((0, 5)), &t).unwrap();
        assert_eq!(v, 0);
        let (_, v) = lift(&length, &nat, &|_, _| 0, &mut |_| Some((0, 5)), &Term::Var(0)).unwrap();
        assert_eq!(v, 5);
        let sized = |i: &u64| vec![*i];
        let size_step = |_: &SNode<u64>, b: &Branches<u64>| b.values().next().map_or(0, |x| x + 1);
        let closed: Term<usize> = Term::app(
            "cons(a)",
            vec![Term::app("cons(b)", vec![Term::constant("nil")])],
        );
        let (i, v) = lift(&length, &sized, &size_step, &mut |_| None, &closed).unwrap();
        assert_eq!((i, v), (2, 2));
        let bad = |_: &SNode<u64>, _: &Branches<u64>| 9;
        assert!(matches!(
            lift(&length, &sized, &bad, &mut |_| None, &closed),
            Err(EqError::FiberMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let sys = mk_sys_eq(&sig(), vec![swap()], 2).unwrap();
        let s = serde_json::to_string(&sys).unwrap();
        assert!(s.ends_with(r#""probe":2}"#));
        let back: EquationSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sys);
    }
}
