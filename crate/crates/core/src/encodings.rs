//! Ready-made signatures and equation systems for the standard examples:
//! finite multisets, ω-branching trees up to permutation of subtrees, and a
//! theory of countable ordinal notations.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::FiniteAlgebra;
use crate::equations::{mk_sys_eq, Equation, EquationSystem};
use crate::terms::{Arity, Branches, Signature, Term, TermError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("table {0:?} is not a bijection on its support")]
    NonBijective(Vec<usize>),
    #[error("table {table:?} moves indices at or beyond probe depth {probe}")]
    ProbeTooSmall { table: Vec<usize>, probe: usize },
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A decision procedure for equality of closed terms in a shipped theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Oracle {
    /// Equal iff every operator occurs equally often.
    OperatorMultiset,
}

impl Oracle {
    pub fn equal<V: Ord>(&self, t: &Term<V>, u: &Term<V>) -> bool {
        match self {
            Oracle::OperatorMultiset => op_counts(t) == op_counts(u),
        }
    }
}

fn op_counts<V: Ord>(t: &Term<V>) -> BTreeMap<String, usize> {
    fn go<V>(t: &Term<V>, acc: &mut BTreeMap<String, usize>) {
        if let Term::Node(n) = t {
            *acc.entry(n.op.clone()).or_default() += 1;
            n.branches.values().for_each(|b| go(b, acc));
        }
    }
    let mut acc = BTreeMap::new();
    go(t, &mut acc);
    acc
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodedInstance {
    pub name: String,
    pub signature: Signature,
    pub equations: EquationSystem,
    #[serde(skip)]
    pub oracle: Option<Oracle>,
    #[serde(skip)]
    pub notes: String,
}

/// Finite multisets over `xs`: lists `nil`, `cons(x)` modulo swapping
/// adjacent elements.
pub fn bag_of(xs: &[&str]) -> EncodedInstance {
    let mut ops = vec![("nil".to_string(), Arity::Finite(0))];
    ops.extend(xs.iter().map(|x| (format!("cons({x})"), Arity::Finite(1))));
    let signature = Signature::from_pairs(ops).expect("element names are distinct");
    let mut eqs = Vec::new();
    for x in xs {
        for y in xs {
            let cons = |a: &str, t| Term::app(format!("cons({a})"), vec![t]);
            eqs.push(Equation {
                name: format!("swap({x},{y})"),
                vars: 1,
                lhs: cons(x, cons(y, Term::Var(0))),
                rhs: cons(y, cons(x, Term::Var(0))),
            });
        }
    }
    let equations = mk_sys_eq(&signature, eqs, 0).expect("well-formed by construction");
    EncodedInstance {
        name: "bag".into(),
        signature,
        equations,
        oracle: Some(Oracle::OperatorMultiset),
        notes: "lists modulo adjacent transpositions".into(),
    }
}

/// The closed list term `x1 :: x2 :: … :: []`.
pub fn bag_term(xs: &[&str]) -> Term<String> {
    xs.iter().rev().fold(Term::constant("nil"), |acc, x| {
        Term::app(format!("cons({x})"), vec![acc])
    })
}

/// The variable table `i ↦ v_{f(i)}` for `i < probe` with default `v_probe`.
fn permuted_vars(f: &[usize], probe: usize) -> Branches<Term<usize>> {
    let at = |i: usize| f.get(i).copied().unwrap_or(i);
    Branches::omega((0..probe).map(|i| (i, Term::Var(at(i)))), Term::Var(probe))
}

/// Renders a permutation table as `[p0,p1,…]`.
pub fn perm_name(p: &[usize]) -> String {
    let parts: Vec<String> = p.iter().map(|i| i.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Checks that `p` is a bijection on `0..p.len()` fitting below `probe`.
pub fn check_perm(p: &[usize], probe: usize) -> Result<(), EncodingError> {
    let mut seen = vec![false; p.len()];
    for &i in p {
        if i >= p.len() || std::mem::replace(&mut seen[i], true) {
            return Err(EncodingError::NonBijective(p.to_vec()));
        }
    }
    let moved = p.iter().enumerate().filter(|(i, v)| i != *v).map(|(i, _)| i).max();
    if moved.is_some_and(|i| i >= probe) {
        return Err(EncodingError::ProbeTooSmall {
            table: p.to_vec(),
            probe,
        });
    }
    Ok(())
}

/// ω-branching trees labelled by `xs`, where `node x g = node x (g ∘ f)`
/// for every listed permutation `f`. Permutations fix every index beyond
/// their table.
pub fn omega_tree_of(
    xs: &[&str],
    probe: usize,
    perms: &[Vec<usize>],
) -> Result<EncodedInstance, EncodingError> {
    for p in perms {
        check_perm(p, probe)?;
    }
    let mut ops = vec![("leaf".to_string(), Arity::Finite(0))];
    ops.extend(xs.iter().map(|x| (format!("node({x})"), Arity::Omega)));
    let signature = Signature::from_pairs(ops)?;
    let identity: Vec<usize> = Vec::new();
    let mut eqs = Vec::new();
    for x in xs {
        for p in perms {
            eqs.push(Equation {
                name: format!("perm({x},{})", perm_name(p)),
                vars: probe + 1,
                lhs: Term::node(format!("node({x})"), permuted_vars(&identity, probe)),
                rhs: Term::node(format!("node({x})"), permuted_vars(p, probe)),
            });
        }
    }
    let equations = mk_sys_eq(&signature, eqs, probe).map_err(|e| match e {
        crate::equations::EqError::Invalid { source, .. } => EncodingError::Term(source),
        other => EncodingError::Term(TermError::MalformedAlgebra(other.to_string())),
    })?;
    Ok(EncodedInstance {
        name: "omega-tree".into(),
        signature,
        equations,
        oracle: None,
        notes: format!("branch maps compared at probe depth {probe}"),
    })
}

/// Countable ordinal notations: `zero`, `succ` and an ω-ary `sup`, with a
/// small set of demonstration equations that hold for ordinals. The
/// equations are illustrative; no decision procedure is shipped.
pub fn ls_ordinal_instance() -> EncodedInstance {
    let signature = Signature::from_pairs([
        ("zero", Arity::Finite(0)),
        ("succ", Arity::Finite(1)),
        ("sup", Arity::Omega),
    ])
    .expect("distinct names");
    let v = Term::Var;
    let sup = |table: Vec<(usize, Term<usize>)>, d: Term<usize>| Term::node("sup", Branches::omega(table, d));
    let succ = |t: Term<usize>| Term::app("succ", vec![t]);
    let eqs = vec![
        Equation {
            name: "perm".into(),
            vars: 3,
            lhs: sup(vec![(0, v(0)), (1, v(1))], v(2)),
            rhs: sup(vec![(0, v(1)), (1, v(0))], v(2)),
        },
        Equation {
            name: "idem".into(),
            vars: 1,
            lhs: sup(vec![], v(0)),
            rhs: v(0),
        },
        Equation {
            name: "dup".into(),
            vars: 2,
            lhs: sup(vec![(0, v(0)), (1, v(0))], v(1)),
            rhs: sup(vec![(0, v(0))], v(1)),
        },
        Equation {
            name: "zunit".into(),
            vars: 1,
            lhs: sup(vec![(0, Term::constant("zero"))], v(0)),
            rhs: v(0),
        },
        Equation {
            name: "sbound".into(),
            vars: 1,
            lhs: sup(vec![(0, succ(v(0)))], v(0)),
            rhs: succ(v(0)),
        },
    ];
    let equations = mk_sys_eq(&signature, eqs, 2).expect("well-formed by construction");
    EncodedInstance {
        name: "ordinal".into(),
        signature,
        equations,
        oracle: None,
        notes: "demonstration equations only".into(),
    }
}

/// The algebra of heights truncated at `cap`: nullary operators give 0,
/// every other node one more than its highest observed branch.
pub fn height_algebra(
    sig: &Signature,
    cap: usize,
    probe: usize,
) -> Result<FiniteAlgebra, TermError> {
    let carrier = (0..=cap).map(|i| i.to_string()).collect();
    FiniteAlgebra::from_fn(sig, carrier, probe, |_, args| {
        args.iter().map(|a| a + 1).max().unwrap_or(0).min(cap)
    })
}

/// Parity of the number of non-nullary nodes along a list.
pub fn parity_algebra(sig: &Signature) -> Result<FiniteAlgebra, TermError> {
    FiniteAlgebra::from_fn(sig, vec!["even".into(), "odd".into()], 0, |_, args| {
        args.first().map_or(0, |a| 1 - a)
    })
}

/// The one-point algebra.
pub fn terminal_algebra(sig: &Signature, probe: usize) -> Result<FiniteAlgebra, TermError> {
    FiniteAlgebra::from_fn(sig, vec!["*".into()], probe, |_, _| 0)
}
