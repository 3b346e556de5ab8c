//! Algebras for the signature functor, evaluation of terms and homomorphism
//! checking.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::terms::{Arity, Branches, SNode, Signature, Term, TermError};

/// An `S`-algebra: a carrier with a structure map `S X → X`.
pub trait Algebra {
    type Carrier: Clone + PartialEq + fmt::Debug;

    fn apply(&self, node: &SNode<Self::Carrier>) -> Result<Self::Carrier, TermError>;
}

/// `t >>= f` computed in an arbitrary algebra.
pub fn eval_alg<X: fmt::Debug, A: Algebra + ?Sized>(
    t: &Term<X>,
    f: &mut impl FnMut(&X) -> Option<A::Carrier>,
    alg: &A,
) -> Result<A::Carrier, TermError> {
    match t {
        Term::Var(x) => f(x).ok_or_else(|| TermError::UnboundVariable(format!("{x:?}"))),
        Term::Node(n) => {
            let branches = n.branches.try_map(|b| eval_alg(b, f, alg))?;
            alg.apply(&SNode::new(n.op.clone(), branches))
        }
    }
}

/// Evaluates a closed term (one without variables).
pub fn eval_closed<V: fmt::Debug, A: Algebra + ?Sized>(
    t: &Term<V>,
    alg: &A,
) -> Result<A::Carrier, TermError> {
    eval_alg(t, &mut |_| None, alg)
}

/// The free algebra `(T Y, σ)`.
pub struct TermAlgebra;

impl TermAlgebra {
    pub fn of<Y>() -> TermAlgebraOf<Y> {
        TermAlgebraOf(std::marker::PhantomData)
    }
}

pub struct TermAlgebraOf<Y>(std::marker::PhantomData<Y>);

impl<Y: Clone + PartialEq + fmt::Debug> Algebra for TermAlgebraOf<Y> {
    type Carrier = Term<Y>;

    fn apply(&self, node: &SNode<Term<Y>>) -> Result<Term<Y>, TermError> {
        Ok(Term::Node(node.clone()))
    }
}

/// An algebra given by a closure, for carriers that are not finite tables
/// (for instance the naturals).
pub struct FnAlgebra<C, F> {
    f: F,
    _carrier: std::marker::PhantomData<C>,
}

impl<C, F> FnAlgebra<C, F>
where
    F: Fn(&SNode<C>) -> Result<C, TermError>,
{
    pub fn new(f: F) -> Self {
        FnAlgebra {
            f,
            _carrier: std::marker::PhantomData,
        }
    }
}

impl<C: Clone + PartialEq + fmt::Debug, F> Algebra for FnAlgebra<C, F>
where
    F: Fn(&SNode<C>) -> Result<C, TermError>,
{
    type Carrier = C;

    fn apply(&self, node: &SNode<C>) -> Result<C, TermError> {
        (self.f)(node)
    }
}

/// One operator's interpretation as a lookup table.
///
/// The table is indexed by the probe view of a node's branches read as a
/// base-`m` numeral, most significant branch first (`m` the carrier size).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTable {
    pub name: String,
    pub arity: Arity,
    pub table: Vec<usize>,
}

/// An algebra on a finite enumerated carrier `{0, .., m-1}`.
///
/// ω-ary operators see only branch indices below the probe depth together
/// with the default branch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FiniteAlgebraRepr")]
pub struct FiniteAlgebra {
    pub carrier: Vec<String>,
    pub probe: usize,
    pub ops: Vec<OpTable>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteAlgebraRepr {
    carrier: Vec<String>,
    #[serde(default)]
    probe: usize,
    ops: Vec<OpTable>,
}

impl TryFrom<FiniteAlgebraRepr> for FiniteAlgebra {
    type Error = TermError;

    fn try_from(r: FiniteAlgebraRepr) -> Result<Self, TermError> {
        let alg = FiniteAlgebra {
            carrier: r.carrier,
            probe: r.probe,
            ops: r.ops,
        };
        alg.validate()?;
        Ok(alg)
    }
}

/// Number of table rows needed for an operator, or `None` on overflow.
pub fn table_len(carrier: usize, width: usize) -> Option<usize> {
    carrier.checked_pow(u32::try_from(width).ok()?)
}

/// Writes `index` as `width` base-`m` digits, most significant first.
pub fn decode_tuple(mut index: usize, m: usize, width: usize) -> Vec<usize> {
    let mut digits = vec![0; width];
    for d in digits.iter_mut().rev() {
        *d = index % m;
        index /= m;
    }
    digits
}

pub fn encode_tuple(digits: &[usize], m: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * m + d)
}

impl FiniteAlgebra {
    /// Tabulates `interp` over every probe view of every operator.
    pub fn from_fn(
        sig: &Signature,
        carrier: Vec<String>,
        probe: usize,
        mut interp: impl FnMut(&str, &[usize]) -> usize,
    ) -> Result<Self, TermError> {
        let m = carrier.len();
        let mut ops = Vec::with_capacity(sig.ops().len());
        for decl in sig.ops() {
            let w = decl.arity.probe_width(probe);
            let len = table_len(m, w).ok_or_else(|| {
                TermError::MalformedAlgebra(format!("table for `{}` is too large", decl.name))
            })?;
            let table = (0..len)
                .map(|i| interp(&decl.name, &decode_tuple(i, m, w)))
                .collect();
            ops.push(OpTable {
                name: decl.name.clone(),
                arity: decl.arity,
                table,
            });
        }
        let alg = FiniteAlgebra {
            carrier,
            probe,
            ops,
        };
        alg.validate()?;
        Ok(alg)
    }

    pub fn size(&self) -> usize {
        self.carrier.len()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.carrier[v]
    }

    pub fn validate(&self) -> Result<(), TermError> {
        let m = self.size();
        let mut seen = std::collections::HashSet::new();
        for op in &self.ops {
            if !seen.insert(op.name.as_str()) {
                return Err(TermError::DuplicateOperator(op.name.clone()));
            }
            let w = op.arity.probe_width(self.probe);
            if table_len(m, w) != Some(op.table.len()) {
                return Err(TermError::MalformedAlgebra(format!(
                    "table for `{}` has {} rows, expected {}^{}",
                    op.name,
                    op.table.len(),
                    m,
                    w
                )));
            }
            if let Some(&v) = op.table.iter().find(|&&v| v >= m) {
                return Err(TermError::OutOfCarrier { value: v, size: m });
            }
        }
        Ok(())
    }

    /// Checks that the algebra interprets exactly the operators of `sig`
    /// with matching arities.
    pub fn check_signature(&self, sig: &Signature) -> Result<(), TermError> {
        for decl in sig.ops() {
            let op = self
                .op(&decl.name)
                .ok_or_else(|| TermError::UnknownOperator(decl.name.clone()))?;
            if op.arity != decl.arity {
                return Err(TermError::ArityMismatch {
                    op: decl.name.clone(),
                    expected: decl.arity.to_string(),
                    found: op.arity.to_string(),
                });
            }
        }
        if let Some(extra) = self.ops.iter().find(|o| !sig.contains(&o.name)) {
            return Err(TermError::UnknownOperator(extra.name.clone()));
        }
        Ok(())
    }

    pub fn op(&self, name: &str) -> Option<&OpTable> {
        self.ops.iter().find(|o| o.name == name)
    }

    /// Overwrites one table entry.
    pub fn set_entry(&mut self, op: &str, args: &[usize], value: usize) -> Result<(), TermError> {
        let m = self.size();
        let t = self
            .ops
            .iter_mut()
            .find(|o| o.name == op)
            .ok_or_else(|| TermError::UnknownOperator(op.to_string()))?;
        let i = encode_tuple(args, m);
        *t.table.get_mut(i).ok_or_else(|| {
            TermError::MalformedAlgebra(format!("argument tuple {args:?} out of range"))
        })? = value;
        Ok(())
    }

    /// Every node over the carrier, one per probe view, in canonical order:
    /// operators in declaration order, then argument tuples lexicographically.
    pub fn nodes(&self) -> impl Iterator<Item = SNode<usize>> + '_ {
        let m = self.size();
        self.ops.iter().flat_map(move |op| {
            let w = op.arity.probe_width(self.probe);
            (0..op.table.len()).map(move |i| {
                SNode::new(
                    op.name.clone(),
                    Branches::from_probe_view(op.arity, decode_tuple(i, m, w)),
                )
            })
        })
    }

    pub fn node_count(&self) -> usize {
        self.ops.iter().map(|o| o.table.len()).sum()
    }
}

impl Algebra for FiniteAlgebra {
    type Carrier = usize;

    fn apply(&self, node: &SNode<usize>) -> Result<usize, TermError> {
        let op = self
            .op(&node.op)
            .ok_or_else(|| TermError::UnknownOperator(node.op.clone()))?;
        let view = match (op.arity, &node.branches) {
            (Arity::Finite(n), Branches::Finite(v)) if v.len() == n => v.clone(),
            (Arity::Omega, b @ Branches::Omega { .. }) => {
                b.probe_view(self.probe).into_iter().copied().collect()
            }
            (arity, _) => {
                return Err(TermError::ArityMismatch {
                    op: node.op.clone(),
                    expected: arity.to_string(),
                    found: match &node.branches {
                        Branches::Finite(v) => v.len().to_string(),
                        Branches::Omega { .. } => "ω".into(),
                    },
                })
            }
        };
        let m = self.size();
        if let Some(&v) = view.iter().find(|&&v| v >= m) {
            return Err(TermError::OutOfCarrier { value: v, size: m });
        }
        Ok(op.table[encode_tuple(&view, m)])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum HomCheck {
    Ok,
    Counterexample { node: SNode<usize> },
    BudgetExceeded { nodes: usize, budget: usize },
}

/// Checks `dst(a, h ∘ b) = h(src(a, b))` on every node over the source
/// carrier, returning the first violation in canonical order.
pub fn check_hom(
    h: impl Fn(usize) -> usize,
    src: &FiniteAlgebra,
    dst: &FiniteAlgebra,
    budget: usize,
) -> Result<HomCheck, TermError> {
    let total = src.node_count();
    if total > budget {
        return Ok(HomCheck::BudgetExceeded {
            nodes: total,
            budget,
        });
    }
    for node in src.nodes() {
        let image = SNode::new(node.op.clone(), node.branches.map(|&b| h(b)));
        if dst.apply(&image)? != h(src.apply(&node)?) {
            return Ok(HomCheck::Counterexample { node });
        }
    }
    Ok(HomCheck::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list_sig() -> Signature {
        Signature::from_pairs([
            ("nil", Arity::Finite(0)),
            ("cons(a)", Arity::Finite(1)),
            ("cons(b)", Arity::Finite(1)),
        ])
        .unwrap()
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn ab_list() -> Term<()> {
        Term::app(
            "cons(a)",
            vec![Term::app("cons(b)", vec![Term::constant("nil")])],
        )
    }

    #[test]
    fn eval_var_uses_environment() {
        let alg = FnAlgebra::new(|_: &SNode<u64>| Ok(0));
        let t: Term<char> = Term::Var('v');
        assert_eq!(eval_alg(&t, &mut |_| Some(7), &alg).unwrap(), 7);
    }

    #[test]
    fn length_and_parity_of_ab() {
        let length = FnAlgebra::new(|n: &SNode<u64>| {
            Ok(n.branches.values().next().map_or(0, |x| x + 1))
        });
        assert_eq!(eval_closed(&ab_list(), &length).unwrap(), 2);
        let parity = FiniteAlgebra::from_fn(
            &list_sig(),
            vec!["even".into(), "odd".into()],
            0,
            |op, args| if op == "nil" { 0 } else { 1 - args[0] },
        )
        .unwrap();
        assert_eq!(parity.label(eval_closed(&ab_list(), &parity).unwrap()), "even");
    }

    #[test]
    fn eval_reports_unknown_operator() {
        let alg = FiniteAlgebra::from_fn(&list_sig(), labels(1), 0, |_, _| 0).unwrap();
        let t: Term<()> = Term::constant("zz");
        assert_eq!(
            eval_closed(&t, &alg),
            Err(TermError::UnknownOperator("zz".into()))
        );
    }

    #[test]
    fn omega_probe_view_indexing() {
        let sig = Signature::from_pairs([("leaf", Arity::Finite(0)), ("node", Arity::Omega)])
            .unwrap();
        // node returns its branch at index 1
        let alg = FiniteAlgebra::from_fn(&sig, labels(3), 2, |op, args| {
            if op == "leaf" {
                2
            } else {
                args[1]
            }
        })
        .unwrap();
        let n = SNode::new("node", Branches::omega([(1, 0)], 2));
        assert_eq!(alg.apply(&n).unwrap(), 0);
        let n = SNode::new("node", Branches::omega([(0, 0)], 1));
        assert_eq!(alg.apply(&n).unwrap(), 1);
        assert_eq!(alg.op("node").unwrap().table.len(), 27);
    }

    #[test]
    fn check_hom_identity_and_parity() {
        let sig = list_sig();
        let cyc4 = FiniteAlgebra::from_fn(&sig, labels(4), 0, |op, a| {
            if op == "nil" {
                0
            } else {
                (a[0] + 1) % 4
            }
        })
        .unwrap();
        assert_eq!(check_hom(|x| x, &cyc4, &cyc4, 100).unwrap(), HomCheck::Ok);
        let flip = FiniteAlgebra::from_fn(&sig, labels(2), 0, |op, a| {
            if op == "nil" {
                0
            } else {
                1 - a[0]
            }
        })
        .unwrap();
        assert_eq!(check_hom(|x| x % 2, &cyc4, &flip, 100).unwrap(), HomCheck::Ok);
        let ident = FiniteAlgebra::from_fn(&sig, labels(2), 0, |op, a| {
            if op == "nil" {
                0
            } else {
                a[0]
            }
        })
        .unwrap();
        let HomCheck::Counterexample { node } = check_hom(|x| x % 2, &cyc4, &ident, 100).unwrap()
        else {
            panic!("expected a counterexample")
        };
        assert_eq!(node.op, "cons(a)");
        assert_eq!(
            check_hom(|x| x, &cyc4, &cyc4, 3).unwrap(),
            HomCheck::BudgetExceeded {
                nodes: 9,
                budget: 3
            }
        );
    }

    #[test]
    fn json_validation() {
        let bad = r#"{"carrier":["x"],"probe":0,"ops":[{"name":"f","arity":{"finite":1},"table":[0,0]}]}"#;
        assert!(serde_json::from_str::<FiniteAlgebra>(bad).is_err());
        let oob = r#"{"carrier":["x"],"probe":0,"ops":[{"name":"f","arity":{"finite":1},"table":[3]}]}"#;
        assert!(serde_json::from_str::<FiniteAlgebra>(oob).is_err());
        let ok = r#"{"carrier":["x"],"probe":0,"ops":[{"name":"f","arity":{"finite":1},"table":[0]}]}"#;
        let alg: FiniteAlgebra = serde_json::from_str(ok).unwrap();
        assert_eq!(serde_json::to_string(&alg).unwrap(), ok);
    }
}
