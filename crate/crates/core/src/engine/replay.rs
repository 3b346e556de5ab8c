//! Independent re-checking of a state's merge log.
//!
//! The validator keeps its own union-find and replays the log in order,
//! checking each merge against the rule it cites using only the merges that
//! came before it.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::union_find::UnionFind;
use super::{ClassId, Derivation, Justification, Merge, QNode, QwState};
use crate::equations::Side;
use crate::terms::{Branches, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayFailure {
    pub merge: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub merges: usize,
    pub validated: usize,
    pub failures: Vec<ReplayFailure>,
    /// Whether the replayed partition coincides with the state's.
    pub partition_agrees: bool,
    #[serde(skip)]
    valid: Vec<bool>,
}

impl ReplayReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty() && self.partition_agrees
    }

    /// Whether the merge at `index` was validated.
    pub fn merge_valid(&self, index: usize) -> bool {
        self.valid.get(index).copied().unwrap_or(false)
    }
}

struct Replayer<'a> {
    state: &'a QwState,
    uf: UnionFind,
    members: Vec<Vec<u32>>,
}

impl Replayer<'_> {
    fn same(&self, a: ClassId, b: ClassId) -> bool {
        self.uf.same(a.0, b.0)
    }

    fn payload(&self, c: ClassId) -> &QNode {
        self.state.node(c)
    }

    fn union(&mut self, a: u32, b: u32) {
        if let Some((root, child)) = self.uf.union(a, b) {
            let moved = std::mem::take(&mut self.members[child as usize]);
            self.members[root as usize].extend(moved);
        }
    }

    /// Whether the class of `n`, as established so far, contains a node
    /// standing for the term `t` over classes.
    fn denotes(&self, n: ClassId, t: &Term<ClassId>) -> bool {
        if let Term::Var(c) = t {
            if self.same(n, *c) {
                return true;
            }
        }
        self.members[self.uf.find(n.0) as usize]
            .iter()
            .any(|&m| match (self.payload(ClassId(m)), t) {
                (QNode::Sq(Term::Var(l)), Term::Var(c)) => self.same(*l, *c),
                (QNode::Sq(p @ Term::Node(_)), _) => self.matches(p, t),
                _ => false,
            })
    }

    fn matches(&self, p: &Term<ClassId>, t: &Term<ClassId>) -> bool {
        match (p, t) {
            (Term::Var(l), t) => self.denotes(*l, t),
            (Term::Node(pn), Term::Node(tn)) => {
                pn.op == tn.op && zip_all(&pn.branches, &tn.branches, |a, b| self.matches(a, b))
            }
            (Term::Node(_), Term::Var(_)) => false,
        }
    }

    fn congruent(&self, p: &Term<ClassId>, q: &Term<ClassId>) -> bool {
        match (p, q) {
            (Term::Var(a), Term::Var(b)) => self.same(*a, *b),
            (Term::Node(a), Term::Node(b)) => {
                a.op == b.op && zip_all(&a.branches, &b.branches, |x, y| self.congruent(x, y))
            }
            _ => false,
        }
    }

    fn check(&self, m: &Merge) -> Result<(), String> {
        match &m.justification {
            Justification::SqEq { equation, env } => {
                let e = self
                    .state
                    .equations()
                    .get(equation)
                    .ok_or_else(|| format!("no equation named `{equation}`"))?;
                if env.len() != e.vars || env.iter().any(|c| !self.state.is_live(*c)) {
                    return Err("environment does not fit the equation".into());
                }
                let l = e.instantiate(Side::Lhs, env);
                let r = e.instantiate(Side::Rhs, env);
                let forward = self.denotes(m.a, &l) && self.denotes(m.b, &r);
                let backward = self.denotes(m.a, &r) && self.denotes(m.b, &l);
                if forward || backward {
                    Ok(())
                } else {
                    Err(format!("nodes do not denote the sides of `{equation}`"))
                }
            }
            Justification::SqEta => {
                let eta = |x: ClassId, y: ClassId| {
                    matches!(self.payload(x), QNode::Sq(Term::Var(c)) if self.same(*c, y))
                };
                if eta(m.a, m.b) || eta(m.b, m.a) {
                    Ok(())
                } else {
                    Err("not an η-wrapped class and its content".into())
                }
            }
            Justification::SqSigma => {
                let sigma = |deep: ClassId, flat: ClassId| match (self.payload(deep), self.payload(flat)) {
                    (QNode::Sq(Term::Node(d)), q @ QNode::Sq(Term::Node(f))) => {
                        q.one_layer().is_some()
                            && d.op == f.op
                            && zip_all(&f.branches, &d.branches, |fb, db| match fb {
                                Term::Var(v) => self.denotes(*v, db),
                                Term::Node(_) => false,
                            })
                    }
                    _ => false,
                };
                if sigma(m.a, m.b) || sigma(m.b, m.a) {
                    Ok(())
                } else {
                    Err("not a nested layer and its flattening".into())
                }
            }
            Justification::Cong => {
                let ok = match (self.payload(m.a), self.payload(m.b)) {
                    (QNode::Gen(x), QNode::Gen(y)) => x == y,
                    (QNode::Sq(p), QNode::Sq(q)) => self.congruent(p, q),
                    _ => false,
                };
                if ok {
                    Ok(())
                } else {
                    Err("payloads are not congruent".into())
                }
            }
        }
    }
}

/// Applies `f` pointwise to two branch maps of the same shape. ω maps are
/// compared on every table index of either side and on the defaults.
fn zip_all<A, B>(a: &Branches<A>, b: &Branches<B>, mut f: impl FnMut(&A, &B) -> bool) -> bool {
    match (a, b) {
        (Branches::Finite(x), Branches::Finite(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| f(p, q))
        }
        (
            Branches::Omega {
                table: ta,
                default: da,
            },
            Branches::Omega {
                table: tb,
                default: db,
            },
        ) => {
            let keys: BTreeSet<usize> = ta.keys().chain(tb.keys()).copied().collect();
            keys.into_iter()
                .all(|i| f(a.get(i).unwrap(), b.get(i).unwrap()))
                && f(da, db)
        }
        _ => false,
    }
}

/// Replays every merge of `state` and compares the resulting partition.
pub fn replay(state: &QwState) -> ReplayReport {
    let n = state.node_count();
    let mut r = Replayer {
        state,
        uf: UnionFind::new(),
        members: (0..n as u32).map(|i| vec![i]).collect(),
    };
    for _ in 0..n {
        r.uf.push();
    }
    let mut failures = Vec::new();
    let mut valid = Vec::with_capacity(state.merges().len());
    for (i, m) in state.merges().iter().enumerate() {
        match r.check(m) {
            Ok(()) => valid.push(true),
            Err(reason) => {
                valid.push(false);
                failures.push(ReplayFailure { merge: i, reason });
            }
        }
        r.union(m.a.0, m.b.0);
    }
    let mut pairing: HashMap<u32, u32> = HashMap::new();
    let mut back: HashMap<u32, u32> = HashMap::new();
    let mut partition_agrees = true;
    for i in 0..n as u32 {
        let s = state.find(ClassId(i)).0;
        let q = r.uf.find(i);
        if *pairing.entry(s).or_insert(q) != q || *back.entry(q).or_insert(s) != s {
            partition_agrees = false;
        }
    }
    ReplayReport {
        merges: state.merges().len(),
        validated: valid.iter().filter(|v| **v).count(),
        failures,
        partition_agrees,
        valid,
    }
}

/// Checks that `d` is a chain from `a` to `b` through validated merges.
pub fn replay_derivation(
    state: &QwState,
    report: &ReplayReport,
    d: &Derivation,
    a: ClassId,
    b: ClassId,
) -> bool {
    let mut cur = a;
    for step in &d.steps {
        let Some(m) = state.merges().get(step.merge) else {
            return false;
        };
        let linked = (m.a == step.from && m.b == step.to) || (m.a == step.to && m.b == step.from);
        if step.from != cur || !linked || m.justification != step.justification {
            return false;
        }
        if !report.merge_valid(step.merge) {
            return false;
        }
        cur = step.to;
    }
    cur == b
}
