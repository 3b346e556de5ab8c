//! Signatures, one-layer nodes of the signature functor, and terms of the
//! free monad over a signature.
//!
//! An operator has either a finite arity `n` (branches indexed `0..n`) or an
//! `ω` arity whose branch maps are kept as a finite table plus a default
//! value. Tables are normalized: entries equal to the default are dropped,
//! so structural equality of branch maps coincides with extensional
//! equality.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::de::DeserializeOwned;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Op = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("variable `{0}` is outside the environment")]
    UnboundVariable(String),
    #[error("operator `{op}` has arity {expected} but was given {found}")]
    ArityMismatch {
        op: String,
        expected: String,
        found: String,
    },
    #[error("duplicate operator `{0}`")]
    DuplicateOperator(String),
    #[error("value {value} lies outside a carrier of size {size}")]
    OutOfCarrier { value: usize, size: usize },
    #[error("malformed algebra: {0}")]
    MalformedAlgebra(String),
}

/// Arity of an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ArityRepr", into = "ArityRepr")]
pub enum Arity {
    Finite(usize),
    /// ℕ-indexed branching.
    Omega,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArityRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    finite: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<bool>,
}

impl From<Arity> for ArityRepr {
    fn from(a: Arity) -> Self {
        match a {
            Arity::Finite(n) => ArityRepr {
                finite: Some(n),
                omega: None,
            },
            Arity::Omega => ArityRepr {
                finite: None,
                omega: Some(true),
            },
        }
    }
}

impl TryFrom<ArityRepr> for Arity {
    type Error = String;

    fn try_from(r: ArityRepr) -> Result<Self, String> {
        match (r.finite, r.omega) {
            (Some(n), None) => Ok(Arity::Finite(n)),
            (None, Some(true)) => Ok(Arity::Omega),
            _ => Err("arity must be {\"finite\": n} or {\"omega\": true}".into()),
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Finite(n) => write!(f, "{n}"),
            Arity::Omega => write!(f, "ω"),
        }
    }
}

impl Arity {
    /// Number of branch values an algebra observes at the given probe depth.
    pub fn probe_width(self, probe: usize) -> usize {
        match self {
            Arity::Finite(n) => n,
            Arity::Omega => probe + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpDecl {
    pub name: Op,
    pub arity: Arity,
}

/// A finite list of operators with pairwise distinct names.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SignatureRepr", into = "SignatureRepr")]
pub struct Signature {
    ops: Vec<OpDecl>,
    index: HashMap<Op, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureRepr {
    ops: Vec<OpDecl>,
}

impl From<Signature> for SignatureRepr {
    fn from(s: Signature) -> Self {
        SignatureRepr { ops: s.ops }
    }
}

impl TryFrom<SignatureRepr> for Signature {
    type Error = TermError;

    fn try_from(r: SignatureRepr) -> Result<Self, TermError> {
        Signature::new(r.ops)
    }
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.ops == other.ops
    }
}

impl Eq for Signature {}

impl Signature {
    pub fn new(ops: Vec<OpDecl>) -> Result<Self, TermError> {
        let mut index = HashMap::with_capacity(ops.len());
        for (i, op) in ops.iter().enumerate() {
            if index.insert(op.name.clone(), i).is_some() {
                return Err(TermError::DuplicateOperator(op.name.clone()));
            }
        }
        Ok(Signature { ops, index })
    }

    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, Arity)>,
    ) -> Result<Self, TermError> {
        Signature::new(
            pairs
                .into_iter()
                .map(|(name, arity)| OpDecl {
                    name: name.into(),
                    arity,
                })
                .collect(),
        )
    }

    pub fn ops(&self) -> &[OpDecl] {
        &self.ops
    }

    pub fn arity(&self, op: &str) -> Option<Arity> {
        self.index.get(op).map(|&i| self.ops[i].arity)
    }

    pub fn contains(&self, op: &str) -> bool {
        self.index.contains_key(op)
    }

    pub fn has_omega(&self) -> bool {
        self.ops.iter().any(|o| o.arity == Arity::Omega)
    }

    /// Checks that `branches` has the shape required by `op`.
    pub fn check_shape<T>(&self, op: &str, branches: &Branches<T>) -> Result<(), TermError> {
        let arity = self
            .arity(op)
            .ok_or_else(|| TermError::UnknownOperator(op.to_string()))?;
        let ok = match (arity, branches) {
            (Arity::Finite(n), Branches::Finite(v)) => v.len() == n,
            (Arity::Omega, Branches::Omega { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(TermError::ArityMismatch {
                op: op.to_string(),
                expected: arity.to_string(),
                found: branches.shape_name(),
            })
        }
    }

    /// Validates every node of `t` against the signature.
    pub fn check_term<V>(&self, t: &Term<V>) -> Result<(), TermError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::Node(n) => {
                self.check_shape(&n.op, &n.branches)?;
                n.branches.values().try_for_each(|b| self.check_term(b))
            }
        }
    }
}

/// A branch map `B a → X`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Branches<T> {
    Finite(Vec<T>),
    Omega {
        table: BTreeMap<usize, T>,
        default: Box<T>,
    },
}

impl<T> Branches<T> {
    pub fn nullary() -> Self {
        Branches::Finite(Vec::new())
    }

    /// Builds a normalized ω branch map.
    pub fn omega(table: impl IntoIterator<Item = (usize, T)>, default: T) -> Self
    where
        T: PartialEq,
    {
        let table = table
            .into_iter()
            .filter(|(_, v)| *v != default)
            .collect();
        Branches::Omega {
            table,
            default: Box::new(default),
        }
    }

    /// The ω branch map that is constantly `default`.
    pub fn constant(default: T) -> Self {
        Branches::Omega {
            table: BTreeMap::new(),
            default: Box::new(default),
        }
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        match self {
            Branches::Finite(v) => v.get(i),
            Branches::Omega { table, default } => Some(table.get(&i).unwrap_or(default)),
        }
    }

    /// Every stored value: finite branches in order, or table values followed
    /// by the default.
    pub fn values(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            Branches::Finite(v) => Box::new(v.iter()),
            Branches::Omega { table, default } => {
                Box::new(table.values().chain(std::iter::once(&**default)))
            }
        }
    }

    pub fn is_omega(&self) -> bool {
        matches!(self, Branches::Omega { .. })
    }

    fn shape_name(&self) -> String {
        match self {
            Branches::Finite(v) => v.len().to_string(),
            Branches::Omega { .. } => "ω".into(),
        }
    }

    /// One past the largest table index (0 for finite maps and empty tables).
    pub fn table_extent(&self) -> usize {
        match self {
            Branches::Finite(_) => 0,
            Branches::Omega { table, .. } => table.keys().next_back().map_or(0, |k| k + 1),
        }
    }

    /// The values an algebra sees at probe depth `probe`: all finite
    /// branches, or indices `0..probe` followed by the default.
    pub fn probe_view(&self, probe: usize) -> Vec<&T> {
        match self {
            Branches::Finite(v) => v.iter().collect(),
            Branches::Omega { default, .. } => (0..probe)
                .map(|i| self.get(i).expect("ω maps are total"))
                .chain(std::iter::once(&**default))
                .collect(),
        }
    }

    pub fn map<U: PartialEq>(&self, mut f: impl FnMut(&T) -> U) -> Branches<U> {
        match self {
            Branches::Finite(v) => Branches::Finite(v.iter().map(f).collect()),
            Branches::Omega { table, default } => {
                let d = f(default);
                let t: Vec<_> = table.iter().map(|(&i, v)| (i, f(v))).collect();
                Branches::omega(t, d)
            }
        }
    }

    pub fn try_map<U: PartialEq, E>(
        &self,
        mut f: impl FnMut(&T) -> Result<U, E>,
    ) -> Result<Branches<U>, E> {
        Ok(match self {
            Branches::Finite(v) => Branches::Finite(v.iter().map(f).collect::<Result<_, _>>()?),
            Branches::Omega { table, default } => {
                let mut t = Vec::with_capacity(table.len());
                for (&i, v) in table {
                    t.push((i, f(v)?));
                }
                let d = f(default)?;
                Branches::omega(t, d)
            }
        })
    }

    /// Pointwise pairing of two maps of the same shape.
    pub fn zip_with<U, W: PartialEq>(
        &self,
        other: &Branches<U>,
        mut f: impl FnMut(&T, &U) -> W,
    ) -> Option<Branches<W>> {
        match (self, other) {
            (Branches::Finite(a), Branches::Finite(b)) if a.len() == b.len() => Some(
                Branches::Finite(a.iter().zip(b).map(|(x, y)| f(x, y)).collect()),
            ),
            (Branches::Omega { default: da, .. }, Branches::Omega { default: db, .. }) => {
                let extent = self.table_extent().max(other.table_extent());
                let t: Vec<_> = (0..extent)
                    .map(|i| (i, f(self.get(i).unwrap(), other.get(i).unwrap())))
                    .collect();
                let d = f(da, db);
                Some(Branches::omega(t, d))
            }
            _ => None,
        }
    }

    /// Rebuilds a branch map from a probe view (see [`Branches::probe_view`]).
    pub fn from_probe_view(arity: Arity, view: Vec<T>) -> Self
    where
        T: PartialEq,
    {
        match arity {
            Arity::Finite(_) => Branches::Finite(view),
            Arity::Omega => {
                let mut view = view;
                let default = view.pop().expect("ω view carries a default");
                Branches::omega(view.into_iter().enumerate(), default)
            }
        }
    }
}

impl<T: Ord> Branches<T> {
    fn cmp_pointwise(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Branches::Finite(a), Branches::Finite(b)) => a.cmp(b),
            (Branches::Finite(_), Branches::Omega { .. }) => Ordering::Less,
            (Branches::Omega { .. }, Branches::Finite(_)) => Ordering::Greater,
            (Branches::Omega { default: da, .. }, Branches::Omega { default: db, .. }) => {
                let extent = self.table_extent().max(other.table_extent());
                for i in 0..extent {
                    match self.get(i).unwrap().cmp(other.get(i).unwrap()) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                da.cmp(db)
            }
        }
    }
}

impl<T: Serialize> Serialize for Branches<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Branches::Finite(v) => {
                let mut seq = s.serialize_seq(Some(v.len()))?;
                for x in v {
                    seq.serialize_element(x)?;
                }
                seq.end()
            }
            Branches::Omega { table, default } => {
                let entries: Vec<(usize, &T)> = table.iter().map(|(&i, v)| (i, v)).collect();
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("table", &entries)?;
                m.serialize_entry("default", default)?;
                m.end()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BranchesRepr<T> {
    Finite(Vec<T>),
    Omega { table: Vec<(usize, T)>, default: T },
}

impl<'de, T: Deserialize<'de> + PartialEq> Deserialize<'de> for Branches<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match BranchesRepr::deserialize(d)? {
            BranchesRepr::Finite(v) => Branches::Finite(v),
            BranchesRepr::Omega { table, default } => {
                let mut seen = BTreeSet::new();
                for (i, _) in &table {
                    if !seen.insert(*i) {
                        return Err(serde::de::Error::custom(format!(
                            "duplicate table index {i}"
                        )));
                    }
                }
                Branches::omega(table, default)
            }
        })
    }
}

/// An element of `S X`: an operator together with a branch map into `X`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SNode<X> {
    pub op: Op,
    pub branches: Branches<X>,
}

impl<X: Serialize> Serialize for SNode<X> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("op", &self.op)?;
        m.serialize_entry("branches", &self.branches)?;
        m.end()
    }
}

impl<X> SNode<X> {
    pub fn new(op: impl Into<Op>, branches: Branches<X>) -> Self {
        SNode {
            op: op.into(),
            branches,
        }
    }
}

/// A term of the free monad `T X`: a variable leaf (`η`) or an operator node
/// (`σ`) whose branches are terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term<V> {
    Var(V),
    Node(SNode<Term<V>>),
}

impl<V> Term<V> {
    pub fn var(v: V) -> Self {
        Term::Var(v)
    }

    pub fn node(op: impl Into<Op>, branches: Branches<Term<V>>) -> Self {
        Term::Node(SNode::new(op, branches))
    }

    /// A node with finitely many branches.
    pub fn app(op: impl Into<Op>, args: Vec<Term<V>>) -> Self {
        Term::node(op, Branches::Finite(args))
    }

    pub fn constant(op: impl Into<Op>) -> Self {
        Term::node(op, Branches::nullary())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Number of constructors, counting each stored ω-branch value once.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Node(n) => 1 + n.branches.values().map(Term::size).sum::<usize>(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Node(n) => 1 + n.branches.values().map(Term::height).max().unwrap_or(0),
        }
    }

    /// Leaves in left-to-right order (with repetition).
    pub fn leaves(&self) -> Vec<&V> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a V>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::Node(n) => n.branches.values().for_each(|b| b.collect_leaves(out)),
        }
    }

    /// Operator names used anywhere in the term.
    pub fn operators(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        if let Term::Node(n) = self {
            out.insert(n.op.as_str());
            n.branches.values().for_each(|b| b.collect_ops(out));
        }
    }

    /// Renames operators, leaving variables alone.
    pub fn map_ops(&self, f: &impl Fn(&str) -> Op) -> Term<V>
    where
        V: Clone + PartialEq,
    {
        match self {
            Term::Var(v) => Term::Var(v.clone()),
            Term::Node(n) => Term::node(f(&n.op), n.branches.map(|b| b.map_ops(f))),
        }
    }
}

impl<V: Ord> Ord for Term<V> {
    /// The canonical term order: by size, then variables before nodes, then
    /// operator name, then branches pointwise.
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| match (self, other) {
                (Term::Var(a), Term::Var(b)) => a.cmp(b),
                (Term::Var(_), Term::Node(_)) => Ordering::Less,
                (Term::Node(_), Term::Var(_)) => Ordering::Greater,
                (Term::Node(a), Term::Node(b)) => a
                    .op
                    .cmp(&b.op)
                    .then_with(|| a.branches.cmp_pointwise(&b.branches)),
            })
    }
}

impl<V: Ord> PartialOrd for Term<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: Serialize> Serialize for Term<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Term::Var(v) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("var", v)?;
                m.end()
            }
            Term::Node(n) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("op", &n.op)?;
                m.serialize_entry("branches", &n.branches)?;
                m.end()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged, bound(deserialize = "V: DeserializeOwned + PartialEq"))]
enum TermRepr<V: PartialEq> {
    Var { var: V },
    Node { op: Op, branches: Branches<Term<V>> },
}

impl<'de, V: DeserializeOwned + PartialEq> Deserialize<'de> for Term<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match TermRepr::<V>::deserialize(d)? {
            TermRepr::Var { var } => Term::Var(var),
            TermRepr::Node { op, branches } => Term::node(op, branches),
        })
    }
}

impl<V: fmt::Display> fmt::Display for Term<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Node(n) => {
                write!(f, "{}", n.op)?;
                match &n.branches {
                    Branches::Finite(v) if v.is_empty() => Ok(()),
                    Branches::Finite(v) => {
                        write!(f, "[")?;
                        for (i, b) in v.iter().enumerate() {
                            if i > 0 {
                                write!(f, ", ")?;
                            }
                            write!(f, "{b}")?;
                        }
                        write!(f, "]")
                    }
                    Branches::Omega { table, default } => {
                        write!(f, "{{")?;
                        for (i, b) in table {
                            write!(f, "{i}: {b}, ")?;
                        }
                        write!(f, "_: {default}}}")
                    }
                }
            }
        }
    }
}

/// `S′ f`: post-compose the branch map of a node with `f`.
pub fn map_s<X, Y: PartialEq>(f: impl FnMut(&X) -> Y, s: &SNode<X>) -> SNode<Y> {
    SNode {
        op: s.op.clone(),
        branches: s.branches.map(f),
    }
}

/// Kleisli extension (`>>=` into the free algebra): replaces each variable by
/// the term `rho` assigns to it.
pub fn subst<X: fmt::Debug, Y: Clone + PartialEq>(
    t: &Term<X>,
    rho: &mut impl FnMut(&X) -> Option<Term<Y>>,
) -> Result<Term<Y>, TermError> {
    match t {
        Term::Var(x) => rho(x).ok_or_else(|| TermError::UnboundVariable(format!("{x:?}"))),
        Term::Node(n) => Ok(Term::node(
            n.op.clone(),
            n.branches.try_map(|b| subst(b, rho))?,
        )),
    }
}

/// `T′ f t = t >>= (η ∘ f)`.
pub fn map_t<X, Y: Clone + PartialEq>(f: &mut impl FnMut(&X) -> Y, t: &Term<X>) -> Term<Y> {
    match t {
        Term::Var(x) => Term::Var(f(x)),
        Term::Node(n) => Term::node(n.op.clone(), n.branches.map(|b| map_t(f, b))),
    }
}

/// `ι = σ ∘ S′η`: a one-layer node as a depth-one term.
pub fn iota<X: Clone + PartialEq>(s: &SNode<X>) -> Term<X> {
    Term::Node(map_s(|x: &X| Term::Var(x.clone()), s))
}

/// Enumerates terms over a signature by size, in canonical order.
///
/// ω branch maps are generated with tables supported on indices below the
/// probe depth.
pub struct TermEnumerator<'a, V> {
    sig: &'a Signature,
    vars: Vec<V>,
    probe: usize,
    by_size: Vec<Vec<Term<V>>>,
}

impl<'a, V: Clone + Ord> TermEnumerator<'a, V> {
    pub fn new(sig: &'a Signature, vars: Vec<V>, probe: usize) -> Self {
        TermEnumerator {
            sig,
            vars,
            probe,
            by_size: vec![Vec::new()],
        }
    }

    /// All terms of exactly `n` constructors.
    pub fn of_size(&mut self, n: usize) -> &[Term<V>] {
        while self.by_size.len() <= n {
            let k = self.by_size.len();
            let mut level = self.generate(k);
            level.sort();
            level.dedup();
            self.by_size.push(level);
        }
        &self.by_size[n]
    }

    /// All terms of size at most `n`, smallest first.
    pub fn up_to(&mut self, n: usize) -> Vec<Term<V>> {
        (1..=n).flat_map(|k| self.of_size(k).to_vec()).collect()
    }

    fn generate(&self, n: usize) -> Vec<Term<V>> {
        let mut out = Vec::new();
        if n == 1 {
            out.extend(self.vars.iter().cloned().map(Term::Var));
        }
        for decl in self.sig.ops() {
            match decl.arity {
                Arity::Finite(m) => {
                    if m == 0 {
                        if n == 1 {
                            out.push(Term::constant(decl.name.clone()));
                        }
                        continue;
                    }
                    if n < 1 + m {
                        continue;
                    }
                    for parts in compositions(n - 1, m) {
                        let lists: Vec<&[Term<V>]> =
                            parts.iter().map(|&p| self.by_size[p].as_slice()).collect();
                        for combo in cartesian(&lists) {
                            out.push(Term::app(decl.name.clone(), combo));
                        }
                    }
                }
                Arity::Omega => {
                    for dsize in 1..n {
                        for default in &self.by_size[dsize] {
                            let mut acc = Vec::new();
                            self.omega_tables(n - 1 - dsize, 0, default, &mut acc, &mut |t| {
                                out.push(Term::node(
                                    decl.name.clone(),
                                    Branches::Omega {
                                        table: t.iter().cloned().collect(),
                                        default: Box::new(default.clone()),
                                    },
                                ))
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn omega_tables(
        &self,
        remaining: usize,
        start: usize,
        default: &Term<V>,
        acc: &mut Vec<(usize, Term<V>)>,
        emit: &mut impl FnMut(&[(usize, Term<V>)]),
    ) {
        if remaining == 0 {
            emit(acc);
            return;
        }
        for i in start..self.probe {
            for s in 1..=remaining {
                for t in &self.by_size[s] {
                    if t == default {
                        continue;
                    }
                    acc.push((i, t.clone()));
                    self.omega_tables(remaining - s, i + 1, default, acc, emit);
                    acc.pop();
                }
            }
        }
    }
}

/// Ordered ways of writing `total` as `parts` positive summands.
pub(crate) fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub(crate) fn cartesian<T: Clone>(lists: &[&[T]]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for x in list.iter() {
                let mut v = prefix.clone();
                v.push(x.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}
