//! Recursion and dependent elimination out of the QW carrier, with checks
//! of the homomorphism, uniqueness and computation properties on finite
//! fragments.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{decode_tuple, eval_alg, table_len, Algebra, FiniteAlgebra};
use crate::engine::{ClassId, EngineError, QNode, QwState};
use crate::equations::{lift, sat_check, EqError, SatReport, SatVerdict, Side};
use crate::terms::{Branches, SNode, Term, TermError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InitError {
    #[error("the algebra does not satisfy the equations: {0:?}")]
    NotSatisfied(SatVerdict),
    #[error("the satisfaction certificate does not match the target algebra")]
    StaleProof,
    #[error("no value given for generator `{0}`")]
    MissingGenerator(String),
    #[error("{needed} cases exceed the budget of {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("coherence fails for `{equation}`: {reason}")]
    Coherence { equation: String, reason: String },
    #[error("the index computed for {class} is not provably equal to it")]
    ProjectionMismatch { class: ClassId },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Equations(#[from] EqError),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A finite algebra together with a certificate that it satisfies the
/// equations, and values for the generators in free-algebra mode.
#[derive(Clone, Debug)]
pub struct RecTarget {
    pub alg: FiniteAlgebra,
    pub generators: BTreeMap<String, usize>,
    report: SatReport,
}

impl RecTarget {
    /// Runs the satisfaction check and keeps its certificate.
    pub fn new(
        state: &QwState,
        alg: FiniteAlgebra,
        generators: BTreeMap<String, usize>,
        budget: usize,
    ) -> Result<Self, InitError> {
        alg.check_signature(state.signature())?;
        for g in state.generators() {
            match generators.get(g) {
                Some(&v) if v < alg.size() => {}
                Some(&v) => {
                    return Err(TermError::OutOfCarrier {
                        value: v,
                        size: alg.size(),
                    }
                    .into())
                }
                None => return Err(InitError::MissingGenerator(g.clone())),
            }
        }
        let report = sat_check(&alg, state.equations(), budget)?;
        if !report.is_satisfied() {
            return Err(InitError::NotSatisfied(report.verdict));
        }
        Ok(RecTarget {
            alg,
            generators,
            report,
        })
    }

    /// A target whose satisfaction check is recorded but not enforced, for
    /// negative controls. Recursion into it fails with `StaleProof` unless
    /// the check passed.
    pub fn unchecked(
        state: &QwState,
        alg: FiniteAlgebra,
        generators: BTreeMap<String, usize>,
        budget: usize,
    ) -> Result<Self, InitError> {
        alg.check_signature(state.signature())?;
        let report = sat_check(&alg, state.equations(), budget)?;
        Ok(RecTarget {
            alg,
            generators,
            report,
        })
    }

    pub fn report(&self) -> &SatReport {
        &self.report
    }

    fn check_fresh(&self, state: &QwState) -> Result<(), InitError> {
        if self.report.certifies(&self.alg, state.equations()) {
            Ok(())
        } else {
            Err(InitError::StaleProof)
        }
    }
}

/// Evaluates classes into a finite algebra through their least-stage
/// members, recursing only on strictly earlier stages.
struct Recursor<'a> {
    state: &'a QwState,
    alg: &'a FiniteAlgebra,
    generators: &'a BTreeMap<String, usize>,
    memo: HashMap<ClassId, usize>,
    min_node: HashMap<ClassId, ClassId>,
}

impl<'a> Recursor<'a> {
    fn new(
        state: &'a QwState,
        alg: &'a FiniteAlgebra,
        generators: &'a BTreeMap<String, usize>,
    ) -> Self {
        let mut min_node: HashMap<ClassId, ClassId> = HashMap::new();
        for (id, _) in state.nodes() {
            let root = state.find(id);
            let key = |c: ClassId| (state.node_stage(c), c);
            let e = min_node.entry(root).or_insert(id);
            if key(id) < key(*e) {
                *e = id;
            }
        }
        Recursor {
            state,
            alg,
            generators,
            memo: HashMap::new(),
            min_node,
        }
    }

    fn node_value(&mut self, node: ClassId) -> Result<usize, InitError> {
        match self.state.node(node).clone() {
            QNode::Gen(g) => self
                .generators
                .get(&g)
                .copied()
                .ok_or(InitError::MissingGenerator(g)),
            QNode::Sq(t) => {
                let mut vals = HashMap::new();
                for &leaf in t.leaves() {
                    if !vals.contains_key(&leaf) {
                        vals.insert(leaf, self.class_value(leaf)?);
                    }
                }
                Ok(eval_alg(&t, &mut |c: &ClassId| vals.get(c).copied(), self.alg)?)
            }
        }
    }

    fn class_value(&mut self, c: ClassId) -> Result<usize, InitError> {
        let root = self.state.find(c);
        if let Some(&v) = self.memo.get(&root) {
            return Ok(v);
        }
        let node = self.min_node[&root];
        let v = self.node_value(node)?;
        self.memo.insert(root, v);
        Ok(v)
    }
}

/// The unique homomorphism from the carrier into the target, at one class.
pub fn qw_rec(state: &QwState, target: &RecTarget, c: ClassId) -> Result<usize, InitError> {
    target.check_fresh(state)?;
    if !state.is_live(c) {
        return Err(EngineError::StaleClass(c).into());
    }
    Recursor::new(state, &target.alg, &target.generators).class_value(c)
}

/// `qw_rec` on every listed class.
pub fn qw_rec_all(
    state: &QwState,
    target: &RecTarget,
    classes: &[ClassId],
) -> Result<Vec<usize>, InitError> {
    target.check_fresh(state)?;
    let mut r = Recursor::new(state, &target.alg, &target.generators);
    classes.iter().map(|&c| r.class_value(c)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum RecHomReport {
    Ok { nodes: usize },
    Counterexample {
        node: SNode<ClassId>,
        algebra_side: usize,
        rec_side: usize,
    },
}

/// Every node over `fragment`, one per probe view, in canonical order.
pub fn fragment_nodes(
    state: &QwState,
    fragment: &[ClassId],
    budget: usize,
) -> Result<Vec<SNode<ClassId>>, InitError> {
    let m = fragment.len();
    let probe = state.probe();
    let mut needed = 0usize;
    for decl in state.signature().ops() {
        let n = table_len(m, decl.arity.probe_width(probe)).unwrap_or(usize::MAX);
        needed = needed.saturating_add(n);
    }
    if needed > budget {
        return Err(InitError::BudgetExceeded { needed, budget });
    }
    let mut out = Vec::with_capacity(needed);
    for decl in state.signature().ops() {
        let w = decl.arity.probe_width(probe);
        for i in 0..table_len(m, w).unwrap_or(0) {
            let view: Vec<ClassId> = decode_tuple(i, m, w).into_iter().map(|j| fragment[j]).collect();
            out.push(SNode::new(
                decl.name.clone(),
                Branches::from_probe_view(decl.arity, view),
            ));
        }
    }
    Ok(out)
}

/// Checks `s(a, rec ∘ b) = rec(intro(a, b))` on every node over the
/// fragment. The certificate is not consulted, so an altered algebra shows
/// up here as a counterexample.
pub fn check_rec_hom(
    state: &mut QwState,
    target: &RecTarget,
    fragment: &[ClassId],
    budget: usize,
) -> Result<RecHomReport, InitError> {
    let nodes = fragment_nodes(state, fragment, budget)?;
    let mut intros = Vec::with_capacity(nodes.len());
    for s in &nodes {
        intros.push(state.qw_intro(s)?);
    }
    state.saturate();
    let mut r = Recursor::new(state, &target.alg, &target.generators);
    for (s, c) in nodes.iter().zip(intros) {
        let vals = s.branches.try_map(|b| r.class_value(*b))?;
        let algebra_side = target.alg.apply(&SNode::new(s.op.clone(), vals))?;
        let rec_side = r.class_value(c)?;
        if algebra_side != rec_side {
            return Ok(RecHomReport::Counterexample {
                node: s.clone(),
                algebra_side,
                rec_side,
            });
        }
    }
    Ok(RecHomReport::Ok { nodes: nodes.len() })
}

/// Checks that every member of every class evaluates to the class value.
pub fn check_representative_independence(
    state: &QwState,
    target: &RecTarget,
) -> Result<Option<(ClassId, usize, usize)>, InitError> {
    target.check_fresh(state)?;
    let mut r = Recursor::new(state, &target.alg, &target.generators);
    for (id, _) in state.nodes() {
        let member = r.node_value(id)?;
        let class = r.class_value(id)?;
        if member != class {
            return Ok(Some((id, member, class)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum UniqReport {
    Ok,
    /// `h` is not a homomorphism on the fragment.
    PremiseFailure {
        node: SNode<ClassId>,
        algebra_side: usize,
        map_side: usize,
    },
    /// `h` is a homomorphism but differs from the recursor.
    Mismatch {
        class: ClassId,
        map_value: usize,
        rec_value: usize,
    },
}

/// A node over the fragment whose introduction lands back in the fragment,
/// with branch and result given as fragment positions.
struct PremiseCase {
    node: SNode<ClassId>,
    positions: Branches<usize>,
    result: usize,
}

fn premise_cases(
    state: &mut QwState,
    fragment: &[ClassId],
    budget: usize,
) -> Result<Vec<PremiseCase>, InitError> {
    let nodes = fragment_nodes(state, fragment, budget)?;
    let mut intros = Vec::with_capacity(nodes.len());
    for s in &nodes {
        intros.push(state.qw_intro(s)?);
    }
    state.saturate();
    let position = |state: &QwState, c: ClassId| fragment.iter().position(|f| state.same_class(*f, c));
    let mut out = Vec::new();
    for (node, c) in nodes.into_iter().zip(intros) {
        let Some(result) = position(state, c) else {
            continue;
        };
        let positions = node
            .branches
            .map(|b| position(state, *b).expect("branches come from the fragment"));
        out.push(PremiseCase {
            node,
            positions,
            result,
        });
    }
    Ok(out)
}

fn premise_failure(
    target: &RecTarget,
    cases: &[PremiseCase],
    h: &[usize],
) -> Result<Option<UniqReport>, InitError> {
    for case in cases {
        let vals = case.positions.map(|&i| h[i]);
        let algebra_side = target.alg.apply(&SNode::new(case.node.op.clone(), vals))?;
        let map_side = h[case.result];
        if algebra_side != map_side {
            return Ok(Some(UniqReport::PremiseFailure {
                node: case.node.clone(),
                algebra_side,
                map_side,
            }));
        }
    }
    Ok(None)
}

/// Checks that a map on the fragment (`h[i]` is the value at
/// `fragment[i]`) which commutes with the algebra structure, on nodes whose
/// introduction stays in the fragment, agrees with the recursor.
pub fn check_uniq(
    state: &mut QwState,
    target: &RecTarget,
    fragment: &[ClassId],
    h: &[usize],
    budget: usize,
) -> Result<UniqReport, InitError> {
    assert_eq!(h.len(), fragment.len(), "one value per fragment class");
    let cases = premise_cases(state, fragment, budget)?;
    if let Some(failure) = premise_failure(target, &cases, h)? {
        return Ok(failure);
    }
    let recs = qw_rec_all(state, target, fragment)?;
    for ((&c, &map_value), rec_value) in fragment.iter().zip(h).zip(recs) {
        if map_value != rec_value {
            return Ok(UniqReport::Mismatch {
                class: c,
                map_value,
                rec_value,
            });
        }
    }
    Ok(UniqReport::Ok)
}

/// Every map from the fragment into the carrier satisfying the
/// homomorphism premise, by exhaustive search in lexicographic order.
pub fn homomorphisms_on_fragment(
    state: &mut QwState,
    target: &RecTarget,
    fragment: &[ClassId],
    budget: usize,
) -> Result<Vec<Vec<usize>>, InitError> {
    let m = target.alg.size();
    let needed = table_len(m, fragment.len()).unwrap_or(usize::MAX);
    if needed > budget {
        return Err(InitError::BudgetExceeded { needed, budget });
    }
    let cases = premise_cases(state, fragment, budget)?;
    let mut out = Vec::new();
    for i in 0..needed {
        let h = decode_tuple(i, m, fragment.len());
        if premise_failure(target, &cases, &h)?.is_none() {
            out.push(h);
        }
    }
    Ok(out)
}

/// The carrier as an algebra: the structure map is `qw_intro`.
pub struct QwAlgebra<'s> {
    state: RefCell<&'s mut QwState>,
}

impl<'s> QwAlgebra<'s> {
    pub fn new(state: &'s mut QwState) -> Self {
        QwAlgebra {
            state: RefCell::new(state),
        }
    }

    fn representative(&self, c: ClassId) -> Term<String> {
        self.state.borrow_mut().representative(c)
    }
}

impl Algebra for QwAlgebra<'_> {
    type Carrier = ClassId;

    fn apply(&self, node: &SNode<ClassId>) -> Result<ClassId, TermError> {
        self.state.borrow_mut().qw_intro(node).map_err(|e| match e {
            EngineError::Term(t) => t,
            other => TermError::MalformedAlgebra(other.to_string()),
        })
    }
}

type Fiber<V> = Box<dyn Fn(&Term<String>) -> Vec<V>>;
type Step<V> = Box<dyn Fn(&SNode<ClassId>, &Branches<V>) -> V>;

/// A family of finite value sets over the carrier, given on class
/// representatives, with a dependent step for each node.
pub struct DepTarget<V> {
    pub name: String,
    pub fiber: Fiber<V>,
    pub step: Step<V>,
    pub generators: BTreeMap<String, V>,
}

impl<V> fmt::Debug for DepTarget<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DepTarget").field("name", &self.name).finish()
    }
}

/// A dependent target whose step respects every equation on a fragment.
#[derive(Debug)]
pub struct VerifiedDep<V> {
    pub target: DepTarget<V>,
    pub instances: usize,
}

fn lift_in<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: &DepTarget<V>,
    f: &mut impl FnMut(&ClassId) -> Option<(ClassId, V)>,
    t: &Term<ClassId>,
) -> Result<(ClassId, V), InitError> {
    let alg = QwAlgebra::new(state);
    let fiber = |c: &ClassId| (dep.fiber)(&alg.representative(*c));
    Ok(lift(&alg, &fiber, &dep.step, f, t)?)
}

fn lift_eq<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: &DepTarget<V>,
    env: &[(ClassId, V)],
    t: &Term<usize>,
) -> Result<(ClassId, V), InitError> {
    let alg = QwAlgebra::new(state);
    let fiber = |c: &ClassId| (dep.fiber)(&alg.representative(*c));
    Ok(lift(&alg, &fiber, &dep.step, &mut |v: &usize| env.get(*v).cloned(), t)?)
}

/// Checks that both sides of every equation lift to the same value for
/// every environment of (class, value) pairs drawn from the fragment. The
/// two indices are first proved equal, so the values live in one fiber.
pub fn verify_coherence<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: DepTarget<V>,
    fragment: &[ClassId],
    budget: usize,
) -> Result<VerifiedDep<V>, InitError> {
    let mut choices: Vec<(ClassId, V)> = Vec::new();
    for &c in fragment {
        let rep = state.representative(c);
        for v in (dep.fiber)(&rep) {
            choices.push((c, v));
        }
    }
    let eqs = state.equations().clone();
    let needed = crate::equations::env_count(&eqs, choices.len()).unwrap_or(usize::MAX);
    if needed > budget {
        return Err(InitError::BudgetExceeded { needed, budget });
    }
    let mut lifted = Vec::with_capacity(needed);
    for e in eqs.ordered() {
        let mut envs = Vec::new();
        crate::equations::for_each_env(e.vars, choices.len(), Default::default(), |idx| {
            envs.push(idx.iter().map(|&i| choices[i].clone()).collect::<Vec<_>>());
            true
        });
        for env in envs {
            let l = lift_eq(state, &dep, &env, e.side(Side::Lhs))?;
            let r = lift_eq(state, &dep, &env, e.side(Side::Rhs))?;
            lifted.push((e.name.clone(), l, r));
        }
    }
    state.saturate();
    for (equation, (li, lv), (ri, rv)) in &lifted {
        if !state.decide_eq(*li, *ri)?.is_proved() {
            return Err(InitError::Coherence {
                equation: equation.clone(),
                reason: format!("indices {li} and {ri} are not proved equal"),
            });
        }
        if lv != rv {
            return Err(InitError::Coherence {
                equation: equation.clone(),
                reason: format!("lifted values {lv:?} and {rv:?} differ"),
            });
        }
    }
    Ok(VerifiedDep {
        instances: lifted.len(),
        target: dep,
    })
}

/// Dependent elimination: a value in the fiber over `c`, computed by
/// recursion into the algebra of (class, value) pairs.
pub fn qw_elim<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: &VerifiedDep<V>,
    c: ClassId,
) -> Result<V, InitError> {
    let mut memo = HashMap::new();
    elim_class(state, &dep.target, c, &mut memo)
}

fn elim_class<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: &DepTarget<V>,
    c: ClassId,
    memo: &mut HashMap<ClassId, V>,
) -> Result<V, InitError> {
    if !state.is_live(c) {
        return Err(EngineError::StaleClass(c).into());
    }
    let root = state.find(c);
    if let Some(v) = memo.get(&root) {
        return Ok(v.clone());
    }
    let node = state.min_stage_node(c);
    let value = match state.node(node).clone() {
        QNode::Gen(g) => dep
            .generators
            .get(&g)
            .cloned()
            .ok_or(InitError::MissingGenerator(g))?,
        QNode::Sq(t) => {
            let mut vals = HashMap::new();
            for &leaf in t.leaves() {
                if !vals.contains_key(&leaf) {
                    let v = elim_class(state, dep, leaf, memo)?;
                    vals.insert(leaf, v);
                }
            }
            let (index, value) =
                lift_in(state, dep, &mut |l: &ClassId| vals.get(l).map(|v| (*l, v.clone())), &t)?;
            if !state.same_class(index, c) && !state.decide_eq(index, c)?.is_proved() {
                return Err(InitError::ProjectionMismatch { class: c });
            }
            value
        }
    };
    memo.insert(state.find(c), value.clone());
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum CompReport<V> {
    Ok { nodes: usize },
    Counterexample { node: SNode<ClassId>, elim: V, step: V },
}

/// Checks `elim(intro(a, b)) = p a b (elim ∘ b)` on every node over the
/// fragment.
pub fn check_qw_comp<V: Clone + PartialEq + fmt::Debug>(
    state: &mut QwState,
    dep: &VerifiedDep<V>,
    fragment: &[ClassId],
    budget: usize,
) -> Result<CompReport<V>, InitError> {
    let nodes = fragment_nodes(state, fragment, budget)?;
    let mut memo = HashMap::new();
    for s in &nodes {
        let c = state.qw_intro(s)?;
        let elim = elim_class(state, &dep.target, c, &mut memo)?;
        let mut vals = Vec::new();
        for b in s.branches.values() {
            vals.push((*b, elim_class(state, &dep.target, *b, &mut memo)?));
        }
        let branch_vals = s
            .branches
            .map(|b| vals.iter().find(|(c, _)| c == b).expect("computed above").1.clone());
        let step = (dep.target.step)(s, &branch_vals);
        if elim != step {
            return Ok(CompReport::Counterexample {
                node: s.clone(),
                elim,
                step,
            });
        }
    }
    Ok(CompReport::Ok { nodes: nodes.len() })
}

/// The family that is a single point everywhere.
pub fn constant_singleton() -> DepTarget<()> {
    DepTarget {
        name: "singleton".into(),
        fiber: Box::new(|_| vec![()]),
        step: Box::new(|_, _| ()),
        generators: BTreeMap::new(),
    }
}

/// The constant family `{0..=cap}` with the truncated height step.
pub fn constant_height(cap: usize) -> DepTarget<usize> {
    DepTarget {
        name: "height".into(),
        fiber: Box::new(move |_| (0..=cap).collect()),
        step: Box::new(move |_, b| b.values().map(|v| v + 1).max().unwrap_or(0).min(cap)),
        generators: BTreeMap::new(),
    }
}

/// Over a list class of length `n`, the sorted multisets of size `n` over
/// `xs`; the step inserts the consed element.
pub fn bag_multisets(xs: &[&str]) -> DepTarget<Vec<String>> {
    let xs: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    let elements = xs.clone();
    DepTarget {
        name: "multiset".into(),
        fiber: Box::new(move |rep| multisets(&xs, rep.size() - 1)),
        step: Box::new(move |node, b| {
            let mut m = b.values().next().cloned().unwrap_or_default();
            if let Some(x) = elements
                .iter()
                .find(|x| node.op == format!("cons({x})"))
            {
                let at = m.partition_point(|y| y <= x);
                m.insert(at, x.clone());
            }
            m
        }),
        generators: BTreeMap::new(),
    }
}

fn multisets(xs: &[String], n: usize) -> Vec<Vec<String>> {
    let mut sorted = xs.to_vec();
    sorted.sort();
    fn go(xs: &[String], n: usize, acc: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if n == 0 {
            out.push(acc.clone());
            return;
        }
        for (i, x) in xs.iter().enumerate() {
            acc.push(x.clone());
            go(&xs[i..], n - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(&sorted, n, &mut Vec::new(), &mut out);
    out
}

/// The family `P(c) = {rec(c)}` for a recursion target, with the algebra
/// structure as step.
pub fn recursion_family(target: &RecTarget) -> DepTarget<usize> {
    let alg = target.alg.clone();
    let alg2 = target.alg.clone();
    let gens = target.generators.clone();
    DepTarget {
        name: "recursion".into(),
        fiber: Box::new(move |rep| {
            eval_alg(rep, &mut |g: &String| gens.get(g).copied(), &alg)
                .map(|v| vec![v])
                .unwrap_or_default()
        }),
        step: Box::new(move |node, b| {
            alg2.apply(&SNode::new(node.op.clone(), b.clone()))
                .expect("step on a well-formed node")
        }),
        generators: target.generators.clone(),
    }
}
