//! The QW carrier at desk scale: a staged quotient of interned terms.
//!
//! Every node of the state is either a generator or `sq t` for a term `t`
//! whose leaves are earlier nodes. Nodes are merged by four rules, each
//! recorded in a proof forest:
//!
//! * `sqeq`: the two instantiated sides of an equation,
//! * `sqeta`: `sq (η c)` with `c`,
//! * `sqsigma`: a nested term with its one-layer flattening,
//! * `cong`: two nodes whose payloads agree up to merged leaves.
//!
//! The stage of a node is one more than the largest stage among its leaves;
//! the stage of a class is the least stage of its members.

pub mod replay;
pub mod separator;
pub mod union_find;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::equations::{EqError, EquationSystem, Side};
use crate::terms::{iota, map_t, Branches, SNode, Signature, Term, TermEnumerator, TermError};
use union_find::{ProofForest, UnionFind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Equations(#[from] EqError),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("class {0} is not live in this state")]
    StaleClass(ClassId),
}

/// A node of the state, standing for the class it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QNode {
    Gen(String),
    Sq(Term<ClassId>),
}

impl QNode {
    /// The one-layer node this payload encodes, if it has exactly one layer.
    pub fn one_layer(&self) -> Option<SNode<ClassId>> {
        match self {
            QNode::Sq(Term::Node(n)) if n.branches.values().all(Term::is_var) => Some(SNode::new(
                n.op.clone(),
                n.branches.map(|b| match b {
                    Term::Var(c) => *c,
                    Term::Node(_) => unreachable!(),
                }),
            )),
            _ => None,
        }
    }

    pub fn leaves(&self) -> Vec<ClassId> {
        match self {
            QNode::Gen(_) => Vec::new(),
            QNode::Sq(t) => t.leaves().into_iter().copied().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Flatten {
    /// Nested terms are flattened as they are interned.
    #[default]
    Eager,
    /// Nested terms are interned as they are and flattened by `sqeta` and
    /// `sqsigma` merges during saturation.
    Lazy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QwConfig {
    pub max_rounds: usize,
    pub max_nodes: usize,
    pub flatten: Flatten,
    /// Only nodes and classes at or below this stage take part in equation
    /// matching.
    pub stage_cutoff: Option<u32>,
}

impl Default for QwConfig {
    fn default() -> Self {
        QwConfig {
            max_rounds: 64,
            max_nodes: 20_000,
            flatten: Flatten::Eager,
            stage_cutoff: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum Justification {
    SqEq {
        equation: String,
        env: Vec<ClassId>,
    },
    SqEta,
    SqSigma,
    Cong,
}

impl Justification {
    pub fn rule(&self) -> &'static str {
        match self {
            Justification::SqEq { .. } => "sqeq",
            Justification::SqEta => "sqeta",
            Justification::SqSigma => "sqsigma",
            Justification::Cong => "cong",
        }
    }
}

/// One logged merge of the nodes `a` and `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Merge {
    pub a: ClassId,
    pub b: ClassId,
    #[serde(flatten)]
    pub justification: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProofStep {
    pub from: ClassId,
    pub to: ClassId,
    /// Position of the justifying merge in the log.
    pub merge: usize,
    #[serde(flatten)]
    pub justification: Justification,
}

/// A chain of logged merges connecting two nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub steps: Vec<ProofStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum EqVerdict {
    Proved { derivation: Derivation },
    Unknown,
}

impl EqVerdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, EqVerdict::Proved { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome")]
pub enum Saturation {
    FixpointReached { rounds: usize },
    BudgetExhausted { rounds: usize, nodes: usize },
}

impl Saturation {
    pub fn is_fixpoint(&self) -> bool {
        matches!(self, Saturation::FixpointReached { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Enumeration {
    pub classes: Vec<(ClassId, Term<String>)>,
    pub saturation: Saturation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum QwEquReport {
    Ok { instances: usize },
    Unproved { equation: String, env: Vec<ClassId> },
}

type Env = Vec<Option<u32>>;

/// A mutable QW construction over one signature and equation system.
#[derive(Clone, Debug)]
pub struct QwState {
    sig: Signature,
    eqs: EquationSystem,
    config: QwConfig,
    generators: Vec<String>,
    nodes: Vec<QNode>,
    node_stage: Vec<u32>,
    class_stage: Vec<u32>,
    memo: HashMap<QNode, u32>,
    uf: UnionFind,
    forest: ProofForest,
    log: Vec<Merge>,
    applied: HashSet<(usize, Vec<u32>)>,
    lowered: Vec<bool>,
    seeds: BTreeSet<u32>,
    dirty: bool,
    reps: Option<(usize, usize, Vec<Option<Term<String>>>)>,
}

impl QwState {
    /// An empty state. A non-empty generator list builds the free algebra on
    /// those generators.
    pub fn new(
        sig: Signature,
        eqs: EquationSystem,
        config: QwConfig,
        generators: Vec<String>,
    ) -> Result<Self, EngineError> {
        eqs.validate(&sig)?;
        let mut seen = HashSet::new();
        for g in &generators {
            if !seen.insert(g) {
                return Err(EngineError::UnknownGenerator(format!("{g} (declared twice)")));
            }
        }
        Ok(QwState {
            sig,
            eqs,
            config,
            generators,
            nodes: Vec::new(),
            node_stage: Vec::new(),
            class_stage: Vec::new(),
            memo: HashMap::new(),
            uf: UnionFind::new(),
            forest: ProofForest::default(),
            log: Vec::new(),
            applied: HashSet::new(),
            lowered: Vec::new(),
            seeds: BTreeSet::new(),
            dirty: false,
            reps: None,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn equations(&self) -> &EquationSystem {
        &self.eqs
    }

    pub fn config(&self) -> &QwConfig {
        &self.config
    }

    pub fn set_stage_cutoff(&mut self, cutoff: Option<u32>) {
        self.config.stage_cutoff = cutoff;
        self.dirty = true;
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn probe(&self) -> usize {
        self.eqs.probe
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, c: ClassId) -> &QNode {
        &self.nodes[c.0 as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (ClassId, &QNode)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (ClassId(i as u32), n))
    }

    pub fn merges(&self) -> &[Merge] {
        &self.log
    }

    pub fn is_live(&self, c: ClassId) -> bool {
        (c.0 as usize) < self.nodes.len()
    }

    fn check_live(&self, c: ClassId) -> Result<(), EngineError> {
        if self.is_live(c) {
            Ok(())
        } else {
            Err(EngineError::StaleClass(c))
        }
    }

    /// The canonical node of `c`'s class.
    pub fn find(&self, c: ClassId) -> ClassId {
        ClassId(self.uf.find(c.0))
    }

    pub fn same_class(&self, a: ClassId, b: ClassId) -> bool {
        self.uf.same(a.0, b.0)
    }

    /// All classes, as their canonical nodes.
    pub fn roots(&self) -> Vec<ClassId> {
        (0..self.nodes.len() as u32)
            .filter(|&i| self.uf.find(i) == i)
            .map(ClassId)
            .collect()
    }

    /// Members of every class, keyed by canonical node.
    pub fn class_members(&self) -> BTreeMap<ClassId, Vec<ClassId>> {
        let mut out: BTreeMap<ClassId, Vec<ClassId>> = BTreeMap::new();
        for i in 0..self.nodes.len() as u32 {
            out.entry(self.find(ClassId(i))).or_default().push(ClassId(i));
        }
        out
    }

    /// Whether new nodes were added since the last completed saturation.
    pub fn is_stale(&self) -> bool {
        self.dirty
    }

    fn canonical(&self, q: &QNode) -> QNode {
        match q {
            QNode::Gen(g) => QNode::Gen(g.clone()),
            QNode::Sq(t) => QNode::Sq(map_t(&mut |c: &ClassId| self.find(*c), t)),
        }
    }

    fn stage_now(&self, q: &QNode) -> u32 {
        match q {
            QNode::Gen(_) => 1,
            QNode::Sq(t) => {
                1 + t
                    .leaves()
                    .into_iter()
                    .map(|c| self.class_stage[self.uf.find(c.0) as usize])
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    fn intern_node(&mut self, q: QNode) -> u32 {
        let key = self.canonical(&q);
        if let Some(&id) = self.memo.get(&key) {
            return id;
        }
        let id = self.uf.push();
        self.forest.push();
        let stage = self.stage_now(&key);
        self.node_stage.push(stage);
        self.class_stage.push(stage);
        self.lowered.push(false);
        self.nodes.push(key.clone());
        self.memo.insert(key, id);
        self.dirty = true;
        id
    }

    fn generator(&mut self, g: &str) -> Result<u32, EngineError> {
        if !self.generators.iter().any(|x| x == g) {
            return Err(EngineError::UnknownGenerator(g.to_string()));
        }
        Ok(self.intern_node(QNode::Gen(g.to_string())))
    }

    /// Interns a closed term whose variables name generators.
    pub fn intern_term(&mut self, t: &Term<String>) -> Result<ClassId, EngineError> {
        self.sig.check_term(t)?;
        for g in t.leaves() {
            if !self.generators.contains(g) {
                return Err(EngineError::UnknownGenerator(g.clone()));
            }
        }
        let id = match self.config.flatten {
            Flatten::Eager => self.intern_eager(t)?,
            Flatten::Lazy => {
                let mut gens = HashMap::new();
                for g in t.leaves() {
                    if !gens.contains_key(g) {
                        gens.insert(g.clone(), ClassId(self.generator(g)?));
                    }
                }
                match map_t(&mut |g: &String| gens[g], t) {
                    Term::Var(c) => c.0,
                    deep => self.intern_node(QNode::Sq(deep)),
                }
            }
        };
        Ok(ClassId(self.uf.find(id)))
    }

    fn intern_eager(&mut self, t: &Term<String>) -> Result<u32, EngineError> {
        match t {
            Term::Var(g) => self.generator(g),
            Term::Node(n) => {
                let children = n
                    .branches
                    .try_map(|b| self.intern_eager(b).map(|c| Term::Var(ClassId(c))))?;
                Ok(self.intern_node(QNode::Sq(Term::node(n.op.clone(), children))))
            }
        }
    }

    /// Interns a term over existing classes, as an equation instance.
    fn intern_class_term(&mut self, t: &Term<ClassId>) -> u32 {
        match self.config.flatten {
            Flatten::Lazy => self.intern_node(QNode::Sq(t.clone())),
            Flatten::Eager => match t {
                Term::Var(c) => c.0,
                Term::Node(n) => {
                    let children = n
                        .branches
                        .map(|b| Term::Var(ClassId(self.intern_class_term(b))));
                    self.intern_node(QNode::Sq(Term::node(n.op.clone(), children)))
                }
            },
        }
    }

    /// The algebra structure `S QW → QW`.
    pub fn qw_intro(&mut self, s: &SNode<ClassId>) -> Result<ClassId, EngineError> {
        self.sig.check_shape(&s.op, &s.branches)?;
        for c in s.branches.values() {
            self.check_live(*c)?;
        }
        let id = self.intern_node(QNode::Sq(iota(s)));
        Ok(ClassId(self.uf.find(id)))
    }

    fn union(&mut self, a: u32, b: u32, justification: Justification) -> bool {
        match self.uf.union(a, b) {
            None => false,
            Some((root, child)) => {
                let label = self.log.len();
                self.log.push(Merge {
                    a: ClassId(a),
                    b: ClassId(b),
                    justification,
                });
                self.forest.connect(a, b, label);
                let s = self.class_stage[root as usize].min(self.class_stage[child as usize]);
                self.class_stage[root as usize] = s;
                true
            }
        }
    }

    /// Saturates until nothing changes or the budget runs out.
    pub fn saturate(&mut self) -> Saturation {
        let mut rounds = 0;
        while rounds < self.config.max_rounds {
            rounds += 1;
            let (nodes, merges) = (self.nodes.len(), self.log.len());
            if self.config.flatten == Flatten::Lazy {
                self.lower();
            }
            self.rebuild();
            self.match_and_apply();
            self.rebuild();
            if self.nodes.len() > self.config.max_nodes {
                return Saturation::BudgetExhausted {
                    rounds,
                    nodes: self.nodes.len(),
                };
            }
            if self.nodes.len() == nodes && self.log.len() == merges {
                self.dirty = false;
                return Saturation::FixpointReached { rounds };
            }
        }
        Saturation::BudgetExhausted {
            rounds,
            nodes: self.nodes.len(),
        }
    }

    /// Saturates with matching restricted to stages `≤ cutoff`.
    pub fn saturate_with_cutoff(&mut self, cutoff: u32) -> Saturation {
        let saved = self.config.stage_cutoff.replace(cutoff);
        let out = self.saturate();
        self.config.stage_cutoff = saved;
        self.dirty = true;
        out
    }

    fn lower(&mut self) {
        let mut i = 0;
        while i < self.nodes.len() {
            if !self.lowered[i] {
                self.lowered[i] = true;
                match self.nodes[i].clone() {
                    QNode::Sq(Term::Var(c)) => {
                        self.union(i as u32, c.0, Justification::SqEta);
                    }
                    q @ QNode::Sq(Term::Node(_)) if q.one_layer().is_none() => {
                        let QNode::Sq(Term::Node(n)) = q else {
                            unreachable!()
                        };
                        let flat = n.branches.map(|b| match b {
                            Term::Var(c) => Term::Var(*c),
                            t => Term::Var(ClassId(self.intern_node(QNode::Sq(t.clone())))),
                        });
                        let f = self.intern_node(QNode::Sq(Term::node(n.op.clone(), flat)));
                        self.union(i as u32, f, Justification::SqSigma);
                    }
                    _ => {}
                }
            }
            i += 1;
        }
    }

    /// Restores congruence and recomputes stages.
    fn rebuild(&mut self) {
        loop {
            let mut changed = false;
            let mut memo: HashMap<QNode, u32> = HashMap::with_capacity(self.nodes.len());
            for i in 0..self.nodes.len() {
                let key = self.canonical(&self.nodes[i]);
                match memo.get(&key) {
                    Some(&m) => {
                        if self.union(i as u32, m, Justification::Cong) {
                            changed = true;
                        }
                    }
                    None => {
                        memo.insert(key, i as u32);
                    }
                }
            }
            self.memo = memo;
            if !changed {
                break;
            }
        }
        self.recompute_stages();
    }

    fn recompute_stages(&mut self) {
        let n = self.nodes.len();
        self.class_stage = vec![u32::MAX; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                let s = match &self.nodes[i] {
                    QNode::Gen(_) => 1,
                    QNode::Sq(t) => {
                        let mut m = 0;
                        for c in t.leaves() {
                            m = m.max(self.class_stage[self.uf.find(c.0) as usize]);
                        }
                        m.saturating_add(1)
                    }
                };
                self.node_stage[i] = s;
                let r = self.uf.find(i as u32) as usize;
                if s < self.class_stage[r] {
                    self.class_stage[r] = s;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn eligible(&self, node: u32) -> bool {
        self.config
            .stage_cutoff
            .map_or(true, |k| self.node_stage[node as usize] <= k)
    }

    fn match_and_apply(&mut self) {
        let mut by_op: HashMap<String, Vec<u32>> = HashMap::new();
        let mut members: HashMap<u32, Vec<u32>> = HashMap::new();
        for i in 0..self.nodes.len() as u32 {
            if !self.eligible(i) {
                continue;
            }
            if let Some(s) = self.nodes[i as usize].one_layer() {
                by_op.entry(s.op).or_default().push(i);
                members.entry(self.uf.find(i)).or_default().push(i);
            }
        }
        let free_range: Vec<u32> = self
            .roots()
            .into_iter()
            .map(|c| c.0)
            .filter(|&r| {
                self.config
                    .stage_cutoff
                    .map_or(true, |k| self.class_stage[r as usize] <= k)
            })
            .collect();
        let mut instances: Vec<(usize, Vec<u32>)> = Vec::new();
        let budget = self.config.max_nodes.saturating_sub(self.nodes.len());
        for (ei, e) in self.eqs.eqs.iter().enumerate() {
            for side in [Side::Lhs, Side::Rhs] {
                let Term::Node(pat) = e.side(side) else {
                    continue;
                };
                let Some(cands) = by_op.get(&pat.op) else {
                    continue;
                };
                for &n in cands {
                    let envs = self.match_node(pat, n, vec![None; e.vars], &members);
                    for env in envs {
                        for full in complete_env(&env, &free_range, budget) {
                            let key = (ei, full);
                            if !self.applied.contains(&key) {
                                self.applied.insert(key.clone());
                                instances.push(key);
                            }
                        }
                    }
                }
            }
        }
        for (ei, env) in instances {
            if self.nodes.len() > self.config.max_nodes {
                break;
            }
            let e = self.eqs.eqs[ei].clone();
            let rho: Vec<ClassId> = env.iter().map(|&c| ClassId(c)).collect();
            let l = self.intern_class_term(&e.instantiate(Side::Lhs, &rho));
            let r = self.intern_class_term(&e.instantiate(Side::Rhs, &rho));
            self.union(
                l,
                r,
                Justification::SqEq {
                    equation: e.name.clone(),
                    env: rho,
                },
            );
        }
    }

    fn match_node(
        &self,
        pat: &SNode<Term<usize>>,
        node: u32,
        env: Env,
        members: &HashMap<u32, Vec<u32>>,
    ) -> Vec<Env> {
        let Some(s) = self.nodes[node as usize].one_layer() else {
            return Vec::new();
        };
        if s.op != pat.op {
            return Vec::new();
        }
        let Some(pairs) = branch_pairs(&pat.branches, &s.branches) else {
            return Vec::new();
        };
        self.match_pairs(&pairs, env, members)
    }

    fn match_pairs(
        &self,
        pairs: &[(&Term<usize>, ClassId)],
        env: Env,
        members: &HashMap<u32, Vec<u32>>,
    ) -> Vec<Env> {
        let Some(((p, c), rest)) = pairs.split_first() else {
            return vec![env];
        };
        let mut out = Vec::new();
        for e in self.match_class(p, *c, env, members) {
            out.extend(self.match_pairs(rest, e, members));
        }
        out
    }

    fn match_class(
        &self,
        p: &Term<usize>,
        c: ClassId,
        mut env: Env,
        members: &HashMap<u32, Vec<u32>>,
    ) -> Vec<Env> {
        let r = self.uf.find(c.0);
        match p {
            Term::Var(v) => match env[*v] {
                None => {
                    env[*v] = Some(r);
                    vec![env]
                }
                Some(x) if x == r => vec![env],
                Some(_) => Vec::new(),
            },
            Term::Node(pat) => members
                .get(&r)
                .into_iter()
                .flatten()
                .flat_map(|&m| self.match_node(pat, m, env.clone(), members))
                .collect(),
        }
    }

    /// Decides equality of two classes, saturating first if the state is
    /// stale. `Unknown` never claims distinctness.
    pub fn decide_eq(&mut self, a: ClassId, b: ClassId) -> Result<EqVerdict, EngineError> {
        self.check_live(a)?;
        self.check_live(b)?;
        if self.dirty {
            self.saturate();
        }
        Ok(match self.derivation(a, b) {
            Some(derivation) => EqVerdict::Proved { derivation },
            None => EqVerdict::Unknown,
        })
    }

    /// The proof-forest path between two nodes of the same class.
    pub fn derivation(&self, a: ClassId, b: ClassId) -> Option<Derivation> {
        let steps = self.forest.explain(a.0, b.0)?;
        Some(Derivation {
            steps: steps
                .into_iter()
                .map(|(from, to, label)| ProofStep {
                    from: ClassId(from),
                    to: ClassId(to),
                    merge: label,
                    justification: self.log[label].justification.clone(),
                })
                .collect(),
        })
    }

    pub fn stage_of(&self, c: ClassId) -> u32 {
        self.class_stage[self.uf.find(c.0) as usize]
    }

    pub fn node_stage(&self, c: ClassId) -> u32 {
        self.node_stage[c.0 as usize]
    }

    /// Coercion to a later stage. Stages only bound nesting, so the class
    /// itself is returned.
    pub fn coerce(&self, c: ClassId, _stage: u32) -> ClassId {
        c
    }

    /// The member of least stage (smallest node on ties).
    pub fn min_stage_node(&self, c: ClassId) -> ClassId {
        let r = self.uf.find(c.0);
        (0..self.nodes.len() as u32)
            .filter(|&i| self.uf.find(i) == r)
            .min_by_key(|&i| (self.node_stage[i as usize], i))
            .map(ClassId)
            .expect("every class has a member")
    }

    fn compute_representatives(&mut self) -> &[Option<Term<String>>] {
        let stamp = (self.nodes.len(), self.log.len());
        if let Some((n, m, _)) = &self.reps {
            if (*n, *m) == stamp {
                return &self.reps.as_ref().unwrap().2;
            }
        }
        let n = self.nodes.len();
        let mut best: Vec<Option<Term<String>>> = vec![None; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                let cand = match &self.nodes[i] {
                    QNode::Gen(g) => Some(Term::Var(g.clone())),
                    QNode::Sq(t) => crate::terms::subst(t, &mut |c: &ClassId| {
                        best[self.uf.find(c.0) as usize].clone()
                    })
                    .ok(),
                };
                let Some(cand) = cand else { continue };
                let r = self.uf.find(i as u32) as usize;
                if best[r].as_ref().map_or(true, |b| cand < *b) {
                    best[r] = Some(cand);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.reps = Some((stamp.0, stamp.1, best));
        &self.reps.as_ref().unwrap().2
    }

    /// The least member of a class under the canonical term order.
    pub fn representative(&mut self, c: ClassId) -> Term<String> {
        let r = self.uf.find(c.0) as usize;
        self.compute_representatives()[r]
            .clone()
            .expect("every class denotes a closed term")
    }

    /// Interns every closed term of size at most `size_bound`, saturates and
    /// lists the classes reached together with their representatives.
    pub fn enumerate(&mut self, size_bound: usize) -> Result<Enumeration, EngineError> {
        let terms = TermEnumerator::new(&self.sig, self.generators.clone(), self.eqs.probe)
            .up_to(size_bound);
        for t in &terms {
            let id = self.intern_term(t)?;
            self.seeds.insert(id.0);
        }
        let saturation = self.saturate();
        Ok(Enumeration {
            classes: self.seed_classes(),
            saturation,
        })
    }

    /// Classes of every term interned by [`QwState::enumerate`], ordered by
    /// representative.
    pub fn seed_classes(&mut self) -> Vec<(ClassId, Term<String>)> {
        let roots: BTreeSet<u32> = self.seeds.iter().map(|&s| self.uf.find(s)).collect();
        let mut out: Vec<(ClassId, Term<String>)> = roots
            .into_iter()
            .map(|r| (ClassId(r), self.representative(ClassId(r))))
            .collect();
        out.sort_by(|a, b| a.1.cmp(&b.1));
        out
    }

    /// Checks that every equation holds in the carrier: for each environment
    /// drawn from `classes`, the two instantiated sides are proved equal.
    pub fn check_qwequ(
        &mut self,
        classes: &[ClassId],
        budget: usize,
    ) -> Result<QwEquReport, EngineError> {
        let m = classes.len();
        let needed = crate::equations::env_count(&self.eqs, m);
        if needed.map_or(true, |n| n > budget) {
            return Err(EqError::BudgetExceeded {
                needed: needed.unwrap_or(usize::MAX),
                budget,
            }
            .into());
        }
        let eqs = self.eqs.clone();
        let mut pending = Vec::new();
        for e in eqs.ordered() {
            crate::equations::for_each_env(e.vars, m, Default::default(), |idx| {
                let rho: Vec<ClassId> = idx.iter().map(|&i| classes[i]).collect();
                pending.push((e.clone(), rho));
                true
            });
        }
        let mut sides = Vec::with_capacity(pending.len());
        for (e, rho) in &pending {
            let l = self.intern_class_term(&e.instantiate(Side::Lhs, rho));
            let r = self.intern_class_term(&e.instantiate(Side::Rhs, rho));
            sides.push((l, r));
        }
        self.saturate();
        for ((e, rho), (l, r)) in pending.iter().zip(sides) {
            if !self.same_class(ClassId(l), ClassId(r)) {
                return Ok(QwEquReport::Unproved {
                    equation: e.name.clone(),
                    env: rho.clone(),
                });
            }
        }
        Ok(QwEquReport::Ok {
            instances: pending.len(),
        })
    }

    /// A JSON view of the state: classes, nodes and the merge log.
    pub fn snapshot(&mut self) -> serde_json::Value {
        let members = self.class_members();
        let classes: Vec<serde_json::Value> = members
            .iter()
            .map(|(root, ms)| {
                json!({
                    "id": root,
                    "stage": self.stage_of(*root),
                    "representative": self.representative(*root),
                    "members": ms,
                })
            })
            .collect();
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| json!({"id": i, "stage": self.node_stage[i], "node": n}))
            .collect();
        json!({
            "classes": classes,
            "nodes": nodes,
            "merges": self.log,
        })
    }
}

/// Pairs up pattern branches with node branches index by index. ω maps are
/// compared on every table index of either side and on the defaults.
fn branch_pairs<'a>(
    pat: &'a Branches<Term<usize>>,
    node: &Branches<ClassId>,
) -> Option<Vec<(&'a Term<usize>, ClassId)>> {
    match (pat, node) {
        (Branches::Finite(p), Branches::Finite(n)) if p.len() == n.len() => {
            Some(p.iter().zip(n.iter().copied()).collect())
        }
        (
            Branches::Omega {
                table: pt,
                default: pd,
            },
            Branches::Omega {
                table: nt,
                default: nd,
            },
        ) => {
            let keys: BTreeSet<usize> = pt.keys().chain(nt.keys()).copied().collect();
            let mut out: Vec<(&Term<usize>, ClassId)> = keys
                .into_iter()
                .map(|i| (pat.get(i).unwrap(), *node.get(i).unwrap()))
                .collect();
            out.push((&**pd, **nd));
            Some(out)
        }
        _ => None,
    }
}

/// Extends a partial environment in every way over `range`, stopping after
/// `limit` results.
fn complete_env(env: &Env, range: &[u32], limit: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![Vec::with_capacity(env.len())];
    for slot in env {
        match slot {
            Some(c) => out.iter_mut().for_each(|e| e.push(*c)),
            None => {
                let mut next = Vec::new();
                'outer: for e in &out {
                    for &c in range {
                        if next.len() >= limit.max(1) {
                            break 'outer;
                        }
                        let mut e2 = e.clone();
                        e2.push(c);
                        next.push(e2);
                    }
                }
                out = next;
            }
        }
    }
    out
}
