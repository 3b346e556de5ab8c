//! From declarations to (Σ, ε), plus the free-algebra transform and the
//! translations of W-suspensions and W-types with reductions.

use std::collections::HashMap;

use serde::Serialize;

use super::ast::{type_key, Instance, Pattern, QitDecl, Telescope, TypeScheme};
use super::check::{cardinality, check_positivity, classify, Cardinality, Classification};
use super::SchemaError;
use crate::encodings::check_perm;
use crate::equations::{mk_sys_eq, Equation, EquationSystem};
use crate::terms::{cartesian, Arity, Branches, OpDecl, Signature, Term, TermError};

#[derive(Clone, Copy, Debug, Default)]
pub struct ElabOptions {
    /// Overrides the declaration's `with probe` clause.
    pub probe: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Elaborated {
    pub signature: Signature,
    pub equations: EquationSystem,
    pub generators: Vec<String>,
    pub classification: Classification,
}

const DEFAULT_OMEGA_PROBE: usize = 2;

/// How a telescope entry is used.
#[derive(Clone, Debug)]
enum Role {
    Param(Vec<String>),
    SideCondition,
    /// A self-typed argument with this many positions, or ℕ-many.
    SelfArg(Arity),
}

struct Roles {
    roles: Vec<(Option<String>, Role)>,
}

impl Roles {
    fn of(decl: &QitDecl, owner: &str, t: &Telescope) -> Result<Self, SchemaError> {
        let roles = t
            .entries
            .iter()
            .map(|e| Ok((e.binder.clone(), role(decl, owner, &e.ty)?)))
            .collect::<Result<_, SchemaError>>()?;
        Ok(Roles { roles })
    }

    fn params(&self) -> impl Iterator<Item = (&Option<String>, &Vec<String>)> {
        self.roles.iter().filter_map(|(b, r)| match r {
            Role::Param(vs) => Some((b, vs)),
            _ => None,
        })
    }

    fn self_args(&self) -> impl Iterator<Item = (&Option<String>, Arity)> {
        self.roles.iter().filter_map(|(b, r)| match r {
            Role::SelfArg(a) => Some((b, *a)),
            _ => None,
        })
    }

    /// The entries a pattern application supplies, in order.
    fn explicit(&self) -> impl Iterator<Item = &Role> {
        self.roles
            .iter()
            .map(|(_, r)| r)
            .filter(|r| !matches!(r, Role::SideCondition))
    }

    fn instances(&self) -> Vec<Vec<String>> {
        let lists: Vec<&[String]> = self.params().map(|(_, v)| v.as_slice()).collect();
        cartesian(&lists)
    }
}

fn role(decl: &QitDecl, owner: &str, ty: &TypeScheme) -> Result<Role, SchemaError> {
    let unsupported = |reason: &str| SchemaError::UnsupportedShape {
        constructor: owner.to_string(),
        reason: reason.to_string(),
    };
    match ty {
        TypeScheme::SelfY => Ok(Role::SelfArg(Arity::Finite(1))),
        TypeScheme::Condition { .. } => Err(SchemaError::ConditionalUnsupported {
            constructor: owner.to_string(),
        }),
        TypeScheme::Constant { args, .. } if !args.is_empty() => Ok(Role::SideCondition),
        TypeScheme::Pi { domain, body, .. } if **body == TypeScheme::SelfY => {
            match cardinality(decl, domain) {
                Cardinality::Finite(n) => Ok(Role::SelfArg(Arity::Finite(n))),
                Cardinality::Countable => Ok(Role::SelfArg(Arity::Omega)),
                Cardinality::Unknown => Err(SchemaError::NonFinitaryConstant {
                    constructor: owner.to_string(),
                    ty: type_key(domain, &decl.name),
                }),
            }
        }
        _ if ty.mentions_self() => Err(unsupported(
            "arguments of the declared type must have the form Y or A -> Y",
        )),
        _ => {
            let key = type_key(ty, &decl.name);
            decl.instances
                .iter()
                .find_map(|i| match i {
                    Instance::Finite { ty, values } if type_key(ty, &decl.name) == key => {
                        Some(Role::Param(values.clone()))
                    }
                    _ => None,
                })
                .ok_or(SchemaError::NonFinitaryConstant {
                    constructor: owner.to_string(),
                    ty: key,
                })
        }
    }
}

fn instance_name(name: &str, values: &[String]) -> String {
    if values.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", values.join(","))
    }
}

fn total_arity(owner: &str, roles: &Roles) -> Result<Arity, SchemaError> {
    let args: Vec<Arity> = roles.self_args().map(|(_, a)| a).collect();
    match args.as_slice() {
        [Arity::Omega] => Ok(Arity::Omega),
        _ if args.contains(&Arity::Omega) => Err(SchemaError::UnsupportedShape {
            constructor: owner.to_string(),
            reason: "an ℕ-indexed argument must be the only argument of the declared type".into(),
        }),
        _ => Ok(Arity::Finite(
            args.iter()
                .map(|a| match a {
                    Arity::Finite(n) => *n,
                    Arity::Omega => 0,
                })
                .sum(),
        )),
    }
}

fn parse_table(v: &str) -> Option<Vec<usize>> {
    let inner = v.strip_prefix('[')?.strip_suffix(']')?;
    if inner.is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(|s| s.trim().parse().ok()).collect()
}

/// Translation of one equality constructor instance.
struct EqTranslator<'a> {
    owner: &'a str,
    elems: &'a HashMap<String, Roles>,
    params: HashMap<String, String>,
    /// Self-typed binders: first variable and shape.
    selfs: HashMap<String, (usize, Arity)>,
    probe: usize,
}

impl EqTranslator<'_> {
    fn fail<T>(&self, reason: String) -> Result<T, SchemaError> {
        Err(SchemaError::UnsupportedShape {
            constructor: self.owner.to_string(),
            reason,
        })
    }

    fn term(&self, p: &Pattern) -> Result<Term<usize>, SchemaError> {
        match p {
            Pattern::Var { name, .. } => match self.selfs.get(name) {
                Some(&(v, Arity::Finite(1))) => Ok(Term::Var(v)),
                _ => self.fail(format!("`{name}` is not an element of the declared type")),
            },
            Pattern::Compose { fun, .. } => self.fail(format!("`{fun}` is a function, not an element")),
            Pattern::Con { name, args, .. } => {
                let roles = &self.elems[name];
                let expected: Vec<&Role> = roles.explicit().collect();
                if expected.len() != args.len() {
                    return Err(TermError::ArityMismatch {
                        op: name.clone(),
                        expected: expected.len().to_string(),
                        found: args.len().to_string(),
                    }
                    .into());
                }
                let mut values = Vec::new();
                let mut branches = Vec::new();
                let mut omega = None;
                for (role, arg) in expected.into_iter().zip(args) {
                    match role {
                        Role::Param(allowed) => values.push(self.param_value(arg, allowed)?),
                        Role::SideCondition => unreachable!("side conditions take no argument"),
                        Role::SelfArg(Arity::Finite(1)) => branches.push(self.term(arg)?),
                        Role::SelfArg(Arity::Finite(n)) => branches.extend(self.function(arg, Arity::Finite(*n))?),
                        Role::SelfArg(Arity::Omega) => omega = Some(self.omega(arg)?),
                    }
                }
                let op = instance_name(name, &values);
                Ok(match omega {
                    Some(b) => Term::node(op, b),
                    None => Term::app(op, branches),
                })
            }
        }
    }

    fn param_value(&self, arg: &Pattern, allowed: &[String]) -> Result<String, SchemaError> {
        let Pattern::Var { name, .. } = arg else {
            return self.fail("parameters must be binders or listed values".into());
        };
        let v = self.params.get(name).unwrap_or(name);
        if allowed.contains(v) {
            Ok(v.clone())
        } else {
            self.fail(format!("`{v}` is not a value of the parameter type"))
        }
    }

    /// The binder and permutation table of a function argument.
    fn function_parts(&self, arg: &Pattern, shape: Arity) -> Result<(usize, Option<Vec<usize>>), SchemaError> {
        let (fun, perm) = match arg {
            Pattern::Var { name, .. } => (name, None),
            Pattern::Compose { fun, perm, .. } => (fun, Some(perm)),
            Pattern::Con { name, .. } => {
                return self.fail(format!("`{name}` applied where a function is expected"))
            }
        };
        let Some(&(start, a)) = self.selfs.get(fun) else {
            return self.fail(format!("`{fun}` is not a function into the declared type"));
        };
        if a != shape {
            return self.fail(format!("`{fun}` has arity {a}, expected {shape}"));
        }
        let table = match perm {
            None => None,
            Some(p) => {
                let raw = self.params.get(p).map_or(p.as_str(), String::as_str);
                let Some(t) = parse_table(raw) else {
                    return self.fail(format!("`{raw}` is not a table"));
                };
                match shape {
                    Arity::Omega => check_perm(&t, self.probe)?,
                    Arity::Finite(n) => {
                        check_perm(&t, n)?;
                    }
                }
                Some(t)
            }
        };
        Ok((start, table))
    }

    fn function(&self, arg: &Pattern, shape: Arity) -> Result<Vec<Term<usize>>, SchemaError> {
        let Arity::Finite(n) = shape else { unreachable!() };
        let (start, table) = self.function_parts(arg, shape)?;
        let at = |i: usize| table.as_ref().and_then(|t| t.get(i).copied()).unwrap_or(i);
        Ok((0..n).map(|i| Term::Var(start + at(i))).collect())
    }

    fn omega(&self, arg: &Pattern) -> Result<Branches<Term<usize>>, SchemaError> {
        let (start, table) = self.function_parts(arg, Arity::Omega)?;
        let at = |i: usize| table.as_ref().and_then(|t| t.get(i).copied()).unwrap_or(i);
        Ok(Branches::omega(
            (0..self.probe).map(|i| (i, Term::Var(start + at(i)))),
            Term::Var(start + self.probe),
        ))
    }
}

/// Elaborates an equational declaration. Element constructors become one
/// operator per parameter instance, named `c(v1,…)`; equality constructors
/// one equation per instance, over the self-typed binders.
pub fn elaborate(decl: &QitDecl, opts: ElabOptions) -> Result<Elaborated, SchemaError> {
    check_positivity(decl)?;
    let classification = classify(decl);
    if classification.conditional {
        let owner = decl
            .eqs
            .iter()
            .find(|e| e.telescope.entries.iter().any(|x| matches!(x.ty, TypeScheme::Condition { .. })))
            .map(|e| e.name.clone())
            .unwrap_or_default();
        return Err(SchemaError::ConditionalUnsupported { constructor: owner });
    }
    let mut elems = HashMap::new();
    let mut ops = Vec::new();
    let mut has_omega = false;
    for c in &decl.elems {
        let roles = Roles::of(decl, &c.name, &c.telescope)?;
        let arity = total_arity(&c.name, &roles)?;
        has_omega |= arity == Arity::Omega;
        for values in roles.instances() {
            ops.push(OpDecl {
                name: instance_name(&c.name, &values),
                arity,
            });
        }
        elems.insert(c.name.clone(), roles);
    }
    let signature = Signature::new(ops)?;
    let declared = decl.instances.iter().find_map(|i| match i {
        Instance::Probe { depth } => Some(*depth),
        _ => None,
    });
    let probe = opts
        .probe
        .or(declared)
        .unwrap_or(if has_omega { DEFAULT_OMEGA_PROBE } else { 0 });
    let mut raw = Vec::new();
    for e in &decl.eqs {
        let roles = Roles::of(decl, &e.name, &e.telescope)?;
        let mut selfs = HashMap::new();
        let mut vars = 0;
        for (b, a) in roles.self_args() {
            if let Some(b) = b {
                selfs.insert(b.clone(), (vars, a));
            }
            vars += a.probe_width(probe);
        }
        let binders: Vec<&Option<String>> = roles.params().map(|(b, _)| b).collect();
        for values in roles.instances() {
            let params = binders
                .iter()
                .zip(&values)
                .filter_map(|(b, v)| b.as_ref().map(|b| (b.clone(), v.clone())))
                .collect();
            let t = EqTranslator {
                owner: &e.name,
                elems: &elems,
                params,
                selfs: selfs.clone(),
                probe,
            };
            raw.push(Equation {
                name: instance_name(&e.name, &values),
                vars,
                lhs: t.term(&e.lhs)?,
                rhs: t.term(&e.rhs)?,
            });
        }
    }
    let equations = mk_sys_eq(&signature, raw, probe)?;
    let generators = decl
        .instances
        .iter()
        .find_map(|i| match i {
            Instance::Generators { names } => Some(names.clone()),
            _ => None,
        })
        .unwrap_or_default();
    Ok(Elaborated {
        signature,
        equations,
        generators,
        classification,
    })
}

/// Adds each generator as a nullary operator in front of `sig`. Equations
/// carry over unchanged, since substituting variables for themselves is the
/// identity.
pub fn freeify(
    sig: &Signature,
    eqs: &EquationSystem,
    generators: &[String],
) -> Result<(Signature, EquationSystem), SchemaError> {
    let mut ops: Vec<OpDecl> = Vec::new();
    for g in generators {
        if sig.contains(g) || ops.iter().any(|o| &o.name == g) {
            return Err(SchemaError::NameClash(g.clone()));
        }
        ops.push(OpDecl {
            name: g.clone(),
            arity: Arity::Finite(0),
        });
    }
    ops.extend(sig.ops().iter().cloned());
    let sig_x = Signature::new(ops)?;
    let eqs_x = mk_sys_eq(&sig_x, eqs.eqs.clone(), eqs.probe)?;
    Ok((sig_x, eqs_x))
}

fn layer(op: &str, arity: Arity, offset: usize, probe: usize) -> Term<usize> {
    match arity {
        Arity::Finite(n) => Term::app(op, (0..n).map(|i| Term::Var(offset + i)).collect()),
        Arity::Omega => Term::node(
            op,
            Branches::omega((0..probe).map(|i| (i, Term::Var(offset + i))), Term::Var(offset + probe)),
        ),
    }
}

/// A W-suspension: shapes `a` with arities, and for each equation name a
/// pair of shapes whose layers are identified. The two layers take
/// disjoint variables.
pub fn from_w_suspension(
    a: &[(String, Arity)],
    c: &[(String, String, String)],
    probe: usize,
) -> Result<(Signature, EquationSystem), SchemaError> {
    let sig = Signature::from_pairs(a.iter().cloned())?;
    let arity = |s: &str| sig.arity(s).ok_or_else(|| TermError::UnknownOperator(s.to_string()));
    let mut raw = Vec::new();
    for (name, l, r) in c {
        let (la, ra) = (arity(l)?, arity(r)?);
        let n = la.probe_width(probe);
        raw.push(Equation {
            name: name.clone(),
            vars: n + ra.probe_width(probe),
            lhs: layer(l, la, 0, probe),
            rhs: layer(r, ra, n, probe),
        });
    }
    let eqs = mk_sys_eq(&sig, raw, probe)?;
    Ok((sig, eqs))
}

/// A W-type with reductions: each shape `y` is identified with its
/// `reduction[y]`-th subtree.
pub fn from_w_reductions(
    ys: &[(String, Arity)],
    reduction: &[(String, Option<usize>)],
    probe: usize,
) -> Result<(Signature, EquationSystem), SchemaError> {
    let sig = Signature::from_pairs(ys.iter().cloned())?;
    let mut raw = Vec::new();
    for (y, arity) in ys {
        let partial = |reason: &str| SchemaError::PartialReduction {
            op: y.clone(),
            reason: reason.to_string(),
        };
        let r = reduction
            .iter()
            .find(|(n, _)| n == y)
            .and_then(|(_, r)| *r)
            .ok_or_else(|| partial("no reduction given"))?;
        match arity {
            Arity::Finite(0) => return Err(partial("it has no positions")),
            Arity::Finite(n) if r >= *n => return Err(partial("position out of range")),
            Arity::Omega if r >= probe => return Err(partial("position beyond the probe depth")),
            _ => {}
        }
        raw.push(Equation {
            name: format!("red({y})"),
            vars: arity.probe_width(probe),
            lhs: layer(y, *arity, 0, probe),
            rhs: Term::Var(r),
        });
    }
    let eqs = mk_sys_eq(&sig, raw, probe)?;
    Ok((sig, eqs))
}
