//! Strict positivity and the classification flags.

use serde::Serialize;

use super::ast::{type_key, Instance, QitDecl, TypeScheme};
use super::SchemaError;

/// Rejects any function type whose domain mentions the type being declared.
pub fn check_positivity(decl: &QitDecl) -> Result<(), SchemaError> {
    for (owner, t) in decl.telescopes() {
        for e in &t.entries {
            positive(owner, e.binder.as_ref(), &e.ty)?;
        }
    }
    Ok(())
}

fn positive(owner: &str, binder: Option<&String>, ty: &TypeScheme) -> Result<(), SchemaError> {
    match ty {
        TypeScheme::Pi {
            domain, body, span, ..
        } => {
            if domain.mentions_self() {
                return Err(SchemaError::Positivity {
                    constructor: owner.to_string(),
                    binder: binder.cloned(),
                    span: *span,
                });
            }
            positive(owner, binder, body)
        }
        TypeScheme::Sigma { first, second, .. } => {
            positive(owner, binder, first)?;
            positive(owner, binder, second)
        }
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    Finite(usize),
    Countable,
    Unknown,
}

impl Cardinality {
    pub fn is_finite(self) -> bool {
        matches!(self, Cardinality::Finite(_))
    }
}

const NATURALS: [&str; 3] = ["Nat", "ℕ", "nat"];

/// The declared size of a constant type.
pub fn cardinality(decl: &QitDecl, ty: &TypeScheme) -> Cardinality {
    let key = type_key(ty, &decl.name);
    for i in &decl.instances {
        match i {
            Instance::Finite { ty, values } if type_key(ty, &decl.name) == key => {
                return Cardinality::Finite(values.len())
            }
            Instance::Countable { ty } if type_key(ty, &decl.name) == key => return Cardinality::Countable,
            _ => {}
        }
    }
    match ty {
        TypeScheme::Constant { name, args } if args.is_empty() && NATURALS.contains(&name.as_str()) => {
            Cardinality::Countable
        }
        TypeScheme::Pi { domain, body, .. } if !ty.mentions_self() => {
            match (cardinality(decl, domain), cardinality(decl, body)) {
                (Cardinality::Finite(a), Cardinality::Finite(b)) => {
                    u32::try_from(a).ok().and_then(|a| b.checked_pow(a)).map_or(Cardinality::Countable, Cardinality::Finite)
                }
                (Cardinality::Unknown, _) | (_, Cardinality::Unknown) => Cardinality::Unknown,
                _ => Cardinality::Countable,
            }
        }
        TypeScheme::Sigma { first, second, .. } if !ty.mentions_self() => {
            match (cardinality(decl, first), cardinality(decl, second)) {
                (Cardinality::Finite(a), Cardinality::Finite(b)) => Cardinality::Finite(a * b),
                (Cardinality::Unknown, _) | (_, Cardinality::Unknown) => Cardinality::Unknown,
                _ => Cardinality::Countable,
            }
        }
        _ => Cardinality::Unknown,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub recursive: bool,
    pub conditional: bool,
    pub finitary: bool,
}

/// Recursive: some equality constructor takes an argument of the declared
/// type. Conditional: some telescope carries an equation premise.
/// Finitary: every constant type in a telescope is declared finite.
pub fn classify(decl: &QitDecl) -> Classification {
    let recursive = decl
        .eqs
        .iter()
        .any(|e| e.telescope.entries.iter().any(|x| x.ty.mentions_self()));
    let conditional = decl
        .telescopes()
        .any(|(_, t)| t.entries.iter().any(|x| matches!(x.ty, TypeScheme::Condition { .. })));
    let finitary = decl
        .telescopes()
        .all(|(_, t)| t.entries.iter().all(|x| constants_finite(decl, &x.ty)));
    Classification {
        recursive,
        conditional,
        finitary,
    }
}

fn constants_finite(decl: &QitDecl, ty: &TypeScheme) -> bool {
    match ty {
        TypeScheme::SelfY | TypeScheme::Condition { .. } => true,
        TypeScheme::Constant { args, .. } if !args.is_empty() => true,
        TypeScheme::Constant { .. } => cardinality(decl, ty).is_finite(),
        TypeScheme::Pi { domain, body, .. } => {
            constants_finite(decl, domain) && constants_finite(decl, body)
        }
        TypeScheme::Sigma { first, second, .. } => {
            constants_finite(decl, first) && constants_finite(decl, second)
        }
    }
}
