//! Syntax trees for QIT declarations and their canonical printing.

use std::fmt;

use serde::Serialize;

/// A source position. Positions never take part in equality, so trees
/// parsed from differently laid out text compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum TypeScheme {
    Pi {
        binder: Option<String>,
        domain: Box<TypeScheme>,
        body: Box<TypeScheme>,
        span: Span,
    },
    Sigma {
        binder: Option<String>,
        first: Box<TypeScheme>,
        second: Box<TypeScheme>,
    },
    /// A parameter type, possibly applied to earlier binders. Applied
    /// constants act as side conditions.
    Constant { name: String, args: Vec<String> },
    SelfY,
    Condition { lhs: Pattern, rhs: Pattern },
}

impl TypeScheme {
    pub fn constant(name: impl Into<String>) -> Self {
        TypeScheme::Constant {
            name: name.into(),
            args: Vec::new(),
        }
    }

    pub fn pi(domain: TypeScheme, body: TypeScheme) -> Self {
        TypeScheme::Pi {
            binder: None,
            domain: Box::new(domain),
            body: Box::new(body),
            span: Span::default(),
        }
    }

    /// Whether the self type occurs anywhere inside.
    pub fn mentions_self(&self) -> bool {
        match self {
            TypeScheme::SelfY => true,
            TypeScheme::Pi { domain, body, .. } => domain.mentions_self() || body.mentions_self(),
            TypeScheme::Sigma { first, second, .. } => first.mentions_self() || second.mentions_self(),
            TypeScheme::Constant { .. } | TypeScheme::Condition { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Pattern {
    Con { name: String, args: Vec<Pattern>, span: Span },
    Var { name: String, span: Span },
    /// A function-typed binder precomposed with a parameter, `g ∘ f`.
    Compose { fun: String, perm: String, span: Span },
}

impl Pattern {
    pub fn span(&self) -> Span {
        match self {
            Pattern::Con { span, .. } | Pattern::Var { span, .. } | Pattern::Compose { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub binder: Option<String>,
    pub ty: TypeScheme,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Telescope {
    pub entries: Vec<Entry>,
}

impl Telescope {
    pub fn binder(&self, name: &str) -> Option<(usize, &Entry)> {
        self.entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.binder.as_deref() == Some(name))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElemCon {
    pub name: String,
    pub telescope: Telescope,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EqCon {
    pub name: String,
    pub telescope: Telescope,
    pub lhs: Pattern,
    pub rhs: Pattern,
    pub span: Span,
}

/// An instantiation clause: `with X = {a, b}`, `with N = nat`,
/// `with probe = 2` or `with generators = {v}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Instance {
    Finite { ty: TypeScheme, values: Vec<String> },
    Countable { ty: TypeScheme },
    Probe { depth: usize },
    Generators { names: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QitDecl {
    pub name: String,
    pub elems: Vec<ElemCon>,
    pub eqs: Vec<EqCon>,
    pub instances: Vec<Instance>,
}

impl QitDecl {
    pub fn constructor_names(&self) -> impl Iterator<Item = &str> {
        self.elems
            .iter()
            .map(|c| c.name.as_str())
            .chain(self.eqs.iter().map(|e| e.name.as_str()))
    }

    pub fn elem(&self, name: &str) -> Option<&ElemCon> {
        self.elems.iter().find(|c| c.name == name)
    }

    /// Every telescope, tagged with its constructor name.
    pub fn telescopes(&self) -> impl Iterator<Item = (&str, &Telescope)> {
        self.elems
            .iter()
            .map(|c| (c.name.as_str(), &c.telescope))
            .chain(self.eqs.iter().map(|e| (e.name.as_str(), &e.telescope)))
    }
}

struct Ty<'a>(&'a TypeScheme, &'a str);

impl Ty<'_> {
    fn atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            TypeScheme::SelfY => write!(f, "{}", self.1),
            TypeScheme::Constant { args, .. } if args.is_empty() => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

impl fmt::Display for Ty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let own = self.1;
        match self.0 {
            TypeScheme::SelfY => write!(f, "{own}"),
            TypeScheme::Constant { name, args } => {
                write!(f, "{name}")?;
                args.iter().try_for_each(|a| write!(f, " {a}"))
            }
            TypeScheme::Condition { lhs, rhs } => write!(f, "{lhs} == {rhs}"),
            TypeScheme::Pi {
                binder, domain, body, ..
            } => {
                match binder {
                    Some(x) => write!(f, "({x} : {}) -> ", Ty(domain, own))?,
                    None if matches!(**domain, TypeScheme::Pi { .. } | TypeScheme::Condition { .. }) => {
                        write!(f, "({}) -> ", Ty(domain, own))?
                    }
                    None => write!(f, "{} -> ", Ty(domain, own))?,
                }
                write!(f, "{}", Ty(body, own))
            }
            TypeScheme::Sigma {
                binder,
                first,
                second,
            } => {
                match binder {
                    Some(x) => write!(f, "({x} : {}) * ", Ty(first, own))?,
                    None => {
                        Ty(first, own).atom(f)?;
                        write!(f, " * ")?
                    }
                }
                match **second {
                    TypeScheme::Sigma { binder: None, .. } => write!(f, "{}", Ty(second, own)),
                    _ => Ty(second, own).atom(f),
                }
            }
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var { name, .. } => write!(f, "{name}"),
            Pattern::Compose { fun, perm, .. } => write!(f, "{fun} . {perm}"),
            Pattern::Con { name, args, .. } => {
                write!(f, "{name}")?;
                for a in args {
                    match a {
                        Pattern::Con { args, .. } if !args.is_empty() => write!(f, " ({a})")?,
                        Pattern::Compose { .. } => write!(f, " ({a})")?,
                        _ => write!(f, " {a}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

fn write_telescope(f: &mut fmt::Formatter<'_>, t: &Telescope, own: &str) -> fmt::Result {
    for e in &t.entries {
        match &e.binder {
            Some(x) => write!(f, "({x} : {}) -> ", Ty(&e.ty, own))?,
            None => match e.ty {
                TypeScheme::Pi { .. } | TypeScheme::Condition { .. } => write!(f, "({}) -> ", Ty(&e.ty, own))?,
                _ => write!(f, "{} -> ", Ty(&e.ty, own))?,
            },
        }
    }
    Ok(())
}

fn write_values(f: &mut fmt::Formatter<'_>, values: &[String]) -> fmt::Result {
    write!(f, "{{{}}}", values.join(", "))
}

impl fmt::Display for QitDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let own = self.name.as_str();
        writeln!(f, "data {own} : Set where")?;
        for c in &self.elems {
            write!(f, "  {} : ", c.name)?;
            write_telescope(f, &c.telescope, own)?;
            writeln!(f, "{own}")?;
        }
        for e in &self.eqs {
            write!(f, "  {} : ", e.name)?;
            write_telescope(f, &e.telescope, own)?;
            writeln!(f, "{} == {}", e.lhs, e.rhs)?;
        }
        for i in &self.instances {
            match i {
                Instance::Finite { ty, values } => {
                    write!(f, "with {} = ", Ty(ty, own))?;
                    write_values(f, values)?;
                    writeln!(f)?;
                }
                Instance::Countable { ty } => writeln!(f, "with {} = nat", Ty(ty, own))?,
                Instance::Probe { depth } => writeln!(f, "with probe = {depth}")?,
                Instance::Generators { names } => {
                    write!(f, "with generators = ")?;
                    write_values(f, names)?;
                    writeln!(f)?;
                }
            }
        }
        Ok(())
    }
}

/// Renders a type the way the printer does, used as a lookup key for
/// instantiation clauses.
pub fn type_key(ty: &TypeScheme, own: &str) -> String {
    Ty(ty, own).to_string()
}
