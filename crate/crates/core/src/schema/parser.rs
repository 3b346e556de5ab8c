//! Line-oriented parser for QIT declarations.
//!
//! ```text
//! data Bag : Set where
//!   nil : Bag
//!   cons : (x : X) -> (ys : Bag) -> Bag
//!   swap : (x y : X) (ys : Bag) -> cons x (cons y ys) == cons y (cons x ys)
//! with X = {a, b}
//! ```

use std::collections::{BTreeSet, HashSet};

use super::ast::{ElemCon, Entry, EqCon, Instance, Pattern, QitDecl, Span, Telescope, TypeScheme};
use super::SchemaError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Arrow,
    EqEq,
    Eq,
    Star,
    Comma,
    Dot,
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of line".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(t) => format!("{t:?}"),
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(line: &str, lineno: usize) -> Result<Vec<(Tok, Span)>, SchemaError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line: lineno, col: i + 1 };
        let next = chars.get(i + 1).copied();
        let (tok, len) = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '-' if next == Some('-') => break,
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '→' => (Tok::Arrow, 1),
            '=' if next == Some('=') => (Tok::EqEq, 2),
            '≡' => (Tok::EqEq, 1),
            '=' => (Tok::Eq, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ':' => (Tok::Colon, 1),
            '*' | '×' => (Tok::Star, 1),
            ',' => (Tok::Comma, 1),
            '.' | '∘' => (Tok::Dot, 1),
            _ if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), span));
                continue;
            }
            _ => {
                return Err(SchemaError::Syntax {
                    span,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((tok, span));
        i += len;
    }
    Ok(out)
}

/// A cursor over a slice of one line's tokens.
struct Cursor<'a> {
    toks: &'a [(Tok, Span)],
    i: usize,
    end: Span,
    own: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [(Tok, Span)], end: Span, own: &'a str) -> Self {
        Cursor { toks, i: 0, end, own }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.0)
    }

    fn span(&self) -> Span {
        self.toks.get(self.i).map_or(self.end, |t| t.1)
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.peek().cloned();
        self.i += 1;
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, SchemaError> {
        Err(SchemaError::Syntax {
            span: self.span(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SchemaError> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self) -> Result<String, SchemaError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => self.error("a name"),
        }
    }

    fn finish(&self) -> Result<(), SchemaError> {
        if self.at_end() {
            Ok(())
        } else {
            self.error("end of line")
        }
    }

    /// Whether the cursor sits on `( name+ :`.
    fn at_binder_group(&self) -> bool {
        if self.peek() != Some(&Tok::LParen) {
            return false;
        }
        let mut k = 1;
        while let Some(Tok::Ident(_)) = self.peek_at(k) {
            k += 1;
        }
        k > 1 && self.peek_at(k) == Some(&Tok::Colon)
    }

    /// Index of the first depth-0 token satisfying `p`, from the cursor on.
    fn find_top(&self, p: impl Fn(&Tok) -> bool) -> Option<usize> {
        let mut depth = 0i32;
        for (k, (t, _)) in self.toks[self.i..].iter().enumerate() {
            if depth == 0 && p(t) {
                return Some(self.i + k);
            }
            match t {
                Tok::LParen | Tok::LBrace | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBrace | Tok::RBracket => depth -= 1,
                _ => {}
            }
            if depth < 0 {
                return None;
            }
        }
        None
    }

    /// A sub-cursor over `[self.i, end)`, advancing past it.
    fn split(&mut self, end: usize) -> Cursor<'a> {
        let end_span = self.toks.get(end).map_or(self.end, |t| t.1);
        let sub = Cursor::new(&self.toks[self.i..end], end_span, self.own);
        self.i = end;
        sub
    }

    fn ty(&mut self) -> Result<TypeScheme, SchemaError> {
        if let Some(k) = self.find_top(|t| *t == Tok::EqEq) {
            let mut left = self.split(k);
            let lhs = left.pattern()?;
            left.finish()?;
            self.bump();
            let rhs = self.pattern()?;
            return Ok(TypeScheme::Condition { lhs, rhs });
        }
        self.arrow()
    }

    fn arrow(&mut self) -> Result<TypeScheme, SchemaError> {
        let span = self.span();
        let (binder, domain) = self.binder_or(Self::prod)?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let body = self.arrow()?;
            return Ok(TypeScheme::Pi {
                binder,
                domain: Box::new(domain),
                body: Box::new(body),
                span,
            });
        }
        if binder.is_some() {
            return self.error("`->` after a named domain");
        }
        Ok(domain)
    }

    /// `(x : A)` when followed by `->` or `*`, else `inner`.
    fn binder_or(
        &mut self,
        inner: fn(&mut Self) -> Result<TypeScheme, SchemaError>,
    ) -> Result<(Option<String>, TypeScheme), SchemaError> {
        if self.peek() == Some(&Tok::LParen)
            && matches!(self.peek_at(1), Some(Tok::Ident(_)))
            && self.peek_at(2) == Some(&Tok::Colon)
        {
            self.bump();
            let x = self.ident()?;
            self.bump();
            let close = self
                .find_top(|t| *t == Tok::RParen)
                .map_or_else(|| self.error("`)`"), Ok)?;
            let mut sub = self.split(close);
            let a = sub.ty()?;
            sub.finish()?;
            self.bump();
            return Ok((Some(x), a));
        }
        Ok((None, inner(self)?))
    }

    fn prod(&mut self) -> Result<TypeScheme, SchemaError> {
        let (binder, first) = self.binder_or(Self::tatom)?;
        if self.peek() == Some(&Tok::Star) {
            self.bump();
            let second = self.prod()?;
            return Ok(TypeScheme::Sigma {
                binder,
                first: Box::new(first),
                second: Box::new(second),
            });
        }
        if binder.is_some() {
            return self.error("`->` or `*` after a named component");
        }
        Ok(first)
    }

    fn tatom(&mut self) -> Result<TypeScheme, SchemaError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                let close = self
                    .find_top(|t| *t == Tok::RParen)
                    .map_or_else(|| self.error("`)`"), Ok)?;
                let mut sub = self.split(close);
                let t = sub.ty()?;
                sub.finish()?;
                self.bump();
                Ok(t)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                let mut args = Vec::new();
                while let Some(Tok::Ident(a)) = self.peek() {
                    args.push(a.clone());
                    self.bump();
                }
                if name == self.own {
                    if !args.is_empty() {
                        return self.error("no arguments to the type being declared");
                    }
                    return Ok(TypeScheme::SelfY);
                }
                Ok(TypeScheme::Constant { name, args })
            }
            _ => self.error("a type"),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, SchemaError> {
        let span = self.span();
        let name = self.ident()?;
        if self.peek() == Some(&Tok::Dot) {
            self.bump();
            let perm = self.ident()?;
            return Ok(Pattern::Compose { fun: name, perm, span });
        }
        let mut args = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) => {
                    let span = self.span();
                    args.push(Pattern::Var {
                        name: self.ident()?,
                        span,
                    })
                }
                Some(Tok::LParen) => {
                    self.bump();
                    args.push(self.pattern()?);
                    self.expect(Tok::RParen, "`)`")?;
                }
                _ => break,
            }
        }
        if args.is_empty() {
            Ok(Pattern::Var { name, span })
        } else {
            Ok(Pattern::Con { name, args, span })
        }
    }

    /// `(x y : A)` groups, each binder becoming one entry.
    fn binder_groups(&mut self, out: &mut Vec<Entry>) -> Result<(), SchemaError> {
        while !self.at_end() {
            if !self.at_binder_group() {
                return self.error("a binder group `(x : A)`");
            }
            self.bump();
            let mut names = Vec::new();
            while let Some(Tok::Ident(_)) = self.peek() {
                names.push((self.span(), self.ident()?));
            }
            self.bump();
            let close = self
                .find_top(|t| *t == Tok::RParen)
                .map_or_else(|| self.error("`)`"), Ok)?;
            let mut sub = self.split(close);
            let ty = sub.ty()?;
            sub.finish()?;
            self.bump();
            for (span, n) in names {
                out.push(Entry {
                    binder: (n != "_").then_some(n),
                    ty: ty.clone(),
                    span,
                });
            }
        }
        Ok(())
    }

    fn values(&mut self) -> Result<Vec<String>, SchemaError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            match self.peek() {
                Some(Tok::Ident(_)) => out.push(self.ident()?),
                Some(Tok::LBracket) => {
                    self.bump();
                    let mut parts = Vec::new();
                    while self.peek() != Some(&Tok::RBracket) {
                        parts.push(self.ident()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.bump();
                        }
                    }
                    self.bump();
                    out.push(format!("[{}]", parts.join(",")));
                }
                _ => return self.error("a value"),
            }
            if self.peek() == Some(&Tok::Comma) {
                self.bump();
            } else if self.peek() != Some(&Tok::RBrace) {
                return self.error("`,` or `}`");
            }
        }
        self.bump();
        Ok(out)
    }
}

enum Line {
    Elem(ElemCon),
    Eq(EqCon),
}

fn constructor_line(c: &mut Cursor<'_>) -> Result<Line, SchemaError> {
    let span = c.span();
    let name = c.ident()?;
    c.expect(Tok::Colon, "`:`")?;
    let mut entries = Vec::new();
    while let Some(k) = c.find_top(|t| *t == Tok::Arrow) {
        let mut seg = c.split(k);
        if seg.at_binder_group() {
            seg.binder_groups(&mut entries)?;
        } else {
            let span = seg.span();
            let ty = seg.prod()?;
            seg.finish()?;
            entries.push(Entry { binder: None, ty, span });
        }
        c.bump();
    }
    let telescope = Telescope { entries };
    if let Some(k) = c.find_top(|t| *t == Tok::EqEq) {
        let mut left = c.split(k);
        let lhs = left.pattern()?;
        left.finish()?;
        c.bump();
        let rhs = c.pattern()?;
        c.finish()?;
        return Ok(Line::Eq(EqCon {
            name,
            telescope,
            lhs,
            rhs,
            span,
        }));
    }
    let own = c.own;
    match c.bump() {
        Some(Tok::Ident(n)) if n == own => {}
        _ => {
            c.i -= 1;
            return c.error(&format!("`{own}` or an equation `lhs == rhs`"));
        }
    }
    c.finish()?;
    Ok(Line::Elem(ElemCon {
        name,
        telescope,
        span,
    }))
}

fn instance_line(c: &mut Cursor<'_>) -> Result<Instance, SchemaError> {
    c.bump();
    let eq = c
        .find_top(|t| *t == Tok::Eq)
        .map_or_else(|| c.error("`=`"), Ok)?;
    let mut key = c.split(eq);
    c.bump();
    let inst = match key.peek() {
        Some(Tok::Ident(k)) if k == "probe" && key.toks.len() == 1 => {
            let span = c.span();
            let n = c.ident()?;
            let depth = n.parse().map_err(|_| SchemaError::Syntax {
                span,
                message: format!("probe depth `{n}` is not a number"),
            })?;
            Instance::Probe { depth }
        }
        Some(Tok::Ident(k)) if k == "generators" && key.toks.len() == 1 => {
            Instance::Generators { names: c.values()? }
        }
        _ => {
            let ty = key.ty()?;
            key.finish()?;
            match c.peek() {
                Some(Tok::Ident(v)) if v == "nat" || v == "ℕ" => {
                    c.bump();
                    Instance::Countable { ty }
                }
                _ => Instance::Finite {
                    ty,
                    values: c.values()?,
                },
            }
        }
    };
    c.finish()?;
    Ok(inst)
}

/// Parses a single declaration, then checks names and scoping.
pub fn parse_decl(src: &str) -> Result<QitDecl, SchemaError> {
    let mut decl: Option<QitDecl> = None;
    for (i, line) in src.lines().enumerate() {
        let lineno = i + 1;
        let toks = lex(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let end = Span {
            line: lineno,
            col: line.chars().count() + 1,
        };
        let Some(d) = decl.as_mut() else {
            let mut c = Cursor::new(&toks, end, "");
            let is_data = matches!(c.peek(), Some(Tok::Ident(k)) if k == "data");
            if !is_data {
                return c.error("`data`");
            }
            c.bump();
            let name = c.ident()?;
            c.expect(Tok::Colon, "`:`")?;
            for word in ["Set", "where"] {
                match c.bump() {
                    Some(Tok::Ident(w)) if w == word => {}
                    _ => {
                        c.i -= 1;
                        return c.error(&format!("`{word}`"));
                    }
                }
            }
            c.finish()?;
            decl = Some(QitDecl {
                name,
                elems: Vec::new(),
                eqs: Vec::new(),
                instances: Vec::new(),
            });
            continue;
        };
        let mut c = Cursor::new(&toks, end, &d.name);
        if matches!(c.peek(), Some(Tok::Ident(k)) if k == "with") {
            d.instances.push(instance_line(&mut c)?);
            continue;
        }
        if !d.instances.is_empty() {
            return c.error("`with` (constructors precede instantiations)");
        }
        match constructor_line(&mut c)? {
            Line::Elem(e) => d.elems.push(e),
            Line::Eq(e) => d.eqs.push(e),
        }
    }
    let mut decl = decl.ok_or(SchemaError::Syntax {
        span: Span { line: 1, col: 1 },
        message: "expected `data`".into(),
    })?;
    resolve(&mut decl)?;
    Ok(decl)
}

/// Checks distinct names and scoping, and turns bare constructor names in
/// patterns into nullary applications.
fn resolve(decl: &mut QitDecl) -> Result<(), SchemaError> {
    let mut seen = HashSet::new();
    let spans = decl
        .elems
        .iter()
        .map(|c| (&c.name, c.span))
        .chain(decl.eqs.iter().map(|e| (&e.name, e.span)));
    for (name, span) in spans {
        if !seen.insert(name.clone()) || *name == decl.name {
            return Err(SchemaError::DuplicateConstructor {
                span,
                name: name.clone(),
            });
        }
    }
    let constructors: BTreeSet<String> = decl.elems.iter().map(|c| c.name.clone()).collect();
    let values: BTreeSet<String> = decl
        .instances
        .iter()
        .flat_map(|i| match i {
            Instance::Finite { values, .. } => values.clone(),
            _ => Vec::new(),
        })
        .collect();
    let scope = Scope {
        constructors: &constructors,
        values: &values,
    };
    for c in &mut decl.elems {
        scope.telescope(&c.name, &mut c.telescope, false)?;
    }
    for e in &mut decl.eqs {
        let bound = scope.telescope(&e.name, &mut e.telescope, true)?;
        scope.pattern(&mut e.lhs, &bound)?;
        scope.pattern(&mut e.rhs, &bound)?;
    }
    Ok(())
}

struct Scope<'a> {
    constructors: &'a BTreeSet<String>,
    values: &'a BTreeSet<String>,
}

impl Scope<'_> {
    fn telescope(
        &self,
        owner: &str,
        t: &mut Telescope,
        conditions_allowed: bool,
    ) -> Result<Vec<String>, SchemaError> {
        let mut bound: Vec<String> = Vec::new();
        for e in &mut t.entries {
            self.ty(owner, &mut e.ty, &bound, e.span, conditions_allowed)?;
            if let Some(x) = &e.binder {
                if bound.contains(x) {
                    return Err(SchemaError::DuplicateBinder {
                        span: e.span,
                        name: x.clone(),
                    });
                }
                bound.push(x.clone());
            }
        }
        Ok(bound)
    }

    fn ty(
        &self,
        owner: &str,
        ty: &mut TypeScheme,
        bound: &[String],
        span: Span,
        conditions_allowed: bool,
    ) -> Result<(), SchemaError> {
        match ty {
            TypeScheme::SelfY => Ok(()),
            TypeScheme::Constant { args, .. } => match args.iter().find(|a| !bound.contains(a)) {
                Some(a) => Err(SchemaError::Scope {
                    span,
                    name: a.clone(),
                }),
                None => Ok(()),
            },
            TypeScheme::Condition { lhs, rhs } => {
                if !conditions_allowed {
                    return Err(SchemaError::MisplacedCondition {
                        constructor: owner.to_string(),
                        span,
                    });
                }
                self.pattern(lhs, bound)?;
                self.pattern(rhs, bound)
            }
            TypeScheme::Pi {
                binder, domain, body, ..
            }
            | TypeScheme::Sigma {
                binder,
                first: domain,
                second: body,
            } => {
                self.ty(owner, domain, bound, span, conditions_allowed)?;
                let mut inner = bound.to_vec();
                inner.extend(binder.clone());
                self.ty(owner, body, &inner, span, conditions_allowed)
            }
        }
    }

    fn pattern(&self, p: &mut Pattern, bound: &[String]) -> Result<(), SchemaError> {
        match p {
            Pattern::Var { name, span } => {
                if bound.contains(name) || self.values.contains(name) {
                    Ok(())
                } else if self.constructors.contains(name) {
                    *p = Pattern::Con {
                        name: name.clone(),
                        args: Vec::new(),
                        span: *span,
                    };
                    Ok(())
                } else {
                    Err(SchemaError::Scope {
                        span: *span,
                        name: name.clone(),
                    })
                }
            }
            Pattern::Compose { fun, perm, span } => match [fun, perm].into_iter().find(|n| !bound.contains(n)) {
                Some(n) => Err(SchemaError::Scope {
                    span: *span,
                    name: n.clone(),
                }),
                None => Ok(()),
            },
            Pattern::Con { name, args, span } => {
                if !self.constructors.contains(name) {
                    return Err(SchemaError::Scope {
                        span: *span,
                        name: name.clone(),
                    });
                }
                args.iter_mut().try_for_each(|a| self.pattern(a, bound))
            }
        }
    }
}
