//! Closed terms in the printed form `op[t, …]` or `op{0: t, …, _: t}`, with
//! list sugar `x :: t` for `cons(x)[t]` and `[]` for `nil`.

use std::collections::BTreeMap;

use super::ast::Span;
use super::SchemaError;
use crate::terms::{Branches, Signature, Term};

struct Reader<'a> {
    chars: Vec<char>,
    i: usize,
    sig: &'a Signature,
    generators: &'a [String],
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.i).is_some_and(|c| c.is_whitespace()) {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.i).copied()
    }

    fn looking_at(&mut self, s: &str) -> bool {
        self.skip_ws();
        s.chars().enumerate().all(|(k, c)| self.chars.get(self.i + k) == Some(&c))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SchemaError> {
        Err(SchemaError::Syntax {
            span: Span { line: 1, col: self.i + 1 },
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), SchemaError> {
        if self.peek() == Some(c) {
            self.i += 1;
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn word(&mut self) -> Result<String, SchemaError> {
        self.skip_ws();
        let start = self.i;
        while self
            .chars
            .get(self.i)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_' || *c == '\'')
        {
            self.i += 1;
        }
        if start == self.i {
            return self.error("expected a name");
        }
        Ok(self.chars[start..self.i].iter().collect())
    }

    /// An operator name with an optional parenthesised parameter suffix,
    /// whitespace removed.
    fn name(&mut self) -> Result<String, SchemaError> {
        let mut name = self.word()?;
        if self.chars.get(self.i) == Some(&'(') {
            let mut depth = 0;
            loop {
                let Some(&c) = self.chars.get(self.i) else {
                    return self.error("unbalanced `(`");
                };
                self.i += 1;
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
                if !c.is_whitespace() {
                    name.push(c);
                }
                if depth == 0 {
                    break;
                }
            }
        }
        Ok(name)
    }

    /// Constructor syntax `c(p, t, …)`: arguments that read as terms become
    /// branches, the rest are parameter values naming the operator.
    fn application(&self, name: &str) -> Result<Term<String>, SchemaError> {
        let open = name.find('(').expect("suffix present");
        let inner = &name[open + 1..name.len() - 1];
        let mut params = Vec::new();
        let mut branches = Vec::new();
        for arg in split_top(inner) {
            let mut sub = Reader {
                chars: arg.chars().collect(),
                i: 0,
                sig: self.sig,
                generators: self.generators,
            };
            match sub.term() {
                Ok(t) if sub.peek().is_none() && self.is_term(&t) => branches.push(t),
                _ => params.push(arg),
            }
        }
        let op = if params.is_empty() {
            name[..open].to_string()
        } else {
            format!("{}({})", &name[..open], params.join(","))
        };
        if !self.sig.contains(&op) {
            return self.error(format!("no operator `{op}`"));
        }
        Ok(Term::app(op, branches))
    }

    fn is_term(&self, t: &Term<String>) -> bool {
        match t {
            Term::Var(_) => true,
            Term::Node(n) => self.sig.contains(&n.op),
        }
    }

    fn term(&mut self) -> Result<Term<String>, SchemaError> {
        let head = self.primary()?;
        if self.looking_at("::") {
            self.i += 2;
            let x = match head {
                Term::Var(x) => x,
                Term::Node(n) if n.branches == Branches::nullary() => n.op,
                _ => return self.error("the left of `::` must be an element name"),
            };
            let tail = self.term()?;
            return Ok(Term::app(format!("cons({x})"), vec![tail]));
        }
        Ok(head)
    }

    fn primary(&mut self) -> Result<Term<String>, SchemaError> {
        if self.looking_at("[]") {
            self.i += 2;
            return Ok(Term::constant("nil"));
        }
        let name = self.name()?;
        match self.peek() {
            Some('[') => {
                self.i += 1;
                let mut args = Vec::new();
                if self.peek() != Some(']') {
                    loop {
                        args.push(self.term()?);
                        if self.peek() == Some(',') {
                            self.i += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(']')?;
                Ok(Term::app(name, args))
            }
            Some('{') => {
                self.i += 1;
                let mut table = BTreeMap::new();
                loop {
                    let key = self.word()?;
                    self.expect(':')?;
                    let t = self.term()?;
                    if key == "_" {
                        if self.peek() == Some(',') {
                            self.i += 1;
                        }
                        self.expect('}')?;
                        return Ok(Term::node(name, Branches::omega(table, t)));
                    }
                    let Ok(k) = key.parse::<usize>() else {
                        return self.error(format!("`{key}` is not an index"));
                    };
                    table.insert(k, t);
                    self.expect(',')?;
                }
            }
            _ if !self.sig.contains(&name) && name.ends_with(')') => self.application(&name),
            _ if !self.sig.contains(&name) && self.generators.contains(&name) => Ok(Term::Var(name)),
            _ => Ok(Term::constant(name)),
        }
    }
}

fn split_top(s: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut depth = 0;
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(String::new());
                continue;
            }
            _ => {}
        }
        out.last_mut().expect("nonempty").push(c);
    }
    out
}

/// Parses a closed term over `sig` whose leaves may be `generators`.
pub fn parse_term(sig: &Signature, generators: &[String], src: &str) -> Result<Term<String>, SchemaError> {
    let mut r = Reader {
        chars: src.chars().collect(),
        i: 0,
        sig,
        generators,
    };
    let t = r.term()?;
    if r.peek().is_some() {
        return r.error("unexpected trailing input");
    }
    sig.check_term(&t)?;
    Ok(t)
}
