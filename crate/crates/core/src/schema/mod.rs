//! QIT declarations: parsing, strict positivity, classification and
//! elaboration into a signature with an equation system.

mod ast;
mod check;
mod elaborate;
mod parser;
mod surface;

pub use ast::{type_key, ElemCon, Entry, EqCon, Instance, Pattern, QitDecl, Span, Telescope, TypeScheme};
pub use check::{check_positivity, classify, Cardinality, Classification};
pub use elaborate::{elaborate, freeify, from_w_reductions, from_w_suspension, ElabOptions, Elaborated};
pub use parser::parse_decl;
pub use surface::parse_term;

use thiserror::Error;

use crate::encodings::EncodingError;
use crate::equations::EqError;
use crate::terms::TermError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: `{name}` is not in scope")]
    Scope { span: Span, name: String },
    #[error("{span}: binder `{name}` is already bound in this telescope")]
    DuplicateBinder { span: Span, name: String },
    #[error("{span}: constructor `{name}` is declared twice")]
    DuplicateConstructor { span: Span, name: String },
    #[error("{span}: `{constructor}` has a condition outside an equality constructor")]
    MisplacedCondition { constructor: String, span: Span },
    #[error("{span}: in `{constructor}`, the type being declared occurs in the domain of a function type")]
    Positivity {
        constructor: String,
        binder: Option<String>,
        span: Span,
    },
    #[error("`{constructor}` is a conditional equality; conditional QITs have no QW-type encoding")]
    ConditionalUnsupported { constructor: String },
    #[error("`{constructor}` needs a finite instantiation of `{ty}`")]
    NonFinitaryConstant { constructor: String, ty: String },
    #[error("`{constructor}`: {reason}")]
    UnsupportedShape { constructor: String, reason: String },
    #[error("generator `{0}` clashes with an operator name")]
    NameClash(String),
    #[error("reduction for `{op}` is undefined: {reason}")]
    PartialReduction { op: String, reason: String },
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Equations(#[from] EqError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{bag_of, omega_tree_of};
    use crate::terms::Arity;

    fn fixture(name: &str) -> String {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/");
        std::fs::read_to_string(format!("{path}{name}")).unwrap()
    }

    fn json<T: serde::Serialize>(v: &T) -> serde_json::Value {
        serde_json::to_value(v).unwrap()
    }

    #[test]
    fn bag_parses_and_elaborates_to_the_encoding() {
        let d = parse_decl(&fixture("bag.qit")).unwrap();
        assert_eq!((d.elems.len(), d.eqs.len()), (2, 1));
        let c = classify(&d);
        assert!(c.recursive && !c.conditional && c.finitary);
        let e = elaborate(&d, ElabOptions::default()).unwrap();
        let b = bag_of(&["a", "b"]);
        assert_eq!(json(&e.signature), json(&b.signature));
        assert_eq!(json(&e.equations), json(&b.equations));
    }

    #[test]
    fn omega_tree_elaborates_to_the_encoding() {
        let d = parse_decl(&fixture("omega_tree.qit")).unwrap();
        let node = d.elem("node").unwrap();
        assert_eq!(node.telescope.entries.len(), 2);
        let c = classify(&d);
        assert!(c.recursive && !c.conditional && !c.finitary);
        let e = elaborate(&d, ElabOptions::default()).unwrap();
        let w = omega_tree_of(&["a", "b"], 2, &[vec![1, 0]]).unwrap();
        assert_eq!(json(&e.signature), json(&w.signature));
        assert_eq!(json(&e.equations), json(&w.equations));
        assert_eq!(e.signature.arity("node(a)"), Some(Arity::Omega));
    }

    #[test]
    fn round_trip_on_corpus() {
        for f in ["bag.qit", "omega_tree.qit", "negative_pi.qit", "conditional.qit", "wreductions.qit", "ordinal.qit"] {
            let d = parse_decl(&fixture(f)).unwrap();
            let printed = d.to_string();
            assert_eq!(parse_decl(&printed).unwrap(), d, "{f}");
            assert_eq!(parse_decl(&printed).unwrap().to_string(), printed);
        }
    }

    #[test]
    fn positivity() {
        let d = parse_decl(&fixture("negative_pi.qit")).unwrap();
        match check_positivity(&d) {
            Err(SchemaError::Positivity { constructor, binder, span }) => {
                assert_eq!(constructor, "c");
                assert_eq!(binder.as_deref(), Some("k"));
                assert_eq!(span.line, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(check_positivity(&parse_decl(&fixture("omega_tree.qit")).unwrap()).is_ok());
    }

    #[test]
    fn conditional_is_rejected() {
        let d = parse_decl(&fixture("conditional.qit")).unwrap();
        assert!(classify(&d).conditional);
        assert_eq!(
            elaborate(&d, ElabOptions::default()).unwrap_err(),
            SchemaError::ConditionalUnsupported { constructor: "drop".into() }
        );
    }

    #[test]
    fn parse_errors() {
        let dup = "data B : Set where\n  c : (x x : X) -> B\nwith X = {a}";
        assert!(matches!(parse_decl(dup), Err(SchemaError::DuplicateBinder { .. })));
        let twice = "data B : Set where\n  c : B\n  c : B";
        assert!(matches!(parse_decl(twice), Err(SchemaError::DuplicateConstructor { .. })));
        let unbound = "data B : Set where\n  c : B\n  e : (y : B) -> c == z";
        assert!(matches!(parse_decl(unbound), Err(SchemaError::Scope { .. })));
        match parse_decl("data B : Set where\n  c : (x : X) -> ") {
            Err(SchemaError::Syntax { span, .. }) => assert_eq!(span.line, 2),
            other => panic!("{other:?}"),
        }
        let cond = "data B : Set where\n  c : (h : c == c) -> B";
        assert!(matches!(parse_decl(cond), Err(SchemaError::MisplacedCondition { .. })));
    }

    #[test]
    fn freeify_adds_generators() {
        let b = bag_of(&["a", "b"]);
        let (s, e) = freeify(&b.signature, &b.equations, &["c".into()]).unwrap();
        let names: Vec<_> = s.ops().iter().map(|o| (o.name.as_str(), o.arity)).collect();
        assert_eq!(
            names,
            [("c", Arity::Finite(0)), ("nil", Arity::Finite(0)), ("cons(a)", Arity::Finite(1)), ("cons(b)", Arity::Finite(1))]
        );
        assert_eq!(json(&e.eqs), json(&b.equations.eqs));
        assert_eq!(freeify(&b.signature, &b.equations, &["nil".into()]).unwrap_err(), SchemaError::NameClash("nil".into()));
    }

    #[test]
    fn w_translations() {
        let two = [("t".to_string(), Arity::Finite(0)), ("f".to_string(), Arity::Finite(0))];
        let (_, e) = from_w_suspension(&two, &[("c".into(), "t".into(), "f".into())], 0).unwrap();
        assert_eq!(e.eqs.len(), 1);
        assert_eq!(e.eqs[0].vars, 0);
        let (_, e) = from_w_suspension(&two, &[], 0).unwrap();
        assert!(e.eqs.is_empty());
        let u = [("u".to_string(), Arity::Finite(2))];
        let (_, e) = from_w_reductions(&u, &[("u".into(), Some(0))], 0).unwrap();
        assert_eq!(e.eqs[0].rhs, crate::terms::Term::Var(0));
        let empty = [("z".to_string(), Arity::Finite(0))];
        assert!(matches!(
            from_w_reductions(&empty, &[("z".into(), Some(0))], 0),
            Err(SchemaError::PartialReduction { .. })
        ));
    }

    #[test]
    fn surface_terms() {
        let b = bag_of(&["a", "b"]);
        let t = parse_term(&b.signature, &[], "a :: b :: []").unwrap();
        assert_eq!(t, crate::encodings::bag_term(&["a", "b"]));
        assert_eq!(parse_term(&b.signature, &[], &t.to_string()).unwrap(), t);
        let w = omega_tree_of(&["a"], 2, &[vec![1, 0]]).unwrap();
        let src = "node(a){0: leaf, 1: node(a){_: leaf}, _: leaf}";
        let t = parse_term(&w.signature, &[], src).unwrap();
        assert_eq!(parse_term(&w.signature, &[], &t.to_string()).unwrap(), t);
        assert!(parse_term(&b.signature, &[], "cons(c)[nil]").is_err());
        let app = parse_term(&b.signature, &[], "cons(a, cons(b, nil))").unwrap();
        assert_eq!(app, crate::encodings::bag_term(&["a", "b"]));
        assert!(parse_term(&b.signature, &[], "cons(c, nil)").is_err());
        let v = parse_term(&b.signature, &["v".into()], "cons(a)[v]").unwrap();
        assert_eq!(v.leaves(), vec![&"v".to_string()]);
    }
}
