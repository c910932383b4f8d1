//! CAL concrete syntax: tokenizer, parser and canonical renderer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod render;

pub use ast::{Decl, Expr, Header, InfixOp, RelOp, Sigil, SurfaceAst, SurfacePredicate};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_declaration, parse_declarations, parse_predicates, parse_term};
pub use render::{render, render_expr};

use crate::error::Result;

/// Tokenize and parse a source text holding one or more declarations.
pub fn parse_source(source: &str) -> Result<Vec<SurfaceAst>> {
    parse_declarations(&tokenize(source)?)
}

/// Tokenize and parse a single term.
pub fn parse_term_str(source: &str) -> Result<Expr> {
    parse_term(&tokenize(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{CalError, Pos};

    pub(crate) const MYBOX: &str = include_str!("../../tests/fixtures/mybox.cal");

    fn parse_one(src: &str) -> SurfaceAst {
        parse_declaration(&tokenize(src).unwrap()).unwrap()
    }

    #[test]
    fn mybox_has_one_provided_block_with_four_clauses() {
        let ast = parse_one(MYBOX);
        assert_eq!(ast.header.name, "MYBOX");
        assert_eq!(ast.header.input, Some(vec!["a".into(), "k".into()]));
        assert_eq!(
            ast.header.outputs,
            vec![vec!["b".to_string()], vec!["c".to_string(), "d".to_string()]]
        );
        assert_eq!(ast.decls.len(), 1);
        let Decl::Provided(block) = &ast.decls[0] else {
            panic!("expected provided block");
        };
        assert_eq!(block.conditions.len(), 2);
        assert_eq!(block.decls.len(), 4);
        let Decl::Clause(clause4) = &block.decls[3] else {
            panic!("expected clause");
        };
        assert_eq!(clause4.conditions.len(), 1);
        assert_eq!(clause4.assertions.len(), 2);
    }

    #[test]
    fn empty_box() {
        let ast = parse_one("box b (() -> ):");
        assert_eq!(ast.header.input, Some(vec![]));
        assert!(ast.header.outputs.is_empty());
        assert!(ast.decls.is_empty());
        assert_eq!(render(&ast), "box b (() -> ):");
    }

    #[test]
    fn figure_one_header() {
        let ast = parse_one("box boxname ((a,b,n) -> (d,e), (f,g,q,r)):");
        assert_eq!(
            ast.header.input,
            Some(vec!["a".to_string(), "b".to_string(), "n".to_string()])
        );
        assert_eq!(ast.header.outputs.len(), 2);
        assert_eq!(ast.header.outputs[1].len(), 4);
        assert_eq!(render(&ast), "box boxname ((a,b,n) -> (d,e), (f,g,q,r)):");
    }

    #[test]
    fn header_without_input() {
        let ast = parse_one("box src (-> (x)): => $x :=: 1");
        assert_eq!(ast.header.input, None);
        assert_eq!(parse_one(&render(&ast)), ast);
    }

    #[test]
    fn term_forms() {
        let set = parse_term_str("{$A, 12, shape}").unwrap();
        let Expr::Set(members) = set else { panic!() };
        assert_eq!(members.len(), 3);

        let pois = parse_term_str("Poisson(1/$N)").unwrap();
        let Expr::Apply(head, args) = pois else { panic!() };
        assert_eq!(head, "Poisson");
        assert!(matches!(args[0], Expr::Binary(InfixOp::Slash, _, _)));

        assert!(matches!(parse_term_str("(a)").unwrap(), Expr::Group(_)));
        assert!(matches!(parse_term_str("(a, b)").unwrap(), Expr::Tuple(_)));
        assert!(matches!(parse_term_str("-3").unwrap(), Expr::Num(_)));
        assert!(matches!(parse_term_str("-$x").unwrap(), Expr::Neg(_)));
    }

    #[test]
    fn render_normalizes_integral_rationals() {
        let e = parse_term_str("5/1").unwrap();
        assert_eq!(render_expr(&e), "5");
        let e = parse_term_str("$m^(3/2)").unwrap();
        assert_eq!(render_expr(&e), "$m ^ (3/2)");
    }

    #[test]
    fn mybox_round_trip() {
        let ast = parse_one(MYBOX);
        let text = render(&ast);
        assert_eq!(parse_one(&text), ast, "rendered:\n{text}");
    }

    #[test]
    fn nested_provided_round_trip() {
        let src = "box n ((x) -> (y)): provided $x :=: 1 use provided $z = 2 use $z > 1 => $y :=: $z; end; end";
        let ast = parse_one(src);
        assert_eq!(parse_one(&render(&ast)), ast);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_declaration(&tokenize("box b ((a) -> (b)):\n  $a :=: (1, 2").unwrap())
            .unwrap_err();
        let CalError::Syntax { pos, expected, .. } = &err else {
            panic!("{err}")
        };
        assert_eq!(pos.line, 2);
        assert!(expected.iter().any(|e| e.contains(')')));

        let err = parse_declaration(&tokenize("box b ((a) -> (b)):\n $a :=: 1;").unwrap())
            .unwrap_err();
        assert_eq!(err.pos(), Some(Pos::new(2, 10)));
        assert!(err.to_string().contains("=>"));

        let err = parse_declaration(&tokenize("box b ((a) -> (b)): => f(a) > 1").unwrap())
            .unwrap_err();
        assert!(err.to_string().contains("left of a relation"));

        assert!(parse_source("box b ((a) -> (b)): => {a, b").is_err());
        assert!(parse_source("box b ((a) -> (b)) => $b :=: 1").is_err());
        assert!(parse_source("box b ((a) -> (b)): provided $a :=: 1 use => $b :=: 1;").is_err());
    }

    #[test]
    fn relation_with_constant_lhs() {
        let preds = parse_predicates(&tokenize("5 >= unknown, -1 < $x").unwrap()).unwrap();
        assert_eq!(preds.len(), 2);
    }

    #[test]
    fn multiple_declarations_in_one_source() {
        let asts = parse_source("box a ((x) -> (y)): => $y :=: $x;\nbox b ((p) -> (q)):").unwrap();
        assert_eq!(asts.len(), 2);
        assert_eq!(asts[1].header.name, "b");
    }
}
