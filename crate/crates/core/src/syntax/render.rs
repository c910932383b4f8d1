//! Canonical text rendering of the surface AST.

use std::fmt::Write;

use num_rational::BigRational;
use num_traits::One;

use super::ast::*;

pub fn render(ast: &SurfaceAst) -> String {
    let mut out = render_header(&ast.header);
    for decl in &ast.decls {
        out.push('\n');
        render_decl(decl, 1, &mut out);
        out.push(';');
    }
    out
}

pub fn render_header(h: &Header) -> String {
    let input = h.input.as_ref().map(|f| tuple_type(f)).unwrap_or_default();
    let outputs: Vec<String> = h.outputs.iter().map(|f| tuple_type(f)).collect();
    let sep = if h.input.is_some() { " " } else { "" };
    format!("box {} ({input}{sep}-> {}):", h.name, outputs.join(", "))
}

fn tuple_type(fields: &[String]) -> String {
    format!("({})", fields.join(","))
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn render_decl(decl: &Decl, level: usize, out: &mut String) {
    indent(level, out);
    match decl {
        Decl::Clause(c) => {
            if !c.conditions.is_empty() {
                out.push_str(&render_predicates(&c.conditions));
                out.push(' ');
            }
            out.push_str("=> ");
            out.push_str(&render_predicates(&c.assertions));
        }
        Decl::Provided(p) => {
            out.push_str("provided ");
            out.push_str(&render_predicates(&p.conditions));
            out.push('\n');
            indent(level, out);
            out.push_str("use");
            for d in &p.decls {
                out.push('\n');
                render_decl(d, level + 1, out);
                out.push(';');
            }
            out.push('\n');
            indent(level, out);
            out.push_str("end");
        }
    }
}

pub fn render_predicates(preds: &[SurfacePredicate]) -> String {
    preds
        .iter()
        .map(render_predicate)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn render_predicate(p: &SurfacePredicate) -> String {
    match p {
        SurfacePredicate::Relation { lhs, op, rhs, .. } => {
            format!("{} {} {}", render_expr(lhs), op, render_expr(rhs))
        }
        SurfacePredicate::Equivalence { lhs, rhs, .. } => {
            format!("{} :=: {}", render_expr(lhs), render_expr(rhs))
        }
    }
}

pub fn render_number(n: &BigRational) -> String {
    if n.denom().is_one() {
        n.numer().to_string()
    } else {
        format!("{}/{}", n.numer(), n.denom())
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(item, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Num(n) => out.push_str(&render_number(n)),
        Expr::Sym(s) => out.push_str(s),
        Expr::Var(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Tuple(items) => {
            out.push('(');
            write_list(items, out);
            out.push(')');
        }
        Expr::Apply(head, args) => {
            out.push_str(head);
            out.push('(');
            write_list(args, out);
            out.push(')');
        }
        Expr::Set(items) => {
            out.push('{');
            write_list(items, out);
            out.push('}');
        }
        Expr::Binary(op, l, r) => {
            write_expr(l, out);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            write_expr(r, out);
        }
        Expr::Neg(inner) => {
            let body = render_expr(inner);
            out.push('-');
            // keep `- -3` from lexing as a comment
            if body.starts_with('-') || body.starts_with('+') {
                out.push(' ');
            }
            out.push_str(&body);
        }
        Expr::Group(inner) => {
            out.push('(');
            write_expr(inner, out);
            out.push(')');
        }
    }
}
