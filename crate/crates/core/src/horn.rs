//! Horn-clause form of CAL clauses and its textual export.
//!
//! A clause `C1, ..., Cm => A1, ..., Ak` becomes the k Horn clauses
//! `Ai :- C1, ..., Cm`.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::clauses::{BoxDeclaration, Clause, Predicate};
use crate::error::Pos;
use crate::syntax::ast::RelOp;
use crate::terms::{Term, Var, VarId, VarKind, HAT, MINUS, PLUS, SLASH, TIMES, UNION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    /// Index of the CAL clause within its declaration, 1-based.
    pub clause: usize,
    /// Which assertion of that clause became the head, 1-based.
    pub assertion: usize,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub head: Predicate,
    pub body: Vec<Predicate>,
    pub origin: Origin,
}

pub fn to_horn(c: &Clause) -> Vec<HornClause> {
    c.assertions
        .iter()
        .enumerate()
        .map(|(i, a)| HornClause {
            head: a.clone(),
            body: c.conditions.clone(),
            origin: Origin {
                clause: c.index,
                assertion: i + 1,
                pos: c.pos,
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    /// Prolog facts and rules over `eq`, `gt`, ... predicates.
    #[default]
    Prolog,
    /// One single-assertion CAL clause per Horn clause, re-parseable.
    Cal,
}

pub fn export_horn(decls: &[BoxDeclaration], dialect: Dialect) -> String {
    let mut out = String::new();
    let mut counter = 0usize;
    for (i, decl) in decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match dialect {
            Dialect::Prolog => {
                let _ = writeln!(out, "% box {}", decl.header_text());
                for c in &decl.clauses {
                    counter += 1;
                    let mut names = VarNames::new(counter);
                    for h in to_horn(c) {
                        let _ = writeln!(
                            out,
                            "% {} clause {} assertion {} (line {})",
                            decl.name, h.origin.clause, h.origin.assertion, h.origin.pos.line
                        );
                        out.push_str(&prolog_clause(&h, &mut names));
                        out.push('\n');
                    }
                }
            }
            Dialect::Cal => {
                let _ = writeln!(out, "-- horn form of {}", decl.name);
                out.push_str(&decl.header_text());
                out.push('\n');
                for c in &decl.clauses {
                    for h in to_horn(c) {
                        out.push_str("    ");
                        for (j, p) in h.body.iter().enumerate() {
                            if j > 0 {
                                out.push_str(", ");
                            }
                            let _ = write!(out, "{p}");
                        }
                        if !h.body.is_empty() {
                            out.push(' ');
                        }
                        let _ = writeln!(
                            out,
                            "=> {};  -- clause {} assertion {}",
                            h.head, h.origin.clause, h.origin.assertion
                        );
                    }
                }
            }
        }
    }
    out
}

/// Prolog variable names, renamed apart per CAL clause.
struct VarNames {
    prefix: String,
    names: BTreeMap<Var, String>,
}

impl VarNames {
    fn new(clause: usize) -> Self {
        VarNames {
            prefix: format!("C{clause}_"),
            names: BTreeMap::new(),
        }
    }

    fn name(&mut self, v: &Var) -> String {
        let prefix = &self.prefix;
        self.names
            .entry(v.clone())
            .or_insert_with(|| match (&v.id, v.kind) {
                (VarId::Named(n), VarKind::Env) => format!("{prefix}E_{n}"),
                (VarId::Named(n), _) => format!("{prefix}{n}"),
                (VarId::Gen(n), _) => format!("{prefix}G{n}"),
                (VarId::Sol(n), _) => format!("{prefix}N{n}"),
            })
            .clone()
    }
}

fn prolog_clause(h: &HornClause, names: &mut VarNames) -> String {
    let head = prolog_predicate(&h.head, names);
    if h.body.is_empty() {
        format!("{head}.")
    } else {
        let body: Vec<String> = h.body.iter().map(|p| prolog_predicate(p, names)).collect();
        format!("{head} :- {}.", body.join(", "))
    }
}

fn relation_name(op: RelOp) -> &'static str {
    match op {
        RelOp::Eq => "num_eq",
        RelOp::Gt => "gt",
        RelOp::Lt => "lt",
        RelOp::Ge => "ge",
        RelOp::Le => "le",
        RelOp::Ne => "ne",
    }
}

fn prolog_predicate(p: &Predicate, names: &mut VarNames) -> String {
    let (name, lhs, rhs) = match p {
        Predicate::Relation { lhs, op, rhs, .. } => (relation_name(*op), lhs, rhs),
        Predicate::Equivalence { lhs, rhs, .. } => ("eq", lhs, rhs),
    };
    format!("{name}({}, {})", prolog_term(lhs, names), prolog_term(rhs, names))
}

fn atom(s: &str) -> String {
    let bare = match s {
        PLUS => return "plus".into(),
        MINUS => return "minus".into(),
        TIMES => return "times".into(),
        SLASH => return "slash".into(),
        HAT => return "hat".into(),
        UNION => return "union".into(),
        _ => {
            let mut chars = s.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
    };
    if bare {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

fn prolog_term(t: &Term, names: &mut VarNames) -> String {
    match t {
        Term::Num(q) if q.is_integer() => q.numer().to_string(),
        Term::Num(q) => format!("rat({}, {})", q.numer(), q.denom()),
        Term::Sym(s) => atom(s),
        Term::Var(v) => names.name(v),
        Term::Tuple(m) => match m.split_first() {
            Some((Term::Sym(head), args)) if !args.is_empty() => {
                let args: Vec<String> = args.iter().map(|a| prolog_term(a, names)).collect();
                format!("{}({})", atom(head), args.join(", "))
            }
            _ => {
                let args: Vec<String> = m.iter().map(|a| prolog_term(a, names)).collect();
                format!("tuple({})", args.join(", "))
            }
        },
        Term::Set(s) => {
            let elems: Vec<String> = s.elems().iter().map(|e| prolog_term(e, names)).collect();
            let mut out = format!("set([{}])", elems.join(", "));
            for u in s.unions() {
                out = format!("union({out}, {})", names.name(u));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clauses::flatten_provided;
    use crate::syntax::parse_source;
    use crate::terms::Session;

    fn decls(src: &str) -> Vec<BoxDeclaration> {
        let mut session = Session::new();
        parse_source(src)
            .unwrap()
            .iter()
            .map(|a| flatten_provided(a, &mut session).unwrap().0)
            .collect()
    }

    fn rule_lines(text: &str) -> Vec<&str> {
        text.lines().filter(|l| !l.starts_with('%') && !l.is_empty()).collect()
    }

    #[test]
    fn one_horn_clause_per_assertion() {
        let d = decls("box h ((x) -> (y)): $x > 1, $x < 9 => $y :=: 1, $$T0 :=: 2, $$M0 :=: 3;");
        let hs = to_horn(&d[0].clauses[0]);
        assert_eq!(hs.len(), 3);
        for h in &hs {
            assert_eq!(h.body, d[0].clauses[0].conditions);
            assert_eq!(h.body.len(), 2);
        }
    }

    #[test]
    fn empty_condition_gives_facts() {
        let d = decls("box h ((x) -> (y)): => $y :=: 1, $y :=: 2;");
        let text = export_horn(&d, Dialect::Prolog);
        assert_eq!(rule_lines(&text), vec!["eq(C1_y, 1).", "eq(C1_y, 2)."]);
    }

    #[test]
    fn prolog_encoding() {
        let d = decls(
            "box h ((kv) -> (y)): $kv > $$nthreads * 100 => $y :=: {Type(int), value(3/2)} \\/ $_, $n = $kv + 1;",
        );
        let text = export_horn(&d, Dialect::Prolog);
        let lines = rule_lines(&text);
        assert_eq!(
            lines[0],
            "eq(C1_y, union(set(['Type'(int), value(rat(3, 2))]), C1_G1)) :- gt(C1_kv, times(C1_E_nthreads, 100))."
        );
        assert_eq!(lines[1], "num_eq(C1_n, plus(C1_kv, 1)) :- gt(C1_kv, times(C1_E_nthreads, 100)).");
    }

    #[test]
    fn variables_are_renamed_apart_per_clause() {
        let d = decls("box h ((x) -> (y)): $x > 1 => $y :=: 1; $x > 2 => $y :=: 2;");
        let text = export_horn(&d, Dialect::Prolog);
        let lines = rule_lines(&text);
        assert!(lines[0].contains("C1_x") && !lines[0].contains("C2_"));
        assert!(lines[1].contains("C2_x") && !lines[1].contains("C1_"));
    }

    #[test]
    fn export_is_stable_and_sectioned() {
        let d = decls("box a ((x) -> (y)): => $y :=: 1;\nbox b (() -> ):");
        let once = export_horn(&d, Dialect::Prolog);
        assert_eq!(once, export_horn(&d, Dialect::Prolog));
        let headers: Vec<&str> = once.lines().filter(|l| l.starts_with("% box")).collect();
        assert_eq!(headers, vec!["% box box a ((x) -> (y)):", "% box box b (() -> ):"]);
    }

    #[test]
    fn cal_dialect_reparses() {
        let d = decls("box h ((x) -> (y)): provided $x :=: {$_} use $x > 1 => $y :=: 1, $$T0 :=: 2; end");
        let text = export_horn(&d, Dialect::Cal);
        let again = decls(&text);
        assert_eq!(again[0].clauses.len(), 2);
        assert!(again[0].clauses.iter().all(|c| c.assertions.len() == 1 && c.conditions.len() == 2));
    }
}
