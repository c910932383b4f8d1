//! Advisory checks on the shapes of vocabulary terms: `Type`, `element`,
//! `rank`, `shape`, `value`, `packed`, `limits`, `Poisson`, `union` and
//! `record`.

use num_traits::Signed;

use crate::error::Diagnostic;
use crate::terms::Term;

fn is_open(t: &Term) -> bool {
    matches!(t, Term::Var(_)) || *t == Term::sym("unknown")
}

fn is_count(t: &Term) -> bool {
    matches!(t.as_integer(), Some(n) if !n.is_negative())
}

/// Dimensions of `shape(d0, (d1, (d2, nil)))`. A variable in tail position
/// leaves the list open and ends the extraction.
pub fn shape_dims(t: &Term) -> Result<Vec<Term>, String> {
    if t.head_symbol() != Some("shape") {
        return Err(format!("{t} is not a shape term"));
    }
    let args = t.args();
    match args {
        [only] if *only == Term::sym("nil") => Ok(Vec::new()),
        [first, rest] => {
            let mut dims = vec![first.clone()];
            let mut cur = rest;
            loop {
                match cur {
                    Term::Sym(s) if &**s == "nil" => return Ok(dims),
                    Term::Var(_) => return Ok(dims),
                    Term::Tuple(m) if m.len() == 2 => {
                        dims.push(m[0].clone());
                        cur = &m[1];
                    }
                    other => return Err(format!("unterminated shape list in {t}: `{other}` is not `nil` or a pair")),
                }
            }
        }
        _ => Err(format!("{t} should have a first dimension and a nil-terminated list")),
    }
}

pub fn check_vocabulary(t: &Term) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    walk(t, &mut out);
    out
}

fn warn(out: &mut Vec<Diagnostic>, msg: String) {
    out.push(Diagnostic::warning(msg));
}

fn arity(t: &Term, n: usize, out: &mut Vec<Diagnostic>) -> bool {
    if t.args().len() == n {
        true
    } else {
        let head = t.head_symbol().unwrap_or("?");
        warn(out, format!("{t}: `{head}` takes {n} argument{}", if n == 1 { "" } else { "s" }));
        false
    }
}

fn walk(t: &Term, out: &mut Vec<Diagnostic>) {
    match t {
        Term::Set(s) => s.elems().iter().for_each(|e| walk(e, out)),
        Term::Tuple(m) => {
            if let Some(head) = t.head_symbol() {
                check_head(t, head, out);
            }
            m.iter().for_each(|e| walk(e, out));
        }
        _ => {}
    }
}

fn check_head(t: &Term, head: &str, out: &mut Vec<Diagnostic>) {
    let args = t.args();
    match head {
        "Type" | "type" => {
            if !matches!(args.first(), Some(Term::Sym(_)) | Some(Term::Var(_))) {
                warn(out, format!("{t}: the first argument of `{head}` should name the type"));
            }
        }
        "element" | "value" | "packed" | "Poisson" => {
            arity(t, 1, out);
        }
        "rank" => {
            if arity(t, 1, out) && !is_count(&args[0]) && !is_open(&args[0]) {
                warn(out, format!("{t}: rank should be a non-negative integer or unknown"));
            }
        }
        "shape" => match shape_dims(t) {
            Ok(dims) => {
                for d in dims {
                    if let Some(n) = d.as_integer() {
                        if n.is_negative() {
                            warn(out, format!("{t}: negative dimension {n}"));
                        }
                    }
                }
            }
            Err(why) => warn(out, why),
        },
        "limits" => {
            if arity(t, 2, out) {
                match (args[0].as_integer(), args[1].as_integer()) {
                    (Some(lo), Some(hi)) => {
                        if lo.is_negative() || lo > hi {
                            warn(out, format!("{t}: limits need 0 <= lo <= hi"));
                        }
                    }
                    _ => {
                        let ok = |a: &Term| is_count(a) || is_open(a);
                        if !ok(&args[0]) || !ok(&args[1]) {
                            warn(out, format!("{t}: limits bounds should be integers"));
                        }
                    }
                }
            }
        }
        "union" => {
            if args.is_empty() {
                warn(out, format!("{t}: `union` needs at least one alternative"));
            }
        }
        "record" => {
            for a in args {
                let field_ok = matches!(a, Term::Tuple(m) if m.len() == 2 && matches!(m[0], Term::Sym(_)));
                if !field_ok {
                    warn(out, format!("{t}: record member {a} should be a (name, type) pair"));
                }
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term_str;
    use crate::terms::{desugar, Session};

    fn t(src: &str) -> Term {
        desugar(&parse_term_str(src).unwrap(), &mut Session::new())
    }

    #[test]
    fn recursive_list_type_is_fine() {
        assert!(check_vocabulary(&t("Type(int_list, union(record((head,int), tail(int_list)), nil))")).is_empty());
    }

    #[test]
    fn shapes() {
        assert_eq!(shape_dims(&t("shape(7,(7,nil))")), Ok(vec![t("7"), t("7")]));
        assert!(check_vocabulary(&t("shape(7,(7,nil))")).is_empty());
        let d = check_vocabulary(&t("shape(7,7)"));
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("unterminated shape list"));
        assert_eq!(shape_dims(&t("shape($s0,($s1,$rest))")).unwrap().len(), 2);
    }

    #[test]
    fn mybox_input_terms() {
        for src in [
            "{Type(array, element(real), rank(2), shape(7,(7,nil))), packed(row_major)}",
            "{value(500), Type(int)}",
            "limits(5, 15)",
            "Poisson(unknown)",
            "rank($r)",
        ] {
            assert!(check_vocabulary(&t(src)).is_empty(), "{src}");
        }
    }

    #[test]
    fn malformed_instances() {
        for src in ["rank(-1)", "rank(1/2)", "limits(15, 5)", "limits(1)", "value(1, 2)", "record(head)", "Type()"] {
            let parsed = parse_term_str(src);
            if let Ok(e) = parsed {
                let term = desugar(&e, &mut Session::new());
                assert!(!check_vocabulary(&term).is_empty(), "{src}");
            }
        }
    }
}
