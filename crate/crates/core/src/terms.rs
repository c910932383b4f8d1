//! The CAL term algebra.
//!
//! A [`Term`] is a rational number, a symbol, a variable, a tuple, or a flat
//! set `{t1, ..., tn} \/ v1 \/ ... \/ vq`. Infix operators are sugar for
//! tuples headed by reserved backslash symbols; `\/` between sets and
//! variables builds the set form directly.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::syntax::ast::{Expr, InfixOp, Sigil};
use crate::syntax::render::render_number;

pub const PLUS: &str = "\\plus";
pub const MINUS: &str = "\\minus";
pub const TIMES: &str = "\\times";
pub const SLASH: &str = "\\slash";
pub const HAT: &str = "\\hat";
pub const UNION: &str = "\\union";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Object,
    Env,
    Local,
    Anon,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// A variable written in the source.
    Named(Arc<str>),
    /// Generated per session: `$_` occurrences and explicit fresh variables.
    Gen(u64),
    /// Introduced by set unification.
    Sol(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub id: VarId,
    /// Namespace of the declaration instance the variable belongs to.
    pub scope: u32,
    pub kind: VarKind,
}

impl Var {
    pub fn named(kind: VarKind, name: &str) -> Var {
        Var {
            id: VarId::Named(name.into()),
            scope: 0,
            kind,
        }
    }

    pub fn object(name: &str) -> Var {
        Var::named(VarKind::Object, name)
    }

    pub fn env(name: &str) -> Var {
        Var::named(VarKind::Env, name)
    }

    pub fn local(name: &str) -> Var {
        Var::named(VarKind::Local, name)
    }

    pub fn with_scope(mut self, scope: u32) -> Var {
        self.scope = scope;
        self
    }

    pub fn name(&self) -> Option<&str> {
        match &self.id {
            VarId::Named(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_named(&self) -> bool {
        matches!(self.id, VarId::Named(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.id, self.kind) {
            (VarId::Named(n), VarKind::Env) => write!(f, "$${n}"),
            (VarId::Named(n), _) => write!(f, "${n}"),
            (VarId::Gen(n), _) => write!(f, "$_G{n}"),
            (VarId::Sol(n), _) => write!(f, "$_N{n}"),
        }
    }
}

/// Hands out session-unique generated variables.
#[derive(Debug, Clone)]
pub struct Session {
    next: u64,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Session { next: 1 }
    }

    fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }

    /// A local variable distinct from every variable created earlier in
    /// this session.
    pub fn fresh_variable(&mut self) -> Var {
        Var {
            id: VarId::Gen(self.next_id()),
            scope: 0,
            kind: VarKind::Local,
        }
    }

    /// The variable standing for one textual occurrence of `$_`.
    pub fn fresh_anon(&mut self) -> Var {
        Var {
            id: VarId::Gen(self.next_id()),
            scope: 0,
            kind: VarKind::Anon,
        }
    }

    pub fn generated(&self) -> u64 {
        self.next - 1
    }
}

/// A flat set: distinct individual elements plus union variables ranging
/// over sets. Kept sorted and deduplicated so derived equality is set
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetTerm {
    elems: Vec<Term>,
    unions: Vec<Var>,
}

impl SetTerm {
    pub fn new(mut elems: Vec<Term>, mut unions: Vec<Var>) -> SetTerm {
        elems.sort();
        elems.dedup();
        unions.sort();
        unions.dedup();
        SetTerm { elems, unions }
    }

    pub fn empty() -> SetTerm {
        SetTerm::new(Vec::new(), Vec::new())
    }

    pub fn elems(&self) -> &[Term] {
        &self.elems
    }

    pub fn unions(&self) -> &[Var] {
        &self.unions
    }

    pub fn into_parts(self) -> (Vec<Term>, Vec<Var>) {
        (self.elems, self.unions)
    }

    pub fn is_flat(&self) -> bool {
        self.elems.iter().all(|e| classify(e) == TermKind::Individual)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Num(BigRational),
    Sym(Arc<str>),
    Var(Var),
    Tuple(Vec<Term>),
    Set(SetTerm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Individual,
    Set,
}

impl Term {
    pub fn int(n: i64) -> Term {
        Term::Num(BigRational::from_integer(n.into()))
    }

    pub fn rat(n: i64, d: i64) -> Term {
        Term::Num(BigRational::new(n.into(), d.into()))
    }

    pub fn sym(s: &str) -> Term {
        Term::Sym(s.into())
    }

    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    /// `head(args...)`, i.e. the tuple `(head, args...)`.
    pub fn apply(head: &str, args: Vec<Term>) -> Term {
        let mut members = Vec::with_capacity(args.len() + 1);
        members.push(Term::sym(head));
        members.extend(args);
        Term::Tuple(members)
    }

    pub fn set(elems: Vec<Term>, unions: Vec<Var>) -> Term {
        Term::Set(SetTerm::new(elems, unions))
    }

    pub fn head_symbol(&self) -> Option<&str> {
        match self {
            Term::Tuple(m) => match m.first() {
                Some(Term::Sym(s)) => Some(s),
                _ => None,
            },
            _ => None,
        }
    }

    /// Arguments of a symbol-headed tuple.
    pub fn args(&self) -> &[Term] {
        match self {
            Term::Tuple(m) if m.len() > 1 => &m[1..],
            _ => &[],
        }
    }

    pub fn is_union_tuple(&self) -> bool {
        self.head_symbol() == Some(UNION)
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        match self {
            Term::Num(n) if n.is_integer() => Some(n.to_integer()),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Tuple(m) => m.iter().for_each(|t| t.collect_vars(out)),
            Term::Set(s) => {
                s.elems.iter().for_each(|t| t.collect_vars(out));
                out.extend(s.unions.iter().cloned());
            }
            Term::Num(_) | Term::Sym(_) => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Tuple(m) => m.iter().any(|t| t.contains_var(v)),
            Term::Set(s) => s.unions.contains(v) || s.elems.iter().any(|t| t.contains_var(v)),
            Term::Num(_) | Term::Sym(_) => false,
        }
    }

    /// Rebuild the term with every variable replaced by `f(var)`. Union
    /// variables go through [`union_of`], so replacing them by sets merges.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Tuple(m) => Term::Tuple(m.iter().map(|t| t.map_vars(f)).collect()),
            Term::Set(s) => {
                let elems = s.elems.iter().map(|t| t.map_vars(f)).collect();
                let mut operands = vec![Term::set(elems, Vec::new())];
                operands.extend(s.unions.iter().map(&mut *f));
                union_of(operands)
            }
            Term::Num(_) | Term::Sym(_) => self.clone(),
        }
    }

    pub fn with_scope(&self, scope: u32) -> Term {
        self.map_vars(&mut |v| Term::Var(v.clone().with_scope(scope)))
    }
}

/// Individual vs set. `\union`-headed tuples count as sets.
pub fn classify(t: &Term) -> TermKind {
    match t {
        Term::Set(_) => TermKind::Set,
        t if t.is_union_tuple() => TermKind::Set,
        _ => TermKind::Individual,
    }
}

/// Combine union operands. Sets and variables merge into one flat set;
/// anything else leaves an (ill-formed) `\union` tuple holding the merged
/// set followed by the offending operands.
pub fn union_of(operands: Vec<Term>) -> Term {
    let mut flat = Vec::new();
    let mut stack: Vec<Term> = operands.into_iter().rev().collect();
    while let Some(op) = stack.pop() {
        if op.is_union_tuple() {
            let Term::Tuple(m) = op else { unreachable!() };
            stack.extend(m.into_iter().skip(1).rev());
        } else {
            flat.push(op);
        }
    }
    if flat.len() == 1 {
        return flat.pop().expect("one operand");
    }
    let mut elems = Vec::new();
    let mut unions = Vec::new();
    let mut bad = Vec::new();
    for op in flat {
        match op {
            Term::Set(s) => {
                let (e, u) = s.into_parts();
                elems.extend(e);
                unions.extend(u);
            }
            Term::Var(v) => unions.push(v),
            other => bad.push(other),
        }
    }
    let merged = Term::set(elems, unions);
    if bad.is_empty() {
        merged
    } else {
        let mut members = vec![Term::sym(UNION), merged];
        members.extend(bad);
        Term::Tuple(members)
    }
}

/// Check that no set contains a set and every union operand is a set or a
/// variable. Violations make the predicate using the term fail.
pub fn check_set_wellformed(t: &Term) -> Result<(), String> {
    match t {
        Term::Set(s) => {
            for e in s.elems() {
                if classify(e) == TermKind::Set {
                    return Err(format!("set {t} contains the set {e}"));
                }
                check_set_wellformed(e)?;
            }
            Ok(())
        }
        Term::Tuple(m) if t.is_union_tuple() => {
            for op in &m[1..] {
                match op {
                    Term::Set(_) | Term::Var(_) => check_set_wellformed(op)?,
                    o if o.is_union_tuple() => check_set_wellformed(o)?,
                    o => return Err(format!("union with the non-set operand {o}")),
                }
            }
            Ok(())
        }
        Term::Tuple(m) => m.iter().try_for_each(check_set_wellformed),
        _ => Ok(()),
    }
}

/// Resolves surface variables to [`Var`]s while desugaring.
pub struct Desugarer<'a> {
    pub session: &'a mut Session,
    objects: BTreeSet<String>,
    scope: u32,
}

impl<'a> Desugarer<'a> {
    pub fn new(session: &'a mut Session) -> Self {
        Desugarer {
            session,
            objects: BTreeSet::new(),
            scope: 0,
        }
    }

    /// Names that are object variables (signature fields).
    pub fn with_objects<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.objects = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_scope(mut self, scope: u32) -> Self {
        self.scope = scope;
        self
    }

    pub fn variable(&mut self, sigil: Sigil, name: &str) -> Var {
        let var = match sigil {
            Sigil::Anon => self.session.fresh_anon(),
            Sigil::Double => Var::env(name),
            Sigil::Single if self.objects.contains(name) => Var::object(name),
            Sigil::Single => Var::local(name),
        };
        var.with_scope(self.scope)
    }

    pub fn desugar(&mut self, e: &Expr) -> Term {
        match e {
            Expr::Num(n) => Term::Num(n.clone()),
            Expr::Sym(s) => Term::sym(s),
            Expr::Var(v) => Term::Var(self.variable(v.sigil, &v.name)),
            Expr::Tuple(items) => Term::Tuple(items.iter().map(|i| self.desugar(i)).collect()),
            Expr::Apply(head, args) => {
                Term::apply(head, args.iter().map(|a| self.desugar(a)).collect())
            }
            Expr::Set(items) => Term::set(items.iter().map(|i| self.desugar(i)).collect(), vec![]),
            Expr::Binary(InfixOp::Union, _, _) => {
                let mut operands = Vec::new();
                collect_union_operands(e, &mut operands);
                let terms = operands.into_iter().map(|o| self.desugar(o)).collect();
                union_of(terms)
            }
            Expr::Binary(op, l, r) => {
                Term::apply(op.symbol(), vec![self.desugar(l), self.desugar(r)])
            }
            Expr::Neg(inner) => match self.desugar(inner) {
                Term::Num(n) => Term::Num(-n),
                other => Term::apply(MINUS, vec![other]),
            },
            Expr::Group(inner) => self.desugar(inner),
        }
    }
}

fn collect_union_operands<'e>(e: &'e Expr, out: &mut Vec<&'e Expr>) {
    match e {
        Expr::Binary(InfixOp::Union, l, r) => {
            collect_union_operands(l, out);
            collect_union_operands(r, out);
        }
        other => out.push(other),
    }
}

/// Desugar with every single-dollar variable treated as local.
pub fn desugar(e: &Expr, session: &mut Session) -> Term {
    Desugarer::new(session).desugar(e)
}

// ---- display ----------------------------------------------------------------

const P_UNION: u8 = 1;
const P_ADD: u8 = 2;
const P_MUL: u8 = 3;
const P_POW: u8 = 4;

fn binary_prec(head: &str) -> Option<(u8, &'static str)> {
    match head {
        PLUS => Some((P_ADD, "+")),
        MINUS => Some((P_ADD, "-")),
        TIMES => Some((P_MUL, "*")),
        SLASH => Some((P_MUL, "/")),
        HAT => Some((P_POW, "^")),
        _ => None,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_term(t: &Term, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Num(n) => {
            let text = render_number(n);
            let needs_parens =
                (n.is_negative() && ctx > 0) || (!n.denom().is_one() && ctx >= P_MUL);
            if needs_parens {
                write!(f, "({text})")
            } else {
                f.write_str(&text)
            }
        }
        Term::Sym(s) => f.write_str(s),
        Term::Var(v) => write!(f, "{v}"),
        Term::Set(s) => {
            let parens = !s.unions.is_empty() && ctx > P_UNION;
            if parens {
                f.write_str("(")?;
            }
            f.write_str("{")?;
            for (i, e) in s.elems.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(e, 0, f)?;
            }
            f.write_str("}")?;
            for u in &s.unions {
                write!(f, " \\/ {u}")?;
            }
            if parens {
                f.write_str(")")?;
            }
            Ok(())
        }
        Term::Tuple(m) => {
            let head = match m.first() {
                Some(Term::Sym(s)) => Some(&**s),
                _ => None,
            };
            match head {
                Some(h) if m.len() == 3 && binary_prec(h).is_some() => {
                    let (prec, op) = binary_prec(h).expect("checked");
                    let parens = prec < ctx;
                    if parens {
                        f.write_str("(")?;
                    }
                    write_term(&m[1], prec, f)?;
                    write!(f, " {op} ")?;
                    write_term(&m[2], prec + 1, f)?;
                    if parens {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                Some(MINUS) if m.len() == 2 => {
                    if ctx > 0 {
                        f.write_str("(")?;
                    }
                    f.write_str("-")?;
                    write_term(&m[1], P_MUL, f)?;
                    if ctx > 0 {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                Some(UNION) if m.len() >= 3 => {
                    let parens = ctx > P_UNION;
                    if parens {
                        f.write_str("(")?;
                    }
                    for (i, op) in m[1..].iter().enumerate() {
                        if i > 0 {
                            f.write_str(" \\/ ")?;
                        }
                        write_term(op, P_ADD, f)?;
                    }
                    if parens {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                Some(h) if m.len() >= 2 && is_identifier(h) => {
                    write!(f, "{h}(")?;
                    for (i, a) in m[1..].iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_term(a, 0, f)?;
                    }
                    f.write_str(")")
                }
                _ => {
                    f.write_str("(")?;
                    for (i, a) in m.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_term(a, 0, f)?;
                    }
                    f.write_str(")")
                }
            }
        }
    }
}

/// Terms print in CAL surface syntax.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, 0, f)
    }
}

impl fmt::Display for SetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(&Term::Set(self.clone()), 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term_str;

    fn ds(src: &str) -> Term {
        desugar(&parse_term_str(src).unwrap(), &mut Session::new())
    }

    fn l(name: &str) -> Term {
        Term::Var(Var::local(name))
    }

    #[test]
    fn infix_becomes_tuples() {
        assert_eq!(
            ds("$N * log($N)"),
            Term::apply(TIMES, vec![l("N"), Term::apply("log", vec![l("N")])])
        );
        assert_eq!(
            ds("1 + 2 * 3"),
            Term::apply(
                PLUS,
                vec![Term::int(1), Term::apply(TIMES, vec![Term::int(2), Term::int(3)])]
            )
        );
        assert_eq!(
            ds("2 ^ 3 ^ 2"),
            Term::apply(
                HAT,
                vec![Term::apply(HAT, vec![Term::int(2), Term::int(3)]), Term::int(2)]
            )
        );
        assert_eq!(
            ds("8 - 2 - 1"),
            Term::apply(
                MINUS,
                vec![Term::apply(MINUS, vec![Term::int(8), Term::int(2)]), Term::int(1)]
            )
        );
    }

    #[test]
    fn head_extraction_is_tuple() {
        assert_eq!(ds("a(b,c)"), ds("(a,b,c)"));
        assert_eq!(ds("a(b,c)"), Term::Tuple(vec![Term::sym("a"), Term::sym("b"), Term::sym("c")]));
    }

    #[test]
    fn union_chain_builds_flat_set() {
        assert_eq!(
            ds("{a} \\/ $v \\/ $w"),
            Term::set(vec![Term::sym("a")], vec![Var::local("v"), Var::local("w")])
        );
        assert_eq!(
            ds("{a} \\/ {b, a}"),
            Term::set(vec![Term::sym("a"), Term::sym("b")], vec![])
        );
    }

    #[test]
    fn unary_minus_folds_into_numbers() {
        assert_eq!(ds("-(3)"), Term::int(-3));
        assert_eq!(ds("-3/4"), Term::rat(-3, 4));
        assert_eq!(ds("-$x"), Term::apply(MINUS, vec![l("x")]));
    }

    #[test]
    fn group_is_not_a_tuple() {
        assert_eq!(ds("(a)"), Term::sym("a"));
    }

    #[test]
    fn set_equality_ignores_order_and_duplicates() {
        assert_eq!(ds("{a, b, a}"), ds("{b, a}"));
        assert_ne!(ds("(a, b)"), ds("(b, a)"));
    }

    #[test]
    fn classify_terms() {
        assert_eq!(classify(&ds("{1,2}")), TermKind::Set);
        assert_eq!(classify(&ds("(a,b)")), TermKind::Individual);
        let union_tuple = Term::apply(
            UNION,
            vec![Term::set(vec![Term::sym("a")], vec![]), Term::set(vec![Term::sym("b")], vec![])],
        );
        assert_eq!(classify(&union_tuple), TermKind::Set);
        assert_eq!(classify(&l("x")), TermKind::Individual);
    }

    #[test]
    fn wellformedness() {
        assert!(check_set_wellformed(&ds("{a, {b}}")).is_err());
        assert!(check_set_wellformed(&ds("{a} \\/ b")).is_err());
        assert!(check_set_wellformed(&ds("{a} \\/ $v")).is_ok());
        assert!(check_set_wellformed(&ds("f({a, {b}})")).is_err());
        assert!(check_set_wellformed(&ds("{a, f(b)}")).is_ok());
    }

    #[test]
    fn anonymous_occurrences_are_distinct() {
        let mut session = Session::new();
        let t = desugar(&parse_term_str("($_, $_, $x)").unwrap(), &mut session);
        let Term::Tuple(m) = &t else { panic!() };
        assert_ne!(m[0], m[1]);
        assert_eq!(session.generated(), 2);
        assert!(t.vars().iter().filter(|v| v.kind == VarKind::Anon).count() == 2);
    }

    #[test]
    fn fresh_variables_are_pairwise_distinct() {
        let mut session = Session::new();
        let vars: BTreeSet<Var> = (0..1000).map(|_| session.fresh_variable()).collect();
        assert_eq!(vars.len(), 1000);
        assert!(vars.iter().all(|v| v.kind == VarKind::Local && !v.is_named()));
        let parsed = ds("$x");
        assert!(!vars.contains(&Var::local("x")));
        assert_ne!(parsed, Term::Var(session.fresh_variable()));
    }

    #[test]
    fn object_and_env_categories() {
        let mut session = Session::new();
        let mut d = Desugarer::new(&mut session).with_objects(["a"]);
        let t = d.desugar(&parse_term_str("($a, $b, $$n)").unwrap());
        let kinds: Vec<VarKind> = t.vars().into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&VarKind::Object));
        assert!(kinds.contains(&VarKind::Local));
        assert!(kinds.contains(&VarKind::Env));
    }

    #[test]
    fn display_is_surface_syntax() {
        for src in [
            "$m * log($m) / $$nthreads",
            "$m ^ (3/2)",
            "Type(array, element(real), rank(2), shape(7, (7, nil)))",
            "{packed(row_major), rank(2)} \\/ $v",
            "a - (b - c)",
            "(a + b) * c",
            "Poisson(1 / $N)",
            "{}",
            "-$x * 2",
        ] {
            let t = ds(src);
            let shown = t.to_string();
            assert_eq!(ds(&shown), t, "{src} displayed as {shown}");
        }
        assert_eq!(ds("$m*log($m)/$$nthreads").to_string(), "$m * log($m) / $$nthreads");
    }
}
