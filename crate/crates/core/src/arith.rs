//! Exact arithmetic over evaluable terms and relation predicates.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::syntax::ast::RelOp;
use crate::terms::{check_set_wellformed, classify, Term, TermKind, HAT, MINUS, PLUS, SLASH, TIMES};
use crate::unify::BindingStore;

/// Largest exponent `\hat` will expand exactly.
const MAX_EXPONENT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NumericValue {
    Finite(BigRational),
    /// `true` for positive infinity.
    Infinity(bool),
    Unknown,
}

impl NumericValue {
    pub fn int(n: i64) -> Self {
        NumericValue::Finite(BigRational::from_integer(n.into()))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, NumericValue::Unknown)
    }

    /// Term form, used when a relation binds a computed value.
    pub fn to_term(&self) -> Term {
        match self {
            NumericValue::Finite(q) => Term::Num(q.clone()),
            NumericValue::Infinity(true) => Term::sym("infinity"),
            NumericValue::Infinity(false) => Term::apply(MINUS, vec![Term::sym("infinity")]),
            NumericValue::Unknown => Term::sym("unknown"),
        }
    }
}

impl fmt::Display for NumericValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    SetInArith,
    UnknownSymbol,
    UnboundVariable,
    UnknownFunction,
    VariableHead,
    Arity,
    DivisionByZero,
    /// A comparison involving an unknown value.
    Undecidable,
    IllFormedSet,
    OccursCheck,
}

impl FailureReason {
    pub fn code(self) -> &'static str {
        match self {
            FailureReason::SetInArith => "set-in-arith",
            FailureReason::UnknownSymbol => "unknown-symbol",
            FailureReason::UnboundVariable => "unbound-variable",
            FailureReason::UnknownFunction => "unknown-function",
            FailureReason::VariableHead => "variable-head",
            FailureReason::Arity => "arity",
            FailureReason::DivisionByZero => "division-by-zero",
            FailureReason::Undecidable => "undecidable",
            FailureReason::IllFormedSet => "ill-formed-set",
            FailureReason::OccursCheck => "occurs-check",
        }
    }
}

/// The predicate using the evaluated term fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateFailure {
    pub reason: FailureReason,
    pub detail: String,
}

impl PredicateFailure {
    fn new(reason: FailureReason, detail: impl Into<String>) -> Self {
        PredicateFailure {
            reason,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for PredicateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason.code(), self.detail)
    }
}

pub type EvalOutcome = Result<NumericValue, PredicateFailure>;

/// Standard constants known to the evaluator.
#[derive(Debug, Clone)]
pub struct ArithConfig {
    pub constants: BTreeMap<String, NumericValue>,
}

impl Default for ArithConfig {
    fn default() -> Self {
        let mut constants = BTreeMap::new();
        constants.insert(
            "maxint".to_string(),
            NumericValue::Finite(BigRational::from_integer(BigInt::from(i64::MAX))),
        );
        constants.insert("infinity".to_string(), NumericValue::Infinity(true));
        constants.insert("unknown".to_string(), NumericValue::Unknown);
        ArithConfig { constants }
    }
}

impl ArithConfig {
    pub fn with_constant(mut self, name: &str, value: NumericValue) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }
}

pub fn is_builtin(name: &str) -> bool {
    matches!(name, PLUS | MINUS | TIMES | SLASH | HAT | "log")
}

pub fn eval_numeric(t: &Term, s: &BindingStore) -> EvalOutcome {
    eval_numeric_with(t, s, &ArithConfig::default())
}

pub fn eval_numeric_with(t: &Term, s: &BindingStore, cfg: &ArithConfig) -> EvalOutcome {
    use FailureReason::*;
    match t {
        Term::Set(_) => Err(PredicateFailure::new(SetInArith, format!("set {t} in arithmetic"))),
        Term::Num(q) => Ok(NumericValue::Finite(q.clone())),
        Term::Sym(name) => cfg
            .constants
            .get(&**name)
            .cloned()
            .ok_or_else(|| PredicateFailure::new(UnknownSymbol, format!("`{name}` is not a constant"))),
        Term::Var(v) => match s.get(v) {
            Some(bound) => eval_numeric_with(bound, s, cfg),
            None => Err(PredicateFailure::new(UnboundVariable, format!("{v} is unbound"))),
        },
        Term::Tuple(m) => {
            if t.is_union_tuple() {
                return Err(PredicateFailure::new(SetInArith, format!("set {t} in arithmetic")));
            }
            let head = match m.first() {
                Some(Term::Sym(h)) => h,
                Some(Term::Var(v)) => {
                    return Err(PredicateFailure::new(VariableHead, format!("tuple head {v} is a variable")))
                }
                _ => return Err(PredicateFailure::new(UnknownFunction, format!("{t} has no function head"))),
            };
            if !is_builtin(head) {
                return Err(PredicateFailure::new(UnknownFunction, format!("`{head}` is not a numeric function")));
            }
            let args = m[1..]
                .iter()
                .map(|a| eval_numeric_with(a, s, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            apply_builtin(head, &args)
        }
    }
}

fn finite(q: BigRational) -> EvalOutcome {
    Ok(NumericValue::Finite(q))
}

fn sign_of(q: &BigRational) -> Ordering {
    q.cmp(&BigRational::zero())
}

pub fn apply_builtin(f: &str, args: &[NumericValue]) -> EvalOutcome {
    use NumericValue::*;
    let arity_ok = match f {
        MINUS => matches!(args.len(), 1 | 2),
        PLUS | TIMES | SLASH | HAT => args.len() == 2,
        "log" => args.len() == 1,
        _ => {
            return Err(PredicateFailure::new(
                FailureReason::UnknownFunction,
                format!("`{f}` is not a numeric function"),
            ))
        }
    };
    if !arity_ok {
        return Err(PredicateFailure::new(
            FailureReason::Arity,
            format!("`{f}` applied to {} arguments", args.len()),
        ));
    }
    if args.iter().any(NumericValue::is_unknown) {
        return Ok(Unknown);
    }
    match (f, args) {
        (MINUS, [a]) => Ok(negate(a)),
        (MINUS, [a, b]) => add(a, &negate(b)),
        (PLUS, [a, b]) => add(a, b),
        (TIMES, [a, b]) => multiply(a, b),
        (SLASH, [a, b]) => divide(a, b),
        (HAT, [a, b]) => power(a, b),
        ("log", [a]) => log2(a),
        _ => unreachable!("arity checked"),
    }
}

fn negate(a: &NumericValue) -> NumericValue {
    match a {
        NumericValue::Finite(q) => NumericValue::Finite(-q),
        NumericValue::Infinity(pos) => NumericValue::Infinity(!pos),
        NumericValue::Unknown => NumericValue::Unknown,
    }
}

fn add(a: &NumericValue, b: &NumericValue) -> EvalOutcome {
    use NumericValue::*;
    Ok(match (a, b) {
        (Finite(x), Finite(y)) => Finite(x + y),
        (Infinity(p), Finite(_)) | (Finite(_), Infinity(p)) => Infinity(*p),
        (Infinity(p), Infinity(q)) if p == q => Infinity(*p),
        _ => Unknown,
    })
}

fn multiply(a: &NumericValue, b: &NumericValue) -> EvalOutcome {
    use NumericValue::*;
    Ok(match (a, b) {
        (Finite(x), Finite(y)) => Finite(x * y),
        (Infinity(p), Finite(x)) | (Finite(x), Infinity(p)) => match sign_of(x) {
            Ordering::Equal => Unknown,
            Ordering::Greater => Infinity(*p),
            Ordering::Less => Infinity(!p),
        },
        (Infinity(p), Infinity(q)) => Infinity(p == q),
        _ => Unknown,
    })
}

fn divide(a: &NumericValue, b: &NumericValue) -> EvalOutcome {
    use NumericValue::*;
    if let Finite(y) = b {
        if y.is_zero() {
            return Err(PredicateFailure::new(
                FailureReason::DivisionByZero,
                format!("{a} divided by zero"),
            ));
        }
    }
    match (a, b) {
        (Finite(x), Finite(y)) => finite(x / y),
        (Finite(_), Infinity(_)) => finite(BigRational::zero()),
        (Infinity(p), Finite(y)) => Ok(Infinity(if y.is_positive() { *p } else { !p })),
        _ => Ok(Unknown),
    }
}

fn power(a: &NumericValue, b: &NumericValue) -> EvalOutcome {
    use NumericValue::*;
    let (Finite(base), Finite(exp)) = (a, b) else {
        return Ok(Unknown);
    };
    if !exp.is_integer() {
        return Ok(Unknown);
    }
    let e = exp.to_integer();
    let magnitude = match e.abs().to_u64() {
        Some(m) if m <= MAX_EXPONENT => m,
        _ => return Ok(Unknown),
    };
    if e.is_negative() && base.is_zero() {
        return Err(PredicateFailure::new(
            FailureReason::DivisionByZero,
            "zero raised to a negative power",
        ));
    }
    let mut acc = BigRational::one();
    let mut sq = base.clone();
    let mut m = magnitude;
    while m > 0 {
        if m & 1 == 1 {
            acc *= &sq;
        }
        m >>= 1;
        if m > 0 {
            sq = &sq * &sq;
        }
    }
    finite(if e.is_negative() { acc.recip() } else { acc })
}

/// Base-2 logarithm, exact only for positive integer powers of two.
fn log2(a: &NumericValue) -> EvalOutcome {
    let NumericValue::Finite(x) = a else {
        return Ok(NumericValue::Unknown);
    };
    if !x.is_integer() || !x.is_positive() {
        return Ok(NumericValue::Unknown);
    }
    let n = x.to_integer();
    let bits = n.bits();
    if n == BigInt::one() << (bits - 1) {
        Ok(NumericValue::int((bits - 1) as i64))
    } else {
        Ok(NumericValue::Unknown)
    }
}

fn compare(a: &NumericValue, b: &NumericValue) -> Option<Ordering> {
    use NumericValue::*;
    match (a, b) {
        (Finite(x), Finite(y)) => Some(x.cmp(y)),
        (Infinity(p), Infinity(q)) => Some(p.cmp(q)),
        (Infinity(p), Finite(_)) => Some(if *p { Ordering::Greater } else { Ordering::Less }),
        (Finite(_), Infinity(q)) => Some(if *q { Ordering::Less } else { Ordering::Greater }),
        _ => None,
    }
}

/// Outcome of evaluating a relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationOutcome {
    /// The relation holds; the store may have gained the `=` binding.
    Holds(BindingStore),
    False,
    Failure(PredicateFailure),
}

pub fn eval_relation(lhs: &Term, op: RelOp, rhs: &Term, s: &BindingStore) -> RelationOutcome {
    eval_relation_with(lhs, op, rhs, s, &ArithConfig::default())
}

/// Compare `lhs` with `rhs` numerically. An unbound variable on the left
/// of `=` is bound to the value of the right side instead.
pub fn eval_relation_with(
    lhs: &Term,
    op: RelOp,
    rhs: &Term,
    s: &BindingStore,
    cfg: &ArithConfig,
) -> RelationOutcome {
    let left = s.resolve(lhs);
    if let (RelOp::Eq, Term::Var(v)) = (op, &left) {
        let right = s.resolve(rhs);
        let value = if classify(&right) == TermKind::Set {
            if let Err(why) = check_set_wellformed(&right) {
                return RelationOutcome::Failure(PredicateFailure::new(FailureReason::IllFormedSet, why));
            }
            right
        } else {
            match eval_numeric_with(rhs, s, cfg) {
                Ok(NumericValue::Unknown) => right,
                Ok(value) => value.to_term(),
                Err(f) => return RelationOutcome::Failure(f),
            }
        };
        if value.contains_var(v) {
            return RelationOutcome::Failure(PredicateFailure::new(
                FailureReason::OccursCheck,
                format!("{v} occurs in {value}"),
            ));
        }
        let mut out = s.clone();
        out.bind(v.clone(), value);
        return RelationOutcome::Holds(out);
    }
    let a = match eval_numeric_with(lhs, s, cfg) {
        Ok(a) => a,
        Err(f) => return RelationOutcome::Failure(f),
    };
    let b = match eval_numeric_with(rhs, s, cfg) {
        Ok(b) => b,
        Err(f) => return RelationOutcome::Failure(f),
    };
    let Some(ord) = compare(&a, &b) else {
        return RelationOutcome::Failure(PredicateFailure::new(
            FailureReason::Undecidable,
            format!("cannot compare {a} {op} {b}"),
        ));
    };
    let holds = match op {
        RelOp::Eq => ord == Ordering::Equal,
        RelOp::Ne => ord != Ordering::Equal,
        RelOp::Gt => ord == Ordering::Greater,
        RelOp::Lt => ord == Ordering::Less,
        RelOp::Ge => ord != Ordering::Less,
        RelOp::Le => ord != Ordering::Greater,
    };
    if holds {
        RelationOutcome::Holds(s.clone())
    } else {
        RelationOutcome::False
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term_str;
    use crate::terms::{desugar, Session, Var};

    fn t(src: &str) -> Term {
        desugar(&parse_term_str(src).unwrap(), &mut Session::new())
    }

    fn ev(src: &str) -> EvalOutcome {
        eval_numeric(&t(src), &BindingStore::new())
    }

    fn q(n: i64, d: i64) -> NumericValue {
        NumericValue::Finite(BigRational::new(n.into(), d.into()))
    }

    fn reason(o: EvalOutcome) -> FailureReason {
        o.unwrap_err().reason
    }

    #[test]
    fn field_operations_are_exact() {
        assert_eq!(ev("1/2 + 1/3"), Ok(q(5, 6)));
        assert_eq!(ev("1/2 - 1/3"), Ok(q(1, 6)));
        assert_eq!(ev("2/3 * 9/4"), Ok(q(3, 2)));
        assert_eq!(ev("(1/3) / (2/9)"), Ok(q(3, 2)));
        assert_eq!(ev("-$x + 0").map(|_| ()).unwrap_err().reason, FailureReason::UnboundVariable);
    }

    #[test]
    fn powers() {
        assert_eq!(ev("2 ^ 10"), Ok(NumericValue::int(1024)));
        assert_eq!(ev("2 ^ (-2)"), Ok(q(1, 4)));
        assert_eq!(ev("(2/3) ^ 3"), Ok(q(8, 27)));
        assert_eq!(ev("7 ^ (3/2)"), Ok(NumericValue::Unknown));
        assert_eq!(ev("2 ^ 100000"), Ok(NumericValue::Unknown));
        assert_eq!(reason(ev("0 ^ (-1)")), FailureReason::DivisionByZero);
    }

    #[test]
    fn logarithm_of_powers_of_two_only() {
        assert_eq!(ev("log(1024)"), Ok(NumericValue::int(10)));
        assert_eq!(ev("log(1)"), Ok(NumericValue::int(0)));
        assert_eq!(ev("log(7)"), Ok(NumericValue::Unknown));
        assert_eq!(ev("log(1/2)"), Ok(NumericValue::Unknown));
        assert_eq!(ev("7 * log(7)"), Ok(NumericValue::Unknown));
    }

    #[test]
    fn failure_reasons() {
        assert_eq!(reason(ev("{1, 2}")), FailureReason::SetInArith);
        assert_eq!(reason(ev("banana")), FailureReason::UnknownSymbol);
        assert_eq!(reason(ev("$x")), FailureReason::UnboundVariable);
        assert_eq!(reason(ev("sqrt(4)")), FailureReason::UnknownFunction);
        assert_eq!(reason(ev("($f, 1, 2)")), FailureReason::VariableHead);
        assert_eq!(reason(apply_builtin(PLUS, &[NumericValue::int(1)])), FailureReason::Arity);
        assert_eq!(reason(ev("1 / 0")), FailureReason::DivisionByZero);
    }

    #[test]
    fn unknown_absorbs() {
        assert_eq!(ev("unknown + 5"), Ok(NumericValue::Unknown));
        assert_eq!(ev("unknown / 0"), Ok(NumericValue::Unknown));
        assert_eq!(ev("0 * unknown"), Ok(NumericValue::Unknown));
    }

    #[test]
    fn infinity_conventions() {
        assert_eq!(ev("infinity + 5"), Ok(NumericValue::Infinity(true)));
        assert_eq!(ev("infinity - infinity"), Ok(NumericValue::Unknown));
        assert_eq!(ev("0 * infinity"), Ok(NumericValue::Unknown));
        assert_eq!(ev("-2 * infinity"), Ok(NumericValue::Infinity(false)));
        assert_eq!(ev("1 / infinity"), Ok(q(0, 1)));
        assert_eq!(ev("maxint"), Ok(NumericValue::int(i64::MAX)));
    }

    #[test]
    fn relations() {
        let mut s = BindingStore::new();
        s.bind(Var::local("kv"), t("500"));
        s.bind(Var::env("nthreads"), t("4"));
        assert!(matches!(
            eval_relation(&t("$kv"), RelOp::Gt, &t("$$nthreads * 100"), &s),
            RelationOutcome::Holds(_)
        ));
        assert_eq!(eval_relation(&t("$kv"), RelOp::Le, &t("$$nthreads * 100"), &s), RelationOutcome::False);

        let mut s = BindingStore::new();
        s.bind(Var::local("n"), t("7"));
        let RelationOutcome::Holds(out) = eval_relation(&t("$n1"), RelOp::Eq, &t("$n + 1"), &s) else {
            panic!()
        };
        assert_eq!(out.lookup("n1"), Some(t("8")));

        assert!(matches!(
            eval_relation(&t("5"), RelOp::Ge, &t("unknown"), &BindingStore::new()),
            RelationOutcome::Failure(PredicateFailure { reason: FailureReason::Undecidable, .. })
        ));
        assert!(matches!(
            eval_relation(&t("$x"), RelOp::Ne, &t("1"), &BindingStore::new()),
            RelationOutcome::Failure(PredicateFailure { reason: FailureReason::UnboundVariable, .. })
        ));
    }

    #[test]
    fn equality_binds_symbolic_and_set_values() {
        let mut s = BindingStore::new();
        s.bind(Var::local("m"), t("7"));
        let RelationOutcome::Holds(out) = eval_relation(&t("$c"), RelOp::Eq, &t("$m * log($m)"), &s) else {
            panic!()
        };
        assert_eq!(out.lookup("c"), Some(t("7 * log(7)")));

        let RelationOutcome::Holds(out) =
            eval_relation(&t("$d"), RelOp::Eq, &t("{rank(3)} \\/ $base"), &BindingStore::new())
        else {
            panic!()
        };
        assert_eq!(out.lookup("d"), Some(t("{rank(3)} \\/ $base")));
    }

    /// Every combination of value kinds on both sides of every operator.
    #[test]
    fn comparison_truth_table() {
        let values = [
            NumericValue::int(-1),
            NumericValue::int(0),
            NumericValue::int(5),
            NumericValue::Infinity(true),
            NumericValue::Infinity(false),
            NumericValue::Unknown,
        ];
        let rank = |v: &NumericValue| -> Option<i64> {
            match v {
                NumericValue::Infinity(false) => Some(i64::MIN),
                NumericValue::Infinity(true) => Some(i64::MAX),
                NumericValue::Finite(q) => q.to_integer().to_i64(),
                NumericValue::Unknown => None,
            }
        };
        let ops = [RelOp::Eq, RelOp::Ne, RelOp::Gt, RelOp::Lt, RelOp::Ge, RelOp::Le];
        for a in &values {
            for b in &values {
                for op in ops {
                    let got = eval_relation(&a.to_term(), op, &b.to_term(), &BindingStore::new());
                    match (rank(a), rank(b)) {
                        (Some(x), Some(y)) => {
                            let expect = match op {
                                RelOp::Eq => x == y,
                                RelOp::Ne => x != y,
                                RelOp::Gt => x > y,
                                RelOp::Lt => x < y,
                                RelOp::Ge => x >= y,
                                RelOp::Le => x <= y,
                            };
                            assert_eq!(matches!(got, RelationOutcome::Holds(_)), expect, "{a} {op} {b}");
                            assert_eq!(matches!(got, RelationOutcome::False), !expect, "{a} {op} {b}");
                        }
                        _ => assert!(matches!(got, RelationOutcome::Failure(_)), "{a} {op} {b}"),
                    }
                }
            }
        }
    }
}
