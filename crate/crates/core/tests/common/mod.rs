#![allow(dead_code)]

use cal::clauses::{flatten_provided, BoxDeclaration};
use cal::syntax::{parse_source, parse_term_str};
use cal::terms::desugar;
use cal::unify::BindingStore;
use cal::{Session, Term, Var};
use rand::seq::SliceRandom;
use rand::Rng;

pub const MYBOX: &str = include_str!("../fixtures/mybox.cal");

pub fn t(src: &str) -> Term {
    desugar(&parse_term_str(src).unwrap(), &mut Session::new())
}

pub fn mybox() -> BoxDeclaration {
    let ast = parse_source(MYBOX).unwrap().remove(0);
    flatten_provided(&ast, &mut Session::new()).unwrap().0
}

/// A 7x7 real array, `{value(kv), Type(int)}` and four threads.
pub fn mybox_inputs(kv: i64) -> BindingStore {
    let mut s = BindingStore::new();
    s.bind(
        Var::object("a"),
        t("{Type(array, element(real), rank(2), shape(7,(7,nil))), packed(row_major)}"),
    );
    s.bind(Var::object("k"), t(&format!("{{value({kv}), Type(int)}}")));
    s.bind(Var::env("nthreads"), t("4"));
    s
}

const SYMBOLS: &[&str] = &["a", "b", "nil", "real", "unknown", "row_major", "Type", "int"];
const VARIABLES: &[&str] = &["$x", "$n", "$kv", "$$T0", "$$nthreads", "$_", "$y"];
const HEADS: &[&str] = &["f", "Type", "shape", "value", "limits", "log", "rank"];
const OPS: &[&str] = &["+", "-", "*", "/", "^", "\\/"];
const RELS: &[&str] = &["=", ">", "<", ">=", "<=", "!="];

fn list<R: Rng>(rng: &mut R, n: usize, depth: u32) -> String {
    (0..n).map(|_| gen_expr(rng, depth)).collect::<Vec<_>>().join(", ")
}

/// Random surface term text.
pub fn gen_expr<R: Rng>(rng: &mut R, depth: u32) -> String {
    let pick = if depth == 0 { rng.gen_range(0..4) } else { rng.gen_range(0..10) };
    match pick {
        0 => rng.gen_range(0..1000).to_string(),
        1 => SYMBOLS.choose(rng).unwrap().to_string(),
        2 => VARIABLES.choose(rng).unwrap().to_string(),
        3 => format!("(-{})", rng.gen_range(1..100)),
        4 | 5 => format!(
            "{} {} {}",
            gen_expr(rng, depth - 1),
            OPS.choose(rng).unwrap(),
            gen_expr(rng, depth - 1)
        ),
        6 => {
            let n = rng.gen_range(1..=3);
            format!("{}({})", HEADS.choose(rng).unwrap(), list(rng, n, depth - 1))
        }
        7 => {
            let n = rng.gen_range(2..=3);
            format!("({})", list(rng, n, depth - 1))
        }
        8 => {
            let n = rng.gen_range(0..=3);
            format!("{{{}}}", list(rng, n, depth - 1))
        }
        _ => format!("({})", gen_expr(rng, depth - 1)),
    }
}

pub fn gen_predicate<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        return format!("{} :=: {}", gen_expr(rng, 2), gen_expr(rng, 2));
    }
    // a relation's left side is a variable or a number
    let lhs = if rng.gen_bool(0.7) {
        VARIABLES.choose(rng).unwrap().to_string()
    } else {
        rng.gen_range(0..1000).to_string()
    };
    format!("{lhs} {} {}", RELS.choose(rng).unwrap(), gen_expr(rng, 2))
}

fn predicates<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| gen_predicate(rng)).collect::<Vec<_>>().join(", ")
}

/// A clause with `m` conditions and `k` assertions.
pub fn gen_clause_text<R: Rng>(rng: &mut R, m: usize, k: usize) -> String {
    let conds = predicates(rng, m);
    let sep = if conds.is_empty() { "" } else { " " };
    format!("{conds}{sep}=> {};", predicates(rng, k))
}

fn fields<R: Rng>(rng: &mut R, pool: &[&str]) -> String {
    let n = rng.gen_range(0..=pool.len().min(3));
    pool.choose_multiple(rng, n).cloned().collect::<Vec<_>>().join(",")
}

pub fn gen_declaration<R: Rng>(rng: &mut R) -> String {
    let ins = fields(rng, &["a", "k", "x"]);
    let outs: Vec<String> = (0..rng.gen_range(0..=2))
        .map(|_| format!("({})", fields(rng, &["b", "c", "d", "y"])))
        .collect();
    let name = format!("B{}", rng.gen_range(0..100));
    // without outputs the arrow form would swallow a clause starting with `(`
    let mut src = if outs.is_empty() || rng.gen_bool(0.5) {
        format!("box {name} (({ins}) -> {}):\n", outs.join(", "))
    } else {
        format!("box {name}: ({ins}) => {}\n", outs.join(", "))
    };
    for _ in 0..rng.gen_range(0..=3) {
        if rng.gen_bool(0.3) {
            let n = rng.gen_range(1..=2);
            src.push_str(&format!("provided {} use\n", predicates(rng, n)));
            for _ in 0..rng.gen_range(1..=3) {
                let (m, k) = (rng.gen_range(0..=2), rng.gen_range(1..=3));
                src.push_str(&format!("    {}\n", gen_clause_text(rng, m, k)));
            }
            src.push_str("end;\n");
        } else {
            let (m, k) = (rng.gen_range(0..=3), rng.gen_range(1..=3));
            src.push_str(&format!("    {}\n", gen_clause_text(rng, m, k)));
        }
    }
    src
}
