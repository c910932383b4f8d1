//! Unification over terms, backed by a binding store.
//!
//! Sets of the form `{t1..tn} \/ v1 .. \/ vq` unify by choosing which
//! elements coincide and which union variables contribute each element;
//! the remaining unknown parts are shared through fresh region variables.
//! Several incomparable solutions may come back.

use std::collections::{BTreeMap, BTreeSet};

use crate::terms::{check_set_wellformed, union_of, SetTerm, Term, Var, VarId, VarKind};

/// Variable associations. Extending a store never changes an existing
/// binding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingStore {
    map: BTreeMap<Var, Term>,
    next_fresh: u64,
}

impl BindingStore {
    pub fn new() -> Self {
        BindingStore::default()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn is_bound(&self, v: &Var) -> bool {
        self.map.contains_key(v)
    }

    /// Associate an unbound variable. The caller is responsible for the
    /// occurs check; [`unify`] does it.
    pub fn bind(&mut self, v: Var, t: Term) {
        debug_assert!(!self.map.contains_key(&v), "{v} rebound");
        self.map.insert(v, t);
    }

    /// Resolved binding of the first named, non-anonymous variable called
    /// `name`. Anonymous and generated variables are never found.
    pub fn lookup(&self, name: &str) -> Option<Term> {
        self.map
            .keys()
            .find(|v| v.kind != VarKind::Anon && v.name() == Some(name))
            .map(|v| self.resolve(&Term::Var(v.clone())))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// A variable that does not occur in any term built so far from this
    /// store.
    pub fn fresh(&mut self) -> Var {
        let id = self.next_fresh;
        self.next_fresh += 1;
        Var {
            id: VarId::Sol(id),
            scope: 0,
            kind: VarKind::Local,
        }
    }

    pub fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.map.get(v) {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            Term::Num(_) | Term::Sym(_) => t.clone(),
            Term::Tuple(m) => {
                let members: Vec<Term> = m.iter().map(|x| self.resolve(x)).collect();
                if t.is_union_tuple() && members.len() >= 2 {
                    union_of(members.into_iter().skip(1).collect())
                } else {
                    Term::Tuple(members)
                }
            }
            Term::Set(s) => {
                let elems = s.elems().iter().map(|e| self.resolve(e)).collect();
                let mut operands = vec![Term::set(elems, Vec::new())];
                operands.extend(s.unions().iter().map(|u| self.resolve(&Term::Var(u.clone()))));
                union_of(operands)
            }
        }
    }

    /// True when every binding of `base` is present here unchanged.
    pub fn extends(&self, base: &BindingStore) -> bool {
        base.map.iter().all(|(v, t)| self.map.get(v) == Some(t))
    }

    /// Resolved values of all bound named variables.
    pub fn named_projection(&self) -> BTreeMap<Var, Term> {
        self.map
            .keys()
            .filter(|v| v.is_named())
            .map(|v| (v.clone(), self.resolve(&Term::Var(v.clone()))))
            .collect()
    }
}

pub fn resolve(t: &Term, s: &BindingStore) -> Term {
    s.resolve(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnifyResult {
    Failure,
    /// Non-empty list of maximally general solutions.
    Success(Vec<BindingStore>),
}

impl UnifyResult {
    fn from_stores(stores: Vec<BindingStore>) -> Self {
        if stores.is_empty() {
            UnifyResult::Failure
        } else {
            UnifyResult::Success(stores)
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, UnifyResult::Success(_))
    }

    pub fn into_stores(self) -> Vec<BindingStore> {
        match self {
            UnifyResult::Failure => Vec::new(),
            UnifyResult::Success(s) => s,
        }
    }

    pub fn stores(&self) -> &[BindingStore] {
        match self {
            UnifyResult::Failure => &[],
            UnifyResult::Success(s) => s,
        }
    }
}

pub fn unify(t1: &Term, t2: &Term, s: &BindingStore) -> UnifyResult {
    let mut out = Vec::new();
    solve(vec![(t1.clone(), t2.clone())], s.clone(), &mut out);
    let mut vars = t1.vars();
    vars.extend(t2.vars());
    UnifyResult::from_stores(maximal(out, &vars))
}

pub fn unify_sets(s1: &SetTerm, s2: &SetTerm, s: &BindingStore) -> UnifyResult {
    unify(&Term::Set(s1.clone()), &Term::Set(s2.clone()), s)
}

/// Unify several pairs at once, e.g. the members of two tuples.
pub fn unify_all(pairs: &[(Term, Term)], s: &BindingStore) -> UnifyResult {
    let mut out = Vec::new();
    solve(pairs.iter().rev().cloned().collect(), s.clone(), &mut out);
    let mut vars = BTreeSet::new();
    for (a, b) in pairs {
        a.collect_vars(&mut vars);
        b.collect_vars(&mut vars);
    }
    UnifyResult::from_stores(maximal(out, &vars))
}

/// Work through `stack` (last pair first), pushing every solution.
fn solve(mut stack: Vec<(Term, Term)>, mut s: BindingStore, out: &mut Vec<BindingStore>) {
    while let Some((a, b)) = stack.pop() {
        let a = s.resolve(&a);
        let b = s.resolve(&b);
        if check_set_wellformed(&a).is_err() || check_set_wellformed(&b).is_err() {
            return;
        }
        if a == b {
            continue;
        }
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let (hi, lo) = if x > y { (x, y) } else { (y, x) };
                s.bind(hi, Term::Var(lo));
            }
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if let Term::Set(set) = &t {
                    if set.unions().contains(&x) {
                        let alone = SetTerm::new(Vec::new(), vec![x]);
                        for sol in set_solutions(&alone, set, &s) {
                            solve(stack.clone(), sol, out);
                        }
                        return;
                    }
                }
                if t.contains_var(&x) {
                    return;
                }
                s.bind(x, t);
            }
            (Term::Tuple(m1), Term::Tuple(m2)) => {
                if m1.len() != m2.len() {
                    return;
                }
                stack.extend(m1.into_iter().zip(m2).rev());
            }
            (Term::Set(l), Term::Set(r)) => {
                for sol in set_solutions(&l, &r, &s) {
                    solve(stack.clone(), sol, out);
                }
                return;
            }
            _ => return,
        }
    }
    out.push(s);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
struct Class {
    rep: Term,
    left: bool,
    right: bool,
}

impl Class {
    fn mark(&mut self, side: Side) {
        match side {
            Side::Left => self.left = true,
            Side::Right => self.right = true,
        }
    }
}

/// All solutions (not yet filtered for generality) of `l = r` extending `s`.
fn set_solutions(l: &SetTerm, r: &SetTerm, s: &BindingStore) -> Vec<BindingStore> {
    let items: Vec<(Term, Side)> = l
        .elems()
        .iter()
        .map(|e| (e.clone(), Side::Left))
        .chain(r.elems().iter().map(|e| (e.clone(), Side::Right)))
        .collect();

    let mut vars: Vec<Var> = l.unions().to_vec();
    for y in r.unions() {
        if !vars.contains(y) {
            vars.push(y.clone());
        }
    }
    let left_mask: u32 = mask_of(&vars, l.unions());
    let right_mask: u32 = mask_of(&vars, r.unions());

    let mut partitions = Vec::new();
    partition(&items, 0, Vec::new(), s.clone(), &mut partitions);

    let n = vars.len() as u32;
    let regions: Vec<u32> = (1..(1u32 << n))
        .filter(|m| m & left_mask != 0 && m & right_mask != 0)
        .collect();

    let mut out = Vec::new();
    for (classes, store) in partitions {
        let options: Vec<Vec<u32>> = classes
            .iter()
            .map(|c| {
                (0..(1u32 << n))
                    .filter(|m| (c.left || m & left_mask != 0) && (c.right || m & right_mask != 0))
                    .collect()
            })
            .collect();
        if options.iter().any(|o| o.is_empty()) {
            continue;
        }
        let mut choice = vec![0usize; classes.len()];
        'combos: loop {
            let mut st = store.clone();
            let region_vars: Vec<(u32, Var)> = regions.iter().map(|&m| (m, st.fresh())).collect();
            let mut pairs = Vec::with_capacity(vars.len());
            for (i, v) in vars.iter().enumerate() {
                let bit = 1u32 << i;
                let elems = classes
                    .iter()
                    .zip(&choice)
                    .zip(&options)
                    .filter(|((_, &k), opts)| opts[k] & bit != 0)
                    .map(|((c, _), _)| c.rep.clone())
                    .collect();
                let unions = region_vars
                    .iter()
                    .filter(|(m, _)| m & bit != 0)
                    .map(|(_, nv)| nv.clone())
                    .collect();
                pairs.push((Term::Var(v.clone()), Term::set(elems, unions)));
            }
            pairs.reverse();
            solve(pairs, st, &mut out);

            // next combination, odometer style
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break 'combos;
                }
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }
    out
}

fn mask_of(vars: &[Var], subset: &[Var]) -> u32 {
    vars.iter()
        .enumerate()
        .filter(|(_, v)| subset.contains(v))
        .fold(0, |m, (i, _)| m | (1 << i))
}

/// Group the elements of both sides into classes whose members unify.
/// An element identical to an existing class representative always joins it.
fn partition(
    items: &[(Term, Side)],
    i: usize,
    classes: Vec<Class>,
    s: BindingStore,
    out: &mut Vec<(Vec<Class>, BindingStore)>,
) {
    if i == items.len() {
        out.push((classes, s));
        return;
    }
    let (item, side) = &items[i];
    let resolved = s.resolve(item);
    if let Some(j) = classes.iter().position(|c| s.resolve(&c.rep) == resolved) {
        let mut next = classes;
        next[j].mark(*side);
        partition(items, i + 1, next, s, out);
        return;
    }
    for j in 0..classes.len() {
        let mut sols = Vec::new();
        solve(vec![(classes[j].rep.clone(), item.clone())], s.clone(), &mut sols);
        for sol in sols {
            let mut next = classes.clone();
            next[j].mark(*side);
            partition(items, i + 1, next, sol, out);
        }
    }
    let mut next = classes;
    next.push(Class {
        rep: item.clone(),
        left: *side == Side::Left,
        right: *side == Side::Right,
    });
    partition(items, i + 1, next, s, out);
}

fn frozen_symbol(v: &Var) -> Term {
    Term::sym(&format!("\\frozen{}:{v}", v.scope))
}

/// Replace every variable by a distinct constant. Union variables become
/// opaque elements of their set.
fn freeze(t: &Term) -> Term {
    match t {
        Term::Var(v) => frozen_symbol(v),
        Term::Tuple(m) => Term::Tuple(m.iter().map(freeze).collect()),
        Term::Set(s) => {
            let mut elems: Vec<Term> = s.elems().iter().map(freeze).collect();
            elems.extend(s.unions().iter().map(frozen_symbol));
            Term::set(elems, Vec::new())
        }
        Term::Num(_) | Term::Sym(_) => t.clone(),
    }
}

/// True when `specific` is an instance of `general` on `vars`: some
/// substitution for the free variables of `general` turns its values of
/// `vars` into those of `specific`.
pub fn subsumes(general: &BindingStore, specific: &BindingStore, vars: &BTreeSet<Var>) -> bool {
    let pattern = Term::Tuple(
        vars.iter()
            .map(|v| general.resolve(&Term::Var(v.clone())))
            .collect(),
    );
    let target = Term::Tuple(
        vars.iter()
            .map(|v| freeze(&specific.resolve(&Term::Var(v.clone()))))
            .collect(),
    );
    let scratch = BindingStore {
        map: BTreeMap::new(),
        next_fresh: general.next_fresh.max(specific.next_fresh),
    };
    let mut out = Vec::new();
    solve(vec![(pattern, target)], scratch, &mut out);
    !out.is_empty()
}

/// Drop every solution that is an instance of another one; of mutually
/// equivalent solutions the first is kept.
fn maximal(stores: Vec<BindingStore>, vars: &BTreeSet<Var>) -> Vec<BindingStore> {
    let n = stores.len();
    if n < 2 {
        return stores;
    }
    let mut inst = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                inst[i][j] = subsumes(&stores[j], &stores[i], vars);
            }
        }
    }
    stores
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| !(0..n).any(|j| j != i && inst[i][j] && (!inst[j][i] || j < i)))
        .map(|(_, s)| s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term_str;
    use crate::terms::{desugar, Session};

    fn t(src: &str) -> Term {
        desugar(&parse_term_str(src).unwrap(), &mut Session::new())
    }

    fn x(name: &str) -> Var {
        Var::local(name)
    }

    fn sole(r: UnifyResult) -> BindingStore {
        let stores = r.into_stores();
        assert_eq!(stores.len(), 1, "{stores:?}");
        stores.into_iter().next().unwrap()
    }

    #[test]
    fn resolve_follows_bindings() {
        let mut s = BindingStore::new();
        assert_eq!(s.resolve(&t("$x")), t("$x"));
        s.bind(x("x"), t("(b, c)"));
        assert_eq!(s.resolve(&t("(a, $x)")), t("(a, (b, c))"));
        let once = s.resolve(&t("{$x} \\/ $y"));
        assert_eq!(s.resolve(&once), once);
    }

    #[test]
    fn resolve_merges_union_variables() {
        let mut s = BindingStore::new();
        s.bind(x("v"), t("{b, c}"));
        assert_eq!(s.resolve(&t("{a} \\/ $v")), t("{a, b, c}"));
    }

    #[test]
    fn basic_rules() {
        let s = BindingStore::new();
        let r = sole(unify(&t("$x"), &t("5"), &s));
        assert_eq!(r.lookup("x"), Some(t("5")));
        assert!(!unify(&t("(a, b)"), &t("{a, b}"), &s).is_success());
        let r = sole(unify(&t("a(b, $x)"), &t("(a, b, c)"), &s));
        assert_eq!(r.lookup("x"), Some(t("c")));
        assert!(!unify(&t("(a, b)"), &t("(a, b, c)"), &s).is_success());
        assert!(!unify(&t("a"), &t("b"), &s).is_success());
        assert!(!unify(&t("1/2"), &t("2/4 + 0"), &s).is_success());
        assert!(unify(&t("1/2"), &t("2/4"), &s).is_success());
    }

    #[test]
    fn occurs_check() {
        let s = BindingStore::new();
        assert!(!unify(&t("$x"), &t("f($x)"), &s).is_success());
        assert!(!unify(&t("($x, $y)"), &t("($y, g($x))"), &s).is_success());
    }

    #[test]
    fn bound_variables_are_resolved_first() {
        let mut s = BindingStore::new();
        s.bind(x("x"), t("5"));
        assert!(unify(&t("$x"), &t("5"), &s).is_success());
        assert!(!unify(&t("$x"), &t("6"), &s).is_success());
    }

    #[test]
    fn set_cases() {
        let s = BindingStore::new();
        let r = sole(unify(&t("{a, $x}"), &t("{a, b}"), &s));
        assert_eq!(r.lookup("x"), Some(t("b")));
        assert_eq!(sole(unify(&t("{}"), &t("{}"), &s)), s);
        assert!(!unify(&t("{a}"), &t("{b}"), &s).is_success());
        assert!(!unify(&t("{a}"), &t("c"), &s).is_success());
    }

    #[test]
    fn union_variable_against_ground_set() {
        let s = BindingStore::new();
        let stores = unify(&t("{a} \\/ $v"), &t("{a, b}"), &s).into_stores();
        let mut values: Vec<Term> = stores.iter().map(|st| st.lookup("v").unwrap()).collect();
        values.sort();
        assert_eq!(values, vec![t("{a, b}"), t("{b}")]);
    }

    #[test]
    fn variable_inside_its_own_union() {
        let s = BindingStore::new();
        let r = sole(unify(&t("$v"), &t("{a} \\/ $v"), &s));
        let v = r.lookup("v").unwrap();
        let Term::Set(set) = &v else { panic!("{v}") };
        assert_eq!(set.elems(), &[t("a")]);
        assert_eq!(set.unions().len(), 1);
    }

    #[test]
    fn union_variables_on_both_sides_share_a_region() {
        let s = BindingStore::new();
        let stores = unify(&t("{a} \\/ $v"), &t("{b} \\/ $w"), &s).into_stores();
        assert!(!stores.is_empty());
        for st in &stores {
            assert_eq!(st.resolve(&t("{a} \\/ $v")), st.resolve(&t("{b} \\/ $w")));
        }
    }

    #[test]
    fn ill_formed_sets_fail() {
        let s = BindingStore::new();
        assert!(!unify(&t("{a, {b}}"), &t("$x"), &s).is_success());
        assert!(!unify(&t("{a} \\/ b"), &t("{a, b}"), &s).is_success());
        let mut s = BindingStore::new();
        s.bind(x("v"), t("c"));
        assert!(!unify(&t("{a} \\/ $v"), &t("$y"), &s).is_success());
    }

    #[test]
    fn store_extension_only_adds() {
        let mut s = BindingStore::new();
        s.bind(x("k"), t("7"));
        for st in unify(&t("{$x, $y} \\/ $v"), &t("{1, 2, 3}"), &s).into_stores() {
            assert!(st.extends(&s));
        }
    }

    #[test]
    fn symmetric_results() {
        let s = BindingStore::new();
        for (a, b) in [
            ("{a, $x} \\/ $v", "{a, b, c}"),
            ("{$x, $y}", "{a, b}"),
            ("f($x, {a} \\/ $v)", "f(b, {a, c})"),
        ] {
            let ab = unify(&t(a), &t(b), &s).into_stores();
            let ba = unify(&t(b), &t(a), &s).into_stores();
            assert_eq!(ab.len(), ba.len(), "{a} vs {b}");
            let vars: BTreeSet<Var> = t(a).vars().into_iter().chain(t(b).vars()).collect();
            for st in &ab {
                assert!(ba.iter().any(|o| subsumes(o, st, &vars) && subsumes(st, o, &vars)));
            }
        }
    }

    #[test]
    fn no_solution_subsumes_another() {
        let s = BindingStore::new();
        let (a, b) = (t("{$x, $y} \\/ $v"), t("{a, b}"));
        let stores = unify(&a, &b, &s).into_stores();
        let vars: BTreeSet<Var> = a.vars().into_iter().chain(b.vars()).collect();
        for (i, p) in stores.iter().enumerate() {
            assert_eq!(p.resolve(&a), p.resolve(&b));
            for (j, q) in stores.iter().enumerate() {
                if i != j {
                    assert!(!subsumes(p, q, &vars), "{i} subsumes {j}");
                }
            }
        }
    }

    #[test]
    fn lookup_ignores_anonymous_variables() {
        let mut session = Session::new();
        let anon = session.fresh_anon();
        let mut s = BindingStore::new();
        s.bind(anon, t("1"));
        assert_eq!(s.lookup("_"), None);
        assert_eq!(s.lookup("_G1"), None);
    }
}
