//! Clause semantics: flattening `provided` blocks, evaluating conditions,
//! firing assertions and evaluating whole boxes.

use std::collections::BTreeSet;
use std::fmt;

use crate::arith::{eval_relation_with, ArithConfig, RelationOutcome};
use crate::error::{dedup_diagnostics, CalError, Diagnostic, Pos, Result};
use crate::syntax::ast::{Decl, Header, RelOp, SurfaceAst, SurfacePredicate};
use crate::syntax::render::render_header;
use crate::terms::{check_set_wellformed, Desugarer, Session, Term, Var, VarKind};
use crate::unify::{unify, BindingStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Relation { lhs: Term, op: RelOp, rhs: Term, pos: Pos },
    Equivalence { lhs: Term, rhs: Term, pos: Pos },
}

impl Predicate {
    pub fn pos(&self) -> Pos {
        match self {
            Predicate::Relation { pos, .. } | Predicate::Equivalence { pos, .. } => *pos,
        }
    }

    pub fn terms(&self) -> [&Term; 2] {
        match self {
            Predicate::Relation { lhs, rhs, .. } | Predicate::Equivalence { lhs, rhs, .. } => [lhs, rhs],
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for t in self.terms() {
            t.collect_vars(&mut out);
        }
        out
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Predicate {
        match self {
            Predicate::Relation { lhs, op, rhs, pos } => Predicate::Relation {
                lhs: f(lhs),
                op: *op,
                rhs: f(rhs),
                pos: *pos,
            },
            Predicate::Equivalence { lhs, rhs, pos } => Predicate::Equivalence {
                lhs: f(lhs),
                rhs: f(rhs),
                pos: *pos,
            },
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Relation { lhs, op, rhs, .. } => write!(f, "{lhs} {op} {rhs}"),
            Predicate::Equivalence { lhs, rhs, .. } => write!(f, "{lhs} :=: {rhs}"),
        }
    }
}

fn join(preds: &[Predicate]) -> String {
    preds.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    /// 1-based position among the declaration's clauses.
    pub index: usize,
    /// Inherited `provided` conditions first, then the clause's own.
    pub conditions: Vec<Predicate>,
    /// How many leading conditions came from enclosing `provided` blocks.
    pub inherited: usize,
    pub assertions: Vec<Predicate>,
    pub pos: Pos,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.conditions.is_empty() {
            write!(f, "{} ", join(&self.conditions))?;
        }
        write!(f, "=> {}", join(&self.assertions))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub input: Option<Vec<String>>,
    pub outputs: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxDeclaration {
    pub name: String,
    pub signature: Signature,
    pub clauses: Vec<Clause>,
    pub pos: Pos,
}

impl BoxDeclaration {
    pub fn input_fields(&self) -> &[String] {
        self.signature.input.as_deref().unwrap_or(&[])
    }

    pub fn output_fields(&self) -> impl Iterator<Item = &String> {
        self.signature.outputs.iter().flatten()
    }

    pub fn header_text(&self) -> String {
        render_header(&Header {
            name: self.name.clone(),
            input: self.signature.input.clone(),
            outputs: self.signature.outputs.clone(),
            span: Default::default(),
        })
    }

    /// A copy whose variables all live in namespace `scope`.
    pub fn with_scope(&self, scope: u32) -> BoxDeclaration {
        let mut f = |t: &Term| t.with_scope(scope);
        let clauses = self
            .clauses
            .iter()
            .map(|c| Clause {
                conditions: c.conditions.iter().map(|p| p.map_terms(&mut f)).collect(),
                assertions: c.assertions.iter().map(|p| p.map_terms(&mut f)).collect(),
                ..c.clone()
            })
            .collect();
        BoxDeclaration {
            clauses,
            ..self.clone()
        }
    }
}

/// Desugar a parsed declaration and distribute `provided` conditions over
/// the clauses they enclose.
pub fn flatten_provided(ast: &SurfaceAst, session: &mut Session) -> Result<(BoxDeclaration, Vec<Diagnostic>)> {
    let header = &ast.header;
    let mut fields = BTreeSet::new();
    for tuple in header.input.iter().chain(&header.outputs) {
        let mut seen = BTreeSet::new();
        for f in tuple {
            if !seen.insert(f) {
                return Err(CalError::Semantic {
                    pos: header.span.0,
                    message: format!("field `{f}` appears twice in one tuple type of box {}", header.name),
                });
            }
            fields.insert(f.clone());
        }
    }
    let inputs: BTreeSet<&String> = header.input.iter().flatten().collect();
    let outputs_only: BTreeSet<String> = header
        .outputs
        .iter()
        .flatten()
        .filter(|f| !inputs.contains(f))
        .cloned()
        .collect();

    let mut d = Desugarer::new(session).with_objects(fields);
    let mut clauses = Vec::new();
    flatten_decls(&ast.decls, &[], &mut d, &mut clauses);

    let mut diagnostics = Vec::new();
    for c in &clauses {
        for p in &c.conditions[c.inherited..] {
            check_condition(p, &outputs_only, &mut diagnostics);
        }
        for p in c.assertions.iter() {
            check_sets(p, &mut diagnostics);
        }
    }
    // inherited conditions are shared; report them once
    let mut reported = BTreeSet::new();
    for c in &clauses {
        for p in &c.conditions[..c.inherited] {
            if reported.insert(p.pos()) {
                check_condition(p, &outputs_only, &mut diagnostics);
            }
        }
    }
    diagnostics.sort_by_key(|d| d.pos);

    let decl = BoxDeclaration {
        name: header.name.clone(),
        signature: Signature {
            input: header.input.clone(),
            outputs: header.outputs.clone(),
        },
        clauses,
        pos: header.span.0,
    };
    Ok((decl, diagnostics))
}

/// Parse and flatten every declaration in a source text.
pub fn declarations_from_source(
    source: &str,
    session: &mut Session,
) -> Result<(Vec<BoxDeclaration>, Vec<Diagnostic>)> {
    let mut decls = Vec::new();
    let mut diagnostics = Vec::new();
    for ast in crate::syntax::parse_source(source)? {
        let (d, diags) = flatten_provided(&ast, session)?;
        decls.push(d);
        diagnostics.extend(diags);
    }
    Ok((decls, diagnostics))
}

fn check_condition(p: &Predicate, outputs_only: &BTreeSet<String>, out: &mut Vec<Diagnostic>) {
    for v in p.vars() {
        if v.kind == VarKind::Object && v.name().is_some_and(|n| outputs_only.contains(n)) {
            out.push(
                Diagnostic::warning(format!("condition `{p}` refers to output field {v}")).at(p.pos()),
            );
        }
    }
    check_sets(p, out);
}

fn check_sets(p: &Predicate, out: &mut Vec<Diagnostic>) {
    for t in p.terms() {
        if let Err(why) = check_set_wellformed(t) {
            out.push(Diagnostic::warning(format!("{why}; `{p}` can never hold")).at(p.pos()));
        }
    }
}

fn flatten_decls(decls: &[Decl], inherited: &[Predicate], d: &mut Desugarer<'_>, out: &mut Vec<Clause>) {
    for decl in decls {
        match decl {
            Decl::Clause(c) => {
                let mut conditions = inherited.to_vec();
                conditions.extend(c.conditions.iter().map(|p| desugar_predicate(p, d)));
                out.push(Clause {
                    index: out.len() + 1,
                    conditions,
                    inherited: inherited.len(),
                    assertions: c.assertions.iter().map(|p| desugar_predicate(p, d)).collect(),
                    pos: c.span.0,
                });
            }
            Decl::Provided(block) => {
                let mut conds = inherited.to_vec();
                conds.extend(block.conditions.iter().map(|p| desugar_predicate(p, d)));
                flatten_decls(&block.decls, &conds, d, out);
            }
        }
    }
}

pub fn desugar_predicate(p: &SurfacePredicate, d: &mut Desugarer<'_>) -> Predicate {
    match p {
        SurfacePredicate::Relation { lhs, op, rhs, span } => Predicate::Relation {
            lhs: d.desugar(lhs),
            op: *op,
            rhs: d.desugar(rhs),
            pos: span.0,
        },
        SurfacePredicate::Equivalence { lhs, rhs, span } => Predicate::Equivalence {
            lhs: d.desugar(lhs),
            rhs: d.desugar(rhs),
            pos: span.0,
        },
    }
}

/// Settings shared by all evaluation steps.
#[derive(Debug, Clone, Default)]
pub struct EvalContext {
    pub arith: ArithConfig,
    /// Input fields: while unassociated they cannot satisfy a condition.
    pub input_fields: BTreeSet<String>,
}

impl EvalContext {
    pub fn for_box(decl: &BoxDeclaration) -> Self {
        EvalContext {
            arith: ArithConfig::default(),
            input_fields: decl.input_fields().iter().cloned().collect(),
        }
    }

    fn unbound_input(&self, p: &Predicate, s: &BindingStore) -> bool {
        p.vars().iter().any(|v| {
            v.kind == VarKind::Object
                && v.name().is_some_and(|n| self.input_fields.contains(n))
                && !s.is_bound(v)
        })
    }
}

/// Apply one predicate. `Err` carries the reason it does not hold.
pub fn apply_predicate(p: &Predicate, s: &BindingStore, ctx: &EvalContext) -> std::result::Result<Vec<BindingStore>, String> {
    match p {
        Predicate::Equivalence { lhs, rhs, .. } => {
            let stores = unify(lhs, rhs, s).into_stores();
            if stores.is_empty() {
                Err(format!("{} and {} do not unify", s.resolve(lhs), s.resolve(rhs)))
            } else {
                Ok(stores)
            }
        }
        Predicate::Relation { lhs, op, rhs, .. } => match eval_relation_with(lhs, *op, rhs, s, &ctx.arith) {
            RelationOutcome::Holds(st) => Ok(vec![st]),
            RelationOutcome::False => Err(format!("{} {op} {} is false", s.resolve(lhs), s.resolve(rhs))),
            RelationOutcome::Failure(f) => Err(f.to_string()),
        },
    }
}

/// All stores under which every predicate holds, left to right.
pub fn evaluate_condition(preds: &[Predicate], s: &BindingStore, ctx: &EvalContext) -> Vec<BindingStore> {
    let mut stores = vec![s.clone()];
    for p in preds {
        let mut next = Vec::new();
        for st in &stores {
            if ctx.unbound_input(p, st) {
                continue;
            }
            if let Ok(found) = apply_predicate(p, st, ctx) {
                next.extend(found);
            }
        }
        stores = next;
        if stores.is_empty() {
            break;
        }
    }
    stores
}

#[derive(Debug, Clone, Default)]
pub struct FireResult {
    /// False when the condition held in no store.
    pub fired: bool,
    pub stores: Vec<BindingStore>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn fire_clause(c: &Clause, s: &BindingStore, ctx: &EvalContext) -> FireResult {
    let conds = evaluate_condition(&c.conditions, s, ctx);
    let mut result = FireResult {
        fired: !conds.is_empty(),
        ..FireResult::default()
    };
    for cs in conds {
        let mut stores = vec![cs];
        for a in &c.assertions {
            let mut next = Vec::new();
            for st in &stores {
                match apply_predicate(a, st, ctx) {
                    Ok(found) => next.extend(found),
                    Err(why) => result.diagnostics.push(
                        Diagnostic::warning(format!(
                            "clause {}: assertion `{a}` cannot hold ({why}); branch discarded",
                            c.index
                        ))
                        .at(a.pos()),
                    ),
                }
            }
            stores = next;
        }
        result.stores.extend(stores);
    }
    dedup_diagnostics(&mut result.diagnostics);
    result
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub store: BindingStore,
    /// Indices of the clauses that fired along this branch.
    pub fired: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BoxEvaluation {
    pub inputs: BindingStore,
    pub branches: Vec<Branch>,
    /// Clauses that fired in no branch.
    pub unfired: Vec<usize>,
    pub diagnostics: Vec<Diagnostic>,
}

impl BoxEvaluation {
    pub fn resulting(&self) -> impl Iterator<Item = &BindingStore> {
        self.branches.iter().map(|b| &b.store)
    }
}

pub fn evaluate_box(decl: &BoxDeclaration, inputs: &BindingStore) -> BoxEvaluation {
    evaluate_box_with(decl, inputs, &EvalContext::for_box(decl))
}

/// Evaluate the clauses in declaration order over one accumulating store
/// per branch.
pub fn evaluate_box_with(decl: &BoxDeclaration, inputs: &BindingStore, ctx: &EvalContext) -> BoxEvaluation {
    let mut branches = vec![Branch {
        store: inputs.clone(),
        fired: Vec::new(),
    }];
    let mut diagnostics = Vec::new();
    let mut ever_fired = BTreeSet::new();
    for clause in &decl.clauses {
        let mut next: Vec<Branch> = Vec::new();
        for b in branches {
            let r = fire_clause(clause, &b.store, ctx);
            diagnostics.extend(r.diagnostics);
            if !r.fired {
                next.push(b);
                continue;
            }
            ever_fired.insert(clause.index);
            for st in r.stores {
                let mut fired = b.fired.clone();
                fired.push(clause.index);
                next.push(Branch { store: st, fired });
            }
        }
        branches = dedup_branches(next);
    }
    let unfired: Vec<usize> = decl
        .clauses
        .iter()
        .map(|c| c.index)
        .filter(|i| !ever_fired.contains(i))
        .collect();
    for i in &unfired {
        diagnostics.push(Diagnostic::info(format!("clause {i} did not fire")));
    }
    dedup_diagnostics(&mut diagnostics);
    BoxEvaluation {
        inputs: inputs.clone(),
        branches,
        unfired,
        diagnostics,
    }
}

/// Branches that agree on every named variable and on the clauses fired
/// are the same outcome; keep the first.
pub fn dedup_branches(branches: Vec<Branch>) -> Vec<Branch> {
    let mut seen = BTreeSet::new();
    branches
        .into_iter()
        .filter(|b| seen.insert((b.store.named_projection(), b.fired.clone())))
        .collect()
}
