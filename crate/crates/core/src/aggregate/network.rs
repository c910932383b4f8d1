//! Networks of box instances and the line-oriented network and environment
//! file formats.
//!
//! Network file:
//!
//! ```text
//! -- comment
//! use pipeline.cal
//! comm A .. B = 3
//! net main = A .. (B | C) .. D
//! ```
//!
//! `..` binds tighter than `|`. A name defined by an earlier `net` line may
//! be used as a subnetwork; the last `net` line is the network aggregated.
//!
//! Environment file:
//!
//! ```text
//! $$nthreads = 4          -- every instance
//! MYBOX.$$nthreads = 8    -- instances of MYBOX
//! MYBOX.$a = {rank(2)}    -- field of MYBOX instances
//! $a = {rank(2)}          -- field of the boxes receiving network input
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::clauses::{declarations_from_source, BoxDeclaration};
use crate::error::{CalError, Diagnostic, Result};
use crate::syntax::parse_term_str;
use crate::terms::{desugar, Session, Term, Var};
use crate::unify::BindingStore;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetExpr {
    Box(String),
    /// `A .. B`
    Serial(Box<NetExpr>, Box<NetExpr>),
    /// `A | B | ...`
    Parallel(Vec<NetExpr>),
}

impl fmt::Display for NetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetExpr::Box(name) => f.write_str(name),
            NetExpr::Serial(l, r) => {
                write_operand(l, f)?;
                f.write_str(" .. ")?;
                write_operand(r, f)
            }
            NetExpr::Parallel(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write_operand(item, f)?;
                }
                Ok(())
            }
        }
    }
}

fn write_operand(e: &NetExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        NetExpr::Parallel(_) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommOverride {
    pub from: String,
    pub to: String,
    pub cost: Term,
}

#[derive(Debug, Clone, Default)]
pub struct NetFile {
    pub uses: Vec<String>,
    pub nets: Vec<(String, NetExpr)>,
    pub comm: Vec<CommOverride>,
}

fn input_error(path: &str, line: usize, message: impl Into<String>) -> CalError {
    CalError::Input {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find("--") {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

pub fn parse_network(text: &str, path: &str) -> Result<NetFile> {
    let mut file = NetFile::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "use" => {
                if rest.is_empty() {
                    return Err(input_error(path, lineno, "`use` needs a file name"));
                }
                file.uses.push(rest.to_string());
            }
            "net" => {
                let (name, expr) = rest
                    .split_once('=')
                    .ok_or_else(|| input_error(path, lineno, "expected `net <name> = <expression>`"))?;
                let name = name.trim();
                if !is_name(name) {
                    return Err(input_error(path, lineno, format!("`{name}` is not a network name")));
                }
                let mut expr = parse_net_expr(expr).map_err(|m| input_error(path, lineno, m))?;
                expr = inline_nets(expr, &file.nets);
                file.nets.push((name.to_string(), expr));
            }
            "comm" => {
                let (edge, cost) = rest
                    .split_once('=')
                    .ok_or_else(|| input_error(path, lineno, "expected `comm <A> .. <B> = <term>`"))?;
                let (from, to) = edge
                    .split_once("..")
                    .ok_or_else(|| input_error(path, lineno, "expected `comm <A> .. <B> = <term>`"))?;
                let (from, to) = (from.trim(), to.trim());
                if !is_name(from) || !is_name(to) {
                    return Err(input_error(path, lineno, "comm edge must name two boxes"));
                }
                let cost = parse_value(cost, path, lineno, &mut Session::new())?;
                file.comm.push(CommOverride {
                    from: from.to_string(),
                    to: to.to_string(),
                    cost,
                });
            }
            other => {
                return Err(input_error(
                    path,
                    lineno,
                    format!("unknown directive `{other}`, expected `use`, `net` or `comm`"),
                ))
            }
        }
    }
    Ok(file)
}

fn inline_nets(e: NetExpr, nets: &[(String, NetExpr)]) -> NetExpr {
    match e {
        NetExpr::Box(name) => match nets.iter().rev().find(|(n, _)| *n == name) {
            Some((_, sub)) => sub.clone(),
            None => NetExpr::Box(name),
        },
        NetExpr::Serial(l, r) => NetExpr::Serial(Box::new(inline_nets(*l, nets)), Box::new(inline_nets(*r, nets))),
        NetExpr::Parallel(items) => NetExpr::Parallel(items.into_iter().map(|i| inline_nets(i, nets)).collect()),
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum NetToken {
    Name(String),
    Serial,
    Par,
    Open,
    Close,
}

fn net_tokens(src: &str) -> std::result::Result<Vec<NetToken>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(NetToken::Open);
                i += 1;
            }
            ')' => {
                out.push(NetToken::Close);
                i += 1;
            }
            '|' => {
                out.push(NetToken::Par);
                i += 1;
            }
            '.' if chars.get(i + 1) == Some(&'.') => {
                out.push(NetToken::Serial);
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(NetToken::Name(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected `{other}` in network expression")),
        }
    }
    Ok(out)
}

pub fn parse_net_expr(src: &str) -> std::result::Result<NetExpr, String> {
    let tokens = net_tokens(src)?;
    let mut idx = 0;
    let e = net_par(&tokens, &mut idx)?;
    if idx != tokens.len() {
        return Err("trailing input in network expression".into());
    }
    Ok(e)
}

fn net_par(t: &[NetToken], idx: &mut usize) -> std::result::Result<NetExpr, String> {
    let mut items = vec![net_ser(t, idx)?];
    while t.get(*idx) == Some(&NetToken::Par) {
        *idx += 1;
        items.push(net_ser(t, idx)?);
    }
    Ok(if items.len() == 1 { items.pop().expect("one item") } else { NetExpr::Parallel(items) })
}

fn net_ser(t: &[NetToken], idx: &mut usize) -> std::result::Result<NetExpr, String> {
    let mut lhs = net_prim(t, idx)?;
    while t.get(*idx) == Some(&NetToken::Serial) {
        *idx += 1;
        let rhs = net_prim(t, idx)?;
        lhs = NetExpr::Serial(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn net_prim(t: &[NetToken], idx: &mut usize) -> std::result::Result<NetExpr, String> {
    match t.get(*idx) {
        Some(NetToken::Name(n)) => {
            *idx += 1;
            Ok(NetExpr::Box(n.clone()))
        }
        Some(NetToken::Open) => {
            *idx += 1;
            let e = net_par(t, idx)?;
            if t.get(*idx) != Some(&NetToken::Close) {
                return Err("expected `)` in network expression".into());
            }
            *idx += 1;
            Ok(e)
        }
        _ => Err("expected a box name or `(` in network expression".into()),
    }
}

fn parse_value(src: &str, path: &str, line: usize, session: &mut Session) -> Result<Term> {
    let expr = parse_term_str(src.trim()).map_err(|e| input_error(path, line, e.to_string()))?;
    Ok(desugar(&expr, session))
}

/// What an environment line associates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvTarget {
    /// `$$name`, optionally restricted to one box.
    Env { box_name: Option<String>, name: String },
    /// `$field`, optionally restricted to one box.
    Field { box_name: Option<String>, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvEntry {
    pub target: EnvTarget,
    pub value: Term,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EnvFile {
    pub entries: Vec<EnvEntry>,
}

pub fn parse_env(text: &str, path: &str) -> Result<EnvFile> {
    let mut session = Session::new();
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| input_error(path, lineno, "expected `<variable> = <term>`"))?;
        let lhs = lhs.trim();
        let (box_name, var) = match lhs.split_once('.') {
            Some((b, v)) => (Some(b.trim().to_string()), v.trim()),
            None => (None, lhs),
        };
        if let Some(b) = &box_name {
            if !is_name(b) {
                return Err(input_error(path, lineno, format!("`{b}` is not a box name")));
            }
        }
        let target = if let Some(name) = var.strip_prefix("$$") {
            if !is_name(name) {
                return Err(input_error(path, lineno, format!("bad variable `{var}`")));
            }
            EnvTarget::Env {
                box_name,
                name: name.to_string(),
            }
        } else if let Some(name) = var.strip_prefix('$') {
            if !is_name(name) || name == "_" {
                return Err(input_error(path, lineno, format!("bad variable `{var}`")));
            }
            EnvTarget::Field {
                box_name,
                name: name.to_string(),
            }
        } else {
            return Err(input_error(path, lineno, format!("expected a variable, found `{var}`")));
        };
        let value = parse_value(rhs, path, lineno, &mut session)?;
        entries.push(EnvEntry {
            target,
            value,
            line: lineno,
        });
    }
    Ok(EnvFile { entries })
}

impl EnvFile {
    /// Bind this file's associations for one instance of `decl` into `store`.
    /// Unqualified field lines apply only when `boundary` is set.
    pub fn bind_instance(&self, decl: &BoxDeclaration, scope: u32, boundary: bool, store: &mut BindingStore) {
        let mut fields: BTreeMap<&str, &Term> = BTreeMap::new();
        let mut env: BTreeMap<&str, &Term> = BTreeMap::new();
        // later lines and box-specific lines win
        for specific in [false, true] {
            for e in &self.entries {
                match &e.target {
                    EnvTarget::Env { box_name, name } if box_name.is_some() == specific => {
                        if box_name.as_deref().is_none_or(|b| b == decl.name) {
                            env.insert(name, &e.value);
                        }
                    }
                    EnvTarget::Field { box_name, name } if box_name.is_some() == specific => {
                        let applies = match box_name {
                            Some(b) => *b == decl.name,
                            None => boundary,
                        };
                        let known = decl.input_fields().iter().chain(decl.output_fields()).any(|f| f == name);
                        if applies && known {
                            fields.insert(name, &e.value);
                        }
                    }
                    _ => {}
                }
            }
        }
        for (name, value) in env {
            let v = Var::env(name).with_scope(scope);
            if !store.is_bound(&v) {
                store.bind(v, value.with_scope(scope));
            }
        }
        for (name, value) in fields {
            let v = Var::object(name).with_scope(scope);
            if !store.is_bound(&v) {
                store.bind(v, value.with_scope(scope));
            }
        }
    }

    /// Lines that name a box or field no instance has.
    pub fn unused_entries(&self, decls: &[&BoxDeclaration]) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in &self.entries {
            let (box_name, field) = match &e.target {
                EnvTarget::Env { box_name, .. } => (box_name, None),
                EnvTarget::Field { box_name, name } => (box_name, Some(name)),
            };
            let candidates: Vec<&&BoxDeclaration> = decls
                .iter()
                .filter(|d| box_name.as_ref().is_none_or(|b| *b == d.name))
                .collect();
            if candidates.is_empty() {
                out.push(Diagnostic::warning(format!(
                    "environment line {}: no box named {}",
                    e.line,
                    box_name.as_deref().unwrap_or("?")
                )));
            } else if let Some(f) = field {
                let known = candidates
                    .iter()
                    .any(|d| d.input_fields().iter().chain(d.output_fields()).any(|x| x == f));
                if !known {
                    out.push(Diagnostic::warning(format!(
                        "environment line {}: no box has a field `{f}`",
                        e.line
                    )));
                }
            }
        }
        out
    }
}

/// A network ready for aggregation.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub expr: NetExpr,
    pub boxes: BTreeMap<String, BoxDeclaration>,
    /// Communication cost per (upstream box, downstream box) edge.
    pub comm: BTreeMap<(String, String), Term>,
    pub default_comm: Term,
}

impl Network {
    pub fn new(name: &str, expr: NetExpr, decls: Vec<BoxDeclaration>) -> Self {
        Network {
            name: name.to_string(),
            expr,
            boxes: decls.into_iter().map(|d| (d.name.clone(), d)).collect(),
            comm: BTreeMap::new(),
            default_comm: Term::sym("comm_cost"),
        }
    }

    pub fn comm_cost(&self, from: &str, to: &str) -> Term {
        self.comm
            .get(&(from.to_string(), to.to_string()))
            .cloned()
            .unwrap_or_else(|| self.default_comm.clone())
    }

    /// Box instances in pre-order, numbered from 1.
    pub fn instances(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        collect_instances(&self.expr, &mut out);
        out
    }

    pub fn tree(&self) -> InstanceTree {
        let mut next = 1;
        number(&self.expr, &mut next)
    }

    pub fn decl(&self, name: &str) -> Result<&BoxDeclaration> {
        self.boxes
            .get(name)
            .ok_or_else(|| CalError::Aggregation(format!("network {} uses unknown box {name}", self.name)))
    }

    /// Every box named in the expression must be declared.
    pub fn validate(&self) -> Result<()> {
        for inst in self.instances() {
            self.decl(&inst.box_name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: u32,
    pub box_name: String,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.box_name, self.id)
    }
}

fn collect_instances(e: &NetExpr, out: &mut Vec<Instance>) {
    match e {
        NetExpr::Box(name) => out.push(Instance {
            id: out.len() as u32 + 1,
            box_name: name.clone(),
        }),
        NetExpr::Serial(l, r) => {
            collect_instances(l, out);
            collect_instances(r, out);
        }
        NetExpr::Parallel(items) => items.iter().for_each(|i| collect_instances(i, out)),
    }
}

/// The network expression with instance numbers at the leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceTree {
    Leaf(Instance),
    Serial(Box<InstanceTree>, Box<InstanceTree>),
    Parallel(Vec<InstanceTree>),
}

fn number(e: &NetExpr, next: &mut u32) -> InstanceTree {
    match e {
        NetExpr::Box(name) => {
            let id = *next;
            *next += 1;
            InstanceTree::Leaf(Instance {
                id,
                box_name: name.clone(),
            })
        }
        NetExpr::Serial(l, r) => {
            let l = number(l, next);
            let r = number(r, next);
            InstanceTree::Serial(Box::new(l), Box::new(r))
        }
        NetExpr::Parallel(items) => InstanceTree::Parallel(items.iter().map(|i| number(i, next)).collect()),
    }
}

impl InstanceTree {
    /// Instances receiving this subnetwork's input.
    pub fn entries(&self) -> Vec<&Instance> {
        match self {
            InstanceTree::Leaf(i) => vec![i],
            InstanceTree::Serial(l, _) => l.entries(),
            InstanceTree::Parallel(items) => items.iter().flat_map(|i| i.entries()).collect(),
        }
    }

    /// Instances producing this subnetwork's output.
    pub fn exits(&self) -> Vec<&Instance> {
        match self {
            InstanceTree::Leaf(i) => vec![i],
            InstanceTree::Serial(_, r) => r.exits(),
            InstanceTree::Parallel(items) => items.iter().flat_map(|i| i.exits()).collect(),
        }
    }
}

/// Read a network file together with the CAL files it uses. Relative
/// `use` paths are resolved against the network file's directory.
pub fn load_network(path: &Path) -> Result<(Network, Vec<Diagnostic>)> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CalError::Io {
        path: shown.clone(),
        source,
    })?;
    let file = parse_network(&text, &shown)?;
    let (name, expr) = file
        .nets
        .last()
        .cloned()
        .ok_or_else(|| input_error(&shown, 0, "no `net` line"))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut session = Session::new();
    let mut decls = Vec::new();
    let mut diagnostics = Vec::new();
    for u in &file.uses {
        let p = base.join(u);
        let p_shown = p.display().to_string();
        let src = std::fs::read_to_string(&p).map_err(|source| CalError::Io {
            path: p_shown.clone(),
            source,
        })?;
        let (ds, diags) = declarations_from_source(&src, &mut session).map_err(|e| e.in_file(&p_shown))?;
        decls.extend(ds);
        diagnostics.extend(diags);
    }
    let mut net = Network::new(&name, expr, decls);
    for c in file.comm {
        net.comm.insert((c.from, c.to), c.cost);
    }
    net.validate()?;
    Ok((net, diagnostics))
}

pub fn load_env(path: &Path) -> Result<EnvFile> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CalError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_env(&text, &shown)
}
