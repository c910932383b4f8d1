//! Aggregation over networks of box instances: functional propagation of
//! field values along serial connections, then extrafunctional latency and
//! message-count models.

pub mod latency;
pub mod network;
pub mod vocab;

use std::collections::BTreeSet;

pub use latency::{aggregate_extrafunctional, Channel, LatencyModel, MessageCount};
pub use network::{load_env, load_network, EnvFile, Instance, InstanceTree, NetExpr, Network};

use crate::clauses::{evaluate_box_with, BoxDeclaration, EvalContext};
use crate::error::{dedup_diagnostics, CalError, Diagnostic, Result};
use crate::terms::{Term, Var};
use crate::unify::{unify, BindingStore};

/// One serial edge between an upstream output tuple and a downstream input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub upstream: Instance,
    /// Index of the upstream output tuple.
    pub channel: usize,
    pub downstream: Instance,
    /// (upstream field, downstream field), both scoped to their instances.
    pub pairs: Vec<(Var, Var)>,
}

pub type ConnectionMap = Vec<Connection>;

/// Connect every downstream entry to the upstream exits that have an
/// output tuple of the same arity.
pub fn build_connections(net: &Network) -> Result<ConnectionMap> {
    let mut out = Vec::new();
    connect(&net.tree(), net, &mut out)?;
    Ok(out)
}

fn connect(tree: &InstanceTree, net: &Network, out: &mut ConnectionMap) -> Result<()> {
    match tree {
        InstanceTree::Leaf(_) => Ok(()),
        InstanceTree::Parallel(items) => items.iter().try_for_each(|i| connect(i, net, out)),
        InstanceTree::Serial(l, r) => {
            connect(l, net, out)?;
            connect(r, net, out)?;
            for d in r.entries() {
                let ddecl = net.decl(&d.box_name)?;
                let Some(inputs) = &ddecl.signature.input else {
                    return Err(CalError::Aggregation(format!(
                        "{} takes no input but follows {}",
                        d.box_name,
                        names(&l.exits())
                    )));
                };
                let mut found = false;
                for u in l.exits() {
                    let udecl = net.decl(&u.box_name)?;
                    if let Some((n, fields)) = udecl
                        .signature
                        .outputs
                        .iter()
                        .enumerate()
                        .find(|(_, f)| f.len() == inputs.len())
                    {
                        found = true;
                        let pairs = fields
                            .iter()
                            .zip(inputs)
                            .map(|(a, b)| (Var::object(a).with_scope(u.id), Var::object(b).with_scope(d.id)))
                            .collect();
                        out.push(Connection {
                            upstream: u.clone(),
                            channel: n,
                            downstream: d.clone(),
                            pairs,
                        });
                    }
                }
                if !found {
                    return Err(CalError::Aggregation(format!(
                        "no output tuple of {} matches the {}-field input of {}",
                        names(&l.exits()),
                        inputs.len(),
                        d.box_name
                    )));
                }
            }
            Ok(())
        }
    }
}

fn names(insts: &[&Instance]) -> String {
    insts.iter().map(|i| i.box_name.as_str()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSummary {
    pub instance: Instance,
    /// Clauses that fired in at least one resulting store.
    pub fired: Vec<usize>,
    pub unfired: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FunctionalResult {
    /// One store per surviving combination of branches.
    pub stores: Vec<BindingStore>,
    pub instances: Vec<InstanceSummary>,
    pub connections: ConnectionMap,
    pub diagnostics: Vec<Diagnostic>,
}

/// Evaluate every instance in dataflow order, feeding each downstream input
/// from the resolved upstream outputs.
pub fn aggregate_functional(net: &Network, env: &EnvFile) -> Result<FunctionalResult> {
    let connections = build_connections(net)?;
    let tree = net.tree();
    let boundary: BTreeSet<u32> = tree.entries().iter().map(|i| i.id).collect();
    let decls: Vec<&BoxDeclaration> = net.boxes.values().collect();
    let mut diagnostics = env.unused_entries(&decls);
    let mut stores = vec![BindingStore::new()];
    let mut instances = Vec::new();

    for inst in net.instances() {
        let decl = net.decl(&inst.box_name)?.with_scope(inst.id);
        let ctx = EvalContext::for_box(&decl);
        let mut next = Vec::new();
        let mut fired = BTreeSet::new();
        for store in stores {
            let mut store = store;
            env.bind_instance(&decl, inst.id, boundary.contains(&inst.id), &mut store);
            let (fed, diags) = propagate(&connections, &inst, store);
            diagnostics.extend(diags);
            for s in fed {
                let ev = evaluate_box_with(&decl, &s, &ctx);
                diagnostics.extend(ev.diagnostics.into_iter().map(|d| prefixed(&inst, d)));
                for b in ev.branches {
                    fired.extend(b.fired.iter().copied());
                    for f in decl.output_fields() {
                        let value = b.store.resolve(&Term::Var(Var::object(f).with_scope(inst.id)));
                        diagnostics.extend(
                            vocab::check_vocabulary(&value)
                                .into_iter()
                                .map(|d| prefixed(&inst, d)),
                        );
                    }
                    next.push(b.store);
                }
            }
        }
        let unfired = decl.clauses.iter().map(|c| c.index).filter(|i| !fired.contains(i)).collect();
        instances.push(InstanceSummary {
            instance: inst,
            fired: fired.into_iter().collect(),
            unfired,
        });
        stores = next;
    }
    dedup_diagnostics(&mut diagnostics);
    Ok(FunctionalResult {
        stores,
        instances,
        connections,
        diagnostics,
    })
}

fn prefixed(inst: &Instance, d: Diagnostic) -> Diagnostic {
    Diagnostic {
        message: format!("{inst}: {}", d.message),
        ..d
    }
}

/// Bind the inputs of `inst` from its upstream connections. Unusable values
/// leave the input unconstrained with a warning.
fn propagate(connections: &ConnectionMap, inst: &Instance, store: BindingStore) -> (Vec<BindingStore>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let incoming: Vec<&Connection> = connections.iter().filter(|c| c.downstream == *inst).collect();
    let Some(first) = incoming.first() else {
        return (vec![store], diags);
    };
    let mut stores = vec![store];
    for (k, (_, down)) in first.pairs.iter().enumerate() {
        let base = &stores[0];
        let mut values: Vec<(Instance, Term)> = Vec::new();
        for c in &incoming {
            let (up, _) = &c.pairs[k];
            let v = base.resolve(&Term::Var(up.clone()));
            if let Term::Var(_) = v {
                diags.push(Diagnostic::warning(format!(
                    "{inst}: input `{}` is unconstrained: `{}` of {} is unbound",
                    down.name().unwrap_or("?"),
                    up.name().unwrap_or("?"),
                    c.upstream
                )));
                continue;
            }
            values.push((c.upstream.clone(), v));
        }
        let Some((_, value)) = values.first().cloned() else {
            continue;
        };
        if values.iter().any(|(_, v)| *v != value) {
            diags.push(Diagnostic::warning(format!(
                "{inst}: input `{}` receives conflicting values from {}; left unconstrained",
                down.name().unwrap_or("?"),
                values.iter().map(|(i, _)| i.to_string()).collect::<Vec<_>>().join(", ")
            )));
            continue;
        }
        let mut next = Vec::new();
        for s in &stores {
            let found = unify(&Term::Var(down.clone()), &value, s).into_stores();
            if found.is_empty() {
                diags.push(Diagnostic::warning(format!(
                    "{inst}: input `{}` cannot take {value}; left unconstrained",
                    down.name().unwrap_or("?")
                )));
                next.push(s.clone());
            } else {
                next.extend(found);
            }
        }
        stores = next;
    }
    (stores, diags)
}
