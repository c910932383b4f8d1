//! Extrafunctional aggregation: latency terms `$$Tn` and message counts
//! `$$Mn` per output channel, combined per network combinator.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::network::{Instance, InstanceTree, Network};
use crate::clauses::BoxDeclaration;
use crate::error::Diagnostic;
use crate::terms::{Term, Var, PLUS};
use crate::unify::BindingStore;

/// Messages produced on a channel per input message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageCount {
    Exact(BigInt),
    /// Inclusive bounds, `0 <= lo <= hi`.
    Limits(BigInt, BigInt),
    Unknown,
    Unbounded,
}

impl MessageCount {
    /// Read a `$$Mn` value. The second component explains values that are
    /// not message counts.
    pub fn from_term(t: &Term) -> (MessageCount, Option<String>) {
        match t {
            Term::Var(_) => (MessageCount::Unknown, None),
            Term::Sym(s) if &**s == "unknown" => (MessageCount::Unknown, None),
            Term::Sym(s) if &**s == "unbounded" || &**s == "infinity" => (MessageCount::Unbounded, None),
            Term::Num(_) => match t.as_integer() {
                Some(n) if !n.is_negative() => (MessageCount::Exact(n), None),
                _ => (MessageCount::Unknown, Some(format!("{t} is not a message count"))),
            },
            _ if t.head_symbol() == Some("limits") && t.args().len() == 2 => {
                match (t.args()[0].as_integer(), t.args()[1].as_integer()) {
                    (Some(lo), Some(hi)) if !lo.is_negative() && lo <= hi => (MessageCount::Limits(lo, hi), None),
                    _ => (MessageCount::Unknown, Some(format!("{t} is not a valid limits term"))),
                }
            }
            _ => (MessageCount::Unknown, Some(format!("{t} is not a message count"))),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            MessageCount::Exact(n) => Term::Num(n.clone().into()),
            MessageCount::Limits(lo, hi) => {
                Term::apply("limits", vec![Term::Num(lo.clone().into()), Term::Num(hi.clone().into())])
            }
            MessageCount::Unknown => Term::sym("unknown"),
            MessageCount::Unbounded => Term::sym("unbounded"),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            MessageCount::Exact(n) => n.is_zero(),
            MessageCount::Limits(lo, hi) => lo.is_zero() && hi.is_zero(),
            _ => false,
        }
    }

    fn interval(&self) -> Option<(BigInt, BigInt)> {
        match self {
            MessageCount::Exact(n) => Some((n.clone(), n.clone())),
            MessageCount::Limits(lo, hi) => Some((lo.clone(), hi.clone())),
            _ => None,
        }
    }

    /// Messages out of `self` then `next` in series: each message from the
    /// first stage yields `next` messages from the second.
    pub fn serial(&self, next: &MessageCount) -> MessageCount {
        use MessageCount::*;
        match (self, next) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Unbounded, other) | (other, Unbounded) => {
                if other.is_zero() {
                    Exact(BigInt::zero())
                } else {
                    Unbounded
                }
            }
            (Exact(a), Exact(b)) => Exact(a * b),
            _ => {
                let (l1, h1) = self.interval().expect("bounded");
                let (l2, h2) = next.interval().expect("bounded");
                Limits(l1 * l2, h1 * h2)
            }
        }
    }

    /// Whether `n` messages is consistent with this count. Unknown and
    /// unbounded counts admit every value.
    pub fn admits(&self, n: &BigInt) -> bool {
        match self {
            MessageCount::Exact(m) => m == n,
            MessageCount::Limits(lo, hi) => lo <= n && n <= hi,
            MessageCount::Unknown | MessageCount::Unbounded => !n.is_negative(),
        }
    }
}

impl fmt::Display for MessageCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// An input tuple of some instance in a (sub)network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub instance: Instance,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    /// Instance whose input leads to this channel.
    pub entry: Instance,
    /// Instance producing the channel.
    pub source: Instance,
    /// Position among the source box's output tuples.
    pub index: usize,
    pub fields: Vec<String>,
    pub latency: Term,
    pub messages: MessageCount,
}

/// The same shape of data for a single box and for a whole subnetwork.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LatencyModel {
    pub ports: Vec<Port>,
    pub channels: Vec<Channel>,
}

/// Read `$$Tn` and `$$Mn` of one instance from an evaluated store.
pub fn box_model(decl: &BoxDeclaration, store: &BindingStore, inst: &Instance) -> (LatencyModel, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let ports = decl
        .signature
        .input
        .as_ref()
        .map(|f| {
            vec![Port {
                instance: inst.clone(),
                arity: f.len(),
            }]
        })
        .unwrap_or_default();
    let channels = decl
        .signature
        .outputs
        .iter()
        .enumerate()
        .map(|(n, fields)| {
            let latency = match store.resolve(&Term::Var(Var::env(&format!("T{n}")).with_scope(inst.id))) {
                Term::Var(_) => Term::sym("unknown"),
                t => t,
            };
            let m = store.resolve(&Term::Var(Var::env(&format!("M{n}")).with_scope(inst.id)));
            let (messages, problem) = MessageCount::from_term(&m);
            if let Some(p) = problem {
                diags.push(Diagnostic::warning(format!("{inst}: $$M{n}: {p}; treated as unknown")));
            }
            Channel {
                entry: inst.clone(),
                source: inst.clone(),
                index: n,
                fields: fields.clone(),
                latency,
                messages,
            }
        })
        .collect();
    (LatencyModel { ports, channels }, diags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combinator {
    Serial,
    Parallel,
}

/// Aggregating function per combinator.
pub fn combine(
    c: Combinator,
    parts: Vec<LatencyModel>,
    comm: &dyn Fn(&str, &str) -> Term,
) -> (LatencyModel, Vec<Diagnostic>) {
    match c {
        Combinator::Parallel => {
            let mut out = LatencyModel::default();
            for p in parts {
                out.ports.extend(p.ports);
                out.channels.extend(p.channels);
            }
            (out, Vec::new())
        }
        Combinator::Serial => {
            let mut diags = Vec::new();
            let mut iter = parts.into_iter();
            let mut acc = iter.next().unwrap_or_default();
            for next in iter {
                let (m, d) = serial(&acc, &next, comm);
                acc = m;
                diags.extend(d);
            }
            (acc, diags)
        }
    }
}

fn serial(left: &LatencyModel, right: &LatencyModel, comm: &dyn Fn(&str, &str) -> Term) -> (LatencyModel, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut channels = Vec::new();
    for c in &right.channels {
        let port = right.ports.iter().find(|p| p.instance == c.entry);
        let feed = port.and_then(|p| left.channels.iter().find(|f| f.fields.len() == p.arity));
        match (port, feed) {
            (Some(p), Some(f)) => channels.push(Channel {
                entry: f.entry.clone(),
                source: c.source.clone(),
                index: c.index,
                fields: c.fields.clone(),
                latency: Term::apply(
                    PLUS,
                    vec![
                        f.latency.clone(),
                        Term::apply(PLUS, vec![comm(&f.source.box_name, &p.instance.box_name), c.latency.clone()]),
                    ],
                ),
                messages: f.messages.serial(&c.messages),
            }),
            _ => {
                diags.push(Diagnostic::warning(format!(
                    "channel {} of {} has no upstream channel; its latency is unknown",
                    c.index, c.source
                )));
                channels.push(Channel {
                    latency: Term::sym("unknown"),
                    messages: MessageCount::Unknown,
                    ..c.clone()
                });
            }
        }
    }
    (
        LatencyModel {
            ports: left.ports.clone(),
            channels,
        },
        diags,
    )
}

/// The network-level model for one evaluated store.
pub fn aggregate_extrafunctional(net: &Network, store: &BindingStore) -> (LatencyModel, Vec<Diagnostic>) {
    let comm = |a: &str, b: &str| net.comm_cost(a, b);
    model_of(&net.tree(), net, store, &comm)
}

fn model_of(
    tree: &InstanceTree,
    net: &Network,
    store: &BindingStore,
    comm: &dyn Fn(&str, &str) -> Term,
) -> (LatencyModel, Vec<Diagnostic>) {
    let (c, kids): (Combinator, Vec<&InstanceTree>) = match tree {
        InstanceTree::Leaf(inst) => {
            return match net.boxes.get(&inst.box_name) {
                Some(decl) => box_model(decl, store, inst),
                None => (LatencyModel::default(), vec![Diagnostic::error(format!("unknown box {}", inst.box_name))]),
            };
        }
        InstanceTree::Serial(l, r) => (Combinator::Serial, vec![l, r]),
        InstanceTree::Parallel(items) => (Combinator::Parallel, items.iter().collect()),
    };
    let mut diags = Vec::new();
    let mut parts = Vec::new();
    for k in kids {
        let (m, d) = model_of(k, net, store, comm);
        parts.push(m);
        diags.extend(d);
    }
    let (m, d) = combine(c, parts, comm);
    diags.extend(d);
    (m, diags)
}

/// Operands of nested `\plus` applications, left to right.
pub fn flatten_plus(t: &Term) -> Vec<Term> {
    if t.head_symbol() == Some(PLUS) && t.args().len() == 2 {
        let mut out = flatten_plus(&t.args()[0]);
        out.extend(flatten_plus(&t.args()[1]));
        out
    } else {
        vec![t.clone()]
    }
}
